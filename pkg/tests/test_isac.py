import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irsisac.beamforming import ao_crb_min
from irsisac.errors import InvalidArgumentError
from irsisac.estimation import crb_angle
from irsisac.isac import (IsacTransmit, Receiver, combined_channel, comm_snr,
                          effective_sensing_covariance, joint_symbols, pareto_sweep,
                          snr_max_under_crb, _Isac)
from irsisac.model import ReflectPattern, crandn
from irsisac.scenarios import isac_channels, isac_config
from irsisac.signals import psd_sqrt

from builders import random_psd, random_scenario

seeds = st.integers(0, 2**32 - 1)


def _random_tx(seed, m, power=1.0):
    rng = np.random.default_rng(seed)
    w = crandn(rng, m)
    w *= math.sqrt(0.4 * power) / np.linalg.norm(w)
    return IsacTransmit(w, random_psd(rng, m, 0.6 * power))


@pytest.fixture(scope="module")
def setup():
    cfg = isac_config()
    ch = isac_channels(cfg, seed=1)
    crb_min = ao_crb_min(cfg, ch).objective
    return cfg, ch, crb_min


@pytest.fixture(scope="module")
def frontier(setup):
    cfg, ch, crb_min = setup
    grid = crb_min * np.array([1 + 1e-8, 1.25, 1.6, 2.5, 4.0, 10.0, 100.0, math.inf])
    return grid, pareto_sweep(cfg, ch, grid)


class TestCommSnr:
    @given(seeds)
    def test_type_two_dominates(self, seed):
        cfg, ch, pattern, _ = random_scenario(seed, "fully_passive")
        tx = _random_tx(seed, cfg.m_t)
        g1 = comm_snr("I", ch, pattern, tx, 0.1)
        g2 = comm_snr("II", ch, pattern, tx, 0.1)
        assert g2 >= g1

    @given(seeds)
    def test_no_sensing_stream(self, seed):
        cfg, ch, pattern, _ = random_scenario(seed, "fully_passive")
        tx = _random_tx(seed, cfg.m_t)
        tx = IsacTransmit(tx.w, np.zeros_like(tx.r0))
        assert comm_snr("I", ch, pattern, tx, 0.1) == comm_snr("II", ch, pattern, tx, 0.1)

    @given(seeds, st.floats(0.1, 10), st.floats(1e-3, 10))
    def test_mrt(self, seed, power, sigma_c2):
        cfg, ch, pattern, _ = random_scenario(seed, "fully_passive")
        h = combined_channel(ch, pattern)
        tx = IsacTransmit(math.sqrt(power) * h / np.linalg.norm(h), np.zeros((cfg.m_t, cfg.m_t)))
        want = np.vdot(h, h).real * power / sigma_c2
        assert comm_snr("II", ch, pattern, tx, sigma_c2) == pytest.approx(want, rel=1e-12)

    def test_combined_channel_definition(self):
        cfg, ch, pattern, _ = random_scenario(3, "fully_passive")
        h = combined_channel(ch, pattern)
        row = ch.h_d.conj() + ch.h_r.conj() @ pattern.matrix @ ch.g_t
        np.testing.assert_allclose(h.conj(), row, atol=1e-13)

    def test_type_one_monte_carlo(self):
        cfg, ch, pattern, _ = random_scenario(4, "fully_passive")
        tx = _random_tx(4, cfg.m_t)
        sigma_c2 = 0.3
        h = combined_channel(ch, pattern)
        rng = np.random.default_rng(11)
        n = 1_000_000
        x0 = crandn(rng, (n, cfg.m_t)) @ psd_sqrt(tx.r0).T
        noise = math.sqrt(sigma_c2) * crandn(rng, n)
        power = np.mean(np.abs(x0 @ h.conj() + noise) ** 2)
        mc = abs(np.vdot(h, tx.w)) ** 2 / power
        assert mc == pytest.approx(comm_snr("I", ch, pattern, tx, sigma_c2), rel=0.01)

    def test_needs_comm_channels(self):
        cfg, ch, pattern, _ = random_scenario(4, "fully_passive")
        bare = type(ch)(ch.g_t, ch.g_r, ch.theta, ch.alpha)
        with pytest.raises(InvalidArgumentError):
            combined_channel(bare, pattern)


class TestTransmit:
    @given(seeds)
    def test_effective_covariance(self, seed):
        tx = _random_tx(seed, 4)
        r = effective_sensing_covariance(tx)
        assert np.trace(r).real == pytest.approx(
            np.vdot(tx.w, tx.w).real + np.trace(tx.r0).real, rel=1e-12)
        assert np.linalg.eigvalsh(r).min() >= -1e-12
        tx.check(1.0)

    def test_degenerate_parts(self):
        tx = _random_tx(0, 3)
        np.testing.assert_array_equal(
            effective_sensing_covariance(IsacTransmit(np.zeros(3, complex), tx.r0)), tx.r0)
        r = effective_sensing_covariance(IsacTransmit(tx.w, np.zeros((3, 3))))
        assert np.linalg.matrix_rank(r, tol=1e-12) == 1

    def test_budget_check(self):
        with pytest.raises(InvalidArgumentError):
            _random_tx(0, 3, power=2.0).check(1.0)

    def test_sample_covariance(self):
        tx = _random_tx(5, 8)
        x = joint_symbols(tx, 4096, np.random.default_rng(2))
        sample = x.T @ x.conj() / 4096
        want = effective_sensing_covariance(tx)
        assert np.linalg.norm(sample - want) <= 0.05 * np.linalg.norm(want)

    @given(seeds)
    def test_split_nulls_sensing_leakage(self, seed):
        cfg, ch, pattern, r = random_scenario(seed, "fully_passive")
        h = combined_channel(ch, pattern)
        tx = IsacTransmit.from_covariance(r, h)
        np.testing.assert_allclose(effective_sensing_covariance(tx), r, atol=1e-12)
        assert abs(np.vdot(h, tx.r0 @ h)) <= 1e-10 * np.vdot(h, r @ h).real


class TestSnrMax:
    def test_unconstrained_is_mrt(self, setup):
        cfg, ch, _ = setup
        pt = snr_max_under_crb(cfg, ch, math.inf)
        h = combined_channel(ch, pt.pattern)
        assert pt.feasible
        assert pt.comm_snr == pytest.approx(np.vdot(h, h).real * cfg.p_bs / cfg.sigma_c2, rel=1e-8)
        assert np.abs(pt.tx.r0).max() <= 1e-9 * cfg.p_bs

    def test_below_minimum_is_infeasible(self, setup):
        cfg, ch, crb_min = setup
        pt = snr_max_under_crb(cfg, ch, 0.5 * crb_min)
        assert not pt.feasible

    @pytest.mark.parametrize("bound", [0.0, -1.0, math.nan])
    def test_bound_must_be_positive(self, setup, bound):
        cfg, ch, _ = setup
        with pytest.raises(InvalidArgumentError):
            snr_max_under_crb(cfg, ch, bound)

    def test_just_above_minimum(self, setup):
        cfg, ch, crb_min = setup
        pt = snr_max_under_crb(cfg, ch, crb_min * (1 + 1e-8))
        assert pt.feasible and pt.comm_snr >= 0
        assert pt.crb <= pt.crb_bound * (1 + 1e-9)

    @pytest.mark.parametrize("receiver", ["I", "II"])
    def test_receivers_agree_at_optimum(self, setup, receiver):
        # the SNR-optimal split leaves R0 h = 0, so both receivers see the same SNR
        cfg, ch, crb_min = setup
        pt = snr_max_under_crb(cfg, ch, 3 * crb_min, receiver)
        other = comm_snr("I" if receiver == "II" else "II", ch, pt.pattern, pt.tx, cfg.sigma_c2)
        assert pt.comm_snr == pytest.approx(other, rel=1e-9)


class TestFrontier:
    def test_feasible_and_monotone(self, setup, frontier):
        cfg, ch, _ = setup
        grid, points = frontier
        assert len(points) == len(grid)
        assert all(p.feasible for p in points)
        snrs = [p.comm_snr for p in points]
        assert all(b >= a for a, b in zip(snrs, snrs[1:]))
        for p in points:
            assert p.crb <= p.crb_bound * (1 + 1e-9)
            p.tx.check(cfg.p_bs)
            r = effective_sensing_covariance(p.tx)
            assert crb_angle(cfg, ch, p.pattern, r) == pytest.approx(p.crb, rel=1e-12)
            assert all(b >= a * (1 - 1e-9) for a, b in zip(p.trace, p.trace[1:]))
            assert comm_snr(Receiver.TYPE_II, ch, p.pattern, p.tx, cfg.sigma_c2) >= \
                comm_snr(Receiver.TYPE_I, ch, p.pattern, p.tx, cfg.sigma_c2)

    def test_endpoints(self, setup, frontier):
        cfg, ch, crb_min = setup
        _, points = frontier
        assert points[0].crb == pytest.approx(crb_min, rel=1e-6)
        h = combined_channel(ch, points[-1].pattern)
        assert points[-1].comm_snr == pytest.approx(
            np.vdot(h, h).real * cfg.p_bs / cfg.sigma_c2, rel=1e-6)

    def test_midpoint_refinement(self, setup, frontier):
        cfg, ch, _ = setup
        grid, points = frontier
        finite = grid[np.isfinite(grid)]
        mids = np.sqrt(finite[:-1] * finite[1:])
        refined = np.sort(np.concatenate([grid, mids]))
        dense = {p.crb_bound: p.comm_snr for p in pareto_sweep(cfg, ch, refined)}
        for p in points:
            assert dense[p.crb_bound] >= p.comm_snr * (1 - 1e-6)

    def test_unsorted_grid(self, setup):
        cfg, ch, crb_min = setup
        with pytest.raises(InvalidArgumentError):
            pareto_sweep(cfg, ch, [2 * crb_min, crb_min])

    def test_grid_below_minimum_marks_infeasible(self, setup):
        cfg, ch, crb_min = setup
        points = pareto_sweep(cfg, ch, [0.5 * crb_min, 2 * crb_min])
        assert [p.feasible for p in points] == [False, True]


def test_passive_pattern_unit_modulus(setup, frontier):
    _, points = frontier
    for p in points:
        assert isinstance(p.pattern, ReflectPattern)
        np.testing.assert_allclose(np.abs(p.pattern.coefficients), 1.0, rtol=1e-14)


def test_value_function_gradient(setup):
    # envelope gradient of max_R gain under an active bound vs central differences
    cfg, ch, crb_min = setup
    prob = _Isac(cfg, ch, 1.6 * crb_min)
    phases = ao_crb_min(cfg, ch).pattern.phases
    _, grad, _ = prob._value(phases)
    d = np.random.default_rng(0).standard_normal(phases.size)
    h = 1e-4
    fd = (prob._value(phases + h * d)[0] - prob._value(phases - h * d)[0]) / (2 * h)
    assert grad @ d == pytest.approx(fd, rel=1e-3)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irsisac.errors import InvalidArgumentError, SingularFIMError
from irsisac.estimation import (angle_information, crb_angle, crb_from_information,
                                fim_point_target, information_gradient, mle_angle, numeric_fim)
from irsisac.model import Architecture, ChannelSet, ReflectPattern, crandn
from irsisac.scan import default_grid
from irsisac.signals import mean_echo, transmit_block

from builders import random_psd, random_scenario
from oracles import dense_fim, exact_block

archs = st.sampled_from(list(Architecture))
seeds = st.integers(0, 2**32 - 1)


def _rel(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


class TestFim:
    @given(seeds, archs)
    def test_matches_dense_finite_differences(self, seed, arch):
        cfg, ch, pattern, r = random_scenario(seed, arch, t=8)
        f = fim_point_target(cfg, ch, pattern, r).f
        oracle = dense_fim(cfg, ch, pattern, exact_block(r, cfg.t_symbols))
        assert _rel(f, oracle) < 1e-4

    @given(seeds, archs)
    def test_symmetric_psd(self, seed, arch):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        f = fim_point_target(cfg, ch, pattern, r).f
        assert np.array_equal(f, f.T)
        assert np.linalg.eigvalsh(f).min() >= -1e-9 * np.abs(f).max()

    @given(seeds, archs, st.floats(1e-3, 1e3))
    def test_linear_in_covariance(self, seed, arch, c):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        f1 = fim_point_target(cfg, ch, pattern, r).f
        f2 = fim_point_target(cfg, ch, pattern, c * r).f
        np.testing.assert_allclose(f2, c * f1, rtol=1e-10, atol=1e-12 * c * np.abs(f1).max())

    @pytest.mark.parametrize("arch", list(Architecture))
    def test_zero_alpha(self, arch):
        cfg, ch, pattern, r = random_scenario(0, arch)
        ch = ChannelSet(ch.g_t, ch.g_r, ch.theta, 0.0)
        with pytest.raises(SingularFIMError):
            fim_point_target(cfg, ch, pattern, r)
        with pytest.raises(SingularFIMError):
            crb_angle(cfg, ch, pattern, r)


class TestCrb:
    @given(seeds, archs)
    def test_closed_form_is_inverse_entry(self, seed, arch):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        rec = fim_point_target(cfg, ch, pattern, r)
        crb = crb_angle(cfg, ch, pattern, r)
        assert crb == pytest.approx(np.linalg.inv(rec.f)[0, 0], rel=1e-8)
        assert crb == pytest.approx(rec.crb_theta, rel=1e-12)
        assert crb > 0

    @given(seeds, archs, st.floats(0, 2 * math.pi))
    def test_global_phase_invariance(self, seed, arch, psi):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        rotated = ChannelSet(ch.g_t, ch.g_r, ch.theta, ch.alpha * np.exp(1j * psi))
        assert crb_angle(cfg, rotated, pattern, r) == pytest.approx(crb_angle(cfg, ch, pattern, r),
                                                                    rel=1e-10)

    @given(seeds)
    def test_active_is_sensor_form_with_active_pattern(self, seed):
        cfg, ch, pattern, r = random_scenario(seed, "active")
        semi = cfg.with_(architecture="semi_passive")
        assert crb_angle(cfg, ch, pattern, r) == crb_angle(semi, ch, pattern, r)

    def test_single_element_fully_passive_is_singular(self):
        cfg, ch, pattern, r = random_scenario(1, "fully_passive", n=1)
        with pytest.raises(SingularFIMError):
            crb_angle(cfg, ch, pattern, r)
        assert math.isinf(fim_point_target(cfg, ch, pattern, r).crb_theta)

    def test_information_form(self):
        cfg, ch, pattern, r = random_scenario(2, "semi_passive")
        d = angle_information(cfg, ch, pattern, r)
        assert crb_from_information(cfg, ch.alpha, d) == pytest.approx(
            crb_angle(cfg, ch, pattern, r), rel=1e-12)


class TestNumericFim:
    def test_step_bounds(self):
        cfg, ch, pattern, r = random_scenario(0, "semi_passive")
        for step in (1e-8, 1e-2):
            with pytest.raises(InvalidArgumentError):
                numeric_fim(cfg, ch, pattern, r, step)

    @pytest.mark.parametrize("arch", list(Architecture))
    def test_agrees_and_converges(self, arch):
        cfg, ch, pattern, r = random_scenario(5, arch)
        exact = fim_point_target(cfg, ch, pattern, r).f
        coarse = numeric_fim(cfg, ch, pattern, r, 1e-3)
        fine = numeric_fim(cfg, ch, pattern, r, 5e-4)
        assert np.array_equal(fine, fine.T)
        assert _rel(numeric_fim(cfg, ch, pattern, r, 1e-5), exact) < 1e-4
        # central differences: halving the step cuts the error about fourfold
        assert _rel(fine, exact) < 0.5 * _rel(coarse, exact)


class TestGradient:
    @given(seeds, archs)
    def test_covariance_gradient(self, seed, arch):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        g = information_gradient(cfg, ch, pattern, r)
        direction = random_psd(np.random.default_rng(seed + 1), cfg.m_t, 1.0)
        h = 1e-6
        fd = (angle_information(cfg, ch, pattern, r + h * direction)
              - angle_information(cfg, ch, pattern, r - h * direction)) / (2 * h)
        exact = float(np.real(np.vdot(g.r, direction)))
        assert exact == pytest.approx(fd, rel=1e-5, abs=1e-8 * abs(g.info))

    @given(seeds, archs)
    def test_pattern_gradient(self, seed, arch):
        cfg, ch, pattern, r = random_scenario(seed, arch)
        g = information_gradient(cfg, ch, pattern, r)
        v = pattern.coefficients
        rng = np.random.default_rng(seed)
        dphi = rng.standard_normal(cfg.n_irs)
        h = 1e-6

        def info(ph, ga):
            return angle_information(cfg, ch, ReflectPattern(ph, ga), r)

        fd = (info(pattern.phases + h * dphi, pattern.gains)
              - info(pattern.phases - h * dphi, pattern.gains)) / (2 * h)
        exact = float(np.sum(-2 * np.imag(np.conj(g.v) * v) * dphi))
        assert exact == pytest.approx(fd, rel=1e-5, abs=1e-8 * abs(g.info))
        if arch is Architecture.ACTIVE:
            da = rng.standard_normal(cfg.n_irs)
            fd = (info(pattern.phases, pattern.gains + h * da)
                  - info(pattern.phases, pattern.gains - h * da)) / (2 * h)
            exact = float(np.sum(2 * np.real(np.conj(g.v) * np.exp(1j * pattern.phases)) * da))
            assert exact == pytest.approx(fd, rel=1e-5, abs=1e-8 * abs(g.info))


class TestMle:
    @pytest.mark.parametrize("arch", list(Architecture))
    def test_noiseless_off_grid(self, arch):
        cfg, ch, pattern, r = random_scenario(9, arch, t=16)
        ch = ChannelSet(ch.g_t, ch.g_r, 0.4321, 1.3 + 0.2j)
        x = transmit_block(r, 16)
        th, al = mle_angle(cfg, mean_echo(cfg, ch, pattern, x), x, pattern, ch)
        assert th == pytest.approx(0.4321, abs=1e-6)
        assert al == pytest.approx(1.3 + 0.2j, rel=1e-6)

    def test_batch_shape(self):
        cfg, ch, pattern, r = random_scenario(9, "semi_passive", t=16)
        x = transmit_block(r, 16)
        y = crandn(np.random.default_rng(0), (5, 16, cfg.m_r))
        th, al = mle_angle(cfg, y, x, pattern, ch)
        assert th.shape == (5,) and al.shape == (5,)

    def test_grid_must_be_dense(self):
        cfg, ch, pattern, r = random_scenario(9, "semi_passive", t=16)
        x = transmit_block(r, 16)
        with pytest.raises(InvalidArgumentError):
            mle_angle(cfg, np.zeros((16, cfg.m_r)), x, pattern, ch, default_grid(512))

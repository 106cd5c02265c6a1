"""Joint transmit covariance and reflect pattern design.

* LoS detection: closed-form MRT plus per-element phase alignment, and a
  one-dimensional search over the active gain a0.
* CRB minimization: alternating projected-gradient ascent on the angle
  information D (equivalently descent on the CRB).  D is concave in R, so
  the transmit step converges to the global optimum at a fixed pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .detection import pd_closed_form
from .errors import InfeasibleError, InvalidArgumentError
from .estimation import angle_information, crb_from_information, information_gradient
from .model import (Architecture, ChannelSet, ReflectPattern, SystemConfig, los_components,
                    path_loss, steering_vector)
from .snr import active_reflect_power, reflection_noise_ratio, sensing_snr, signal_snr

A0_GRID_POINTS = 512
A0_GRID_DECADES = 4
ARMIJO = 1e-4
FEAS_RTOL = 1e-9


@dataclass(eq=False)
class BeamformingSolution:
    r: np.ndarray
    pattern: ReflectPattern
    objective: float
    trace: list = field(default_factory=list)
    converged: bool = True
    meta: dict = field(default_factory=dict)
    iterates: list = field(default_factory=list)


def alignment_phases(config: SystemConfig, theta: float | None = None) -> np.ndarray:
    """phi_n = -(arg c_n + arg a_n(theta)) mod 2 pi, so that c^T Phi a(theta) = N."""
    theta = config.geometry.theta if theta is None else theta
    c, _, _ = los_components(config)
    a = steering_vector(config.n_irs, theta)
    return np.mod(-(np.angle(c) + np.angle(a)), 2 * math.pi)


def mrt_covariance(direction: np.ndarray, power: float) -> np.ndarray:
    """P d^* d^T / ||d||^2, the rank-one covariance beamforming along d."""
    d = np.asarray(direction, dtype=complex)
    return power * np.outer(d.conj(), d) / np.vdot(d, d).real


def active_transmit_power(config: SystemConfig, a0: float) -> float:
    """P_x = min(P_BS, (P_IRS / (N a0^2) - sigma_z^2) / (L(d1) M_t)) under LoS MRT."""
    loss = path_loss(config.pathloss, config.geometry.d1, "bs_irs")
    cap = (config.p_irs / (config.n_irs * a0 ** 2) - config.sigma_z2) / (loss * config.m_t)
    return min(config.p_bs, cap)


def optimal_los_detection(config: SystemConfig, channels: ChannelSet,
                          pfa: float = 1e-2) -> BeamformingSolution:
    """Detection-optimal design for LoS BS-IRS channels.

    Passive IRSs get full-power MRT and phase alignment.  The active IRS
    additionally picks a uniform gain a0 on a log grid over (0, a_max] that
    maximizes the closed-form detection probability; ties go to the
    smallest a0.
    """
    _, d, _ = los_components(config)
    phases = alignment_phases(config, channels.theta)
    if config.architecture.passive:
        r = mrt_covariance(d, config.p_bs)
        pattern = ReflectPattern.passive(phases)
        snr = sensing_snr(config, channels, pattern, r)
        pd = pd_closed_form(config, snr, pfa).pd
        return BeamformingSolution(r, pattern, snr, [snr], True,
                                   {"p_x": config.p_bs, "pd": pd})

    grid = config.a_max * np.logspace(-A0_GRID_DECADES, 0, A0_GRID_POINTS)
    best = None
    for a0 in grid:
        p_x = active_transmit_power(config, a0)
        if p_x <= 0:
            continue
        r = mrt_covariance(d, p_x)
        pattern = ReflectPattern.uniform(phases, a0)
        snr = signal_snr(config, channels, pattern, r)
        kappa = reflection_noise_ratio(config, channels, pattern)
        pd = pd_closed_form(config, snr, pfa, kappa).pd
        if best is None or pd > best[0]:
            best = (pd, a0, p_x, r, pattern, kappa)
    if best is None:
        raise InfeasibleError("IRS power budget cannot cover the reflection noise for any gain")
    pd, a0, p_x, r, pattern, kappa = best
    snr = sensing_snr(config, channels, pattern, r)
    return BeamformingSolution(r, pattern, snr, [snr], True,
                               {"a0": a0, "p_x": p_x, "pd": pd, "kappa": kappa})


# ---------------------------------------------------------------------------
# CRB minimization


def project_trace_psd(r: np.ndarray, power: float) -> np.ndarray:
    """Euclidean projection onto {R Hermitian PSD, tr R <= power}."""
    h = 0.5 * (r + r.conj().T)
    w, v = np.linalg.eigh(h)
    lam = np.clip(w, 0.0, None)
    if lam.sum() > power:
        # project the spectrum onto the simplex of total mass `power`
        srt = np.sort(w)[::-1]
        cums = np.cumsum(srt) - power
        hits = np.nonzero(srt - cums / np.arange(1, srt.size + 1) > 0)[0]
        # k = 0 always qualifies in exact arithmetic
        k = hits[-1] if hits.size else 0
        lam = np.clip(w - cums[k] / (k + 1), 0.0, None)
    return (v * lam) @ v.conj().T


class _Problem:
    """Objective and feasibility maps for one CRB-min instance."""

    def __init__(self, config: SystemConfig, channels: ChannelSet):
        self.config = config
        self.channels = channels
        self.active = config.architecture is Architecture.ACTIVE

    def info(self, r, pattern) -> float:
        return angle_information(self.config, self.channels, pattern, r)

    def irs_power(self, r, pattern) -> float:
        return active_reflect_power(self.channels, pattern, r, self.config.sigma_z2)

    def feasible_r(self, r, pattern):
        r = project_trace_psd(r, self.config.p_bs)
        if self.active:
            g2 = pattern.gains ** 2
            budget = self.config.p_irs - self.config.sigma_z2 * g2.sum()
            incident = self.irs_power(r, pattern) - self.config.sigma_z2 * g2.sum()
            if incident > budget:
                r = r * (max(budget, 0.0) / incident)
        return r

    def check(self, r, pattern) -> None:
        cfg = self.config
        w = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
        if np.trace(r).real > cfg.p_bs * (1 + FEAS_RTOL) or w.min() < -FEAS_RTOL * cfg.p_bs:
            raise InvalidArgumentError("transmit covariance violates the power or PSD constraint")
        pattern.check(cfg, atol=FEAS_RTOL * cfg.a_max)
        if self.active and self.irs_power(r, pattern) > cfg.p_irs * (1 + FEAS_RTOL):
            raise InvalidArgumentError("pattern violates the IRS power budget")


def _capped(step: float, g: np.ndarray, scale: float) -> float:
    # keep ||step g|| within 1e3 scale so the eigendecomposition stays accurate
    return min(step, 1e3 * scale / max(np.linalg.norm(g), 1e-300))


def _ascend(f, x0, f0, grad, step0, retract, inner_iters, rtol):
    """Projected gradient ascent with Armijo backtracking along the projection arc.

    ``grad(x)`` returns (g, inner) where inner(dx) is the directional
    derivative along dx.  Returns (x, f(x), step).
    """
    x, fx, step = x0, f0, step0
    for _ in range(inner_iters):
        g, inner = grad(x)
        accepted = False
        for _ in range(60):
            cand = retract(x, step, g)
            fc = f(cand)
            if fc >= fx + ARMIJO * inner(cand, x) and fc >= fx:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        gain = fc - fx
        x, fx = cand, fc
        step = min(2.0 * step, 1e150)
        if gain <= rtol * abs(fx):
            break
    return x, fx, step


def _reflect_phases(prob: _Problem, r, pattern, info, max_iter):
    """L-BFGS on -log D over the (unconstrained) phases at fixed gains."""
    cfg, ch = prob.config, prob.channels
    gains = pattern.gains

    def fun(phases):
        p = ReflectPattern(phases, gains)
        g = information_gradient(cfg, ch, p, r)
        if not g.info > 0:
            return math.inf, np.zeros_like(phases)
        g_phi = -2 * np.imag(g.v.conj() * p.coefficients)
        return -math.log(g.info), -g_phi / g.info

    res = optimize.minimize(fun, pattern.phases, jac=True, method="L-BFGS-B",
                            options={"maxiter": max_iter, "gtol": 1e-12, "ftol": 1e-15})
    cand = ReflectPattern(np.mod(res.x, 2 * math.pi), gains)
    new = prob.info(r, cand)
    if new > info:
        return cand, new
    return pattern, info


def project_gains(y: np.ndarray, weights: np.ndarray, budget: float, a_max: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= a_max, sum w a^2 <= budget}.

    KKT gives a_n = clip(y_n / (1 + lam w_n), 0, a_max) with lam >= 0 found
    by bisection on the (monotone) budget residual.
    """
    a = np.clip(y, 0.0, a_max)
    if weights @ a ** 2 <= budget:
        return a
    if budget <= 0:
        return np.zeros_like(a)
    lo, hi = 0.0, 1.0
    while weights @ np.clip(y / (1 + hi * weights), 0.0, a_max) ** 2 > budget:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if weights @ np.clip(y / (1 + mid * weights), 0.0, a_max) ** 2 > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return np.clip(y / (1 + hi * weights), 0.0, a_max)


def _reflect_active(prob: _Problem, r, pattern, info, step, inner_iters, inner_tol):
    """Phases by L-BFGS, then projected gradient on the gains.

    The IRS power sum_n a_n^2 ([G_t R G_t^H]_nn + sigma_z^2) does not depend
    on the phases, so only the gain update sees the budget.
    """
    pattern, info = _reflect_phases(prob, r, pattern, info, inner_iters)
    cfg, ch = prob.config, prob.channels
    weights = np.real(np.einsum("ij,jk,ik->i", ch.g_t, r, ch.g_t.conj())) + cfg.sigma_z2
    phases = pattern.phases
    unit = np.exp(1j * phases)

    def grad_a(p):
        gv = information_gradient(cfg, ch, p, r).v
        g = 2 * np.real(gv.conj() * unit)
        return g, lambda c, x0: float(g @ (c.gains - x0.gains))

    def retract(p, s, g):
        return ReflectPattern(phases, project_gains(p.gains + s * g, weights, cfg.p_irs,
                                                    cfg.a_max))

    if step is None:
        g0, _ = grad_a(pattern)
        step = 0.1 * cfg.a_max / max(np.abs(g0).max(), 1e-300)
    return _ascend(lambda p: prob.info(r, p), pattern, info, grad_a, step, retract,
                   inner_iters, inner_tol)


def default_crb_init(config: SystemConfig, channels: ChannelSet) -> BeamformingSolution:
    """MRT toward the LoS BS direction and LoS phase alignment (uniform feasible gain if active)."""
    _, d, _ = los_components(config)
    phases = alignment_phases(config, channels.theta)
    r = mrt_covariance(d, config.p_bs)
    if config.architecture is Architecture.ACTIVE:
        pattern = ReflectPattern.uniform(phases, 1.0)
        power = active_reflect_power(channels, pattern, r, config.sigma_z2)
        gain = min(config.a_max, math.sqrt(config.p_irs / power))
        pattern = ReflectPattern.uniform(phases, gain)
    else:
        pattern = ReflectPattern.passive(phases)
    return BeamformingSolution(r, pattern, math.nan)


def ao_crb_min(config: SystemConfig, channels: ChannelSet,
               init: BeamformingSolution | None = None, tol: float = 1e-6,
               max_iters: int = 500, inner_iters: int = 50,
               keep_iterates: bool = False) -> BeamformingSolution:
    """Alternating minimization of the angle CRB.

    Each outer iteration runs a transmit step (projected gradient on the
    PSD cone with tr R <= P_BS; for the active IRS the iterate is scaled back
    into the IRS power budget) and a reflect step (gradient on the phases,
    and on the gains for the active IRS).  Steps are only accepted when they
    increase the information, so the CRB trace never increases.
    """
    channels.check(config)
    prob = _Problem(config, channels)
    init = default_crb_init(config, channels) if init is None else init
    r = np.asarray(init.r, dtype=complex)
    pattern = init.pattern
    prob.check(r, pattern)

    info = prob.info(r, pattern)
    if not info > 0:
        raise InvalidArgumentError("initial point carries no angle information")
    crb = lambda d: crb_from_information(config, channels.alpha, d)  # noqa: E731
    trace = [crb(info)]
    iterates = [(r.copy(), pattern)] if keep_iterates else []
    step_r = step_v = None
    converged = False
    inner_tol = tol * 1e-2

    for _ in range(max_iters):
        before = info

        # transmit step
        def grad_r(x):
            g = information_gradient(config, channels, pattern, x).r
            return g, lambda c, x0: float(np.real(np.vdot(g, c - x0)))

        g0 = information_gradient(config, channels, pattern, r).r
        if step_r is None:
            step_r = config.p_bs / max(np.linalg.norm(g0), 1e-300)
        r, info, step_r = _ascend(
            lambda x: prob.info(x, pattern), r, info, grad_r, step_r,
            lambda x, s, g: prob.feasible_r(x + _capped(s, g, config.p_bs) * g, pattern),
            inner_iters, inner_tol)

        # reflect step
        if prob.active:
            pattern, info, step_v = _reflect_active(prob, r, pattern, info, step_v,
                                                    inner_iters, inner_tol)
        else:
            pattern, info = _reflect_phases(prob, r, pattern, info, inner_iters)

        trace.append(crb(info))
        if keep_iterates:
            iterates.append((r.copy(), pattern))
        if (info - before) <= tol * abs(before):
            converged = True
            break

    prob.check(r, pattern)
    return BeamformingSolution(r, pattern, trace[-1], trace, converged,
                               {"information": info}, iterates)

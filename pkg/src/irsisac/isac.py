"""Joint sensing and communication with a dedicated sensing stream.

The BS sends x(t) = w s(t) + x0(t).  For either receiver type the optimal
information precoder at a given total covariance R = w w^H + R0 is

    w = R h / sqrt(h^H R h),   R0 = R - w w^H,

which leaves R0 h = 0.  Type-I and type-II SNRs then coincide at
h^H R h / sigma_c^2, and the transmit step becomes the convex program

    max h^H R h   s.t.  D(R) >= D_req,  tr R <= P_BS,  R >= 0,

where D is the angle information (CRB = sigma^2 / (2T|alpha|^2 D)).  The
Schur-complement term of D is written as a 2x2 LMI, so the program is a
small SDP solved with cvxpy.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy import optimize

from .beamforming import ao_crb_min, default_crb_init, project_trace_psd
from .errors import InvalidArgumentError
from .estimation import angle_information, crb_from_information, information_gradient
from .model import ChannelSet, ReflectPattern, SystemConfig
from .signals import transmit_block
from .snr import cascade

FEAS_RTOL = 1e-9
SDP_MARGIN = 1e-8


class Receiver(str, enum.Enum):
    TYPE_I = "I"
    TYPE_II = "II"


@dataclass(frozen=True, eq=False)
class IsacTransmit:
    w: np.ndarray
    r0: np.ndarray

    def check(self, p_max: float, tol: float = FEAS_RTOL) -> None:
        if np.linalg.eigvalsh(0.5 * (self.r0 + self.r0.conj().T)).min() < -tol * p_max:
            raise InvalidArgumentError("R0 is not positive semidefinite")
        if np.vdot(self.w, self.w).real + np.trace(self.r0).real > p_max * (1 + tol):
            raise InvalidArgumentError("joint transmit power exceeds the budget")

    @classmethod
    def from_covariance(cls, r: np.ndarray, h: np.ndarray) -> "IsacTransmit":
        """Split R into the SNR-optimal precoder and the residual sensing covariance."""
        rh = r @ h
        gain = float(np.real(np.vdot(h, rh)))
        if gain <= 0:
            return cls(np.zeros(r.shape[0], complex), r.copy())
        w = rh / math.sqrt(gain)
        r0 = r - np.outer(w, w.conj())
        vals, vecs = np.linalg.eigh(0.5 * (r0 + r0.conj().T))
        r0 = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
        return cls(w, r0)


@dataclass(eq=False)
class ParetoPoint:
    crb_bound: float
    comm_snr: float
    feasible: bool
    tx: IsacTransmit | None = None
    pattern: ReflectPattern | None = None
    crb: float = math.nan
    trace: list = field(default_factory=list)
    iterates: list = field(default_factory=list)


def combined_channel(channels: ChannelSet, pattern: ReflectPattern) -> np.ndarray:
    """h with h^H = h_d^H + h_r^H Phi G_t."""
    if channels.h_d is None or channels.h_r is None:
        raise InvalidArgumentError("ISAC needs the communication channels h_d and h_r")
    return channels.h_d + channels.g_t.conj().T @ (pattern.coefficients.conj() * channels.h_r)


def comm_snr(receiver: Receiver | str, channels: ChannelSet, pattern: ReflectPattern,
             tx: IsacTransmit, sigma_c2: float) -> float:
    receiver = Receiver(receiver)
    h = combined_channel(channels, pattern)
    signal = abs(np.vdot(h, tx.w)) ** 2
    if receiver is Receiver.TYPE_II:
        return float(signal / sigma_c2)
    interference = float(np.real(np.vdot(h, tx.r0 @ h)))
    return float(signal / (interference + sigma_c2))


def effective_sensing_covariance(tx: IsacTransmit) -> np.ndarray:
    """w w^H + R0, the large-T sample covariance of the joint signal."""
    return np.outer(tx.w, tx.w.conj()) + tx.r0


def joint_symbols(tx: IsacTransmit, t_symbols: int, rng: np.random.Generator) -> np.ndarray:
    """T joint symbols (rows) with Gaussian s(t) and a sensing stream of covariance R0."""
    s = (rng.standard_normal(t_symbols) + 1j * rng.standard_normal(t_symbols)) / math.sqrt(2)
    return np.outer(s, tx.w) + transmit_block(tx.r0, t_symbols)


# ---------------------------------------------------------------------------
# optimization


class _TransmitSdp:
    """max h^H R h  s.t.  D(R) >= 1, tr R <= 1, R >= 0, compiled once per M_t.

    With r0 = p^H R p, r1 = p_dot^H R p and r2 = p_dot^H R p_dot, the
    information is x r0 + u (r2 - |r1|^2 / r0).  The Schur term becomes
    t <= r2 - |r1|^2 / r0, a second-order cone.  R = A + jB enters through
    the real embedding [[A, -B], [B, A]] >= 0 and every trace is a real
    linear form in (A, B), which keeps the problem real and lets cvxpy
    reuse its canonicalization across solves.
    """

    def __init__(self, m_t: int):
        self.a = cp.Variable((m_t, m_t), symmetric=True)
        self.b = cp.Variable((m_t, m_t))
        t = cp.Variable()
        # (re, im) coefficient pairs so that tr(R Q) = <A, re> + <B, im> for Hermitian R
        self.params = {k: (cp.Parameter((m_t, m_t)), cp.Parameter((m_t, m_t)))
                       for k in ("pp", "xpp", "dp_re", "dp_im", "dd", "hh")}
        self.u = cp.Parameter(nonneg=True)

        def form(key):
            re, im = self.params[key]
            return cp.sum(cp.multiply(self.a, re)) + cp.sum(cp.multiply(self.b, im))

        r0, r2 = form("pp"), form("dd")
        r1_re, r1_im = form("dp_re"), form("dp_im")
        cons = [
            cp.bmat([[self.a, -self.b], [self.b, self.a]]) >> 0,
            self.b + self.b.T == 0,
            cp.trace(self.a) <= 1,
            form("xpp") + self.u * t >= 1,
            # [[r0, r1], [r1^*, r2 - t]] >= 0
            cp.SOC(r0 + r2 - t, cp.hstack([2 * r1_re, 2 * r1_im, r0 - r2 + t])),
        ]
        self.problem = cp.Problem(cp.Maximize(form("hh")), cons)

    @staticmethod
    def _coeffs(q):
        # Re tr((A + jB) Q) = <A, Re Q^T> - <B, Im Q^T>
        return np.real(q).T.copy(), -np.imag(q).T.copy()

    def _set(self, key, q):
        re, im = self._coeffs(q)
        self.params[key][0].value = re
        self.params[key][1].value = im

    def solve(self, p, pd, x, u, hn):
        pp = np.outer(p.conj(), p)
        dp = np.outer(pd.conj(), p)
        self._set("pp", pp)
        self._set("xpp", max(x, 0.0) * pp)
        self._set("dp_re", dp)
        self._set("dp_im", -1j * dp)  # Im tr(R Q) = Re tr(R (-jQ))
        self._set("dd", np.outer(pd.conj(), pd))
        self._set("hh", np.outer(hn, hn.conj()))
        self.u.value = u
        try:
            with warnings.catch_warnings():
                # inaccurate solutions are repaired by the caller
                warnings.simplefilter("ignore", UserWarning)
                self.problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11,
                                   tol_feas=1e-11)
        except cp.error.SolverError:
            return None
        if self.problem.status not in ("optimal", "optimal_inaccurate") or self.a.value is None:
            return None
        b = 0.5 * (self.b.value - self.b.value.T)
        return np.asarray(self.a.value) + 1j * b


class _Isac:
    def __init__(self, config: SystemConfig, channels: ChannelSet, crb_bound: float):
        self.config = config
        self.channels = channels
        self.bound = crb_bound
        if math.isinf(crb_bound):
            self.d_req = 0.0
        else:
            self.d_req = config.sigma2 / (2 * config.t_symbols * abs(channels.alpha) ** 2
                                          * crb_bound)
        self.sdp = _TransmitSdp(config.m_t)

    def info(self, r, pattern) -> float:
        return angle_information(self.config, self.channels, pattern, r)

    def feasible(self, r, pattern) -> bool:
        return self.d_req == 0 or self.info(r, pattern) >= self.d_req * (1 + 1e-12)

    def gain(self, r, pattern) -> float:
        h = combined_channel(self.channels, pattern)
        return float(np.real(np.vdot(h, r @ h)))

    def snr(self, r, pattern) -> float:
        return self.gain(r, pattern) / self.config.sigma_c2

    # transmit step -------------------------------------------------------

    def transmit(self, pattern, r_prev):
        """Best feasible R at a fixed pattern; never worse than ``r_prev``."""
        cfg = self.config
        h = combined_channel(self.channels, pattern)
        if self.d_req == 0:
            r = cfg.p_bs * np.outer(h, h.conj()) / np.vdot(h, h).real
            return r
        r = self._sdp(pattern, h)
        if r is None:
            return r_prev
        r = project_trace_psd(r, cfg.p_bs)
        r = self._restore(r, r_prev, pattern)
        if self.gain(r, pattern) >= self.gain(r_prev, pattern):
            return r
        return r_prev

    def _sdp(self, pattern, h):
        cfg = self.config
        cas = cascade(cfg, self.channels, pattern)
        un = float(np.vdot(cas.u, cas.u).real)
        c = complex(np.vdot(cas.u, cas.u_dot))
        x = float(np.vdot(cas.u_dot, cas.u_dot).real) - abs(c) ** 2 / un
        scale = float(np.vdot(cas.p_t, cas.p_t).real)
        # per unit power and per unit ||p_t||^2, with the bound scaled to O(1);
        # the small margin absorbs the solver's feasibility tolerance
        req = self.d_req * (1 + SDP_MARGIN) / (cfg.p_bs * scale)
        rt = self.sdp.solve(cas.p_t / math.sqrt(scale), cas.p_t_dot / math.sqrt(scale),
                            x / req, un / req, h / np.linalg.norm(h))
        return None if rt is None else cfg.p_bs * rt

    def _restore(self, r, r_prev, pattern):
        """Mix toward the previous (feasible) R until the CRB bound holds.

        D is concave in R, so the segment from a feasible point only gains
        information as it approaches ``r_prev``.
        """
        if self.feasible(r, pattern):
            return r
        if not self.feasible(r_prev, pattern):
            return r_prev
        lo, hi = 0.0, 1.0  # fraction of r_prev
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.feasible((1 - mid) * r + mid * r_prev, pattern):
                hi = mid
            else:
                lo = mid
        return (1 - hi) * r + hi * r_prev

    # reflect step --------------------------------------------------------

    def _gain_grad(self, r, pattern):
        ch = self.channels
        h = combined_channel(ch, pattern)
        q = h.conj()
        g = ch.h_r * (ch.g_t.conj() @ (r.T @ q))
        return float(np.real(np.vdot(h, r @ h))), -2 * np.imag(g.conj() * pattern.coefficients)

    def _value(self, phases):
        """V(phi) = max_R h^H R h under the bound, with its envelope gradient.

        dV/dphi = d gain/dphi + lam dD/dphi at the optimal R, where lam is
        the bound's multiplier.  Stationarity in R reads
        (h h^H + lam G_D - nu I) U = 0 on the range U of R, which fixes
        (lam, nu) by least squares.
        """
        pattern = ReflectPattern.passive(phases)
        h = combined_channel(self.channels, pattern)
        r = self._sdp(pattern, h)
        if r is None:
            return None
        r = project_trace_psd(r, self.config.p_bs)
        gain, g_gain = self._gain_grad(r, pattern)
        ig = information_gradient(self.config, self.channels, pattern, r)
        w, v = np.linalg.eigh(r)
        u = v[:, w > 1e-6 * w.max()]
        lhs = np.stack([(ig.r @ u).ravel(), -u.ravel()], axis=1)
        rhs = -(np.outer(h, h.conj()) @ u).ravel()
        sol = np.linalg.lstsq(np.concatenate([lhs.real, lhs.imag]),
                              np.concatenate([rhs.real, rhs.imag]), rcond=None)[0]
        lam = max(float(sol[0]), 0.0)
        g_d = -2 * np.imag(ig.v.conj() * pattern.coefficients)
        return gain, g_gain + lam * g_d, r

    def _reflect_joint(self, r, pattern, iters: int):
        """L-BFGS on -log V(phi); the transmit covariance follows the pattern."""
        def fun(phases):
            out = self._value(phases)
            if out is None or not out[0] > 0:
                return math.inf, np.zeros_like(phases)
            gain, grad, _ = out
            return -math.log(gain), -grad / gain

        res = optimize.minimize(fun, pattern.phases, jac=True, method="L-BFGS-B",
                                options={"maxiter": iters, "gtol": 1e-10, "ftol": 1e-13})
        cand = ReflectPattern.passive(np.mod(res.x, 2 * math.pi))
        out = self._value(cand.phases)
        if out is None:
            return r, pattern
        r_new = out[2]
        if self.feasible(r_new, cand) and self.gain(r_new, cand) > self.gain(r, pattern):
            return r_new, cand
        return r, pattern

    def reflect(self, r, pattern, iters: int, rtol: float):
        """Improve (R, pattern) through the phases; returns the new pair.

        Under an active bound the joint value-function ascent goes first.
        Plain alternation can stall there, since the bound couples R and the
        phases.  A feasible gradient step at fixed R polishes the result.
        """
        cfg, ch = self.config, self.channels
        if self.d_req == 0:
            def fun(phases):
                f, g = self._gain_grad(r, ReflectPattern.passive(phases))
                return -math.log(f), -g / f

            res = optimize.minimize(fun, pattern.phases, jac=True, method="L-BFGS-B",
                                    options={"maxiter": iters, "gtol": 1e-12, "ftol": 1e-15})
            cand = ReflectPattern.passive(np.mod(res.x, 2 * math.pi))
            return r, (cand if self.gain(r, cand) > self.gain(r, pattern) else pattern)

        r, pattern = self._reflect_joint(r, pattern, iters)
        f, g = self._gain_grad(r, pattern)
        step = None
        for _ in range(iters):
            info_g = information_gradient(cfg, ch, pattern, r)
            g_d = -2 * np.imag(info_g.v.conj() * pattern.coefficients)
            slack = info_g.info / self.d_req - 1
            direction = g
            if slack < 1e-3 and g @ g_d < 0:
                direction = g - (g @ g_d) / (g_d @ g_d) * g_d
            if step is None:
                step = 0.1 / max(np.abs(direction).max(), 1e-300)
            accepted = False
            for _ in range(50):
                cand = ReflectPattern.passive(np.mod(pattern.phases + step * direction,
                                                     2 * math.pi))
                fc = self.gain(r, cand)
                if fc > f and self.feasible(r, cand):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            gain = fc - f
            pattern = cand
            f, g = self._gain_grad(r, pattern)
            step = min(2.0 * step, 1e150)
            if gain <= rtol * f:
                break
        return r, pattern


def snr_max_under_crb(config: SystemConfig, channels: ChannelSet, crb_bound: float,
                      receiver: Receiver | str = Receiver.TYPE_II, tol: float = 1e-6,
                      max_iters: int = 100, warm: ParetoPoint | None = None,
                      inner_iters: int = 50, keep_iterates: bool = False) -> ParetoPoint:
    """Maximize the CU SNR subject to crb_angle <= crb_bound.

    Starts from ``warm`` when it meets the bound, otherwise from the CRB-min
    design of :func:`irsisac.beamforming.ao_crb_min`.  Returns
    ``feasible=False`` when that design cannot meet the bound.  With
    ``keep_iterates`` every accepted (R, pattern) pair is stored alongside
    the SNR trace.
    """
    receiver = Receiver(receiver)
    if not crb_bound > 0:
        raise InvalidArgumentError("crb_bound must be positive")
    channels.check(config)
    prob = _Isac(config, channels, crb_bound)

    start = None
    if warm is not None and warm.feasible:
        r = effective_sensing_covariance(warm.tx)
        if prob.feasible(r, warm.pattern):
            start = (r, warm.pattern)
    if start is None:
        sol = ao_crb_min(config, channels, default_crb_init(config, channels))
        if not prob.feasible(sol.r, sol.pattern):
            return ParetoPoint(crb_bound, 0.0, False, crb=sol.objective)
        start = (sol.r, sol.pattern)

    r, pattern = start
    value = prob.snr(r, pattern)
    trace = [value]
    iterates = [(r, pattern)] if keep_iterates else []
    for _ in range(max_iters):
        before = value
        r = prob.transmit(pattern, r)
        r, pattern = prob.reflect(r, pattern, inner_iters, tol * 1e-2)
        value = prob.snr(r, pattern)
        trace.append(value)
        if keep_iterates:
            iterates.append((r, pattern))
        if value - before <= tol * abs(before):
            break

    h = combined_channel(channels, pattern)
    tx = IsacTransmit.from_covariance(r, h)
    info = angle_information(config, channels, pattern, effective_sensing_covariance(tx))
    crb = crb_from_information(config, channels.alpha, info) if info > 0 else math.inf
    snr = comm_snr(receiver, channels, pattern, tx, config.sigma_c2)
    return ParetoPoint(crb_bound, snr, True, tx, pattern, crb, trace, iterates)


def pareto_sweep(config: SystemConfig, channels: ChannelSet, crb_grid,
                 receiver: Receiver | str = Receiver.TYPE_II, tol: float = 1e-6,
                 max_iters: int = 100, keep_iterates: bool = False) -> list[ParetoPoint]:
    """One point per bound, tightest first, each warm-started from its neighbour."""
    grid = [float(b) for b in crb_grid]
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise InvalidArgumentError("crb_grid must be sorted ascending")
    points = []
    warm = None
    for bound in grid:
        point = snr_max_under_crb(config, channels, bound, receiver, tol, max_iters, warm,
                                   keep_iterates=keep_iterates)
        if point.feasible:
            warm = point
        points.append(point)
    return points

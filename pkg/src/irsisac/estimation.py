"""Fisher information, angle CRB, gradients and the angle MLE.

With B(theta) = u p_t^T the angle information left after removing the
nuisance alpha is (2 T |alpha|^2 / sigma^2) D, where

    D = r0 (||u'||^2 - |u^H u'|^2 / ||u||^2) + ||u||^2 (r2 - |r1|^2 / r0)

and r0 = p_t^T R p_t^*, r1 = p_t^T R p_t'^*, r2 = p_t'^T R p_t'^*.  For the
semi-passive and active sensors u = b(theta) is fixed by the array, for the
fully-passive IRS u = G_r Phi a(theta) moves with the pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError, SingularFIMError
from .model import (Architecture, ChannelSet, ReflectPattern, SystemConfig,
                    steering_derivative, steering_vector)
from .scan import AngleScanner, default_grid
from .signals import mean_echo, transmit_block
from .snr import cascade

# D below this fraction of its gross terms counts as zero information
SINGULAR_RTOL = 1e-12
MLE_MIN_GRID = 1024


@dataclass(frozen=True, eq=False)
class FimRecord:
    f: np.ndarray  # over [theta, Re alpha, Im alpha]
    crb_theta: float


class _Terms(NamedTuple):
    r0: float
    r1: complex
    r2: float
    un: float  # ||u||^2
    udn: float  # ||u'||^2
    c: complex  # u^H u'

    @property
    def x(self) -> float:
        return self.udn - abs(self.c) ** 2 / self.un

    @property
    def y(self) -> float:
        return self.r2 - abs(self.r1) ** 2 / self.r0

    @property
    def info(self) -> float:
        return self.r0 * self.x + self.un * self.y

    @property
    def gross(self) -> float:
        return self.r0 * self.udn + self.un * self.r2


def _terms(cas, r: np.ndarray) -> _Terms:
    p, pd = cas.p_t, cas.p_t_dot
    rp = r @ p.conj()
    rpd = r @ pd.conj()
    return _Terms(
        float(np.real(p @ rp)), complex(p @ rpd), float(np.real(pd @ rpd)),
        float(np.vdot(cas.u, cas.u).real), float(np.vdot(cas.u_dot, cas.u_dot).real),
        complex(np.vdot(cas.u, cas.u_dot)),
    )


def _check(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern, r):
    channels.check(config)
    if pattern.phases.shape != (config.n_irs,):
        raise InvalidArgumentError("pattern length must equal N")
    r = np.asarray(r)
    if r.shape != (config.m_t, config.m_t):
        raise InvalidArgumentError(f"R has shape {r.shape}, expected {(config.m_t,) * 2}")
    return r


def angle_information(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                      r: np.ndarray) -> float:
    """The nuisance-free angle information D (CRB = sigma^2 / (2T|alpha|^2 D))."""
    r = _check(config, channels, pattern, r)
    t = _terms(cascade(config, channels, pattern), r)
    if t.r0 <= 0 or t.un <= 0:
        return 0.0
    return t.info


def crb_from_information(config: SystemConfig, alpha: complex, info: float) -> float:
    return config.sigma2 / (2 * config.t_symbols * abs(alpha) ** 2 * info)


def fim_point_target(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                     r: np.ndarray) -> FimRecord:
    """Partitioned FIM over eta = [theta, Re alpha, Im alpha].

    ``crb_theta`` is inf when the Schur complement vanishes.
    """
    r = _check(config, channels, pattern, r)
    alpha = channels.alpha
    if alpha == 0:
        raise SingularFIMError("alpha = 0: the echo carries no information")
    t = _terms(cascade(config, channels, pattern), r)
    t_bb = t.un * t.r0
    t_bd = np.conj(t.c) * t.r0 + t.un * t.r1
    t_dd = t.udn * t.r0 + 2 * np.real(t.c * t.r1) + t.un * t.r2
    k = 2 * config.t_symbols / config.sigma2
    cross = np.conj(alpha) * t_bd
    f = k * np.array([
        [abs(alpha) ** 2 * t_dd, cross.real, -cross.imag],
        [cross.real, t_bb, 0.0],
        [-cross.imag, 0.0, t_bb],
    ])
    if t_bb <= 0:
        return FimRecord(f, math.inf)
    schur = f[0, 0] - (f[0, 1] ** 2 + f[0, 2] ** 2) / f[1, 1]
    if schur <= SINGULAR_RTOL * f[0, 0]:
        return FimRecord(f, math.inf)
    return FimRecord(f, 1.0 / schur)


def crb_angle(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
              r: np.ndarray) -> float:
    """Closed-form angle CRB in rad^2.

    The active IRS uses the sensor form with its amplified pattern; the
    reflection noise is left out of the information, as for the closed form.
    """
    r = _check(config, channels, pattern, r)
    if channels.alpha == 0:
        raise SingularFIMError("alpha = 0: the echo carries no information")
    t = _terms(cascade(config, channels, pattern), r)
    if t.r0 <= 0 or t.un <= 0:
        raise SingularFIMError("no echo energy reaches the receiver")
    info = t.info
    if info <= SINGULAR_RTOL * t.gross:
        raise SingularFIMError("angle information vanishes (degenerate Schur complement)")
    return crb_from_information(config, channels.alpha, info)


class InfoGradient(NamedTuple):
    info: float
    r: np.ndarray  # Hermitian gradient w.r.t. R
    v: np.ndarray  # Wirtinger gradient dD/dv^* w.r.t. the pattern coefficients


def information_gradient(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                         r: np.ndarray) -> InfoGradient:
    """D and its gradients in R and in v = diag(Phi).

    The R gradient G satisfies dD = Re tr(G^H dR) for Hermitian dR.  The
    pattern gradient g = dD/dv^* gives dD/dphi_n = -2 Im(g_n^* v_n) and
    dD/da_n = 2 Re(g_n^* e^{j phi_n}).
    """
    r = _check(config, channels, pattern, r)
    cas = cascade(config, channels, pattern)
    t = _terms(cas, r)
    p, pd = cas.p_t, cas.p_t_dot
    x, y = t.x, t.y

    # R gradient
    g0 = np.outer(p.conj(), p)
    g2 = np.outer(pd.conj(), pd)
    m1 = t.r1 * np.outer(p.conj(), pd)
    g_r1 = m1 + m1.conj().T
    grad_r = (x + t.un * abs(t.r1) ** 2 / t.r0 ** 2) * g0 + t.un * g2 - t.un / t.r0 * g_r1

    # pattern gradient: p = A v, p' = A' v with A = G_t^T diag(a)
    n = channels.n_irs
    a = steering_vector(n, channels.theta)
    a_dot = steering_derivative(n, channels.theta)
    rbar = r.conj()
    h_p = channels.g_t.conj() @ (rbar @ p)  # G_t^* R^* p
    h_pd = channels.g_t.conj() @ (rbar @ pd)
    g_r0 = a.conj() * h_p
    g_r2 = a_dot.conj() * h_pd
    g_abs_r1 = np.conj(t.r1) * a_dot.conj() * h_p + t.r1 * a.conj() * h_pd
    g_y = g_r2 - g_abs_r1 / t.r0 + abs(t.r1) ** 2 / t.r0 ** 2 * g_r0
    g_v = x * g_r0 + t.un * g_y
    if config.architecture is Architecture.FULLY_PASSIVE:
        u, ud = cas.u, cas.u_dot
        ar_u = channels.g_r.conj().T @ u
        ar_ud = channels.g_r.conj().T @ ud
        g_un = a.conj() * ar_u
        g_udn = a_dot.conj() * ar_ud
        g_abs_c = np.conj(t.c) * a.conj() * ar_ud + t.c * a_dot.conj() * ar_u
        g_x = g_udn - g_abs_c / t.un + abs(t.c) ** 2 / t.un ** 2 * g_un
        g_v = g_v + t.r0 * g_x + y * g_un
    return InfoGradient(t.info, grad_r, g_v)


def numeric_fim(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                r: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """FIM by central differences of the noiseless echo block.

    Uses the dense cascade and an explicit transmit block with sample
    covariance R, independent of the rank-one reductions above.  The alpha
    steps are relative to |alpha|.
    """
    if not 1e-7 <= step <= 1e-3:
        raise InvalidArgumentError("step must lie in [1e-7, 1e-3]")
    r = _check(config, channels, pattern, r)
    x = transmit_block(r, config.t_symbols)
    theta, alpha = channels.theta, channels.alpha
    scale = abs(alpha) if alpha != 0 else 1.0
    steps = (step, step * scale, step * scale)

    def mu(eta):
        return mean_echo(config, channels, pattern, x, eta[0], eta[1] + 1j * eta[2]).ravel()

    eta0 = np.array([theta, alpha.real, alpha.imag])
    derivs = []
    for i, h in enumerate(steps):
        e = np.zeros(3)
        e[i] = h
        derivs.append((mu(eta0 + e) - mu(eta0 - e)) / (2 * h))
    d = np.array(derivs)
    f = 2 * np.real(d.conj() @ d.T) / config.sigma2
    return 0.5 * (f + f.T)


def mle_angle(config: SystemConfig, y: np.ndarray, x: np.ndarray, pattern: ReflectPattern,
              channels: ChannelSet, grid: np.ndarray | None = None, tol: float = 1e-10):
    """Angle and amplitude MLE; accepts one block or a batch of blocks."""
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size < MLE_MIN_GRID:
        raise InvalidArgumentError(f"the MLE needs at least {MLE_MIN_GRID} grid points")
    scanner = AngleScanner(config, channels, pattern, x)
    _, theta, alpha = scanner.maximize(scanner.correlate(y), grid, tol)
    if np.ndim(y) == 2:
        return float(theta[0]), complex(alpha[0])
    return theta, alpha

"""GLRT and Neyman-Pearson target detection, closed forms and Monte Carlo.

Passive architectures use the GLRT with unknown (theta, alpha): the decision
statistic is the concentrated likelihood of :mod:`irsisac.scan`, compared
with sigma^2 ln(1/pfa).

The active IRS detector assumes theta and alpha known.  Projecting every
received vector on b(theta) leaves the scalar samples

    r(t) = mu(t) + w(t),   w(t) ~ CN(0, sigma^2 (1 + kappa)) under H1,

where kappa is the reflection-noise ratio.  The NP statistic is then a
shifted energy detector: (2 / sigma^2) sum |r(t) + mu(t) / kappa|^2 is
noncentral chi-square with 2T degrees of freedom and noncentrality
lam1 = 2 T snr / kappa^2 under H0, and lam1 (1 + kappa) after dividing by
(1 + kappa) under H1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import rng as rngmod
from .errors import InvalidArgumentError
from .model import Architecture, ChannelSet, ReflectPattern, SystemConfig
from .scan import AngleScanner, default_grid
from .signals import EchoSynth, transmit_block
from .snr import cascade, reflection_noise_ratio, signal_snr
from .specfun import marcum_q, nc_chi2_isf, nc_chi2_sf

# beyond this noncentrality the active detector is evaluated in its
# Gaussian (kappa -> 0) limit
GAUSSIAN_LIMIT_LAMBDA = 1e20
# golden-section tolerance (rad) after the grid scan; the statistic is flat at its peak
DETECT_TOL = 1e-4


@dataclass
class DetectionOutcome:
    pd: float
    pfa: float
    threshold: float
    trials: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 <= self.pd <= 1 and 0 <= self.pfa <= 1):
            raise InvalidArgumentError("probabilities must lie in [0, 1]")


def _check_pfa(pfa: float) -> None:
    if not 0 < pfa < 1:
        raise InvalidArgumentError(f"pfa must lie in (0, 1), got {pfa}")


@dataclass(frozen=True)
class ActiveLaw:
    """Distribution parameters of the active NP statistic."""

    lam1: float
    kappa: float
    gaussian: bool

    @classmethod
    def build(cls, t_symbols: int, snr: float, kappa: float) -> "ActiveLaw":
        if kappa < 0 or snr < 0:
            raise InvalidArgumentError("snr and kappa must be non-negative")
        if kappa ** 2 == 0:  # also catches subnormal kappa
            return cls(math.inf, 0.0, True)
        lam1 = 2 * t_symbols * snr / kappa ** 2
        return cls(lam1, kappa, lam1 > GAUSSIAN_LIMIT_LAMBDA)


def pd_closed_form(config: SystemConfig, snr: float, pfa: float,
                   kappa: float | None = None) -> DetectionOutcome:
    """Closed-form detection probability.

    Parameters
    ----------
    snr : float
        Passive: sensing SNR.  Active: signal-only SNR (reflection noise
        excluded), see :func:`irsisac.snr.signal_snr`.
    kappa : float, optional
        Active only: reflection-noise ratio tr(Phi^H H2^H H2 Phi) sigma_z^2 / sigma^2.

    Notes
    -----
    The threshold is in the units of the statistic the matching detector
    computes: sigma^2 ln(1/pfa) for the GLRT, the energy-detector form for
    the active NP test.
    """
    _check_pfa(pfa)
    if snr < 0:
        raise InvalidArgumentError("snr must be non-negative")
    t = config.t_symbols
    if config.architecture.passive:
        pd = marcum_q(1, math.sqrt(2 * t * snr), math.sqrt(2 * math.log(1 / pfa)))
        return DetectionOutcome(min(max(pd, pfa), 1.0), pfa, config.sigma2 * math.log(1 / pfa))
    if kappa is None:
        raise InvalidArgumentError("active detection needs the reflection-noise ratio")
    law = ActiveLaw.build(t, snr, kappa)
    if law.gaussian:
        shift = math.sqrt(2 * t * snr)
        z = special.ndtri(1 - pfa)
        pd = float(special.ndtr(shift - z))
        return DetectionOutcome(pd, pfa, shift * z, meta={"lam1": law.lam1, "kappa": kappa})
    x_th = nc_chi2_isf(2 * t, law.lam1, pfa)
    pd = nc_chi2_sf(2 * t, law.lam1 * (1 + kappa), x_th / (1 + kappa))
    threshold = (x_th - law.lam1) * kappa / (2 * (1 + kappa))
    return DetectionOutcome(min(max(pd, 0.0), 1.0), pfa, threshold,
                            meta={"lam1": law.lam1, "kappa": kappa})


def glrt_statistic(config: SystemConfig, y: np.ndarray, x: np.ndarray, pattern: ReflectPattern,
                   channels: ChannelSet, theta_grid: np.ndarray | None = None,
                   tol: float = DETECT_TOL):
    """GLRT statistic with the angle and amplitude MLEs.

    ``y`` is a T x M_r block (rows y(t)^T) or a batch of them.  Returns
    ``(statistic, theta_mle, alpha_mle)``; scalars for a single block.
    """
    grid = default_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float)
    scanner = AngleScanner(config, channels, pattern, x)
    stat, theta, alpha = scanner.maximize(scanner.correlate(y), grid, tol)
    if np.ndim(y) == 2:
        return float(stat[0]), float(theta[0]), complex(alpha[0])
    return stat, theta, alpha


def glrt_decide(config: SystemConfig, statistic, pfa: float):
    """H1 when the statistic exceeds sigma^2 ln(1/pfa)."""
    _check_pfa(pfa)
    return np.asarray(statistic) > config.sigma2 * math.log(1 / pfa)


class _ActiveProjector:
    def __init__(self, config, channels, pattern, x):
        if config.architecture is not Architecture.ACTIVE:
            raise InvalidArgumentError("the NP statistic is defined for the active IRS")
        cas = cascade(config, channels, pattern)
        self.b = cas.u / math.sqrt(config.m_r)
        self.mu = channels.alpha * math.sqrt(config.m_r) * (x @ cas.p_t)
        self.kappa = reflection_noise_ratio(config, channels, pattern)
        self.sigma2 = config.sigma2

    def __call__(self, y):
        r = y @ self.b.conj()
        energy = self.kappa * np.sum(np.abs(r) ** 2, axis=-1)
        matched = 2 * np.real(r @ self.mu.conj())
        return (energy + matched) / (self.sigma2 * (1 + self.kappa))


def active_np_statistic(config: SystemConfig, y: np.ndarray, x: np.ndarray,
                        pattern: ReflectPattern, channels: ChannelSet):
    """Energy-detector plus matched-filter statistic of the active NP test.

    With C = I_T kron c b b^H the inverse (C + sigma^2 I)^-1 acts on b
    alone, so both terms reduce to the projections r(t) = b^H y(t) / ||b||.
    """
    stat = _ActiveProjector(config, channels, pattern, x)(np.asarray(y))
    return float(stat) if np.ndim(stat) == 0 else stat


def _binomial_half_width(p: float, n: int) -> float:
    return 1.959963984540054 * math.sqrt(max(p * (1 - p), 0.0) / n)


def simulate_detection(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                       r: np.ndarray, pfa: float, trials: int, seed: int,
                       angle: str = "estimate", batch: int = 512,
                       scenario: str = "detect", theta_grid: np.ndarray | None = None,
                       tol: float = DETECT_TOL) -> DetectionOutcome:
    """Empirical detection and false-alarm rates.

    Trial ``i`` of each hypothesis draws from its own counter-based stream,
    so the result does not depend on ``batch``.

    Parameters
    ----------
    angle : {"estimate", "known"}
        Passive architectures only: scan the angle grid (GLRT) or evaluate
        the statistic at the true angle.
    """
    _check_pfa(pfa)
    if trials < 1:
        raise InvalidArgumentError("trials must be positive")
    if angle not in ("estimate", "known"):
        raise InvalidArgumentError("angle must be 'estimate' or 'known'")
    x = transmit_block(r, config.t_symbols)
    synth = EchoSynth(config, channels, pattern, x)
    active = config.architecture is Architecture.ACTIVE
    if active:
        snr = signal_snr(config, channels, pattern, r)
        closed = pd_closed_form(config, snr, pfa, reflection_noise_ratio(config, channels, pattern))
        threshold = closed.threshold
        project = _ActiveProjector(config, channels, pattern, x)
        if closed.meta.get("lam1", math.inf) > GAUSSIAN_LIMIT_LAMBDA:
            # kappa -> 0: use the pure matched-filter statistic
            def statistic(y):
                return 2 * np.real((y @ project.b.conj()) @ project.mu.conj()) / config.sigma2
        else:
            statistic = project
    else:
        threshold = config.sigma2 * math.log(1 / pfa)
        scanner = AngleScanner(config, channels, pattern, x)
        grid = np.array([channels.theta]) if angle == "known" else (
            default_grid() if theta_grid is None else np.asarray(theta_grid, dtype=float))

        def statistic(y):
            return scanner.maximize(scanner.correlate(y), grid, tol)[0]

    counts = {}
    for hyp, draw in (("h0", synth.h0), ("h1", synth.h1)):
        hits = 0
        for start in range(0, trials, batch):
            idx = range(start, min(start + batch, trials))
            y = np.stack([draw(rngmod.stream(seed, f"{scenario}/{hyp}", i)) for i in idx])
            hits += int(np.count_nonzero(statistic(y) > threshold))
        counts[hyp] = hits
    pd = counts["h1"] / trials
    pfa_hat = counts["h0"] / trials
    meta = {
        "pd_half_width": _binomial_half_width(pd, trials),
        "pfa_half_width": _binomial_half_width(pfa_hat, trials),
        "pfa_target": pfa,
        "angle": "known" if active else angle,
    }
    return DetectionOutcome(pd, pfa_hat, threshold, trials, meta)

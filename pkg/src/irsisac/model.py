"""Scenario types, array geometry, path loss and channel synthesis.

All arrays are uniform linear arrays with half-wavelength spacing unless a
``spacing`` is passed explicitly.  Angles are measured from broadside.
Powers are linear watts throughout; dB only appears in the config parser and
in CSV output.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .errors import InvalidArgumentError

HALF_WAVELENGTH = 0.5


class Architecture(str, enum.Enum):
    FULLY_PASSIVE = "fully_passive"
    SEMI_PASSIVE = "semi_passive"
    ACTIVE = "active"

    @property
    def passive(self) -> bool:
        return self is not Architecture.ACTIVE

    @property
    def has_sensors(self) -> bool:
        return self is not Architecture.FULLY_PASSIVE


DEFAULT_EXPONENTS = {"bs_irs": 2.2, "irs_target": 2.2, "irs_cu": 3.0, "bs_cu": 3.0}


@dataclass(frozen=True)
class PathLossModel:
    """L(d) = k0 (d / d0) ** -alpha0[link]."""

    k0: float = 1e-3
    d0: float = 1.0
    alpha0: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_EXPONENTS))

    def __post_init__(self):
        if not 0 < self.k0 <= 1:
            raise InvalidArgumentError(f"k0 must lie in (0, 1], got {self.k0}")
        if self.d0 <= 0:
            raise InvalidArgumentError(f"d0 must be positive, got {self.d0}")
        for link, a in self.alpha0.items():
            if a <= 0:
                raise InvalidArgumentError(f"path-loss exponent for {link} must be positive")

    def exponent(self, link: str) -> float:
        try:
            return self.alpha0[link]
        except KeyError:
            raise InvalidArgumentError(f"no path-loss exponent for link {link!r}") from None


@dataclass(frozen=True)
class Geometry:
    """Distances (m) and angles (rad).

    ``theta`` is the target angle seen from the IRS.  The three LoS angles
    orient the BS-IRS link: ``irs_to_bs`` for the IRS steering vector c,
    ``bs_tx`` / ``bs_rx`` for the BS transmit (d) and receive (e) arrays.
    """

    d1: float = 5.0
    d2: float = 65.0
    theta: float = math.pi / 6
    irs_to_bs: float = 0.0
    bs_tx: float = 0.0
    bs_rx: float = 0.0

    def __post_init__(self):
        if self.d1 <= 0 or self.d2 <= 0:
            raise InvalidArgumentError("distances must be positive")
        if not abs(self.theta) < math.pi / 2:
            raise InvalidArgumentError("target angle must lie in (-pi/2, pi/2)")


@dataclass(frozen=True)
class SystemConfig:
    m_t: int = 8
    m_r: int = 8
    n_irs: int = 64
    t_symbols: int = 128
    p_bs: float = 1.0
    p_irs: float = 0.1
    a_max: float = 1.0
    sigma2: float = 1e-11
    sigma_z2: float = 1e-6
    sigma_c2: float = 1e-11
    architecture: Architecture = Architecture.FULLY_PASSIVE
    geometry: Geometry = field(default_factory=Geometry)
    pathloss: PathLossModel = field(default_factory=PathLossModel)

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        for name in ("m_t", "m_r", "n_irs", "t_symbols"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidArgumentError(f"{name} must be an integer >= 1, got {value}")
            object.__setattr__(self, name, int(value))
        for name in ("p_bs", "p_irs", "sigma2", "sigma_z2", "sigma_c2"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if self.a_max < 1:
            raise InvalidArgumentError("a_max must be >= 1")
        if self.architecture.passive:
            object.__setattr__(self, "a_max", 1.0)

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class ChannelSet:
    g_t: np.ndarray  # N x M_t
    g_r: np.ndarray  # M_r x N
    theta: float
    alpha: complex
    h_d: np.ndarray | None = None  # M_t
    h_r: np.ndarray | None = None  # N

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise InvalidArgumentError("alpha must be finite")

    @property
    def n_irs(self) -> int:
        return self.g_t.shape[0]

    def check(self, config: SystemConfig) -> None:
        n, m_t, m_r = config.n_irs, config.m_t, config.m_r
        if self.g_t.shape != (n, m_t):
            raise InvalidArgumentError(f"g_t has shape {self.g_t.shape}, expected {(n, m_t)}")
        if self.g_r.shape != (m_r, n):
            raise InvalidArgumentError(f"g_r has shape {self.g_r.shape}, expected {(m_r, n)}")
        if self.h_d is not None and self.h_d.shape != (m_t,):
            raise InvalidArgumentError("h_d must have length M_t")
        if self.h_r is not None and self.h_r.shape != (n,):
            raise InvalidArgumentError("h_r must have length N")

    def truncated(self, n: int) -> "ChannelSet":
        """Channels of the sub-surface made of the first ``n`` elements."""
        return replace(
            self,
            g_t=self.g_t[:n],
            g_r=self.g_r[:, :n],
            h_r=None if self.h_r is None else self.h_r[:n],
        )


@dataclass(frozen=True, eq=False)
class ReflectPattern:
    phases: np.ndarray
    gains: np.ndarray

    @classmethod
    def passive(cls, phases) -> "ReflectPattern":
        phases = np.asarray(phases, dtype=float)
        return cls(phases, np.ones_like(phases))

    @classmethod
    def uniform(cls, phases, gain: float) -> "ReflectPattern":
        phases = np.asarray(phases, dtype=float)
        return cls(phases, np.full_like(phases, gain))

    @property
    def coefficients(self) -> np.ndarray:
        """Diagonal of Phi, a_n exp(j phi_n)."""
        return self.gains * np.exp(1j * self.phases)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.coefficients)

    def check(self, config: SystemConfig, atol: float = 1e-12) -> None:
        if self.phases.shape != (config.n_irs,) or self.gains.shape != (config.n_irs,):
            raise InvalidArgumentError("pattern length must equal N")
        if config.architecture.passive:
            if not np.all(self.gains == 1.0):
                raise InvalidArgumentError("passive IRS elements must have unit gain")
        elif np.any(self.gains < -atol) or np.any(self.gains > config.a_max + atol):
            raise InvalidArgumentError("active gains must lie in [0, a_max]")


@dataclass(frozen=True, eq=False)
class TransmitCovariance:
    r: np.ndarray

    def check(self, p_max: float, herm_tol: float = 1e-10, eig_tol: float = 1e-10,
              trace_tol: float = 1e-9) -> None:
        r = self.r
        if np.max(np.abs(r - r.conj().T), initial=0.0) > herm_tol * max(1.0, np.abs(r).max()):
            raise InvalidArgumentError("covariance is not Hermitian")
        if np.linalg.eigvalsh(r).min() < -eig_tol * max(1.0, p_max):
            raise InvalidArgumentError("covariance is not positive semidefinite")
        if np.trace(r).real > p_max + trace_tol * max(1.0, p_max):
            raise InvalidArgumentError("covariance exceeds the power budget")


@dataclass(frozen=True, eq=False)
class TargetResponse:
    matrix: np.ndarray
    kind: Architecture


def _check_theta(theta) -> None:
    if not np.all(np.isfinite(theta)):
        raise InvalidArgumentError("theta must be finite")


def steering_vector(count: int, theta: float, spacing: float = HALF_WAVELENGTH) -> np.ndarray:
    """ULA response, entry n = exp(j 2 pi spacing n sin(theta)).

    ``theta`` may be an array, in which case the result has one row per angle.
    """
    _check_theta(theta)
    if count < 1 or spacing <= 0:
        raise InvalidArgumentError("count must be >= 1 and spacing > 0")
    n = np.arange(count)
    theta = np.asarray(theta, dtype=float)
    return np.exp(2j * np.pi * spacing * np.multiply.outer(np.sin(theta), n))


def steering_derivative(count: int, theta: float, spacing: float = HALF_WAVELENGTH) -> np.ndarray:
    """d/dtheta of :func:`steering_vector`."""
    a = steering_vector(count, theta, spacing)
    n = np.arange(count)
    theta = np.asarray(theta, dtype=float)
    return 2j * np.pi * spacing * np.multiply.outer(np.cos(theta), n) * a


def path_loss(model: PathLossModel, d: float, link: str = "bs_irs") -> float:
    if not d > 0:
        raise InvalidArgumentError(f"distance must be positive, got {d}")
    return model.k0 * (d / model.d0) ** (-model.exponent(link))


def round_trip_coefficient(config: SystemConfig, phase: float = 0.0) -> complex:
    """IRS-target-IRS coefficient: one path loss per traversal of d2."""
    loss = path_loss(config.pathloss, config.geometry.d2, "irs_target")
    return complex(loss * np.exp(1j * phase))


def los_components(config: SystemConfig):
    """Unit-modulus steering vectors (c, d, e) of the BS-IRS LoS link."""
    g = config.geometry
    c = steering_vector(config.n_irs, g.irs_to_bs)
    d = steering_vector(config.m_t, g.bs_tx)
    e = steering_vector(config.m_r, g.bs_rx)
    return c, d, e


def los_channels(config: SystemConfig):
    """Rank-one BS-IRS channels G_t = sqrt(L) c d^T and G_r = sqrt(L) e c^T."""
    c, d, e = los_components(config)
    gain = math.sqrt(path_loss(config.pathloss, config.geometry.d1, "bs_irs"))
    return gain * np.outer(c, d), gain * np.outer(e, c)


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries; real and imaginary parts N(0, 1/2)."""
    shape = (shape,) if isinstance(shape, int) else tuple(shape)
    z = rng.standard_normal(shape + (2,)).view(np.complex128)[..., 0]
    z *= math.sqrt(0.5)
    return z


def rician_channel(rng: np.random.Generator, k_factor: float, los: np.ndarray,
                   scale: float) -> np.ndarray:
    """sqrt(scale) (sqrt(K/(K+1)) los_n + sqrt(1/(K+1)) W).

    ``los_n`` is ``los`` rescaled to unit mean-square entries, so the expected
    squared Frobenius norm is ``scale * los.size``.  ``k_factor=inf`` returns
    the deterministic LoS part.
    """
    if k_factor < 0 or scale <= 0:
        raise InvalidArgumentError("k_factor must be >= 0 and scale > 0")
    los = np.asarray(los, dtype=complex)
    rms = np.sqrt(np.mean(np.abs(los) ** 2))
    los_n = los / rms if rms > 0 else los
    if np.isinf(k_factor):
        return math.sqrt(scale) * los_n
    w = crandn(rng, los.shape)
    return math.sqrt(scale) * (math.sqrt(k_factor / (k_factor + 1)) * los_n
                               + math.sqrt(1 / (k_factor + 1)) * w)


def target_response(config: SystemConfig, theta: float, alpha: complex) -> TargetResponse:
    a = steering_vector(config.n_irs, theta)
    if config.architecture is Architecture.FULLY_PASSIVE:
        h = alpha * np.outer(a, a)
        # fused multiply-adds can break a_i a_j == a_j a_i in the last bit
        return TargetResponse(0.5 * (h + h.T), config.architecture)
    b = steering_vector(config.m_r, theta)
    return TargetResponse(alpha * np.outer(b, a), config.architecture)


def los_scenario(config: SystemConfig, alpha_phase: float = 0.0) -> ChannelSet:
    g_t, g_r = los_channels(config)
    return ChannelSet(g_t, g_r, config.geometry.theta, round_trip_coefficient(config, alpha_phase))


def rician_scenario(config: SystemConfig, rng: np.random.Generator, k_factor: float,
                    alpha_phase: float = 0.0) -> ChannelSet:
    """BS-IRS channels with LoS part c d^T / e c^T plus Rayleigh scattering."""
    c, d, e = los_components(config)
    scale = path_loss(config.pathloss, config.geometry.d1, "bs_irs")
    g_t = rician_channel(rng, k_factor, np.outer(c, d), scale)
    g_r = rician_channel(rng, k_factor, np.outer(e, c), scale)
    return ChannelSet(g_t, g_r, config.geometry.theta, round_trip_coefficient(config, alpha_phase))

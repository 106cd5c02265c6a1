"""Preset systems and channel draws for the three evaluation setups."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .model import (DEFAULT_EXPONENTS, Architecture, ChannelSet, Geometry, PathLossModel,
                    SystemConfig, los_scenario, path_loss, rician_channel, rician_scenario,
                    round_trip_coefficient, steering_vector)

RICIAN_K = 0.5
SHADOW_DB = 10.0
CRB_N_MAX = 256


def detection_config(architecture: Architecture | str, n_irs: int = 64,
                     **overrides) -> SystemConfig:
    """Detection setup: LoS BS-IRS link, d1 = 5 m, d2 = 65 m, T = 128.

    Passive architectures get P_BS = 1.1 W; the active IRS splits the same
    total as P_BS = 1 W and P_IRS = 0.1 W.
    """
    architecture = Architecture(architecture)
    base = dict(
        m_t=8, m_r=8, n_irs=n_irs, t_symbols=128,
        p_bs=1.0 if architecture is Architecture.ACTIVE else 1.1,
        p_irs=0.1, a_max=10.0, sigma2=1e-11, sigma_z2=1e-6,
        architecture=architecture,
        geometry=Geometry(d1=5.0, d2=65.0, theta=math.pi / 6),
    )
    base.update(overrides)
    return SystemConfig(**base)


def detection_channels(config: SystemConfig) -> ChannelSet:
    return los_scenario(config)


def crb_config(architecture: Architecture | str, n_irs: int = 64, **overrides) -> SystemConfig:
    """Estimation setup: d1 = sqrt(2) m, d2 = 6 m, M_t = M_r = 4, T = 256, P_BS = 1 W."""
    base = dict(
        m_t=4, m_r=4, n_irs=n_irs, t_symbols=256, p_bs=1.0, p_irs=0.1, sigma2=1e-12,
        architecture=Architecture(architecture),
        geometry=Geometry(d1=math.sqrt(2), d2=6.0, theta=math.pi / 6),
        pathloss=PathLossModel(alpha0={**DEFAULT_EXPONENTS, "irs_target": 2.0}),
    )
    base.update(overrides)
    return SystemConfig(**base)


def crb_channels(config: SystemConfig, seed: int, k_factor: float = RICIAN_K,
                 n_max: int = CRB_N_MAX) -> ChannelSet:
    """Rician BS-IRS channels, drawn once for ``n_max`` elements and truncated.

    Nesting keeps the channels of the first N elements identical across an
    N sweep.  Pure LoS would make the fully-passive angle unidentifiable
    (rank-one G_t and G_r leave no angle information), hence the scattering.
    """
    n_max = max(n_max, config.n_irs)
    big = config.with_(n_irs=n_max)
    channels = rician_scenario(big, rngmod.stream(seed, "crb/channels"), k_factor)
    return channels.truncated(config.n_irs)


# ---------------------------------------------------------------------------
# ISAC


@dataclass(frozen=True)
class IsacLayout:
    bs: tuple = (0.0, 0.0)
    irs: tuple = (4.0, 5.0)
    cu_box: tuple = (40.0, 50.0, -10.0, 0.0)  # x_min, x_max, y_min, y_max
    d2: float = 6.0
    theta: float = math.pi / 6


def _angle_from(normal: np.ndarray, vec: np.ndarray) -> float:
    # signed angle of vec from the array broadside `normal`
    tangent = np.array([-normal[1], normal[0]])
    return math.atan2(float(vec @ tangent), float(vec @ normal))


def isac_config(n_irs: int = 8, **overrides) -> SystemConfig:
    """Fully-passive ISAC setup: M_t = M_r = N = 8, T = 256, P_BS = 1 W."""
    layout = IsacLayout()
    d1 = math.dist(layout.bs, layout.irs)
    base = dict(
        m_t=8, m_r=8, n_irs=n_irs, t_symbols=256, p_bs=1.0, sigma2=1e-14, sigma_c2=1e-11,
        architecture=Architecture.FULLY_PASSIVE,
        geometry=Geometry(d1=d1, d2=layout.d2, theta=layout.theta),
    )
    base.update(overrides)
    return SystemConfig(**base)


def isac_channels(config: SystemConfig, seed: int, layout: IsacLayout = IsacLayout(),
                  k_factor: float = RICIAN_K, shadow_db: float = SHADOW_DB) -> ChannelSet:
    """Rician BS-IRS, IRS-CU and BS-CU channels plus log-normal BS-CU shadowing.

    The BS array faces +x and the IRS faces -y, so both the BS and the CU
    lie in front of the surface.
    """
    rng = rngmod.stream(seed, "isac/channels")
    bs, irs = np.array(layout.bs), np.array(layout.irs)
    x0, x1, y0, y1 = layout.cu_box
    cu = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
    bs_normal, irs_normal = np.array([1.0, 0.0]), np.array([0.0, -1.0])

    pl = config.pathloss
    n, m_t, m_r = config.n_irs, config.m_t, config.m_r
    a_bs_irs = _angle_from(bs_normal, irs - bs)
    a_irs_bs = _angle_from(irs_normal, bs - irs)
    a_irs_cu = _angle_from(irs_normal, cu - irs)
    a_bs_cu = _angle_from(bs_normal, cu - bs)

    l1 = path_loss(pl, math.dist(layout.bs, layout.irs), "bs_irs")
    c = steering_vector(n, a_irs_bs)
    g_t = rician_channel(rng, k_factor, np.outer(c, steering_vector(m_t, a_bs_irs)), l1)
    g_r = rician_channel(rng, k_factor, np.outer(steering_vector(m_r, a_bs_irs), c), l1)
    # h_r^H and h_d^H are the IRS->CU and BS->CU rows
    l_rc = path_loss(pl, float(np.linalg.norm(cu - irs)), "irs_cu")
    h_r = rician_channel(rng, k_factor, steering_vector(n, a_irs_cu), l_rc).conj()
    shadow = 10 ** (shadow_db * rng.standard_normal() / 10)
    l_dc = path_loss(pl, float(np.linalg.norm(cu - bs)), "bs_cu") * shadow
    h_d = rician_channel(rng, k_factor, steering_vector(m_t, a_bs_cu), l_dc).conj()
    alpha = round_trip_coefficient(config)
    return ChannelSet(g_t, g_r, config.geometry.theta, alpha, h_d=h_d, h_r=h_r)

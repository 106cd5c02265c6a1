"""Sensing SNR of the three architectures and the active-IRS power budget.

Every cascade is rank one in the target response, B(theta) = u p_t^T with

* fully-passive: u = p_r = G_r Phi a(theta),  p_t = G_t^T Phi a(theta)
* semi-passive / active: u = b(theta) (sensor array),  p_t as above

so traces collapse to vector norms: tr(B R B^H) = ||u||^2 p_t^T R p_t^*.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError
from .model import (Architecture, ChannelSet, ReflectPattern, SystemConfig,
                    steering_derivative, steering_vector)


class Cascade(NamedTuple):
    u: np.ndarray
    u_dot: np.ndarray
    p_t: np.ndarray
    p_t_dot: np.ndarray


def cascade(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
            theta: float | None = None) -> Cascade:
    theta = channels.theta if theta is None else theta
    n = channels.n_irs
    v = pattern.coefficients
    if v.shape != (n,):
        raise InvalidArgumentError("pattern length does not match the channels")
    a = steering_vector(n, theta)
    a_dot = steering_derivative(n, theta)
    p_t = channels.g_t.T @ (v * a)
    p_t_dot = channels.g_t.T @ (v * a_dot)
    if config.architecture is Architecture.FULLY_PASSIVE:
        u = channels.g_r @ (v * a)
        u_dot = channels.g_r @ (v * a_dot)
    else:
        u = steering_vector(config.m_r, theta)
        u_dot = steering_derivative(config.m_r, theta)
    return Cascade(u, u_dot, p_t, p_t_dot)


def _check(config: SystemConfig, channels: ChannelSet, r: np.ndarray) -> None:
    channels.check(config)
    if r.shape != (config.m_t, config.m_t):
        raise InvalidArgumentError(f"R has shape {r.shape}, expected {(config.m_t,) * 2}")


def quad_form(r: np.ndarray, x: np.ndarray, y: np.ndarray | None = None):
    """x^T R y^* (R Hermitian); real when ``y`` is omitted."""
    if y is None:
        return float(np.real(x @ r @ x.conj()))
    return complex(x @ r @ y.conj())


def echo_power(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
               r: np.ndarray) -> float:
    """Mean received echo power per symbol, tr(B R B^H) |alpha|^2."""
    _check(config, channels, r)
    cas = cascade(config, channels, pattern)
    return abs(channels.alpha) ** 2 * float(np.vdot(cas.u, cas.u).real) * quad_form(r, cas.p_t)


def reflection_noise_ratio(config: SystemConfig, channels: ChannelSet,
                           pattern: ReflectPattern) -> float:
    """tr(Phi^H H2^H H2 Phi) sigma_z^2 / sigma^2 for the active IRS."""
    # ||H2 Phi||_F^2 = |alpha|^2 ||b||^2 sum_n a_n^2
    trace = abs(channels.alpha) ** 2 * config.m_r * float(np.sum(pattern.gains ** 2))
    return trace * config.sigma_z2 / config.sigma2


def signal_snr(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
               r: np.ndarray) -> float:
    """Echo power over receiver noise, ignoring any reflection noise."""
    return echo_power(config, channels, pattern, r) / config.sigma2


def sensing_snr(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                r: np.ndarray) -> float:
    snr = signal_snr(config, channels, pattern, r)
    if config.architecture is Architecture.ACTIVE:
        snr /= 1.0 + reflection_noise_ratio(config, channels, pattern)
    return snr


def active_reflect_power(channels: ChannelSet, pattern: ReflectPattern, r: np.ndarray,
                         sigma_z2: float) -> float:
    """tr(Phi G_t R G_t^H Phi^H) + sigma_z^2 tr(Phi Phi^H)."""
    incident = np.real(np.einsum("ij,jk,ik->i", channels.g_t, r, channels.g_t.conj()))
    g2 = pattern.gains ** 2
    return float(np.sum(g2 * incident) + sigma_z2 * np.sum(g2))

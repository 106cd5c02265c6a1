"""Transmit blocks and echo synthesis for Monte-Carlo validation."""

from __future__ import annotations

import numpy as np

from .model import (Architecture, ChannelSet, ReflectPattern, SystemConfig, crandn,
                    target_response)
from .snr import cascade


def psd_sqrt(r: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(r)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def transmit_block(r: np.ndarray, t_symbols: int) -> np.ndarray:
    """Deterministic T x M_t block whose sample covariance is exactly ``r``.

    Row t is x(t)^T.  Columns are orthonormal DFT sequences shaped by R^(1/2).
    """
    m_t = r.shape[0]
    if t_symbols < m_t:
        raise ValueError("need at least M_t symbols for an exact sample covariance")
    t = np.arange(t_symbols)[:, None]
    q = np.exp(-2j * np.pi * t * np.arange(m_t) / t_symbols) / np.sqrt(t_symbols)
    return np.sqrt(t_symbols) * q @ psd_sqrt(r).T


def cascade_matrix(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                   theta: float, alpha: complex) -> np.ndarray:
    """Dense M_r x M_t echo channel built from the full target response."""
    h = target_response(config, theta, alpha).matrix
    phi = pattern.matrix
    if config.architecture is Architecture.FULLY_PASSIVE:
        return channels.g_r @ phi.T @ h @ phi @ channels.g_t
    return h @ phi @ channels.g_t


def mean_echo(config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
              x: np.ndarray, theta: float | None = None, alpha: complex | None = None):
    """Noiseless echo block (T x M_r) via dense matrices."""
    theta = channels.theta if theta is None else theta
    alpha = channels.alpha if alpha is None else alpha
    return x @ cascade_matrix(config, channels, pattern, theta, alpha).T


class EchoSynth:
    """Draws received blocks for one scenario; rows are y(t)^T."""

    def __init__(self, config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                 x: np.ndarray):
        self.config = config
        cas = cascade(config, channels, pattern)
        self.u = cas.u
        self.alpha = channels.alpha
        self.signal = channels.alpha * np.outer(x @ cas.p_t, cas.u)
        # a^T Phi z(t) is CN(0, sigma_z^2 sum a_n^2): draw that scalar directly
        self.z_power = config.sigma_z2 * float(np.sum(pattern.gains ** 2))

    def noise(self, rng: np.random.Generator) -> np.ndarray:
        cfg = self.config
        return np.sqrt(cfg.sigma2) * crandn(rng, (cfg.t_symbols, cfg.m_r))

    def h0(self, rng: np.random.Generator) -> np.ndarray:
        return self.noise(rng)

    def h1(self, rng: np.random.Generator) -> np.ndarray:
        y = self.signal + self.noise(rng)
        if self.config.architecture is Architecture.ACTIVE:
            zeta = np.sqrt(self.z_power) * crandn(rng, self.config.t_symbols)
            y = y + self.alpha * np.outer(zeta, self.u)
        return y

"""Matched-filter angle scan shared by the GLRT detector and the angle MLE.

For the rank-one cascade the concentrated log-likelihood over alpha is

    J(theta) = |u^H Y_c p_t^*|^2 / (||u||^2 p_t^T S p_t^*),

with Y_c = sum_t y(t) x(t)^H and S = sum_t x(t) x(t)^H, so a whole batch of
received blocks is scanned with a few small matrix products.  The transmit
block is factored as X = U diag(s) V^H first; only its k nonzero singular
directions matter, and k = 1 for MRT.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidArgumentError
from .model import Architecture, ChannelSet, ReflectPattern, SystemConfig, steering_vector

GRID_POINTS = 2048
GOLDEN = (math.sqrt(5) - 1) / 2


def default_grid(points: int = GRID_POINTS) -> np.ndarray:
    """Cell-centred uniform grid over the open interval (-pi/2, pi/2)."""
    return -math.pi / 2 + (np.arange(points) + 0.5) * math.pi / points


class AngleScanner:
    """Evaluates J(theta) for batches of received blocks.

    Parameters
    ----------
    config, channels, pattern
        Scenario; only the known channels and the reflect pattern are used.
    x : ndarray, shape (T, M_t)
        Transmit block, row t is x(t)^T.
    """

    def __init__(self, config: SystemConfig, channels: ChannelSet, pattern: ReflectPattern,
                 x: np.ndarray):
        if x.ndim != 2 or x.shape[1] != config.m_t:
            raise InvalidArgumentError("transmit block must be T x M_t")
        self.config = config
        self.x = x
        self.v = pattern.coefficients
        self.g_t = channels.g_t
        self.g_r = channels.g_r
        self.n = channels.n_irs
        u, sv, vh = np.linalg.svd(x, full_matrices=False)
        keep = sv > 1e-12 * sv[0] if sv.size and sv[0] > 0 else np.zeros(sv.shape, bool)
        if not np.any(keep):
            raise InvalidArgumentError("transmit block is zero")
        # X p = U_k diag(s_k) (B^T p) with B = conj(V_k)
        self.left = u[:, keep] * sv[keep]
        self.b = vh[keep].T
        self.s2 = sv[keep] ** 2
        self.fully = config.architecture is Architecture.FULLY_PASSIVE
        self._grid_cache = None

    def templates(self, theta):
        """(u, B^T p_t) with one row per angle in ``theta``."""
        va = self.v * steering_vector(self.n, theta)
        p_t = va @ self.g_t @ self.b
        if self.fully:
            u = va @ self.g_r.T
        else:
            u = steering_vector(self.config.m_r, theta)
        return u, p_t

    def correlate(self, y: np.ndarray) -> np.ndarray:
        """Y_c B^* for a block (T, M_r) or batch (B, T, M_r); returns (B, M_r, k)."""
        y = np.asarray(y)
        if y.ndim == 2:
            y = y[None]
        if y.shape[1:] != (self.x.shape[0], self.config.m_r):
            raise InvalidArgumentError("received block must be T x M_r")
        return np.einsum("btr,tk->brk", y, self.left.conj())

    def _den(self, u, p_t):
        un = np.sum(np.abs(u) ** 2, axis=-1)
        q = np.sum(self.s2 * np.abs(p_t) ** 2, axis=-1)
        return un * q

    def _grid_templates(self, grid: np.ndarray):
        # batches reuse the same grid, so keep its templates
        cached = self._grid_cache
        if cached is None or cached[0].shape != grid.shape or np.any(cached[0] != grid):
            u, p_t = self.templates(grid)
            # one (M_r, G) matrix per singular direction: conj(u) scaled by conj(p_t)
            mats = [np.ascontiguousarray(u.conj().T * p_t[:, j].conj())
                    for j in range(p_t.shape[1])]
            cached = (grid.copy(), mats, self._den(u, p_t))
            self._grid_cache = cached
        return cached[1:]

    def on_grid(self, yc: np.ndarray, grid: np.ndarray):
        """num (B, G) and den (G,) on a common grid."""
        mats, den = self._grid_templates(grid)
        num = np.ascontiguousarray(yc[:, :, 0]) @ mats[0]
        for j in range(1, len(mats)):
            num += np.ascontiguousarray(yc[:, :, j]) @ mats[j]
        return num, den

    def at(self, yc: np.ndarray, theta: np.ndarray):
        """num and den with one angle per batch entry."""
        u, p_t = self.templates(theta)
        w = np.sum(u.conj()[:, :, None] * yc, axis=1)
        return np.sum(w * p_t.conj(), axis=1), self._den(u, p_t)

    def value(self, yc, theta):
        num, den = self.at(yc, theta)
        return np.abs(num) ** 2 / den

    def maximize(self, yc: np.ndarray, grid: np.ndarray, tol: float = 1e-6):
        """Grid search then golden-section refinement inside the bracketing cells.

        Returns
        -------
        stat, theta, alpha : ndarray, shape (B,)
        """
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise InvalidArgumentError("angle grid must be a non-empty 1-D array")
        if np.any(np.diff(grid) <= 0):
            raise InvalidArgumentError("angle grid must be strictly increasing")
        num, den = self.on_grid(yc, grid)
        stat = num.real ** 2
        stat += num.imag ** 2
        stat /= den
        k = np.argmax(stat, axis=1)
        rows = np.arange(len(k))
        best_t = grid[k]
        best_s = stat[rows, k]
        if grid.size > 1 and tol > 0:
            lo = grid[np.maximum(k - 1, 0)]
            hi = grid[np.minimum(k + 1, grid.size - 1)]
            t, s = self._golden(yc, lo, hi, tol)
            better = s > best_s
            best_t = np.where(better, t, best_t)
            best_s = np.where(better, s, best_s)
        num, den = self.at(yc, best_t)
        return np.abs(num) ** 2 / den, best_t, num / den

    def _golden(self, yc, lo, hi, tol):
        width = float(np.max(hi - lo))
        steps = max(int(math.ceil(math.log(tol / width) / math.log(GOLDEN))), 0) if width > tol else 0
        a, b = lo.copy(), hi.copy()
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = self.value(yc, c), self.value(yc, d)
        for _ in range(steps):
            # keep [a, d] where the left probe wins, else [c, b]
            left = fc >= fd
            a, b = np.where(left, a, c), np.where(left, d, b)
            c, d = (np.where(left, b - GOLDEN * (b - a), d),
                    np.where(left, c, a + GOLDEN * (b - a)))
            fp = self.value(yc, np.where(left, c, d))
            fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        mid = 0.5 * (a + b)
        return mid, self.value(yc, mid)

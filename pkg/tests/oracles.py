"""Independent reference implementations used only by the tests.

Each oracle follows a defining formula directly (integrals, dense Kronecker
models, explicit traces) and shares no code path with the package beyond
the basic data types.
"""

import math
import warnings

import mpmath
import numpy as np
from scipy import integrate, special, stats


def marcum_q_integral(m, a, b):
    """Q_m(a, b) from its defining integral of x (x/a)^(m-1) exp(-(x^2+a^2)/2) I_{m-1}(a x)."""
    if b == 0:
        return 1.0

    def f(x):
        if a == 0:
            return x ** (2 * m - 1) * math.exp(-x * x / 2) / (2 ** (m - 1) * math.gamma(m))
        # extended exponent range: (x/a)^(m-1) I_{m-1}(a x) is finite even for subnormal a
        xm, am = mpmath.mpf(x), mpmath.mpf(a)
        return float(xm * (xm / am) ** (m - 1) * mpmath.exp(-(xm * xm + am * am) / 2)
                     * mpmath.besseli(m - 1, am * xm))

    hi = max(a, b) + 40.0
    if b >= hi:
        return 0.0
    pts = [p for p in (a - 5, a, a + 5) if b < p < hi]
    v, _ = integrate.quad(f, b, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13, limit=500)
    return v


def nc_chi2_density_sf(nu, lam, x):
    """Upper tail by quadrature of the noncentral chi-square density."""
    if lam == 0:
        return float(special.gammaincc(nu / 2, x / 2))

    def pdf(t):
        if t <= 0:
            return 0.0
        tm, lm = mpmath.mpf(t), mpmath.mpf(lam)
        return float(mpmath.exp(-(tm + lm) / 2) * (tm / lm) ** (mpmath.mpf(nu - 2) / 4)
                     * mpmath.besseli(mpmath.mpf(nu) / 2 - 1, mpmath.sqrt(lm * tm)) / 2)

    mean, sd = nu + lam, math.sqrt(2 * nu + 4 * lam)
    hi = mean + 60 * sd
    if x >= hi:
        return 0.0
    pts = sorted(p for p in (mean - 3 * sd, mean, mean + 3 * sd) if x < p < hi)
    with warnings.catch_warnings():
        # the tolerance sits at the roundoff floor on purpose; the tests compare at 1e-10
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        v, _ = integrate.quad(pdf, x, hi, points=pts or None, epsabs=1e-14, epsrel=1e-13,
                              limit=1000)
    return v


def nc_chi2_split_sf(nu, lam, x):
    """Upper tail from X = (Z + sqrt(lam))^2 + W, W central chi-square with nu - 1 dof.

    Integrates P((Z + sqrt(lam))^2 > x - w) against the density of W with
    adaptive quadrature; usable at noncentralities where the density
    quadrature underflows.
    """
    df = nu - 1
    r = math.sqrt(lam)

    def inner(w):
        s = math.sqrt(max(x - w, 0.0))
        return special.ndtr(r - s) + special.ndtr(-r - s)

    lo = stats.chi2.ppf(1e-17, df)
    hi = min(stats.chi2.isf(1e-17, df), x)
    tail = stats.chi2.sf(x, df)
    if hi <= lo:
        return float(tail)
    v, _ = integrate.quad(lambda w: stats.chi2.pdf(w, df) * inner(w), lo, hi, epsabs=1e-14,
                          epsrel=1e-12, limit=2000, points=[df] if lo < df < hi else None)
    return float(v + tail)


def nc_chi2_poisson_sf(nu, lam, x, terms=4000):
    """Plain (linear-domain) Poisson mixture of central chi-square tails."""
    j = np.arange(terms)
    logw = -lam / 2 + j * math.log(lam / 2) - special.gammaln(j + 1) if lam > 0 else None
    w = np.exp(logw) if lam > 0 else (j == 0).astype(float)
    return float(np.sum(w * special.gammaincc(nu / 2 + j, x / 2)))


def dense_mean(config, channels, pattern, x, theta=None, alpha=None):
    """Noiseless echo vec(Y) (time-major) from the Kronecker form (I_T kron M) vec(X)."""
    from irsisac.model import Architecture, steering_vector

    theta = channels.theta if theta is None else theta
    alpha = channels.alpha if alpha is None else alpha
    phi = np.diag(pattern.coefficients)
    a = steering_vector(config.n_irs, theta)
    if config.architecture is Architecture.FULLY_PASSIVE:
        m = channels.g_r @ phi.T @ (alpha * np.outer(a, a)) @ phi @ channels.g_t
    else:
        b = steering_vector(config.m_r, theta)
        m = alpha * np.outer(b, a) @ phi @ channels.g_t
    big = np.kron(np.eye(x.shape[0]), m)
    return big @ x.reshape(-1)


def dense_snr(config, channels, pattern, r):
    """Sensing SNR from the explicit trace formulas with full matrices."""
    from irsisac.model import Architecture, steering_vector

    phi = np.diag(pattern.coefficients)
    a = steering_vector(config.n_irs, channels.theta)
    al = channels.alpha
    if config.architecture is Architecture.FULLY_PASSIVE:
        h1 = al * np.outer(a, a)
        m = channels.g_r @ phi.T @ h1 @ phi @ channels.g_t
        return float(np.real(np.trace(m @ r @ m.conj().T))) / config.sigma2
    b = steering_vector(config.m_r, channels.theta)
    h2 = al * np.outer(b, a)
    m = h2 @ phi @ channels.g_t
    sig = float(np.real(np.trace(m @ r @ m.conj().T)))
    if config.architecture is Architecture.ACTIVE:
        refl = float(np.real(np.trace(phi.conj().T @ h2.conj().T @ h2 @ phi)))
        return sig / (refl * config.sigma_z2 + config.sigma2)
    return sig / config.sigma2


def dense_fim(config, channels, pattern, x, step=1e-6):
    """3x3 FIM over [theta, Re alpha, Im alpha] from central differences of dense_mean."""
    al = channels.alpha
    th = channels.theta

    def mu(eta):
        return dense_mean(config, channels, pattern, x, eta[0], eta[1] + 1j * eta[2])

    eta0 = np.array([th, al.real, al.imag])
    h = np.array([step, step * abs(al), step * abs(al)])
    d = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = h[i]
        d.append((mu(eta0 + e) - mu(eta0 - e)) / (2 * h[i]))
    f = np.empty((3, 3))
    for i in range(3):
        for k in range(3):
            f[i, k] = 2 * np.real(np.vdot(d[i], d[k])) / config.sigma2
    return 0.5 * (f + f.T)


def exact_block(r, t_symbols):
    """Any T x M_t block whose sample covariance X^T X^* / T equals R (Cholesky-free)."""
    w, v = np.linalg.eigh(r)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((t_symbols, r.shape[0]))
                        + 1j * np.random.default_rng(1).standard_normal((t_symbols, r.shape[0])))
    return math.sqrt(t_symbols) * q @ root.T

"""Small dense linear-algebra helpers for Hermitian PSD matrices."""

import numpy as np

from .errors import SingularInnovation

PSD_TOL = 1e-10


def hermitian(a):
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def is_hermitian_psd(a, tol=PSD_TOL):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    if np.abs(a - a.conj().T).max(initial=0.0) > tol * scale:
        return False
    return bool(np.linalg.eigvalsh(hermitian(a)).min(initial=0.0) >= -tol * scale)


def psd_sqrt_factor(cov):
    """Return L with L @ L^H == cov, clipping eigenvalues below zero."""
    w, v = np.linalg.eigh(hermitian(cov))
    w = np.clip(w, 0.0, None)
    return v * np.sqrt(w)


def psd_sqrtm(cov):
    """Hermitian square root of a PSD matrix."""
    w, v = np.linalg.eigh(hermitian(cov))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def cholesky_jitter(a, attempts=3):
    """Cholesky factor of a Hermitian PD matrix with jitter escalation.

    Adds ``1e-12 * trace / M`` times the identity (times 10 on each retry) when
    the plain factorization fails.
    """
    a = hermitian(a)
    m = a.shape[0]
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    base = 1e-12 * max(abs(np.trace(a).real) / max(m, 1), np.finfo(float).tiny)
    for k in range(attempts):
        try:
            return np.linalg.cholesky(a + base * 10**k * np.eye(m))
        except np.linalg.LinAlgError:
            continue
    raise SingularInnovation("innovation covariance is singular")


def inv_psd(a):
    """Inverse of a Hermitian PD matrix via (jittered) Cholesky."""
    lower = cholesky_jitter(a)
    m = lower.shape[0]
    linv = np.linalg.solve(lower, np.eye(m))
    return hermitian(linv.conj().T @ linv)


def complex_normal(rng, cov, size=None, mean=None):
    """Draw circularly-symmetric complex Gaussian vectors CN(mean, cov).

    Real and imaginary parts each carry ``cov / 2``. ``size`` is the number of
    vectors; ``None`` returns a single vector.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=complex))
    m = cov.shape[0]
    n = 1 if size is None else int(size)
    z = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2.0)
    y = z @ psd_sqrt_factor(cov).T
    if mean is not None:
        y = y + np.asarray(mean, dtype=complex)
    return y[0] if size is None else y

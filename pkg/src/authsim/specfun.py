"""Scalar special functions for the quadratic-form tests.

The generalized Marcum Q-function is evaluated as a Poisson mixture of upper
regularized incomplete gamma functions,

    Q_M(a, b) = sum_k Pois(k; a^2/2) * Q(M + k, b^2/2),

summed over a window of ``k`` around the Poisson mode whose excluded mass is
below ``1e-13``. Since every ``Q(M + k, .)`` lies in ``[0, 1]``, the excluded
Poisson mass bounds the truncation error.
"""

import math

import numpy as np
from scipy import special, stats

from .errors import ConvergenceError, DomainError

SERIES_TAIL = 1e-13
MAX_TERMS = 100_000


def _check_order(M):
    if int(M) != M or M < 1:
        raise DomainError(f"order M must be a positive integer, got {M}")
    return int(M)


def _poisson_window(lam):
    """Index range [lo, hi] holding all but SERIES_TAIL of Pois(lam)."""
    if lam == 0.0:
        return 0, 0
    lo = int(stats.poisson.ppf(SERIES_TAIL / 2, lam))
    hi = int(stats.poisson.isf(SERIES_TAIL / 2, lam)) + 1
    lo = max(lo - 1, 0)
    if hi - lo + 1 > MAX_TERMS:
        raise ConvergenceError(
            f"Marcum Q series needs {hi - lo + 1} terms (noncentrality {lam:.3g})"
        )
    return lo, hi


def _mixture(M, a, b, fn):
    lam = 0.5 * a * a
    x = 0.5 * b * b
    if lam == 0.0:
        return float(fn(M, x))
    lo, hi = _poisson_window(lam)
    k = np.arange(lo, hi + 1)
    w = stats.poisson.pmf(k, lam)
    # renormalizing keeps the sum exact when every term is 0 or 1
    return float(np.dot(w / w.sum(), fn(M + k, x)))


def _check_args(a, b):
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError("Marcum Q arguments must be finite")
    if a < 0 or b < 0:
        raise DomainError(f"Marcum Q needs a, b >= 0 (got a={a}, b={b})")
    return a, b


def marcum_q(M, a, b):
    """Generalized Marcum Q-function ``Q_M(a, b)``.

    Tail probability ``P[chi'^2_{2M}(a^2) > b^2]`` of a non-central chi-square
    variable with ``2M`` degrees of freedom and noncentrality ``a^2``.
    """
    M = _check_order(M)
    a, b = _check_args(a, b)
    if b == 0.0:
        return 1.0
    return min(1.0, max(0.0, _mixture(M, a, b, special.gammaincc)))


def marcum_p(M, a, b):
    """Complement ``1 - Q_M(a, b)``, summed directly for small-value accuracy."""
    M = _check_order(M)
    a, b = _check_args(a, b)
    if b == 0.0:
        return 0.0
    return min(1.0, max(0.0, _mixture(M, a, b, special.gammainc)))


def marcum_q_inv_b(M, a, q, tol=1e-10):
    """Solve ``Q_M(a, b) = q`` for ``b`` by bracketing and bisection on ``b^2``.

    ``tol`` is the relative bracket width on ``b^2`` at termination.
    """
    M = _check_order(M)
    q = float(q)
    if not 0.0 < q < 1.0:
        raise DomainError(f"target probability must lie in (0, 1), got {q}")
    a, _ = _check_args(a, 0.0)
    # mean of the variable is 2M + a^2; grow the bracket until it straddles q
    lo, hi = 0.0, 2.0 * M + a * a
    while marcum_q(M, a, math.sqrt(hi)) > q:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ConvergenceError("could not bracket Marcum Q inverse")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if marcum_q(M, a, math.sqrt(mid)) > q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(hi, 1e-300):
            break
    return math.sqrt(0.5 * (lo + hi))


def inc_gamma_upper_reg(M, x):
    """Upper regularized incomplete gamma ``Q(M, x)`` for integer ``M``.

    Uses the finite sum ``exp(-x) * sum_{k<M} x^k / k!``, accumulated in log
    space so large ``x`` does not overflow.
    """
    M = _check_order(M)
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"x must be finite and non-negative, got {x}")
    if x == 0.0:
        return 1.0
    k = np.arange(M)
    logs = k * math.log(x) - x - special.gammaln(k + 1)
    return float(min(1.0, np.exp(special.logsumexp(logs))))


def gauss_q(x):
    """Gaussian tail ``Q(x) = P[Z > x]`` for standard normal ``Z``."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / math.sqrt(2.0)) + 0.0


def gauss_q_inv(p):
    """Inverse of :func:`gauss_q`.

    Starts from ``sqrt(2) * erfcinv(2p)`` and applies two Newton steps on
    ``gauss_q(x) - p``.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"gauss_q_inv needs p in (0, 1), got {p}")
    x = math.sqrt(2.0) * float(special.erfcinv(2.0 * p))
    for _ in range(2):
        pdf = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if pdf == 0.0:
            break
        x += (float(gauss_q(x)) - p) / pdf
    return x

"""Kalman prediction/update over continuous-time Gauss-Markov models.

Besides the usual mean and covariance, a belief carries ``mean_cov``: the
covariance of the estimate's mean across realizations. It starts at zero (the
prior mean is the constant 0), grows by ``K E K^H`` on every update and is
propagated like a deterministic second moment on prediction. The
channel-hardening approximation uses it to model the adversary's offset.
"""

from dataclasses import dataclass, replace

import numpy as np

from ._linalg import hermitian, inv_psd
from .errors import DimensionMismatch, TimeReversal
from .statespace import stationary_covariance, transition

UNSET = -1.0


@dataclass(frozen=True)
class GaussianBelief:
    """Kalman estimate of one state vector.

    ``t_last`` is the time of the last authenticated update (``-1`` before
    any); ``t`` is the time the moments refer to, which runs ahead of
    ``t_last`` after a prediction.
    """

    mean: np.ndarray
    cov: np.ndarray
    mean_cov: np.ndarray
    t_last: float = UNSET
    t: float = UNSET

    @property
    def is_prior(self):
        return self.t_last == UNSET


@dataclass(frozen=True)
class Innovation:
    e: np.ndarray
    cov_E: np.ndarray


def prior(model):
    """Belief before any packet: zero mean and stationary covariance."""
    n = model.n_state
    return GaussianBelief(
        mean=np.zeros(n, dtype=complex),
        cov=stationary_covariance(model),
        mean_cov=np.zeros((n, n), dtype=complex),
    )


def predict(b, model, t):
    """Predict the belief forward to time ``t``.

    A prior belief (``t_last == -1``) is stationary and returned unchanged.
    """
    t = float(t)
    if b.is_prior:
        return b
    if t < b.t_last or t < b.t:
        raise TimeReversal(f"cannot predict from t={b.t} back to t={t}")
    dt = t - b.t
    if dt == 0.0:
        return b
    phi, qdt = transition(model, dt)
    return replace(
        b,
        mean=phi @ b.mean,
        cov=hermitian(phi @ b.cov @ phi.conj().T + qdt),
        mean_cov=hermitian(phi @ b.mean_cov @ phi.conj().T),
        t=t,
    )


def innovation_covariance(b, model, g):
    c = model.output(g)
    return hermitian(c @ b.cov @ c.conj().T + model.N)


def innovation_stats(b, model, g, knowledge=None):
    """Innovation covariance ``E`` and mean-covariance ``E_underline``.

    ``knowledge`` is the adversary's output map ``C~`` (``None`` means the
    zero-knowledge ``C~ = 0``); ``E_underline = (C~ - C) Zu (C~ - C)^H``.
    """
    c = model.output(g)
    ck = np.zeros_like(c) if knowledge is None else np.asarray(knowledge, dtype=complex)
    if ck.shape != c.shape:
        raise DimensionMismatch(f"knowledge matrix {ck.shape} != output {c.shape}")
    d = ck - c
    E = innovation_covariance(b, model, g)
    E_under = hermitian(d @ b.mean_cov @ d.conj().T)
    return E, E_under


def _update(b, c, N, y, t, joseph):
    y = np.asarray(y, dtype=complex)
    if y.shape != (c.shape[0],):
        raise DimensionMismatch(f"measurement shape {y.shape} != ({c.shape[0]},)")
    E = hermitian(c @ b.cov @ c.conj().T + N)
    K = b.cov @ c.conj().T @ inv_psd(E)
    e = y - c @ b.mean
    ikc = np.eye(b.cov.shape[0]) - K @ c
    if joseph:
        cov = ikc @ b.cov @ ikc.conj().T + K @ N @ K.conj().T
    else:
        cov = ikc @ b.cov
    post = replace(
        b,
        mean=b.mean + K @ e,
        cov=hermitian(cov),
        mean_cov=hermitian(b.mean_cov + K @ E @ K.conj().T),
        t_last=float(t),
        t=float(t),
    )
    return post, Innovation(e=e, cov_E=E)


def update(b, model, g, y, t, joseph=False):
    """Measurement update with sensor ``g``'s output ``y`` at time ``t``.

    The belief must already be predicted to ``t``. Returns the posterior and
    the innovation that was used.
    """
    if not b.is_prior and b.t != float(t):
        raise TimeReversal(f"belief is at t={b.t}, predict it to t={t} first")
    return _update(b, model.output(g), model.N, y, t, joseph)


def update_stacked(b, model, sensors, ys, t, joseph=False):
    """Joint update with several sensors' measurements taken at the same ``t``.

    Stacks the output maps and uses a block-diagonal output noise.
    """
    if not b.is_prior and b.t != float(t):
        raise TimeReversal(f"belief is at t={b.t}, predict it to t={t} first")
    c = np.vstack([model.output(g) for g in sensors])
    m = model.n_output
    N = np.zeros((m * len(sensors),) * 2, dtype=complex)
    for i in range(len(sensors)):
        N[i * m:(i + 1) * m, i * m:(i + 1) * m] = model.N
    return _update(b, c, N, np.concatenate([np.asarray(y) for y in ys]), t, joseph)

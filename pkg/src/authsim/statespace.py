"""Continuous-time Gauss-Markov state-space models.

A model is ``dx/dt = A x + u`` with white input noise ``u ~ CN(0, U)`` and
per-sensor outputs ``y_g = C_g x + n`` with ``n ~ CN(0, N)``. ``A`` must be
diagonalizable and stable; every covariance is evaluated in the eigenbasis of
``A``, which makes the stationary covariance and the finite-horizon noise
integral closed-form.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import PSD_TOL, complex_normal, hermitian, is_hermitian_psd
from .errors import DimensionMismatch, NonDiagonalizable, UnknownSensor, Unstable

EIG_TOL = 1e-8


@dataclass(frozen=True)
class StateSample:
    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=complex)
        if not np.all(np.isfinite(x)):
            raise ValueError("state sample has non-finite entries")
        object.__setattr__(self, "x", x)


class StateSpaceModel:
    """Stable, diagonalizable Gauss-Markov system with one output map per sensor.

    Parameters
    ----------
    A : (n, n) array
        State matrix (units 1/time).
    U : (n, n) array
        Hermitian PSD input-noise intensity.
    outputs : sequence of (M, n) arrays
        Output matrix ``C_g`` for every sensor ``g``.
    N : (M, M) array
        Hermitian PSD output-noise covariance.

    The instance is immutable after construction; the eigendecomposition and
    the stationary covariance are computed once.
    """

    def __init__(self, A, U, outputs, N):
        A = np.atleast_2d(np.asarray(A, dtype=complex))
        U = np.atleast_2d(np.asarray(U, dtype=complex))
        N = np.atleast_2d(np.asarray(N, dtype=complex))
        outputs = tuple(np.atleast_2d(np.asarray(c, dtype=complex)) for c in outputs)
        n = A.shape[0]
        if A.shape != (n, n) or U.shape != (n, n):
            raise DimensionMismatch(f"A {A.shape} and U {U.shape} must be {n}x{n}")
        if not outputs:
            raise DimensionMismatch("at least one output matrix is required")
        m = outputs[0].shape[0]
        for c in outputs:
            if c.shape != (m, n):
                raise DimensionMismatch(f"output matrix {c.shape} != {(m, n)}")
        if N.shape != (m, m):
            raise DimensionMismatch(f"N {N.shape} must be {m}x{m}")
        if not is_hermitian_psd(U):
            raise ValueError("U must be Hermitian positive semidefinite")
        if not is_hermitian_psd(N):
            raise ValueError("N must be Hermitian positive semidefinite")

        lam, W = np.linalg.eig(A)
        if np.any(lam.real >= 0):
            raise Unstable(f"eigenvalues with non-negative real part: {lam[lam.real >= 0]}")
        try:
            Winv = np.linalg.inv(W)
        except np.linalg.LinAlgError as exc:
            raise NonDiagonalizable("eigenvector matrix is singular") from exc
        norm_a = np.linalg.norm(A)
        resid = np.linalg.norm(W @ np.diag(lam) @ Winv - A) / norm_a
        if not np.isfinite(resid) or resid > EIG_TOL:
            raise NonDiagonalizable(f"eigendecomposition residual {resid:.3e}")

        self._A = A
        self._U = hermitian(U)
        self._N = hermitian(N)
        self._outputs = outputs
        self._lam = lam
        self._W = W
        self._Winv = Winv
        # (W^-1 U W^-H) and lambda_i + conj(lambda_j), shared by all covariances
        self._U_eig = Winv @ self._U @ Winv.conj().T
        self._lam_sum = lam[:, None] + lam.conj()[None, :]
        self._X = hermitian(W @ (-self._U_eig / self._lam_sum) @ W.conj().T)
        for arr in (A, self._U, self._N, W, Winv, self._X, *outputs):
            arr.setflags(write=False)

    A = property(lambda self: self._A)
    U = property(lambda self: self._U)
    N = property(lambda self: self._N)
    outputs = property(lambda self: self._outputs)
    eigenvalues = property(lambda self: self._lam)
    eigenvectors = property(lambda self: self._W)

    @property
    def n_state(self):
        return self._A.shape[0]

    @property
    def n_output(self):
        return self._N.shape[0]

    @property
    def n_sensors(self):
        return len(self._outputs)

    def output(self, g):
        if not 0 <= g < len(self._outputs):
            raise UnknownSensor(f"sensor {g} not in 0..{len(self._outputs) - 1}")
        return self._outputs[g]

    def __repr__(self):
        return (
            f"StateSpaceModel(n_state={self.n_state}, n_output={self.n_output}, "
            f"n_sensors={self.n_sensors})"
        )


def stationary_covariance(model):
    """Stationary state covariance ``X`` solving ``A X + X A^H + U = 0``."""
    return model._X.copy()


def transition(model, dt):
    """Exact discretization over ``dt``.

    Returns ``(Phi, Qdt)`` where ``Phi = exp(A dt)`` and ``Qdt`` is the
    covariance of the accumulated input noise, ``X - Phi X Phi^H``.
    """
    dt = float(dt)
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    W, Winv = model._W, model._Winv
    phi = (W * np.exp(model._lam * dt)) @ Winv
    # -U_ij (1 - e^{s dt}) / s written with expm1 to keep small-dt accuracy
    ls = model._lam_sum
    q_eig = model._U_eig * np.expm1(ls * dt) / ls
    qdt = hermitian(W @ q_eig @ W.conj().T)
    return phi, qdt


def sample_evolve(model, s, dt, rng):
    """Propagate a state sample by ``dt`` along one realization of the SDE."""
    phi, qdt = transition(model, dt)
    if dt == 0:
        return StateSample(s.x.copy(), s.t)
    w = complex_normal(rng, qdt)
    return StateSample(phi @ s.x + w, s.t + dt)


def sample_output(model, g, s, rng, size=None):
    """Noisy measurement ``C_g x + n`` of sensor ``g``.

    With ``size`` given, returns ``size`` independent draws stacked row-wise.
    """
    c = model.output(g)
    mean = c @ s.x
    if size is None:
        return mean + complex_normal(rng, model._N)
    return complex_normal(rng, model._N, size=size, mean=mean)


def sample_stationary(model, rng, t=0.0):
    """Draw a state from the stationary distribution ``CN(0, X)``."""
    return StateSample(complex_normal(rng, model._X), t)


__all__ = [
    "PSD_TOL",
    "StateSample",
    "StateSpaceModel",
    "sample_evolve",
    "sample_output",
    "sample_stationary",
    "stationary_covariance",
    "transition",
]

"""Quadratic-form hypothesis test and its analytic acceptance probabilities.

A packet from sensor ``g`` is accepted (H0) iff both weighted innovation
energies stay strictly below their thresholds::

    e_P^H V_P e_P < eta_P   and   e_C^H V_C e_C < eta_C

For an innovation ``e ~ CN(d, E)`` the acceptance probability of one branch
is approximated in one of three ways:

chi-square
    ``1 - Q_M(sqrt(2 d^H V d / Lbar), sqrt(2 eta / Lbar))`` with ``Lbar`` the
    power mean (exponent ``alpha``) of the eigenvalues of ``V E``. Exact when
    ``V E`` is a multiple of the identity.
gaussian
    Normal with mean ``tr(V E) + d^H V d`` and variance
    ``tr((V E)^2) + 2 d^H V E V d``.
asymptotic
    The offset ``d`` is itself random, ``d ~ CN(0, E_under)``, and is folded
    into the covariance: normal with mean ``tr(V (E + E_under))`` and variance
    ``tr((V (E + E_under))^2)``.

Process and channel measurements are independent, so a transmitter's
acceptance probability is the product of its two branch probabilities.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._linalg import hermitian, inv_psd, psd_sqrtm
from .adversary import Origin, analytic_params, default_adversaries
from .errors import DegenerateSpectrum, DimensionMismatch
from .kalman import innovation_covariance, innovation_stats
from .specfun import gauss_q, marcum_p


class Method(enum.Enum):
    CHI_SQUARE = "chi_square"
    GAUSSIAN = "gaussian"
    ASYMPTOTIC = "asymptotic"


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1


@dataclass(frozen=True)
class MethodConfig:
    method: Method = Method.CHI_SQUARE
    alpha: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class ThresholdPair:
    eta_P: float
    eta_C: float

    def __post_init__(self):
        if not (self.eta_P >= 0 and self.eta_C >= 0):
            raise ValueError(f"thresholds must be non-negative: {self}")

    def as_array(self):
        return np.array([self.eta_P, self.eta_C], dtype=float)


@dataclass(frozen=True)
class BranchStats:
    """Summary of one branch's test statistic.

    ``M == 0`` marks a disabled branch, which always accepts.
    """

    M: int
    s_mean: float = 0.0
    s_var: float = 0.0
    Lbar: float = 1.0
    quad: float = 0.0
    offset: np.ndarray = None

    @property
    def disabled(self):
        return self.M == 0

    @classmethod
    def off(cls):
        return cls(M=0)


@dataclass(frozen=True)
class TransmitterStats:
    process: BranchStats
    channel: BranchStats


@dataclass(frozen=True)
class DecisionProbabilities:
    p_tn: float
    p_fn_1: float
    p_fn_2: float

    def p_fn(self, origin):
        return {Origin.ATTACKER1: self.p_fn_1, Origin.ATTACKER2: self.p_fn_2}[Origin(origin)]


def weight_matrix(belief, model, g):
    """Inverse innovation covariance ``(C Z C^H + N)^-1``."""
    return inv_psd(innovation_covariance(belief, model, g))


def test_statistic(e, V):
    """Weighted energy ``e^H V e``; ``e`` may hold one innovation per row."""
    e = np.asarray(e, dtype=complex)
    V = np.asarray(V, dtype=complex)
    s = np.sum(e.conj() * (e @ V.T), axis=-1).real
    return np.maximum(s, 0.0)


def accept(s_P, s_C, thr):
    """Vectorized acceptance; ``s_P=None`` skips a disabled process branch."""
    ok = np.asarray(s_C) < thr.eta_C
    if s_P is not None:
        ok = ok & (np.asarray(s_P) < thr.eta_P)
    return ok


def decide(s_P, s_C, thr):
    """H0 iff every active statistic is strictly below its threshold."""
    return Hypothesis.H0 if bool(accept(s_P, s_C, thr)) else Hypothesis.H1


def _whitened_spectrum(V, e_cov):
    root = psd_sqrtm(e_cov)
    return np.clip(np.linalg.eigvalsh(hermitian(root @ V @ root)), 0.0, None)


def chi_square_lbar(V, e_cov, alpha=0.5):
    """Power mean ``((1/M) sum mu_i^alpha)^(1/alpha)`` of the eigenvalues of ``V E``."""
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    e_cov = np.atleast_2d(np.asarray(e_cov, dtype=complex))
    if V.shape != e_cov.shape:
        raise DimensionMismatch(f"V {V.shape} vs covariance {e_cov.shape}")
    mu = _whitened_spectrum(V, e_cov)
    if np.all(mu <= 1e-14):
        raise DegenerateSpectrum("V E has no positive eigenvalue")
    return float(np.mean(mu**alpha) ** (1.0 / alpha))


def chi_square_accept_prob(M, Lbar, quad, eta):
    """Probability that the branch statistic falls below ``eta``."""
    if M == 0:
        return 1.0
    if math.isinf(eta):
        return 1.0
    if eta <= 0:
        return 0.0
    return marcum_p(M, math.sqrt(2.0 * max(quad, 0.0) / Lbar), math.sqrt(2.0 * eta / Lbar))


def chi_square_branch_stats(V, e_mean, e_cov, alpha=0.5):
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    d = np.asarray(e_mean, dtype=complex)
    M = V.shape[0]
    if d.shape != (M,):
        raise DimensionMismatch(f"offset {d.shape} vs dimension {M}")
    quad = float(np.real(d.conj() @ V @ d))
    return BranchStats(M=M, Lbar=chi_square_lbar(V, e_cov, alpha), quad=max(quad, 0.0), offset=d)


def gaussian_branch_stats(V, e_mean, e_cov):
    """Mean and variance of ``e^H V e`` for ``e ~ CN(e_mean, e_cov)``."""
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    E = np.atleast_2d(np.asarray(e_cov, dtype=complex))
    d = np.asarray(e_mean, dtype=complex)
    M = V.shape[0]
    if E.shape != (M, M) or d.shape != (M,):
        raise DimensionMismatch(f"V {V.shape}, E {E.shape}, offset {d.shape}")
    VE = V @ E
    Vd = V @ d
    s_mean = float(np.trace(VE).real) + float(np.real(d.conj() @ Vd))
    s_var = float(np.real(np.sum(VE * VE.T))) + 2.0 * float(np.real(Vd.conj() @ E @ Vd))
    return BranchStats(M=M, s_mean=s_mean, s_var=max(s_var, 0.0), offset=d)


def asymptotic_branch_stats(V, Y, E_under):
    """Gaussian statistics with the random offset folded into the covariance."""
    Y = np.atleast_2d(np.asarray(Y, dtype=complex))
    E_under = np.atleast_2d(np.asarray(E_under, dtype=complex))
    if Y.shape != E_under.shape:
        raise DimensionMismatch(f"Y {Y.shape} vs E_under {E_under.shape}")
    return gaussian_branch_stats(V, np.zeros(Y.shape[0], dtype=complex), Y + E_under)


def gaussian_accept_prob(stats, eta):
    if stats.disabled or math.isinf(eta):
        return 1.0
    if eta <= 0.0:
        # the statistic is non-negative, so s < eta is impossible
        return 0.0
    if stats.s_var <= 0.0:
        return 1.0 if eta > stats.s_mean else 0.0
    return float(gauss_q(-(eta - stats.s_mean) / math.sqrt(stats.s_var)))


def branch_accept_prob(stats, eta, method):
    if stats.disabled:
        return 1.0
    if Method(method) is Method.CHI_SQUARE:
        return chi_square_accept_prob(stats.M, stats.Lbar, stats.quad, eta)
    return gaussian_accept_prob(stats, eta)


def transmitter_accept_prob(tx, thr, method):
    return branch_accept_prob(tx.process, thr.eta_P, method) * branch_accept_prob(
        tx.channel, thr.eta_C, method
    )


def decision_probabilities(cfg, thr, legit, att1, att2):
    """Analytic true-negative and per-attacker false-negative rates."""
    m = cfg.method
    return DecisionProbabilities(
        p_tn=transmitter_accept_prob(legit, thr, m),
        p_fn_1=transmitter_accept_prob(att1, thr, m),
        p_fn_2=transmitter_accept_prob(att2, thr, m),
    )


def _branch_stats(cfg, spoof, V, model, bel, g, y_mean, Y, knowledge):
    c = model.output(g)
    if not spoof:
        E = innovation_covariance(bel, model, g)
        zero = np.zeros(c.shape[0], dtype=complex)
        if cfg.method is Method.CHI_SQUARE:
            return chi_square_branch_stats(V, zero, E, cfg.alpha)
        return gaussian_branch_stats(V, zero, E)
    if cfg.method is Method.CHI_SQUARE:
        return chi_square_branch_stats(V, y_mean - c @ bel.mean, Y, cfg.alpha)
    if cfg.method is Method.GAUSSIAN:
        return gaussian_branch_stats(V, y_mean - c @ bel.mean, Y)
    _, E_under = innovation_stats(bel, model, g, knowledge)
    return asymptotic_branch_stats(V, Y, E_under)


def transmitter_stats(cfg, origin, beliefs, models, g, weights, adversaries=None):
    """Per-branch statistics of transmitter ``origin`` at the predicted beliefs.

    ``beliefs`` is ``(process_belief, channel_belief)``, ``models`` is
    ``(process_model, channel_model)`` and ``weights`` is ``(V_P, V_C)``. A
    ``None`` process model disables the process branch.
    """
    origin = Origin(origin)
    adv = None
    if origin is not Origin.LEGITIMATE:
        adv = (adversaries or default_adversaries())[origin]
    stats = []
    params = analytic_params(adv, beliefs, models, g) if adv else (None,) * 4
    specs = (adv.process, adv.channel) if adv else (None, None)
    for i, (model, bel, V) in enumerate(zip(models, beliefs, weights)):
        if model is None:
            stats.append(BranchStats.off())
            continue
        knowledge = adv.knowledge(model, g) if adv else None
        stats.append(
            _branch_stats(cfg, specs[i] is not None, V, model, bel, g,
                          params[2 * i], params[2 * i + 1], knowledge)
        )
    return TransmitterStats(process=stats[0], channel=stats[1])

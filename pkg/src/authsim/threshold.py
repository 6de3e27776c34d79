"""Per-packet threshold optimization for a constant false-negative level.

Attacker 1 (infiltrated sensor) is paired with the process threshold and
attacker 2 (adversarial device) with the channel threshold. Both optimizers
drive each attacker's analytic false-negative rate to the target
``p_fn_target``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .authengine import (
    Method,
    ThresholdPair,
    branch_accept_prob,
    gaussian_accept_prob,
)
from .errors import NonResponsive
from .specfun import gauss_q_inv

CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by both optimizers.

    ``step_matrix`` fixes the 2x2 step ``B`` of the gradient iteration; when
    ``None`` it is rebuilt every iteration as the inverse Jacobian (see :func:`optimize_chi_square`).
    """

    p_fn_target: float = 0.05
    step_matrix: np.ndarray = None
    tol: float = 1e-8
    max_iter: int = 500
    warm_start: ThresholdPair = None

    def __post_init__(self):
        if not 0.0 < self.p_fn_target < 1.0:
            raise ValueError(f"p_fn_target must lie in (0, 1), got {self.p_fn_target}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class OptimizeResult:
    thresholds: ThresholdPair
    iterations: int
    p_fn: tuple
    converged: bool
    flags: list = field(default_factory=list)


def _chi_density(st, eta):
    """d/d(eta) of the chi-square branch acceptance probability."""
    if st.disabled or eta <= 0 or math.isinf(eta):
        return 0.0
    x = 2.0 * eta / st.Lbar
    nc = 2.0 * st.quad / st.Lbar
    if nc == 0.0:
        pdf = sps.chi2.pdf(x, 2 * st.M)
    else:
        pdf = sps.ncx2.pdf(x, 2 * st.M, nc)
    return float(pdf) * 2.0 / st.Lbar


def _stat_scale(st):
    """Typical magnitude of the branch statistic (its mean)."""
    if st.disabled:
        return 1.0
    return max(st.Lbar * st.M + st.quad, 1e-12)


def _p_fn(att1, att2, eta, method):
    a1 = branch_accept_prob(att1.process, eta[0], method) * branch_accept_prob(
        att1.channel, eta[1], method)
    a2 = branch_accept_prob(att2.process, eta[0], method) * branch_accept_prob(
        att2.channel, eta[1], method)
    return np.array([a1, a2])


def _jacobian(att1, att2, eta, method):
    """d(P_FN^(1), P_FN^(2)) / d(eta_P, eta_C) from the chi-square densities."""
    jac = np.zeros((2, 2))
    for row, tx in enumerate((att1, att2)):
        a_p = branch_accept_prob(tx.process, eta[0], method)
        a_c = branch_accept_prob(tx.channel, eta[1], method)
        jac[row, 0] = _chi_density(tx.process, eta[0]) * a_c
        jac[row, 1] = a_p * _chi_density(tx.channel, eta[1])
    return jac


def _newton_step(att1, att2, eta, r, active, method):
    jac = _jacobian(att1, att2, eta, method)
    scales = np.array([_stat_scale(att1.process), _stat_scale(att2.channel)])
    step = np.zeros(2)
    idx = np.flatnonzero(active)
    sub = jac[np.ix_(idx, idx)]
    if np.all(np.isfinite(sub)) and abs(np.linalg.det(sub)) > 1e-300:
        try:
            step[idx] = -np.linalg.solve(sub, r[idx])
        except np.linalg.LinAlgError:
            step[idx] = np.nan
    else:
        step[idx] = np.nan
    for i in idx:
        if not np.isfinite(step[i]):
            # flat tail: expand or shrink geometrically toward the target
            step[i] = scales[i] if r[i] < 0 else -0.5 * eta[i]
        limit = max(eta[i], scales[i])
        step[i] = float(np.clip(step[i], -limit, limit))
    return step


def _paired(att1, att2):
    if att2.channel.disabled:
        raise NonResponsive("attacker 2 has no channel branch to constrain")
    active = np.array([not att1.process.disabled, True])
    return active


def optimize_chi_square(cfg, att1, att2):
    """Gradient iteration ``eta <- eta - B (P_FN - P*)`` on the chi-square rates.

    With no fixed ``step_matrix``, ``B`` is the inverse Jacobian of
    ``(P_FN^(1), P_FN^(2))`` with respect to ``(eta_P, eta_C)``, evaluated
    analytically from the non-central chi-square density at every iterate;
    each step is capped at one statistic scale and halved until the residual
    decreases. Thresholds
    are clamped at zero. When the process branch is disabled, attacker 1 is
    left unconstrained (flag ``attacker1_unconstrained``).
    """
    method = Method.CHI_SQUARE
    target = cfg.p_fn_target
    active = _paired(att1, att2)
    flags = []
    if not active[0]:
        flags.append("attacker1_unconstrained")

    if cfg.warm_start is not None:
        eta = cfg.warm_start.as_array()
    else:
        eta = np.array([_stat_scale(att1.process), _stat_scale(att2.channel)])
    if not active[0]:
        eta[0] = 0.0

    def residual(e):
        return _p_fn(att1, att2, e, method) - target

    r = residual(eta)
    err = np.max(np.abs(r[active]))
    it = 1
    best = (err, eta.copy(), r.copy())
    while err > cfg.tol and it < cfg.max_iter:
        if cfg.step_matrix is not None:
            step = -np.asarray(cfg.step_matrix, dtype=float) @ r
        else:
            step = _newton_step(att1, att2, eta, r, active, method)
        step[~active] = 0.0
        lam = 1.0
        for _ in range(60):
            cand = np.maximum(eta + lam * step, 0.0)
            r_new = residual(cand)
            err_new = np.max(np.abs(r_new[active]))
            if err_new < err or cfg.step_matrix is not None:
                break
            lam *= 0.5
        else:
            flags.append("line_search_failed")
            break
        eta, r, err = cand, r_new, err_new
        it += 1
        if err < best[0]:
            best = (err, eta.copy(), r.copy())

    converged = best[0] <= cfg.tol
    if not converged:
        flags.append("no_convergence")
    err, eta, r = best
    return OptimizeResult(
        thresholds=ThresholdPair(float(eta[0]), float(eta[1])),
        iterations=it,
        p_fn=tuple(float(v) for v in r + target),
        converged=converged,
        flags=flags,
    )


def _ratio(target, cross):
    return target / cross if cross > 0.0 else math.inf


def _gauss_eta(st, ratio, flags, name):
    if ratio >= 1.0:
        flags.add(f"clamped_argument_{name}")
        ratio = CLAMP
    eta = st.s_mean - math.sqrt(st.s_var) * gauss_q_inv(ratio)
    if eta < 0.0:
        flags.add(f"negative_eta_{name}")
        eta = 0.0
    return eta


def optimize_gaussian(cfg, att1, att2):
    """Fixed-point threshold iteration for the Gaussian-type approximations.

    ``eta_P = s1_P - sqrt(S1_P) Qinv(P* / P1_C)`` and
    ``eta_C = s2_C - sqrt(S2_C) Qinv(P* / P2_P)``, where the cross factors
    ``P1_C`` / ``P2_P`` are the acceptance probabilities of attacker 1's channel
    branch and attacker 2's process branch at the current thresholds (both
    start at one). Works on Gaussian or asymptotic branch statistics alike.
    """
    target = cfg.p_fn_target
    active = _paired(att1, att2)
    flags = set()
    if not active[0]:
        flags.add("attacker1_unconstrained")
    cross1 = cross2 = 1.0
    eta = np.array([0.0, 0.0])
    converged = False
    it = 0
    while it < cfg.max_iter:
        it += 1
        run_flags = set()
        new = np.array([
            _gauss_eta(att1.process, _ratio(target, cross1), run_flags, "P") if active[0] else 0.0,
            _gauss_eta(att2.channel, _ratio(target, cross2), run_flags, "C"),
        ])
        cross1 = gaussian_accept_prob(att1.channel, new[1])
        cross2 = gaussian_accept_prob(att2.process, new[0])
        done = it > 1 and np.all(np.abs(new - eta) <= cfg.tol * (1.0 + np.abs(eta)))
        eta = new
        if done:
            flags |= run_flags
            converged = True
            break
    if not converged:
        flags |= run_flags
        flags.add("no_convergence")
    p = _p_fn(att1, att2, eta, Method.GAUSSIAN)
    return OptimizeResult(
        thresholds=ThresholdPair(float(eta[0]), float(eta[1])),
        iterations=it,
        p_fn=tuple(float(v) for v in p),
        converged=converged,
        flags=sorted(flags),
    )


def optimize(method_cfg, cfg, att1, att2):
    if method_cfg.method is Method.CHI_SQUARE:
        return optimize_chi_square(cfg, att1, att2)
    return optimize_gaussian(cfg, att1, att2)

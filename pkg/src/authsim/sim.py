"""Monte-Carlo evaluation of the authentication scheme.

One replication follows a single true trajectory: a shared process state and
one channel state per sensor evolve continuously, sensors transmit
round-robin (sensor ``g`` at instants ``g + nG``) and the first ``G``
instants are trusted logins. At every later instant the fusion center
predicts its beliefs, picks thresholds, scores the analytic model and a
fan-out of simulated packets from each transmitter, and finally authenticates
one fresh legitimate packet.

Random streams are Philox generators keyed by ``(seed, replication, purpose,
instant, origin)``, so results do not depend on the number of workers.
"""

import concurrent.futures
import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kalman
from .adversary import AdversaryModel, Origin, default_adversaries, generate_measurements
from .authengine import (
    DecisionProbabilities,
    Method,
    MethodConfig,
    ThresholdPair,
    accept,
    decision_probabilities,
    test_statistic,
    transmitter_stats,
    weight_matrix,
)
from .errors import ConfigError, EmptyInput
from .statespace import StateSpaceModel, sample_evolve, sample_stationary
from .threshold import OptimizerConfig, optimize

ORIGINS = (Origin.LEGITIMATE, Origin.ATTACKER1, Origin.ATTACKER2)


class _Stream(enum.IntEnum):
    SCENARIO = 0
    INIT = 1
    EVOLVE = 2
    FRESH = 3
    PACKETS = 4


@dataclass(frozen=True)
class ScenarioConfig:
    G: int = 3
    n_state_P: int = 10
    M_P: int = 4
    M_C: int = 10
    horizon: int = 400
    packets_per_instant: int = 2000
    replications: int = 1
    seed: int = 0
    p_fn_target: float = 0.05
    method: str = "chi_square"
    alpha: float = 0.5
    threshold_mode: str = "optimized"
    eta_P: float = math.inf
    eta_C: float = math.inf
    channel_structure: str = "identity"
    snr_db: float = 10.0
    full_knowledge: bool = False
    attacker_cov_scale: float = 1.0
    opt_tol: float = 1e-8
    opt_max_iter: int = 500
    warm_start: bool = True

    def __post_init__(self):
        checks = [
            (self.G >= 1, "G must be >= 1"),
            (self.horizon >= self.G, "horizon must cover the G login instants"),
            (self.packets_per_instant >= 1, "packets_per_instant must be >= 1"),
            (self.replications >= 1, "replications must be >= 1"),
            (self.M_C >= 1, "M_C must be >= 1"),
            (self.M_P >= 0, "M_P must be >= 0"),
            (self.n_state_P >= 1, "n_state_P must be >= 1"),
            (0.0 < self.p_fn_target < 1.0, "p_fn_target must lie in (0, 1)"),
            (self.alpha > 0, "alpha must be positive"),
            (self.threshold_mode in ("optimized", "fixed"), "threshold_mode is optimized|fixed"),
            (self.channel_structure in ("identity", "generalized"),
             "channel_structure is identity|generalized"),
            (self.eta_P >= 0 and self.eta_C >= 0, "fixed thresholds must be non-negative"),
            (self.seed >= 0, "seed must be non-negative"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)
        try:
            Method(self.method)
        except ValueError:
            raise ConfigError(f"unknown method {self.method!r}") from None

    @property
    def method_config(self):
        return MethodConfig(Method(self.method), self.alpha)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class Scenario:
    process: StateSpaceModel
    channel: StateSpaceModel
    adversaries: dict

    @property
    def models(self):
        return self.process, self.channel


@dataclass
class InstantRecord:
    t: int
    sensor: int
    thresholds: ThresholdPair
    analytic: DecisionProbabilities
    empirical: DecisionProbabilities
    accepted: dict
    n_packets: int
    opt_iters: int = 0
    opt_flags: list = field(default_factory=list)
    replication: int = 0


def stream(seed, *keys):
    """Independent Philox generator for a key path."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def build_scenario(cfg, rng):
    """Draw the process and channel models for one replication."""
    G = cfg.G
    process = None
    if cfg.M_P > 0:
        n = cfg.n_state_P
        a_P = rng.uniform(0.5, 1.0, n)
        U_dd = rng.uniform(-1.0, 1.0, (n, n))
        C_P = [rng.uniform(0.0, 1.0, (cfg.M_P, n)) for _ in range(G)]
        N_dd = rng.uniform(-1.0, 1.0, (cfg.M_P, cfg.M_P))
        process = StateSpaceModel(
            A=-(0.2 / G) * np.diag(a_P),
            U=(0.2 / G) * U_dd @ U_dd.T,
            outputs=C_P,
            N=0.01 * N_dd @ N_dd.T,
        )

    m = cfg.M_C
    a_C = -math.log(2.0) * 1e-2 / G
    if cfg.channel_structure == "identity":
        a_dd = np.ones(m)
        u_dd = np.ones(m)
    else:
        a_dd = rng.uniform(0.5, 1.5, m)
        u_dd = rng.uniform(0.0, 2.0, m)
    A_C = a_C * np.diag(a_dd)
    U_C = -2.0 * a_C * np.diag(u_dd)
    C_C = [np.eye(m) for _ in range(G)]
    # per-antenna stationary signal power sets the noise for the requested SNR
    probe = StateSpaceModel(A_C, U_C, C_C, np.eye(m))
    X_C = probe._X
    power = np.real(np.diag(C_C[0] @ X_C @ C_C[0].conj().T))
    N_C = 10.0 ** (-cfg.snr_db / 10.0) * np.diag(power)
    channel = StateSpaceModel(A_C, U_C, C_C, N_C)

    adversaries = default_adversaries(cfg.full_knowledge)
    if cfg.attacker_cov_scale != 1.0:
        adversaries = {
            Origin.ATTACKER1: AdversaryModel.infiltrated_sensor(cfg.attacker_cov_scale,
                                                                cfg.full_knowledge),
            Origin.ATTACKER2: AdversaryModel.device(cfg.attacker_cov_scale, cfg.full_knowledge),
        }
    return Scenario(process, channel, adversaries)


def _statistics(y, model, bel, g, V):
    if model is None:
        return None
    e = y - model.output(g) @ bel.mean
    return test_statistic(e, V)


def run_replication(cfg, rep=0):
    """Simulate one replication; returns one record per authentication instant."""
    seed = cfg.seed
    scen = build_scenario(cfg, stream(seed, rep, _Stream.SCENARIO))
    pmodel, cmodel = scen.models
    mcfg = cfg.method_config
    n_pk = cfg.packets_per_instant

    rng = stream(seed, rep, _Stream.INIT)
    x_P = sample_stationary(pmodel, rng) if pmodel is not None else None
    x_C = [sample_stationary(cmodel, rng) for _ in range(cfg.G)]
    pbel = kalman.prior(pmodel) if pmodel is not None else None
    cbel = [kalman.prior(cmodel) for _ in range(cfg.G)]

    records = []
    # warm starts are kept per sensor: consecutive instants belong to different sensors
    prev_thr = [None] * cfg.G
    for t in range(cfg.horizon):
        if t > 0:
            rng = stream(seed, rep, _Stream.EVOLVE, t)
            if pmodel is not None:
                x_P = sample_evolve(pmodel, x_P, 1.0, rng)
            x_C = [sample_evolve(cmodel, xc, 1.0, rng) for xc in x_C]
        g = t % cfg.G
        truths = (x_P.x if x_P is not None else None, [xc.x for xc in x_C])
        p_t = kalman.predict(pbel, pmodel, t) if pmodel is not None else None
        c_t = kalman.predict(cbel[g], cmodel, t)

        if t >= cfg.G:
            records.append(_authenticate(cfg, mcfg, scen, rep, t, g, truths, (p_t, c_t),
                                         prev_thr[g], n_pk))
            prev_thr[g] = records[-1].thresholds

        rng = stream(seed, rep, _Stream.FRESH, t)
        y_P, y_C = generate_measurements(Origin.LEGITIMATE, scen.models, truths, g, rng, 1)
        if pmodel is not None:
            pbel, _ = kalman.update(p_t, pmodel, g, y_P[0], t)
        cbel[g], _ = kalman.update(c_t, cmodel, g, y_C[0], t)
    return records


def _authenticate(cfg, mcfg, scen, rep, t, g, truths, beliefs, prev_thr, n_pk):
    pmodel, cmodel = scen.models
    p_t, c_t = beliefs
    V_P = weight_matrix(p_t, pmodel, g) if pmodel is not None else None
    V_C = weight_matrix(c_t, cmodel, g)
    weights = (V_P, V_C)
    tx = {o: transmitter_stats(mcfg, o, beliefs, scen.models, g, weights, scen.adversaries)
          for o in ORIGINS}

    iters, flags = 0, []
    if cfg.threshold_mode == "fixed":
        thr = ThresholdPair(cfg.eta_P, cfg.eta_C)
    else:
        ocfg = OptimizerConfig(
            p_fn_target=cfg.p_fn_target, tol=cfg.opt_tol, max_iter=cfg.opt_max_iter,
            warm_start=prev_thr if cfg.warm_start else None,
        )
        res = optimize(mcfg, ocfg, tx[Origin.ATTACKER1], tx[Origin.ATTACKER2])
        thr, iters, flags = res.thresholds, res.iterations, list(res.flags)
        if not res.converged and prev_thr is not None:
            thr = prev_thr
            flags.append("fallback_warm_start")
    analytic = decision_probabilities(mcfg, thr, tx[Origin.LEGITIMATE], tx[Origin.ATTACKER1],
                                      tx[Origin.ATTACKER2])

    accepted = {}
    for origin in ORIGINS:
        rng = stream(cfg.seed, rep, _Stream.PACKETS, t, origin)
        y_P, y_C = generate_measurements(origin, scen.models, truths, g, rng, n_pk,
                                         scen.adversaries)
        s_P = _statistics(y_P, pmodel, p_t, g, V_P)
        s_C = _statistics(y_C, cmodel, c_t, g, V_C)
        accepted[origin] = int(np.count_nonzero(accept(s_P, s_C, thr)))
    empirical = DecisionProbabilities(*(accepted[o] / n_pk for o in ORIGINS))
    return InstantRecord(
        t=t, sensor=g, thresholds=thr, analytic=analytic, empirical=empirical,
        accepted={o.name.lower(): accepted[o] for o in ORIGINS}, n_packets=n_pk,
        opt_iters=iters, opt_flags=flags, replication=rep,
    )


def run(cfg, workers=None):
    """Run every replication; records are ordered by replication, then time."""
    reps = range(cfg.replications)
    if workers is None or workers <= 1 or cfg.replications == 1:
        out = [run_replication(cfg, r) for r in reps]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(run_replication, [cfg] * len(reps), reps))
    return [rec for chunk in out for rec in chunk]


def summarize(records):
    """Time- and replication-averaged analytic and empirical rates."""
    if not records:
        raise EmptyInput("no records to summarize")
    out = {}
    for kind in ("analytic", "empirical"):
        for name in ("p_tn", "p_fn_1", "p_fn_2"):
            vals = np.array([getattr(getattr(r, kind), name) for r in records])
            out[f"{name}_{kind}_mean"] = float(vals.mean())
            out[f"{name}_{kind}_std"] = float(vals.std())
    out["n_instants"] = len(records)
    return out


def sweep(cfg, param, values, methods=None, workers=None):
    """Re-run ``cfg`` for each value of ``param`` (``m_c`` or ``eta``) and method."""
    methods = list(methods) if methods else [cfg.method]
    rows = []
    for value in values:
        if param == "m_c":
            base = cfg.replace(M_C=int(value))
        elif param == "eta":
            base = cfg.replace(threshold_mode="fixed", eta_P=float(value), eta_C=float(value))
        else:
            raise ConfigError(f"unknown sweep parameter {param!r}")
        for m in methods:
            recs = run(base.replace(method=m), workers=workers)
            rows.append({"param": param, "value": value, "method": m, **summarize(recs)})
    return rows


def empirical_cdf(values):
    """Right-continuous empirical CDF as sorted ``(x, F(x))`` steps."""
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise EmptyInput("empirical_cdf needs at least one value")
    xs, counts = np.unique(v, return_counts=True)
    F = np.cumsum(counts) / v.size
    return [(float(x), float(f)) for x, f in zip(xs, F)]

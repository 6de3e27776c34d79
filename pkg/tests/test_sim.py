import math

import numpy as np
import pytest

from authsim.errors import ConfigError, EmptyInput
from authsim.sim import (
    ScenarioConfig,
    build_scenario,
    empirical_cdf,
    run,
    run_replication,
    stream,
    summarize,
    sweep,
)
from authsim.statespace import stationary_covariance

SMALL = ScenarioConfig(G=3, M_P=2, n_state_P=4, M_C=4, horizon=24, packets_per_instant=400, seed=3)
CHANNEL_ONLY = ScenarioConfig(G=1, M_P=0, M_C=10, horizon=51, packets_per_instant=2000,
                              replications=3, seed=5)


def test_identity_channel_parameters():
    scen = build_scenario(ScenarioConfig(G=1, M_C=6), stream(0, 0))
    a = -math.log(2) * 1e-2
    np.testing.assert_allclose(scen.channel.A, a * np.eye(6), atol=1e-15)
    np.testing.assert_allclose(stationary_covariance(scen.channel), np.eye(6), atol=1e-12)
    np.testing.assert_allclose(scen.channel.N, 0.1 * np.eye(6), atol=1e-12)


def test_generalized_channel_structure():
    cfg = ScenarioConfig(G=2, M_C=5, channel_structure="generalized")
    scen = build_scenario(cfg, stream(0, 0))
    a = -math.log(2) * 1e-2 / 2
    a_dd = np.real(np.diag(scen.channel.A)) / a
    u_dd = np.real(np.diag(scen.channel.U)) / (-2 * a)
    assert np.all((0.5 <= a_dd) & (a_dd <= 1.5)) and np.all((0 <= u_dd) & (u_dd <= 2))
    # with unit draws this collapses to the identity structure: X = diag(u / a)
    np.testing.assert_allclose(np.diag(stationary_covariance(scen.channel)).real, u_dd / a_dd)


def test_process_scale_for_three_sensors():
    scen = build_scenario(ScenarioConfig(G=3), stream(0, 0))
    d = np.real(np.diag(scen.process.A))
    assert np.all((d >= -0.2 / 3) & (d <= -0.1 / 3))
    assert scen.process.n_sensors == 3 and scen.process.n_output == 4


def test_infinite_thresholds_accept_everything():
    recs = run(SMALL.replace(threshold_mode="fixed"))
    assert len(recs) == SMALL.horizon - SMALL.G
    for r in recs:
        assert (r.empirical.p_tn, r.empirical.p_fn_1, r.empirical.p_fn_2) == (1.0, 1.0, 1.0)


def test_zero_thresholds_reject_everything():
    recs = run(SMALL.replace(threshold_mode="fixed", eta_P=0.0, eta_C=0.0))
    for r in recs:
        assert (r.empirical.p_tn, r.empirical.p_fn_1, r.empirical.p_fn_2) == (0.0, 0.0, 0.0)
        assert r.analytic.p_tn == 0.0


def test_round_robin_schedule():
    recs = run_replication(SMALL)
    assert [r.t for r in recs] == list(range(3, 24))
    assert [r.sensor for r in recs] == [t % 3 for t in range(3, 24)]


def test_channel_only_hits_target():
    s = summarize(run(CHANNEL_ONLY))
    assert abs(s["p_fn_2_empirical_mean"] - 0.05) <= 0.01
    assert s["p_fn_2_analytic_std"] <= 1e-6


def test_optimized_security_is_constant_and_fixed_is_not():
    cfg = SMALL.replace(horizon=60, packets_per_instant=50)
    recs = run(cfg)
    assert all(not r.opt_flags for r in recs)
    s = summarize(recs)
    assert s["p_fn_1_analytic_std"] <= 1e-6 and s["p_fn_2_analytic_std"] <= 1e-6
    eta = recs[-1].thresholds
    fixed = summarize(run(cfg.replace(threshold_mode="fixed", eta_P=eta.eta_P, eta_C=eta.eta_C)))
    assert fixed["p_fn_1_analytic_std"] > 1e-3 and fixed["p_fn_2_analytic_std"] > 1e-3


@pytest.mark.parametrize("method", ["gaussian", "asymptotic"])
def test_other_methods_run(method):
    recs = run(SMALL.replace(method=method))
    assert all(0.0 <= r.analytic.p_fn_2 <= 1.0 for r in recs)


def test_warm_start_reduces_iterations():
    cfg = SMALL.replace(horizon=90, packets_per_instant=10)
    warm = [r.opt_iters for r in run(cfg)]
    cold = [r.opt_iters for r in run(cfg.replace(warm_start=False))]
    assert np.median(warm) < np.median(cold)


def test_deterministic_and_worker_independent():
    cfg = SMALL.replace(replications=2, horizon=9)
    a = run(cfg)
    b = run(cfg, workers=2)
    assert [(r.t, r.thresholds, r.accepted) for r in a] == [(r.t, r.thresholds, r.accepted)
                                                             for r in b]
    c = run(cfg.replace(seed=4))
    assert [r.accepted for r in a] != [r.accepted for r in c]


def test_sweep_rows():
    rows = sweep(SMALL.replace(horizon=6), "m_c", [1, 2], ["chi_square", "gaussian"])
    assert len(rows) == 4
    assert {(r["value"], r["method"]) for r in rows} == {(1, "chi_square"), (1, "gaussian"),
                                                         (2, "chi_square"), (2, "gaussian")}
    zero = sweep(SMALL.replace(horizon=6), "eta", [0.0])[0]
    assert zero["p_tn_empirical_mean"] == zero["p_fn_1_empirical_mean"] == 0.0
    with pytest.raises(ConfigError):
        sweep(SMALL, "snr", [1])


def test_config_validation():
    with pytest.raises(ConfigError):
        ScenarioConfig(method="bogus")
    with pytest.raises(ConfigError):
        ScenarioConfig(G=3, horizon=2)
    with pytest.raises(ConfigError):
        ScenarioConfig(p_fn_target=0.0)


def test_empirical_cdf_examples(rng):
    assert empirical_cdf([0.5]) == [(0.5, 1.0)]
    assert empirical_cdf([0.1, 0.1, 0.3]) == [(0.1, pytest.approx(2 / 3)), (0.3, 1.0)]
    u = rng.uniform(size=10_000)
    xs, F = np.array(empirical_cdf(u)).T
    assert np.max(np.abs(F - xs)) <= 0.03
    with pytest.raises(EmptyInput):
        empirical_cdf([])
    with pytest.raises(EmptyInput):
        summarize([])

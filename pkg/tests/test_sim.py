import json
import os

import numpy as np
import pytest

from armaml.core import ArmaOrder, ArmaParams, PreconditionError, TimeSeries, validate_params
from armaml.multistart import MultistartConfig, fit_multistart
from armaml.poly import min_cross_distance, params_root_set
from armaml.sim import (
    GeneratorSpec,
    bonferroni_level,
    bootstrap_estimates,
    random_generator,
    replicate_seed,
    run_bootstrap_refit,
    run_consistency_study,
    run_coverage_study,
    run_improvement_study,
    run_lr_null_study,
    simulate,
)

N = 100_000


def acf1(x):
    x = x - x.mean()
    return float(x[1:] @ x[:-1] / (x @ x))


def test_white_noise_variance():
    x = simulate(GeneratorSpec(ArmaOrder(0, 0), ArmaParams(sigma2=2.5), N, seed=0)).values
    assert abs(x.var() / 2.5 - 1) < 0.02


def test_ar1_autocorrelation():
    x = simulate(GeneratorSpec(ArmaOrder(1, 0), ArmaParams([0.5], []), N, seed=1)).values
    assert abs(acf1(x) - 0.5) < 0.01


def test_ma1_autocorrelation():
    # rho1 = theta / (1 + theta^2)
    x = simulate(GeneratorSpec(ArmaOrder(0, 1), ArmaParams([], [0.4]), N, seed=2)).values
    assert abs(acf1(x) - 0.4 / 1.16) < 0.01


def test_mean_and_reproducibility():
    spec = GeneratorSpec(ArmaOrder(1, 1), ArmaParams([0.3], [0.2], 1.0, 10.0), 500, seed=3)
    a, b = simulate(spec), simulate(spec)
    np.testing.assert_array_equal(a.values, b.values)
    assert abs(a.mean() - 10) < 0.3
    c = simulate(GeneratorSpec(spec.order, spec.params, 500, seed=4))
    assert not np.array_equal(a.values, c.values)


def test_invalid_generator_raises():
    with pytest.raises(PreconditionError):
        simulate(GeneratorSpec(ArmaOrder(1, 0), ArmaParams([1.0], []), 10))
    with pytest.raises(ValueError):
        simulate(GeneratorSpec(ArmaOrder(0, 0), ArmaParams(), 0))


def test_random_generator_constraints():
    rng = np.random.default_rng(5)
    for _ in range(200):
        order = ArmaOrder(int(rng.integers(0, 4)), int(rng.integers(0, 4)))
        spec = random_generator(order, rng, 50)
        assert validate_params(spec.params, order).valid
        assert spec.params.sigma2 == 1.0 and spec.params.mean == 0.0
        assert min_cross_distance(params_root_set(spec.params.phi, spec.params.theta)) >= 0.1 - 1e-9


def test_replicate_seed_is_stable_and_distinct():
    assert replicate_seed(1, 2, 3) == replicate_seed(1, 2, 3)
    assert len({replicate_seed(1, k) for k in range(100)}) == 100
    assert 0 <= replicate_seed(7, 0) < 2**63


def test_bonferroni_level():
    assert bonferroni_level(0.95, 1) == 0.95
    assert bonferroni_level(0.95, 5) == pytest.approx(0.99)


def test_improvement_report_and_write(tmp_path):
    rep = run_improvement_study(ns=(30,), orders=((1, 1),), replicates=4, cfg=MultistartConfig(M=2), seed=1)
    assert len(rep.rows) == 4 and len(rep.summary) == 1
    s = rep.summary[0]
    assert 0 <= s["prop_improved"] <= 1 and s["dominance_violations"] == 0
    paths = rep.write(str(tmp_path), manifest={"command": "x", "timing": {"wall_time_s": 1.0}})
    assert all(os.path.exists(p) for p in paths.values())
    doc = json.load(open(paths["summary_json"]))
    assert doc["kind"] == "improvement" and "runtime_s" not in doc["metadata"]
    assert "wall_time_s" in doc["timing"] and "timing" not in doc["manifest"]
    assert doc["metadata"]["multistart"]["M"] == 2


def test_parallel_equals_serial():
    kw = dict(ns=(30,), orders=((1, 1), (2, 1)), replicates=3, cfg=MultistartConfig(M=2), seed=2)
    a = run_improvement_study(n_jobs=1, **kw)
    b = run_improvement_study(n_jobs=2, **kw)
    strip = lambda rows: [{k: v for k, v in r.items() if not k.startswith("time_")} for r in rows]
    assert strip(a.rows) == strip(b.rows)
    assert json.dumps(a.summary) == json.dumps(b.summary)  # nan-safe


def test_coverage_rows():
    gens = [("ar1", ArmaOrder(1, 0), ArmaParams([0.5], []))]
    rep = run_coverage_study(gens, ns=(60,), replicates=3, cfg=MultistartConfig(M=2), seed=3)
    assert len(rep.rows) == 3 and {r["method"] for r in rep.summary} == {"fisher", "profile"}
    for r in rep.summary:
        assert 0 <= r["coverage"] <= 1
    assert rep.rows[0]["per_param_level"] == 0.95


def test_consistency_rows():
    rep = run_consistency_study(orders=((1, 1),), n=60, replicates=2, Ms=(1, 3), max_p=1, max_q=1, seed=4)
    assert len(rep.rows) == 4
    assert [r["M"] for r in rep.rows[:2]] == [1, 3]
    assert rep.rows[1]["dominance_violations"] == 0
    assert all(0 <= s["prop_consistent"] <= 1 for s in rep.summary)


def test_bootstrap_zero_and_some_replicates():
    order = ArmaOrder(1, 0)
    x = simulate(GeneratorSpec(order, ArmaParams([0.6], []), 80, seed=5))
    fit = fit_multistart(x, order)
    empty = run_bootstrap_refit(x, [("ar1", fit)], ArmaOrder(1, 0), replicates=0)
    assert empty.rows == [] and empty.summary == []
    rep = run_bootstrap_refit(x, [("ar1", fit)], ArmaOrder(1, 0), replicates=5, bins=4, seed=6)
    est = bootstrap_estimates(rep, "ar1", "phi1")
    assert est.size == 5 and np.all(np.abs(est) < 1)
    assert sum(r["count"] for r in rep.summary) == 5


def test_lr_null_small():
    rep = run_lr_null_study(ArmaOrder(1, 0), ArmaOrder(2, 0), ArmaParams([0.5], []), n=80, replicates=6, seed=7)
    s = rep.summary[0]
    assert s["negative_deltas"] == 0 and 0 <= s["rejection_rate"] <= 1
    assert all(r["delta"] >= -1e-6 for r in rep.rows)

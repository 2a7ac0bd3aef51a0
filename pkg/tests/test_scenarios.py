import csv

import numpy as np
import pytest

from watercge.errors import ContractError, SolverError
from watercge.scenarios import (
    MARKET, TARGETED, ScenarioSpec, apply_shock, run_sweep, scenario_specs, sensitivity_rainfed,
    sensitivity_valuation, write_sweep,
)
from watercge.solve import SolverConfig

SHORT = [-0.4, 0.0, 0.4]


def test_specs_from_config(cfg):
    specs = scenario_specs(cfg)
    assert sorted(specs) == ["A1", "A2", "A3", "A4", "A5", "B"]
    assert specs["A2"].targets == ("PAPER",) and specs["A2"].kind == TARGETED
    assert specs["B"].kind == MARKET and specs["B"].water_mobile
    assert specs["B"].grid == tuple(round(0.1 * k, 12) for k in range(-4, 5))


@pytest.mark.parametrize("kw, needle", [
    (dict(kind="other"), "kind"),
    (dict(kind=TARGETED), "names no industry"),
    (dict(kind=MARKET, grid=(0.5,)), "outside"),
    (dict(kind=MARKET, grid=(0.1, 0.1)), "duplicate"),
    (dict(kind=MARKET, grid=()), "empty"),
])
def test_spec_validation(kw, needle):
    with pytest.raises(ContractError, match=needle):
        ScenarioSpec("X", **kw)


def test_targeted_shock_is_isolated(model_a, cfg):
    spec = scenario_specs(cfg)["A3"]
    exo = apply_shock(model_a.exo, spec, -0.25)
    for key, v in model_a.exo.qfs_fixed.items():
        if key == ("WAT", "MINE"):
            assert exo.qfs_fixed[key] == pytest.approx(0.75 * v)
        else:
            assert exo.qfs_fixed[key] == v
    assert exo.qfs_mobile == model_a.exo.qfs_mobile
    assert exo.cpi_target == model_a.exo.cpi_target


def test_market_shock_scales_the_pool(model_b, cfg):
    spec = scenario_specs(cfg)["B"]
    exo = apply_shock(model_b.exo, spec, 0.3)
    assert exo.qfs_mobile["WAT"] == pytest.approx(1.3 * model_b.exo.qfs_mobile["WAT"])
    assert exo.qfs_fixed == model_b.exo.qfs_fixed
    with pytest.raises(ContractError):
        apply_shock(model_b.exo, spec, -1.0)


def test_mismatched_mobility_rejected(model_a, cfg):
    with pytest.raises(ContractError, match="mobility"):
        run_sweep(model_a, scenario_specs(cfg)["B"])


def test_targeted_sweep_moves_only_target_water(sweeps, model_a):
    res = sweeps["A5"]
    users = model_a.sets.users_of("WAT")
    for p in res.solved:
        for i in users:
            base = res.benchmark.metrics.water_volume[i]
            want = base * (1 + p.shock) if i == "POWER" else base
            assert p.metrics.water_volume[i] == pytest.approx(want, rel=1e-9)


def test_sweep_grid_is_symmetric(sweeps):
    for res in sweeps.values():
        shocks = [p.shock for p in res.points]
        assert shocks == sorted(shocks)
        assert shocks == [-s for s in reversed(shocks)]
        assert not res.failures


def test_scarcity_raises_water_prices(sweeps):
    prices = [p.metrics.market_water_price for p in sweeps["B"].points]
    assert all(a > b for a, b in zip(prices, prices[1:]))
    for name in ("A1", "A2", "A3", "A4", "A5"):
        res = sweeps[name]
        target = res.spec.targets[0]
        wfs = [p.metrics.water_price[target] for p in res.points]
        assert all(a > b for a, b in zip(wfs, wfs[1:])), name


def test_benchmark_point_replicates(sweeps, model_b):
    p = sweeps["B"].benchmark
    assert p.report.iterations == 0
    assert np.array_equal(p.state.x, model_b.state.x)


def test_warm_and_cold_starts_agree(model_b, cfg):
    spec = scenario_specs(cfg, SHORT)["B"]
    warm = run_sweep(model_b, spec)
    cold = run_sweep(model_b, spec, warm_start=False)
    par = run_sweep(model_b, spec, parallel=True)
    for a, b, c in zip(warm.points, cold.points, par.points):
        assert np.allclose(a.state.x, b.state.x, rtol=1e-7, atol=1e-9)
        assert np.array_equal(a.state.x, c.state.x)


def test_point_failures_are_recorded(model_b, cfg):
    spec = scenario_specs(cfg, SHORT)["B"]
    res = run_sweep(model_b, spec, SolverConfig(max_iter=1))
    assert [p.shock for p in res.failures] == [-0.4, 0.4]
    assert res.benchmark.ok
    assert res.summary()["failed_points"] == 2
    assert all("iterations" in p.error for p in res.failures)


def test_benchmark_failure_raises(model_b, cfg):
    spec = scenario_specs(cfg, SHORT)["B"]
    exo = model_b.exo.with_(cpi_target=3.0)
    cm = type(model_b)(model_b.benchmark, model_b.settings, model_b.params, exo, model_b.model.with_exogenous(exo))
    with pytest.raises(SolverError, match="benchmark"):
        run_sweep(cm, spec, SolverConfig(max_iter=0))


def test_write_sweep_layout(sweeps, tmp_path):
    root = write_sweep(sweeps["A2"], tmp_path)
    assert (root / "+0.0000" / "state.csv").exists()
    assert (root / "-0.4000" / "report.txt").read_text().startswith("converged")
    rows = list(csv.reader(open(root / "metrics.csv")))
    assert len(rows) == 1 + 9
    summary = dict(r for r in csv.reader(open(root / "summary.csv")))
    assert {"mmr_GDP", "median_gini", "failed_points"} <= set(summary)


def test_rainfed_baseline_share_gives_zero_deltas(cfg):
    rows, sweeps = sensitivity_rainfed(cfg, [cfg.data.irrigated_share], SHORT)
    assert len(rows) == 3 and all(r.delta == 0.0 for r in rows)
    with pytest.raises(ContractError):
        sensitivity_rainfed(cfg, [1.0], SHORT)


def test_valuation_deltas_replay_from_sweeps(cfg):
    rows, sweeps = sensitivity_valuation(cfg, [1.0, 2.0], SHORT)
    assert rows[0].delta_gdp == 0.0 and rows[0].delta_yhh == 0.0
    replay = sweeps[2.0].marginal_response("GDP") - sweeps[1.0].marginal_response("GDP")
    assert rows[1].delta_gdp == replay
    with pytest.raises(ContractError):
        sensitivity_valuation(cfg, [0.5], SHORT)

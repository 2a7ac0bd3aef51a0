"""Water-shock experiments: targeted (A1..A5), market (B), and sensitivity studies."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .accounts import Sam, load_sam
from .augment import AugmentInputs, WaterRateTable, augment_sam, load_water_flows, load_water_rates
from .calibrate import CalibratedModel, CalibrationSettings, calibrate
from .config import ModelConfig
from .core.params import Exogenous
from .core.state import SolutionState
from .errors import ContractError, SolverError
from .metrics import (
    MetricBundle, MetricTable, gini_abs_output_change, median_gini, median_marginal_response, metric_bundle,
)
from .solve import SolveReport, SolverConfig, solve

log = logging.getLogger(__name__)

TARGETED = "targeted"
MARKET = "market"
MAX_SHOCK = 0.4


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    kind: str  # TARGETED or MARKET
    targets: tuple = ()  # industries whose water endowment is shocked (targeted only)
    grid: tuple = (-0.4, -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3, 0.4)
    water: str = "WAT"

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if self.kind not in (TARGETED, MARKET):
            raise ContractError(f"unknown scenario kind {self.kind!r}")
        if self.kind == TARGETED and not self.targets:
            raise ContractError(f"targeted scenario {self.name!r} names no industry")
        if not self.grid:
            raise ContractError("empty shock grid")
        bad = [g for g in self.grid if not -MAX_SHOCK - 1e-12 <= g <= MAX_SHOCK + 1e-12]
        if bad:
            raise ContractError(f"shocks outside [-{MAX_SHOCK}, {MAX_SHOCK}]: {bad}")
        if len(set(self.grid)) != len(self.grid):
            raise ContractError("duplicate shock levels in grid")

    @property
    def water_mobile(self) -> bool:
        return self.kind == MARKET

    def with_grid(self, grid) -> "ScenarioSpec":
        return ScenarioSpec(self.name, self.kind, self.targets, tuple(grid), self.water)


def scenario_specs(cfg: ModelConfig, grid=None) -> dict[str, ScenarioSpec]:
    """A1..An from the config target table plus the market scenario B."""
    g = tuple(grid if grid is not None else cfg.scenarios.grid)
    w = cfg.closure.water
    out = {name: ScenarioSpec(name, TARGETED, tuple(t), g, w) for name, t in sorted(cfg.scenarios.targets.items())}
    out["B"] = ScenarioSpec("B", MARKET, (), g, w)
    return out


def apply_shock(exo: Exogenous, spec: ScenarioSpec, dw: float) -> Exogenous:
    """Scale the shocked water endowment(s) by (1 + dw); everything else is untouched."""
    if dw <= -1:
        raise ContractError(f"water shock {dw} would remove all water")
    w = spec.water
    if spec.kind == MARKET:
        if w not in exo.qfs_mobile:
            raise ContractError(f"scenario {spec.name!r} needs mobile water; the model has none")
        base = exo.qfs_mobile[w]
        if not base > 0:
            raise ContractError("economy-wide water endowment must be positive")
        return exo.with_(qfs_mobile={**exo.qfs_mobile, w: base * (1 + dw)})
    fixed = dict(exo.qfs_fixed)
    for i in spec.targets:
        if (w, i) not in fixed:
            raise ContractError(f"industry {i!r} has no fixed water endowment")
        if not fixed[(w, i)] > 0:
            raise ContractError(f"water endowment of {i!r} must be positive")
        fixed[(w, i)] = fixed[(w, i)] * (1 + dw)
    return exo.with_(qfs_fixed=fixed)


@dataclass
class SweepPoint:
    shock: float
    state: SolutionState | None
    report: SolveReport | None
    metrics: MetricBundle | None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.state is not None


@dataclass
class SweepResult:
    spec: ScenarioSpec
    points: list = field(default_factory=list)  # sorted by shock

    @property
    def benchmark(self) -> SweepPoint:
        return self.point(0.0)

    def point(self, shock: float) -> SweepPoint:
        for p in self.points:
            if p.shock == shock:
                return p
        raise KeyError(shock)

    @property
    def solved(self) -> list:
        return [p for p in self.points if p.ok]

    @property
    def failures(self) -> list:
        return [p for p in self.points if not p.ok]

    def series(self, name: str) -> list:
        return [(p.shock, p.metrics.get(name)) for p in self.solved]

    def change(self, name: str, shock: float) -> float:
        return self.point(shock).metrics.get(name) - self.benchmark.metrics.get(name)

    def marginal_response(self, name: str) -> float:
        pts = self.solved
        return median_marginal_response([p.metrics.total_water for p in pts], [p.metrics.get(name) for p in pts])

    def median_gini(self) -> float:
        base = self.benchmark.metrics.output
        return median_gini(base, [p.metrics.output for p in self.solved if p.shock != 0.0])

    def gini(self, shock: float) -> float:
        return gini_abs_output_change(self.benchmark.metrics.output, self.point(shock).metrics.output)

    def table(self) -> MetricTable:
        t = MetricTable(tuple(self.benchmark.metrics.incomes))
        for p in self.points:
            if p.ok:
                t.add(p.shock, p.metrics, self.gini(p.shock))
            else:
                t.add(p.shock, None, None, "failed")
        return t

    def summary(self) -> dict:
        """Median marginal responses (per m3) and median output Gini."""
        out = {}
        if len(self.solved) >= 2:
            for name in ("GDP", "TABS") + tuple("Y" + a for a in self.benchmark.metrics.incomes):
                out[f"mmr_{name}"] = self.marginal_response(name)
        if any(p.shock != 0.0 for p in self.solved):
            out["median_gini"] = self.median_gini()
        out["failed_points"] = len(self.failures)
        return out

    def describe(self) -> str:
        lines = [f"scenario {self.spec.name} ({self.spec.kind})"]
        for p in self.points:
            if p.ok:
                m = p.metrics
                wfm = f" WFM={m.market_water_price:.6g}" if m.market_water_price is not None else ""
                lines.append(f"  dw={p.shock:+.2f} GDP={m.GDP:.6f} TABS={m.TABS:.6f} "
                             f"TB={m.trade_balance:.6f} water={m.total_water:.6g}{wfm}")
            else:
                lines.append(f"  dw={p.shock:+.2f} FAILED: {p.error}")
        return "\n".join(lines)


def _solve_point(cm: CalibratedModel, spec: ScenarioSpec, dw: float, x0, cfg: SolverConfig) -> SweepPoint:
    exo = apply_shock(cm.exo, spec, dw)
    model = cm.model.with_exogenous(exo)
    try:
        st, rep = solve(model, x0, cfg)
    except SolverError as err:
        return SweepPoint(dw, None, err.report, None, str(err))
    return SweepPoint(dw, st, rep, metric_bundle(st, cm.sets, cm.params, exo, spec.water))


def _half_sweep(cm, spec, shocks, start, cfg, warm_start):
    out = []
    x0 = start
    for dw in shocks:
        p = _solve_point(cm, spec, dw, x0 if warm_start else cm.state, cfg)
        if not p.ok:
            log.warning("scenario %s: shock %+.3f failed: %s", spec.name, dw, p.error)
        elif warm_start:
            x0 = p.state
        out.append(p)
    return out


def run_sweep(
    cm: CalibratedModel,
    spec: ScenarioSpec,
    cfg: SolverConfig = SolverConfig(),
    *,
    warm_start: bool = True,
    parallel: bool = False,
) -> SweepResult:
    """Solve the benchmark, then each half of the grid outward from zero."""
    if spec.water_mobile != (spec.water in cm.sets.F and cm.sets.is_mobile(spec.water)):
        raise ContractError(f"scenario {spec.name!r} does not match the model's water mobility")
    bench = _solve_point(cm, spec, 0.0, cm.state, cfg)
    if not bench.ok:
        raise SolverError(f"benchmark point failed for scenario {spec.name}: {bench.error}", bench.report)
    up = sorted(g for g in spec.grid if g > 0)
    down = sorted((g for g in spec.grid if g < 0), reverse=True)
    if parallel:
        with ThreadPoolExecutor(max_workers=2) as ex:
            fu = ex.submit(_half_sweep, cm, spec, up, bench.state, cfg, warm_start)
            fd = ex.submit(_half_sweep, cm, spec, down, bench.state, cfg, warm_start)
            pts = fu.result() + fd.result()
    else:
        pts = _half_sweep(cm, spec, up, bench.state, cfg, warm_start)
        pts += _half_sweep(cm, spec, down, bench.state, cfg, warm_start)
    # the benchmark anchors the sweep even when zero is not on the requested grid
    pts.append(bench)
    return SweepResult(spec, sorted(pts, key=lambda p: p.shock))


def write_sweep(result: SweepResult, outdir, *, trace: bool = False) -> Path:
    """runs/<scenario>/<shock>/state.csv|report.txt plus a metrics.csv summary."""
    root = Path(outdir) / result.spec.name
    root.mkdir(parents=True, exist_ok=True)
    for p in result.points:
        d = root / f"{p.shock:+.4f}"
        d.mkdir(exist_ok=True)
        if p.state is not None:
            p.state.write_csv(d / "state.csv")
        text = p.report.summary() if p.report is not None else p.error
        if trace and p.report is not None:
            text += "\n" + "\n".join(
                f"iter {r.iteration:3d} |f| {r.residual_norm!r} step {r.step!r} active {r.active_bounds} {r.jacobian}"
                for r in p.report.trace
            )
        (d / "report.txt").write_text(text + "\n")
    result.table().write_csv(root / "metrics.csv")
    with open(root / "summary.csv", "w") as fh:
        fh.write("statistic,value\n")
        for k, v in result.summary().items():
            fh.write(f"{k},{v!r}\n")
    return root


# -- pipeline from configuration ----------------------------------------------------

def augment_inputs(cfg: ModelConfig, *, irrigated_share=None, valuation: float = 1.0) -> tuple[AugmentInputs, WaterRateTable]:
    d = cfg.data
    rates = load_water_rates(cfg.path("water_rates"))
    eta = {i: d.eta_s_by_industry.get(i, d.eta_s) for i in d.resource_of}
    inp = AugmentInputs(
        sector_volumes=load_water_flows(cfg.path("water_flows")),
        water_groups={k: list(v) for k, v in d.water_groups.items()},
        rate_sector=dict(d.rate_sector),
        rates=rates,
        resource_of=dict(d.resource_of),
        eta_s=eta,
        sigma_va=cfg.elasticities.va1,
        irrigated_share=d.irrigated_share if irrigated_share is None else irrigated_share,
        crop=d.crop,
        irrigated=d.irrigated,
        rainfed=d.rainfed,
        import_factor=d.import_factor,
        water=cfg.closure.water,
        capital=cfg.closure.capital,
        valuation=valuation,
    )
    return inp, rates


def build_sam(cfg: ModelConfig, *, irrigated_share=None, valuation: float = 1.0, raw: Sam | None = None) -> tuple[Sam, dict]:
    """Augmented calibration SAM and the benchmark water price per industry."""
    raw = load_sam(cfg.path("sam")) if raw is None else raw
    inp, rates = augment_inputs(cfg, irrigated_share=irrigated_share, valuation=valuation)
    sam = augment_sam(raw, inp)
    users = [i for i in sam.members("I") if inp.water in sam and sam.cell(inp.water, i) > 0]
    missing = [i for i in users if i not in inp.rate_sector]
    if missing:
        raise ContractError(f"no water rate sector for industries {missing}")
    price = {i: rates.rate(inp.rate_sector[i]) * valuation for i in users}
    return sam, price


def build_model(cfg: ModelConfig, *, water_mobile: bool, irrigated_share=None, valuation: float = 1.0,
                raw: Sam | None = None) -> CalibratedModel:
    mobile = list(cfg.closure.mobile_factors)
    w = cfg.closure.water
    if water_mobile and w not in mobile:
        mobile.append(w)
    if not water_mobile and w in mobile:
        mobile.remove(w)
    sam, price = build_sam(cfg, irrigated_share=irrigated_share, valuation=valuation, raw=raw)
    return calibrate(sam, price, CalibrationSettings.from_config(cfg, mobile))


def run_scenario(cfg: ModelConfig, name: str, grid=None, solver: SolverConfig = SolverConfig(), *,
                 parallel: bool = False, cm: CalibratedModel | None = None) -> SweepResult:
    specs = scenario_specs(cfg, grid)
    if name not in specs:
        raise ContractError(f"unknown scenario {name!r}; choose from {sorted(specs)}")
    spec = specs[name]
    if cm is None:
        cm = build_model(cfg, water_mobile=spec.water_mobile)
    return run_sweep(cm, spec, solver, parallel=parallel)


# -- sensitivity studies ----------------------------------------------------------

@dataclass
class RainfedRow:
    share: float
    shock: float
    gdp: float
    baseline_gdp: float

    @property
    def delta(self) -> float:
        return self.gdp - self.baseline_gdp


def sensitivity_rainfed(cfg: ModelConfig, shares: Sequence[float], grid=None,
                        solver: SolverConfig = SolverConfig()) -> tuple[list, dict]:
    """GDP under scenario B for each irrigated/rainfed split, relative to the configured split.

    Returns the rows and the sweeps keyed by share (the baseline share included).
    """
    base_share = cfg.data.irrigated_share
    bad = [s for s in shares if not 0 < s < 1]
    if bad:
        raise ContractError(f"irrigated shares must lie in (0, 1): {bad}")
    spec = scenario_specs(cfg, grid)["B"]
    raw = load_sam(cfg.path("sam"))
    sweeps = {}
    for s in sorted(set(shares) | {base_share}):
        try:
            cm = build_model(cfg, water_mobile=True, irrigated_share=s, raw=raw)
        except ContractError as err:
            raise type(err)(f"irrigated share {s}: {err}") from None
        sweeps[s] = run_sweep(cm, spec, solver)
    base = sweeps[base_share]
    rows = []
    for s in shares:
        for p in sweeps[s].points:
            if p.ok and base.point(p.shock).ok:
                rows.append(RainfedRow(s, p.shock, p.metrics.GDP, base.point(p.shock).metrics.GDP))
            else:
                rows.append(RainfedRow(s, p.shock, math.nan, math.nan))
    return rows, sweeps


@dataclass
class ValuationRow:
    multiplier: float
    gdp: float  # median marginal response of GDP, CAD per m3
    yhh: float
    baseline_gdp: float
    baseline_yhh: float

    @property
    def delta_gdp(self) -> float:
        return self.gdp - self.baseline_gdp

    @property
    def delta_yhh(self) -> float:
        return self.yhh - self.baseline_yhh


def sensitivity_valuation(cfg: ModelConfig, multipliers: Sequence[float], grid=None,
                          solver: SolverConfig = SolverConfig()) -> tuple[list, dict]:
    """Median marginal GDP and household-income responses when water is valued at n times its rate."""
    bad = [n for n in multipliers if not n >= 1]
    if bad:
        raise ContractError(f"valuation multipliers must be at least 1: {bad}")
    spec = scenario_specs(cfg, grid)["B"]
    hh = cfg.closure.hh
    raw = load_sam(cfg.path("sam"))
    sweeps = {}
    for n in sorted(set(multipliers) | {1.0}):
        try:
            cm = build_model(cfg, water_mobile=True, valuation=n, raw=raw)
        except ContractError as err:
            raise type(err)(f"valuation multiplier {n}: {err}") from None
        sweeps[n] = run_sweep(cm, spec, solver)
    mmr = {n: (sw.marginal_response("GDP"), sw.marginal_response("Y" + hh)) for n, sw in sweeps.items()}
    rows = [ValuationRow(n, *mmr[n], *mmr[1.0]) for n in multipliers]
    return rows, sweeps

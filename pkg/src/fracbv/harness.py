"""Experiment orchestration: scenarios, worked-example checks and solver cross-checks."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .claw_ft import FrontTrackingState, PiecewiseAffineFlux, evolve, polygonalize_flux
from .claw_lo import ConvexFluxModel, DecayReport, LaxOleinikSolver, decay_report
from .func_repr import (
    Interval,
    StepFunction,
    format_float,
    read_step_csv,
    restrict,
    write_grid_csv,
    write_step_csv,
)
from .variation import tvs_grid_lower_bound, tvs_on_subdivision, tvs_step_exact, tvs_values

TVS_SLACK = 1e-10


class InvariantViolation(RuntimeError):
    """A proven inequality failed on computed output."""


def worker_count(requested: int | None = None) -> int:
    """Pool size: ``requested``, else ``FRACBV_THREADS``, else the CPU count (at least 1)."""
    if requested is None:
        env = os.environ.get("FRACBV_THREADS")
        if env:
            try:
                requested = int(env)
            except ValueError:
                raise ValueError(f"FRACBV_THREADS must be an integer, got {env!r}") from None
        else:
            requested = os.cpu_count() or 1
    return max(1, int(requested))


def s_label(s: float) -> str:
    """Column suffix for an s value: 0.5 -> ``s50``, 0.25 -> ``s25``, 1 -> ``s100``."""
    return f"s{round(100 * s):d}" if abs(100 * s - round(100 * s)) < 1e-9 else f"s{s:g}"


# --- scenario ----------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    flux_spec: dict
    init_spec: dict
    s_grid: tuple[float, ...]
    times: tuple[float, ...]
    window: Interval
    solver: str = "ft"
    output_dir: Path | None = None
    K: int = 64
    grid_n: int = 1024
    decay_mode: str | None = None
    K_list: tuple[int, ...] = ()
    n_scan: int = 4096

    def __post_init__(self):
        errors = []
        if self.solver not in ("ft", "lo", "both"):
            errors.append(f"solver: expected ft, lo or both, got {self.solver!r}")
        if not self.s_grid:
            errors.append("s_grid: must be nonempty")
        if any(not 0 < s <= 1 for s in self.s_grid):
            errors.append("s_grid: every s must lie in (0, 1]")
        if not self.times:
            errors.append("times: must be nonempty")
        if any(t <= 0 for t in self.times) or any(b <= a for a, b in zip(self.times, self.times[1:])):
            errors.append("times: must be positive and strictly increasing")
        if not self.window.bounded:
            errors.append("window: must be bounded")
        if self.K < 1:
            errors.append("K: must be >= 1")
        if self.grid_n < 2:
            errors.append("grid_n: must be >= 2")
        if self.decay_mode not in (None, "compact", "periodic"):
            errors.append(f"decay_mode: expected compact or periodic, got {self.decay_mode!r}")
        if errors:
            raise ValueError("invalid scenario: " + "; ".join(errors))

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "Scenario":
        missing = [k for k in ("name", "flux", "init", "times", "window") if k not in data]
        if missing:
            raise ValueError("invalid scenario: missing field(s) " + ", ".join(missing))
        window = data["window"]
        win = Interval.parse(window) if isinstance(window, str) else Interval(*map(float, window))
        out = data.get("output_dir")
        out_path = None if out is None else Path(out)
        if out_path is not None and base_dir is not None and not out_path.is_absolute():
            out_path = base_dir / out_path
        init = dict(data["init"])
        if "path" in init and base_dir is not None and not Path(init["path"]).is_absolute():
            init["path"] = str(base_dir / init["path"])
        return cls(
            name=str(data["name"]),
            flux_spec=dict(data["flux"]),
            init_spec=init,
            s_grid=tuple(float(s) for s in data.get("s_grid", [0.5])),
            times=tuple(float(t) for t in data["times"]),
            window=win,
            solver=str(data.get("solver", "ft")),
            output_dir=out_path,
            K=int(data.get("K", 64)),
            grid_n=int(data.get("grid_n", 1024)),
            decay_mode=data.get("decay_mode"),
            K_list=tuple(int(k) for k in data.get("K_list", [])),
            n_scan=int(data.get("n_scan", 4096)),
        )

    @classmethod
    def load(cls, path) -> "Scenario":
        path = Path(path)
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data, base_dir=path.parent)


def build_model(spec: dict) -> ConvexFluxModel:
    return ConvexFluxModel.from_spec(spec)


def build_polygonal_flux(spec: dict, K: int) -> PiecewiseAffineFlux:
    """Flux for front tracking: explicit nodes, or a smooth model interpolated at ``K + 1`` nodes."""
    if "u_nodes" in spec:
        return PiecewiseAffineFlux.from_json(spec)
    model = build_model(spec)
    if model.reflected:
        raise ValueError("flux: polygonal front tracking needs the flux closure, not a reflected table")
    return polygonalize_flux(model.flux, model.K_range, K)


def paper_step(example: str) -> StepFunction:
    """Step data of the small worked examples (``two-jump-monotone``, ``two-jump-up-down``, ``dip``)."""
    if example == "two-jump-monotone":
        return StepFunction([0.0, 1.0], [0.0, 1.0, 2.0])
    if example == "two-jump-up-down":
        return StepFunction([0.0, 1.0], [0.0, 1.0, 0.0])
    if example == "dip":
        return StepFunction([0.0, 1.0, 2.0], [0.0, 1.0, 0.99, 2.0])
    raise ValueError(f"init: unknown example id {example!r}")


def build_initial(spec: dict):
    """Initial data from a descriptor; returns a StepFunction or ``(closure, period, mean)``."""
    kind = spec.get("kind")
    if kind == "riemann":
        return StepFunction.heaviside(float(spec.get("x0", 0.0)), float(spec.get("uL", 1.0)), float(spec.get("uR", 0.0)))
    if kind == "bump":
        return StepFunction.indicator(float(spec.get("lo", 0.0)), float(spec.get("hi", 1.0)), float(spec.get("height", 1.0)))
    if kind == "periodic-sine":
        amp = float(spec.get("amplitude", 0.5))
        period = float(spec.get("period", 1.0))
        mean = float(spec.get("mean", 0.0))
        if period <= 0:
            raise ValueError("init: period must be positive")
        return (lambda x: mean + amp * np.sin(2 * np.pi * np.asarray(x) / period)), period, mean
    if kind == "step_csv":
        if "path" not in spec:
            raise ValueError("init: step_csv needs 'path'")
        return read_step_csv(spec["path"])
    if kind == "paper-example":
        return paper_step(str(spec.get("id")))
    raise ValueError(f"init: unknown kind {kind!r} (expected riemann, bump, periodic-sine, step_csv, paper-example)")


# --- reports -----------------------------------------------------------------


@dataclass
class RunReport:
    name: str
    times: list[float]
    s_grid: list[float]
    tvs_table: np.ndarray
    events: list[dict] = field(default_factory=list)
    decay: DecayReport | None = None
    cross_validation: list[tuple[int, float, float]] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        out = {
            "name": self.name,
            "times": self.times,
            "s_grid": self.s_grid,
            "tvs_table": self.tvs_table.tolist(),
            "n_events": len(self.events),
        }
        if self.decay is not None:
            out["decay"] = {
                "fitted_exponent": self.decay.fitted_exponent,
                "predicted_exponent": self.decay.predicted_exponent,
            }
        if self.cross_validation:
            out["cross_validation"] = [list(r) for r in self.cross_validation]
        return out


def write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([format_float(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def event_rows(history, s_grid: Sequence[float], check: bool = True) -> list[dict]:
    """One row per resolved cluster with TV^s of the whole profile before and after."""
    rows = []
    for rec in history:
        before = [tvs_values(rec.levels_before, s) for s in s_grid]
        after = [tvs_values(rec.levels_after, s) for s in s_grid]
        if check:
            for s, b, a in zip(s_grid, before, after):
                if a > b + TVS_SLACK:
                    raise InvariantViolation(
                        f"TV^s increased at t={rec.t_star:.17g} for s={s}: {b:.17g} -> {a:.17g}"
                    )
        for ev in rec.events:
            rows.append({"t_star": rec.t_star, "x_star": ev.x_star, "before": before, "after": after})
    return rows


def write_events_csv(rows: list[dict], s_grid: Sequence[float], path) -> None:
    header = ["t_star", "x_star"]
    for s in s_grid:
        header += [f"tvs_before_{s_label(s)}", f"tvs_after_{s_label(s)}"]
    body = []
    for r in rows:
        line = [float(r["t_star"]), float(r["x_star"])]
        for b, a in zip(r["before"], r["after"]):
            line += [float(b), float(a)]
        body.append(line)
    write_rows(Path(path), header, body)


def _check_rows_nonincreasing(table: np.ndarray, s_grid, times) -> None:
    for j, s in enumerate(s_grid):
        col = table[:, j]
        for k in range(1, col.size):
            if col[k] > col[k - 1] + TVS_SLACK:
                raise InvariantViolation(
                    f"TV^s increased between t={times[k - 1]} and t={times[k]} for s={s}: {col[k - 1]} -> {col[k]}"
                )


def l1_step_grid(u: StepFunction, solver: LaxOleinikSolver, t: float, window: Interval, n: int) -> float:
    """Midpoint-rule L1 distance on ``window`` between a step profile and the Lax-Oleinik solution."""
    edges = np.linspace(window.lo, window.hi, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    lo = solver.evaluate(t, mid)
    return float(np.sum(np.abs(u(mid) - lo)) * (edges[1] - edges[0]))


def _lo_solver(sc: Scenario, init) -> LaxOleinikSolver:
    model = build_model(sc.flux_spec)
    if isinstance(init, tuple):
        closure, period, _ = init
        return LaxOleinikSolver(model, closure, period=period, n_scan=sc.n_scan)
    return LaxOleinikSolver(model, init, n_scan=sc.n_scan)


def compare_solvers(sc: Scenario, K_list: Sequence[int], n: int | None = None,
                    threads: int | None = None) -> list[tuple[int, float, float]]:
    """``(K, t, L1 distance)`` between front tracking at each K and the Lax-Oleinik solution."""
    init = build_initial(sc.init_spec)
    if not isinstance(init, StepFunction):
        raise ValueError("init: cross-validation needs step data")
    lo = _lo_solver(sc, init)
    n = sc.grid_n if n is None else n
    reference = {t: None for t in sc.times}
    edges = np.linspace(sc.window.lo, sc.window.hi, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    for t in sc.times:
        reference[t] = lo.evaluate(t, mid)
    dx = edges[1] - edges[0]

    def one(K: int):
        flux = build_polygonal_flux(sc.flux_spec, K)
        state = FrontTrackingState.from_step(flux, init)
        rows = []
        for t in sc.times:
            state = evolve(state, t, record=False)
            rows.append((int(K), float(t), float(np.sum(np.abs(state.profile()(mid) - reference[t])) * dx)))
        return rows

    with ThreadPoolExecutor(max_workers=min(worker_count(threads), max(1, len(K_list)))) as pool:
        results = list(pool.map(one, K_list))
    return [r for rows in results for r in rows]


def run_scenario(sc: Scenario, check: bool = True) -> RunReport:
    """Run a scenario and write its artifacts into ``sc.output_dir`` (if set).

    Files: ``solution_t<k>.csv`` per time (front tracking when available, else
    Lax-Oleinik; ``solution_lo_t<k>.csv`` as well for ``both``), ``tvs_table.csv``,
    ``events.csv`` (front tracking), ``decay.csv`` (Lax-Oleinik with a decay
    mode), ``crossval.csv`` (``both`` with a ``K_list``) and ``report.json``.
    """
    init = build_initial(sc.init_spec)
    out = sc.output_dir
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    files: list[str] = []
    s_grid = list(sc.s_grid)
    table = np.zeros((len(sc.times), len(s_grid)))
    events: list[dict] = []
    decay = None
    crossval: list[tuple[int, float, float]] = []

    if sc.solver in ("ft", "both"):
        if not isinstance(init, StepFunction):
            raise ValueError("init: front tracking needs step data")
        flux = build_polygonal_flux(sc.flux_spec, sc.K)
        state = FrontTrackingState.from_step(flux, init)
        for k, t in enumerate(sc.times):
            state = evolve(state, t, record=True)
            prof = state.profile()
            for j, s in enumerate(s_grid):
                table[k, j] = tvs_step_exact(prof, s).tvs
            if out is not None:
                name = f"solution_t{k}.csv"
                write_step_csv(restrict(prof, sc.window), out / name)
                files.append(name)
        events = event_rows(state.history, s_grid, check=check)
        if check:
            _check_rows_nonincreasing(table, s_grid, sc.times)
        if out is not None:
            write_events_csv(events, s_grid, out / "events.csv")
            files.append("events.csv")

    if sc.solver in ("lo", "both"):
        solver = _lo_solver(sc, init)
        for k, t in enumerate(sc.times):
            g = solver.evaluate_grid(t, sc.window, sc.grid_n)
            if sc.solver == "lo":
                for j, s in enumerate(s_grid):
                    table[k, j] = tvs_grid_lower_bound(g, s).tvs
            if out is not None:
                name = f"solution_t{k}.csv" if sc.solver == "lo" else f"solution_lo_t{k}.csv"
                write_grid_csv(g, out / name)
                files.append(name)
        if sc.decay_mode is not None:
            decay = decay_report(solver, sc.times, sc.decay_mode)
            if out is not None:
                write_rows(out / "decay.csv", ["t", "sup_norm"], zip(decay.times, decay.sup_norms))
                files.append("decay.csv")

    if sc.solver == "both" and sc.K_list:
        crossval = compare_solvers(sc, sc.K_list)
        if out is not None:
            write_rows(out / "crossval.csv", ["K", "t", "l1_distance"], crossval)
            files.append("crossval.csv")

    report = RunReport(sc.name, list(sc.times), s_grid, table, events, decay, crossval, files)
    if out is not None:
        header = ["t"] + [s_label(s) for s in s_grid]
        write_rows(out / "tvs_table.csv", header, [[float(t)] + [float(v) for v in row] for t, row in zip(sc.times, table)])
        files.append("tvs_table.csv")
        with open(out / "report.json", "w") as fh:
            json.dump(report.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        files.append("report.json")
    return report


def run_scenarios(scenarios: Sequence[Scenario], threads: int | None = None) -> list[RunReport]:
    """Independent scenarios on a worker pool; output order follows the input order."""
    with ThreadPoolExecutor(max_workers=min(worker_count(threads), max(1, len(scenarios)))) as pool:
        return list(pool.map(run_scenario, scenarios))


# --- worked examples ---------------------------------------------------------


@dataclass(frozen=True)
class ExampleRow:
    example: str
    n: int | None
    s: float
    claim: str
    lhs: float
    rhs: float
    holds: bool


@dataclass
class PaperExamplesReport:
    rows: list[ExampleRow]

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.rows)

    def failures(self) -> list[ExampleRow]:
        return [r for r in self.rows if not r.holds]

    def write_csv(self, path) -> None:
        write_rows(Path(path), ["example", "n", "s", "claim", "lhs", "rhs", "holds"],
                    [[r.example, "" if r.n is None else r.n, float(r.s), r.claim, float(r.lhs), float(r.rhs),
                      "true" if r.holds else "false"] for r in self.rows])


TRUNCATIONS = (10, 100, 1000)
OSCILLATION_SCALE = 0.01
OSCILLATION_DECAY = 1.01


def oscillating_levels(n_pairs: int, scale: float = OSCILLATION_SCALE, decay: float = OSCILLATION_DECAY) -> np.ndarray:
    """Levels ``z_0 = 0``, up by ``a_k``, down by ``sqrt(a_k)``, for ``k = 1..n_pairs``.

    ``a_k = scale * k^-decay`` is summable while its square root is not.
    """
    k = np.arange(1, n_pairs + 1, dtype=float)
    a = scale * k ** (-decay)
    steps = np.empty(2 * n_pairs)
    steps[0::2] = a
    steps[1::2] = -np.sqrt(a)
    return np.concatenate(([0.0], np.cumsum(steps)))


def alternating_harmonic_levels(n: int, t: float) -> np.ndarray:
    """Partial sums ``sum_{p<=k} (-1)^p / p^t`` for ``k = 1..n``."""
    p = np.arange(1, n + 1, dtype=float)
    return np.cumsum((-1.0) ** p / p ** t)


def paper_examples(s_grid: Sequence[float] = (0.25, 0.5, 0.75)) -> PaperExamplesReport:
    """Strict inequalities and limit trends of the worked examples, at several truncations."""
    rows: list[ExampleRow] = []

    # uniform subdivisions of u(x) = x on [0,1]: TV^s -> 0 as the subdivision is refined
    s = 0.5
    prev = tvs_on_subdivision(lambda x: x, [0.0, 1.0], s)
    for n in TRUNCATIONS:
        val = tvs_on_subdivision(lambda x: x, np.linspace(0.0, 1.0, n + 1), s)
        rows.append(ExampleRow("refinement-u=x", n, s, "TV^s(sigma_n) < TV^s(coarser)", val, prev, val < prev))
        rows.append(ExampleRow("refinement-u=x", n, s, "TV^s(sigma_n) = n^(1-1/s)", val, n ** (1 - 1 / s),
                               abs(val - n ** (1 - 1 / s)) <= 1e-12 * max(1.0, val)))
        prev = val

    # monotone versus non-monotone two-jump functions (a = b = 1)
    u, v = paper_step("two-jump-monotone"), paper_step("two-jump-up-down")
    for s in s_grid:
        if s >= 1:
            continue
        tu, tv = tvs_step_exact(u, s).tvs, tvs_step_exact(v, s).tvs
        rows.append(ExampleRow("two-jump", None, s, "TV^s(u) > TV^s(v)", tu, tv, tu > tv))
        rows.append(ExampleRow("two-jump", None, s, "TV^s(u) = (a+b)^(1/s)", tu, 2.0 ** (1 / s),
                               abs(tu - 2.0 ** (1 / s)) <= 1e-12 * tu))
        fine = tvs_on_subdivision(v, [-1.0, 0.5, 1.5], s)
        coarse = tvs_on_subdivision(v, [-1.0, 1.5], s)
        rows.append(ExampleRow("two-jump", None, s, "TV^s v{sigma_1} > TV^s v{sigma_2}", fine, coarse, fine > coarse))

    # extremal subdivisions can lose to a sub-subdivision: 0, a, a - eps, b
    w = paper_step("dip")
    s = 0.5
    pts = w.sample_points()
    tau = tvs_on_subdivision(w, pts[[0, -1]], s)
    sigma = tvs_on_subdivision(w, pts, s)
    rows.append(ExampleRow("dip", None, s, "TV^s u{tau} > TV^s u{sigma}", tau, sigma, tau > sigma))
    exact = tvs_step_exact(w, s).tvs
    rows.append(ExampleRow("dip", None, s, "TV^s u = b^(1/s)", exact, 4.0, abs(exact - 4.0) <= 1e-12 * 4.0))

    # summable rises, non-summable falls: truncated TV^s grows without bound
    for s in sorted(set(list(s_grid) + [0.5, 1.0])):
        base = tvs_values(oscillating_levels(TRUNCATIONS[0]), s)
        prev = base
        for n in TRUNCATIONS[1:]:
            val = tvs_values(oscillating_levels(n), s)
            rows.append(ExampleRow("oscillating-unbounded", n, s, "TV^s(z_n) increasing", val, prev, val > prev))
            prev = val
        rows.append(ExampleRow("oscillating-unbounded", TRUNCATIONS[-1], s, "TV^s(z_1000) > 10 TV^s(z_10)",
                               prev, 10 * base, prev > 10 * base))

    # strict inclusion between exponents: t = 1/2 diverges, t - eps converges
    t_exp, eps = 0.5, 0.1
    s_low = t_exp - eps
    vals_t, vals_s = [], []
    for n in TRUNCATIONS:
        levels = alternating_harmonic_levels(n, t_exp)
        vals_t.append(float(np.sum(np.abs(np.diff(levels)) ** (1 / t_exp))))
        vals_s.append(float(np.sum(np.abs(np.diff(levels)) ** (1 / s_low))))
    for k, n in enumerate(TRUNCATIONS):
        harmonic = float(np.sum(1.0 / np.arange(2, n + 1)))
        rows.append(ExampleRow("exponent-inclusion", n, t_exp, "TV^t(sigma_n) = H_n - 1", vals_t[k], harmonic,
                               abs(vals_t[k] - harmonic) <= 1e-12 * harmonic))
    for k in range(1, len(TRUNCATIONS)):
        inc_t = vals_t[k] - vals_t[k - 1]
        rows.append(ExampleRow("exponent-inclusion", TRUNCATIONS[k], t_exp, "TV^t increment >= 0.9 ln 10",
                               inc_t, 0.9 * math.log(10), inc_t >= 0.9 * math.log(10)))
    inc_s = [vals_s[k] - vals_s[k - 1] for k in range(1, len(TRUNCATIONS))]
    rows.append(ExampleRow("exponent-inclusion", TRUNCATIONS[-1], s_low, "TV^s increments shrink",
                           inc_s[-1], inc_s[0], inc_s[-1] < inc_s[0]))
    zeta = float(np.sum(np.arange(1, 10**6, dtype=float) ** (-t_exp / s_low)))  # below zeta(1.25)
    rows.append(ExampleRow("exponent-inclusion", TRUNCATIONS[-1], s_low, "TV^s(sigma_n) < zeta(t/s) - 1",
                           vals_s[-1], zeta - 1.0, vals_s[-1] < zeta - 1.0))
    return PaperExamplesReport(rows)

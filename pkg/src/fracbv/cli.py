"""Command-line entry point ``fracbv``.

Exit codes: 0 success, 2 invalid input, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .claw_ft import EventStormError, FrontTrackingState, evolve
from .claw_lo import LaxOleinikSolver, decay_report
from .func_repr import (
    Interval,
    StepFunction,
    read_step_csv,
    restrict,
    write_grid_csv,
    write_points_csv,
    write_step_csv,
)
from .harness import (
    InvariantViolation,
    Scenario,
    build_initial,
    build_model,
    build_polygonal_flux,
    event_rows,
    paper_examples,
    run_scenario,
    write_events_csv,
    write_rows,
)
from .variation import tvs_plus_step, tvs_step_exact

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INVARIANT = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _interval(text: str) -> Interval:
    try:
        return Interval.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_json_arg(text: str) -> dict:
    """Inline JSON, or a path to a JSON file."""
    src = text
    if not text.lstrip().startswith("{"):
        path = Path(text)
        if not path.exists():
            raise ValueError(f"flux: no such file {text!r}")
        src = path.read_text()
    try:
        data = json.loads(src)
    except json.JSONDecodeError as exc:
        raise ValueError(f"flux: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValueError("flux: expected a JSON object")
    return data


def cmd_tvs(args) -> int:
    u = read_step_csv(args.input)
    if args.plus:
        value = tvs_plus_step(u, args.s)
        print("tvs_plus,seminorm_plus")
        print(f"{value:.17g},{value ** args.s:.17g}")
        return EXIT_OK
    rep = tvs_step_exact(u, args.s)
    print("tvs,seminorm")
    print(f"{rep.tvs:.17g},{rep.seminorm:.17g}")
    if args.witness:
        write_points_csv(rep.witness.points, args.witness)
    return EXIT_OK


def cmd_evolve(args) -> int:
    flux = build_polygonal_flux(_load_json_arg(args.flux), args.K)
    u0 = read_step_csv(args.init)
    state = FrontTrackingState.from_step(flux, u0)
    state = evolve(state, args.t, record=True)
    write_step_csv(restrict(state.profile(), args.window) if args.window else state.profile(), args.out)
    rows = event_rows(state.history, args.s_grid, check=True)
    if args.events:
        write_events_csv(rows, args.s_grid, args.events)
    print(f"t={args.t:g} fronts={len(state.fronts)} interactions={state.n_interactions}")
    return EXIT_OK


def cmd_laxoleinik(args) -> int:
    model = build_model(_load_json_arg(args.flux))
    u0 = read_step_csv(args.init)
    solver = LaxOleinikSolver(model, u0, n_scan=args.n_scan)
    lo, hi, n = args.grid
    if not (hi > lo and n >= 2 and float(n).is_integer()):
        raise ValueError("grid: expected a,b,n with a < b and integer n >= 2")
    g = solver.evaluate_grid(args.t, Interval(lo, hi), int(n))
    write_grid_csv(g, args.out)
    return EXIT_OK


def cmd_decay(args) -> int:
    model = build_model(_load_json_arg(args.flux))
    if args.init:
        init = read_step_csv(args.init)
    elif args.mode == "compact":
        init = StepFunction.indicator(0.0, 1.0, 1.0)
    else:
        init = build_initial({"kind": "periodic-sine", "amplitude": args.amplitude, "period": args.period})
    if args.mode == "periodic":
        if isinstance(init, StepFunction):
            raise ValueError("init: periodic mode uses the builtin sine data")
        closure, period, _ = init
        solver = LaxOleinikSolver(model, closure, period=period, n_scan=args.n_scan)
    else:
        solver = LaxOleinikSolver(model, init, n_scan=args.n_scan)
    rep = decay_report(solver, args.times, args.mode)
    write_rows(Path(args.out), ["t", "sup_norm"], zip(rep.times, rep.sup_norms))
    print(f"fitted_exponent={rep.fitted_exponent:.6f} predicted_exponent={rep.predicted_exponent:.6f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    sc = Scenario.load(args.config)
    if args.out:
        sc = Scenario(**{**sc.__dict__, "output_dir": Path(args.out)})
    rep = run_scenario(sc)
    print(json.dumps(rep.summary(), sort_keys=True))
    return EXIT_OK


def cmd_paper_examples(args) -> int:
    rep = paper_examples()
    for r in rep.rows:
        n = "" if r.n is None else f" n={r.n}"
        print(f"{'PASS' if r.holds else 'FAIL'} {r.example}{n} s={r.s:g}: {r.claim} ({r.lhs:.6g} vs {r.rhs:.6g})")
    if args.out:
        rep.write_csv(args.out)
    if not rep.all_hold:
        raise InvariantViolation(f"{len(rep.failures())} worked-example claim(s) failed")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracbv", description="Fractional total variation and scalar conservation laws")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("tvs", help="exact TV^s of a step function")
    t.add_argument("--input", required=True, help="step CSV")
    t.add_argument("--s", type=float, required=True)
    t.add_argument("--plus", action="store_true", help="one-sided variation (upward increments only)")
    t.add_argument("--witness", help="write an attaining subdivision (column x)")
    t.set_defaults(func=cmd_tvs)

    e = sub.add_parser("evolve", help="front tracking with a piecewise-affine flux")
    e.add_argument("--flux", required=True, help="flux JSON (inline or path): u_nodes/f_values, or a smooth kind")
    e.add_argument("--init", required=True, help="step CSV")
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--window", type=_interval)
    e.add_argument("--out", required=True)
    e.add_argument("--events")
    e.add_argument("--s-grid", type=_floats, default=[0.5])
    e.add_argument("--K", type=int, default=64, help="nodes used to polygonalize a smooth flux kind")
    e.set_defaults(func=cmd_evolve)

    lo = sub.add_parser("laxoleinik", help="Lax-Oleinik solution on a grid")
    lo.add_argument("--flux", required=True)
    lo.add_argument("--init", required=True)
    lo.add_argument("--t", type=float, required=True)
    lo.add_argument("--grid", type=_floats, required=True, help="a,b,n")
    lo.add_argument("--out", required=True)
    lo.add_argument("--n-scan", type=int, default=4096)
    lo.set_defaults(func=cmd_laxoleinik)

    d = sub.add_parser("decay", help="sup-norm decay and fitted exponent")
    d.add_argument("--mode", choices=["compact", "periodic"], required=True)
    d.add_argument("--times", type=_floats, required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--flux", default='{"kind":"power","alpha":2}')
    d.add_argument("--init", help="step CSV (compact mode); default bump 1 on [0,1]")
    d.add_argument("--amplitude", type=float, default=0.5)
    d.add_argument("--period", type=float, default=1.0)
    d.add_argument("--n-scan", type=int, default=4096)
    d.set_defaults(func=cmd_decay)

    x = sub.add_parser("experiment", help="run a JSON scenario")
    x.add_argument("--config", required=True)
    x.add_argument("--out", help="override the scenario output directory")
    x.set_defaults(func=cmd_experiment)

    pe = sub.add_parser("paper-examples", help="check the worked examples")
    pe.add_argument("--out", help="write the table as CSV")
    pe.set_defaults(func=cmd_paper_examples)
    return p


# options whose values may start with a minus sign (``--window -3,3``)
_SIGNED_VALUE_OPTIONS = {"--window", "--grid", "--times", "--s-grid", "--t", "--s", "--amplitude"}


def _join_signed_values(argv: list[str]) -> list[str]:
    """Rewrite ``--opt -1,2`` as ``--opt=-1,2`` so argparse does not take the value for a flag."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _SIGNED_VALUE_OPTIONS and nxt is not None and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_signed_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code not in (0, None) else EXIT_OK
    try:
        if getattr(args, "s", None) is not None and not 0 < args.s <= 1:
            raise ValueError("s must lie in (0, 1]")
        if getattr(args, "s_grid", None) is not None and any(not 0 < s <= 1 for s in args.s_grid):
            raise ValueError("s-grid: every s must lie in (0, 1]")
        return args.func(args)
    except (InvariantViolation, EventStormError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ValueError, TypeError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

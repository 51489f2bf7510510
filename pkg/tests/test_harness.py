import json

import numpy as np
import pytest

from fracbv.claw_ft import FrontTrackingState, InteractionRecord, evolve
from fracbv.func_repr import Interval, StepFunction, read_step_csv, write_step_csv
from fracbv.harness import (
    InvariantViolation,
    Scenario,
    alternating_harmonic_levels,
    build_initial,
    build_polygonal_flux,
    compare_solvers,
    event_rows,
    oscillating_levels,
    paper_examples,
    run_scenario,
    run_scenarios,
    s_label,
    worker_count,
)
from fracbv.variation import tvs_values


def scenario(tmp_path=None, **overrides):
    data = {
        "name": "riemann",
        "flux": {"kind": "burgers"},
        "init": {"kind": "riemann", "uL": 1.0, "uR": 0.0},
        "times": [0.5, 1.0],
        "window": [-2, 2],
        "s_grid": [0.5, 1.0],
    }
    data.update(overrides)
    if tmp_path is not None:
        data.setdefault("output_dir", str(tmp_path / data["name"]))
    return Scenario.from_dict(data)


class TestHelpers:
    @pytest.mark.parametrize("s, label", [(0.5, "s50"), (0.25, "s25"), (1.0, "s100"), (1 / 3, "s0.333333")])
    def test_s_label(self, s, label):
        assert s_label(s) == label

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("FRACBV_THREADS", "3")
        assert worker_count() == 3
        assert worker_count(0) == 1
        monkeypatch.setenv("FRACBV_THREADS", "many")
        with pytest.raises(ValueError):
            worker_count()

    def test_oscillating_levels(self):
        z = oscillating_levels(3, scale=1.0, decay=2.0)
        a = np.array([1.0, 0.25, 1 / 9])
        assert np.allclose(np.diff(z), np.ravel(np.column_stack((a, -np.sqrt(a)))))

    def test_alternating_harmonic(self):
        assert alternating_harmonic_levels(3, 1.0) == pytest.approx([-1.0, -0.5, -0.5 - 1 / 3])

    def test_initial_kinds(self, tmp_path):
        assert build_initial({"kind": "bump", "lo": 0, "hi": 2, "height": 0.5}) == StepFunction.indicator(0, 2, 0.5)
        closure, period, mean = build_initial({"kind": "periodic-sine", "amplitude": 0.2, "period": 2.0})
        assert period == 2.0 and mean == 0.0
        assert closure(np.array([0.5]))[0] == pytest.approx(0.2)
        path = tmp_path / "u.csv"
        write_step_csv(StepFunction.indicator(0, 1), path)
        assert build_initial({"kind": "step_csv", "path": str(path)}) == read_step_csv(path)
        with pytest.raises(ValueError):
            build_initial({"kind": "unknown"})
        with pytest.raises(ValueError):
            build_initial({"kind": "paper-example", "id": "nope"})

    @pytest.mark.parametrize(
        "example, levels",
        [("two-jump-monotone", [0, 1, 2]), ("two-jump-up-down", [0, 1, 0]), ("dip", [0, 1, 0.99, 2])],
    )
    def test_example_ids(self, example, levels):
        u = build_initial({"kind": "paper-example", "id": example})
        assert u.levels.tolist() == levels

    def test_polygonal_flux_from_nodes(self):
        flux = build_polygonal_flux({"u_nodes": [0, 1, 2], "f_values": [0, 0.5, 2]}, 64)
        assert flux.slopes.tolist() == [0.5, 1.5]

    def test_polygonal_flux_from_model(self):
        flux = build_polygonal_flux({"kind": "burgers"}, 8)
        assert flux.u_nodes.size == 9
        assert flux(np.array(1.0)) == pytest.approx(0.5)


class TestScenarioValidation:
    @pytest.mark.parametrize(
        "override, field",
        [
            ({"solver": "godunov"}, "solver"),
            ({"s_grid": [0.0]}, "s_grid"),
            ({"times": [1.0, 0.5]}, "times"),
            ({"times": []}, "times"),
            ({"K": 0}, "K"),
            ({"decay_mode": "fast"}, "decay_mode"),
            ({"window": [0, float("inf")]}, "window"),
        ],
    )
    def test_field_named(self, override, field):
        with pytest.raises(ValueError, match=field):
            scenario(**override)

    def test_missing_fields(self):
        with pytest.raises(ValueError, match="flux"):
            Scenario.from_dict({"name": "x", "init": {}, "times": [1], "window": [0, 1]})

    def test_load_resolves_paths(self, tmp_path):
        write_step_csv(StepFunction.indicator(0, 1), tmp_path / "u.csv")
        cfg = {"name": "x", "flux": {"kind": "burgers"}, "init": {"kind": "step_csv", "path": "u.csv"},
               "times": [1.0], "window": "-1,3", "output_dir": "out"}
        (tmp_path / "sc.json").write_text(json.dumps(cfg))
        sc = Scenario.load(tmp_path / "sc.json")
        assert sc.output_dir == tmp_path / "out"
        assert sc.init_spec["path"] == str(tmp_path / "u.csv")
        assert sc.window == Interval(-1, 3)

    def test_load_bad_json(self, tmp_path):
        (tmp_path / "sc.json").write_text("{not json")
        with pytest.raises(ValueError, match="invalid JSON"):
            Scenario.load(tmp_path / "sc.json")


class TestRunScenario:
    def test_riemann_front_tracking(self, tmp_path):
        rep = run_scenario(scenario(tmp_path))
        out = tmp_path / "riemann"
        assert sorted(p.name for p in out.iterdir()) == [
            "events.csv", "report.json", "solution_t0.csv", "solution_t1.csv", "tvs_table.csv",
        ]
        # a single shock (Burgers, uL > uR) keeps TV^s = 1 for every s
        assert np.allclose(rep.tvs_table, 1.0)
        assert (out / "tvs_table.csv").read_text().splitlines()[0] == "t,s50,s100"
        assert read_step_csv(out / "solution_t1.csv") == StepFunction.heaviside(0.5, 1.0, 0.0)

    def test_interactions_recorded(self, tmp_path):
        sc = scenario(tmp_path, name="bump", init={"kind": "bump"}, times=[1.0, 3.0, 6.0], K=16)
        rep = run_scenario(sc)
        assert rep.events
        header = (tmp_path / "bump" / "events.csv").read_text().splitlines()[0]
        assert header == "t_star,x_star,tvs_before_s50,tvs_after_s50,tvs_before_s100,tvs_after_s100"
        assert np.all(np.diff(rep.tvs_table, axis=0) <= 1e-10)

    def test_lax_oleinik_with_decay(self, tmp_path):
        sc = scenario(tmp_path, name="decay", solver="lo", init={"kind": "bump"}, times=[1, 2, 4, 8, 16],
                      decay_mode="compact", n_scan=1024, grid_n=256)
        rep = run_scenario(sc)
        assert rep.decay.predicted_exponent == -0.5
        lines = (tmp_path / "decay" / "decay.csv").read_text().splitlines()
        assert lines[0] == "t,sup_norm" and len(lines) == 6
        assert "events.csv" not in rep.files

    def test_both_solvers_cross_validate(self, tmp_path):
        sc = scenario(tmp_path, name="both", solver="both", init={"kind": "riemann", "uL": -1.0, "uR": 1.0},
                      times=[1.0], K_list=[4, 16, 64], n_scan=1024)
        rep = run_scenario(sc)
        dist = [d for _, _, d in rep.cross_validation]
        assert dist[0] > dist[1] > dist[2]
        assert (tmp_path / "both" / "solution_lo_t0.csv").exists()
        assert (tmp_path / "both" / "crossval.csv").read_text().splitlines()[0] == "K,t,l1_distance"

    def test_deterministic_bytes(self, tmp_path):
        first = scenario(tmp_path, name="a", init={"kind": "bump"}, times=[1.0, 4.0], K=16, solver="both", K_list=[8])
        second = scenario(tmp_path, name="b", init={"kind": "bump"}, times=[1.0, 4.0], K=16, solver="both", K_list=[8])
        run_scenarios([first, second], threads=2)
        for name in ("solution_t1.csv", "solution_lo_t1.csv", "events.csv", "tvs_table.csv", "crossval.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_front_tracking_needs_steps(self):
        with pytest.raises(ValueError, match="step data"):
            run_scenario(scenario(init={"kind": "periodic-sine"}))

    def test_violation_raised(self):
        fake = InteractionRecord(1.0, [], np.array([0.0, 1.0]), np.array([0.0, 1.0, 0.0]), 1, 2)
        with pytest.raises(InvariantViolation):
            event_rows([fake], [0.5])
        assert event_rows([fake], [0.5], check=False) == []


class TestCompareSolvers:
    def test_burgers_rarefaction_converges(self):
        sc = scenario(init={"kind": "riemann", "uL": -1.0, "uR": 1.0}, times=[1.0], n_scan=1024)
        rows = compare_solvers(sc, [8, 64], n=2000)
        assert rows[1][2] < rows[0][2] <= 0.2
        assert rows[1][2] <= 0.05

    def test_event_rows_match_history(self, rng):
        flux = build_polygonal_flux({"kind": "power", "alpha": 2.0}, 12)
        u0 = StepFunction(np.sort(rng.uniform(-2, 2, 7)) + 1e-3 * np.arange(7), rng.uniform(-1, 1, 8))
        state = evolve(FrontTrackingState.from_step(flux, u0), 5.0)
        rows = event_rows(state.history, [0.25, 0.75])
        assert len(rows) >= len(state.history)
        for rec in state.history:
            assert tvs_values(rec.levels_after, 0.25) <= tvs_values(rec.levels_before, 0.25) + 1e-10


class TestPaperExamples:
    def test_all_hold(self):
        rep = paper_examples()
        assert rep.all_hold, rep.failures()

    def test_csv(self, tmp_path):
        rep = paper_examples()
        rep.write_csv(tmp_path / "ex.csv")
        lines = (tmp_path / "ex.csv").read_text().splitlines()
        assert lines[0] == "example,n,s,claim,lhs,rhs,holds"
        assert len(lines) == len(rep.rows) + 1

    def test_divergence_trend(self):
        rows = [r for r in paper_examples().rows if r.claim.startswith("TV^s(z_1000) > 10")]
        assert {r.s for r in rows} >= {0.5, 1.0}
        assert all(r.holds for r in rows)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import envelope_oracle, random_convex_flux, random_step
from fracbv.claw_ft import (
    EventStormError,
    Front,
    FrontTrackingState,
    PiecewiseAffineFlux,
    convex_envelope,
    evolve,
    next_interaction,
    polygonalize_flux,
    sample_solution,
    solve,
    solve_riemann,
)
from fracbv.func_repr import Interval, StepFunction, l1_distance
from fracbv.variation import tvs_values

burgers = lambda u: 0.5 * np.asarray(u) ** 2  # noqa: E731


def state_from_fronts(flux, fronts, left, t_ref=0.0):
    return FrontTrackingState(flux, t_ref, list(fronts), left)


class TestFlux:
    def test_affine_reproduced(self):
        fl = polygonalize_flux(lambda u: 2 * u + 1, Interval(-1, 1), 3)
        x = np.linspace(-1, 1, 50)
        assert np.allclose(fl(x), 2 * x + 1, atol=1e-15)

    def test_burgers_two_pieces(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 2)
        assert fl.u_nodes.tolist() == [-1.0, 0.0, 1.0]
        assert fl.f_values.tolist() == [0.5, 0.0, 0.5]

    def test_interpolation_error_quarters(self):
        dense = np.linspace(-1, 1, 2**12 + 1)  # contains every cell midpoint
        errs = [np.abs(polygonalize_flux(burgers, Interval(-1, 1), K)(dense) - burgers(dense)).max() for K in (4, 8, 16, 32)]
        for a, b in zip(errs, errs[1:]):
            assert b == pytest.approx(a / 4, rel=1e-6)

    def test_out_of_range(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 2)
        with pytest.raises(ValueError):
            fl(1.5)
        with pytest.raises(ValueError):
            solve_riemann(fl, 0.0, 2.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            PiecewiseAffineFlux([0.0], [0.0])
        with pytest.raises(ValueError):
            PiecewiseAffineFlux([0.0, 0.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            polygonalize_flux(burgers, Interval(-1, 1), 0)
        with pytest.raises(ValueError):
            PiecewiseAffineFlux.from_json({"u_nodes": [0, 1]})

    def test_json_roundtrip(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 4)
        back = PiecewiseAffineFlux.from_json(fl.to_json())
        assert np.array_equal(back.u_nodes, fl.u_nodes) and np.array_equal(back.f_values, fl.f_values)


class TestEnvelope:
    def test_convex_increasing_keeps_nodes(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 6)
        verts = convex_envelope(fl, -1.0, 1.0)
        assert [u for u, _ in verts] == pytest.approx(fl.u_nodes.tolist())

    def test_convex_decreasing_is_chord(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 6)
        verts = convex_envelope(fl, 1.0, -1.0)
        assert verts == [(1.0, 0.5), (-1.0, 0.5)]

    def test_w_shape_skips_bump(self):
        fl = PiecewiseAffineFlux([-2, -1, 0, 1, 2], [1, 0, 0.5, 0, 1])
        verts = convex_envelope(fl, -2.0, 2.0)
        assert [u for u, _ in verts] == [-2.0, -1.0, 1.0, 2.0]

    @settings(max_examples=60)
    @given(st.integers(0, 10**6))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 11))
        nodes = np.sort(rng.uniform(-1, 1, n))
        nodes[0], nodes[-1] = -1.0, 1.0
        nodes = np.unique(nodes)
        fl = PiecewiseAffineFlux(nodes, rng.uniform(-1, 1, nodes.size))
        a, b = (float(v) for v in rng.choice(nodes, 2, replace=False))
        verts = convex_envelope(fl, a, b)
        vu = np.array([u for u, _ in verts])
        vf = np.array([f for _, f in verts])
        order = np.argsort(vu)
        u, env = envelope_oracle(fl.u_nodes, fl.f_values, min(a, b), max(a, b), lower=a < b)
        assert np.allclose(np.interp(u, vu[order], vf[order]), env, atol=1e-12)


class TestRiemann:
    def test_equal_states(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 4)
        assert solve_riemann(fl, 0.5, 0.5) == []

    def test_shock(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 4)
        fronts = solve_riemann(fl, 1.0, -0.5)
        assert len(fronts) == 1
        assert fronts[0].speed == pytest.approx((0.5 - 0.125) / 1.5)

    def test_burgers_fan(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 4)
        speeds = [fr.speed for fr in solve_riemann(fl, -1.0, 1.0)]
        assert speeds == pytest.approx([-0.75, -0.25, 0.25, 0.75], abs=1e-15)

    @settings(max_examples=80)
    @given(st.integers(0, 10**6))
    def test_fan_structure(self, seed):
        rng = np.random.default_rng(seed)
        fl = random_convex_flux(rng) if rng.random() < 0.5 else PiecewiseAffineFlux(np.linspace(-1, 1, 7), rng.uniform(-1, 1, 7))
        ul, ur = rng.uniform(-1, 1, 2)
        fan = solve_riemann(fl, ul, ur)
        assert fan[0].left_state == ul and fan[-1].right_state == ur
        for a, b in zip(fan, fan[1:]):
            assert a.right_state == b.left_state
            assert b.speed > a.speed
        states = [fan[0].left_state] + [fr.right_state for fr in fan]
        assert np.all(np.diff(states) > 0) or np.all(np.diff(states) < 0)
        for fr in fan:
            jump = fl(fr.right_state) - fl(fr.left_state)
            assert fr.speed * (fr.right_state - fr.left_state) == pytest.approx(jump, rel=1e-12, abs=1e-15)


class TestInteractions:
    def test_single_front(self):
        fl = polygonalize_flux(burgers, Interval(-1, 1), 2)
        st_ = state_from_fronts(fl, [Front(0.0, 0.5, 1.0, 0.0)], 1.0)
        assert next_interaction(st_) is None

    def test_linear_collision(self):
        fl = PiecewiseAffineFlux([0, 1, 2], [0, 1, 1])  # chord slopes 1 and 0
        fronts = [Front(0.0, 1.0, 2.0, 1.0), Front(1.0, 0.0, 1.0, 0.0)]
        ev = next_interaction(state_from_fronts(fl, fronts, 2.0, t_ref=3.0))
        assert ev.t_star == pytest.approx(4.0)
        assert ev.x_star == pytest.approx(1.0)
        assert ev.front_indices == (0, 1)

    @settings(max_examples=50)
    @given(st.integers(0, 10**6))
    def test_matches_all_pairs(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 8))
        x = np.sort(rng.uniform(-5, 5, n))
        v = rng.uniform(-2, 2, n)
        states = rng.uniform(-1, 1, n + 1)
        fl = PiecewiseAffineFlux([-1.0, 1.0], [0.0, 0.0])
        fronts = [Front(x[i], v[i], states[i], states[i + 1]) for i in range(n)]
        ev = next_interaction(state_from_fronts(fl, fronts, states[0]))
        cand = [(x[i + 1] - x[i]) / (v[i] - v[i + 1]) for i in range(n - 1) if v[i] > v[i + 1]]
        if not cand:
            assert ev is None
        else:
            assert ev.t_star == pytest.approx(min(cand), rel=1e-12)


class TestEvolve:
    def test_single_shock_translates(self):
        fl = polygonalize_flux(burgers, Interval(0, 1), 4)
        state = FrontTrackingState.from_step(fl, StepFunction.heaviside(0.0, 1.0, 0.0))
        out = evolve(state, 2.0)
        assert out.profile() == StepFunction.heaviside(1.0, 1.0, 0.0)
        assert out.history == []

    def test_merging_shocks(self):
        fl = polygonalize_flux(burgers, Interval(0, 2), 2)
        u0 = StepFunction([0.0, 1.0], [2.0, 1.0, 0.0])
        out = evolve(FrontTrackingState.from_step(fl, u0), 3.0)
        assert len(out.fronts) == 1
        assert out.fronts[0].speed == pytest.approx(1.0)
        rec = out.history[0]
        assert rec.t_star == pytest.approx(1.0)
        for s in (0.25, 0.5, 1.0):
            assert tvs_values(rec.levels_after, s) == pytest.approx(tvs_values(rec.levels_before, s))
        assert tvs_values(rec.levels_before, 0.5) == 4.0

    def test_does_not_mutate_input(self):
        fl = polygonalize_flux(burgers, Interval(0, 2), 2)
        state = FrontTrackingState.from_step(fl, StepFunction([0.0, 1.0], [2.0, 1.0, 0.0]))
        before = list(state.fronts)
        evolve(state, 5.0)
        assert state.fronts == before and state.t_ref == 0.0

    def test_backwards_rejected(self):
        fl = polygonalize_flux(burgers, Interval(0, 1), 2)
        state = evolve(FrontTrackingState.from_step(fl, StepFunction.heaviside(0.0, 1.0, 0.0)), 1.0)
        with pytest.raises(ValueError):
            evolve(state, 0.5)

    def test_event_storm_guard(self):
        fl = polygonalize_flux(burgers, Interval(0, 2), 2)
        state = FrontTrackingState.from_step(fl, StepFunction([0.0, 1.0], [2.0, 1.0, 0.0]))
        with pytest.raises(EventStormError):
            evolve(state, 5.0, max_interactions=0)

    def test_simultaneous_collisions(self):
        # three shocks meeting at the same point and time
        fl = PiecewiseAffineFlux([0, 1, 2, 3], [0, 0, 1, 3])  # slopes 0, 1, 2
        u0 = StepFunction([-1.0, 0.0, 1.0], [3.0, 2.0, 1.0, 0.0])
        state = FrontTrackingState.from_step(fl, u0)
        speeds = [f.speed for f in state.fronts]
        assert speeds == [2.0, 1.0, 0.0]
        out = evolve(state, 2.0)
        assert len(out.history) == 1
        assert out.history[0].events[0].front_indices == (0, 1, 2)
        assert len(out.fronts) == 1 and out.fronts[0].left_state == 3.0 and out.fronts[0].right_state == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_states_from_initial_values_and_nodes(self, seed):
        rng = np.random.default_rng(seed)
        fl = random_convex_flux(rng)
        u0 = random_step(rng, int(rng.integers(2, 12)))
        out = evolve(FrontTrackingState.from_step(fl, u0), 5.0)
        allowed = set(u0.levels.tolist()) | set(fl.u_nodes.tolist())
        assert set(out.levels().tolist()) <= allowed

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_l1_contraction(self, seed):
        rng = np.random.default_rng(seed)
        fl = random_convex_flux(rng)
        u0 = random_step(rng, int(rng.integers(2, 10)), compact=True)
        v0 = random_step(rng, int(rng.integers(2, 10)), compact=True)
        d0 = l1_distance(u0, v0)
        (u1, u2), _ = solve(fl, u0, [1.0, 4.0])
        (v1, v2), _ = solve(fl, v0, [1.0, 4.0])
        d1, d2 = l1_distance(u1, v1), l1_distance(u2, v2)
        assert d1 <= d0 + 1e-9 and d2 <= d1 + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**6))
    def test_mass_conserved(self, seed):
        rng = np.random.default_rng(seed)
        fl = random_convex_flux(rng)
        u0 = random_step(rng, int(rng.integers(2, 10)), compact=True)
        (u1,), _ = solve(fl, u0, [3.0])
        w = Interval(-30, 30)
        assert u1.integral(w) == pytest.approx(u0.integral(w), abs=1e-9)


class TestSample:
    def test_at_reference_time(self):
        fl = polygonalize_flux(burgers, Interval(0, 2), 2)
        u0 = StepFunction([0.0, 1.0], [2.0, 1.0, 0.0])
        assert sample_solution(FrontTrackingState.from_step(fl, u0), 0.0) == u0

    def test_translation(self):
        fl = PiecewiseAffineFlux([0, 1], [0, 1])
        state = FrontTrackingState.from_step(fl, StepFunction.heaviside(0.0, 1.0, 0.0))
        assert sample_solution(state, 2.0).breakpoints.tolist() == [2.0]

    def test_window(self):
        fl = PiecewiseAffineFlux([0, 1], [0, 1])
        state = FrontTrackingState.from_step(fl, StepFunction.indicator(0.0, 1.0))
        assert sample_solution(state, 1.0, Interval(1.5, 3.0)) == StepFunction([2.0], [1.0, 0.0])

    def test_past_and_unresolved(self):
        fl = polygonalize_flux(burgers, Interval(0, 2), 2)
        state = FrontTrackingState.from_step(fl, StepFunction([0.0, 1.0], [2.0, 1.0, 0.0]))
        with pytest.raises(ValueError):
            sample_solution(state, 2.0)
        later = evolve(state, 2.0)
        with pytest.raises(ValueError):
            sample_solution(later, 1.0)

"""Wave-front tracking for ``u_t + f(u)_x = 0`` with a piecewise-affine flux.

With a piecewise-affine flux and step initial data every Riemann problem is
solved exactly by finitely many contact discontinuities, one per chord of the
convex (or concave) envelope of the flux between the two states. Fronts move
at constant speed until two of them meet; the states around a collision are
re-solved as a new Riemann problem. The resulting profile is the exact
entropy solution for the polygonal flux.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .func_repr import Interval, StepFunction, restrict

TIME_TOL = 1e-12
POSITION_TOL = 1e-12
STRENGTH_TOL = 1e-14
MAX_INTERACTIONS = 10**6


class EventStormError(RuntimeError):
    """Raised when an evolution needs more interactions than allowed."""


@dataclass(frozen=True, init=False)
class PiecewiseAffineFlux:
    u_nodes: np.ndarray
    f_values: np.ndarray

    def __init__(self, u_nodes: Sequence[float], f_values: Sequence[float]):
        u = np.asarray(u_nodes, dtype=float).ravel()
        f = np.asarray(f_values, dtype=float).ravel()
        if u.size < 2 or u.size != f.size:
            raise ValueError("need at least two nodes and one flux value per node")
        if np.any(np.diff(u) <= 0):
            raise ValueError("u_nodes must be strictly increasing")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(f))):
            raise ValueError("flux nodes and values must be finite")
        u.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "u_nodes", u)
        object.__setattr__(self, "f_values", f)

    @property
    def range(self) -> Interval:
        return Interval(float(self.u_nodes[0]), float(self.u_nodes[-1]))

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.f_values) / np.diff(self.u_nodes)

    def check_states(self, *states: float) -> None:
        lo, hi = self.u_nodes[0], self.u_nodes[-1]
        for w in states:
            if not lo <= w <= hi:
                raise ValueError(f"state {w} outside the flux range [{lo}, {hi}]")

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr < self.u_nodes[0]) or np.any(u_arr > self.u_nodes[-1]):
            raise ValueError("flux evaluated outside its node range")
        out = np.interp(u_arr, self.u_nodes, self.f_values)
        return float(out) if out.ndim == 0 else out

    def is_convex(self) -> bool:
        return bool(np.all(np.diff(self.slopes) >= -1e-14))

    def to_json(self) -> dict:
        return {"u_nodes": self.u_nodes.tolist(), "f_values": self.f_values.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "PiecewiseAffineFlux":
        try:
            return cls(data["u_nodes"], data["f_values"])
        except KeyError as exc:
            raise ValueError(f"flux description lacks field {exc}") from None


def polygonalize_flux(f: Callable, rng: Interval, K: int) -> PiecewiseAffineFlux:
    """Interpolate ``f`` at ``K + 1`` equally spaced nodes of ``rng``."""
    if K < 1:
        raise ValueError("K must be a positive integer")
    if not rng.bounded:
        raise ValueError("flux range must be bounded")
    u = np.linspace(rng.lo, rng.hi, K + 1)
    return PiecewiseAffineFlux(u, np.asarray(f(u), dtype=float))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_hull(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    # monotone chain; collinear points are dropped so chord slopes strictly increase
    hull: list[tuple[float, float]] = []
    for p in pts:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            scale = max(abs(p[0] - o[0]) * abs(a[1] - o[1]), abs(a[0] - o[0]) * abs(p[1] - o[1]), 1e-300)
            if _cross(o, a, p) <= 1e-13 * scale:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def convex_envelope(flux: PiecewiseAffineFlux, ul: float, ur: float) -> list[tuple[float, float]]:
    """Vertices of the envelope that solves the Riemann problem, ordered from ``ul`` to ``ur``.

    Lower convex envelope of the flux graph on ``[ul, ur]`` when ``ul < ur``;
    upper concave envelope on ``[ur, ul]`` when ``ul > ur``.
    """
    if ul == ur:
        raise ValueError("envelope needs two distinct states")
    flux.check_states(ul, ur)
    lo, hi = min(ul, ur), max(ul, ur)
    inner = (flux.u_nodes > lo) & (flux.u_nodes < hi)
    pts = [(lo, flux(lo))]
    pts += list(zip(flux.u_nodes[inner].tolist(), flux.f_values[inner].tolist()))
    pts.append((hi, flux(hi)))
    if ul < ur:
        return _lower_hull(pts)
    # upper hull of the graph = lower hull of the reflected graph, walked from ul down to ur
    upper = _lower_hull([(-u, -f) for u, f in reversed(pts)])
    return [(-u, -f) for u, f in upper]


@dataclass(frozen=True)
class Front:
    x_ref: float
    speed: float
    left_state: float
    right_state: float

    def position(self, dt: float) -> float:
        return self.x_ref + self.speed * dt


def solve_riemann(flux: PiecewiseAffineFlux, ul: float, ur: float, x0: float = 0.0) -> list[Front]:
    """Fan of contact discontinuities from ``ul`` to ``ur`` centred at ``x0``.

    States are monotone along the fan and speeds strictly increase; each speed
    is the Rankine-Hugoniot chord slope between the front's own states.
    """
    flux.check_states(ul, ur)
    if abs(ur - ul) < STRENGTH_TOL:
        return []
    verts = convex_envelope(flux, ul, ur)
    fronts = []
    for (ua, fa), (ub, fb) in zip(verts, verts[1:]):
        if abs(ub - ua) < STRENGTH_TOL:
            continue
        fronts.append(Front(x0, (fb - fa) / (ub - ua), ua, ub))
    return fronts


@dataclass(frozen=True)
class InteractionEvent:
    t_star: float
    front_indices: tuple[int, ...]
    x_star: float
    outgoing: tuple[Front, ...] = ()


@dataclass(frozen=True)
class InteractionRecord:
    """All clusters resolved at one interaction time, with the level sequences around it."""

    t_star: float
    events: tuple[InteractionEvent, ...]
    levels_before: np.ndarray
    levels_after: np.ndarray
    n_fronts_before: int
    n_fronts_after: int


@dataclass
class FrontTrackingState:
    """Fronts (positions at ``t_ref``) and the constant state left of all of them.

    Single-owner mutable value: :func:`evolve` returns a fresh state and never
    mutates its argument.
    """

    flux: PiecewiseAffineFlux
    t_ref: float
    fronts: list[Front]
    left_state: float
    history: list[InteractionRecord] = field(default_factory=list, repr=False)
    n_interactions: int = 0

    @classmethod
    def from_step(cls, flux: PiecewiseAffineFlux, u0: StepFunction, t0: float = 0.0) -> "FrontTrackingState":
        flux.check_states(*u0.levels.tolist())
        fronts: list[Front] = []
        for x, a, b in zip(u0.breakpoints, u0.levels[:-1], u0.levels[1:]):
            fronts.extend(solve_riemann(flux, float(a), float(b), float(x)))
        return cls(flux, float(t0), fronts, u0.left_tail)

    @property
    def right_state(self) -> float:
        return self.fronts[-1].right_state if self.fronts else self.left_state

    def levels(self) -> np.ndarray:
        return np.array([self.left_state] + [f.right_state for f in self.fronts])

    def positions(self, t: float | None = None) -> np.ndarray:
        dt = 0.0 if t is None else t - self.t_ref
        return np.array([f.x_ref + f.speed * dt for f in self.fronts])

    def profile(self) -> StepFunction:
        return StepFunction(self.positions(), self.levels())

    def copy(self) -> "FrontTrackingState":
        return FrontTrackingState(self.flux, self.t_ref, list(self.fronts), self.left_state, list(self.history), self.n_interactions)


def _collision_dt(x: np.ndarray, v: np.ndarray):
    dv = v[:-1] - v[1:]
    approaching = dv > 0
    gap = np.maximum(x[1:] - x[:-1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        dt = np.where(approaching, gap / np.where(approaching, dv, 1.0), np.inf)
    return dt, approaching


def _clusters(colliding: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of colliding adjacent pairs, as (first front, last front) index pairs."""
    runs = []
    i, n = 0, colliding.size
    while i < n:
        if colliding[i]:
            j = i
            while j + 1 < n and colliding[j + 1]:
                j += 1
            runs.append((i, j + 1))
            i = j + 1
        else:
            i += 1
    return runs


def next_interaction(state: FrontTrackingState) -> InteractionEvent | None:
    """Earliest collision of adjacent fronts, or None when no pair approaches."""
    if len(state.fronts) < 2:
        return None
    x = state.positions()
    v = np.array([f.speed for f in state.fronts])
    dt, approaching = _collision_dt(x, v)
    k = int(np.argmin(dt))
    if not np.isfinite(dt[k]):
        return None
    dtmin = float(dt[k])
    xs = x + v * dtmin
    colliding = approaching & ((dt <= dtmin + TIME_TOL * max(1.0, dtmin)) | (np.abs(np.diff(xs)) <= POSITION_TOL))
    for a, b in _clusters(colliding):
        if a <= k < b:
            return InteractionEvent(state.t_ref + dtmin, tuple(range(a, b + 1)), float(xs[a]))
    return InteractionEvent(state.t_ref + dtmin, (k, k + 1), float(xs[k]))


def evolve(
    state: FrontTrackingState,
    t_target: float,
    record: bool = True,
    max_interactions: int = MAX_INTERACTIONS,
) -> FrontTrackingState:
    """Advance the exact solution to ``t_target``, resolving every interaction on the way.

    Simultaneous collisions (times within ``TIME_TOL``) are handled in one pass,
    left to right; each cluster of meeting fronts is replaced by the Riemann fan
    of its outermost states.
    """
    if t_target < state.t_ref:
        raise ValueError(f"cannot evolve backwards from t={state.t_ref} to t={t_target}")
    flux = state.flux
    t = state.t_ref
    x = state.positions()
    v = np.array([f.speed for f in state.fronts])
    lefts = [f.left_state for f in state.fronts]
    rights = [f.right_state for f in state.fronts]
    history = list(state.history)
    count = state.n_interactions

    while x.size >= 2:
        dt, approaching = _collision_dt(x, v)
        dtmin = float(dt.min())
        if not math.isfinite(dtmin) or t + dtmin > t_target:
            break
        t_star = t + dtmin
        x = x + v * dtmin
        colliding = approaching & (
            (dt <= dtmin + TIME_TOL * max(1.0, t_star)) | (np.abs(np.diff(x)) <= POSITION_TOL)
        )
        runs = _clusters(colliding)
        count += len(runs)
        if count > max_interactions:
            raise EventStormError(
                f"more than {max_interactions} interactions before t={t_star:.17g} "
                f"({x.size} fronts alive); flux or data likely degenerate"
            )
        levels_before = np.array([state.left_state] + rights) if record else None
        new_x, new_v, new_l, new_r = [], [], [], []
        events = []
        prev = 0
        for a, b in runs:
            new_x.extend(x[prev:a].tolist())
            new_v.extend(v[prev:a].tolist())
            new_l.extend(lefts[prev:a])
            new_r.extend(rights[prev:a])
            x_star = float(np.mean(x[a : b + 1]))
            fan = solve_riemann(flux, lefts[a], rights[b], x_star)
            events.append(InteractionEvent(t_star, tuple(range(a, b + 1)), x_star, tuple(fan)))
            for fr in fan:
                new_x.append(x_star)
                new_v.append(fr.speed)
                new_l.append(fr.left_state)
                new_r.append(fr.right_state)
            prev = b + 1
        new_x.extend(x[prev:].tolist())
        new_v.extend(v[prev:].tolist())
        new_l.extend(lefts[prev:])
        new_r.extend(rights[prev:])
        n_before = x.size
        x, v, lefts, rights = np.array(new_x), np.array(new_v), new_l, new_r
        if record:
            history.append(
                InteractionRecord(
                    t_star,
                    tuple(events),
                    levels_before,
                    np.array([state.left_state] + rights),
                    n_before,
                    x.size,
                )
            )
        t = t_star

    x = x + v * (t_target - t) if x.size else x
    fronts = [Front(float(xi), float(vi), l, r) for xi, vi, l, r in zip(x, v, lefts, rights)]
    return FrontTrackingState(flux, float(t_target), fronts, state.left_state, history, count)


def sample_solution(state: FrontTrackingState, t: float, window: Interval | None = None) -> StepFunction:
    """Profile at time ``t`` (no interaction may lie in ``]t_ref, t[``), optionally restricted."""
    if t < state.t_ref:
        raise ValueError(f"t={t} lies before the state time {state.t_ref}")
    ev = next_interaction(state)
    if ev is not None and t > ev.t_star + TIME_TOL * max(1.0, ev.t_star):
        raise ValueError(f"an interaction at t={ev.t_star} precedes t={t}; call evolve first")
    u = StepFunction(state.positions(t), state.levels())
    return u if window is None else restrict(u, window)


def solve(flux: PiecewiseAffineFlux, u0: StepFunction, times: Iterable[float], record: bool = False):
    """Profiles at increasing ``times`` from ``u0`` (convenience wrapper)."""
    state = FrontTrackingState.from_step(flux, u0)
    out = []
    for t in times:
        state = evolve(state, t, record=record)
        out.append(state.profile())
    return out, state

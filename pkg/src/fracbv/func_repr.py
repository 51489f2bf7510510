"""Representations of 1D functions: step functions on the real line and sampled grids.

A :class:`StepFunction` is constant on the half-open cells ``]x_{i-1}, x_i]`` and
constant on the two tails ``]-inf, x_0]`` and ``]x_n, +inf[``. Its full list of
levels (left tail, cell values, right tail) is what every variation functional
looks at; breakpoints only matter for integrals and for placing sample points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

BREAKPOINT_TOL = 1e-12
SIMPSON_SUBCELLS = 64


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi) or not self.lo < self.hi:
            raise ValueError(f"degenerate interval [{self.lo}, {self.hi}]")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @classmethod
    def parse(cls, text: str) -> "Interval":
        lo, hi = (float(v) for v in text.split(","))
        return cls(lo, hi)


@dataclass(frozen=True, init=False)
class StepFunction:
    """Piecewise-constant function on R with finitely many breakpoints.

    Construct from ``breakpoints`` and the full ``levels`` sequence
    (``len(levels) == len(breakpoints) + 1``). The stored form is canonical:
    breakpoints closer than ``BREAKPOINT_TOL`` are merged (the sliver cell is
    dropped) and adjacent equal levels are fused.
    """

    breakpoints: np.ndarray
    levels: np.ndarray

    def __init__(self, breakpoints: Sequence[float], levels: Sequence[float]):
        bp = np.asarray(breakpoints, dtype=float).ravel()
        lv = np.asarray(levels, dtype=float).ravel()
        if lv.size != bp.size + 1:
            raise ValueError(
                f"need len(levels) == len(breakpoints) + 1, got {lv.size} and {bp.size}"
            )
        if not (np.all(np.isfinite(bp)) and np.all(np.isfinite(lv))):
            raise ValueError("breakpoints and levels must be finite")
        if bp.size > 1 and np.any(np.diff(bp) < -BREAKPOINT_TOL):
            raise ValueError("breakpoints must be increasing")
        bp, lv = _canonical(bp, lv)
        bp.setflags(write=False)
        lv.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)

    @classmethod
    def from_parts(cls, breakpoints, values, left_tail: float, right_tail: float):
        return cls(breakpoints, [left_tail, *values, right_tail])

    @classmethod
    def constant(cls, c: float) -> "StepFunction":
        return cls([], [c])

    @classmethod
    def indicator(cls, lo: float, hi: float, height: float = 1.0) -> "StepFunction":
        return cls([lo, hi], [0.0, height, 0.0])

    @classmethod
    def heaviside(cls, x0: float = 0.0, left: float = 0.0, right: float = 1.0):
        return cls([x0], [left, right])

    @property
    def values(self) -> np.ndarray:
        return self.levels[1:-1]

    @property
    def left_tail(self) -> float:
        return float(self.levels[0])

    @property
    def right_tail(self) -> float:
        return float(self.levels[-1])

    @property
    def is_constant(self) -> bool:
        return self.levels.size == 1

    def canonical(self) -> "StepFunction":
        return self

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="left")
        out = self.levels[idx]
        return float(out) if np.ndim(out) == 0 else out

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.levels, other.levels
        )

    def __hash__(self):
        return hash((self.breakpoints.tobytes(), self.levels.tobytes()))

    def __repr__(self):
        return f"StepFunction(breakpoints={self.breakpoints.tolist()}, levels={self.levels.tolist()})"

    def __neg__(self):
        return StepFunction(self.breakpoints, -self.levels)

    def __sub__(self, other: "StepFunction") -> "StepFunction":
        return combine(self, other, np.subtract)

    def __add__(self, other: "StepFunction") -> "StepFunction":
        return combine(self, other, np.add)

    def scaled(self, factor: float) -> "StepFunction":
        return StepFunction(self.breakpoints, factor * self.levels)

    def dilated(self, lam: float) -> "StepFunction":
        """Return ``x -> u(lam * x)`` (up to the value on breakpoints when lam < 0)."""
        if lam == 0:
            raise ValueError("dilation factor must be nonzero")
        if lam > 0:
            return StepFunction(self.breakpoints / lam, self.levels)
        return StepFunction(self.breakpoints[::-1] / lam, self.levels[::-1])

    def sample_points(self) -> np.ndarray:
        """One representative abscissa per level: tail points at distance 1, cell midpoints."""
        bp = self.breakpoints
        if bp.size == 0:
            return np.array([0.0])
        mids = 0.5 * (bp[:-1] + bp[1:])
        return np.concatenate(([bp[0] - 1.0], mids, [bp[-1] + 1.0]))

    def integral(self, window: Interval) -> float:
        """Integral over a bounded window."""
        if not window.bounded:
            raise ValueError("window must be bounded")
        edges = np.concatenate(
            ([window.lo], self.breakpoints[(self.breakpoints > window.lo) & (self.breakpoints < window.hi)], [window.hi])
        )
        mids = 0.5 * (edges[:-1] + edges[1:])
        return float(np.sum(self(mids) * np.diff(edges)))


def _canonical(bp: np.ndarray, lv: np.ndarray):
    if bp.size > 1:
        keep = np.concatenate(([True], np.diff(bp) > BREAKPOINT_TOL))
        if not keep.all():
            # a dropped breakpoint removes the sliver cell to its left
            lv = lv[np.concatenate((keep, [True]))]
            bp = bp[keep]
    if bp.size:
        distinct = lv[1:] != lv[:-1]
        if not distinct.all():
            bp = bp[distinct]
            lv = np.concatenate((lv[:1], lv[1:][distinct]))
    return bp.copy(), lv.copy()


def combine(u: StepFunction, v: StepFunction, op: Callable) -> StepFunction:
    """Pointwise ``op(u, v)`` on the common refinement of the breakpoints."""
    bp = np.union1d(u.breakpoints, v.breakpoints)
    if bp.size == 0:
        return StepFunction([], [op(u.levels[0], v.levels[0])])
    pts = np.concatenate(([bp[0] - 1.0], 0.5 * (bp[:-1] + bp[1:]), [bp[-1] + 1.0]))
    return StepFunction(bp, op(u(pts), v(pts)))


def l1_distance(u: StepFunction, v: StepFunction, window: Interval | None = None) -> float:
    """L1 distance on ``window`` (on R when omitted; requires equal tails there)."""
    d = combine(u, v, lambda a, b: np.abs(a - b))
    if window is None:
        if d.left_tail != 0.0 or d.right_tail != 0.0:
            return math.inf
        if d.is_constant:
            return 0.0
        window = Interval(float(d.breakpoints[0]), float(d.breakpoints[-1]))
    return d.integral(window)


@dataclass(frozen=True)
class GridFunction:
    x0: float
    dx: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).ravel()
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if s.size == 0:
            raise ValueError("a grid function needs at least one sample")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_closure(cls, u: Callable, lo: float, hi: float, n: int) -> "GridFunction":
        x = np.linspace(lo, hi, n)
        return cls(lo, x[1] - x[0], np.asarray(u(x), dtype=float))

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.samples.size)

    def __len__(self):
        return self.samples.size

    def __call__(self, x):
        """Piecewise-linear interpolant, constant beyond the end samples."""
        return np.interp(x, self.x, self.samples)


FunctionLike = Union[StepFunction, GridFunction, Callable]


def shift_difference_lp(u: StepFunction, h: float, p: float) -> float:
    """Exact ``(1/h) * int |u(x+h) - u(x)|^p dx`` for a step function.

    ``u(x+h) - u(x)`` is itself a step function with breakpoints in
    ``{x_i} U {x_i - h}`` and it vanishes outside ``[x_0 - h, x_n]``, so the
    integral is a finite sum over the merged cells.
    """
    if not h > 0:
        raise ValueError("shift h must be positive")
    if not p >= 1:
        raise ValueError("exponent p must be >= 1")
    bp = u.breakpoints
    if bp.size == 0:
        return 0.0
    edges = np.union1d(bp, bp - h)
    mids = 0.5 * (edges[:-1] + edges[1:])
    diff = np.abs(u(mids + h) - u(mids))
    with np.errstate(divide="ignore"):
        powered = np.where(diff > 0, np.exp(p * np.log(np.where(diff > 0, diff, 1.0))), 0.0)
    return float(np.sum(powered * np.diff(edges)) / h)


def _simpson_cell_means(u: Callable, left: np.ndarray, h: float, n_sub: int = SIMPSON_SUBCELLS) -> np.ndarray:
    # composite Simpson with n_sub subcells per cell, vectorized over cells
    m = 2 * n_sub
    w = np.ones(m + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    offs = np.linspace(0.0, h, m + 1)
    pts = left[:, None] + offs[None, :]
    vals = np.asarray(u(pts.ravel()), dtype=float).reshape(pts.shape)
    return (vals @ w) / (3.0 * m)


def step_approximate(u: FunctionLike, h: float, window: Interval) -> StepFunction:
    """Cell averages of ``u`` on the cells ``]ph, (p+1)h]`` meeting ``window``.

    Step functions are averaged exactly; grids (via their linear interpolant)
    and closures use composite Simpson. Tails extend the end cells.
    """
    if not h > 0:
        raise ValueError("cell size h must be positive")
    if not window.bounded:
        raise ValueError("window must be bounded")
    p_lo = math.floor(window.lo / h)
    p_hi = math.ceil(window.hi / h)
    if p_hi <= p_lo:
        raise ValueError("window contains no cell")
    left = h * np.arange(p_lo, p_hi, dtype=float)
    if isinstance(u, StepFunction):
        means = np.array([u.integral(Interval(a, a + h)) / h for a in left])
    else:
        means = _simpson_cell_means(u, left, h)
    edges = np.concatenate((left, [left[-1] + h]))
    return StepFunction(edges, np.concatenate(([means[0]], means, [means[-1]])))


def restrict(u: StepFunction, interval: Interval) -> StepFunction:
    """Restriction of ``u`` to the interior of ``interval``, extended by its one-sided limits."""
    bp = u.breakpoints
    k_lo = 0 if interval.lo == -math.inf else int(np.searchsorted(bp, interval.lo, side="right"))
    k_hi = bp.size if interval.hi == math.inf else int(np.searchsorted(bp, interval.hi, side="left"))
    if k_hi < k_lo:
        k_hi = k_lo
    return StepFunction(bp[k_lo:k_hi], u.levels[k_lo : k_hi + 1])


# --- CSV ---------------------------------------------------------------------


def format_float(v: float) -> str:
    if v == math.inf:
        return "+inf"
    if v == -math.inf:
        return "-inf"
    return f"{v:.17g}"


def write_step_csv(u: StepFunction, path) -> None:
    """Rows ``x_right,value``: ``-inf`` marker row, one row per cell, ``+inf`` row for the right tail.

    The cell ``]-inf, x_0]`` gets the row ``x_0,<left tail>``, so the marker row
    and the first finite row carry the same value.
    """
    rows = [(-math.inf, u.left_tail)]
    bp = u.breakpoints
    if bp.size:
        rows.append((bp[0], u.left_tail))
        rows.extend(zip(bp[1:], u.values))
    rows.append((math.inf, u.right_tail))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_right", "value"])
        for x, v in rows:
            w.writerow([format_float(float(x)), format_float(float(v))])


def read_step_csv(path) -> StepFunction:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x_right", "value"]:
            raise ValueError(f"{path}: expected header 'x_right,value'")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    if len(rows) < 2 or rows[0][0] != -math.inf or rows[-1][0] != math.inf:
        raise ValueError(f"{path}: first row must be -inf, last row +inf")
    left, right = rows[0][1], rows[-1][1]
    finite = rows[1:-1]
    if not finite:
        if left != right:
            raise ValueError(f"{path}: no breakpoint between different tails")
        return StepFunction.constant(left)
    if finite[0][1] != left:
        raise ValueError(f"{path}: first finite row must repeat the left tail (cell ]-inf, x_0])")
    xs = [x for x, _ in finite]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError(f"{path}: x_right must be strictly increasing")
    return StepFunction(xs, [left] + [v for _, v in finite[1:]] + [right])


def write_grid_csv(g: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "value"])
        for x, v in zip(g.x, g.samples):
            w.writerow([format_float(float(x)), format_float(float(v))])


def read_grid_csv(path) -> GridFunction:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["x", "value"]:
            raise ValueError(f"{path}: expected header 'x,value'")
        rows = np.array([[float(r[0]), float(r[1])] for r in reader if r])
    if rows.shape[0] < 2:
        raise ValueError(f"{path}: need at least two samples")
    dx = np.diff(rows[:, 0])
    if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * max(1.0, abs(dx[0])):
        raise ValueError(f"{path}: grid must be uniform and increasing")
    return GridFunction(rows[0, 0], float(np.mean(dx)), rows[:, 1])


def write_points_csv(points: Sequence[float], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x"])
        for x in points:
            w.writerow([format_float(float(x))])

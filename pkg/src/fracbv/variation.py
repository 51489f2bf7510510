"""Fractional total variation TV^s and the BV^s seminorm.

For a step function the supremum over subdivisions is a maximum over
subsequences of its level sequence: a subdivision only sees the levels of the
cells its points fall in, and any subsequence of levels is realized by one
point per chosen cell. The maximum is found by an O(n^2) dynamic program.
Greedy refinement is wrong here (refining a subdivision can lower TV^s), so the
program is exact, not heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .func_repr import GridFunction, StepFunction, shift_difference_lp

DEFAULT_H_GRID = tuple(2.0 ** -k for k in range(21))


@dataclass(frozen=True)
class SExponent:
    """Exponent pair with ``p = 1/s`` stored exactly."""

    p: float

    def __post_init__(self):
        if not (self.p >= 1 and math.isfinite(self.p)):
            raise ValueError(f"need p = 1/s >= 1, got {self.p}")

    @classmethod
    def from_s(cls, s: float) -> "SExponent":
        if not 0 < s <= 1:
            raise ValueError(f"s must lie in (0, 1], got {s}")
        return cls(1.0 / s)

    @property
    def s(self) -> float:
        return 1.0 / self.p


ExponentLike = Union[SExponent, float]


def as_exponent(s: ExponentLike) -> SExponent:
    return s if isinstance(s, SExponent) else SExponent.from_s(float(s))


def powered(d, p: float):
    """``|d|**p`` as ``exp(p log|d|)``, with exact zeros for zero increments."""
    a = np.abs(np.asarray(d, dtype=float))
    pos = a > 0
    out = np.zeros_like(a)
    out[pos] = np.exp(p * np.log(a[pos]))
    return out


@dataclass(frozen=True)
class Subdivision:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size < 2:
            raise ValueError("a subdivision needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("subdivision points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class VariationReport:
    tvs: float
    witness: Subdivision
    seminorm: float


def _points(sigma) -> np.ndarray:
    return sigma.points if isinstance(sigma, Subdivision) else Subdivision(sigma).points


def tvs_on_subdivision(u, sigma, s: ExponentLike) -> float:
    """``sum |u(x_i) - u(x_{i-1})|^{1/s}`` over the points of ``sigma``."""
    e = as_exponent(s)
    vals = np.asarray(u(_points(sigma)), dtype=float)
    return float(np.sum(powered(np.diff(vals), e.p)))


def extremal_points(u, sigma) -> Subdivision:
    """Endpoints of ``sigma`` plus the interior points where u is a (weak) local max or min along sigma."""
    pts = _points(sigma)
    if pts.size <= 2:
        return Subdivision(pts)
    v = np.asarray(u(pts), dtype=float)
    prev, mid, nxt = v[:-2], v[1:-1], v[2:]
    is_max = np.maximum(prev, nxt) <= mid
    is_min = mid <= np.minimum(prev, nxt)
    keep = np.concatenate(([True], is_max | is_min, [True]))
    return Subdivision(pts[keep])


def turning_indices(values: np.ndarray) -> np.ndarray:
    """Indices of the first element, the last element and the strict local extrema.

    Runs of equal values are represented by their first element. Interior
    points of a monotone run never help a TV^s-type sum (by strict convexity
    of ``x -> x^p``), so the maximizing subsequence can be searched among these.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if n <= 2:
        return np.arange(n)
    first_of_run = np.concatenate(([True], v[1:] != v[:-1]))
    idx = np.flatnonzero(first_of_run)
    w = v[idx]
    if w.size <= 2:
        return idx
    d = np.diff(w)
    turn = np.signbit(d[:-1]) != np.signbit(d[1:])  # a product of tiny increments would underflow
    keep = np.concatenate(([True], turn, [True]))
    return idx[keep]


def max_subsequence_variation(values, s: ExponentLike, plus: bool = False):
    """Maximum of ``sum phi(w_{j+1} - w_j)^{1/s}`` over subsequences ``w`` of ``values``.

    ``phi`` is ``abs`` (or the positive part when ``plus``). Returns the value and
    the indices of an attaining subsequence; ties go to earlier indices.
    """
    e = as_exponent(s)
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty value sequence")
    idx = turning_indices(v)
    w = v[idx]
    m = w.size
    best = np.zeros(m)
    parent = np.full(m, -1)
    for i in range(1, m):
        d = w[i] - w[:i]
        if plus:
            d = np.maximum(d, 0.0)
        cand = best[:i] + powered(d, e.p)
        j = int(np.argmax(cand))
        best[i] = cand[j]
        parent[i] = j
    end = int(np.argmax(best))
    value = float(best[end])
    if value == 0.0:
        return 0.0, idx[:1]
    chain = [end]
    while parent[chain[-1]] >= 0 and best[chain[-1]] > 0:
        chain.append(int(parent[chain[-1]]))
    chain.reverse()
    return value, idx[np.array(chain)]


def tvs_values(values, s: ExponentLike) -> float:
    """TV^s of any function whose ordered level sequence is ``values``."""
    return max_subsequence_variation(values, s)[0]


def _report(value: float, witness: np.ndarray, e: SExponent) -> VariationReport:
    return VariationReport(value, Subdivision(witness), value ** e.s if value > 0 else 0.0)


def tvs_step_exact(u: StepFunction, s: ExponentLike) -> VariationReport:
    """Exact TV^s of a step function on R, with an attaining subdivision."""
    e = as_exponent(s)
    value, chosen = max_subsequence_variation(u.levels, e)
    pts = u.sample_points()
    witness = pts[chosen] if chosen.size >= 2 else np.array([pts[0] - 1.0, pts[0] + 1.0])
    return _report(value, witness, e)


def tvs_plus_step(u: StepFunction, s: ExponentLike) -> float:
    """One-sided TV^s_+: the same supremum counting only upward increments."""
    return max_subsequence_variation(u.levels, s, plus=True)[0]


def tvs_plus_values(values, s: ExponentLike) -> float:
    return max_subsequence_variation(values, s, plus=True)[0]


def tvs_grid_lower_bound(g: GridFunction, s: ExponentLike) -> VariationReport:
    """TV^s over the subdivision formed by the samples.

    Any function through the samples has at least this much TV^s.
    """
    e = as_exponent(s)
    if len(g) < 2:
        raise ValueError("need at least two samples")
    value, chosen = max_subsequence_variation(g.samples, e)
    x = g.x
    witness = x[chosen] if chosen.size >= 2 else x[[0, -1]]
    return _report(value, witness, e)


def lip_functional(u: StepFunction, s: ExponentLike, h_grid: Sequence[float] | None = None) -> float:
    """``max_h (1/h) int |u(x+h) - u(x)|^{1/s} dx`` over a finite set of shifts.

    Bounded above by TV^s u on R; the default shifts are ``2^-k, k = 0..20``.
    """
    e = as_exponent(s)
    hs = DEFAULT_H_GRID if h_grid is None else tuple(h_grid)
    if not hs:
        raise ValueError("h_grid must be nonempty")
    return max(shift_difference_lp(u, float(h), e.p) for h in hs)

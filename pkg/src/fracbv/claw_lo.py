"""Lax-Oleinik solver for degenerate convex fluxes and checks of its estimates.

The entropy solution is ``u(t, x) = b((x - y)/t)`` where ``y`` minimizes
``G(y) = U0(y) + t h((x - y)/t)``; ``b`` inverts the velocity ``a = f'``,
``U0`` is a primitive of the data and ``h`` is the primitive of ``b``
vanishing at ``a(0)``. Here ``h`` is evaluated through the Legendre identity
``h(xi) = xi b(xi) - f(b(xi)) + f(0)``, which needs no quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .func_repr import GridFunction, Interval, StepFunction
from .variation import SExponent, as_exponent, tvs_grid_lower_bound, tvs_plus_values

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_SCAN = 4096
TABLE_SIZE = 1 << 16


class BracketError(ValueError):
    """The velocity does not bracket the requested value (monotonicity broken)."""


# --- flux model --------------------------------------------------------------


@dataclass(frozen=True)
class ConvexFluxModel:
    """Smooth flux with increasing velocity on ``K_range``.

    ``a`` and ``f`` are continued outside ``K_range`` by a translated power of
    exponent ``p`` (``a(hi + d) = a(hi) + C_deg d^p``). The continuation is
    continuous, keeps the degeneracy exponent (the constant only holds on
    ``K_range``) and makes the inverse ``b`` defined on all of R.
    ``reflected`` marks a model built from a concave flux through ``u -> -u``.
    """

    f: Callable
    a: Callable
    K_range: Interval
    p: float
    C_deg: float
    q_exp: float
    b_inner: Callable | None = field(default=None, repr=False)
    name: str = "custom"
    reflected: bool = False

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError("degeneracy exponent p must be >= 1")
        if not self.C_deg > 0:
            raise ValueError("degeneracy constant must be positive")
        if not self.K_range.bounded:
            raise ValueError("K_range must be bounded")
        if not self.a_lo < self.a_hi:
            raise ValueError("velocity must be increasing on K_range")

    # constants
    @property
    def M(self) -> float:
        return max(abs(self.K_range.lo), abs(self.K_range.hi))

    @property
    def s(self) -> float:
        return 1.0 / self.p

    @property
    def D_const(self) -> float:
        return 1.0 / self.C_deg

    @property
    def c_zero(self) -> float:
        return float(self.a(np.array(0.0)))

    @property
    def a_lo(self) -> float:
        return float(self.a(np.array(self.K_range.lo)))

    @property
    def a_hi(self) -> float:
        return float(self.a(np.array(self.K_range.hi)))

    @property
    def sup_a(self) -> float:
        return max(abs(self.a_lo), abs(self.a_hi))

    @property
    def f0(self) -> float:
        return float(self.f(np.array(0.0)))

    # extended velocity, flux and inverse
    def velocity(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.K_range.lo, self.K_range.hi
        inner = np.clip(u, lo, hi)
        out = np.asarray(self.a(inner), dtype=float).copy()
        C, p = self.C_deg, self.p
        out = np.where(u > hi, self.a_hi + C * np.maximum(u - hi, 0.0) ** p, out)
        out = np.where(u < lo, self.a_lo - C * np.maximum(lo - u, 0.0) ** p, out)
        return out

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        lo, hi = self.K_range.lo, self.K_range.hi
        out = np.asarray(self.f(np.clip(u, lo, hi)), dtype=float).copy()
        C, p = self.C_deg, self.p
        f_hi, f_lo = float(self.f(np.array(hi))), float(self.f(np.array(lo)))
        dh = np.maximum(u - hi, 0.0)
        dl = np.maximum(lo - u, 0.0)
        out = np.where(u > hi, f_hi + self.a_hi * dh + C * dh ** (p + 1) / (p + 1), out)
        out = np.where(u < lo, f_lo - self.a_lo * dl + C * dl ** (p + 1) / (p + 1), out)
        return out

    def inverse_velocity(self, xi):
        """``b(xi)``: closed form when available, else a dense monotone table."""
        xi = np.asarray(xi, dtype=float)
        lo, hi = self.K_range.lo, self.K_range.hi
        a_lo, a_hi = self.a_lo, self.a_hi
        inner = np.clip(xi, a_lo, a_hi)
        if self.b_inner is not None:
            out = np.clip(np.asarray(self.b_inner(inner), dtype=float), lo, hi)
        else:
            u_tab, a_tab = self._table()
            # bracket from the table, then bisection on the exact velocity
            k = np.clip(np.searchsorted(a_tab, inner, side="left"), 1, u_tab.size - 1)
            lo_b, hi_b = u_tab[k - 1], u_tab[k]
            for _ in range(120):
                mid = 0.5 * (lo_b + hi_b)
                right = np.asarray(self.a(mid), dtype=float) < inner
                lo_b = np.where(right, mid, lo_b)
                hi_b = np.where(right, hi_b, mid)
                if np.all(hi_b - lo_b <= 4 * np.finfo(float).eps * np.maximum(np.abs(lo_b), np.abs(hi_b))):
                    break
            out = 0.5 * (lo_b + hi_b)
        C, s = self.C_deg, 1.0 / self.p
        out = np.where(xi > a_hi, hi + (np.maximum(xi - a_hi, 0.0) / C) ** s, out)
        out = np.where(xi < a_lo, lo - (np.maximum(a_lo - xi, 0.0) / C) ** s, out)
        return out

    def _table(self):
        cache = self.__dict__.get("_tab")
        if cache is None:
            u_tab = np.linspace(self.K_range.lo, self.K_range.hi, TABLE_SIZE + 1)
            a_tab = np.maximum.accumulate(np.asarray(self.a(u_tab), dtype=float))
            cache = (u_tab, a_tab)
            object.__setattr__(self, "_tab", cache)
        return cache

    def h(self, xi):
        """Primitive of ``b`` vanishing at ``a(0)``; convex and nonnegative."""
        xi = np.asarray(xi, dtype=float)
        bx = self.inverse_velocity(xi)
        return xi * bx - self.flux(bx) + self.f0

    # constructors
    @classmethod
    def burgers(cls, M: float = 1.0) -> "ConvexFluxModel":
        return cls(
            f=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
            a=lambda u: np.asarray(u, dtype=float),
            K_range=Interval(-M, M),
            p=1.0,
            C_deg=1.0,
            q_exp=1.0,
            b_inner=lambda xi: np.asarray(xi, dtype=float),
            name="burgers",
        )

    @classmethod
    def power(cls, alpha: float, M: float = 1.0) -> "ConvexFluxModel":
        """``f(u) = |u|^{1+alpha}/(1+alpha)``; degeneracy ``p = max(1, alpha)``, ``q = 1/alpha``."""
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        if alpha >= 1:
            p, C = alpha, 2.0 ** (1.0 - alpha)
        else:
            p, C = 1.0, alpha * M ** (alpha - 1.0)

        def f(u):
            u = np.asarray(u, dtype=float)
            return np.abs(u) ** (1.0 + alpha) / (1.0 + alpha)

        def a(u):
            u = np.asarray(u, dtype=float)
            return np.sign(u) * np.abs(u) ** alpha

        def b(xi):
            xi = np.asarray(xi, dtype=float)
            return np.sign(xi) * np.abs(xi) ** (1.0 / alpha)

        name = "burgers" if alpha == 1 else ("cubic" if alpha == 2 else f"power{alpha:g}")
        return cls(f, a, Interval(-M, M), p, C, 1.0 / alpha, b, name)

    @classmethod
    def from_table(cls, u_nodes: Sequence[float], a_values: Sequence[float], p: float,
                   C_deg: float | None = None, q_exp: float | None = None) -> "ConvexFluxModel":
        """Velocity given at nodes and interpolated linearly; ``f`` is its exact primitive (``f(0)`` = 0 when 0 is in range)."""
        u = np.asarray(u_nodes, dtype=float)
        av = np.asarray(a_values, dtype=float)
        if u.size < 2 or u.size != av.size or np.any(np.diff(u) <= 0):
            raise ValueError("table needs >= 2 strictly increasing nodes and one velocity per node")
        d = np.diff(av)
        if np.all(d < 0):
            model = cls.from_table(-u[::-1], av[::-1], p, C_deg, q_exp)
            return replace(model, reflected=True)
        if not np.all(d > 0):
            raise ValueError("tabulated velocity must be strictly monotone")
        slope = d / np.diff(u)
        F = np.concatenate(([0.0], np.cumsum(0.5 * (av[:-1] + av[1:]) * np.diff(u))))

        def a(x):
            return np.interp(np.asarray(x, dtype=float), u, av)

        def f_raw(x):
            x = np.asarray(x, dtype=float)
            k = np.clip(np.searchsorted(u, x, side="right") - 1, 0, u.size - 2)
            dx = x - u[k]
            return F[k] + av[k] * dx + 0.5 * slope[k] * dx * dx

        offset = float(f_raw(np.array(0.0))) if u[0] <= 0 <= u[-1] else 0.0

        def f(x):
            return f_raw(x) - offset

        def b(xi):
            return np.interp(np.asarray(xi, dtype=float), av, u)

        K = Interval(float(u[0]), float(u[-1]))
        if C_deg is None:
            C_deg = estimate_degeneracy(a, K, p, 2001)
        model = cls(f, a, K, p, C_deg, 1.0, b, "table")
        if q_exp is None:
            q_exp = smallest_admissible_q(model)
        return replace(model, q_exp=q_exp)

    @classmethod
    def from_callables(cls, f: Callable, a: Callable, K: Interval, p: float,
                       C_deg: float | None = None, q_exp: float | None = None,
                       name: str = "custom") -> "ConvexFluxModel":
        """Model from closures; a decreasing velocity (concave flux) is handled by ``u -> -u``."""
        a_lo, a_hi = float(a(np.array(K.lo))), float(a(np.array(K.hi)))
        if a_hi < a_lo:
            inner = cls.from_callables(
                lambda v: -np.asarray(f(-np.asarray(v, dtype=float))),
                lambda v: np.asarray(a(-np.asarray(v, dtype=float))),
                Interval(-K.hi, -K.lo), p, C_deg, q_exp, name,
            )
            return replace(inner, reflected=True)
        if C_deg is None:
            C_deg = estimate_degeneracy(a, K, p, 2001)
        model = cls(f, a, K, p, C_deg, 1.0, None, name)
        if q_exp is None:
            q_exp = smallest_admissible_q(model)
        return replace(model, q_exp=q_exp)

    @classmethod
    def from_spec(cls, spec: dict, M: float = 1.0) -> "ConvexFluxModel":
        """Build from a JSON-style descriptor: ``burgers``, ``power`` (``alpha``) or ``table``."""
        kind = spec.get("kind")
        if kind == "burgers":
            return cls.burgers(float(spec.get("M", M)))
        if kind == "power":
            if "alpha" not in spec:
                raise ValueError("power flux needs 'alpha'")
            return cls.power(float(spec["alpha"]), float(spec.get("M", M)))
        if kind == "table":
            for key in ("u_nodes", "a_values", "p"):
                if key not in spec:
                    raise ValueError(f"table flux needs '{key}'")
            return cls.from_table(spec["u_nodes"], spec["a_values"], float(spec["p"]),
                                  spec.get("C_deg"), spec.get("q"))
        raise ValueError(f"unknown flux kind {kind!r} (expected burgers, power or table)")


# --- analysis of the flux -----------------------------------------------------


def estimate_degeneracy(a: Callable, K: Interval, p: float, n_grid: int) -> float:
    """Grid minimum of ``|a(u) - a(v)| / |u - v|^p`` over distinct pairs of a uniform grid on K.

    An upper estimate of the true infimum; a tiny value means ``p`` is too small.
    """
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    u = np.linspace(K.lo, K.hi, n_grid)
    av = np.asarray(a(u), dtype=float)
    best = math.inf
    for i in range(n_grid - 1):
        r = np.abs(av[i + 1 :] - av[i]) / (u[i + 1 :] - u[i]) ** p
        m = float(r.min())
        if m < best:
            best = m
    if not best > 0:
        raise ValueError("nonpositive degeneracy ratio: velocity not strictly monotone on K")
    return best


def _q_ratios(model: ConvexFluxModel, q: float, V: np.ndarray) -> np.ndarray:
    c = model.c_zero
    return np.abs(model.inverse_velocity(c + V)) / np.abs(V) ** q


def _velocity_offsets(model: ConvexFluxModel, n_grid: int, geometric: bool) -> list[np.ndarray]:
    c = model.c_zero
    sides = []
    for extent in (model.a_lo - c, model.a_hi - c):
        if abs(extent) <= 0:
            continue
        if geometric:
            mags = np.geomspace(abs(extent) * 1e-9, abs(extent), n_grid)
        else:
            mags = np.linspace(0.0, abs(extent), n_grid + 1)[1:]
        sides.append(math.copysign(1.0, extent) * mags)
    if not sides:
        raise ValueError("degenerate velocity range a(K)")
    return sides


def estimate_q(model: ConvexFluxModel, n_grid: int = 4096, q: float | None = None) -> float:
    """Grid infimum of ``|b(a(0) + V)| / |V|^q`` over ``V`` in ``a(K) - a(0)``, ``V != 0``."""
    qq = model.q_exp if q is None else q
    sides = _velocity_offsets(model, n_grid, geometric=False)
    return float(min(_q_ratios(model, qq, V).min() for V in sides))


def smallest_admissible_q(model: ConvexFluxModel, n_grid: int = 512, q_max: float = 64.0) -> float:
    """Bisection for the smallest ``q`` whose ratio does not collapse as ``V -> 0``.

    On a fixed geometric grid, ``q`` is inadmissible when the ratio is smallest
    at the innermost point of some side (it keeps decreasing toward ``V = 0``).
    """
    sides = _velocity_offsets(model, n_grid, geometric=True)

    def admissible(q: float) -> bool:
        for V in sides:
            r = _q_ratios(model, q, V)
            if r[0] < r[1] * (1 - 1e-12):
                return False
        return True

    lo, hi = 0.0, 1.0
    while not admissible(hi):
        lo, hi = hi, 2 * hi
        if hi > q_max:
            raise ValueError("no admissible q found; inverse velocity vanishes too fast")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def invert_velocity(model: ConvexFluxModel, xi, max_iter: int = 200):
    """``b(xi)`` by bracketed bisection on the extended velocity (independent of any closed form)."""
    xi = np.asarray(xi, dtype=float)
    lo_u, hi_u = model.K_range.lo, model.K_range.hi
    a_lo, a_hi = model.a_lo, model.a_hi
    if not a_lo < a_hi:
        raise BracketError("velocity not increasing on K_range")
    C, s = model.C_deg, 1.0 / model.p
    # widen the bracket with the closed-form continuation so every xi is enclosed
    lo = np.where(xi < a_lo, lo_u - (np.maximum(a_lo - xi, 0.0) / C) ** s - 1.0, lo_u)
    hi = np.where(xi > a_hi, hi_u + (np.maximum(xi - a_hi, 0.0) / C) ** s + 1.0, hi_u)
    if np.any(model.velocity(lo) > xi) or np.any(model.velocity(hi) < xi):
        raise BracketError("bisection bracket does not enclose the target velocity")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if np.all((mid == lo) | (mid == hi)):
            break
        right = model.velocity(mid) < xi
        lo = np.where(right, mid, lo)
        hi = np.where(right, hi, mid)
    r_lo = np.abs(model.velocity(lo) - xi)
    r_hi = np.abs(model.velocity(hi) - xi)
    out = np.where(r_lo <= r_hi, lo, hi)
    return float(out) if out.ndim == 0 else out


# --- the solver --------------------------------------------------------------


class _Primitive:
    """``U0(y) = int_0^y u0`` for step, grid or periodic data.

    ``slope`` and ``osc`` describe the split ``U0(y) = slope * y + W(y)`` with
    ``W`` bounded (``osc`` is its oscillation); ``osc`` is None when the data
    have different asymptotic means on both sides.
    """

    def __init__(self, fn: Callable, slope: float | None, osc: float | None,
                 support: tuple[float, float] | None, cell: Callable):
        self.fn = fn
        self.slope = slope
        self.osc = osc
        self.support = support
        self._cell = cell

    def __call__(self, y):
        return self.fn(np.asarray(y, dtype=float))

    def cell(self, y, offset: int = 0):
        """``(left, right, slope)`` of the affine piece ``offset`` cells away from the one holding ``y``."""
        return self._cell(np.asarray(y, dtype=float), offset)

    @staticmethod
    def _knot_cells(knots: np.ndarray, slopes: np.ndarray) -> Callable:
        n = knots.size

        def cell(y, offset):
            if n == 0:
                inf = np.full(y.shape, math.inf)
                return -inf, inf, np.full(y.shape, slopes[0])
            j = np.clip(np.searchsorted(knots, y, side="left") + offset, 0, n)
            left = np.where(j == 0, -math.inf, knots[np.maximum(j - 1, 0)])
            right = np.where(j == n, math.inf, knots[np.minimum(j, n - 1)])
            return left, right, slopes[j]

        return cell

    @classmethod
    def from_step(cls, u: StepFunction) -> "_Primitive":
        bp, lv = u.breakpoints, u.levels
        if bp.size == 0:
            c = float(lv[0])
            return cls(lambda y: c * y, c, 0.0, None, cls._knot_cells(bp, lv))
        cum = np.concatenate(([0.0], np.cumsum(lv[1:-1] * np.diff(bp))))  # U at breakpoints, relative to bp[0]

        def raw(y):
            k = np.searchsorted(bp, y, side="left")  # y in ]bp[k-1], bp[k]]
            km = np.clip(k - 1, 0, bp.size - 1)
            return np.where(k == 0, lv[0] * (y - bp[0]), cum[km] + lv[k] * (y - bp[km]))

        shift = float(raw(np.array(0.0)))

        def fn(y):
            return raw(y) - shift

        cell = cls._knot_cells(bp, lv)
        support = (float(bp[0]), float(bp[-1]))
        if lv[0] == lv[-1]:
            W = cum - shift - lv[0] * bp
            return cls(fn, float(lv[0]), float(W.max() - W.min()), support, cell)
        return cls(fn, None, None, support, cell)

    @classmethod
    def from_grid(cls, g: GridFunction) -> "_Primitive":
        x, v = g.x, g.samples
        cum = np.concatenate(([0.0], np.cumsum(0.5 * (v[:-1] + v[1:]) * g.dx)))

        def raw(y):
            inner = np.interp(y, x, cum)
            return np.where(y < x[0], v[0] * (y - x[0]), np.where(y > x[-1], cum[-1] + v[-1] * (y - x[-1]), inner))

        shift = float(raw(np.array(0.0)))

        def fn(y):
            return raw(y) - shift

        support = (float(x[0]), float(x[-1]))
        cell = cls._knot_cells(x, np.concatenate(([v[0]], np.diff(cum) / g.dx, [v[-1]])))
        if v[0] == v[-1]:
            W = cum - shift - v[0] * x
            return cls(fn, float(v[0]), float(W.max() - W.min()), support, cell)
        return cls(fn, None, None, support, cell)

    @classmethod
    def periodic(cls, samples: np.ndarray, x0: float, period: float) -> "_Primitive":
        """Samples of one period at ``x0 + k*period/n``, ``k = 0..n-1``."""
        v = np.asarray(samples, dtype=float)
        n = v.size
        dx = period / n
        m = float(v.mean())
        vv = np.concatenate((v, v[:1])) - m
        W = np.concatenate(([0.0], np.cumsum(0.5 * (vv[:-1] + vv[1:]) * dx)))
        xs = x0 + dx * np.arange(n + 1)

        def raw(y):
            r = np.mod(y - x0, period)
            return m * y + np.interp(r + x0, xs, W)

        shift = float(raw(np.array(0.0)))

        def fn(y):
            return raw(y) - shift

        cell_slopes = m + np.diff(W) / dx

        def cell(y, offset):
            g = np.floor((y - x0) / dx) + offset
            left = x0 + g * dx
            return left, left + dx, cell_slopes[np.mod(g, n).astype(int)]

        return cls(fn, m, float(W.max() - W.min()), None, cell)


@dataclass(frozen=True)
class HolderCheck:
    ok: bool
    max_violation: float
    worst_pair: tuple[float, float]
    n_violations: int
    smallest_constant: float


@dataclass(frozen=True)
class SmoothingReport:
    tvs_lower_bound: float
    paper_bound: float
    tvs_plus: float
    plus_bound: float

    @property
    def holds(self) -> bool:
        return self.tvs_lower_bound <= self.paper_bound and self.tvs_plus <= self.plus_bound


@dataclass(frozen=True)
class DecayReport:
    times: np.ndarray
    sup_norms: np.ndarray
    fitted_exponent: float
    predicted_exponent: float
    mode: str = "compact"


class LaxOleinikSolver:
    """Entropy solution of ``u_t + f(u)_x = 0`` through the Lax-Oleinik formula.

    ``u0`` is a :class:`StepFunction`, a :class:`GridFunction`, or, with
    ``period`` given, a closure or grid covering one period.
    """

    def __init__(self, model: ConvexFluxModel, u0, period: float | None = None,
                 n_scan: int = DEFAULT_SCAN, period_samples: int = 8192, x0: float = 0.0):
        self.model = model
        self.n_scan = int(n_scan)
        self.period = period
        sign = -1.0 if model.reflected else 1.0
        self._sign = sign
        if period is not None:
            if isinstance(u0, GridFunction):
                samples = u0.samples
                x0 = u0.x0
                if abs(u0.dx * samples.size - period) > 1e-9 * period:
                    raise ValueError("periodic grid must cover exactly one period")
            else:
                xs = x0 + period * np.arange(period_samples) / period_samples
                samples = np.asarray(u0(xs), dtype=float)
            self.mean = float(np.mean(samples))
            self.U0 = _Primitive.periodic(sign * samples, x0, period)
            bound = float(np.max(np.abs(samples)))
        elif isinstance(u0, StepFunction):
            self.mean = None
            self.U0 = _Primitive.from_step(u0.scaled(sign))
            bound = float(np.max(np.abs(u0.levels)))
        elif isinstance(u0, GridFunction):
            self.mean = None
            self.U0 = _Primitive.from_grid(GridFunction(u0.x0, u0.dx, sign * u0.samples))
            bound = float(np.max(np.abs(u0.samples)))
        else:
            raise TypeError("u0 must be a StepFunction or GridFunction (or a closure with a period)")
        K = model.K_range
        lo_data, hi_data = (-bound, bound)
        if bound > max(abs(K.lo), abs(K.hi)) * (1 + 1e-12):
            raise ValueError(f"data bound {bound} exceeds the model range {K}")
        self.u0 = u0
        self.data_bound = bound
        del lo_data, hi_data

    @property
    def sup_a(self) -> float:
        return self.model.sup_a

    def b(self, xi):
        return self.model.inverse_velocity(xi)

    def G(self, t: float, x, y):
        return self.U0(y) + t * self.model.h((np.asarray(x) - np.asarray(y)) / t)

    # localization of minimizers
    def _xi_band(self, t: float) -> tuple[float, float]:
        """Velocities ``(x - y)/t`` a minimizer can have, from the bound on ``U0 - slope*y``."""
        sup = self.sup_a
        lo, hi = -sup, sup
        U = self.U0
        if U.osc is None:
            return lo, hi
        m = self.model
        center = float(m.velocity(np.array(U.slope)))
        h_c = float(m.h(np.array(center)))
        budget = U.osc * (1 + 1e-9) + 1e-12

        def excess(xi: float) -> float:
            return t * (float(m.h(np.array(xi))) - h_c - U.slope * (xi - center)) - budget

        def root(outer: float) -> float:
            if excess(outer) <= 0:
                return outer
            a_, b_ = center, outer
            for _ in range(200):
                mid = 0.5 * (a_ + b_)
                if mid in (a_, b_):
                    break
                if excess(mid) <= 0:
                    a_ = mid
                else:
                    b_ = mid
            return b_

        width = max(sup, abs(center)) + 1.0
        xi_lo = root(center - width)
        xi_hi = root(center + width)
        return max(lo, xi_lo), min(hi, xi_hi)

    def _base_window(self, t: float, x: np.ndarray):
        xi_lo, xi_hi = self._xi_band(t)
        return x - t * xi_hi, x - t * xi_lo

    def _minimize_batch(self, t: float, x: np.ndarray, lo: np.ndarray, hi: np.ndarray, resolution: float):
        """Leftmost global minimizers of ``G(t, x_i, .)`` on ``[lo_i, hi_i]`` (scan + golden section)."""
        width = hi - lo
        n = int(min(self.n_scan, max(16, math.ceil(float(width.max()) / resolution)))) + 1
        frac = np.linspace(0.0, 1.0, n)
        Y = lo[:, None] + width[:, None] * frac[None, :]
        Gv = self.G(t, x[:, None], Y)
        gmin = Gv.min(axis=1)
        tol = 1e-13 * (1.0 + np.abs(gmin))
        k = np.argmax(Gv <= (gmin + tol)[:, None], axis=1)
        rows = np.arange(x.size)
        y_scan = Y[rows, k]
        g_scan = Gv[rows, k]
        step = width / (n - 1)
        a_ = np.maximum(y_scan - step, lo)
        b_ = np.minimum(y_scan + step, hi)
        c_ = b_ - GOLDEN * (b_ - a_)
        d_ = a_ + GOLDEN * (b_ - a_)
        gc = self.G(t, x, c_)
        gd = self.G(t, x, d_)
        for _ in range(80):
            if np.all(b_ - a_ <= 1e-13 * (1.0 + np.abs(a_))):
                break
            left = gc <= gd
            b_ = np.where(left, d_, b_)
            a_ = np.where(left, a_, c_)
            new_c = b_ - GOLDEN * (b_ - a_)
            new_d = a_ + GOLDEN * (b_ - a_)
            # reuse the surviving interior point
            c_keep = np.where(left, new_c, d_)
            d_keep = np.where(left, c_, new_d)
            gc_keep = np.where(left, np.nan, gd)
            gd_keep = np.where(left, gc, np.nan)
            c_, d_ = c_keep, d_keep
            need_c = np.isnan(gc_keep)
            need_d = np.isnan(gd_keep)
            gc = gc_keep
            gd = gd_keep
            if need_c.any():
                gc = np.where(need_c, self.G(t, x, c_), gc)
            if need_d.any():
                gd = np.where(need_d, self.G(t, x, d_), gd)
        y_gs = 0.5 * (a_ + b_)
        g_gs = self.G(t, x, y_gs)
        better = g_gs < g_scan - 1e-13 * (1.0 + np.abs(g_scan))
        return self._polish(t, x, np.where(better, y_gs, y_scan))

    def _polish(self, t: float, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Replace near-minimizers by the exact ones of the nearby affine pieces of ``U0``.

        On a piece of slope ``l`` the function ``G`` is convex with stationary
        point ``x - t a(l)``, so clipping that point to the piece is exact. This
        removes the loss of accuracy of a flat ``h`` near ``a(0)``.
        """
        cands = []
        for offset in (-1, 0, 1):
            left, right, slope = self.U0.cell(y, offset)
            cands.append(np.clip(x - t * self.model.velocity(slope), left, right))
        Y = np.stack(cands)
        Gv = self.G(t, x[None, :], Y)
        gmin = Gv.min(axis=0)
        tol = 1e-13 * (1.0 + np.abs(gmin))
        best = np.where(Gv <= gmin + tol, Y, np.inf).min(axis=0)
        # keep the search result only if no piece beats it (never expected)
        return np.where(self.G(t, x, y) < gmin - tol, y, best)

    def minimizers(self, t: float, x, monotone: bool = True) -> np.ndarray:
        """Minimizers ``y(t, x)`` for a sorted array of abscissae.

        With ``monotone`` the search windows of later points are cut by the
        minimizers already found (``y`` is nondecreasing in ``x``), processed
        level by level of a bisection over the grid.
        """
        if not t > 0:
            raise ValueError("t must be positive")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        base_lo, base_hi = self._base_window(t, x)
        resolution = float((base_hi - base_lo).max()) / self.n_scan
        resolution = max(resolution, 1e-300)
        if not monotone or x.size == 1:
            return self._minimize_batch(t, x, base_lo, base_hi, resolution)
        if np.any(np.diff(x) < 0):
            raise ValueError("x must be sorted for monotone evaluation")
        y = np.empty_like(x)
        segments = [(0, x.size, -math.inf, math.inf)]
        while segments:
            mids = np.array([(i0 + i1) // 2 for i0, i1, _, _ in segments])
            ylo = np.array([s[2] for s in segments])
            yhi = np.array([s[3] for s in segments])
            lo = np.maximum(base_lo[mids], ylo)
            hi = np.minimum(base_hi[mids], yhi)
            hi = np.maximum(hi, lo)
            ym = self._minimize_batch(t, x[mids], lo, hi, resolution)
            y[mids] = ym
            nxt = []
            for (i0, i1, a_, b_), mid, yv in zip(segments, mids.tolist(), ym.tolist()):
                if mid > i0:
                    nxt.append((i0, mid, a_, yv))
                if i1 > mid + 1:
                    nxt.append((mid + 1, i1, yv, b_))
            segments = nxt
        return y

    def minimize_hopf(self, t: float, x: float) -> float:
        return float(self.minimizers(t, np.array([x]), monotone=False)[0])

    def value(self, t: float, x) -> np.ndarray:
        """Hopf-Lax value ``min_y G``; its x-derivative is the solution."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = self.minimizers(t, x, monotone=False)
        return self._sign * self.G(t, x, y)

    def evaluate(self, t: float, x, monotone: bool = True) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = self.minimizers(t, x, monotone=monotone)
        return self._sign * self.b((x - y) / t)

    def evaluate_grid(self, t: float, window: Interval, n: int, monotone: bool = True) -> GridFunction:
        x = np.linspace(window.lo, window.hi, n)
        return GridFunction(window.lo, x[1] - x[0], self.evaluate(t, x, monotone))

    def mass(self, t: float, window: Interval) -> float:
        """``int_window u(t, .)`` from the value function (exact up to the minimization)."""
        v = self.value(t, np.array([window.lo, window.hi]))
        return float(v[1] - v[0])

    # sup norms for the decay study
    def sup_deviation(self, t: float, window: Interval, n: int = 1024, zoom: int = 3, center: float = 0.0) -> float:
        """``sup |u(t, .) - center|`` on ``window``: uniform grid, then zooms around the maximum."""
        x = np.linspace(window.lo, window.hi, n)
        dev = np.abs(self.evaluate(t, x) - center)
        best = float(dev.max())
        for _ in range(zoom):
            k = int(np.argmax(dev))
            lo_x = x[max(k - 1, 0)]
            hi_x = x[min(k + 1, x.size - 1)]
            if not hi_x > lo_x:
                break
            x = np.linspace(lo_x, hi_x, 65)
            dev = np.abs(self.evaluate(t, x) - center)
            best = max(best, float(dev.max()))
        return best


def minimize_hopf(solver: LaxOleinikSolver, t: float, x: float) -> float:
    return solver.minimize_hopf(t, x)


def evaluate(solver: LaxOleinikSolver, t: float, x_grid) -> GridFunction:
    """Solution on a uniform grid (a :class:`GridFunction` or an increasing uniform array)."""
    if isinstance(x_grid, GridFunction):
        xs = x_grid.x
    else:
        xs = np.asarray(x_grid, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least two grid points")
    return GridFunction(float(xs[0]), float(xs[1] - xs[0]), solver.evaluate(t, xs))


def check_oleinik_holder(u: GridFunction, t: float, s: float, c_bound: float, slack: float = 1e-9) -> HolderCheck:
    """Check ``u(y) - u(x) <= c (y - x)^s / t^s`` over every sample pair ``x < y``."""
    if not t > 0:
        raise ValueError("t must be positive")
    x = u.x
    v = u.samples
    worst = -math.inf
    pair = (float(x[0]), float(x[0]))
    n_bad = 0
    c_min = 0.0
    for i in range(v.size - 1):
        dx = x[i + 1 :] - x[i]
        rise = v[i + 1 :] - v[i]
        rhs = c_bound * (dx / t) ** s
        viol = rise - rhs
        j = int(np.argmax(viol))
        if viol[j] > worst:
            worst = float(viol[j])
            pair = (float(x[i]), float(x[i + 1 + j]))
        n_bad += int(np.count_nonzero(viol > slack))
        ratio = rise / (dx / t) ** s
        c_min = max(c_min, float(ratio.max()))
    return HolderCheck(n_bad == 0, worst, pair, n_bad, c_min)


def smoothing_report(solver: LaxOleinikSolver, t: float, window: Interval, s: float | SExponent | None = None,
                     n_grid: int = 2048) -> SmoothingReport:
    """TV^s lower bound of the solution on ``window`` against ``(D/t)(2|window| + t sup|a|)``.

    Also reports TV^s_+ against ``D |window| / t``.
    """
    m = solver.model
    e = as_exponent(m.s if s is None else s)
    g = solver.evaluate_grid(t, window, n_grid)
    tv = tvs_grid_lower_bound(g, e).tvs
    samples = -g.samples if m.reflected else g.samples
    tvp = tvs_plus_values(samples, e)
    D = m.D_const
    bound = D / t * (2 * window.length + t * m.sup_a)
    return SmoothingReport(tv, bound, tvp, D * window.length / t)


def fit_decay_exponent(times, sup_norms) -> float:
    """Least-squares slope of log(sup norm) against log(t) over the last decade of times."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(sup_norms, dtype=float)
    sel = t >= t.max() / 10.0 * (1 - 1e-12)
    if sel.sum() < 2:
        raise ValueError("need at least two times in the last decade")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return float(slope)


def decay_report(solver: LaxOleinikSolver, times: Sequence[float], mode: str = "compact",
                 n: int = 1024) -> DecayReport:
    """Sup norms of ``u(t) - m`` over ``times`` and the fitted power law."""
    t_arr = np.asarray(list(times), dtype=float)
    if t_arr.size < 4:
        raise ValueError("need at least 4 times for a decay fit")
    if np.any(np.diff(t_arr) <= 0) or t_arr[0] <= 0:
        raise ValueError("times must be positive and increasing")
    m = solver.model
    sups = []
    if mode == "compact":
        U = solver.U0
        if U.support is None or U.slope is None or U.slope != 0.0:
            raise ValueError("compact mode needs compactly supported data")
        for t in t_arr:
            reach = t * m.sup_a
            wide = Interval(U.support[0] - reach, U.support[1] + reach)
            x = np.linspace(wide.lo, wide.hi, n)
            u = solver.evaluate(t, x)
            nz = np.flatnonzero(np.abs(u) > 1e-14)
            if nz.size == 0:
                sups.append(0.0)
                continue
            step = x[1] - x[0]
            tight = Interval(x[nz[0]] - step, x[nz[-1]] + step)
            sups.append(solver.sup_deviation(t, tight, n))
        predicted = -m.s / (1.0 + m.q_exp)
    elif mode == "periodic":
        if solver.period is None:
            raise ValueError("periodic mode needs a periodic solver")
        window = Interval(0.0, solver.period)
        for t in t_arr:
            sups.append(solver.sup_deviation(t, window, n, center=solver.mean))
        predicted = -m.s
    else:
        raise ValueError(f"unknown decay mode {mode!r}")
    sups = np.array(sups)
    return DecayReport(t_arr, sups, fit_decay_exponent(t_arr, sups), predicted, mode)

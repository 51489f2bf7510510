import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from fracbv.func_repr import StepFunction


def brute_force_subsequence_variation(values, p, plus=False):
    """Max over all subsequences of sum phi(increment)^p, by enumerating every mask.

    Vectorized over the 2^n masks: each column keeps the last chosen value.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    masks = np.arange(1 << n)
    last = np.full(masks.size, np.nan)
    total = np.zeros(masks.size)
    for j in range(n):
        chosen = (masks >> j) & 1 == 1
        d = v[j] - last
        if plus:
            d = np.maximum(d, 0.0)
        d = np.abs(d)
        inc = np.where(chosen & ~np.isnan(last) & (d > 0), np.exp(p * np.log(np.where(d > 0, d, 1.0))), 0.0)
        total += inc
        last = np.where(chosen, v[j], last)
    return float(total.max())


def brute_force_subdivision_sum(values, p):
    """Reference for tiny inputs: every subset via itertools (independent of the mask trick)."""
    v = list(values)
    best = 0.0
    for r in range(2, len(v) + 1):
        for idx in itertools.combinations(range(len(v)), r):
            best = max(best, sum(abs(v[b] - v[a]) ** p for a, b in zip(idx, idx[1:])))
    return best


def random_step(rng, n_levels, lo=-1.0, hi=1.0, span=(-3.0, 3.0), integer_share=0.3, compact=False):
    """Random step function; some levels drawn from a small integer set to create ties."""
    levels = rng.uniform(lo, hi, n_levels)
    ints = rng.random(n_levels) < integer_share
    levels[ints] = rng.integers(-2, 3, ints.sum()) * (hi - lo) / 4.0
    levels = np.clip(levels, lo, hi)
    if compact:
        levels[0] = levels[-1] = 0.0
    bp = np.sort(rng.uniform(span[0], span[1], n_levels - 1))
    bp = bp + 1e-6 * np.arange(bp.size)  # keep cells visibly apart
    return StepFunction(bp, levels)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
exponents = st.sampled_from([0.2, 0.25, 1 / 3, 0.5, 0.75, 1.0])


@st.composite
def step_functions(draw, max_levels=8, compact=False, value_range=10.0):
    n = draw(st.integers(min_value=1, max_value=max_levels))
    vals = st.floats(min_value=-value_range, max_value=value_range, allow_nan=False, allow_infinity=False)
    levels = draw(st.lists(vals, min_size=n, max_size=n))
    if compact:
        levels = [0.0] + levels + [0.0]
    gaps = draw(st.lists(st.floats(min_value=0.01, max_value=3.0), min_size=len(levels) - 1, max_size=len(levels) - 1))
    start = draw(st.floats(min_value=-5, max_value=5))
    bp = start + np.concatenate(([0.0], np.cumsum(gaps[:-1]))) if gaps else np.array([])
    return StepFunction(bp, levels)


def random_convex_flux(rng, max_K=8, lo=-1.0, hi=1.0):
    """Piecewise-affine convex flux on [lo, hi] with random interior nodes and sorted slopes."""
    from fracbv.claw_ft import PiecewiseAffineFlux

    K = int(rng.integers(1, max_K + 1))
    inner = np.sort(rng.uniform(lo, hi, K - 1))
    nodes = np.unique(np.concatenate(([lo], inner, [hi])))
    slopes = np.sort(rng.uniform(-2.0, 2.0, nodes.size - 1))
    f = np.concatenate(([0.0], np.cumsum(slopes * np.diff(nodes))))
    return PiecewiseAffineFlux(nodes, f)


def envelope_oracle(nodes, values, lo, hi, lower=True):
    """Envelope of the points in [lo, hi] evaluated at those points, by trying every chord (O(n^3))."""
    sel = (nodes >= lo) & (nodes <= hi)
    u, f = nodes[sel], values[sel]
    env = f.copy()
    for i in range(u.size):
        for j in range(i + 1, u.size):
            for k in range(i, j + 1):
                lam = (u[k] - u[i]) / (u[j] - u[i])
                chord = (1 - lam) * f[i] + lam * f[j]
                env[k] = min(env[k], chord) if lower else max(env[k], chord)
    return u, env


# --- acceptance reporting ----------------------------------------------------

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Shared list of ``(criterion, passed, detail, seconds)``; echoed in the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail, seconds in sorted(rows, key=lambda r: int(r[0].split()[1])):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name} ({seconds:.2f} s): {detail}")

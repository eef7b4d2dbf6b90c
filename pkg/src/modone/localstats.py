"""Spatial-side correlation sums and gap statistics of a point set mod 1.

For points theta_1..theta_N and a window f on R^(k-1),

    R_k(f) = (1/N) * sum over k-tuples x of distinct indices
                     sum over m in Z^(k-1) of f(N * (Delta(x) - m)),

with Delta(x)_c = theta_{x_c} - theta_{x_{c+1}}.  Every code path computes a
tuple's contribution from the same float expression N * ((theta_i - theta_j) - m)
and accumulates with ``math.fsum``, so the fast chain enumeration and the
O(N^k) enumeration give bit-identical sums.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateError, DomainError, WidthError
from .seqgen import PointSet
from .windows import Window

_PAD = 1e-12


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    k: int
    N: int
    alpha: Union[float, str]
    window: str
    algorithm: str

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class GapDistribution:
    xs: np.ndarray
    g_values: np.ndarray
    N: int
    circular: bool = False


def c_factor(k: int, N: int) -> float:
    """(1 - 1/N)(1 - 2/N)...(1 - (k-1)/N), the share of k-tuples with distinct entries."""
    if k < 2 or k > N:
        raise DomainError(f"need 2 <= k <= N, got k={k}, N={N}")
    return math.prod(1 - i / N for i in range(1, k))


def _scaled(vals, i, j, m, N):
    return N * ((vals[i] - vals[j]) - m)


def _shift_range(lo: float, hi: float, N: int) -> range:
    # integers m for which N*((a - b) - m) can land in [lo, hi] with a, b in [0, 1)
    return range(math.floor(-hi / N) - 1, math.ceil(1 - lo / N) + 1)


def _edges(vals: np.ndarray, lo: float, hi: float):
    """All (i, j, m), i != j, with lo <= N*((v_i - v_j) - m) <= hi.

    Sorted sweep: candidates come from a binary search on the sorted values
    replicated at the needed integer shifts; the final test is exact.
    """
    N = vals.size
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    ms = np.array(_shift_range(lo, hi, N))
    ext = (sv[None, :] + ms[:, None]).ravel()
    ext_idx = np.tile(order, ms.size)
    ext_m = np.repeat(ms, N)
    left = np.searchsorted(ext, vals - hi / N - _PAD, side="left")
    right = np.searchsorted(ext, vals - lo / N + _PAD, side="right")
    cnt = right - left
    total = int(cnt.sum())
    i = np.repeat(np.arange(N), cnt)
    starts = np.repeat(left - (np.cumsum(cnt) - cnt), cnt)
    pos = np.arange(total) + starts
    j, m = ext_idx[pos], ext_m[pos]
    s = _scaled(vals, i, j, m, N)
    keep = (i != j) & (s >= lo) & (s <= hi)
    return i[keep], j[keep], m[keep], s[keep]


def _check_width(window: Window, N: int) -> None:
    lo, hi = window.support()
    if np.any(hi - lo >= N) or 2 * window.support_radius >= N and window.symmetric:
        raise WidthError(f"window support too wide for N={N} (would wrap more than once)")


def _chains(vals: np.ndarray, window: Window, k: int):
    """Index chains x_1..x_k (distinct) and their scaled difference vectors."""
    lo, hi = window.support()
    N = vals.size
    edges = []
    for c in range(k - 1):
        i, j, _, s = _edges(vals, lo[c], hi[c])
        order = np.argsort(i, kind="stable")
        i, j, s = i[order], j[order], s[order]
        start = np.searchsorted(i, np.arange(N), side="left")
        stop = np.searchsorted(i, np.arange(N), side="right")
        edges.append((j, s, start, stop - start))
    j0, s0, start0, deg0 = edges[0]
    nodes = [np.repeat(np.arange(N), deg0), j0]
    scaled = [s0]
    for c in range(1, k - 1):
        jc, sc, startc, degc = edges[c]
        last = nodes[-1]
        deg = degc[last]
        rep = np.repeat(np.arange(last.size), deg)
        pos = np.arange(int(deg.sum())) + np.repeat(startc[last] - (np.cumsum(deg) - deg), deg)
        new = jc[pos]
        nodes = [col[rep] for col in nodes]
        scaled = [col[rep] for col in scaled]
        keep = np.ones(new.size, dtype=bool)
        for col in nodes:
            keep &= col != new
        nodes = [col[keep] for col in nodes] + [new[keep]]
        scaled = [col[keep] for col in scaled] + [sc[pos][keep]]
    return np.stack(nodes, axis=1), np.stack(scaled, axis=1)


def _total(window: Window, X: np.ndarray, N: int) -> float:
    if X.shape[0] == 0:
        return 0.0
    f = window(X)
    return math.fsum(f[f != 0].tolist()) / N


def k_level_correlation(points: PointSet, window: Window, k: int) -> CorrelationEstimate:
    """R_k(f) by enumerating chains whose consecutive differences fall in the support."""
    N = points.N
    if window.dimension != k - 1:
        raise DomainError(f"window dimension {window.dimension} != k-1 = {k - 1}")
    if not 2 <= k <= N:
        raise DomainError(f"need 2 <= k <= N, got k={k}, N={N}")
    _check_width(window, N)
    _, X = _chains(points.values, window, k)
    return CorrelationEstimate(
        _total(window, X, N), k, N, points.alpha, window.describe(), "direct-window"
    )


def k_level_correlation_brute(points: PointSet, window: Window, k: int) -> CorrelationEstimate:
    """Reference enumeration over every k-tuple of distinct indices, O(N^k)."""
    vals = points.values
    N = vals.size
    if window.dimension != k - 1:
        raise DomainError(f"window dimension {window.dimension} != k-1 = {k - 1}")
    if not 2 <= k <= N:
        raise DomainError(f"need 2 <= k <= N, got k={k}, N={N}")
    _check_width(window, N)
    lo, hi = window.support()
    idx = np.arange(N)
    x, y = np.meshgrid(idx, idx, indexing="ij")
    # per coordinate: the scaled difference of every ordered pair, NaN when no
    # integer translate puts it inside the support
    tables = []
    for c in range(k - 1):
        col = np.full((N, N), np.nan)
        for m in _shift_range(lo[c], hi[c], N):
            s = _scaled(vals, x, y, m, N)
            col = np.where((s >= lo[c]) & (s <= hi[c]), s, col)
        np.fill_diagonal(col, np.nan)
        tables.append(col)
    a, b = x.ravel(), y.ravel()
    pieces = []
    for prefix in itertools.permutations(range(N), k - 2):
        path = list(prefix)
        ok = a != b
        for p in path:
            ok &= (a != p) & (b != p)
        tup = [np.full(int(ok.sum()), p) for p in path] + [a[ok], b[ok]]
        X = np.stack([tables[c][tup[c], tup[c + 1]] for c in range(k - 1)], axis=1)
        good = ~np.isnan(X).any(axis=1)
        if good.any():
            pieces.append(X[good])
    X = np.concatenate(pieces) if pieces else np.empty((0, k - 1))
    return CorrelationEstimate(
        _total(window, X, N), k, N, points.alpha, window.describe(), "brute-force"
    )


def pair_correlation(points: PointSet, interval: Tuple[float, float]) -> CorrelationEstimate:
    """(1/N) #{(n, m), n != m : theta_n - theta_m in [a, b]/N + Z}, ordered pairs."""
    a, b = map(float, interval)
    N = points.N
    if not a <= b:
        raise DomainError(f"empty interval [{a}, {b}]")
    if N < 2:
        count = 0  # no pairs at all
    elif b - a >= N:
        raise WidthError(f"interval width {b - a} >= N={N}")
    else:
        count = _edges(points.values, a, b)[0].size
    return CorrelationEstimate(
        count / N, 2, N, points.alpha, f"box:{a:g}:{b:g}", "direct-window"
    )


def simplex_correlation(points: PointSet, x: float, k: int) -> CorrelationEstimate:
    """R_k of the indicator of the open simplex x * Delta_(k-1)."""
    if x <= 0:
        return CorrelationEstimate(0.0, k, points.N, points.alpha, f"simplex:{x:g}", "direct-window")
    if x >= points.N:
        raise WidthError(f"simplex dilation {x} >= N={points.N}")
    return k_level_correlation(points, Window.simplex(x, k), k)


def gap_distribution(points: PointSet, xs: Sequence[float], circular: bool = False) -> GapDistribution:
    """Empirical distribution of nearest-neighbour gaps scaled to unit mean.

    Default: the first N+1 points (all of them, N = len - 1) sorted, the N
    non-circular gaps, g(x) = #{gaps * N <= x} / N.  A tolerance of the
    points' error bound plus a few ulps absorbs decimal-input rounding.

    ``circular=True`` uses all N points on the circle, the N circular gaps
    below each point, and counts 0 < N * gap < x.  This is the form for which
    the alternating simplex-correlation bounds of ``gap_sandwich`` hold
    exactly at finite N.
    """
    xs = np.asarray(xs, dtype=np.float64)
    vals = points.values
    if vals.size < 2:
        raise DegenerateError("gap distribution needs at least 2 points")
    order = np.argsort(vals, kind="stable")
    if not circular:
        N = vals.size - 1
        sv = vals[order]
        gaps = np.sort(N * np.diff(sv))
        tol = N * (2 * points.err_bound + 4 * np.finfo(float).eps)
        g = np.searchsorted(gaps, xs + tol, side="right") / N
        return GapDistribution(xs, g, N, False)
    N = vals.size
    i = order
    j = np.roll(order, 1)
    m = np.zeros(N, dtype=np.int64)
    m[0] = -1
    gaps = _scaled(vals, i, j, m, N)
    gaps = np.sort(gaps[gaps > 0])
    g = np.searchsorted(gaps, xs, side="left") / N
    return GapDistribution(xs, g, N, True)


def gap_sandwich(points: PointSet, x: float, K: int) -> Tuple[float, float]:
    """Alternating simplex-correlation bounds (lower, upper) on g(x).

    The open simplex never counts two coincident points together, so the
    bounds need pairwise distinct values.
    """
    if K < 1:
        raise DomainError("K must be >= 1")
    if np.unique(points.values).size != points.values.size:
        raise DegenerateError("gap sandwich needs pairwise distinct points")
    if x <= 0:
        return 0.0, 0.0
    N = points.N
    # simplex sums are tuple counts over N; alternate the integer counts so
    # the bounds compare exactly with g, which is also a count over N
    c = {k: round(simplex_correlation(points, x, k).value * N) for k in range(2, 2 * K + 2) if k <= N}
    lower = sum((-1) ** k * c.get(k, 0) for k in range(2, 2 * K + 2))
    upper = sum((-1) ** k * c.get(k, 0) for k in range(2, 2 * K + 1))
    return lower / N, upper / N


def poisson_reference(window: Window) -> float:
    """Limit of R_k for Poissonian points: the integral of the window."""
    return window.integral()


def gap_taylor(x: float, M: int) -> float:
    """Partial sum sum_{k=1..M} (-1)^(k+1) x^k / k! of 1 - exp(-x)."""
    return math.fsum((-1) ** (k + 1) * x**k / math.factorial(k) for k in range(1, M + 1))


def write_gap_csv(dist: GapDistribution, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,g\n")
        for x, g in zip(dist.xs, dist.g_values):
            fh.write(f"{x:.17g},{g:.17g}\n")


def write_grid_csv(rows, path) -> None:
    """rows of (param, value, reference)."""
    with open(path, "w") as fh:
        fh.write("param,value,reference\n")
        for p, v, r in rows:
            p = f"{p:.17g}" if isinstance(p, float) else str(p)
            fh.write(f"{p},{v:.17g},{r:.17g}\n")

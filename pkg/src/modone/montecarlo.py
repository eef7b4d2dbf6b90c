"""Monte Carlo over exponents alpha in J = [A, A+1].

Each (seed, N) pair owns its own Philox stream, so the draws for one N do
not depend on which other N are in the grid, and a longer run reproduces the
draws of a shorter one as a prefix.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .errors import DegenerateError, DomainError
from .localstats import c_factor, k_level_correlation, poisson_reference
from .oscint import AlphaInterval
from .seqgen import PointSet, PrecisionPolicy, SequenceSpec, frac_parts
from .windows import Window


@dataclass(frozen=True)
class ExperimentPlan:
    """``point_mass`` replaces the alpha draws by a fixed value; ``points``
    replaces the sequence by an alpha-independent point set.  Both are hooks
    for zero-variance checks."""

    k: int
    J: AlphaInterval
    N_grid: Tuple[int, ...]
    samples: int
    seed: int
    window: Window
    beta: float = 1.0
    precision: PrecisionPolicy = PrecisionPolicy()
    point_mass: Optional[float] = None
    points: Optional[PointSet] = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.N_grid)
        object.__setattr__(self, "N_grid", grid)
        if self.k < 2:
            raise DomainError("k must be >= 2")
        if self.samples < 2:
            raise DomainError("samples must be >= 2")
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("N_grid must be strictly increasing")
        if self.window.dimension != self.k - 1:
            raise DomainError("window dimension must be k-1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def describe(self) -> dict:
        return {
            "k": self.k,
            "A": self.J.A,
            "N_grid": list(self.N_grid),
            "samples": self.samples,
            "seed": self.seed,
            "window": self.window.describe(),
            "beta": self.beta,
            "precision": self.precision.describe(),
            "point_mass": self.point_mass,
            "external_points": self.points is not None,
        }


@dataclass(frozen=True)
class DecayFit:
    rho_hat: float
    intercept: float
    residuals: Tuple[float, ...]
    N_grid: Tuple[int, ...]


def draw_alphas(plan: ExperimentPlan, N: int, count: Optional[int] = None) -> np.ndarray:
    """Uniform draws from J on the stream keyed by (seed, N)."""
    count = plan.samples if count is None else count
    if plan.point_mass is not None:
        return np.full(count, float(plan.point_mass))
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence([plan.seed, N])))
    return plan.J.A + gen.random(count)


def _one(args) -> float:
    alpha, beta, N, k, window, precision = args
    pts = frac_parts(SequenceSpec(alpha, beta, N), precision)
    return k_level_correlation(pts, window, k).value


def sample_correlations(
    plan: ExperimentPlan, N: int, workers: int = 1, require_smooth: bool = False
) -> np.ndarray:
    """R_k(f, alpha_i, N) for the plan's draws, in stream order."""
    if N not in plan.N_grid:
        raise DomainError(f"N={N} is not in the plan's grid")
    if require_smooth and not plan.window.smooth:
        raise DomainError("expectation and variance runs need a smooth window")
    return np.array(_cached(plan, N, workers))


@lru_cache(maxsize=128)
def _cached(plan: ExperimentPlan, N: int, workers: int) -> Tuple[float, ...]:
    if plan.points is not None:
        v = k_level_correlation(plan.points, plan.window, plan.k).value
        return (v,) * plan.samples
    jobs = [(float(a), plan.beta, N, plan.k, plan.window, plan.precision) for a in draw_alphas(plan, N)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return tuple(pool.map(_one, jobs))
    return tuple(map(_one, jobs))


def reference(plan: ExperimentPlan, N: int) -> float:
    """C_k(N) times the integral of the window."""
    n = plan.points.N if plan.points is not None else N
    return c_factor(plan.k, n) * poisson_reference(plan.window)


def _jackknife(y: np.ndarray) -> float:
    """Delete-one jackknife error of the mean, sqrt(sum (y - ybar)^2 / (n (n - 1))).

    Centred on y[0] first so that a constant sample gives exactly 0.
    """
    n = y.size
    z = y - y[0]
    zbar = math.fsum(z.tolist()) / n
    return math.sqrt(math.fsum(((z - zbar) ** 2).tolist()) / (n * (n - 1)))


def expectation_estimate(plan: ExperimentPlan, N: int, workers: int = 1) -> Tuple[float, float, float]:
    """(sample mean, standard error, C_k(N) * int f)."""
    y = sample_correlations(plan, N, workers, require_smooth=True)
    mean = math.fsum(y.tolist()) / y.size
    return mean, _jackknife(y), reference(plan, N)


def variance_estimate(plan: ExperimentPlan, N: int, workers: int = 1) -> Tuple[float, float]:
    """Mean squared deviation from the fixed reference, with jackknife error."""
    y = sample_correlations(plan, N, workers, require_smooth=True)
    sq = (y - reference(plan, N)) ** 2
    return math.fsum(sq.tolist()) / sq.size, _jackknife(sq)


def decay_fit(pairs: Sequence[Tuple[float, float]]) -> DecayFit:
    """Least squares of log(var) on log(N); rho_hat is minus the slope."""
    if len(pairs) < 3:
        raise DomainError("decay_fit needs at least 3 pairs")
    Ns = np.array([p[0] for p in pairs], dtype=np.float64)
    vs = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.any(~(vs > 0)):
        raise DegenerateError("all variances must be positive")
    X = np.column_stack([np.log(Ns), np.ones_like(Ns)])
    y = np.log(vs)
    (slope, icpt), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ np.array([slope, icpt])
    return DecayFit(float(-slope), float(icpt), tuple(float(r) for r in res), tuple(int(n) for n in Ns))


def nm_schedule(rho: float, m_max: int) -> List[int]:
    """floor(m^(2/rho)) for m = 1..m_max, deduplicated ascending."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    out = []
    for m in range(1, m_max + 1):
        # exact integer power when 2/rho is an integer avoids float floor trouble
        e = 2 / rho
        v = m ** int(e) if float(e).is_integer() else math.floor(m**e)
        if not out or v > out[-1]:
            out.append(v)
    return out


@dataclass
class PlanRun:
    plan: ExperimentPlan
    rows: List[Dict] = field(default_factory=list)
    fit: Optional[DecayFit] = None


def run_plan(plan: ExperimentPlan, workers: int = 1, done: Optional[Dict[int, Dict]] = None, on_row=None) -> PlanRun:
    """Estimates for every N; ``done`` carries rows from a checkpoint."""
    done = done or {}
    run = PlanRun(plan)
    for N in plan.N_grid:
        row = done.get(N)
        if row is None:
            mean, se, ref = expectation_estimate(plan, N, workers)
            var, vse = variance_estimate(plan, N, workers)
            row = {"N": N, "mean": mean, "mean_stderr": se, "reference": ref, "variance": var, "stderr": vse}
            if on_row:
                on_row(row)
        run.rows.append(row)
    pairs = [(r["N"], r["variance"]) for r in run.rows]
    if len(pairs) >= 3 and all(v > 0 for _, v in pairs):
        run.fit = decay_fit(pairs)
    return run


def manifest(run: PlanRun) -> dict:
    fit = None
    if run.fit is not None:
        fit = {"rho_hat": run.fit.rho_hat, "intercept": run.fit.intercept, "residuals": list(run.fit.residuals)}
    return {"plan": run.plan.describe(), "estimates": run.rows, "fit": fit, "version": __version__}


def write_variance_csv(path, rows: List[Dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "variance", "stderr"])
        for r in rows:
            w.writerow([r["N"], f"{r['variance']:.17g}", f"{r['stderr']:.17g}"])


def write_manifest(path, data: dict) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)

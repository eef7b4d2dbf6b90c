"""Exponential-polynomial phases phi(alpha) = sum_i u_i x_i**alpha.

Derivatives are phi^(k)(alpha) = sum_i u_i (log x_i)^k x_i**alpha, so the
vector of the first d derivatives is a Vandermonde matrix in L_i = log x_i
applied to (u_i x_i**alpha).  This module evaluates phases and derivatives,
counts real zeros by Rolle-bounded root isolation, inverts the Vandermonde
matrix in closed form, computes the repulsion lower bound lambda, and
integrates e(phi) over a unit interval of exponents.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import BudgetExceeded, DomainError, IsolationError, SingularityError

ISOLATION_TOL = 1e-12
EXTENDED_LOG2 = 900.0
_LD_EPS = float(np.finfo(np.longdouble).eps)


# ----------------------------------------------------------------- types


@dataclass(frozen=True)
class PhaseSpec:
    u: Tuple[float, ...]
    x: Tuple[float, ...]
    canonical: bool = False

    def __post_init__(self):
        u = tuple(float(v) for v in self.u)
        x = tuple(float(v) for v in self.x)
        if len(u) != len(x):
            raise DomainError("u and x must have equal length")
        if any(not v > 0 for v in x):
            raise DomainError("bases must be positive")
        if self.canonical:
            if any(v == 0 for v in u):
                raise DomainError("canonical phase has a zero coefficient")
            if any(v == 1 for v in x) or any(b <= a for a, b in zip(x, x[1:])):
                raise DomainError("canonical bases must be strictly increasing and != 1")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x", x)

    @property
    def d(self) -> int:
        return len(self.u)

    @property
    def logs(self) -> np.ndarray:
        return np.log(np.array(self.x, dtype=np.float64))


@dataclass(frozen=True)
class AlphaInterval:
    A: float

    def __post_init__(self):
        if not self.A > 0:
            raise DomainError("A must be positive")

    @property
    def bounds(self) -> Tuple[float, float]:
        return float(self.A), float(self.A) + 1.0


@dataclass
class IntegralResult:
    value: complex
    error: float
    panels: int

    def __complex__(self) -> complex:
        return self.value

    def __abs__(self) -> float:
        return abs(self.value)


@dataclass
class RepulsionReport:
    lambda_: float
    d: int
    min_M_d: float
    integral_abs: float
    vdc_bound_value: float
    fitted_constant: float
    integral: complex = complex("nan")
    m_ratio: float = float("nan")
    integrated: bool = True
    anomaly: bool = False
    derivative_zeros: Dict[int, int] = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return self.min_M_d > 0 and math.isfinite(self.fitted_constant)


# ----------------------------------------------------------------- evaluation


def canonicalize(u: Sequence[float], x: Sequence[float]) -> Tuple[PhaseSpec, int]:
    """Merge equal bases, drop base-1 terms and zero coefficients; sort by base."""
    if len(u) != len(x):
        raise DomainError("u and x must have equal length")
    groups: Dict[float, List[float]] = {}
    for c, b in zip(u, x):
        b = float(b)
        if not b > 0:
            raise DomainError("bases must be positive")
        groups.setdefault(b, []).append(float(c))
    keep = [(b, math.fsum(cs)) for b, cs in groups.items() if b != 1.0]
    keep = sorted((b, c) for b, c in keep if c != 0.0)
    phase = PhaseSpec(tuple(c for _, c in keep), tuple(b for b, _ in keep), True)
    return phase, len(u) - phase.d


def constant_part(phase: PhaseSpec) -> float:
    """Sum of the coefficients on base 1 (a constant phase offset)."""
    return math.fsum(c for c, b in zip(phase.u, phase.x) if b == 1.0)


def phase_eval(phase: PhaseSpec, alpha: float, order: int = 0) -> float:
    """sum_i u_i (log x_i)^order x_i^alpha; extended precision when x^alpha would overflow."""
    if order < 0 or int(order) != order:
        raise DomainError("order must be a nonnegative integer")
    if not phase.u:
        return 0.0
    top = max(abs(alpha) * abs(math.log2(b)) for b in phase.x)
    if top > EXTENDED_LOG2:
        with mpmath.workdps(30):
            s = mpmath.fsum(
                mpmath.mpf(c) * mpmath.log(b) ** order * mpmath.power(b, alpha)
                for c, b in zip(phase.u, phase.x)
            )
            return float(s)
    return math.fsum(c * math.log(b) ** order * b**alpha for c, b in zip(phase.u, phase.x))


def _derivs(phase: PhaseSpec, alphas: np.ndarray, orders: Sequence[int]) -> np.ndarray:
    """Rows of phi^(k)(alphas) for k in orders (float64, vectorised)."""
    L = phase.logs
    w = np.array(phase.u)
    E = np.exp(np.outer(alphas, L))
    return np.array([(E * (w * L**k)).sum(axis=1) for k in orders])


def m_function(phase: PhaseSpec, alpha: float, d: int) -> float:
    """max_{1<=i<=d} |phi^(i)(alpha)|."""
    if d < 1:
        raise DomainError("d must be >= 1")
    if not phase.u:
        return 0.0
    return max(abs(phase_eval(phase, alpha, i)) for i in range(1, d + 1))


def m_function_grid(phase: PhaseSpec, J: AlphaInterval, d: int, grid_size: int) -> float:
    """Minimum over an equispaced grid on J of M_d phi, via scaling by the top term."""
    a, b = J.bounds
    alphas = np.linspace(a, b, grid_size)
    L = phase.logs
    w = np.array(phase.u)
    Lmax = L.max()
    E = np.exp(np.outer(alphas, L - Lmax))  # (x_i / x_max)^alpha <= 1
    rows = np.array([np.abs((E * (w * L**k)).sum(axis=1)) for k in range(1, d + 1)])
    logm = np.log(rows.max(axis=0)) + alphas * Lmax
    return float(np.exp(logm.min())) if np.isfinite(logm.min()) else 0.0


# ----------------------------------------------------------------- Vandermonde


def vandermonde(L: Sequence[float]) -> np.ndarray:
    """V[k-1, i] = L_i^k for k = 1..d, so (phi', ..., phi^(d)) = V (u_i x_i^alpha)."""
    L = np.asarray(L, dtype=np.float64)
    return np.array([L**k for k in range(1, L.size + 1)])


def _esym(vals, k):
    e = [1] + [0] * len(vals)
    for v in vals:
        for j in range(len(vals), 0, -1):
            e[j] = e[j] + e[j - 1] * v
    return e[k]


def _inverse_mp(L, dps: int):
    d = len(L)
    with mpmath.workdps(dps):
        Lm = [mpmath.mpf(v) for v in L]
        A = mpmath.matrix(d, d)
        for i in range(d):
            rest = [Lm[m] for m in range(d) if m != i]
            den = Lm[i]
            for m in range(d):
                if m != i:
                    den *= Lm[m] - Lm[i]
            for j in range(d):
                A[i, j] = (-1) ** j * _esym(rest, d - 1 - j) / den
        return A


def _check_nodes(L):
    L = [float(v) for v in L]
    if any(v == 0 for v in L):
        raise SingularityError("Vandermonde node equal to 0")
    if len(set(L)) != len(L):
        raise SingularityError("Vandermonde nodes must be distinct")
    return L


def vandermonde_inverse_entry(L: Sequence[float], i: int, j: int, dps: int = 40) -> float:
    """a_ij = (-1)^(j-1) e_(d-j)(L without L_i) / (L_i prod_(m != i)(L_m - L_i)), 1-based.

    Evaluated at ``dps`` decimal digits and rounded once to float.
    """
    L = _check_nodes(L)
    d = len(L)
    if not (1 <= i <= d and 1 <= j <= d):
        raise DomainError(f"indices must lie in 1..{d}")
    return float(_inverse_mp(L, dps)[i - 1, j - 1])


def vandermonde_inverse(L: Sequence[float], dps: int = 40) -> np.ndarray:
    """Full inverse of ``vandermonde(L)`` from the closed-form entries."""
    L = _check_nodes(L)
    A = _inverse_mp(L, dps)
    return np.array([[float(A[i, j]) for j in range(len(L))] for i in range(len(L))])


def vandermonde_residual(L: Sequence[float], dps: Optional[int] = 40) -> float:
    """max |V A - I| with A from the closed form.

    With ``dps`` given, V, A and the product are formed at that many digits,
    which measures the formula itself.  ``dps=None`` forms everything in
    float64, which additionally measures rounding amplified by cond(V).
    """
    L = _check_nodes(L)
    d = len(L)
    if dps is None:
        R = vandermonde(L) @ vandermonde_inverse(L) - np.eye(d)
        return float(np.abs(R).max())
    A = _inverse_mp(L, dps)
    with mpmath.workdps(dps):
        V = mpmath.matrix([[mpmath.mpf(v) ** k for v in L] for k in range(1, d + 1)])
        R = V * A - mpmath.eye(d)
        return float(max(abs(R[r, c]) for r in range(d) for c in range(d)))


# ----------------------------------------------------------------- repulsion


def _admissible(phase: PhaseSpec, N: float) -> None:
    if phase.d < 2:
        raise DomainError("need a canonical phase with d >= 2")
    xs = phase.x
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise DomainError("bases must be strictly increasing")
    if xs[0] < 2 or xs[-1] > N:
        raise DomainError(f"bases must lie in [2, N={N:g}]")


def repulsion_lambda(phase: PhaseSpec, J: AlphaInterval, N: float, epsilon: float) -> float:
    """N^-eps |u_d| x_d^(A+1-d) prod_m (x_(m+1) - x_m)."""
    _admissible(phase, N)
    d = phase.d
    xs = phase.x
    log_l = (
        -epsilon * math.log(N)
        + math.log(abs(phase.u[-1]))
        + (J.A + 1 - d) * math.log(xs[-1])
        + sum(math.log(b - a) for a, b in zip(xs, xs[1:]))
    )
    return math.exp(log_l)


# ----------------------------------------------------------------- zeros


def _expoly_zeros(c: np.ndarray, ell: np.ndarray, a: float, b: float, depth: int = 0) -> List[float]:
    """Real zeros in [a, b] of sum_r c_r exp(ell_r t), ell strictly increasing.

    Dividing by the top term gives h = 1 + sum_(r<d) c'_r exp((ell_r - ell_d) t),
    whose derivative has d-1 terms; its zeros (recursively) cut [a, b] into
    pieces on which h is monotone, so each piece holds at most one zero.
    """
    d = c.size
    if d <= 1:
        return []
    cn = c[:-1] / c[-1]
    dl = ell[:-1] - ell[-1]

    def h(t):
        return 1.0 + math.fsum((cn * np.exp(dl * t)).tolist())

    def scale(t):
        return 1.0 + float(np.abs(cn * np.exp(dl * t)).sum())

    crit = _expoly_zeros(cn * dl, dl, a, b, depth + 1)
    knots = [a] + [t for t in crit if a < t < b] + [b]
    vals = [h(t) for t in knots]
    zeros: List[float] = []
    eps = np.finfo(float).eps
    for t, v in zip(knots, vals):
        if v == 0.0 or (a < t < b and abs(v) <= 64 * eps * scale(t)):
            zeros.append(t)  # exact or tangential zero at a knot
    for (t0, v0), (t1, v1) in zip(zip(knots, vals), zip(knots[1:], vals[1:])):
        if v0 == 0.0 or v1 == 0.0 or (v0 > 0) == (v1 > 0):
            continue
        try:
            r, info = brentq(h, t0, t1, xtol=ISOLATION_TOL, rtol=4 * eps, full_output=True)
        except (ValueError, RuntimeError) as exc:
            raise IsolationError(f"could not isolate zero in [{t0}, {t1}]: {exc}") from None
        if not info.converged:
            raise IsolationError(f"could not isolate zero in [{t0}, {t1}]")
        zeros.append(r)
    zeros.sort()
    out: List[float] = []
    for z in zeros:
        if not out or z - out[-1] > 2 * ISOLATION_TOL:
            out.append(z)
    return out


def find_zeros(phase: PhaseSpec, derivative_order: int, J: AlphaInterval) -> List[float]:
    """Zeros of phi^(derivative_order) in J, each pinned to width 1e-12."""
    if derivative_order < 0:
        raise DomainError("derivative order must be >= 0")
    if not phase.canonical:
        phase, _ = canonicalize(phase.u, phase.x)
    a, b = J.bounds
    if phase.d == 0:
        raise DomainError("identically zero phase has no isolated zeros")
    L = phase.logs
    c = np.array(phase.u) * L**derivative_order
    return _expoly_zeros(c, L, a, b)


def count_zeros(phase: PhaseSpec, derivative_order: int, J: AlphaInterval) -> int:
    return len(find_zeros(phase, derivative_order, J))


# ----------------------------------------------------------------- integration


@lru_cache(maxsize=None)
def _gauss(n: int):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=None)
def _cheb(n: int):
    """Chebyshev-Lobatto nodes cos(pi j / n) and the differentiation matrix."""
    t = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    X = t[:, None] - t[None, :]
    D = np.outer(c, 1 / c) / (X + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return t, D


class _PhaseMod1:
    """phi(alpha) mod 1 at float alphas, with a per-call absolute error target."""

    def __init__(self, phase: PhaseSpec, target: float):
        self.phase = phase
        self.target = target
        self.w = np.array(phase.u, dtype=np.longdouble)
        self.L = np.log(np.array(phase.x, dtype=np.longdouble))
        self.cache: Dict[float, float] = {}

    def _magnitude(self, alpha: float) -> float:
        return float(sum(abs(c) * b**alpha * (1 + abs(alpha * math.log(b)))
                         for c, b in zip(self.phase.u, self.phase.x)))

    def __call__(self, alphas: np.ndarray) -> np.ndarray:
        out = np.empty(alphas.size)
        for i, a in enumerate(alphas.tolist()):
            v = self.cache.get(a)
            if v is None:
                v = self._one(a)
                self.cache[a] = v
            out[i] = v
        return out

    def _one(self, a: float) -> float:
        mag = self._magnitude(a)
        if 8 * mag * _LD_EPS <= self.target:
            s = (self.w * np.exp(np.longdouble(a) * self.L)).sum()
            return float(s - np.floor(s))
        digits = int(math.log10(mag + 1)) + int(-math.log10(self.target)) + 10
        if digits > 2000:
            raise BudgetExceeded(f"phase magnitude {mag:.3g} too large to reduce mod 1")
        with mpmath.workdps(digits):
            s = mpmath.fsum(mpmath.mpf(c) * mpmath.power(b, mpmath.mpf(a))
                            for c, b in zip(self.phase.u, self.phase.x))
            return float(s - mpmath.floor(s))


def _e(frac: np.ndarray) -> np.ndarray:
    return np.exp(2j * np.pi * frac)


def oscillatory_integral(
    phase: PhaseSpec,
    J: AlphaInterval,
    tol: float = 1e-8,
    max_panels: int = 200_000,
) -> IntegralResult:
    """I = int_J e(phi(alpha)) d alpha with estimated absolute error <= tol.

    J is first cut at the zeros of phi' and phi'' so that on each piece phi
    is monotone and phi' is monotone.  A panel whose phase increment is at
    most 1/8 is integrated by 15-point Gauss-Legendre (checked against 8
    points).  A panel carrying at least one full oscillation at its slowest
    point is integrated by Levin collocation, solving p' + 2 pi i phi' p = 1
    so that the integral is [p e(phi)] at the endpoints (checked at two
    collocation orders).  Anything else is bisected.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    offset = _e(np.array([constant_part(phase) % 1.0]))[0]
    canon, _ = canonicalize(phase.u, phase.x)
    a, b = J.bounds
    if canon.d == 0:
        return IntegralResult(complex(offset * (b - a)), 0.0, 0)
    if b * max(abs(math.log2(v)) for v in canon.x) > 1000:
        raise BudgetExceeded("phase terms exceed the float range on J")
    cuts = set()
    for order in (1, 2):
        cuts.update(find_zeros(canon, order, J))
    knots = [a] + sorted(t for t in cuts if a < t < b) + [b]
    mod1 = _PhaseMod1(canon, tol * 1e-3)
    x15, w15 = _gauss(15)
    x8, w8 = _gauss(8)
    t16, D16 = _cheb(16)
    t24, D24 = _cheb(24)
    total, err, panels = [], 0.0, 0
    stack = [(p, q) for p, q in zip(knots, knots[1:]) if q > p][::-1]
    while stack:
        p, q = stack.pop()
        panels += 1
        if panels > max_panels:
            raise BudgetExceeded(f"more than {max_panels} panels")
        half, mid = 0.5 * (q - p), 0.5 * (p + q)
        d1 = np.abs(_derivs(canon, np.array([p, q]), [1])[0])
        if d1.max() * (q - p) <= 0.125:
            g15 = half * (w15 * _e(mod1(mid + half * x15))).sum()
            g8 = half * (w8 * _e(mod1(mid + half * x8))).sum()
            if abs(g15 - g8) <= tol * (q - p) or q - p < 1e-14:
                total.append(g15)
                err += abs(g15 - g8)
                continue
        elif d1.min() * (q - p) >= 2.0:
            ends = _e(mod1(np.array([q, p])))
            res = []
            for t, D in ((t16, D16), (t24, D24)):
                om = 2 * np.pi * half * _derivs(canon, mid + half * t, [1])[0]
                try:
                    sol = np.linalg.solve(D + 1j * np.diag(om), np.full(t.size, half, complex))
                except np.linalg.LinAlgError:
                    res = None
                    break
                res.append(sol[0] * ends[0] - sol[-1] * ends[1])
            if res is not None and abs(res[1] - res[0]) <= tol * (q - p):
                total.append(res[1])
                err += abs(res[1] - res[0])
                continue
        if q - p < 1e-14:
            raise BudgetExceeded("panel width underflow")
        stack.append((mid, q))
        stack.append((p, mid))
    s = complex(math.fsum(z.real for z in total), math.fsum(z.imag for z in total))
    value = complex(offset * s)
    phase_err = 2 * np.pi * mod1.target * (b - a)
    return IntegralResult(value, err + phase_err, panels)


# ----------------------------------------------------------------- reports


def vdc_check(
    phase: PhaseSpec,
    J: AlphaInterval,
    N: float,
    epsilon: float,
    grid_size: int = 10_000,
    tol: Optional[float] = None,
    max_panels: int = 200_000,
    zero_orders: Optional[Sequence[int]] = None,
    on_budget: str = "raise",
) -> RepulsionReport:
    """Lambda, grid minimum of M_d phi, |I(phi, J)| and the two observed ratios.

    The integral tolerance defaults to 1e-4 lambda^(-1/d) (capped at 1e-8) so
    the ratio |I| lambda^(1/d) is resolved to four digits.  A budget overrun
    raises, or with ``on_budget="skip"`` leaves the integral fields NaN and
    ``integrated=False``.
    """
    if not phase.canonical:
        phase, _ = canonicalize(phase.u, phase.x)
    lam = repulsion_lambda(phase, J, N, epsilon)
    d = phase.d
    min_m = m_function_grid(phase, J, d, grid_size)
    bound = lam ** (-1.0 / d)
    if tol is None:
        tol = min(1e-8, 1e-4 * bound)
    zeros = {k: count_zeros(phase, k, J) for k in (zero_orders or range(1, d + 1))}
    try:
        res = oscillatory_integral(phase, J, tol, max_panels)
        integral, integrated = res.value, True
    except BudgetExceeded:
        if on_budget == "raise":
            raise
        integral, integrated = complex("nan"), False
    iabs = abs(integral)
    fitted = iabs * lam ** (1.0 / d)
    return RepulsionReport(
        lambda_=lam,
        d=d,
        min_M_d=min_m,
        integral_abs=iabs,
        vdc_bound_value=bound,
        fitted_constant=fitted,
        integral=integral,
        m_ratio=min_m / lam,
        integrated=integrated,
        anomaly=bool(integrated and iabs > 100 * bound),
        derivative_zeros=zeros,
    )


def difference_phase(n: float, m: float, x: Tuple[float, float], y: Tuple[float, float]) -> PhaseSpec:
    """n (x1^alpha - x2^alpha) - m (y1^alpha - y2^alpha), the pair-variance phase."""
    return PhaseSpec((n, -n, -m, m), (x[0], x[1], y[0], y[1]))


def random_phase(
    rng: np.random.Generator,
    d: int,
    base_range: Tuple[float, float] = (2, 10_000),
    coef_log10: Tuple[float, float] = (-2.0, 2.0),
) -> PhaseSpec:
    """Canonical phase with d distinct integer bases drawn log-uniformly."""
    lo, hi = math.log(base_range[0]), math.log(base_range[1])
    bases = set()
    while len(bases) < d:
        bases.add(int(min(base_range[1], max(base_range[0], round(math.exp(rng.uniform(lo, hi)))))))
    xs = tuple(sorted(float(b) for b in bases))
    signs = rng.choice([-1.0, 1.0], size=d)
    us = tuple(float(s * 10 ** rng.uniform(*coef_log10)) for s in signs)
    return PhaseSpec(us, xs, True)


def report_record(phase: PhaseSpec, J: AlphaInterval, N: float, epsilon: float, rep: RepulsionReport) -> dict:
    return {
        "u": list(phase.u),
        "x": list(phase.x),
        "A": J.A,
        "N": N,
        "epsilon": epsilon,
        "lambda": rep.lambda_,
        "min_M_d": rep.min_M_d,
        "integral_re": rep.integral.real,
        "integral_im": rep.integral.imag,
        "integral_abs": rep.integral_abs,
        "vdc_ratio": rep.fitted_constant,
        "m_ratio": rep.m_ratio,
        "integrated": rep.integrated,
        "anomaly": rep.anomaly,
        "derivative_zeros": {str(k): v for k, v in rep.derivative_zeros.items()},
    }


def write_reports_json(path, records: List[dict]) -> None:
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2, allow_nan=True)


def write_curve_csv(path, phase: PhaseSpec, J: AlphaInterval, points: int = 1001, orders=(1, 2, 3, 4)) -> None:
    """Plot-ready derivative curves on an equispaced grid over J."""
    a, b = J.bounds
    alphas = np.linspace(a, b, points)
    rows = _derivs(phase, alphas, orders)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha"] + [f"d{k}" for k in orders])
        for i, al in enumerate(alphas):
            w.writerow([f"{al:.17g}"] + [f"{rows[j, i]:.17g}" for j in range(len(orders))])

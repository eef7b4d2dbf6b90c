"""Fourier side of the correlation sums.

Poisson summation turns the pair correlation of theta_x = beta x^alpha into

    R_2(f) = N^-2 * sum_n f^(n/N) (|S(n)|^2 - N),   S(n) = sum_{x<=N} e(n theta_x).

For integer n only the fractional parts {theta_x} matter, because
e(n theta_x) = e(n {theta_x}).  Those are held as 64-bit fixed point
F_x = floor({theta_x} 2^64); n * F_x mod 2^64 is then exact in uint64
arithmetic and the only phase error is n times the fixed-point truncation.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import DecayUnknown, DomainError, PrecisionInfeasible, SlowDecayWarning
from .localstats import CorrelationEstimate, k_level_correlation
from .seqgen import (
    PointSet,
    PrecisionPolicy,
    SequenceSpec,
    frac_mpfr,
    term_error_bound,
    to_fixed64,
    to_float,
    STORAGE_ERR,
)
from .windows import Window

PHASE_TARGET = 2.0**-40
_TWO64 = 2.0**64
_BLOCK = 1 << 20


@dataclass(frozen=True)
class FourierWindow:
    """A window together with its transform f^(xi) = int f(x) e(-xi x) dx."""

    base: Window

    def __post_init__(self):
        if self.base.kind == "simplex":
            raise DomainError("simplex windows are not usable on the Fourier side")
        if self.base.kind == "box":
            warnings.warn(
                "box window on the Fourier side: transform decays like 1/xi, "
                "truncation is not rapidly convergent",
                SlowDecayWarning,
                stacklevel=3,
            )

    def transform(self, xi) -> np.ndarray:
        return self.base.fourier(np.asarray(xi, dtype=np.float64).reshape(-1, self.base.dimension))

    def decay_constant(self, s: float) -> float:
        return self.base.decay_constant(s)


@dataclass(frozen=True)
class FrequencyDomain:
    k: int
    N: int
    epsilon: float
    kind: str = "N-box"

    @property
    def bound(self) -> int:
        b = self.N ** (1 + self.epsilon)
        return math.floor(b if self.kind == "N-box" else 2 * b)

    def __iter__(self):
        B = self.bound
        if self.kind == "N-box":
            yield from itertools.product(range(-B, B + 1), repeat=self.k - 1)
            return
        for u in itertools.product(range(-B, B + 1), repeat=self.k - 1):
            last = -sum(u)
            full = u + (last,)
            if abs(last) <= B and max(map(abs, full)) >= 1:
                yield full


# ----------------------------------------------------------------- phases


class PhaseTable:
    """Fixed-point fractional parts of a sequence, certified for |n| <= n_max."""

    def __init__(self, spec: SequenceSpec, n_max: float, policy: PrecisionPolicy = PrecisionPolicy()):
        n_max = max(1.0, float(n_max))
        if policy.mode == "auto":
            target = min(policy.target_abs_err, PHASE_TARGET / (4 * n_max))
            policy = PrecisionPolicy.auto(target)
        bits = policy.working_bits(spec.alpha, spec.N, spec.beta)
        work = term_error_bound(spec.N, spec.alpha, spec.beta, bits)
        self.phase_err = n_max * (work + 2.0**-64) + STORAGE_ERR
        if self.phase_err > PHASE_TARGET:
            raise PrecisionInfeasible(
                f"phase error {self.phase_err:.3g} for |n| <= {n_max:g} exceeds 2^-40"
            )
        self.spec, self.bits, self.n_max = spec, bits, n_max
        self.exact = frac_mpfr(spec, bits)
        self.fixed = to_fixed64(self.exact)

    def points(self) -> PointSet:
        work = term_error_bound(self.spec.N, self.spec.alpha, self.spec.beta, self.bits)
        return PointSet(to_float(self.exact), work + STORAGE_ERR, self.spec, self.bits)

    def sums(self, ns: Sequence[int]) -> np.ndarray:
        """S(n) for integer frequencies, ascending-x pairwise summation."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and np.abs(ns).max() > self.n_max:
            raise PrecisionInfeasible(f"frequency {np.abs(ns).max()} beyond certified {self.n_max:g}")
        out = np.empty(ns.size, dtype=np.complex128)
        N = self.fixed.size
        step = max(1, _BLOCK // max(N, 1))
        for s in range(0, ns.size, step):
            blk = ns[s : s + step].astype(np.uint64)  # two's complement = n mod 2^64
            with np.errstate(over="ignore"):
                prod = blk[:, None] * self.fixed[None, :]
            ang = (2 * np.pi / _TWO64) * prod.astype(np.float64)
            out[s : s + step] = np.cos(ang).sum(axis=1) + 1j * np.sin(ang).sum(axis=1)
        return out


def exp_sum(n: float, spec: SequenceSpec, policy: PrecisionPolicy = PrecisionPolicy()) -> complex:
    """S(n) = sum_{x=1..N} e(n beta x^alpha) with phase error at most 2^-40."""
    if float(n).is_integer():
        return complex(PhaseTable(spec, abs(n), policy).sums([int(n)])[0])
    # real frequency: reduce n beta x^alpha mod 1 directly
    extra = math.ceil(math.log2(abs(n) + 1)) + 8
    if policy.mode == "auto":
        target = min(policy.target_abs_err, PHASE_TARGET / 4)
        bits = PrecisionPolicy.auto(target).working_bits(spec.alpha, spec.N, spec.beta) + extra
    else:
        bits = policy.bits
    err = term_error_bound(spec.N, spec.alpha, spec.beta * abs(n), bits) * 2 + STORAGE_ERR
    if err > PHASE_TARGET:
        raise PrecisionInfeasible(f"phase error {err:.3g} exceeds 2^-40")
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        c = mpfr(n) * mpfr(spec.beta)
        a = mpfr(spec.alpha)
        ph = []
        for x in range(1, spec.N + 1):
            y = c * mpfr(x) ** a
            ph.append(float(y - gmpy2.floor(y)))
    ang = 2 * np.pi * np.array(ph)
    return complex(np.cos(ang).sum() + 1j * np.sin(ang).sum())


# ----------------------------------------------------------------- pair correlation


def _tail_gaussian(window: Window, N: int, M: int) -> float:
    # sum_{|n| > M} |f^(n/N)| <= 2 N int_{M/N}^inf exp(-2 pi^2 s^2 xi^2) dxi
    s = window.params[0]
    c = 2 * (math.pi * s) ** 2
    return 2 * N * 0.5 * math.sqrt(math.pi / c) * math.erfc(M / N * math.sqrt(c))


def truncation_error_bound(
    window, N: int, epsilon: float, s: float | None = None, t: float = 8.0
) -> float:
    """Bound on the omitted tail |n| > N^(1+eps) of the normalised Fourier sum.

    With |f^(xi)| <= c_s |xi|^-s and |(|S|^2 - N)| <= N^2, the tail is at most
    2 c_s N^s M^(1-s) / (s - 1), M = floor(N^(1+eps)), which is
    c_s N^(2 + s - (1+eps)(s-1)) / N^2 up to the constant 2/(s-1).
    Gaussian windows default to s = 2 t / eps + 2.
    """
    base = window.base if isinstance(window, FourierWindow) else window
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if s is None:
        if base.kind != "gaussian":
            raise DomainError("s is required for non-gaussian windows")
        s = 2 * t / epsilon + 2
    if not s > 1:
        raise DomainError("decay exponent s must exceed 1")
    c_s = base.decay_constant(s)
    M = math.floor(N ** (1 + epsilon))
    log_b = math.log(2 * c_s / (s - 1)) + s * math.log(N) + (1 - s) * math.log(M)
    return math.exp(log_b) if log_b < 700 else math.inf


def r2_fourier(
    window,
    spec: SequenceSpec,
    epsilon: float,
    policy: PrecisionPolicy = PrecisionPolicy(),
    table: PhaseTable | None = None,
) -> CorrelationEstimate:
    """Truncated Fourier-side R_2: N^-2 sum_{|n| <= N^(1+eps)} f^(n/N) (|S(n)|^2 - N)."""
    fw = window if isinstance(window, FourierWindow) else FourierWindow(window)
    if fw.base.dimension != 1:
        raise DomainError("r2_fourier needs a one-dimensional window")
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    N = spec.N
    M = math.floor(N ** (1 + epsilon))
    if table is None:
        table = PhaseTable(spec, M, policy)
    ns = np.arange(1, M + 1)
    S = table.sums(ns)
    power = S.real**2 + S.imag**2 - N
    fh = fw.transform(ns / N) + fw.transform(-ns / N)
    terms = (fh.real * power).tolist()
    f0 = float(fw.transform([0.0])[0].real)
    value = math.fsum([f0 * (N * N - N)] + terms) / (N * N)
    return CorrelationEstimate(value, 2, N, spec.alpha, fw.base.describe(), "fourier")


def cross_validate(
    window: Window,
    spec: SequenceSpec,
    epsilon: float,
    policy: PrecisionPolicy = PrecisionPolicy(),
) -> Dict:
    """Direct vs Fourier R_2 with the tolerance both sides are entitled to."""
    fw = FourierWindow(window)
    M = math.floor(spec.N ** (1 + epsilon))
    table = PhaseTable(spec, M, policy)
    pts = table.points()
    direct = k_level_correlation(pts, window, 2).value
    four = r2_fourier(fw, spec, epsilon, policy, table).value
    N = spec.N
    try:
        bound = truncation_error_bound(fw, N, epsilon)
    except (DecayUnknown, DomainError):
        bound = math.inf
    # window cut-off: the direct side sums the cut function, the Fourier side
    # the uncut one; per pair at most the two nearest translates fall outside
    s0, R = window.params if window.kind == "gaussian" else (1.0, window.support_radius)
    tail = math.exp(-0.5 * (R / s0) ** 2) / (s0 * math.sqrt(2 * math.pi)) if window.kind == "gaussian" else 0.0
    cut = (N - 1) * 2 * (tail + window.transform_error() / N)
    # phase errors: |d(|S|^2)| <= 4 pi N^2 delta per frequency
    fh_abs = np.abs(fw.transform(np.arange(-M, M + 1) / N)).sum()
    phase = 4 * math.pi * table.phase_err * fh_abs
    # point errors move each scaled difference by at most 2 N err
    if window.kind == "gaussian":
        lip = 1.0 / (s0**2 * math.sqrt(2 * math.pi * math.e))
        pairs = k_level_correlation(pts, Window.box((-R, R)), 2).value
        direct_err = pairs * lip * 2 * N * pts.err_bound
    else:
        direct_err = math.inf
    tol = bound + cut + phase + direct_err
    return {
        "alpha": spec.alpha,
        "beta": spec.beta,
        "N": N,
        "epsilon": epsilon,
        "window": window.describe(),
        "direct": direct,
        "fourier": four,
        "difference": abs(direct - four),
        "bound": float(tol),
        "truncation_bound": bound,
        "pass": bool(abs(direct - four) <= max(tol, 1e-12)),
    }


# ----------------------------------------------------------------- k-level terms


def u_of_n(n: Sequence[int]) -> Tuple[int, ...]:
    """(n_1, n_2 - n_1, ..., n_{k-1} - n_{k-2}, -n_{k-1}); entries sum to 0."""
    n = [int(v) for v in n]
    if not n:
        raise DomainError("n must have at least one coordinate")
    return tuple([n[0]] + [n[i] - n[i - 1] for i in range(1, len(n))] + [-n[-1]])


def _set_partitions(items: List[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def rk_fourier_term(
    n: Sequence[int], spec: SequenceSpec, policy: PrecisionPolicy = PrecisionPolicy()
) -> complex:
    """sum over k-tuples of distinct indices of e(<Delta(x), n>).

    <Delta(x), n> = sum_i u_i theta_{x_i} with u = u_of_n(n), so the sum over
    distinct tuples follows from power sums S(.) by Moebius inversion over set
    partitions of the k slots: each block B contributes S(sum_{i in B} u_i)
    with weight (-1)^(|B|-1) (|B|-1)!.
    """
    n = tuple(int(v) for v in n)
    if not n or all(v == 0 for v in n):
        raise DomainError("n must be a nonzero integer tuple")
    u = u_of_n(n)
    k = len(u)
    parts = list(_set_partitions(list(range(k))))
    freqs = sorted({sum(u[i] for i in b) for p in parts for b in p})
    table = PhaseTable(spec, max(abs(f) for f in freqs), policy)
    S = dict(zip(freqs, table.sums(freqs)))
    total = 0j
    for p in parts:
        w = 1
        prod = 1 + 0j
        for b in p:
            w *= (-1) ** (len(b) - 1) * math.factorial(len(b) - 1)
            prod *= S[sum(u[i] for i in b)]
        total += w * prod
    return complex(total)


# ----------------------------------------------------------------- outputs


def write_spectrum_csv(path, ns: Sequence[int], S: Sequence[complex]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "re_S", "im_S", "abs_S2"])
        for n, s in zip(ns, S):
            w.writerow([int(n), f"{s.real:.17g}", f"{s.imag:.17g}", f"{s.real**2 + s.imag**2:.17g}"])


def write_crossval_json(path, runs: List[Dict]) -> None:
    with open(path, "w") as fh:
        json.dump(runs, fh, indent=2, sort_keys=True)

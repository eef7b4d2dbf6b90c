"""Fractional parts of beta * n**alpha with certified absolute error.

Every term is computed with MPFR's correctly rounded power at a working
precision chosen so that the integer part of beta * n**alpha fits with
room to spare; the fractional part is then obtained exactly by subtracting
the floor.  Stored values are float64, so the stored error bound always
includes one half-ulp of rounding at 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import gmpy2
import numpy as np
from gmpy2 import mpfr

from .errors import DomainError, PrecisionInfeasible

# rounding a value in [0, 1) to float64
STORAGE_ERR = 2.0**-53
MAGIC = b"MODONE1"
_BELOW_ONE = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class SequenceSpec:
    alpha: float
    beta: float = 1.0
    N: int = 1

    def __post_init__(self):
        if not (self.alpha > 0):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.beta == 0 or not math.isfinite(self.beta):
            raise DomainError(f"beta must be finite and nonzero, got {self.beta}")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")

    @property
    def degenerate(self) -> bool:
        """True when every fractional part is 0 (integer alpha and beta)."""
        return float(self.alpha).is_integer() and float(self.beta).is_integer()


def required_bits(alpha: float, N: int, target_abs_err: float) -> int:
    """Working precision for {n**alpha}, n <= N, to absolute error target_abs_err.

    >>> required_bits(8, 10**6, 2.0**-60)
    272
    """
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    if N < 1:
        raise DomainError("N must be >= 1")
    if not 0 < target_abs_err < 1:
        raise DomainError("target_abs_err must lie in (0, 1)")
    return (
        math.ceil((alpha + 1) * math.log2(N))
        + math.ceil(math.log2(1.0 / target_abs_err))
        + 32
    )


@dataclass(frozen=True)
class PrecisionPolicy:
    """How many bits to work with.

    ``auto`` derives the bit count from the sequence and a target error;
    ``fixed`` uses ``bits`` as given and only enforces ``target_abs_err``
    when one is supplied.
    """

    mode: str = "auto"
    bits: Optional[int] = None
    target_abs_err: Optional[float] = 2.0**-60

    def __post_init__(self):
        if self.mode not in ("auto", "fixed"):
            raise DomainError(f"unknown precision mode {self.mode!r}")
        if self.mode == "fixed" and (self.bits is None or self.bits < 2):
            raise DomainError("fixed mode needs bits >= 2")
        if self.mode == "auto" and self.target_abs_err is None:
            raise DomainError("auto mode needs target_abs_err")
        if self.target_abs_err is not None and not 0 < self.target_abs_err < 1:
            raise DomainError("target_abs_err must lie in (0, 1)")

    @classmethod
    def auto(cls, target_abs_err: float = 2.0**-60) -> "PrecisionPolicy":
        return cls("auto", None, target_abs_err)

    @classmethod
    def fixed(cls, bits: int, target_abs_err: Optional[float] = None) -> "PrecisionPolicy":
        return cls("fixed", int(bits), target_abs_err)

    def working_bits(self, alpha: float, N: int, beta: float = 1.0) -> int:
        if self.mode == "fixed":
            return int(self.bits)
        extra = max(0, math.ceil(math.log2(abs(beta)))) if abs(beta) > 1 else 0
        return required_bits(alpha, N, self.target_abs_err) + extra

    def describe(self) -> dict:
        return {"mode": self.mode, "bits": self.bits, "target_abs_err": self.target_abs_err}


def term_error_bound(n: int, alpha: float, beta: float, bits: int) -> float:
    """Certified bound on |computed - true| for {beta n^alpha} before storage.

    One correctly rounded power and one rounded product give a relative
    error below 2**(2 - bits) of |beta| n^alpha.
    """
    log2_err = math.log2(abs(beta)) + alpha * math.log2(n) + 2 - bits
    if log2_err >= 0:
        return 1.0
    return 2.0**log2_err


def _check(err: float, policy: PrecisionPolicy, what: str) -> None:
    if policy.target_abs_err is not None and err > policy.target_abs_err:
        raise PrecisionInfeasible(
            f"{what}: certified error {err:.3g} exceeds target {policy.target_abs_err:.3g}"
        )


def _frac_mp(n: int, a, b, unit_beta: bool):
    y = mpfr(n) ** a
    if not unit_beta:
        y = y * b
    return y - gmpy2.floor(y)


def frac_part_one(n: int, spec: SequenceSpec, policy: PrecisionPolicy = PrecisionPolicy()):
    """Return ``(value, err)`` with value an mpfr in [0, 1) approximating {beta n^alpha}."""
    if not 1 <= n <= spec.N:
        raise DomainError(f"index {n} outside [1, {spec.N}]")
    bits = policy.working_bits(spec.alpha, spec.N, spec.beta)
    err = term_error_bound(n, spec.alpha, spec.beta, bits)
    _check(err, policy, f"n={n}")
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        value = _frac_mp(n, mpfr(spec.alpha), mpfr(spec.beta), spec.beta == 1)
    return value, err


def frac_mpfr(spec: SequenceSpec, bits: int) -> list:
    """Fractional parts as mpfr values at ``bits`` of working precision."""
    out = []
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        a, b = mpfr(spec.alpha), mpfr(spec.beta)
        unit = spec.beta == 1
        for n in range(1, spec.N + 1):
            out.append(_frac_mp(n, a, b, unit))
    return out


def to_float(values) -> np.ndarray:
    arr = np.array([float(v) for v in values], dtype=np.float64)
    # a value within half an ulp of 1.0 rounds up; keep it inside [0, 1)
    arr[arr >= 1.0] = _BELOW_ONE
    return arr


def to_fixed64(values) -> np.ndarray:
    """floor(v * 2**64) for mpfr v in [0, 1), as uint64 (exact fixed point)."""
    scale = mpfr(2) ** 64
    return np.array([int(gmpy2.floor(v * scale)) for v in values], dtype=np.uint64)


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points in [0, 1) with a bound on their absolute error.

    ``exact`` optionally keeps the working-precision values for lossless
    export; ``bits`` is the working precision that produced them.
    """

    values: np.ndarray
    err_bound: float
    source: Union[SequenceSpec, str] = "external"
    bits: Optional[int] = None
    exact: Optional[tuple] = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if vals.size and (vals.min() < 0.0 or vals.max() >= 1.0):
            raise DomainError("point values must lie in [0, 1)")
        if not self.err_bound >= 0:
            raise DomainError("err_bound must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def external(cls, values: Sequence[float], err_bound: float = 0.0) -> "PointSet":
        return cls(np.asarray(values, dtype=np.float64), float(err_bound), "external")

    @property
    def N(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.N

    @property
    def alpha(self):
        return self.source.alpha if isinstance(self.source, SequenceSpec) else "external"

    def shifted(self, c: float) -> "PointSet":
        """Translate every point by c mod 1 (adds one rounding to the error)."""
        vals = np.mod(self.values + c, 1.0)
        vals[vals >= 1.0] = _BELOW_ONE
        return PointSet(vals, self.err_bound + STORAGE_ERR, "external")


def frac_parts(
    spec: SequenceSpec,
    policy: PrecisionPolicy = PrecisionPolicy(),
    keep_exact: bool = False,
) -> PointSet:
    """All N fractional parts {beta n^alpha}, n = 1..N, as a PointSet."""
    bits = policy.working_bits(spec.alpha, spec.N, spec.beta)
    # the bound is increasing in n, so the last term is the worst
    work_err = term_error_bound(spec.N, spec.alpha, spec.beta, bits)
    _check(work_err, policy, f"n={spec.N}")
    exact = frac_mpfr(spec, bits)
    return PointSet(
        to_float(exact),
        min(1.0, work_err + STORAGE_ERR),
        spec,
        bits,
        tuple(exact) if keep_exact else None,
    )


def kronecker(gamma, N: int, bits: int = 128) -> PointSet:
    """Points {n gamma}, n = 1..N, computed at ``bits`` of precision.

    ``gamma`` may be a string (parsed at working precision), a float, or an
    mpfr.  The result is tagged external.
    """
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        g = mpfr(gamma)
        vals = []
        for n in range(1, N + 1):
            y = g * n
            vals.append(y - gmpy2.floor(y))
        g_abs = abs(float(g))
    err = N * g_abs * 2.0 ** (1 - bits) + STORAGE_ERR
    return PointSet(to_float(vals), err, "external", bits)


def golden_ratio(bits: int = 128):
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        return (1 + gmpy2.sqrt(mpfr(5))) / 2


# ---------------------------------------------------------------- file formats


def write_binary(points: PointSet, path: Union[str, Path]) -> None:
    """Header line of decimal fields, then N little-endian float64 values."""
    src = points.source
    if isinstance(src, SequenceSpec):
        alpha, beta = repr(float(src.alpha)), repr(float(src.beta))
    else:
        alpha = beta = "external"
    header = f"{alpha} {beta} {points.N} {points.err_bound!r} {points.bits or 0}\n"
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(header.encode("ascii"))
        fh.write(points.values.astype("<f8").tobytes())


def read_binary(path: Union[str, Path]) -> PointSet:
    with open(path, "rb") as fh:
        if fh.readline().rstrip(b"\n") != MAGIC:
            raise DomainError(f"{path}: not a MODONE1 point file")
        alpha, beta, n, err, bits = fh.readline().decode("ascii").split()
        data = np.frombuffer(fh.read(), dtype="<f8")
    n = int(n)
    if data.size != n:
        raise DomainError(f"{path}: header says {n} values, found {data.size}")
    source = "external" if alpha == "external" else SequenceSpec(float(alpha), float(beta), n)
    return PointSet(data.astype(np.float64), float(err), source, int(bits) or None)


def write_text(points: PointSet, path: Union[str, Path]) -> None:
    """One decimal per line; full working precision when exact values are kept."""
    with open(path, "w") as fh:
        if points.exact is not None:
            digits = math.ceil(points.bits * math.log10(2)) + 2
            for v in points.exact:
                fh.write(f"{v:.{digits}f}\n")
        else:
            for v in points.values:
                fh.write(f"{v:.17g}\n")


def read_text(path: Union[str, Path], err_bound: float = STORAGE_ERR) -> PointSet:
    with open(path) as fh:
        vals = [float(line) for line in fh if line.strip()]
    return PointSet.external(to_float(vals), err_bound)

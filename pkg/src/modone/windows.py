"""Test functions for correlation sums.

Four kinds, all compactly supported on a box in R^dim:

* ``box``      indicator of a closed box, one interval per coordinate
* ``simplex``  indicator of the open dilated simplex x * Delta_dim
* ``gaussian`` product of unit-mass normal densities, cut to [-radius, radius]
* ``bump``     product of (1 - (t/r)^2)^order on |t| < r

Fourier transforms use f^(xi) = int f(t) e(-xi t) dt, e(z) = exp(2 pi i z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import special

from .errors import DecayUnknown, DomainError

KINDS = ("box", "simplex", "gaussian", "bump")


@dataclass(frozen=True)
class Window:
    kind: str
    dimension: int
    params: Tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown window kind {self.kind!r}")
        if self.dimension < 1:
            raise DomainError("window dimension must be >= 1")

    # ------------------------------------------------------------ constructors

    @classmethod
    def box(cls, *intervals, dimension: int | None = None) -> "Window":
        """``Window.box((a, b))`` or ``Window.box((a1, b1), (a2, b2))``.

        With a single interval and ``dimension`` given, the interval is
        repeated on every coordinate.
        """
        ivs = [tuple(map(float, iv)) for iv in intervals]
        if dimension is not None and len(ivs) == 1:
            ivs = ivs * dimension
        for a, b in ivs:
            if not a <= b:
                raise DomainError(f"empty box interval [{a}, {b}]")
        return cls("box", len(ivs), tuple(ivs))

    @classmethod
    def simplex(cls, x: float, k: int) -> "Window":
        if not x > 0:
            raise DomainError("simplex dilation must be positive")
        if k < 2:
            raise DomainError("simplex needs k >= 2")
        return cls("simplex", k - 1, (float(x),))

    @classmethod
    def gaussian(cls, sigma: float = 1.0, radius: float = 8.0, dimension: int = 1) -> "Window":
        if not (sigma > 0 and radius > 0):
            raise DomainError("gaussian needs sigma > 0 and radius > 0")
        return cls("gaussian", dimension, (float(sigma), float(radius)))

    @classmethod
    def bump(cls, radius: float = 1.0, order: int = 4, dimension: int = 1) -> "Window":
        if not radius > 0 or int(order) != order or order < 1:
            raise DomainError("bump needs radius > 0 and integer order >= 1")
        return cls("bump", dimension, (float(radius), int(order)))

    # ------------------------------------------------------------ geometry

    def support(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-coordinate closed intervals [lo_i, hi_i] containing the support."""
        d = self.dimension
        if self.kind == "box":
            lo = np.array([a for a, _ in self.params])
            hi = np.array([b for _, b in self.params])
        elif self.kind == "simplex":
            lo, hi = np.zeros(d), np.full(d, self.params[0])
        else:
            r = self.params[1] if self.kind == "gaussian" else self.params[0]
            lo, hi = np.full(d, -r), np.full(d, r)
        return lo, hi

    @property
    def support_radius(self) -> float:
        lo, hi = self.support()
        return float(max(np.abs(lo).max(), np.abs(hi).max()))

    @property
    def smooth(self) -> bool:
        return self.kind in ("gaussian", "bump")

    @property
    def symmetric(self) -> bool:
        if self.kind == "box":
            return all(a == -b for a, b in self.params)
        return self.kind != "simplex"

    def describe(self) -> str:
        if self.kind == "box":
            return "box:" + ":".join(f"{a:g}:{b:g}" for a, b in self.params)
        if self.kind == "simplex":
            return f"simplex:{self.params[0]:g}:dim{self.dimension}"
        p = ":".join(f"{v:g}" for v in self.params)
        return f"{self.kind}:{p}:dim{self.dimension}"

    # ------------------------------------------------------------ evaluation

    def __call__(self, X) -> np.ndarray:
        """Evaluate on rows of X (shape (M, dim)); returns shape (M,)."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, self.dimension)
        lo, hi = self.support()
        inside = np.all((X >= lo) & (X <= hi), axis=1)
        if self.kind == "box":
            return inside.astype(np.float64)
        if self.kind == "simplex":
            ok = np.all(X > 0, axis=1) & (X.sum(axis=1) < self.params[0])
            return ok.astype(np.float64)
        if self.kind == "gaussian":
            s = self.params[0]
            q = np.sum(X * X, axis=1)
            val = np.exp(-q / (2 * s * s)) / (s * math.sqrt(2 * math.pi)) ** self.dimension
            return np.where(inside, val, 0.0)
        r, q = self.params
        t = 1.0 - (X / r) ** 2
        val = np.prod(np.where(t > 0, t, 0.0) ** q, axis=1)
        return np.where(inside, val, 0.0)

    def integral(self) -> float:
        """Exact integral over R^dim of the function evaluated by ``__call__``."""
        d = self.dimension
        if self.kind == "box":
            return math.prod(b - a for a, b in self.params)
        if self.kind == "simplex":
            return self.params[0] ** d / math.factorial(d)
        if self.kind == "gaussian":
            s, r = self.params
            return math.erf(r / (s * math.sqrt(2))) ** d
        r, q = self.params
        one = r * math.sqrt(math.pi) * math.gamma(q + 1) / math.gamma(q + 1.5)
        return one**d

    def integral_of_square(self) -> float:
        """int f^2, used for Poisson-statistics error scales."""
        d = self.dimension
        if self.kind in ("box", "simplex"):
            return self.integral()
        if self.kind == "gaussian":
            s, r = self.params
            return (math.erf(r / s) / (2 * s * math.sqrt(math.pi))) ** d
        r, q = self.params
        return (r * math.sqrt(math.pi) * math.gamma(2 * q + 1) / math.gamma(2 * q + 1.5)) ** d

    # ------------------------------------------------------------ Fourier side

    def fourier_1d(self, xi) -> np.ndarray:
        """Transform of one coordinate factor (box uses its first interval)."""
        xi = np.asarray(xi, dtype=np.float64)
        if self.kind == "simplex":
            raise DecayUnknown("simplex windows have no Fourier-side support here")
        if self.kind == "box":
            a, b = self.params[0]
            with np.errstate(divide="ignore", invalid="ignore"):
                val = (np.exp(-2j * np.pi * xi * a) - np.exp(-2j * np.pi * xi * b)) / (2j * np.pi * xi)
            return np.where(xi == 0, b - a, val)
        if self.kind == "gaussian":
            s = self.params[0]
            return np.exp(-2 * (np.pi * s * xi) ** 2).astype(np.complex128)
        r, q = self.params
        w = 2 * np.pi * r * np.abs(xi)
        nu = q + 0.5
        zero = r * math.sqrt(math.pi) * math.gamma(q + 1) / math.gamma(q + 1.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = r * math.sqrt(math.pi) * math.gamma(q + 1) * (2 / w) ** nu * special.jv(nu, w)
        return np.where(w == 0, zero, val).astype(np.complex128)

    def fourier(self, XI) -> np.ndarray:
        """Transform on rows of XI (shape (M, dim)), product of 1-D factors."""
        XI = np.asarray(XI, dtype=np.float64).reshape(-1, self.dimension)
        if self.kind == "box" and len(set(self.params)) > 1:
            out = np.ones(XI.shape[0], dtype=np.complex128)
            for c, iv in enumerate(self.params):
                out *= Window.box(iv).fourier_1d(XI[:, c])
            return out
        return np.prod(self.fourier_1d(XI), axis=1) if XI.size else np.ones(0, complex)

    def transform_error(self) -> float:
        """sup |(transform of the evaluated f) - fourier_1d| (gaussian cut-off)."""
        if self.kind == "gaussian":
            s, r = self.params
            return math.erfc(r / (s * math.sqrt(2)))
        return 0.0

    def decay_constant(self, s: float) -> float:
        """c_s with |f^(xi)| <= c_s |xi|^-s for all xi (one coordinate)."""
        if self.kind == "gaussian":
            sig = self.params[0]
            # sup_xi xi^s exp(-2 pi^2 sig^2 xi^2) at xi^2 = s / (4 pi^2 sig^2)
            return math.exp(0.5 * s * math.log(s / (4 * math.pi**2 * sig**2 * math.e)))
        if self.kind == "bump":
            r, q = self.params
            nu = q + 0.5
            if s > nu:
                raise DecayUnknown(f"bump of order {q} is only certified for s <= {nu}")
            # |J_nu| <= 1 gives |f^| <= C xi^-nu; also |f^| <= int f
            C = r * math.sqrt(math.pi) * math.gamma(q + 1) * (math.pi * r) ** (-nu)
            top = self.integral() if self.dimension == 1 else Window.bump(r, q).integral()
            xstar = (C / top) ** (1 / nu)
            return top * xstar**s if s < nu else C
        raise DecayUnknown(f"no certified rapid decay for {self.kind} windows")


def parse_window(text: str, k: int = 2) -> Window:
    """Parse CLI syntax: box:a:b, gauss:sigma:radius, bump:radius:order, simplex:x."""
    parts = text.split(":")
    name, vals = parts[0].lower(), parts[1:]
    dim = k - 1
    try:
        if name == "box":
            nums = [float(v) for v in vals]
            if len(nums) == 2:
                return Window.box((nums[0], nums[1]), dimension=dim)
            if len(nums) != 2 * dim:
                raise DomainError(f"box needs 2 or {2 * dim} numbers")
            return Window.box(*zip(nums[0::2], nums[1::2]))
        if name in ("gauss", "gaussian"):
            sigma = float(vals[0]) if vals else 1.0
            radius = float(vals[1]) if len(vals) > 1 else 8.0 * sigma
            return Window.gaussian(sigma, radius, dim)
        if name == "bump":
            return Window.bump(float(vals[0]), int(vals[1]) if len(vals) > 1 else 4, dim)
        if name == "simplex":
            return Window.simplex(float(vals[0]), k)
    except (IndexError, ValueError) as exc:
        raise DomainError(f"bad window {text!r}: {exc}") from None
    raise DomainError(f"unknown window {text!r}")

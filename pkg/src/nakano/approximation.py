"""Two convergent approximation schemes for the modular functional.

1. A minimax fit of m^x on [1, r] by sums of dyadic exponentials
   sum_k a_k 2^(-k x). Feeding the coefficients through the modular gives
   sum_k a_k modular(2^-k f), which tracks modular(m f) within the
   certified sup error for every unit-ball f.

2. Slicing the atoms by exponent into bands of width 1/n and summing
   norm^(band upper end) per slice. The error against the true modular
   is at most C / sqrt(n) with an explicit constant C.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, DomainError
from .measures import SimpleFunction
from .reports import CheckReport
from .spaces import NakanoSpace, essential_range, luxemburg_norm, modular

__all__ = [
    "DyadicFit",
    "dyadic_sum",
    "fit_dyadic",
    "theta_scaled",
    "Chunk",
    "ChunkPartition",
    "chunk",
    "chunked_estimate",
    "entropy_sum_constant",
    "chunk_error_bound",
    "check_norm_power_estimate",
    "check_entropy_sum_bound",
]

_FIT_GRID = 2048
_CERT_GRID = 8192
_LAWSON_ITERS = 80
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DyadicFit:
    """Coefficients a_k with sum_k a_k 2^(-k x) close to m^x on [1, r]."""

    m: int
    r: float
    eps: float
    coefficients: tuple[float, ...]
    certified_error: float

    def __post_init__(self):
        if self.certified_error > self.eps:
            raise DomainError("certified error exceeds the requested tolerance")

    @property
    def n(self) -> int:
        return len(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "r": self.r,
            "eps": self.eps,
            "n": self.n,
            "coefficients": list(self.coefficients),
            "certified_error": self.certified_error,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "DyadicFit":
        return cls(
            int(doc["m"]),
            float(doc["r"]),
            float(doc["eps"]),
            tuple(float(c) for c in doc["coefficients"]),
            float(doc["certified_error"]),
        )


def dyadic_sum(coefficients: Sequence[float], x) -> float | np.ndarray:
    """sum_k a_k 2^(-k x), vectorized over x."""
    xs = np.asarray(x, dtype=float)
    ks = np.arange(len(coefficients), dtype=float)
    out = np.asarray(coefficients, dtype=float) @ np.power(2.0, -np.outer(ks, xs))
    return float(out) if np.isscalar(x) else out


def _affine_compose(coef: np.ndarray, shift: float, scale: float) -> np.ndarray:
    """Coefficients of p(shift + scale * u) given those of p(v), by Horner."""
    out = np.array([coef[-1]])
    for c in coef[-2::-1]:
        out = np.polynomial.polynomial.polymul(out, [shift, scale])
        out[0] += c
    return out


def _lawson_minimax(m: int, r: float, n: int) -> tuple[np.ndarray, float]:
    """Least-squares start, then iteratively reweighted steps toward
    equioscillation; returns the best dyadic coefficients seen and their
    sup error on the fitting grid.

    In the variable u = 2^(-x) the target m^x = u^(-log2 m) is fitted by
    a degree n-1 polynomial. The loop runs in a Chebyshev basis on the
    u-interval (the raw powers of u are too ill-conditioned past a few
    terms) and the winner is converted to monomial coefficients, which
    are exactly the dyadic ones.
    """
    xs = np.linspace(1.0, r, _FIT_GRID)
    us = np.power(2.0, -xs)
    lo, hi = float(us.min()), float(us.max())
    scale = 2.0 / (hi - lo)
    shift = -(hi + lo) / (hi - lo)
    V = np.polynomial.chebyshev.chebvander(scale * us + shift, n - 1)
    y = np.power(float(m), xs)
    w = np.full(xs.size, 1.0 / xs.size)
    best_err = math.inf
    best = np.zeros(n)
    for _ in range(_LAWSON_ITERS):
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(V * sw[:, None], y * sw, rcond=None)
        resid = V @ coef - y
        err = float(np.max(np.abs(resid)))
        if err < best_err:
            best_err, best = err, coef
        w = w * (np.abs(resid) + 1e-30)
        w /= w.sum()
    mono = np.polynomial.chebyshev.cheb2poly(best)
    out = np.zeros(n)
    composed = _affine_compose(mono, shift, scale)
    out[: composed.size] = composed
    return out, best_err


def _certify(coefficients: np.ndarray, m: int, r: float, points: int) -> float:
    """Grid sup of the fit error plus a curvature slack covering the gaps.

    Between consecutive grid points the error deviates from its linear
    interpolant by at most max|err''| h^2 / 8; the second derivative is
    estimated from second differences of the sampled error (whose raw
    maximum is already 8x that quantity, an ample safety factor since
    the error of a near-minimax fit oscillates on a much coarser scale
    than the certification grid).
    """
    xs = np.linspace(1.0, r, points)
    err = dyadic_sum(coefficients, xs) - np.power(float(m), xs)
    grid_max = float(np.max(np.abs(err)))
    slack = float(np.max(np.abs(np.diff(err, n=2)))) if err.size >= 3 else 0.0
    return grid_max + slack


def fit_dyadic(m: int, r: float, eps: float) -> DyadicFit:
    """Fit m^x on [1, r] by a dyadic-exponential sum to sup error <= eps.

    The number of terms starts at 4 and doubles until certification (on
    a grid 4x finer than the fitting grid, plus curvature slack) passes.
    m = 1 and the degenerate interval r = 1 are exact with one term.
    """
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    m = int(m)
    if r < 1.0:
        raise DomainError("r must be >= 1")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if m == 1:
        return DyadicFit(1, r, eps, (1.0,), 0.0)
    if r == 1.0:
        # Single point x = 1: the constant m matches exactly.
        return DyadicFit(m, r, eps, (float(m),), 0.0)

    n = 4
    while True:
        coef, _ = _lawson_minimax(m, r, n)
        cert = _certify(coef, m, r, _CERT_GRID)
        if cert <= eps:
            return DyadicFit(m, r, eps, tuple(float(c) for c in coef), cert)
        n *= 2
        if n > 4096:
            raise RuntimeError(f"no certified fit below eps={eps} with up to 4096 terms")


def theta_scaled(N: NakanoSpace, f: SimpleFunction, fit: DyadicFit) -> float:
    """sum_k a_k modular(2^-k f), an approximation of modular(m f).

    For ||f|| <= 1 the atomwise fit error integrates to at most
    certified_error, since the modular of f itself is at most 1.
    """
    if fit.r < N.r - 1e-12:
        raise ContractError(f"fit covers [1, {fit.r}] but the space needs [1, {N.r}]")
    if luxemburg_norm(N, f) > 1.0 + 1e-9:
        raise ContractError("function must lie in the unit ball")
    return math.fsum(
        a * modular(N, f * (2.0 ** -k)) for k, a in enumerate(fit.coefficients)
    )


@dataclass(frozen=True)
class Chunk:
    """Atoms whose exponent falls in [lower, upper), with f restricted."""

    index: int
    lower: float
    upper: float
    space: NakanoSpace
    values: SimpleFunction


@dataclass(frozen=True)
class ChunkPartition:
    n: int
    chunks: tuple[Chunk, ...]


def chunk(N: NakanoSpace, f: SimpleFunction, n: int) -> ChunkPartition:
    """Partition the atoms by exponent band of width 1/n.

    Band k covers [(n+k)/n, (n+k+1)/n); the band count is the smallest
    integer exceeding n (r - 1), so the top exponent r always lands in
    the last band. Empty bands carry the zero-dimensional space.
    """
    if n < 1 or int(n) != n:
        raise DomainError("n must be a positive integer")
    n = int(n)
    ell = int(math.floor(n * (N.r - 1.0))) + 1
    members: dict[int, list[str]] = {k: [] for k in range(ell)}
    for a in N.space.atoms:
        k = int((N.exponent[a] - 1.0) * n)
        members[min(max(k, 0), ell - 1)].append(a)
    chunks = []
    for k in range(ell):
        sub = N.subspace(members[k])
        vals = SimpleFunction(sub.space, {a: f.values[a] for a in sub.atoms})
        chunks.append(
            Chunk(k, (n + k) / n, (n + k + 1) / n, sub, vals)
        )
    return ChunkPartition(n, tuple(chunks))


def chunked_estimate(cp: ChunkPartition) -> float:
    """sum over bands of (restricted norm)^(band upper end)."""
    total = []
    for ch in cp.chunks:
        c = luxemburg_norm(ch.space, ch.values)
        total.append(c ** ((cp.n + ch.index + 1) / cp.n) if c > 0.0 else 0.0)
    return math.fsum(total)


_SERIES_CUTOFF = 10 ** 6


@lru_cache(maxsize=1)
def _entropy_series_terms() -> tuple[float, float]:
    """Partial sum of log(k+3)/(k+3)^1.5 over k <= 1e6 and its tail bound.

    The summand decreases, so the tail past K is at most
    int_K^inf log(x+3)/(x+3)^(3/2) dx = 2 (log(K+3) + 2) / sqrt(K+3).
    """
    k = np.arange(_SERIES_CUTOFF + 1, dtype=float) + 3.0
    partial = float(np.sum(np.log(k) / k ** 1.5))
    kk = _SERIES_CUTOFF + 3.0
    tail = 2.0 * (math.log(kk) + 2.0) / math.sqrt(kk)
    return partial, tail


def entropy_sum_constant() -> float:
    """Upper bound for the constant in the weighted entropy-sum estimate.

    Series part (partial sum plus integral tail) plus 4/e, covering the
    at most two sequence entries that may exceed 1/e.
    """
    partial, tail = _entropy_series_terms()
    return partial + tail + 4.0 / math.e


def chunk_error_bound(n: int) -> float:
    """C / sqrt(n): certified gap between the modular and the chunked sum."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    return entropy_sum_constant() / math.sqrt(n)


_CHECK_TOL = 1e-9


def check_norm_power_estimate(N: NakanoSpace, f: SimpleFunction, s: float, eps: float) -> CheckReport:
    """|modular(f) - ||f||^(s+eps)| <= (eps/s) |log modular(f)| modular(f).

    Requires exponents within [s, s+eps] and ||f|| <= 1; also asserts the
    bracketing ||f||^(s+eps) <= modular(f) <= ||f||^s from which the
    estimate follows.
    """
    rng = essential_range(N)
    if rng and not (s - 1e-12 <= rng[0] and rng[-1] <= s + eps + 1e-12):
        raise ContractError(
            f"exponent range [{rng[0]}, {rng[-1]}] not within [{s}, {s + eps}]"
        )
    a = luxemburg_norm(N, f)
    if a > 1.0 + 1e-9:
        raise ContractError("function must lie in the unit ball")
    theta = modular(N, f)
    upper = a ** s
    lower = a ** (s + eps)
    bound = (eps / s) * abs(math.log(theta)) * theta if theta > 0.0 else 0.0
    margins = {
        "estimate": bound - abs(theta - lower),
        "bracket_lower": theta - lower,
        "bracket_upper": upper - theta,
    }
    worst_name = min(margins, key=margins.get)
    worst = margins[worst_name]
    return CheckReport(
        "norm_power_estimate",
        worst >= -_CHECK_TOL,
        3,
        worst,
        {"which": worst_name, "norm": a, "modular": theta},
    )


def check_entropy_sum_bound(a: Sequence[float], n: int) -> CheckReport:
    """sum_k a_k |log a_k| / (k + n) <= C / sqrt(n) for a_k >= 0, sum <= 1."""
    if n < 1:
        raise DomainError("n must be a positive integer")
    vals = [float(v) for v in a]
    if any(v < 0.0 for v in vals):
        raise ContractError("sequence entries must be nonnegative")
    if math.fsum(vals) > 1.0 + 1e-12:
        raise ContractError("sequence must sum to at most 1")
    lhs = math.fsum(
        v * abs(math.log(v)) / (k + n) for k, v in enumerate(vals) if v > 0.0
    )
    margin = chunk_error_bound(n) - lhs
    return CheckReport("entropy_sum_bound", margin >= 0.0, len(vals), margin, {"lhs": lhs})

"""Certified constants and verifiers for exponent perturbations.

For a bound s >= 1 three extremal constants control how far the signed
power maps t -> sgn(x)|x|^t, 1/s <= t <= s, can deviate from isometries
between unit balls:

* ``a``: the infimum of log(1 - g^s) / (s log(1 - g)) over g in [1/2, 1),
* ``b``: the larger of sup (1 - g^t)/(1 - g)^t over g in [0, 1/2] and
  sup (1 + g^t)/(1 + g)^t over g in [0, 1], t in [1/s, s],
* ``c``: the larger of the worst midpoint defect of the signed power
  maps on [-1, 1] and the sup distance between the modulus ``eta_hat``
  and the identity on [0, 2].

All three are estimated on deterministic grids with an explicit slack
(twice the largest adjacent value gap), yielding two-sided enclosures.
Downstream consumers always use the pessimistic side (a_lower, b_upper,
c_upper), so every guarantee derived from them stays valid under the
grid approximation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ContractError, DomainError
from .measures import SimpleFunction
from .reports import CheckReport
from .sampling import random_unit_ball
from .spaces import NakanoSpace, luxemburg_norm

__all__ = [
    "PerturbationConstants",
    "compute_constants",
    "log_complement_ratio",
    "eta",
    "eta_hat",
    "exponent_map",
    "delta_modulus",
    "quantize_exponent",
    "check_signed_power_gap",
    "check_concave_tangent_bound",
    "check_map_modulus",
    "check_almost_isometry",
    "PerturbationCheck",
    "is_epsilon_perturbation",
    "perturbation_budget",
]

# Grid defaults. ``grid_step`` arguments scale the gamma axes; the other
# axes are fixed so that results are reproducible.
GAMMA_STEP = 1e-5
T_STEP = 1e-3
X_STEP = 1e-4
MIDPOINT_STEP = 2.0 ** -9
REFINE_SAMPLES = 10 ** 5
_GAMMA_TOP = 1.0 - 1e-9
_ASYMPTOTIC_CUTOFF = 1e-8


def log_complement_ratio(gamma, s: float):
    """log(1 - gamma^s) / log(1 - gamma) for gamma in (0, 1), extended by 1 at gamma = 1.

    Evaluated through expm1/log1p so the value survives gamma near 1;
    within 1e-8 of 1 it switches to the asymptotic form
    1 + log(s)/log(1 - gamma). Accepts scalars or arrays.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any((g <= 0.0) | (g >= 1.0)):
        raise DomainError("gamma must lie in (0, 1)")
    log1mg = np.log1p(-g)
    with np.errstate(divide="ignore"):
        direct = np.log(-np.expm1(s * np.log(g))) / log1mg
    asymptotic = 1.0 + math.log(s) / log1mg
    out = np.where(1.0 - g < _ASYMPTOTIC_CUTOFF, asymptotic, direct)
    return float(out) if np.isscalar(gamma) else out


@dataclass(frozen=True)
class PerturbationConstants:
    """Two-sided enclosures of the constants at a given s.

    ``b_*`` and ``c_*`` expose the max of their two components; the
    components themselves are kept for inspection. ``slack`` is the
    largest grid slack that entered any enclosure.
    """

    s: float
    grid_step: float
    slack: float
    a_lower: float
    a_upper: float
    b_minus_lower: float
    b_minus_upper: float
    b_plus_lower: float
    b_plus_upper: float
    c_mid_lower: float
    c_mid_upper: float
    c_gap_lower: float
    c_gap_upper: float

    def __post_init__(self):
        if not (0.0 < self.a_lower <= self.a_upper <= 1.0 / self.s + 1e-12):
            raise DomainError(
                f"invalid enclosure for a at s={self.s}: "
                f"[{self.a_lower}, {self.a_upper}] vs 1/s={1.0 / self.s}"
            )
        if self.b_lower < 1.0 - 1e-12:
            raise DomainError(f"b enclosure below 1 at s={self.s}")
        if self.c_lower < 0.0:
            raise DomainError(f"negative c enclosure at s={self.s}")

    @property
    def b_lower(self) -> float:
        return max(self.b_minus_lower, self.b_plus_lower)

    @property
    def b_upper(self) -> float:
        return max(self.b_minus_upper, self.b_plus_upper)

    @property
    def c_lower(self) -> float:
        return max(self.c_mid_lower, self.c_gap_lower)

    @property
    def c_upper(self) -> float:
        return max(self.c_mid_upper, self.c_gap_upper)

    def csv_row(self) -> dict:
        return {
            "s": self.s,
            "A_lower": self.a_lower,
            "A_upper": self.a_upper,
            "B_lower": self.b_lower,
            "B_upper": self.b_upper,
            "C_lower": self.c_lower,
            "C_upper": self.c_upper,
            "grid_step": self.grid_step,
            "slack": self.slack,
        }


def _signed_pow(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** t


def _max_adjacent_gap(values: np.ndarray) -> float:
    return float(np.max(np.abs(np.diff(values)))) if values.size > 1 else 0.0


def _local_gaps(values: np.ndarray) -> np.ndarray:
    """Per-point local Lipschitz estimate: the larger adjacent value gap."""
    if values.size < 2:
        return np.zeros_like(values)
    d = np.abs(np.diff(values))
    return np.maximum(np.concatenate(([d[0]], d)), np.concatenate((d, [d[-1]])))


def _enclose_inf(values: np.ndarray) -> tuple[float, float]:
    """(lower, upper) for the inf of a sampled function, with local slack."""
    lower = float(np.min(values - 2.0 * _local_gaps(values)))
    return lower, float(values.min())


def _enclose_sup(values: np.ndarray) -> tuple[float, float]:
    upper = float(np.max(values + 2.0 * _local_gaps(values)))
    return float(values.max()), upper


def _t_grid(s: float, step: float) -> np.ndarray:
    lo = 1.0 / s
    count = max(2, int(math.ceil((s - lo) / step)) + 1)
    return np.linspace(lo, s, count)


def _sup_two_var(
    gammas: np.ndarray, tgrid: np.ndarray, fn: Callable[[np.ndarray, float], np.ndarray]
) -> tuple[float, float]:
    """(grid max, certified upper) of fn over the (gamma, t) grid.

    The upper bound adds, pointwise, twice the larger of the local gap
    along gamma and the gap to the neighbouring t slice.
    """
    best = -math.inf
    upper = -math.inf
    prev = None
    for t in tgrid:
        row = fn(gammas, float(t))
        best = max(best, float(row.max()))
        g = _local_gaps(row)
        if prev is not None:
            gt = np.abs(row - prev)
            g = np.maximum(g, gt)
            upper = max(upper, float(np.max(prev + 2.0 * gt)))
        upper = max(upper, float(np.max(row + 2.0 * g)))
        prev = row
    return best, upper


def _midpoint_defect_sup(s: float) -> tuple[float, float]:
    """Sup over alpha, beta in [-1,1], t in [1/s, s] of the midpoint defect
    |sgn(m)|m|^t - (sgn(a)|a|^t + sgn(b)|b|^t)/2| at m = (a + b)/2.

    Midpoints of the alpha grid live on the half-step grid, so each row of
    the defect matrix is a contiguous window into the midpoint array.
    """
    half = int(round(1.0 / MIDPOINT_STEP))
    n = 2 * half + 1
    alphas = np.linspace(-1.0, 1.0, n)
    mids = np.linspace(-1.0, 1.0, 2 * n - 1)
    tgrid = _t_grid(s, MIDPOINT_STEP)

    best = -math.inf
    best_at = (0.0, 0.0, float(tgrid[0]))
    gap = 0.0
    prev_w = prev_m = None
    buf = np.empty((n, n))
    for t in tgrid:
        t = float(t)
        w = _signed_pow(alphas, t)
        mv = _signed_pow(mids, t)
        window = sliding_window_view(mv, n)
        np.subtract(window, 0.5 * (w[:, None] + w[None, :]), out=buf)
        np.abs(buf, out=buf)
        i = int(np.argmax(buf))
        val = float(buf.flat[i])
        if val > best:
            best = val
            i0, i1 = divmod(i, n)
            best_at = (float(alphas[i0]), float(alphas[i1]), t)
        gap = max(gap, _max_adjacent_gap(mv) + 0.5 * _max_adjacent_gap(w))
        if prev_w is not None:
            gap = max(
                gap,
                float(np.max(np.abs(mv - prev_m))) + float(np.max(np.abs(w - prev_w))),
            )
        prev_w, prev_m = w, mv

    # Random refinement around the grid argmax guards against aliasing.
    rng = np.random.default_rng(9)
    a0, b0, t0 = best_at
    d = 2.0 * MIDPOINT_STEP
    aa = rng.uniform(max(a0 - d, -1.0), min(a0 + d, 1.0), size=REFINE_SAMPLES)
    bb = rng.uniform(max(b0 - d, -1.0), min(b0 + d, 1.0), size=REFINE_SAMPLES)
    tt = rng.uniform(max(t0 - d, 1.0 / s), min(t0 + d, s), size=REFINE_SAMPLES)
    mid = 0.5 * (aa + bb)
    vals = np.abs(
        np.sign(mid) * np.abs(mid) ** tt
        - 0.5 * (np.sign(aa) * np.abs(aa) ** tt + np.sign(bb) * np.abs(bb) ** tt)
    )
    best = max(best, float(vals.max()))
    return best, 2.0 * gap


def _eta_values(xs: np.ndarray, s: float, a: float) -> np.ndarray:
    """Piecewise x^(a/s) on [0, 1], x^s on (1, 2]."""
    return np.where(xs <= 1.0, xs ** (a / s), xs ** s)


def _eta_hat_values(xs: np.ndarray, s: float, a: float, b: float) -> np.ndarray:
    return 2.0 ** (1.0 - a) * b / a * _eta_values(xs, s, a)


@lru_cache(maxsize=None)
def _compute_constants_cached(s: float, grid_step: float) -> PerturbationConstants:
    if s == 1.0:
        # Every defining expression is constant at s = 1: the log ratio is
        # identically 1, both b suprema are of the constant 1, and the
        # modulus is the identity.
        return PerturbationConstants(
            s=1.0, grid_step=grid_step, slack=0.0,
            a_lower=1.0, a_upper=1.0,
            b_minus_lower=1.0, b_minus_upper=1.0,
            b_plus_lower=1.0, b_plus_upper=1.0,
            c_mid_lower=0.0, c_mid_upper=0.0,
            c_gap_lower=0.0, c_gap_upper=0.0,
        )

    # a: infimum over [1/2, 1) of the log ratio divided by s.
    count = max(2, int(round((_GAMMA_TOP - 0.5) / grid_step)) + 1)
    gammas = np.linspace(0.5, _GAMMA_TOP, count)
    vals = log_complement_ratio(gammas, s) / s
    a_lower, a_grid = _enclose_inf(vals)
    slack_a = a_grid - a_lower
    a_upper = min(a_grid, 1.0 / s)

    tgrid = _t_grid(s, T_STEP)

    count_m = max(2, int(round(0.5 / grid_step)) + 1)
    g_minus = np.linspace(0.0, 0.5, count_m)
    lg_minus = np.empty_like(g_minus)
    with np.errstate(divide="ignore"):
        np.log(g_minus, out=lg_minus)
    l1mg = np.log1p(-g_minus)

    def b_minus_fn(_, t):
        with np.errstate(divide="ignore"):
            return (1.0 - np.exp(t * lg_minus)) / np.exp(t * l1mg)

    b_minus_grid, b_minus_up = _sup_two_var(g_minus, tgrid, b_minus_fn)

    count_p = max(2, int(round(1.0 / grid_step)) + 1)
    g_plus = np.linspace(0.0, 1.0, count_p)
    lg_plus = np.empty_like(g_plus)
    with np.errstate(divide="ignore"):
        np.log(g_plus, out=lg_plus)
    l1pg = np.log1p(g_plus)

    def b_plus_fn(_, t):
        with np.errstate(divide="ignore"):
            return (1.0 + np.exp(t * lg_plus)) / np.exp(t * l1pg)

    b_plus_grid, b_plus_up = _sup_two_var(g_plus, tgrid, b_plus_fn)

    c_mid_grid, slack_c1 = _midpoint_defect_sup(s)

    # Gap between the modulus and the identity on [0, 2]. The modulus is
    # only known through the enclosure of (a, b): the pessimistic pair
    # bounds it from above, the optimistic pair from below.
    xs = np.linspace(0.0, 2.0, int(round(2.0 / X_STEP)) + 1)
    gap_up = _eta_hat_values(xs, s, a_lower, max(b_minus_up, b_plus_up)) - xs
    gap_lo = _eta_hat_values(xs, s, a_upper, max(b_minus_grid, b_plus_grid)) - xs
    _, c_gap_upper = _enclose_sup(gap_up)
    c_gap_lower = max(float(gap_lo.max()), 0.0)

    return PerturbationConstants(
        s=s,
        grid_step=grid_step,
        slack=max(
            slack_a,
            b_minus_up - b_minus_grid,
            b_plus_up - b_plus_grid,
            slack_c1,
            c_gap_upper - float(gap_up.max()),
        ),
        a_lower=a_lower,
        a_upper=a_upper,
        b_minus_lower=b_minus_grid,
        b_minus_upper=b_minus_up,
        b_plus_lower=b_plus_grid,
        b_plus_upper=b_plus_up,
        c_mid_lower=c_mid_grid,
        c_mid_upper=c_mid_grid + slack_c1,
        c_gap_lower=c_gap_lower,
        c_gap_upper=c_gap_upper,
    )


def compute_constants(
    s: float, grid_step: float = GAMMA_STEP, r: float | None = None
) -> PerturbationConstants:
    """Certified enclosures of the constants at s.

    Infima are reported as [grid min - slack, grid min], suprema as
    [grid max, grid max + slack], slack being twice the largest adjacent
    value gap seen on the grid. When ``r`` is given, s must not exceed it.
    """
    s = float(s)
    if not math.isfinite(s) or s < 1.0:
        raise DomainError(f"s={s!r} must be finite and >= 1")
    if r is not None and s > float(r):
        raise DomainError(f"s={s!r} exceeds the exponent bound r={r!r}")
    if grid_step <= 0.0:
        raise DomainError("grid_step must be positive")
    return _compute_constants_cached(s, float(grid_step))


def _resolve(s: float, constants: PerturbationConstants | None) -> PerturbationConstants:
    if constants is None:
        return compute_constants(s)
    if constants.s != s:
        raise DomainError(f"constants were computed at s={constants.s}, not {s}")
    return constants


def eta(s: float, x: float, constants: PerturbationConstants | None = None) -> float:
    """x^(a/s) for x <= 1, x^s for 1 < x <= 2, with the certified lower a.

    Using the lower end of the enclosure makes the value an upper
    estimate of the true function on [0, 1]; both branches meet at 1.
    """
    c = _resolve(s, constants)
    if not 0.0 <= x <= 2.0:
        raise DomainError(f"x={x!r} outside [0, 2]")
    return x ** (c.a_lower / s) if x <= 1.0 else x ** s


def eta_hat(s: float, x: float, constants: PerturbationConstants | None = None) -> float:
    """The distance modulus 2^(1-a) b / a * eta(x), evaluated pessimistically.

    With (a_lower, b_upper) the result dominates the true modulus, so
    bounds of the form ||Ef - Eg|| <= eta_hat(||f - g||) remain valid.
    """
    c = _resolve(s, constants)
    return 2.0 ** (1.0 - c.a_lower) * c.b_upper / c.a_lower * eta(s, x, c)


def exponent_map(N_p: NakanoSpace, N_q: NakanoSpace, f: SimpleFunction) -> SimpleFunction:
    """Atomwise sgn(f) |f|^{p/q} from the p-exponent space to the q one.

    Preserves the modular exactly, hence maps unit ball to unit ball; the
    inverse is the map in the opposite direction.
    """
    if N_p.space.atoms != N_q.space.atoms:
        raise DomainError("spaces live on different atom sets")
    if N_p.space.aligned_weights() != N_q.space.aligned_weights():
        raise DomainError("spaces carry different measures")
    if f.space.atoms != N_p.space.atoms:
        raise DomainError("function is not defined on the atoms of this space")
    out = []
    for v, p, q in zip(f.aligned_values(), N_p.aligned_exponents(), N_q.aligned_exponents()):
        if v == 0.0:
            out.append(0.0)
        else:
            out.append(math.copysign(math.pow(abs(v), p / q), v))
    return SimpleFunction.from_aligned(N_q.space, out)


def delta_modulus(r: float, eps: float, constants: PerturbationConstants | None = None) -> float:
    """Distance threshold min((2^(a-1) a eps / b)^(r/a), 1) at s = r.

    Guarantees ||f - g|| < delta implies ||Ef - Eg|| <= eps for every
    exponent pair with ratios in [1/r, r], using the pessimistic (a, b).
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    c = _resolve(float(r), constants)
    a, b = c.a_lower, c.b_upper
    base = 2.0 ** (a - 1.0) * a * eps / b
    return min(base ** (float(r) / a), 1.0)


def quantize_exponent(N: NakanoSpace, s: float) -> NakanoSpace:
    """Round exponents up to the geometric grid {min(s^j, r) : j >= 0}.

    The result q has finite range with q >= p and q <= s p atomwise; an
    atom whose grid point would exceed r is capped at r, which keeps the
    ratio within [1, s] since p <= r.
    """
    if s <= 1.0:
        raise DomainError("quantization needs s > 1")
    logs = math.log(s)
    out = {}
    for a in N.space.atoms:
        p = N.exponent[a]
        j = max(0, math.ceil(math.log(p) / logs - 1e-12))
        while s ** j < p:
            j += 1
        out[a] = min(s ** j, N.r)
    return NakanoSpace(N.space, out, N.r)


# ---------------------------------------------------------------------------
# Inequality verifiers
# ---------------------------------------------------------------------------

_CHECK_TOL = 1e-10


def check_signed_power_gap(
    s: float,
    grid: tuple[int, int, int] = (100, 100, 100),
    samples: int = 10_000,
    seed: int = 3,
    constants: PerturbationConstants | None = None,
) -> CheckReport:
    """|sgn(a)|a|^t - sgn(b)|b|^t| <= max(|a-b|^(at), b_up |a-b|^t).

    Checked on a deterministic grid over a, b in [-1, 1], t in [1/s, s]
    plus random samples, with the certified outer constants (a_lower,
    b_upper), i.e. the exact form in which downstream bounds consume
    the inequality.
    """
    c = _resolve(float(s), constants)
    na, nb, nt = grid
    alphas = np.linspace(-1.0, 1.0, na)
    betas = np.linspace(-1.0, 1.0, nb)
    ts = np.linspace(1.0 / s, s, nt)

    worst = math.inf
    worst_point: dict = {}
    checked = 0

    def scan(avals: np.ndarray, bvals: np.ndarray, t: float, outer: bool):
        nonlocal worst, worst_point, checked
        if outer:
            pa = _signed_pow(avals, t)
            pb = _signed_pow(bvals, t)
            lhs = np.abs(pa[:, None] - pb[None, :])
            d = np.abs(avals[:, None] - bvals[None, :])
        else:
            lhs = np.abs(_signed_pow(avals, t) - _signed_pow(bvals, t))
            d = np.abs(avals - bvals)
        with np.errstate(divide="ignore"):
            rhs = np.maximum(d ** (c.a_lower * t), c.b_upper * d ** t)
        margin = rhs - lhs
        checked += margin.size
        i = int(np.argmin(margin))
        m = float(margin.flat[i])
        if m < worst:
            worst = m
            if outer:
                i0, i1 = divmod(i, len(bvals))
                worst_point = {"alpha": float(avals[i0]), "beta": float(bvals[i1]), "t": t}
            else:
                worst_point = {"alpha": float(avals.flat[i]), "beta": float(bvals.flat[i]), "t": t}

    for t in ts:
        scan(alphas, betas, float(t), outer=True)
    if samples:
        rng = np.random.default_rng(seed)
        aa = rng.uniform(-1.0, 1.0, size=samples)
        bb = rng.uniform(-1.0, 1.0, size=samples)
        for t in rng.uniform(1.0 / s, s, size=4):
            scan(aa, bb, float(t), outer=False)

    return CheckReport("signed_power_gap", worst >= -_CHECK_TOL, checked, worst, worst_point)


def check_concave_tangent_bound(grid: tuple[int, int] = (1000, 1000)) -> CheckReport:
    """t (1 - g) + g^t <= 1 for g, t in [0, 1] (0^0 read as 1)."""
    ng, nt = grid
    g = np.linspace(0.0, 1.0, ng)
    t = np.linspace(0.0, 1.0, nt)
    G, T = np.meshgrid(g, t, indexing="ij")
    margin = 1.0 - (T * (1.0 - G) + G ** T)
    i = int(np.argmin(margin))
    worst = float(margin.flat[i])
    i0, i1 = divmod(i, nt)
    return CheckReport(
        "concave_tangent_bound",
        worst >= -1e-12,
        margin.size,
        worst,
        {"gamma": float(g[i0]), "t": float(t[i1])},
    )


def _require_ratio(N_p: NakanoSpace, N_q: NakanoSpace, s: float) -> None:
    for p, q in zip(N_p.aligned_exponents(), N_q.aligned_exponents()):
        ratio = p / q
        if not (1.0 / s - 1e-12 <= ratio <= s + 1e-12):
            raise ContractError(f"exponent ratio {ratio!r} outside [1/{s}, {s}]")


def check_map_modulus(
    N_p: NakanoSpace,
    N_q: NakanoSpace,
    s: float,
    trials: int = 1000,
    seed: int = 11,
    constants: PerturbationConstants | None = None,
) -> CheckReport:
    """Both directions of the modulus bound for the exponent map.

    For random unit-ball pairs f, g: ||Ef - Eg|| <= eta_hat(||f - g||)
    and ||f - g|| <= eta_hat(||Ef - Eg||), with the pessimistic modulus.
    """
    s = float(s)
    c = _resolve(s, constants)
    _require_ratio(N_p, N_q, s)
    rng = np.random.default_rng(seed)
    worst = math.inf
    worst_point: dict = {}
    for k in range(trials):
        f = random_unit_ball(rng, N_p)
        g = random_unit_ball(rng, N_p)
        d = luxemburg_norm(N_p, f - g)
        ef = exponent_map(N_p, N_q, f)
        eg = exponent_map(N_p, N_q, g)
        de = luxemburg_norm(N_q, ef - eg)
        m1 = eta_hat(s, min(d, 2.0), c) - de
        m2 = eta_hat(s, min(de, 2.0), c) - d
        m = min(m1, m2)
        if m < worst:
            worst = m
            worst_point = {"trial": k, "distance": d, "image_distance": de}
    return CheckReport("map_modulus", worst >= -_CHECK_TOL, 2 * trials, worst, worst_point)


def check_almost_isometry(
    N_p: NakanoSpace,
    N_q: NakanoSpace,
    s: float,
    trials: int = 1000,
    seed: int = 13,
    constants: PerturbationConstants | None = None,
) -> CheckReport:
    """Symmetry identities plus the c-bounded distance and midpoint defects.

    Checks, per random unit-ball pair: E(-f) = -E(f) and E|f| = |Ef|
    exactly, | ||f-g|| - ||Ef-Eg|| | <= c_upper, and the midpoint defect
    ||E((f+g)/2) - (Ef+Eg)/2|| <= 2 c_upper.
    """
    s = float(s)
    c = _resolve(s, constants)
    _require_ratio(N_p, N_q, s)
    rng = np.random.default_rng(seed)
    worst = math.inf
    worst_point: dict = {}
    checked = 0
    for k in range(trials):
        f = random_unit_ball(rng, N_p)
        g = random_unit_ball(rng, N_p)
        ef = exponent_map(N_p, N_q, f)
        eg = exponent_map(N_p, N_q, g)
        if exponent_map(N_p, N_q, -f).aligned_values() != (-ef).aligned_values():
            return CheckReport("almost_isometry", False, checked, -math.inf, {"trial": k, "broke": "negation"})
        if exponent_map(N_p, N_q, abs(f)).aligned_values() != abs(ef).aligned_values():
            return CheckReport("almost_isometry", False, checked, -math.inf, {"trial": k, "broke": "absolute value"})
        d = luxemburg_norm(N_p, f - g)
        de = luxemburg_norm(N_q, ef - eg)
        m2 = c.c_upper - abs(d - de)
        em = exponent_map(N_p, N_q, (f + g) * 0.5)
        defect = luxemburg_norm(N_q, em - (ef + eg) * 0.5)
        m3 = 2.0 * c.c_upper - defect
        checked += 4
        m = min(m2, m3)
        if m < worst:
            worst = m
            worst_point = {"trial": k, "distance_defect": abs(d - de), "midpoint_defect": defect}
    return CheckReport("almost_isometry", worst >= -_CHECK_TOL, checked, worst, worst_point)


# ---------------------------------------------------------------------------
# Unit-ball perturbation predicate and budget search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationCheck:
    """Boolean outcome with a witness for the first violated condition."""

    ok: bool
    witness: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.ok


def is_epsilon_perturbation(
    source: NakanoSpace,
    target: NakanoSpace,
    map_fn: Callable[[SimpleFunction], SimpleFunction],
    pairs: Sequence[tuple[SimpleFunction, SimpleFunction]],
    eps: float,
) -> PerturbationCheck:
    """Probe whether a unit-ball bijection distorts structure by at most eps.

    On every probe: the map fixes 0 and commutes with negation and
    absolute value exactly; norms move by at most eps; midpoint distances
    (with the unit-ball convention d(f, g) = ||f - g|| / 2, the third
    point ranging over the pair and 0) move by at most eps; and distances
    obey e^{-eps e^eps} d^{e^eps} <= d' <= e^eps d^{e^-eps}.
    """
    tol = 1e-9
    zero = SimpleFunction.zero(source.space)
    if not map_fn(zero).is_zero():
        return PerturbationCheck(False, {"condition": "zero_fixed"})

    e_eps = math.exp(eps)
    e_meps = math.exp(-eps)
    lower_coef = math.exp(-eps * e_eps)

    for idx, (f, g) in enumerate(pairs):
        tf, tg = map_fn(f), map_fn(g)
        for name, h, th in (("first", f, tf), ("second", g, tg)):
            if map_fn(-h).aligned_values() != (-th).aligned_values():
                return PerturbationCheck(False, {"condition": "negation", "pair": idx, "element": name})
            if map_fn(abs(h)).aligned_values() != abs(th).aligned_values():
                return PerturbationCheck(False, {"condition": "absolute_value", "pair": idx, "element": name})
            defect = abs(luxemburg_norm(source, h) - luxemburg_norm(target, th))
            if defect > eps + tol:
                return PerturbationCheck(False, {"condition": "norm", "pair": idx, "defect": defect})

        d = 0.5 * luxemburg_norm(source, f - g)
        dt = 0.5 * luxemburg_norm(target, tf - tg)
        if dt > e_eps * d ** e_meps + tol:
            return PerturbationCheck(
                False, {"condition": "distance_upper", "pair": idx, "d": d, "image_d": dt}
            )
        if dt + tol < lower_coef * d ** e_eps:
            return PerturbationCheck(
                False, {"condition": "distance_lower", "pair": idx, "d": d, "image_d": dt}
            )

        m = (f + g) * 0.5
        tm = (tf + tg) * 0.5
        for h, th in ((f, tf), (g, tg), (zero, SimpleFunction.zero(target.space))):
            lhs = 0.5 * luxemburg_norm(source, m - h)
            rhs = 0.5 * luxemburg_norm(target, tm - th)
            if abs(lhs - rhs) > eps + tol:
                return PerturbationCheck(
                    False,
                    {"condition": "midpoint", "pair": idx, "defect": abs(lhs - rhs)},
                )
    return PerturbationCheck(True)


def _budget_conditions(const: PerturbationConstants, eps: float) -> bool:
    """Do the certified constants at this s imply every eps-condition?

    Defect conditions use min with the trivial unit-ball caps (norms and
    half-distances never exceed 1). The distance distortion needs the
    small-distance exponent condition e^-eps <= a/s; past that the two
    envelopes are checked on a grid with the pessimistic modulus capped
    by the diameter.
    """
    s = const.s
    if min(1.5 * const.c_upper, 1.0) > eps:
        return False
    if math.exp(-eps) > const.a_lower / s:
        return False
    xs = np.linspace(X_STEP, 2.0, int(round(2.0 / X_STEP)))
    cap = np.minimum(_eta_hat_values(xs, s, const.a_lower, const.b_upper), 2.0)
    e_eps = math.exp(eps)
    e_meps = math.exp(-eps)
    if np.any(0.5 * cap > e_eps * (0.5 * xs) ** e_meps + 1e-12):
        return False
    rhs = math.exp(-eps * e_eps) * np.minimum(0.5 * cap, 1.0) ** e_eps
    if np.any(0.5 * xs + 1e-12 < rhs):
        return False
    return True


def perturbation_budget(eps: float, k_max: int = 16, grid_step: float = GAMMA_STEP) -> float:
    """Largest s = 1 + 2^-k whose certified constants imply the eps-conditions.

    Searches k = 0, 1, ... and returns the first (largest) s that
    certifies; if even the smallest grid value fails, returns it with a
    warning. The result always exceeds 1.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    for k in range(k_max + 1):
        s = 1.0 + 2.0 ** -k
        const = compute_constants(s, grid_step)
        if _budget_conditions(const, eps):
            return s
    warnings.warn(
        f"no grid value certified for eps={eps}; falling back to the smallest",
        RuntimeWarning,
        stacklevel=2,
    )
    return 1.0 + 2.0 ** -k_max

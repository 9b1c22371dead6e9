"""Seeded random instance generators used by verifier suites and tests.

Every generator takes an explicit numpy Generator so that suites are
reproducible from a single seed.
"""

from __future__ import annotations

import math

import numpy as np

from .embeddings import RefinementEmbedding
from .measures import AtomicMeasureSpace, SimpleFunction
from .spaces import NakanoSpace, luxemburg_norm

__all__ = [
    "random_space",
    "random_function",
    "random_unit_ball",
    "random_equivalent_measure",
    "random_refinement",
]


def random_space(
    rng: np.random.Generator,
    n_atoms: int,
    r: float,
    p_values=None,
    weight_range: tuple[float, float] = (0.2, 2.0),
    prefix: str = "a",
) -> NakanoSpace:
    """A space with uniform random weights and exponents in [1, r]."""
    ids = tuple(f"{prefix}{i}" for i in range(n_atoms))
    weights = dict(zip(ids, rng.uniform(*weight_range, size=n_atoms)))
    if p_values is None:
        exps = dict(zip(ids, rng.uniform(1.0, r, size=n_atoms)))
    else:
        exps = dict(zip(ids, rng.choice(np.asarray(p_values, dtype=float), size=n_atoms)))
    return NakanoSpace(AtomicMeasureSpace(ids, weights), exps, r)


def random_function(
    rng: np.random.Generator, N: NakanoSpace, lo: float = -2.0, hi: float = 2.0
) -> SimpleFunction:
    return SimpleFunction.from_aligned(N.space, rng.uniform(lo, hi, size=N.dim))


def random_unit_ball(
    rng: np.random.Generator,
    N: NakanoSpace,
    min_norm: float = 0.05,
    max_norm: float = 1.0,
) -> SimpleFunction:
    """A function with Luxemburg norm uniform in [min_norm, max_norm]."""
    while True:
        vals = rng.uniform(-1.0, 1.0, size=N.dim)
        if np.any(vals != 0.0):
            break
    f = SimpleFunction.from_aligned(N.space, vals)
    c = luxemburg_norm(N, f)
    target = rng.uniform(min_norm, max_norm)
    return f * (target / c)


def random_equivalent_measure(
    rng: np.random.Generator,
    space: AtomicMeasureSpace,
    ratio_range: tuple[float, float] = (0.25, 4.0),
) -> AtomicMeasureSpace:
    """Same atoms, weights rescaled atomwise by random positive ratios."""
    ratios = rng.uniform(*ratio_range, size=space.dim)
    return AtomicMeasureSpace(
        space.atoms,
        {a: space.weight[a] * float(t) for a, t in zip(space.atoms, ratios)},
    )


def random_refinement(
    rng: np.random.Generator,
    N: NakanoSpace,
    max_children: int = 3,
    extra_atoms: int = 0,
    unit_coefficients: bool = True,
) -> RefinementEmbedding:
    """Split each source atom into weighted children of equal exponent.

    With ``unit_coefficients`` the result is characteristic- and
    measure-preserving. Otherwise coefficients c are drawn at random and
    child weights are scaled so that sum c^p * weight equals the source
    weight, which makes the embedding modular-preserving and hence
    isometric. ``extra_atoms`` appends unmapped target atoms.
    """
    t_ids: list[str] = []
    t_weights: dict[str, float] = {}
    t_exps: dict[str, float] = {}
    image: dict[str, tuple[tuple[str, float], ...]] = {}

    for src in N.space.atoms:
        k = int(rng.integers(1, max_children + 1))
        p = N.exponent[src]
        mu = N.space.weight[src]
        coeffs = np.ones(k) if unit_coefficients else rng.uniform(0.5, 2.0, size=k)
        raw = rng.uniform(0.5, 2.0, size=k)
        scale = mu / math.fsum(
            float(c) ** p * float(w) for c, w in zip(coeffs, raw)
        )
        pairs = []
        for j in range(k):
            child = f"{src}:{j}"
            t_ids.append(child)
            t_weights[child] = float(raw[j]) * scale
            t_exps[child] = p
            pairs.append((child, float(coeffs[j])))
        image[src] = tuple(pairs)

    for j in range(extra_atoms):
        child = f"pad:{j}"
        t_ids.append(child)
        t_weights[child] = float(rng.uniform(0.2, 2.0))
        t_exps[child] = float(rng.uniform(1.0, N.r))

    target = NakanoSpace(AtomicMeasureSpace(tuple(t_ids), t_weights), t_exps, N.r)
    return RefinementEmbedding(N, target, image)

"""Refinement embeddings between variable-exponent spaces.

A refinement embedding sends each source atom to a disjoint block of
target atoms with positive coefficients. Applying it to a simple
function scales the source value onto each image atom, which is the
unique lattice-homomorphic extension of the action on indicators.

``normalize`` replaces the target measure by the equivalent one under
which the embedding becomes characteristic-preserving (all coefficients
1); ``rigidity_check`` then verifies that a norm-preserving embedding
is, after that normalization, an exponent- and mass-preserving
identification of source atoms with blocks of target atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, DomainError, NotIsometricError
from .measures import AtomicMeasureSpace, SimpleFunction, integrate
from .reports import CheckResult
from .spaces import NakanoSpace, essential_range, luxemburg_norm, modular

__all__ = [
    "RefinementEmbedding",
    "apply_embedding",
    "check_integral_preservation",
    "normalize",
    "rigidity_check",
    "RigidityReport",
]

# Probe-set isometry tolerance: comfortably above the norm solver residual,
# far below any honest violation.
ISOMETRY_TOL = 1e-9
_PROBE_SEED = 1618


@dataclass(frozen=True)
class RefinementEmbedding:
    """Per source atom, a disjoint list of (target atom, coefficient > 0)."""

    source: NakanoSpace
    target: NakanoSpace
    image: dict[str, tuple[tuple[str, float], ...]]

    def __post_init__(self):
        image: dict[str, tuple[tuple[str, float], ...]] = {}
        for key, pairs in self.image.items():
            image[str(key)] = tuple((str(a), float(c)) for a, c in pairs)
        if set(image) != set(self.source.atoms):
            raise DomainError("image map must cover exactly the source atoms")
        target_atoms = set(self.target.atoms)
        seen: set[str] = set()
        for src, pairs in image.items():
            if not pairs:
                raise DomainError(f"source atom {src!r} has an empty image")
            for a, c in pairs:
                if a not in target_atoms:
                    raise DomainError(f"unknown target atom {a!r}")
                if a in seen:
                    raise DomainError(f"target atom {a!r} is shared by two source atoms")
                seen.add(a)
                if not math.isfinite(c) or c <= 0.0:
                    raise DomainError(f"coefficient {c!r} on target atom {a!r} must be positive")
        object.__setattr__(self, "image", image)

    def owner_of(self) -> dict[str, tuple[str, float]]:
        """target atom -> (owning source atom, coefficient)."""
        out = {}
        for src, pairs in self.image.items():
            for a, c in pairs:
                out[a] = (src, c)
        return out

    def to_dict(self) -> dict:
        return {
            "map": {
                src: [{"atom": a, "coeff": c} for a, c in self.image[src]]
                for src in self.source.atoms
            }
        }

    @classmethod
    def from_dict(
        cls, source: NakanoSpace, target: NakanoSpace, doc: Mapping
    ) -> "RefinementEmbedding":
        try:
            raw = doc["map"]
            image = {
                str(src): tuple((str(e["atom"]), float(e["coeff"])) for e in entries)
                for src, entries in raw.items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed embedding document: {exc}") from exc
        return cls(source, target, image)


def apply_embedding(e: RefinementEmbedding, f: SimpleFunction) -> SimpleFunction:
    """coefficient * source value on each image atom, zero elsewhere."""
    if f.space.atoms != e.source.atoms:
        raise DomainError("function is not defined on the source atoms")
    out = {a: 0.0 for a in e.target.atoms}
    for src, pairs in e.image.items():
        v = f.values[src]
        for a, c in pairs:
            out[a] = c * v
    return SimpleFunction(e.target.space, out)


def check_integral_preservation(e: RefinementEmbedding, f: SimpleFunction) -> bool:
    """Does the embedding preserve the integral of f?

    Requires a characteristic-preserving (all coefficients 1) and
    measure-preserving embedding; under those hypotheses the two
    integrals agree exactly, so the check uses a tight tolerance.
    """
    for src, pairs in e.image.items():
        for a, c in pairs:
            if c != 1.0:
                raise ContractError(f"coefficient {c!r} on {a!r}: embedding is not characteristic-preserving")
        mass = math.fsum(e.target.space.weight[a] for a, _ in pairs)
        want = e.source.space.weight[src]
        if abs(mass - want) > 1e-12 * (1.0 + abs(want)):
            raise ContractError(
                f"image of {src!r} has mass {mass!r}, source weight is {want!r}"
            )
    left = integrate(e.source.space, f)
    right = integrate(e.target.space, apply_embedding(e, f))
    return abs(left - right) <= 1e-10 * (1.0 + abs(left))


def _probe_functions(e: RefinementEmbedding, extra: int = 64) -> list[SimpleFunction]:
    """Indicators, pairwise indicator sums, and seeded nonnegative samples."""
    src = e.source.space
    probes = [SimpleFunction.indicator(src, [a]) for a in src.atoms]
    for i, a in enumerate(src.atoms):
        for b in src.atoms[i + 1 :]:
            probes.append(SimpleFunction.indicator(src, [a, b]))
    rng = np.random.default_rng(_PROBE_SEED)
    for _ in range(extra):
        vals = rng.uniform(0.0, 2.0, size=src.dim)
        probes.append(SimpleFunction.from_aligned(src, vals))
    return probes


def _isometry_defect(e: RefinementEmbedding, probes: Sequence[SimpleFunction]):
    worst = 0.0
    witness: dict = {}
    for f in probes:
        a = luxemburg_norm(e.source, f)
        b = luxemburg_norm(e.target, apply_embedding(e, f))
        defect = abs(a - b) / (1.0 + abs(a))
        if defect > worst:
            worst = defect
            witness = {"source_norm": a, "image_norm": b}
    return worst, witness


def normalize(e: RefinementEmbedding) -> tuple[AtomicMeasureSpace, RefinementEmbedding]:
    """Density-change the target so the embedding has all coefficients 1.

    The new target weight of an image atom with coefficient c and
    exponent q is c^q times the old weight; atoms outside the image keep
    their weight. Raises NotIsometricError when the probe set detects a
    norm defect, carrying the worst witness.
    """
    worst, witness = _isometry_defect(e, _probe_functions(e))
    if worst > ISOMETRY_TOL:
        raise NotIsometricError(
            f"embedding is not isometric on the probe set (defect {worst:.3e})", witness
        )
    return _normalize_unchecked(e)


def _normalize_unchecked(e: RefinementEmbedding) -> tuple[AtomicMeasureSpace, RefinementEmbedding]:
    owner = e.owner_of()
    tgt = e.target
    new_weight = {}
    for a in tgt.atoms:
        if a in owner:
            _, c = owner[a]
            zeta = math.pow(c, tgt.exponent[a])
        else:
            zeta = 1.0
        new_weight[a] = zeta * tgt.space.weight[a]
    lam = AtomicMeasureSpace(tgt.atoms, new_weight)
    flat = RefinementEmbedding(
        e.source,
        tgt.with_measure(lam),
        {src: tuple((a, 1.0) for a, _ in pairs) for src, pairs in e.image.items()},
    )
    return lam, flat


@dataclass(frozen=True)
class RigidityReport:
    """Named residual checks for the normalized form of an embedding."""

    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    def result(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def rigidity_check(e: RefinementEmbedding, trials: int = 64, seed: int = 7) -> RigidityReport:
    """Verify the rigid normal form of a norm-preserving embedding.

    After normalization, checks that (i) all coefficients are 1, (ii) the
    target exponent on every image atom equals the source exponent it
    refines, (iii) each source atom's image carries exactly its mass,
    (iv) the modular functional is preserved on random probes, and (v)
    the source exponent range is contained in the target's. The isometry
    probe itself is reported as a check so that deliberately broken
    inputs produce a failing report rather than an exception.
    """
    if e.source.dim < 2:
        raise ContractError("rigidity needs a source of dimension >= 2")

    tol = ISOMETRY_TOL
    checks: list[CheckResult] = []

    worst, witness = _isometry_defect(e, _probe_functions(e))
    checks.append(CheckResult("isometry_probe", worst <= tol, worst, witness))

    lam, flat = _normalize_unchecked(e)
    normalized_target = flat.target

    coeff_resid = max(
        abs(c - 1.0) for pairs in flat.image.values() for _, c in pairs
    )
    checks.append(CheckResult("unit_coefficients", coeff_resid <= tol, coeff_resid))

    exp_resid = 0.0
    exp_detail: dict = {}
    for src, pairs in e.image.items():
        p = e.source.exponent[src]
        for a, _ in pairs:
            d = abs(normalized_target.exponent[a] - p)
            if d > exp_resid:
                exp_resid = d
                exp_detail = {"source": src, "target": a}
    checks.append(CheckResult("exponent_match", exp_resid <= tol, exp_resid, exp_detail))

    mass_resid = 0.0
    for src, pairs in e.image.items():
        mass = math.fsum(lam.weight[a] for a, _ in pairs)
        want = e.source.space.weight[src]
        d = abs(mass - want) / (1.0 + abs(want))
        mass_resid = max(mass_resid, d)
    checks.append(CheckResult("mass_preservation", mass_resid <= tol, mass_resid))

    rng = np.random.default_rng(seed)
    mod_resid = 0.0
    for _ in range(trials):
        vals = rng.uniform(-2.0, 2.0, size=e.source.dim)
        f = SimpleFunction.from_aligned(e.source.space, vals)
        a = modular(e.source, f)
        b = modular(normalized_target, apply_embedding(flat, f))
        mod_resid = max(mod_resid, abs(a - b) / (1.0 + abs(a)))
    checks.append(CheckResult("modular_preservation", mod_resid <= tol, mod_resid))

    rng_resid = 0.0
    target_range = essential_range(normalized_target)
    for p in essential_range(e.source):
        gap = min(abs(p - q) for q in target_range)
        rng_resid = max(rng_resid, gap)
    checks.append(CheckResult("essential_range_inclusion", rng_resid <= tol, rng_resid))

    return RigidityReport(tuple(checks))

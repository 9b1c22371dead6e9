"""Finite atomic measure spaces, simple functions, and integration.

A measure space here is a finite ordered list of atoms with strictly
positive weights; a simple function assigns one real value per atom.
Atom order is canonical and preserved by every operation, so all
outputs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DomainError

__all__ = [
    "AtomicMeasureSpace",
    "SimpleFunction",
    "integrate",
    "radon_nikodym",
    "restrict",
]


@dataclass(frozen=True)
class AtomicMeasureSpace:
    """A finite measure space made of weighted atoms.

    Parameters
    ----------
    atoms : tuple of str
        Atom identifiers in canonical iteration order.
    weight : dict mapping atom -> float
        Strictly positive, finite mass of each atom.
    """

    atoms: tuple[str, ...]
    weight: dict[str, float]
    _aligned: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        if len(set(atoms)) != len(atoms):
            raise DomainError("atom identifiers must be unique")
        weight = {str(k): float(v) for k, v in self.weight.items()}
        if set(weight) != set(atoms):
            raise DomainError("weight map must cover exactly the atom set")
        for a in atoms:
            w = weight[a]
            if not math.isfinite(w) or w <= 0.0:
                raise DomainError(f"atom {a!r} has non-positive or non-finite weight {w!r}")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "_aligned", tuple(weight[a] for a in atoms))

    @classmethod
    def from_weights(cls, weights: Mapping[str, float]) -> "AtomicMeasureSpace":
        """Build a space from a mapping; atom order is insertion order."""
        return cls(tuple(weights), dict(weights))

    @property
    def dim(self) -> int:
        return len(self.atoms)

    @property
    def total_mass(self) -> float:
        return math.fsum(self._aligned)

    def aligned_weights(self) -> tuple[float, ...]:
        """Weights in canonical atom order."""
        return self._aligned

    def same_atoms(self, other: "AtomicMeasureSpace") -> bool:
        return self.atoms == other.atoms

    def to_dict(self) -> dict:
        return {"atoms": [{"id": a, "weight": self.weight[a]} for a in self.atoms]}


@dataclass(frozen=True)
class SimpleFunction:
    """One real value per atom of a measure space.

    Values must be finite; the value map must cover exactly the atom set
    of ``space``. Instances support the vector operations +, -, scalar *
    and abs(), all computed atomwise.
    """

    space: AtomicMeasureSpace
    values: dict[str, float]
    _aligned: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = {str(k): float(v) for k, v in self.values.items()}
        if set(values) != set(self.space.atoms):
            raise DomainError("function values must cover exactly the atom set")
        for a, v in values.items():
            if not math.isfinite(v):
                raise DomainError(f"non-finite value {v!r} on atom {a!r}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_aligned", tuple(values[a] for a in self.space.atoms))

    @classmethod
    def zero(cls, space: AtomicMeasureSpace) -> "SimpleFunction":
        return cls(space, {a: 0.0 for a in space.atoms})

    @classmethod
    def indicator(cls, space: AtomicMeasureSpace, atoms: Iterable[str], value: float = 1.0) -> "SimpleFunction":
        marked = set(atoms)
        unknown = marked - set(space.atoms)
        if unknown:
            raise DomainError(f"unknown atoms {sorted(unknown)!r}")
        return cls(space, {a: (value if a in marked else 0.0) for a in space.atoms})

    @classmethod
    def from_aligned(cls, space: AtomicMeasureSpace, vals: Iterable[float]) -> "SimpleFunction":
        vals = tuple(float(v) for v in vals)
        if len(vals) != space.dim:
            raise DomainError("aligned value tuple has wrong length")
        return cls(space, dict(zip(space.atoms, vals)))

    def aligned_values(self) -> tuple[float, ...]:
        return self._aligned

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self._aligned)

    def _binary(self, other: "SimpleFunction", op) -> "SimpleFunction":
        if self.space.atoms != other.space.atoms:
            raise DomainError("functions live on different atom sets")
        return SimpleFunction.from_aligned(
            self.space, (op(a, b) for a, b in zip(self._aligned, other._aligned))
        )

    def __add__(self, other: "SimpleFunction") -> "SimpleFunction":
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other: "SimpleFunction") -> "SimpleFunction":
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self) -> "SimpleFunction":
        return SimpleFunction.from_aligned(self.space, (-v for v in self._aligned))

    def __mul__(self, scalar: float) -> "SimpleFunction":
        c = float(scalar)
        return SimpleFunction.from_aligned(self.space, (c * v for v in self._aligned))

    __rmul__ = __mul__

    def __abs__(self) -> "SimpleFunction":
        return SimpleFunction.from_aligned(self.space, (abs(v) for v in self._aligned))

    def to_dict(self) -> dict:
        return {"values": {a: self.values[a] for a in self.space.atoms}}


def _check_atoms(space: AtomicMeasureSpace, f: SimpleFunction) -> None:
    if f.space.atoms != space.atoms:
        raise DomainError("function is not defined on the atoms of this space")


def integrate(space: AtomicMeasureSpace, f: SimpleFunction) -> float:
    """Weighted sum of f over the atoms: sum_i weight_i * f_i."""
    _check_atoms(space, f)
    return math.fsum(w * v for w, v in zip(space.aligned_weights(), f.aligned_values()))


def radon_nikodym(mu: AtomicMeasureSpace, nu: AtomicMeasureSpace) -> SimpleFunction:
    """Atomwise density of nu with respect to mu on a shared atom set.

    The result zeta satisfies integrate(mu, f * zeta) == integrate(nu, f)
    for every simple function f; all weights are positive so the two
    measures are automatically equivalent.
    """
    if mu.atoms != nu.atoms:
        raise DomainError("measures live on different atom sets")
    return SimpleFunction(mu, {a: nu.weight[a] / mu.weight[a] for a in mu.atoms})


def restrict(
    space: AtomicMeasureSpace, f: SimpleFunction, atoms: Iterable[str]
) -> tuple[AtomicMeasureSpace, SimpleFunction]:
    """Restrict a space and a function to a subset of atoms.

    The subset keeps the canonical order of the parent space; restricting
    to the empty set yields the zero-dimensional space.
    """
    _check_atoms(space, f)
    wanted = set(atoms)
    unknown = wanted - set(space.atoms)
    if unknown:
        raise DomainError(f"unknown atoms {sorted(unknown)!r}")
    kept = tuple(a for a in space.atoms if a in wanted)
    sub_space = AtomicMeasureSpace(kept, {a: space.weight[a] for a in kept})
    sub_f = SimpleFunction(sub_space, {a: f.values[a] for a in kept})
    return sub_space, sub_f

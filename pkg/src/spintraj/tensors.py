"""Irreducible spherical tensor operators and the labeled product basis.

Single-spin tensors T(l, m) are normalized to unit Frobenius norm and follow
the Condon-Shortley phase convention, with the top state taken as
T(l, l) = (-1)^l (S+)^l / ||(S+)^l|| and lower projections generated by the
commutator lowering recursion. The multi-spin basis is the Kronecker product
of per-spin tensors, spin 0 leftmost, labels ordered lexicographically over
per-spin (l, m) with m ascending within each rank.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache, cached_property

import numpy as np

from .errors import DomainError
from .system import SpinSystem

__all__ = [
    "BasisLabel",
    "ProductBasis",
    "angular_momentum",
    "ist_operator",
    "spin_operator",
    "product_basis",
    "correlation_order",
    "coherence_order",
]


@lru_cache(maxsize=None)
def angular_momentum(multiplicity: int, which: str) -> np.ndarray:
    """Single-spin angular momentum matrix for s = (multiplicity - 1)/2.

    which: one of "x", "y", "z", "plus", "minus", "e" (identity).
    """
    if multiplicity < 2:
        raise DomainError(f"multiplicity must be >= 2, got {multiplicity}")
    s = (multiplicity - 1) / 2.0
    m = s - np.arange(multiplicity)  # descending projections s .. -s
    if which == "z":
        out = np.diag(m).astype(complex)
    elif which == "e":
        out = np.eye(multiplicity, dtype=complex)
    elif which in ("plus", "minus", "x", "y"):
        # S+ |s, m> = sqrt(s(s+1) - m(m+1)) |s, m+1>
        ladder = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
        sp = np.zeros((multiplicity, multiplicity), dtype=complex)
        sp[np.arange(multiplicity - 1), np.arange(1, multiplicity)] = ladder
        if which == "plus":
            out = sp
        elif which == "minus":
            out = sp.conj().T
        elif which == "x":
            out = (sp + sp.conj().T) / 2.0
        else:
            out = (sp - sp.conj().T) / 2.0j
    else:
        raise DomainError(f"unknown operator kind {which!r}")
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def ist_operator(multiplicity: int, l: int, m: int) -> np.ndarray:
    """Unit-Frobenius-norm irreducible spherical tensor T(l, m) of one spin."""
    if not 0 <= l <= multiplicity - 1:
        raise DomainError(
            f"rank l={l} out of range for multiplicity {multiplicity}"
        )
    if abs(m) > l:
        raise DomainError(f"projection m={m} out of range for rank l={l}")
    sp = angular_momentum(multiplicity, "plus")
    sm = angular_momentum(multiplicity, "minus")
    top = np.linalg.matrix_power(sp, l)
    t = ((-1) ** l) * top / np.linalg.norm(top)
    for mm in range(l, m, -1):
        # T(l, m-1) = [S-, T(l, m)] / sqrt(l(l+1) - m(m-1))
        t = (sm @ t - t @ sm) / math.sqrt(l * (l + 1) - mm * (mm - 1))
    t.setflags(write=False)
    return t


def spin_operator(system: SpinSystem, spin: int, which: str) -> np.ndarray:
    """Hilbert-space operator of one spin embedded by Kronecker products with identities."""
    if not 0 <= spin < system.n_spins:
        raise DomainError(f"spin index {spin} out of range")
    out = np.ones((1, 1), dtype=complex)
    for k, s in enumerate(system.spins):
        factor = angular_momentum(s.multiplicity, which if k == spin else "e")
        out = np.kron(out, factor)
    return out


@dataclass(frozen=True)
class BasisLabel:
    """Per-spin (l, m) labels of one product basis state."""

    components: tuple[tuple[int, int], ...]

    def correlation_order(self) -> int:
        return sum(1 for (l, _) in self.components if l > 0)

    def coherence_order(self) -> int:
        return sum(m for (_, m) in self.components)

    def __str__(self) -> str:
        return "".join(f"({l},{m})" for (l, m) in self.components)


def correlation_order(label: BasisLabel) -> int:
    """Number of non-unit single-spin factors in the label."""
    return label.correlation_order()


def coherence_order(label: BasisLabel) -> int:
    """Sum of projection quantum numbers over the label."""
    return label.coherence_order()


class ProductBasis:
    """The labeled, orthonormal spherical-tensor product basis of a spin system."""

    def __init__(self, system: SpinSystem):
        self.system = system
        per_spin = [
            [(l, m) for l in range(n) for m in range(-l, l + 1)]
            for n in system.multiplicities
        ]
        self.labels: tuple[BasisLabel, ...] = tuple(
            BasisLabel(combo) for combo in itertools.product(*per_spin)
        )
        self.index: dict[tuple[tuple[int, int], ...], int] = {
            lab.components: i for i, lab in enumerate(self.labels)
        }

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def hilbert_dim(self) -> int:
        return self.system.hilbert_dim

    def matrix(self, i: int) -> np.ndarray:
        """Hilbert-space matrix realization of basis state i."""
        lab = self.labels[i]
        out = np.ones((1, 1), dtype=complex)
        for n, (l, m) in zip(self.system.multiplicities, lab.components):
            out = np.kron(out, ist_operator(n, l, m))
        return out

    @cached_property
    def vectorization_matrix(self) -> np.ndarray:
        """Columns are row-major vectorizations of the basis matrices (a unitary D x D map)."""
        d2 = self.hilbert_dim ** 2
        u = np.empty((d2, self.dim), dtype=complex)
        for i in range(self.dim):
            u[:, i] = self.matrix(i).reshape(-1)
        return u

    def coefficients_of(self, op: np.ndarray) -> np.ndarray:
        """Expansion coefficients c_i = Tr(B_i^dagger op) of a Hilbert-space operator."""
        d = self.hilbert_dim
        if op.shape != (d, d):
            raise DomainError(
                f"operator shape {op.shape} does not match Hilbert dimension {d}"
            )
        return self.vectorization_matrix.conj().T @ op.reshape(-1)

    def correlation_orders(self) -> np.ndarray:
        return np.array([lab.correlation_order() for lab in self.labels])

    def coherence_orders(self) -> np.ndarray:
        return np.array([lab.coherence_order() for lab in self.labels])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ProductBasis)
            and self.system.multiplicities == other.system.multiplicities
        )

    def __len__(self) -> int:
        return self.dim


def product_basis(system: SpinSystem) -> ProductBasis:
    """Build the labeled product basis of a system."""
    return ProductBasis(system)

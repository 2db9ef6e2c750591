"""Parser for initial/target state expressions.

Grammar: a sum of weighted primitives, where a primitive is one of
Lx(k), Ly(k), Lz(k), T(k, l, m) and a weight is an optional real or
imaginary scalar, e.g. "Lz(0)", "0.5*Lx(0) + 1i*T(0,1,1)", "Lz(0) - Lz(1)".
The result is normalized to unit norm; a warning is issued when the raw
norm differs from 1.
"""

from __future__ import annotations

import re
import warnings

import numpy as np

from .engine import StateVector
from .errors import DomainError
from .tensors import ProductBasis, ist_operator, spin_operator

__all__ = ["parse_state"]

_PRIM_RE = re.compile(
    r"^(?:(?P<coef>[^*]+)\*)?\s*(?:"
    r"(?P<cart>L[xyz])\s*\(\s*(?P<spin>\d+)\s*\)"
    r"|T\s*\(\s*(?P<tspin>\d+)\s*,\s*(?P<l>-?\d+)\s*,\s*(?P<m>-?\d+)\s*\)"
    r")$"
)


def _split_terms(text: str) -> list[str]:
    """Split on top-level + and -, keeping signs with the terms."""
    terms = []
    cur = ""
    for ch in text:
        if ch in "+-" and cur.strip():
            terms.append(cur.strip())
            cur = ch
        else:
            cur += ch
    if cur.strip():
        terms.append(cur.strip())
    return terms


def _parse_coef(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise DomainError(f"bad scalar coefficient {text!r}") from None


def parse_state(basis: ProductBasis, text: str) -> StateVector:
    """Evaluate a state expression to a unit-norm StateVector."""
    system = basis.system
    coeffs = np.zeros(basis.dim, dtype=complex)
    terms = _split_terms(text)
    if not terms:
        raise DomainError("empty state expression")
    for term in terms:
        sign = 1.0
        body = term
        while body and body[0] in "+-":
            if body[0] == "-":
                sign = -sign
            body = body[1:].strip()
        match = _PRIM_RE.match(body)
        if not match:
            raise DomainError(f"cannot parse state term {term!r}")
        coef = sign * (_parse_coef(match["coef"]) if match["coef"] else 1.0)
        if match["cart"]:
            spin = int(match["spin"])
            if not 0 <= spin < system.n_spins:
                raise DomainError(f"spin index {spin} out of range in {term!r}")
            op = spin_operator(system, spin, match["cart"][1])
            coeffs += coef * basis.coefficients_of(op)
        else:
            spin, l, m = int(match["tspin"]), int(match["l"]), int(match["m"])
            if not 0 <= spin < system.n_spins:
                raise DomainError(f"spin index {spin} out of range in {term!r}")
            op = np.ones((1, 1), dtype=complex)
            for k, s in enumerate(system.spins):
                factor = (
                    ist_operator(s.multiplicity, l, m)  # range-checks l, m
                    if k == spin
                    else np.eye(s.multiplicity)
                )
                op = np.kron(op, factor)
            coeffs += coef * basis.coefficients_of(op)
    norm = float(np.linalg.norm(coeffs))
    if norm == 0.0:
        raise DomainError(f"state expression {text!r} evaluates to zero")
    if abs(norm - 1.0) > 1e-9:
        warnings.warn(
            f"state expression {text!r} has raw norm {norm:.6g}; normalizing to 1",
            stacklevel=2,
        )
    return StateVector(coeffs / norm, basis)

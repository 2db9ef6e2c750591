"""Hamiltonian assembly, Liouville-space superoperators, and propagation.

Input frequencies are in Hz; assembled Hamiltonians carry explicit 2*pi
factors and live in rad/s. Propagation is piecewise-constant:
rho_{n+1} = exp(-i (L0 + sum_k 2*pi*power*c_k[n]*C_k) dt) rho_n.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, NumericError
from .system import SpinSystem
from .tensors import ProductBasis, product_basis, spin_operator

__all__ = [
    "StateVector",
    "ControlSet",
    "Trajectory",
    "drift_hamiltonian",
    "control_operators",
    "commutation_superoperator",
    "step_propagator",
    "propagate",
]

TWO_PI = 2.0 * np.pi


@dataclass
class StateVector:
    """Complex coefficient vector over a ProductBasis."""

    coefficients: np.ndarray
    basis: ProductBasis

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != (self.basis.dim,):
            raise DomainError(
                f"coefficient vector of length {self.coefficients.shape} does not "
                f"match basis dimension {self.basis.dim}"
            )

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise DomainError("cannot normalize the zero state")
        return StateVector(self.coefficients / n, self.basis)

    @classmethod
    def from_hilbert_operator(
        cls, basis: ProductBasis, op: np.ndarray, normalize: bool = False
    ) -> "StateVector":
        sv = cls(basis.coefficients_of(op), basis)
        return sv.normalized() if normalize else sv


@dataclass
class ControlSet:
    """Piecewise-constant control amplitudes on a uniform time grid.

    Amplitudes are dimensionless multipliers of the nominal power (peak
    nutation frequency in Hz); shape is [n_channels, n_steps].
    """

    dt: float
    power_hz: float
    channels: tuple[tuple[str, str], ...]  # (isotope, axis) with axis in {x, y}
    amplitudes: np.ndarray

    def __post_init__(self):
        self.channels = tuple((iso, ax) for iso, ax in self.channels)
        self.amplitudes = np.atleast_2d(np.asarray(self.amplitudes, dtype=float))
        if self.dt <= 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        for iso, ax in self.channels:
            if ax not in ("x", "y"):
                raise DomainError(f"channel axis must be x or y, got {ax!r}")
        if self.amplitudes.shape[0] != len(self.channels):
            raise DomainError(
                f"amplitude matrix has {self.amplitudes.shape[0]} rows for "
                f"{len(self.channels)} channels"
            )
        if self.amplitudes.shape[1] < 1:
            raise DomainError("n_steps must be >= 1")
        if not np.all(np.isfinite(self.amplitudes)):
            raise NumericError("control amplitudes must be finite")

    @property
    def n_steps(self) -> int:
        return self.amplitudes.shape[1]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    @property
    def duration(self) -> float:
        return self.dt * self.n_steps

    def xy_pairs(self) -> tuple[tuple[int, int], ...]:
        """Indices of (x, y) channel pairs per isotope; error if unpaired."""
        by_iso: dict[str, dict[str, int]] = {}
        for k, (iso, ax) in enumerate(self.channels):
            if ax in by_iso.setdefault(iso, {}):
                raise DomainError(f"duplicate channel ({iso}, {ax})")
            by_iso[iso][ax] = k
        pairs = []
        for iso, axes in by_iso.items():
            if set(axes) != {"x", "y"}:
                raise DomainError(f"isotope {iso!r} lacks a full x/y channel pair")
            pairs.append((axes["x"], axes["y"]))
        return tuple(pairs)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.dt, self.power_hz, self.channels)).encode())
        h.update(np.ascontiguousarray(self.amplitudes).tobytes())
        return h.hexdigest()[:16]


@dataclass
class Trajectory:
    """Time-ordered Liouville-space states: row n of `states` is rho(t_n)."""

    times: np.ndarray
    states: np.ndarray  # complex, shape [n_steps + 1, D]
    basis: ProductBasis
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise DomainError("times and states disagree in length")
        if self.states.shape[1] != self.basis.dim:
            raise DomainError("state width does not match basis dimension")

    @property
    def n_points(self) -> int:
        return self.times.shape[0]

    def state(self, n: int) -> StateVector:
        return StateVector(self.states[n], self.basis)

    @property
    def initial(self) -> StateVector:
        return self.state(0)

    @property
    def final(self) -> StateVector:
        return self.state(self.n_points - 1)


def drift_hamiltonian(system: SpinSystem) -> np.ndarray:
    """Hilbert-space drift Hamiltonian in rad/s: Zeeman offsets, J couplings, quadrupoles."""
    d = system.hilbert_dim
    h = np.zeros((d, d), dtype=complex)
    for k, s in enumerate(system.spins):
        if s.offset != 0.0:
            h += TWO_PI * s.offset * spin_operator(system, k, "z")
    for c in system.couplings:
        model = system.coupling_model(c)
        zz = spin_operator(system, c.i, "z") @ spin_operator(system, c.j, "z")
        if model == "weak":
            h += TWO_PI * c.j_hz * zz
        else:
            xx = spin_operator(system, c.i, "x") @ spin_operator(system, c.j, "x")
            yy = spin_operator(system, c.i, "y") @ spin_operator(system, c.j, "y")
            h += TWO_PI * c.j_hz * (xx + yy + zz)
    for q in system.quadrupolar:
        sx = spin_operator(system, q.spin, "x")
        sy = spin_operator(system, q.spin, "y")
        sz = spin_operator(system, q.spin, "z")
        s2 = sx @ sx + sy @ sy + sz @ sz
        h += (TWO_PI * q.omega_q / 3.0) * (
            (3.0 * sz @ sz - s2) + q.eta * (sx @ sx - sy @ sy)
        )
    return h


def control_operators(
    system: SpinSystem, channels: tuple[tuple[str, str], ...]
) -> list[np.ndarray]:
    """Isotope-wide control operators: sum of S_x (or S_y) over the isotope's spins."""
    ops = []
    for iso, ax in channels:
        if ax not in ("x", "y"):
            raise DomainError(f"channel axis must be x or y, got {ax!r}")
        idx = system.spins_of_isotope(iso)
        op = sum(spin_operator(system, k, ax) for k in idx)
        ops.append(op)
    return ops


def commutation_superoperator(h: np.ndarray, basis: ProductBasis) -> np.ndarray:
    """Superoperator of rho -> [H, rho] expressed in the IST product basis."""
    d = basis.hilbert_dim
    if h.shape != (d, d):
        raise DomainError(
            f"Hamiltonian shape {h.shape} does not match Hilbert dimension {d}"
        )
    eye = np.eye(d)
    # Row-major vectorization: vec([H, rho]) = (H x E - E x H^T) vec(rho)
    l_vec = np.kron(h, eye) - np.kron(eye, h.T)
    u = basis.vectorization_matrix
    return u.conj().T @ l_vec @ u


def step_propagator(l_super: np.ndarray, dt: float) -> np.ndarray:
    """exp(-i L dt) by scaling-and-squaring Pade approximation."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if not np.all(np.isfinite(l_super)):
        raise NumericError("superoperator contains non-finite entries")
    return scipy.linalg.expm(-1j * dt * l_super)


def step_generators(
    system: SpinSystem,
    controls: ControlSet,
    basis: ProductBasis | None = None,
    power_scale: float = 1.0,
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Per-step Hermitian generators G_n = L0 + sum_k 2*pi*power*scale*c_k[n]*C_k.

    Returns (generators[n_steps, D, D], control superoperators). Shared by the
    propagator and the pulse optimizer.
    """
    basis = basis or product_basis(system)
    l0 = commutation_superoperator(drift_hamiltonian(system), basis)
    c_supers = [
        commutation_superoperator(c, basis)
        for c in control_operators(system, controls.channels)
    ]
    gen = np.broadcast_to(l0, (controls.n_steps,) + l0.shape).copy()
    for k, c_super in enumerate(c_supers):
        w = TWO_PI * controls.power_hz * power_scale * controls.amplitudes[k]
        gen += w[:, None, None] * c_super
    return gen, c_supers


def step_propagators_eigh(gen: np.ndarray, dt: float) -> np.ndarray:
    """Batched exp(-i G dt) for a stack of Hermitian generators via eigendecomposition."""
    evals, vecs = np.linalg.eigh(gen)
    phases = np.exp(-1j * dt * evals)
    return np.einsum("...ij,...j,...kj->...ik", vecs, phases, vecs.conj())


def propagate(
    system: SpinSystem, controls: ControlSet, rho0: StateVector
) -> Trajectory:
    """Propagate rho0 under drift plus piecewise-constant controls."""
    basis = rho0.basis
    if basis.system.multiplicities != system.multiplicities:
        raise DomainError("initial state basis does not match the system")
    gen, _ = step_generators(system, controls, basis)
    props = step_propagators_eigh(gen, controls.dt)
    n = controls.n_steps
    states = np.empty((n + 1, basis.dim), dtype=complex)
    states[0] = rho0.coefficients
    for i in range(n):
        states[i + 1] = props[i] @ states[i]
    times = controls.dt * np.arange(n + 1)
    h = hashlib.sha256(repr(system).encode()).hexdigest()[:16]
    prov = {"system_hash": h, "control_hash": controls.content_hash()}
    return Trajectory(times, states, basis, prov)

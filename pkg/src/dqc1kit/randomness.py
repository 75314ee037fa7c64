"""Deterministic seeding, Haar-random unitaries, and random circuits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor_core import DenseOperator, PureState, apply_two_qubit_gate

# Keeping full circuit unitaries dense above this register size is a memory
# hazard (2^24 complex entries at 12 qubits is the practical desk limit).
DENSE_LIMIT = 12

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(value: int) -> int:
    """SplitMix64 finalizer; bijective scrambling of a 64-bit word."""
    value &= _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (value ^ (value >> 31)) & _MASK64


@dataclass(frozen=True)
class SeedSpec:
    """A (master seed, stream id) pair naming one reproducible RNG stream.

    Children derived via :meth:`child` are decorrelated from the parent and
    from each other, so per-task streams can be fanned out without any
    shared mutable state.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit word")
        if not 0 <= self.stream_id < 2**64:
            raise ValueError("stream_id must fit in an unsigned 64-bit word")

    def child(self, index: int) -> "SeedSpec":
        """Derive the index-th child stream (index >= 0)."""
        if index < 0:
            raise ValueError("child index must be nonnegative")
        new_stream = _mix64((self.stream_id + _GOLDEN * (index + 1)) & _MASK64)
        return SeedSpec(self.master_seed, new_stream)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(_mix64(self.master_seed ^ self.stream_id))


def _haar_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via the phase-fixed QR of a Ginibre matrix."""
    ginibre = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    ginibre /= np.sqrt(2.0)
    q, r = np.linalg.qr(ginibre)
    diag = np.diagonal(r)
    # Without this phase fix the QR convention biases the distribution.
    return q * (diag / np.abs(diag))


def haar_unitary(num_qubits: int, seed: SeedSpec) -> DenseOperator:
    """Haar-random unitary on a register of ``num_qubits`` qubits."""
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    return DenseOperator(num_qubits, _haar_matrix(2**num_qubits, seed.generator()))


def random_density_matrix(num_qubits: int, seed: SeedSpec) -> DenseOperator:
    """Haar eigenbasis with a flat-Dirichlet spectrum; Hermitian, trace 1."""
    basis = haar_unitary(num_qubits, seed.child(0)).matrix
    weights = seed.child(1).generator().dirichlet(np.ones(2**num_qubits))
    return DenseOperator(num_qubits, (basis * weights) @ basis.conj().T)


@dataclass(frozen=True)
class GateSpec:
    """One 4x4 unitary applied to an ordered pair of distinct qubits."""

    targets: tuple[int, int]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        q1, q2 = self.targets
        if q1 == q2:
            raise ValueError("gate targets must be distinct")
        mat = np.asarray(self.matrix, dtype=np.complex128)
        if mat.shape != (4, 4):
            raise ValueError("gate matrix must be 4x4")
        object.__setattr__(self, "targets", (int(q1), int(q2)))
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class Circuit:
    """A gate list over a fixed register, applied first-to-last."""

    num_qubits: int
    gates: tuple[GateSpec, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        gates = tuple(self.gates)
        for g in gates:
            if any(q < 0 or q >= self.num_qubits for q in g.targets):
                raise ValueError(f"gate targets {g.targets} out of range")
        object.__setattr__(self, "gates", gates)

    def __len__(self) -> int:
        return len(self.gates)

    def inverse(self) -> "Circuit":
        """The circuit implementing the adjoint unitary."""
        reversed_gates = tuple(
            GateSpec(g.targets, g.matrix.conj().T) for g in reversed(self.gates)
        )
        return Circuit(self.num_qubits, reversed_gates)


def random_two_qubit_circuit(num_qubits: int, num_gates: int, seed: SeedSpec) -> Circuit:
    """Haar-random 4x4 gates on uniformly random unordered qubit pairs.

    Each gate draws its pair independently; repeats are allowed.  The pair
    is sampled as an unordered set and then applied in ascending label
    order, which costs no generality because the gate itself is already
    Haar on the pair.
    """
    if num_qubits < 2:
        raise ValueError("need at least 2 qubits for two-qubit gates")
    if num_gates < 1:
        raise ValueError("num_gates must be >= 1")
    rng = seed.generator()
    gates = []
    for _ in range(num_gates):
        pair = rng.choice(num_qubits, size=2, replace=False)
        q1, q2 = int(pair.min()), int(pair.max())
        gates.append(GateSpec((q1, q2), _haar_matrix(4, rng)))
    return Circuit(num_qubits, tuple(gates))


def apply_circuit(circuit: Circuit, state: PureState) -> PureState:
    """Run the circuit on a state of the same register size."""
    if state.num_qubits != circuit.num_qubits:
        raise ValueError(
            f"state has {state.num_qubits} qubits, circuit expects {circuit.num_qubits}"
        )
    for gate in circuit.gates:
        state = apply_two_qubit_gate(state, gate.matrix, gate.targets)
    return state


def circuit_unitary(circuit: Circuit) -> DenseOperator:
    """Materialize the full unitary; refuses registers above DENSE_LIMIT."""
    n = circuit.num_qubits
    if n > DENSE_LIMIT:
        raise ValueError(
            f"refusing to build a dense 2^{n} x 2^{n} unitary (limit {DENSE_LIMIT})"
        )
    dim = 2**n
    columns = np.eye(dim, dtype=np.complex128).reshape((2,) * n + (dim,))
    # Batch all basis columns through the gate sequence at once; the final
    # axis indexes the input column.
    t = columns
    for gate in circuit.gates:
        q1, q2 = gate.targets
        t = np.tensordot(gate.matrix.reshape(2, 2, 2, 2), t, axes=[(2, 3), (q1, q2)])
        t = np.moveaxis(t, (0, 1), (q1, q2))
    return DenseOperator(n, np.ascontiguousarray(t).reshape(dim, dim))

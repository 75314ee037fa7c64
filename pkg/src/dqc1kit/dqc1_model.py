"""One-clean-qubit circuit state, probe vectors, and trace estimation.

The system is a register of ``n`` qubits under a unitary ``U`` plus one
partially polarized "top" qubit, always at label 0 (the MSB).  The joint
state after the controlled-``U`` circuit is

    rho = (1/2^{n+1}) [[I, tau U*], [tau U, I]]   (blocks over the top qubit)

with polarization ``tau`` in [0, 1].  Measuring the top qubit in X and Y
estimates the normalized trace Tr(U)/2^n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .randomness import DENSE_LIMIT, Circuit, SeedSpec, apply_circuit, circuit_unitary
from .tensor_core import Bipartition, DenseOperator, PureState, basis_state

UnitarySource = Union[DenseOperator, Circuit]

# Diagonal streaming touches 2^n basis states; beyond this it is hopeless.
STREAM_LIMIT = 20


@dataclass(frozen=True)
class Dqc1Config:
    """Register size, top-qubit polarization, and the register unitary."""

    num_register_qubits: int
    polarization: float
    unitary: UnitarySource

    def __post_init__(self) -> None:
        if self.num_register_qubits < 1:
            raise ValueError("num_register_qubits must be >= 1")
        if not 0.0 <= self.polarization <= 1.0:
            raise ValueError("polarization must lie in [0, 1]")
        if self.unitary.num_qubits != self.num_register_qubits:
            raise ValueError(
                f"unitary acts on {self.unitary.num_qubits} qubits, "
                f"config declares {self.num_register_qubits}"
            )

    @property
    def total_qubits(self) -> int:
        return self.num_register_qubits + 1


@dataclass(frozen=True)
class ProductStateIndex:
    """Basis label (t, i, j): top-qubit bit, A-side index, B-side index.

    i runs over the register qubits on side A of the active cut, j over
    side B; range checks happen where the cut is known.
    """

    t: int
    i: int
    j: int

    def __post_init__(self) -> None:
        if self.t not in (0, 1):
            raise ValueError("t must be 0 or 1")
        if self.i < 0 or self.j < 0:
            raise ValueError("basis indices must be nonnegative")


@dataclass(frozen=True)
class TraceEstimate:
    """Shot-based estimate of a normalized trace with per-axis errors."""

    estimate: complex
    std_error_real: float
    std_error_imag: float
    shots: int

    @property
    def std_error(self) -> float:
        return math.hypot(self.std_error_real, self.std_error_imag)


def top_on_side_a(cut: Bipartition) -> Bipartition:
    """Return the cut with the top qubit (label 0) on side A.

    Legitimate because every spectrum here is symmetric under exchanging
    the two sides.
    """
    return cut if 0 in cut.side_a else cut.flipped()


def _scatter_bits(value: int, positions: tuple[int, ...], total_qubits: int) -> int:
    """Place value's bits (MSB first) at the given ascending qubit labels."""
    width = len(positions)
    out = 0
    for k, pos in enumerate(positions):
        bit = (value >> (width - 1 - k)) & 1
        out |= bit << (total_qubits - 1 - pos)
    return out


def _register_sides(cut: Bipartition) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Register-qubit labels (top qubit dropped) on each side of the cut."""
    cut = top_on_side_a(cut)
    side_a_reg = tuple(q for q in cut.side_a if q != 0)
    return side_a_reg, cut.side_b


def _apply_register_unitary(
    unitary: UnitarySource, register_index: int, adjoint: bool
) -> np.ndarray:
    """Column W|x> of the register unitary, W = U or U-dagger."""
    n = unitary.num_qubits
    if isinstance(unitary, DenseOperator):
        if adjoint:
            return unitary.matrix[register_index, :].conj()
        return unitary.matrix[:, register_index].copy()
    circuit = unitary.inverse() if adjoint else unitary
    return apply_circuit(circuit, basis_state(n, register_index)).amplitudes


def final_state(config: Dqc1Config) -> DenseOperator:
    """Dense joint state; Hermitian, trace 1, PSD for tau in [0, 1]."""
    n = config.num_register_qubits
    if n > DENSE_LIMIT:
        raise ValueError(
            f"register of {n} qubits exceeds dense limit {DENSE_LIMIT}"
        )
    u = config.unitary
    u_mat = (u if isinstance(u, DenseOperator) else circuit_unitary(u)).matrix
    dim = 2**n
    tau = config.polarization
    rho = np.zeros((2 * dim, 2 * dim), dtype=np.complex128)
    rho[:dim, :dim] = np.eye(dim)
    rho[dim:, dim:] = np.eye(dim)
    rho[:dim, dim:] = tau * u_mat.conj().T
    rho[dim:, :dim] = tau * u_mat
    rho /= 2 * dim
    return DenseOperator(n + 1, rho)


def apply_to_product(
    config: Dqc1Config, cut: Bipartition, idx: ProductStateIndex
) -> PureState:
    """Unnormalized probe vector rho|t,i,j> without materializing rho.

    Equals (1/2^{n+1}) (|t,i,j> + tau |1-t> (x) W|i,j>) with W = U for
    t = 0 and W = U-dagger for t = 1.  Memory use stays O(2^n).
    """
    n = config.num_register_qubits
    total = config.total_qubits
    if cut.total_qubits != total:
        raise ValueError(
            f"cut is over {cut.total_qubits} qubits, system has {total}"
        )
    side_a_reg, side_b = _register_sides(cut)
    if idx.i >= 2 ** len(side_a_reg) or idx.j >= 2 ** len(side_b):
        raise ValueError(f"index {idx} out of range for cut {cut.side_a}")
    # Full-system label q (1..n) sits at shift (n+1)-1-q = n-q, which is
    # exactly the register-index bit position for register qubit q-1.
    register_index = _scatter_bits(idx.i, side_a_reg, total) | _scatter_bits(
        idx.j, side_b, total
    )
    tau = config.polarization
    dim = 2**n
    amp = np.zeros(2 * dim, dtype=np.complex128)
    amp[idx.t * dim + register_index] = 1.0
    evolved = _apply_register_unitary(config.unitary, register_index, adjoint=bool(idx.t))
    amp[(1 - idx.t) * dim : (2 - idx.t) * dim] += tau * evolved
    return PureState(total, amp / (2 * dim))


def probe_reduction(
    config: Dqc1Config, cut: Bipartition, idx: ProductStateIndex
) -> DenseOperator:
    """B-side reduction of the probe projector, Tr_A |psi><psi|."""
    cut = top_on_side_a(cut)
    if cut.n_b > DENSE_LIMIT:
        raise ValueError(
            f"side B has {cut.n_b} qubits, dense reduction limit is {DENSE_LIMIT}"
        )
    psi = apply_to_product(config, cut, idx)
    axes = cut.side_a + cut.side_b
    m = psi.tensor().transpose(axes).reshape(cut.dim_a, cut.dim_b)
    return DenseOperator(cut.n_b, np.einsum("ab,ac->bc", m, m.conj()))


def evolved_basis_reduction(
    unitary: UnitarySource,
    register_cut: Bipartition,
    i: int,
    j: int,
    adjoint: bool = False,
) -> DenseOperator:
    """Tr_A[W|i,j><i,j|W†] over the register only; PSD, trace 1, rank <= d_A.

    ``register_cut`` is a cut of the n register qubits (no top qubit); i
    indexes the side-A labels, j the side-B labels.
    """
    n = unitary.num_qubits
    if register_cut.total_qubits != n:
        raise ValueError(
            f"register cut is over {register_cut.total_qubits} qubits, "
            f"unitary acts on {n}"
        )
    if register_cut.n_b > DENSE_LIMIT:
        raise ValueError(
            f"side B has {register_cut.n_b} qubits, "
            f"dense reduction limit is {DENSE_LIMIT}"
        )
    if not 0 <= i < register_cut.dim_a or not 0 <= j < register_cut.dim_b:
        raise ValueError(f"basis indices ({i}, {j}) out of range for the cut")
    register_index = _scatter_bits(i, register_cut.side_a, n) | _scatter_bits(
        j, register_cut.side_b, n
    )
    evolved = _apply_register_unitary(unitary, register_index, adjoint)
    axes = register_cut.side_a + register_cut.side_b
    m = evolved.reshape((2,) * n).transpose(axes).reshape(
        register_cut.dim_a, register_cut.dim_b
    )
    return DenseOperator(register_cut.n_b, np.einsum("ab,ac->bc", m, m.conj()))


def _streamed_normalized_trace(circuit: Circuit) -> complex:
    """Sum <x|U|x> one basis state at a time; O(4^n * gates) time."""
    n = circuit.num_qubits
    total = 0.0 + 0.0j
    for x in range(2**n):
        evolved = apply_circuit(circuit, basis_state(n, x))
        total += evolved.amplitudes[x]
    return total / 2**n


def normalized_trace(unitary: UnitarySource) -> complex:
    """Exact Tr(U)/2^n; streams the diagonal when U is a large circuit."""
    n = unitary.num_qubits
    if isinstance(unitary, DenseOperator):
        return complex(np.trace(unitary.matrix) / 2**n)
    if n <= DENSE_LIMIT:
        return complex(np.trace(circuit_unitary(unitary).matrix) / 2**n)
    if n <= STREAM_LIMIT:
        return _streamed_normalized_trace(unitary)
    raise ValueError(f"register of {n} qubits exceeds streaming limit {STREAM_LIMIT}")


def simulate_trace_estimation(
    config: Dqc1Config, shots: int, seed: SeedSpec
) -> TraceEstimate:
    """Simulate top-qubit X/Y measurement statistics for the trace.

    Draws ``shots`` Bernoulli outcomes per axis with
    P(+|X) = (1 + tau Re t)/2 and P(+|Y) = (1 - tau Im t)/2 where
    t = Tr(U)/2^n is computed exactly, then inverts both affine maps.  The
    estimator is unbiased; the returned errors are the binomial standard
    errors of each component.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    tau = config.polarization
    if tau == 0.0:
        raise ValueError("estimator undefined at zero polarization")
    t = normalized_trace(config.unitary)
    p_x = (1.0 + tau * t.real) / 2.0
    p_y = (1.0 - tau * t.imag) / 2.0
    rng = seed.generator()
    mean_x = rng.binomial(shots, p_x) / shots
    mean_y = rng.binomial(shots, p_y) / shots
    estimate = complex((2.0 * mean_x - 1.0) / tau, (1.0 - 2.0 * mean_y) / tau)
    se_x = 2.0 * math.sqrt(mean_x * (1.0 - mean_x) / shots) / tau
    se_y = 2.0 * math.sqrt(mean_y * (1.0 - mean_y) / shots) / tau
    return TraceEstimate(estimate, se_x, se_y, shots)

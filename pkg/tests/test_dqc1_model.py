import numpy as np
import pytest

from dqc1kit import (
    Bipartition,
    DenseOperator,
    Dqc1Config,
    ProductStateIndex,
    SeedSpec,
    apply_to_product,
    basis_state,
    circuit_unitary,
    evolved_basis_reduction,
    final_state,
    haar_unitary,
    normalized_trace,
    probe_reduction,
    qubit_permutation,
    random_two_qubit_circuit,
    simulate_trace_estimation,
    top_on_side_a,
)
from dqc1kit.dqc1_model import _streamed_normalized_trace
from dqc1kit.randomness import DENSE_LIMIT


def identity_config(n: int, tau: float) -> Dqc1Config:
    return Dqc1Config(n, tau, DenseOperator(n, np.eye(2**n)))


def test_config_validation():
    with pytest.raises(ValueError):
        identity_config(2, 1.5)
    with pytest.raises(ValueError):
        identity_config(2, -0.1)
    with pytest.raises(ValueError):
        Dqc1Config(3, 0.5, DenseOperator(2, np.eye(4)))
    with pytest.raises(ValueError):
        ProductStateIndex(2, 0, 0)


def test_final_state_single_qubit_identity():
    rho = final_state(identity_config(1, 1.0))
    want = np.array(
        [[1, 0, 1, 0], [0, 1, 0, 1], [1, 0, 1, 0], [0, 1, 0, 1]], dtype=float
    ) / 4
    assert np.allclose(rho.matrix, want, atol=1e-15)


def test_final_state_zero_polarization_is_maximally_mixed():
    u = haar_unitary(3, SeedSpec(30))
    rho = final_state(Dqc1Config(3, 0.0, u))
    assert np.allclose(rho.matrix, np.eye(16) / 16, atol=1e-15)


def test_final_state_is_density_operator():
    for n, tau, seed in [(2, 0.3, 31), (3, 1.0, 32), (4, 0.7, 33)]:
        rho = final_state(Dqc1Config(n, tau, haar_unitary(n, SeedSpec(seed))))
        mat = rho.matrix
        assert np.abs(mat - mat.conj().T).max() < 1e-12
        assert np.trace(mat).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(mat).min() >= -1e-10


def test_final_state_accepts_circuits_and_respects_limit():
    circuit = random_two_qubit_circuit(3, 6, SeedSpec(34))
    rho = final_state(Dqc1Config(3, 0.5, circuit))
    dense = final_state(Dqc1Config(3, 0.5, circuit_unitary(circuit)))
    assert np.allclose(rho.matrix, dense.matrix, atol=1e-12)
    big = random_two_qubit_circuit(DENSE_LIMIT + 1, 4, SeedSpec(35))
    with pytest.raises(ValueError):
        final_state(Dqc1Config(DENSE_LIMIT + 1, 1.0, big))


def test_top_on_side_a_flips_when_needed():
    cut = Bipartition(4, (1, 2))
    fixed = top_on_side_a(cut)
    assert 0 in fixed.side_a and fixed.side_a == (0, 3)
    assert top_on_side_a(fixed) is fixed


def test_apply_to_product_identity_unitary():
    n = 3
    psi = apply_to_product(
        identity_config(n, 1.0), Bipartition(n + 1, (0, 1)), ProductStateIndex(0, 0, 0)
    )
    want = np.zeros(2 ** (n + 1))
    want[0] = want[2**n] = 1 / 2 ** (n + 1)
    assert np.allclose(psi.amplitudes, want, atol=1e-15)


def test_apply_to_product_norm_identity():
    for tau in (0.0, 0.4, 1.0):
        for t in (0, 1):
            config = Dqc1Config(4, tau, haar_unitary(4, SeedSpec(36)))
            psi = apply_to_product(
                config, Bipartition(5, (0, 2, 3)), ProductStateIndex(t, 2, 1)
            )
            assert psi.norm**2 == pytest.approx((1 + tau**2) / 4**5, rel=1e-12)


def test_apply_to_product_matches_dense_state():
    # rho|t,i,j> assembled from the dense joint state, both unitary sources.
    n = 4
    circuit = random_two_qubit_circuit(n, 8, SeedSpec(37))
    for unitary in (circuit, circuit_unitary(circuit)):
        config = Dqc1Config(n, 0.8, unitary)
        rho = final_state(config).matrix
        cut = Bipartition(n + 1, (0, 2))
        side_a_reg, side_b = (2,), (1, 3, 4)
        for t, i, j in [(0, 0, 0), (0, 1, 5), (1, 0, 3), (1, 1, 7)]:
            column = 0
            for bit_pos, label in enumerate((2,)):
                column |= ((i >> (len(side_a_reg) - 1 - bit_pos)) & 1) << (n - label)
            for bit_pos, label in enumerate(side_b):
                column |= ((j >> (len(side_b) - 1 - bit_pos)) & 1) << (n - label)
            column |= t << n
            psi = apply_to_product(config, cut, ProductStateIndex(t, i, j))
            assert np.allclose(psi.amplitudes, rho[:, column], atol=1e-12)


def test_apply_to_product_index_out_of_range():
    config = identity_config(3, 1.0)
    with pytest.raises(ValueError):
        apply_to_product(config, Bipartition(4, (0, 1)), ProductStateIndex(0, 2, 0))


def test_probe_reduction_identity_unitary_rank_two():
    config = identity_config(3, 1.0)
    sigma = probe_reduction(config, Bipartition(4, (0, 1)), ProductStateIndex(0, 1, 0))
    eigs = np.linalg.eigvalsh(sigma.matrix)
    assert np.sum(eigs > 1e-12 * eigs.max()) <= 2


def test_probe_reduction_block_identity():
    # Tr_A |psi><psi| = (|j><j| + tau^2 Q) / 4^{n+1} for t = 0, any tau.
    n = 5
    tau = 0.6
    u = haar_unitary(n, SeedSpec(38))
    config = Dqc1Config(n, tau, u)
    cut = Bipartition(n + 1, (0, 1, 2))
    i, j = 2, 5
    sigma = probe_reduction(config, cut, ProductStateIndex(0, i, j))
    # independent Q: evolve the basis column and trace out side A by hand
    column = (i << 3) | j  # side-A register labels {1,2}, side-B {3,4,5}
    phi = u.matrix[:, column].reshape(4, 8)
    q = phi.T @ phi.conj()
    want = np.zeros((8, 8), dtype=complex)
    want[j, j] = 1.0
    want = (want + tau**2 * q) / 4 ** (n + 1)
    assert np.allclose(sigma.matrix, want, atol=1e-14)
    assert np.trace(sigma.matrix).real == pytest.approx(
        (1 + tau**2) / 4 ** (n + 1), rel=1e-12
    )


def test_probe_reduction_spectrum_matches_flipped_side():
    config = Dqc1Config(4, 1.0, haar_unitary(4, SeedSpec(39)))
    cut = Bipartition(5, (0, 1))
    idx = ProductStateIndex(0, 1, 2)
    psi = apply_to_product(config, cut, idx)
    from dqc1kit import schmidt_decompose

    coeffs = schmidt_decompose(psi, cut).coefficients
    sigma_spectrum = np.sort(np.linalg.eigvalsh(probe_reduction(config, cut, idx).matrix))[::-1]
    head = coeffs.size
    assert np.allclose(coeffs**2, sigma_spectrum[:head], atol=1e-12)
    assert np.allclose(sigma_spectrum[head:], 0.0, atol=1e-14)


def test_probe_reduction_haar_min_side_rank():
    # 2 register qubits on side A: rank is d_A + 1 = 5 >= d_A.
    config = Dqc1Config(8, 1.0, haar_unitary(8, SeedSpec(40)))
    sigma = probe_reduction(config, Bipartition(9, (0, 1, 2)), ProductStateIndex(0, 0, 0))
    eigs = np.linalg.eigvalsh(sigma.matrix)
    rank = int(np.sum(eigs > 1e-10 * eigs.max()))
    assert rank >= 4


def test_evolved_basis_reduction_identity():
    q = evolved_basis_reduction(
        DenseOperator(3, np.eye(8)), Bipartition(3, (0,)), 1, 2
    )
    want = np.zeros((4, 4))
    want[2, 2] = 1.0
    assert np.allclose(q.matrix, want, atol=1e-15)


def test_evolved_basis_reduction_properties():
    u = haar_unitary(5, SeedSpec(41))
    register_cut = Bipartition(5, (0, 3))
    q = evolved_basis_reduction(u, register_cut, 1, 4)
    eigs = np.linalg.eigvalsh(q.matrix)
    assert eigs.min() > -1e-12
    assert np.sum(eigs).real == pytest.approx(1.0, abs=1e-12)
    assert np.sum(eigs > 1e-10) <= register_cut.dim_a
    circuit = random_two_qubit_circuit(5, 10, SeedSpec(42))
    q_circ = evolved_basis_reduction(circuit, register_cut, 1, 4)
    q_dense = evolved_basis_reduction(circuit_unitary(circuit), register_cut, 1, 4)
    assert np.allclose(q_circ.matrix, q_dense.matrix, atol=1e-12)
    adj = evolved_basis_reduction(u, register_cut, 1, 4, adjoint=True)
    adj_dense = evolved_basis_reduction(
        DenseOperator(5, u.matrix.conj().T), register_cut, 1, 4
    )
    assert np.allclose(adj.matrix, adj_dense.matrix, atol=1e-12)


def test_probe_reduction_permutation_covariance():
    # relabeling the register and the cut together leaves spectra alone
    n = 4
    u = haar_unitary(n, SeedSpec(43))
    perm = (2, 0, 3, 1)  # register-level relabeling
    u_perm = qubit_permutation(u, perm)
    cut = Bipartition(n + 1, (0, 1, 3))  # register labels {1,3} on side A
    permuted_side = (0,) + tuple(sorted(perm[q - 1] + 1 for q in cut.side_a if q))
    idx = ProductStateIndex(0, 0, 0)

    spec = np.linalg.eigvalsh(
        probe_reduction(Dqc1Config(n, 1.0, u), cut, idx).matrix
    )
    spec_perm = np.linalg.eigvalsh(
        probe_reduction(
            Dqc1Config(n, 1.0, u_perm), Bipartition(n + 1, permuted_side), idx
        ).matrix
    )
    assert np.allclose(np.sort(spec), np.sort(spec_perm), atol=1e-10)


def test_normalized_trace_cases():
    assert normalized_trace(DenseOperator(3, np.eye(8))) == pytest.approx(1.0)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    xxx = DenseOperator(3, np.kron(np.kron(x, x), x))
    assert abs(normalized_trace(xxx)) < 1e-15
    rng = np.random.default_rng(44)
    phases = np.exp(1j * rng.uniform(-np.pi, np.pi, 16))
    diag = DenseOperator(4, np.diag(phases))
    assert normalized_trace(diag) == pytest.approx(np.mean(phases), abs=1e-12)


def test_normalized_trace_dense_and_streamed_agree():
    circuit = random_two_qubit_circuit(6, 12, SeedSpec(45))
    dense = normalized_trace(circuit_unitary(circuit))
    via_circuit = normalized_trace(circuit)
    streamed = _streamed_normalized_trace(circuit)
    assert abs(dense - via_circuit) < 1e-12
    assert abs(dense - streamed) < 1e-12


def test_trace_estimation_identity_is_exact():
    est = simulate_trace_estimation(identity_config(3, 1.0), 10**6, SeedSpec(46))
    assert est.estimate.real == pytest.approx(1.0, abs=1e-12)
    assert est.std_error_real == 0.0
    assert est.shots == 10**6


def test_trace_estimation_tracks_exact_value():
    u = haar_unitary(4, SeedSpec(47))
    config = Dqc1Config(4, 0.8, u)
    exact = normalized_trace(u)
    est = simulate_trace_estimation(config, 10**5, SeedSpec(48))
    limit = 4 / np.sqrt(10**5) / 0.8
    assert abs(est.estimate.real - exact.real) < limit
    assert abs(est.estimate.imag - exact.imag) < limit
    assert est.std_error > 0


def test_trace_estimation_rejects_zero_polarization():
    with pytest.raises(ValueError):
        simulate_trace_estimation(identity_config(2, 0.0), 100, SeedSpec(49))
    with pytest.raises(ValueError):
        simulate_trace_estimation(identity_config(2, 1.0), 0, SeedSpec(49))

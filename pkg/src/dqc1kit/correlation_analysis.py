"""Rank scans, tree-edge selection, and the robustness bound suite.

The balanced window for a register of n qubits is
[ceil(n/5), floor(2n/5)].  Throughout, the window size of a cut counts
register qubits only: the top qubit sits on side A but does not count
toward it, so a cut with a side-A register count a has window size
min(a, n - a).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np

from .dqc1_model import (
    Dqc1Config,
    ProductStateIndex,
    apply_to_product,
    evolved_basis_reduction,
    final_state,
    top_on_side_a,
)
from .tensor_core import (
    DEFAULT_RANK_TOL,
    Bipartition,
    DenseOperator,
    ProbabilityVector,
    PureState,
    SchmidtSpectrum,
    fidelity,
    rank_of,
    realign,
    schmidt_decompose,
    unrealign,
)
from .randomness import SeedSpec

_T = TypeVar("_T")
_R = TypeVar("_R")

# Sampling cuts without replacement materializes index arrays; above this
# population size fall back to independent draws.
_NO_REPLACEMENT_LIMIT = 2_000_000


class ClaimFalsified(Exception):
    """A property the toolkit certifies numerically failed to hold."""


def parallel_map(
    fn: Callable[[_T], _R], items: Sequence[_T], workers: int = 1
) -> list[_R]:
    """Order-preserving map, optionally on a thread pool.

    Results are merged by item index, so output is identical for any
    worker count.  Threads suffice because the heavy kernels release the
    interpreter lock inside the linear-algebra backend.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def balanced_window(num_register_qubits: int) -> tuple[int, int]:
    """Inclusive [ceil(n/5), floor(2n/5)] window; empty below n = 5."""
    n = num_register_qubits
    return -(-n // 5), (2 * n) // 5


def _unrank_combination(rank: int, n_items: int, k: int) -> tuple[int, ...]:
    """The rank-th k-subset of range(n_items) in lexicographic order."""
    combo = []
    start = 0
    r = rank
    for pos in range(k):
        for candidate in range(start, n_items):
            below = math.comb(n_items - candidate - 1, k - pos - 1)
            if r < below:
                combo.append(candidate)
                start = candidate + 1
                break
            r -= below
        else:
            raise ValueError("combination rank out of range")
    return tuple(combo)


@dataclass(frozen=True)
class CutRecord:
    """One evaluated bipartition of a rank scan."""

    side_a: tuple[int, ...]
    window_size: int
    rank: int
    log2_rank: float
    spectrum_head: tuple[float, ...]
    rank_floor: Optional[int] = None
    meets_floor: Optional[bool] = None


@dataclass(frozen=True)
class RankScanReport:
    """Per-cut records plus the scan minimum."""

    records: tuple[CutRecord, ...]
    rel_tol: float
    exhaustive: bool

    def __post_init__(self) -> None:
        if not self.records:
            raise ValueError("a scan must evaluate at least one cut")

    @property
    def min_rank(self) -> int:
        return min(r.rank for r in self.records)

    @property
    def argmin_side_a(self) -> tuple[int, ...]:
        return min(self.records, key=lambda r: (r.rank, r.side_a)).side_a

    @property
    def all_meet_floor(self) -> bool:
        return all(r.meets_floor for r in self.records if r.meets_floor is not None)


def _spectrum_head(spectrum: SchmidtSpectrum, count: int = 4) -> tuple[float, ...]:
    return tuple(float(c) for c in spectrum.coefficients[:count])


def min_rank_over_equipartitions(
    state: PureState,
    rel_tol: float = DEFAULT_RANK_TOL,
    partition_cap: Optional[int] = None,
    seed: Optional[SeedSpec] = None,
    workers: int = 1,
) -> RankScanReport:
    """Smallest Schmidt rank over half:half cuts of an even register.

    Qubit 0 is fixed to side A, which halves the enumeration without
    losing any cut (sides are interchangeable).  With ``partition_cap``
    set, that many cuts are sampled uniformly without replacement.
    """
    n = state.num_qubits
    if n % 2 != 0:
        raise ValueError("equipartition scan requires an even qubit count")
    half = n // 2
    total = math.comb(n - 1, half - 1)
    if partition_cap is not None and partition_cap < 1:
        raise ValueError("partition_cap must be >= 1")
    if partition_cap is None or partition_cap >= total:
        chosen: Iterable[tuple[int, ...]] = combinations(range(1, n), half - 1)
        exhaustive = True
    else:
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        rng = seed.generator()
        picks = np.sort(rng.choice(total, size=partition_cap, replace=False))
        chosen = [
            tuple(q + 1 for q in _unrank_combination(int(r), n - 1, half - 1))
            for r in picks
        ]
        exhaustive = False

    def evaluate(rest: tuple[int, ...]) -> CutRecord:
        cut = Bipartition(n, (0,) + rest)
        spectrum = schmidt_decompose(state, cut)
        rank = rank_of(spectrum, rel_tol)
        return CutRecord(
            side_a=cut.side_a,
            window_size=half,
            rank=rank,
            log2_rank=math.log2(rank) if rank else float("-inf"),
            spectrum_head=_spectrum_head(spectrum),
        )

    records = parallel_map(evaluate, list(chosen), workers)
    return RankScanReport(tuple(records), rel_tol, exhaustive)


def _window_cut_blocks(num_register_qubits: int) -> list[tuple[int, int]]:
    """(side-A register count, cut count) for every in-window block."""
    n = num_register_qubits
    if n < 5:
        raise ValueError(f"n = {n} is too small to admit the balanced window (need n >= 5)")
    low, high = balanced_window(n)
    blocks = []
    for a in range(1, n):
        if low <= min(a, n - a) <= high:
            blocks.append((a, math.comb(n, a)))
    return blocks


def rank_bound_scan(
    config: Dqc1Config,
    num_cuts: int = 50,
    rel_tol: float = DEFAULT_RANK_TOL,
    seed: Optional[SeedSpec] = None,
    exhaustive: bool = False,
    index: ProductStateIndex = ProductStateIndex(0, 0, 0),
    randomize_index: bool = False,
    workers: int = 1,
) -> RankScanReport:
    """Certified rank floors over balanced cuts of the joint state.

    Each evaluated cut keeps the top qubit on side A and has window size
    inside the balanced window.  The probe vector's Schmidt rank lower
    bounds the operator Schmidt rank of the joint state across the same
    cut, and the per-cut floor is 2^window_size.
    """
    n = config.num_register_qubits
    blocks = _window_cut_blocks(n)
    total = sum(count for _, count in blocks)
    if exhaustive:
        tasks: list[tuple[int, tuple[int, ...]]] = []
        for a, _ in blocks:
            tasks.extend((a, combo) for combo in combinations(range(1, n + 1), a))
    else:
        if num_cuts < 1:
            raise ValueError("num_cuts must be >= 1")
        if seed is None:
            raise ValueError("sampled mode needs a seed")
        rng = seed.generator()
        size = min(num_cuts, total)
        if total <= _NO_REPLACEMENT_LIMIT:
            picks = np.sort(rng.choice(total, size=size, replace=False))
        else:
            picks = np.sort(rng.integers(0, total, size=num_cuts))
        tasks = []
        for pick in picks:
            r = int(pick)
            for a, count in blocks:
                if r < count:
                    labels = _unrank_combination(r, n, a)
                    tasks.append((a, tuple(q + 1 for q in labels)))
                    break
                r -= count

    def evaluate(task: tuple[int, tuple[int, tuple[int, ...]]]) -> CutRecord:
        task_id, (a, labels) = task
        cut = Bipartition(n + 1, (0,) + labels)
        window = min(a, n - a)
        if randomize_index:
            rng = seed.child(task_id).generator() if seed else np.random.default_rng(task_id)
            idx = ProductStateIndex(
                int(rng.integers(2)),
                int(rng.integers(2**a)),
                int(rng.integers(2 ** (n - a))),
            )
        else:
            idx = index
        psi = apply_to_product(config, cut, idx)
        spectrum = schmidt_decompose(psi, cut)
        rank = rank_of(spectrum, rel_tol)
        floor = 2**window
        return CutRecord(
            side_a=cut.side_a,
            window_size=window,
            rank=rank,
            log2_rank=math.log2(rank) if rank else float("-inf"),
            spectrum_head=_spectrum_head(spectrum),
            rank_floor=floor,
            meets_floor=rank >= floor,
        )

    records = parallel_map(evaluate, list(enumerate(tasks)), workers)
    return RankScanReport(tuple(records), rel_tol, exhaustive)


def max_overlap_with_rank_limit(
    spectrum: SchmidtSpectrum, chi_prime: int, norm_psi: float, norm_phi: float
) -> float:
    """Largest |<psi|phi>| over states phi of Schmidt rank <= chi_prime.

    For a normalized coefficient vector the maximum is
    norm_psi * norm_phi * sqrt(sum of the chi_prime largest squares),
    attained by the truncated decomposition itself.
    """
    coeffs = spectrum.coefficients
    if not 1 <= chi_prime <= coeffs.size:
        raise ValueError(f"chi_prime {chi_prime} out of range 1..{coeffs.size}")
    total = float(np.sum(coeffs**2))
    if abs(total - 1.0) > 1e-10:
        raise ValueError("spectrum must be normalized (squares summing to 1)")
    if norm_psi < 0 or norm_phi < 0:
        raise ValueError("norms must be nonnegative")
    return norm_psi * norm_phi * math.sqrt(float(np.sum(coeffs[:chi_prime] ** 2)))


def shifted_distribution(shifts: Sequence[float]) -> ProbabilityVector:
    """The vector (1/2 + (1+s_1)/(2d), (1+s_2)/(2d), ...) for zero-sum s."""
    s = np.asarray(shifts, dtype=np.float64)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need at least two shift entries")
    if np.max(np.abs(s)) > 1 + 1e-12:
        raise ValueError("shift entries must lie in [-1, 1]")
    if abs(float(s.sum())) > 1e-9:
        raise ValueError("shift entries must sum to zero")
    d = s.size
    entries = (1.0 + s) / (2 * d)
    entries[0] += 0.5
    return ProbabilityVector(entries)


def majorant_distribution(delta: float, d: int) -> ProbabilityVector:
    """The extremal shifted distribution: +delta on the first half, -delta after.

    Majorizes shifted_distribution(s) for every zero-sum s with
    |s_i| <= delta.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if d < 2 or d % 2 != 0:
        raise ValueError("d must be even and >= 2")
    shifts = np.concatenate([np.full(d // 2, delta), np.full(d // 2, -delta)])
    return shifted_distribution(shifts)


def random_zero_sum_shifts(delta: float, d: int, seed: SeedSpec) -> np.ndarray:
    """Uniform draws in [-delta, delta], centered and rescaled to stay inside."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = seed.generator()
    shifts = rng.uniform(-delta, delta, size=d)
    shifts -= shifts.mean()
    peak = float(np.max(np.abs(shifts)))
    if peak > delta:
        shifts *= delta / peak
    return shifts


@dataclass(frozen=True)
class ConcentrationReport:
    """Spectrum concentration of B-side reductions of Haar-random states."""

    d_a: int
    d_b: int
    delta: float
    samples: int
    max_deviations: tuple[float, ...]
    nonzero_counts: tuple[int, ...]

    @property
    def fraction_within(self) -> float:
        return self.fraction_for(self.delta)

    def fraction_for(self, delta: float) -> float:
        """Fraction of samples whose whole spectrum fits the delta window."""
        inside = sum(1 for dev in self.max_deviations if dev <= delta)
        return inside / self.samples


def concentration_report(
    n_a: int,
    n_b: int,
    delta: float,
    samples: int,
    seed: SeedSpec,
    workers: int = 1,
    rel_tol: float = DEFAULT_RANK_TOL,
) -> ConcentrationReport:
    """Sample Haar states on d_a x d_b and measure reduction spectra.

    For each sample the nonzero eigenvalues of the B-side reduction are
    the squared singular values of the amplitude matrix; the recorded
    deviation is max_i |q_i * d_a - 1| over that spectrum.
    """
    if n_a < 0 or n_b < 1:
        raise ValueError("need n_a >= 0 and n_b >= 1")
    if n_a > n_b:
        raise ValueError("concentration regime requires n_a <= n_b")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d_a, d_b = 2**n_a, 2**n_b

    def sample(k: int) -> tuple[float, int]:
        rng = seed.child(k).generator()
        v = rng.standard_normal(d_a * d_b) + 1j * rng.standard_normal(d_a * d_b)
        v /= np.linalg.norm(v)
        sing = np.linalg.svd(v.reshape(d_a, d_b), compute_uv=False)
        spectrum = sing**2
        deviation = float(np.max(np.abs(spectrum * d_a - 1.0)))
        nonzero = int(np.count_nonzero(sing > rel_tol * sing[0]))
        return deviation, nonzero

    results = parallel_map(sample, list(range(samples)), workers)
    deviations = tuple(dev for dev, _ in results)
    counts = tuple(cnt for _, cnt in results)
    return ConcentrationReport(d_a, d_b, delta, samples, deviations, counts)


@dataclass(frozen=True)
class RobustRankBound:
    """Rank floors surviving a fidelity-epsilon approximation."""

    epsilon: float
    delta: float
    n_0: int
    exact_bound: float
    linear_bound: float


def robust_rank_bound(epsilon: float, delta: float, n_0: int) -> RobustRankBound:
    """Rank floor for any operator within fidelity 1-epsilon of the state.

    With d = 2^{n_0} and reduction spectrum within delta of uniform, a
    rank-r approximant with fidelity >= 1-epsilon forces
    sqrt((1 + (1+delta) r/d)/2) >= 1-epsilon; inverting gives the exact
    floor d * (2(1-epsilon)^2 - 1)/(1+delta).  The linear floor
    (1 - 4 epsilon - delta) d relaxes it and never exceeds it.
    """
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    if n_0 < 0:
        raise ValueError("n_0 must be nonnegative")
    d = 2**n_0
    exact = d * max(0.0, (2.0 * (1.0 - epsilon) ** 2 - 1.0) / (1.0 + delta))
    linear = d * max(0.0, 1.0 - 4.0 * epsilon - delta)
    return RobustRankBound(epsilon, delta, n_0, exact, linear)


@dataclass(frozen=True)
class TruncationRow:
    """One rank of a truncation sweep."""

    rank: int
    fidelity: float
    epsilon: float
    delta_hat: float
    linear_bound: float
    bound_satisfied: bool


def truncation_experiment(
    config: Dqc1Config,
    cut: Bipartition,
    ranks: Optional[Sequence[int]] = None,
    rel_tol: float = DEFAULT_RANK_TOL,
) -> tuple[TruncationRow, ...]:
    """Truncate the joint state across a balanced cut and check the floor.

    For each rank r the best rank-r approximation (by realigned SVD) is
    reconstructed, its fidelity F to the full state measured, and the
    floor robust_rank_bound(1-F, delta_hat, window).linear_bound compared
    against r.  delta_hat is measured from the evolved-basis reduction of
    the same cut rather than assumed.
    """
    n = config.num_register_qubits
    if n > 8:
        raise ValueError("truncation sweep needs the dense state (n <= 8)")
    cut = top_on_side_a(cut)
    if cut.total_qubits != n + 1:
        raise ValueError(f"cut is over {cut.total_qubits} qubits, need {n + 1}")
    a_reg = cut.n_a - 1
    window = min(a_reg, n - a_reg)
    low, high = balanced_window(n)
    if not low <= window <= high:
        raise ValueError(
            f"cut window {window} outside the balanced range [{low}, {high}]"
        )
    rho = final_state(config)
    u, sing, vt = np.linalg.svd(realign(rho.matrix, cut))
    full_rank = int(np.count_nonzero(sing > rel_tol * sing[0]))

    register_cut = Bipartition(n, tuple(q - 1 for q in cut.side_a if q != 0))
    q_op = evolved_basis_reduction(config.unitary, register_cut, 0, 0)
    q_spectrum = np.sort(np.linalg.eigvalsh(q_op.matrix))[::-1]
    d_eff = 2**window
    delta_hat = float(np.max(np.abs(q_spectrum[:d_eff] * d_eff - 1.0)))

    sweep = list(ranks) if ranks is not None else list(range(1, full_rank + 1))
    for r in sweep:
        if not 1 <= r <= full_rank:
            raise ValueError(f"rank {r} outside 1..{full_rank}")

    rows = []
    for r in sweep:
        approx = unrealign((u[:, :r] * sing[:r]) @ vt[:r], cut)
        f = fidelity(rho, DenseOperator(n + 1, approx))
        eps = max(0.0, 1.0 - f)
        bound = robust_rank_bound(eps, delta_hat, window)
        rows.append(
            TruncationRow(
                rank=r,
                fidelity=f,
                epsilon=eps,
                delta_hat=delta_hat,
                linear_bound=bound.linear_bound,
                bound_satisfied=r + 1e-12 >= bound.linear_bound,
            )
        )
    return tuple(rows)


@dataclass(frozen=True)
class TreeGraph:
    """Tree whose leaves 0..num_leaves-1 are qubits; internal degree <= 3."""

    num_leaves: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.num_leaves < 2:
            raise ValueError("need at least 2 leaves")
        edges = tuple(tuple(sorted((int(u), int(v)))) for u, v in self.edges)
        edges = tuple(sorted(edges))
        object.__setattr__(self, "edges", edges)
        nodes = {u for e in edges for u in e}
        expected = len(edges) + 1
        if len(nodes) != expected:
            raise ValueError("edge list does not describe a tree")
        if not set(range(self.num_leaves)) <= nodes:
            raise ValueError("every leaf label must appear")
        degree: dict[int, int] = {}
        for u, v in edges:
            if u == v:
                raise ValueError("self-loops are not allowed")
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        for node, deg in degree.items():
            if node < self.num_leaves:
                if deg != 1:
                    raise ValueError(f"leaf {node} must have degree 1, got {deg}")
            elif not 2 <= deg <= 3:
                raise ValueError(f"internal node {node} must have degree 2 or 3")
        # edge count == node count - 1 plus full connectivity <=> tree
        if self._reachable_from(next(iter(nodes))) != nodes:
            raise ValueError("tree is not connected")

    def _reachable_from(self, start: int) -> set[int]:
        adjacency = self.adjacency()
        seen = {start}
        stack = [start]
        while stack:
            node = stack.pop()
            for other in adjacency[node]:
                if other not in seen:
                    seen.add(other)
                    stack.append(other)
        return seen

    def adjacency(self) -> dict[int, list[int]]:
        adjacency: dict[int, list[int]] = {}
        for u, v in self.edges:
            adjacency.setdefault(u, []).append(v)
            adjacency.setdefault(v, []).append(u)
        return adjacency


def random_degree3_tree(num_leaves: int, seed: SeedSpec) -> TreeGraph:
    """Grow a random tree by repeated edge subdivision and leaf attachment.

    Every internal node ends with degree exactly 3, so the result is a
    uniform-topology-free but always-admissible degree-<=3 tree.
    """
    if num_leaves < 2:
        raise ValueError("need at least 2 leaves")
    rng = seed.generator()
    edges: list[tuple[int, int]] = [(0, 1)]
    next_internal = num_leaves
    for leaf in range(2, num_leaves):
        pick = int(rng.integers(len(edges)))
        u, v = edges.pop(pick)
        middle = next_internal
        next_internal += 1
        edges.extend([(u, middle), (middle, v), (middle, leaf)])
    return TreeGraph(num_leaves, tuple(edges))


def balanced_tree_edge(tree: TreeGraph) -> tuple[tuple[int, int], int]:
    """An edge whose leaf split lands in the balanced window.

    The window is computed for n = num_leaves - 1 (one leaf is the top
    qubit).  Raises ClaimFalsified when no edge qualifies, which is a
    genuine counterexample to the always-exists property this function
    certifies, not a recoverable condition.
    """
    leaves = tree.num_leaves
    if leaves < 6:
        raise ValueError("balanced edge search needs at least 6 leaves")
    n = leaves - 1
    low, high = balanced_window(n)
    adjacency = tree.adjacency()
    root = 0
    parent: dict[int, int] = {root: -1}
    order = [root]
    for node in order:
        for other in adjacency[node]:
            if other not in parent:
                parent[other] = node
                order.append(other)
    leaf_count: dict[int, int] = {}
    for node in reversed(order):
        total = 1 if node < leaves else 0
        total += sum(
            leaf_count[child] for child in adjacency[node] if parent.get(child) == node
        )
        leaf_count[node] = total

    for u, v in tree.edges:
        child = v if parent.get(v) == u else u
        side = leaf_count[child]
        n_0 = min(side, leaves - side)
        if low <= n_0 <= high:
            return (u, v), n_0
    raise ClaimFalsified(
        f"no edge of the tree splits its {leaves} leaves with a minority "
        f"side in [{low}, {high}]"
    )

"""Chain score evaluation, its quantum closed form, the classical
brute-force minimum, and the biased-marginal linear program."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distributions import NORM_TOL, ConditionalDistribution
from .quantum import mix_with_noise, qm_chained_distribution
from .simplex import solve_equality_lp

__all__ = [
    "ChainScore",
    "DeterministicStrategy",
    "BruteForceResult",
    "BiasedChainLP",
    "NoiseScanResult",
    "evaluate_chain",
    "quantum_chain_closed_form",
    "noisy_chain_closed_form",
    "classical_min_chain_value",
    "lp_min_chain_given_bias",
    "optimal_chain_length",
]


@dataclass(frozen=True)
class ChainScore:
    """Value of the 2N-term chained sum with its per-term breakdown.

    ``terms`` lists (alice_label, bob_label, contribution) in the even/odd
    presentation labels (Alice 0, 2, ..., 2N-2; Bob 1, 3, ..., 2N-1).
    Adjacent-label terms contribute P[X != Y]; the wrap term (0, 2N-1)
    contributes P[X = Y].
    """

    n_settings: int
    value: float
    terms: tuple[tuple[int, int, float], ...]


@dataclass(frozen=True)
class DeterministicStrategy:
    """Per-side lookup tables mapping each setting to a fixed output bit."""

    alice_map: tuple[int, ...]
    bob_map: tuple[int, ...]

    def __post_init__(self):
        alice = tuple(int(b) for b in self.alice_map)
        bob = tuple(int(b) for b in self.bob_map)
        if len(alice) != len(bob) or len(alice) < 2:
            raise ValueError("strategy tables must cover the same N >= 2 settings")
        if any(b not in (0, 1) for b in alice + bob):
            raise ValueError("strategy outputs must be bits")
        object.__setattr__(self, "alice_map", alice)
        object.__setattr__(self, "bob_map", bob)

    def distribution(self) -> ConditionalDistribution:
        """The deterministic table P(x, y | a, b) this strategy produces."""
        n = len(self.alice_map)
        table = np.zeros((n, n, 2, 2))
        for a in range(n):
            for b in range(n):
                table[a, b, self.alice_map[a], self.bob_map[b]] = 1.0
        return ConditionalDistribution((n, n), (2, 2), table)


@dataclass(frozen=True)
class BruteForceResult:
    min_value: float
    witness: DeterministicStrategy


@dataclass(frozen=True)
class BiasedChainLP:
    """Outcome of the biased-marginal minimization.

    ``gap`` is ``min_value - 2*delta``, the slack over the analytic lower
    bound; ``branch_values`` are the optima of the two outcome-relabeled
    bias branches, which must agree.
    """

    min_value: float
    gap: float
    argmin: ConditionalDistribution
    branch_values: tuple[float, float]


@dataclass(frozen=True)
class NoiseScanResult:
    best_n: int
    best_value: float


def evaluate_chain(p: ConditionalDistribution, n: int) -> ChainScore:
    """Sum the 2N chained probabilities of a two-party binary table.

    Setting indices are 0-based per side.  Adjacency pairs Alice i with
    Bob i and Alice i+1 with Bob i (2N-1 unequal-outcome terms), and the
    wrap term pairs Alice 0 with Bob N-1 using the equal-outcome
    probability.
    """
    if n < 2:
        raise ValueError("chain parameter must be at least 2")
    if p.input_sizes != (n, n) or p.output_sizes != (2, 2):
        raise ValueError(
            f"expected a 2-party binary table with {n} settings per side, "
            f"got inputs {p.input_sizes} and outputs {p.output_sizes}"
        )
    t = p.table
    terms: list[tuple[int, int, float]] = []
    for i in range(n):
        q = t[i, i]
        terms.append((2 * i, 2 * i + 1, float(q[0, 1] + q[1, 0])))
    for i in range(n - 1):
        q = t[i + 1, i]
        terms.append((2 * i + 2, 2 * i + 1, float(q[0, 1] + q[1, 0])))
    q = t[0, n - 1]
    terms.append((0, 2 * n - 1, float(q[0, 0] + q[1, 1])))
    value = math.fsum(c for _, _, c in terms)
    return ChainScore(n, value, tuple(terms))


def quantum_chain_closed_form(n: int) -> float:
    """Ideal quantum chain value 2N sin^2(pi/4N), decreasing in N with
    large-N behaviour pi^2 / (8N)."""
    if n < 2:
        raise ValueError("chain parameter must be at least 2")
    s = math.sin(math.pi / (4.0 * n))
    return 2.0 * n * s * s


def noisy_chain_closed_form(n: int, visibility: float) -> float:
    """Chain value of the visibility-mixed quantum table:
    v * 2N sin^2(pi/4N) + (1 - v) * N."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    return visibility * quantum_chain_closed_form(n) + (1.0 - visibility) * n


def classical_min_chain_value(n: int) -> BruteForceResult:
    """Exhaustively minimize the chain value over the 4^N deterministic
    local strategy pairs.

    The chain value is linear in the table, so its minimum over shared-
    randomness mixtures is attained at a deterministic pair; ties break to
    the smallest (alice, bob) assignment index.
    """
    if not 2 <= n <= 10:
        raise ValueError("brute force supports 2 <= N <= 10")
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)
    f = bits[:, None, :]  # Alice assignments
    g = bits[None, :, :]  # Bob assignments
    adj_same = (f != g).sum(axis=2)
    adj_next = (f[:, :, 1:] != g[:, :, :-1]).sum(axis=2)
    wrap = (f[:, :, 0] == g[:, :, n - 1]).astype(np.int64)
    totals = adj_same + adj_next + wrap
    flat = int(np.argmin(totals))  # first minimum in row-major order
    s, t = divmod(flat, totals.shape[1])
    witness = DeterministicStrategy(
        tuple(int(x) for x in bits[s]), tuple(int(x) for x in bits[t])
    )
    return BruteForceResult(float(totals[s, t]), witness)


def _var(a: int, b: int, x: int, y: int, n: int) -> int:
    return ((a * n + b) * 2 + x) * 2 + y


def _biased_chain_lp(n: int, delta: float, branch_x: int):
    """Equality-form LP data: table entries plus one surplus variable."""
    nv = 4 * n * n + 1
    c = np.zeros(nv)
    for i in range(n):
        for x in (0, 1):
            c[_var(i, i, x, 1 - x, n)] += 1.0
    for i in range(n - 1):
        for x in (0, 1):
            c[_var(i + 1, i, x, 1 - x, n)] += 1.0
    for x in (0, 1):
        c[_var(0, n - 1, x, x, n)] += 1.0

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for a in range(n):  # normalization per setting pair
        for b in range(n):
            r = np.zeros(nv)
            for x in (0, 1):
                for y in (0, 1):
                    r[_var(a, b, x, y, n)] = 1.0
            rows.append(r)
            rhs.append(1.0)
    for a in range(n):  # Alice marginal independent of b (x = 0 suffices)
        for b in range(1, n):
            r = np.zeros(nv)
            for y in (0, 1):
                r[_var(a, b, 0, y, n)] += 1.0
                r[_var(a, 0, 0, y, n)] -= 1.0
            rows.append(r)
            rhs.append(0.0)
    for b in range(n):  # Bob marginal independent of a (y = 0 suffices)
        for a in range(1, n):
            r = np.zeros(nv)
            for x in (0, 1):
                r[_var(a, b, x, 0, n)] += 1.0
                r[_var(0, b, x, 0, n)] -= 1.0
            rows.append(r)
            rhs.append(0.0)
    r = np.zeros(nv)  # bias: P(X = branch_x | A = 0) - surplus = 1/2 + delta
    for y in (0, 1):
        r[_var(0, 0, branch_x, y, n)] = 1.0
    r[-1] = -1.0
    rows.append(r)
    rhs.append(0.5 + delta)
    return c, np.array(rows), np.array(rhs)


def lp_min_chain_given_bias(n: int, delta: float) -> BiasedChainLP:
    """Minimize the chain value over non-signaling two-party binary tables
    whose Alice marginal at setting 0 is biased away from uniform by at
    least ``delta`` in statistical distance.

    The bias constraint is linearized by fixing an outcome branch,
    P(X=0 | A=0) >= 1/2 + delta; relabeling x -> 1-x maps the feasible set
    of the opposite branch onto this one while permuting chain terms, so
    both branches are solved and their optima must agree.  The analytic
    lower bound for the optimum is 2*delta.
    """
    if n not in (2, 3, 4):
        raise ValueError("LP probe supports N in {2, 3, 4}")
    if not 0.0 <= delta <= 0.5:
        raise ValueError("delta must lie in [0, 1/2]")
    values: list[float] = []
    solutions: list[np.ndarray] = []
    for branch_x in (0, 1):
        c, A, b = _biased_chain_lp(n, delta, branch_x)
        x, val = solve_equality_lp(c, A, b)
        values.append(val)
        solutions.append(x)
    if abs(values[0] - values[1]) > 1e-9:
        raise ArithmeticError(f"bias branch optima disagree: {values}")
    table = solutions[0][: 4 * n * n].reshape(n, n, 2, 2)
    argmin = ConditionalDistribution((n, n), (2, 2), table)
    return BiasedChainLP(
        values[0], values[0] - 2.0 * delta, argmin, (values[0], values[1])
    )


# Above this the cross-check table (N^2 * 4 entries) is not worth building.
_CROSSCHECK_MAX_N = 512


def optimal_chain_length(
    visibility: float, n_range: tuple[int, int]
) -> NoiseScanResult:
    """Scan chain lengths for the smallest noisy chain value.

    Ties break to the smallest N.  The winning closed-form value is
    cross-checked against a full table evaluation whenever the table is
    small enough to build.
    """
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    lo, hi = (int(n_range[0]), int(n_range[1]))
    if lo > hi:
        raise ValueError("empty chain-length range")
    if lo < 2 or hi > 10_000:
        raise ValueError("chain-length range must lie within [2, 10000]")
    best_n, best_value = lo, noisy_chain_closed_form(lo, visibility)
    for n in range(lo + 1, hi + 1):
        v = noisy_chain_closed_form(n, visibility)
        if v < best_value:
            best_n, best_value = n, v
    if best_n <= _CROSSCHECK_MAX_N:
        direct = evaluate_chain(
            mix_with_noise(qm_chained_distribution(best_n), visibility), best_n
        ).value
        if abs(direct - best_value) > NORM_TOL:
            raise ArithmeticError(
                f"closed form {best_value} disagrees with table value {direct}"
            )
    return NoiseScanResult(best_n, best_value)

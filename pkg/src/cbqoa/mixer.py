"""Permutation families, sigmoid edge weights, and the feasibility graph.

A family is a set of order-2 local permutations whose induced graph connects
the feasible strings: single-bit flips for unconstrained problems (the
weighted hypercube), and transpositions between the seed's support and its
complement for balanced-partition problems. Each permutation carries a weight
that is a sigmoid of the cost improvement it produces on the seed, so walks
drift toward better neighbors for positive sharpness.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .errors import CapacityError
from .problems import (
    ProblemInstance,
    as_bits,
    evaluate_cost,
    feasibility_structure,
    feasible_indices,
    is_feasible,
)

# Dense 2^n x 2^n adjacency matrices are a test oracle only.
MAX_DENSE_ADJACENCY_VARS = 12
MAX_VERIFY_VARS = 14


@dataclass(frozen=True)
class LocalPermutation:
    """An order-2 permutation acting on one or two bit positions (1-based)."""

    kind: str  # "bit_flip" | "transposition"
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.kind == "bit_flip":
            if len(self.indices) != 1:
                raise ValueError("bit_flip takes exactly one index")
        elif self.kind == "transposition":
            if len(self.indices) != 2 or self.indices[0] == self.indices[1]:
                raise ValueError("transposition takes two distinct indices")
        else:
            raise ValueError(f"unknown permutation kind {self.kind!r}")
        if any(i < 1 for i in self.indices):
            raise ValueError("indices are 1-based")


def bit_flip(i: int) -> LocalPermutation:
    return LocalPermutation(kind="bit_flip", indices=(i,))


def transposition(a: int, b: int) -> LocalPermutation:
    return LocalPermutation(kind="transposition", indices=(a, b))


def apply_permutation(tau: LocalPermutation, x) -> np.ndarray:
    """Apply a local permutation to a bit string."""
    bits = as_bits(x).copy()
    n = bits.size
    if any(i > n for i in tau.indices):
        raise ValueError(f"permutation indices {tau.indices} out of range for n={n}")
    if tau.kind == "bit_flip":
        (i,) = tau.indices
        bits[i - 1] ^= 1
    else:
        a, b = tau.indices
        bits[a - 1], bits[b - 1] = bits[b - 1], bits[a - 1]
    return bits


def permute_indices(tau: LocalPermutation, indices: np.ndarray, n: int) -> np.ndarray:
    """Image of basis indices under a local permutation (vectorized)."""
    if any(i > n for i in tau.indices):
        raise ValueError(f"permutation indices {tau.indices} out of range for n={n}")
    if tau.kind == "bit_flip":
        (i,) = tau.indices
        return indices ^ (1 << (n - i))
    a, b = tau.indices
    place_a = 1 << (n - a)
    place_b = 1 << (n - b)
    bit_a = (indices & place_a) != 0
    bit_b = (indices & place_b) != 0
    return np.where(bit_a == bit_b, indices, indices ^ (place_a | place_b))


@dataclass(frozen=True)
class WalkParams:
    """Continuous-time walk parameters: evolution time and weight sharpness."""

    time: float
    sharpness: float

    def __post_init__(self):
        if not (np.isfinite(self.time) and np.isfinite(self.sharpness)):
            raise ValueError("walk parameters must be finite")


@dataclass(frozen=True)
class PermutationFamily:
    """Permutations plus the per-permutation cost improvement on the seed."""

    n: int
    permutations: tuple[LocalPermutation, ...]
    cost_gains: tuple[float, ...]  # f(z) - f(tau(z)) per permutation
    seed: tuple[int, ...]

    def __post_init__(self):
        if len(self.permutations) != len(self.cost_gains):
            raise ValueError("one cost gain per permutation required")

    @property
    def size(self) -> int:
        return len(self.permutations)

    @property
    def kind(self) -> str:
        return self.permutations[0].kind if self.permutations else "bit_flip"

    def weights(self, sharpness: float) -> np.ndarray:
        return sigmoid_weight(np.asarray(self.cost_gains, dtype=np.float64), sharpness)


def sigmoid_weight(cost_gain, sharpness):
    """Edge weight 1 / (1 + exp(-gain * sharpness)), overflow-safe."""
    x = np.asarray(cost_gain, dtype=np.float64) * float(sharpness)
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    expx = np.exp(x[~pos])
    out[~pos] = expx / (1.0 + expx)
    if np.ndim(cost_gain) == 0:
        return float(out)
    return out


def build_family(instance: ProblemInstance, z) -> PermutationFamily:
    """Permutation family for the instance, anchored at the feasible seed z.

    Max 3SAT gets the n single-bit flips; Max Bisection gets every
    transposition between the seed's support and its complement, stored in
    rounds that pair disjoint qubits (round k pairs support position i with
    complement position i+k cyclically) so product formulas can apply each
    round in parallel.
    """
    bits = as_bits(z, instance.n)
    if not is_feasible(instance, bits):
        raise ValueError("family seed must be feasible")
    n = instance.n
    if instance.kind == "max3sat":
        perms = [bit_flip(i) for i in range(1, n + 1)]
    else:
        inside = [int(j) + 1 for j in np.flatnonzero(bits)]
        outside = [int(j) + 1 for j in np.flatnonzero(1 - bits)]
        half = n // 2
        perms = [
            transposition(inside[i], outside[(i + k) % half])
            for k in range(half)
            for i in range(half)
        ]
    fz = evaluate_cost(instance, bits)
    gains = tuple(fz - evaluate_cost(instance, apply_permutation(tau, bits)) for tau in perms)
    return PermutationFamily(
        n=n, permutations=tuple(perms), cost_gains=gains, seed=tuple(int(b) for b in bits)
    )


def adjacency_dense(
    family: PermutationFamily, sharpness: float, n: int | None = None
) -> np.ndarray:
    """Dense adjacency matrix of the weighted feasibility graph (test oracle)."""
    n = family.n if n is None else n
    if n > MAX_DENSE_ADJACENCY_VARS:
        raise CapacityError(
            f"dense adjacency supports n <= {MAX_DENSE_ADJACENCY_VARS}, got {n}"
        )
    size = 1 << n
    indices = np.arange(size, dtype=np.int64)
    weights = family.weights(sharpness)
    adj = np.zeros((size, size), dtype=np.float64)
    for tau, w in zip(family.permutations, weights):
        images = permute_indices(tau, indices, n)
        moved = images != indices
        adj[images[moved], indices[moved]] += w
    return adj


@dataclass
class AssumptionReport:
    """Outcome of checking the structural conditions on a permutation family."""

    order_two: bool
    closure: bool
    parts_connected: tuple[bool, ...]
    feasible_sealed: bool
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.order_two
            and self.closure
            and all(self.parts_connected)
            and self.feasible_sealed
        )

    def to_dict(self) -> dict:
        return {
            "order_two": self.order_two,
            "closure": self.closure,
            "parts_connected": list(self.parts_connected),
            "feasible_sealed": self.feasible_sealed,
            "ok": self.ok,
            "failures": list(self.failures),
        }


def verify_assumption(instance: ProblemInstance, family: PermutationFamily) -> AssumptionReport:
    """Check order-2, closure of F under each permutation, and connectivity of F.

    Connectivity is established by breadth-first search over the feasible set
    using the permutations as edge generators; the same sweep confirms no edge
    leaves the feasible set.
    """
    n = instance.n
    if n > MAX_VERIFY_VARS:
        raise CapacityError(f"assumption check supports n <= {MAX_VERIFY_VARS}, got {n}")
    failures: list[str] = []

    all_indices = np.arange(1 << n, dtype=np.int64)
    order_two = True
    for tau in family.permutations:
        once = permute_indices(tau, all_indices, n)
        if np.array_equal(once, all_indices):
            order_two = False
            failures.append(f"{tau} is the identity")
        elif not np.array_equal(permute_indices(tau, once, n), all_indices):
            order_two = False
            failures.append(f"{tau} is not an involution")

    feas = feasible_indices(instance)
    feas_mask = np.zeros(1 << n, dtype=bool)
    feas_mask[feas] = True

    closure = True
    feasible_sealed = True
    for tau in family.permutations:
        images = permute_indices(tau, feas, n)
        if not feas_mask[images].all():
            closure = False
            feasible_sealed = False
            failures.append(f"{tau} maps a feasible string outside F")

    # BFS over F with the family as the edge generator.
    structure = feasibility_structure(instance)
    reached = np.zeros(1 << n, dtype=bool)
    frontier = np.array([feas[0]], dtype=np.int64)
    reached[frontier] = True
    while frontier.size:
        nxt = []
        for tau in family.permutations:
            images = permute_indices(tau, frontier, n)
            fresh = images[~reached[images]]
            if fresh.size:
                reached[fresh] = True
                nxt.append(fresh)
        frontier = np.unique(np.concatenate(nxt)) if nxt else np.array([], dtype=np.int64)
    connected = bool(reached[feas].all())
    if not connected:
        failures.append("feasible set is not connected under the family")
    if reached[~feas_mask].any():
        feasible_sealed = False
        failures.append("walk reached an infeasible string from the feasible set")

    return AssumptionReport(
        order_two=order_two,
        closure=closure,
        parts_connected=tuple([connected] * structure.num_parts),
        feasible_sealed=feasible_sealed,
        failures=failures,
    )

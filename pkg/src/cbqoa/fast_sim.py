"""Accelerated ansatz simulation by cost binning.

The layer unitaries depend on the cost only through the phase it applies, so
after rounding every cost to the midpoint of one of M uniform bins, the state
stays inside the span of M fixed unit vectors (one per bin) for the whole
circuit. The simulation then reduces to a recursion on the M complex
coefficients: each layer applies the binned phases and adds the rank-1 mixing
correction through a single shared inner product, costing O(M) per layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np

from .simulate import AnsatzParams

MAX_NUM_BINS = 10**6


@dataclass(frozen=True)
class CostBinning:
    """Uniform binning of the cost values on a fixed support."""

    lower: float  # inclusive lower edge (min cost on the support)
    upper: float  # exclusive upper edge
    num_bins: int
    support: np.ndarray  # basis indices covered by the binning
    bin_index: np.ndarray  # bin of each support element
    bin_costs: np.ndarray  # midpoint cost per bin

    @property
    def width(self) -> float:
        return (self.upper - self.lower) / self.num_bins

    def binned_diagonal(self, size: int) -> np.ndarray:
        """Dense diagonal with every support cost replaced by its bin midpoint."""
        diag = np.zeros(size, dtype=np.float64)
        diag[self.support] = self.bin_costs[self.bin_index]
        return diag


@dataclass(frozen=True)
class BinnedState:
    """Bin-coefficient representation of a state: |phi> = sum_j coeffs_j |psi_j>."""

    base: np.ndarray  # nonnegative bin amplitudes of the initial state
    coeffs: np.ndarray  # current complex coefficients

    def __post_init__(self):
        if self.base.shape != self.coeffs.shape:
            raise ValueError("base and coeffs must have the same length")


def bin_costs(cost_diagonal: np.ndarray, support: np.ndarray, num_bins: int) -> CostBinning:
    """Partition the support's cost values into num_bins uniform bins.

    The upper edge gets a tiny margin so the maximum cost falls strictly below
    it; every cost then sits within half a bin width of its bin midpoint.
    """
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    support = np.asarray(support, dtype=np.int64)
    if support.size == 0:
        raise ValueError("support must be non-empty")
    values = np.asarray(cost_diagonal, dtype=np.float64)[support]
    lower = float(values.min())
    span = float(values.max()) - lower
    upper = float(values.max()) + max(span, 1.0) * 1e-12
    width = (upper - lower) / num_bins
    index = np.minimum((values - lower) // width, num_bins - 1).astype(np.int64)
    midpoints = lower + (np.arange(num_bins) + 0.5) * width
    return CostBinning(
        lower=lower,
        upper=upper,
        num_bins=num_bins,
        support=support,
        bin_index=index,
        bin_costs=midpoints,
    )


def eta_from_state(psi: np.ndarray, binning: CostBinning) -> BinnedState:
    """Bin amplitudes of a normalized state: sqrt of the probability per bin."""
    probs = np.abs(psi[binning.support]) ** 2
    total = float(probs.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"state mass on the binned support is {total}, expected 1")
    per_bin = np.bincount(binning.bin_index, weights=probs, minlength=binning.num_bins)
    base = np.sqrt(per_bin)
    return BinnedState(base=base, coeffs=base.astype(np.complex128))


def evolve_binned(
    binned: BinnedState, binning: CostBinning, params: AnsatzParams
) -> BinnedState:
    """Apply the layer recursion for every (gamma, beta) pair.

    coeffs_j <- coeffs_j * e^{-i c_j gamma} + (e^{-i beta} - 1) * base_j * S,
    with S = sum_k base_k * coeffs_k * e^{-i c_k gamma} shared across bins.
    """
    if binned.base.size != binning.num_bins:
        raise ValueError("binned state does not match binning size")
    coeffs = binned.coeffs.copy()
    for beta, gamma in zip(params.betas, params.gammas):
        phased = coeffs * np.exp(-1j * gamma * binning.bin_costs)
        shared = np.dot(binned.base, phased)
        coeffs = phased + (np.exp(-1j * beta) - 1.0) * shared * binned.base
    return BinnedState(base=binned.base, coeffs=coeffs)


def binned_distribution(binned: BinnedState, binning: CostBinning) -> list[tuple[float, float]]:
    """Probability of each bin midpoint cost: (cost, |coeff|^2) pairs."""
    probs = np.abs(binned.coeffs) ** 2
    return [(float(c), float(p)) for c, p in zip(binning.bin_costs, probs)]


def choose_num_bins(depth: int, lower: float, upper: float, alpha: float, epsilon: float) -> int:
    """Bin count that keeps the tail-mean error of the binned run below epsilon.

    Uses M = ceil(p * (b - a)^2 / (alpha * epsilon)), clamped to [1, 10^6].
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must be in (0, 1]")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if depth < 0:
        raise ValueError("depth must be >= 0")
    span = float(upper) - float(lower)
    raw = ceil(depth * span * span / (alpha * epsilon))
    return int(min(max(raw, 1), MAX_NUM_BINS))

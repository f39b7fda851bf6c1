"""Distance analytics for amplitude-times-PSK constellations.

The minimum chordal distance (MCD) of the constellation splits into two
kinds of pairs:

* points on *different* amplitude rows, whose closest approach depends only
  on the rows (:func:`amplitude_pair_distance`), and
* points on the *same* row, whose distance depends on the row and on the
  phase difference; the minimum over all phase differences has a closed
  form (:func:`phase_mcd_closed_form`) that only needs a handful of
  critical difference patterns (:func:`critical_phase_differences`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import gammaln

from .constellation import BitAllocation, Codebook
from .errors import CapacityError, EmptyPhaseError, InvalidInputError

__all__ = [
    "CriticalDifference",
    "DistanceTerms",
    "amplitude_pair_distance",
    "critical_phase_differences",
    "phase_mcd_closed_form",
    "phase_mcd_bruteforce",
    "mcd_decomposed",
    "decomposed_terms",
    "mcd_upper_bound",
    "pilot_psk_mcd",
]


@dataclass(frozen=True)
class CriticalDifference:
    """A phase-difference pattern that can attain the same-row MCD.

    Attributes
    ----------
    angles : tuple of float
        Phase difference per symbol, each in ``[0, 2*pi)``.
    kind : {"symbol", "level"}
        ``"symbol"`` rotates one symbol by its smallest PSK step.
        ``"level"`` rotates every symbol whose order is at least ``order``
        by the smallest step of that order.
    index : int
        Symbol index for ``"symbol"`` patterns, phase order (bits) for
        ``"level"`` patterns.
    """

    angles: tuple[float, ...]
    kind: Literal["symbol", "level"]
    index: int


def _unit_nonneg(u, K: int | None = None, name: str = "u") -> np.ndarray:
    arr = np.asarray(u, dtype=np.float64).reshape(-1)
    if K is not None and arr.size != K:
        raise InvalidInputError(f"{name} has {arr.size} entries, expected {K}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    if np.any(arr < 0):
        raise InvalidInputError(f"{name} must be non-negative")
    return arr


def amplitude_pair_distance(u_a, u_b) -> float:
    """Smallest chordal distance between any points built on rows ``u_a`` and ``u_b``.

    Because phase 0 belongs to every PSK set, the phases can be aligned and
    the distance reduces to ``sqrt(1 - (u_a . u_b)**2)``.

    Examples
    --------
    >>> round(amplitude_pair_distance([2/3, 2/3, 1/3], [0.5, 0.5, 2**-0.5]), 5)
    0.43096
    """
    a = _unit_nonneg(u_a, name="u_a")
    b = _unit_nonneg(u_b, a.size, name="u_b")
    dot = float(a @ b)
    return math.sqrt(max(0.0, 1.0 - dot * dot))


def critical_phase_differences(alloc: BitAllocation) -> list[CriticalDifference]:
    """Phase-difference patterns that contain the same-row MCD minimizer.

    Per-symbol patterns come first in symbol order, then per-level patterns
    in ascending order; a pattern equal to an earlier one is dropped.

    Examples
    --------
    >>> [d.kind for d in critical_phase_differences(BitAllocation(3, 0, (0, 2, 3)))]
    ['symbol', 'symbol', 'level']
    """
    if not alloc.phase_symbols:
        raise EmptyPhaseError(f"allocation {alloc} carries no phase bits")
    out: list[CriticalDifference] = []
    seen: set[tuple[float, ...]] = set()

    def add(angles, kind, index):
        key = tuple(angles)
        if key not in seen:
            seen.add(key)
            out.append(CriticalDifference(key, kind, index))

    for k in alloc.phase_symbols:
        angles = [0.0] * alloc.K
        angles[k] = 2 * math.pi / 2 ** alloc.l_phi[k]
        add(angles, "symbol", k)
    for level in alloc.levels:
        step = 2 * math.pi / 2**level
        add([step if b >= level else 0.0 for b in alloc.l_phi], "level", level)
    return out


def phase_mcd_closed_form(u, alloc: BitAllocation) -> float:
    """Same-row MCD of amplitude row ``u`` under the allocation's PSK sets.

    The value is the smaller of two families of terms: for each phase
    symbol ``k``, ``2 u_k sqrt(1 - u_k**2) sin(pi / 2**l_phi[k])``, and for
    each phase order ``l``, ``2 sqrt(S (1 - S)) sin(pi / 2**l)`` where ``S``
    is the energy on symbols of order below ``l``.

    Parameters
    ----------
    u : array_like
        Non-negative amplitude row, expected to have unit norm.
    alloc : BitAllocation

    Examples
    --------
    >>> round(phase_mcd_closed_form([2/3, 2/3, 1/3], BitAllocation(3, 0, (0, 2, 2))), 5)
    0.44444
    """
    lphi = np.asarray(alloc.l_phi)
    arr = _unit_nonneg(u, alloc.K)
    if not alloc.phase_symbols:
        raise EmptyPhaseError(f"allocation {alloc} carries no phase bits")
    energy = arr * arr
    best = math.inf
    for k in alloc.phase_symbols:
        e = energy[k]
        best = min(best, 4.0 * e * (1.0 - e) * math.sin(math.pi / 2 ** lphi[k]) ** 2)
    for level in alloc.levels:
        s = float(energy[lphi < level].sum())
        best = min(best, 4.0 * s * (1.0 - s) * math.sin(math.pi / 2**level) ** 2)
    return math.sqrt(max(0.0, best))


def phase_mcd_bruteforce(u, alloc: BitAllocation, max_phase_bits: int = 16) -> float:
    """Same-row MCD by enumerating every non-identity phase-difference tuple.

    Raises
    ------
    CapacityError
        If the allocation has more than ``max_phase_bits`` phase bits.
    """
    arr = _unit_nonneg(u, alloc.K)
    if not alloc.phase_symbols:
        raise EmptyPhaseError(f"allocation {alloc} carries no phase bits")
    if alloc.phase_bits > max_phase_bits:
        raise CapacityError(f"{alloc.phase_bits} phase bits exceed the guard of {max_phase_bits}")
    energy = arr * arr
    sums = np.array([energy[0]], dtype=np.complex128)
    for k in range(1, alloc.K):
        order = 2 ** alloc.l_phi[k]
        rot = energy[k] * np.exp(2j * np.pi * np.arange(order) / order)
        sums = (sums[:, None] + rot[None, :]).reshape(-1)
    # index 0 is the all-zero difference (the point itself)
    peak = float(np.max(np.abs(sums[1:])))
    return math.sqrt(max(0.0, 1.0 - peak * peak))


@dataclass(frozen=True)
class DistanceTerms:
    """Breakdown of a codebook's MCD into its amplitude and phase parts.

    ``amplitude_pair`` and ``phase_row`` locate the minimizing amplitude
    pair and row; either distance is ``inf`` when its family is empty.
    """

    amplitude_distance: float
    amplitude_pair: tuple[int, int] | None
    phase_distance: float
    phase_row: int | None

    @property
    def mcd(self) -> float:
        return min(self.amplitude_distance, self.phase_distance)


def decomposed_terms(codebook: Codebook) -> DistanceTerms:
    """Evaluate both MCD families of ``codebook`` and report their minimizers."""
    U = codebook.unit_amplitudes
    alloc = codebook.alloc
    amp_d, amp_pair = math.inf, None
    for a, b in itertools.combinations(range(U.shape[0]), 2):
        d = amplitude_pair_distance(U[a], U[b])
        if d < amp_d:
            amp_d, amp_pair = d, (a, b)
    ph_d, ph_row = math.inf, None
    if alloc.phase_symbols:
        for r in range(U.shape[0]):
            d = phase_mcd_closed_form(U[r], alloc)
            if d < ph_d:
                ph_d, ph_row = d, r
    return DistanceTerms(amp_d, amp_pair, ph_d, ph_row)


def mcd_decomposed(codebook: Codebook) -> float:
    """MCD as the smaller of the amplitude-pair and same-row phase minima.

    Examples
    --------
    >>> from noncoherent_apsk.constellation import Codebook
    >>> cb = Codebook(BitAllocation(3, 1, (0, 2, 2)), [[2/3, 2/3, 1/3], [0.5, 0.5, 2**-0.5]])
    >>> round(mcd_decomposed(cb), 5)
    0.43096
    """
    return decomposed_terms(codebook).mcd


def mcd_upper_bound(alloc: BitAllocation) -> float:
    """Upper bound on the MCD attainable by an allocation.

    The smaller of a sphere-packing cap on ``2**l_u`` amplitude rows in the
    non-negative orthant, and the same-row distance of the densest PSK
    symbol.  The packing cap treats a small-distance approximation as exact,
    so it serves to order allocations during the search.

    Examples
    --------
    >>> round(mcd_upper_bound(BitAllocation(3, 1, (0, 2, 2))), 5)
    0.70711
    """
    K = alloc.K
    if K == 1:
        amp_term = 0.0 if alloc.l_u > 0 else math.inf
    else:
        log_cap = 0.5 * math.log(math.pi) + gammaln((K + 1) / 2) - gammaln(K / 2)
        amp_term = math.exp((log_cap - alloc.l_u * math.log(2.0)) / (K - 1))
    lmax = alloc.max_phase_bits
    phase_term = math.sin(math.pi / 2**lmax) if lmax > 0 else math.inf
    return float(min(amp_term, phase_term))


def pilot_psk_mcd(alloc: BitAllocation) -> float:
    """Same-row MCD when every symbol has equal amplitude ``1/sqrt(K)``.

    This is the MCD of a pilot-plus-PSK scheme with the same phase orders.
    """
    return phase_mcd_closed_form(np.full(alloc.K, 1.0 / math.sqrt(alloc.K)), alloc)

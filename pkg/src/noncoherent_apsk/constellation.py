"""Amplitude-times-PSK unitary constellations.

A transmitted block is ``v = u * p``: a non-negative unit-norm amplitude
vector ``u`` chosen from a small designed set, multiplied entrywise by a
vector of PSK phasors ``p``.  Symbol ``k`` carries ``l_phi[k]`` phase bits
and symbol 0 is the phase reference (it never carries phase bits).

Labeling convention
-------------------
A message of ``l_v`` bits is read most significant bit first.  The first
``l_u`` bits give the amplitude row in natural binary.  The following
``l_phi[k]`` bits, for ``k`` ascending, are the Gray label of symbol ``k``;
the Gray-decoded label ``g`` selects the phase ``2*pi*g / 2**l_phi[k]``.
The integer value of the whole bit string is the *encoded index* of the
point and defines the canonical ordering used for tie-breaking.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import CapacityError, InvalidInputError

__all__ = [
    "BitAllocation",
    "AmplitudeSet",
    "Codebook",
    "UnitarySignal",
    "gray_encode",
    "gray_decode",
    "bits_to_indices",
    "decode_indices_to_bits",
    "encode",
    "encode_indices",
    "chordal_distance",
    "closest_pair",
    "mcd_bruteforce",
    "pep_chernoff_bound",
    "MAX_ENUMERATED_POINTS",
]

#: Largest constellation size that brute-force routines will enumerate.
MAX_ENUMERATED_POINTS = 2**20

#: Norm slack accepted on stored amplitude rows before renormalization.
DEFAULT_EPSILON_V = 1e-4

_UNIT_NORM_TOL = 1e-12


def gray_encode(n):
    """Binary-reflected Gray code of ``n`` (works on ints and int arrays)."""
    return n ^ (n >> 1)


def gray_decode(g):
    """Inverse of :func:`gray_encode` (works on ints and int arrays)."""
    n = g
    shift = g >> 1
    if isinstance(shift, np.ndarray):
        while np.any(shift):
            n = n ^ shift
            shift = shift >> 1
        return n
    while shift:
        n ^= shift
        shift >>= 1
    return n


@dataclass(frozen=True)
class BitAllocation:
    """Split of the block's bits into amplitude and per-symbol phase bits.

    Parameters
    ----------
    K : int
        Blocklength in symbols.
    l_u : int
        Number of amplitude bits; the amplitude set has ``2**l_u`` rows.
    l_phi : sequence of int
        Phase bits of each symbol.  ``l_phi[0]`` must be 0 and the sequence
        must be non-decreasing.

    Examples
    --------
    >>> alloc = BitAllocation(3, 1, (0, 2, 2))
    >>> alloc.total_bits, alloc.phase_symbols, alloc.levels
    (5, (1, 2), (2,))
    """

    K: int
    l_u: int
    l_phi: tuple[int, ...]

    def __post_init__(self):
        try:
            K = int(self.K)
            l_u = int(self.l_u)
            l_phi = tuple(int(b) for b in self.l_phi)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"allocation fields must be integers: {exc}") from None
        if K < 1:
            raise InvalidInputError(f"K must be positive, got {K}")
        if l_u < 0:
            raise InvalidInputError(f"l_u must be non-negative, got {l_u}")
        if len(l_phi) != K:
            raise InvalidInputError(f"l_phi has {len(l_phi)} entries but K={K}")
        if any(b < 0 for b in l_phi):
            raise InvalidInputError(f"phase bits must be non-negative: {l_phi}")
        if l_phi[0] != 0:
            raise InvalidInputError("symbol 0 is the phase reference and carries no phase bits")
        if any(a > b for a, b in zip(l_phi, l_phi[1:])):
            raise InvalidInputError(f"l_phi must be non-decreasing: {l_phi}")
        if l_u + sum(l_phi) < 1:
            raise InvalidInputError("an allocation must carry at least one bit")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "l_u", l_u)
        object.__setattr__(self, "l_phi", l_phi)

    @property
    def total_bits(self) -> int:
        """Bits per block, ``l_v``."""
        return self.l_u + sum(self.l_phi)

    @property
    def phase_bits(self) -> int:
        """Bits carried by the phases alone."""
        return sum(self.l_phi)

    @property
    def max_phase_bits(self) -> int:
        """Largest per-symbol phase order, in bits."""
        return max(self.l_phi)

    @property
    def n_amplitudes(self) -> int:
        return 2**self.l_u

    @property
    def n_points(self) -> int:
        return 2**self.total_bits

    @property
    def phase_symbols(self) -> tuple[int, ...]:
        """Indices of the symbols that carry phase bits."""
        return tuple(k for k, b in enumerate(self.l_phi) if b > 0)

    @property
    def levels(self) -> tuple[int, ...]:
        """Distinct non-zero phase orders in ascending order."""
        return tuple(sorted({b for b in self.l_phi if b > 0}))

    def __str__(self) -> str:
        return f"K={self.K} l_u={self.l_u} l_phi=({','.join(map(str, self.l_phi))})"


@dataclass(frozen=True, eq=False)
class AmplitudeSet:
    """Designed amplitude vectors, one per row.

    Rows must be entrywise non-negative with norms in ``[1 - epsilon_v, 1]``.
    Rows further than ``1e-12`` from unit norm are rescaled to unit norm on
    construction; rows that already are unit norm are stored verbatim so
    that serialized values survive a round trip unchanged.
    """

    vectors: np.ndarray
    epsilon_v: float = DEFAULT_EPSILON_V

    def __post_init__(self):
        vec = np.array(self.vectors, dtype=np.float64, copy=True)
        if vec.ndim != 2 or vec.shape[0] < 1 or vec.shape[1] < 1:
            raise InvalidInputError(f"amplitude set must be a non-empty 2-D array, got shape {vec.shape}")
        if not np.all(np.isfinite(vec)):
            raise InvalidInputError("amplitude entries must be finite")
        if np.any(vec < 0):
            raise InvalidInputError("amplitude entries must be non-negative")
        norms = np.linalg.norm(vec, axis=1)
        slack = 1e-9
        if np.any(norms > 1 + slack) or np.any(norms < 1 - self.epsilon_v - slack):
            raise InvalidInputError(
                f"amplitude row norms must lie in [1-{self.epsilon_v:g}, 1], got {norms.min():.12g}..{norms.max():.12g}"
            )
        off = np.abs(norms - 1) > _UNIT_NORM_TOL
        vec[off] /= norms[off, None]
        vec.setflags(write=False)
        object.__setattr__(self, "vectors", vec)

    @property
    def n_rows(self) -> int:
        return self.vectors.shape[0]

    @property
    def K(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class UnitarySignal:
    """One transmitted block of ``K`` complex symbols with unit norm."""

    entries: np.ndarray

    def __post_init__(self):
        v = np.array(self.entries, dtype=np.complex128, copy=True).reshape(-1)
        if v.size == 0:
            raise InvalidInputError("a signal needs at least one symbol")
        if abs(np.linalg.norm(v) - 1) > 1e-9:
            raise InvalidInputError(f"signal must be unit norm, got norm {np.linalg.norm(v):.15g}")
        v.setflags(write=False)
        object.__setattr__(self, "entries", v)

    @property
    def K(self) -> int:
        return self.entries.size


@dataclass(frozen=True, eq=False)
class Codebook:
    """A bit allocation together with its designed amplitude set.

    Parameters
    ----------
    alloc : BitAllocation
    amplitudes : AmplitudeSet or array_like
        ``2**l_u`` rows of length ``K``.
    achieved_mcd : float, optional
        Minimum chordal distance of the constellation.  Computed when
        omitted; when given it must agree with the recomputed value to
        within ``1e-6``.
    metadata : dict, optional
        Free-form design record (seed, restarts, iterations, ...).
    """

    alloc: BitAllocation
    amplitudes: AmplitudeSet
    achieved_mcd: float | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        from .distance import mcd_decomposed

        amps = self.amplitudes
        if not isinstance(amps, AmplitudeSet):
            amps = AmplitudeSet(amps)
            object.__setattr__(self, "amplitudes", amps)
        if amps.n_rows != self.alloc.n_amplitudes or amps.K != self.alloc.K:
            raise InvalidInputError(
                f"amplitude set has shape {amps.vectors.shape}, allocation needs "
                f"({self.alloc.n_amplitudes}, {self.alloc.K})"
            )
        mcd = mcd_decomposed(self)
        if self.achieved_mcd is None:
            object.__setattr__(self, "achieved_mcd", mcd)
        elif abs(float(self.achieved_mcd) - mcd) > 1e-6:
            raise InvalidInputError(
                f"stated achieved_mcd {self.achieved_mcd!r} disagrees with recomputed {mcd!r}"
            )
        else:
            object.__setattr__(self, "achieved_mcd", float(self.achieved_mcd))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def K(self) -> int:
        return self.alloc.K

    @property
    def unit_amplitudes(self) -> np.ndarray:
        """Amplitude rows as a read-only ``(2**l_u, K)`` array."""
        return self.amplitudes.vectors

    @functools.cached_property
    def phase_orders(self) -> np.ndarray:
        """``l_phi`` as an int64 array (shared with the compiled detectors)."""
        out = np.asarray(self.alloc.l_phi, dtype=np.int64)
        out.setflags(write=False)
        return out

    @functools.cached_property
    def _point_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.alloc.n_points
        if n > MAX_ENUMERATED_POINTS:
            raise CapacityError(f"{n} points exceed the enumeration guard of {MAX_ENUMERATED_POINTS}")
        index = np.arange(n, dtype=np.int64)
        amp, phase = _split_index(self.alloc, index)
        angles = 2 * np.pi * phase / (2.0 ** self.phase_orders)
        points = self.unit_amplitudes[amp] * np.exp(1j * angles)
        for arr in (amp, phase, points):
            arr.setflags(write=False)
        return amp, phase, points

    @property
    def points(self) -> np.ndarray:
        """All constellation points in encoded-index order, ``(2**l_v, K)``."""
        return self._point_tables[2]

    @property
    def point_amplitude_index(self) -> np.ndarray:
        return self._point_tables[0]

    @property
    def point_phase_index(self) -> np.ndarray:
        return self._point_tables[1]


def _bit_fields(alloc: BitAllocation) -> list[tuple[int, int]]:
    """(offset, width) of every field, amplitude first then symbols 0..K-1."""
    fields = [(0, alloc.l_u)]
    offset = alloc.l_u
    for b in alloc.l_phi:
        fields.append((offset, b))
        offset += b
    return fields


def _split_index(alloc: BitAllocation, index: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map encoded indices to (amplitude index, phase indices)."""
    total = alloc.total_bits
    fields = _bit_fields(alloc)
    labels = []
    for offset, width in fields:
        shift = total - offset - width
        labels.append((index >> shift) & ((1 << width) - 1))
    amp = labels[0]
    phase = np.stack([gray_decode(lab) for lab in labels[1:]], axis=-1)
    return amp, phase


def _join_index(alloc: BitAllocation, amp: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_split_index`."""
    total = alloc.total_bits
    fields = _bit_fields(alloc)
    index = np.zeros(np.shape(amp), dtype=np.int64)
    labels = [np.asarray(amp, dtype=np.int64)] + [
        gray_encode(np.asarray(phase[..., k], dtype=np.int64)) for k in range(alloc.K)
    ]
    for (offset, width), lab in zip(fields, labels):
        index |= lab << (total - offset - width)
    return index


def index_to_bits(index: np.ndarray, n_bits: int) -> np.ndarray:
    """Expand encoded indices into bit arrays, most significant bit first."""
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    return ((np.asarray(index, dtype=np.int64)[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    """Inverse of :func:`index_to_bits` along the last axis."""
    bits = np.asarray(bits, dtype=np.int64)
    n_bits = bits.shape[-1]
    weights = np.int64(1) << np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def _check_bits(alloc: BitAllocation, bits: Sequence[int]) -> np.ndarray:
    arr = np.asarray(bits)
    if arr.ndim != 1 or arr.size != alloc.total_bits:
        raise InvalidInputError(f"expected {alloc.total_bits} bits, got shape {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidInputError("bits must be 0 or 1")
    return arr.astype(np.uint8)


def bits_to_indices(alloc: BitAllocation, bits: Sequence[int]) -> tuple[int, np.ndarray]:
    """Split a message into its amplitude index and per-symbol phase indices.

    Returns
    -------
    amp_index : int
    phase_indices : ndarray of int64, shape (K,)
        ``phase_indices[k]`` selects the phase ``2*pi*g / 2**l_phi[k]``.
    """
    arr = _check_bits(alloc, bits)
    amp, phase = _split_index(alloc, np.array([bits_to_index(arr)]))
    return int(amp[0]), phase[0]


def decode_indices_to_bits(codebook_or_alloc: Codebook | BitAllocation, amp_index: int,
                           phase_indices: Sequence[int]) -> np.ndarray:
    """Message bits that :func:`encode` maps to the given indices.

    Examples
    --------
    >>> alloc = BitAllocation(3, 0, (0, 2, 2))
    >>> decode_indices_to_bits(alloc, 0, [0, 1, 2]).tolist()
    [0, 1, 1, 1]
    """
    alloc = codebook_or_alloc.alloc if isinstance(codebook_or_alloc, Codebook) else codebook_or_alloc
    phase = np.asarray(phase_indices, dtype=np.int64).reshape(-1)
    if phase.size != alloc.K:
        raise InvalidInputError(f"expected {alloc.K} phase indices, got {phase.size}")
    if not 0 <= int(amp_index) < alloc.n_amplitudes:
        raise InvalidInputError(f"amplitude index {amp_index} outside [0, {alloc.n_amplitudes})")
    orders = 2 ** np.asarray(alloc.l_phi, dtype=np.int64)
    if np.any(phase < 0) or np.any(phase >= orders):
        raise InvalidInputError(f"phase indices {phase.tolist()} outside the PSK orders {orders.tolist()}")
    index = _join_index(alloc, np.array([int(amp_index)]), phase[None, :])
    return index_to_bits(index, alloc.total_bits)[0]


def encode_indices(codebook: Codebook, amp_index: int, phase_indices: Sequence[int]) -> UnitarySignal:
    """Signal with the given amplitude row and phase indices."""
    bits = decode_indices_to_bits(codebook, amp_index, phase_indices)
    return encode(codebook, bits)


def encode(codebook: Codebook, bits: Sequence[int]) -> UnitarySignal:
    """Map ``l_v`` message bits to a unit-norm signal ``u * p``.

    Examples
    --------
    >>> cb = Codebook(BitAllocation(2, 0, (0, 1)), [[2**-0.5, 2**-0.5]])
    >>> np.round(encode(cb, [1]).entries, 6)
    array([ 0.707107+0.j, -0.707107+0.j])
    """
    alloc = codebook.alloc
    amp, phase = bits_to_indices(alloc, bits)
    angles = 2 * np.pi * phase / (2.0 ** np.asarray(alloc.l_phi))
    return UnitarySignal(codebook.unit_amplitudes[amp] * np.exp(1j * angles))


def _as_vector(v: Any) -> np.ndarray:
    if isinstance(v, UnitarySignal):
        return v.entries
    return np.asarray(v, dtype=np.complex128).reshape(-1)


def chordal_distance(v_a: UnitarySignal | np.ndarray, v_b: UnitarySignal | np.ndarray) -> float:
    """Chordal distance ``sqrt(1 - |v_a^H v_b|^2)`` between unit-norm blocks.

    Examples
    --------
    >>> round(chordal_distance([2/3, 2/3, 1/3], [2/3, 2j/3, 1/3]), 5)
    0.70273
    """
    a = _as_vector(v_a)
    b = _as_vector(v_b)
    if a.shape != b.shape:
        raise InvalidInputError(f"dimension mismatch: {a.size} vs {b.size}")
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1) > 1e-9:
            raise InvalidInputError("chordal distance needs unit-norm arguments")
    inner = abs(np.vdot(a, b))
    return math.sqrt(max(0.0, 1.0 - inner * inner))


def closest_pair(codebook: Codebook, max_points: int = MAX_ENUMERATED_POINTS) -> tuple[int, int, float]:
    """Encoded indices ``(i, j)``, ``i < j``, of a minimum-distance pair and its distance.

    Every pair of distinct points is compared; work grows with the square
    of the constellation size.
    """
    n = codebook.alloc.n_points
    if n > max_points:
        raise CapacityError(f"{n} points exceed the enumeration guard of {max_points}")
    pts = codebook.points
    conj = pts.conj().T
    best = -1.0
    best_pair = (0, 1)
    chunk = max(1, 2**22 // max(n, 1))
    for start in range(0, n - 1, chunk):
        stop = min(n, start + chunk)
        mag = np.abs(pts[start:stop] @ conj)
        # keep only pairs with j > i
        rows = np.arange(start, stop)
        mag[np.arange(n)[None, :] <= rows[:, None]] = -1.0
        flat = int(np.argmax(mag))
        val = float(mag.flat[flat])
        if val > best:
            best = val
            best_pair = (start + flat // n, flat % n)
    return best_pair[0], best_pair[1], math.sqrt(max(0.0, 1.0 - min(best, 1.0) ** 2))


def mcd_bruteforce(codebook: Codebook, max_points: int = MAX_ENUMERATED_POINTS) -> float:
    """Minimum chordal distance over all pairs of distinct constellation points.

    Raises
    ------
    CapacityError
        If the constellation has more than ``max_points`` points.
    """
    return closest_pair(codebook, max_points)[2]


def pep_chernoff_bound(d: float, sigma2: float, M: int) -> float:
    """Chernoff bound on the pairwise error probability of two unitary signals.

    Parameters
    ----------
    d : float
        Chordal distance of the pair, in ``[0, 1]``.
    sigma2 : float
        Per-entry noise variance (positive).
    M : int
        Number of receive antennas.

    Examples
    --------
    >>> round(pep_chernoff_bound(1.0, 1.0, 1), 4)
    0.4444
    """
    if not 0.0 <= d <= 1.0:
        raise InvalidInputError(f"distance must lie in [0, 1], got {d}")
    if not sigma2 > 0:
        raise InvalidInputError(f"noise variance must be positive, got {sigma2}")
    if int(M) != M or M < 1:
        raise InvalidInputError(f"M must be a positive integer, got {M}")
    base = 1.0 + d * d / (4.0 * sigma2 * (1.0 + sigma2))
    return 0.5 * base ** (-int(M))

"""Non-coherent receivers for amplitude-times-PSK unitary constellations.

Every detector works on the Gram matrix ``G = Y^H Y`` of the received
``M x K`` block, which is a sufficient statistic for unit-norm signals.
The maximum-likelihood metric of a candidate ``v`` is
``v^T G v* = ||Y v*||**2``.

Receivers
---------
``ml_exhaustive``
    Enumerates the whole constellation.
``iuap``
    Alternates an exhaustive search over amplitude rows with a phase
    detector for the current rows.  Available phase detectors are
    ``"pr"`` (sorted decision-feedback differential detection, committing
    the most reliable symbol first), ``"improved-pr"`` (the same with
    look-ahead terms from undetected lower-order symbols) and
    ``"exhaustive"``.

Conventions
-----------
Phase decisions are returned as PSK indices: index ``g`` of symbol ``k``
means the phase ``2*pi*g / 2**l_phi[k]``.  Symbols without phase bits are
committed to phase 0 before any sorting.  Ties are resolved toward the
smallest index everywhere, and :func:`psk_decision` rounds a phase that
lies exactly halfway between two points toward zero.
"""

from __future__ import annotations

import math
import weakref
from typing import Sequence

import numpy as np
from numba import njit

from .constellation import MAX_ENUMERATED_POINTS, Codebook, decode_indices_to_bits
from .errors import CapacityError, InvalidInputError, InvalidStateError

__all__ = [
    "DetectionOutcome",
    "PHASE_ALGORITHMS",
    "gram",
    "ml_metric",
    "ml_exhaustive",
    "detect_amplitude",
    "mu",
    "psk_decision",
    "pr_sort_dfdd",
    "eta",
    "improved_pr_sort_dfdd",
    "exhaustive_phase",
    "iuap",
]

PHASE_ALGORITHMS = {"pr": 1, "improved-pr": 2, "exhaustive": 3}
_ML = 0
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _psk_round(mu_re, mu_im, bits):
    """Closest and second-closest PSK index for the phasor ``mu``."""
    n = 1 << bits
    if mu_re == 0.0 and mu_im == 0.0:
        return 0, 1 % n
    ang = math.atan2(mu_im, mu_re)
    if ang <= -math.pi:
        ang += 2.0 * math.pi
    x = ang * n / (2.0 * math.pi)
    ax = abs(x)
    r = math.ceil(ax - 0.5)
    if x < 0:
        r = -r
    if x > r:
        s = r + 1
    elif x < r:
        s = r - 1
    else:
        s = r + 1
    return int(r) % n, int(s) % n


@njit(cache=True, nogil=True)
def _quad_form(G, v):
    """Real value of ``v^T G v*`` for Hermitian ``G``."""
    K = v.shape[0]
    total = 0.0
    for i in range(K):
        vi = v[i]
        total += (vi.real * vi.real + vi.imag * vi.imag) * G[i, i].real
        for j in range(i + 1, K):
            total += 2.0 * (vi * G[i, j] * v[j].conjugate()).real
    return total


@njit(cache=True, nogil=True)
def _objective(G, u, phasor, phase_idx):
    K = u.shape[0]
    v = np.empty(K, dtype=np.complex128)
    for k in range(K):
        v[k] = u[k] * phasor[k, phase_idx[k]]
    return _quad_form(G, v)


@njit(cache=True, nogil=True)
def _search_block(G, U, amp_lo, amp_hi, lphi, label_phasor, label_index, best_phase):
    """Exhaustive search over amplitude rows ``[amp_lo, amp_hi)`` and all phases.

    Candidates are visited in encoded-index order and only a strictly
    larger metric replaces the incumbent.
    """
    K = U.shape[1]
    phase_bits = 0
    for k in range(K):
        phase_bits += lphi[k]
    n_phase = 1 << phase_bits
    v = np.empty(K, dtype=np.complex128)
    best = -np.inf
    best_amp = amp_lo
    best_label = 0
    for a in range(amp_lo, amp_hi):
        for n in range(n_phase):
            shift = phase_bits
            for k in range(K):
                b = lphi[k]
                shift -= b
                lab = (n >> shift) & ((1 << b) - 1)
                v[k] = U[a, k] * label_phasor[k, lab]
            val = _quad_form(G, v)
            if val > best:
                best = val
                best_amp = a
                best_label = n
    shift = phase_bits
    for k in range(K):
        b = lphi[k]
        shift -= b
        best_phase[k] = label_index[k, (best_label >> shift) & ((1 << b) - 1)]
    return best_amp, best


@njit(cache=True, nogil=True)
def _detect_amplitude(G, U, phasor, phase_idx):
    R, K = U.shape
    # A is symmetric, so only its upper triangle is kept (off-diagonal doubled)
    A = np.empty((K, K))
    for i in range(K):
        pi = phasor[i, phase_idx[i]]
        A[i, i] = G[i, i].real
        for j in range(i + 1, K):
            A[i, j] = 2.0 * (pi * G[i, j] * phasor[j, phase_idx[j]].conjugate()).real
    best = -np.inf
    best_r = 0
    for r in range(R):
        val = 0.0
        for i in range(K):
            ui = U[r, i]
            acc = A[i, i] * ui
            for j in range(i + 1, K):
                acc += A[i, j] * U[r, j]
            val += ui * acc
        if val > best:
            best = val
            best_r = r
    return best_r


@njit(cache=True, nogil=True)
def _energy_amplitude(G, U):
    R, K = U.shape
    best = -np.inf
    best_r = 0
    for r in range(R):
        val = 0.0
        for k in range(K):
            val += G[k, k].real * U[r, k] * U[r, k]
        if val > best:
            best = val
            best_r = r
    return best_r


@njit(cache=True, nogil=True)
def _commit(Z, mu_re, mu_im, detected, phase_idx, phasor, k, g):
    """Record symbol ``k`` at phase index ``g`` and fold it into every mu."""
    detected[k] = True
    phase_idx[k] = g
    p = phasor[k, g]
    K = Z.shape[0]
    for d in range(K):
        if not detected[d]:
            z = Z[k, d] * p
            mu_re[d] += z.real
            mu_im[d] += z.imag


@njit(cache=True, nogil=True)
def _dfdd(Z, lphi, phasor, improved, phase_idx, detected, mu_re, mu_im, eta_tab):
    """Sorted decision-feedback phase detection on the scaled Gram ``Z``.

    ``detected``, ``mu_re``, ``mu_im`` (length K) and ``eta_tab``
    (K x K x max order) are scratch arrays; their contents on entry are
    ignored.
    """
    K = Z.shape[0]
    remaining = 0
    for k in range(K):
        detected[k] = False
        mu_re[k] = 0.0
        mu_im[k] = 0.0
        phase_idx[k] = 0
        if lphi[k] > 0:
            remaining += 1
    for k in range(K):
        if lphi[k] == 0:
            _commit(Z, mu_re, mu_im, detected, phase_idx, phasor, k, 0)

    if improved:
        for d in range(K):
            nd = 1 << lphi[d]
            for q in range(K):
                if lphi[q] == 0 or lphi[q] >= lphi[d]:
                    continue
                nq = 1 << lphi[q]
                z = Z[d, q]
                for gd in range(nd):
                    w = z * phasor[d, gd]
                    best = -np.inf
                    for gq in range(nq):
                        val = (w * phasor[q, gq].conjugate()).real
                        if val > best:
                            best = val
                    eta_tab[d, q, gd] = best

    while remaining > 0:
        best_rel = -np.inf
        best_d = -1
        best_g = 0
        for d in range(K):
            if detected[d]:
                continue
            bits = lphi[d]
            use_eta = False
            if improved:
                for q in range(K):
                    if q != d and not detected[q] and lphi[q] < bits:
                        use_eta = True
                        break
            if use_eta:
                nd = 1 << bits
                first = -np.inf
                second = -np.inf
                g1 = 0
                for g in range(nd):
                    p = phasor[d, g]
                    val = mu_re[d] * p.real + mu_im[d] * p.imag
                    for q in range(K):
                        if q != d and not detected[q] and lphi[q] < bits:
                            val += eta_tab[d, q, g]
                    if val > first:
                        second = first
                        first = val
                        g1 = g
                    elif val > second:
                        second = val
                rel = first - second
                g_close = g1
            else:
                g_close, g_next = _psk_round(mu_re[d], mu_im[d], bits)
                p1 = phasor[d, g_close]
                p2 = phasor[d, g_next]
                rel = (mu_re[d] * p1.real + mu_im[d] * p1.imag) - (mu_re[d] * p2.real + mu_im[d] * p2.imag)
            if rel > best_rel:
                best_rel = rel
                best_d = d
                best_g = g_close
        _commit(Z, mu_re, mu_im, detected, phase_idx, phasor, best_d, best_g)
        remaining -= 1


@njit(cache=True, nogil=True)
def _phase_step(G, u, lphi, phasor, label_phasor, label_index, alg, phase_idx, work):
    K = u.shape[0]
    if alg == 3:
        U1 = np.empty((1, K))
        for k in range(K):
            U1[0, k] = u[k]
        _search_block(G, U1, 0, 1, lphi, label_phasor, label_index, phase_idx)
        return
    Z, detected, mu_re, mu_im, eta_tab = work
    for i in range(K):
        for j in range(K):
            Z[i, j] = G[i, j] * (u[i] * u[j])
    _dfdd(Z, lphi, phasor, alg == 2, phase_idx, detected, mu_re, mu_im, eta_tab)


@njit(cache=True, nogil=True)
def _workspace(K, max_order):
    """Scratch arrays shared by the phase steps of one block."""
    return (np.empty((K, K), dtype=np.complex128), np.empty(K, dtype=np.bool_),
            np.empty(K), np.empty(K), np.empty((K, K, max_order)))


@njit(cache=True, nogil=True)
def _iuap(G, U, lphi, phasor, label_phasor, label_index, alg, max_iters, phase_idx):
    """Alternating amplitude/phase detection with a strict-ascent guard.

    Returns ``(amplitude index, iterations, objective)``; the phase
    decision is written to ``phase_idx``.
    """
    K = U.shape[1]
    work = _workspace(K, phasor.shape[1])
    amp = _energy_amplitude(G, U)
    _phase_step(G, U[amp], lphi, phasor, label_phasor, label_index, alg, phase_idx, work)
    obj = _objective(G, U[amp], phasor, phase_idx)
    iterations = 1
    if U.shape[0] == 1:
        return amp, iterations, obj
    trial = np.empty(K, dtype=np.int64)
    while iterations < max_iters:
        new_amp = _detect_amplitude(G, U, phasor, phase_idx)
        if new_amp == amp:
            break
        _phase_step(G, U[new_amp], lphi, phasor, label_phasor, label_index, alg, trial, work)
        new_obj = _objective(G, U[new_amp], phasor, trial)
        if not new_obj > obj:
            break
        amp = new_amp
        obj = new_obj
        for k in range(K):
            phase_idx[k] = trial[k]
        iterations += 1
    return amp, iterations, obj


@njit(cache=True, nogil=True)
def _detect_batch(grams, U, lphi, phasor, label_phasor, label_index, alg, max_iters, amps, phases):
    """Run one detector over a stack of Gram matrices."""
    R = U.shape[0]
    for t in range(grams.shape[0]):
        G = grams[t]
        if alg == 0:
            a, _ = _search_block(G, U, 0, R, lphi, label_phasor, label_index, phases[t])
            amps[t] = a
        else:
            a, _, _ = _iuap(G, U, lphi, phasor, label_phasor, label_index, alg, max_iters, phases[t])
            amps[t] = a


# ---------------------------------------------------------------------------
# per-codebook tables
# ---------------------------------------------------------------------------

class _Tables:
    __slots__ = ("U", "lphi", "phasor", "label_phasor", "label_index", "alloc", "gram_shape", "kernel_args")

    def __init__(self, codebook: Codebook):
        alloc = codebook.alloc
        self.alloc = alloc
        self.U = np.ascontiguousarray(codebook.unit_amplitudes, dtype=np.float64)
        self.lphi = np.asarray(alloc.l_phi, dtype=np.int64)
        width = 2 ** alloc.max_phase_bits
        self.phasor = np.zeros((alloc.K, width), dtype=np.complex128)
        self.label_phasor = np.zeros((alloc.K, width), dtype=np.complex128)
        self.label_index = np.zeros((alloc.K, width), dtype=np.int64)
        for k, b in enumerate(alloc.l_phi):
            n = 2**b
            g = np.arange(n)
            self.phasor[k, :n] = _psk_points(b)
            labels = g ^ (g >> 1)
            self.label_index[k, labels] = g
            self.label_phasor[k, labels] = self.phasor[k, :n]
        self.gram_shape = (alloc.K, alloc.K)
        self.kernel_args = (self.U, self.lphi, self.phasor, self.label_phasor, self.label_index)


_TABLE_CACHE: "weakref.WeakKeyDictionary[Codebook, _Tables]" = weakref.WeakKeyDictionary()


# Detectors are usually called many times in a row with the same codebook;
# checking the most recent one first avoids the weak-dictionary lookup.
_LAST_TABLES: list = [lambda: None, None]


def _tables(codebook: Codebook) -> _Tables:
    if _LAST_TABLES[0]() is codebook:
        return _LAST_TABLES[1]
    tab = _TABLE_CACHE.get(codebook)
    if tab is None:
        tab = _Tables(codebook)
        _TABLE_CACHE[codebook] = tab
    _LAST_TABLES[0] = weakref.ref(codebook)
    _LAST_TABLES[1] = tab
    return tab


def _psk_points(bits: int) -> np.ndarray:
    n = 2**bits
    return np.exp(1j * _TWO_PI * np.arange(n) / n)


def _psk_phasor_table(lphi: Sequence[int]) -> np.ndarray:
    width = 2 ** max(lphi)
    table = np.zeros((len(lphi), width), dtype=np.complex128)
    for k, b in enumerate(lphi):
        table[k, : 2**b] = _psk_points(b)
    return table


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

class DetectionOutcome:
    """Decision of a detector for one received block.

    Attributes
    ----------
    amp_index : int
    phase_indices : ndarray of int64
    iterations : int
        Accepted amplitude/phase passes (1 for exhaustive ML).
    objective : float
        ``v^T G v*`` of the decided signal.
    """

    __slots__ = ("amp_index", "phase_indices", "iterations", "objective", "_alloc")

    def __init__(self, amp_index, phase_indices, iterations, objective, alloc):
        self.amp_index = int(amp_index)
        self.phase_indices = phase_indices
        self.iterations = int(iterations)
        self.objective = float(objective)
        self._alloc = alloc

    @property
    def bits(self) -> np.ndarray:
        """Message bits of the decision."""
        return decode_indices_to_bits(self._alloc, self.amp_index, self.phase_indices)

    def same_decision(self, other: "DetectionOutcome") -> bool:
        return self.amp_index == other.amp_index and np.array_equal(self.phase_indices, other.phase_indices)

    def __repr__(self) -> str:
        return (f"DetectionOutcome(amp_index={self.amp_index}, phase_indices={self.phase_indices.tolist()}, "
                f"iterations={self.iterations}, objective={self.objective:.6g})")


def gram(Y) -> np.ndarray:
    """Gram matrix ``Y^H Y`` of an ``M x K`` received block."""
    Y = np.asarray(Y, dtype=np.complex128)
    if Y.ndim == 1:
        Y = Y[:, None]
    return Y.conj().T @ Y


_COMPLEX = np.dtype(np.complex128)


def _check_gram(G, K: int) -> np.ndarray:
    if type(G) is np.ndarray and G.dtype is _COMPLEX and G.shape == (K, K):
        return G
    G = np.asarray(G, dtype=np.complex128)
    if G.shape != (K, K):
        raise InvalidInputError(f"Gram matrix has shape {G.shape}, expected {(K, K)}")
    return G


def ml_metric(G, v) -> float:
    """Maximum-likelihood metric ``v^T G v*`` of the candidate ``v``."""
    v = np.asarray(getattr(v, "entries", v), dtype=np.complex128)
    return float(np.real(v @ np.asarray(G) @ v.conj()))


def ml_exhaustive(G, codebook: Codebook) -> DetectionOutcome:
    """Maximum-likelihood decision by enumerating all ``2**l_v`` points.

    Ties resolve to the smallest encoded index.
    """
    tab = _tables(codebook)
    if codebook.alloc.n_points > MAX_ENUMERATED_POINTS:
        raise CapacityError(f"{codebook.alloc.n_points} points exceed the enumeration guard")
    G = _check_gram(G, codebook.K)
    phase = np.empty(codebook.K, dtype=np.int64)
    amp, obj = _search_block(G, tab.U, 0, tab.U.shape[0], tab.lphi, tab.label_phasor, tab.label_index, phase)
    return DetectionOutcome(amp, phase, 1, obj, tab.alloc)


def detect_amplitude(G, p_tilde, codebook: Codebook) -> int:
    """Amplitude row maximizing the metric for fixed phasors ``p_tilde``.

    Parameters
    ----------
    G : array_like, shape (K, K)
    p_tilde : array_like of complex, shape (K,)
        Unit-modulus phasors of the phase hypothesis.
    codebook : Codebook
    """
    tab = _tables(codebook)
    G = _check_gram(G, codebook.K)
    p = np.asarray(p_tilde, dtype=np.complex128).reshape(-1)
    if p.size != codebook.K or np.any(np.abs(np.abs(p) - 1) > 1e-9):
        raise InvalidInputError("p_tilde must hold K unit-modulus phasors")
    return int(_detect_amplitude(G, tab.U, p[:, None], np.zeros(codebook.K, dtype=np.int64)))


def mu(Z, detected: Sequence[tuple[int, float]], d: int) -> complex:
    """Decision-feedback phasor ``sum_k Z[k, d] exp(1j * phase_k)`` over detected symbols.

    Parameters
    ----------
    Z : array_like, shape (K, K)
        Gram matrix scaled entrywise by ``u u^T``.
    detected : sequence of (index, phase)
        Committed symbols with their phases in radians.
    d : int
        Undetected symbol.
    """
    if not detected:
        raise InvalidStateError("the detected set is empty; symbol 0 is always committed first")
    Z = np.asarray(Z)
    if any(k == d for k, _ in detected):
        raise InvalidStateError(f"symbol {d} is already detected")
    return complex(sum(Z[k, d] * np.exp(1j * phase) for k, phase in detected))


def psk_decision(mu_d: complex, order_bits: int) -> tuple[float, float]:
    """Closest and second-closest ``2**order_bits``-PSK phases to ``angle(mu_d)``.

    Returns
    -------
    closest, second : float
        Phases in ``[0, 2*pi)``.  The second point is the neighbour on the
        side of ``angle(mu_d)``; for ``mu_d = 0`` the closest phase is 0 and
        the second is the next point counter-clockwise.

    Examples
    --------
    >>> [round(x, 4) for x in psk_decision(np.exp(1j * np.pi / 3), 2)]
    [1.5708, 0.0]
    """
    if int(order_bits) < 1:
        raise InvalidInputError("order_bits must be at least 1")
    mu_d = complex(mu_d)
    a, b = _psk_round(mu_d.real, mu_d.imag, int(order_bits))
    n = 2 ** int(order_bits)
    return _TWO_PI * a / n, _TWO_PI * b / n


def _phase_detect(Z, lphi: Sequence[int], improved: bool) -> np.ndarray:
    Z = np.asarray(Z, dtype=np.complex128)
    K = len(lphi)
    if Z.shape != (K, K):
        raise InvalidInputError(f"Z has shape {Z.shape}, expected {(K, K)}")
    lphi_arr = np.asarray(lphi, dtype=np.int64)
    out = np.empty(K, dtype=np.int64)
    phasor = _psk_phasor_table(lphi)
    Zw, detected, mu_re, mu_im, eta_tab = _workspace(K, phasor.shape[1])
    _dfdd(Z, lphi_arr, phasor, improved, out, detected, mu_re, mu_im, eta_tab)
    return out


def _orders(alloc_or_lphi) -> tuple[int, ...]:
    return tuple(getattr(alloc_or_lphi, "l_phi", alloc_or_lphi))


def pr_sort_dfdd(Z, alloc) -> np.ndarray:
    """Sorted decision-feedback differential phase detection.

    Starting from the committed reference symbols, every round computes
    the feedback phasor of each undetected symbol, its closest PSK phase
    and the metric gap to the second-closest phase, then commits the symbol
    with the largest gap.

    Parameters
    ----------
    Z : array_like, shape (K, K)
        Gram matrix scaled entrywise by ``u u^T`` for the amplitude
        hypothesis.
    alloc : BitAllocation or sequence of int

    Returns
    -------
    ndarray of int64
        PSK index of every symbol.
    """
    return _phase_detect(Z, _orders(alloc), improved=False)


def improved_pr_sort_dfdd(Z, alloc) -> np.ndarray:
    """:func:`pr_sort_dfdd` with look-ahead terms from lower-order symbols.

    For an undetected symbol ``d`` the metric of each candidate phase adds
    :func:`eta` for every undetected symbol of lower phase order.  When no
    such symbol remains the decision is exactly the one of
    :func:`pr_sort_dfdd`.
    """
    return _phase_detect(Z, _orders(alloc), improved=True)


def eta(z_dq: complex, phi_d: float, order_bits_q: int) -> float:
    """Best-case contribution ``max_phi_q Re{z_dq exp(1j (phi_d - phi_q))}`` of an undetected symbol.

    Examples
    --------
    >>> round(eta(1.0, np.pi / 4, 1), 5)
    0.70711
    """
    if int(order_bits_q) < 1:
        raise InvalidInputError("order_bits_q must be at least 1")
    w = complex(z_dq) * np.exp(1j * phi_d)
    return float(np.max((w * _psk_points(int(order_bits_q)).conj()).real))


def exhaustive_phase(G, u, alloc) -> np.ndarray:
    """Phase indices maximizing the metric for the fixed amplitude row ``u``."""
    lphi = _orders(alloc)
    K = len(lphi)
    G = _check_gram(G, K)
    U1 = np.asarray(u, dtype=np.float64).reshape(1, K)
    lphi_arr = np.asarray(lphi, dtype=np.int64)
    width = 2 ** max(lphi)
    label_phasor = np.zeros((K, width), dtype=np.complex128)
    label_index = np.zeros((K, width), dtype=np.int64)
    for k, b in enumerate(lphi):
        g = np.arange(2**b)
        label_phasor[k, g ^ (g >> 1)] = _psk_points(b)
        label_index[k, g ^ (g >> 1)] = g
    out = np.empty(K, dtype=np.int64)
    _search_block(G, U1, 0, 1, lphi_arr, label_phasor, label_index, out)
    return out


def iuap(G, codebook: Codebook, phase_alg: str = "improved-pr", max_iters: int = 10) -> DetectionOutcome:
    """Iterative amplitude/phase detection.

    The amplitude row is initialized from the diagonal of ``G`` alone.
    Each iteration detects phases for the current row, then re-detects the
    row for those phases; a new (row, phases) pair is accepted only if it
    strictly increases the metric.  The loop also stops at a fixed point or
    after ``max_iters`` passes.

    Parameters
    ----------
    G : array_like, shape (K, K)
    codebook : Codebook
    phase_alg : {"pr", "improved-pr", "exhaustive"}
    max_iters : int
    """
    try:
        alg = PHASE_ALGORITHMS[phase_alg]
    except KeyError:
        raise InvalidInputError(f"unknown phase algorithm {phase_alg!r}") from None
    if max_iters < 1:
        raise InvalidInputError("max_iters must be at least 1")
    tab = _tables(codebook)
    if not (type(G) is np.ndarray and G.dtype is _COMPLEX and G.shape == tab.gram_shape):
        G = _check_gram(G, codebook.K)
    phase = np.empty(tab.gram_shape[0], dtype=np.int64)
    amp, iterations, obj = _iuap(G, *tab.kernel_args, alg, int(max_iters), phase)
    return DetectionOutcome(amp, phase, iterations, obj, tab.alloc)


def detect_batch(grams: np.ndarray, codebook: Codebook, detector: str,
                 max_iters: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Apply a detector to a stack of Gram matrices.

    Parameters
    ----------
    grams : ndarray, shape (T, K, K)
    codebook : Codebook
    detector : {"ml", "iuap-pr", "iuap-improved-pr", "iuap-exhaustive-phase"}
    max_iters : int

    Returns
    -------
    amp_indices : ndarray of int64, shape (T,)
    phase_indices : ndarray of int64, shape (T, K)
    """
    codes = {"ml": _ML, "iuap-pr": 1, "iuap-improved-pr": 2, "iuap-exhaustive-phase": 3}
    try:
        alg = codes[detector]
    except KeyError:
        raise InvalidInputError(f"unknown detector {detector!r}") from None
    if alg == _ML and codebook.alloc.n_points > MAX_ENUMERATED_POINTS:
        raise CapacityError(f"{codebook.alloc.n_points} points exceed the enumeration guard")
    tab = _tables(codebook)
    grams = np.ascontiguousarray(grams, dtype=np.complex128)
    T = grams.shape[0]
    amps = np.empty(T, dtype=np.int64)
    phases = np.empty((T, codebook.K), dtype=np.int64)
    _detect_batch(grams, tab.U, tab.lphi, tab.phasor, tab.label_phasor, tab.label_index,
                  alg, int(max_iters), amps, phases)
    return amps, phases

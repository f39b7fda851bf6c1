"""Amplitude-set design by successive convex approximation.

For a fixed bit allocation the designer maximizes the constellation's
minimum chordal distance over the amplitude rows.  Working with the squared
distance ``t``, every requirement becomes convex once the few non-convex
pieces are replaced by first-order expansions around the current rows:

* phase terms: for every phase symbol ``k`` and phase order ``l`` the
  energies on complementary symbol subsets must stay below
  ``(sqrt(1 - t / sin(pi/2**l)**2) + 1) / 2``.  An auxiliary ``w_l`` with
  ``w_l**2 + t / sin(pi/2**l)**2 <= 1`` carries the square root so that
  the caps read ``mask . u**2 <= (w_l + 1) / 2``;
* amplitude pairs: ``(u_a . u_b)**2 <= 1 - t``.  Writing ``u_a . u_b`` as a
  difference of two convex quadratics and linearizing the subtracted one
  gives a convex upper estimate ``q_ab(u) <= r`` with ``r**2 + t <= 1``.
  The estimate is exact at the expansion point and never below the true
  inner product, so every solution is feasible for the original problem;
* row norms: ``||u||**2 <= 1`` together with the linearized lower bound
  ``2 ubar . u - ||ubar||**2 >= 1 - epsilon_v``.

Each convex subproblem is solved by a compiled primal-dual interior-point
method (:mod:`noncoherent_apsk._ipm`).
"""

from __future__ import annotations

import functools
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._ipm import solve_qcqp
from .constellation import AmplitudeSet, BitAllocation, Codebook
from .distance import amplitude_pair_distance, mcd_upper_bound
from .errors import DesignFailureError, InvalidInputError, SolverFailureError

__all__ = [
    "DesignConfig",
    "ConvexSubproblem",
    "build_subproblem",
    "solve_subproblem",
    "design_amplitude_set",
    "enumerate_allocations",
    "search_bit_allocations",
    "SearchEntry",
    "cap_rhs",
]

MAX_AMPLITUDE_ROWS = 256


@dataclass(frozen=True)
class DesignConfig:
    """Settings of the amplitude-set designer.

    Attributes
    ----------
    epsilon_v : float
        Allowed shortfall of the squared row norm below 1.
    sca_tol : float
        A restart stops once ``t`` changes by less than this between
        iterations.
    sca_max_iters : int
        Iteration cap per restart.
    restarts : int
        Independent random initializations; the best result is kept.
    subproblem_tol : float
        Duality-gap and stationarity target of the convex solver.
    seed : int
        Root seed; restart ``i`` draws from the substream ``(seed, i)``.
    tie_tolerance : float
        MCD difference below which two allocations count as tied in
        :func:`search_bit_allocations`.
    """

    epsilon_v: float = 1e-4
    sca_tol: float = 1e-6
    sca_max_iters: int = 100
    restarts: int = 16
    subproblem_tol: float = 1e-10
    seed: int = 0
    tie_tolerance: float = 1e-4

    def __post_init__(self):
        for name in ("epsilon_v", "sca_tol", "subproblem_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive")
        if not self.epsilon_v < 1:
            raise InvalidInputError("epsilon_v must be below 1")
        if self.tie_tolerance < 0:
            raise InvalidInputError("tie_tolerance must be non-negative")
        if int(self.restarts) < 1:
            raise InvalidInputError("restarts must be at least 1")
        if int(self.sca_max_iters) < 1:
            raise InvalidInputError("sca_max_iters must be at least 1")
        if int(self.seed) < 0:
            raise InvalidInputError("seed must be non-negative")


def cap_rhs(t: float, order_bits: int) -> float:
    """Energy cap ``(sqrt(1 - t / sin(pi/2**order_bits)**2) + 1) / 2`` of a phase term.

    Values of ``t`` beyond ``sin(pi/2**order_bits)**2`` are outside the
    domain and return ``nan``.

    Examples
    --------
    >>> round(cap_rhs(0.25, 2), 5)
    0.85355
    """
    s2 = math.sin(math.pi / 2**order_bits) ** 2
    radicand = 1.0 - t / s2
    if radicand < -1e-12:
        return math.nan
    radicand = max(radicand, 0.0)
    return (math.sqrt(radicand) + 1.0) / 2.0


class _Structure:
    """Linearization-independent part of the subproblem for one shape.

    Variables are ordered ``[vec(U) (row major), t, w_1..w_L, r]`` where
    ``r`` exists only when there are amplitude pairs.
    """

    def __init__(self, alloc: BitAllocation, n_rows: int, epsilon_v: float):
        K = alloc.K
        lphi = np.asarray(alloc.l_phi)
        levels = alloc.levels
        self.alloc = alloc
        self.R = R = n_rows
        self.K = K
        self.epsilon_v = epsilon_v
        self.L = L = len(levels)
        self.levels = levels
        self.sin2 = np.array([math.sin(math.pi / 2**lv) ** 2 for lv in levels])

        masks, mask_level = [], []
        for k in alloc.phase_symbols:
            mk = np.zeros(K, dtype=bool)
            mk[k] = True
            masks += [mk, ~mk]
            mask_level += [levels.index(lphi[k])] * 2
        for li, lv in enumerate(levels):
            mk = lphi < lv
            masks += [mk, ~mk]
            mask_level += [li] * 2
        self.masks = np.array(masks, dtype=bool).reshape(-1, K)
        self.mask_level = np.array(mask_level, dtype=np.int64)

        pa, pb = np.triu_indices(R, 1)
        self.pair_a, self.pair_b = pa, pb
        self.P = P = pa.size
        self.i_t = i_t = R * K
        self.i_w = i_w = R * K + 1
        self.i_r = i_r = R * K + 1 + L
        self.n = R * K + 1 + L + (1 if P else 0)

        quad: list[tuple[int, int, int, float]] = []
        lin: list[tuple[int, int, float]] = []
        const: list[float] = []
        row = 0
        for li in range(L):
            quad.append((row, i_w + li, i_w + li, 1.0))
            lin.append((row, i_t, 1.0 / self.sin2[li]))
            const.append(-1.0)
            row += 1
        if P:
            quad.append((row, i_r, i_r, 1.0))
            lin.append((row, i_t, 1.0))
            const.append(-1.0)
            row += 1
        self.cap_row0 = row
        for a in range(R):
            for mk, li in zip(self.masks, self.mask_level):
                for k in np.flatnonzero(mk):
                    quad.append((row, a * K + k, a * K + k, 1.0))
                lin.append((row, i_w + li, -0.5))
                const.append(-0.5)
                row += 1
        self.pair_row0 = row
        pair_lin = []
        for a, b in zip(pa, pb):
            for k in range(K):
                quad.append((row, a * K + k, a * K + k, 0.25))
                quad.append((row, b * K + k, b * K + k, 0.25))
                quad.append((row, a * K + k, b * K + k, 0.5))
            for k in range(K):
                pair_lin.append(len(lin))
                lin.append((row, a * K + k, 0.0))
                pair_lin.append(len(lin))
                lin.append((row, b * K + k, 0.0))
            lin.append((row, i_r, -1.0))
            const.append(0.0)
            row += 1
        self.norm_row0 = row
        norm_lin = []
        for a in range(R):
            for k in range(K):
                norm_lin.append(len(lin))
                lin.append((row, a * K + k, 0.0))
            const.append(0.0)
            row += 1
        for a in range(R):
            for k in range(K):
                quad.append((row, a * K + k, a * K + k, 1.0))
            const.append(-1.0)
            row += 1
        for a in range(R):
            for k in range(K):
                lin.append((row, a * K + k, -1.0))
                const.append(0.0)
                row += 1
        self.m = row

        q = np.array(quad, dtype=np.float64).reshape(-1, 4)
        li_ = np.array(lin, dtype=np.float64).reshape(-1, 3)
        self.q_row = q[:, 0].astype(np.int64)
        self.q_p = q[:, 1].astype(np.int64)
        self.q_q = q[:, 2].astype(np.int64)
        self.q_coef = q[:, 3].copy()
        self.l_row = li_[:, 0].astype(np.int64)
        self.l_p = li_[:, 1].astype(np.int64)
        self.l_coef = li_[:, 2].copy()
        self.const = np.array(const, dtype=np.float64)
        self.pair_lin = np.array(pair_lin, dtype=np.int64)
        self.norm_lin = np.array(norm_lin, dtype=np.int64)

        cols: list[set[int]] = [set() for _ in range(row)]
        for r_, p, qq, _ in quad:
            cols[r_].update((p, qq))
        for r_, p, _ in lin:
            cols[r_].add(p)
        self.row_ptr = np.cumsum([0] + [len(c) for c in cols]).astype(np.int64)
        self.row_cols = np.array([c for cs in cols for c in sorted(cs)], dtype=np.int64)
        self.cost = np.zeros(self.n)
        self.cost[i_t] = -1.0


@functools.lru_cache(maxsize=64)
def _structure(alloc: BitAllocation, n_rows: int, epsilon_v: float) -> _Structure:
    return _Structure(alloc, n_rows, epsilon_v)


class ConvexSubproblem:
    """Convex restriction of the design problem around a linearization point.

    Use :func:`build_subproblem` to construct one.

    Attributes
    ----------
    linearization : ndarray, shape (2**l_u, K)
        Expansion point; each row has squared norm in ``[1 - epsilon_v, 1]``.
    """

    def __init__(self, structure: _Structure, linearization: np.ndarray):
        self._s = s = structure
        self.linearization = ub = linearization
        self.l_coef = s.l_coef.copy()
        self.const = s.const.copy()
        if s.P:
            diff = ub[s.pair_a] - ub[s.pair_b]
            self.l_coef[s.pair_lin] = np.stack([-0.5 * diff, 0.5 * diff], axis=2).reshape(-1)
            self.const[s.pair_row0:s.pair_row0 + s.P] = 0.25 * np.sum(diff * diff, axis=1)
            self._pair_diff = diff
        self.l_coef[s.norm_lin] = -2.0 * ub.reshape(-1)
        self.const[s.norm_row0:s.norm_row0 + s.R] = (1.0 - s.epsilon_v) + np.sum(ub * ub, axis=1)

    @property
    def alloc(self) -> BitAllocation:
        return self._s.alloc

    @property
    def n_variables(self) -> int:
        return self._s.n

    @property
    def n_constraints(self) -> int:
        return self._s.m

    def pair_estimate(self, U: np.ndarray) -> np.ndarray:
        """Convex upper estimate of ``u_a . u_b`` for every row pair ``a < b``."""
        s = self._s
        if not s.P:
            return np.zeros(0)
        ua, ub_ = U[s.pair_a], U[s.pair_b]
        diff = self._pair_diff
        return (0.25 * np.sum((ua + ub_) ** 2, axis=1)
                - 0.5 * np.sum(diff * (ua - ub_), axis=1)
                + 0.25 * np.sum(diff * diff, axis=1))

    def violation(self, U: np.ndarray, t: float) -> float:
        """Largest violation of the subproblem's constraints by ``(U, t)``.

        The caps are evaluated with their explicit right-hand sides
        ``cap_rhs(t, l)``; a ``t`` beyond a level's domain counts as a
        violation of size ``t - sin(pi/2**l)**2``.
        """
        s = self._s
        U = np.asarray(U, dtype=np.float64)
        worst = max(0.0, float(-U.min()))
        energy = U * U
        for li, lv in enumerate(s.levels):
            if t > s.sin2[li]:
                worst = max(worst, t - s.sin2[li])
                continue
            rhs = cap_rhs(t, lv)
            sums = energy @ s.masks[s.mask_level == li].T
            worst = max(worst, float(np.max(sums - rhs)))
        if s.P:
            if t > 1:
                worst = max(worst, t - 1)
            else:
                worst = max(worst, float(np.max(self.pair_estimate(U))) - math.sqrt(1.0 - t))
        ub = self.linearization
        lower = np.sum(ub * ub, axis=1) + 2.0 * np.sum(ub * (U - ub), axis=1)
        worst = max(worst, float(np.max((1.0 - s.epsilon_v) - lower)))
        worst = max(worst, float(np.max(np.sum(energy, axis=1) - 1.0)))
        return worst

    def start_point(self) -> np.ndarray:
        """A strictly feasible starting vector for the interior-point solver."""
        s = self._s
        ub = self.linearization
        n2 = np.sum(ub * ub, axis=1)
        d = ub + 1e-6
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        a = np.sum(ub * d, axis=1)
        lo = ((1.0 - s.epsilon_v) + n2) / (2.0 * a)
        U0 = d * (0.5 * (lo + 1.0))[:, None]
        t0 = 1.0
        w0 = np.zeros(s.L)
        if s.L:
            sums = (U0 * U0) @ s.masks.T.astype(np.float64)
            for li in range(s.L):
                need = 2.0 * sums[:, s.mask_level == li].max() - 1.0
                w0[li] = need + 0.1 * (1.0 - need)
                t0 = min(t0, 0.5 * s.sin2[li] * (1.0 - w0[li] ** 2))
        parts = [U0.reshape(-1), [0.0], w0]
        if s.P:
            q = self.pair_estimate(U0).max()
            r0 = q + 0.1 * (1.0 - q)
            t0 = min(t0, 0.5 * (1.0 - r0 * r0))
            parts.append([r0])
        x0 = np.concatenate(parts)
        x0[s.i_t] = t0
        return x0


def build_subproblem(linearization, alloc: BitAllocation, cfg: DesignConfig) -> ConvexSubproblem:
    """Convex subproblem of the amplitude design linearized at ``linearization``.

    Parameters
    ----------
    linearization : array_like, shape (2**l_u, K)
        Non-negative rows with squared norms in ``[1 - epsilon_v, 1]``.
    alloc : BitAllocation
    cfg : DesignConfig
    """
    ub = np.array(linearization, dtype=np.float64)
    if ub.shape != (alloc.n_amplitudes, alloc.K):
        raise InvalidInputError(f"linearization has shape {ub.shape}, expected {(alloc.n_amplitudes, alloc.K)}")
    if np.any(ub < 0) or not np.all(np.isfinite(ub)):
        raise InvalidInputError("linearization rows must be finite and non-negative")
    n2 = np.sum(ub * ub, axis=1)
    if np.any(n2 > 1 + 1e-12) or np.any(n2 < 1 - cfg.epsilon_v - 1e-12):
        raise InvalidInputError("linearization rows must have squared norm in [1 - epsilon_v, 1]")
    ub = ub / np.maximum(np.sqrt(n2), 1.0)[:, None]
    return ConvexSubproblem(_structure(alloc, alloc.n_amplitudes, float(cfg.epsilon_v)), ub)


def solve_subproblem(sp: ConvexSubproblem, cfg: DesignConfig) -> tuple[np.ndarray, float]:
    """Maximize ``t`` over the subproblem.

    Returns
    -------
    U : ndarray, shape (2**l_u, K)
        Amplitude rows of the solution (squared norms in ``[1 - epsilon_v, 1]``).
    t : float
        Optimal squared-distance level.

    Raises
    ------
    SolverFailureError
        If the duality gap stays above ``1e-6`` after the iteration budget;
        ``best_iterate`` holds the last strictly feasible point.
    """
    s = sp._s
    x0 = sp.start_point()
    x, gap, dual_res, _ = solve_qcqp(
        x0, s.cost, s.m, s.q_row, s.q_p, s.q_q, s.q_coef, s.l_row, s.l_p, sp.l_coef, sp.const,
        s.row_ptr, s.row_cols, cfg.subproblem_tol, 200,
    )
    U = np.maximum(x[:s.R * s.K].reshape(s.R, s.K), 0.0)
    t = float(x[s.i_t])
    if not (np.isfinite(gap) and gap <= 1e-6 and dual_res <= 1e-6):
        raise SolverFailureError(
            f"interior-point solver stopped with gap {gap:.3g}, dual residual {dual_res:.3g}",
            best_iterate=(U, t),
        )
    return U, t


@dataclass
class _RestartOutcome:
    index: int
    codebook: Codebook | None
    iterations: int
    t_history: list
    note: str = ""


def _run_restart(alloc: BitAllocation, cfg: DesignConfig, index: int) -> _RestartOutcome:
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.seed), spawn_key=(index,)))
    R, K = alloc.n_amplitudes, alloc.K
    U = np.abs(rng.standard_normal((R, K)))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    structure = _structure(alloc, R, float(cfg.epsilon_v))
    history: list[float] = []
    note = ""
    iterations = 0
    for iterations in range(1, int(cfg.sca_max_iters) + 1):
        sp = ConvexSubproblem(structure, U)
        try:
            U_new, t = solve_subproblem(sp, cfg)
        except SolverFailureError as exc:
            U_new, t = exc.best_iterate
            if history and t < history[-1]:
                note = f"solver failure at iteration {iterations}: {exc}"
                break
        U = U_new
        history.append(t)
        if len(history) > 1 and abs(history[-1] - history[-2]) < cfg.sca_tol:
            break
    rows = U / np.linalg.norm(U, axis=1, keepdims=True)
    for a, b in itertools.combinations(range(R), 2):
        if amplitude_pair_distance(rows[a], rows[b]) < 1e-6:
            return _RestartOutcome(index, None, iterations, history, "duplicate amplitude rows")
    codebook = Codebook(
        alloc,
        AmplitudeSet(rows, cfg.epsilon_v),
        metadata={
            "seed": int(cfg.seed),
            "restarts": int(cfg.restarts),
            "best_restart": index,
            "sca_iterations": iterations,
            "epsilon_v": cfg.epsilon_v,
        },
    )
    return _RestartOutcome(index, codebook, iterations, history, note)


def design_amplitude_set(alloc: BitAllocation, cfg: DesignConfig | None = None,
                         workers: int = 1) -> Codebook:
    """Design the amplitude rows of ``alloc`` and return the best codebook found.

    Parameters
    ----------
    alloc : BitAllocation
    cfg : DesignConfig, optional
    workers : int
        Threads used for the independent restarts.  The result does not
        depend on this value.

    Raises
    ------
    DesignFailureError
        If no restart produced a usable amplitude set.
    """
    cfg = cfg or DesignConfig()
    if alloc.n_amplitudes > MAX_AMPLITUDE_ROWS:
        raise InvalidInputError(f"2**l_u = {alloc.n_amplitudes} exceeds {MAX_AMPLITUDE_ROWS} amplitude rows")
    indices = range(int(cfg.restarts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda i: _run_restart(alloc, cfg, i), indices))
    else:
        outcomes = [_run_restart(alloc, cfg, i) for i in indices]
    best = None
    for out in outcomes:
        if out.codebook is None:
            continue
        if best is None or out.codebook.achieved_mcd > best.codebook.achieved_mcd:
            best = out
    if best is None:
        raise DesignFailureError(
            f"all {cfg.restarts} restarts failed for {alloc}",
            [f"restart {o.index}: {o.note}" for o in outcomes],
        )
    return best.codebook


def enumerate_allocations(K: int, l_v: int, max_amplitude_bits: int = 8) -> list[BitAllocation]:
    """All valid allocations of ``l_v`` bits over ``K`` symbols.

    Amplitude bits are capped at ``max_amplitude_bits`` (the designer's
    row limit).
    """
    if K < 1:
        raise InvalidInputError(f"K must be positive, got {K}")
    if l_v < 1:
        raise InvalidInputError(f"l_v must be at least 1, got {l_v}")
    out = []

    def phases(remaining, slots, floor):
        if slots == 0:
            if remaining == 0:
                yield ()
            return
        for b in range(floor, remaining + 1):
            if b * slots > remaining and b > 0:
                break
            for rest in phases(remaining - b, slots - 1, b):
                yield (b,) + rest

    for l_u in range(0, min(l_v, max_amplitude_bits) + 1):
        for tail in phases(l_v - l_u, K - 1, 0):
            out.append(BitAllocation(K, l_u, (0,) + tail))
    return out


class SearchEntry(NamedTuple):
    """One evaluated allocation of :func:`search_bit_allocations`."""

    alloc: BitAllocation
    codebook: Codebook

    @property
    def bound(self) -> float:
        return mcd_upper_bound(self.alloc)


def _rank(entries: list[SearchEntry], tol: float) -> list[SearchEntry]:
    """Order by achieved MCD, preferring fewer amplitude bits among near-ties."""
    remaining = sorted(entries, key=lambda e: -e.codebook.achieved_mcd)
    ranked = []
    while remaining:
        top = remaining[0].codebook.achieved_mcd
        tied = [e for e in remaining if e.codebook.achieved_mcd >= top - tol]
        pick = min(tied, key=lambda e: (e.alloc.l_u, -e.codebook.achieved_mcd))
        ranked.append(pick)
        remaining.remove(pick)
    return ranked


def search_bit_allocations(K: int, l_v: int, cfg: DesignConfig | None = None,
                           workers: int = 1) -> list[SearchEntry]:
    """Search the bit allocations of ``l_v`` bits over ``K`` symbols.

    Allocations are designed in descending order of :func:`mcd_upper_bound`
    (fewer amplitude bits first among equal bounds).  The search stops as
    soon as the next bound cannot come within ``cfg.tie_tolerance`` of the
    best MCD achieved so far.

    Returns
    -------
    list of SearchEntry
        Evaluated allocations, best first.
    """
    cfg = cfg or DesignConfig()
    if K < 2:
        raise InvalidInputError(f"K must be at least 2, got {K}")
    if not 1 <= l_v <= 24:
        raise InvalidInputError(f"l_v must lie in [1, 24], got {l_v}")
    candidates = sorted(
        enumerate_allocations(K, l_v),
        key=lambda a: (-mcd_upper_bound(a), a.l_u, a.l_phi),
    )
    best = -math.inf
    entries: list[SearchEntry] = []
    for alloc in candidates:
        if mcd_upper_bound(alloc) <= best - cfg.tie_tolerance:
            break
        codebook = design_amplitude_set(alloc, cfg, workers=workers)
        entries.append(SearchEntry(alloc, codebook))
        best = max(best, codebook.achieved_mcd)
    return _rank(entries, cfg.tie_tolerance)

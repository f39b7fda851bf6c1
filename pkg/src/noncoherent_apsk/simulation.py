"""Seeded Monte Carlo link simulation over a block Rayleigh-fading channel.

The received block is ``Y = h v^T + N`` with ``h ~ CN(0, I_M)`` fixed over
the block and ``N`` i.i.d. ``CN(0, sigma2)``.  Signals have unit energy per
block and the SNR convention is ``snr_db = -10 log10(sigma2)``.

Reproducibility
---------------
Trials are grouped in fixed-size chunks.  Chunk ``c`` of SNR point ``s``
draws all of its randomness from the substream ``(seed, s, c)``, so each
trial sees the same message, channel and noise whatever the detector, the
stopping point or the number of worker threads.  A point stops at the
exact trial on which the block-error count reaches ``min_block_errors``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .constellation import Codebook, _join_index, _split_index, chordal_distance, index_to_bits
from .detection import detect_batch
from .errors import InvalidInputError, SimulationError

__all__ = [
    "DETECTORS",
    "SimConfig",
    "PointResult",
    "SimResult",
    "snr_db_to_sigma2",
    "sample_channel",
    "transmit",
    "run_point",
    "run_sweep",
    "pep_empirical",
    "wilson_interval",
]

DETECTORS = ("ml", "iuap-pr", "iuap-improved-pr", "iuap-exhaustive-phase")


def snr_db_to_sigma2(snr_db: float) -> float:
    """Per-entry noise variance for a unit-energy block at ``snr_db``."""
    return 10.0 ** (-float(snr_db) / 10.0)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval of a binomial proportion; ``(0, 1)`` without trials."""
    if trials == 0:
        return 0.0, 1.0
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SimConfig:
    """Settings of a simulation sweep.

    Attributes
    ----------
    M : int
        Receive antennas.
    snr_grid_db : tuple of float
    detector : {"ml", "iuap-pr", "iuap-improved-pr", "iuap-exhaustive-phase"}
    min_block_errors : int
        A point stops once this many block errors are collected.
    max_trials_per_point : int
    seed : int
    iuap_max_iters : int
    chunk_size : int
        Trials per random substream.  Changing it changes the random draws.
    """

    M: int
    snr_grid_db: tuple
    detector: str = "ml"
    min_block_errors: int = 200
    max_trials_per_point: int = 10**7
    seed: int = 0
    iuap_max_iters: int = 10
    chunk_size: int = 256

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        if int(self.M) < 1:
            raise InvalidInputError("M must be at least 1")
        if not self.snr_grid_db:
            raise InvalidInputError("the SNR grid is empty")
        if self.detector not in DETECTORS:
            raise InvalidInputError(f"unknown detector {self.detector!r}; choose from {DETECTORS}")
        if int(self.min_block_errors) < 1:
            raise InvalidInputError("min_block_errors must be at least 1")
        if int(self.max_trials_per_point) < 1:
            raise InvalidInputError("max_trials_per_point must be at least 1")
        if int(self.iuap_max_iters) < 1:
            raise InvalidInputError("iuap_max_iters must be at least 1")
        if int(self.chunk_size) < 1:
            raise InvalidInputError("chunk_size must be at least 1")
        if int(self.seed) < 0:
            raise InvalidInputError("seed must be non-negative")


@dataclass(frozen=True)
class PointResult:
    """Counts and rates at one SNR point."""

    snr_db: float
    detector: str
    trials: int
    block_errors: int
    bit_errors: int
    bits_per_block: int
    bler_ci95: tuple[float, float]
    wall_time: float = 0.0

    @property
    def bler(self) -> float:
        return self.block_errors / self.trials if self.trials else math.nan

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.bits_per_block) if self.trials else math.nan


@dataclass
class SimResult:
    """Per-SNR results of a sweep."""

    detector: str
    points: list = field(default_factory=list)

    @property
    def wall_time(self) -> float:
        return sum(p.wall_time for p in self.points)


def sample_channel(M: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``h ~ CN(0, I_M)``."""
    return (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / math.sqrt(2.0)


def transmit(v, h, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Received block ``h v^T + N`` with ``N`` entries ``CN(0, sigma2)``."""
    if sigma2 < 0:
        raise InvalidInputError("sigma2 must be non-negative")
    v = np.asarray(getattr(v, "entries", v), dtype=np.complex128).reshape(-1)
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    shape = (h.size, v.size)
    noise = math.sqrt(sigma2 / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return np.outer(h, v) + noise


def _chunk_rng(seed: int, snr_index: int, chunk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(snr_index, chunk_index)))


def _simulate_chunk(codebook: Codebook, cfg: SimConfig, sigma2: float, snr_index: int,
                    chunk_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Block-error flags and bit-error counts of one full chunk of trials."""
    alloc = codebook.alloc
    n, M, K = int(cfg.chunk_size), int(cfg.M), alloc.K
    rng = _chunk_rng(cfg.seed, snr_index, chunk_index)
    sent = rng.integers(0, alloc.n_points, size=n, dtype=np.int64)
    h = (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))) / math.sqrt(2.0)
    noise = rng.standard_normal((n, M, K)) + 1j * rng.standard_normal((n, M, K))
    amp, phase = _split_index(alloc, sent)
    angles = 2.0 * np.pi * phase / (2.0 ** np.asarray(alloc.l_phi))
    v = codebook.unit_amplitudes[amp] * np.exp(1j * angles)
    Y = h[:, :, None] * v[:, None, :] + math.sqrt(sigma2 / 2.0) * noise
    grams = np.conj(np.swapaxes(Y, 1, 2)) @ Y
    det_amp, det_phase = detect_batch(grams, codebook, cfg.detector, cfg.iuap_max_iters)
    decided = _join_index(alloc, det_amp, det_phase)
    block = decided != sent
    bit = index_to_bits(decided ^ sent, alloc.total_bits).sum(axis=1, dtype=np.int64)
    return block, bit


def run_point(codebook: Codebook, cfg: SimConfig, snr_db: float, snr_index: int = 0,
              workers: int = 1) -> PointResult:
    """Simulate one SNR point until the error target or the trial cap.

    Parameters
    ----------
    codebook : Codebook
    cfg : SimConfig
    snr_db : float
    snr_index : int
        Position of the point in its grid; selects the random substreams.
    workers : int
        Threads evaluating chunks concurrently.  Counts do not depend on it.
    """
    start = time.perf_counter()
    sigma2 = snr_db_to_sigma2(snr_db)
    target = int(cfg.min_block_errors)
    cap = int(cfg.max_trials_per_point)
    chunk = int(cfg.chunk_size)
    trials = errors = bit_errors = 0
    next_chunk = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while trials < cap and errors < target:
            wave = range(next_chunk, next_chunk + max(1, workers))
            if pool is None:
                outcomes = [_simulate_chunk(codebook, cfg, sigma2, snr_index, c) for c in wave]
            else:
                outcomes = list(pool.map(lambda c: _simulate_chunk(codebook, cfg, sigma2, snr_index, c), wave))
            next_chunk += len(wave)
            for block, bit in outcomes:
                use = min(chunk, cap - trials)
                block, bit = block[:use], bit[:use]
                cum = errors + np.cumsum(block)
                hit = np.flatnonzero(cum >= target)
                if hit.size:
                    use = int(hit[0]) + 1
                    block, bit = block[:use], bit[:use]
                trials += use
                errors += int(block.sum())
                bit_errors += int(bit.sum())
                if errors >= target or trials >= cap:
                    break
    finally:
        if pool is not None:
            pool.shutdown()
    return PointResult(
        snr_db=float(snr_db),
        detector=cfg.detector,
        trials=trials,
        block_errors=errors,
        bit_errors=bit_errors,
        bits_per_block=codebook.alloc.total_bits,
        bler_ci95=wilson_interval(errors, trials),
        wall_time=time.perf_counter() - start,
    )


def run_sweep(codebook: Codebook, cfg: SimConfig, workers: int = 1) -> SimResult:
    """Run :func:`run_point` over the configured SNR grid.

    Raises
    ------
    SimulationError
        If a point fails; ``partial`` holds the completed points.
    """
    result = SimResult(cfg.detector)
    for i, snr in enumerate(cfg.snr_grid_db):
        try:
            result.points.append(run_point(codebook, cfg, snr, snr_index=i, workers=workers))
        except Exception as exc:
            raise SimulationError(f"SNR point {snr} dB failed: {exc}", partial=result) from exc
    return result


def pep_empirical(v_a, v_b, M: int, sigma2: float, trials: int, seed: int) -> float:
    """Monte Carlo pairwise error probability of deciding ``v_b`` when ``v_a`` is sent.

    The maximum-likelihood metrics ``||Y v*||**2`` of the two hypotheses are
    compared on fresh channel and noise draws; ties count one half.
    """
    a = np.asarray(getattr(v_a, "entries", v_a), dtype=np.complex128).reshape(-1)
    b = np.asarray(getattr(v_b, "entries", v_b), dtype=np.complex128).reshape(-1)
    if chordal_distance(a, b) <= 1e-12:
        raise InvalidInputError("the two signals are indistinguishable (zero chordal distance)")
    if sigma2 < 0 or int(M) < 1 or int(trials) < 1:
        raise InvalidInputError("need sigma2 >= 0, M >= 1 and trials >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    K = a.size
    score = 0.0
    done = 0
    while done < trials:
        n = min(20000, trials - done)
        h = (rng.standard_normal((n, M)) + 1j * rng.standard_normal((n, M))) / math.sqrt(2.0)
        noise = rng.standard_normal((n, M, K)) + 1j * rng.standard_normal((n, M, K))
        Y = h[:, :, None] * a[None, None, :] + math.sqrt(sigma2 / 2.0) * noise
        stat_a = np.sum(np.abs(Y @ a.conj()) ** 2, axis=1)
        stat_b = np.sum(np.abs(Y @ b.conj()) ** 2, axis=1)
        score += np.count_nonzero(stat_b > stat_a) + 0.5 * np.count_nonzero(stat_b == stat_a)
        done += n
    return score / trials


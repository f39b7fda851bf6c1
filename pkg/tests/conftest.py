from __future__ import annotations

import numpy as np
import pytest

from noncoherent_apsk import BitAllocation, Codebook

# Filled by the acceptance tests: criterion number -> (passed, detail line).
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    """Store the verdict of an acceptance criterion and echo it immediately."""
    ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
    print(f"[criterion {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")


def random_unit_rows(rng: np.random.Generator, n: int, K: int) -> np.ndarray:
    """``n`` random non-negative unit-norm rows of length ``K``."""
    rows = np.abs(rng.standard_normal((n, K)))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def bpsk_pair():
    """Two-symbol codebook with a reference symbol and one BPSK symbol."""
    return Codebook(BitAllocation(2, 0, (0, 1)), [[2**-0.5, 2**-0.5]])


@pytest.fixture
def small_codebook():
    """Hand-built K=3 codebook with two amplitude rows and QPSK on symbols 1 and 2."""
    rows = [[2 / 3, 2 / 3, 1 / 3], [0.5, 0.5, 2**-0.5]]
    return Codebook(BitAllocation(3, 1, (0, 2, 2)), rows)


@pytest.fixture
def random_codebook_factory():
    def make(alloc: BitAllocation, seed: int) -> Codebook:
        return Codebook(alloc, random_unit_rows(np.random.default_rng(seed), alloc.n_amplitudes, alloc.K))

    return make

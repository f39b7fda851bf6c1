from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unit_rows
from noncoherent_apsk import BitAllocation, Codebook
from noncoherent_apsk.detection import (
    detect_amplitude,
    detect_batch,
    eta,
    exhaustive_phase,
    gram,
    improved_pr_sort_dfdd,
    iuap,
    ml_exhaustive,
    ml_metric,
    mu,
    pr_sort_dfdd,
    psk_decision,
)
from noncoherent_apsk.errors import CapacityError, InvalidInputError, InvalidStateError


def received_gram(codebook, index, M, sigma2, rng):
    v = codebook.points[index]
    h = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / math.sqrt(2)
    N = math.sqrt(sigma2 / 2) * (rng.standard_normal((M, v.size)) + 1j * rng.standard_normal((M, v.size)))
    return gram(np.outer(h, v) + N)


def scaled_gram(G, u):
    return G * np.outer(u, u)


def reference_dfdd(Z, lphi, improved):
    """Plain-Python sorted decision-feedback detector used as an oracle."""
    K = len(lphi)
    phase = [0] * K
    detected = [b == 0 for b in lphi]
    psk = [np.exp(2j * np.pi * np.arange(2**b) / 2**b) for b in lphi]
    while not all(detected):
        best = None
        for d in range(K):
            if detected[d]:
                continue
            m = sum(Z[k, d] * psk[k][phase[k]] for k in range(K) if detected[k])
            lower = [q for q in range(K) if not detected[q] and q != d and lphi[q] < lphi[d]] if improved else []
            scores = []
            for g, p in enumerate(psk[d]):
                val = (m * np.conj(p)).real
                for q in lower:
                    val += max((Z[d, q] * p * np.conj(pq)).real for pq in psk[q])
                scores.append(val)
            order = np.argsort(-np.array(scores), kind="stable")
            rel = scores[order[0]] - scores[order[1]]
            if best is None or rel > best[0]:
                best = (rel, d, int(order[0]))
        _, d, g = best
        detected[d] = True
        phase[d] = g
    return np.array(phase)


@pytest.fixture
def codebook_k3():
    rows = [[0.75, 0.5, math.sqrt(1 - 0.75**2 - 0.25)], [0.45, 0.6, math.sqrt(1 - 0.45**2 - 0.36)]]
    return Codebook(BitAllocation(3, 1, (0, 2, 3)), rows)


class TestMetric:
    def test_gram_is_hermitian_psd(self, rng):
        Y = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        G = gram(Y)
        assert np.allclose(G, G.conj().T)
        assert np.linalg.eigvalsh(G).min() > -1e-12

    def test_metric_is_energy_of_projection(self, rng, small_codebook):
        Y = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        v = small_codebook.points[7]
        assert ml_metric(gram(Y), v) == pytest.approx(np.linalg.norm(Y @ v.conj()) ** 2)


class TestMaximumLikelihood:
    def test_matches_enumeration(self, rng, codebook_k3):
        pts = codebook_k3.points
        for trial in range(50):
            G = received_gram(codebook_k3, trial % len(pts), 2, 0.3, rng)
            metrics = np.real(np.einsum("nk,kl,nl->n", pts, G, pts.conj()))
            out = ml_exhaustive(G, codebook_k3)
            assert out.objective == pytest.approx(metrics.max(), rel=1e-12)
            best = int(np.argmax(metrics))
            assert out.amp_index == codebook_k3.point_amplitude_index[best]
            assert out.phase_indices.tolist() == codebook_k3.point_phase_index[best].tolist()

    def test_ties_resolve_to_smallest_encoded_index(self, small_codebook):
        out = ml_exhaustive(np.zeros((3, 3)), small_codebook)
        assert out.amp_index == 0 and out.phase_indices.tolist() == [0, 0, 0]
        assert out.bits.tolist() == [0] * 5

    def test_noise_free_block_is_recovered(self, rng, codebook_k3):
        for index in rng.integers(0, codebook_k3.alloc.n_points, 20):
            out = ml_exhaustive(received_gram(codebook_k3, index, 4, 0.0, rng), codebook_k3)
            assert out.amp_index == codebook_k3.point_amplitude_index[index]
            assert out.phase_indices.tolist() == codebook_k3.point_phase_index[index].tolist()

    def test_rejects_wrong_shape(self, small_codebook):
        with pytest.raises(InvalidInputError):
            ml_exhaustive(np.eye(2), small_codebook)


class TestAmplitudeDetection:
    def test_matches_enumeration(self, rng, codebook_k3):
        G = received_gram(codebook_k3, 5, 3, 0.5, rng)
        p = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        values = [ml_metric(G, u * p) for u in codebook_k3.unit_amplitudes]
        assert detect_amplitude(G, p, codebook_k3) == int(np.argmax(values))

    def test_rejects_non_unit_phasors(self, small_codebook):
        with pytest.raises(InvalidInputError):
            detect_amplitude(np.eye(3), [1, 2, 1], small_codebook)


class TestFeedbackPrimitives:
    def test_mu_sums_detected_symbols(self, rng):
        Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        got = mu(Z, [(0, 0.0), (1, np.pi / 2)], 2)
        assert got == pytest.approx(Z[0, 2] + 1j * Z[1, 2])

    def test_mu_needs_detected_symbols(self):
        with pytest.raises(InvalidStateError):
            mu(np.eye(3), [], 1)
        with pytest.raises(InvalidStateError):
            mu(np.eye(3), [(1, 0.0)], 1)

    @pytest.mark.parametrize(
        "angle, bits, closest, second",
        [
            (np.pi / 3, 2, np.pi / 2, 0.0),
            (0.1, 3, 0.0, np.pi / 4),
            (-0.1, 3, 0.0, 7 * np.pi / 4),
            (np.pi, 1, np.pi, 0.0),
        ],
    )
    def test_psk_decision(self, angle, bits, closest, second):
        a, b = psk_decision(np.exp(1j * angle), bits)
        assert a == pytest.approx(closest) and b == pytest.approx(second)

    def test_psk_decision_of_zero(self):
        assert psk_decision(0j, 2) == (0.0, pytest.approx(np.pi / 2))

    def test_psk_decision_half_way_rounds_toward_zero(self):
        closest, second = psk_decision(np.exp(1j * np.pi / 4), 2)
        assert closest == 0.0 and second == pytest.approx(np.pi / 2)

    @given(st.floats(-math.pi, math.pi), st.integers(1, 5))
    @settings(max_examples=100)
    def test_psk_decision_is_nearest_point(self, angle, bits):
        closest, _ = psk_decision(np.exp(1j * angle), bits)
        pts = 2 * np.pi * np.arange(2**bits) / 2**bits
        gap = np.abs(np.angle(np.exp(1j * (angle - pts))))
        assert abs(np.angle(np.exp(1j * (angle - closest)))) <= gap.min() + 1e-12

    def test_eta_matches_enumeration(self, rng):
        for _ in range(20):
            z = complex(rng.standard_normal() + 1j * rng.standard_normal())
            phi = float(rng.uniform(0, 2 * np.pi))
            bits = int(rng.integers(1, 4))
            brute = max((z * np.exp(1j * (phi - 2 * np.pi * g / 2**bits))).real for g in range(2**bits))
            assert eta(z, phi, bits) == pytest.approx(brute)


class TestPhaseDetectors:
    @pytest.mark.parametrize("l_phi", [(0, 1, 2), (0, 2, 2, 3), (0, 0, 1, 3), (0, 1, 1, 1), (0, 3)])
    @pytest.mark.parametrize("improved", [False, True])
    def test_matches_reference(self, rng, l_phi, improved):
        alloc = BitAllocation(len(l_phi), 0, l_phi)
        cb = Codebook(alloc, random_unit_rows(rng, 1, alloc.K))
        detector = improved_pr_sort_dfdd if improved else pr_sort_dfdd
        for trial in range(100):
            G = received_gram(cb, int(rng.integers(alloc.n_points)), 2, 0.5, rng)
            Z = scaled_gram(G, cb.unit_amplitudes[0])
            assert detector(Z, alloc).tolist() == reference_dfdd(Z, l_phi, improved).tolist()

    def test_improved_differs_when_lower_orders_remain(self, rng):
        alloc = BitAllocation(4, 0, (0, 1, 2, 3))
        cb = Codebook(alloc, random_unit_rows(rng, 1, 4))
        differ = 0
        for _ in range(2000):
            G = received_gram(cb, int(rng.integers(alloc.n_points)), 1, 1.0, rng)
            Z = scaled_gram(G, cb.unit_amplitudes[0])
            differ += not np.array_equal(pr_sort_dfdd(Z, alloc), improved_pr_sort_dfdd(Z, alloc))
        assert differ > 0

    def test_exhaustive_phase_matches_enumeration(self, rng):
        alloc = BitAllocation(3, 0, (0, 2, 3))
        u = random_unit_rows(rng, 1, 3)[0]
        cb = Codebook(alloc, [u])
        G = received_gram(cb, 11, 2, 0.4, rng)
        best = max(
            itertools.product(range(1), range(4), range(8)),
            key=lambda g: ml_metric(G, u * np.exp(2j * np.pi * np.array(g) / [1, 4, 8])),
        )
        assert exhaustive_phase(G, u, alloc).tolist() == list(best)

    def test_noise_free_recovery(self, rng):
        alloc = BitAllocation(4, 0, (0, 2, 3, 3))
        cb = Codebook(alloc, random_unit_rows(rng, 1, 4))
        for index in rng.integers(0, alloc.n_points, 30):
            G = received_gram(cb, int(index), 1, 0.0, rng)
            Z = scaled_gram(G, cb.unit_amplitudes[0])
            truth = cb.point_phase_index[index].tolist()
            assert pr_sort_dfdd(Z, alloc).tolist() == truth
            assert improved_pr_sort_dfdd(Z, alloc).tolist() == truth

    def test_accepts_plain_orders(self, rng):
        Z = scaled_gram(np.eye(3, dtype=complex), np.full(3, 3**-0.5))
        assert pr_sort_dfdd(Z, (0, 1, 1)).shape == (3,)
        with pytest.raises(InvalidInputError):
            pr_sort_dfdd(np.eye(2), (0, 1, 1))


class TestIterativeDetector:
    @pytest.mark.parametrize("phase_alg", ["pr", "improved-pr", "exhaustive"])
    def test_noise_free_recovery(self, rng, codebook_k3, phase_alg):
        for index in rng.integers(0, codebook_k3.alloc.n_points, 20):
            out = iuap(received_gram(codebook_k3, int(index), 8, 0.0, rng), codebook_k3, phase_alg)
            assert out.amp_index == codebook_k3.point_amplitude_index[index]
            assert out.phase_indices.tolist() == codebook_k3.point_phase_index[index].tolist()

    def test_objective_never_exceeds_ml(self, rng, codebook_k3):
        for trial in range(100):
            G = received_gram(codebook_k3, trial % 64, 2, 1.0, rng)
            ml = ml_exhaustive(G, codebook_k3)
            out = iuap(G, codebook_k3, "improved-pr", max_iters=10)
            assert out.objective <= ml.objective + 1e-9
            assert 1 <= out.iterations <= 10
            v = codebook_k3.unit_amplitudes[out.amp_index] * np.exp(
                2j * np.pi * out.phase_indices / 2.0 ** np.array(codebook_k3.alloc.l_phi))
            assert out.objective == pytest.approx(ml_metric(G, v))

    def test_single_iteration_budget(self, rng, codebook_k3):
        G = received_gram(codebook_k3, 3, 2, 1.0, rng)
        assert iuap(G, codebook_k3, max_iters=1).iterations == 1

    @pytest.mark.parametrize("kwargs", [{"phase_alg": "bogus"}, {"max_iters": 0}])
    def test_rejects_bad_options(self, small_codebook, kwargs):
        with pytest.raises(InvalidInputError):
            iuap(np.eye(3), small_codebook, **kwargs)

    def test_same_decision(self, rng, codebook_k3):
        G = received_gram(codebook_k3, 9, 16, 0.0, rng)
        assert iuap(G, codebook_k3).same_decision(ml_exhaustive(G, codebook_k3))


class TestBatch:
    @pytest.mark.parametrize(
        "detector, single",
        [
            ("ml", lambda G, cb: ml_exhaustive(G, cb)),
            ("iuap-pr", lambda G, cb: iuap(G, cb, "pr")),
            ("iuap-improved-pr", lambda G, cb: iuap(G, cb, "improved-pr")),
            ("iuap-exhaustive-phase", lambda G, cb: iuap(G, cb, "exhaustive")),
        ],
    )
    def test_matches_single_block_calls(self, rng, codebook_k3, detector, single):
        grams = np.stack([received_gram(codebook_k3, i, 2, 0.7, rng) for i in range(40)])
        amps, phases = detect_batch(grams, codebook_k3, detector)
        for G, a, p in zip(grams, amps, phases):
            out = single(G, codebook_k3)
            assert (a, p.tolist()) == (out.amp_index, out.phase_indices.tolist())

    def test_unknown_detector(self, codebook_k3):
        with pytest.raises(InvalidInputError):
            detect_batch(np.zeros((1, 3, 3)), codebook_k3, "mmse")

    def test_ml_capacity_guard(self):
        alloc = BitAllocation(4, 0, (0, 7, 7, 7))
        cb = Codebook(alloc, [[0.5, 0.5, 0.5, 0.5]])
        with pytest.raises(CapacityError):
            detect_batch(np.zeros((1, 4, 4)), cb, "ml")
        amps, _ = detect_batch(np.eye(4, dtype=complex)[None], cb, "iuap-pr")
        assert amps.tolist() == [0]

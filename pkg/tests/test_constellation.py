from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noncoherent_apsk import (
    AmplitudeSet,
    BitAllocation,
    Codebook,
    UnitarySignal,
    chordal_distance,
    decode_indices_to_bits,
    encode,
    mcd_bruteforce,
    pep_chernoff_bound,
)
from noncoherent_apsk.constellation import (
    bits_to_indices,
    closest_pair,
    encode_indices,
    gray_decode,
    gray_encode,
)
from noncoherent_apsk.errors import CapacityError, InvalidInputError


@st.composite
def allocations(draw, max_K=4, max_bits=8):
    K = draw(st.integers(2, max_K))
    tail = sorted(draw(st.lists(st.integers(0, 3), min_size=K - 1, max_size=K - 1)))
    l_u = draw(st.integers(0, 2))
    if l_u + sum(tail) == 0:
        tail[-1] = 1
    if l_u + sum(tail) > max_bits:
        l_u = 0
        tail = [min(b, 2) for b in tail]
    return BitAllocation(K, l_u, (0, *tail))


class TestGray:
    def test_adjacent_codes_differ_in_one_bit(self):
        codes = gray_encode(np.arange(64))
        diffs = codes[1:] ^ codes[:-1]
        assert all(bin(int(d)).count("1") == 1 for d in diffs)

    @given(st.integers(0, 2**20))
    def test_decode_inverts_encode(self, n):
        assert gray_decode(gray_encode(n)) == n

    def test_array_and_scalar_agree(self):
        arr = np.arange(256)
        assert gray_decode(gray_encode(arr)).tolist() == [gray_decode(gray_encode(int(n))) for n in arr]


class TestBitAllocation:
    def test_properties(self):
        alloc = BitAllocation(4, 2, (0, 1, 3, 3))
        assert alloc.total_bits == 9
        assert alloc.phase_bits == 7
        assert alloc.n_amplitudes == 4
        assert alloc.n_points == 512
        assert alloc.phase_symbols == (1, 2, 3)
        assert alloc.levels == (1, 3)
        assert alloc.max_phase_bits == 3

    @pytest.mark.parametrize(
        "K, l_u, l_phi",
        [
            (3, 0, (1, 1, 1)),  # reference symbol with phase bits
            (3, 0, (0, 2, 1)),  # decreasing orders
            (3, -1, (0, 1, 1)),
            (3, 0, (0, 1)),  # wrong length
            (2, 0, (0, 0)),  # no bits at all
            (0, 1, ()),
        ],
    )
    def test_rejects_invalid(self, K, l_u, l_phi):
        with pytest.raises(InvalidInputError):
            BitAllocation(K, l_u, l_phi)

    def test_is_hashable_and_normalizes_types(self):
        a = BitAllocation(np.int64(3), 1, [0, 2, 2])
        b = BitAllocation(3, 1, (0, 2, 2))
        assert a == b and hash(a) == hash(b)
        assert isinstance(a.l_phi, tuple)


class TestAmplitudeSet:
    def test_unit_rows_are_stored_verbatim(self):
        rows = np.array([[0.6, 0.8], [1.0, 0.0]])
        amps = AmplitudeSet(rows)
        assert np.array_equal(amps.vectors, rows)
        assert not amps.vectors.flags.writeable

    def test_rows_within_slack_are_renormalized(self):
        amps = AmplitudeSet([[0.6 * 0.99999, 0.8 * 0.99999]], epsilon_v=1e-4)
        assert np.linalg.norm(amps.vectors[0]) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("rows", [[[0.5, 0.5]], [[-0.6, 0.8]], [[0.8, 0.8]], [[np.nan, 1.0]], [[]]])
    def test_rejects_invalid_rows(self, rows):
        with pytest.raises(InvalidInputError):
            AmplitudeSet(rows)


class TestCodebook:
    def test_shape_must_match_allocation(self):
        with pytest.raises(InvalidInputError):
            Codebook(BitAllocation(3, 1, (0, 2, 2)), [[1.0, 0.0, 0.0]])

    def test_stated_mcd_is_checked(self, small_codebook):
        with pytest.raises(InvalidInputError):
            Codebook(small_codebook.alloc, small_codebook.unit_amplitudes, achieved_mcd=0.9)

    def test_points_are_unit_norm_and_distinct(self, small_codebook):
        pts = small_codebook.points
        assert pts.shape == (32, 3)
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
        gram = np.abs(pts @ pts.conj().T)
        np.fill_diagonal(gram, 0)
        assert gram.max() < 1 - 1e-9

    def test_points_follow_encoding(self, small_codebook):
        alloc = small_codebook.alloc
        for index in range(alloc.n_points):
            bits = [(index >> s) & 1 for s in range(alloc.total_bits - 1, -1, -1)]
            assert np.allclose(encode(small_codebook, bits).entries, small_codebook.points[index])


class TestEncoding:
    def test_known_mapping(self):
        # 0 | 01 | 11 -> amplitude 0, Gray label 01 -> index 1, Gray label 11 -> index 2
        alloc = BitAllocation(3, 1, (0, 2, 2))
        amp, phase = bits_to_indices(alloc, [0, 0, 1, 1, 1])
        assert amp == 0
        assert phase.tolist() == [0, 1, 2]

    def test_encode_applies_phases(self, small_codebook):
        v = encode(small_codebook, [1, 0, 1, 1, 1])
        u = small_codebook.unit_amplitudes[1]
        assert np.allclose(v.entries, u * np.array([1, 1j, -1]))

    @given(allocations(), st.data())
    @settings(max_examples=60, deadline=None)
    def test_bits_round_trip(self, alloc, data):
        bits = data.draw(st.lists(st.integers(0, 1), min_size=alloc.total_bits, max_size=alloc.total_bits))
        amp, phase = bits_to_indices(alloc, bits)
        assert decode_indices_to_bits(alloc, amp, phase).tolist() == bits

    def test_neighbouring_phases_differ_in_one_bit(self):
        alloc = BitAllocation(2, 0, (0, 3))
        words = [decode_indices_to_bits(alloc, 0, [0, g]) for g in range(8)]
        for a, b in zip(words, words[1:] + words[:1]):
            assert int(np.sum(a != b)) == 1

    @pytest.mark.parametrize("bits", [[0, 1], [0, 1, 2, 0, 1], [0, 1, 1, 1, 1, 1]])
    def test_rejects_bad_bits(self, small_codebook, bits):
        with pytest.raises(InvalidInputError):
            encode(small_codebook, bits)

    @pytest.mark.parametrize("amp, phase", [(2, [0, 0, 0]), (0, [0, 4, 0]), (0, [0, 0])])
    def test_decode_rejects_out_of_range(self, small_codebook, amp, phase):
        with pytest.raises(InvalidInputError):
            decode_indices_to_bits(small_codebook, amp, phase)

    def test_encode_indices(self, small_codebook):
        v = encode_indices(small_codebook, 1, [0, 3, 1])
        assert np.allclose(v.entries, small_codebook.unit_amplitudes[1] * np.array([1, -1j, 1j]))


class TestChordalDistance:
    def test_known_values(self):
        assert chordal_distance([1, 0], [0, 1]) == pytest.approx(1.0)
        assert chordal_distance([1, 0], [1j, 0]) == pytest.approx(0.0, abs=1e-12)
        assert chordal_distance([2 / 3, 2 / 3, 1 / 3], [2 / 3, 2j / 3, 1 / 3]) == pytest.approx(
            math.sqrt(1 - abs(4 / 9 + 4j / 9 + 1 / 9) ** 2)
        )

    @given(st.floats(0, 2 * math.pi), st.integers(0, 10**6))
    @settings(max_examples=50)
    def test_invariant_to_common_phase(self, theta, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        assert chordal_distance(a * np.exp(1j * theta), b) == pytest.approx(chordal_distance(a, b), abs=1e-12)

    def test_accepts_signals(self):
        a = UnitarySignal([1, 0])
        assert chordal_distance(a, UnitarySignal([0, 1])) == pytest.approx(1.0)

    @pytest.mark.parametrize("a, b", [([1, 0], [1, 0, 0]), ([1, 1], [1, 0])])
    def test_rejects_bad_input(self, a, b):
        with pytest.raises(InvalidInputError):
            chordal_distance(a, b)


class TestClosestPair:
    def test_matches_naive_double_loop(self, small_codebook):
        pts = small_codebook.points
        naive = min(
            (chordal_distance(pts[i], pts[j]), i, j) for i, j in itertools.combinations(range(len(pts)), 2)
        )
        i, j, d = closest_pair(small_codebook)
        assert d == pytest.approx(naive[0], abs=1e-12)
        assert i < j
        assert chordal_distance(pts[i], pts[j]) == pytest.approx(d, abs=1e-12)

    def test_bpsk_pair_is_antipodal_in_the_second_symbol(self, bpsk_pair):
        assert mcd_bruteforce(bpsk_pair) == pytest.approx(1.0, abs=1e-12)

    def test_capacity_guard(self, small_codebook):
        with pytest.raises(CapacityError):
            closest_pair(small_codebook, max_points=16)


class TestChernoff:
    def test_known_value(self):
        assert pep_chernoff_bound(1.0, 1.0, 1) == pytest.approx(0.5 / (1 + 1 / 8))

    def test_decreases_with_antennas_and_distance(self):
        assert pep_chernoff_bound(0.5, 0.1, 4) < pep_chernoff_bound(0.5, 0.1, 1)
        assert pep_chernoff_bound(0.8, 0.1, 2) < pep_chernoff_bound(0.4, 0.1, 2)
        assert pep_chernoff_bound(0.0, 0.1, 2) == pytest.approx(0.5)

    @pytest.mark.parametrize("d, sigma2, M", [(1.5, 1.0, 1), (0.5, 0.0, 1), (0.5, 1.0, 0), (0.5, 1.0, 1.5)])
    def test_rejects_invalid(self, d, sigma2, M):
        with pytest.raises(InvalidInputError):
            pep_chernoff_bound(d, sigma2, M)

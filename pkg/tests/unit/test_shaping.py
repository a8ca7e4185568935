"""Tests for eedi_lab.services.shaping."""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter

import numpy as np
import pytest

from eedi_lab.errors import (
    ConfigurationError,
    InputLengthError,
    InvalidBlockError,
    OutOfRangeError,
)
from eedi_lab.models.shaping import AmplitudeAlphabet, AmplitudeBlock, Composition
from eedi_lab.services.shaping import (
    alphabet_entropy,
    ccdm_decode,
    ccdm_encode,
    ccdm_num_bits,
    ccdm_num_sequences,
    ccdm_rate,
    compute_composition,
    generate_iid_symbols,
    generate_shaped_symbols,
    rank,
    unrank,
)

LEVELS = (1.0, 3.0, 5.0, 7.0)


def _composition(*counts: int) -> Composition:
    return Composition(LEVELS, counts, sum(counts))


def _all_compositions(n: int) -> list[Composition]:
    return [
        _composition(*counts)
        for counts in itertools.product(range(n + 1), repeat=len(LEVELS))
        if sum(counts) == n
    ]


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


class TestComputeComposition:
    """Tests for largest-remainder quantization."""

    def test_integral_targets(self, alphabet: AmplitudeAlphabet) -> None:
        """Test n=10 reproduces the distribution exactly."""
        assert compute_composition(alphabet, 10).counts == (4, 3, 2, 1)

    def test_lowest_index_wins_ties(self, alphabet: AmplitudeAlphabet) -> None:
        """Test n=5 breaks the 0.5/0.5 remainder tie toward the lower level."""
        assert compute_composition(alphabet, 5).counts == (2, 2, 1, 0)

    def test_single_level(self) -> None:
        """Test a one-level alphabet takes every position."""
        composition = compute_composition(AmplitudeAlphabet((1.0,), (1.0,)), 7)
        assert composition.counts == (7,)

    @pytest.mark.parametrize("n", range(1, 13))
    def test_matches_min_l1_enumeration(
        self, alphabet: AmplitudeAlphabet, n: int
    ) -> None:
        """Test the counts minimize L1 distance to n*p among all count vectors."""
        targets = [n * p for p in alphabet.probabilities]
        best = min(
            sum(abs(c - t) for c, t in zip(counts, targets, strict=True))
            for counts in itertools.product(range(n + 1), repeat=4)
            if sum(counts) == n
        )
        counts = compute_composition(alphabet, n).counts
        distance = sum(abs(c - t) for c, t in zip(counts, targets, strict=True))
        assert sum(counts) == n
        assert distance == pytest.approx(best, abs=1e-9)

    def test_rejects_non_positive_n(self, alphabet: AmplitudeAlphabet) -> None:
        """Test n=0 is a configuration error."""
        with pytest.raises(ConfigurationError):
            compute_composition(alphabet, 0)


class TestCcdmCounting:
    """Tests for sequence counts, bit counts and rates."""

    @pytest.mark.parametrize(
        ("counts", "expected"),
        [
            ((2, 1, 1, 0), 12),
            ((6, 0, 0, 0), 1),
            ((1, 1, 0, 0), 2),
            ((4, 3, 2, 1), 12600),
        ],
    )
    def test_num_sequences(self, counts: tuple[int, ...], expected: int) -> None:
        """Test the multinomial coefficient."""
        assert ccdm_num_sequences(_composition(*counts)) == expected

    def test_num_sequences_matches_enumeration(self) -> None:
        """Test against distinct permutations of {1,1,3,5}."""
        assert len(set(itertools.permutations([1, 1, 3, 5]))) == ccdm_num_sequences(
            _composition(2, 1, 1, 0)
        )

    def test_num_bits(self) -> None:
        """Test floor(log2(12600)) = 13."""
        assert ccdm_num_bits(_composition(4, 3, 2, 1)) == 13

    def test_large_blocklength_is_exact(self, alphabet: AmplitudeAlphabet) -> None:
        """Test n=10000 is counted with exact integers."""
        composition = compute_composition(alphabet, 10_000)
        total = ccdm_num_sequences(composition)
        expected = math.factorial(10_000)
        for count in composition.counts:
            expected //= math.factorial(count)
        assert total == expected

    def test_entropy(self, alphabet: AmplitudeAlphabet) -> None:
        """Test H([0.4, 0.3, 0.2, 0.1]) is about 1.8464 bits."""
        assert alphabet_entropy(alphabet) == pytest.approx(1.8464, abs=1e-4)

    def test_rate_grows_toward_entropy(self, alphabet: AmplitudeAlphabet) -> None:
        """Test the matcher rate is non-decreasing and bounded by H(p)."""
        rates = [ccdm_rate(compute_composition(alphabet, n)) for n in (10, 100, 1000)]
        assert rates == sorted(rates)
        assert rates[-1] < alphabet_entropy(alphabet)
        assert rates[-1] > 0.99 * alphabet_entropy(alphabet) - 0.02


class TestCcdmEncodeDecode:
    """Tests for the distribution matcher and dematcher."""

    def test_encode_examples(self) -> None:
        """Test the two permutations of one 1 and one 3."""
        composition = _composition(1, 1, 0, 0)
        assert ccdm_encode("0", composition).values == (1.0, 3.0)
        assert ccdm_encode("1", composition).values == (3.0, 1.0)

    def test_encode_zero_bits(self) -> None:
        """Test a single-sequence composition encodes the empty string."""
        assert ccdm_encode("", _composition(3, 0, 0, 0)).values == (1.0, 1.0, 1.0)

    def test_decode_examples(self) -> None:
        """Test decoding inverts the encode examples."""
        composition = _composition(1, 1, 0, 0)
        assert ccdm_decode(AmplitudeBlock((1.0, 3.0)), composition) == "0"
        assert ccdm_decode(AmplitudeBlock((3.0, 1.0)), composition) == "1"

    def test_lexicographic_order(self) -> None:
        """Test unrank enumerates permutations in sorted order."""
        composition = _composition(2, 1, 1, 0)
        blocks = [tuple(unrank(i, composition)) for i in range(12)]
        assert blocks == sorted(set(itertools.permutations([0, 0, 1, 2])))

    @pytest.mark.parametrize("n", range(1, 7))
    def test_exhaustive_bijection_small(self, n: int) -> None:
        """Test encode/decode is a bijection with exact composition for n <= 6."""
        for composition in _all_compositions(n):
            self._check_bijection(composition)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [7, 8])
    def test_exhaustive_bijection_large(self, n: int) -> None:
        """Test encode/decode is a bijection for n = 7 and 8."""
        for composition in _all_compositions(n):
            self._check_bijection(composition)

    @staticmethod
    def _check_bijection(composition: Composition) -> None:
        width = ccdm_num_bits(composition)
        seen = set()
        for value in range(1 << width):
            bits = _bits(value, width)
            block = ccdm_encode(bits, composition)
            counts = Counter(block.values)
            assert tuple(counts.get(level, 0) for level in LEVELS) == composition.counts
            assert ccdm_decode(block, composition) == bits
            seen.add(block.values)
        assert len(seen) == 1 << width

    def test_random_roundtrips_n100(self, alphabet: AmplitudeAlphabet) -> None:
        """Test 1000 random bit strings survive encode/decode at n=100."""
        composition = compute_composition(alphabet, 100)
        width = ccdm_num_bits(composition)
        rng = random.Random(7)
        for _ in range(1000):
            bits = _bits(rng.getrandbits(width), width)
            assert ccdm_decode(ccdm_encode(bits, composition), composition) == bits

    @pytest.mark.slow
    def test_random_roundtrips_n1000(self, alphabet: AmplitudeAlphabet) -> None:
        """Test 10^4 random roundtrips at n=1000."""
        composition = compute_composition(alphabet, 1000)
        width = ccdm_num_bits(composition)
        rng = random.Random(11)
        for _ in range(10_000):
            bits = _bits(rng.getrandbits(width), width)
            block = ccdm_encode(bits, composition)
            assert Counter(block.values)[1.0] == composition.counts[0]
            assert ccdm_decode(block, composition) == bits

    def test_rank_inverts_unrank(self) -> None:
        """Test rank(unrank(i)) == i over the full range."""
        composition = _composition(3, 2, 2, 1)
        for index in range(ccdm_num_sequences(composition)):
            assert rank(unrank(index, composition), composition) == index

    @pytest.mark.parametrize("bits", ["0", "01", "0" * 14, "01x" + "0" * 10])
    def test_encode_rejects_bad_bits(self, bits: str) -> None:
        """Test wrong lengths and non-binary characters are rejected."""
        with pytest.raises(InputLengthError):
            ccdm_encode(bits, _composition(4, 3, 2, 1))

    def test_decode_rejects_wrong_composition(self) -> None:
        """Test a block with a different multiset is invalid."""
        with pytest.raises(InvalidBlockError):
            ccdm_decode(AmplitudeBlock((1.0, 1.0)), _composition(1, 1, 0, 0))

    def test_decode_rejects_unknown_level(self) -> None:
        """Test a value outside the alphabet is invalid."""
        with pytest.raises(InvalidBlockError, match="not an alphabet level"):
            ccdm_decode(AmplitudeBlock((1.0, 2.0)), _composition(1, 1, 0, 0))

    def test_decode_rejects_unencodable_rank(self) -> None:
        """Test the lexicographically last of 3 sequences has rank 2 >= 2^1."""
        composition = _composition(2, 1, 0, 0)
        assert ccdm_num_bits(composition) == 1
        with pytest.raises(OutOfRangeError):
            ccdm_decode(AmplitudeBlock((3.0, 1.0, 1.0)), composition)


class TestGenerateShapedSymbols:
    """Tests for PAS symbol generation."""

    def test_single_block_composition(self, alphabet: AmplitudeAlphabet) -> None:
        """Test each quadrature of one n=10 block has counts 4/3/2/1."""
        sequence = generate_shaped_symbols(alphabet, 10, 1, 42)
        assert len(sequence) == 10
        symbols = sequence.symbols
        for amplitudes in (np.abs(symbols.real), np.abs(symbols.imag)):
            counts = Counter(amplitudes.tolist())
            assert [counts[level] for level in LEVELS] == [4, 3, 2, 1]

    def test_every_block_has_exact_composition(
        self, alphabet: AmplitudeAlphabet
    ) -> None:
        """Test composition exactness block by block."""
        sequence = generate_shaped_symbols(alphabet, 20, 50, 3)
        blocks = np.abs(sequence.symbols.real).reshape(50, 20)
        for block in blocks:
            counts = Counter(block.tolist())
            assert [counts[level] for level in LEVELS] == [8, 6, 4, 2]

    def test_empirical_frequencies_are_exact(
        self, alphabet: AmplitudeAlphabet
    ) -> None:
        """Test amplitude frequencies over 10^4 blocks equal the distribution."""
        sequence = generate_shaped_symbols(alphabet, 10, 10_000, 5)
        symbols = sequence.symbols
        for amplitudes in (np.abs(symbols.real), np.abs(symbols.imag)):
            counts = Counter(amplitudes.tolist())
            frequencies = [counts[level] / amplitudes.size for level in LEVELS]
            assert frequencies == [0.4, 0.3, 0.2, 0.1]

    def test_mean_is_zero(self, alphabet: AmplitudeAlphabet) -> None:
        """Test the symbol mean is within 3 sigma of zero over 10^5 symbols."""
        sequence = generate_shaped_symbols(alphabet, 100, 1000, 9)
        symbols = sequence.symbols
        sigma = math.sqrt(np.mean(np.abs(symbols) ** 2) / 2 / symbols.size)
        assert abs(symbols.real.mean()) < 3 * sigma
        assert abs(symbols.imag.mean()) < 3 * sigma

    def test_deterministic(self, alphabet: AmplitudeAlphabet) -> None:
        """Test identical arguments give identical sequences."""
        first = generate_shaped_symbols(alphabet, 50, 4, 123)
        assert first == generate_shaped_symbols(alphabet, 50, 4, 123)
        assert first != generate_shaped_symbols(alphabet, 50, 4, 124)

    def test_records_metadata(self, alphabet: AmplitudeAlphabet) -> None:
        """Test blocklength and seed travel with the sequence."""
        sequence = generate_shaped_symbols(alphabet, 50, 2, 77)
        assert (sequence.blocklength, sequence.seed) == (50, 77)

    def test_rejects_zero_blocks(self, alphabet: AmplitudeAlphabet) -> None:
        """Test num_blocks must be positive."""
        with pytest.raises(ConfigurationError):
            generate_shaped_symbols(alphabet, 10, 0, 1)


class TestGenerateIidSymbols:
    """Tests for the i.i.d. reference source."""

    def test_levels_and_length(self, alphabet: AmplitudeAlphabet) -> None:
        """Test every quadrature amplitude is an alphabet level."""
        sequence = generate_iid_symbols(alphabet, 1000, 1)
        assert len(sequence) == 1000
        assert sequence.blocklength == 0
        assert set(np.abs(sequence.symbols.real).tolist()) <= set(LEVELS)

    def test_frequencies_follow_distribution(
        self, alphabet: AmplitudeAlphabet
    ) -> None:
        """Test amplitude frequencies approach p over 10^5 draws."""
        amplitudes = np.abs(generate_iid_symbols(alphabet, 100_000, 2).symbols.real)
        for level, p in zip(LEVELS, alphabet.probabilities, strict=True):
            assert np.mean(amplitudes == level) == pytest.approx(p, abs=0.01)

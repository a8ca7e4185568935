"""Constant composition distribution matching and shaped 64-QAM symbols.

The distribution matcher maps a uniformly distributed index onto the
index-th multiset permutation of a fixed composition, in lexicographic
order of the alphabet levels. Ranking and unranking use exact Python
integers, so encoding is lossless up to the floor of log2 of the number of
sequences and ``ccdm_decode`` is the exact inverse of ``ccdm_encode``.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Final

import numpy as np

from eedi_lab.errors import (
    ConfigurationError,
    InputLengthError,
    InvalidBlockError,
    OutOfRangeError,
)
from eedi_lab.models.shaping import (
    AmplitudeAlphabet,
    AmplitudeBlock,
    Composition,
    SymbolSequence,
)
from eedi_lab.seeding import make_rng

logger = logging.getLogger(__name__)

REFERENCE_LEVELS: Final[tuple[float, ...]] = (1.0, 3.0, 5.0, 7.0)
REFERENCE_PROBABILITIES: Final[tuple[float, ...]] = (0.4, 0.3, 0.2, 0.1)
_FRACTION_DENOMINATOR_LIMIT: Final[int] = 10**12


def reference_alphabet() -> AmplitudeAlphabet:
    """Return the [0.4, 0.3, 0.2, 0.1] distribution over amplitudes {1,3,5,7}."""
    return AmplitudeAlphabet(REFERENCE_LEVELS, REFERENCE_PROBABILITIES)


def alphabet_entropy(alphabet: AmplitudeAlphabet) -> float:
    """Entropy H(p) of the amplitude distribution in bits."""
    return -math.fsum(p * math.log2(p) for p in alphabet.probabilities if p > 0)


def compute_composition(alphabet: AmplitudeAlphabet, n: int) -> Composition:
    """Quantize the target distribution to integer counts for blocklength n.

    Largest-remainder apportionment: every level gets ``floor(n * p)`` and the
    leftover units go to the largest fractional remainders, lowest index
    first on ties. Probabilities are converted to exact fractions so that
    products such as ``10 * 0.3`` do not pick up floating-point residue.

    Args:
        alphabet: Amplitude levels and target probabilities.
        n: Blocklength, at least 1.

    Returns:
        The composition of one block.

    Raises:
        ConfigurationError: If n is not positive.
    """
    if n < 1:
        msg = f"blocklength must be >= 1, got {n}"
        raise ConfigurationError(msg)
    targets = [
        Fraction(p).limit_denominator(_FRACTION_DENOMINATOR_LIMIT) * n
        for p in alphabet.probabilities
    ]
    counts = [math.floor(t) for t in targets]
    leftover = n - sum(counts)
    # stable sort keeps the lowest index first among equal remainders
    order = sorted(range(len(targets)), key=lambda i: -(targets[i] - counts[i]))
    for index in order[:leftover]:
        counts[index] += 1
    return Composition(alphabet.levels, tuple(counts), n)


def ccdm_num_sequences(composition: Composition) -> int:
    """Number of distinct sequences with this composition, n! / prod(c_i!)."""
    total = math.factorial(composition.blocklength)
    for count in composition.counts:
        total //= math.factorial(count)
    return total


def ccdm_num_bits(composition: Composition) -> int:
    """Number of input bits one block carries, floor(log2(#sequences))."""
    return ccdm_num_sequences(composition).bit_length() - 1


def ccdm_rate(composition: Composition) -> float:
    """Matcher rate in bits per amplitude."""
    return ccdm_num_bits(composition) / composition.blocklength


def unrank(index: int, composition: Composition) -> list[int]:
    """Return the level indices of the index-th lexicographic permutation.

    Args:
        index: Rank in ``[0, ccdm_num_sequences(composition))``.
        composition: Composition of the block.

    Returns:
        Level indices, one per position.
    """
    remaining = list(composition.counts)
    length = composition.blocklength
    subtree = ccdm_num_sequences(composition)
    out: list[int] = []
    for _ in range(composition.blocklength):
        for level, count in enumerate(remaining):
            if count == 0:
                continue
            # sequences that start with this level at the current position
            branch = subtree * count // length
            if index < branch:
                out.append(level)
                remaining[level] -= 1
                subtree = branch
                length -= 1
                break
            index -= branch
    return out


def rank(indices: list[int], composition: Composition) -> int:
    """Inverse of :func:`unrank` for a block with exact composition."""
    remaining = list(composition.counts)
    length = composition.blocklength
    subtree = ccdm_num_sequences(composition)
    result = 0
    for symbol in indices:
        for level in range(symbol):
            result += subtree * remaining[level] // length
        subtree = subtree * remaining[symbol] // length
        remaining[symbol] -= 1
        length -= 1
    return result


def ccdm_encode(bits: str, composition: Composition) -> AmplitudeBlock:
    """Map a bit string onto a constant-composition amplitude block.

    Args:
        bits: String of ``'0'``/``'1'`` of length ``ccdm_num_bits``.
        composition: Composition every output block has.

    Returns:
        The block whose lexicographic rank equals the bits read as an
        unsigned big-endian integer.

    Raises:
        InputLengthError: If the bit string has the wrong length or
            contains characters other than 0 and 1.
    """
    expected = ccdm_num_bits(composition)
    if len(bits) != expected:
        msg = f"expected {expected} bits, got {len(bits)}"
        raise InputLengthError(msg)
    if bits.strip("01"):
        raise InputLengthError("bit string may only contain '0' and '1'")
    index = int(bits, 2) if bits else 0
    return AmplitudeBlock(
        tuple(composition.levels[i] for i in unrank(index, composition))
    )


def ccdm_decode(block: AmplitudeBlock, composition: Composition) -> str:
    """Recover the bit string a block was encoded from.

    Args:
        block: Block produced by :func:`ccdm_encode`.
        composition: Composition the block was encoded with.

    Returns:
        The original bit string.

    Raises:
        InvalidBlockError: If the block's multiset differs from the
            composition or contains values outside the alphabet.
        OutOfRangeError: If the block's rank is not reachable from any bit
            string of the encoded length.
    """
    position = {level: i for i, level in enumerate(composition.levels)}
    try:
        indices = [position[value] for value in block.values]
    except KeyError as exc:
        msg = f"value {exc.args[0]!r} is not an alphabet level"
        raise InvalidBlockError(msg) from exc
    observed = tuple(indices.count(i) for i in range(len(composition.levels)))
    if observed != composition.counts:
        msg = f"block composition {observed} != {composition.counts}"
        raise InvalidBlockError(msg)
    num_bits = ccdm_num_bits(composition)
    index = rank(indices, composition)
    if index >= 1 << num_bits:
        msg = f"rank {index} is not encodable with {num_bits} bits"
        raise OutOfRangeError(msg)
    return format(index, f"0{num_bits}b") if num_bits else ""


def _random_index(rng: np.random.Generator, num_bits: int) -> int:
    """Draw a uniform integer in ``[0, 2**num_bits)`` from the generator."""
    if num_bits == 0:
        return 0
    num_bytes = (num_bits + 7) // 8
    raw = int.from_bytes(rng.bytes(num_bytes), "big")
    return raw >> (8 * num_bytes - num_bits)


def _shaped_amplitudes(
    composition: Composition, num_blocks: int, rng: np.random.Generator
) -> np.ndarray:
    """Concatenate ``num_blocks`` CCDM blocks encoded from random bits."""
    levels = np.asarray(composition.levels)
    num_bits = ccdm_num_bits(composition)
    blocks = [
        levels[unrank(_random_index(rng, num_bits), composition)]
        for _ in range(num_blocks)
    ]
    return np.concatenate(blocks)


def generate_shaped_symbols(
    alphabet: AmplitudeAlphabet, n: int, num_blocks: int, seed: int
) -> SymbolSequence:
    """Generate PAS 64-QAM symbols with CCDM-shaped amplitudes.

    In-phase and quadrature amplitudes come from independent runs of
    ``num_blocks`` CCDM blocks; signs are i.i.d. uniform per dimension.

    Args:
        alphabet: Amplitude levels and target probabilities.
        n: CCDM blocklength.
        num_blocks: Number of blocks per quadrature, at least 1.
        seed: 64-bit seed; identical arguments give identical output.

    Returns:
        ``n * num_blocks`` complex symbols.

    Raises:
        ConfigurationError: If num_blocks or n is not positive.
    """
    if num_blocks < 1:
        msg = f"num_blocks must be >= 1, got {num_blocks}"
        raise ConfigurationError(msg)
    composition = compute_composition(alphabet, n)
    rng = make_rng(seed)
    in_phase = _shaped_amplitudes(composition, num_blocks, rng)
    quadrature = _shaped_amplitudes(composition, num_blocks, rng)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(2, in_phase.size))
    symbols = signs[0] * in_phase + 1j * (signs[1] * quadrature)
    logger.debug(
        "shaped %d symbols (n=%d, blocks=%d, seed=%d)",
        symbols.size,
        n,
        num_blocks,
        seed,
    )
    return SymbolSequence(symbols, blocklength=n, seed=seed)


def generate_iid_symbols(
    alphabet: AmplitudeAlphabet, num_symbols: int, seed: int
) -> SymbolSequence:
    """Generate symbols whose amplitudes are drawn i.i.d. from the alphabet.

    This is the infinite-blocklength reference for the shaped streams.

    Args:
        alphabet: Amplitude levels and target probabilities.
        num_symbols: Number of symbols to draw.
        seed: 64-bit seed.

    Returns:
        The symbol stream, tagged with blocklength 0.
    """
    rng = make_rng(seed)
    levels = np.asarray(alphabet.levels)
    probabilities = np.asarray(alphabet.probabilities)
    amplitudes = rng.choice(levels, size=(2, num_symbols), p=probabilities)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(2, num_symbols))
    symbols = signs[0] * amplitudes[0] + 1j * (signs[1] * amplitudes[1])
    return SymbolSequence(symbols, blocklength=0, seed=seed)

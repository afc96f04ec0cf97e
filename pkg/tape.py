"""
Tape module for the complex-action lab
A random seed word drives a deterministic substitution system whose output is
exponentially longer; substructure counts are compared with substitution
matrix predictions and fitted to complex exponentials
"""

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from action_core import is_integer
from errors import ConfigurationError, ExpansionTooLargeError, FitError
from parallel import make_rng, ordered_map

logger = logging.getLogger(__name__)

MAX_ALPHABET = 16
MAX_PATTERN_LENGTH = 8
MIN_FIT_GENERATIONS = 6
DEFAULT_EXPANSION_CAP = 100_000_000
COUNT_CHUNK = 1 << 20
RECURRENCE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SubstitutionSystem:
    """
    Parallel rewriting system over single-character symbols.

    Symbols without a rule map to themselves. At least one rule must grow
    the word unless the system is marked non_expanding.
    """

    alphabet: Tuple[str, ...]
    rules: Dict[str, str] = field(default_factory=dict)
    seed_word: str = ""
    non_expanding: bool = False

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        if not 1 <= len(alphabet) <= MAX_ALPHABET:
            raise ConfigurationError(f"needs 1 to {MAX_ALPHABET} symbols, got {len(alphabet)}", field="alphabet")
        if any(not isinstance(s, str) or len(s) != 1 for s in alphabet):
            raise ConfigurationError("symbols must be single characters", field="alphabet")
        if len(set(alphabet)) != len(alphabet):
            raise ConfigurationError("symbols must be unique", field="alphabet")
        object.__setattr__(self, "alphabet", alphabet)

        rules = {s: s for s in alphabet}
        for symbol, image in dict(self.rules).items():
            if symbol not in rules:
                raise ConfigurationError(f"rule for unknown symbol {symbol!r}", field="rules")
            if not isinstance(image, str) or not image:
                raise ConfigurationError(f"image of {symbol!r} must be a non-empty word", field="rules")
            unknown = set(image) - set(alphabet)
            if unknown:
                raise ConfigurationError(f"image of {symbol!r} uses unknown symbols {sorted(unknown)}", field="rules")
            rules[symbol] = image
        object.__setattr__(self, "rules", rules)

        if not self.seed_word or set(self.seed_word) - set(alphabet):
            raise ConfigurationError("must be a non-empty word over the alphabet", field="seed_word")
        if not self.non_expanding and all(len(image) < 2 for image in rules.values()):
            raise ConfigurationError("no rule grows the word; mark the system non_expanding", field="rules")

    @classmethod
    def fibonacci(cls, seed_word: str = "A") -> "SubstitutionSystem":
        """A -> AB, B -> A."""
        return cls(("A", "B"), {"A": "AB", "B": "A"}, seed_word)

    @classmethod
    def swap(cls, seed_word: str = "A") -> "SubstitutionSystem":
        """A -> B, B -> A."""
        return cls(("A", "B"), {"A": "B", "B": "A"}, seed_word, non_expanding=True)

    @classmethod
    def identity(cls, alphabet: str = "A", seed_word: Optional[str] = None) -> "SubstitutionSystem":
        return cls(tuple(alphabet), {}, seed_word or alphabet, non_expanding=True)

    def with_seed_word(self, seed_word: str) -> "SubstitutionSystem":
        return SubstitutionSystem(self.alphabet, self.rules, seed_word, self.non_expanding)


@dataclass(frozen=True)
class GrowthFit:
    """
    Count model offset + Re(coefficient * lam**n).

    lam is the dominant root of the minimal linear recurrence of the counts.
    """

    lam: complex
    coefficient: complex
    residual: float
    offset: float = 0.0
    order: int = 1

    def predict(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        return self.offset + np.real(self.coefficient * np.power(complex(self.lam), n))


def census(word: str, alphabet: Sequence[str]) -> List[int]:
    """Occurrences of every symbol of the alphabet, in alphabet order."""
    return [word.count(s) for s in alphabet]


def substitution_matrix(system: SubstitutionSystem) -> np.ndarray:
    """
    Incidence matrix M with M[i, j] = occurrences of symbol j in the image of symbol i.

    A census row vector c evolves as c @ M per generation.
    """
    return np.array([census(system.rules[s], system.alphabet) for s in system.alphabet], dtype=np.int64)


def dominant_eigenvalue(system: SubstitutionSystem) -> complex:
    eigenvalues = np.linalg.eigvals(substitution_matrix(system).astype(float))
    return complex(_dominant_root(eigenvalues))


def predict_counts(system: SubstitutionSystem, n: int) -> List[int]:
    """Exact symbol census after n generations, computed as seed census times M^n."""
    return census_history(system, n)[-1]


def census_history(system: SubstitutionSystem, n: int) -> List[List[int]]:
    """
    Exact symbol census of generations 0..n.

    Counts are Python integers (object arrays), so there is no overflow at
    any generation.
    """
    if not is_integer(n) or n < 0:
        raise ConfigurationError(f"must be an integer >= 0, got {n!r}", field="generations")
    matrix = substitution_matrix(system).astype(object)
    row = np.array(census(system.seed_word, system.alphabet), dtype=object)
    history = [[int(v) for v in row]]
    for _ in range(n):
        row = row.dot(matrix)
        history.append([int(v) for v in row])
    return history


def growth_ratios(system: SubstitutionSystem, n: int) -> List[float]:
    """length(g+1)/length(g) for g in 0..n-1, from predicted lengths."""
    lengths = [sum(row) for row in census_history(system, n)]
    return [b / a for a, b in zip(lengths, lengths[1:])]


def expand(system: SubstitutionSystem, n_generations: int, cap: int = DEFAULT_EXPANSION_CAP) -> str:
    """
    Rewrite the seed word n_generations times in parallel.

    Raises:
        ExpansionTooLargeError: If the projected length exceeds cap; the
            length is predicted from the substitution matrix before any
            word is built
    """
    projected = sum(predict_counts(system, n_generations))
    if projected > cap:
        raise ExpansionTooLargeError(projected, cap)

    table = str.maketrans(system.rules)
    word = system.seed_word
    for _ in range(n_generations):
        word = word.translate(table)
    logger.debug("Expanded %d generations to %d symbols", n_generations, len(word))
    return word


def _count_in_chunk(word: str, pattern: str, start: int, stop: int) -> int:
    segment = word[start : stop + len(pattern) - 1]
    return len(re.findall(f"(?={re.escape(pattern)})", segment))


def count_substructures(
    word: str, patterns: Sequence[str], chunk_size: int = COUNT_CHUNK, workers: int = 1
) -> Dict[str, int]:
    """
    Overlapping occurrence counts of every pattern.

    The word is cut into chunks; a chunk counts the occurrences that start
    inside it, reading len(pattern)-1 symbols past its end, so the totals do
    not depend on the chunk size.
    """
    if not patterns:
        raise ConfigurationError("at least one pattern is required", field="patterns")
    for p in patterns:
        if not isinstance(p, str) or not 1 <= len(p) <= MAX_PATTERN_LENGTH:
            raise ConfigurationError(f"pattern {p!r} must have 1 to {MAX_PATTERN_LENGTH} symbols", field="patterns")
    if chunk_size < 1:
        raise ConfigurationError(f"must be >= 1, got {chunk_size}", field="chunk_size")

    starts = range(0, len(word), chunk_size)
    counts = {}
    for p in patterns:
        if len(p) == 1:
            counts[p] = word.count(p)
            continue
        parts = ordered_map(lambda s: _count_in_chunk(word, p, s, min(s + chunk_size, len(word))), starts, workers)
        counts[p] = sum(parts)
    return counts


def seed_word_from_bits(bits: Union[str, Sequence[int]], alphabet: Sequence[str]) -> str:
    """
    Encode random input bits as a seed word.

    Each symbol consumes ceil(log2(len(alphabet))) bits (at least one), read
    big-endian; the value modulo the alphabet size picks the symbol. A
    trailing partial chunk is dropped.
    """
    values = [int(b) for b in bits]
    if any(v not in (0, 1) for v in values):
        raise ConfigurationError("bits must be 0 or 1", field="bits")
    width = max(1, math.ceil(math.log2(len(alphabet))))
    symbols = []
    for start in range(0, len(values) - width + 1, width):
        value = int("".join(str(v) for v in values[start : start + width]), 2)
        symbols.append(alphabet[value % len(alphabet)])
    if not symbols:
        raise ConfigurationError(f"need at least {width} bits for one symbol", field="bits")
    return "".join(symbols)


def random_seed_word(alphabet: Sequence[str], length: int, seed) -> str:
    """Seed word of the given length encoded from seeded random bits."""
    if not is_integer(length) or length < 1:
        raise ConfigurationError(f"must be an integer >= 1, got {length!r}", field="seed_length")
    width = max(1, math.ceil(math.log2(len(alphabet))))
    bits = make_rng(seed).integers(0, 2, size=length * width)
    return seed_word_from_bits(bits.tolist(), alphabet)


def _dominant_root(roots: np.ndarray) -> complex:
    """Largest-modulus root; among equal moduli prefer positive imaginary, then positive real part."""
    roots = np.asarray(roots, dtype=complex)
    top = np.max(np.abs(roots))
    candidates = [r for r in roots if abs(r) >= top * (1.0 - 1e-9)]
    return max(candidates, key=lambda r: (round(r.imag, 12), round(r.real, 12)))


def _minimal_recurrence(y: np.ndarray) -> np.ndarray:
    """Coefficients c of the shortest recurrence y[k+p] = sum_i c[i]*y[k+p-1-i] that fits y."""
    max_order = (len(y) - 1) // 2
    scale = max(np.linalg.norm(y), np.finfo(float).tiny)
    best = None
    for order in range(1, max_order + 1):
        rows = np.array([y[k : k + order][::-1] for k in range(len(y) - order)])
        target = y[order:]
        coefficients, *_ = np.linalg.lstsq(rows, target, rcond=None)
        error = np.linalg.norm(rows @ coefficients - target) / scale
        best = coefficients
        if error <= RECURRENCE_TOLERANCE:
            return coefficients
    logger.debug("No exact recurrence up to order %d; using the largest order", max_order)
    return best


def fit_complex_exponential(counts: Sequence[float], background: Optional[float] = None) -> GrowthFit:
    """
    Fit counts over generations to offset + Re(c * lam**n) by linear prediction.

    The shortest linear recurrence of the (background-subtracted) counts is
    found by least squares, its dominant root is lam, and c comes from a
    least-squares fit of all recurrence modes; for a complex lam the
    conjugate mode is folded into c. The residual is the RMS of the model
    error relative to max(|count|, 1).

    Raises:
        ConfigurationError: If fewer than 6 generations are given
        FitError: If the sequence is identically zero or not finite
    """
    raw = np.asarray(counts, dtype=float)
    if raw.size < MIN_FIT_GENERATIONS:
        raise ConfigurationError(f"need at least {MIN_FIT_GENERATIONS} generations, got {raw.size}", field="counts")
    offset = float(background) if background is not None else 0.0
    y = raw - offset
    if not np.all(np.isfinite(y)):
        raise FitError("counts must be finite")
    if not np.any(y):
        raise FitError("cannot fit an identically zero sequence")

    coefficients = _minimal_recurrence(y)
    roots = np.roots(np.concatenate([[1.0], -coefficients]))
    lam = _dominant_root(roots)

    n = np.arange(y.size)
    modes = np.power.outer(roots.astype(complex), n).T
    amplitudes, *_ = np.linalg.lstsq(modes, y.astype(complex), rcond=None)
    index = int(np.argmin(np.abs(roots - lam)))
    coefficient = complex(amplitudes[index])
    if abs(lam.imag) > 1e-12:
        coefficient *= 2.0

    model = np.real(coefficient * np.power(lam, n))
    residual = float(np.sqrt(np.mean(((model - y) / np.maximum(np.abs(raw), 1.0)) ** 2)))
    return GrowthFit(complex(lam), coefficient, residual, offset, len(coefficients))

"""Input-space frequency distributions and natural-language frequency lists.

Ranks are 1-based everywhere in the public API (rank 1 = most frequent);
the underlying probability vectors are 0-indexed numpy arrays.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

KIND_POWER_LAW = "power_law"
KIND_UNIFORM = "uniform"
KIND_CORPUS = "corpus"

LEXICON_TOP = 1000

_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class FrequencyModel:
    """Probability vector over n input types, most frequent first."""

    probs: np.ndarray
    kind: str

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a non-empty 1-d vector")
        if not np.all(probs > 0.0):
            raise ValueError("all probabilities must be strictly positive")
        if np.any(np.diff(probs) > 0.0):
            raise ValueError("probabilities must be non-increasing in rank")
        if abs(float(probs.sum()) - 1.0) > _SUM_TOL:
            raise ValueError("probabilities must sum to 1")
        if self.kind not in (KIND_POWER_LAW, KIND_UNIFORM, KIND_CORPUS):
            raise ValueError(f"unknown distribution kind: {self.kind!r}")

    @property
    def n(self) -> int:
        return int(self.probs.size)

    def prob_of_rank(self, rank: int) -> float:
        if not 1 <= rank <= self.n:
            raise ValueError(f"rank {rank} outside 1..{self.n}")
        return float(self.probs[rank - 1])


def power_law(n: int) -> FrequencyModel:
    """Rank-r probability proportional to 1/r (exponent -1), normalized."""
    if n < 1:
        raise ValueError("n must be >= 1")
    weights = 1.0 / np.arange(1, n + 1, dtype=np.float64)
    return FrequencyModel(weights / weights.sum(), KIND_POWER_LAW)


def uniform(n: int) -> FrequencyModel:
    if n < 1:
        raise ValueError("n must be >= 1")
    return FrequencyModel(np.full(n, 1.0 / n), KIND_UNIFORM)


def sample_batch(model: FrequencyModel, k: int, rng: np.random.Generator) -> np.ndarray:
    """k i.i.d. draws (with replacement) of 1-based ranks."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return rng.choice(model.n, size=k, replace=True, p=model.probs).astype(np.int64) + 1


@dataclass(frozen=True)
class CorpusLexicon:
    """Top frequency-list entries of a corpus, case-merged and letter-only."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("lexicon must have at least one entry")
        if len(self.entries) > LEXICON_TOP:
            raise ValueError(f"lexicon holds at most the top {LEXICON_TOP} entries")
        prev = None
        for word, freq in self.entries:
            if not word or not word.isalpha():
                raise ValueError(f"retained words must be purely alphabetic: {word!r}")
            if freq <= 0:
                raise ValueError(f"frequencies must be positive: {word!r} -> {freq}")
            if prev is not None and freq > prev:
                raise ValueError("frequencies must be non-increasing")
            prev = freq

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(w for w, _ in self.entries)

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([f for _, f in self.entries], dtype=np.float64)

    @property
    def alphabet_size(self) -> int:
        chars: set[str] = set()
        for word, _ in self.entries:
            chars.update(word)
        return len(chars)


def _parse_line(tokens: list[str], columns: int, path, lineno: int) -> tuple[str, float]:
    if len(tokens) != columns:
        raise ValueError(
            f"{path}: line {lineno}: expected {columns} columns, got {len(tokens)}"
        )
    if columns == 3:
        _, freq_tok, word = tokens
    else:
        word, freq_tok = tokens
    try:
        freq = float(freq_tok)
    except ValueError:
        raise ValueError(f"{path}: line {lineno}: bad frequency {freq_tok!r}") from None
    return word, freq


def load_lexicon(path) -> CorpusLexicon:
    """Read a frequency list (``rank freq word`` or ``word freq`` lines).

    Format is auto-detected from the first data line. Upper/lower-cased forms
    are merged (frequencies summed), words with non-letter characters are
    dropped, and the list is truncated to the top LEXICON_TOP entries.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read frequency list {path}: {exc}") from exc

    merged: dict[str, float] = {}
    columns = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if columns is None:
            if len(tokens) not in (2, 3):
                raise ValueError(
                    f"{path}: line {lineno}: expected 2 or 3 columns, got {len(tokens)}"
                )
            columns = len(tokens)
        word, freq = _parse_line(tokens, columns, path, lineno)
        if not word.isalpha():
            continue
        key = word.lower()
        merged[key] = merged.get(key, 0.0) + freq

    if not merged:
        raise ValueError(f"{path}: no usable entries after filtering")
    # ties broken by lexicographic word order for determinism
    ordered = sorted(merged.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ordered) < LEXICON_TOP:
        warnings.warn(
            f"{path}: only {len(ordered)} words survived filtering "
            f"(expected {LEXICON_TOP})",
            stacklevel=2,
        )
    return CorpusLexicon(tuple(ordered[:LEXICON_TOP]))


def save_lexicon(lexicon: CorpusLexicon, path) -> None:
    """Write two-column ``word freq`` lines; load_lexicon round-trips exactly."""
    lines = [f"{word}\t{freq!r}" for word, freq in lexicon.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def lexicon_lengths(lexicon: CorpusLexicon) -> np.ndarray:
    """Character count per word in rank order."""
    return np.array([len(w) for w in lexicon.words], dtype=np.int64)


def from_lexicon(lexicon: CorpusLexicon) -> FrequencyModel:
    """Normalized corpus frequencies as an input distribution."""
    freqs = lexicon.frequencies
    return FrequencyModel(freqs / freqs.sum(), KIND_CORPUS)

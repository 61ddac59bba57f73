"""Statistics over codes: efficiency, permutation significance, symbol usage,
repetition structure, and untrained-agent bias probes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import stdtr

from .agents import init_listener, init_speaker, listener_apply, sample_speaker_messages
from .codes import (
    EOS,
    Code,
    assign_unique_messages,
    message_space_size,
    CapacityError,
)
from .freq import FrequencyModel

SIGNIFICANCE_LEVEL = 0.005  # per side, the randomization test's operative threshold

_TIE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class LengthProfile:
    """Per-rank message lengths paired with the input distribution."""

    lengths: np.ndarray
    probs: FrequencyModel

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.float64)
        object.__setattr__(self, "lengths", lengths)
        if lengths.size != self.probs.n:
            raise ValueError("lengths and probabilities must share n")
        if np.any(lengths <= 0):
            raise ValueError("lengths must be positive")

    @property
    def mean_length(self) -> float:
        return float(self.lengths @ self.probs.probs)

    def smoothed(self, window: int) -> np.ndarray:
        return length_curve(self.lengths, window)


def _code_lengths(code) -> np.ndarray:
    if isinstance(code, Code):
        return code.lengths().astype(np.float64)
    return np.asarray(code, dtype=np.float64)


def mean_length(code, probs: FrequencyModel) -> float:
    """Probability-weighted mean message length (lengths count eos)."""
    lengths = _code_lengths(code)
    if lengths.size != probs.n:
        raise ValueError(f"code has {lengths.size} ranks but distribution has {probs.n}")
    return float(lengths @ probs.probs)


@dataclass(frozen=True)
class RandTestResult:
    e_observed: float
    left_p: float
    right_p: float
    permutations: int

    @property
    def significantly_small(self) -> bool:
        return self.left_p <= SIGNIFICANCE_LEVEL

    @property
    def significantly_large(self) -> bool:
        return self.right_p <= SIGNIFICANCE_LEVEL


def randomization_test(
    code,
    probs: FrequencyModel,
    permutations: int = 100_000,
    rng: np.random.Generator | None = None,
    chunk: int = 2000,
) -> RandTestResult:
    """Permutation test of the mean length against random rank/length pairings.

    Lengths (not whole messages) are shuffled across ranks, which leaves the
    statistic unchanged. Both p-values use add-one smoothing and count ties on
    both sides, so left_p + right_p >= 1.
    """
    if permutations < 1:
        raise ValueError("need at least one permutation")
    rng = np.random.default_rng(0) if rng is None else rng
    lengths = _code_lengths(code)
    if lengths.size != probs.n:
        raise ValueError(f"code has {lengths.size} ranks but distribution has {probs.n}")
    weights = probs.probs
    e_obs = float(lengths @ weights)
    tolerance = _TIE_RTOL * max(1.0, abs(e_obs))

    left = right = 0
    remaining = permutations
    while remaining > 0:
        block = min(chunk, remaining)
        perms = rng.permuted(np.tile(lengths, (block, 1)), axis=1)
        e_perm = perms @ weights
        left += int(np.count_nonzero(e_perm <= e_obs + tolerance))
        right += int(np.count_nonzero(e_perm >= e_obs - tolerance))
        remaining -= block
    return RandTestResult(
        e_observed=e_obs,
        left_p=(left + 1) / (permutations + 1),
        right_p=(right + 1) / (permutations + 1),
        permutations=permutations,
    )


def length_curve(lengths, window: int) -> np.ndarray:
    """Sliding-window mean over rank order; window w yields n - w + 1 points."""
    lengths = _code_lengths(lengths)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > lengths.size:
        raise ValueError(f"window {window} exceeds {lengths.size} ranks")
    if window == 1:
        return lengths.copy()
    kernel = np.full(window, 1.0 / window)
    return np.convolve(lengths, kernel, mode="valid")


@dataclass(eq=False)
class SymbolStats:
    """Unigram/bigram distributions over content symbols (eos excluded).

    Bigrams are adjacent ordered pairs within a message. Entropies are in
    natural log. Counts are kept so exact marginal identities can be checked.
    """

    unigram_counts: np.ndarray  # (a,)
    bigram_counts: np.ndarray   # (a, a)

    @property
    def unigram(self) -> np.ndarray:
        total = self.unigram_counts.sum()
        return self.unigram_counts / total if total > 0 else self.unigram_counts.copy()

    @property
    def bigram(self) -> np.ndarray:
        total = self.bigram_counts.sum()
        return self.bigram_counts / total if total > 0 else self.bigram_counts.copy()

    @property
    def unigram_entropy(self) -> float:
        return _entropy(self.unigram)

    @property
    def bigram_entropy(self) -> float:
        return _entropy(self.bigram)

    def top_symbols(self, k: int = 10) -> list[int]:
        """Most frequent content symbols, ties broken by ascending id."""
        probs = self.unigram
        attested = np.flatnonzero(probs > 0)
        ranked = sorted(attested, key=lambda s: (-probs[s], s))
        return [int(s) for s in ranked[:k]]


def _entropy(dist: np.ndarray) -> float:
    positive = dist[dist > 0]
    if positive.size == 0:
        return 0.0
    return float(-(positive * np.log(positive)).sum())


def symbol_stats(code: Code, weights: np.ndarray | None = None) -> SymbolStats:
    """Count symbols across all messages, one visit per input rank.

    ``weights`` switches to probability-weighted counts (one weight per rank);
    the default counts every message once.
    """
    a = code.alphabet.size
    uni = np.zeros(a)
    bi = np.zeros((a, a))
    if weights is None:
        weights = np.ones(code.n)
    elif len(weights) != code.n:
        raise ValueError("one weight per rank required")
    for msg, w in zip(code.messages, weights):
        content = np.array(msg[:-1], dtype=np.int64)
        if content.size:
            np.add.at(uni, content, w)
        if content.size > 1:
            np.add.at(bi, (content[:-1], content[1:]), w)
    return SymbolStats(uni, bi)


def uniform_reference_entropy(num_symbols: int) -> tuple[float, float]:
    """(unigram, bigram) entropy of a perfectly uniform code: ln k and ln k^2."""
    if num_symbols < 1:
        raise ValueError("num_symbols must be >= 1")
    return math.log(num_symbols), math.log(num_symbols * num_symbols)


@dataclass(frozen=True)
class RepetitionVerdict:
    symbol: int
    p_symbol: float
    p_pair: float

    @property
    def verdict(self) -> bool:
        return self.p_pair > self.p_symbol ** 2


def repetition_check(code: Code, top: int = 10) -> list[RepetitionVerdict]:
    """Self-bigram excess P(s,s) > P(s)^2 for the top unigram symbols."""
    stats = symbol_stats(code)
    unigram = stats.unigram
    bigram = stats.bigram
    return [
        RepetitionVerdict(s, float(unigram[s]), float(bigram[s, s]))
        for s in stats.top_symbols(top)
    ]


def strip_message(message: tuple[int, ...]) -> tuple[int, ...]:
    """Collapse every run of 2+ identical content symbols to one occurrence."""
    content = (sym for sym, _ in itertools.groupby(message[:-1]))
    return tuple(content) + (EOS,)


@dataclass(frozen=True, eq=False)
class StripResult:
    lengths: np.ndarray
    mean_before: float
    mean_after: float


def strip_repetitions(code: Code, probs: FrequencyModel) -> StripResult:
    """Lengths and weighted means before/after removing consecutive repeats."""
    stripped = [strip_message(m) for m in code.messages]
    lengths = np.array([len(m) for m in stripped], dtype=np.int64)
    return StripResult(
        lengths=lengths,
        mean_before=mean_length(code, probs),
        mean_after=mean_length(lengths, probs),
    )


def welch_t_test(sample_a, sample_b) -> float:
    """Two-sided Welch's t-test p-value."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least two observations")
    var_a = a.var(ddof=1)
    var_b = b.var(ddof=1)
    if var_a == 0.0 and var_b == 0.0:
        raise ValueError("degenerate samples: both variances are zero")
    se_a = var_a / a.size
    se_b = var_b / b.size
    t = (a.mean() - b.mean()) / math.sqrt(se_a + se_b)
    dof = (se_a + se_b) ** 2 / (
        se_a ** 2 / (a.size - 1) + se_b ** 2 / (b.size - 1)
    )
    return float(2.0 * stdtr(dof, -abs(t)))


# ---------------------------------------------------------------------------
# Untrained-agent probes
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SpeakerProbeResult:
    """Message lengths from an ensemble of untrained speakers, one code each."""

    lengths: np.ndarray  # (speakers, n)
    hidden_sizes: tuple[int, ...]
    unique: bool

    @property
    def mean_lengths(self) -> np.ndarray:
        return self.lengths.mean(axis=0)

    def binned_means(self, bin_size: int) -> np.ndarray:
        n = self.lengths.shape[1]
        usable = n - n % bin_size
        per_rank = self.lengths[:, :usable]
        return per_rank.reshape(self.lengths.shape[0], -1, bin_size).mean(axis=(0, 2))


def untrained_speaker_probe(
    n: int,
    alphabet_size: int,
    max_len: int,
    rng: np.random.Generator,
    hidden_sizes: tuple[int, ...] = (100, 250, 500),
    speakers_per_dim: int = 30,
    unique: bool = False,
    emb: int | None = None,
) -> SpeakerProbeResult:
    """Sample one message per input from freshly initialized speakers.

    Inputs are visited in descending-frequency rank order. In unique mode a
    message colliding with an earlier rank's is regenerated, mirroring the
    random-typing uniqueness constraint.
    """
    if unique and message_space_size(alphabet_size, max_len) < n:
        raise CapacityError(message_space_size(alphabet_size, max_len), n, alphabet_size, max_len)
    all_lengths = []
    order = np.arange(1, n + 1)
    for hidden in hidden_sizes:
        for _ in range(speakers_per_dim):
            params = init_speaker(n, alphabet_size, hidden, rng, emb=emb)
            if unique:
                def draw_fn(ranks: np.ndarray) -> list[tuple[int, ...]]:
                    return sample_speaker_messages(params, ranks, max_len, rng)

                assigned = assign_unique_messages(order, draw_fn)
                lengths = [len(assigned[r]) for r in range(1, n + 1)]
            else:
                messages = sample_speaker_messages(params, order, max_len, rng)
                lengths = [len(m) for m in messages]
            all_lengths.append(lengths)
    return SpeakerProbeResult(
        lengths=np.array(all_lengths, dtype=np.int64),
        hidden_sizes=tuple(hidden_sizes),
        unique=unique,
    )


@dataclass(frozen=True, eq=False)
class DiscriminabilityResult:
    mean: float
    std: float
    per_listener: np.ndarray


def listener_discriminability(
    code: Code,
    rng: np.random.Generator,
    listeners: int = 50,
    hidden: int = 100,
    emb: int | None = None,
    weights: np.ndarray | None = None,
) -> DiscriminabilityResult:
    """Mean pairwise L2 distance between hidden states at eos, across fresh listeners.

    Unweighted over the n(n-1)/2 message pairs by default; ``weights`` switches
    to an input-probability-weighted average.
    """
    n = code.n
    longest = int(code.lengths().max())
    padded = np.zeros((n, longest), dtype=np.int64)
    lengths = np.zeros(n, dtype=np.int64)
    for i, msg in enumerate(code.messages):
        padded[i, : len(msg)] = msg
        lengths[i] = len(msg)

    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.size != n:
            raise ValueError("one weight per rank required")

    means = np.empty(listeners)
    for k in range(listeners):
        params = init_listener(n, code.alphabet.size, hidden, rng, emb=emb)
        _, hidden_states, _ = listener_apply(params, padded, lengths)
        sq = (hidden_states * hidden_states).sum(axis=1)
        gram = hidden_states @ hidden_states.T
        dist_sq = np.maximum(sq[:, None] + sq[None, :] - 2.0 * gram, 0.0)
        # identical states must give exactly zero despite cancellation noise
        dist_sq[dist_sq <= 1e-14 * (sq[:, None] + sq[None, :])] = 0.0
        dists = np.sqrt(dist_sq)
        iu = np.triu_indices(n, k=1)
        if weights is None:
            means[k] = float(dists[iu].mean())
        else:
            pair_w = weights[iu[0]] * weights[iu[1]]
            means[k] = float((dists[iu] * pair_w).sum() / pair_w.sum())
    return DiscriminabilityResult(
        mean=float(means.mean()), std=float(means.std()), per_listener=means
    )


# ---------------------------------------------------------------------------
# Per-run analysis payload (analysis.json / curves.csv)
# ---------------------------------------------------------------------------


def analyze_code(
    code: Code,
    probs: FrequencyModel,
    permutations: int = 100_000,
    rng: np.random.Generator | None = None,
    window: int = 10,
) -> dict:
    """Full per-code statistics bundle, JSON-serializable and deterministic."""
    rng = np.random.default_rng(0) if rng is None else rng
    rand = randomization_test(code, probs, permutations, rng)
    stats = symbol_stats(code)
    verdicts = repetition_check(code)
    strip = strip_repetitions(code, probs)
    return {
        "n": code.n,
        "alphabet_size": code.alphabet.size,
        "max_len": code.max_len,
        "mean_length": mean_length(code, probs),
        "mean_length_unweighted": float(code.lengths().mean()),
        "unique": code.is_unique,
        "randomization": {
            "e_observed": rand.e_observed,
            "left_p": rand.left_p,
            "right_p": rand.right_p,
            "permutations": rand.permutations,
            "significantly_small": rand.significantly_small,
            "significantly_large": rand.significantly_large,
        },
        "unigram_entropy": stats.unigram_entropy,
        "bigram_entropy": stats.bigram_entropy,
        "repetition": {
            "verdicts": [
                {
                    "symbol": v.symbol,
                    "p_symbol": v.p_symbol,
                    "p_pair": v.p_pair,
                    "verdict": v.verdict,
                }
                for v in verdicts
            ],
            "fraction_true": (
                sum(v.verdict for v in verdicts) / len(verdicts) if verdicts else 0.0
            ),
        },
        "strip": {
            "mean_before": strip.mean_before,
            "mean_after": strip.mean_after,
        },
        "smoothing_window": window,
    }


def write_analysis_json(payload: dict, path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_curves_csv(path, lengths, window: int = 10) -> None:
    """rank, raw_length, smoothed_length rows; smoothed column runs out after
    n - window + 1 ranks."""
    import csv

    lengths = _code_lengths(lengths)
    smoothed = length_curve(lengths, window) if window <= lengths.size else np.array([])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("rank", "raw_length", "smoothed_length"))
        for i, raw in enumerate(lengths):
            smooth = repr(float(smoothed[i])) if i < smoothed.size else ""
            writer.writerow([i + 1, repr(float(raw)), smooth])

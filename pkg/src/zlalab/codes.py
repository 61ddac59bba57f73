"""Reference codes over a shared symbol alphabet.

A message is a tuple of symbol ids ending in the eos terminator (id 0);
its length counts the terminator, so the shortest possible message is
``(EOS,)`` with length 1. Content symbols are ids 1..a-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .freq import power_law

EOS = 0


class CapacityError(ValueError):
    """Message space too small for the requested number of inputs."""

    def __init__(self, space_size: int, n_inputs: int, alphabet_size: int, max_len: int):
        self.space_size = space_size
        self.n_inputs = n_inputs
        super().__init__(
            f"message space holds {space_size} distinct messages "
            f"(alphabet {alphabet_size}, max_len {max_len}) "
            f"but {n_inputs} inputs were requested"
        )


@dataclass(frozen=True)
class Alphabet:
    """Symbol inventory: ids 1..size-1 plus the distinguished eos (id 0)."""

    size: int

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("alphabet needs at least one content symbol plus eos")

    @property
    def content_symbols(self) -> range:
        return range(1, self.size)


def validate_message(message: tuple[int, ...], alphabet_size: int, max_len: int) -> None:
    if len(message) == 0 or len(message) > max_len:
        raise ValueError(f"message length must be in 1..{max_len}: {message}")
    if message[-1] != EOS:
        raise ValueError(f"message must end with eos: {message}")
    for sym in message[:-1]:
        if not 1 <= sym < alphabet_size:
            raise ValueError(f"symbol {sym} outside alphabet of size {alphabet_size}")


@dataclass(frozen=True, eq=False)
class Code:
    """One message per input rank 1..n over a shared alphabet."""

    messages: tuple[tuple[int, ...], ...]
    alphabet: Alphabet
    max_len: int

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a code needs at least one message")
        for msg in self.messages:
            validate_message(msg, self.alphabet.size, self.max_len)

    @property
    def n(self) -> int:
        return len(self.messages)

    @property
    def is_unique(self) -> bool:
        return len(set(self.messages)) == self.n

    def lengths(self) -> np.ndarray:
        return np.array([len(m) for m in self.messages], dtype=np.int64)

    def message_for_rank(self, rank: int) -> tuple[int, ...]:
        if not 1 <= rank <= self.n:
            raise ValueError(f"rank {rank} outside 1..{self.n}")
        return self.messages[rank - 1]


def message_space_size(alphabet_size: int, max_len: int) -> int:
    """Number of distinct eos-terminated messages of length <= max_len (exact int)."""
    if alphabet_size < 2 or max_len < 1:
        raise ValueError("need alphabet_size >= 2 and max_len >= 1")
    base = alphabet_size - 1
    return sum(base ** (length - 1) for length in range(1, max_len + 1))


def capacity_ratio(alphabet_size: int, max_len: int, n: int) -> float:
    """Message-space size divided by input count; < 1 means infeasible."""
    space = message_space_size(alphabet_size, max_len)
    try:
        return space / n
    except OverflowError:
        return float("inf")


def oc_length(rank: int, alphabet_size: int) -> int:
    """Length assigned to an input rank by the shortest-total-length code."""
    if rank < 1:
        raise ValueError("rank must be >= 1")
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    base = alphabet_size - 1
    length = 1
    cumulative = 1
    while cumulative < rank:
        length += 1
        cumulative += base ** (length - 1)
    return length


def optimal_code(n: int, alphabet_size: int, max_len: int, rng=None) -> Code:
    """Shortest-mean-length unique code; frequent ranks get the short messages.

    Within a length class, messages are assigned in lexicographic symbol-id
    order, which makes the construction deterministic.
    """
    space = message_space_size(alphabet_size, max_len)
    if space < n:
        raise CapacityError(space, n, alphabet_size, max_len)
    base = alphabet_size - 1
    messages = []
    length = 1
    class_start = 1  # first rank covered by the current length class
    class_size = 1
    for rank in range(1, n + 1):
        while rank >= class_start + class_size:
            class_start += class_size
            length += 1
            class_size = base ** (length - 1)
        index = rank - class_start
        symbols = []
        for position in range(length - 1):
            power = base ** (length - 2 - position)
            symbols.append(index // power + 1)
            index %= power
        messages.append(tuple(symbols) + (EOS,))
    code = Code(tuple(messages), Alphabet(alphabet_size), max_len)
    assert code.is_unique
    return code


def mt_length_pmf(alphabet_size: int, max_len: int) -> np.ndarray:
    """Length distribution of unconstrained random typing with eos probability 1/a.

    Entry l-1 holds P(length = l); the final entry absorbs all truncated
    messages, so the vector sums to 1 exactly.
    """
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be >= 2")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    p = 1.0 / alphabet_size
    lengths = np.arange(1, max_len + 1, dtype=np.float64)
    pmf = p * (1.0 - p) ** (lengths - 1.0)
    pmf[-1] = (1.0 - p) ** (max_len - 1.0)
    return pmf


def random_message(alphabet_size: int, max_len: int, rng: np.random.Generator) -> tuple[int, ...]:
    """One uniformly-typed message: eos probability 1/a per keystroke, truncated."""
    if max_len == 1:
        return (EOS,)
    draws = rng.integers(0, alphabet_size, size=max_len - 1)
    hits = np.flatnonzero(draws == EOS)
    if hits.size:
        content = draws[: hits[0]]
    else:
        content = draws
    return tuple(int(s) for s in content) + (EOS,)


def assign_unique_messages(order: np.ndarray, draw_fn, max_rounds: int = 100_000) -> dict[int, tuple[int, ...]]:
    """Assign a distinct message to every rank, regenerating on collision.

    ``order`` lists 1-based ranks in assignment priority; ``draw_fn(ranks)``
    returns one candidate message per listed rank. Rounds of batch draws are
    scanned in priority order, so earlier ranks win contested messages.
    """
    assigned: dict[int, tuple[int, ...]] = {}
    used: set[tuple[int, ...]] = set()
    pending = [int(r) for r in order]
    for _ in range(max_rounds):
        if not pending:
            return assigned
        candidates = draw_fn(np.array(pending, dtype=np.int64))
        still_pending = []
        for rank, msg in zip(pending, candidates):
            if msg in used:
                still_pending.append(rank)
            else:
                used.add(msg)
                assigned[rank] = msg
        pending = still_pending
    raise RuntimeError("uniqueness rejection did not terminate; check capacity")


def monkey_typing(
    n: int,
    alphabet_size: int,
    max_len: int,
    rng: np.random.Generator,
    unique: bool = True,
    order: str = "rank",
    probs=None,
) -> Code:
    """Random-typing code: uniform keystrokes, eos probability 1/a, truncation.

    ``order`` controls assignment priority under the uniqueness constraint:
    "rank" assigns in descending-frequency rank order (deterministic default),
    "sampled" draws the input sequence without replacement from ``probs``
    (power law by default), mirroring the sequential description.
    """
    if order not in ("rank", "sampled"):
        raise ValueError(f"unknown assignment order: {order!r}")
    alphabet = Alphabet(alphabet_size)

    def draw_fn(ranks: np.ndarray) -> list[tuple[int, ...]]:
        return [random_message(alphabet_size, max_len, rng) for _ in ranks]

    if not unique:
        messages = draw_fn(np.arange(1, n + 1))
        return Code(tuple(messages), alphabet, max_len)

    space = message_space_size(alphabet_size, max_len)
    if space < n:
        raise CapacityError(space, n, alphabet_size, max_len)
    if order == "sampled":
        model_probs = power_law(n).probs if probs is None else np.asarray(probs)
        priority = rng.choice(n, size=n, replace=False, p=model_probs) + 1
    else:
        priority = np.arange(1, n + 1)
    assigned = assign_unique_messages(priority, draw_fn)
    messages = tuple(assigned[rank] for rank in range(1, n + 1))
    code = Code(messages, alphabet, max_len)
    assert code.is_unique
    return code


def control_code(template: Code, rng: np.random.Generator) -> Code:
    """Resample content symbols i.i.d. from the template's unigram distribution.

    Per-rank lengths are preserved exactly, so the probability-weighted mean
    length is unchanged. Uniqueness is not enforced.
    """
    counts = np.zeros(template.alphabet.size, dtype=np.float64)
    for msg in template.messages:
        for sym in msg[:-1]:
            counts[sym] += 1.0
    total = counts.sum()
    if total == 0.0:
        return Code(template.messages, template.alphabet, template.max_len)
    unigram = counts / total
    symbols = np.arange(template.alphabet.size)
    messages = []
    for msg in template.messages:
        k = len(msg) - 1
        if k == 0:
            messages.append((EOS,))
            continue
        drawn = rng.choice(symbols, size=k, p=unigram)
        messages.append(tuple(int(s) for s in drawn) + (EOS,))
    return Code(tuple(messages), template.alphabet, template.max_len)


EOS_LABEL = "eos"


def format_code_tsv(code: Code) -> str:
    """One line per rank: ``rank<TAB>comma-separated content ids<TAB>eos``."""
    lines = []
    for rank, msg in enumerate(code.messages, start=1):
        content = ",".join(str(s) for s in msg[:-1])
        lines.append(f"{rank}\t{content}\t{EOS_LABEL}")
    return "\n".join(lines) + "\n"


def save_code_tsv(code: Code, path) -> None:
    Path(path).write_text(format_code_tsv(code), encoding="utf-8")


def parse_code_tsv(text: str, alphabet_size: int | None = None, max_len: int | None = None) -> Code:
    """Inverse of format_code_tsv; alphabet/max_len inferred when omitted."""
    messages = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        fields = raw.split("\t")
        if len(fields) != 3 or fields[2] != EOS_LABEL:
            raise ValueError(f"line {lineno}: expected rank<TAB>ids<TAB>{EOS_LABEL}")
        rank = int(fields[0])
        if rank != len(messages) + 1:
            raise ValueError(f"line {lineno}: ranks must run 1..n in order")
        content = tuple(int(tok) for tok in fields[1].split(",")) if fields[1] else ()
        messages.append(content + (EOS,))
    if not messages:
        raise ValueError("empty code file")
    if alphabet_size is None:
        widest = max((max(m[:-1], default=0) for m in messages), default=0)
        alphabet_size = max(widest + 1, 2)
    if max_len is None:
        max_len = max(len(m) for m in messages)
    return Code(tuple(messages), Alphabet(alphabet_size), max_len)


def load_code_tsv(path, alphabet_size: int | None = None, max_len: int | None = None) -> Code:
    return parse_code_tsv(Path(path).read_text(encoding="utf-8"), alphabet_size, max_len)

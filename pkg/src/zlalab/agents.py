"""Speaker and Listener agents: single-layer LSTMs with from-scratch backprop.

Speaker maps an input rank to a message by projecting the one-hot input into
its initial hidden state (initial cell state is zero unless a second
projection is enabled), feeding a dedicated start token, and emitting one
symbol per step from a categorical readout until eos. If no eos has been
produced after max_len-1 sampled symbols, eos is appended unsampled, so that
slot carries zero log-probability and zero entropy.

Listener embeds every symbol of a message including eos, runs the LSTM, and
classifies the input from the hidden state reached at eos.

All arithmetic is float64; every batched routine consumes randomness in a
fixed order, so results are bit-reproducible for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import EOS, validate_message
from .nn import LstmWeights, init_lstm, log_softmax, lstm_step, lstm_step_backward, softmax, uniform_init

CHECKPOINT_VERSION = 1


def _require_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")


@dataclass(eq=False)
class SpeakerParams:
    input_proj: np.ndarray            # (hidden, n): one-hot input -> initial hidden state
    lstm: LstmWeights                 # embedding -> hidden
    embeddings: np.ndarray            # (a+1, e): symbol rows 0..a-1, start token last
    out_w: np.ndarray                 # (a, hidden)
    out_b: np.ndarray                 # (a,)
    cell_proj: np.ndarray | None = None  # optional (hidden, n) initial-cell projection

    def __post_init__(self):
        for name, arr in self.named():
            _require_finite(name, arr)
        if self.input_proj.shape[0] != self.lstm.hidden:
            raise ValueError("input projection height must match the LSTM hidden size")
        if self.embeddings.shape[0] != self.alphabet_size + 1:
            raise ValueError("speaker embedding table needs a row per symbol plus the start token")
        if self.embeddings.shape[1] != self.lstm.input_dim:
            raise ValueError("embedding width must match the LSTM input size")
        if self.out_w.shape != (self.alphabet_size, self.lstm.hidden):
            raise ValueError("output projection shape mismatch")
        if self.out_b.shape != (self.alphabet_size,):
            raise ValueError("output bias shape mismatch")
        if self.cell_proj is not None and self.cell_proj.shape != self.input_proj.shape:
            raise ValueError("cell projection must match the input projection shape")

    @property
    def n(self) -> int:
        return self.input_proj.shape[1]

    @property
    def alphabet_size(self) -> int:
        return self.out_w.shape[0]

    @property
    def hidden(self) -> int:
        return self.lstm.hidden

    @property
    def start_row(self) -> int:
        return self.alphabet_size

    def named(self) -> list[tuple[str, np.ndarray]]:
        items = [("input_proj", self.input_proj)]
        if self.cell_proj is not None:
            items.append(("cell_proj", self.cell_proj))
        items += [
            ("lstm.w_x", self.lstm.w_x),
            ("lstm.w_h", self.lstm.w_h),
            ("lstm.b", self.lstm.b),
            ("embeddings", self.embeddings),
            ("out_w", self.out_w),
            ("out_b", self.out_b),
        ]
        return items


@dataclass(eq=False)
class ListenerParams:
    embeddings: np.ndarray  # (a, e)
    lstm: LstmWeights       # embedding -> hidden
    out_w: np.ndarray       # (n, hidden)
    out_b: np.ndarray       # (n,)

    def __post_init__(self):
        for name, arr in self.named():
            _require_finite(name, arr)
        if self.embeddings.shape[1] != self.lstm.input_dim:
            raise ValueError("embedding width must match the LSTM input size")
        if self.out_w.shape[1] != self.lstm.hidden:
            raise ValueError("output projection width must match the LSTM hidden size")
        if self.out_b.shape != (self.out_w.shape[0],):
            raise ValueError("output bias shape mismatch")

    @property
    def n(self) -> int:
        return self.out_w.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.embeddings.shape[0]

    @property
    def hidden(self) -> int:
        return self.lstm.hidden

    def named(self) -> list[tuple[str, np.ndarray]]:
        return [
            ("embeddings", self.embeddings),
            ("lstm.w_x", self.lstm.w_x),
            ("lstm.w_h", self.lstm.w_h),
            ("lstm.b", self.lstm.b),
            ("out_w", self.out_w),
            ("out_b", self.out_b),
        ]


def init_speaker(
    n: int,
    alphabet_size: int,
    hidden: int,
    rng: np.random.Generator,
    emb: int | None = None,
    project_cell: bool = False,
) -> SpeakerParams:
    if min(n, hidden) < 1 or alphabet_size < 2:
        raise ValueError("dimensions must be positive (alphabet_size >= 2)")
    emb = hidden if emb is None else emb
    input_proj = uniform_init(rng, (hidden, n))
    cell_proj = uniform_init(rng, (hidden, n)) if project_cell else None
    lstm = init_lstm(emb, hidden, rng)
    embeddings = uniform_init(rng, (alphabet_size + 1, emb))
    out_w = uniform_init(rng, (alphabet_size, hidden))
    out_b = np.zeros(alphabet_size)
    return SpeakerParams(input_proj, lstm, embeddings, out_w, out_b, cell_proj)


def init_listener(
    n: int,
    alphabet_size: int,
    hidden: int,
    rng: np.random.Generator,
    emb: int | None = None,
) -> ListenerParams:
    if min(n, hidden) < 1 or alphabet_size < 2:
        raise ValueError("dimensions must be positive (alphabet_size >= 2)")
    emb = hidden if emb is None else emb
    embeddings = uniform_init(rng, (alphabet_size, emb))
    lstm = init_lstm(emb, hidden, rng)
    out_w = uniform_init(rng, (n, hidden))
    out_b = np.zeros(n)
    return ListenerParams(embeddings, lstm, out_w, out_b)


def zero_grads(params) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.named()}


def _scatter_rows(target: np.ndarray, ids: np.ndarray, rows: np.ndarray) -> None:
    """target[ids[b]] += rows[b]; one-hot matmul beats ufunc.at for small tables."""
    if target.shape[0] <= 128:
        onehot = (ids == np.arange(target.shape[0])[:, None]).astype(np.float64)
        target += onehot @ rows
    else:
        np.add.at(target, ids, rows)


# ---------------------------------------------------------------------------
# Speaker forward passes (sampled, greedy, and teacher-forced replay)
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SpeakerRollout:
    """Batched speaker pass: messages plus per-step quantities for backprop."""

    ranks: np.ndarray       # (B,) 1-based input ranks
    messages: np.ndarray    # (B, L) symbol ids, eos-padded past each message
    lengths: np.ndarray     # (B,) message lengths counting eos
    n_sampled: np.ndarray   # (B,) steps actually drawn from the categorical
    log_probs: np.ndarray   # (B, T) per sampled step, zero elsewhere
    entropies: np.ndarray   # (B, T)
    sampled: np.ndarray     # (B, T) bool mask of sampled steps
    symbols: np.ndarray     # (B, T) symbol emitted at each executed step
    max_len: int
    caches: list | None = None       # per-step LSTM caches when requested
    step_probs: list | None = None   # per-step softmax (B, a) when requested

    @property
    def batch(self) -> int:
        return self.ranks.size

    @property
    def n_steps(self) -> int:
        return self.symbols.shape[1]


def _speaker_run(
    params: SpeakerParams,
    ranks: np.ndarray,
    max_len: int,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    forced: np.ndarray | None = None,
    keep_caches: bool = False,
) -> SpeakerRollout:
    """Shared loop for sampling, greedy decoding, and teacher-forced replay.

    ``forced`` (B, T) replays fixed symbols instead of drawing; rows shorter
    than T must be eos-padded. Sampling draws one uniform per batch row per
    executed step regardless of which rows are still alive.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    if ranks.ndim != 1 or ranks.size == 0:
        raise ValueError("ranks must be a non-empty vector")
    if np.any((ranks < 1) | (ranks > params.n)):
        raise ValueError(f"ranks must lie in 1..{params.n}")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if forced is None and not greedy and rng is None:
        raise ValueError("sample mode needs an rng")

    batch = ranks.size
    cols = ranks - 1
    h = params.input_proj[:, cols].T.copy()
    if params.cell_proj is not None:
        c = params.cell_proj[:, cols].T.copy()
    else:
        c = np.zeros_like(h)
    x = np.tile(params.embeddings[params.start_row], (batch, 1))

    alive = np.ones(batch, dtype=bool)
    lengths = np.full(batch, max_len, dtype=np.int64)
    sym_steps, logp_steps, ent_steps, alive_steps = [], [], [], []
    caches = [] if keep_caches else None
    probs_steps = [] if keep_caches else None

    rows = np.arange(batch)
    for t in range(max_len - 1):
        if not alive.any():
            break
        h, c, cache = lstm_step(params.lstm, x, h, c)
        logits = h @ params.out_w.T + params.out_b
        logp = log_softmax(logits)
        probs = np.exp(logp)
        if forced is not None:
            y = forced[:, t]
        elif greedy:
            y = logits.argmax(axis=1)
        else:
            u = rng.random(batch)
            y = np.minimum(
                (probs.cumsum(axis=1) < u[:, None]).sum(axis=1),
                params.alphabet_size - 1,
            )
        step_logp = np.where(alive, logp[rows, y], 0.0)
        step_ent = np.where(alive, -(probs * logp).sum(axis=1), 0.0)
        newly_done = alive & (y == EOS)
        lengths[newly_done] = t + 1
        y = np.where(alive, y, EOS)

        sym_steps.append(y.astype(np.int64))
        logp_steps.append(step_logp)
        ent_steps.append(step_ent)
        alive_steps.append(alive.copy())
        if keep_caches:
            caches.append(cache)
            probs_steps.append(probs)

        alive = alive & (y != EOS)
        x = params.embeddings[y]

    n_steps = len(sym_steps)
    if n_steps:
        symbols = np.stack(sym_steps, axis=1)
        log_probs = np.stack(logp_steps, axis=1)
        entropies = np.stack(ent_steps, axis=1)
        sampled = np.stack(alive_steps, axis=1)
    else:
        symbols = np.zeros((batch, 0), dtype=np.int64)
        log_probs = np.zeros((batch, 0))
        entropies = np.zeros((batch, 0))
        sampled = np.zeros((batch, 0), dtype=bool)

    longest = int(lengths.max())
    messages = np.zeros((batch, longest), dtype=np.int64)
    messages[:, : min(n_steps, longest)] = symbols[:, : min(n_steps, longest)]
    messages[rows, lengths - 1] = EOS
    n_sampled = np.where(lengths < max_len, lengths, max_len - 1)

    return SpeakerRollout(
        ranks=ranks,
        messages=messages,
        lengths=lengths,
        n_sampled=n_sampled,
        log_probs=log_probs,
        entropies=entropies,
        sampled=sampled,
        symbols=symbols,
        max_len=max_len,
        caches=caches,
        step_probs=probs_steps,
    )


def speaker_rollout(
    params: SpeakerParams,
    ranks: np.ndarray,
    max_len: int,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
    keep_caches: bool = False,
) -> SpeakerRollout:
    return _speaker_run(params, ranks, max_len, rng=rng, greedy=greedy, keep_caches=keep_caches)


def speaker_replay(
    params: SpeakerParams,
    input_rank: int,
    message: tuple[int, ...],
    max_len: int,
    keep_caches: bool = False,
) -> SpeakerRollout:
    """Teacher-forced pass over a fixed message (batch of one)."""
    validate_message(message, params.alphabet_size, max_len)
    length = len(message)
    n_sampled = length if length < max_len else max_len - 1
    forced = np.full((1, n_sampled), EOS, dtype=np.int64)
    forced[0, :n_sampled] = message[:n_sampled]
    return _speaker_run(
        params,
        np.array([input_rank], dtype=np.int64),
        max_len,
        forced=forced,
        keep_caches=keep_caches,
    )


@dataclass(eq=False)
class SpeakerTrace:
    """Record of one speaker emission, aligned symbol-for-symbol with the message.

    The slot for an appended (unsampled) eos carries zero log-probability and
    zero entropy.
    """

    input_rank: int
    message: tuple[int, ...]
    step_log_probs: np.ndarray
    step_entropies: np.ndarray
    max_len: int

    def __post_init__(self):
        if len(self.message) != self.step_log_probs.size or len(self.message) != self.step_entropies.size:
            raise ValueError("trace arrays must align with the message")
        if np.any(self.step_log_probs > 1e-12):
            raise ValueError("log-probabilities must be <= 0")
        if np.any(self.step_entropies < -1e-12):
            raise ValueError("entropies must be >= 0")

    @property
    def natural_eos(self) -> bool:
        return len(self.message) < self.max_len

    @property
    def n_sampled(self) -> int:
        return len(self.message) if self.natural_eos else self.max_len - 1


def _trace_from_rollout(roll: SpeakerRollout, row: int = 0) -> SpeakerTrace:
    length = int(roll.lengths[row])
    n_sampled = int(roll.n_sampled[row])
    message = tuple(int(s) for s in roll.messages[row, :length])
    logp = np.zeros(length)
    ent = np.zeros(length)
    logp[:n_sampled] = roll.log_probs[row, :n_sampled]
    ent[:n_sampled] = roll.entropies[row, :n_sampled]
    return SpeakerTrace(int(roll.ranks[row]), message, logp, ent, roll.max_len)


def speaker_forward(
    params: SpeakerParams,
    input_rank: int,
    max_len: int,
    rng: np.random.Generator | None = None,
    greedy: bool = False,
) -> SpeakerTrace:
    """Emit one message for an input rank (sample mode unless greedy)."""
    roll = _speaker_run(params, np.array([input_rank]), max_len, rng=rng, greedy=greedy)
    return _trace_from_rollout(roll)


def speaker_score(params: SpeakerParams, input_rank: int, message: tuple[int, ...], max_len: int):
    """(sum log-prob, sum entropy) of a fixed message under the current params."""
    roll = speaker_replay(params, input_rank, message, max_len)
    return float(roll.log_probs.sum()), float(roll.entropies.sum())


def speaker_backward_batch(
    params: SpeakerParams,
    roll: SpeakerRollout,
    advantages: np.ndarray,
    entropy_coeff: float = 0.0,
    entropy_mean: bool = False,
) -> dict[str, np.ndarray]:
    """Gradient of sum_b [adv_b * log P(m_b) - coeff * entropy(m_b)] over the batch.

    The advantage is treated as a constant. Returns the un-normalized sum of
    per-example gradients keyed like ``params.named()``.
    """
    if roll.caches is None:
        raise ValueError("rollout must be produced with keep_caches=True")
    advantages = np.asarray(advantages, dtype=np.float64)
    if advantages.shape != (roll.batch,):
        raise ValueError("one advantage per batch row required")

    grads = zero_grads(params)
    if entropy_mean:
        coeff_rows = entropy_coeff / np.maximum(roll.n_sampled, 1)
    else:
        coeff_rows = np.full(roll.batch, float(entropy_coeff))

    rows = np.arange(roll.batch)
    dh_next = np.zeros((roll.batch, params.hidden))
    dc_next = np.zeros_like(dh_next)
    for t in reversed(range(roll.n_steps)):
        cache = roll.caches[t]
        probs = roll.step_probs[t]
        y = roll.symbols[:, t]
        alive = roll.sampled[:, t]
        ent = roll.entropies[:, t]

        dlogits = advantages[:, None] * (-probs)
        dlogits[rows, y] += advantages
        if entropy_coeff != 0.0:
            # d(-entropy)/dlogits = probs * (log probs + entropy)
            logp = np.log(np.maximum(probs, 1e-300))
            dlogits += coeff_rows[:, None] * probs * (logp + ent[:, None])
        dlogits *= alive[:, None]

        gate_o, tanh_c = cache[6], cache[7]
        h_t = gate_o * tanh_c
        grads["out_w"] += dlogits.T @ h_t
        grads["out_b"] += dlogits.sum(axis=0)

        dh = dh_next + dlogits @ params.out_w
        dx, dh_next, dc_next = lstm_step_backward(
            params.lstm, cache, dh, dc_next,
            grads["lstm.w_x"], grads["lstm.w_h"], grads["lstm.b"],
        )
        if t == 0:
            grads["embeddings"][params.start_row] += dx.sum(axis=0)
        else:
            _scatter_rows(grads["embeddings"], roll.symbols[:, t - 1], dx)

    cols = roll.ranks - 1
    acc = np.zeros((params.n, params.hidden))
    _scatter_rows(acc, cols, dh_next)
    grads["input_proj"] += acc.T
    if params.cell_proj is not None:
        acc_c = np.zeros((params.n, params.hidden))
        _scatter_rows(acc_c, cols, dc_next)
        grads["cell_proj"] += acc_c.T
    return grads


def speaker_backward(
    params: SpeakerParams,
    trace: SpeakerTrace,
    advantage: float,
    entropy_coeff: float = 0.0,
    entropy_mean: bool = False,
) -> dict[str, np.ndarray]:
    """Exact gradient of advantage * log P(message) - coeff * sum of entropies.

    The trace is replayed teacher-forced against the given parameters; a trace
    that was not produced by them is rejected.
    """
    if not 1 <= trace.input_rank <= params.n:
        raise ValueError("trace input rank outside the parameter input space")
    roll = speaker_replay(params, trace.input_rank, trace.message, trace.max_len, keep_caches=True)
    replayed = roll.log_probs[0, : roll.n_sampled[0]]
    recorded = trace.step_log_probs[: trace.n_sampled]
    if not np.allclose(replayed, recorded, atol=1e-9, rtol=1e-9):
        raise ValueError("trace does not match these parameters")
    return speaker_backward_batch(
        params, roll, np.array([advantage]), entropy_coeff, entropy_mean
    )


def sample_speaker_messages(
    params: SpeakerParams,
    ranks: np.ndarray,
    max_len: int,
    rng: np.random.Generator,
) -> list[tuple[int, ...]]:
    """Forward-only sample-mode messages for many inputs at once.

    Finished rows are dropped from the batch each step, so cost scales with
    total emitted symbols rather than batch * max_len. Draw order differs from
    speaker_rollout but the per-message distribution is identical.
    """
    ranks = np.asarray(ranks, dtype=np.int64)
    batch = ranks.size
    if max_len == 1:
        return [(EOS,)] * batch
    if np.any((ranks < 1) | (ranks > params.n)):
        raise ValueError(f"ranks must lie in 1..{params.n}")

    cols = ranks - 1
    h = params.input_proj[:, cols].T.copy()
    if params.cell_proj is not None:
        c = params.cell_proj[:, cols].T.copy()
    else:
        c = np.zeros_like(h)
    x = np.tile(params.embeddings[params.start_row], (batch, 1))

    active = np.arange(batch)
    symbols = np.zeros((batch, max_len - 1), dtype=np.int64)
    lengths = np.full(batch, max_len, dtype=np.int64)
    for t in range(max_len - 1):
        if active.size == 0:
            break
        h, c, _ = lstm_step(params.lstm, x, h, c)
        logits = h @ params.out_w.T + params.out_b
        probs = softmax(logits)
        u = rng.random(active.size)
        y = np.minimum(
            (probs.cumsum(axis=1) < u[:, None]).sum(axis=1),
            params.alphabet_size - 1,
        )
        symbols[active, t] = y
        done = y == EOS
        lengths[active[done]] = t + 1
        keep = ~done
        active = active[keep]
        h = h[keep]
        c = c[keep]
        x = params.embeddings[y[keep]]

    return [
        tuple(int(s) for s in symbols[b, : lengths[b] - 1]) + (EOS,)
        for b in range(batch)
    ]


# ---------------------------------------------------------------------------
# Listener
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ListenerOutput:
    logits: np.ndarray        # (n,)
    hidden_at_eos: np.ndarray  # (hidden,)


def listener_apply(
    params: ListenerParams,
    messages: np.ndarray,
    lengths: np.ndarray,
    keep_caches: bool = False,
):
    """Consume a padded batch of messages; the state freezes once eos is read.

    Returns (logits (B, n), hidden_at_eos (B, h), bundle) where bundle feeds
    listener_backward_batch when caches were kept.
    """
    messages = np.asarray(messages, dtype=np.int64)
    lengths = np.asarray(lengths, dtype=np.int64)
    if messages.ndim != 2:
        raise ValueError("messages must be a (batch, steps) matrix")
    if np.any((messages < 0) | (messages >= params.alphabet_size)):
        raise ValueError(f"symbol id outside alphabet of size {params.alphabet_size}")
    batch, n_steps = messages.shape
    h = np.zeros((batch, params.hidden))
    c = np.zeros_like(h)
    caches = [] if keep_caches else None
    masks = [] if keep_caches else None
    for t in range(n_steps):
        x = params.embeddings[messages[:, t]]
        h_new, c_new, cache = lstm_step(params.lstm, x, h, c)
        mask = t < lengths
        h = np.where(mask[:, None], h_new, h)
        c = np.where(mask[:, None], c_new, c)
        if keep_caches:
            caches.append(cache)
            masks.append(mask)
    logits = h @ params.out_w.T + params.out_b
    bundle = (messages, caches, masks, h) if keep_caches else None
    return logits, h, bundle


def listener_backward_batch(params: ListenerParams, bundle, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Backprop a (B, n) logit gradient through the unrolled listener (batch sum)."""
    if bundle is None:
        raise ValueError("listener_apply must be called with keep_caches=True")
    messages, caches, masks, h_final = bundle
    grads = zero_grads(params)
    grads["out_w"] += dlogits.T @ h_final
    grads["out_b"] += dlogits.sum(axis=0)
    dh = dlogits @ params.out_w
    dc = np.zeros_like(dh)
    for t in reversed(range(len(caches))):
        mask = masks[t][:, None]
        dh_step = np.where(mask, dh, 0.0)
        dc_step = np.where(mask, dc, 0.0)
        dx, dh_lstm, dc_lstm = lstm_step_backward(
            params.lstm, caches[t], dh_step, dc_step,
            grads["lstm.w_x"], grads["lstm.w_h"], grads["lstm.b"],
        )
        dh = np.where(mask, 0.0, dh) + dh_lstm
        dc = np.where(mask, 0.0, dc) + dc_lstm
        _scatter_rows(grads["embeddings"], messages[:, t], dx)
    return grads


def listener_forward(params: ListenerParams, message: tuple[int, ...]) -> ListenerOutput:
    """Consume one whole message including eos."""
    validate_message(message, params.alphabet_size, max_len=len(message))
    row = np.array([message], dtype=np.int64)
    logits, hidden, _ = listener_apply(params, row, np.array([len(message)]))
    return ListenerOutput(logits[0], hidden[0])


def listener_backward(params: ListenerParams, message: tuple[int, ...], target_rank: int):
    """Cross-entropy loss against the true input plus its exact gradient."""
    validate_message(message, params.alphabet_size, max_len=len(message))
    if not 1 <= target_rank <= params.n:
        raise ValueError(f"target rank {target_rank} outside 1..{params.n}")
    row = np.array([message], dtype=np.int64)
    logits, _, bundle = listener_apply(params, row, np.array([len(message)]), keep_caches=True)
    logp = log_softmax(logits)
    loss = -float(logp[0, target_rank - 1])
    dlogits = np.exp(logp)
    dlogits[0, target_rank - 1] -= 1.0
    grads = listener_backward_batch(params, bundle, dlogits)
    return loss, grads


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(path, speaker: SpeakerParams, listener: ListenerParams) -> None:
    """Flat named-tensor container (npz); round-trips bit-exactly."""
    arrays = {"format_version": np.array(CHECKPOINT_VERSION)}
    for name, arr in speaker.named():
        arrays[f"speaker/{name}"] = arr
    for name, arr in listener.named():
        arrays[f"listener/{name}"] = arr
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        tensors = {key: data[key] for key in data.files if key != "format_version"}
    speaker = SpeakerParams(
        input_proj=tensors["speaker/input_proj"],
        lstm=LstmWeights(
            tensors["speaker/lstm.w_x"], tensors["speaker/lstm.w_h"], tensors["speaker/lstm.b"]
        ),
        embeddings=tensors["speaker/embeddings"],
        out_w=tensors["speaker/out_w"],
        out_b=tensors["speaker/out_b"],
        cell_proj=tensors.get("speaker/cell_proj"),
    )
    listener = ListenerParams(
        embeddings=tensors["listener/embeddings"],
        lstm=LstmWeights(
            tensors["listener/lstm.w_x"], tensors["listener/lstm.w_h"], tensors["listener/lstm.b"]
        ),
        out_w=tensors["listener/out_w"],
        out_b=tensors["listener/out_b"],
    )
    return speaker, listener

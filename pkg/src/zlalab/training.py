"""Joint speaker/listener optimization on the reconstruction game.

Each mini-batch samples inputs with replacement, rolls the speaker out in
sample mode, scores the listener by cross-entropy, and applies one Adam step
per agent. The listener pathway backpropagates the cross-entropy alone; the
speaker pathway follows a score-function gradient whose advantage is the
(optionally length-penalized) loss minus a running-mean baseline, plus an
entropy bonus. Gradients are averaged over the batch, so the learning rate is
batch-size independent.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import freq
from .agents import (
    ListenerParams,
    SpeakerParams,
    SpeakerTrace,
    init_listener,
    init_speaker,
    listener_apply,
    listener_backward_batch,
    load_checkpoint,
    save_checkpoint,
    speaker_backward_batch,
    speaker_rollout,
)
from .codes import Alphabet, Code, load_code_tsv, message_space_size, save_code_tsv
from .nn import log_softmax

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

INPUT_DISTS = ("power_law", "uniform")


@dataclass
class TrainConfig:
    n: int = 1000
    alphabet_size: int = 40
    max_len: int = 30
    speaker_hidden: int = 100
    listener_hidden: int = 100
    embedding_dim: int | None = None  # defaults to each agent's own hidden size
    learning_rate: float = 0.001
    entropy_coeff: float = 1.0
    length_penalty: float = 0.0
    episodes: int = 2500
    batches_per_episode: int = 100
    batch_size: int = 5120
    seed: int = 0
    input_dist: str = "power_law"
    success_threshold: float = 0.99
    project_cell: bool = False
    entropy_mean: bool = False
    baseline_per_example: bool = False
    eval_every: int = 0  # > 0 evaluates periodically and stops once successful

    def __post_init__(self):
        counts = (
            self.n, self.alphabet_size - 1, self.max_len,
            self.speaker_hidden, self.listener_hidden,
            self.episodes, self.batches_per_episode, self.batch_size,
        )
        if min(counts) < 1:
            raise ValueError("all counts must be positive (alphabet_size >= 2)")
        if self.speaker_hidden < self.listener_hidden:
            raise ValueError("speaker hidden size must be >= listener hidden size")
        if self.length_penalty < 0:
            raise ValueError("length penalty must be >= 0")
        if self.input_dist not in INPUT_DISTS:
            raise ValueError(f"input_dist must be one of {INPUT_DISTS}")

    def input_model(self) -> freq.FrequencyModel:
        if self.input_dist == "uniform":
            return freq.uniform(self.n)
        return freq.power_law(self.n)


@dataclass
class BaselineState:
    """Running mean of observed batch losses."""

    mean: float = 0.0
    count: int = 0

    def update(self, value: float) -> None:
        self.count += 1
        self.mean += (value - self.mean) / self.count

    def update_many(self, values: np.ndarray) -> None:
        k = values.size
        total = self.mean * self.count + float(values.sum())
        self.count += k
        self.mean = total / self.count


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(
            m={name: np.zeros_like(arr) for name, arr in params.named()},
            v={name: np.zeros_like(arr) for name, arr in params.named()},
        )


def adam_step(state: AdamState, params, grads: dict[str, np.ndarray], lr: float) -> None:
    """Standard bias-corrected Adam update, applied in place."""
    state.t += 1
    correction1 = 1.0 - ADAM_BETA1 ** state.t
    correction2 = 1.0 - ADAM_BETA2 ** state.t
    for name, arr in params.named():
        g = grads[name]
        if g.shape != arr.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        arr -= lr * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPS)


def surrogate_terms(
    loss: float,
    trace: SpeakerTrace,
    baseline: BaselineState,
    cfg: TrainConfig,
) -> tuple[float, float]:
    """(listener scale, speaker advantage) for one example.

    The length penalty enters only the speaker advantage; the listener pathway
    always backpropagates the plain cross-entropy.
    """
    penalized = loss + cfg.length_penalty * len(trace.message)
    return 1.0, penalized - baseline.mean


@dataclass
class EpisodeMetrics:
    episode: int
    loss: float
    mean_length: float
    train_accuracy: float


@dataclass
class RunRecord:
    config: TrainConfig
    metrics: list[EpisodeMetrics]
    speaker: SpeakerParams | None
    listener: ListenerParams | None
    code: Code
    eval_accuracy: float
    eval_mean_length: float
    code_is_unique: bool
    status: str
    reason: str
    episodes_run: int
    baseline: BaselineState = field(default_factory=BaselineState)

    @property
    def successful(self) -> bool:
        return self.status == "success"


def evaluate(
    speaker: SpeakerParams,
    listener: ListenerParams,
    n: int,
    max_len: int,
) -> tuple[float, Code, float]:
    """Greedy-decode every input once with equal weight.

    Returns (accuracy, code, mean message length). The greedy code is not
    guaranteed unique; callers should record Code.is_unique.
    """
    ranks = np.arange(1, n + 1, dtype=np.int64)
    roll = speaker_rollout(speaker, ranks, max_len, greedy=True)
    logits, _, _ = listener_apply(listener, roll.messages, roll.lengths)
    accuracy = float((logits.argmax(axis=1) == ranks - 1).mean())
    messages = tuple(
        tuple(int(s) for s in roll.messages[b, : roll.lengths[b]]) for b in range(n)
    )
    code = Code(messages, Alphabet(speaker.alphabet_size), max_len)
    return accuracy, code, float(roll.lengths.mean())


def train(cfg: TrainConfig, rng: np.random.Generator | None = None) -> RunRecord:
    """Run the full schedule; deterministic given cfg.seed (or a caller rng)."""
    if message_space_size(cfg.alphabet_size, cfg.max_len) < cfg.n:
        raise ValueError("message space cannot cover the input space (capacity < n)")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    model = cfg.input_model()

    speaker = init_speaker(
        cfg.n, cfg.alphabet_size, cfg.speaker_hidden, rng,
        emb=cfg.embedding_dim, project_cell=cfg.project_cell,
    )
    listener = init_listener(
        cfg.n, cfg.alphabet_size, cfg.listener_hidden, rng, emb=cfg.embedding_dim
    )
    adam_speaker = AdamState.for_params(speaker)
    adam_listener = AdamState.for_params(listener)
    baseline = BaselineState()

    metrics: list[EpisodeMetrics] = []
    failure_reason = None
    rows = np.arange(cfg.batch_size)
    stopped_early = False

    for episode in range(1, cfg.episodes + 1):
        loss_sum = 0.0
        length_sum = 0.0
        correct_sum = 0.0
        examples = 0
        for _ in range(cfg.batches_per_episode):
            ranks = freq.sample_batch(model, cfg.batch_size, rng)
            roll = speaker_rollout(speaker, ranks, cfg.max_len, rng=rng, keep_caches=True)
            logits, _, bundle = listener_apply(
                listener, roll.messages, roll.lengths, keep_caches=True
            )
            logp = log_softmax(logits)
            losses = -logp[rows, ranks - 1]
            if not np.all(np.isfinite(losses)):
                failure_reason = f"non-finite loss in episode {episode}"
                break

            penalized = losses + cfg.length_penalty * roll.lengths
            advantages = penalized - baseline.mean

            dlogits = np.exp(logp)
            dlogits[rows, ranks - 1] -= 1.0
            dlogits /= cfg.batch_size
            listener_grads = listener_backward_batch(listener, bundle, dlogits)

            speaker_grads = speaker_backward_batch(
                speaker, roll, advantages, cfg.entropy_coeff, cfg.entropy_mean
            )
            for g in speaker_grads.values():
                g /= cfg.batch_size

            adam_step(adam_listener, listener, listener_grads, cfg.learning_rate)
            adam_step(adam_speaker, speaker, speaker_grads, cfg.learning_rate)

            # baseline sees this batch only after its advantage was computed
            if cfg.baseline_per_example:
                baseline.update_many(penalized)
            else:
                baseline.update(float(penalized.mean()))

            loss_sum += float(losses.sum())
            length_sum += float(roll.lengths.sum())
            correct_sum += float((logits.argmax(axis=1) == ranks - 1).sum())
            examples += cfg.batch_size

        if examples:
            metrics.append(
                EpisodeMetrics(
                    episode=episode,
                    loss=loss_sum / examples,
                    mean_length=length_sum / examples,
                    train_accuracy=correct_sum / examples,
                )
            )
        if failure_reason:
            break
        if cfg.eval_every and episode % cfg.eval_every == 0 and episode < cfg.episodes:
            accuracy, _, _ = evaluate(speaker, listener, cfg.n, cfg.max_len)
            if accuracy > cfg.success_threshold:
                stopped_early = True
                break

    accuracy, code, mean_length = evaluate(speaker, listener, cfg.n, cfg.max_len)
    if failure_reason:
        status, reason = "failure", failure_reason
    elif accuracy > cfg.success_threshold:
        status = "success"
        reason = "stopped early on success" if stopped_early else "completed"
    else:
        status = "failure"
        reason = f"evaluation accuracy {accuracy:.4f} <= {cfg.success_threshold}"

    return RunRecord(
        config=cfg,
        metrics=metrics,
        speaker=speaker,
        listener=listener,
        code=code,
        eval_accuracy=accuracy,
        eval_mean_length=mean_length,
        code_is_unique=code.is_unique,
        status=status,
        reason=reason,
        episodes_run=len(metrics),
        baseline=baseline,
    )


# ---------------------------------------------------------------------------
# Run persistence: config.json / metrics.csv / code.tsv / params.ckpt / status
# ---------------------------------------------------------------------------

METRICS_HEADER = ("episode", "loss", "mean_length", "train_accuracy")


def write_metrics_csv(path, metrics: list[EpisodeMetrics]) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in metrics:
            writer.writerow(
                [row.episode, repr(row.loss), repr(row.mean_length), repr(row.train_accuracy)]
            )


def read_metrics_csv(path) -> list[EpisodeMetrics]:
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"unexpected metrics header: {header}")
        return [
            EpisodeMetrics(int(ep), float(loss), float(length), float(acc))
            for ep, loss, length, acc in reader
        ]


def save_run(record: RunRecord, run_dir) -> None:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    config = dataclasses.asdict(record.config)
    (run_dir / "config.json").write_text(
        json.dumps(config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    write_metrics_csv(run_dir / "metrics.csv", record.metrics)
    save_code_tsv(record.code, run_dir / "code.tsv")
    if record.speaker is not None and record.listener is not None:
        save_checkpoint(run_dir / "params.ckpt", record.speaker, record.listener)
    status = {
        "status": record.status,
        "reason": record.reason,
        "eval_accuracy": record.eval_accuracy,
        "eval_mean_length": record.eval_mean_length,
        "code_is_unique": record.code_is_unique,
        "episodes_run": record.episodes_run,
    }
    (run_dir / "status").write_text(
        json.dumps(status, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_run(run_dir, load_params: bool = True) -> RunRecord:
    run_dir = Path(run_dir)
    config = TrainConfig(**json.loads((run_dir / "config.json").read_text()))
    metrics = read_metrics_csv(run_dir / "metrics.csv")
    status = json.loads((run_dir / "status").read_text())
    code = load_code_tsv(run_dir / "code.tsv", config.alphabet_size, config.max_len)
    speaker = listener = None
    if load_params and (run_dir / "params.ckpt").exists():
        speaker, listener = load_checkpoint(run_dir / "params.ckpt")
    return RunRecord(
        config=config,
        metrics=metrics,
        speaker=speaker,
        listener=listener,
        code=code,
        eval_accuracy=float(status["eval_accuracy"]),
        eval_mean_length=float(status["eval_mean_length"]),
        code_is_unique=bool(status["code_is_unique"]),
        status=str(status["status"]),
        reason=str(status["reason"]),
        episodes_run=int(status["episodes_run"]),
    )

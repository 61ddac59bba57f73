"""Experiment orchestration: grid sweeps, persistence, aggregation, plots, tables.

Every run lives in its own directory under ``<out>/runs`` and is resumable:
a directory whose status file and artifacts load cleanly is never recomputed,
so killing and restarting a sweep converges to the same report. Workers never
share mutable state; results are deterministic at any parallelism level.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import freq
from .analysis import analyze_code, length_curve, mean_length, write_analysis_json, write_curves_csv
from .codes import Code, capacity_ratio, load_code_tsv, message_space_size, monkey_typing, optimal_code, save_code_tsv
from .training import TrainConfig, save_run, train

MODES = ("train", "reference-only", "analyze", "probe")

DESK_GRID = dict(alphabet_sizes=(40,), max_lens=(10,))
PAPER_GRID = dict(alphabet_sizes=(3, 5, 10, 40, 1000), max_lens=(2, 6, 11, 30))
PAPER_HIDDEN_PAIRS = ((100, 100), (250, 100), (250, 250), (500, 250))
PAPER_ENTROPY_COEFFS = (1.0, 1.5, 2.0)

# Desk-scale optimization settings; see TrainConfig for the paper-scale defaults.
DESK_TRAIN = dict(
    n=100,
    episodes=150,
    batches_per_episode=20,
    batch_size=512,
    hidden_pairs=((64, 64),),
    entropy_coeffs=(0.25,),
    entropy_mean=True,
    learning_rate=0.003,
    eval_every=10,
)


@dataclass
class SweepSpec:
    mode: str = "train"
    alphabet_sizes: tuple[int, ...] = PAPER_GRID["alphabet_sizes"]
    max_lens: tuple[int, ...] = PAPER_GRID["max_lens"]
    hidden_pairs: tuple[tuple[int, int], ...] = PAPER_HIDDEN_PAIRS
    entropy_coeffs: tuple[float, ...] = PAPER_ENTROPY_COEFFS
    alphas: tuple[float, ...] = (0.0,)
    seeds: tuple[int, ...] = (0, 1, 2, 3)
    n: int = 1000
    episodes: int = 2500
    batches_per_episode: int = 100
    batch_size: int = 5120
    learning_rate: float = 0.001
    input_dist: str = "power_law"
    mt_codes: int = 25
    permutations: int = 100_000
    eval_every: int = 0
    entropy_mean: bool = False
    smoothing_window: int = 10

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct within a cell")
        self.alphabet_sizes = tuple(self.alphabet_sizes)
        self.max_lens = tuple(self.max_lens)
        self.hidden_pairs = tuple(tuple(p) for p in self.hidden_pairs)
        self.entropy_coeffs = tuple(self.entropy_coeffs)
        self.alphas = tuple(self.alphas)
        self.seeds = tuple(self.seeds)

    @classmethod
    def desk(cls, mode: str = "train", **overrides) -> "SweepSpec":
        kw = dict(
            mode=mode,
            alphabet_sizes=DESK_GRID["alphabet_sizes"],
            max_lens=DESK_GRID["max_lens"],
            hidden_pairs=DESK_TRAIN["hidden_pairs"],
            entropy_coeffs=DESK_TRAIN["entropy_coeffs"],
            entropy_mean=DESK_TRAIN["entropy_mean"],
            n=DESK_TRAIN["n"],
            episodes=DESK_TRAIN["episodes"],
            batches_per_episode=DESK_TRAIN["batches_per_episode"],
            batch_size=DESK_TRAIN["batch_size"],
            learning_rate=DESK_TRAIN["learning_rate"],
            eval_every=DESK_TRAIN["eval_every"],
            mt_codes=25,
        )
        kw.update(overrides)
        return cls(**kw)

    @classmethod
    def paper(cls, mode: str = "train", **overrides) -> "SweepSpec":
        kw = dict(mode=mode)
        kw.update(overrides)
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        payload = json.loads(text)
        preset = payload.pop("preset", None)
        if preset == "desk":
            return cls.desk(**payload)
        if preset == "paper":
            return cls.paper(**payload)
        if preset is not None:
            raise ValueError(f"unknown preset {preset!r}")
        payload["hidden_pairs"] = tuple(tuple(p) for p in payload.get("hidden_pairs", PAPER_HIDDEN_PAIRS))
        return cls(**payload)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"

    def cells(self) -> list[tuple[int, int]]:
        return [(ml, a) for ml in self.max_lens for a in self.alphabet_sizes]

    def train_configs(self, max_len: int, alphabet_size: int) -> list[TrainConfig]:
        configs = []
        for h_s, h_l in self.hidden_pairs:
            for coeff in self.entropy_coeffs:
                for alpha in self.alphas:
                    for seed in self.seeds:
                        configs.append(
                            TrainConfig(
                                n=self.n,
                                alphabet_size=alphabet_size,
                                max_len=max_len,
                                speaker_hidden=h_s,
                                listener_hidden=h_l,
                                learning_rate=self.learning_rate,
                                entropy_coeff=coeff,
                                length_penalty=alpha,
                                episodes=self.episodes,
                                batches_per_episode=self.batches_per_episode,
                                batch_size=self.batch_size,
                                seed=seed,
                                input_dist=self.input_dist,
                                eval_every=self.eval_every,
                                entropy_mean=self.entropy_mean,
                            )
                        )
        return configs


def _fmt(value: float) -> str:
    return f"{value:g}"


def train_run_id(cfg: TrainConfig) -> str:
    return (
        f"ml{cfg.max_len}_a{cfg.alphabet_size}_train"
        f"_hs{cfg.speaker_hidden}x{cfg.listener_hidden}"
        f"_ec{_fmt(cfg.entropy_coeff)}_alpha{_fmt(cfg.length_penalty)}_seed{cfg.seed}"
    )


def reference_run_id(max_len: int, alphabet_size: int, kind: str, seed: int | None = None) -> str:
    suffix = f"_seed{seed}" if seed is not None else ""
    return f"ml{max_len}_a{alphabet_size}_{kind}{suffix}"


def _analysis_rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(entropy)))


def _input_model(spec_dist: str, n: int) -> freq.FrequencyModel:
    return freq.uniform(n) if spec_dist == "uniform" else freq.power_law(n)


def _write_code_run(run_dir: Path, code: Code, probs, permutations: int, rng, window: int, kind: str) -> None:
    run_dir.mkdir(parents=True, exist_ok=True)
    save_code_tsv(code, run_dir / "code.tsv")
    payload = analyze_code(code, probs, permutations, rng, window)
    payload["kind"] = kind
    write_analysis_json(payload, run_dir / "analysis.json")
    write_curves_csv(run_dir / "curves.csv", code.lengths(), window)
    (run_dir / "status").write_text(
        json.dumps({"status": "success", "reason": "reference code", "kind": kind}, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def _run_complete(run_dir: Path) -> bool:
    return (run_dir / "status").exists()


def _load_or_quarantine(run_dir: Path, loader):
    """Load a persisted run; corrupt directories are renamed aside for re-execution."""
    try:
        return loader(run_dir)
    except Exception as exc:  # noqa: BLE001 - any corruption triggers quarantine
        quarantine = run_dir.parent / "_quarantine"
        quarantine.mkdir(exist_ok=True)
        stamp = 0
        while (quarantine / f"{run_dir.name}.{stamp}").exists():
            stamp += 1
        target = quarantine / f"{run_dir.name}.{stamp}"
        run_dir.rename(target)
        (target / "quarantine_reason.txt").write_text(f"{exc}\n", encoding="utf-8")
        return None


def _execute_train_run(args) -> str:
    cfg_dict, run_dir_s, permutations, window, input_dist = args
    cfg = TrainConfig(**cfg_dict)
    run_dir = Path(run_dir_s)
    record = train(cfg)
    save_run(record, run_dir)
    probs = _input_model(input_dist, cfg.n)
    rng = _analysis_rng(0xA11A, cfg.max_len, cfg.alphabet_size, cfg.seed)
    payload = analyze_code(record.code, probs, permutations, rng, window)
    payload["kind"] = "emergent" if cfg.length_penalty == 0.0 else "regularized"
    payload["run_status"] = record.status
    write_analysis_json(payload, run_dir / "analysis.json")
    write_curves_csv(run_dir / "curves.csv", record.code.lengths(), window)
    return run_dir.name


def _execute_reference_cell(args) -> str:
    spec_dict, max_len, alphabet_size, out_dir_s = args
    spec = SweepSpec(**spec_dict)
    out = Path(out_dir_s)
    probs = _input_model(spec.input_dist, spec.n)

    oc_dir = out / "runs" / reference_run_id(max_len, alphabet_size, "oc")
    if not _run_complete(oc_dir):
        code = optimal_code(spec.n, alphabet_size, max_len)
        rng = _analysis_rng(0x0C, max_len, alphabet_size)
        _write_code_run(oc_dir, code, probs, spec.permutations, rng, spec.smoothing_window, "oc")

    for seed in range(spec.mt_codes):
        mt_dir = out / "runs" / reference_run_id(max_len, alphabet_size, "mt", seed)
        if _run_complete(mt_dir):
            continue
        gen_rng = np.random.default_rng(np.random.SeedSequence([0x3117, max_len, alphabet_size, seed]))
        code = monkey_typing(spec.n, alphabet_size, max_len, gen_rng)
        rng = _analysis_rng(0x3117AA, max_len, alphabet_size, seed)
        _write_code_run(mt_dir, code, probs, spec.permutations, rng, spec.smoothing_window, "mt")
    return f"ml{max_len}_a{alphabet_size}"


@dataclass
class CellReport:
    max_len: int
    alphabet_size: int
    feasible: bool
    capacity_ratio: float
    skip_reason: str | None = None
    oc: dict | None = None
    mt: dict | None = None
    emergent: dict = field(default_factory=dict)  # keyed by formatted alpha

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class AggregateReport:
    spec: SweepSpec
    cells: list[CellReport]

    def cell(self, max_len: int, alphabet_size: int) -> CellReport | None:
        for cell in self.cells:
            if cell.max_len == max_len and cell.alphabet_size == alphabet_size:
                return cell
        return None

    def to_json(self) -> str:
        payload = {
            "spec": dataclasses.asdict(self.spec),
            "cells": [cell.to_dict() for cell in self.cells],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _load_analysis(run_dir: Path) -> dict:
    return json.loads((run_dir / "analysis.json").read_text(encoding="utf-8"))


def _aggregate_cell(spec: SweepSpec, out: Path, max_len: int, alphabet_size: int) -> CellReport:
    ratio = capacity_ratio(alphabet_size, max_len, spec.n)
    cell = CellReport(max_len, alphabet_size, feasible=ratio >= 1.0, capacity_ratio=ratio)
    if not cell.feasible:
        cell.skip_reason = f"capacity ratio {ratio:.3g} < 1"
        return cell
    runs = out / "runs"

    oc_dir = runs / reference_run_id(max_len, alphabet_size, "oc")
    if _run_complete(oc_dir):
        payload = _load_analysis(oc_dir)
        lengths = load_code_tsv(oc_dir / "code.tsv", alphabet_size, max_len).lengths()
        cell.oc = {
            "mean_length": payload["mean_length"],
            "left_p": payload["randomization"]["left_p"],
            "right_p": payload["randomization"]["right_p"],
            "lengths": lengths.tolist(),
        }

    mt_payloads = []
    mt_lengths = []
    for seed in range(spec.mt_codes):
        mt_dir = runs / reference_run_id(max_len, alphabet_size, "mt", seed)
        if _run_complete(mt_dir):
            mt_payloads.append(_load_analysis(mt_dir))
            mt_lengths.append(load_code_tsv(mt_dir / "code.tsv", alphabet_size, max_len).lengths())
    if mt_payloads:
        cell.mt = {
            "codes": len(mt_payloads),
            "mean_length": float(np.mean([p["mean_length"] for p in mt_payloads])),
            "left_p": float(np.mean([p["randomization"]["left_p"] for p in mt_payloads])),
            "right_p": float(np.mean([p["randomization"]["right_p"] for p in mt_payloads])),
            "mean_curve": np.mean(np.array(mt_lengths, dtype=np.float64), axis=0).tolist(),
        }

    for alpha in spec.alphas:
        group_runs = []
        for cfg in spec.train_configs(max_len, alphabet_size):
            if cfg.length_penalty != alpha:
                continue
            run_dir = runs / train_run_id(cfg)
            if not _run_complete(run_dir):
                continue
            status = json.loads((run_dir / "status").read_text(encoding="utf-8"))
            payload = _load_analysis(run_dir) if (run_dir / "analysis.json").exists() else None
            lengths = load_code_tsv(run_dir / "code.tsv", alphabet_size, max_len).lengths()
            group_runs.append((status, payload, lengths))
        if not group_runs:
            continue
        successes = [item for item in group_runs if item[0]["status"] == "success"]
        group = {
            "runs": len(group_runs),
            "successes": len(successes),
            "selected": len(successes) > 3,
        }
        if successes:
            group["mean_length"] = float(np.mean([p["mean_length"] for _, p, _ in successes]))
            group["left_p"] = float(np.mean([p["randomization"]["left_p"] for _, p, _ in successes]))
            group["right_p"] = float(np.mean([p["randomization"]["right_p"] for _, p, _ in successes]))
            group["mean_curve"] = np.mean(
                np.array([lengths for _, _, lengths in successes], dtype=np.float64), axis=0
            ).tolist()
        cell.emergent[_fmt(alpha)] = group
    return cell


def run_sweep(spec: SweepSpec, out_dir, jobs: int = 1) -> AggregateReport:
    """Execute (or resume) every feasible cell, then fold persisted runs into a report."""
    out = Path(out_dir)
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"output directory not writable: {exc}") from exc
    (out / "spec.json").write_text(spec.to_json(), encoding="utf-8")

    skipped = {}
    ref_tasks = []
    train_tasks = []
    for max_len, alphabet_size in spec.cells():
        ratio = capacity_ratio(alphabet_size, max_len, spec.n)
        if ratio < 1.0:
            skipped[f"ml{max_len}_a{alphabet_size}"] = f"capacity ratio {ratio:.3g} < 1"
            continue
        if spec.mode in ("reference-only", "train"):
            ref_tasks.append((dataclasses.asdict(spec), max_len, alphabet_size, str(out)))
        if spec.mode == "train":
            for cfg in spec.train_configs(max_len, alphabet_size):
                run_dir = out / "runs" / train_run_id(cfg)
                if _run_complete(run_dir):
                    if _load_or_quarantine(run_dir, lambda d: (_load_analysis(d), load_code_tsv(d / "code.tsv"))) is not None:
                        continue
                train_tasks.append(
                    (
                        dataclasses.asdict(cfg),
                        str(run_dir),
                        spec.permutations,
                        spec.smoothing_window,
                        spec.input_dist,
                    )
                )
        if spec.mode == "probe":
            _execute_probe_cell(spec, out, max_len, alphabet_size)

    (out / "skipped.json").write_text(
        json.dumps(skipped, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    if jobs > 1 and (ref_tasks or train_tasks):
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(_execute_reference_cell, ref_tasks))
            list(pool.map(_execute_train_run, train_tasks))
    else:
        for task in ref_tasks:
            _execute_reference_cell(task)
        for task in train_tasks:
            _execute_train_run(task)

    cells = []
    for max_len, alphabet_size in spec.cells():
        cells.append(_aggregate_cell(spec, out, max_len, alphabet_size))
    report = AggregateReport(spec=spec, cells=cells)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    return report


def _execute_probe_cell(spec: SweepSpec, out: Path, max_len: int, alphabet_size: int) -> None:
    from .analysis import listener_discriminability, untrained_speaker_probe

    run_dir = out / "runs" / reference_run_id(max_len, alphabet_size, "probe")
    if _run_complete(run_dir):
        return
    run_dir.mkdir(parents=True, exist_ok=True)
    rng = _analysis_rng(0x9120BE, max_len, alphabet_size)
    probe = untrained_speaker_probe(
        spec.n, alphabet_size, max_len, rng,
        hidden_sizes=(100,), speakers_per_dim=10, unique=False,
    )
    oc = optimal_code(spec.n, alphabet_size, max_len)
    mt = monkey_typing(spec.n, alphabet_size, max_len, _analysis_rng(0x3117, max_len, alphabet_size, 0))
    disc_oc = listener_discriminability(oc, rng, listeners=10)
    disc_mt = listener_discriminability(mt, rng, listeners=10)
    payload = {
        "speaker_probe_mean_lengths": probe.mean_lengths.tolist(),
        "listener_discriminability": {
            "oc": {"mean": disc_oc.mean, "std": disc_oc.std},
            "mt": {"mean": disc_mt.mean, "std": disc_mt.std},
        },
    }
    write_analysis_json(payload, run_dir / "probe.json")
    (run_dir / "status").write_text(
        json.dumps({"status": "success", "reason": "probe", "kind": "probe"}, sort_keys=True) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# Figures and the significance table
# ---------------------------------------------------------------------------


def make_plots(report: AggregateReport, out_dir, lexicons: dict[str, "freq.CorpusLexicon"] | None = None) -> list[Path]:
    """One SVG per feasible cell: rank vs length for every available code."""
    import matplotlib

    matplotlib.use("Agg")
    matplotlib.rcParams["svg.hashsalt"] = "zla-lab"
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    window = report.spec.smoothing_window
    lexicons = lexicons or {}
    written = []
    for cell in report.cells:
        if not cell.feasible:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        ranks = np.arange(1, report.spec.n + 1)
        if cell.oc:
            ax.plot(ranks, cell.oc["lengths"], label="optimal", lw=1.2)
        if cell.mt:
            ax.plot(ranks, cell.mt["mean_curve"], label=f"random typing ({cell.mt['codes']})", lw=1.2)
        for alpha, group in sorted(cell.emergent.items()):
            if group.get("selected") and "mean_curve" in group:
                label = "emergent" if alpha == "0" else f"regularized a={alpha}"
                ax.plot(ranks, group["mean_curve"], label=label, lw=1.2)
        if cell.max_len == 30 and cell.alphabet_size == 40:
            for name, lexicon in sorted(lexicons.items()):
                lengths = freq.lexicon_lengths(lexicon).astype(np.float64)
                smoothed = length_curve(lengths, min(window, lengths.size))
                ax.plot(np.arange(1, smoothed.size + 1), smoothed, label=name, lw=1.0, ls="--")
        ax.set_xlabel("input frequency rank")
        ax.set_ylabel("message length")
        ax.set_ylim(0, cell.max_len + 1)
        ax.set_title(f"max_len={cell.max_len}, a={cell.alphabet_size}")
        ax.legend(loc="best", fontsize=8)
        path = out / f"lengths_ml{cell.max_len}_a{cell.alphabet_size}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def _star(p: float) -> str:
    return f"{p:.6g}*" if p <= 0.005 else f"{p:.6g}"


def table_a1(report: AggregateReport, lexicons: dict[str, "freq.CorpusLexicon"] | None = None) -> str:
    """CSV of (setting, code, E, left_p, right_p); p-values starred at 0.005."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(("setting", "code", "E", "left_p", "right_p"))
    for cell in report.cells:
        setting = f"max_len={cell.max_len},a={cell.alphabet_size}"
        if not cell.feasible:
            writer.writerow((setting, "all", "skipped", "", ""))
            continue
        rows = [("OC", cell.oc), ("MT", cell.mt)]
        for alpha, group in sorted(cell.emergent.items()):
            name = "Emergent" if alpha == "0" else f"Regularized(alpha={alpha})"
            rows.append((name, group if group.get("successes") else None))
        for name, payload in rows:
            if payload is None or "mean_length" not in payload:
                writer.writerow((setting, name, "unavailable", "", ""))
                continue
            writer.writerow(
                (
                    setting,
                    name,
                    f"{payload['mean_length']:.4f}",
                    _star(payload["left_p"]),
                    _star(payload["right_p"]),
                )
            )
        if cell.max_len == 30 and cell.alphabet_size == 40 and lexicons:
            for lang, lexicon in sorted((lexicons or {}).items()):
                lengths = freq.lexicon_lengths(lexicon)
                probs = freq.from_lexicon(lexicon)
                rng = _analysis_rng(0x1A27, len(lang), lengths.size)
                from .analysis import randomization_test

                rand = randomization_test(lengths, probs, report.spec.permutations, rng)
                writer.writerow(
                    (setting, lang, f"{rand.e_observed:.4f}", _star(rand.left_p), _star(rand.right_p))
                )
    return buf.getvalue()

"""HTTP service wrapping the laboratory core.

Endpoints are synchronous wrappers over the core package; heavy requests
(train, sweep) run to completion within the request. File-producing endpoints
write to paths on the service host's filesystem.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__, freq, schemas
from .analysis import analyze_code, listener_discriminability, untrained_speaker_probe, write_analysis_json
from .codes import Alphabet, Code, control_code, format_code_tsv, monkey_typing, mt_length_pmf, optimal_code
from .sweep import AggregateReport, SweepSpec, make_plots, run_sweep, table_a1, train_run_id
from .training import TrainConfig, save_run, train


def _to_code(payload: schemas.CodePayload) -> Code:
    try:
        return Code(
            tuple(tuple(m) for m in payload.messages),
            Alphabet(payload.alphabet_size),
            payload.max_len,
        )
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


def _code_response(code: Code) -> schemas.CodeResponse:
    from .analysis import mean_length

    return schemas.CodeResponse(
        code=schemas.CodePayload(
            messages=[list(m) for m in code.messages],
            alphabet_size=code.alphabet.size,
            max_len=code.max_len,
        ),
        lengths=code.lengths().tolist(),
        is_unique=code.is_unique,
        power_law_mean_length=mean_length(code, freq.power_law(code.n)),
        tsv=format_code_tsv(code),
    )


def _dist(spec: schemas.DistributionSpec, n: int) -> freq.FrequencyModel:
    if spec.kind == "uniform":
        return freq.uniform(n)
    if spec.kind == "power_law":
        return freq.power_law(n)
    raise HTTPException(status_code=422, detail=f"unknown distribution kind {spec.kind!r}")


def _load_report(out_dir: str) -> AggregateReport:
    import json

    report_path = Path(out_dir) / "report.json"
    if not report_path.exists():
        raise HTTPException(status_code=404, detail=f"no report.json under {out_dir}")
    payload = json.loads(report_path.read_text(encoding="utf-8"))
    spec = SweepSpec.from_json(__import__("json").dumps(payload["spec"]))
    from .sweep import CellReport

    cells = [CellReport(**cell) for cell in payload["cells"]]
    return AggregateReport(spec=spec, cells=cells)


def _load_lexicons(paths: dict[str, str]) -> dict[str, freq.CorpusLexicon]:
    out = {}
    for label, path in paths.items():
        try:
            out[label] = freq.load_lexicon(path)
        except (OSError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
    return out


def create_app() -> FastAPI:
    app = FastAPI(title="zla-lab", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/reference/optimal", response_model=schemas.CodeResponse)
    def reference_optimal(req: schemas.OptimalCodeRequest) -> schemas.CodeResponse:
        try:
            return _code_response(optimal_code(req.n, req.alphabet_size, req.max_len))
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/reference/monkey", response_model=schemas.CodeResponse)
    def reference_monkey(req: schemas.MonkeyTypingRequest) -> schemas.CodeResponse:
        rng = np.random.default_rng(req.seed)
        try:
            code = monkey_typing(req.n, req.alphabet_size, req.max_len, rng, req.unique, req.order)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return _code_response(code)

    @app.post("/reference/control", response_model=schemas.CodeResponse)
    def reference_control(req: schemas.ControlCodeRequest) -> schemas.CodeResponse:
        template = _to_code(req.code)
        return _code_response(control_code(template, np.random.default_rng(req.seed)))

    @app.post("/reference/length-pmf", response_model=schemas.LengthPmfResponse)
    def reference_length_pmf(req: schemas.LengthPmfRequest) -> schemas.LengthPmfResponse:
        return schemas.LengthPmfResponse(pmf=mt_length_pmf(req.alphabet_size, req.max_len).tolist())

    @app.post("/analysis/run", response_model=schemas.AnalyzeResponse)
    def analysis_run(req: schemas.AnalyzeRequest) -> schemas.AnalyzeResponse:
        code = _to_code(req.code)
        probs = _dist(req.dist, code.n)
        rng = np.random.default_rng(req.seed)
        payload = analyze_code(code, probs, req.permutations, rng, req.smoothing_window)
        return schemas.AnalyzeResponse(analysis=payload)

    @app.post("/probes/speaker", response_model=schemas.SpeakerProbeResponse)
    def probes_speaker(req: schemas.SpeakerProbeRequest) -> schemas.SpeakerProbeResponse:
        rng = np.random.default_rng(req.seed)
        try:
            probe = untrained_speaker_probe(
                req.n, req.alphabet_size, req.max_len, rng,
                hidden_sizes=tuple(req.hidden_sizes),
                speakers_per_dim=req.speakers_per_dim,
                unique=req.unique,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        pmf = mt_length_pmf(req.alphabet_size, req.max_len)
        expected = float((pmf * np.arange(1, req.max_len + 1)).sum())
        return schemas.SpeakerProbeResponse(
            mean_lengths=probe.mean_lengths.tolist(),
            speakers=probe.lengths.shape[0],
            expected_mean_length=expected,
        )

    @app.post("/probes/listener", response_model=schemas.ListenerProbeResponse)
    def probes_listener(req: schemas.ListenerProbeRequest) -> schemas.ListenerProbeResponse:
        code = _to_code(req.code)
        rng = np.random.default_rng(req.seed)
        weights = freq.power_law(code.n).probs if req.probability_weighted else None
        result = listener_discriminability(
            code, rng, listeners=req.listeners, hidden=req.hidden, weights=weights
        )
        return schemas.ListenerProbeResponse(
            mean=result.mean, std=result.std, per_listener=result.per_listener.tolist()
        )

    @app.post("/train/run", response_model=schemas.TrainResponse)
    def train_run(req: schemas.TrainRequest) -> schemas.TrainResponse:
        try:
            cfg = TrainConfig(**req.config)
            record = train(cfg)
        except (TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        run_dir = None
        if req.out_dir:
            run_dir = str(Path(req.out_dir) / train_run_id(cfg))
            save_run(record, run_dir)
            payload = analyze_code(
                record.code, cfg.input_model(), req.permutations, np.random.default_rng(cfg.seed)
            )
            write_analysis_json(payload, Path(run_dir) / "analysis.json")
        return schemas.TrainResponse(
            status=record.status,
            reason=record.reason,
            eval_accuracy=record.eval_accuracy,
            eval_mean_length=record.eval_mean_length,
            episodes_run=record.episodes_run,
            code_is_unique=record.code_is_unique,
            run_dir=run_dir,
        )

    @app.post("/sweep/run", response_model=schemas.SweepResponse)
    def sweep_run(req: schemas.SweepRequest) -> schemas.SweepResponse:
        import json

        try:
            spec = SweepSpec.from_json(json.dumps(req.spec))
            report = run_sweep(spec, req.out_dir, jobs=req.jobs)
        except (TypeError, ValueError, OSError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        cells = []
        for cell in report.cells:
            emergent = cell.emergent.get("0", {})
            cells.append(
                schemas.CellSummary(
                    max_len=cell.max_len,
                    alphabet_size=cell.alphabet_size,
                    feasible=cell.feasible,
                    skip_reason=cell.skip_reason,
                    successes=emergent.get("successes", 0),
                    runs=emergent.get("runs", 0),
                )
            )
        return schemas.SweepResponse(out_dir=req.out_dir, cells=cells)

    @app.post("/artifacts/table", response_model=schemas.TableResponse)
    def artifacts_table(req: schemas.TableRequest) -> schemas.TableResponse:
        report = _load_report(req.out_dir)
        return schemas.TableResponse(csv=table_a1(report, _load_lexicons(req.lexicons)))

    @app.post("/artifacts/plots", response_model=schemas.PlotsResponse)
    def artifacts_plots(req: schemas.PlotsRequest) -> schemas.PlotsResponse:
        report = _load_report(req.out_dir)
        plots_dir = req.plots_dir or str(Path(req.out_dir) / "plots")
        files = make_plots(report, plots_dir, _load_lexicons(req.lexicons))
        return schemas.PlotsResponse(files=[str(p) for p in files])

    @app.post("/lexicon/load", response_model=schemas.LexiconResponse)
    def lexicon_load(req: schemas.LexiconRequest) -> schemas.LexiconResponse:
        lexicon = _load_lexicons({"lexicon": req.path})["lexicon"]
        return schemas.LexiconResponse(
            words=len(lexicon.entries),
            alphabet_size=lexicon.alphabet_size,
            lengths=freq.lexicon_lengths(lexicon).tolist(),
            top=list(lexicon.entries[:10]),
        )

    return app


app = create_app()

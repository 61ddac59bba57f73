"""Command-line client for the laboratory service.

Verbs talk HTTP to a zla-lab service. By default an in-process service is
embedded (no daemon needed, files land on the local filesystem); pass
``--server URL`` to target a running instance instead. Exit codes: 0 success,
1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; the contract wants 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


class LabClient:
    """Minimal JSON-over-HTTP client; embeds the service when no URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # starlette deprecation chatter
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise RuntimeError(f"{path} failed ({response.status_code}): {detail}")
        return response.json()

    def get(self, path: str) -> dict:
        response = self._client.get(path)
        response.raise_for_status()
        return response.json()


def _lexicon_args(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        label, sep, path = pair.partition("=")
        if not sep:
            label, path = Path(pair).stem, pair
        out[label] = path
    return out


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _cmd_oc(client: LabClient, args) -> int:
    resp = client.post(
        "/reference/optimal",
        {"n": args.n, "alphabet_size": args.a, "max_len": args.max_len},
    )
    if args.out:
        _write(Path(args.out) / "code.tsv", resp["tsv"])
    print(
        f"optimal code: n={args.n} a={args.a} max_len={args.max_len} "
        f"E[power-law]={resp['power_law_mean_length']:.4f}"
    )
    return 0


def _cmd_mt(client: LabClient, args) -> int:
    means = []
    for k in range(args.codes):
        resp = client.post(
            "/reference/monkey",
            {
                "n": args.n,
                "alphabet_size": args.a,
                "max_len": args.max_len,
                "seed": args.seed + k,
                "unique": not args.non_unique,
                "order": args.order,
            },
        )
        means.append(resp["power_law_mean_length"])
        if args.out:
            name = "code.tsv" if args.codes == 1 else f"code_{k}.tsv"
            _write(Path(args.out) / name, resp["tsv"])
    mean = sum(means) / len(means)
    print(
        f"random-typing code(s): n={args.n} a={args.a} max_len={args.max_len} "
        f"codes={args.codes} mean E[power-law]={mean:.4f}"
    )
    return 0


def _read_code_payload(path: str, alphabet_size, max_len) -> dict:
    from .codes import load_code_tsv

    code = load_code_tsv(path, alphabet_size, max_len)
    return {
        "messages": [list(m) for m in code.messages],
        "alphabet_size": code.alphabet.size,
        "max_len": code.max_len,
    }


def _cmd_analyze(client: LabClient, args) -> int:
    if args.run:
        run_dir = Path(args.run)
        config = json.loads((run_dir / "config.json").read_text(encoding="utf-8"))
        payload_code = _read_code_payload(
            run_dir / "code.tsv", config["alphabet_size"], config["max_len"]
        )
        dist = config.get("input_dist", "power_law")
        out_dir = run_dir
    else:
        payload_code = _read_code_payload(args.code, args.a, args.max_len)
        dist = args.dist
        out_dir = Path(args.out) if args.out else None
    resp = client.post(
        "/analysis/run",
        {
            "code": payload_code,
            "dist": {"kind": dist},
            "permutations": args.permutations,
            "seed": args.seed,
            "smoothing_window": args.window,
        },
    )
    analysis = resp["analysis"]
    if out_dir:
        _write(out_dir / "analysis.json", json.dumps(analysis, sort_keys=True, indent=2) + "\n")
        from .analysis import write_curves_csv

        lengths = [len(m) for m in payload_code["messages"]]
        write_curves_csv(out_dir / "curves.csv", lengths, args.window)
    rand = analysis["randomization"]
    print(
        f"E={analysis['mean_length']:.4f} left_p={rand['left_p']:.6g} "
        f"right_p={rand['right_p']:.6g} unigram_H={analysis['unigram_entropy']:.4f} "
        f"bigram_H={analysis['bigram_entropy']:.4f}"
    )
    return 0


def _spec_payload(args) -> dict:
    if args.config:
        spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        spec = {"preset": args.preset} if args.preset else {}
    if args.mode:
        spec["mode"] = args.mode
    if args.a:
        spec["alphabet_sizes"] = args.a
    if args.max_len:
        spec["max_lens"] = args.max_len
    if args.alpha:
        spec["alphas"] = args.alpha
    if args.seed:
        spec["seeds"] = args.seed
    if args.permutations:
        spec["permutations"] = args.permutations
    return spec


def _cmd_sweep(client: LabClient, args) -> int:
    payload = {"spec": _spec_payload(args), "out_dir": args.out, "jobs": args.jobs}
    resp = client.post("/sweep/run", payload)
    for cell in resp["cells"]:
        state = (
            f"skipped ({cell['skip_reason']})"
            if not cell["feasible"]
            else f"{cell['successes']}/{cell['runs']} successful"
        )
        print(f"max_len={cell['max_len']} a={cell['alphabet_size']}: {state}")
    print(f"report: {Path(args.out) / 'report.json'}")
    return 0


def _cmd_plot(client: LabClient, args) -> int:
    resp = client.post(
        "/artifacts/plots",
        {
            "out_dir": args.out,
            "plots_dir": args.plots_dir,
            "lexicons": _lexicon_args(args.lexicon),
        },
    )
    for path in resp["files"]:
        print(path)
    return 0


def _cmd_table(client: LabClient, args) -> int:
    resp = client.post(
        "/artifacts/table",
        {"out_dir": args.out, "lexicons": _lexicon_args(args.lexicon)},
    )
    target = Path(args.csv) if args.csv else Path(args.out) / "table.csv"
    _write(target, resp["csv"])
    print(resp["csv"], end="")
    return 0


def _cmd_probe_speaker(client: LabClient, args) -> int:
    resp = client.post(
        "/probes/speaker",
        {
            "n": args.n,
            "alphabet_size": args.a,
            "max_len": args.max_len,
            "hidden_sizes": args.hidden,
            "speakers_per_dim": args.speakers_per_dim,
            "unique": args.unique,
            "seed": args.seed,
        },
    )
    mean = sum(resp["mean_lengths"]) / len(resp["mean_lengths"])
    print(
        f"untrained speakers={resp['speakers']} mean length={mean:.3f} "
        f"(random-typing expectation {resp['expected_mean_length']:.3f})"
    )
    if args.out:
        _write(Path(args.out), json.dumps(resp, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_probe_listener(client: LabClient, args) -> int:
    payload_code = _read_code_payload(args.code, args.a, args.max_len)
    resp = client.post(
        "/probes/listener",
        {
            "code": payload_code,
            "listeners": args.listeners,
            "hidden": args.hidden,
            "seed": args.seed,
            "probability_weighted": args.weighted,
        },
    )
    print(f"pairwise hidden-state distance: mean={resp['mean']:.4f} std={resp['std']:.4f}")
    if args.out:
        _write(Path(args.out), json.dumps(resp, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_serve(_client, args) -> int:
    import uvicorn

    uvicorn.run("zlalab.service:app", host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="zla-lab", description=__doc__)
    parser.add_argument("--server", help="URL of a running service (default: embedded)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("oc", help="build the length-optimal reference code")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_oc)

    p = sub.add_parser("mt", help="build random-typing reference code(s)")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--codes", type=int, default=1)
    p.add_argument("--non-unique", action="store_true")
    p.add_argument("--order", choices=("rank", "sampled"), default="rank")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_mt)

    p = sub.add_parser("analyze", help="run the statistics suite on a code")
    p.add_argument("--run", help="a persisted run directory (uses its config)")
    p.add_argument("--code", help="a code.tsv file")
    p.add_argument("--a", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--dist", choices=("power_law", "uniform"), default="power_law")
    p.add_argument("--permutations", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("sweep", help="run or resume a grid of runs")
    p.add_argument("--config", help="sweep spec JSON file")
    p.add_argument("--preset", choices=("desk", "paper"))
    p.add_argument("--mode", choices=("train", "reference-only", "analyze", "probe"))
    p.add_argument("--a", type=int, action="append")
    p.add_argument("--max-len", type=int, action="append")
    p.add_argument("--alpha", type=float, action="append")
    p.add_argument("--seed", type=int, action="append")
    p.add_argument("--permutations", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("plot", help="render SVG length-vs-rank figures from a sweep")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--plots-dir")
    p.add_argument("--lexicon", action="append", help="label=path of a frequency list")
    p.set_defaults(fn=_cmd_plot)

    p = sub.add_parser("table", help="emit the significance table as CSV")
    p.add_argument("--out", required=True, help="sweep output directory")
    p.add_argument("--csv", help="CSV destination (default <out>/table.csv)")
    p.add_argument("--lexicon", action="append")
    p.set_defaults(fn=_cmd_table)

    p = sub.add_parser("probe-speaker", help="length curve of untrained speakers")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--hidden", type=int, action="append", default=None)
    p.add_argument("--speakers-per-dim", type=int, default=30)
    p.add_argument("--unique", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_probe_speaker, hidden_default=[100, 250, 500])

    p = sub.add_parser("probe-listener", help="untrained-listener discriminability of a code")
    p.add_argument("--code", required=True)
    p.add_argument("--a", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--listeners", type=int, default=50)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--weighted", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_probe_listener)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verb == "probe-speaker" and not args.hidden:
        args.hidden = [100, 250, 500]
    if args.verb == "analyze" and not (args.run or args.code):
        parser.error("analyze needs --run or --code")
    try:
        client = None if args.verb == "serve" else LabClient(args.server)
        return args.fn(client, args)
    except (RuntimeError, OSError, ValueError, httpx.HTTPError) as exc:
        print(f"zla-lab: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    raise SystemExit(main())

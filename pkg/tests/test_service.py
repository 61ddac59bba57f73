import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from zlalab import codes, freq
from zlalab.service import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def small_code_payload(seed=0):
    code = codes.monkey_typing(12, 5, 8, np.random.default_rng(seed))
    return {
        "messages": [list(m) for m in code.messages],
        "alphabet_size": 5,
        "max_len": 8,
    }


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"


def test_optimal_endpoint(client):
    r = client.post("/reference/optimal", json={"n": 3, "alphabet_size": 3, "max_len": 5})
    assert r.status_code == 200
    body = r.json()
    assert body["code"]["messages"] == [[0], [1, 0], [2, 0]]
    assert body["lengths"] == [1, 2, 2]
    assert body["is_unique"] is True
    assert body["tsv"].startswith("1\t\teos\n")


def test_optimal_capacity_error_is_422(client):
    r = client.post("/reference/optimal", json={"n": 100, "alphabet_size": 2, "max_len": 3})
    assert r.status_code == 422
    assert "message space" in r.json()["detail"]


def test_monkey_deterministic_by_seed(client):
    payload = {"n": 20, "alphabet_size": 5, "max_len": 10, "seed": 3}
    a = client.post("/reference/monkey", json=payload).json()
    b = client.post("/reference/monkey", json=payload).json()
    assert a["code"] == b["code"]


def test_control_preserves_lengths(client):
    code = small_code_payload()
    r = client.post("/reference/control", json={"code": code, "seed": 1})
    assert r.status_code == 200
    assert r.json()["lengths"] == [len(m) for m in code["messages"]]


def test_length_pmf(client):
    r = client.post("/reference/length-pmf", json={"alphabet_size": 5, "max_len": 3})
    assert r.json()["pmf"] == pytest.approx([0.2, 0.16, 0.64])


def test_analysis_endpoint(client):
    r = client.post(
        "/analysis/run",
        json={"code": small_code_payload(), "permutations": 300, "seed": 0},
    )
    assert r.status_code == 200
    analysis = r.json()["analysis"]
    assert {"mean_length", "randomization", "unigram_entropy", "repetition"} <= analysis.keys()


def test_analysis_rejects_malformed_code(client):
    bad = {"messages": [[1, 2]], "alphabet_size": 5, "max_len": 8}  # no eos
    r = client.post("/analysis/run", json={"code": bad, "permutations": 10, "seed": 0})
    assert r.status_code == 422


def test_speaker_probe(client):
    r = client.post(
        "/probes/speaker",
        json={
            "n": 15, "alphabet_size": 5, "max_len": 6,
            "hidden_sizes": [8], "speakers_per_dim": 2, "seed": 0,
        },
    )
    body = r.json()
    assert body["speakers"] == 2
    assert len(body["mean_lengths"]) == 15
    pmf = codes.mt_length_pmf(5, 6)
    assert body["expected_mean_length"] == pytest.approx(float(pmf @ np.arange(1, 7)))


def test_listener_probe(client):
    r = client.post(
        "/probes/listener",
        json={"code": small_code_payload(), "listeners": 2, "hidden": 8, "seed": 0},
    )
    body = r.json()
    assert body["mean"] > 0
    assert len(body["per_listener"]) == 2


def test_train_endpoint_persists_run(client, tmp_path):
    config = dict(
        n=6, alphabet_size=3, max_len=4, speaker_hidden=8, listener_hidden=8,
        episodes=2, batches_per_episode=2, batch_size=16, seed=0,
    )
    r = client.post(
        "/train/run",
        json={"config": config, "out_dir": str(tmp_path), "permutations": 100},
    )
    assert r.status_code == 200
    body = r.json()
    assert body["status"] in ("success", "failure")
    run_dir = tmp_path / body["run_dir"].split("/")[-1]
    for name in ("config.json", "metrics.csv", "code.tsv", "params.ckpt", "status", "analysis.json"):
        assert (run_dir / name).exists()


def test_train_endpoint_validates_config(client):
    r = client.post("/train/run", json={"config": {"n": 0}})
    assert r.status_code == 422


def test_sweep_table_plots_flow(client, tmp_path):
    spec = dict(
        mode="reference-only", alphabet_sizes=[5], max_lens=[6], n=20,
        mt_codes=1, permutations=100,
        hidden_pairs=[[8, 8]], entropy_coeffs=[0.05],
    )
    r = client.post("/sweep/run", json={"spec": spec, "out_dir": str(tmp_path), "jobs": 1})
    assert r.status_code == 200
    cells = r.json()["cells"]
    assert cells[0]["feasible"] is True

    r = client.post("/artifacts/table", json={"out_dir": str(tmp_path)})
    assert r.status_code == 200
    assert r.json()["csv"].startswith("setting,code,E,left_p,right_p")

    r = client.post("/artifacts/plots", json={"out_dir": str(tmp_path)})
    assert r.status_code == 200
    files = r.json()["files"]
    assert files and all(f.endswith(".svg") for f in files)


def test_table_for_missing_report_is_404(client, tmp_path):
    r = client.post("/artifacts/table", json={"out_dir": str(tmp_path / "absent")})
    assert r.status_code == 404


def test_lexicon_endpoint(client, tmp_path):
    path = tmp_path / "wl.txt"
    path.write_text("the 10\nof 5\n", encoding="utf-8")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = client.post("/lexicon/load", json={"path": str(path)})
    body = r.json()
    assert body["words"] == 2
    assert body["lengths"] == [3, 2]


def test_lexicon_missing_file_is_422(client, tmp_path):
    r = client.post("/lexicon/load", json={"path": str(tmp_path / "nope.txt")})
    assert r.status_code == 422

import json
import random

import pytest
from fastapi.testclient import TestClient

from aligneval import __version__, builder, corpus, synthetic
from aligneval.service.app import create_app


@pytest.fixture()
def client():
    with TestClient(create_app(), raise_server_exceptions=False) as test_client:
        yield test_client


@pytest.fixture(scope="module")
def seeds_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "seeds.jsonl"
    worlds = synthetic.make_worlds(3, random.Random(23), 6, 9)
    seeds = synthetic.seed_pairs_from_worlds(worlds)
    path.write_text("".join(s.model_dump_json() + "\n" for s in seeds))
    return path


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "instances.jsonl"
    worlds = synthetic.make_worlds(3, random.Random(29), 6, 9)
    seeds = synthetic.seed_pairs_from_worlds(worlds)
    echo = synthetic.echo_backend()
    instances = [
        builder.build_instance(s, echo, builder.instance_rng(3, s.id), master_seed=3)
        for s in seeds
    ]
    corpus.write_instances(path, instances)
    return path


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok", "version": __version__}


class TestScoreEndpoint:
    def test_correct_target_scores_one(self, client):
        source = "Alice arrived. Bob spoke. Carol left."
        response = client.post(
            "/score",
            json={"source": source, "target": source, "backend": {"kind": "oracle"}},
        )
        assert response.status_code == 200
        body = response.json()["result"]
        assert body["score"] == 1.0
        assert body["audit"] == []

    def test_audit_included_when_requested(self, client):
        source = "Alice arrived. Bob spoke."
        response = client.post(
            "/score",
            json={
                "source": source,
                "target": source,
                "backend": {"kind": "oracle"},
                "include_audit": True,
            },
        )
        stages = {entry["stage"] for entry in response.json()["result"]["audit"]}
        assert "decompose" in stages
        assert "check_facts" in stages

    def test_empty_target_is_usage_error(self, client):
        response = client.post(
            "/score",
            json={"source": "text", "target": "  ", "backend": {"kind": "oracle"}},
        )
        assert response.status_code == 400

    def test_backend_failure_maps_to_502(self, client, tmp_path):
        fixture = tmp_path / "empty.jsonl"
        fixture.write_text("")
        response = client.post(
            "/score",
            json={
                "source": "a. b.",
                "target": "a. b.",
                "backend": {"kind": "scripted", "fixture_path": str(fixture)},
            },
        )
        assert response.status_code == 502
        assert response.json()["error"] == "NoScriptedResponse"

    def test_reordered_target_scores_below_one(self, client):
        source = "Alice arrived. Bob spoke. Carol left. Dan waved."
        target = "Dan waved. Carol left. Bob spoke. Alice arrived."
        response = client.post(
            "/score",
            json={"source": source, "target": target, "backend": {"kind": "oracle"}},
        )
        assert response.json()["result"]["s_order"] == 0.0


class TestBuildEndpoint:
    def test_builds_all_seeds(self, client, seeds_file, tmp_path):
        out = tmp_path / "instances.jsonl"
        response = client.post(
            "/build-dataset",
            json={
                "seeds_path": str(seeds_file),
                "out_path": str(out),
                "backend": {"kind": "echo"},
                "master_seed": 11,
            },
        )
        assert response.status_code == 200
        body = response.json()
        assert body["num_seeds"] == 3
        assert body["num_instances"] == 3
        assert body["num_failures"] == 0
        assert body["lie_counts"] == {"easy": 3, "medium": 3, "hard": 3, "extreme": 3}
        assert sum(body["event_count_histogram"].values()) == 3
        assert len(corpus.read_instances(out)) == 3
        failures_path = body["failures_path"]
        assert failures_path.endswith(".failures.jsonl")
        assert open(failures_path).read() == ""

    def test_missing_seed_file_is_usage_error(self, client, tmp_path):
        response = client.post(
            "/build-dataset",
            json={
                "seeds_path": str(tmp_path / "absent.jsonl"),
                "out_path": str(tmp_path / "out.jsonl"),
                "backend": {"kind": "echo"},
            },
        )
        assert response.status_code == 400

    def test_failures_recorded_not_fatal(self, client, tmp_path):
        # second seed summary has too few sentences to decompose
        seeds = tmp_path / "seeds.jsonl"
        good = synthetic.seed_pairs_from_worlds(
            synthetic.make_worlds(1, random.Random(1), 6, 6)
        )[0]
        bad = corpus.SeedPair(id="tiny", source="One. Two.", summary="One. Two.")
        seeds.write_text(good.model_dump_json() + "\n" + bad.model_dump_json() + "\n")
        out = tmp_path / "out.jsonl"
        response = client.post(
            "/build-dataset",
            json={
                "seeds_path": str(seeds),
                "out_path": str(out),
                "failures_path": str(tmp_path / "failed.jsonl"),
                "backend": {"kind": "echo"},
            },
        )
        body = response.json()
        assert body["num_instances"] == 1
        assert body["num_failures"] == 1
        [failure] = [
            json.loads(line)
            for line in (tmp_path / "failed.jsonl").read_text().splitlines()
        ]
        assert failure["seed_id"] == "tiny"
        assert failure["stage"] == "decompose"


class TestEvaluateEndpoint:
    def test_oracle_evaluator(self, client, dataset_file, tmp_path):
        out = tmp_path / "report.json"
        scores = tmp_path / "scores.jsonl"
        response = client.post(
            "/evaluate",
            json={
                "dataset_path": str(dataset_file),
                "evaluator": "oracle",
                "out_path": str(out),
                "scores_path": str(scores),
            },
        )
        assert response.status_code == 200
        report = response.json()["report"]
        assert report["average_auc"] == 1.0
        written = json.loads(out.read_text())
        assert written["evaluator_name"] == "oracle"
        assert len(scores.read_text().splitlines()) == 5 * 3

    def test_dovescore_with_oracle_backend(self, client, dataset_file, tmp_path):
        response = client.post(
            "/evaluate",
            json={
                "dataset_path": str(dataset_file),
                "evaluator": "dovescore",
                "backend": {"kind": "oracle"},
            },
        )
        assert response.status_code == 200
        assert response.json()["report"]["average_auc"] == 1.0

    def test_unknown_evaluator_lists_valid_names(self, client, dataset_file):
        response = client.post(
            "/evaluate",
            json={"dataset_path": str(dataset_file), "evaluator": "bleu"},
        )
        assert response.status_code == 400
        detail = response.json()["detail"]
        for name in ("dovescore", "coarse-llm", "oracle", "constant"):
            assert name in detail

    def test_backendless_dovescore_is_usage_error(self, client, dataset_file):
        response = client.post(
            "/evaluate",
            json={"dataset_path": str(dataset_file), "evaluator": "dovescore"},
        )
        assert response.status_code == 400


class TestReportEndpoint:
    def test_reaggregates_scores(self, client, dataset_file, tmp_path):
        scores = tmp_path / "scores.jsonl"
        client.post(
            "/evaluate",
            json={
                "dataset_path": str(dataset_file),
                "evaluator": "constant",
                "scores_path": str(scores),
            },
        )
        response = client.post(
            "/report",
            json={"scores_path": str(scores), "evaluator_name": "constant"},
        )
        assert response.status_code == 200
        report = response.json()["report"]
        assert report["average_auc"] == 0.5
        assert report["evaluator_name"] == "constant"

    def test_missing_scores_file(self, client, tmp_path):
        response = client.post(
            "/report", json={"scores_path": str(tmp_path / "none.jsonl")}
        )
        assert response.status_code == 400

import pytest
from fastapi.testclient import TestClient

from api import ExperimentAPI
from services.run_storage import RunStorage


@pytest.fixture
def client(project_dir):
    RunStorage.get_runs().clear()
    return TestClient(ExperimentAPI(project_dir).app)


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_list_experiments(client):
    response = client.get("/experiments")
    assert response.status_code == 200
    kinds = [item["kind"] for item in response.json()]
    assert kinds == ["plane-wave", "soliton", "convergence", "two-form-audit"]


def test_run_lifecycle(client, tmp_path, monkeypatch):
    monkeypatch.setenv("SCMS_OUTPUT_DIR", str(tmp_path))
    response = client.post("/runs", json={"experiment": "plane-wave", "overrides": {"paths": 1, "T": 0.03}})
    assert response.status_code == 200
    run_id = response.json()["run_id"]
    assert response.json()["status"] == "queued"

    # background tasks finish before the test client returns
    status = client.get(f"/runs/{run_id}").json()
    assert status["status"] == "completed"
    assert status["summary"]["trajectories"] == 1.0
    assert len(status["files"]) == 2
    assert (tmp_path / "plane-wave" / run_id / "phase.csv").exists()

    assert [run["run_id"] for run in client.get("/runs").json()] == [run_id]
    cleanup = client.delete("/runs/cleanup").json()
    assert cleanup["removed_runs"] == 1
    assert client.get("/runs").json() == []


def test_invalid_overrides_are_rejected(client):
    response = client.post("/runs", json={"experiment": "soliton", "overrides": {"dt": -1}})
    assert response.status_code == 400
    response = client.post("/runs", json={"experiment": "soliton", "overrides": {"warp": 9}})
    assert response.status_code == 400


def test_unknown_run(client):
    assert client.get("/runs/does-not-exist").status_code == 404


def test_aborted_run_is_recorded(client, tmp_path, monkeypatch):
    monkeypatch.setenv("SCMS_OUTPUT_DIR", str(tmp_path))
    response = client.post(
        "/runs",
        json={
            "experiment": "plane-wave",
            "overrides": {"paths": 1, "T": 0.02, "max_iterations": 1},
        },
    )
    status = client.get(f"/runs/{response.json()['run_id']}").json()
    assert status["status"] == "aborted"
    assert "failed" in status["error"]


def test_output_directory_cannot_be_overridden(client, tmp_path):
    target = tmp_path / "elsewhere"
    response = client.post(
        "/runs", json={"experiment": "plane-wave", "overrides": {"paths": 1, "out_dir": str(target)}}
    )
    assert response.status_code == 400
    assert "out_dir" in response.json()["detail"]
    assert client.get("/runs").json() == []
    assert not target.exists()

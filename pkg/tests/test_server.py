import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

import steiner.certify as certify_mod
import steiner.solver as solver_mod
from steiner.conics import ConicClass
from steiner.instances import FULTON_MATRIX
from steiner.server import ServerConfig, create_app
from steiner.solver import SolutionRecord, SolveReport

FULTON_DOC = {"conics": [list(row) for row in FULTON_MATRIX]}


def _fake_report(q):
    vec = (np.arange(15, dtype=float) + 1.0) / 7.0
    real = SolutionRecord(
        vector=vec.astype(complex),
        residual=1e-14,
        is_real_numeric=True,
        conic_class=ConicClass.ELLIPSE,
        roundness=0.8,
        degeneracy_condition=12.0,
    )
    cplx = SolutionRecord(
        vector=vec + 0.25j, residual=3e-13, is_real_numeric=False
    )
    return SolveReport(
        instance=q,
        solutions=[real, cplx],
        n_paths=3264,
        n_success=3264,
        n_complex_solutions=3264,
        n_real_numeric=1,
        failures=[],
        warnings=[],
        timings={"track_s": 0.5, "total_s": 0.6},
        is_real_instance=True,
    )


@pytest.fixture
def service(monkeypatch, seed_db_path):
    """TestClient over an app whose solver and certifier are stubbed out.

    create_app binds the solver functions when called, so the patches must
    land first; returns (client, call counters, config).
    """

    def build(certify_timeout_s=5.0, db_path=None, certify_delay=0.0, **cfg_kw):
        calls = {"solve": 0, "certify": 0}

        def fake_solve(q, db, *a, **kw):
            calls["solve"] += 1
            return _fake_report(q)

        def fake_certify(q, vectors, *a, **kw):
            calls["certify"] += 1
            if certify_delay:
                time.sleep(certify_delay)
            return {"stub": True}

        monkeypatch.setattr(solver_mod, "solve_instance", fake_solve)
        monkeypatch.setattr(certify_mod, "certify_solution_set", fake_certify)
        monkeypatch.setattr(
            certify_mod,
            "certificate_document",
            lambda cert, include_points=False: {"n_certified": 2, "n_distinct": 2, "n_real": 2},
        )
        cfg = ServerConfig(
            db_path=db_path or seed_db_path,
            certify_timeout_s=certify_timeout_s,
            **cfg_kw,
        )
        app = create_app(cfg)
        return TestClient(app), calls

    return build


def test_healthz_reports_seed_count(service):
    client, _ = service()
    r = client.get("/healthz")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok"
    assert body["seed_solutions"] == 3264


def test_healthz_degraded_without_db(service, tmp_path):
    client, _ = service(db_path=str(tmp_path / "absent.json"))
    r = client.get("/healthz")
    assert r.status_code == 503
    assert r.json()["status"] == "degraded"


def test_solve_without_db_is_503(service, tmp_path):
    client, calls = service(db_path=str(tmp_path / "absent.json"))
    r = client.post("/api/solve", json=FULTON_DOC)
    assert r.status_code == 503
    assert "seed database" in r.json()["detail"]
    assert calls["solve"] == 0


def test_solve_happy_path_and_cache(service):
    client, calls = service()
    r = client.post("/api/solve", json=FULTON_DOC)
    assert r.status_code == 200
    body = r.json()
    assert body["count_complex"] == 3264
    assert body["generic"] is True
    assert isinstance(body["instance_id"], str) and len(body["instance_id"]) == 24
    assert len(body["solutions"]) == 2
    # identical request: served from cache, byte-identical, no second solve
    r2 = client.post("/api/solve", json=FULTON_DOC)
    assert r2.status_code == 200
    assert r2.json() == body
    assert calls["solve"] == 1
    # the result is also retrievable by id
    r3 = client.get(f"/api/results/{body['instance_id']}")
    assert r3.status_code == 200
    assert r3.json() == body


def test_solve_options_change_the_cache_key(service):
    client, calls = service()
    with_points = dict(FULTON_DOC)
    r = client.post("/api/solve", json=with_points)
    without = dict(FULTON_DOC, options={"include_tangency_points": False})
    r2 = client.post("/api/solve", json=without)
    assert calls["solve"] == 2
    assert r.json()["instance_id"] != r2.json()["instance_id"]
    assert "tangency_points" in r.json()["solutions"][0]
    assert "tangency_points" not in r2.json()["solutions"][0]


def test_solve_rejects_malformed_json(service):
    client, _ = service()
    r = client.post(
        "/api/solve", content=b"{not json", headers={"content-type": "application/json"}
    )
    assert r.status_code == 400
    assert "JSON" in r.json()["detail"]
    r = client.post("/api/solve", json=["conics"])
    assert r.status_code == 400


def test_solve_field_level_errors(service):
    client, calls = service()
    r = client.post("/api/solve", json={"conics": [["1"] * 6] * 4})
    assert r.status_code == 400
    assert "field" not in r.json()

    rows = [list(r) for r in FULTON_MATRIX]
    rows[2][4] = "1/0"
    r = client.post("/api/solve", json={"conics": rows})
    assert r.status_code == 400
    assert r.json()["field"] == [2, 4]

    rows = [list(r) for r in FULTON_MATRIX]
    rows[1][0] = 42
    r = client.post("/api/solve", json={"conics": rows})
    assert r.status_code == 400
    assert r.json()["field"] == [1, 0]
    assert calls["solve"] == 0

    r = client.post("/api/solve", json=dict(FULTON_DOC, options=[1]))
    assert r.status_code == 400


def test_solve_degenerate_instance_is_422_with_diagnostics(service):
    client, _ = service()
    rows = [list(r) for r in FULTON_MATRIX]
    rows[0] = ["1", "2", "1", "0", "0", "0"]  # double line
    r = client.post("/api/solve", json={"conics": rows})
    assert r.status_code == 422
    body = r.json()
    assert "degenerate" in body["detail"]
    assert body["diagnostics"]["count_complex"] == 3264


def test_certify_within_timeout_inlines_the_certificate(service):
    client, calls = service()
    r = client.post("/api/solve", json=dict(FULTON_DOC, options={"certify": True}))
    assert r.status_code == 200
    body = r.json()
    assert body["certification"]["n_real"] == 2
    assert calls["certify"] == 1


def test_certify_timeout_detaches_to_results_endpoint(service):
    client, calls = service(certify_timeout_s=0.0, certify_delay=0.4)
    r = client.post("/api/solve", json=dict(FULTON_DOC, options={"certify": True}))
    assert r.status_code == 202
    token = r.json()["instance_id"]
    assert r.json()["status"] == "pending"
    # a repeat of the same request while pending also answers 202
    r2 = client.post("/api/solve", json=dict(FULTON_DOC, options={"certify": True}))
    assert r2.status_code == 202
    assert calls["solve"] == 1
    deadline = time.time() + 5.0
    while time.time() < deadline:
        r3 = client.get(f"/api/results/{token}")
        if r3.status_code == 200:
            break
        assert r3.status_code == 202
        time.sleep(0.05)
    assert r3.status_code == 200
    assert r3.json()["certification"]["n_certified"] == 2


def test_results_unknown_id_is_404(service):
    client, _ = service()
    r = client.get("/api/results/deadbeefdeadbeefdeadbeef")
    assert r.status_code == 404


def test_instance_endpoints(service):
    client, _ = service()
    r = client.get("/api/instances/fulton")
    assert r.status_code == 200
    assert r.json() == FULTON_DOC
    r1 = client.get("/api/instances/random")
    r2 = client.get("/api/instances/random")
    assert r1.status_code == r2.status_code == 200
    for doc in (r1.json(), r2.json()):
        assert len(doc["conics"]) == 5
        assert all(len(row) == 6 for row in doc["conics"])
    assert r1.json() != r2.json()


def test_static_ui_is_served_when_configured(service, tmp_path):
    static = tmp_path / "ui"
    static.mkdir()
    (static / "index.html").write_text("<h1>steiner ui</h1>")
    client, _ = service(static_dir=str(static))
    r = client.get("/")
    assert r.status_code == 200
    assert "steiner ui" in r.text
    # api routes still win over the static mount
    assert client.get("/healthz").status_code == 200


def test_results_write_through(service, tmp_path):
    results = tmp_path / "results"
    client, _ = service(results_dir=str(results))
    r = client.post("/api/solve", json=FULTON_DOC)
    token = r.json()["instance_id"]
    saved = json.loads((results / f"{token}.json").read_text())
    assert saved == r.json()

"""HTTP service: solve and certify over a REST surface, plus the static UI.

The seed database is loaded once at startup and shared read-only.  Solves
run synchronously inside the request, gated by a semaphore so concurrent
users share the worker budget.  Results are cached in a bounded LRU keyed
by the content hash of the instance plus options; identical requests are
served from the cache byte-identically.  A certification pass that
exceeds the configured timeout detaches: the request returns 202 with
the instance id as a retrieval token and the finished document appears
at /api/results/{id}.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles


@dataclass
class ServerConfig:
    db_path: str = "seed.db"
    workers: int = 2
    cache_size: int = 64
    certify_timeout_s: float = 60.0
    static_dir: Optional[str] = None
    results_dir: Optional[str] = None

    @classmethod
    def from_env(cls) -> "ServerConfig":
        env = os.environ
        return cls(
            db_path=env.get("STEINER_DB", "seed.db"),
            workers=int(env.get("STEINER_WORKERS", "2")),
            cache_size=int(env.get("STEINER_CACHE_SIZE", "64")),
            certify_timeout_s=float(env.get("STEINER_CERTIFY_TIMEOUT", "60")),
            static_dir=env.get("STEINER_STATIC_DIR") or None,
            results_dir=env.get("STEINER_RESULTS_DIR") or None,
        )


class _ResultCache:
    """Bounded LRU of result documents, safe for concurrent access."""

    def __init__(self, size: int):
        self._size = max(1, size)
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str):
        with self._lock:
            entry = self._data.get(key)
            if entry is not None:
                self._data.move_to_end(key)
            return entry

    def put(self, key: str, entry: dict) -> None:
        with self._lock:
            self._data[key] = entry
            self._data.move_to_end(key)
            while len(self._data) > self._size:
                self._data.popitem(last=False)


def _bad_request(message: str, field=None) -> JSONResponse:
    body = {"detail": message}
    if field is not None:
        body["field"] = field
    return JSONResponse(body, status_code=400)


def _parse_request_conics(body: dict):
    """Field-by-field validation so errors name the offending cell."""
    from .conics import Conic, Quintuple

    rows = body.get("conics")
    if not isinstance(rows, list) or len(rows) != 5:
        raise _FieldError('"conics" must be a list of 5 rows', None)
    conics = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != 6:
            raise _FieldError(f"conic {i}: needs 6 coefficients", [i])
        for j, cell in enumerate(row):
            if not isinstance(cell, str):
                raise _FieldError(
                    f"conic {i}, coefficient {j}: must be a string", [i, j]
                )
        try:
            conics.append(Conic.from_strings(row))
        except (ValueError, ZeroDivisionError) as exc:
            # find the failing cell for the hint
            from .conics import _parse_coefficient

            for j, cell in enumerate(row):
                try:
                    _parse_coefficient(cell)
                except (ValueError, ZeroDivisionError) as cell_exc:
                    raise _FieldError(
                        f"conic {i}, coefficient {j}: {cell_exc}", [i, j]
                    ) from exc
            raise _FieldError(f"conic {i}: {exc}", [i]) from exc
    return Quintuple.from_conics(conics)


class _FieldError(Exception):
    def __init__(self, message: str, field):
        super().__init__(message)
        self.field = field


def _instance_id(doc: dict, options: dict) -> str:
    canon = json.dumps({"instance": doc, "options": options}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()[:24]


def _default_static_dir() -> Optional[str]:
    here = Path(__file__).parent / "ui"
    if here.is_dir():
        return str(here)
    repo = Path.cwd() / "frontend" / "dist"
    if repo.is_dir():
        return str(repo)
    return None


def create_app(config: Optional[ServerConfig] = None) -> FastAPI:
    from .certify import certificate_document, certify_solution_set
    from .seeds import DatabaseError, load_db
    from .solver import report_document, solve_instance

    cfg = config or ServerConfig.from_env()
    app = FastAPI(title="steiner", docs_url=None, redoc_url=None)

    state: dict = {"db": None, "db_error": "not loaded"}
    try:
        state["db"] = load_db(cfg.db_path)
        state["db_error"] = None
    except (OSError, DatabaseError) as exc:
        state["db_error"] = str(exc)

    cache = _ResultCache(cfg.cache_size)
    gate = threading.Semaphore(max(1, cfg.workers))

    def write_through(instance_id: str, doc: dict) -> None:
        if not cfg.results_dir:
            return
        try:
            path = Path(cfg.results_dir)
            path.mkdir(parents=True, exist_ok=True)
            (path / f"{instance_id}.json").write_text(json.dumps(doc, indent=2))
        except OSError:
            pass  # write-through is best effort

    @app.get("/healthz")
    def healthz():
        if state["db"] is None:
            return JSONResponse(
                {"status": "degraded", "detail": state["db_error"]}, status_code=503
            )
        return {"status": "ok", "seed_solutions": len(state["db"].solutions)}

    @app.get("/api/instances/fulton")
    def fulton():
        from .instances import fulton_instance

        return fulton_instance().to_document()

    @app.get("/api/instances/random")
    def random_inst():
        import numpy as np

        from .instances import random_instance

        return random_instance(np.random.default_rng(), field="real-rational").to_document()

    @app.get("/api/results/{instance_id}")
    def results(instance_id: str):
        entry = cache.get(instance_id)
        if entry is None:
            return JSONResponse({"detail": "unknown result id"}, status_code=404)
        if entry["status"] == "pending":
            return JSONResponse(
                {"instance_id": instance_id, "status": "pending"}, status_code=202
            )
        return entry["doc"]

    @app.post("/api/solve")
    async def solve(request: Request):
        if state["db"] is None:
            return JSONResponse(
                {"detail": f"seed database unavailable: {state['db_error']}"},
                status_code=503,
            )
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return _bad_request(f"request body is not valid JSON: {exc}")
        if not isinstance(body, dict):
            return _bad_request("request body must be an object")
        options = body.get("options") or {}
        if not isinstance(options, dict):
            return _bad_request('"options" must be an object')
        certify = bool(options.get("certify", False))
        include_points = bool(options.get("include_tangency_points", True))
        try:
            quintuple = _parse_request_conics(body)
        except _FieldError as exc:
            return _bad_request(str(exc), exc.field)

        doc_instance = quintuple.to_document()
        opt_norm = {"certify": certify, "include_tangency_points": include_points}
        instance_id = _instance_id(doc_instance, opt_norm)
        entry = cache.get(instance_id)
        if entry is not None:
            if entry["status"] == "pending":
                return JSONResponse(
                    {"instance_id": instance_id, "status": "pending"}, status_code=202
                )
            return entry["doc"]

        from .solver import _degeneracy_warnings

        degenerate = _degeneracy_warnings(quintuple)

        def run_solve():
            with _hold(gate):
                report = solve_instance(quintuple, state["db"])
            doc = report_document(report, include_points=include_points)
            doc["instance_id"] = instance_id
            return doc, report

        if degenerate:
            # best-effort diagnostics, but the status is unprocessable
            try:
                doc, _ = await run_in_threadpool(run_solve)
                return JSONResponse(
                    {
                        "detail": "degenerate instance: " + "; ".join(degenerate),
                        "diagnostics": doc,
                    },
                    status_code=422,
                )
            except Exception as exc:  # degenerate targets can break tracking
                return JSONResponse(
                    {"detail": "degenerate instance: " + "; ".join(degenerate) + f" ({exc})"},
                    status_code=422,
                )

        doc, report = await run_in_threadpool(run_solve)
        if not certify:
            cache.put(instance_id, {"status": "done", "doc": doc})
            write_through(instance_id, doc)
            return doc

        cache.put(instance_id, {"status": "pending", "doc": None})
        finished = threading.Event()

        def certification():
            try:
                cert = certify_solution_set(
                    quintuple, [r.vector for r in report.solutions]
                )
                doc["certification"] = certificate_document(cert)
            except Exception as exc:  # keep the token redeemable
                doc["certification"] = {"error": f"certification failed: {exc}"}
            cache.put(instance_id, {"status": "done", "doc": doc})
            write_through(instance_id, doc)
            finished.set()

        # daemon: an abandoned certification must not pin process exit
        threading.Thread(target=certification, daemon=True).start()
        if await run_in_threadpool(finished.wait, cfg.certify_timeout_s):
            return doc
        return JSONResponse(
            {"instance_id": instance_id, "status": "pending"}, status_code=202
        )

    static_dir = cfg.static_dir or _default_static_dir()
    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


class _hold:
    def __init__(self, sem: threading.Semaphore):
        self.sem = sem

    def __enter__(self):
        self.sem.acquire()

    def __exit__(self, *exc):
        self.sem.release()

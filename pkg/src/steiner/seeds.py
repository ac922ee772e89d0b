"""Start systems: one seeded solution, then monodromy to all 3264.

A random conic U* and five random points on it give five tangent conics
for free: with l the tangent line of U* at p, every member of the pencil
l^2 + s U* touches U* at p.  That puts one exact solution of the tangency
system in hand.  Random parameter loops (triangles through two random
complex coefficient matrices) permute the solution set over the base
point, so repeatedly tracking the known solutions around loops and merging
the returns populates the full fiber.

The populated database is serialized as JSON with every float printed to
17 significant digits, which round-trips doubles exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .conics import Conic, Point2, Quintuple, tangent_line
from .polysys import DEGREES, newton_polish_batch, residual_batch
from .tracking import ParameterHomotopy, PathStatus, TrackerOptions, track_all

TARGET_COUNT = 3264
DB_VERSION = 1
_MERGE_TOL = 1e-6
_RESIDUAL_BOUND = 1e-10


class DatabaseError(ValueError):
    """A seed database file is missing, malformed, or fails an invariant."""


class MonodromyStallError(RuntimeError):
    """Ran out of loops before the fiber filled up; partial set attached."""

    def __init__(self, message: str, solutions: np.ndarray):
        super().__init__(message)
        self.solutions = solutions


def bezout_total_degree(degrees: Sequence[int] = DEGREES) -> int:
    """Product of the equation degrees: the blunt path count a solver
    ignorant of the structure would track (1889568 here, 579x too many)."""
    total = 1
    for d in degrees:
        total *= int(d)
    return total


def _random_unit_conic(rng: np.random.Generator) -> np.ndarray:
    # u6 stays 1, matching the normalization of the unknowns
    u = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    return np.concatenate([u, [1.0 + 0j]])


def _point_on(u: np.ndarray, rng: np.random.Generator) -> Optional[Point2]:
    x = rng.standard_normal() + 1j * rng.standard_normal()
    a = u[2]
    b = u[1] * x + u[4]
    c = u[0] * x * x + u[3] * x + u[5]
    if abs(a) < 1e-8:
        if abs(b) < 1e-8:
            return None
        return Point2(x, -c / b)
    root = np.sqrt(complex(b * b - 4 * a * c))
    y = (-b + root) / (2 * a) if rng.random() < 0.5 else (-b - root) / (2 * a)
    return Point2(x, y)


def seeded_instance(rng: np.random.Generator) -> tuple:
    """A random complex quintuple together with one exact solution.

    Retries internally until the construction is nondegenerate; a handful
    of draws always suffices.
    """
    for _ in range(64):
        u = _random_unit_conic(rng)
        ustar = Conic(u)
        points = []
        lines = []
        ok = True
        for _ in range(5):
            p = _point_on(u, rng)
            if p is None:
                ok = False
                break
            try:
                lines.append(tangent_line(ustar, p, tol=1e-6))
            except ValueError:
                ok = False
                break
            points.append(p)
        if not ok:
            continue
        conics = []
        for line, p in zip(lines, points):
            # tangent line times a random second line keeps the contact at p
            # simple; the tangent squared would osculate and the solution
            # would be singular
            s = rng.standard_normal() + 1j * rng.standard_normal()
            a, b, c = (complex(v) for v in line)
            d, e, f = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            product = np.array(
                [
                    a * d,
                    a * e + b * d,
                    b * e,
                    a * f + c * d,
                    b * f + c * e,
                    c * f,
                ],
                dtype=complex,
            )
            coeffs = product + s * u
            if abs(coeffs).max() < 1e-8:
                ok = False
                break
            conics.append(Conic(coeffs))
        if not ok:
            continue
        quintuple = Quintuple(*conics)
        z0 = np.concatenate([u[:5], [w for p in points for w in p]])
        z0 = newton_polish_batch(quintuple.params_array(), z0[None, :], iters=3)[0]
        if residual_batch(quintuple.params_array(), z0[None, :])[0] < 1e-12:
            return quintuple, z0
    raise RuntimeError("could not build a nondegenerate seeded instance")


def _merge(
    existing: np.ndarray, candidates: np.ndarray, tol: float = _MERGE_TOL
) -> np.ndarray:
    """Append candidates not already represented, relative tolerance."""
    if candidates.size == 0:
        return existing
    def as_real(z):
        return np.ascontiguousarray(z).view(float).reshape(len(z), -1)

    fresh: list = []
    if existing.size:
        tree = cKDTree(as_real(existing))
        dist, _ = tree.query(as_real(candidates), k=1)
    else:
        dist = np.full(len(candidates), np.inf)
    scale = 1.0 + np.linalg.norm(candidates, axis=1)
    for k in np.flatnonzero(dist > tol * scale):
        c = candidates[k]
        if fresh and np.min(
            np.linalg.norm(np.asarray(fresh) - c, axis=1)
        ) <= tol * (1.0 + np.linalg.norm(c)):
            continue
        fresh.append(c)
    if not fresh:
        return existing
    if existing.size == 0:
        return np.asarray(fresh)
    return np.vstack([existing, np.asarray(fresh)])


def monodromy_populate(
    instance: Quintuple,
    known: np.ndarray,
    rng: np.random.Generator,
    target_count: int = TARGET_COUNT,
    stall_limit: int = 20,
    options: Optional[TrackerOptions] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> np.ndarray:
    """Grow the known solution set by random parameter loops.

    Returns once at least target_count solutions are in hand (exactly
    3264 when asked for the full fiber, which is also the hard ceiling);
    raises MonodromyStallError after stall_limit consecutive loops that
    found nothing new.
    """
    params = instance.params_array()
    known = np.atleast_2d(np.asarray(known, dtype=complex))
    sols = newton_polish_batch(params, known, iters=3)
    keep = residual_batch(params, sols) <= _RESIDUAL_BOUND
    sols = sols[keep]
    if sols.size == 0:
        raise ValueError("no valid known solution to start from")
    scale = float(np.sqrt(np.mean(np.abs(params) ** 2)))
    stall = 0
    loop = 0
    while len(sols) < target_count:
        if stall >= stall_limit:
            raise MonodromyStallError(
                f"stalled at {len(sols)} of {target_count} after "
                f"{stall_limit} empty loops",
                sols,
            )
        loop += 1
        corners = [
            params
            + scale
            * (rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6)))
            for _ in range(2)
        ]
        current = sols
        for leg_from, leg_to in zip(
            [params, corners[0], corners[1]], [corners[0], corners[1], params]
        ):
            hom = ParameterHomotopy(leg_from, leg_to)
            results = track_all(hom, current, options)
            current = np.array(
                [r.endpoint for r in results if r.status == PathStatus.SUCCESS]
            )
            if current.size == 0:
                break
        if current.size == 0:
            stall += 1
            continue
        current = newton_polish_batch(params, current, iters=3)
        good = residual_batch(params, current) <= _RESIDUAL_BOUND
        current = current[good & np.isfinite(current).all(axis=1)]
        before = len(sols)
        sols = _merge(sols, current)
        if len(sols) > TARGET_COUNT:
            raise RuntimeError(
                f"found {len(sols)} solutions, more than the expected "
                f"{TARGET_COUNT}; merge tolerance too tight?"
            )
        stall = 0 if len(sols) > before else stall + 1
        if progress is not None:
            progress(len(sols), loop)
    return sols


@dataclass
class SeedDatabase:
    """A complete start basis: one generic instance and its whole fiber."""

    params: np.ndarray
    solutions: np.ndarray
    rng_seed: Optional[int] = None
    residual_bound: float = _RESIDUAL_BOUND
    version: int = DB_VERSION


def build_seed_database(
    rng_seed: int = 3264,
    options: Optional[TrackerOptions] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> SeedDatabase:
    """Seed, populate by monodromy, package; fully determined by rng_seed."""
    rng = np.random.default_rng(rng_seed)
    instance, z0 = seeded_instance(rng)
    sols = monodromy_populate(
        instance, z0, rng, options=options, progress=progress
    )
    return SeedDatabase(
        params=instance.params_array(), solutions=sols, rng_seed=rng_seed
    )


@dataclass
class VerifyReport:
    ok: bool
    n_solutions: int
    max_residual: float
    min_separation: float
    max_condition: float
    failures: list = field(default_factory=list)


def verify_db(db: SeedDatabase) -> VerifyReport:
    """Recheck every database invariant from scratch."""
    failures = []
    n = len(db.solutions)
    if n != TARGET_COUNT:
        failures.append(f"expected {TARGET_COUNT} solutions, found {n}")
    residuals = residual_batch(db.params, db.solutions)
    max_res = float(residuals.max()) if n else math.inf
    if max_res > db.residual_bound:
        failures.append(f"max residual {max_res:.3e} above bound {db.residual_bound:.3e}")
    flat = np.ascontiguousarray(db.solutions).view(float).reshape(n, -1)
    if n >= 2:
        dist, _ = cKDTree(flat).query(flat, k=2)
        scale = 1.0 + np.linalg.norm(db.solutions, axis=1)
        min_sep = float((dist[:, 1] / scale).min())
        if min_sep <= _MERGE_TOL:
            failures.append(f"solutions {min_sep:.3e} apart, below {_MERGE_TOL:.0e}")
    else:
        min_sep = math.inf
    from .polysys import jacobian_batch

    conds = np.linalg.cond(jacobian_batch(db.params, db.solutions))
    max_cond = float(conds.max()) if n else math.inf
    if not np.isfinite(max_cond) or max_cond > 1e12:
        failures.append(f"jacobian condition {max_cond:.3e} at some solution")
    return VerifyReport(
        ok=not failures,
        n_solutions=n,
        max_residual=max_res,
        min_separation=min_sep,
        max_condition=max_cond,
        failures=failures,
    )


# -- serialization -----------------------------------------------------------


def _c2s(z: complex) -> list:
    return [f"{z.real:.17g}", f"{z.imag:.17g}"]


def _s2c(pair) -> complex:
    if not isinstance(pair, list) or len(pair) != 2:
        raise DatabaseError("malformed complex entry")
    return complex(float(pair[0]), float(pair[1]))


def save_db(db: SeedDatabase, path) -> None:
    doc = {
        "version": db.version,
        "rng_seed": db.rng_seed,
        "residual_bound": f"{db.residual_bound:.17g}",
        "params": [[_c2s(z) for z in row] for row in db.params],
        "solutions": [[_c2s(z) for z in row] for row in db.solutions],
    }
    Path(path).write_text(json.dumps(doc))


def load_db(path) -> SeedDatabase:
    p = Path(path)
    if not p.exists():
        raise DatabaseError(
            f"seed database not found at {p}; run the seed command first"
        )
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DatabaseError(f"seed database is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != DB_VERSION:
        raise DatabaseError(
            f"unsupported database version {doc.get('version')!r}"
        )
    try:
        params = np.array(
            [[_s2c(z) for z in row] for row in doc["params"]], dtype=complex
        )
        solutions = np.array(
            [[_s2c(z) for z in row] for row in doc["solutions"]], dtype=complex
        )
        bound = float(doc["residual_bound"])
        seed = doc.get("rng_seed")
    except (KeyError, TypeError, ValueError) as exc:
        raise DatabaseError(f"malformed seed database: {exc}") from exc
    if params.shape != (5, 6):
        raise DatabaseError(f"params shape {params.shape}, expected (5, 6)")
    if solutions.ndim != 2 or solutions.shape != (TARGET_COUNT, 15):
        raise DatabaseError(
            f"solutions shape {solutions.shape}, expected ({TARGET_COUNT}, 15)"
        )
    if not (np.isfinite(params).all() and np.isfinite(solutions).all()):
        raise DatabaseError("non-finite entries in seed database")
    return SeedDatabase(
        params=params,
        solutions=solutions,
        rng_seed=seed,
        residual_bound=bound,
        version=DB_VERSION,
    )


def match_sets(a: np.ndarray, b: np.ndarray, tol: float = _MERGE_TOL) -> np.ndarray:
    """Permutation pi with b[pi[i]] ~ a[i]; raises when sets don't agree."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("point sets differ in shape")
    flat_b = np.ascontiguousarray(b).view(float).reshape(len(b), -1)
    flat_a = np.ascontiguousarray(a).view(float).reshape(len(a), -1)
    dist, idx = cKDTree(flat_b).query(flat_a, k=1)
    scale = 1.0 + np.linalg.norm(a, axis=1)
    if (dist > tol * scale).any():
        raise ValueError("some point has no partner within tolerance")
    if len(set(idx.tolist())) != len(b):
        raise ValueError("matching is not a bijection")
    return idx

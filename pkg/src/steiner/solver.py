"""End-to-end solving: track a seed basis to a target instance and sort out
what came back.

The solver is deterministic given the database: detours and retries derive
from fixed generators, duplicates are merged at explicit tolerances, and
every reported solution carries its contact points, residual, and (for real
instances) classification data.

Targets close to the discriminant need more than one pass of plain
tracking.  Paths collide onto shared zeros, double-precision polish
scatters copies of one zero over distances larger than the gap between
genuinely distinct zeros, and a few tracked endpoints fall onto the
double-line locus that the count of 3264 excludes.  The solver answers
with layers, each engaged only when the previous ones left the set
incomplete: landings kept from retry rounds, a full second sweep through
a distant waypoint, small parameter circuits, and exact rational
refinement that collapses float-level duplicates no tolerance could
separate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .certify import refine, _as_float_vector
from .conics import Conic, ConicClass, Point2, Quintuple, classify, matrix_rank
from .conics import _proportional, degeneracy_condition_number, roundness
from .exactlinalg import SingularMatrixError
from .polysys import (
    build_system,
    evaluate_batch,
    jacobian_batch,
    magnitude_batch,
    newton_polish_batch,
    residual_batch,
)
from .seeds import SeedDatabase, TARGET_COUNT
from .tracking import ParameterHomotopy, PathStatus, TrackerOptions, track_all

_DETOUR_SEED = 0x5EED


@dataclass
class SolveOptions:
    tracker: TrackerOptions = field(default_factory=TrackerOptions)
    # float-level merge; the exact-resolve stage is the real judge below this
    dedup_tol: float = 1e-8
    real_tol: float = 1e-8
    polish_iters: int = 3
    recover: bool = True
    track_retries: int = 2
    # clusters tighter than this may be one zero seen twice or two zeros;
    # members are refined exactly before they are counted
    resolve_band: float = 1e-3
    exact_resolve: bool = True
    # symmetric-matrix rank gap below which an endpoint counts as a double
    # line (Bezout excess, not a tangent conic)
    excess_tol: float = 1e-9
    recovery_radii: tuple = (3e-5, 3e-4, 3e-3, 1e-2)
    recovery_attempts: int = 2
    # Recovery is for a modest shortfall, not for degenerate instances that
    # are legitimately far from the generic count.
    recovery_limit: int = 256


@dataclass
class SolutionRecord:
    """One tangent conic: coefficients, contact points, and diagnostics."""

    vector: np.ndarray
    residual: float
    is_real_numeric: bool
    multiplicity: int = 1
    conic_class: Optional[ConicClass] = None
    roundness: Optional[float] = None
    degeneracy_condition: Optional[float] = None

    @property
    def conic_coefficients(self) -> np.ndarray:
        return np.concatenate([self.vector[:5], [1.0 + 0j]])

    @property
    def tangency_points(self) -> list:
        return [Point2(self.vector[5 + 2 * i], self.vector[6 + 2 * i]) for i in range(5)]

    def conic(self) -> Conic:
        if self.is_real_numeric:
            return Conic(self.conic_coefficients.real)
        return Conic(self.conic_coefficients)


@dataclass
class SolveReport:
    instance: Quintuple
    solutions: list
    n_paths: int
    n_success: int
    n_complex_solutions: int
    n_real_numeric: int
    failures: list
    warnings: list
    timings: dict
    is_real_instance: bool
    n_recovered: int = 0
    n_collapsed: int = 0

    @property
    def generic(self) -> bool:
        return self.n_complex_solutions == TARGET_COUNT

    @property
    def wall_time(self) -> float:
        return self.timings.get("total_s", 0.0)


def _deduplicate_indices(endpoints: np.ndarray, tol: float) -> tuple:
    """Greedy clustering at relative tolerance; first member represents.

    Returns (representative indices, cluster sizes aligned with them).
    """
    n = len(endpoints)
    if n == 0:
        return [], []
    flat = np.ascontiguousarray(endpoints).view(float).reshape(n, -1)
    tree = cKDTree(flat)
    scale = 1.0 + np.linalg.norm(endpoints, axis=1)
    taken = np.full(n, -1, dtype=int)
    reps: list = []
    sizes: list = []
    for k in range(n):
        if taken[k] >= 0:
            continue
        members = tree.query_ball_point(flat[k], tol * scale[k])
        cluster = [m for m in members if taken[m] < 0]
        for m in cluster:
            taken[m] = len(reps)
        reps.append(k)
        sizes.append(len(cluster))
    return reps, sizes


def deduplicate(endpoints: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    reps, _ = _deduplicate_indices(np.asarray(endpoints, dtype=complex), tol)
    return np.asarray(endpoints)[reps]


def double_line_mask(vectors: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """True where the conic part is numerically a squared linear form.

    Such points satisfy every tangency equation yet belong to the excess
    component the count of 3264 excludes, so the solver drops them.
    """
    n = len(vectors)
    if n == 0:
        return np.zeros(0, dtype=bool)
    a, b, c, d, e = (vectors[:, k] for k in range(5))
    m = np.zeros((n, 3, 3), dtype=complex)
    m[:, 0, 0] = a
    m[:, 0, 1] = m[:, 1, 0] = b / 2
    m[:, 1, 1] = c
    m[:, 0, 2] = m[:, 2, 0] = d / 2
    m[:, 1, 2] = m[:, 2, 1] = e / 2
    m[:, 2, 2] = 1.0
    s = np.linalg.svd(m, compute_uv=False)
    return s[:, 1] <= tol * s[:, 0]


def _degeneracy_warnings(q: Quintuple) -> list:
    warnings = []
    for i, conic in enumerate(q.conics):
        if matrix_rank(conic) <= 1:
            warnings.append(f"conic {i} is a double line (rank <= 1)")
    for i in range(5):
        for j in range(i):
            if _proportional(q.conics[i], q.conics[j]):
                warnings.append(f"conics {j} and {i} coincide")
    return warnings


def _detour_for(start: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Deterministic complex waypoint off the straight segment."""
    rng = np.random.default_rng(_DETOUR_SEED)
    scale = float(np.sqrt(np.mean(np.abs(start) ** 2 + np.abs(target) ** 2)))
    jitter = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    return 0.5 * (start + target) + 0.5 * scale * jitter


def _clean_candidates(target: np.ndarray, cands: np.ndarray, opts: SolveOptions):
    """Polish, then keep finite, small-residual, non-excess points."""
    cands = newton_polish_batch(target, np.asarray(cands, dtype=complex), iters=4)
    res = residual_batch(target, cands)
    keep = np.isfinite(cands).all(axis=1) & (res <= 1e-8)
    keep &= ~double_line_mask(cands, opts.excess_tol)
    return cands[keep]


def _new_zeros_from(
    candidates: np.ndarray,
    base: np.ndarray,
    target: np.ndarray,
    opts: SolveOptions,
) -> list:
    """Candidate landings that match no known zero, after polish.

    Known zeros go first into the greedy dedup pass, so any candidate
    clustering with one of them drops out and only genuinely new zeros
    survive.  Survivors may still be float-level copies of a known zero
    scattered past dedup_tol; the exact-resolve stage is the authority
    on those.
    """
    cand = _clean_candidates(target, candidates, opts)
    if not len(cand):
        return []
    combined = np.concatenate([base, cand])
    r2, _ = _deduplicate_indices(combined, opts.dedup_tol)
    return [combined[r].copy() for r in r2 if r >= len(base)]


def _second_sweep(db: SeedDatabase, target: np.ndarray, opts: SolveOptions) -> list:
    """Re-track every start through a distant waypoint; returns landings.

    The first sweep's direct segment fixes which zeros its paths favor;
    routing the whole family through a different region of parameter
    space redistributes the landings over zeros the first sweep missed.
    """
    rng = np.random.default_rng(_DETOUR_SEED ^ 0x51)
    scale = float(np.sqrt(np.mean(np.abs(db.params) ** 2 + np.abs(target) ** 2)))
    mid = 0.5 * (db.params + target)
    w1 = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    w2 = rng.standard_normal((5, 6)) + 1j * rng.standard_normal((5, 6))
    waypoint = mid + 0.6 * scale * w1
    leg1 = track_all(
        ParameterHomotopy(db.params, waypoint), db.solutions, opts.tracker, max_retries=1
    )
    mids = [r.endpoint for r in leg1 if r.status == PathStatus.SUCCESS]
    if not mids:
        return []
    pool: list = []
    track_all(
        ParameterHomotopy(
            waypoint, target, detour_point=0.5 * (waypoint + target) + 0.4 * scale * w2
        ),
        np.stack(mids),
        opts.tracker,
        max_retries=opts.track_retries,
        endpoint_pool=pool,
    )
    return pool


def _recover_partners(
    target: np.ndarray,
    known: np.ndarray,
    pts: np.ndarray,
    missing: int,
    opts: SolveOptions,
) -> np.ndarray:
    """Zeros lost to path collisions, hunted by parameter circuits.

    Each duplicated endpoint (pts) is tracked around closed quadrilateral
    loops target -> c1 -> c2 -> c3 -> target with corners on a complex
    sphere of growing radius.  When a loop encloses the branch point that
    pinched the pair, the endpoint returns on the other sheet.  Landings
    are polished at the target and kept only when they match nothing seen.
    """
    rng = np.random.default_rng(_DETOUR_SEED ^ 0xA5)
    scale = 1.0 + float(np.abs(target).max())
    seen = [known]
    found: list = []

    def is_new(z: np.ndarray) -> bool:
        for block in seen:
            gap = np.abs(block - z[None, :]).max(axis=1)
            if (gap <= opts.dedup_tol * (1.0 + np.abs(z).max())).any():
                return False
        return True

    for radius_factor in opts.recovery_radii:
        radius = radius_factor * scale
        for _ in range(opts.recovery_attempts):
            corners = []
            for _ in range(3):
                w = rng.standard_normal(target.shape) + 1j * rng.standard_normal(target.shape)
                corners.append(target + radius * w / np.linalg.norm(w))
            c1, c2, c3 = corners
            out = track_all(
                ParameterHomotopy(target, c2, detour_point=c1), pts, opts.tracker
            )
            mid = [r.endpoint for r in out if r.status == PathStatus.SUCCESS]
            if not mid:
                continue
            back = track_all(
                ParameterHomotopy(c2, target, detour_point=c3),
                np.stack(mid),
                opts.tracker,
            )
            landed = [r.endpoint for r in back if r.status == PathStatus.SUCCESS]
            if not landed:
                continue
            cand = _clean_candidates(target, np.stack(landed), opts)
            for z in cand:
                if is_new(z):
                    found.append(z.copy())
                    seen.append(z[None, :])
            if len(found) >= missing:
                return np.stack(found)
    return np.stack(found) if found else np.empty((0, known.shape[1]), complex)


def _exact_resolve(
    quintuple: Quintuple,
    zeros: np.ndarray,
    opts: SolveOptions,
    exact_mask: Optional[np.ndarray] = None,
):
    """Settle razor-thin clusters by exact Newton refinement.

    Double-precision polish at condition numbers past 1e10 scatters copies
    of one zero over ~1e-5 while genuinely distinct zeros of a target near
    the discriminant can sit 3e-7 apart; no float tolerance separates the
    two populations.  Every point whose nearest neighbor falls inside
    resolve_band is refined by two exact steps snapped to 192-bit dyadics;
    copies of one zero then agree essentially exactly and true neighbors
    keep their gap.  Returns (zeros, exact_mask, n_collapsed); the mask
    marks rows already refined so later passes skip them.
    """
    n = len(zeros)
    if exact_mask is None:
        exact_mask = np.zeros(n, dtype=bool)
    if n < 2:
        return zeros, exact_mask, 0
    emb = np.concatenate([zeros.real, zeros.imag], axis=1)
    d, _ = cKDTree(emb).query(emb, k=2)
    ambiguous = np.flatnonzero(d[:, 1] < opts.resolve_band)
    if not len(ambiguous):
        return zeros, exact_mask, 0
    system = build_system(quintuple)
    refined = zeros[ambiguous].copy()
    for row, k in enumerate(ambiguous):
        if exact_mask[k]:
            continue
        try:
            refined[row] = _as_float_vector(refine(system, zeros[k], steps=2))
        except SingularMatrixError:
            pass
    # collapse refined points that coincide; exact copies agree to far
    # below this cut while distinct zeros stay far above it
    remb = np.concatenate([refined.real, refined.imag], axis=1)
    pairs = cKDTree(remb).query_pairs(1e-9, output_type="ndarray")
    parent = np.arange(len(refined))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in pairs:
        pi, pj = find(int(i)), find(int(j))
        if pi != pj:
            parent[max(pi, pj)] = min(pi, pj)
    leaders = sorted({find(i) for i in range(len(refined))})
    keep = np.ones(n, dtype=bool)
    keep[ambiguous] = False
    out = np.concatenate([zeros[keep], refined[leaders]])
    out_mask = np.concatenate(
        [exact_mask[keep], np.ones(len(leaders), dtype=bool)]
    )
    n_collapsed = len(ambiguous) - len(leaders)
    return out, out_mask, n_collapsed


def solve_instance(
    quintuple: Quintuple, db: SeedDatabase, options: Optional[SolveOptions] = None
) -> SolveReport:
    """Track all 3264 start solutions to the given quintuple."""
    opts = options or SolveOptions()
    t_start = time.perf_counter()
    target = quintuple.params_array()
    warnings = _degeneracy_warnings(quintuple)
    hom = ParameterHomotopy(
        db.params, target, detour_point=_detour_for(db.params, target)
    )
    pool: list = []
    results = track_all(
        hom,
        db.solutions,
        opts.tracker,
        max_retries=opts.track_retries,
        endpoint_pool=pool,
    )
    t_track = time.perf_counter()

    ok = [k for k, r in enumerate(results) if r.status == PathStatus.SUCCESS]
    failures = [
        (k, r.status.value) for k, r in enumerate(results) if r.status != PathStatus.SUCCESS
    ]
    endpoints = (
        np.stack([results[k].endpoint for k in ok]) if ok else np.empty((0, 15), complex)
    )
    if len(endpoints):
        endpoints = newton_polish_batch(target, endpoints, iters=opts.polish_iters)
        finite = np.isfinite(endpoints).all(axis=1)
        residuals = np.full(len(endpoints), np.inf)
        residuals[finite] = residual_batch(target, endpoints[finite])
        keep = finite & (residuals <= 1e-8)
        excess = keep & double_line_mask(
            np.where(np.isfinite(endpoints), endpoints, 0.0), opts.excess_tol
        )
        keep &= ~excess
        n_excess = int(excess.sum())
        n_res = int((~keep).sum()) - n_excess
        if n_excess:
            warnings.append(f"{n_excess} tracked endpoints were double lines (excess)")
        if n_res:
            warnings.append(f"{n_res} tracked endpoints rejected by residual")
        endpoints = endpoints[keep]
    t_polish = time.perf_counter()

    reps, sizes = _deduplicate_indices(endpoints, opts.dedup_tol)
    shared = sum(s - 1 for s in sizes)
    if shared:
        warnings.append(f"{shared} paths landed on shared endpoints")
    zeros = (
        endpoints[np.asarray(reps, dtype=int)]
        if len(reps)
        else np.empty((0, 15), complex)
    )
    dup_pts = zeros[[i for i, s in enumerate(sizes) if s > 1]].copy()

    exact_mask: Optional[np.ndarray] = None
    n_recovered = 0
    n_collapsed = 0
    if opts.exact_resolve and len(zeros):
        zeros, exact_mask, c = _exact_resolve(quintuple, zeros, opts)
        n_collapsed += c

    missing0 = TARGET_COUNT - len(zeros)
    if opts.recover and 0 < missing0 <= opts.recovery_limit:

        def absorb(cands) -> int:
            nonlocal zeros, exact_mask, n_collapsed
            new = _new_zeros_from(np.stack(cands), zeros, target, opts)
            if not new:
                return 0
            zeros = np.concatenate([zeros, np.stack(new)])
            if exact_mask is not None:
                exact_mask = np.concatenate([exact_mask, np.zeros(len(new), bool)])
            if opts.exact_resolve:
                zeros, exact_mask, c = _exact_resolve(quintuple, zeros, opts, exact_mask)
                n_collapsed += c
            return len(new)

        gained = 0
        if pool:
            gained += absorb(pool)
        if len(zeros) < TARGET_COUNT:
            sweep = _second_sweep(db, target, opts)
            if sweep:
                gained += absorb(sweep)
        if len(zeros) < TARGET_COUNT and len(dup_pts):
            looped = _recover_partners(
                target, zeros, dup_pts, TARGET_COUNT - len(zeros), opts
            )
            if len(looped):
                gained += absorb(looped)
        n_recovered = gained
        if gained:
            warnings.append(f"recovered {gained} zeros missed by path collisions")
        if len(zeros) < TARGET_COUNT:
            warnings.append(
                f"{TARGET_COUNT - len(zeros)} zeros still unaccounted for after recovery"
            )
    if n_collapsed:
        warnings.append(
            f"{n_collapsed} float-level duplicate endpoints collapsed by exact refinement"
        )
    t_recover = time.perf_counter()

    # path multiplicities: nearest kept zero per successful path endpoint
    if len(zeros) and len(endpoints):
        ztree = cKDTree(np.concatenate([zeros.real, zeros.imag], axis=1))
        eemb = np.concatenate([endpoints.real, endpoints.imag], axis=1)
        counts = np.zeros(len(zeros), dtype=int)
        for j in ztree.query(eemb, k=1)[1]:
            counts[j] += 1
    else:
        counts = np.ones(len(zeros), dtype=int)

    residuals = residual_batch(target, zeros) if len(zeros) else np.empty(0)
    is_real_instance = quintuple.is_real
    records = []
    for k in range(len(zeros)):
        z = zeros[k]
        is_real = bool(
            is_real_instance
            and np.abs(z.imag).max() <= opts.real_tol * (1.0 + np.abs(z).max())
        )
        rec = SolutionRecord(
            vector=z.copy(),
            residual=float(residuals[k]),
            is_real_numeric=is_real,
            multiplicity=max(1, int(counts[k])),
        )
        try:
            rec.degeneracy_condition = degeneracy_condition_number(rec.conic())
        except ValueError:
            rec.degeneracy_condition = float("inf")
        if is_real:
            real_conic = Conic(z[:5].real.tolist() + [1.0])
            rec.conic_class = classify(real_conic)
            rec.roundness = float(roundness(real_conic))
        records.append(rec)
    t_end = time.perf_counter()

    return SolveReport(
        instance=quintuple,
        solutions=records,
        n_paths=len(results),
        n_success=len(ok),
        n_complex_solutions=len(records),
        n_real_numeric=sum(1 for r in records if r.is_real_numeric),
        failures=failures,
        warnings=warnings,
        timings={
            "track_s": t_track - t_start,
            "polish_s": t_polish - t_track,
            "recover_s": t_recover - t_polish,
            "classify_s": t_end - t_recover,
            "total_s": t_end - t_start,
        },
        is_real_instance=is_real_instance,
        n_recovered=n_recovered,
        n_collapsed=n_collapsed,
    )


def verify_tangency(record: SolutionRecord, quintuple: Quintuple, tol: float = 1e-8) -> bool:
    """Independent residual check of one record, equation by equation."""
    z = record.vector[None, :]
    params = quintuple.params_array()
    f = np.abs(evaluate_batch(params, z)[0])
    m = magnitude_batch(params, z)[0] + 1.0
    if (f / m > tol).any():
        return False
    u = Conic(record.conic_coefficients)
    s = np.linalg.svd(
        np.array(
            [[complex(v) for v in row] for row in _symmetric(u)], dtype=complex
        ),
        compute_uv=False,
    )
    return bool(s[1] > 1e-10 * s[0])  # rank >= 2: not a double line


def _symmetric(u: Conic) -> list:
    from .conics import symmetric_matrix

    return symmetric_matrix(u)


@dataclass
class AnalysisSummary:
    class_counts: dict
    roundest_index: Optional[int]
    best_conditioned_index: Optional[int]


def analyze(report: SolveReport) -> AnalysisSummary:
    """Class tally over real solutions; extremal picks for display.

    The roundest ellipse is the real ellipse minimizing roundness; the
    best-conditioned solution minimizes the degeneracy condition number
    over all solutions, real or not.
    """
    counts = {c.value: 0 for c in ConicClass}
    roundest = None
    best_cond = None
    for k, rec in enumerate(report.solutions):
        if rec.conic_class is not None:
            counts[rec.conic_class.value] += 1
            if rec.conic_class == ConicClass.ELLIPSE and (
                roundest is None
                or rec.roundness < report.solutions[roundest].roundness
            ):
                roundest = k
        if rec.degeneracy_condition is not None and (
            best_cond is None
            or rec.degeneracy_condition
            < report.solutions[best_cond].degeneracy_condition
        ):
            best_cond = k
    return AnalysisSummary(
        class_counts=counts,
        roundest_index=roundest,
        best_conditioned_index=best_cond,
    )


def report_document(report: SolveReport, include_points: bool = True) -> dict:
    """JSON-ready solve result; the service payload shares this shape."""
    from .scalars import format_float

    def c2pair(z: complex) -> list:
        return [format_float(z.real), format_float(z.imag)]

    summary = analyze(report)
    sols = []
    for rec in report.solutions:
        entry = {
            "u": [c2pair(complex(v)) for v in rec.vector[:5]],
            "real": rec.is_real_numeric,
            "residual": format_float(rec.residual),
            "multiplicity": rec.multiplicity,
        }
        if rec.conic_class is not None:
            entry["class"] = rec.conic_class.value
            entry["roundness"] = format_float(rec.roundness)
        if rec.degeneracy_condition is not None:
            entry["condition"] = format_float(rec.degeneracy_condition)
        if include_points:
            entry["tangency_points"] = [
                [c2pair(complex(p.x)), c2pair(complex(p.y))]
                for p in rec.tangency_points
            ]
        sols.append(entry)
    return {
        "instance": report.instance.to_document(),
        "generic": report.generic,
        "count_complex": report.n_complex_solutions,
        "count_real": report.n_real_numeric,
        "n_paths": report.n_paths,
        "n_success": report.n_success,
        "n_recovered": report.n_recovered,
        "n_collapsed": report.n_collapsed,
        "class_counts": summary.class_counts,
        "roundest_index": summary.roundest_index,
        "best_conditioned_index": summary.best_conditioned_index,
        "failures": [[k, reason] for k, reason in report.failures],
        "warnings": list(report.warnings),
        "timings_ms": {k[:-2]: round(v * 1000.0, 1) for k, v in report.timings.items()},
        "solutions": sols,
    }

"""Predictor-corrector path tracking for parameter homotopies.

The homotopy moves the coefficient matrix along a straight segment from
start to target; solutions follow by a midpoint predictor on the
Davidenko field (J dz/dt = -dH/dt) and a short Newton corrector at the
advanced parameter.  Steps adapt: halve on a corrector failure, double
after two consecutive accepts.

All paths of a batch advance together through vectorized linear solves,
each with its own time, step size, and fate.  A path that stalls within
1e-4 of arrival is walked home in stages that halve 1-t, then corrected
at t=1 itself; targets close to the discriminant (a fully real instance,
say) produce many such stalls whose endpoints are nevertheless regular
zeros, and the staged walk reaches them without crossing to a neighbor.
There is no randomness here; the detour point used to retry failed paths
is an explicit field of the homotopy.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .polysys import (
    N_VARS,
    evaluate_batch,
    jacobian_batch,
    magnitude_batch,
    parameter_direction_batch,
)


class PathStatus(Enum):
    SUCCESS = "Success"
    DIVERGED = "Diverged"
    SINGULAR_ENDPOINT = "SingularEndpoint"
    STEP_FAILURE = "StepFailure"


@dataclass
class TrackerOptions:
    initial_step: float = 0.1
    min_step: float = 1e-14
    max_step: float = 1.0
    max_corrector_iters: int = 3
    corrector_tol: float = 1e-10
    divergence_bound: float = 1e10
    step_expand: float = 2.0
    step_shrink: float = 0.5

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step <= 1.0:
            raise ValueError("need 0 < min_step <= initial_step <= max_step <= 1")
        if self.max_corrector_iters < 1:
            raise ValueError("need at least one corrector iteration")
        if self.corrector_tol <= 0 or self.divergence_bound <= 1:
            raise ValueError("tolerances out of range")
        if self.step_expand <= 1 or not 0 < self.step_shrink < 1:
            raise ValueError("step factors out of range")


@dataclass
class PathResult:
    status: PathStatus
    endpoint: np.ndarray
    steps_taken: int
    final_residual: float
    t_reached: float


def _as_params(p) -> np.ndarray:
    a = np.asarray(p, dtype=complex)
    if a.shape != (5, 6):
        raise ValueError(f"parameter matrix must be (5, 6), got {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("non-finite parameter entry")
    return a


@dataclass(frozen=True)
class ParameterHomotopy:
    """Straight-line homotopy between two (5, 6) coefficient matrices.

    Equal endpoints are allowed; tracking is then plain Newton refinement.
    detour_point, when set, is the waypoint for retrying failed paths along
    a two-segment route.
    """

    start_params: np.ndarray
    target_params: np.ndarray
    detour_point: Optional[np.ndarray] = None

    n = N_VARS

    def __post_init__(self):
        object.__setattr__(self, "start_params", _as_params(self.start_params))
        object.__setattr__(self, "target_params", _as_params(self.target_params))
        if self.detour_point is not None:
            object.__setattr__(self, "detour_point", _as_params(self.detour_point))

    def params_at(self, t):
        t = np.asarray(t)[..., None, None]
        return (1.0 - t) * self.start_params + t * self.target_params

    def evaluate(self, t, z):
        return evaluate_batch(self.params_at(t), z)

    def jacobian(self, t, z):
        return jacobian_batch(self.params_at(t), z)

    def magnitude(self, t, z):
        return magnitude_batch(self.params_at(t), z)

    def t_derivative(self, t, z):
        return parameter_direction_batch(self.target_params - self.start_params, z)


def _solve_rows(jac: np.ndarray, rhs: np.ndarray):
    """Batched solve that degrades per row instead of failing wholesale."""
    try:
        sol = np.linalg.solve(jac, rhs[..., None])[..., 0]
        ok = np.isfinite(sol).all(axis=-1)
        return sol, ok
    except np.linalg.LinAlgError:
        sol = np.zeros_like(rhs)
        ok = np.zeros(len(jac), dtype=bool)
        for k in range(len(jac)):
            try:
                cand = np.linalg.solve(jac[k], rhs[k])
            except np.linalg.LinAlgError:
                continue
            if np.isfinite(cand).all():
                sol[k] = cand
                ok[k] = True
        return sol, ok


_ENDPOINT_EPS = 1e-8  # a step collapse this close to t=1 counts as singular
_JUMP_WINDOW = 1e-4  # stalls inside this window earn a staged walk to t=1
_WALK_FLOOR = 1e-15  # the walk stops shrinking 1-t here and corrects at 1


def _relative_residuals(hom, t, z) -> np.ndarray:
    f = np.linalg.norm(hom.evaluate(t, z), axis=-1)
    m = np.linalg.norm(hom.magnitude(t, z), axis=-1)
    return f / np.maximum(1.0, m)


def _endpoint_newton(hom, z0: np.ndarray, opts: TrackerOptions, iters: int):
    """Newton at t=1 with per-path live masking; returns (points, accepted).

    Paths whose target sits close to the discriminant can stall with the
    tracker a hair before arrival even though the endpoint itself is a
    regular zero; iterating the plain corrector at t=1 picks those up.
    """
    ze = np.array(z0)
    ones = np.ones(len(ze))
    live = np.ones(len(ze), dtype=bool)
    for _ in range(iters):
        if not live.any():
            break
        je = hom.jacobian(ones[live], ze[live])
        fe = hom.evaluate(ones[live], ze[live])
        st, ok = _solve_rows(je, -fe)
        znew = ze[live] + st
        good = ok & np.isfinite(znew).all(axis=1)
        small = np.linalg.norm(st, axis=1) <= opts.corrector_tol * (
            1.0 + np.linalg.norm(znew, axis=1)
        )
        idx = np.flatnonzero(live)
        ze[idx[good]] = znew[good]
        live[idx] = False
        live[idx[good & ~small]] = True
    rel = _relative_residuals(hom, ones, ze)
    return ze, rel <= opts.corrector_tol


def _endpoint_walk(hom, z0: np.ndarray, t0, opts: TrackerOptions):
    """Carry stalled paths the rest of the way on their own branch.

    One long Newton jump from a stall can cross to the twin zero when the
    target nearly pinches a pair.  Near a pinch the branches separate like
    sqrt(1-t), so halving 1-t per stage moves a path about a third of its
    local branch gap and Newton stays in the right basin.  Paths whose
    stage correction fails outright are abandoned rather than jumped.
    """
    ze = np.array(z0)
    alive = np.ones(len(ze), dtype=bool)
    delta = np.maximum(1.0 - np.asarray(t0, dtype=float), 10.0 * _WALK_FLOOR)
    while (delta > _WALK_FLOOR).any():
        delta = np.maximum(0.5 * delta, _WALK_FLOOR)
        tstage = 1.0 - delta
        for _ in range(3):
            if not alive.any():
                break
            js = hom.jacobian(tstage[alive], ze[alive])
            fs = hom.evaluate(tstage[alive], ze[alive])
            st, ok = _solve_rows(js, -fs)
            znew = ze[alive] + st
            good = (
                ok
                & np.isfinite(znew).all(axis=1)
                & (np.abs(znew).max(axis=1) <= opts.divergence_bound)
            )
            idx = np.flatnonzero(alive)
            ze[idx[good]] = znew[good]
            alive[idx[~good]] = False
    zf, okf = _endpoint_newton(hom, ze, opts, iters=6)
    return zf, okf & alive


def _track_batch(hom, starts: np.ndarray, opts: TrackerOptions, trace=None) -> list:
    z = np.array(starts, dtype=complex)
    count = z.shape[0]
    t = np.zeros(count)
    dt = np.full(count, opts.initial_step)
    accepts = np.zeros(count, dtype=int)
    steps = np.zeros(count, dtype=int)
    order = list(PathStatus)
    status = np.full(count, -1, dtype=int)  # -1 while still moving
    rescue: list = []

    while True:
        act = np.flatnonzero(status < 0)
        if act.size == 0:
            break
        za, ta = z[act], t[act]
        dta = np.minimum(dt[act], 1.0 - ta)
        lands = dta >= (1.0 - ta) - 1e-16

        # midpoint predictor on the Davidenko field J dz/dt = -dH/dt
        vel, ok_half = _solve_rows(hom.jacobian(ta, za), -hom.t_derivative(ta, za))
        th = ta + 0.5 * dta
        zh = za + 0.5 * dta[:, None] * vel
        vel2, ok_full = _solve_rows(hom.jacobian(th, zh), -hom.t_derivative(th, zh))
        ok_pred = ok_half & ok_full
        zp = za + dta[:, None] * vel2
        t1 = np.where(lands, 1.0, ta + dta)

        zc = zp.copy()
        converged = np.zeros(act.size, dtype=bool)
        live = ok_pred.copy()
        for _ in range(opts.max_corrector_iters):
            if not live.any():
                break
            jl = hom.jacobian(t1[live], zc[live])
            fl = hom.evaluate(t1[live], zc[live])
            step, ok_corr = _solve_rows(jl, -fl)
            znew = zc[live] + step
            good = ok_corr & np.isfinite(znew).all(axis=1)
            small = np.linalg.norm(step, axis=1) <= opts.corrector_tol * (
                1.0 + np.linalg.norm(znew, axis=1)
            )
            idx = np.flatnonzero(live)
            zc[idx[good]] = znew[good]
            converged[idx[good & small]] = True
            live[idx] = False
            live[idx[good & ~small]] = True

        blown = np.abs(zc).max(axis=1) > opts.divergence_bound
        diverged = converged & blown
        accepted = converged & ~blown

        if diverged.any():
            # terminal; keep the oversized endpoint as evidence
            z[act[diverged]] = zc[diverged]
            t[act[diverged]] = t1[diverged]
            status[act[diverged]] = order.index(PathStatus.DIVERGED)

        acc_idx = act[accepted]
        if acc_idx.size:
            z[acc_idx] = zc[accepted]
            t[acc_idx] = t1[accepted]
            steps[acc_idx] += 1
            accepts[acc_idx] += 1
            grow = accepts[acc_idx] >= 2
            dt[acc_idx[grow]] = np.minimum(
                dt[acc_idx[grow]] * opts.step_expand, opts.max_step
            )
            accepts[acc_idx[grow]] = 0
            if trace is not None and 0 in acc_idx:
                k = int(np.flatnonzero(act == 0)[0])
                trace.append((float(t1[k]), zc[k].copy()))

        rej_idx = act[~converged]
        if rej_idx.size:
            dt[rej_idx] *= opts.step_shrink
            accepts[rej_idx] = 0
            dead = rej_idx[dt[rej_idx] < opts.min_step]
            if dead.size:
                near_end = 1.0 - t[dead] < _ENDPOINT_EPS
                status[dead[near_end]] = order.index(PathStatus.SINGULAR_ENDPOINT)
                status[dead[~near_end]] = order.index(PathStatus.STEP_FAILURE)
                rescue.extend(dead[1.0 - t[dead] < _JUMP_WINDOW])

        done = act[accepted & lands]
        if done.size:
            # sharpen the endpoint before judging it
            ze, good = _endpoint_newton(hom, z[done], opts, iters=3)
            z[done] = ze
            status[done[good]] = order.index(PathStatus.SUCCESS)
            status[done[~good]] = order.index(PathStatus.SINGULAR_ENDPOINT)
            rescue.extend(done[~good])

    if rescue:
        ridx = np.array(sorted(set(int(k) for k in rescue)))
        ze, okr = _endpoint_walk(hom, z[ridx], t[ridx], opts)
        saved = ridx[okr]
        if saved.size:
            z[saved] = ze[okr]
            t[saved] = 1.0
            steps[saved] += 1
            status[saved] = order.index(PathStatus.SUCCESS)

    residuals = _relative_residuals(hom, t, z)
    return [
        PathResult(
            status=order[status[k]],
            endpoint=z[k].copy(),
            steps_taken=int(steps[k]),
            final_residual=float(residuals[k]),
            t_reached=float(t[k]),
        )
        for k in range(count)
    ]


def track(hom, start: Sequence, options: Optional[TrackerOptions] = None, trace=None) -> PathResult:
    """Track one solution from t=0 to t=1.

    trace, when given, is a list that collects (t, z) at every accepted
    step, in order; t is strictly increasing along it.
    """
    opts = options or TrackerOptions()
    starts = np.asarray(start, dtype=complex)[None, :]
    return _track_batch(hom, starts, opts, trace=trace)[0]


def _run_with_detour(hom, starts: np.ndarray, opts: TrackerOptions) -> list:
    """One direct batch plus one detour retry of whatever failed."""
    results = _track_batch(hom, starts, opts)
    detour = getattr(hom, "detour_point", None)
    if detour is None:
        return results
    failed = [k for k, r in enumerate(results) if r.status != PathStatus.SUCCESS]
    if not failed:
        return results
    leg1 = _track_batch(ParameterHomotopy(hom.start_params, detour), starts[failed], opts)
    carried = [
        (k, r1) for k, r1 in zip(failed, leg1) if r1.status == PathStatus.SUCCESS
    ]
    if not carried:
        return results
    mids = np.stack([r1.endpoint for _, r1 in carried])
    leg2 = _track_batch(ParameterHomotopy(detour, hom.target_params), mids, opts)
    for (k, r1), r2 in zip(carried, leg2):
        if r2.status == PathStatus.SUCCESS:
            results[k] = PathResult(
                status=PathStatus.SUCCESS,
                endpoint=r2.endpoint,
                steps_taken=results[k].steps_taken + r1.steps_taken + r2.steps_taken,
                final_residual=r2.final_residual,
                t_reached=1.0,
            )
    return results


def _collision_suspects(results: list, tol: float) -> list:
    """Success paths that share an endpoint with another success.

    Either member of such a pair may be the one that jumped branches, so
    both re-track rather than count once and lose a solution."""
    succ = [k for k, r in enumerate(results) if r.status == PathStatus.SUCCESS]
    if len(succ) < 2:
        return []
    pts = np.stack([results[k].endpoint for k in succ])
    emb = np.concatenate([pts.real, pts.imag], axis=1)
    scale = 1.0 + np.abs(pts).max(axis=1)
    cut = tol * (1.0 + float(scale.max()))
    pairs = cKDTree(emb).query_pairs(cut, output_type="ndarray")
    suspects = set()
    for i, j in pairs:
        d = np.linalg.norm(pts[i] - pts[j])
        if d <= tol * max(scale[i], scale[j]):
            suspects.add(succ[i])
            suspects.add(succ[j])
    return sorted(suspects)


def track_all(
    hom,
    starts,
    options: Optional[TrackerOptions] = None,
    collision_tol: float = 1e-6,
    max_retries: int = 2,
    endpoint_pool: Optional[list] = None,
) -> list:
    """Track every start point toward its own endpoint.

    Failures are retried once through the homotopy's detour point when it
    has one.  Paths that failed anyway, or that landed on an endpoint some
    other path already holds (a jump between nearby branches), re-run with
    the step size capped harder; two rounds of that resolve the tight
    near-real geometries seen in practice.

    Retries follow a different waypoint, so a re-run path may land on a
    different (equally valid) zero than it first did.  Passing a list as
    endpoint_pool collects every successful landing from every round,
    including those a later retry overwrites; near-discriminant targets
    scatter landings across rounds, and the pool is how a caller keeps
    them all.
    """
    opts = options or TrackerOptions()
    starts = np.asarray(starts, dtype=complex)
    if starts.size == 0:
        return []
    results = _run_with_detour(hom, starts, opts)
    detour = getattr(hom, "detour_point", None)
    if endpoint_pool is not None:
        endpoint_pool.extend(
            r.endpoint.copy() for r in results if r.status == PathStatus.SUCCESS
        )
    cap = opts.max_step
    for round_no in range(max_retries):
        suspects = [
            k for k, r in enumerate(results) if r.status != PathStatus.SUCCESS
        ]
        suspects += _collision_suspects(results, collision_tol)
        if not suspects:
            break
        suspects = sorted(set(suspects))
        # capping the step keeps retried paths from skating over the tight
        # turns that caused trouble; the floor keeps reruns affordable
        cap = max(0.05 * cap, 2e-3)
        tight = replace(
            opts,
            max_step=cap,
            initial_step=min(opts.initial_step, cap),
        )
        retry_hom = hom
        if detour is not None:
            # a fresh waypoint reshuffles how close each path shaves the
            # discriminant, so a pair that coalesced once usually splits
            mid = 0.5 * (hom.start_params + hom.target_params)
            spin = np.exp(1j * (1.1 + 0.9 * round_no))
            retry_hom = ParameterHomotopy(
                hom.start_params,
                hom.target_params,
                detour_point=mid + spin * (detour - mid),
            )
        redo = _run_with_detour(retry_hom, starts[suspects], tight)
        if endpoint_pool is not None:
            endpoint_pool.extend(
                r.endpoint.copy() for r in redo if r.status == PathStatus.SUCCESS
            )
        for k, r in zip(suspects, redo):
            if r.status == PathStatus.SUCCESS:
                r.steps_taken += results[k].steps_taken
                results[k] = r
    return results

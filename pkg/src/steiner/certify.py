"""A-posteriori certification of numerical solutions, in exact arithmetic.

A candidate z is an approximate zero when alpha = beta * gamma < 0.03,
with beta = ||J^-1 F|| and gamma bounded through the norms of the scaled
higher derivatives J^-1 D^k F / k!; the system is cubic, so only k = 2, 3
contribute.  Everything is evaluated over the rationals: float candidates
are taken at face value as the dyadic rationals they are, and all
comparisons are exact, so a positive verdict is a proof.

Consequences used downstream, all from the same numerology:
  - the true zero lies within 2 beta of z;
  - any y within 1/(20 gamma) of z converges to the same zero, which turns
    conjugation symmetry into realness certificates and near pairs into
    same-zero certificates;
  - balls around distinct certified points that do not overlap prove the
    underlying zeros distinct.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .conics import Quintuple
from .exactlinalg import AdjugateSolver, SingularMatrixError
from .polysys import StructuredSystem, build_system
from .scalars import CQ, Rational, cq, rational, sqrt_upper

_ALPHA_SQ_THRESHOLD = rational(9, 10000)  # 0.03 squared
_BASIN_FACTOR_SQ = 400  # (20 gamma) squared


class RealnessVerdict(Enum):
    CERTIFIED_REAL = "CertifiedReal"
    CERTIFIED_NONREAL = "CertifiedNonreal"
    UNDECIDED = "Undecided"


@dataclass
class Certificate:
    alpha_ok: bool
    beta_sq: Optional[Rational] = None
    gamma_sq: Optional[Rational] = None
    alpha_sq: Optional[Rational] = None
    inclusion_radius_sq: Optional[Rational] = None
    realness: Optional[RealnessVerdict] = None
    failure: Optional[str] = None


def as_exact_point(z) -> list:
    """Candidate coordinates as exact complex rationals."""
    if isinstance(z, np.ndarray):
        return [CQ.from_complex(complex(v)) for v in z]
    return [cq(v) for v in z]


def _as_float_vector(z) -> list:
    return [v.to_complex() if isinstance(v, CQ) else complex(v) for v in z]


_REFINE_BITS = 192


def _dyadic(v: Rational, bits: int) -> Rational:
    q = v * (1 << bits) + rational(1, 2)
    return rational(q.numerator // q.denominator, 1 << bits)


def refine(system: StructuredSystem, z, steps: int = 1, bits: int = _REFINE_BITS) -> list:
    """Sharpen a candidate by exact Newton, snapping to denominator 2^bits.

    A double-precision endpoint near a tight cluster of zeros carries just
    enough error to leave alpha or distinctness undecided; one exact step
    roughly squares its accuracy, far past what floats can express.  The
    snap keeps subsequent integer sizes bounded.  This only improves the
    candidate: every certificate downstream judges the new point on its
    own, so soundness never depends on this step.
    """
    zq = as_exact_point(z)
    for _ in range(steps):
        zq = system.newton_step(zq)
        zq = [CQ(_dyadic(v.re, bits), _dyadic(v.im, bits)) for v in zq]
    return zq


def _exact_conjugate(z: Sequence[CQ]) -> list:
    return [v.conjugate() for v in z]


def beta_sq(system: StructuredSystem, z) -> Rational:
    """||J^-1 F||^2 at z, exactly."""
    zq = as_exact_point(z)
    solver = AdjugateSolver(system.jacobian(zq))
    return solver.solve_norm_sq(system.evaluate(zq))


def _scaled_tensor_norm_sq(
    system: StructuredSystem, solver: AdjugateSolver, zq: list, order: int
) -> Rational:
    """Squared Frobenius norm of J^-1 D^order F / order!.

    The tensor is stored by sorted multi-index; each column is pushed
    through the factored inverse and its norm weighted by the number of
    index permutations it represents.
    """
    tensor = system.derivative_tensor(zq, order)
    columns: dict = {}
    for (row, idx), val in tensor.entries.items():
        columns.setdefault(idx, {})[row] = val
    total = rational(0)
    for idx, col in columns.items():
        total = total + tensor.multiplicity(idx) * solver.solve_norm_sq_sparse(col)
    return total / (math.factorial(order) ** 2)


def gamma_sq_bound(system: StructuredSystem, z) -> Rational:
    """Rational upper bound for gamma^2 = (sup_k ||J^-1 D^k F/k!||^(1/(k-1)))^2."""
    zq = as_exact_point(z)
    solver = AdjugateSolver(system.jacobian(zq))
    s2 = _scaled_tensor_norm_sq(system, solver, zq, 2)
    s3 = _scaled_tensor_norm_sq(system, solver, zq, 3)
    return max(s2, sqrt_upper(s3))


def alpha_certify(system: StructuredSystem, z) -> Certificate:
    """The full alpha test at one candidate point."""
    zq = as_exact_point(z)
    try:
        solver = AdjugateSolver(system.jacobian(zq))
    except SingularMatrixError:
        return Certificate(alpha_ok=False, failure="singular jacobian at candidate")
    b = solver.solve_norm_sq(system.evaluate(zq))
    s2 = _scaled_tensor_norm_sq(system, solver, zq, 2)
    s3 = _scaled_tensor_norm_sq(system, solver, zq, 3)
    g = max(s2, sqrt_upper(s3))
    a = b * g
    ok = a < _ALPHA_SQ_THRESHOLD
    return Certificate(
        alpha_ok=bool(ok),
        beta_sq=b,
        gamma_sq=g,
        alpha_sq=a,
        inclusion_radius_sq=4 * b if ok else None,
    )


def _conjugate_distance_sq(zq: Sequence[CQ]) -> Rational:
    # ||z - conj(z)||^2 = 4 sum Im(z_k)^2
    total = rational(0)
    for v in zq:
        total = total + v.im * v.im
    return 4 * total


def certify_real(system: StructuredSystem, certificate: Certificate, z) -> RealnessVerdict:
    """Decide realness of the zero behind a certified candidate.

    Needs a real system: conjugation then fixes the equations, so the
    conjugate candidate converges to the conjugate zero.  If the conjugate
    sits in the same convergence basin the zero is fixed by conjugation,
    hence real; if the two inclusion balls are disjoint it cannot be.
    """
    exact_params = system.exact_parameters()
    if any(not c.is_real for row in exact_params for c in row):
        raise ValueError("realness certification needs a real instance")
    if not certificate.alpha_ok:
        raise ValueError("realness needs a certified candidate")
    zq = as_exact_point(z)
    d_sq = _conjugate_distance_sq(zq)
    if d_sq * _BASIN_FACTOR_SQ * certificate.gamma_sq < 1:
        return RealnessVerdict.CERTIFIED_REAL
    if d_sq > 16 * certificate.beta_sq:
        return RealnessVerdict.CERTIFIED_NONREAL
    return RealnessVerdict.UNDECIDED


def _distance_sq_exact(a: Sequence[CQ], b: Sequence[CQ]) -> Rational:
    total = rational(0)
    for x, y in zip(a, b):
        total = total + (x - y).norm_sq()
    return total


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, k: int) -> int:
        while self.parent[k] != k:
            self.parent[k] = self.parent[self.parent[k]]
            k = self.parent[k]
        return k

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


@dataclass
class DistinctnessResult:
    classes: list  # lists of point indices, one per certified distinct zero
    unresolved: list  # point index pairs neither merged nor separated


def certify_distinct(
    points: Sequence, certificates: Sequence[Certificate]
) -> DistinctnessResult:
    """Partition certified candidates by underlying zero.

    Far pairs are separated wholesale: the coordinates are exact doubles,
    so a floating k-d tree distance carries a relative error ~1e-13, and
    any pair further apart than the cut is distinct once the cut
    dominates every inclusion radius (checked exactly).  Only near pairs
    get the exact treatment.
    """
    idx = [k for k, c in enumerate(certificates) if c.alpha_ok]
    exact = {k: as_exact_point(points[k]) for k in idx}
    if not idx:
        return DistinctnessResult(classes=[], unresolved=[])
    max_b = max(certificates[k].beta_sq for k in idx)
    # cut^2 must exceed 8(b_i + b_j) <= 16 max_b with slack for the float
    # distance error; 1e-6 of headroom is astronomically more than 1e-13
    cut_sq = rational(1, 10**8)  # cut = 1e-4
    while not (16 * max_b * rational(10**6) < cut_sq):
        cut_sq = cut_sq * 4
    cut = float(sqrt_upper(cut_sq))
    flat = (
        np.ascontiguousarray(
            np.asarray([_as_float_vector(points[k]) for k in idx], dtype=complex)
        )
        .view(float)
        .reshape(len(idx), -1)
    )
    near = cKDTree(flat).query_pairs(r=cut * 1.0000001, output_type="ndarray")
    uf = _UnionFind(len(idx))
    unresolved = []
    for a, b in near:
        ka, kb = idx[int(a)], idx[int(b)]
        d_sq = _distance_sq_exact(exact[ka], exact[kb])
        ca, cb = certificates[ka], certificates[kb]
        if (
            d_sq * _BASIN_FACTOR_SQ * ca.gamma_sq < 1
            or d_sq * _BASIN_FACTOR_SQ * cb.gamma_sq < 1
        ):
            uf.union(int(a), int(b))
        elif d_sq > 8 * (ca.beta_sq + cb.beta_sq):
            continue
        else:
            unresolved.append((ka, kb))
    groups: dict = {}
    for pos, k in enumerate(idx):
        groups.setdefault(uf.find(pos), []).append(k)
    classes = [sorted(g) for g in groups.values()]
    classes.sort(key=lambda g: g[0])
    return DistinctnessResult(classes=classes, unresolved=unresolved)


@dataclass
class CertificationReport:
    n_points: int
    n_certified: int
    n_distinct: int
    n_real: Optional[int]
    certificates: list
    classes: list
    unresolved: list
    wall_time: float
    points: Optional[list] = None  # the judged candidates, exact

    @property
    def complete(self) -> bool:
        return self.n_certified == self.n_points and not self.unresolved


def certify_solution_set(
    quintuple: Quintuple,
    points: Sequence,
    check_real: Optional[bool] = None,
    progress=None,
    max_refine: int = 2,
) -> CertificationReport:
    """Certify a whole solution list: alpha tests, distinctness, realness.

    check_real defaults to whether the instance is real.  Candidates that
    leave a verdict open (alpha failed, realness undecided, or a pairwise
    distinctness question) are sharpened by exact Newton and re-judged, up
    to max_refine rounds; near-degenerate instances with solution pairs
    below float resolution need this, generic ones never trigger it.
    n_distinct counts classes certified pairwise distinct; with unresolved
    pairs it is the number of connected components when those are merged,
    a safe lower bound.
    """
    t0 = time.perf_counter()
    system = build_system(quintuple)
    want_real = quintuple.is_real if check_real is None else check_real

    def judge(z) -> Certificate:
        cert = alpha_certify(system, z)
        if cert.alpha_ok and want_real:
            cert.realness = certify_real(system, cert, z)
        return cert

    pts = [as_exact_point(z) for z in points]
    certificates = []
    for k, z in enumerate(pts):
        certificates.append(judge(z))
        if progress is not None:
            progress(k + 1, len(pts))

    distinct = certify_distinct(pts, certificates)
    for _ in range(max_refine):
        need = {k for k, c in enumerate(certificates) if not c.alpha_ok}
        need |= {
            k
            for k, c in enumerate(certificates)
            if c.realness == RealnessVerdict.UNDECIDED
        }
        for a, b in distinct.unresolved:
            need.update((a, b))
        if not need:
            break
        for k in sorted(need):
            try:
                pts[k] = refine(system, pts[k])
            except SingularMatrixError:
                continue
            certificates[k] = judge(pts[k])
        distinct = certify_distinct(pts, certificates)
    n_distinct = len(distinct.classes)
    if distinct.unresolved:
        # collapse unresolved links before counting, to stay a lower bound
        uf = _UnionFind(len(distinct.classes))
        lookup = {}
        for i, g in enumerate(distinct.classes):
            for k in g:
                lookup[k] = i
        for a, b in distinct.unresolved:
            uf.union(lookup[a], lookup[b])
        n_distinct = len({uf.find(i) for i in range(len(distinct.classes))})
    n_real = None
    if want_real:
        n_real = sum(
            1
            for g in distinct.classes
            if any(
                certificates[k].realness == RealnessVerdict.CERTIFIED_REAL for k in g
            )
        )
    return CertificationReport(
        n_points=len(points),
        n_certified=sum(1 for c in certificates if c.alpha_ok),
        n_distinct=n_distinct,
        n_real=n_real,
        certificates=certificates,
        classes=distinct.classes,
        unresolved=distinct.unresolved,
        wall_time=time.perf_counter() - t0,
        points=pts,
    )


def certificate_document(report: CertificationReport, include_points: bool = False) -> dict:
    """JSON-ready report; rationals print as p/q strings.

    include_points embeds each judged candidate's exact coordinates, making
    the document a self-contained proof artifact (at several MB for a full
    solution set).
    """
    from .scalars import format_rational

    def fr(r) -> Optional[str]:
        return None if r is None else format_rational(r)

    certs = []
    for k, c in enumerate(report.certificates):
        entry = {
            "alpha_ok": c.alpha_ok,
            "beta_sq": fr(c.beta_sq),
            "gamma_sq": fr(c.gamma_sq),
            "alpha_sq": fr(c.alpha_sq),
            "inclusion_radius_sq": fr(c.inclusion_radius_sq),
            "realness": None if c.realness is None else c.realness.value,
            "failure": c.failure,
        }
        if include_points and report.points is not None:
            entry["candidate"] = [
                [fr(v.re), fr(v.im)] for v in report.points[k]
            ]
        certs.append(entry)
    return {
        "n_points": report.n_points,
        "n_certified": report.n_certified,
        "n_distinct": report.n_distinct,
        "n_real": report.n_real,
        "complete": report.complete,
        "classes": report.classes,
        "unresolved": [list(p) for p in report.unresolved],
        "wall_time_s": round(report.wall_time, 3),
        "certificates": certs,
    }

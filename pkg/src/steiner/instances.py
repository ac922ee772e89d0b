"""Built-in and generated problem instances.

Three sources of quintuples: the fully-real rational instance embedded as
literal strings, the pentagon family of five near-degenerate hyperbolas,
and random instances over two coefficient fields.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .conics import Conic, LinearForm, Point2, Quintuple, classify
from .scalars import Rational, rational

__all__ = [
    "FULTON_MATRIX",
    "PENTAGON_SWEEP_SCHEDULE",
    "PentagonParams",
    "fulton_instance",
    "pentagon_instance",
    "random_instance",
    "regular_pentagon_params",
]


# Transcribed digit for digit; tests pin a checksum of this block.
FULTON_MATRIX = (
    (
        "10124547/662488724",
        "8554609/755781377",
        "5860508/2798943247",
        "-251402893/1016797750",
        "-25443962/277938473",
        "1",
    ),
    (
        "520811/1788018449",
        "2183697/542440933",
        "9030222/652429049",
        "-12680955/370629407",
        "-24872323/105706890",
        "1",
    ),
    (
        "6537193/241535591",
        "-7424602/363844915",
        "6264373/1630169777",
        "13097677/39806827",
        "-29825861/240478169",
        "1",
    ),
    (
        "13173269/2284890206",
        "4510030/483147459",
        "2224435/588965799",
        "33318719/219393000",
        "92891037/755709662",
        "1",
    ),
    (
        "8275097/452566634",
        "-19174153/408565940",
        "5184916/172253855",
        "-23713234/87670601",
        "28246737/81404569",
        "1",
    ),
)


def fulton_instance() -> Quintuple:
    """The built-in rational quintuple whose 3264 tangent conics are all real."""
    return Quintuple.from_conics([Conic.from_strings(row) for row in FULTON_MATRIX])


# -- pentagon family ---------------------------------------------------------


@dataclass(frozen=True)
class PentagonParams:
    """Five pointed edges of a convex pentagon plus the hyperbola scales.

    Each edge carries one interior point; pentagon_instance replaces the
    pointed edge with a thin hyperbola hugging it.  Edge k runs from
    vertex k to vertex k+1 (indices mod 5), so consecutive edge lines
    meet in the vertices.  Requires eps > delta > 0, a strictly convex
    vertex cycle, and every special point strictly inside its edge.
    """

    edges: tuple
    points: tuple
    eps: Rational
    delta: Rational

    def __post_init__(self):
        if len(self.edges) != 5 or len(self.points) != 5:
            raise ValueError("need 5 edges and 5 points")
        eps, delta = rational(self.eps), rational(self.delta)
        if not (eps > delta > 0):
            raise ValueError(f"need eps > delta > 0, got eps={eps} delta={delta}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "delta", delta)
        verts = [_line_meet(self.edges[k - 1], self.edges[k]) for k in range(5)]
        cross = []
        for k in range(5):
            ax, ay = verts[k][0] - verts[k - 1][0], verts[k][1] - verts[k - 1][1]
            bx, by = verts[(k + 1) % 5][0] - verts[k][0], verts[(k + 1) % 5][1] - verts[k][1]
            cross.append(ax * by - ay * bx)
        if any(c == 0 for c in cross) or (min(c > 0 for c in cross) != max(c > 0 for c in cross)):
            raise ValueError("edge lines do not bound a convex pentagon")
        for k, p in enumerate(self.points):
            if self.edges[k].evaluate(p.x, p.y) != 0:
                raise ValueError(f"special point {k} is off its edge line")
            a, b = verts[k], verts[(k + 1) % 5]
            dx, dy = b[0] - a[0], b[1] - a[1]
            t = ((p.x - a[0]) * dx + (p.y - a[1]) * dy) / (dx * dx + dy * dy)
            if not (0 < t < 1):
                raise ValueError(f"special point {k} is outside its edge segment")


def _line_meet(l1: LinearForm, l2: LinearForm) -> tuple:
    det = l1.l1 * l2.l2 - l1.l2 * l2.l1
    if det == 0:
        raise ValueError("adjacent edge lines are parallel")
    return (
        (l1.l2 * l2.l3 - l1.l3 * l2.l2) / det,
        (l1.l3 * l2.l1 - l1.l1 * l2.l3) / det,
    )


def _rationalize_milli(x: float) -> Rational:
    return rational(round(1000 * x), 1000)


def regular_pentagon_params(
    eps,
    delta,
    rng: Optional[np.random.Generator] = None,
    jitter: float = 0.35,
) -> PentagonParams:
    """Asymmetric pentagon: regular vertices wobbled in radius.

    Vertex coordinates are rounded to 3 decimals; the special point of
    each edge is displaced from the midpoint by a random fraction of the
    edge.  The asymmetry is not cosmetic: near the regular pentagon many
    of the limiting tangent conics form complex-conjugate pairs, and only
    a decidedly lopsided pentagon makes them real, which is what lets the
    shrinking-hyperbola family turn solutions real.  Radial wobble is the
    useful kind; wobbling vertex angles was tried and lowered the real
    count, so the spokes stay regular.  Draws are retried until the
    convexity and interior-point invariants hold.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    for _ in range(64):
        verts = []
        for k in range(5):
            a = 2 * math.pi * k / 5 + math.pi / 2
            wob = 1.0 + jitter * rng.uniform(-1, 1) if jitter else 1.0
            verts.append(
                Point2(
                    _rationalize_milli(wob * math.cos(a)),
                    _rationalize_milli(wob * math.sin(a)),
                )
            )
        edges, points = [], []
        for k in range(5):
            v, w = verts[k], verts[(k + 1) % 5]
            dx, dy = w.x - v.x, w.y - v.y
            # inward normal is (-dy, dx) for counterclockwise vertices
            edges.append(LinearForm(-dy, dx, dy * v.x - dx * v.y))
            frac = max(-0.45, min(0.45, jitter * rng.uniform(-1, 1)))
            t = rational(1, 2) + _rationalize_milli(frac)
            points.append(Point2(v.x + t * dx, v.y + t * dy))
        try:
            return PentagonParams(tuple(edges), tuple(points), rational(eps), rational(delta))
        except ValueError as exc:
            if "eps > delta" in str(exc):
                raise
            continue
    raise ValueError("could not draw a convex pentagon at this jitter")


def _linear_square(a, b, c) -> list:
    # (a x + b y + c)^2 in the coefficient basis (x^2, xy, y^2, x, y, 1)
    return [a * a, 2 * a * b, b * b, 2 * a * c, 2 * b * c, c * c]


def _normalized(coeffs: Sequence[Rational]) -> list:
    """Clear denominators, strip the common factor, then scale the largest
    entry into [1, 2) by a power of two so the float image stays tame."""
    den = 1
    for c in coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    if g > 1:
        ints = [v // g for v in ints]
    shift = max(abs(v) for v in ints).bit_length() - 1
    return [rational(v, 1 << shift) for v in ints]


def pentagon_instance(params: PentagonParams) -> Quintuple:
    """Replace each pointed edge by a nearby thin hyperbola.

    The model recipe puts the edge on x = 0 with the special point at the
    origin and takes x^2 - eps*y^2 + delta; an affine frame carries that
    picture onto each actual edge.  With eps > delta > 0 the branches open
    along the edge and pinch toward the special point as both shrink.
    """
    eps, delta = params.eps, params.delta
    conics = []
    for edge, s in zip(params.edges, params.points):
        n = (edge.l1, edge.l2)
        d = (edge.l2, -edge.l1)
        det = n[0] * d[1] - n[1] * d[0]
        if det == 0:
            raise ValueError("degenerate edge line")
        # invert T(xi, eta) = s + xi*n + eta*d to get the frame coordinates
        # as affine forms in (x, y)
        xi = (
            d[1] / det,
            -d[0] / det,
            (d[0] * s.y - d[1] * s.x) / det,
        )
        eta = (
            -n[1] / det,
            n[0] / det,
            (n[1] * s.x - n[0] * s.y) / det,
        )
        sq_xi = _linear_square(*xi)
        sq_eta = _linear_square(*eta)
        coeffs = [a - eps * b for a, b in zip(sq_xi, sq_eta)]
        coeffs[5] = coeffs[5] + delta
        conics.append(Conic(_normalized(coeffs)))
    return Quintuple.from_conics(conics)


# (eps, delta) pairs shrinking toward the degenerate pentagon; real counts
# grow along the schedule (the limit splits every solution into real ones).
PENTAGON_SWEEP_SCHEDULE = (
    (rational(1, 2), rational(1, 4)),
    (rational(1, 8), rational(1, 16)),
    (rational(1, 32), rational(1, 64)),
    (rational(1, 128), rational(1, 256)),
    (rational(1, 512), rational(1, 1024)),
)


# -- random instances --------------------------------------------------------


def _random_rational_conic(rng: np.random.Generator) -> Conic:
    while True:
        coeffs = [rational(int(v), 100) for v in rng.integers(-99, 100, size=6)]
        conic = Conic(coeffs) if any(coeffs) else None
        if conic is None:
            continue
        if classify(conic).name.startswith("DEGENERATE"):
            continue
        return conic


def _random_complex_conic(rng: np.random.Generator) -> Conic:
    while True:
        re = rng.uniform(-1, 1, size=6)
        im = rng.uniform(-1, 1, size=6)
        conic = Conic([complex(a, b) for a, b in zip(re, im)])
        # degeneracy for complex conics: determinant of the symmetric matrix
        arr = conic.as_array()
        m = np.array(
            [
                [2 * arr[0], arr[1], arr[3]],
                [arr[1], 2 * arr[2], arr[4]],
                [arr[3], arr[4], 2 * arr[5]],
            ]
        )
        if abs(np.linalg.det(m)) < 1e-6:
            continue
        return conic


def random_instance(rng: np.random.Generator, field: str = "real-rational") -> Quintuple:
    """Five nondegenerate random conics.

    "real-rational" samples coefficients from the grid k/100, |k| < 100,
    so the instance serializes losslessly; "complex" samples float
    coefficients from the unit box.
    """
    if field == "real-rational":
        return Quintuple.from_conics([_random_rational_conic(rng) for _ in range(5)])
    if field == "complex":
        return Quintuple.from_conics([_random_complex_conic(rng) for _ in range(5)])
    raise ValueError(f"unknown field {field!r}")

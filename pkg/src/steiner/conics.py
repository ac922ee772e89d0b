"""Plane conics: types, classification, and tangency detection.

A conic is stored by its six coefficients (a1..a6) with
a1 x^2 + a2 xy + a3 y^2 + a4 x + a5 y + a6 = 0.  Coefficients may be exact
rationals, floats, or complex numbers; operations that only make sense for
real conics (classification, roundness) insist on real input, everything
else is generic in the scalar type.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .scalars import format_float, format_rational, parse_rational


class ConicClass(Enum):
    ELLIPSE = "Ellipse"
    HYPERBOLA = "Hyperbola"
    PARABOLA = "Parabola"
    DEGENERATE_RANK2 = "DegenerateRank2"
    DEGENERATE_RANK_LE1 = "DegenerateRankLE1"


class DegenerateConicError(ValueError):
    """A smooth conic was required and a singular one was supplied."""


class IdenticalConicsError(ValueError):
    """Two conics that should be distinct define the same curve."""


class SingularPointError(ValueError):
    """No tangent line: the gradient vanishes at the point."""


class Point2(NamedTuple):
    x: complex
    y: complex


class LinearForm(NamedTuple):
    """l1 x + l2 y + l3; coefficients follow the scalar type of the input."""

    l1: object
    l2: object
    l3: object

    def evaluate(self, x, y):
        return self.l1 * x + self.l2 * y + self.l3


def _is_exact(v) -> bool:
    return not isinstance(v, (float, complex, np.floating, np.complexfloating))


def _to_scalar(v):
    # numpy scalars leak out of arrays; keep plain python types in coeffs
    if isinstance(v, np.complexfloating):
        z = complex(v)
        return z.real if z.imag == 0 else z
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def _parse_coefficient(text: str):
    s = text.strip()
    if "i" in s or "j" in s:
        z = complex(s.replace("i", "j"))
        return z.real if z.imag == 0.0 else z
    return parse_rational(s)


def _format_coefficient(v) -> str:
    if _is_exact(v):
        return format_rational(v)
    if isinstance(v, complex):
        return f"{format_float(v.real)}{'+' if v.imag >= 0 else '-'}{format_float(abs(v.imag))}i"
    return format_float(v)


@dataclass(frozen=True)
class Conic:
    """An immutable conic; construct from six scalars or from strings."""

    coeffs: tuple

    def __init__(self, coeffs: Sequence):
        entries = tuple(_to_scalar(c) for c in coeffs)
        if len(entries) != 6:
            raise ValueError(f"a conic needs 6 coefficients, got {len(entries)}")
        if all(c == 0 for c in entries):
            raise ValueError("all coefficients vanish")
        for c in entries:
            if isinstance(c, complex) and not (
                math.isfinite(c.real) and math.isfinite(c.imag)
            ):
                raise ValueError("non-finite coefficient")
            if isinstance(c, float) and not math.isfinite(c):
                raise ValueError("non-finite coefficient")
        object.__setattr__(self, "coeffs", entries)

    @classmethod
    def from_strings(cls, entries: Sequence[str]) -> "Conic":
        return cls([_parse_coefficient(e) for e in entries])

    def as_strings(self) -> list:
        return [_format_coefficient(c) for c in self.coeffs]

    @property
    def is_rational(self) -> bool:
        return all(_is_exact(c) for c in self.coeffs)

    @property
    def is_real(self) -> bool:
        return all(
            _is_exact(c) or isinstance(c, float) or c.imag == 0 for c in self.coeffs
        )

    def as_array(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def evaluate(self, x, y):
        c1, c2, c3, c4, c5, c6 = self.coeffs
        return c1 * x * x + c2 * x * y + c3 * y * y + c4 * x + c5 * y + c6

    def gradient(self, x, y):
        c1, c2, c3, c4, c5, _ = self.coeffs
        return (2 * c1 * x + c2 * y + c4, c2 * x + 2 * c3 * y + c5)

    def __repr__(self):
        return "Conic(" + ", ".join(self.as_strings()) + ")"


@dataclass(frozen=True)
class Quintuple:
    """Five conics imposing five tangency conditions."""

    A: Conic
    B: Conic
    C: Conic
    D: Conic
    E: Conic

    @property
    def conics(self) -> tuple:
        return (self.A, self.B, self.C, self.D, self.E)

    @property
    def is_rational(self) -> bool:
        return all(c.is_rational for c in self.conics)

    @property
    def is_real(self) -> bool:
        return all(c.is_real for c in self.conics)

    def params_array(self) -> np.ndarray:
        """(5, 6) complex coefficient matrix, one row per conic."""
        return np.stack([c.as_array() for c in self.conics])

    @classmethod
    def from_conics(cls, conics: Sequence[Conic]) -> "Quintuple":
        if len(conics) != 5:
            raise ValueError(f"a quintuple needs 5 conics, got {len(conics)}")
        return cls(*conics)

    @classmethod
    def from_document(cls, doc: dict) -> "Quintuple":
        rows = doc.get("conics")
        if not isinstance(rows, list) or len(rows) != 5:
            raise ValueError('document needs a "conics" list of 5 rows')
        return cls.from_conics([Conic.from_strings(r) for r in rows])

    def to_document(self) -> dict:
        return {"conics": [c.as_strings() for c in self.conics]}


# -- symmetric matrix and classification ------------------------------------


def symmetric_matrix(conic: Conic) -> list:
    """The doubled symmetric matrix of the homogenized conic.

    Scaling by 2 keeps rational conics fraction-free:
    x^2 + y^2 - 1 gives [[2,0,0],[0,2,0],[0,0,-2]].
    """
    c1, c2, c3, c4, c5, c6 = conic.coeffs
    return [[2 * c1, c2, c4], [c2, 2 * c3, c5], [c4, c5, 2 * c6]]


def _sym_array(conic: Conic) -> np.ndarray:
    return np.array([[complex(v) for v in row] for row in symmetric_matrix(conic)])


def _exact_rank3(m) -> int:
    rows = [list(r) for r in m]
    rank = 0
    for col in range(3):
        piv = next((i for i in range(rank, 3) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        prow = rows[rank]
        for i in range(rank + 1, 3):
            f = rows[i][col] / prow[col]
            rows[i] = [a - f * b for a, b in zip(rows[i], prow)]
        rank += 1
    return rank


def matrix_rank(conic: Conic) -> int:
    """Rank of the symmetric matrix; exact for rational conics."""
    if conic.is_rational:
        return _exact_rank3(symmetric_matrix(conic))
    s = np.linalg.svd(_sym_array(conic), compute_uv=False)
    return int(np.sum(s > 1e-12 * s[0]))


def classify(conic: Conic) -> ConicClass:
    """Affine type of a real conic, by rank and the top 2x2 minor."""
    if not conic.is_real:
        raise ValueError("classification is defined for real conics only")
    rank = matrix_rank(conic)
    if rank <= 1:
        return ConicClass.DEGENERATE_RANK_LE1
    if rank == 2:
        return ConicClass.DEGENERATE_RANK2
    c1, c2, c3 = conic.coeffs[:3]
    minor = 4 * c1 * c3 - c2 * c2
    if conic.is_rational:
        if minor > 0:
            return ConicClass.ELLIPSE
        if minor < 0:
            return ConicClass.HYPERBOLA
        return ConicClass.PARABOLA
    scale = max(abs(complex(c).real) for c in conic.coeffs[:3]) ** 2
    m = complex(minor).real
    if abs(m) <= 1e-12 * scale:
        return ConicClass.PARABOLA
    return ConicClass.ELLIPSE if m > 0 else ConicClass.HYPERBOLA


def roundness(conic: Conic):
    """(a1 - a3)^2 + a2^2: zero exactly for circles, grows with eccentricity."""
    if not conic.is_real:
        raise ValueError("roundness is defined for real conics only")
    c1, c2, c3 = conic.coeffs[:3]
    return (c1 - c3) ** 2 + c2 ** 2


def degeneracy_condition_number(conic: Conic) -> float:
    """Condition number of the symmetric matrix; large means nearly singular."""
    s = np.linalg.svd(_sym_array(conic), compute_uv=False)
    if s[2] == 0.0:
        raise DegenerateConicError("conic matrix is singular")
    return float(s[0] / s[2])


# -- tangency ----------------------------------------------------------------


def jacobian_determinant(a: Conic, u: Conic, p: Point2):
    """det of the two gradients at p; zero iff the curves touch tangentially
    there (or p is singular on one of them)."""
    ax, ay = a.gradient(p.x, p.y)
    ux, uy = u.gradient(p.x, p.y)
    return ax * uy - ay * ux


def _magnitude(conic: Conic, x: complex, y: complex) -> float:
    c = np.abs(conic.as_array())
    ax, ay = abs(x), abs(y)
    return float(
        c[0] * ax * ax + c[1] * ax * ay + c[2] * ay * ay + c[3] * ax + c[4] * ay + c[5]
    ) + float(c.max())


def _gradient_magnitude(conic: Conic, x: complex, y: complex) -> float:
    c = np.abs(conic.as_array())
    ax, ay = abs(x), abs(y)
    return float(2 * c[0] * ax + c[1] * ay + c[3] + c[1] * ax + 2 * c[2] * ay + c[4])


def tangent_line(conic: Conic, p: Point2, tol: float = 1e-8) -> LinearForm:
    """Tangent line at a point of the conic, as ux*X + uy*Y + c.

    Exact input gives an exact line.  The point must satisfy the equation to
    within tol (relative); a vanishing gradient raises SingularPointError.
    """
    residual = complex(conic.evaluate(p.x, p.y))
    if abs(residual) > tol * _magnitude(conic, complex(p.x), complex(p.y)):
        raise ValueError("point does not lie on the conic")
    gx, gy = conic.gradient(p.x, p.y)
    gscale = _gradient_magnitude(conic, complex(p.x), complex(p.y)) + math.sqrt(
        float(np.abs(conic.as_array()).max())
    )
    if math.hypot(abs(complex(gx)), abs(complex(gy))) <= tol * gscale:
        raise SingularPointError("gradient vanishes; no unique tangent line")
    return LinearForm(gx, gy, -(gx * p.x + gy * p.y))


def _proportional(a: Conic, u: Conic) -> bool:
    if a.is_rational and u.is_rational:
        ca, cu = a.coeffs, u.coeffs
        return all(
            ca[i] * cu[j] - ca[j] * cu[i] == 0 for i in range(6) for j in range(i)
        )
    va, vu = a.as_array(), u.as_array()
    k = int(np.argmax(np.abs(va)))
    r = vu[k] / va[k]
    return bool(np.linalg.norm(vu - r * va) <= 1e-12 * np.linalg.norm(vu))


def _quartic_from_resultant(ca: np.ndarray, cb: np.ndarray, swap: bool):
    """Coefficients (degree <= 4, increasing) of Res_y(A, B) as a polynomial
    in x, or None when the Sylvester determinant vanishes identically.

    swap=True eliminates x instead.  Degree-4 interpolation at the fifth
    roots of unity; the inverse FFT is exact interpolation for degree <= 4.
    """
    if swap:
        ca = ca[[2, 1, 0, 4, 3, 5]]
        cb = cb[[2, 1, 0, 4, 3, 5]]
    nodes = np.exp(2j * np.pi * np.arange(5) / 5)
    mats = np.zeros((5, 4, 4), dtype=complex)
    for k, x in enumerate(nodes):
        a2, a1, a0 = ca[2], ca[1] * x + ca[4], ca[0] * x * x + ca[3] * x + ca[5]
        b2, b1, b0 = cb[2], cb[1] * x + cb[4], cb[0] * x * x + cb[3] * x + cb[5]
        mats[k] = [[a2, a1, a0, 0], [0, a2, a1, a0], [b2, b1, b0, 0], [0, b2, b1, b0]]
    values = np.linalg.det(mats)
    # values[k] = sum_j coeffs[j] * exp(+2*pi*i*jk/5), which is the inverse
    # transform in numpy's convention, so the forward fft recovers coeffs
    coeffs = np.fft.fft(values) / 5
    scale = (np.abs(ca).max() * np.abs(cb).max()) ** 2
    if np.abs(coeffs).max() <= 1e-12 * scale:
        return None
    return coeffs


def _quadratic_roots(c2: complex, c1: complex, c0: complex, scale: float) -> list:
    if abs(c2) > 1e-13 * scale:
        disc = cmath.sqrt(c1 * c1 - 4 * c2 * c0)
        return [(-c1 + disc) / (2 * c2), (-c1 - disc) / (2 * c2)]
    if abs(c1) > 1e-13 * scale:
        return [-c0 / c1]
    return []


def _y_candidates(ca: np.ndarray, cb: np.ndarray, x0: complex) -> list:
    out = []
    for c in (ca, cb):
        q2, q1, q0 = c[2], c[1] * x0 + c[4], c[0] * x0 * x0 + c[3] * x0 + c[5]
        s = np.abs(c).max() * (1.0 + abs(x0)) ** 2
        out.extend(_quadratic_roots(q2, q1, q0, s))
    # cross-combination kills the y^2 term and is linear in y
    l1 = cb[2] * (ca[1] * x0 + ca[4]) - ca[2] * (cb[1] * x0 + cb[4])
    l0 = cb[2] * (ca[0] * x0 * x0 + ca[3] * x0 + ca[5]) - ca[2] * (
        cb[0] * x0 * x0 + cb[3] * x0 + cb[5]
    )
    s = np.abs(ca).max() * np.abs(cb).max() * (1.0 + abs(x0)) ** 2
    if abs(l1) > 1e-13 * s:
        out.append(l0 / l1)
    return out


def _rel_residual(conic: Conic, x: complex, y: complex) -> float:
    return abs(complex(conic.evaluate(x, y))) / _magnitude(conic, x, y)


def _polish_intersection(a: Conic, u: Conic, x: complex, y: complex, iters: int = 25):
    """Least-squares Newton on (A, U); linear convergence survives the
    singular Jacobian at a tangential intersection."""
    for _ in range(iters):
        f = np.array([complex(a.evaluate(x, y)), complex(u.evaluate(x, y))])
        jac = np.array(
            [[complex(g) for g in a.gradient(x, y)],
             [complex(g) for g in u.gradient(x, y)]]
        )
        step, *_ = np.linalg.lstsq(jac, -f, rcond=None)
        x, y = x + step[0], y + step[1]
        if np.abs(step).max() < 1e-15 * (1.0 + abs(x) + abs(y)):
            break
    return x, y


def _dedupe_points(points: list) -> list:
    kept: list = []
    for x, y in points:
        if any(
            abs(x - px) + abs(y - py) <= 1e-6 * (1.0 + abs(px) + abs(py))
            for px, py in kept
        ):
            continue
        kept.append((x, y))
    return kept


def _rotate_coeffs(c: np.ndarray, cos_t: float, sin_t: float) -> np.ndarray:
    # substitute x -> c x - s y, y -> s x + c y
    c1, c2, c3, c4, c5, c6 = c
    return np.array(
        [
            c1 * cos_t**2 + c2 * cos_t * sin_t + c3 * sin_t**2,
            2 * (c3 - c1) * cos_t * sin_t + c2 * (cos_t**2 - sin_t**2),
            c1 * sin_t**2 - c2 * cos_t * sin_t + c3 * cos_t**2,
            c4 * cos_t + c5 * sin_t,
            -c4 * sin_t + c5 * cos_t,
            c6,
        ],
        dtype=complex,
    )


def intersect(a: Conic, u: Conic, tol: float = 1e-8) -> list:
    """All finite intersection points of two distinct smooth conics.

    Tangential intersections appear once.  Intersections at infinity are not
    reported, so the list may have fewer than four points, possibly none.
    """
    for conic in (a, u):
        if matrix_rank(conic) < 3:
            raise DegenerateConicError(f"degenerate conic {conic!r}")
    if _proportional(a, u):
        raise IdenticalConicsError("the two conics coincide")
    points = _intersect_arrays(a.as_array(), u.as_array())
    if points is None:
        # elimination degenerated in both axis directions; retry in a
        # rotated frame and map the points back
        ct, st = math.cos(0.5), math.sin(0.5)
        points = _intersect_arrays(
            _rotate_coeffs(a.as_array(), ct, st), _rotate_coeffs(u.as_array(), ct, st)
        )
        if points is None:
            raise DegenerateConicError("intersection structure is degenerate")
        points = [(ct * x - st * y, st * x + ct * y) for x, y in points]
    polished = [_polish_intersection(a, u, x, y) for x, y in points]
    accepted = [
        (complex(x), complex(y))
        for x, y in polished
        if _rel_residual(a, x, y) <= 1e-7 and _rel_residual(u, x, y) <= 1e-7
    ]
    return [Point2(x, y) for x, y in _dedupe_points(accepted)]


def _intersect_arrays(ca: np.ndarray, cb: np.ndarray):
    for swap in (False, True):
        coeffs = _quartic_from_resultant(ca, cb, swap)
        if coeffs is None:
            continue
        mags = np.abs(coeffs)
        deg = 4
        while deg > 0 and mags[deg] <= 1e-12 * mags.max():
            deg -= 1
        if deg == 0:
            return []  # nonzero constant resultant: no finite common root
        roots = np.roots(coeffs[deg::-1])
        pa, pb = (ca, cb) if not swap else (ca[[2, 1, 0, 4, 3, 5]], cb[[2, 1, 0, 4, 3, 5]])
        raw = []
        for x0 in roots:
            for y0 in _y_candidates(pa, pb, complex(x0)):
                raw.append((complex(x0), y0) if not swap else (y0, complex(x0)))
        return raw
    return None


def check_tangency(a: Conic, u: Conic, tol: float = 1e-8) -> list:
    """Finite points where the two conics meet tangentially.

    Candidates are intersection points with a small gradient determinant;
    each is sharpened by Newton on (A, jacdet) and kept when the second
    conic still vanishes there.  Identical conics raise; conics tangent
    only at infinity legitimately return [].
    """
    points = intersect(a, u, tol=tol)
    found = []
    for p in points:
        jd = complex(jacobian_determinant(a, u, p))
        jscale = _jac_magnitude(a, u, p.x, p.y)
        if abs(jd) > math.sqrt(tol) * jscale:
            continue
        x, y = _polish_on_tangency(a, u, p.x, p.y)
        if (
            _rel_residual(a, x, y) <= tol
            and _rel_residual(u, x, y) <= tol
            and abs(complex(jacobian_determinant(a, u, Point2(x, y))))
            <= tol * _jac_magnitude(a, u, x, y)
        ):
            found.append((complex(x), complex(y)))
    return [Point2(x, y) for x, y in _dedupe_points(found)]


def _jac_magnitude(a: Conic, u: Conic, x: complex, y: complex) -> float:
    ga = _gradient_magnitude(a, x, y)
    gu = _gradient_magnitude(u, x, y)
    guard = float(np.abs(a.as_array()).max() * np.abs(u.as_array()).max())
    return ga * gu + guard


def _polish_on_tangency(a: Conic, u: Conic, x: complex, y: complex):
    """Newton on (A, jacdet): nonsingular at a simple tangency, so the
    contact point is recovered to full precision."""
    a1, a2, a3 = (complex(c) for c in a.coeffs[:3])
    u1, u2, u3 = (complex(c) for c in u.coeffs[:3])
    for _ in range(10):
        ax, ay = (complex(g) for g in a.gradient(x, y))
        ux, uy = (complex(g) for g in u.gradient(x, y))
        f = np.array([complex(a.evaluate(x, y)), ax * uy - ay * ux])
        jac = np.array(
            [
                [ax, ay],
                [
                    2 * a1 * uy + ax * u2 - a2 * ux - 2 * u1 * ay,
                    a2 * uy + 2 * u3 * ax - 2 * a3 * ux - u2 * ay,
                ],
            ]
        )
        try:
            step = np.linalg.solve(jac, -f)
        except np.linalg.LinAlgError:
            break
        x, y = x + step[0], y + step[1]
        if np.abs(step).max() < 1e-14 * (1.0 + abs(x) + abs(y)):
            break
    return x, y

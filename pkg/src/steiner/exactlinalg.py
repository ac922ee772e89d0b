"""Exact linear solves over the complex rationals.

Rows are scaled to Gaussian integers, then a fraction-free Gauss-Jordan
pass (single-step division by the previous pivot, which is exact in Z[i])
reduces [M | I] to [p I | p M^-1] with p the last pivot.  Keeping p and the
integer block around makes repeated solves against the same matrix cheap:
every later right-hand side costs integer dot products and one division.

Pivoting is by maximal Gaussian norm of the candidate entries, the exact
analogue of partial pivoting on magnitudes; conjugating the input matrix
conjugates every pivot choice, so certification treats a point and its
complex conjugate symmetrically.
"""

from __future__ import annotations

from typing import Sequence

from .scalars import CQ, cq, integer, lcm, rational

_ZERO = (integer(0), integer(0))
_ONE = (integer(1), integer(0))


class SingularMatrixError(ValueError):
    """The matrix is exactly singular (or numerically so, for floats)."""


def _gi_mul(a, b):
    ar, ai = a
    br, bi = b
    return (ar * br - ai * bi, ar * bi + ai * br)


def _gi_norm(a):
    ar, ai = a
    return ar * ar + ai * ai


def _gi_div(a, b):
    # exact division in Z[i]: a * conj(b) / |b|^2, both divisions exact
    ar, ai = a
    br, bi = b
    n = br * br + bi * bi
    return ((ar * br + ai * bi) // n, (ai * br - ar * bi) // n)


def _scaled_integer_rows(rows: Sequence[Sequence]) -> tuple:
    """Clear denominators row by row; returns (gi matrix, per-row scales)."""
    matrix = []
    scales = []
    for row in rows:
        entries = [cq(v) for v in row]
        d = integer(1)
        for v in entries:
            d = lcm(d, lcm(v.re.denominator, v.im.denominator))
        gi_row = []
        for v in entries:
            re, im = v.re * d, v.im * d
            gi_row.append((integer(re.numerator), integer(im.numerator)))
        matrix.append(gi_row)
        scales.append(d)
    return matrix, scales


def _jordan(m: list, n: int, width: int) -> tuple:
    """In-place fraction-free Gauss-Jordan; returns (last pivot, swap count).

    Invariant (standard for the one-step algorithm): entering step k every
    prior diagonal entry equals the previous pivot, and on exit the whole
    left block is p I with p the final pivot, up to the row permutation
    already applied to both blocks.
    """
    prev = _ONE
    swaps = 0
    for k in range(n):
        best, best_norm = k, _gi_norm(m[k][k])
        for i in range(k + 1, n):
            norm = _gi_norm(m[i][k])
            if norm > best_norm:
                best, best_norm = i, norm
        if best_norm == 0:
            raise SingularMatrixError(f"rank deficiency at column {k}")
        if best != k:
            m[k], m[best] = m[best], m[k]
            swaps += 1
        pivot = m[k][k]
        row_k = m[k]
        for i in range(n):
            if i == k:
                continue
            row_i = m[i]
            factor = row_i[k]
            cols = range(k + 1, width) if i > k else [i, *range(k + 1, width)]
            if factor == _ZERO:
                for j in cols:
                    v = row_i[j]
                    if v != _ZERO:
                        row_i[j] = _gi_div(_gi_mul(pivot, v), prev)
            else:
                for j in cols:
                    pv = _gi_mul(pivot, row_i[j])
                    fv = _gi_mul(factor, row_k[j])
                    row_i[j] = _gi_div((pv[0] - fv[0], pv[1] - fv[1]), prev)
                row_i[k] = _ZERO
        prev = pivot
    return m[n - 1][n - 1], swaps


class AdjugateSolver:
    """Factor once, solve exactly many times.

    Stores the integer block E with E (D A) = p I, where D holds the row
    scales clearing denominators.  Then A^-1 b = E (D b) / p.
    """

    def __init__(self, rows: Sequence[Sequence]):
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("need a square matrix")
        m, scales = _scaled_integer_rows(rows)
        for i in range(n):
            m[i].extend(_ONE if j == i else _ZERO for j in range(n))
        self.n = n
        self.row_scales = scales
        self.pivot, self.swaps = _jordan(m, n, 2 * n)
        self.block = [row[n:] for row in m]

    @property
    def det(self) -> CQ:
        """True determinant of the input, scales and swaps accounted for."""
        d = self.row_scales[0]
        for s in self.row_scales[1:]:
            d = d * s
        sign = -1 if self.swaps % 2 else 1
        p = self.pivot
        return CQ(rational(sign * p[0], d), rational(sign * p[1], d))

    def _numerators(self, b: Sequence) -> tuple:
        """(integer numerators of E D b, common denominator q)."""
        w = [cq(v) for v in b]
        if len(w) != self.n:
            raise ValueError("right-hand side has wrong length")
        q = integer(1)
        for v in w:
            q = lcm(q, lcm(v.re.denominator, v.im.denominator))
        scaled = []
        for v, d in zip(w, self.row_scales):
            re, im = v.re * (q * d), v.im * (q * d)
            scaled.append((integer(re.numerator), integer(im.numerator)))
        out = []
        for row in self.block:
            sr = si = integer(0)
            for e, s in zip(row, scaled):
                if s != _ZERO and e != _ZERO:
                    sr += e[0] * s[0] - e[1] * s[1]
                    si += e[0] * s[1] + e[1] * s[0]
            out.append((sr, si))
        return out, q

    def solve(self, b: Sequence) -> list:
        nums, q = self._numerators(b)
        pr, pi = self.pivot
        pnorm = pr * pr + pi * pi
        den = q * pnorm
        out = []
        for sr, si in nums:
            out.append(
                CQ(rational(sr * pr + si * pi, den), rational(si * pr - sr * pi, den))
            )
        return out

    def solve_norm_sq(self, b: Sequence):
        """||A^-1 b||^2 as an exact rational, skipping per-entry reduction."""
        nums, q = self._numerators(b)
        total = integer(0)
        for s in nums:
            total += _gi_norm(s)
        return rational(total, q * q * _gi_norm(self.pivot))

    def solve_norm_sq_sparse(self, entries: dict):
        """Same as solve_norm_sq for a right-hand side given as {row: value};
        work scales with the support, which certification keeps tiny."""
        q = integer(1)
        for v in entries.values():
            q = lcm(q, lcm(v.re.denominator, v.im.denominator))
        scaled = []
        for row, v in entries.items():
            f = q * self.row_scales[row]
            re, im = v.re * f, v.im * f
            scaled.append((row, (integer(re.numerator), integer(im.numerator))))
        total = integer(0)
        for out_row in self.block:
            sr = si = integer(0)
            for row, s in scaled:
                e = out_row[row]
                if e != _ZERO:
                    sr += e[0] * s[0] - e[1] * s[1]
                    si += e[0] * s[1] + e[1] * s[0]
            total += sr * sr + si * si
        return rational(total, q * q * _gi_norm(self.pivot))


def solve(rows: Sequence[Sequence], b: Sequence) -> list:
    """One exact solve; raises SingularMatrixError when det vanishes."""
    return AdjugateSolver(rows).solve(b)


def det(rows: Sequence[Sequence]) -> CQ:
    """Determinant by forward fraction-free elimination (no augmentation)."""
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ValueError("need a square matrix")
    m, scales = _scaled_integer_rows(rows)
    prev = _ONE
    swaps = 0
    for k in range(n - 1):
        best, best_norm = k, _gi_norm(m[k][k])
        for i in range(k + 1, n):
            norm = _gi_norm(m[i][k])
            if norm > best_norm:
                best, best_norm = i, norm
        if best_norm == 0:
            return CQ(0)
        if best != k:
            m[k], m[best] = m[best], m[k]
            swaps += 1
        pivot = m[k][k]
        for i in range(k + 1, n):
            factor = m[i][k]
            for j in range(k + 1, n):
                pv = _gi_mul(pivot, m[i][j])
                fv = _gi_mul(factor, m[k][j])
                m[i][j] = _gi_div((pv[0] - fv[0], pv[1] - fv[1]), prev)
        prev = pivot
    p = m[n - 1][n - 1]
    d = scales[0]
    for s in scales[1:]:
        d = d * s
    sign = -1 if swaps % 2 else 1
    return CQ(rational(sign * p[0], d), rational(sign * p[1], d))

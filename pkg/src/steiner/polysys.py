"""The tangency system behind the count of 3264.

Unknowns, in order: the five non-constant coefficients u1..u5 of the sought
conic (u6 is normalized to 1), then a contact point (x_i, y_i) for each of
the five given conics.  For each i there are three equations: the given
conic vanishes at the contact point, the unknown conic vanishes there, and
the two gradients are parallel.  That is 15 equations of degrees (2, 3, 3)
per block.

Two backends share this module.  A vectorized floating-point one, written
out by hand, drives path tracking; a generic monomial one, built
symbolically, supplies exact arithmetic for certification and doubles as an
independent oracle for the hand-written kernels in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conics import Quintuple
from .exactlinalg import SingularMatrixError, solve as exact_solve
from .scalars import CQ, cq

N_VARS = 15
N_CONICS = 5
DEGREES = (2, 3, 3) * 5

VARIABLE_NAMES = ("u1", "u2", "u3", "u4", "u5") + tuple(
    f"{c}{i + 1}" for i in range(5) for c in ("x", "y")
)


def point_indices(i: int) -> tuple:
    """Positions of (x_i, y_i) in the variable vector, i in 0..4."""
    return 5 + 2 * i, 6 + 2 * i


# -- floating-point kernels --------------------------------------------------
#
# params has shape (..., 5, 6) and z has shape (..., 15); all kernels
# broadcast, so one fixed parameter matrix serves a whole batch of paths.


def evaluate_batch(params: np.ndarray, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    u1, u2, u3, u4, u5 = (z[..., k] for k in range(5))
    for i in range(N_CONICS):
        g1, g2, g3, g4, g5, g6 = (params[..., i, j] for j in range(6))
        xi, yi = point_indices(i)
        x, y = z[..., xi], z[..., yi]
        out[..., 3 * i] = g1 * x * x + g2 * x * y + g3 * y * y + g4 * x + g5 * y + g6
        out[..., 3 * i + 1] = u1 * x * x + u2 * x * y + u3 * y * y + u4 * x + u5 * y + 1
        gx = 2 * g1 * x + g2 * y + g4
        gy = g2 * x + 2 * g3 * y + g5
        ux = 2 * u1 * x + u2 * y + u4
        uy = u2 * x + 2 * u3 * y + u5
        out[..., 3 * i + 2] = gx * uy - gy * ux
    return out


def jacobian_batch(params: np.ndarray, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    jac = np.zeros(z.shape[:-1] + (N_VARS, N_VARS), dtype=complex)
    u1, u2, u3, u4, u5 = (z[..., k] for k in range(5))
    for i in range(N_CONICS):
        g1, g2, g3, g4, g5, _ = (params[..., i, j] for j in range(6))
        xi, yi = point_indices(i)
        x, y = z[..., xi], z[..., yi]
        gx = 2 * g1 * x + g2 * y + g4
        gy = g2 * x + 2 * g3 * y + g5
        ux = 2 * u1 * x + u2 * y + u4
        uy = u2 * x + 2 * u3 * y + u5
        r = 3 * i
        jac[..., r, xi] = gx
        jac[..., r, yi] = gy
        jac[..., r + 1, 0] = x * x
        jac[..., r + 1, 1] = x * y
        jac[..., r + 1, 2] = y * y
        jac[..., r + 1, 3] = x
        jac[..., r + 1, 4] = y
        jac[..., r + 1, xi] = ux
        jac[..., r + 1, yi] = uy
        jac[..., r + 2, 0] = -2 * x * gy
        jac[..., r + 2, 1] = x * gx - y * gy
        jac[..., r + 2, 2] = 2 * y * gx
        jac[..., r + 2, 3] = -gy
        jac[..., r + 2, 4] = gx
        jac[..., r + 2, xi] = 2 * g1 * uy + u2 * gx - g2 * ux - 2 * u1 * gy
        jac[..., r + 2, yi] = g2 * uy + 2 * u3 * gx - 2 * g3 * ux - u2 * gy
    return jac


def magnitude_batch(params: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Evaluation with all signs replaced by absolute values.

    Bounds attainable cancellation, so residual / magnitude is a sensible
    relative measure regardless of the instance's scale.
    """
    z = np.abs(np.asarray(z, dtype=complex))
    p = np.abs(np.asarray(params, dtype=complex))
    out = np.empty(z.shape, dtype=float)
    u1, u2, u3, u4, u5 = (z[..., k] for k in range(5))
    for i in range(N_CONICS):
        g1, g2, g3, g4, g5, g6 = (p[..., i, j] for j in range(6))
        xi, yi = point_indices(i)
        x, y = z[..., xi], z[..., yi]
        out[..., 3 * i] = g1 * x * x + g2 * x * y + g3 * y * y + g4 * x + g5 * y + g6
        out[..., 3 * i + 1] = u1 * x * x + u2 * x * y + u3 * y * y + u4 * x + u5 * y + 1
        gx = 2 * g1 * x + g2 * y + g4
        gy = g2 * x + 2 * g3 * y + g5
        ux = 2 * u1 * x + u2 * y + u4
        uy = u2 * x + 2 * u3 * y + u5
        out[..., 3 * i + 2] = gx * uy + gy * ux
    return out


def parameter_direction_batch(delta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Derivative of the system along a straight parameter segment.

    delta is the (5, 6) difference of the endpoint coefficient matrices;
    only the first and third equation of each block depend on parameters,
    and both are linear in them.
    """
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.shape, dtype=complex)
    u1, u2, u3, u4, u5 = (z[..., k] for k in range(5))
    for i in range(N_CONICS):
        d1, d2, d3, d4, d5, d6 = (delta[..., i, j] for j in range(6))
        xi, yi = point_indices(i)
        x, y = z[..., xi], z[..., yi]
        out[..., 3 * i] = d1 * x * x + d2 * x * y + d3 * y * y + d4 * x + d5 * y + d6
        dx = 2 * d1 * x + d2 * y + d4
        dy = d2 * x + 2 * d3 * y + d5
        ux = 2 * u1 * x + u2 * y + u4
        uy = u2 * x + 2 * u3 * y + u5
        out[..., 3 * i + 2] = dx * uy - dy * ux
    return out


def residual_batch(params: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Relative residual per point: ||F|| / max(1, ||magnitude||)."""
    f = np.linalg.norm(evaluate_batch(params, z), axis=-1)
    m = np.linalg.norm(magnitude_batch(params, z), axis=-1)
    return f / np.maximum(1.0, m)


def newton_polish_batch(params: np.ndarray, z: np.ndarray, iters: int = 3) -> np.ndarray:
    z = np.array(z, dtype=complex)
    for _ in range(iters):
        f = evaluate_batch(params, z)
        jac = jacobian_batch(params, z)
        try:
            step = np.linalg.solve(jac, f[..., None])[..., 0]
        except np.linalg.LinAlgError:
            break
        z = z - step
    return z


# -- symbolic monomial backend ----------------------------------------------
#
# A polynomial is a dict mapping a sparse exponent key, a sorted tuple of
# (variable, power) pairs, to its coefficient.  Coefficients are whatever
# scalar type the caller supplies (complex for the oracle, CQ for exact
# certification); the code below only adds and multiplies them.


def _key_mul(ka: tuple, kb: tuple) -> tuple:
    powers = dict(ka)
    for var, p in kb:
        powers[var] = powers.get(var, 0) + p
    return tuple(sorted(powers.items()))


def _poly_add(p: dict, q: dict) -> dict:
    out = dict(p)
    for k, c in q.items():
        s = out.get(k)
        out[k] = c if s is None else s + c
    return {k: c for k, c in out.items() if not _is_zero(c)}


def _poly_neg(p: dict) -> dict:
    return {k: -c for k, c in p.items()}


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ka, ca in p.items():
        for kb, cb in q.items():
            k = _key_mul(ka, kb)
            c = ca * cb
            s = out.get(k)
            out[k] = c if s is None else s + c
    return {k: c for k, c in out.items() if not _is_zero(c)}


def _poly_diff(p: dict, var: int) -> dict:
    out = {}
    for key, c in p.items():
        powers = dict(key)
        e = powers.get(var)
        if not e:
            continue
        if e == 1:
            del powers[var]
        else:
            powers[var] = e - 1
        out[tuple(sorted(powers.items()))] = c * e
    return out


def _poly_eval(p: dict, z: Sequence, zero):
    total = zero
    for key, c in p.items():
        term = c
        for var, e in key:
            term = term * z[var] ** e
        total = total + term
    return total


def _is_zero(c) -> bool:
    if isinstance(c, CQ):
        return c.re == 0 and c.im == 0
    return c == 0


def _block_equations(g: Sequence, i: int, one) -> list:
    """The three equations of block i with given-conic coefficients g."""
    xi, yi = point_indices(i)
    X, Y = ((xi, 1),), ((yi, 1),)
    X2, XY, Y2 = ((xi, 2),), ((xi, 1), (yi, 1)), ((yi, 2),)

    given = {X2: g[0], XY: g[1], Y2: g[2], X: g[3], Y: g[4], (): g[5]}
    unknown = {
        _key_mul(((k, 1),), m): one
        for k, m in zip(range(5), (X2, XY, Y2, X, Y))
    }
    unknown[()] = one

    gx = {X: 2 * g[0], Y: g[1], (): g[3]}
    gy = {X: g[1], Y: 2 * g[2], (): g[4]}
    ux = {_key_mul(((0, 1),), X): 2 * one, _key_mul(((1, 1),), Y): one, ((3, 1),): one}
    uy = {_key_mul(((1, 1),), X): one, _key_mul(((2, 1),), Y): 2 * one, ((4, 1),): one}
    tangency = _poly_add(_poly_mul(gx, uy), _poly_neg(_poly_mul(gy, ux)))
    return [given, unknown, tangency]


def build_monomial_equations(rows: Sequence, one) -> list:
    """All 15 equations as monomial dicts; rows are 5 sequences of 6 scalars."""
    eqs = []
    for i in range(N_CONICS):
        eqs.extend(_block_equations(rows[i], i, one))
    return eqs


@dataclass(frozen=True)
class DerivativeTensor:
    """A symmetric derivative tensor stored by sorted multi-index.

    entries maps (row, (j1 <= ... <= jk)) to the partial derivative of
    equation `row` by those variables.  Permuted indices are implied.
    """

    order: int
    entries: dict

    def multiplicity(self, index: tuple) -> int:
        m = math.factorial(len(index))
        for var in set(index):
            m //= math.factorial(index.count(var))
        return m

    def contract(self, v: Sequence) -> list:
        """Apply the tensor to (v, ..., v); returns one value per equation."""
        zero = 0 * v[0]
        out = [zero] * N_VARS
        for (row, idx), val in self.entries.items():
            term = val * self.multiplicity(idx)
            for j in idx:
                term = term * v[j]
            out[row] = out[row] + term
        return out

    def dense(self) -> np.ndarray:
        from itertools import permutations

        t = np.zeros((N_VARS,) * (self.order + 1), dtype=complex)
        for (row, idx), val in self.entries.items():
            for perm in set(permutations(idx)):
                t[(row,) + perm] = complex(val)
        return t


def _derivative_structure(eqs: list, order: int) -> dict:
    """Nonzero order-th derivative polynomials, keyed by (row, sorted vars)."""
    out = {}
    for row, poly in enumerate(eqs):
        frontier = {(): poly}
        for _ in range(order):
            nxt = {}
            for idx, p in frontier.items():
                start = idx[-1] if idx else 0
                for var in range(start, N_VARS):
                    d = _poly_diff(p, var)
                    if d:
                        nxt[idx + (var,)] = d
            frontier = nxt
        for idx, p in frontier.items():
            out[(row, idx)] = p
    return out


class StructuredSystem:
    """The 15-equation tangency system for one quintuple of conics."""

    n = N_VARS
    degrees = DEGREES

    def __init__(self, quintuple: Quintuple):
        self.quintuple = quintuple
        self.params = quintuple.params_array()
        self._oracle_eqs = None
        self._exact_eqs = None
        self._exact_structs: dict = {}

    # exact coefficients: rationals stay themselves, floats become the
    # dyadic rationals they already are
    def exact_parameters(self) -> list:
        return [[cq(c) for c in conic.coeffs] for conic in self.quintuple.conics]

    def oracle_equations(self) -> list:
        if self._oracle_eqs is None:
            rows = [[complex(c) for c in conic.coeffs] for conic in self.quintuple.conics]
            self._oracle_eqs = build_monomial_equations(rows, 1.0 + 0.0j)
        return self._oracle_eqs

    def exact_equations(self) -> list:
        if self._exact_eqs is None:
            self._exact_eqs = build_monomial_equations(
                self.exact_parameters(), CQ(1)
            )
        return self._exact_eqs

    def _is_exact_vector(self, z) -> bool:
        return not isinstance(z, np.ndarray) and any(isinstance(v, CQ) for v in z)

    def evaluate(self, z):
        if self._is_exact_vector(z):
            zq = [cq(v) for v in z]
            return [_poly_eval(p, zq, CQ(0)) for p in self.exact_equations()]
        return evaluate_batch(self.params, np.asarray(z, dtype=complex))

    def jacobian(self, z):
        if self._is_exact_vector(z):
            zq = [cq(v) for v in z]
            eqs = self.exact_equations()
            return [
                [_poly_eval(_poly_diff(p, j), zq, CQ(0)) for j in range(N_VARS)]
                for p in eqs
            ]
        return jacobian_batch(self.params, np.asarray(z, dtype=complex))

    def magnitude(self, z) -> np.ndarray:
        return magnitude_batch(self.params, np.asarray(z, dtype=complex))

    def _structure(self, order: int, exact: bool) -> dict:
        key = (order, exact)
        if key not in self._exact_structs:
            eqs = self.exact_equations() if exact else self.oracle_equations()
            self._exact_structs[key] = _derivative_structure(eqs, order)
        return self._exact_structs[key]

    def derivative_tensor(self, z, order: int) -> DerivativeTensor:
        """Order 2 or 3; every higher derivative of this system vanishes."""
        if order < 2 or order > 3:
            raise ValueError("only orders 2 and 3 are nonzero and supported")
        exact = self._is_exact_vector(z)
        if exact:
            zq = [cq(v) for v in z]
            structure = self._structure(order, True)
            entries = {
                key: _poly_eval(p, zq, CQ(0)) for key, p in structure.items()
            }
            entries = {k: v for k, v in entries.items() if not _is_zero(v)}
        else:
            zc = [complex(v) for v in np.asarray(z, dtype=complex)]
            structure = self._structure(order, False)
            entries = {key: _poly_eval(p, zc, 0.0j) for key, p in structure.items()}
            entries = {k: v for k, v in entries.items() if v != 0}
        return DerivativeTensor(order=order, entries=entries)

    def newton_step(self, z):
        """One Newton iterate; exact in, exact out."""
        if self._is_exact_vector(z):
            zq = [cq(v) for v in z]
            jac = self.jacobian(zq)
            f = self.evaluate(zq)
            step = exact_solve(jac, f)
            return [a - b for a, b in zip(zq, step)]
        z = np.asarray(z, dtype=complex)
        jac = jacobian_batch(self.params, z)
        f = evaluate_batch(self.params, z)
        if np.linalg.cond(jac) > 1e12:
            raise SingularMatrixError("jacobian numerically singular")
        return z - np.linalg.solve(jac, f)


def build_system(quintuple: Quintuple) -> StructuredSystem:
    return StructuredSystem(quintuple)

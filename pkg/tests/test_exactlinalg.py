from fractions import Fraction

import numpy as np
import pytest

from steiner.exactlinalg import AdjugateSolver, SingularMatrixError, det, solve
from steiner.scalars import CQ, cq, rational


def _rand_cq(rng, height=20):
    return CQ(
        rational(int(rng.integers(-height, height + 1)), int(rng.integers(1, 7))),
        rational(int(rng.integers(-height, height + 1)), int(rng.integers(1, 7))),
    )


def _fraction_gauss(rows, b):
    """Independent dense elimination over Fraction pairs (re, im)."""
    n = len(rows)
    m = [[complexF(v) for v in row] + [complexF(w)] for row, w in zip(rows, b)]
    for k in range(n):
        piv = next(i for i in range(k, n) if m[i][k] != (Fraction(0), Fraction(0)))
        m[k], m[piv] = m[piv], m[k]
        inv = cinv(m[k][k])
        m[k] = [cmul(inv, v) for v in m[k]]
        for i in range(n):
            if i != k and m[i][k] != (Fraction(0), Fraction(0)):
                f = m[i][k]
                m[i] = [csub(v, cmul(f, w)) for v, w in zip(m[i], m[k])]
    return [row[n] for row in m]


def complexF(v: CQ):
    return (Fraction(int(v.re.numerator), int(v.re.denominator)),
            Fraction(int(v.im.numerator), int(v.im.denominator)))


def cmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def csub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def cinv(a):
    n = a[0] * a[0] + a[1] * a[1]
    return (a[0] / n, -a[1] / n)


def test_solve_matches_fraction_elimination():
    rng = np.random.default_rng(11)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        rows = [[_rand_cq(rng) for _ in range(n)] for _ in range(n)]
        b = [_rand_cq(rng) for _ in range(n)]
        try:
            got = solve(rows, b)
        except SingularMatrixError:
            continue
        want = _fraction_gauss(rows, b)
        for g, w in zip(got, want):
            assert (Fraction(int(g.re.numerator), int(g.re.denominator)),
                    Fraction(int(g.im.numerator), int(g.im.denominator))) == w


def test_solve_reproduces_rhs():
    rng = np.random.default_rng(5)
    n = 5
    rows = [[_rand_cq(rng) for _ in range(n)] for _ in range(n)]
    x = [_rand_cq(rng) for _ in range(n)]
    b = [sum((rows[i][j] * x[j] for j in range(n)), CQ(0)) for i in range(n)]
    got = solve(rows, b)
    assert got == x


def test_identity_solve():
    rows = [[CQ(1 if i == j else 0) for j in range(4)] for i in range(4)]
    b = [cq(rational(k, 3)) for k in range(4)]
    assert solve(rows, b) == b


def test_singular_raises():
    rows = [[CQ(1), CQ(2)], [CQ(2), CQ(4)]]
    with pytest.raises(SingularMatrixError):
        solve(rows, [CQ(1), CQ(1)])


def test_det_matches_numpy_shadow():
    rng = np.random.default_rng(3)
    for _ in range(5):
        n = int(rng.integers(2, 5))
        rows = [[_rand_cq(rng) for _ in range(n)] for _ in range(n)]
        d = det(rows)
        m = np.array([[v.to_complex() for v in row] for row in rows])
        assert abs(d.to_complex() - np.linalg.det(m)) <= 1e-9 * (1 + abs(np.linalg.det(m)))


def test_solver_norm_sq_agrees_with_solution():
    rng = np.random.default_rng(17)
    n = 4
    rows = [[_rand_cq(rng) for _ in range(n)] for _ in range(n)]
    b = [_rand_cq(rng) for _ in range(n)]
    slv = AdjugateSolver(rows)
    x = slv.solve(b)
    direct = sum((v.norm_sq() for v in x), rational(0))
    assert slv.solve_norm_sq(b) == direct


def test_solver_norm_sq_sparse_matches_dense():
    rng = np.random.default_rng(23)
    n = 5
    rows = [[_rand_cq(rng) for _ in range(n)] for _ in range(n)]
    slv = AdjugateSolver(rows)
    entries = {1: _rand_cq(rng), 3: _rand_cq(rng)}
    b = [entries.get(i, CQ(0)) for i in range(n)]
    assert slv.solve_norm_sq_sparse(entries) == slv.solve_norm_sq(b)

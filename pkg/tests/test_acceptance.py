"""End-to-end acceptance checks, one test per shipped claim.

Counts are asserted exactly (certification is exact arithmetic); wall
times are printed for the record rather than asserted, because this
suite also runs on single-core sandboxes well below the interactive
hardware the timing expectations describe.
"""

import json
import time

import numpy as np
import pytest

from steiner.certify import alpha_certify, certify_distinct, refine
from steiner.chow import intersection_count, pentagon_count
from steiner.conics import Conic, LinearForm, Point2, Quintuple, check_tangency, tangent_line
from steiner.instances import random_instance
from steiner.polysys import build_system, evaluate_batch, jacobian_batch
from steiner.scalars import CQ, rational
from steiner.seeds import load_db, match_sets, save_db, verify_db
from steiner.solver import solve_instance
from steiner import cli


def test_chow_calculator_reproduces_the_classical_table():
    assert intersection_count(5, 0, 0) == 1
    assert intersection_count(4, 1, 0) == 2
    assert intersection_count(3, 2, 0) == 4
    assert intersection_count(0, 0, 5) == 3264
    assert pentagon_count() == 102
    assert 32 * pentagon_count() == 3264


def _product_of_lines(l1, l2):
    a, b, c = l1.l1, l1.l2, l1.l3
    d, e, f = l2.l1, l2.l2, l2.l3
    return np.array([a * d, a * e + b * d, b * e, a * f + c * d, b * f + c * e, c * f])


def test_tangency_detection_on_constructed_and_random_pairs():
    # the two named pairs first
    assert check_tangency(Conic([1, 0, -1, 0, 0, 1]), Conic([1, 0, -4, 0, 0, 1]))
    pts = check_tangency(Conic([1, 0, 1, -2, 0, 0]), Conic([1, 0, 1, 2, 0, 0]))
    assert pts and abs(complex(pts[0].x)) < 1e-8 and abs(complex(pts[0].y)) < 1e-8

    # 100 pairs tangent by construction: U a circle, A = U + (tangent
    # line at p) * (random line); both vanish at p with parallel gradients
    rng = np.random.default_rng(3264)
    detected = 0
    for _ in range(100):
        cx, cy = rng.uniform(-2, 2, size=2)
        r = rng.uniform(0.5, 2.0)
        u = Conic([1.0, 0.0, 1.0, -2 * cx, -2 * cy, cx * cx + cy * cy - r * r])
        theta = rng.uniform(0, 2 * np.pi)
        p = Point2(cx + r * np.cos(theta), cy + r * np.sin(theta))
        ell = tangent_line(u, p)
        other = None
        while other is None:
            cand = rng.uniform(-1, 1, size=3)
            if abs(cand[0]) + abs(cand[1]) > 0.3:
                other = cand
        a = Conic(np.asarray(u.as_array()) + _product_of_lines(ell, LinearForm(*other)))
        points = check_tangency(a, u, tol=1e-8)
        assert points, f"constructed tangent pair went undetected at {p}"
        best = min(abs(complex(q.x) - p.x) + abs(complex(q.y) - p.y) for q in points)
        assert best < 1e-6
        detected += 1
    assert detected == 100

    # 100 random pairs: tangency is codimension one, so none of these
    # should flag; a hit would mean the detector's threshold is leaking
    rejected = 0
    for _ in range(100):
        a = Conic(rng.uniform(-1, 1, size=6))
        b = Conic(rng.uniform(-1, 1, size=6))
        assert check_tangency(a, b, tol=1e-8) == []
        rejected += 1
    assert rejected == 100


def _cq_vector(rng, den=17):
    return [
        CQ(rational(int(rng.integers(-9, 10)), den), rational(int(rng.integers(-9, 10)), den))
        for _ in range(15)
    ]


def _rational_quintuple(rng):
    conics = []
    for _ in range(5):
        coeffs = [rational(int(rng.integers(-9, 10)), 11) for _ in range(6)]
        if all(c == 0 for c in coeffs):
            coeffs[0] = rational(1)
        conics.append(Conic(coeffs))
    return Quintuple(*conics)


def test_exact_taylor_identity_and_float_jacobian():
    rng = np.random.default_rng(50)
    half, sixth = rational(1, 2), rational(1, 6)
    checked = 0
    for _ in range(5):
        system = build_system(_rational_quintuple(rng))
        for _ in range(10):
            z = _cq_vector(rng)
            v = _cq_vector(rng, den=13)
            fz = system.evaluate(z)
            jac = system.jacobian(z)
            d2 = system.derivative_tensor(z, 2).contract(v)
            d3 = system.derivative_tensor(z, 3).contract(v)
            lhs = system.evaluate([a + b for a, b in zip(z, v)])
            for i in range(15):
                jv = CQ(0)
                for j in range(15):
                    jv = jv + jac[i][j] * v[j]
                assert lhs[i] == fz[i] + jv + d2[i] * CQ(half) + d3[i] * CQ(sixth)
            checked += 1
    assert checked == 50

    # float path: Jacobian columns against central differences
    params = random_instance(np.random.default_rng(51)).params_array()
    z = rng.standard_normal(15) + 1j * rng.standard_normal(15)
    jac = jacobian_batch(params, z[None, :])[0]
    h = 1e-7
    for j in range(15):
        e = np.zeros(15, dtype=complex)
        e[j] = h
        fd = (
            evaluate_batch(params, (z + e)[None, :])[0]
            - evaluate_batch(params, (z - e)[None, :])[0]
        ) / (2 * h)
        scale = np.abs(jac[:, j]).max() + 1.0
        assert np.abs(fd - jac[:, j]).max() <= 1e-6 * scale


def test_certifier_soundness_on_polished_endpoints(seed_db):
    q = Quintuple.from_conics([Conic(row) for row in seed_db.params])
    system = build_system(q)
    picks = [int(i) for i in np.linspace(0, len(seed_db.solutions) - 1, 100)]
    rng = np.random.default_rng(100)
    t0 = time.time()
    for n, k in enumerate(picks):
        z = seed_db.solutions[k]
        cert = alpha_certify(system, z)
        assert cert.alpha_ok, f"endpoint {k} failed the alpha test"
        # five more Newton steps must stay inside the inclusion ball; the
        # iterates and the certified point both lie within one radius of
        # the associated zero, so distance from the start is at most two
        # radii (four on the square), and rounding at the noise floor is
        # covered by the same margin
        radius_sq = float(cert.inclusion_radius_sq)
        w = z.copy()
        for _ in range(5):
            w = system.newton_step(w)
            assert float(np.linalg.norm(w - z) ** 2) <= 4 * radius_sq
        if n % 10 != 0:
            continue
        # conjugation symmetry, bit for bit, on the exact refinement
        sharp = refine(system, z, steps=1)
        conj = [v.conjugate() for v in sharp]
        ca, cb = alpha_certify(system, sharp), alpha_certify(system, conj)
        assert ca.beta_sq == cb.beta_sq
        assert ca.gamma_sq == cb.gamma_sq
        assert ca.alpha_sq == cb.alpha_sq
        # a corrupted copy must never certify into the same class
        noise = rng.standard_normal(15) + 1j * rng.standard_normal(15)
        bad = z + 1e-2 * noise / np.linalg.norm(noise)
        bad_cert = alpha_certify(system, bad)
        if bad_cert.alpha_ok:
            result = certify_distinct([z, bad], [cert, bad_cert])
            assert [0] in result.classes and [1] in result.classes
    print(f"certifier soundness: 100 endpoints in {time.time() - t0:.1f}s")


def test_seed_database_integrity(seed_db, tmp_path):
    rep = verify_db(seed_db)
    assert rep.ok, rep.failures
    assert rep.n_solutions == 3264

    path = tmp_path / "roundtrip.json"
    save_db(seed_db, path)
    back = load_db(path)
    assert np.array_equal(back.params, seed_db.params)
    assert np.array_equal(back.solutions, seed_db.solutions)
    assert back.rng_seed == seed_db.rng_seed

    # solving the seed instance against its own database must return the
    # database fiber itself
    q = Quintuple.from_conics([Conic(row) for row in seed_db.params])
    t0 = time.time()
    report = solve_instance(q, seed_db)
    wall = time.time() - t0
    assert report.n_complex_solutions == 3264
    endpoints = np.array([r.vector for r in report.solutions])
    match_sets(seed_db.solutions, endpoints, tol=1e-10)
    print(f"seed self-solve: {wall:.1f}s")


def test_random_real_rational_instances_reach_the_generic_count(seed_db):
    walls = []
    for trial in range(10):
        rng = np.random.default_rng(1000 + trial)
        q = random_instance(rng, field="real-rational")
        t0 = time.time()
        report = solve_instance(q, seed_db)
        walls.append(time.time() - t0)
        assert report.n_complex_solutions == 3264, (
            f"instance {trial}: {report.n_complex_solutions} distinct solutions"
        )
        assert report.n_real_numeric % 2 == 0
        for rec in report.solutions:
            if not rec.is_real_numeric:
                continue
            z = rec.vector
            scale = 1.0 + float(np.abs(z).max())
            for x, y in rec.tangency_points:
                assert abs(complex(x).imag) <= 1e-8 * scale
                assert abs(complex(y).imag) <= 1e-8 * scale
    print("random instance walls:", " ".join(f"{w:.0f}s" for w in walls))


def test_fulton_instance_solves_to_3264_real_certified(seed_db_path, fulton, tmp_path, capsys):
    inst = tmp_path / "fulton.json"
    inst.write_text(json.dumps(fulton.to_document()))
    out = tmp_path / "result.json"
    t0 = time.time()
    code = cli.run(
        ["solve", str(inst), "--db", seed_db_path, "--certify", "--out", str(out)]
    )
    wall = time.time() - t0
    err = capsys.readouterr().err
    assert code == 0
    assert "3264 complex, 3264 distinct, 3264 real (certified)" in err
    doc = json.loads(out.read_text())
    assert doc["count_complex"] == 3264
    cert = doc["certification"]
    assert cert["n_certified"] == 3264
    assert cert["n_distinct"] == 3264
    assert cert["n_real"] == 3264
    print(f"fulton solve+certify: {wall:.0f}s")

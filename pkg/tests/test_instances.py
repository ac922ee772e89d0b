import hashlib
import json

import numpy as np
import pytest

from steiner.conics import Conic, ConicClass, LinearForm, Point2, Quintuple, classify
from steiner.instances import (
    FULTON_MATRIX,
    PENTAGON_SWEEP_SCHEDULE,
    PentagonParams,
    fulton_instance,
    pentagon_instance,
    random_instance,
    regular_pentagon_params,
)
from steiner.scalars import rational

FULTON_SHA256 = "b17c269d047dd314dfd53bb65b75a66ee4cfdce7172576428aa939b44ca51506"


def test_fulton_checksum():
    blob = "\n".join(",".join(row) for row in FULTON_MATRIX)
    assert hashlib.sha256(blob.encode()).hexdigest() == FULTON_SHA256


def test_fulton_entries():
    q = fulton_instance()
    conics = q.conics
    assert conics[0].coeffs[0] == rational(10124547, 662488724)
    assert conics[4].coeffs[4] == rational(28246737, 81404569)
    for c in conics:
        assert c.coeffs[5] == 1
    assert q.is_rational and q.is_real


def test_fulton_serialization_round_trip():
    q = fulton_instance()
    doc = q.to_document()
    back = Quintuple.from_document(json.loads(json.dumps(doc)))
    for a, b in zip(q.conics, back.conics):
        assert a.coeffs == b.coeffs
        assert a.as_strings() == b.as_strings()
    # the document text itself matches the embedded literals
    assert doc["conics"] == [list(row) for row in FULTON_MATRIX]


def test_pentagon_params_validation():
    params = regular_pentagon_params(rational(1, 8), rational(1, 64))
    with pytest.raises(ValueError):
        PentagonParams(params.edges, params.points, rational(1, 64), rational(1, 8))
    with pytest.raises(ValueError):
        PentagonParams(params.edges, params.points, rational(1, 8), 0)
    with pytest.raises(ValueError):
        PentagonParams(params.edges, params.points, rational(1, 8), rational(-1, 64))
    with pytest.raises(ValueError):
        PentagonParams(params.edges[:4], params.points[:4], rational(1, 8), rational(1, 64))


def test_pentagon_points_on_edges():
    params = regular_pentagon_params(rational(1, 8), rational(1, 64))
    for edge, p in zip(params.edges, params.points):
        assert edge.evaluate(p.x, p.y) == 0


def test_pentagon_conics_are_hyperbolas():
    for eps, delta in PENTAGON_SWEEP_SCHEDULE:
        q = pentagon_instance(regular_pentagon_params(eps, delta))
        for conic in q.conics:
            assert classify(conic) == ConicClass.HYPERBOLA


def test_pentagon_conic_vanishes_at_branch_tips():
    # in the frame of each edge the model is x^2 - eps*y^2 + delta, so the
    # branch tips sit on the edge normal through the special point at
    # distance sqrt(delta/eps) along the edge direction
    eps, delta = rational(1, 8), rational(1, 64)
    params = regular_pentagon_params(eps, delta)
    q = pentagon_instance(params)
    for conic, edge, s in zip(q.conics, params.edges, params.points):
        n = np.array([float(edge.l1), float(edge.l2)])
        d = np.array([float(edge.l2), -float(edge.l1)])
        tip = float(np.sqrt(float(delta) / float(eps)))
        for sign in (+1, -1):
            p = np.array([float(s.x), float(s.y)]) + sign * tip * d
            val = complex(conic.evaluate(p[0], p[1]))
            scale = max(abs(complex(c)) for c in conic.coeffs)
            assert abs(val) < 1e-9 * scale
        # and the special point itself is not on the conic (delta keeps it off)
        val = conic.evaluate(float(s.x), float(s.y))
        assert abs(complex(val)) > 0


def _pushforward(conic: Conic, minv, binv):
    """Coefficients of conic composed with the affine inverse map p -> minv p + binv."""
    a, b, c, d, e, f = [float(v) for v in conic.coeffs]

    def value(x, y):
        u = minv[0][0] * x + minv[0][1] * y + binv[0]
        v = minv[1][0] * x + minv[1][1] * y + binv[1]
        return a * u * u + b * u * v + c * v * v + d * u + e * v + f

    # read the six coefficients back off sample evaluations
    f2 = value(0.0, 0.0)
    a2 = (value(1, 0) + value(-1, 0)) / 2 - f2
    c2 = (value(0, 1) + value(0, -1)) / 2 - f2
    d2 = (value(1, 0) - value(-1, 0)) / 2
    e2 = (value(0, 1) - value(0, -1)) / 2
    b2 = value(1, 1) - a2 - c2 - d2 - e2 - f2
    return np.array([a2, b2, c2, d2, e2, f2])


def test_pentagon_instance_equivariant_under_rigid_motion():
    # rotate/translate the pentagon data with a rational rotation (3-4-5
    # triangle) and check each output conic is the image of the original;
    # tangency is invariant under the map, so the tangent conics of the
    # moved instance are exactly the images of the originals
    cos_t, sin_t = rational(3, 5), rational(4, 5)
    bx, by = rational(7, 10), rational(-2, 5)
    params = regular_pentagon_params(rational(1, 8), rational(1, 64))

    def map_point(p):
        return Point2(cos_t * p.x - sin_t * p.y + bx, sin_t * p.x + cos_t * p.y + by)

    def map_edge(l):
        # l(phi^{-1}(p)) with phi = rotation then translation
        n1 = cos_t * l.l1 - sin_t * l.l2
        n2 = sin_t * l.l1 + cos_t * l.l2
        return LinearForm(n1, n2, l.l3 - n1 * bx - n2 * by)

    moved = PentagonParams(
        tuple(map_edge(l) for l in params.edges),
        tuple(map_point(p) for p in params.points),
        params.eps,
        params.delta,
    )
    original = pentagon_instance(params)
    image = pentagon_instance(moved)

    minv = [[float(cos_t), float(sin_t)], [-float(sin_t), float(cos_t)]]
    binv = [
        -(minv[0][0] * float(bx) + minv[0][1] * float(by)),
        -(minv[1][0] * float(bx) + minv[1][1] * float(by)),
    ]
    for orig, img in zip(original.conics, image.conics):
        want = _pushforward(orig, minv, binv)
        got = np.array([float(v) for v in img.coeffs])
        # conics are projective; compare after matching the dominant entry
        k = int(np.argmax(np.abs(want)))
        assert abs(got[k]) > 0
        diff = want / want[k] - got / got[k]
        assert float(np.max(np.abs(diff))) < 1e-6


def test_sweep_schedule_well_ordered():
    pairs = list(PENTAGON_SWEEP_SCHEDULE)
    assert len(pairs) >= 3
    for eps, delta in pairs:
        assert eps > delta > 0
    for (e0, d0), (e1, d1) in zip(pairs, pairs[1:]):
        assert e1 < e0 and d1 < d0


def test_random_rational_instance_properties():
    rng = np.random.default_rng(7)
    q = random_instance(rng, field="real-rational")
    assert q.is_rational and q.is_real
    for conic in q.conics:
        assert not classify(conic).name.startswith("DEGENERATE")
        for text in conic.as_strings():
            assert Conic.from_strings(conic.as_strings()).coeffs == conic.coeffs


def test_random_complex_instance_properties():
    rng = np.random.default_rng(7)
    q = random_instance(rng, field="complex")
    assert not q.is_real
    arr = q.params_array()
    assert arr.shape == (5, 6)
    assert np.all(np.isfinite(arr))
    with pytest.raises(ValueError):
        random_instance(rng, field="imaginary-quadratic")


def test_random_instances_differ_between_draws():
    rng = np.random.default_rng(11)
    a = random_instance(rng)
    b = random_instance(rng)
    assert any(x.coeffs != y.coeffs for x, y in zip(a.conics, b.conics))

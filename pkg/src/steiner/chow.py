"""Intersection numbers on the space of complete conics.

The blow-up of P^5 along the Veronese surface carries two divisor classes:
P (conics through a point) and L (conics tangent to a line).  All degree-5
products of P and L are classical and hard-coded below; the class of conics
tangent to a smooth conic is 2P + 2L, and expanding (2P+2L)^5 against the
table gives 3264.
"""

from __future__ import annotations

import math

# P^a L^b for a+b = 5, keyed by a.  Symmetric under a <-> 5-a.
_PL = {0: 1, 1: 2, 2: 4, 3: 4, 4: 2, 5: 1}


def point_line_product(a: int, b: int) -> int:
    """The intersection number P^a L^b, defined for a + b = 5, a, b >= 0."""
    if a < 0 or b < 0 or a + b != 5:
        raise ValueError(f"P^{a} L^{b} is not a degree-5 monomial")
    return _PL[a]


def intersection_count(n_points: int, n_lines: int, n_conics: int) -> int:
    """Conics through n_points points, tangent to n_lines lines and n_conics
    smooth conics, for generic data.

    The three arguments must sum to 5.  Each conic condition contributes
    (2P + 2L), so the count is sum_k C(c,k) 2^c P^(p+k) L^(l+c-k).
    """
    p, l, c = n_points, n_lines, n_conics
    if min(p, l, c) < 0 or p + l + c != 5:
        raise ValueError("condition counts must be nonnegative and sum to 5")
    total = 0
    for k in range(c + 1):
        total += math.comb(c, k) * point_line_product(p + k, l + c - k)
    return total * 2**c


def pentagon_count() -> int:
    """Limit count (L + P)^5 = 102 for the degenerate pentagon construction.

    When the five conics collapse onto doubled pentagon edges, tangency to
    each becomes "through the marked point" or "tangent to the edge line".
    Expanding (L + P)^5 against the table gives 102; each of these splits
    into 2^5 = 32 conics nearby, recovering 32 * 102 = 3264.
    """
    return sum(
        math.comb(5, k) * point_line_product(k, 5 - k) for k in range(6)
    )

"""Gauss rules and Riesz pair integrals over element pairs.

The nonlocal bilinear form needs, for piecewise-constant densities,

    int_{E1} int_{E2} |x - y|^(-(n-2+2s)) dy dx

for every element pair.  In 1D the double integral has a closed-form
antiderivative.  In 2D the pair is classified by how the triangles touch
(identical / shared edge / shared vertex / disjoint) and the touching
classes are reduced, through relative coordinates and a Duffy-type sector
split, to integrals whose radial part is a Beta function and whose
remaining directional part is analytic, so a plain Gauss rule converges
fast.  An adaptive subdivision oracle, used by tests only, provides an
independent reference value.

All pair integrals here exclude the 1/gamma(2-2s) normalization; assembly
applies it once.
"""

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "QuadRule",
    "PairClass",
    "OracleBudgetError",
    "gauss_segment",
    "gauss_triangle",
    "classify_pair",
    "riesz_pair_1d",
    "riesz_pair_2d",
    "adaptive_pair_oracle",
]

# Default tensor orders: touching pairs get the transformed rules, far
# disjoint pairs plain Gauss, near-singular disjoint pairs a bumped order.
ORDER_SINGULAR = 5
ORDER_DISJOINT = 3
ORDER_NEAR = 6
NEAR_FIELD_FACTOR = 2.0  # barycenter distance below factor*max(diam) counts as near


@dataclass(frozen=True)
class QuadRule:
    """Reference-element quadrature rule (points in reference coordinates)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, float)))
        object.__setattr__(self, "weights", np.asarray(self.weights, float))


class PairClass(Enum):
    IDENTICAL = "identical"
    SHARED_EDGE = "shared_edge"
    SHARED_VERTEX = "shared_vertex"
    ADJACENT = "adjacent"
    DISJOINT = "disjoint"


class OracleBudgetError(RuntimeError):
    """Adaptive oracle ran out of cells; carries the best estimate."""

    def __init__(self, estimate, achieved):
        super().__init__(
            f"oracle budget exceeded: best estimate {estimate!r}, "
            f"achieved two-level difference {achieved:.3e}"
        )
        self.estimate = estimate
        self.achieved = achieved


@lru_cache(maxsize=64)
def gauss_segment(k):
    """k-point Gauss-Legendre rule on [0, 1], exact for degree 2k-1."""
    if not 1 <= k <= 20:
        raise ValueError(f"segment rule order must be in [1, 20], got {k}")
    x, w = np.polynomial.legendre.leggauss(k)
    return QuadRule((x[:, None] + 1.0) / 2.0, w / 2.0)


@lru_cache(maxsize=64)
def gauss_triangle(degree):
    """Conical-product rule on the reference triangle {x,y >= 0, x+y <= 1}.

    Exact for total degree <= `degree`; uses k^2 points with k = ceil((degree+1)/2).
    """
    if not 1 <= degree <= 10:
        raise ValueError(f"triangle rule degree must be in [1, 10], got {degree}")
    k = (degree + 2) // 2
    # Gauss-Jacobi with weight (1-x) on [-1,1], mapped to weight (1-u) on [0,1].
    xj, wj = roots_jacobi(k, 1.0, 0.0)
    u = (xj + 1.0) / 2.0
    wu = wj / 4.0
    seg = gauss_segment(k)
    v, wv = seg.points[:, 0], seg.weights
    pts = np.empty((k * k, 2))
    wts = np.empty(k * k)
    idx = 0
    for i in range(k):
        for j in range(k):
            pts[idx] = (u[i], v[j] * (1.0 - u[i]))
            wts[idx] = wu[i] * wv[j]
            idx += 1
    return QuadRule(pts, wts)


# ----------------------------------------------------------------------
# pair classification
# ----------------------------------------------------------------------

def classify_pair(e1, e2, tol=1e-12):
    """Classify an element pair by its shared-vertex count.

    1D elements are (a, b) interval tuples, 2D elements are (3, 2) vertex
    arrays.  Returns a PairClass.
    """
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    if e1.ndim == 1:  # intervals
        shared = sum(
            1 for p in e1 for q in e2 if abs(p - q) <= tol * max(1.0, abs(p), abs(q))
        )
        if abs(e1[0] - e2[0]) <= tol and abs(e1[1] - e2[1]) <= tol:
            return PairClass.IDENTICAL
        return PairClass.ADJACENT if shared >= 1 else PairClass.DISJOINT
    scale = max(1.0, np.abs(e1).max(), np.abs(e2).max())
    shared = _shared_vertex_pairs(e1, e2, tol * scale)
    count = len(shared)
    if count == 3:
        return PairClass.IDENTICAL
    if count == 2:
        return PairClass.SHARED_EDGE
    if count == 1:
        return PairClass.SHARED_VERTEX
    return PairClass.DISJOINT


def _shared_vertex_pairs(t1, t2, atol):
    return [
        (i, j)
        for i in range(3)
        for j in range(3)
        if abs(t1[i, 0] - t2[j, 0]) <= atol and abs(t1[i, 1] - t2[j, 1]) <= atol
    ]


# ----------------------------------------------------------------------
# 1D closed form
# ----------------------------------------------------------------------

def riesz_pair_1d(a, b, c, d, s):
    """int_a^b int_c^d |x-y|^(1-2s) dy dx by the exact antiderivative.

    Valid for s in (1/2, 1) so the kernel exponent beta = 2s-1 is in (0, 1).
    Empty intervals give 0.
    """
    if not 0.5 < s < 1.0:
        raise ValueError(f"s must lie in (1/2, 1), got {s}")
    if b < a or d < c:
        raise ValueError("interval endpoints out of order")
    if b == a or d == c:
        return 0.0
    beta = 2.0 * s - 1.0
    scale = 1.0 / ((1.0 - beta) * (2.0 - beta))

    def F(t):
        return abs(t) ** (2.0 - beta) * scale

    return F(b - c) + F(a - d) - F(a - c) - F(b - d)


# ----------------------------------------------------------------------
# 2D transformed rules for touching pairs
#
# With both triangles mapped to the reference simplex, the double integral
# in relative coordinates has a kernel that is homogeneous of known degree,
# so after a sector split the radial factor integrates to a Beta function
# and only an analytic directional integrand is left for Gauss points.
# ----------------------------------------------------------------------

# Hexagon boundary of {u - v : u, v in reference simplex}; only one half is
# needed because the kernel is even in the relative coordinate.
_HEX_SEGMENTS = [((1.0, 0.0), (0.0, 1.0)), ((0.0, 1.0), (-1.0, 1.0)), ((-1.0, 1.0), (-1.0, 0.0))]

# Sections (at unit overlap-depth) of the six simplicial cones covering the
# (z, u2, v2) wedge for the shared-edge reduction; every determinant is 1.
_EDGE_SECTIONS = [
    [(0, 1, 0), (0, 1, 1), (1, 0, 1)],
    [(0, 1, 0), (1, 0, 1), (1, 0, 0)],
    [(0, 0, 1), (0, 1, 1), (1, 0, 1)],
    [(0, 1, 0), (0, 1, 1), (-1, 1, 0)],
    [(-1, 0, 0), (0, 0, 1), (0, 1, 1)],
    [(-1, 0, 0), (0, 1, 1), (-1, 1, 0)],
]


@lru_cache(maxsize=32)
def _identical_ref(order):
    """Directions and weights on the relative-coordinate hexagon boundary."""
    seg = gauss_segment(order)
    t, wt = seg.points[:, 0], seg.weights
    dirs = []
    wts = []
    for p0, p1 in _HEX_SEGMENTS:
        p0 = np.array(p0)
        p1 = np.array(p1)
        dirs.append((1.0 - t)[:, None] * p0 + t[:, None] * p1)
        wts.append(wt)
    return np.vstack(dirs), np.concatenate(wts)


@lru_cache(maxsize=32)
def _edge_ref(order):
    """Section points (z, u2, v2) and weights for the shared-edge cones."""
    tri = gauss_triangle(2 * order - 1 if 2 * order - 1 <= 10 else 10)
    t, wt = tri.points, tri.weights
    pts = []
    wts = []
    for sec in _EDGE_SECTIONS:
        v1, v2, v3 = (np.array(v, float) for v in sec)
        pts.append(v1 + t[:, 0:1] * (v2 - v1) + t[:, 1:2] * (v3 - v1))
        wts.append(wt)
    return np.vstack(pts), np.concatenate(wts)


@lru_cache(maxsize=32)
def _vertex_ref(order):
    seg = gauss_segment(order)
    return seg.points[:, 0], seg.weights


def _chart(tri):
    """Affine chart columns [b-a, c-a] and the signed area times 2."""
    tri = np.asarray(tri, float)
    M = np.column_stack((tri[1] - tri[0], tri[2] - tri[0]))
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return M, det


def identical_pair_values(M, area2, beta, order=ORDER_SINGULAR):
    """Batched |T|=|T'| integrals; M is (m,2,2) charts, area2 = 2*area."""
    dirs, wts = _identical_ref(order)
    mq = np.einsum("mij,rj->mri", M, dirs)
    vals = np.einsum("r,mr->m", wts, np.sum(mq * mq, axis=2) ** (-beta / 2.0))
    b_rad = 2.0 / ((2.0 - beta) * (3.0 - beta) * (4.0 - beta))
    return (area2**2) * b_rad * vals


def edge_pair_values(e, d1, d2, area2_1, area2_2, beta, order=ORDER_SINGULAR):
    """Batched shared-edge integrals.

    e: shared edge vector b-a, d1/d2: opposite vertices minus a, each (m,2).
    """
    pts, wts = _edge_ref(order)
    k = (
        pts[:, 0:1, None] * e[None, :, :]
        + pts[:, 1:2, None] * d1[None, :, :]
        - pts[:, 2:3, None] * d2[None, :, :]
    )  # (R, m, 2)
    vals = np.einsum("r,rm->m", wts, np.sum(k * k, axis=2) ** (-beta / 2.0))
    b_rad = 1.0 / ((3.0 - beta) * (4.0 - beta))
    return area2_1 * area2_2 * b_rad * vals


def vertex_pair_values(M1, M2, area2_1, area2_2, beta, order=ORDER_SINGULAR):
    """Batched shared-vertex integrals; M1, M2 are (m,2,2) charts at the shared vertex."""
    t, wt = _vertex_ref(order)
    edge_dir = np.column_stack((1.0 - t, t))  # (k, 2) on the far edge of the simplex
    q = np.einsum("mij,kj->mki", M1, edge_dir)  # (m, k, 2)
    r = np.einsum("mij,kj->mki", M2, edge_dir)
    w, ww = t, wt  # reuse the same Gauss points for the scaling variable
    diff1 = q[:, None, :, None, :] - w[None, :, None, None, None] * r[:, None, None, :, :]
    diff2 = w[None, :, None, None, None] * q[:, None, :, None, :] - r[:, None, None, :, :]
    kernel = np.sum(diff1 * diff1, axis=4) ** (-beta / 2.0) + np.sum(
        diff2 * diff2, axis=4
    ) ** (-beta / 2.0)
    vals = np.einsum("i,j,l,i,mijl->m", ww, wt, wt, w, kernel)
    return area2_1 * area2_2 / (4.0 - beta) * vals


def disjoint_pair_value(t1, t2, beta, order=ORDER_DISJOINT):
    """Plain tensor Gauss for a separated pair."""
    rule = gauss_triangle(min(2 * order - 1, 10))
    M1, det1 = _chart(t1)
    M2, det2 = _chart(t2)
    x = np.asarray(t1, float)[0] + rule.points @ M1.T
    y = np.asarray(t2, float)[0] + rule.points @ M2.T
    d = x[:, None, :] - y[None, :, :]
    kern = np.sum(d * d, axis=2) ** (-beta / 2.0)
    return abs(det1) * abs(det2) * np.einsum("i,j,ij->", rule.weights, rule.weights, kern)


def _canonical_order(t1, t2):
    k1 = tuple(np.asarray(t1, float).ravel())
    k2 = tuple(np.asarray(t2, float).ravel())
    return (t1, t2) if k1 <= k2 else (t2, t1)


def riesz_pair_2d(t1, t2, s, order=None):
    """int_{T1} int_{T2} |x-y|^(-2s) for a triangle pair, s in (1/2, 1).

    Touching pairs are evaluated with the regularizing transforms; disjoint
    pairs with plain tensor Gauss (higher order in the near field).  `order`
    is the Gauss order per transformed coordinate; None picks the class
    default.  The pair is canonicalized first so the result is exactly
    symmetric in (T1, T2).
    """
    if not 0.5 < s < 1.0:
        raise ValueError(f"s must lie in (1/2, 1), got {s}")
    t1 = np.asarray(t1, float)
    t2 = np.asarray(t2, float)
    for t in (t1, t2):
        _, det = _chart(t)
        if abs(det) <= 1e-14 * max(1.0, np.abs(t).max()) ** 2:
            raise ValueError("degenerate triangle in pair integral")
    t1, t2 = _canonical_order(t1, t2)
    beta = 2.0 * s
    kind = classify_pair(t1, t2)
    if kind is PairClass.IDENTICAL:
        M, det = _chart(t1)
        return float(
            identical_pair_values(
                M[None], abs(det), beta, order or ORDER_SINGULAR
            )[0]
        )
    if kind is PairClass.SHARED_EDGE:
        (i1, j1), (i2, j2) = _shared_vertex_pairs(
            t1, t2, 1e-12 * max(1.0, np.abs(t1).max(), np.abs(t2).max())
        )
        a, b = t1[i1], t1[i2]
        c1 = t1[3 - i1 - i2]
        c2 = t2[3 - j1 - j2]
        _, det1 = _chart(t1)
        _, det2 = _chart(t2)
        return float(
            edge_pair_values(
                (b - a)[None],
                (c1 - a)[None],
                (c2 - a)[None],
                abs(det1),
                abs(det2),
                beta,
                order or ORDER_SINGULAR,
            )[0]
        )
    if kind is PairClass.SHARED_VERTEX:
        ((i, j),) = _shared_vertex_pairs(
            t1, t2, 1e-12 * max(1.0, np.abs(t1).max(), np.abs(t2).max())
        )
        M1, det1 = _chart(np.roll(t1, -i, axis=0))
        M2, det2 = _chart(np.roll(t2, -j, axis=0))
        return float(
            vertex_pair_values(
                M1[None], M2[None], abs(det1), abs(det2), beta, order or ORDER_SINGULAR
            )[0]
        )
    if order is None:
        db = np.linalg.norm(t1.mean(axis=0) - t2.mean(axis=0))
        diam = max(_diameter(t1), _diameter(t2))
        order = ORDER_NEAR if db < NEAR_FIELD_FACTOR * diam else ORDER_DISJOINT
    return float(disjoint_pair_value(t1, t2, beta, order=order))


def _diameter(tri):
    d01 = np.linalg.norm(tri[0] - tri[1])
    d12 = np.linalg.norm(tri[1] - tri[2])
    d20 = np.linalg.norm(tri[2] - tri[0])
    return max(d01, d12, d20)


# ----------------------------------------------------------------------
# adaptive oracle
#
# The pair integral is first reduced by the translation invariance of the
# kernel: with z = x - y,
#
#     int int k(x - y) = int k(z) * |E1 cap (E2 + z)| dz,
#
# which maps the singular diagonal x = y to the single point z = 0.  The
# overlap measure is computed geometrically (interval clipping in 1D,
# Sutherland-Hodgman polygon clipping in 2D) so the oracle shares no
# formulas with the production path.  Cells are subdivided greedily on a
# two-level difference indicator until the summed indicator drops below
# tol; cells touching z = 0 refine geometrically, which is what makes the
# boundary-concentrated kernel mass reachable at tight tolerances.
# ----------------------------------------------------------------------

def adaptive_pair_oracle(e1, e2, s, tol, max_cells=400_000):
    """Independent reference value for a Riesz pair integral (tests only)."""
    if not 0.5 < s < 1.0:
        raise ValueError(f"s must lie in (1/2, 1), got {s}")
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    if e1.ndim == 1:
        if tol < 1e-10:
            raise ValueError("1D oracle tolerance must be >= 1e-10")
        beta = 2.0 * s - 1.0
        return _oracle_1d(e1, e2, beta, tol * _tail_margin(1.0 - beta), max_cells)
    if tol < 1e-7:
        raise ValueError("2D oracle tolerance must be >= 1e-7")
    beta = 2.0 * s
    return _oracle_2d(e1, e2, beta, tol * _tail_margin(2.0 - beta), max_cells)


def _tail_margin(mass_exponent):
    # The corner-cell chain converges geometrically with ratio 2^(-mass_exponent);
    # shrink the indicator target so the untracked tail stays below tol.
    return max(0.02, 1.0 - 2.0 ** (-mass_exponent))


def _oracle_1d(e1, e2, beta, tol, max_cells):
    a, b = e1
    c, d = e2
    if b <= a or d <= c:
        return 0.0
    lo, hi = a - d, b - c

    def m(z):
        return np.maximum(np.minimum(b, d + z) - np.maximum(a, c + z), 0.0)

    seg = gauss_segment(10)
    tq, wq = seg.points[:, 0], seg.weights

    def quad(cell):
        x0, x1 = cell
        z = x0 + (x1 - x0) * tq
        return (x1 - x0) * np.dot(wq, np.abs(z) ** (-beta) * m(z))

    # split at the overlap kinks and at the singular point
    knots = sorted({lo, hi, *(k for k in (a - c, b - d, 0.0) if lo < k < hi)})
    pieces = list(zip(knots[:-1], knots[1:]))

    def children(cell):
        x0, x1 = cell
        xm = 0.5 * (x0 + x1)
        return [(x0, xm), (xm, x1)]

    return _greedy_refine(pieces, quad, children, tol, max_cells)


def _tri_area(p):
    return 0.5 * abs(
        (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
        - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])
    )


def _clip_area(poly, clipper):
    """Area of a convex polygon clipped by a convex CCW polygon."""
    out = list(poly)
    n = len(clipper)
    for i in range(n):
        if not out:
            return 0.0
        ax, ay = clipper[i]
        bx, by = clipper[(i + 1) % n]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        prev = inp[-1]
        prev_in = ex * (prev[1] - ay) - ey * (prev[0] - ax) <= 0.0
        for cur in inp:
            cur_in = ex * (cur[1] - ay) - ey * (cur[0] - ax) <= 0.0
            if cur_in != prev_in:
                # segment crosses the clip line
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    t = (ex * (ay - prev[1]) - ey * (ax - prev[0])) / -denom
                    out.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                out.append(cur)
            prev, prev_in = cur, cur_in
    if len(out) < 3:
        return 0.0
    area = 0.0
    for i in range(len(out)):
        x0, y0 = out[i]
        x1, y1 = out[(i + 1) % len(out)]
        area += x0 * y1 - x1 * y0
    return 0.5 * abs(area)


def _ccw(tri):
    tri = [tuple(p) for p in np.asarray(tri, float)]
    area2 = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (
        tri[2][0] - tri[0][0]
    ) * (tri[1][1] - tri[0][1])
    return tri if area2 >= 0.0 else [tri[0], tri[2], tri[1]]


def _oracle_2d(t1, t2, beta, tol, max_cells):
    t1p = _ccw(t1)
    t2p = _ccw(t2)

    def overlap(z):
        shifted = [(p[0] + z[0], p[1] + z[1]) for p in t2p]
        return _clip_area(t1p, shifted)

    rule = gauss_triangle(7)

    def quad(cell):
        p0 = np.array(cell[0])
        m = np.column_stack((np.subtract(cell[1], cell[0]), np.subtract(cell[2], cell[0])))
        det = abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
        if det == 0.0:
            return 0.0
        z = p0 + rule.points @ m.T
        r2 = np.sum(z * z, axis=1)
        vals = np.array([overlap(p) for p in z])
        return det * np.dot(rule.weights, r2 ** (-beta / 2.0) * vals)

    def children(cell):
        p0, p1, p2 = (np.array(p) for p in cell)
        m01, m12, m20 = 0.5 * (p0 + p1), 0.5 * (p1 + p2), 0.5 * (p2 + p0)
        return [
            (tuple(p0), tuple(m01), tuple(m20)),
            (tuple(m01), tuple(p1), tuple(m12)),
            (tuple(m20), tuple(m12), tuple(p2)),
            (tuple(m01), tuple(m12), tuple(m20)),
        ]

    # Minkowski difference support: hull of the nine vertex differences,
    # fan-triangulated from the singular point when it is inside.
    diffs = np.array([[p[0] - q[0], p[1] - q[1]] for p in t1p for q in t2p])
    hull = _convex_hull(diffs)
    origin_inside = _point_in_hull((0.0, 0.0), hull, 1e-14 * (1 + np.abs(diffs).max()))
    center = (0.0, 0.0) if origin_inside else tuple(np.mean(hull, axis=0))
    cells = []
    for i in range(len(hull)):
        tri = (center, tuple(hull[i]), tuple(hull[(i + 1) % len(hull)]))
        if _tri_area(tri) > 1e-300:
            cells.append(tri)
    return _greedy_refine(cells, quad, children, tol, max_cells)


def _convex_hull(pts):
    pts = sorted({(float(p[0]), float(p[1])) for p in pts})
    if len(pts) <= 2:
        return [np.array(p) for p in pts]

    def half(points):
        out = []
        for p in points:
            while len(out) >= 2 and (
                (out[-1][0] - out[-2][0]) * (p[1] - out[-2][1])
                - (out[-1][1] - out[-2][1]) * (p[0] - out[-2][0])
            ) <= 0.0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    return [np.array(p) for p in lower[:-1] + upper[:-1]]


def _point_in_hull(p, hull, atol):
    n = len(hull)
    for i in range(n):
        a, b = hull[i], hull[(i + 1) % n]
        cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if cross < -atol:
            return False
    return True


def _greedy_refine(cells, quad, children, tol, max_cells):
    """Two-level greedy subdivision: split the worst cell until the summed
    coarse-vs-children difference drops below tol."""
    heap = []
    count = 0
    total_fine = 0.0
    err_sum = 0.0
    entries = {}

    def activate(cell):
        nonlocal count, total_fine, err_sum
        coarse = quad(cell)
        kids = children(cell)
        fine = sum(quad(k) for k in kids)
        ind = abs(coarse - fine)
        entries[count] = (cell, kids, fine, ind)
        heapq.heappush(heap, (-ind, count))
        total_fine += fine
        err_sum += ind
        count += 1

    for cell in cells:
        activate(cell)

    while err_sum > tol:
        if count >= max_cells or not heap:
            raise OracleBudgetError(total_fine, err_sum)
        neg_ind, key = heapq.heappop(heap)
        cell, kids, fine, ind = entries.pop(key)
        total_fine -= fine
        err_sum -= ind
        for kid in kids:
            activate(kid)
    return total_fine

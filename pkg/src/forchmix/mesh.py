"""Structured triangulation of the unit square and triangle quadrature.

The square is cut into n x n cells and every cell is split along the
diagonal running from its bottom-left to its top-right corner, giving
2n^2 congruent right triangles.  Every edge carries a fixed global unit
normal (vertical edges point +x, horizontal edges +y, diagonals
(1,-1)/sqrt(2)); elements record +-1 signs telling whether that global
normal is outward for them.  Local edge k of a triangle is the one
opposite local vertex k.
"""

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


class StructuredTriMesh:
    """Uniform triangulation of [0,1]^2 with n x n split cells.

    Attributes are plain numpy arrays: ``vertices`` (nv,2), ``triangles``
    (nt,3), ``tri_edges``/``tri_edge_signs`` (nt,3), ``edges`` (ne,2),
    ``edge_normals`` (ne,2), ``edge_lengths`` (ne,), ``edge_is_boundary``
    (ne,), ``areas`` (nt,), ``centroids`` (nt,2).
    """

    def __init__(self, n):
        if int(n) != n or n < 1:
            raise ValueError("cell count per side must be a positive integer")
        n = int(n)
        self.n = n

        side = np.linspace(0.0, 1.0, n + 1)
        gx, gy = np.meshgrid(side, side, indexing="xy")
        self.vertices = np.column_stack([gx.ravel(), gy.ravel()])

        def vid(i, j):
            return j * (n + 1) + i

        ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
        ii, jj = ii.ravel(), jj.ravel()
        v00 = vid(ii, jj)
        v10 = vid(ii + 1, jj)
        v01 = vid(ii, jj + 1)
        v11 = vid(ii + 1, jj + 1)

        tris = np.empty((2 * n * n, 3), dtype=np.int64)
        tris[0::2] = np.column_stack([v00, v10, v11])   # below the diagonal
        tris[1::2] = np.column_stack([v00, v11, v01])   # above the diagonal
        self.triangles = tris

        # edge ids: horizontals, then verticals, then diagonals
        n_hor = n * (n + 1)
        n_ver = (n + 1) * n
        hi, hj = np.meshgrid(np.arange(n), np.arange(n + 1), indexing="xy")
        hor = np.column_stack([vid(hi.ravel(), hj.ravel()),
                               vid(hi.ravel() + 1, hj.ravel())])
        vi, vj = np.meshgrid(np.arange(n + 1), np.arange(n), indexing="xy")
        ver = np.column_stack([vid(vi.ravel(), vj.ravel()),
                               vid(vi.ravel(), vj.ravel() + 1)])
        dia = np.column_stack([v00, v11])
        self.edges = np.concatenate([hor, ver, dia])

        def hor_id(i, j):
            return j * n + i

        def ver_id(i, j):
            return n_hor + j * (n + 1) + i

        def dia_id(i, j):
            return n_hor + n_ver + j * n + i

        tri_edges = np.empty((2 * n * n, 3), dtype=np.int64)
        # local edge k sits opposite local vertex k
        tri_edges[0::2, 0] = ver_id(ii + 1, jj)
        tri_edges[0::2, 1] = dia_id(ii, jj)
        tri_edges[0::2, 2] = hor_id(ii, jj)
        tri_edges[1::2, 0] = hor_id(ii, jj + 1)
        tri_edges[1::2, 1] = ver_id(ii, jj)
        tri_edges[1::2, 2] = dia_id(ii, jj)
        self.tri_edges = tri_edges

        vec = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        self.edge_lengths = np.linalg.norm(vec, axis=1)
        normals = np.zeros_like(vec)
        vertical = np.abs(vec[:, 0]) < 1e-14
        horizontal = np.abs(vec[:, 1]) < 1e-14
        diagonal = ~(vertical | horizontal)
        normals[vertical] = (1.0, 0.0)
        normals[horizontal] = (0.0, 1.0)
        normals[diagonal] = (1.0 / _SQRT2, -1.0 / _SQRT2)
        self.edge_normals = normals

        pts = self.vertices[tris]
        self.centroids = pts.mean(axis=1)
        d1 = pts[:, 1] - pts[:, 0]
        d2 = pts[:, 2] - pts[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        if np.any(self.areas <= 0.0):
            raise AssertionError("element orientation flipped")

        # sign = +1 where the stored edge normal is outward for the element
        mids = 0.5 * (self.vertices[self.edges[tri_edges][:, :, 0]]
                      + self.vertices[self.edges[tri_edges][:, :, 1]])
        outward = mids - self.centroids[:, None, :]
        dots = np.sum(outward * self.edge_normals[tri_edges], axis=2)
        self.tri_edge_signs = np.where(dots > 0.0, 1.0, -1.0)

        counts = np.bincount(tri_edges.ravel(), minlength=len(self.edges))
        self.edge_is_boundary = counts == 1

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_triangles(self):
        return len(self.triangles)

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def h(self):
        """Longest edge (the diagonal)."""
        return _SQRT2 / self.n

    def mapped_points(self, rule):
        """Physical images of a rule's barycentric points, shape (nq, nt, 2)."""
        pts = self.vertices[self.triangles]          # (nt, 3, 2)
        return np.einsum("qk,tkd->qtd", rule.points, pts)

    def dump_text(self):
        """Plain-text mesh listing: vertex, triangle and edge sections."""
        lines = ["vertices %d" % self.num_vertices]
        for x, y in self.vertices:
            lines.append("%.17g %.17g" % (x, y))
        lines.append("triangles %d" % self.num_triangles)
        for a, b, c in self.triangles:
            lines.append("%d %d %d" % (a, b, c))
        lines.append("edges %d" % self.num_edges)
        for (a, b), flag in zip(self.edges, self.edge_is_boundary):
            lines.append("%d %d %d" % (a, b, 1 if flag else 0))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric rule on the reference triangle.

    ``points`` holds barycentric coordinates, ``weights`` sum to one and are
    scaled by the element area at use; ``degree`` is the highest polynomial
    degree integrated exactly.
    """

    degree: int
    points: np.ndarray
    weights: np.ndarray


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(c, a, b), (c, b, a), (a, c, b), (b, c, a), (a, b, c), (b, a, c)]


def _make_rule(degree, groups):
    pts, wts = [], []
    for w, orbit in groups:
        pts.extend(orbit)
        wts.extend([w] * len(orbit))
    return QuadratureRule(degree, np.array(pts), np.array(wts))


_RULES = {
    1: _make_rule(1, [(1.0, [(1 / 3, 1 / 3, 1 / 3)])]),
    2: _make_rule(2, [(1 / 3, [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5),
                               (0.5, 0.0, 0.5)])]),
    4: _make_rule(4, [(0.223381589678011, _orbit3(0.445948490915965)),
                      (0.109951743655322, _orbit3(0.091576213509771))]),
    5: _make_rule(5, [(0.225, [(1 / 3, 1 / 3, 1 / 3)]),
                      (0.132394152788506, _orbit3(0.470142064105115)),
                      (0.125939180544827, _orbit3(0.101286507323456))]),
    6: _make_rule(6, [(0.050844906370207, _orbit3(0.063089014491502)),
                      (0.116786275726379, _orbit3(0.249286745170910)),
                      (0.082851075618374,
                       _orbit6(0.310352451033785, 0.053145049844816))]),
}
# no classic positive-weight 4-point rule exists for degree 3; serve the
# 6-point degree-4 rule, which is exact there too
_RULES[3] = _RULES[4]


def quadrature(degree):
    """Positive-weight rule exact to at least the requested degree (1..6)."""
    if degree not in _RULES:
        raise ValueError("no quadrature rule for degree %r" % (degree,))
    return _RULES[degree]

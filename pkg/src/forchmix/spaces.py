"""Lowest-order mixed spaces on the structured triangulation.

Fluxes live in the edge-based space whose basis function for edge e,
restricted to an adjacent triangle T, is sign * |e| / (2|T|) * (x - x_opp)
with x_opp the vertex of T opposite e; its normal trace is the element's
orientation sign on e and zero on the other edges, and its divergence is
sign * |e| / |T|.  Pressures and flux gradients are piecewise constants
(scalar and 2-vector valued).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from forchmix.mesh import quadrature


@dataclass(frozen=True)
class DofLayout:
    """Unknown counts: pressures per element, gradient components per
    element (x then y interleaved), one flux per edge."""

    n_p: int
    n_s: int
    n_u: int

    @classmethod
    def from_mesh(cls, mesh):
        return cls(mesh.num_triangles, 2 * mesh.num_triangles,
                   mesh.num_edges)


@dataclass(frozen=True)
class AssembledSystem:
    """Mesh-level matrices reused across time steps.

    M_u is the flux mass matrix; B maps fluxes to elementwise divergence
    integrals (entries sign * |e|, exact); C maps fluxes to elementwise
    component integrals, so (C @ u) / area recovers elementwise averages;
    M_s and M_p are the diagonal masses of the piecewise-constant spaces.
    """

    mesh: object
    layout: DofLayout
    M_u: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    M_s: np.ndarray
    M_p: np.ndarray

    def flux_averages(self, u):
        """Elementwise average of the flux field, shape (nt, 2)."""
        return (self.C @ u).reshape(-1, 2) / self.mesh.areas[:, None]


def _basis_factors(mesh):
    # sign * |e| / (2|T|) per element edge, shape (nt, 3)
    return (mesh.tri_edge_signs * mesh.edge_lengths[mesh.tri_edges]
            / (2.0 * mesh.areas[:, None]))


def rt0_eval(mesh, tri, local_edge, point):
    """Value of one local flux basis function at a point of element
    ``tri``; raises if the point lies outside."""
    verts = mesh.vertices[mesh.triangles[tri]]
    mat = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
    loc = np.linalg.solve(mat, np.asarray(point, dtype=float) - verts[0])
    lam = np.array([1.0 - loc.sum(), loc[0], loc[1]])
    if np.any(lam < -1e-12) or np.any(lam > 1.0 + 1e-12):
        raise ValueError("point lies outside the element")
    factor = _basis_factors(mesh)[tri, local_edge]
    return factor * (np.asarray(point, dtype=float) - verts[local_edge])


def rt0_divergence(mesh):
    """Constant divergence of each local basis function, shape (nt, 3)."""
    return (mesh.tri_edge_signs * mesh.edge_lengths[mesh.tri_edges]
            / mesh.areas[:, None])


def rt0_values(mesh, coeffs, rule):
    """Flux field at the mapped points of a quadrature rule, (nq, nt, 2)."""
    pts = mesh.mapped_points(rule)                   # (nq, nt, 2)
    factors = _basis_factors(mesh)                   # (nt, 3)
    out = np.zeros_like(pts)
    for k in range(3):
        vk = mesh.vertices[mesh.triangles[:, k]]     # (nt, 2)
        coef = coeffs[mesh.tri_edges[:, k]] * factors[:, k]
        out += coef[None, :, None] * (pts - vk[None, :, :])
    return out


def rt0_interpolate(mesh, field):
    """Edge-midpoint interpolant: dof = normal component at the midpoint.

    Reproduces constant fields exactly (their elementwise averages too).
    """
    mids = 0.5 * (mesh.vertices[mesh.edges[:, 0]]
                  + mesh.vertices[mesh.edges[:, 1]])
    vals = _vector_values(field, mids[:, 0], mids[:, 1])
    return np.sum(vals * mesh.edge_normals, axis=1)


def _vector_values(field, x, y):
    vals = field(x, y)
    if isinstance(vals, tuple):
        vals = np.stack(np.broadcast_arrays(*vals), axis=-1)
    return np.asarray(vals, dtype=float)


def assemble(mesh, element_order=None):
    """Build the time-independent matrices for a mesh.

    The optional ``element_order`` permutes the element loop; the result
    is identical for any order, which keeps assembly deterministic.
    """
    order = (np.arange(mesh.num_triangles) if element_order is None
             else np.asarray(element_order))
    layout = DofLayout.from_mesh(mesh)
    areas = mesh.areas[order]
    tri_edges = mesh.tri_edges[order]
    signed_len = (mesh.tri_edge_signs * mesh.edge_lengths[mesh.tri_edges])[order]
    factors = _basis_factors(mesh)[order]

    rule = quadrature(2)
    pts = mesh.mapped_points(rule)[:, order, :]      # (nq, nt, 2)
    basis = np.empty((3, len(rule.weights), len(order), 2))
    for k in range(3):
        vk = mesh.vertices[mesh.triangles[order, k]]
        basis[k] = factors[:, k][None, :, None] * (pts - vk[None, :, :])

    rows, cols, vals = [], [], []
    for k in range(3):
        for l in range(3):
            m_kl = areas * np.einsum("q,qtd,qtd->t", rule.weights,
                                     basis[k], basis[l])
            rows.append(tri_edges[:, k])
            cols.append(tri_edges[:, l])
            vals.append(m_kl)
    M_u = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(layout.n_u, layout.n_u)).tocsr()

    elem = order
    B = sp.coo_matrix(
        (signed_len.ravel(),
         (np.repeat(elem, 3), tri_edges.ravel())),
        shape=(layout.n_p, layout.n_u)).tocsr()

    # integral of each basis function over its element:
    # |T| * avg = sign * |e| * (centroid - opposite vertex) / 2
    crows, ccols, cvals = [], [], []
    cent = mesh.centroids[order]
    for k in range(3):
        vk = mesh.vertices[mesh.triangles[order, k]]
        integ = 0.5 * signed_len[:, k][:, None] * (cent - vk)
        for comp in range(2):
            crows.append(2 * elem + comp)
            ccols.append(tri_edges[:, k])
            cvals.append(integ[:, comp])
    C = sp.coo_matrix(
        (np.concatenate(cvals), (np.concatenate(crows), np.concatenate(ccols))),
        shape=(layout.n_s, layout.n_u)).tocsr()

    return AssembledSystem(mesh, layout, M_u, B, C,
                           np.repeat(mesh.areas, 2), mesh.areas.copy())


def l2_project_scalar(mesh, f, degree=4):
    """Elementwise averages of a scalar field f(x, y), length nt."""
    rule = quadrature(degree)
    pts = mesh.mapped_points(rule)
    vals = np.asarray(f(pts[:, :, 0], pts[:, :, 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    return np.einsum("q,qt->t", rule.weights, vals)


def l2_project_vector(mesh, field, degree=4):
    """Elementwise averages of a vector field, shape (nt, 2)."""
    rule = quadrature(degree)
    pts = mesh.mapped_points(rule)
    vals = _vector_values(field, pts[:, :, 0], pts[:, :, 1])
    vals = np.broadcast_to(vals, pts.shape)
    return np.einsum("q,qtd->td", rule.weights, vals)

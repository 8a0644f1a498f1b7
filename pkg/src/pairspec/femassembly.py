"""Piecewise-linear stiffness and mass matrices with Dirichlet elimination."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse

from .geometry import DomainKind, DomainSpec, GeometryError, Mesh, is_symmetric_under, triangulate


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Discrete form ``A`` and Gram matrix ``B`` on the free (non-Dirichlet) nodes.

    ``free_nodes[r]`` is the mesh node behind matrix row ``r``.
    """

    stiffness: sparse.csr_matrix
    mass: sparse.csr_matrix
    free_nodes: np.ndarray
    sector: str
    domain: DomainSpec | None
    mesh: Mesh

    @property
    def dim(self) -> int:
        return len(self.free_nodes)

    def expand(self, u: np.ndarray) -> np.ndarray:
        """Nodal values on the whole mesh (zero at Dirichlet nodes)."""
        full = np.zeros(self.mesh.n_nodes, dtype=np.result_type(u, float))
        full[self.free_nodes] = u
        return full

    def restrict(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.free_nodes]

    def interpolate(self, f) -> np.ndarray:
        x, y = self.mesh.nodes[self.free_nodes].T
        return np.asarray(f(x, y), dtype=float) * np.ones(self.dim)


def element_matrices(mesh: Mesh):
    """Per-triangle P1 stiffness (T,3,3) and consistent mass (T,3,3)."""
    p = mesh.nodes[mesh.triangles]  # (T, 3, 2)
    area = mesh.element_area
    # edge vectors opposite each vertex, rotated, give the barycentric gradients
    e = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grad = np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2 * area)[:, None, None]
    k = area[:, None, None] * np.einsum("tia,tja->tij", grad, grad)
    m = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    return k, m


def assemble_full(mesh: Mesh, deterministic: bool = True):
    """Global matrices over every mesh node (no boundary conditions).

    Accumulation is a single sorted COO reduction, so the result does not
    depend on ``deterministic``; the flag is kept for interface stability.
    """
    if np.any(mesh.element_area <= 0):
        raise GeometryError("zero-area triangle")
    k, m = element_matrices(mesh)
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_nodes
    K = sparse.coo_matrix((k.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sparse.coo_matrix((m.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    M.sum_duplicates()
    # exact symmetry despite rounding in the element loop
    K = ((K + K.T) * 0.5).tocsr()
    M = ((M + M.T) * 0.5).tocsr()
    return K, M


def assemble(mesh: Mesh, deterministic: bool = True) -> AssembledSystem:
    """Assemble the discrete Dirichlet energy and L2 norm, eliminating Dirichlet nodes."""
    K, M = assemble_full(mesh, deterministic)
    dnodes = mesh.dirichlet_nodes()
    free = np.setdiff1d(np.arange(mesh.n_nodes), dnodes)
    A = K[free][:, free].tocsr()
    B = M[free][:, free].tocsr()
    sector = mesh.domain.sector if mesh.domain is not None else "full"
    return AssembledSystem(A, B, free, sector, mesh.domain, mesh)


def build_system(spec: DomainSpec, deterministic: bool = True) -> AssembledSystem:
    return assemble(triangulate(spec), deterministic)


def reduce_to_sector(system: AssembledSystem, sector: str) -> AssembledSystem:
    """System of one exchange sector, posed on the half-domain ``y >= x``.

    The diagonal carries Neumann data for the symmetric sector and Dirichlet
    data for the antisymmetric one.  ``full`` returns ``system`` unchanged.
    """
    spec = system.domain
    if spec is None or spec.kind is not DomainKind.PAIR or spec.sector != "full":
        raise ValueError("sector reduction needs a full pair-domain system")
    half = replace(spec, sector=sector)
    if half.sector == "full":
        return system
    if not is_symmetric_under(system.mesh, "reflect-diagonal"):
        raise GeometryError("mesh is not exchange-symmetric")
    return build_system(half)


def export_matrix(matrix, path) -> None:
    """Write the upper triangle as 0-based ``row col value`` triplets."""
    upper = sparse.triu(sparse.csr_matrix(matrix)).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w") as fh:
        for r, c, v in zip(upper.row[order], upper.col[order], upper.data[order]):
            fh.write(f"{r} {c} {float(v)!r}\n")


def import_matrix(path, n: int) -> sparse.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    r, c, v = data[:, 0].astype(int), data[:, 1].astype(int), data[:, 2]
    upper = sparse.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    return (upper + sparse.triu(upper, 1).T).tocsr()

"""Discrete counterparts of the comparison arguments.

Two constructions are provided:

* embeddings of pair-domain functions into cross-domain functions by exact
  grid isometries (reflections, and a half-width translation for the
  antisymmetric sector), which carry Rayleigh quotients over unchanged and
  hence order the discrete min-max values;
* the Neumann decoupling of the axis cross into its central square and four
  arms, whose direct sum sees every cross function with the same energy and
  norm, so eigenvalue counts of the cross are bounded by those of the pieces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .eigensolve import count_below_perturbed, rayleigh_quotient
from .femassembly import AssembledSystem, build_system
from .geometry import (
    DomainKind,
    GeometryError,
    PairParameters,
    apply_isometry_keys,
    lookup_keys,
    make_domain,
    normalize_sector,
)

_DOUBLE_REFLECTION = ((), ("reflect-y-axis",), ("reflect-x-axis",), ("reflect-y-axis", "reflect-x-axis"))


@dataclass(frozen=True, eq=False)
class EmbeddingMap:
    """Linear map from a pair-sector space into a cross space.

    ``copies`` lists the isometry chains applied to the source; ``node_maps``
    holds, per copy, the injective source-node to target-node index map.
    ``matrix`` is the resulting (target free) x (source free) 0/1 operator.
    """

    source: AssembledSystem
    target: AssembledSystem
    copies: tuple
    node_maps: tuple
    sign_pattern: tuple
    matrix: sparse.csr_matrix

    def apply(self, u):
        return self.matrix @ u

    def __call__(self, u):
        return self.apply(u)


def _chain_keys(keys, chain, shift):
    for iso in chain:
        keys = apply_isometry_keys(keys, iso, shift)
    return keys


def embed(source: AssembledSystem, target: AssembledSystem, copies, shift: int = 0) -> EmbeddingMap:
    """Glue the isometric copies of ``source`` into ``target``, zero elsewhere."""
    smesh, tmesh = source.mesh, target.mesh
    src_free = np.full(smesh.n_nodes, -1)
    src_free[source.free_nodes] = np.arange(source.dim)
    tgt_free = np.full(tmesh.n_nodes, -1)
    tgt_free[target.free_nodes] = np.arange(target.dim)

    assigned = np.full(tmesh.n_nodes, -2)  # -2 untouched, -1 forced zero, else source free index
    node_maps = []
    for chain in copies:
        nmap = lookup_keys(tmesh, _chain_keys(smesh.keys, chain, shift))
        missing = np.flatnonzero(nmap < 0)
        if len(missing):
            x, y = smesh.nodes[missing[0]]
            raise GeometryError(f"node ({x:.6g}, {y:.6g}) has no image under {chain}")
        if len(np.unique(nmap)) != len(nmap):
            raise GeometryError(f"copy {chain} is not injective")
        vals = src_free  # value carried to each image node
        prev = assigned[nmap]
        clash = (prev != -2) & (prev != vals)
        if clash.any():
            raise GeometryError(f"copies disagree at target node {nmap[np.flatnonzero(clash)[0]]}")
        assigned[nmap] = vals
        node_maps.append(nmap)

    rows = np.flatnonzero(assigned >= 0)
    bad = rows[tgt_free[rows] < 0]
    if len(bad):
        x, y = tmesh.nodes[bad[0]]
        raise GeometryError(f"free source value lands on target Dirichlet node ({x:.6g}, {y:.6g})")
    P = sparse.csr_matrix((np.ones(len(rows)), (tgt_free[rows], assigned[rows])),
                          shape=(target.dim, source.dim))
    return EmbeddingMap(source, target, tuple(copies), tuple(node_maps),
                        tuple(1 for _ in copies), P)


def comparison_target(sector: str, params: PairParameters) -> AssembledSystem:
    scale = 0.5 if normalize_sector(sector) == "antisymmetric" else 1.0
    return build_system(make_domain(DomainKind.CROSS_DIAGONAL, params, scale))


def build_embedding(sector: str, d: float, L: float, h: float, *,
                    source: AssembledSystem | None = None,
                    target: AssembledSystem | None = None) -> EmbeddingMap:
    """Map a pair-domain sector space into the matching diagonal cross.

    full / symmetric: double reflection across the y- and x-axes into the
    cross of parameter ``d`` (the symmetric half-domain is first unfolded
    across ``x = y``).  antisymmetric: the half-domain ``y > x`` and its
    mirror image across ``x = 0`` are shifted by ``(0, -d/2)`` into the cross
    of parameter ``d/2`` and extended by zero.
    """
    sector = normalize_sector(sector)
    params = PairParameters(d, L, h)
    if source is None:
        source = build_system(make_domain(DomainKind.PAIR, params, sector=sector))
    if target is None:
        target = comparison_target(sector, params)
    if sector == "antisymmetric":
        if params.cells_per_d % 2:
            raise GeometryError("the d/2 translation needs d/h even")
        copies = [("translate-by-(0,-d/2)",), ("reflect-y-axis", "translate-by-(0,-d/2)")]
        return embed(source, target, copies, shift=params.cells_per_d)
    copies = list(_DOUBLE_REFLECTION)
    if sector == "symmetric":
        copies += [("reflect-diagonal",) + c for c in _DOUBLE_REFLECTION]
    return embed(source, target, copies)


def check_rayleigh_preservation(emap: EmbeddingMap, u) -> tuple[float, float]:
    """Rayleigh quotients of ``u`` in the source and of its image in the target."""
    src = rayleigh_quotient(emap.source.stiffness, emap.source.mass, u)
    tgt = rayleigh_quotient(emap.target.stiffness, emap.target.mass, emap.apply(u))
    return src, tgt


def build_bracket_pair(d: float, L: float, h: float):
    """Neumann square and Neumann-decoupled arms sharing the axis cross grid."""
    params = PairParameters(d, L, h)
    square = build_system(make_domain(DomainKind.NEUMANN_SQUARE, params, snapped=True))
    arms = build_system(make_domain(DomainKind.ARMS, params))
    return square, arms


def restriction(cross: AssembledSystem, part: AssembledSystem) -> sparse.csr_matrix:
    """0/1 operator taking cross free values to the free values of a sub-domain."""
    if not np.isclose(cross.mesh.spacing, part.mesh.spacing):
        raise GeometryError("interface non-conformity: spacings differ")
    idx = lookup_keys(cross.mesh, part.mesh.keys[part.free_nodes])
    if np.any(idx < 0):
        raise GeometryError("interface non-conformity: sub-domain node missing from the cross")
    cross_free = np.full(cross.mesh.n_nodes, -1)
    cross_free[cross.free_nodes] = np.arange(cross.dim)
    cols = cross_free[idx]
    rows = np.flatnonzero(cols >= 0)
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols[rows])), shape=(part.dim, cross.dim))


def split_energy(cross, square, arms, u):
    """(energy, norm^2) of ``u`` on the cross and summed over square + arms."""
    us, ua = restriction(cross, square) @ u, restriction(cross, arms) @ u
    whole = (u @ (cross.stiffness @ u), u @ (cross.mass @ u))
    parts = (us @ (square.stiffness @ us) + ua @ (arms.stiffness @ ua),
             us @ (square.mass @ us) + ua @ (arms.mass @ ua))
    return whole, parts


def bracketing_counts(cross, square, arms, energies):
    """Inertia counts of the cross and of both pieces at each energy."""
    rows = []
    for E in energies:
        nc = count_below_perturbed(cross.stiffness, cross.mass, E)
        ns = count_below_perturbed(square.stiffness, square.mass, E)
        na = count_below_perturbed(arms.stiffness, arms.mass, E)
        rows.append({"E": float(E), "cross": nc, "square": ns, "arms": na,
                     "holds": nc <= ns + na})
    return rows


def minmax_domination(pair_values, cross_values, slack: float = 0.0):
    """Per-index check ``pair[n] >= cross[n] - slack``."""
    n = min(len(pair_values), len(cross_values))
    return [bool(pair_values[i] >= cross_values[i] - slack) for i in range(n)]

"""Domains of the hard-wall pair problem and their criss-cross triangulations.

Every domain handled here is a finite union of convex pieces, each piece an
intersection of open half-planes whose boundary lines belong to the four
families ``x = c``, ``y = c``, ``x - y = c`` and ``x + y = c``.  On a square
grid whose cells are split into four triangles through the cell centre, all
four families are unions of mesh edges, so the discrete boundaries are exact.

Node positions are carried internally as integer keys in units of half a grid
cell; cell corners have even keys and cell centres odd keys.
"""
from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)
_INT_TOL = 1e-9
_KEY_SPAN = 1 << 32


class GeometryError(ValueError):
    """Raised for parameter combinations that cannot be meshed exactly."""


class DomainKind(str, enum.Enum):
    PAIR = "pair"
    CROSS_DIAGONAL = "cross-diag"
    CROSS_AXIS = "cross-axis"
    NEUMANN_SQUARE = "square"
    ARMS = "arms"


SECTORS = ("full", "symmetric", "antisymmetric")
_SECTOR_ALIASES = {
    "full": "full", "0": "full", "j0": "full",
    "symmetric": "symmetric", "s": "symmetric",
    "antisymmetric": "antisymmetric", "a": "antisymmetric",
}


def normalize_sector(sector: str) -> str:
    try:
        return _SECTOR_ALIASES[str(sector).lower()]
    except KeyError:
        raise ValueError(f"unknown sector {sector!r}; expected one of {SECTORS}") from None


def _as_int(value: float, what: str) -> int:
    n = round(value)
    if n < 1 or abs(value - n) > _INT_TOL * max(1.0, abs(value)):
        raise GeometryError(f"{what} = {value:.12g} is not a positive integer")
    return int(n)


@dataclass(frozen=True)
class PairParameters:
    """Pair extension ``d``, truncation distance ``L`` and mesh spacing ``h``."""

    d: float
    L: float
    h: float

    def __post_init__(self):
        if not self.d > 0 or not self.h > 0:
            raise GeometryError("d and h must be positive")
        if self.L < 4 * self.d * (1 - _INT_TOL):
            raise GeometryError(f"truncation L={self.L} must be at least 4*d={4 * self.d}")
        _as_int(self.d / self.h, "d/h")
        _as_int(self.L / self.h, "L/h")

    @property
    def cells_per_d(self) -> int:
        return _as_int(self.d / self.h, "d/h")

    @property
    def cells_per_L(self) -> int:
        return _as_int(self.L / self.h, "L/h")

    @property
    def coarse(self) -> bool:
        return self.cells_per_d == 1


class BoundaryTag(NamedTuple):
    family: str  # "D" or "N"
    origin: str


HARD_WALL = BoundaryTag("D", "hard-wall |x-y|=d")
CROSS_WALL = BoundaryTag("D", "strip wall")
CAP = BoundaryTag("D", "truncation cap")
HALF_LINE_WALL = BoundaryTag("N", "half-line wall")
SQUARE_SIDE = BoundaryTag("N", "square side")
ARM_INTERFACE = BoundaryTag("N", "arm interface")
DIAGONAL_N = BoundaryTag("N", "exchange-diagonal x=y")
DIAGONAL_D = BoundaryTag("D", "exchange-diagonal x=y")


class Constraint(NamedTuple):
    """Open half-plane ``a*X + b*Y < c`` in grid units, with the tag of its line."""

    a: int
    b: int
    c: int
    tag: BoundaryTag


@dataclass(frozen=True)
class DomainSpec:
    """One of the five domains, truncated and ready for meshing.

    ``scale`` multiplies ``d`` (0.5 realises the half-size cross used for the
    antisymmetric comparison).  ``sector`` selects the half-domain ``y > x``
    of the pair domain for the exchange-symmetric and antisymmetric sectors.
    ``snapped`` only matters for the Neumann square: a standalone square is
    meshed at its exact half-width ``d/sqrt(2)`` with a slightly adjusted
    spacing, a snapped one uses the same grid-line half-width as the cross.
    """

    kind: DomainKind
    params: PairParameters
    scale: float = 1.0
    sector: str = "full"
    snapped: bool = False
    pieces: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        object.__setattr__(self, "sector", normalize_sector(self.sector))
        if self.scale not in (1.0, 0.5):
            raise GeometryError("scale must be 1 or 1/2")
        if self.scale == 0.5 and self.kind not in (DomainKind.CROSS_DIAGONAL, DomainKind.CROSS_AXIS):
            raise GeometryError("the d/2 variant exists only for cross domains")
        if self.sector != "full" and self.kind is not DomainKind.PAIR:
            raise GeometryError("symmetry sectors apply only to the pair domain")
        if self.kind in (DomainKind.CROSS_AXIS, DomainKind.ARMS):
            object.__setattr__(self, "snapped", True)
        if self.scale == 0.5:
            _as_int(self.params.d / (2 * self.params.h), "d/(2h)")
        object.__setattr__(self, "pieces", self._build_pieces())

    # -- sizes -------------------------------------------------------------
    @property
    def d(self) -> float:
        return self.params.d * self.scale

    @property
    def spacing(self) -> float:
        """Grid spacing actually used by the triangulation."""
        if self.kind is DomainKind.NEUMANN_SQUARE and not self.snapped:
            return self.half_width / self._square_cells()
        return self.params.h

    def _square_cells(self) -> int:
        return max(1, round(self.d / (SQRT2 * self.params.h)))

    @property
    def half_width(self) -> float | None:
        """Strip half-width of the axis-aligned domains (None otherwise)."""
        if self.kind is DomainKind.NEUMANN_SQUARE and not self.snapped:
            return self.d / SQRT2
        if self.kind in (DomainKind.CROSS_AXIS, DomainKind.ARMS, DomainKind.NEUMANN_SQUARE):
            return self._square_cells() * self.params.h
        return None

    @property
    def area(self) -> float:
        """Analytic area of the truncated domain."""
        d, L = self.d, self.params.L
        w = self.half_width
        if self.kind is DomainKind.PAIR:
            full = 2 * d * L - d * d / 2
            return full if self.sector == "full" else full / 2
        if self.kind is DomainKind.CROSS_DIAGONAL:
            return 8 * d * L - 2 * d * d
        if self.kind is DomainKind.CROSS_AXIS:
            return 8 * w * L - 4 * w * w
        if self.kind is DomainKind.NEUMANN_SQUARE:
            return 4 * w * w
        return 8 * w * (L - w)

    # -- constraints -------------------------------------------------------
    def _build_pieces(self):
        p = self.params
        C = Constraint
        if self.kind is DomainKind.PAIR:
            n, m = p.cells_per_d, 2 * p.cells_per_L
            piece = [C(-1, 0, 0, HALF_LINE_WALL), C(0, -1, 0, HALF_LINE_WALL),
                     C(1, -1, n, HARD_WALL), C(-1, 1, n, HARD_WALL), C(1, 1, m, CAP)]
            if self.sector != "full":
                diag = DIAGONAL_N if self.sector == "symmetric" else DIAGONAL_D
                piece.append(C(1, -1, 0, diag))
            return (tuple(piece),)
        if self.kind is DomainKind.CROSS_DIAGONAL:
            n = _as_int(self.d / p.h, "scaled d/h")
            m = 2 * p.cells_per_L
            arm1 = (C(1, -1, n, HARD_WALL), C(-1, 1, n, HARD_WALL), C(1, 1, m, CAP), C(-1, -1, m, CAP))
            arm2 = (C(1, 1, n, HARD_WALL), C(-1, -1, n, HARD_WALL), C(1, -1, m, CAP), C(-1, 1, m, CAP))
            return arm1, arm2
        w = self._square_cells()
        if self.kind is DomainKind.NEUMANN_SQUARE:
            return ((C(1, 0, w, SQUARE_SIDE), C(-1, 0, w, SQUARE_SIDE),
                     C(0, 1, w, SQUARE_SIDE), C(0, -1, w, SQUARE_SIDE)),)
        n_L = p.cells_per_L
        if w >= n_L:
            raise GeometryError("strip half-width must be smaller than the truncation distance")
        if self.kind is DomainKind.CROSS_AXIS:
            horizontal = (C(0, 1, w, CROSS_WALL), C(0, -1, w, CROSS_WALL),
                          C(1, 0, n_L, CAP), C(-1, 0, n_L, CAP))
            vertical = (C(1, 0, w, CROSS_WALL), C(-1, 0, w, CROSS_WALL),
                        C(0, 1, n_L, CAP), C(0, -1, n_L, CAP))
            return horizontal, vertical
        arms = []
        for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if sx:
                arms.append((C(-sx, 0, -w, ARM_INTERFACE), C(sx, 0, n_L, CAP),
                             C(0, 1, w, CROSS_WALL), C(0, -1, w, CROSS_WALL)))
            else:
                arms.append((C(0, -sy, -w, ARM_INTERFACE), C(0, sy, n_L, CAP),
                             C(1, 0, w, CROSS_WALL), C(-1, 0, w, CROSS_WALL)))
        return tuple(arms)

    def boundary_lines(self):
        """Distinct ``(a, b, c, tag)`` constraint lines, in physical units."""
        s = self.spacing
        seen = {}
        for piece in self.pieces:
            for con in piece:
                seen.setdefault((con.a, con.b, con.c, con.tag), None)
        return [(a, b, c * s, tag) for (a, b, c, tag) in seen]

    def _bounding_cells(self):
        """Integer box ``[lo, hi]`` (grid units) enclosing every piece."""
        lo, hi = math.inf, -math.inf
        for piece in self.pieces:
            for p, q in itertools.combinations(piece, 2):
                det = p.a * q.b - p.b * q.a
                if det == 0:
                    continue
                x = (p.c * q.b - p.b * q.c) / det
                y = (p.a * q.c - p.c * q.a) / det
                if all(r.a * x + r.b * y <= r.c + 1e-9 for r in piece):
                    lo = min(lo, x, y)
                    hi = max(hi, x, y)
        return math.floor(lo), math.ceil(hi)


def make_domain(kind, params: PairParameters, scale_variant: float = 1.0, *,
                sector: str = "full", snapped: bool = False) -> DomainSpec:
    """Build a :class:`DomainSpec`, validating grid conformity."""
    if not isinstance(params, PairParameters):
        params = PairParameters(*params)
    return DomainSpec(DomainKind(kind), params, float(scale_variant), sector, snapped)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with tagged boundary edges.

    Nodes are ordered lexicographically by ``(y, x)``; triangles are
    counter-clockwise.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: tuple
    element_area: np.ndarray
    keys: np.ndarray
    spacing: float
    domain: DomainSpec | None = None

    def __post_init__(self):
        for name in ("nodes", "triangles", "boundary_edges", "element_area", "keys"):
            getattr(self, name).setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def dirichlet_nodes(self) -> np.ndarray:
        mask = np.array([t.family == "D" for t in self.boundary_tags], dtype=bool)
        if not mask.any():
            return np.empty(0, dtype=np.int64)
        return np.unique(self.boundary_edges[mask].ravel())

    def edges_with(self, family: str | None = None, origin: str | None = None) -> np.ndarray:
        sel = [i for i, t in enumerate(self.boundary_tags)
               if (family is None or t.family == family) and (origin is None or t.origin == origin)]
        return self.boundary_edges[sel]

    def key_index(self) -> dict:
        return {(int(kx), int(ky)): i for i, (kx, ky) in enumerate(self.keys)}

    def locate(self, points) -> np.ndarray:
        """Node indices at physical ``points`` (-1 where there is no node)."""
        k = np.rint(np.asarray(points, dtype=float).reshape(-1, 2) / (self.spacing / 2))
        return lookup_keys(self, k.astype(np.int64))


def triangulate(spec: DomainSpec) -> Mesh:
    """Criss-cross triangulation of ``spec`` with all boundary edges tagged."""
    lo, hi = spec._bounding_cells()
    i, j = np.meshgrid(np.arange(lo, hi), np.arange(lo, hi), indexing="xy")
    i, j = i.ravel(), j.ravel()
    # half-unit keys of the four corners and the centre
    c = [(2 * i, 2 * j), (2 * i + 2, 2 * j), (2 * i + 2, 2 * j + 2), (2 * i, 2 * j + 2)]
    m = (2 * i + 1, 2 * j + 1)
    tri_keys = []
    for q in range(4):
        a, b = c[q], c[(q + 1) % 4]
        tri_keys.append(np.stack([np.stack(a, -1), np.stack(b, -1), np.stack(m, -1)], axis=1))
    tri_keys = np.concatenate(tri_keys, axis=0)  # (T, 3, 2)
    centroid = tri_keys.sum(axis=1) / 6.0  # grid units

    member = np.zeros((len(spec.pieces), len(tri_keys)), dtype=bool)
    for p, piece in enumerate(spec.pieces):
        ok = np.ones(len(tri_keys), dtype=bool)
        for con in piece:
            ok &= con.a * centroid[:, 0] + con.b * centroid[:, 1] < con.c
        member[p] = ok
    keep = member.any(axis=0)
    if not keep.any():
        raise GeometryError("domain contains no grid cell")
    tri_keys = tri_keys[keep]
    member = member[:, keep]

    flat = tri_keys.reshape(-1, 2).astype(np.int64)
    off = int(-flat.min()) + 1
    span = int(flat.max()) + off + 1
    code = (flat[:, 1] + off) * span + (flat[:, 0] + off)
    uniq, inverse = np.unique(code, return_inverse=True)
    keys = np.stack([uniq % span - off, uniq // span - off], axis=1)
    triangles = inverse.reshape(-1, 3).astype(np.int64)
    h = spec.spacing
    nodes = keys * (h / 2.0)

    edges, owner = _boundary_edges(triangles)
    tags = _tag_edges(spec, keys, edges, owner, member)
    e1 = nodes[triangles[:, 1]] - nodes[triangles[:, 0]]
    e2 = nodes[triangles[:, 2]] - nodes[triangles[:, 0]]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    if np.any(area <= 0):
        raise GeometryError("degenerate or inverted triangle")
    if spec.params.coarse:
        warnings.warn("coarse mesh: d/h = 1", stacklevel=2)
    return Mesh(nodes, triangles, edges, tags, area, keys, h, spec)


def _boundary_edges(triangles):
    local = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    owner = np.tile(np.arange(len(triangles)), 3)
    srt = np.sort(local, axis=1)
    uniq, first, counts = np.unique(srt, axis=0, return_index=True, return_counts=True)
    if counts.max() > 2:
        raise GeometryError("non-manifold edge: triangulation is not conforming")
    bnd = counts == 1
    return uniq[bnd], owner[first[bnd]]


def _tag_edges(spec, keys, edges, owner, member):
    tags = [None] * len(edges)
    ka, kb = keys[edges[:, 0]], keys[edges[:, 1]]
    for p, piece in enumerate(spec.pieces):
        in_piece = member[p, owner]
        for con in piece:
            on_line = ((con.a * ka[:, 0] + con.b * ka[:, 1] == 2 * con.c)
                       & (con.a * kb[:, 0] + con.b * kb[:, 1] == 2 * con.c) & in_piece)
            for e in np.flatnonzero(on_line):
                if tags[e] is None:
                    tags[e] = con.tag
    missing = [e for e, t in enumerate(tags) if t is None]
    if missing:
        e = missing[0]
        raise GeometryError(f"boundary edge {tuple(edges[e])} lies on no domain line")
    return tuple(tags)


ISOMETRIES = ("reflect-x-axis", "reflect-y-axis", "reflect-diagonal", "translate-by-(0,-d/2)")


def apply_isometry_keys(keys: np.ndarray, isometry: str, shift: int = 0) -> np.ndarray:
    kx, ky = keys[:, 0], keys[:, 1]
    if isometry == "reflect-x-axis":
        return np.stack([kx, -ky], axis=1)
    if isometry == "reflect-y-axis":
        return np.stack([-kx, ky], axis=1)
    if isometry == "reflect-diagonal":
        return np.stack([ky, kx], axis=1)
    if isometry == "translate-by-(0,-d/2)":
        return np.stack([kx, ky - shift], axis=1)
    raise ValueError(f"unknown isometry {isometry!r}")


def reflect_or_translate_nodes(mesh: Mesh, isometry: str, target: Mesh | None = None,
                               d: float | None = None) -> np.ndarray:
    """Index map ``source node -> target node`` realising an exact isometry.

    ``target`` defaults to ``mesh`` itself.  For the translation the shift is
    ``d/2`` with ``d`` taken from ``mesh.domain`` unless given.
    """
    target = mesh if target is None else target
    if not math.isclose(mesh.spacing, target.spacing, rel_tol=1e-12):
        raise GeometryError("source and target meshes have different spacings")
    shift = 0
    if isometry.startswith("translate"):
        d = mesh.domain.d if d is None else d
        shift = round(d / mesh.spacing)  # d/2 in half-units
        if abs(shift * mesh.spacing - d) > 1e-9 * d or shift % 2:
            raise GeometryError("translation by d/2 is not a grid translation (need d/h even)")
    image = apply_isometry_keys(mesh.keys, isometry, shift)
    out = lookup_keys(target, image)
    bad = np.flatnonzero(out < 0)
    if len(bad):
        x, y = mesh.nodes[bad[0]]
        raise GeometryError(f"node {bad[0]} at ({x:.6g}, {y:.6g}) has no image under {isometry}")
    return out


def _encode(keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    return keys[:, 1] * _KEY_SPAN + keys[:, 0]


def lookup_keys(mesh: Mesh, keys: np.ndarray) -> np.ndarray:
    """Indices of the mesh nodes with the given half-unit keys (-1 if absent)."""
    table = _encode(mesh.keys)  # sorted: nodes are ordered by (y, x)
    query = _encode(keys)
    pos = np.clip(np.searchsorted(table, query), 0, len(table) - 1)
    return np.where(table[pos] == query, pos, -1)


def is_symmetric_under(mesh: Mesh, isometry: str) -> bool:
    try:
        nmap = reflect_or_translate_nodes(mesh, isometry)
    except GeometryError:
        return False
    mapped = np.sort(nmap[mesh.triangles], axis=1)
    return set(map(tuple, mapped)) == set(map(tuple, np.sort(mesh.triangles, axis=1)))


def write_mesh(mesh: Mesh, path) -> None:
    """Plain-text dump: ``N T B`` header, node, triangle and edge lines."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_nodes} {mesh.n_triangles} {len(mesh.boundary_edges)}\n")
        for x, y in mesh.nodes:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"{a} {b} {tag.family}\n")


def read_mesh_dump(path):
    """Parse a dump written by :func:`write_mesh` into plain arrays."""
    with open(path) as fh:
        n, t, b = map(int, fh.readline().split())
        nodes = np.array([list(map(float, fh.readline().split())) for _ in range(n)])
        tris = np.array([list(map(int, fh.readline().split())) for _ in range(t)], dtype=np.int64)
        edges, fam = [], []
        for _ in range(b):
            i, j, tag = fh.readline().split()
            edges.append((int(i), int(j)))
            fam.append(tag)
    return nodes, tris, np.array(edges, dtype=np.int64).reshape(-1, 2), fam

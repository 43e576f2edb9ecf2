"""Geometric filtrations over finite point clouds.

Three constructions are provided, all parametrised by a ball radius r:

* ``alpha_filtration`` -- alpha complex on a Delaunay triangulation
  (ambient dimension 1, 2 or 3; the workhorse).
* ``rips_filtration`` -- Vietoris-Rips, any dimension, combinatorial blow-up
  guarded by a budget.
* ``cech_filtration_bruteforce`` -- exact Cech complex by miniball over every
  vertex subset; exponential, intended as a correctness oracle for tiny
  inputs.

Radii are plain Euclidean radii (not squared).  Numeric predicates use an
absolute tolerance of ``EPS_GEOM`` scaled to the cloud's coordinate range.
"""

from __future__ import annotations

import csv
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay as _SciPyDelaunay
from scipy.spatial import QhullError
from scipy.spatial.distance import pdist, squareform

from .errors import (
    BudgetExceeded,
    DegenerateInput,
    DimensionUnsupported,
    InvalidConfig,
    ParseError,
    TooLarge,
)

EPS_GEOM = 1e-9


def geom_tolerance(points: np.ndarray) -> float:
    """Absolute tolerance for geometric predicates on these coordinates."""
    scale = float(np.abs(points).max()) if points.size else 1.0
    return EPS_GEOM * max(1.0, scale)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite multiset of points in R^d, stored as an (n, d) float array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DegenerateInput("point cloud must be a non-empty 2d array")
        if not np.all(np.isfinite(pts)):
            raise DegenerateInput("point cloud coordinates must be finite")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __eq__(self, other):
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    @classmethod
    def from_csv(cls, path) -> "PointCloud":
        """Read one point per row; a single leading non-numeric row is
        treated as a header."""
        rows = []
        with open(path, "r", newline="") as fh:
            reader = csv.reader(fh)
            for rownum, row in enumerate(reader):
                cells = [c.strip() for c in row if c.strip() != ""]
                if not cells:
                    continue
                try:
                    rows.append(([float(c) for c in cells], rownum))
                except ValueError:
                    if rownum == 0:
                        continue  # header
                    raise ParseError(
                        f"non-numeric value at row {rownum + 1}", position=(rownum, 0)
                    ) from None
        if not rows:
            raise ParseError("no data rows in point cloud file")
        width = len(rows[0][0])
        for values, rownum in rows:
            if len(values) != width:
                raise ParseError(
                    f"row {rownum + 1} has {len(values)} columns, expected {width}",
                    position=(rownum, 0),
                )
        return cls(np.array([v for v, _ in rows], dtype=np.float64))

    def to_csv(self, path) -> None:
        from .fileio import atomic_write_text

        lines = [",".join(repr(float(x)) for x in row) for row in self.points]
        atomic_write_text(path, "\n".join(lines) + "\n")


def as_point_cloud(x) -> PointCloud:
    """Coerce an array-like or PointCloud to a PointCloud."""
    if isinstance(x, PointCloud):
        return x
    return PointCloud(np.asarray(x))


class FilteredComplex:
    """Simplicial complex with a birth radius per cell, grouped by dimension.

    ``cells_by_dim[k]`` is a pair ``(simplices, radii)`` where ``simplices``
    is an (N_k, k+1) int array of vertex indices (each row sorted ascending)
    and ``radii`` the matching birth radii.
    """

    def __init__(self, cells_by_dim: dict):
        if 0 not in cells_by_dim:
            raise InvalidConfig("filtered complex needs 0-cells")
        self._cells = {}
        for k in sorted(cells_by_dim):
            simplices, radii = cells_by_dim[k]
            simplices = np.ascontiguousarray(np.asarray(simplices, dtype=np.int64))
            radii = np.ascontiguousarray(np.asarray(radii, dtype=np.float64))
            if simplices.ndim != 2 or simplices.shape[1] != k + 1:
                raise InvalidConfig(f"dimension-{k} cells must be (N, {k + 1})")
            if radii.shape != (simplices.shape[0],):
                raise InvalidConfig("one radius per simplex required")
            if np.any(radii < 0):
                raise InvalidConfig("birth radii must be non-negative")
            simplices.setflags(write=False)
            radii.setflags(write=False)
            self._cells[k] = (simplices, radii)

    @property
    def maxdim(self) -> int:
        return max(self._cells)

    @property
    def n_vertices(self) -> int:
        return self._cells[0][0].shape[0]

    @property
    def n_simplices(self) -> int:
        return sum(s.shape[0] for s, _ in self._cells.values())

    def dims(self):
        return sorted(self._cells)

    def simplices(self, k: int) -> np.ndarray:
        return self._cells[k][0]

    def radii(self, k: int) -> np.ndarray:
        return self._cells[k][1]

    def cells(self):
        """Yield (vertex_tuple, radius) over all cells, by dimension."""
        for k in sorted(self._cells):
            simplices, radii = self._cells[k]
            for row, r in zip(simplices, radii):
                yield tuple(int(v) for v in row), float(r)

    def check_valid(self, tol: float = 0.0) -> None:
        """Raise InvalidConfig unless faces are present with radii no larger
        than any coface (a genuine filtration)."""
        births = {}
        for cell, r in self.cells():
            if len(set(cell)) != len(cell):
                raise InvalidConfig(f"repeated vertex in cell {cell}")
            births[cell] = r
        verts, vr = self._cells[0]
        if np.any(vr != 0.0):
            raise InvalidConfig("vertices must have radius 0")
        for cell, r in births.items():
            if len(cell) == 1:
                continue
            for face in itertools.combinations(cell, len(cell) - 1):
                if face not in births:
                    raise InvalidConfig(f"face {face} of {cell} missing")
                if births[face] > r + tol:
                    raise InvalidConfig(
                        f"face {face} born at {births[face]} after coface {cell} at {r}"
                    )


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Delaunay triangulation: the cloud plus its maximal cells.

    ``maximal_cells`` is a (T, d+1) int array of vertex indices into the
    cloud, each row sorted ascending, rows in lexicographic order.  When the
    cloud contains exact duplicates, cells reference the first occurrence.
    """

    cloud: PointCloud
    maximal_cells: np.ndarray


def _canonical_cells(cells: np.ndarray) -> np.ndarray:
    cells = np.sort(cells, axis=1)
    order = np.lexsort(cells.T[::-1])
    return np.ascontiguousarray(cells[order])


def _unique_points(points: np.ndarray):
    """Deduplicate exact duplicates; returns (unique_pts, first_index, inverse)."""
    uniq, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    return uniq, first.astype(np.int64), inverse.reshape(-1).astype(np.int64)


def delaunay(cloud) -> Triangulation:
    """Delaunay triangulation in dimension 2 or 3 (Qhull).

    Raises DegenerateInput when the points are affinely dependent (all
    collinear / coplanar) and DimensionUnsupported outside d in {2, 3}.
    """
    pc = as_point_cloud(cloud)
    if pc.dim not in (2, 3):
        raise DimensionUnsupported(f"delaunay supports d in {{2, 3}}, got {pc.dim}")
    uniq, first, _ = _unique_points(pc.points)
    if uniq.shape[0] < pc.dim + 1:
        raise DegenerateInput("fewer distinct points than d + 1")
    try:
        tri = _SciPyDelaunay(uniq)
    except QhullError as exc:
        raise DegenerateInput(f"degenerate point configuration: {exc}") from None
    if tri.simplices.shape[0] == 0:
        raise DegenerateInput("no full-dimensional Delaunay cells")
    cells = first[tri.simplices]
    return Triangulation(cloud=pc, maximal_cells=_canonical_cells(cells))


def _circumspheres(P: np.ndarray):
    """Circumcenters and circumradii for a batch of k-simplices.

    P has shape (N, k+1, d) with affinely independent rows per simplex.
    """
    p0 = P[:, :1, :]
    U = P[:, 1:, :] - p0
    G = 2.0 * (U @ np.swapaxes(U, 1, 2))
    sq = np.einsum("nkd,nkd->nk", U, U)
    try:
        lam = np.linalg.solve(G, sq[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise DegenerateInput("degenerate simplex (affinely dependent vertices)") from None
    delta = np.einsum("nk,nkd->nd", lam, U)
    centers = p0[:, 0, :] + delta
    radii = np.sqrt(np.einsum("nd,nd->n", delta, delta))
    return centers, radii


def circumsphere(points):
    """Circumscribed sphere of up to d+1 points; returns (center, radius).

    Uses a least-squares solve so affinely dependent inputs fall back to the
    minimum-norm circumcenter instead of failing.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] < 1:
        raise InvalidConfig("need an (m, d) array of points")
    if P.shape[0] == 1:
        return P[0].copy(), 0.0
    U = P[1:] - P[0]
    G = 2.0 * (U @ U.T)
    sq = np.einsum("kd,kd->k", U, U)
    lam = np.linalg.lstsq(G, sq, rcond=None)[0]
    delta = lam @ U
    center = P[0] + delta
    return center, float(np.linalg.norm(delta))


def miniball(points):
    """Smallest enclosing ball; returns (center, radius).

    Welzl's algorithm with a fixed processing order, so the result is
    deterministic for a given input.  Exponential worst case but fast for
    the small inputs it is meant for (Cech oracles, support checks).
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] < 1:
        raise InvalidConfig("need an (m, d) array of points")
    d = P.shape[1]
    tol = geom_tolerance(P)

    def ball_of(boundary):
        if not boundary:
            return np.zeros(d), -1.0
        return circumsphere(P[boundary])

    def mb(limit, boundary):
        center, radius = ball_of(boundary)
        if len(boundary) == d + 1:
            return center, radius
        for i in range(limit):
            if np.linalg.norm(P[i] - center) > radius + tol:
                center, radius = mb(i, boundary + [i])
        return center, radius

    center, radius = mb(P.shape[0], [])
    return center, max(float(radius), 0.0)


def _faces_with_cofaces(cells: np.ndarray):
    """All codimension-1 faces of the given k-cells.

    Returns (faces, inverse, coface_index, opposite_vertex): ``faces`` unique
    (F, k) rows; for every (cell, dropped-column) instance, ``inverse`` maps
    it to its face row, ``coface_index`` to the cell, ``opposite_vertex`` to
    the dropped vertex.
    """
    n_cells, width = cells.shape
    parts = []
    opposite = []
    for j in range(width):
        keep = [c for c in range(width) if c != j]
        parts.append(cells[:, keep])
        opposite.append(cells[:, j])
    stacked = np.concatenate(parts, axis=0)
    opposite = np.concatenate(opposite, axis=0)
    coface_index = np.tile(np.arange(n_cells, dtype=np.int64), width)
    faces, inverse = np.unique(stacked, axis=0, return_inverse=True)
    return faces, inverse.reshape(-1), coface_index, opposite


def _alpha_cells_general(points: np.ndarray, tol: float) -> dict:
    """Alpha filtration on deduplicated points in dimension 2 or 3.

    Top-down Gabriel propagation: a maximal Delaunay cell is born at its
    circumradius; a lower face is born at its own circumradius when no
    coface's opposite vertex lies inside its circumball, else at the minimum
    birth radius of its cofaces.
    """
    d = points.shape[1]
    tri = _SciPyDelaunay(points)
    if tri.simplices.shape[0] == 0:
        raise DegenerateInput("no full-dimensional Delaunay cells")
    cells = _canonical_cells(tri.simplices.astype(np.int64))

    simplices = {d: cells}
    _, radii_top = _circumspheres(points[cells])
    births = {d: radii_top}

    for k in range(d - 1, 0, -1):
        faces, inverse, coface_index, opposite = _faces_with_cofaces(simplices[k + 1])
        centers, own_radii = _circumspheres(points[faces])
        n_faces = faces.shape[0]

        coface_birth = births[k + 1][coface_index]
        min_coface = np.full(n_faces, np.inf)
        np.minimum.at(min_coface, inverse, coface_birth)

        gap = np.linalg.norm(points[opposite] - centers[inverse], axis=1)
        witnessed = gap < own_radii[inverse] - tol
        non_gabriel = np.zeros(n_faces, dtype=bool)
        np.logical_or.at(non_gabriel, inverse, witnessed)

        simplices[k] = faces
        births[k] = np.where(non_gabriel, min_coface, own_radii)

    n = points.shape[0]
    out = {0: (np.arange(n, dtype=np.int64)[:, None], np.zeros(n))}
    for k in range(1, d + 1):
        out[k] = (simplices[k], births[k])
    return out


def _alpha_cells_1d(points: np.ndarray) -> dict:
    """Path complex on the line: consecutive points joined at half the gap."""
    n = points.shape[0]
    x = points[:, 0]
    order = np.argsort(x, kind="stable")
    out = {0: (np.arange(n, dtype=np.int64)[:, None], np.zeros(n))}
    if n >= 2:
        a, b = order[:-1], order[1:]
        edges = np.sort(np.stack([a, b], axis=1), axis=1)
        radii = (x[b] - x[a]) / 2.0
        keep = np.lexsort(edges.T[::-1])
        out[1] = (edges[keep], radii[keep])
    return out


def _relabel_with_duplicates(cells_by_dim: dict, first: np.ndarray, inverse: np.ndarray, n: int) -> dict:
    """Map unique-point labels back to original indices and re-attach
    duplicate points.

    Each duplicate becomes a vertex plus one radius-0 edge to its group
    representative.  The Euler characteristic of this complex equals that of
    the alpha complex of the full multiset at every radius (a group of g
    coincident points contributes chi = 1 either way, and copies cancel in
    every higher simplex), so curve-level semantics are exact.
    """
    out = {}
    for k, (simplices, radii) in cells_by_dim.items():
        relabeled = first[simplices] if k > 0 else simplices
        if k > 0:
            order = np.lexsort(np.sort(relabeled, axis=1).T[::-1])
            out[k] = (np.sort(relabeled, axis=1)[order], radii[order])
        else:
            out[k] = (simplices, radii)
    out[0] = (np.arange(n, dtype=np.int64)[:, None], np.zeros(n))
    rep = first[inverse]
    dup = np.nonzero(rep != np.arange(n))[0]
    if dup.size:
        extra = np.sort(np.stack([rep[dup], dup], axis=1), axis=1)
        if 1 in out:
            edges = np.concatenate([out[1][0], extra], axis=0)
            radii = np.concatenate([out[1][1], np.zeros(dup.size)])
        else:
            edges, radii = extra, np.zeros(dup.size)
        order = np.lexsort(edges.T[::-1])
        out[1] = (edges[order], radii[order])
    return out


def alpha_filtration(cloud) -> FilteredComplex:
    """Alpha filtration of a cloud in ambient dimension 1, 2 or 3.

    Dimension 1 uses the sorted path complex directly.  Exact duplicate
    points are kept as vertices joined to their representative by radius-0
    edges; see ``_relabel_with_duplicates`` for why this is exact for Euler
    characteristic curves.
    """
    pc = as_point_cloud(cloud)
    d = pc.dim
    if d == 1:
        return FilteredComplex(_alpha_cells_1d(pc.points))
    if d not in (2, 3):
        raise DimensionUnsupported(f"alpha filtration supports d in {{1, 2, 3}}, got {d}")
    uniq, first, inverse = _unique_points(pc.points)
    if uniq.shape[0] < d + 1:
        raise DegenerateInput("fewer distinct points than d + 1")
    tol = geom_tolerance(pc.points)
    try:
        cells = _alpha_cells_general(uniq, tol)
    except QhullError as exc:
        raise DegenerateInput(f"degenerate point configuration: {exc}") from None
    return FilteredComplex(_relabel_with_duplicates(cells, first, inverse, pc.size))


def rips_filtration(cloud, maxdim: int | None = None, budget: int = 1_000_000,
                    warn_at: int = 100_000) -> FilteredComplex:
    """Vietoris-Rips filtration: every vertex subset of size <= maxdim+1
    enters at half its diameter.

    ``maxdim`` defaults to ambient dimension + 1.  Truncating at maxdim
    changes the Euler characteristic whenever larger cliques would appear,
    so curves from different maxdim values are not comparable.  A soft
    ``warn_at`` warns when the top layer alone exceeds it; exceeding
    ``budget`` across all layers raises BudgetExceeded.
    """
    pc = as_point_cloud(cloud)
    n = pc.size
    if maxdim is None:
        maxdim = pc.dim + 1
    if maxdim < 0:
        raise InvalidConfig("maxdim must be >= 0")
    maxdim = min(maxdim, n - 1)
    top = math.comb(n, maxdim + 1)
    if top > warn_at:
        warnings.warn(
            f"Rips layer of dimension {maxdim} has {top} simplices", RuntimeWarning,
            stacklevel=2,
        )
    total = sum(math.comb(n, s + 1) for s in range(maxdim + 1))
    if total > budget:
        raise BudgetExceeded(f"{total} simplices exceed budget {budget}")
    D = squareform(pdist(pc.points))
    out = {0: (np.arange(n, dtype=np.int64)[:, None], np.zeros(n))}
    for k in range(1, maxdim + 1):
        combos = np.array(list(itertools.combinations(range(n), k + 1)), dtype=np.int64)
        if combos.size == 0:
            break
        diam = np.zeros(combos.shape[0])
        for a, b in itertools.combinations(range(k + 1), 2):
            np.maximum(diam, D[combos[:, a], combos[:, b]], out=diam)
        out[k] = (combos, diam / 2.0)
    return FilteredComplex(out)


def cech_filtration_bruteforce(cloud, max_points: int = 20) -> FilteredComplex:
    """Exact Cech filtration: every subset enters at its miniball radius.

    Enumerates the full power set, so inputs above ``max_points`` raise
    TooLarge.  Intended as an oracle for validating the alpha construction.
    """
    pc = as_point_cloud(cloud)
    n = pc.size
    if n > max_points:
        raise TooLarge(f"brute-force Cech limited to {max_points} points, got {n}")
    out = {0: (np.arange(n, dtype=np.int64)[:, None], np.zeros(n))}
    for k in range(1, n):
        combos = np.array(list(itertools.combinations(range(n), k + 1)), dtype=np.int64)
        radii = np.array([miniball(pc.points[c])[1] for c in combos])
        out[k] = (combos, radii)
    return FilteredComplex(out)

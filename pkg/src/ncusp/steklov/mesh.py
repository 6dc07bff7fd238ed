"""Graded triangulations of two-dimensional cuspidal domains.

The mesh is built from horizontal rows of vertices: strip boundaries follow
the geometric grading ratio, every strip is split into equal sub-rows, and
each row carries enough columns to keep cells near unit aspect. Adjacent
rows with different column counts are stitched by a monotone two-pointer
sweep, and a single tip triangle closes the mesh to the origin. Boundary
edges are tagged FLAT (x1 = 0), SLANTED (x1 = x2**alpha), and TOP (x2 = 1),
with outward normals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DegenerateTriangle, RangeViolation
from ..geometry import DomainParams, powt

__all__ = ["TriMesh", "generate_cusp_mesh", "save_mesh", "load_mesh", "mesh_area"]

QUALITY_FLOOR = 1e-6

FLAT, SLANTED, TOP = "FLAT", "SLANTED", "TOP"


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangulation with face-tagged boundary edges.

    vertices        (nv, 2) coordinates
    triangles       (nt, 3) CCW vertex indices
    boundary_edges  (ne, 2) vertex indices, chained per face
    boundary_tags   (ne,) strings FLAT / SLANTED / TOP
    boundary_normals(ne, 2) outward unit normals
    tip_height      height of the lowest full row (the tip triangle sits below)
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    boundary_normals: np.ndarray
    tip_height: float
    min_quality: float
    levels: int | None = None
    grading_ratio: float | None = None

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


def _freeze(mesh: TriMesh) -> TriMesh:
    for arr in (mesh.vertices, mesh.triangles, mesh.boundary_edges,
                mesh.boundary_normals):
        arr.flags.writeable = False
    return mesh


def mesh_area(mesh: TriMesh) -> float:
    """Total area of the triangulation."""
    v = mesh.vertices[mesh.triangles]
    e1 = v[:, 1] - v[:, 0]
    e2 = v[:, 2] - v[:, 0]
    return float(0.5 * np.sum(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]))


def _triangle_quality(vertices: np.ndarray, triangles: np.ndarray) -> float:
    v = vertices[triangles]
    lengths = np.stack([
        np.linalg.norm(v[:, 1] - v[:, 0], axis=1),
        np.linalg.norm(v[:, 2] - v[:, 1], axis=1),
        np.linalg.norm(v[:, 0] - v[:, 2], axis=1),
    ])
    return float(np.min(lengths.min(axis=0) / lengths.max(axis=0)))


def _stitch_band(top_idx, bot_idx, top_frac, bot_frac):
    """Triangulate the band between two vertex rows by monotone advance."""
    tris = []
    ia = ib = 0
    na, nb = len(top_idx) - 1, len(bot_idx) - 1
    while ia < na or ib < nb:
        take_top = ib == nb or (
            ia < na and top_frac[ia + 1] <= bot_frac[ib + 1])
        if take_top:
            tris.append((top_idx[ia], bot_idx[ib], top_idx[ia + 1]))
            ia += 1
        else:
            tris.append((top_idx[ia], bot_idx[ib], bot_idx[ib + 1]))
            ib += 1
    return tris


def generate_cusp_mesh(params: DomainParams, levels: int,
                       grading_ratio: float = 0.5,
                       rows_per_strip: int | None = None,
                       aspect: float = 1.0) -> TriMesh:
    """Structured graded triangulation of the n = 2 cuspidal domain.

    Strip boundaries sit at heights grading_ratio**k, k = 0..levels; rows
    within a strip are uniform and scale with ``levels`` so the polygonal
    boundary converges to the curved profile. The lowest row is forced to a
    single cell and one tip triangle closes the mesh at the origin.
    """
    if params.n != 2:
        raise RangeViolation("n", "mesh generation supports n = 2 only")
    if levels < 3:
        raise RangeViolation("levels", "levels >= 3")
    if not 0.0 < grading_ratio < 1.0:
        raise RangeViolation("grading_ratio", "0 < grading_ratio < 1")
    if aspect <= 0.0:
        raise RangeViolation("aspect", "aspect > 0")
    alpha = params.alpha
    if rows_per_strip is None:
        rows_per_strip = max(4, 4 * levels)

    heights = [1.0]
    for k in range(levels):
        seg = np.linspace(grading_ratio ** k, grading_ratio ** (k + 1),
                          rows_per_strip + 1)
        heights.extend(seg[1:])
    heights = np.asarray(heights)
    tip_height = heights[-1]

    # columns per row: near-unit aspect against the local row spacing
    spacings = np.empty_like(heights)
    spacings[1:] = heights[:-1] - heights[1:]
    spacings[0] = spacings[1]
    cols = np.maximum(
        1, np.rint(powt(heights, alpha) / (aspect * spacings)).astype(int))
    cols[-1] = 1

    verts = []
    row_indices = []
    row_fracs = []
    for t, m in zip(heights, cols):
        fracs = np.linspace(0.0, 1.0, m + 1)
        width = float(powt(t, alpha))
        start = len(verts)
        verts.extend((f * width, t) for f in fracs)
        row_indices.append(list(range(start, start + m + 1)))
        row_fracs.append(fracs)
    origin = len(verts)
    verts.append((0.0, 0.0))
    vertices = np.asarray(verts, dtype=float)

    triangles = []
    for r in range(len(heights) - 1):
        triangles.extend(_stitch_band(row_indices[r], row_indices[r + 1],
                                      row_fracs[r], row_fracs[r + 1]))
    last = row_indices[-1]
    triangles.append((origin, last[1], last[0]))  # single tip triangle
    triangles = np.asarray(triangles, dtype=np.int64)

    quality = _triangle_quality(vertices, triangles)
    if quality < QUALITY_FLOOR:
        raise DegenerateTriangle(
            f"minimum edge ratio {quality:.3e} below {QUALITY_FLOOR:g}")

    edges, tags = [], []
    for r in range(len(heights) - 1):
        edges.append((row_indices[r][0], row_indices[r + 1][0]))
        tags.append(FLAT)
    edges.append((row_indices[-1][0], origin))
    tags.append(FLAT)
    for r in range(len(heights) - 1):
        edges.append((row_indices[r][-1], row_indices[r + 1][-1]))
        tags.append(SLANTED)
    edges.append((row_indices[-1][-1], origin))
    tags.append(SLANTED)
    top_row = row_indices[0]
    for i in range(len(top_row) - 1):
        edges.append((top_row[i], top_row[i + 1]))
        tags.append(TOP)
    edges = np.asarray(edges, dtype=np.int64)
    tags = np.asarray(tags)

    normals = np.empty((edges.shape[0], 2))
    for k, (i, j) in enumerate(edges):
        if tags[k] == FLAT:
            normals[k] = (-1.0, 0.0)
        elif tags[k] == TOP:
            normals[k] = (0.0, 1.0)
        else:
            d = vertices[j] - vertices[i]
            nvec = np.array([-d[1], d[0]])
            if nvec[0] < 0:
                nvec = -nvec
            normals[k] = nvec / np.linalg.norm(nvec)

    return _freeze(TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=edges,
        boundary_tags=tags,
        boundary_normals=normals,
        tip_height=float(tip_height),
        min_quality=quality,
        levels=levels,
        grading_ratio=grading_ratio,
    ))


# --------------------------------------------------------------------------
# text format "ncusp-mesh v1"
# --------------------------------------------------------------------------

def save_mesh(mesh: TriMesh, path) -> None:
    """Write the mesh in the ncusp-mesh v1 text format."""
    lines = ["ncusp-mesh v1"]
    for x1, x2 in mesh.vertices:
        lines.append(f"v {float(x1)!r} {float(x2)!r}")
    for i, j, k in mesh.triangles:
        lines.append(f"t {int(i)} {int(j)} {int(k)}")
    for (i, j), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"b {int(i)} {int(j)} {tag}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path) -> TriMesh:
    """Read a mesh in the ncusp-mesh v1 text format; normals are recomputed."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "ncusp-mesh v1":
        raise ConfigError("not an ncusp-mesh v1 file")
    verts, tris, edges, tags = [], [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "v" and len(parts) == 3:
            verts.append((float(parts[1]), float(parts[2])))
        elif parts[0] == "t" and len(parts) == 4:
            tris.append(tuple(int(x) for x in parts[1:]))
        elif parts[0] == "b" and len(parts) == 4:
            if parts[3] not in (FLAT, SLANTED, TOP):
                raise ConfigError(f"unknown boundary tag {parts[3]}")
            edges.append((int(parts[1]), int(parts[2])))
            tags.append(parts[3])
        else:
            raise ConfigError(f"malformed mesh line: {ln}")
    vertices = np.asarray(verts, dtype=float)
    triangles = np.asarray(tris, dtype=np.int64)
    edge_arr = np.asarray(edges, dtype=np.int64)
    tag_arr = np.asarray(tags)
    normals = np.empty((edge_arr.shape[0], 2))
    for k, (i, j) in enumerate(edge_arr):
        if tag_arr[k] == FLAT:
            normals[k] = (-1.0, 0.0)
        elif tag_arr[k] == TOP:
            normals[k] = (0.0, 1.0)
        else:
            d = vertices[j] - vertices[i]
            nvec = np.array([-d[1], d[0]])
            if nvec[0] < 0:
                nvec = -nvec
            normals[k] = nvec / np.linalg.norm(nvec)
    heights = vertices[:, 1]
    positive = heights[np.unique(edge_arr.ravel())]
    positive = positive[positive > 0.0]
    tip = float(positive.min()) if positive.size else 0.0
    return _freeze(TriMesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=edge_arr,
        boundary_tags=tag_arr,
        boundary_normals=normals,
        tip_height=tip,
        min_quality=_triangle_quality(vertices, triangles),
    ))

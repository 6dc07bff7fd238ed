import numpy as np
import pytest

from ncusp.errors import ConfigError, DegenerateTriangle, RangeViolation
from ncusp.geometry import powt, validate_params
from ncusp.steklov.mesh import (
    FLAT,
    SLANTED,
    TOP,
    generate_cusp_mesh,
    load_mesh,
    mesh_area,
    save_mesh,
)


def _chain_is_closed(mesh, tag):
    edges = mesh.boundary_edges[mesh.boundary_tags == tag]
    # every chain vertex except the two ends appears exactly twice
    counts = np.bincount(edges.ravel(), minlength=mesh.num_vertices)
    interior = counts == 2
    ends = np.where(counts == 1)[0]
    return len(ends) == 2, ends


class TestGeneration:
    def test_simplex_tags_and_bounds(self, simplex_params):
        m = generate_cusp_mesh(simplex_params, levels=3, grading_ratio=0.5)
        assert set(m.boundary_tags) == {FLAT, SLANTED, TOP}
        assert np.all(m.vertices[:, 0] <= m.vertices[:, 1] + 1e-12)
        assert mesh_area(m) == pytest.approx(0.5, abs=1e-14)

    def test_slanted_chain_on_profile(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=8)
        sl = np.unique(m.boundary_edges[m.boundary_tags == SLANTED])
        v = m.vertices[sl]
        assert np.abs(v[:, 0] - v[:, 1] ** 2).max() < 1e-12

    def test_vertices_inside_domain(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=8)
        x1, x2 = m.vertices[:, 0], m.vertices[:, 1]
        assert np.all(x2 >= -1e-12) and np.all(x2 <= 1 + 1e-12)
        pos = x2 > 0
        assert np.all(x1[pos] <= powt(x2[pos], 2.0) + 1e-12)
        assert np.all(x1 >= -1e-12)

    def test_area_converges(self, p1_params):
        errs = []
        for lv in (4, 7, 10):
            m = generate_cusp_mesh(p1_params, levels=lv)
            errs.append(abs(mesh_area(m) - 1 / 3) * 3)
        assert errs[0] > errs[1] > errs[2]
        assert errs[-1] < 1e-3

    def test_positive_orientation(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=6)
        v = m.vertices[m.triangles]
        cross = (v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1]) \
            - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1])
        assert np.all(cross > 0)

    def test_quality_reported(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=6)
        assert 1e-6 < m.min_quality < 1.0

    def test_boundary_chains_closed(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=5)
        origin = np.where((m.vertices == 0).all(axis=1))[0][0]
        for tag in (FLAT, SLANTED):
            ok, ends = _chain_is_closed(m, tag)
            assert ok
            assert origin in m.boundary_edges[m.boundary_tags == tag].ravel()
        ok, _ = _chain_is_closed(m, TOP)
        assert ok

    def test_single_tip_triangle(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=5)
        origin = np.where((m.vertices == 0).all(axis=1))[0][0]
        tip_tris = np.sum((m.triangles == origin).any(axis=1))
        assert tip_tris == 1

    def test_outward_normals(self, p1_params):
        # outward means pointing away from the third vertex of the triangle
        # that owns the edge
        m = generate_cusp_mesh(p1_params, levels=5)
        owner = {}
        for tri in m.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                owner[frozenset((tri[a], tri[b]))] = tri
        for (i, j), nvec in zip(m.boundary_edges, m.boundary_normals):
            tri = owner[frozenset((i, j))]
            third = [v for v in tri if v not in (i, j)][0]
            mid = 0.5 * (m.vertices[i] + m.vertices[j])
            assert np.dot(nvec, mid - m.vertices[third]) > 0
            assert np.linalg.norm(nvec) == pytest.approx(1.0)

    def test_validation(self, p1_params, p2_params):
        with pytest.raises(RangeViolation):
            generate_cusp_mesh(p1_params, levels=2)
        with pytest.raises(RangeViolation):
            generate_cusp_mesh(p1_params, levels=6, grading_ratio=1.2)
        with pytest.raises(RangeViolation):
            generate_cusp_mesh(p2_params, levels=6)

    def test_dof_scale_at_levels_10(self, p1_params):
        m = generate_cusp_mesh(p1_params, levels=10)
        assert 3000 < m.num_vertices < 8000  # the "about 5k unknowns" regime

    def test_needle_thin_tip_rejected(self):
        # a gamma = 8 cusp at depth produces edge ratios below the quality
        # floor; generation must refuse rather than emit slivers
        params = validate_params(2, 8.0, 1.5, 2.0, usage="steklov")
        with pytest.raises(DegenerateTriangle):
            generate_cusp_mesh(params, levels=8)
        # shallow depth keeps the tip triangle above the floor
        m = generate_cusp_mesh(params, levels=3)
        assert m.min_quality > 1e-6


class TestMeshIO:
    def test_roundtrip(self, p1_params, tmp_path):
        m = generate_cusp_mesh(p1_params, levels=5)
        path = tmp_path / "mesh.txt"
        save_mesh(m, path)
        m2 = load_mesh(path)
        assert np.array_equal(m.vertices, m2.vertices)
        assert np.array_equal(m.triangles, m2.triangles)
        assert np.array_equal(m.boundary_edges, m2.boundary_edges)
        assert np.all(m.boundary_tags == m2.boundary_tags)
        assert m2.tip_height == pytest.approx(m.tip_height)

    def test_header_line(self, p1_params, tmp_path):
        m = generate_cusp_mesh(p1_params, levels=4)
        path = tmp_path / "mesh.txt"
        save_mesh(m, path)
        assert path.read_text().splitlines()[0] == "ncusp-mesh v1"

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("nope v0\nv 0 0\n")
        with pytest.raises(ConfigError):
            load_mesh(path)

    def test_rejects_bad_tag(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("ncusp-mesh v1\nv 0.0 0.0\nv 1.0 1.0\nb 0 1 WALL\n")
        with pytest.raises(ConfigError):
            load_mesh(path)

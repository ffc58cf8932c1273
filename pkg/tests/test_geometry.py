import math

import numpy as np
import pytest

from robinopt import Domain, GeometryError, Mesh, MeshResourceError
from robinopt import generate_mesh, metrics, parse_domain


def shoelace(verts):
    s = 0.0
    n = len(verts)
    for i in range(n):
        x0, y0 = verts[i]
        x1, y1 = verts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def test_metrics_disk():
    m = metrics(Domain.disk(1.0))
    assert m.volume == pytest.approx(math.pi, abs=1e-15)
    assert m.perimeter == pytest.approx(2 * math.pi, abs=1e-15)
    assert m.curvature_integral == pytest.approx(2 * math.pi, abs=1e-15)
    assert m.corner_angles == ()


def test_metrics_unit_square():
    m = metrics(Domain.rectangle(1.0, 1.0))
    assert (m.volume, m.perimeter, m.curvature_integral) == (1.0, 4.0, 0.0)
    assert m.corner_angles == (math.pi / 2,) * 4


def test_metrics_annulus_per_circle_curvature():
    # each boundary circle contributes 2 pi
    m = metrics(Domain.annulus(2.0, 1.0))
    assert m.volume == pytest.approx(3 * math.pi)
    assert m.perimeter == pytest.approx(6 * math.pi)
    assert m.curvature_integral == pytest.approx(4 * math.pi)


def test_metrics_square_as_ngon_matches_shoelace():
    dom = Domain.regular_polygon(4, math.sqrt(2) / 2)
    m = metrics(dom)
    verts = [(math.sqrt(2) / 2 * math.cos(2 * math.pi * k / 4),
              math.sqrt(2) / 2 * math.sin(2 * math.pi * k / 4))
             for k in range(4)]
    assert m.volume == pytest.approx(shoelace(verts), abs=1e-14)
    assert m.volume == pytest.approx(1.0, abs=1e-14)


def test_metrics_lshape():
    m = metrics(Domain.lshape())
    assert (m.volume, m.perimeter) == (3.0, 8.0)
    assert sorted(m.corner_angles)[-1] == pytest.approx(3 * math.pi / 2)
    assert len(m.corner_angles) == 6


def test_metrics_pure():
    a = metrics(Domain.annulus(2.0, 1.0))
    b = metrics(Domain.annulus(2.0, 1.0))
    assert a == b


def test_domain_validation():
    with pytest.raises(GeometryError):
        Domain.disk(0.0)
    with pytest.raises(GeometryError):
        Domain.annulus(1.0, 2.0)
    with pytest.raises(GeometryError):
        Domain.regular_polygon(2, 1.0)
    with pytest.raises(GeometryError):
        Domain.polygon([(0, 0), (1, 0)])
    # self-intersecting bowtie
    with pytest.raises(GeometryError):
        Domain.polygon([(0, 0), (1, 1), (1, 0), (0, 1)])


def test_polygon_orientation_normalized():
    dom = Domain.polygon([(0, 1), (1, 1), (1, 0), (0, 0)])  # clockwise input
    assert metrics(dom).volume == pytest.approx(1.0)


def test_mesh_invariants_across_catalogue(catalogue):
    for name, dom in catalogue.items():
        mesh = generate_mesh(dom, 0.1)
        assert mesh.triangle_areas().min() > 0, name
        # boundary edges chain into closed loops covering boundary_nodes
        loops = mesh.boundary_loops()
        assert sum(len(l) for l in loops) == len(mesh.boundary_nodes), name


def test_mesh_area_and_perimeter_convergence_disk():
    dom = Domain.disk(1.0)
    errs_a, errs_p = [], []
    for h in (0.2, 0.1, 0.05):
        mesh = generate_mesh(dom, h)
        errs_a.append(abs(mesh.area() - math.pi))
        errs_p.append(abs(mesh.boundary_length() - 2 * math.pi))
    for errs in (errs_a, errs_p):
        rate = math.log2(errs[1] / errs[2])
        assert rate >= 1.9, errs


def test_mesh_exact_for_polygons(catalogue):
    for name in ("rect", "ngon", "lshape"):
        m = metrics(catalogue[name])
        mesh = generate_mesh(catalogue[name], 0.13)
        assert abs(mesh.area() - m.volume) < 1e-12, name
        assert abs(mesh.boundary_length() - m.perimeter) < 1e-12, name


def test_rectangle_quarter_h_exact_grid():
    mesh = generate_mesh(Domain.rectangle(1.0, 1.0), 0.25)
    assert mesh.area() == 1.0


def test_disk_mesh_area_within_one_percent_at_h01():
    mesh = generate_mesh(Domain.disk(1.0), 0.1)
    assert abs(mesh.area() - math.pi) / math.pi < 0.01


def test_boundary_nodes_on_exact_boundary():
    mesh = generate_mesh(Domain.disk(1.0), 0.07)
    r = np.linalg.norm(mesh.nodes[mesh.boundary_nodes], axis=1)
    assert np.abs(r - 1.0).max() < 1e-12

    mesh = generate_mesh(Domain.regular_polygon(6, 1.0), 0.07)
    apo = math.cos(math.pi / 6)
    sector = 2 * math.pi / 6
    for p in mesh.nodes[mesh.boundary_nodes]:
        th = math.atan2(p[1], p[0]) % (2 * math.pi)
        rho = apo / math.cos((th % sector) - sector / 2)
        assert abs(np.linalg.norm(p) - rho) < 1e-12


def test_boundary_grading_quarter_rule(catalogue):
    for name, dom in catalogue.items():
        mesh = generate_mesh(dom, 0.06, boundary_layer_width=0.08)
        assert mesh.h_boundary <= 0.08 / 4 + 1e-12, name


def test_grading_layer_cap():
    with pytest.raises(MeshResourceError, match="cap"):
        generate_mesh(Domain.rectangle(1, 1), 0.1,
                      boundary_layer_width=1e-7)


def test_node_cap():
    with pytest.raises(MeshResourceError, match="node cap"):
        generate_mesh(Domain.disk(1.0), 0.05, node_cap=64)


def test_imported_polygon_mesh_and_grading():
    dom = Domain.polygon([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    mesh = generate_mesh(dom, 0.15)
    assert abs(mesh.area() - 3.0) < 1e-12
    graded = generate_mesh(dom, 0.15, boundary_layer_width=0.2)
    assert graded.h_boundary <= 0.2 / 4 + 1e-12
    assert graded.triangle_areas().min() > 0


def test_mesh_io_roundtrip(tmp_path):
    mesh = generate_mesh(Domain.disk(1.0), 0.15, boundary_layer_width=0.3)
    path = tmp_path / "disk.mesh"
    mesh.save(path)
    # header carries the three counts
    header = path.read_text().splitlines()[0].split()
    assert [int(v) for v in header] == [
        len(mesh.nodes), len(mesh.triangles), len(mesh.boundary_edges)
    ]
    back = Mesh.load(path)
    assert np.array_equal(back.nodes, mesh.nodes)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_edges, mesh.boundary_edges)


def test_mesh_load_truncated(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("5 3 2\n0.0 0.0\n")
    with pytest.raises(GeometryError, match="truncated"):
        Mesh.load(path)


def test_parse_domain():
    assert parse_domain("disk:2").kind == "disk"
    assert parse_domain("annulus:2,1").params == (2.0, 1.0)
    assert parse_domain("rect:1,2").params == (1.0, 2.0)
    assert parse_domain("ngon:5,1").params == (5, 1.0)
    assert parse_domain("lshape").kind == "lshape"
    with pytest.raises(GeometryError):
        parse_domain("torus:1")
    with pytest.raises(GeometryError):
        parse_domain("disk:abc")

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tetrafractal import DomainError, ResourceLimitError
from tetrafractal.geometry import (DISK_RATIO, count_overlaps, derive_dimensions, generate_assembly,
                                   make_tetrahedron, rotor_disk_report, unit_vertex_directions)

EDGE = 0.24455


def test_vertex_directions_are_regular():
    P = unit_vertex_directions()
    assert np.allclose(np.linalg.norm(P, axis=1), 1.0)
    G = P @ P.T
    off = G[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1.0 / 3.0)
    assert np.allclose(P.sum(axis=0), 0.0)
    # apex up, vertex 2 on +x, edge 1-3 parallel to y
    assert np.allclose(P[3], [0, 0, 1])
    assert P[1][1] == pytest.approx(0.0, abs=1e-15) and P[1][0] > 0
    assert P[0][0] == pytest.approx(P[2][0])


def test_edges_have_requested_length():
    g = make_tetrahedron(EDGE)
    v = g.vertices
    d = [np.linalg.norm(v[i] - v[j]) for i in range(4) for j in range(i + 1, 4)]
    assert np.allclose(d, EDGE, rtol=1e-14)


@pytest.mark.parametrize("edge", [0.0, -1.0])
def test_bad_edge_rejected(edge):
    with pytest.raises(DomainError):
        make_tetrahedron(edge)


def test_assembly_counts_and_depth_limit():
    g = make_tetrahedron(1.0)
    for n in range(5):
        asm = generate_assembly(g, n)
        assert len(asm.rotor_positions) == 4 ** n
    with pytest.raises(ResourceLimitError):
        generate_assembly(g, 3, max_depth=2)
    with pytest.raises(DomainError):
        generate_assembly(g, -1)


def test_assembly_children_are_scaled_copies():
    g = make_tetrahedron(1.0)
    a2 = generate_assembly(g, 2).module_poses
    a1 = generate_assembly(g, 1).module_poses
    shift = 2 * g.circumradius * g.vertex_dirs
    for i in range(4):
        assert np.allclose(a2[4 * i:4 * i + 4], a1 + shift[i])


def test_single_module_has_no_pairs():
    rep = rotor_disk_report(generate_assembly(make_tetrahedron(EDGE), 0))
    assert rep["rotor_count"] == 1
    assert rep["min_center_distance"] is None
    assert not rep["overlap_found"]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_disk_ratio_and_tangency(n):
    rep = rotor_disk_report(generate_assembly(make_tetrahedron(EDGE), n))
    assert abs(rep["ratio"] - math.pi / (3 * math.sqrt(3))) < 1e-9
    assert rep["overlap_pairs"] == 0
    # neighbouring disks touch
    assert rep["min_center_distance"] == pytest.approx(2 * rep["rotor_radius"], rel=1e-12)
    assert rep["ratio"] < rep["hex_packing_ratio"]


def test_tetracopter_module_matches_finer_submodule_assembly():
    coarse = generate_assembly(make_tetrahedron(2 * EDGE), 2, module="tetracopter")
    fine = generate_assembly(make_tetrahedron(EDGE), 3)
    a = np.array(sorted(map(tuple, np.round(coarse.rotor_positions, 12))))
    b = np.array(sorted(map(tuple, np.round(fine.rotor_positions, 12))))
    assert np.allclose(a, b)
    assert coarse.rotor_radius == pytest.approx(fine.rotor_radius)


def test_overlap_counter_brute_force():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, size=(60, 2))
    count, dmin = count_overlaps(pts, 0.05, chunk=7)
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)[np.triu_indices(60, 1)]
    assert count == int(np.sum(d < 0.1 - 1e-12))
    assert dmin == pytest.approx(d.min())


def test_dimensions_hand_values():
    d = derive_dimensions(EDGE)
    assert d.x == pytest.approx(0.141191008330323, abs=1e-12)
    assert d.d == pytest.approx(0.0705955041651615, abs=1e-12)
    assert d.h == pytest.approx(0.199674238865875, abs=1e-12)
    assert d.R == pytest.approx(0.149755679149407, abs=1e-12)
    assert d.phi == pytest.approx(math.asin(1.0 / 3.0))
    assert make_tetrahedron(EDGE).circumradius == pytest.approx(d.R, abs=1e-15)


@given(st.floats(1e-3, 1e3))
def test_dimension_relations(a):
    d = derive_dimensions(a)
    assert d.x == pytest.approx(2 * d.d)
    assert d.R + d.r == pytest.approx(d.h)
    assert d.R == pytest.approx(3 * d.r)
    assert d.x ** 2 + d.h ** 2 == pytest.approx(a ** 2)

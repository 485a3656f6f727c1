import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial.transform import Rotation

from tetrafractal import DomainError, MechanismError
from tetrafractal.config import defaults
from tetrafractal.geometry import make_tetrahedron
from tetrafractal.truss import (Truss, buckling_check, build_truss, calibrated_section,
                                critical_load, determinate_restraint, equilibrium_error,
                                joint_count, member_count, nodal_residual, payload_sweep,
                                scenario, solve, tube_section)

EDGE = 0.4891


@pytest.fixture(scope="module")
def geom():
    return make_tetrahedron(EDGE)


@pytest.mark.parametrize("n", range(0, 6))
def test_counts_and_determinacy(n):
    t = build_truss(make_tetrahedron(1.0), n)
    assert len(t.members) == member_count(n) == 6 * 4 ** n
    assert len(t.nodes) == joint_count(n) == 2 * (4 ** n + 1)
    assert len(t.members) + 6 - 3 * len(t.nodes) == 0
    assert t.check() == []


def single(E=1e9, area=1e-5):
    t = build_truss(make_tetrahedron(1.0), 0, E, area, 1e-10)
    base = [i for i in range(4) if t.nodes[i, 2] < 0]
    apex = int(np.argmax(t.nodes[:, 2]))
    return t, base, apex


def test_apex_load_puts_legs_in_equal_compression():
    t, base, apex = single()
    t.supports = [(i, (0, 1, 2)) for i in base]
    P = 100.0
    t.loads[apex, 2] = -P
    sol = solve(t)
    legs = [m for m, (i, j) in enumerate(t.members) if apex in (i, j)]
    # each leg makes angle acos(sqrt(2/3)) with the vertical
    expected = -P / (3 * math.sqrt(2.0 / 3.0))
    assert np.allclose(sol.axial_forces[legs], expected, rtol=1e-10)
    others = [m for m in range(6) if m not in legs]
    assert np.allclose(sol.axial_forces[others], 0.0, atol=1e-9 * P)
    assert np.allclose(sol.reactions.sum(axis=0), [0, 0, P])


def test_zero_loads_give_zero_solution():
    t, base, _ = single()
    t.supports = determinate_restraint(t, base)
    sol = solve(t)
    assert not sol.axial_forces.any() and not sol.displacements.any()


@pytest.mark.parametrize("method", ["dense", "sparse"])
def test_mechanism_reported_with_mode(method):
    t, base, apex = single()
    t.supports = [(base[0], (0, 1, 2))]
    t.loads[apex, 2] = -1.0
    with pytest.raises(MechanismError) as exc:
        solve(t, method=method)
    assert exc.value.mode.shape == (4, 3)
    assert np.linalg.norm(exc.value.mode) == pytest.approx(1.0)


def test_dense_and_sparse_agree(geom):
    t, _, _ = scenario("top", 2, 12.0, geom)
    a = solve(t, method="dense")
    b = solve(t, method="sparse")
    assert np.abs(a.axial_forces - b.axial_forces).max() <= 1e-9 * np.abs(a.axial_forces).max()
    with pytest.raises(DomainError):
        solve(t, method="qr")


def test_rigid_rotation_leaves_axial_forces(geom):
    t, sol, _ = scenario("bottom3", 1, 5.0, geom)
    R = Rotation.from_euler("xyz", [0.3, -0.7, 1.2]).as_matrix()
    corners = [s[0] for s in t.supports]
    rt = Truss(t.nodes @ R.T, t.members, t.E, t.area, t.I_section, loads=t.loads @ R.T)
    rt.supports = determinate_restraint(rt, corners)
    rsol = solve(rt)
    assert np.allclose(rsol.axial_forces, sol.axial_forces, atol=1e-9 * np.abs(sol.axial_forces).max())


def test_child_matches_standalone_module(geom):
    t, sol, _ = scenario("top", 1, 4.0, geom)
    res_members = {tuple(m): k for k, m in enumerate(t.members.tolist())}
    child_nodes = t.module_nodes[1]
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    ids = [res_members[tuple(sorted((child_nodes[a], child_nodes[b])))] for a, b in pairs]
    # forces the rest of the structure applies to the child at its corners
    sub = Truss(t.nodes[child_nodes], [list(p) for p in pairs], t.E, t.area, t.I_section)
    c = (sub.nodes[[b for _, b in pairs]] - sub.nodes[[a for a, _ in pairs]])
    c /= np.linalg.norm(c, axis=1)[:, None]
    loads = np.zeros((4, 3))
    for k, (a, b) in enumerate(pairs):
        f = sol.axial_forces[ids[k]] * c[k]
        loads[a] -= f
        loads[b] += f
    sub.loads = loads
    base = [i for i in range(4) if sub.nodes[i, 2] < sub.nodes[:, 2].max() - 1e-9]
    sub.supports = determinate_restraint(sub, base)
    s = solve(sub)
    assert np.allclose(s.axial_forces, sol.axial_forces[ids], rtol=1e-6, atol=1e-9)


def test_calibrated_section_hits_target_load(geom):
    sec = calibrated_section(EDGE)
    assert critical_load(sec["E"], sec["I_section"], EDGE, 2.0) == pytest.approx(659.0)
    area, inertia = tube_section(0.005, 0.001)
    assert area == pytest.approx(math.pi / 4 * (0.005 ** 2 - 0.003 ** 2))
    assert inertia == pytest.approx(math.pi / 64 * (0.005 ** 4 - 0.003 ** 4))
    with pytest.raises(DomainError):
        tube_section(0.005, 0.003)
    with pytest.raises(DomainError):
        critical_load(1.0, 0.0, 1.0, 2.0)


@given(st.floats(0.3, 3.0))
def test_length_factor_inverse_square(K):
    t, base, apex = single()
    t.supports = determinate_restraint(t, base)
    t.loads[apex, 2] = -1.0
    sol = solve(t)
    a = buckling_check(t, sol, K)["P_cr"]
    b = buckling_check(t, sol, K / 2)["P_cr"]
    assert np.allclose(b, 4 * a)


def test_rest_case_is_stiff(geom):
    _, _, s = scenario("rest", 2, 0.0, geom)
    assert s["max_displacement_m"] < 1e-6
    assert s["equilibrium_error"] < 1e-8
    cfg = defaults("truss")
    cfg["rest_support"] = "corners"
    _, _, c = scenario("rest", 2, 0.0, geom, cfg)
    assert c["max_displacement_m"] > s["max_displacement_m"]


@pytest.mark.parametrize("kind", ["top", "bottom3"])
def test_hover_cases(geom, kind):
    t, sol, s = scenario(kind, 2, 30.0, geom)
    assert s["payload_ratio"] == pytest.approx(2.53, abs=0.005)
    assert s["reaction_ratio"] < 1e-6
    assert equilibrium_error(t, sol) < 1e-8
    free = np.ones(len(t.nodes), dtype=bool)
    free[[n for n, _ in t.supports]] = False
    assert np.abs(nodal_residual(t, sol)[free]).max() < 1e-8 * np.abs(t.loads).max()
    assert s["buckling_flagged"] == 0
    assert s["thrust_ceiling_exceeded"]
    _, zero, z = scenario(kind, 2, 0.0, geom)
    assert z["max_tension_N"] == 0 and z["max_compression_N"] == 0
    assert not z["thrust_ceiling_exceeded"]


def test_sweep_is_monotone_and_linear(geom):
    rows = payload_sweep("top", 2, [0, 5, 10, 20], geom)
    comp = np.array([r["max_compression_N"] for r in rows])
    assert np.all(np.diff(comp) > 0)
    assert comp[3] == pytest.approx(2 * comp[2])


def test_scenario_errors(geom):
    with pytest.raises(DomainError):
        scenario("side", 2, 1.0, geom)
    with pytest.raises(DomainError):
        scenario("top", 2, -1.0, geom)

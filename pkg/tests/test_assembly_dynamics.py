import numpy as np
import pytest

from tetrafractal import DomainError, UnsupportedCaseError
from tetrafractal.assembly_dynamics import (AssemblyLinearMaps, closed_form_maps, elementary_maps,
                                            growth_report, induced_inf_norm, recurse_maps,
                                            recursive_maps)
from tetrafractal.dynamics import TetracopterParams, linearize
from tetrafractal.geometry import generate_assembly, make_tetrahedron


@pytest.fixture
def setup():
    p = TetracopterParams.default()
    geom = make_tetrahedron(p.a)
    return p, geom, elementary_maps(linearize(p), p)


@pytest.mark.parametrize("n", range(0, 5))
def test_recursion_equals_closed_form(setup, n):
    _, geom, M0 = setup
    a = recursive_maps(M0, geom, n)
    b = closed_form_maps(M0, geom, n)
    for x, y in ((a.Ma, b.Ma), (a.Mb, b.Mb), (a.Mc, b.Mc), (a.Md, b.Md)):
        assert x.shape == y.shape
        assert np.abs(x - y).max() <= 1e-9 * max(np.abs(y).max(), 1e-300)


@pytest.mark.parametrize("n", [1, 2])
def test_moment_map_matches_rotor_lever_arms(setup, n):
    """Mb of the assembly equals the lever-arm sum over the actual rotor positions."""
    p, geom, M0 = setup
    Mb = recursive_maps(M0, geom, n).Mb
    asm = generate_assembly(geom, n, module="tetracopter")
    dT = 2 * p.k_T * linearize(p).omega0
    force = np.zeros((len(asm.rotor_positions), 3))
    force[:, 2] = dT
    direct = np.cross(asm.rotor_positions, force).T
    assert np.allclose(Mb, direct, atol=1e-12 * np.abs(direct).max())


def test_growth_ratios(setup):
    _, geom, M0 = setup
    maps = [recursive_maps(M0, geom, n) for n in range(7)]
    rows = growth_report(maps)
    assert all(r["ratio_Ma"] == pytest.approx(4.0) for r in rows[1:])
    assert abs(rows[5]["ratio_Mb"] - 8.0) < 0.4
    assert abs(rows[6]["ratio_Mb"] - 8.0) < abs(rows[3]["ratio_Mb"] - 8.0)


def test_non_uniform_trim_rejected(setup):
    _, geom, M0 = setup
    bad = AssemblyLinearMaps(0, M0.Ma, M0.Mb, M0.Mc, M0.Md, np.array([1.0, 2.0, 1.0, 1.0]))
    with pytest.raises(UnsupportedCaseError):
        recurse_maps(bad, geom)
    with pytest.raises(DomainError):
        growth_report([M0, recurse_maps(M0, geom)])


def test_inf_norm():
    assert induced_inf_norm(np.array([[1, -2], [3, 0.5]])) == pytest.approx(3.5)

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tetrafractal import DomainError
from tetrafractal.geometry import assembly_poses, make_tetrahedron
from tetrafractal.inertia import (RigidBodyParams, assembly_inertia, assembly_mass, closed_form,
                                  compose_step, iterate, parallel_axis_sum)


def body_from(seed):
    """Random physical body: a cloud of point masses."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(8, 3)) * rng.uniform(0.01, 0.5, size=3)
    m = rng.uniform(0.01, 0.5, size=8)
    J = sum(mi * (p @ p * np.eye(3) - np.outer(p, p)) for mi, p in zip(m, pts))
    return RigidBodyParams(float(m.sum()), J)


@pytest.mark.parametrize("n", range(0, 6))
def test_closed_form_matches_explicit_copies(n):
    """Sum over the actual module positions is an independent oracle."""
    body = body_from(n)
    geom = make_tetrahedron(0.4891)
    explicit = parallel_axis_sum(body, assembly_poses(geom, n))
    closed = assembly_inertia(body, geom.circumradius, n)
    assert closed.mass == pytest.approx(explicit.mass)
    assert np.allclose(closed.inertia, explicit.inertia, rtol=1e-12, atol=0)


@given(st.integers(0, 10_000), st.integers(0, 10), st.floats(0.01, 5.0))
def test_closed_form_equals_recursion(seed, n, r):
    body = body_from(seed)
    a = iterate(body, r, n).inertia
    b = assembly_inertia(body, r, n).inertia
    assert np.abs(a - b).max() <= 1e-9 * np.abs(b).max()


@given(st.integers(0, 10_000), st.integers(0, 8))
def test_assembly_inertia_stays_physical(seed, n):
    J = assembly_inertia(body_from(seed), 0.3, n)
    assert J.check(tol=1e-9) == []


def test_isotropic_module_stays_isotropic():
    body = RigidBodyParams(0.74, 0.012 * np.eye(3))
    J = assembly_inertia(body, 0.3, 4).inertia
    assert np.allclose(J, J[0, 0] * np.eye(3))


def test_closed_form_indexing():
    body = body_from(3)
    assert np.allclose(closed_form(body, 0.2, 0).inertia, compose_step(body, 0, 0.2).inertia)


def test_mass_and_errors():
    assert assembly_mass(0.74, 2) == pytest.approx(11.84)
    with pytest.raises(DomainError):
        assembly_mass(1.0, 31)
    with pytest.raises(DomainError):
        RigidBodyParams(-1.0, np.eye(3))
    with pytest.raises(DomainError):
        RigidBodyParams(1.0, np.eye(2))


def test_check_flags_bad_tensors():
    assert "inertia not symmetric" in RigidBodyParams(1.0, [[1, 0.5, 0], [0, 1, 0], [0, 0, 1]]).check()
    assert "principal moments violate the triangle inequality" in RigidBodyParams(1.0, np.diag([1, 1, 5])).check()

"""Mass and inertia of the n-assembly: parallel-axis recursion and closed form."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

I3 = np.eye(3)
# sum_i p_i p_i^T over the four unit vertex directions
VERTEX_SECOND_MOMENT = 4.0 / 3.0 * I3
MAX_MASS_DEPTH = 30


@dataclass(frozen=True)
class RigidBodyParams:
    mass: float
    inertia: np.ndarray

    def __post_init__(self):
        J = np.asarray(self.inertia, dtype=float)
        if J.shape != (3, 3):
            raise DomainError(f"inertia must be 3x3, got shape {J.shape}")
        if not self.mass > 0:
            raise DomainError(f"mass must be positive, got {self.mass!r}")
        object.__setattr__(self, "inertia", J)

    def check(self, tol=1e-12):
        """Return the list of violated physical invariants (empty when valid)."""
        J = self.inertia
        scale = max(1.0, np.abs(J).max())
        problems = []
        if np.abs(J - J.T).max() > tol * scale:
            problems.append("inertia not symmetric")
        eig = np.linalg.eigvalsh(0.5 * (J + J.T))
        if eig.min() < -tol * scale:
            problems.append("inertia not positive semi-definite")
        a, b, c = np.sort(eig)
        if c > a + b + tol * scale:
            problems.append("principal moments violate the triangle inequality")
        return problems


def assembly_mass(m, n):
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a non-negative integer, got {n!r}")
    if n > MAX_MASS_DEPTH:
        raise DomainError(f"depth {n} exceeds the supported maximum {MAX_MASS_DEPTH}")
    return 4 ** int(n) * m


def compose_step(body, n, r):
    """Combine four copies of the n-assembly ``body`` into the (n+1)-assembly.

    J_{n+1} = 4 J_n + 4**n m_n r**2 (4 I - sum_i p_i p_i^T)
    """
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a non-negative integer, got {n!r}")
    J = 4.0 * body.inertia + 4.0 ** n * body.mass * r ** 2 * (4.0 * I3 - VERTEX_SECOND_MOMENT)
    return RigidBodyParams(4.0 * body.mass, J)


def iterate(body0, r, n):
    """Apply :func:`compose_step` n times starting from the elementary module."""
    body = body0
    for k in range(n):
        body = compose_step(body, k, r)
    return body


def closed_form(body0, r, n):
    """The (n+1)-assembly in closed form.

    J_{n+1} = (2/9) 16**(n+1) m r**2 I + 4**(n+1) (J - (2/9) m r**2 I)
    """
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a non-negative integer, got {n!r}")
    m, J = body0.mass, body0.inertia
    iso = 2.0 / 9.0 * m * r ** 2 * I3
    J_next = 16.0 ** (n + 1) * iso + 4.0 ** (n + 1) * (J - iso)
    return RigidBodyParams(assembly_mass(m, n + 1), J_next)


def assembly_inertia(body0, r, n):
    """J_n for any n >= 0 via the closed form (n = 0 returns the module itself)."""
    if n == 0:
        return body0
    return closed_form(body0, r, n - 1)


def parallel_axis_sum(body0, offsets):
    """Inertia of identical copies of ``body0`` placed at ``offsets`` (about the origin)."""
    offsets = np.asarray(offsets, dtype=float)
    m = body0.mass
    J = len(offsets) * body0.inertia
    J = J + m * (np.sum(offsets ** 2) * I3 - offsets.T @ offsets)
    return RigidBodyParams(m * len(offsets), J)

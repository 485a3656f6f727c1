"""Linearised force and moment maps of the n-assembly at uniform hover trim.

Column k of every map corresponds to rotor k of the assembly, with the
top-level child index as the most significant base-4 digit and the rotor slot
inside the elementary module as the least significant one.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import ALT, SQRT3
from .errors import DomainError, UnsupportedCaseError
from .geometry import skew


@dataclass(frozen=True)
class AssemblyLinearMaps:
    n: int
    Ma: np.ndarray  # thrust sensitivity, 3 x 4**(n+1)
    Mb: np.ndarray  # differential-thrust moment sensitivity
    Mc: np.ndarray  # rotor-torque control sensitivity
    Md: np.ndarray  # rotor-torque body-rate sensitivity, 3 x 3
    u0: object      # trim level: scalar, or per-rotor array

    @property
    def uniform(self):
        u = np.atleast_1d(np.asarray(self.u0, dtype=float))
        return bool(np.all(u == u.flat[0]))

    def to_dict(self):
        def mat(M):
            return {"shape": list(M.shape), "data": np.asarray(M).ravel().tolist()}

        u = np.atleast_1d(np.asarray(self.u0, dtype=float))
        return {"n": self.n, "u0": float(u.flat[0]), "Ma": mat(self.Ma), "Mb": mat(self.Mb),
                "Mc": mat(self.Mc), "Md": mat(self.Md)}


def ones_row(k):
    return np.ones((1, k))


def elementary_maps(model, p):
    """M0 maps of the Tetracopter from its hover linearisation."""
    w0 = model.omega0
    k_T = p.k_T_eff
    Ma = np.zeros((3, 4))
    Ma[2] = 2.0 * k_T * w0
    Mb = np.zeros((3, 4))
    Mb[0] = p.a * k_T * w0 * np.array([-0.5, 0.0, 0.5, 0.0])
    Mb[1] = p.a * k_T * w0 * np.array([0.5, -1.0, 0.5, 0.0]) / SQRT3
    Mc = np.zeros((3, 4))
    Mc[2] = ALT * (2.0 * p.k_D * w0 + p.k_F)
    gyro = p.I_r * w0 * ALT.sum()
    Md = np.array([[0.0, gyro, 0.0], [-gyro, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return AssemblyLinearMaps(0, Ma, Mb, Mc, Md, w0)


def cross_blocks(geom):
    """[[p1]x | [p2]x | [p3]x | [p4]x], shape 3 x 12."""
    return np.hstack([skew(v) for v in geom.vertex_dirs])


def recurse_maps(child, geom):
    """Maps of the (n+1)-assembly from those of the n-assembly."""
    if not child.uniform:
        raise UnsupportedCaseError("only uniform trim controls are supported")
    n = child.n
    Ma = np.kron(ones_row(4), child.Ma)
    Mb = (2 ** n * geom.circumradius * cross_blocks(geom) @ np.kron(np.eye(4), child.Ma)
          + np.kron(ones_row(4), child.Mb))
    Mc = np.kron(ones_row(4), child.Mc)
    # the four children share Omega, so their rate sensitivities add
    Md = 4.0 * child.Md
    return AssemblyLinearMaps(n + 1, Ma, Mb, Mc, Md, child.u0)


def recursive_maps(M0, geom, n):
    maps = M0
    for _ in range(n):
        maps = recurse_maps(maps, geom)
    return maps


def q_matrix(M0, geom):
    """Q = [[p1]x M0a | ... | [p4]x M0a], shape 3 x 16."""
    return np.hstack([skew(v) @ M0.Ma for v in geom.vertex_dirs])


def selector(n, k):
    """1_{4^(n-1-k)} (x) I4 (x) 1_{4^k} (x) I4: picks (level-(k+1) child, rotor slot)."""
    return np.kron(np.kron(np.kron(ones_row(4 ** (n - 1 - k)), np.eye(4)), ones_row(4 ** k)), np.eye(4))


def closed_form_maps(M0, geom, n):
    if int(n) != n or n < 0:
        raise DomainError(f"depth must be a non-negative integer, got {n!r}")
    if not M0.uniform:
        raise UnsupportedCaseError("only uniform trim controls are supported")
    n = int(n)
    rep = ones_row(4 ** n)
    Mb = np.kron(rep, M0.Mb)
    if n > 0:
        Q = q_matrix(M0, geom)
        S = sum(2 ** k * selector(n, k) for k in range(n))
        Mb = Mb + geom.circumradius * Q @ S
    return AssemblyLinearMaps(n, np.kron(rep, M0.Ma), Mb, np.kron(rep, M0.Mc),
                              4 ** n * M0.Md, M0.u0)


def induced_inf_norm(M):
    return float(np.abs(M).sum(axis=1).max())


def growth_report(maps_list, inertia_norms=None):
    """Norms of Ma and Mb for consecutive depths and their ratios.

    ``inertia_norms`` (same length) adds the inertia/moment ratio whose
    consecutive growth measures the time-constant scaling.
    """
    if len(maps_list) < 3:
        raise DomainError("growth report needs at least depths 0..2")
    rows = []
    for i, maps in enumerate(maps_list):
        row = {"n": maps.n, "norm_Ma": induced_inf_norm(maps.Ma), "norm_Mb": induced_inf_norm(maps.Mb)}
        if inertia_norms is not None:
            row["norm_J"] = float(inertia_norms[i])
            row["J_over_Mb"] = row["norm_J"] / row["norm_Mb"]
        if i > 0:
            prev = rows[-1]
            row["ratio_Ma"] = row["norm_Ma"] / prev["norm_Ma"]
            row["ratio_Mb"] = row["norm_Mb"] / prev["norm_Mb"]
            if inertia_norms is not None:
                row["ratio_J_over_Mb"] = row["J_over_Mb"] / prev["J_over_Mb"]
        rows.append(row)
    return rows

"""Pin-jointed truss model of the n-assembly solved by the direct stiffness method."""

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial import cKDTree

from . import config
from .errors import DomainError, MechanismError
from .geometry import assembly_poses

KINDS = ("rest", "top", "bottom3")
MEMBER_PAIRS = list(itertools.combinations(range(4), 2))


@dataclass
class Truss:
    nodes: np.ndarray                 # (N, 3) coordinates [m]
    members: np.ndarray               # (M, 2) node indices
    E: float                          # Young's modulus [Pa]
    area: float                       # [m^2]
    I_section: float                  # second moment of area [m^4]
    supports: list = field(default_factory=list)  # [(node, (axes...)), ...]
    loads: np.ndarray = None          # (N, 3) [N]

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.members = np.asarray(self.members, dtype=int).reshape(-1, 2)
        if self.loads is None:
            self.loads = np.zeros_like(self.nodes)
        self.loads = np.asarray(self.loads, dtype=float)

    @property
    def lengths(self):
        d = self.nodes[self.members[:, 1]] - self.nodes[self.members[:, 0]]
        return np.linalg.norm(d, axis=1)

    @property
    def n_dof(self):
        return 3 * len(self.nodes)

    def check(self):
        """Violated structural invariants (empty when valid)."""
        problems = []
        keys = {tuple(sorted(m)) for m in self.members.tolist()}
        if len(keys) != len(self.members):
            problems.append("duplicate members")
        if np.any(self.lengths <= 0):
            problems.append("zero-length member")
        return problems


@dataclass
class TrussSolution:
    displacements: np.ndarray  # (N, 3)
    axial_forces: np.ndarray   # (M,), tension positive
    reactions: np.ndarray      # (N, 3), non-zero only at supported DOF


def member_count(n):
    return 6 * 4 ** n


def joint_count(n):
    return 2 * (4 ** n + 1)


def build_truss(geom, n, E=1.0, area=1.0, I_section=1.0):
    """Truss of the n-assembly; coincident module corners are merged into one joint."""
    poses = assembly_poses(geom, n)
    corners = (poses[:, None, :] + geom.vertices[None, :, :]).reshape(-1, 3)
    tree = cKDTree(corners)
    tol = 1e-9 * geom.edge_length
    node_of = np.full(len(corners), -1)
    nodes = []
    for i, c in enumerate(corners):
        if node_of[i] >= 0:
            continue
        for j in tree.query_ball_point(c, tol):
            node_of[j] = len(nodes)
        nodes.append(c)
    members = set()
    for t in range(len(poses)):
        for a, b in MEMBER_PAIRS:
            u, v = node_of[4 * t + a], node_of[4 * t + b]
            members.add((min(u, v), max(u, v)))
    truss = Truss(np.array(nodes), np.array(sorted(members)), E, area, I_section)
    truss.module_nodes = node_of.reshape(-1, 4)
    return truss


def _direction_cosines(truss):
    d = truss.nodes[truss.members[:, 1]] - truss.nodes[truss.members[:, 0]]
    L = np.linalg.norm(d, axis=1)
    return d / L[:, None], L


def stiffness_matrix(truss, sparse=False):
    c, L = _direction_cosines(truss)
    k = truss.E * truss.area / L
    blocks = k[:, None, None] * c[:, :, None] * c[:, None, :]
    rows, cols, vals = [], [], []
    for m, (i, j) in enumerate(truss.members):
        for a, b, s in ((i, i, 1.0), (j, j, 1.0), (i, j, -1.0), (j, i, -1.0)):
            r = np.repeat(np.arange(3 * a, 3 * a + 3), 3)
            q = np.tile(np.arange(3 * b, 3 * b + 3), 3)
            rows.append(r)
            cols.append(q)
            vals.append(s * blocks[m].ravel())
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(truss.n_dof, truss.n_dof)).tocsr()
    return K if sparse else K.toarray()


def _fixed_dofs(truss):
    fixed = sorted({3 * node + ax for node, axes in truss.supports for ax in axes})
    return np.array(fixed, dtype=int)


def _mechanism(Kff, free, n_nodes):
    w, v = np.linalg.eigh(Kff)
    mode = np.zeros(3 * n_nodes)
    mode[free] = v[:, 0]
    return MechanismError(
        f"constrained stiffness is singular (smallest eigenvalue {w[0]:.3e}); "
        "supports do not remove all rigid-body modes",
        mode.reshape(-1, 3),
    )


def solve(truss, method="auto", dense_limit=None):
    """Nodal displacements, member forces and support reactions.

    ``method`` is ``"dense"``, ``"sparse"`` or ``"auto"`` (dense up to
    ``dense_limit`` degrees of freedom).
    """
    if dense_limit is None:
        dense_limit = config.defaults("truss")["dense_dof_limit"]
    fixed = _fixed_dofs(truss)
    free = np.setdiff1d(np.arange(truss.n_dof), fixed)
    F = truss.loads.ravel()
    if method == "auto":
        method = "dense" if truss.n_dof <= dense_limit else "sparse"

    u = np.zeros(truss.n_dof)
    if method == "dense":
        K = stiffness_matrix(truss)
        Kff = K[np.ix_(free, free)]
        scale = np.abs(np.diag(Kff)).max()
        w = np.linalg.eigvalsh(Kff)
        if w[0] <= 1e-12 * scale:
            raise _mechanism(Kff, free, len(truss.nodes))
        u[free] = np.linalg.solve(Kff, F[free])
    elif method == "sparse":
        K = stiffness_matrix(truss, sparse=True)
        Kff = K[free][:, free].tocsc()
        try:
            lu = spla.splu(Kff)
        except RuntimeError:
            raise _mechanism(Kff.toarray(), free, len(truss.nodes)) from None
        diag = np.abs(lu.U.diagonal())
        if diag.min() <= 1e-12 * diag.max():
            raise _mechanism(Kff.toarray(), free, len(truss.nodes))
        u[free] = lu.solve(F[free])
    else:
        raise DomainError(f"unknown solve method {method!r}")

    c, L = _direction_cosines(truss)
    ui = u.reshape(-1, 3)
    elong = np.einsum("ij,ij->i", c, ui[truss.members[:, 1]] - ui[truss.members[:, 0]])
    axial = truss.E * truss.area / L * elong
    reactions = np.zeros(truss.n_dof)
    reactions[fixed] = (K @ u)[fixed] - F[fixed]
    return TrussSolution(ui, axial, reactions.reshape(-1, 3))


def nodal_residual(truss, sol):
    """Per-node force imbalance: member forces + applied loads + reactions."""
    c, _ = _direction_cosines(truss)
    res = truss.loads + sol.reactions
    f = sol.axial_forces[:, None] * c
    np.add.at(res, truss.members[:, 0], f)
    np.subtract.at(res, truss.members[:, 1], f)
    return res


def equilibrium_error(truss, sol):
    """Largest nodal imbalance relative to the largest applied load."""
    scale = max(np.linalg.norm(truss.loads, axis=1).max(), 1e-300)
    return float(np.linalg.norm(nodal_residual(truss, sol), axis=1).max() / scale)


# ---------------------------------------------------------------- sections

def tube_section(outer_diameter, wall_thickness):
    if not 0 < wall_thickness <= outer_diameter / 2:
        raise DomainError("wall thickness must be in (0, D/2]")
    d = outer_diameter - 2.0 * wall_thickness
    area = math.pi / 4.0 * (outer_diameter ** 2 - d ** 2)
    inertia = math.pi / 64.0 * (outer_diameter ** 4 - d ** 4)
    return area, inertia


def critical_load(E, I_section, length, K):
    if not I_section > 0:
        raise DomainError("second moment of area must be positive")
    return math.pi ** 2 * E * I_section / (K * length) ** 2


def calibrated_section(member_length, cfg=None):
    """Tube area, inertia and the modulus that gives the target buckling load."""
    cfg = cfg or config.defaults("truss")
    area, inertia = tube_section(cfg["outer_diameter"], cfg["wall_thickness"])
    K = cfg["length_factor"]
    E = cfg["critical_load"] * (K * member_length) ** 2 / (math.pi ** 2 * inertia)
    return {"E": E, "area": area, "I_section": inertia, "length_factor": K,
            "calibrated": True}


def buckling_check(truss, solution, K):
    """Per-member Euler critical load and margin against compression."""
    L = truss.lengths
    p_cr = math.pi ** 2 * truss.E * truss.I_section / (K * L) ** 2
    compression = np.maximum(0.0, -solution.axial_forces)
    margin = p_cr - compression
    return {"P_cr": p_cr, "margin": margin, "flagged": np.flatnonzero(margin <= 0)}


# --------------------------------------------------------------- scenarios

def _base_corners(truss):
    zmin = truss.nodes[:, 2].min()
    base = np.flatnonzero(np.abs(truss.nodes[:, 2] - zmin) <= 1e-9 * np.ptp(truss.nodes))
    best = max(itertools.combinations(base, 3),
               key=lambda c: sum(np.linalg.norm(truss.nodes[a] - truss.nodes[b])
                                 for a, b in itertools.combinations(c, 2)))
    return base, [int(i) for i in best]


def determinate_restraint(truss, corners):
    """3-2-1 restraint on three corners: removes exactly the six rigid-body modes."""
    a, b, c = corners
    ab = truss.nodes[b] - truss.nodes[a]
    lateral = int(np.argmin(np.abs(ab[:2])))
    return [(a, (0, 1, 2)), (b, (lateral, 2)), (c, (2,))]


def scenario(kind, n, payload, geom, cfg=None, section=None, thrust_to_weight_max=None):
    """Build and solve one load case of the n-assembly.

    rest: self weight, base resting on the ground.
    top: hover, payload hung from the apex joint.
    bottom3: hover, payload split over the three base corners.
    Hover thrust balances weight plus payload and is spread evenly over the
    modules, so the restraint reactions vanish.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown scenario {kind!r}; expected one of {KINDS}")
    if payload < 0:
        raise DomainError("payload must be non-negative")
    cfg = cfg or config.defaults("truss")
    g = 9.81
    section = section or calibrated_section(geom.edge_length, cfg)
    truss = build_truss(geom, n, section["E"], section["area"], section["I_section"])
    modules = truss.module_nodes
    n_mod = len(modules)
    module_weight = cfg["module_mass"] * g
    base, corners = _base_corners(truss)
    apex = int(np.argmax(truss.nodes[:, 2]))

    loads = np.zeros_like(truss.nodes)
    per_module_thrust = 0.0
    if kind == "rest":
        np.add.at(loads[:, 2], modules.ravel(), -module_weight / 4.0)
        supports = determinate_restraint(truss, corners)
        if cfg.get("rest_support", "plane") == "plane":
            on_ground = set(base.tolist()) - set(corners)
            supports += [(int(i), (2,)) for i in sorted(on_ground)]
    else:
        per_module_thrust = (n_mod * module_weight + payload * g) / n_mod
        np.add.at(loads[:, 2], modules.ravel(), (per_module_thrust - module_weight) / 4.0)
        if kind == "top":
            loads[apex, 2] -= payload * g
        else:
            for c in corners:
                loads[c, 2] -= payload * g / 3.0
        supports = determinate_restraint(truss, corners)
    truss.supports = supports
    truss.loads = loads
    sol = solve(truss, dense_limit=cfg.get("dense_dof_limit", 390))

    if thrust_to_weight_max is None:
        proto = config.defaults("prototype")
        thrust_to_weight_max = proto["thrust_to_weight"] / proto["throttle"] ** 2
    buck = buckling_check(truss, sol, section["length_factor"])
    total_load = np.abs(loads).sum()
    summary = {
        "kind": kind,
        "n": n,
        "payload_kg": payload,
        "assembly_mass_kg": n_mod * cfg["module_mass"],
        "payload_ratio": payload / (n_mod * cfg["module_mass"]),
        "max_tension_N": float(max(0.0, sol.axial_forces.max())),
        "max_compression_N": float(max(0.0, -sol.axial_forces.min())),
        "max_displacement_m": float(np.linalg.norm(sol.displacements, axis=1).max()),
        "equilibrium_error": equilibrium_error(truss, sol) if total_load > 0 else 0.0,
        "reaction_ratio": float(np.abs(sol.reactions).sum() / total_load) if total_load > 0 else 0.0,
        "min_buckling_margin_N": float(buck["margin"].min()),
        "buckling_flagged": int(len(buck["flagged"])),
        "thrust_ceiling_exceeded": bool(per_module_thrust > thrust_to_weight_max * module_weight),
        "section": section,
    }
    return truss, sol, summary


def payload_sweep(kind, n, payloads, geom, cfg=None):
    rows = []
    for p in payloads:
        _, _, s = scenario(kind, n, float(p), geom, cfg)
        rows.append(s)
    return rows


def member_table(truss, sol, K):
    buck = buckling_check(truss, sol, K)
    L = truss.lengths
    return [
        {"member_id": m, "node_i": int(i), "node_j": int(j), "length_m": float(L[m]),
         "axial_N": float(sol.axial_forces[m]), "P_cr_N": float(buck["P_cr"][m]),
         "margin_N": float(buck["margin"][m])}
        for m, (i, j) in enumerate(truss.members)
    ]


def with_loads(truss, loads, supports):
    return replace(truss, loads=np.asarray(loads, dtype=float), supports=list(supports))

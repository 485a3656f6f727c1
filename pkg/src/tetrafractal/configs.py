"""Propeller configurations of a single tetrahedron carrying one rotor per face."""

import itertools
from dataclasses import dataclass

import numpy as np

from .geometry import unit_vertex_directions

OUTWARD, INWARD = 1, -1
CCW, CW = 1, -1


@dataclass(frozen=True)
class PropConfig:
    directions: tuple  # per face, +1 thrust force outward, -1 inward
    spins: tuple       # per face, +1 CCW, -1 CW seen from outside

    @property
    def outward_count(self):
        return sum(d == OUTWARD for d in self.directions)

    def as_dict(self):
        return {"thrust": ["outward" if d == OUTWARD else "inward" for d in self.directions],
                "spin": ["CCW" if s == CCW else "CW" for s in self.spins]}


@dataclass
class ConfigClass:
    representative: PropConfig
    members: list
    outward_count: int
    lift_factor: float
    up_body: np.ndarray

    @property
    def class_size(self):
        return len(self.members)


def face_normals():
    """Outward unit normal of the face opposite each vertex."""
    return -unit_vertex_directions()


def face_centres(edge=1.0):
    # face centre of the face opposite vertex i sits at inradius along its normal
    return face_normals() * edge * np.sqrt(6.0) / 12.0


def enumerate_all():
    return [PropConfig(d, s) for d in itertools.product((OUTWARD, INWARD), repeat=4)
            for s in itertools.product((CCW, CW), repeat=4)]


def net_force(cfg, speeds_sq=None):
    w = np.ones(4) if speeds_sq is None else np.asarray(speeds_sq, dtype=float)
    return (np.asarray(cfg.directions) * w) @ face_normals()


def net_torque(cfg, speeds_sq=None, torque_ratio=0.05, edge=1.0):
    """Thrust moments about the centroid plus rotor reaction torques."""
    w = np.ones(4) if speeds_sq is None else np.asarray(speeds_sq, dtype=float)
    n = face_normals()
    forces = (np.asarray(cfg.directions) * w)[:, None] * n
    moments = np.cross(face_centres(edge), forces).sum(axis=0)
    reaction = -(torque_ratio * np.asarray(cfg.spins) * w) @ n
    return moments + reaction


def torque_free(cfg):
    """Reaction torques cancel at equal speeds iff the signed normals sum to zero.

    Decided on the sign structure, so it holds for any positive torque ratio.
    """
    s = np.asarray(cfg.spins)
    return bool(np.all(s == s[0]))


def filter_equilibrium(configs):
    """Configurations that can hover at equal rotor speeds.

    Returns (after the torque filter, after the force filter).
    """
    torque_ok = [c for c in configs if torque_free(c)]
    survivors = [c for c in torque_ok if len(set(c.directions)) > 1]
    return torque_ok, survivors


def equilibrium_attitude(cfg):
    """Body-frame unit vector that points up at hover (along the net thrust)."""
    f = net_force(cfg)
    norm = np.linalg.norm(f)
    if norm < 1e-12:
        return None
    return f / norm


def rotation_group():
    """The 12 proper rotations of the tetrahedron as vertex permutations."""
    P = unit_vertex_directions()
    group = []
    for perm in itertools.permutations(range(4)):
        # linear map sending p_i to p_perm[i]; the first three directions span R^3
        R = P[list(perm)][:3].T @ np.linalg.inv(P[:3].T)
        if np.linalg.det(R) > 0 and np.allclose(R @ R.T, np.eye(3), atol=1e-12):
            group.append(perm)
    return group


def act(perm, cfg):
    """Image of a configuration under a vertex permutation."""
    d = [0] * 4
    s = [0] * 4
    for i, j in enumerate(perm):
        d[j] = cfg.directions[i]
        s[j] = cfg.spins[i]
    return PropConfig(tuple(d), tuple(s))


def lift_factor(cfg):
    """Net thrust over single-rotor thrust at equal speeds, along the hover up axis."""
    up = equilibrium_attitude(cfg)
    if up is None:
        return 0.0
    return float(net_force(cfg) @ up)


def reduce_symmetry(survivors, spin=CCW):
    group = rotation_group()
    pool = [c for c in survivors if c.spins[0] == spin]
    classes = []
    seen = set()
    for c in sorted(pool, key=lambda c: (-c.outward_count, tuple(-d for d in c.directions))):
        if c in seen:
            continue
        orbit = sorted({act(g, c) for g in group} & set(pool),
                       key=lambda c: tuple(-d for d in c.directions))
        seen.update(orbit)
        classes.append(ConfigClass(c, orbit, c.outward_count, lift_factor(c), equilibrium_attitude(c)))
    return sorted(classes, key=lambda k: "ABC".index(class_label(k)))


def mirror(cfg):
    return PropConfig(cfg.directions, tuple(-s for s in cfg.spins))


def converse_probe(samples=10000, seed=0, tol=1e-9):
    """Search random unequal speeds for torque-free hover outside the equal-spin set.

    Also solves exactly: the reaction torques vanish only for weights proportional
    to the spin signs, which are admissible (positive) only when all spins agree.
    """
    rng = np.random.default_rng(seed)
    n = face_normals()
    counterexamples = 0
    for _ in range(samples):
        spins = rng.choice([CCW, CW], size=4)
        w = rng.uniform(0.2, 2.0, size=4)
        torque = (spins * w) @ n
        equal = np.allclose(w, w[0]) and np.all(spins == spins[0])
        if np.linalg.norm(torque) < tol * w.max() and not equal:
            counterexamples += 1
    exact = []
    for spins in itertools.product((CCW, CW), repeat=4):
        M = (np.asarray(spins)[:, None] * n).T
        _, sv, vt = np.linalg.svd(M)
        null = vt[-1]
        admissible = bool(np.all(null > 1e-12) or np.all(null < -1e-12))
        exact.append({"spins": list(spins), "positive_speed_solution": admissible})
    return {"samples": samples, "counterexamples": counterexamples,
            "torque_free_spin_patterns": sum(e["positive_speed_solution"] for e in exact),
            "patterns": exact}


def pipeline():
    """Counts and classes of the full enumeration."""
    allc = enumerate_all()
    torque_ok, survivors = filter_equilibrium(allc)
    per_spin = {name: sum(c.spins[0] == s for c in survivors) for name, s in (("CCW", CCW), ("CW", CW))}
    classes = reduce_symmetry(survivors, CCW)
    return {
        "total": len(allc),
        "torque_free": len(torque_ok),
        "force_feasible": len(survivors),
        "per_spin_class": per_spin,
        "classes": classes,
    }


def class_label(cls):
    return {3: "A", 1: "B", 2: "C"}.get(cls.outward_count, "?")


def configs_report(seed=0):
    p = pipeline()
    return {
        "total": p["total"],
        "torque_free": p["torque_free"],
        "force_feasible": p["force_feasible"],
        "per_spin_class": p["per_spin_class"],
        "classes": [
            {"label": class_label(c), "outward_count": c.outward_count, "class_size": c.class_size,
             "representative": c.representative.as_dict(), "up_body": c.up_body.tolist(),
             "lift_factor": c.lift_factor}
            for c in p["classes"]
        ],
        "converse_probe": {k: v for k, v in converse_probe(seed=seed).items() if k != "patterns"},
    }

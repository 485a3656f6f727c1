"""Rotor-failure tolerance of the 16-rotor assembly.

Hover after a set of rotor failures is possible when the allocation system
D F = B has a solution with lb <= F <= ub and F_i = 0 for every failed rotor,
where F holds squared rotor speeds and B = [0, 0, 0, W].
"""

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import config
from .errors import DomainError
from .geometry import generate_assembly, make_tetrahedron

N_ROTORS = 16
# Vehicle rotor i is rotor ROTOR_ORDER[i] of the depth-2 submodule assembly.
# The order groups rotors sharing a roll or pitch moment arm the usual way.
ROTOR_ORDER = (5, 0, 10, 6, 4, 1, 2, 8, 9, 7, 3, 11, 13, 12, 14, 15)
YAW_SIGNS = (1, -1, 1, 1, -1, 1, 1, -1, 1, -1, -1, -1, 1, -1, 1, -1)
THREADS_ENV = "TETRAFRACTAL_THREADS"


def lift_constant(C_L, prop_radius, air_density):
    """k = C_L r^3 rho A / 2 with A the disk area."""
    area = math.pi * prop_radius ** 2
    return 0.5 * C_L * prop_radius ** 3 * air_density * area


def drag_constant(C_D, prop_radius, air_density):
    area = math.pi * prop_radius ** 2
    return 0.5 * C_D * prop_radius ** 3 * air_density * area


@dataclass(frozen=True)
class RotorLayout:
    rx: np.ndarray      # (16,) body x offsets [m]
    ry: np.ndarray      # (16,) body y offsets [m]
    spins: np.ndarray   # (16,) +1 / -1
    k: float
    b: float

    def check(self):
        problems = []
        if len(self.rx) != N_ROTORS or len(self.ry) != N_ROTORS or len(self.spins) != N_ROTORS:
            problems.append("layout must have 16 rotors")
        if int(np.sum(self.spins)) != 0:
            problems.append("spin signs must sum to zero")
        if not (self.k > 0 and self.b > 0):
            problems.append("k and b must be positive")
        return problems


def default_layout(cfg=None):
    """Four Tetracopters of the configured submodule edge, body x and y in the plane."""
    cfg = cfg or config.defaults("faults")
    asm = generate_assembly(make_tetrahedron(cfg["submodule_edge"]), 2)
    pos = asm.rotor_positions[list(ROTOR_ORDER)]
    k = lift_constant(cfg["lift_coefficient"], cfg["prop_radius"], cfg["air_density"])
    b = drag_constant(cfg["drag_coefficient"], cfg["prop_radius"], cfg["air_density"])
    # body x is the assembly -y axis and body y the assembly x axis
    return RotorLayout(rx=-pos[:, 1], ry=pos[:, 0], spins=np.array(YAW_SIGNS), k=k, b=b)


def layout_report(layout):
    return [
        {"rotor": i + 1, "assembly_index": int(ROTOR_ORDER[i]), "r_x": float(layout.rx[i]),
         "r_y": float(layout.ry[i]), "spin": int(layout.spins[i])}
        for i in range(N_ROTORS)
    ]


@dataclass(frozen=True)
class FaultProblem:
    D: np.ndarray
    B_target: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    failed: tuple = ()

    def with_failed(self, failed):
        return replace(self, failed=tuple(sorted(failed)))


@dataclass(frozen=True)
class FaultSolution:
    F: np.ndarray
    residual: float
    feasible: bool
    kkt_residual: float = 0.0
    iterations: int = 0


def build_allocation(layout, m1, g=9.81, lb=0.0, ub=np.inf):
    """Rows: roll L, pitch M, yaw N, thrust Z."""
    if m1 <= 0:
        raise DomainError("mass must be positive")
    D = np.vstack([
        layout.k * layout.ry,
        -layout.k * layout.rx,
        layout.b * np.asarray(layout.spins, dtype=float),
        np.full(N_ROTORS, layout.k),
    ])
    lb = np.broadcast_to(np.asarray(lb, dtype=float), (N_ROTORS,)).copy()
    ub = np.broadcast_to(np.asarray(ub, dtype=float), (N_ROTORS,)).copy()
    if np.any(lb < 0) or np.any(ub < lb):
        raise DomainError("bounds must satisfy 0 <= lb <= ub")
    return FaultProblem(D, np.array([0.0, 0.0, 0.0, m1 * g]), lb, ub)


def hover_square_speed(layout, m1, g=9.81):
    return m1 * g / (N_ROTORS * layout.k)


def calibrated_upper_bound(k, g=9.81, proto=None, module_mass=None):
    """Squared-speed limit of a rotor in free flow.

    The prototype thrust-to-weight at partial throttle is scaled to full
    throttle (thrust ~ throttle^2), shared by the four rotors and divided by
    the mean fraction of thrust they keep inside the frame.
    """
    proto = proto or config.defaults("prototype")
    if module_mass is None:
        module_mass = config.defaults("faults")["module_mass"]
    full = proto["thrust_to_weight"] / proto["throttle"] ** 2
    installed = full * module_mass * g / 4.0
    kept = ((1.0 - proto["top_rotor_thrust_loss"]) + 3.0 * (1.0 - proto["bottom_rotor_thrust_loss"])) / 4.0
    return installed / kept / k


def default_problem(cfg=None, mass=None, ub=None):
    cfg = cfg or config.defaults("faults")
    layout = default_layout(cfg)
    m1 = cfg["mass"] if mass is None else mass
    if ub is None:
        ub = cfg["upper_bound"]
    if ub == "auto":
        ub = calibrated_upper_bound(layout.k)
    return layout, build_allocation(layout, m1, lb=cfg["lower_bound"], ub=float(ub))


# ------------------------------------------------------------------ solver

def bvls(A, b, lo, hi, max_iter=None, tol=1e-12):
    """Bounded-variable least squares by an active-set method.

    Returns (x, iterations).  Variables with lo == hi are fixed.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    As = A / scale
    lo = np.asarray(lo, dtype=float) * scale
    hi = np.asarray(hi, dtype=float) * scale
    max_iter = max_iter or 10 * (n + 1) ** 2

    fixed = lo == hi
    # unconstrained minimum-norm solution first; usually already admissible
    x = np.where(fixed, lo, 0.0)
    if (~fixed).any():
        x[~fixed] = np.linalg.lstsq(As[:, ~fixed], b - As[:, fixed] @ lo[fixed], rcond=None)[0]
        if np.all(x >= lo) and np.all(x <= hi):
            return x / scale, 0
    x = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    free = np.zeros(n, dtype=bool)
    gtol = tol * max(1.0, np.linalg.norm(b))
    it = 0
    while it < max_iter:
        w = As.T @ (b - As @ x)
        at_lo = ~free & ~fixed & (x <= lo)
        at_hi = ~free & ~fixed & (x >= hi)
        viol = np.where(at_lo, w, 0.0) - np.where(at_hi, w, 0.0)
        blocked = np.zeros(n, dtype=bool)
        entered = False
        while True:
            cand = np.where(blocked, 0.0, viol)
            t = int(np.argmax(cand))
            if cand[t] <= gtol:
                break
            trial = free.copy()
            trial[t] = True
            z = _subproblem(As, b, x, trial)
            # the entering variable must move away from its bound
            if (at_lo[t] and z[t] > x[t]) or (at_hi[t] and z[t] < x[t]):
                free = trial
                entered = True
                break
            blocked[t] = True
        if not entered:
            break
        while it < max_iter:
            it += 1
            z = _subproblem(As, b, x, free)
            inside = (z[free] > lo[free]) & (z[free] < hi[free])
            if np.all(inside):
                x[free] = z[free]
                break
            idx = np.flatnonzero(free)
            step = np.ones(len(idx))
            d = z[idx] - x[idx]
            down = d < 0
            up = d > 0
            step[down] = (lo[idx][down] - x[idx][down]) / d[down]
            step[up] = (hi[idx][up] - x[idx][up]) / d[up]
            alpha = float(np.clip(step[~inside].min(), 0.0, 1.0))
            x[idx] = x[idx] + alpha * d
            x = np.clip(x, lo, hi)
            hit = idx[(x[idx] <= lo[idx]) | (x[idx] >= hi[idx])]
            free[hit] = False
            if not free.any():
                break
    return x / scale, it


def _subproblem(A, b, x, free):
    z = x.copy()
    rhs = b - A[:, ~free] @ x[~free]
    z[free] = np.linalg.lstsq(A[:, free], rhs, rcond=None)[0]
    return z


def kkt_residual(A, b, x, lo, hi):
    """Largest first-order optimality violation, relative to |A||b|."""
    g = A.T @ (A @ x - b)
    span = max(np.linalg.norm(A, 2) * max(np.linalg.norm(b), 1e-300), 1e-300)
    fixed = lo == hi
    at_lo = ~fixed & np.isclose(x, lo, rtol=0, atol=1e-12 * np.maximum(1.0, np.abs(lo)))
    at_hi = ~fixed & np.isclose(x, hi, rtol=0, atol=1e-12 * np.maximum(1.0, np.abs(hi)))
    interior = ~fixed & ~at_lo & ~at_hi
    v = np.zeros_like(x)
    v[interior] = np.abs(g[interior])
    v[at_lo] = np.maximum(0.0, -g[at_lo])
    v[at_hi] = np.maximum(0.0, g[at_hi])
    return float(v.max() / span) if len(v) else 0.0


def solve_allocation(problem, tol=1e-6):
    lo = problem.lb.copy()
    hi = problem.ub.copy()
    failed = list(problem.failed)
    lo[failed] = 0.0
    hi[failed] = 0.0
    F, it = bvls(problem.D, problem.B_target, lo, hi)
    F[failed] = 0.0
    res = float(np.linalg.norm(problem.D @ F - problem.B_target))
    feasible = res < tol * np.linalg.norm(problem.B_target)
    return FaultSolution(F, res, bool(feasible), kkt_residual(problem.D, problem.B_target, F, lo, hi), it)


def is_feasible(problem, failed):
    return solve_allocation(problem.with_failed(failed)).feasible


# ------------------------------------------------------------------ search

def symmetries(layout, tol=1e-9):
    """Rotor permutations induced by planar symmetries of the layout.

    A rotation or reflection qualifies when it maps rotor positions onto rotor
    positions and keeps every spin or flips every spin.
    """
    pts = np.column_stack([layout.rx, layout.ry])
    scale = np.abs(pts).max()
    perms = []
    for j in range(6):
        c, s = math.cos(j * math.pi / 3), math.sin(j * math.pi / 3)
        for reflect in (False, True):
            R = np.array([[c, -s], [s, c]])
            if reflect:
                R = R @ np.diag([1.0, -1.0])
            img = pts @ R.T
            d = np.linalg.norm(img[:, None, :] - pts[None, :, :], axis=2)
            perm = d.argmin(axis=1)
            if d[np.arange(N_ROTORS), perm].max() > tol * scale:
                continue
            if len(set(perm.tolist())) != N_ROTORS:
                continue
            mapped = layout.spins[perm]
            if np.array_equal(mapped, layout.spins) or np.array_equal(mapped, -layout.spins):
                perms.append(tuple(int(p) for p in perm))
    return sorted(set(perms))


def _canonical(combo, group):
    return min(tuple(sorted(p[i] for i in combo)) for p in group)


def _threads(threads):
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, threads)


def min_failures(problem, max_card=8, use_symmetry=False, group=None, threads=None):
    """Smallest failure set that makes hover impossible.

    Every level is searched completely so the per-cardinality counts are exact;
    the witness is the first infeasible set in lexicographic order.
    """
    if not 0 <= max_card <= N_ROTORS:
        raise DomainError("max_card must be in 0..16")
    if use_symmetry and group is None:
        raise DomainError("symmetry pruning needs the permutation group")
    threads = _threads(threads)
    counts = []
    for c in range(max_card + 1):
        combos = list(itertools.combinations(range(N_ROTORS), c))
        if use_symmetry:
            canon = {}
            reps = []
            for s in combos:
                r = _canonical(s, group)
                canon[s] = r
                if r == s:
                    reps.append(s)
        else:
            reps = combos
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                verdict = dict(zip(reps, pool.map(lambda s: is_feasible(problem, s), reps)))
        else:
            verdict = {s: is_feasible(problem, s) for s in reps}
        ok = [verdict[canon[s]] if use_symmetry else verdict[s] for s in combos]
        bad = [s for s, f in zip(combos, ok) if not f]
        counts.append({"cardinality": c, "feasible": len(combos) - len(bad),
                       "infeasible": len(bad), "solved": len(reps)})
        if bad:
            return {"minimum": c, "witness": list(bad[0]), "counts": counts, "found": True}
    return {"minimum": None, "witness": None, "counts": counts, "found": False,
            "bound": f">= {max_card + 1}"}


def sensitivity_sweep(layout, m1, ub_ref, scales, max_card=8, lb=0.0):
    rows = []
    for s in scales:
        ub = ub_ref * s if math.isfinite(s) else math.inf
        prob = build_allocation(layout, m1, lb=lb, ub=ub)
        res = min_failures(prob, max_card)
        rows.append({"ub_scale": s if math.isfinite(s) else "inf",
                     "ub_over_hover": (ub / hover_square_speed(layout, m1)) if math.isfinite(ub) else "inf",
                     "minimum": res["minimum"], "witness": res["witness"]})
    return rows


def fault_report(cfg=None, mass=None, max_card=None, sweep=True):
    cfg = cfg or config.defaults("faults")
    m1 = cfg["mass"] if mass is None else mass
    layout, prob = default_problem(cfg, mass=m1)
    max_card = cfg["max_card"] if max_card is None else max_card
    res = min_failures(prob, max_card)
    ub = float(prob.ub[0])
    report = {
        "mass_kg": m1,
        "weight_N": float(prob.B_target[3]),
        "k": layout.k,
        "b": layout.b,
        "D": prob.D.tolist(),
        "bounds": {"lb": float(prob.lb[0]), "ub": ub if math.isfinite(ub) else "inf",
                   "ub_over_hover": ub / hover_square_speed(layout, m1) if math.isfinite(ub) else "inf"},
        "layout": layout_report(layout),
        "minimum": res["minimum"],
        "witness": res["witness"],
        "counts": res["counts"],
    }
    if not res["found"]:
        report["minimum_bound"] = res["bound"]
    if sweep:
        report["sensitivity"] = sensitivity_sweep(layout, m1, ub, cfg["sweep_scales"], max_card, cfg["lower_bound"])
    return report

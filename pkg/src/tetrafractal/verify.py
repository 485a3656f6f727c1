"""Acceptance checks shared by the test suite and ``tetrafractal verify-all``."""

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import (assembly_dynamics, config, configs, dynamics, faults, geometry, inertia,
               sim, truss)


@dataclass
class CheckResult:
    number: int
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.2f} s)"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "seconds": round(self.seconds, 3), "detail": self.detail}


def _rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


# ----------------------------------------------------------------------- 1

def check_disk_ratio(max_depth=6):
    geom = make_submodule()
    rows = []
    for n in range(1, max_depth + 1):
        rep = geometry.rotor_disk_report(geometry.generate_assembly(geom, n))
        rows.append({"depth": n, "rotors": rep["rotor_count"], "ratio": rep["ratio"],
                     "error": abs(rep["ratio"] - geometry.DISK_RATIO),
                     "overlap_pairs": rep["overlap_pairs"]})
    ok = all(r["error"] < 1e-9 for r in rows) and rows[-1]["overlap_pairs"] == 0
    return ok, {"expected": geometry.DISK_RATIO, "depths": rows}


def make_submodule():
    return geometry.make_tetrahedron(config.defaults("geometry")["submodule_edge"])


# ----------------------------------------------------------------------- 2

def random_body(rng):
    A = rng.normal(size=(3, 3))
    J = A @ A.T + 1e-3 * np.eye(3)
    return inertia.RigidBodyParams(float(rng.uniform(0.1, 5.0)), J)


def check_inertia(seeds=100, max_depth=10, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(seeds):
        body = random_body(rng)
        r = float(rng.uniform(0.05, 2.0))
        stepped = body
        for n in range(max_depth + 1):
            closed = inertia.assembly_inertia(body, r, n)
            worst = max(worst, _rel(closed.inertia, stepped.inertia), _rel(closed.mass, stepped.mass))
            stepped = inertia.compose_step(stepped, n, r)
    return worst < 1e-9, {"seeds": seeds, "max_depth": max_depth, "max_rel_error": worst}


# ----------------------------------------------------------------------- 3

def check_truss_counts(max_depth=5):
    geom = geometry.make_tetrahedron(1.0)
    rows = []
    ok = True
    for n in range(max_depth + 1):
        t = truss.build_truss(geom, n)
        m, j = len(t.members), len(t.nodes)
        good = (m == 6 * 4 ** n and j == 2 * (4 ** n + 1) and m + 6 - 3 * j == 0 and not t.check())
        ok &= good
        rows.append({"n": n, "members": m, "joints": j, "determinacy": m + 6 - 3 * j})
    return ok, {"depths": rows}


# ----------------------------------------------------------------------- 4

def check_truss_scenarios(n=2, step=0.5, max_payload=30.0):
    cfg = config.defaults("truss")
    geom = geometry.make_tetrahedron(config.defaults("tetracopter")["frame_edge"])
    payloads = np.arange(0.0, max_payload + step / 2, step)
    detail = {"section": truss.calibrated_section(geom.edge_length, cfg)}
    ok = True
    _, _, rest = truss.scenario("rest", n, 0.0, geom, cfg)
    detail["rest"] = {k: rest[k] for k in ("max_displacement_m", "max_compression_N",
                                          "equilibrium_error", "min_buckling_margin_N")}
    ok &= rest["max_displacement_m"] < 1e-6 and rest["equilibrium_error"] < 1e-8
    ok &= rest["buckling_flagged"] == 0
    for kind in ("top", "bottom3"):
        rows = truss.payload_sweep(kind, n, payloads, geom, cfg)
        comp = np.array([r["max_compression_N"] for r in rows])
        tens = np.array([r["max_tension_N"] for r in rows])
        eq = max(r["equilibrium_error"] for r in rows)
        react = max(r["reaction_ratio"] for r in rows)
        monotone = bool(np.all(np.diff(comp) >= 0) and np.all(np.diff(tens) >= 0))
        last = rows[-1]
        ok &= eq < 1e-8 and react < 1e-6 and monotone and last["buckling_flagged"] == 0
        detail[kind] = {"max_equilibrium_error": eq, "max_reaction_ratio": react,
                        "monotone": monotone, "payload_ratio_at_max": last["payload_ratio"],
                        "max_compression_N": last["max_compression_N"],
                        "max_tension_N": last["max_tension_N"],
                        "min_buckling_margin_N": last["min_buckling_margin_N"],
                        "thrust_ceiling_exceeded": last["thrust_ceiling_exceeded"]}
    return bool(ok), detail


# ----------------------------------------------------------------------- 5

def finite_difference_jacobians(p, h=1e-6):
    """Central differences of the nonlinear model around hover trim."""
    _, cmd = dynamics.trim(p)
    w0 = cmd.omega
    zero = np.zeros(4)
    x0 = np.zeros(12)
    f = lambda x, w, wd: dynamics.state_derivative(x, w, wd, p)
    A = np.zeros((12, 12))
    for i in range(12):
        e = np.zeros(12)
        e[i] = h
        A[:, i] = (f(x0 + e, w0, zero) - f(x0 - e, w0, zero)) / (2 * h)
    B = np.zeros((12, 4))
    Bacc = np.zeros((12, 4))
    hu = h * w0[0]
    for j in range(4):
        e = np.zeros(4)
        e[j] = hu
        B[:, j] = (f(x0, w0 + e, zero) - f(x0, w0 - e, zero)) / (2 * hu)
        Bacc[:, j] = (f(x0, w0, e) - f(x0, w0, -e)) / (2 * hu)
    return A, B, Bacc


def check_linearization():
    p = dynamics.TetracopterParams.default()
    model = dynamics.linearize(p)
    A, B, Bacc = finite_difference_jacobians(p)
    # the rotor-acceleration term is reinstated next to B for the comparison
    errs = {"A": _rel(model.A, A), "B": _rel(model.B, B), "B_rotor_accel": _rel(model.B_rotor_accel, Bacc)}
    u_theta = model.A[6, 4]
    v_phi = model.A[7, 3]
    ok = max(errs.values()) < 1e-6 and u_theta == p.g and v_phi == -p.g
    return ok, {"rel_errors": errs, "du_dtheta": u_theta, "dv_dphi": v_phi, "g": p.g,
                "omega0": model.omega0}


# ----------------------------------------------------------------------- 6

def fta_inputs():
    p = dynamics.TetracopterParams.default()
    geom = geometry.make_tetrahedron(p.a)
    M0 = assembly_dynamics.elementary_maps(dynamics.linearize(p), p)
    return p, geom, M0


def check_assembly_maps(max_equiv=4, max_growth=6):
    p, geom, M0 = fta_inputs()
    equiv = 0.0
    maps = [M0]
    for n in range(1, max_growth + 1):
        maps.append(assembly_dynamics.recurse_maps(maps[-1], geom))
    for n in range(max_equiv + 1):
        cf = assembly_dynamics.closed_form_maps(M0, geom, n)
        for a, b in ((maps[n].Ma, cf.Ma), (maps[n].Mb, cf.Mb), (maps[n].Mc, cf.Mc), (maps[n].Md, cf.Md)):
            if np.abs(b).max() > 0:
                equiv = max(equiv, _rel(a, b))
            else:
                equiv = max(equiv, float(np.abs(a).max()))
    body = inertia.RigidBodyParams(p.m, p.I_q)
    J = [np.abs(inertia.assembly_inertia(body, geom.circumradius, n).inertia).sum(axis=1).max()
         for n in range(max_growth + 1)]
    rows = assembly_dynamics.growth_report(maps, J)
    r5 = next(r for r in rows if r["n"] == 5)
    ok = (equiv < 1e-9 and abs(r5["ratio_Mb"] - 8.0) < 0.05 * 8.0
          and abs(r5["ratio_J_over_Mb"] - 2.0) < 0.1 * 2.0)
    return ok, {"equivalence_rel_error": equiv, "growth": rows}


# ----------------------------------------------------------------------- 7

def check_faults(chains=200, samples=300, seed=0):
    start = time.perf_counter()
    layout, prob = faults.default_problem()
    res = faults.min_failures(prob, config.defaults("faults")["max_card"])
    search_seconds = time.perf_counter() - start
    low_ok = all(c["infeasible"] == 0 for c in res["counts"] if c["cardinality"] <= 4)
    rng = np.random.default_rng(seed)

    # monotonicity along random chains through infeasible sets
    mono_ok = True
    witness = res["witness"] or []
    for _ in range(chains):
        base = list(witness)
        rest = [i for i in range(faults.N_ROTORS) if i not in base]
        rng.shuffle(rest)
        for extra in rest[:3]:
            base = base + [extra]
            if faults.is_feasible(prob, base):
                mono_ok = False
                break
        if not mono_ok:
            break

    group = faults.symmetries(layout)
    sym_ok = True
    for _ in range(samples):
        c = int(rng.integers(1, 8))
        s = sorted(rng.choice(faults.N_ROTORS, size=c, replace=False).tolist())
        f = faults.is_feasible(prob, s)
        for g in group:
            if faults.is_feasible(prob, [g[i] for i in s]) != f:
                sym_ok = False
    for g in group:
        if witness and faults.is_feasible(prob, [g[i] for i in witness]):
            sym_ok = False

    ub = float(prob.ub[0])
    sweep = faults.sensitivity_sweep(layout, prob.B_target[3] / 9.81, ub,
                                     config.defaults("faults")["sweep_scales"])
    ok = (res["minimum"] == 5 and res["witness"] is not None and low_ok and mono_ok and sym_ok
          and search_seconds < 120 and len(sweep) > 0)
    return ok, {"minimum": res["minimum"], "witness": res["witness"], "counts": res["counts"],
                "search_seconds": search_seconds, "monotone": mono_ok,
                "symmetry_group_order": len(group), "symmetry_equivariant": sym_ok,
                "ub_over_hover": ub / faults.hover_square_speed(layout, prob.B_target[3] / 9.81),
                "sensitivity": sweep}


# ----------------------------------------------------------------------- 8

def check_configs():
    p = configs.pipeline()
    lifts = {configs.class_label(c): c.lift_factor for c in p["classes"]}
    expected = {"A": 2.0, "B": 2.0, "C": 4.0 / math.sqrt(3.0)}
    lift_err = max(abs(lifts.get(k, math.inf) - v) for k, v in expected.items())
    ok = (p["total"] == 256 and p["torque_free"] == 32 and p["force_feasible"] == 28
          and p["per_spin_class"] == {"CCW": 14, "CW": 14} and len(p["classes"]) == 3
          and sorted(c.class_size for c in p["classes"]) == [4, 4, 6] and lift_err < 1e-12)
    return ok, {"counts": [p["total"], p["torque_free"], p["force_feasible"], p["per_spin_class"],
                           len(p["classes"])],
                "lift_factors": lifts, "max_lift_error": lift_err}


# ----------------------------------------------------------------------- 9

def check_hover():
    x0 = sim.parse_perturbation("p=0.5")
    run = sim.hover_trial(x0, duration=5.0)
    eig = sim.closed_loop_eigenvalues()
    ratio, e1, e2 = sim.linearization_ratio()
    ok = (run.stable and run.settle_time is not None and run.settle_time <= 5.0
          and float(eig.real.max()) < 0 and 3.5 <= ratio <= 4.5)
    return ok, {"settle_time": run.settle_time, "max_closed_loop_real": float(eig.real.max()),
                "eigenvalues": sorted(eig.real.tolist()), "eps_ratio": ratio,
                "errors": [e1, e2]}


# ----------------------------------------------------------------------- 10

def reference_dimensions(a):
    """Dimensions measured on explicit vertex coordinates of a tetrahedron."""
    v = np.array([[0.0, 0.0, 0.0], [a, 0.0, 0.0], [a / 2, a * math.sqrt(3) / 2, 0.0]])
    base_c = v.mean(axis=0)
    apex = base_c + np.array([0.0, 0.0, a * math.sqrt(2.0 / 3.0)])
    centre = (v.sum(axis=0) + apex) / 4.0
    return {
        "x": float(np.linalg.norm(v[0] - base_c)),
        "d": float(np.linalg.norm((v[0] + v[1]) / 2 - base_c)),
        "h": float(apex[2] - base_c[2]),
        "R": float(np.linalg.norm(apex - centre)),
    }


def check_geometry_identities(a=None):
    a = config.defaults("geometry")["submodule_edge"] if a is None else a
    dims = geometry.derive_dimensions(a)
    ref = reference_dimensions(a)
    errs = {k: abs(getattr(dims, k) - v) for k, v in ref.items()}
    circ = abs(geometry.make_tetrahedron(a).circumradius - dims.R)
    ok = max(errs.values()) < 1e-9 and circ < 1e-15
    return ok, {"a": a, "values": {k: getattr(dims, k) for k in ref}, "errors": errs,
                "circumradius_gap": circ}


CHECKS = [
    (1, "disk ratio and overlap", check_disk_ratio),
    (2, "inertia closed form", check_inertia),
    (3, "truss counts and determinacy", check_truss_counts),
    (4, "truss scenarios", check_truss_scenarios),
    (5, "hover linearisation", check_linearization),
    (6, "assembly maps", check_assembly_maps),
    (7, "fault tolerance", check_faults),
    (8, "propeller configurations", check_configs),
    (9, "hover simulation", check_hover),
    (10, "geometry identities", check_geometry_identities),
]


def run_check(number):
    for num, name, fn in CHECKS:
        if num == number:
            start = time.perf_counter()
            ok, detail = fn()
            return CheckResult(num, name, bool(ok), detail, time.perf_counter() - start)
    raise KeyError(number)


def run_all(numbers=None):
    numbers = numbers or [c[0] for c in CHECKS]
    return [run_check(n) for n in numbers]

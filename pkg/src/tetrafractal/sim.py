"""Fixed-step hover simulation of the Tetracopter under an angular-rate PID."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import config
from .dynamics import (STATE_NAMES, RigidState, RotorCommand, TetracopterParams,
                       linearize, state_derivative, trim)
from .errors import DomainError, SingularityError

RATE_SLICE = slice(9, 12)
AXES = ("p", "q", "r")


@dataclass
class PidGains:
    kp: np.ndarray
    ki: np.ndarray
    kd: np.ndarray
    integrator_limit: np.ndarray = field(default_factory=lambda: np.ones(3))
    output_limit: np.ndarray = field(default_factory=lambda: np.full(3, 200.0))

    def __post_init__(self):
        for name in ("kp", "ki", "kd", "integrator_limit", "output_limit"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (3,)).copy()
            setattr(self, name, v)
        for name in ("kp", "ki", "kd"):
            if np.any(getattr(self, name) < 0):
                raise DomainError(f"gain {name} must be non-negative")
        if np.any(self.integrator_limit <= 0) or np.any(self.output_limit <= 0):
            raise DomainError("limits must be positive")

    @classmethod
    def from_dict(cls, data):
        base = dict(config.defaults("sim")["gains"])
        base.update(data)
        unknown = set(base) - {"kp", "ki", "kd", "integrator_limit", "output_limit"}
        if unknown:
            raise DomainError(f"unknown gain fields: {sorted(unknown)}")
        return cls(**base)

    @classmethod
    def default(cls):
        return cls.from_dict({})

    @classmethod
    def zero(cls):
        return cls(np.zeros(3), np.zeros(3), np.zeros(3))

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("kp", "ki", "kd", "integrator_limit", "output_limit")}


def mixer(model):
    """Rotor-speed deltas per unit of commanded angular acceleration (4x3).

    Pseudo-inverse of the moment rows of B; its columns are orthogonal to the
    thrust row, so pure moment commands leave thrust unchanged.
    """
    return np.linalg.pinv(model.B[RATE_SLICE, :])


class RatePid:
    """Per-axis PID on body rates, mapped to rotor deltas through the mixer."""

    def __init__(self, gains, mix):
        self.gains = gains
        self.mix = np.asarray(mix, dtype=float)
        # per-axis bound on the commanded acceleration from the rotor-delta limit
        self.accel_limit = gains.output_limit / np.abs(self.mix).max(axis=0)
        self.integral = np.zeros(3)
        self.prev_error = None

    def reset(self):
        self.integral = np.zeros(3)
        self.prev_error = None

    def update(self, omega_body, setpoint, dt):
        if dt <= 0:
            raise DomainError("dt must be positive")
        g = self.gains
        e = np.asarray(setpoint, dtype=float) - np.asarray(omega_body, dtype=float)
        de = np.zeros(3) if self.prev_error is None else (e - self.prev_error) / dt
        self.prev_error = e
        trial = np.clip(self.integral + e * dt, -g.integrator_limit, g.integrator_limit)
        raw = g.kp * e + g.ki * trial + g.kd * de
        clamped = np.abs(raw) > self.accel_limit
        # anti-windup: hold the integrator on saturated axes
        self.integral = np.where(clamped, self.integral, trial)
        accel = np.clip(g.kp * e + g.ki * self.integral + g.kd * de, -self.accel_limit, self.accel_limit)
        return self.mix @ accel


def rate_pid(omega_body, setpoint, gains, dt, mix=None, controller=None):
    """One controller update; pass ``controller`` to keep integrator state."""
    if controller is None:
        if mix is None:
            mix = mixer(linearize(TetracopterParams.default()))
        controller = RatePid(gains, mix)
    return controller.update(omega_body, setpoint, dt)


def step_rk4(x, omega, params, dt, omega_dot=None):
    """Classical Runge-Kutta step of the 12-state with rotor speeds held."""
    if dt <= 0:
        raise DomainError("dt must be positive")
    if isinstance(x, RigidState):
        return RigidState.from_vector(step_rk4(x.to_vector(), omega, params, dt, omega_dot))
    if isinstance(omega, RotorCommand):
        omega, omega_dot = omega.omega, omega.omega_dot
    wd = np.zeros(4) if omega_dot is None else omega_dot
    f = lambda y: state_derivative(y, omega, wd, params)
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class SimResult:
    t: np.ndarray
    states: np.ndarray   # (N, 12)
    omegas: np.ndarray   # (N, 4) rotor speeds applied from each sample on
    settle_time: float   # None when |Omega| never stays below the threshold
    stable: bool
    reason: str = ""

    def rate_norm(self):
        return np.linalg.norm(self.states[:, RATE_SLICE], axis=1)

    def summary(self):
        return {
            "samples": int(len(self.t)),
            "duration": float(self.t[-1]),
            "stable": self.stable,
            "reason": self.reason,
            "settle_time": self.settle_time,
            "final_rate_norm": float(self.rate_norm()[-1]),
            "max_abs_angle": float(np.abs(self.states[:, 3:6]).max()),
            "altitude_drift": float(self.states[-1, 2] - self.states[0, 2]),
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + STATE_NAMES + ["omega_1", "omega_2", "omega_3", "omega_4"])
        for t, x, om in zip(self.t, self.states, self.omegas):
            w.writerow([f"{t:.6f}"] + [repr(float(v)) for v in x] + [repr(float(v)) for v in om])
        return buf.getvalue()


def parse_perturbation(spec):
    """``"p=0.5,theta=0.1"`` -> 12-state offset."""
    x = np.zeros(12)
    if not spec:
        return x
    for item in spec.split(","):
        name, _, value = item.partition("=")
        name = name.strip()
        if name not in STATE_NAMES:
            raise DomainError(f"unknown state {name!r} in perturbation")
        try:
            x[STATE_NAMES.index(name)] = float(value)
        except ValueError:
            raise DomainError(f"bad value for {name!r}: {value!r}") from None
    return x


def settle_time(t, rate_norm, threshold):
    above = np.flatnonzero(rate_norm >= threshold)
    if len(above) == 0:
        return float(t[0])
    last = above[-1]
    if last == len(t) - 1:
        return None
    return float(t[last + 1])


def hover_trial(perturbation=None, gains=None, duration=None, dt=None, params=None,
                setpoint=(0.0, 0.0, 0.0), threshold=None):
    """Closed-loop run from trim plus ``perturbation`` (12-state offset)."""
    cfg = config.defaults("sim")
    params = params or TetracopterParams.default()
    gains = gains if gains is not None else PidGains.default()
    duration = cfg["duration"] if duration is None else duration
    dt = cfg["dt"] if dt is None else dt
    threshold = cfg["settle_threshold"] if threshold is None else threshold
    if dt <= 0 or duration <= 0:
        raise DomainError("dt and duration must be positive")
    steps = int(round(duration / dt))
    model = linearize(params)
    pid = RatePid(gains, mixer(model))
    _, cmd0 = trim(params)

    x = np.zeros(12) if perturbation is None else np.asarray(perturbation, dtype=float).copy()
    ts = [0.0]
    xs = [x.copy()]
    oms = []
    stable, reason = True, ""
    for k in range(steps):
        omega = np.maximum(cmd0.omega + pid.update(x[RATE_SLICE], setpoint, dt), 0.0)
        oms.append(omega)
        try:
            x = step_rk4(x, omega, params, dt)
        except SingularityError as exc:
            stable, reason = False, str(exc)
            break
        ts.append((k + 1) * dt)
        xs.append(x.copy())
        if not np.all(np.isfinite(x)) or np.abs(x[3:5]).max() > cfg["divergence_angle"]:
            stable, reason = False, "attitude diverged"
            break
    oms.append(oms[-1] if oms else cmd0.omega)
    t = np.array(ts)
    states = np.array(xs)
    rn = np.linalg.norm(states[:, RATE_SLICE], axis=1)
    st = settle_time(t, rn, threshold) if stable else None
    return SimResult(t, states, np.array(oms), st, stable, reason)


def closed_loop_matrix(model, gains, params=None):
    """Linear rate loop with states [Omega, integral of rate error]."""
    A_ww = model.A[RATE_SLICE, RATE_SLICE]
    G = model.B[RATE_SLICE, :] @ mixer(model)
    kp, ki, kd = (np.diag(v) for v in (gains.kp, gains.ki, gains.kd))
    lhs = np.eye(3) + G @ kd
    top = np.linalg.solve(lhs, np.hstack([A_ww - G @ kp, G @ ki]))
    bottom = np.hstack([-np.eye(3), np.zeros((3, 3))])
    return np.vstack([top, bottom])


def closed_loop_eigenvalues(gains=None, params=None):
    params = params or TetracopterParams.default()
    gains = gains if gains is not None else PidGains.default()
    return np.linalg.eigvals(closed_loop_matrix(linearize(params), gains, params))


def linear_trajectory(model, x0, times):
    return np.array([expm(model.A * t) @ x0 for t in times])


def linearization_error(params, direction, eps, duration=1.0, dt=None):
    """Largest state gap between the nonlinear and linear open-loop responses."""
    dt = dt or config.defaults("sim")["dt"]
    model = linearize(params)
    _, cmd = trim(params)
    x = eps * np.asarray(direction, dtype=float)
    steps = int(round(duration / dt))
    x0 = x.copy()
    for _ in range(steps):
        x = step_rk4(x, cmd.omega, params, dt)
    xl = expm(model.A * steps * dt) @ x0
    return float(np.abs(x - xl).max())


def linearization_ratio(params=None, direction=None, eps=0.02, duration=1.0):
    params = params or TetracopterParams.default()
    if direction is None:
        direction = np.array([0, 0, 0, 0.5, -0.4, 0.3, 0.2, -0.3, 0.1, 0.6, 0.5, -0.4])
    e1 = linearization_error(params, direction, eps, duration)
    e2 = linearization_error(params, direction, eps / 2.0, duration)
    return e1 / e2, e1, e2

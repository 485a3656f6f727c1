"""Newton-Euler model of the elementary Tetracopter and its hover linearisation.

State ordering: [x, y, z, phi, theta, psi, u, v, w, p, q, r].
Rotors 1 and 3 spin counter-clockwise, 2 and 4 clockwise; rotor 4 is the apex
rotor on the body z axis and has no roll or pitch moment arm.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from . import config
from .errors import DomainError, SingularityError

STATE_NAMES = ["x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r"]
INPUT_NAMES = ["d_omega_1", "d_omega_2", "d_omega_3", "d_omega_4"]
GIMBAL_MARGIN = 1e-6
# (-1)**j for j = 1..4
ALT = np.array([-1.0, 1.0, -1.0, 1.0])
SQRT3 = np.sqrt(3.0)


@dataclass
class TetracopterParams:
    m: float
    I_q: np.ndarray
    I_r: float
    a: float
    k_T: float
    k_D: float
    k_F: float
    k_x: float = 0.0
    k_y: float = 0.0
    k_z: float = 0.0
    k_p: float = 0.0
    k_q: float = 0.0
    k_r: float = 0.0
    g: float = 9.81
    thrust_derating: float = 1.0
    signed_rate_drag: bool = True

    def __post_init__(self):
        self.I_q = np.asarray(self.I_q, dtype=float)
        if self.I_q.shape != (3, 3):
            raise DomainError("I_q must be a 3x3 matrix")
        if not self.m > 0:
            raise DomainError(f"mass must be positive, got {self.m!r}")
        for name in ("I_r", "a", "k_T", "k_D", "k_F", "k_x", "k_y", "k_z",
                     "k_p", "k_q", "k_r", "g", "thrust_derating"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        if np.abs(self.I_q - self.I_q.T).max() > 1e-12 * max(1.0, np.abs(self.I_q).max()):
            raise DomainError("I_q must be symmetric")
        if np.linalg.eigvalsh(self.I_q).min() <= 0:
            raise DomainError("I_q must be positive definite")

    @property
    def k_T_eff(self):
        return self.k_T * self.thrust_derating

    @classmethod
    def from_dict(cls, data):
        base = config.defaults("tetracopter")
        rename = {"mass": "m", "inertia": "I_q", "rotor_inertia": "I_r", "frame_edge": "a"}
        merged = {rename.get(k, k): v for k, v in base.items()}
        merged.update({rename.get(k, k): v for k, v in data.items()})
        return cls(**merged)

    @classmethod
    def default(cls):
        return cls.from_dict({})

    def to_dict(self):
        d = asdict(self)
        d["I_q"] = self.I_q.tolist()
        return d


@dataclass
class RigidState:
    xi: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v_body: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega_body: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def to_vector(self):
        return np.concatenate([self.xi, self.eta, self.v_body, self.omega_body]).astype(float)

    @classmethod
    def from_vector(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[0:3].copy(), x[3:6].copy(), x[6:9].copy(), x[9:12].copy())


@dataclass
class RotorCommand:
    omega: np.ndarray
    omega_dot: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.omega_dot = np.asarray(self.omega_dot, dtype=float)
        if np.any(self.omega < 0):
            raise DomainError("rotor speeds must be non-negative")


@dataclass
class LinearModel:
    A: np.ndarray
    B: np.ndarray
    omega0: float
    # effect of rotor accelerations, dropped from B by the linearisation
    B_rotor_accel: np.ndarray
    state_names: list = field(default_factory=lambda: list(STATE_NAMES))
    input_names: list = field(default_factory=lambda: list(INPUT_NAMES))

    def to_dict(self):
        return {
            "state_order": self.state_names,
            "input_order": self.input_names,
            "omega0": self.omega0,
            "A": {"shape": list(self.A.shape), "data": self.A.tolist()},
            "B": {"shape": list(self.B.shape), "data": self.B.tolist()},
            "B_rotor_accel": {"shape": list(self.B_rotor_accel.shape),
                              "data": self.B_rotor_accel.tolist()},
        }


def rotation_matrix(eta):
    """Z-Y-X Euler rotation mapping body-frame vectors to the inertial frame."""
    phi, theta, psi = eta
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(psi), np.sin(psi)
    return np.array([
        [cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf],
        [sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf],
        [-st, ct * sf, ct * cf],
    ])


def _check_gimbal(theta):
    if abs(theta) >= np.pi / 2 - GIMBAL_MARGIN:
        raise SingularityError(f"pitch angle {theta:.6f} rad is at gimbal lock")


def body_rate_transform(eta):
    """Matrix S with Omega = S @ eta_dot."""
    phi, theta, _ = eta
    _check_gimbal(theta)
    cf, sf = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    return np.array([
        [1.0, 0.0, -st],
        [0.0, cf, ct * sf],
        [0.0, -sf, ct * cf],
    ])


def euler_rates(eta, omega_body):
    """eta_dot = S^-1 Omega, written out to avoid a solve per call."""
    phi, theta, _ = eta
    _check_gimbal(theta)
    p, q, r = omega_body
    cf, sf = np.cos(phi), np.sin(phi)
    ct, tt = np.cos(theta), np.tan(theta)
    return np.array([
        p + sf * tt * q + cf * tt * r,
        cf * q - sf * r,
        (sf * q + cf * r) / ct,
    ])


def thrust_torque(omega_sq, a, k_T):
    """Moment of the differential thrust; the yaw component is always zero."""
    w1, w2, w3, _ = omega_sq
    return a * k_T * np.array([
        (w3 - w1) / 4.0,
        ((w1 + w3) / 2.0 - w2) / (2.0 * SQRT3),
        0.0,
    ])


def rotor_torques(omega, omega_dot, omega_body, p):
    """Sum of the reaction torques of the four rotors on the body."""
    pr, qr, _ = omega_body
    per_rotor = np.stack([
        p.I_r * omega * qr,
        -p.I_r * omega * pr,
        p.I_r * omega_dot + p.k_D * omega ** 2 + p.k_F * omega,
    ])
    return per_rotor @ ALT


def _square(v, signed):
    return v * np.abs(v) if signed else v ** 2


def state_derivative(x, omega, omega_dot, p):
    """Vector form of :func:`derivative`; ``x`` is the 12-state."""
    eta, vb, wb = x[3:6], x[6:9], x[9:12]
    omega = np.asarray(omega, dtype=float)
    omega_dot = np.asarray(omega_dot, dtype=float)
    R = rotation_matrix(eta)
    k_T = p.k_T_eff
    thrust = np.array([0.0, 0.0, k_T * np.sum(omega ** 2)])
    gravity_body = R.T @ np.array([0.0, 0.0, -p.g])
    drag = np.array([p.k_x, p.k_y, p.k_z]) * _square(vb, p.signed_rate_drag)
    v_dot = gravity_body + (thrust - drag) / p.m - np.cross(wb, vb)

    moment = (
        rotor_torques(omega, omega_dot, wb, p)
        + thrust_torque(omega ** 2, p.a, k_T)
        - np.array([p.k_p, p.k_q, p.k_r]) * _square(wb, p.signed_rate_drag)
    )
    w_dot = np.linalg.solve(p.I_q, moment - np.cross(wb, p.I_q @ wb))
    return np.concatenate([R @ vb, euler_rates(eta, wb), v_dot, w_dot])


def derivative(state, cmd, p):
    """Time derivative of ``state`` under rotor command ``cmd``, as a RigidState."""
    return RigidState.from_vector(state_derivative(state.to_vector(), cmd.omega, cmd.omega_dot, p))


def hover_speed(p):
    if not p.k_T_eff > 0:
        raise DomainError("thrust coefficient must be positive to hover")
    return float(np.sqrt(p.m * p.g / (4.0 * p.k_T_eff)))


def trim(p):
    """Hover state (all zeros) and the matching rotor command."""
    w0 = hover_speed(p)
    return RigidState(), RotorCommand(np.full(4, w0))


def linearize(p):
    """Analytic A, B at hover; the I_r * d(omega)/dt term is kept apart in B_rotor_accel."""
    w0 = hover_speed(p)
    k_T = p.k_T_eff
    Iinv = np.linalg.inv(p.I_q)

    A = np.zeros((12, 12))
    A[0:3, 6:9] = np.eye(3)
    A[3:6, 9:12] = np.eye(3)
    A[6, 4] = p.g
    A[7, 3] = -p.g
    # rotor gyroscopic coupling; cancels when the spins are balanced
    gyro = p.I_r * w0 * ALT.sum()
    A[9:12, 9:12] = Iinv @ np.array([[0.0, gyro, 0.0], [-gyro, 0.0, 0.0], [0.0, 0.0, 0.0]])

    moments = np.zeros((3, 4))
    moments[0] = p.a * k_T * w0 * np.array([-0.5, 0.0, 0.5, 0.0])
    moments[1] = p.a * k_T * w0 * np.array([0.5, -1.0, 0.5, 0.0]) / SQRT3
    moments[2] = ALT * (2.0 * p.k_D * w0 + p.k_F)
    B = np.zeros((12, 4))
    B[8, :] = 2.0 * k_T * w0 / p.m
    B[9:12, :] = Iinv @ moments

    B_acc = np.zeros((12, 4))
    B_acc[9:12, :] = Iinv @ np.vstack([np.zeros((2, 4)), ALT * p.I_r])
    return LinearModel(A, B, w0, B_acc)


def mechanical_energy(x, p):
    """Kinetic plus potential energy of the 12-state ``x``."""
    vb, wb = x[6:9], x[9:12]
    return 0.5 * p.m * vb @ vb + 0.5 * wb @ p.I_q @ wb + p.m * p.g * x[2]

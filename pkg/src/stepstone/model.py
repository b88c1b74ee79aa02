"""Single-rigid-body model of the biped and its linear state-space forms.

The control model treats the robot as one lumped rigid body driven by two
foot contact wrenches u = [F1; F2; M1; M2] (3-D forces, 2-D pitch/yaw
moments through the line-contact feet).  State is the 12-vector
[euler; com_pos; ang_vel; com_vel] in the world frame; for the MPC a
constant gravity 3-vector is appended as dummy state entries 12:15, which
keeps the dynamics strictly linear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRAVITY = np.array([0.0, 0.0, -9.81])

# maps the 2-D foot moment [My, Mz] into a 3-D torque (roll moment is
# structurally zero for a line-contact foot)
MOMENT_SELECTION = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

NUM_STATE = 12
NUM_AUG_STATE = 15
NUM_INPUT = 10


@dataclass
class RobotParams:
    """Physical parameters shared by the planner, controllers and plant."""

    trunk_mass: float = 5.8
    total_mass: float = 11.0
    body_inertia: np.ndarray = field(
        default_factory=lambda: np.diag([0.0628, 0.0544, 0.0302])
    )
    # hip joint centers in the body frame, leg 1 = left (+y), leg 2 = right
    hip_offsets: np.ndarray = field(
        default_factory=lambda: np.array([[0.0, 0.047, -0.05], [0.0, -0.047, -0.05]])
    )
    # per-leg joint order: ab/ad, hip yaw, thigh pitch, calf (knee), ankle
    q_min: np.ndarray = field(
        default_factory=lambda: np.tile([-0.6, -0.6, -1.8, 0.0, -1.6], 2)
    )
    q_max: np.ndarray = field(
        default_factory=lambda: np.tile([0.6, 0.6, 1.8, 2.6, 1.6], 2)
    )
    torque_limit: float = 33.5
    joint_speed_limit: float = 21.0
    thigh_length: float = 0.22
    calf_length: float = 0.22
    foot_length: float = 0.06
    nominal_height: float = 0.4
    # Euler-rate convention flag: the control model maps angular velocity to
    # Euler-angle rates with R_z by default; set True for the transposed
    # (ZYX small-angle) variant.
    euler_rate_transpose: bool = False

    def __post_init__(self):
        self.body_inertia = np.asarray(self.body_inertia, dtype=float)
        self.hip_offsets = np.asarray(self.hip_offsets, dtype=float)
        self.q_min = np.asarray(self.q_min, dtype=float)
        self.q_max = np.asarray(self.q_max, dtype=float)
        if self.body_inertia.shape != (3, 3):
            raise ValueError("body_inertia must be 3x3")
        if np.any(self.q_min >= self.q_max):
            raise ValueError("q_min must be < q_max elementwise")

    @property
    def max_leg_extension(self) -> float:
        return self.thigh_length + self.calf_length + self.foot_length

    @property
    def torque_min(self) -> float:
        return -self.torque_limit


@dataclass
class CentroidalState:
    """12-state [euler (roll, pitch, yaw); com_pos; ang_vel; com_vel], world frame."""

    euler: np.ndarray = field(default_factory=lambda: np.zeros(3))
    com_pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ang_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))
    com_vel: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.euler = np.asarray(self.euler, dtype=float).reshape(3)
        self.com_pos = np.asarray(self.com_pos, dtype=float).reshape(3)
        self.ang_vel = np.asarray(self.ang_vel, dtype=float).reshape(3)
        self.com_vel = np.asarray(self.com_vel, dtype=float).reshape(3)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.euler, self.com_pos, self.ang_vel, self.com_vel])

    @classmethod
    def from_vector(cls, x) -> "CentroidalState":
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != NUM_STATE:
            raise ValueError(f"state vector must have length {NUM_STATE}")
        return cls(x[0:3], x[3:6], x[6:9], x[9:12])


@dataclass
class ControlInput:
    """u = [F1; F2; M1; M2]: two 3-D foot forces (N), two 2-D moments (N m)."""

    force1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    moment1: np.ndarray = field(default_factory=lambda: np.zeros(2))
    moment2: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        self.force1 = np.asarray(self.force1, dtype=float).reshape(3)
        self.force2 = np.asarray(self.force2, dtype=float).reshape(3)
        self.moment1 = np.asarray(self.moment1, dtype=float).reshape(2)
        self.moment2 = np.asarray(self.moment2, dtype=float).reshape(2)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.force1, self.force2, self.moment1, self.moment2])

    @classmethod
    def from_vector(cls, u) -> "ControlInput":
        u = np.asarray(u, dtype=float).reshape(-1)
        if u.size != NUM_INPUT:
            raise ValueError(f"input vector must have length {NUM_INPUT}")
        return cls(u[0:3], u[3:6], u[6:8], u[8:10])


def skew(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    return np.array(
        [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]]
    )


def rotation_z(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def world_inertia(params: RobotParams, yaw: float) -> np.ndarray:
    """Body inertia rotated to the world frame by the yaw rotation."""
    R = rotation_z(yaw)
    return R @ params.body_inertia @ R.T


def srb_derivative(
    state: CentroidalState,
    u: ControlInput,
    foot_pos,
    params: RobotParams,
) -> np.ndarray:
    """Continuous-time state derivative of the simplified dynamics.

    foot_pos is a pair of world-frame contact points (feet 1 and 2).
    """
    p1 = np.asarray(foot_pos[0], dtype=float).reshape(3)
    p2 = np.asarray(foot_pos[1], dtype=float).reshape(3)
    Rz = rotation_z(state.euler[2])
    euler_rates = (Rz.T if params.euler_rate_transpose else Rz) @ state.ang_vel
    I_inv = np.linalg.inv(world_inertia(params, state.euler[2]))
    torque = (
        np.cross(p1 - state.com_pos, u.force1)
        + np.cross(p2 - state.com_pos, u.force2)
        + MOMENT_SELECTION @ u.moment1
        + MOMENT_SELECTION @ u.moment2
    )
    omega_dot = I_inv @ torque
    com_acc = (u.force1 + u.force2) / params.trunk_mass + GRAVITY
    return np.concatenate([euler_rates, state.com_vel, omega_dot, com_acc])


def build_matrices(state: CentroidalState, p1, p2, params: RobotParams):
    """Continuous gravity-augmented state-space matrices (A_c 15x15, B_c 15x10).

    The 12-state dynamics are extended with the constant gravity dummy state;
    its column feeds com-acceleration so that d/dt x = A_c x + B_c u holds
    with no affine term.
    """
    p1 = np.asarray(p1, dtype=float).reshape(3)
    p2 = np.asarray(p2, dtype=float).reshape(3)
    Rz = rotation_z(state.euler[2])
    I_inv = np.linalg.inv(world_inertia(params, state.euler[2]))

    A = np.zeros((NUM_AUG_STATE, NUM_AUG_STATE))
    A[0:3, 6:9] = Rz.T if params.euler_rate_transpose else Rz
    A[3:6, 9:12] = np.eye(3)
    A[9:12, 12:15] = np.eye(3)

    B = np.zeros((NUM_AUG_STATE, NUM_INPUT))
    B[6:9, 0:3] = I_inv @ skew(p1 - state.com_pos)
    B[6:9, 3:6] = I_inv @ skew(p2 - state.com_pos)
    B[6:9, 6:8] = I_inv @ MOMENT_SELECTION
    B[6:9, 8:10] = I_inv @ MOMENT_SELECTION
    B[9:12, 0:3] = np.eye(3) / params.trunk_mass
    B[9:12, 3:6] = np.eye(3) / params.trunk_mass
    return A, B


def discretize(A_c: np.ndarray, B_c: np.ndarray, dt: float):
    """Zero-order-hold discretization, exact because A_c is nilpotent.

    A_hat = I + A dt + A^2 dt^2 / 2 and B_hat = (I dt + A dt^2 / 2) B;
    the A^2 B term vanishes for this structure (gravity rows of B are zero).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if dt > 0.1:
        raise ValueError("dt must be <= 0.1 s")
    n = A_c.shape[0]
    A2 = A_c @ A_c
    A_hat = np.eye(n) + A_c * dt + A2 * (dt * dt / 2.0)
    B_hat = (np.eye(n) * dt + A_c * (dt * dt / 2.0)) @ B_c
    return A_hat, B_hat


def augmented_vector(x) -> np.ndarray:
    """Append the gravity dummy entries to a 12-state vector."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != NUM_STATE:
        raise ValueError(f"state vector must have length {NUM_STATE}")
    return np.concatenate([x, GRAVITY])

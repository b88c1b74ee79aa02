"""Rigid-body tree of the 16-DoF floating-base biped.

The floating base is modeled as six single-DoF joints (three world-axis
prismatic, then yaw-pitch-roll revolute), so the generalized coordinates
are exactly [base position; roll, pitch, yaw; 10 leg joints] and every
algorithm below is a textbook single-DoF-joint recursion.  Spatial
quantities use Plucker coordinates about the world origin: motion vectors
are [omega; v_origin], force vectors [torque_origin; force].

Per-leg joint order: ab/ad (x), hip yaw (z), thigh pitch (y), calf pitch
(y), ankle pitch (y).  At the zero configuration both legs point straight
down and all frames are world-aligned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RobotParams, rotation_z, skew

NUM_Q = 16
NUM_JOINTS = 10
LEG_JOINTS = 5

_PRISMATIC = 0
_REVOLUTE = 1

_X = np.array([1.0, 0.0, 0.0])
_Y = np.array([0.0, 1.0, 0.0])
_Z = np.array([0.0, 0.0, 1.0])

# leg mass fractions (of one leg's mass): ab/ad, hip yaw, thigh, calf, foot.
# Actuators sit at the hip cluster, so >=80% of the leg mass stays there.
_LEG_MASS_FRACTIONS = np.array([0.35, 0.35, 0.15, 0.09, 0.06])


class UnreachableError(ValueError):
    """IK target lies outside the leg workspace."""


class LimitViolationError(ValueError):
    """IK converged but the joint angles violate configured limits."""


@dataclass
class JointVector:
    """Generalized coordinates: base pose (xyz + roll/pitch/yaw) and 10 joints."""

    base_pose: np.ndarray = field(default_factory=lambda: np.zeros(6))
    joints: np.ndarray = field(default_factory=lambda: np.zeros(NUM_JOINTS))

    def __post_init__(self):
        self.base_pose = np.asarray(self.base_pose, dtype=float).reshape(6)
        self.joints = np.asarray(self.joints, dtype=float).reshape(NUM_JOINTS)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.base_pose, self.joints])

    @classmethod
    def from_vector(cls, q) -> "JointVector":
        q = np.asarray(q, dtype=float).reshape(-1)
        if q.size != NUM_Q:
            raise ValueError(f"generalized coordinates must have length {NUM_Q}")
        return cls(q[:6], q[6:])

    def within_limits(self, params: RobotParams) -> bool:
        return bool(np.all(self.joints >= params.q_min) and np.all(self.joints <= params.q_max))


def _rodrigues(axis, angle):
    c, s = np.cos(angle), np.sin(angle)
    K = skew(axis)
    return np.eye(3) + s * K + (1.0 - c) * (K @ K)


def _cross3(a, b):
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def _axis_rotation(axis_id: int, q: float):
    c, s = np.cos(q), np.sin(q)
    if axis_id == 0:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis_id == 1:
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx_matrix(euler) -> np.ndarray:
    """World rotation R = Rz(yaw) Ry(pitch) Rx(roll) for euler = [roll, pitch, yaw]."""
    roll, pitch, yaw = euler
    return rotation_z(yaw) @ _rodrigues(_Y, pitch) @ _rodrigues(_X, roll)


class TreeModel:
    """Immutable kinematic/dynamic tree built from RobotParams.

    With massless_legs=True the leg links carry a vanishing mass (1e-3 kg
    per link) so the tree is dynamically equivalent to the trunk-only plant
    while keeping the joint-space mass matrix invertible.
    """

    def __init__(self, params: RobotParams, massless_legs: bool = False):
        self.params = params
        self.massless_legs = massless_legs

        # joints: parent, type, local axis, offset from parent origin, coord
        parents = [-1, 0, 1, 2, 3, 4]
        types = [_PRISMATIC] * 3 + [_REVOLUTE] * 3
        axes = [_X, _Y, _Z, _Z, _Y, _X]          # translations, then yaw-pitch-roll
        offsets = [np.zeros(3)] * 6
        coords = [0, 1, 2, 5, 4, 3]              # euler stored as [roll, pitch, yaw]

        lt, lc, lf = params.thigh_length, params.calf_length, params.foot_length
        for leg in range(2):
            hip = params.hip_offsets[leg]
            base = len(parents)
            parents += [5, base, base + 1, base + 2, base + 3]
            types += [_REVOLUTE] * 5
            axes += [_X, _Z, _Y, _Y, _Y]
            offsets += [hip, np.zeros(3), np.zeros(3), np.array([0, 0, -lt]), np.array([0, 0, -lc])]
            coords += list(range(6 + LEG_JOINTS * leg, 6 + LEG_JOINTS * (leg + 1)))

        self._parents = np.array(parents)
        self._types = np.array(types)
        self._axes = np.array(axes, dtype=float)
        self._axis_ids = np.array([int(np.argmax(a)) for a in axes])
        self._offsets = np.array(offsets, dtype=float)
        self._coords = np.array(coords)
        self._n_joints = len(parents)
        self._hip_joint = [6, 11]        # ab/ad joint index per leg
        self._ankle_joint = [10, 15]     # ankle joint index per leg
        self._foot_offset = np.array([0.0, 0.0, -lf])

        leg_mass = 1e-3 * np.ones(5) if massless_legs else (
            (params.total_mass - params.trunk_mass) / 2.0 * _LEG_MASS_FRACTIONS
        )

        # bodies: (joint, mass, com in joint frame, inertia about com)
        rod = lambda m, L: np.diag([m * L * L / 12.0, m * L * L / 12.0, 1e-5])
        small = lambda m: np.diag([1e-4, 1e-4, 1e-4]) * max(m, 1e-3)
        bodies = [(5, params.trunk_mass, np.zeros(3), params.body_inertia)]
        for leg in range(2):
            j0 = self._hip_joint[leg]
            bodies += [
                (j0, leg_mass[0], np.zeros(3), small(leg_mass[0])),
                (j0 + 1, leg_mass[1], np.zeros(3), small(leg_mass[1])),
                (j0 + 2, leg_mass[2], np.array([0, 0, -0.25 * lt]), rod(leg_mass[2], lt)),
                (j0 + 3, leg_mass[3], np.array([0, 0, -0.3 * lc]), rod(leg_mass[3], lc)),
                (j0 + 4, leg_mass[4], np.array([0, 0, -0.5 * lf]), small(leg_mass[4])),
            ]
        self._body_joint = np.array([b[0] for b in bodies])
        self._body_mass = np.array([b[1] for b in bodies])
        self._body_com = np.array([b[2] for b in bodies])
        self._body_inertia = np.array([b[3] for b in bodies])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self._body_mass))

    @property
    def max_reach(self) -> float:
        return self.params.max_leg_extension

    # -- kinematics ---------------------------------------------------------

    def _fk_frames(self, q: np.ndarray):
        """World rotation and origin of every joint frame."""
        R = np.empty((self._n_joints, 3, 3))
        o = np.empty((self._n_joints, 3))
        for j in range(self._n_joints):
            p = self._parents[j]
            qj = q[self._coords[j]]
            if p < 0:
                if self._types[j] == _PRISMATIC:
                    R[j] = np.eye(3)
                    o[j] = self._offsets[j] + self._axes[j] * qj
                else:
                    R[j] = _axis_rotation(self._axis_ids[j], qj)
                    o[j] = self._offsets[j]
            elif self._types[j] == _PRISMATIC:
                R[j] = R[p]
                o[j] = o[p] + R[p] @ (self._offsets[j] + self._axes[j] * qj)
            else:
                R[j] = R[p] @ _axis_rotation(self._axis_ids[j], qj)
                o[j] = o[p] + R[p] @ self._offsets[j]
        return R, o

    def _foot_points(self, R, o):
        return np.array(
            [o[self._ankle_joint[leg]] + R[self._ankle_joint[leg]] @ self._foot_offset for leg in range(2)]
        )

    def forward_kinematics(self, q):
        """World-frame foot and hip positions: (feet 2x3, hips 2x3)."""
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        feet = self._foot_points(R, o)
        hips = np.array([o[self._hip_joint[leg]] for leg in range(2)])
        return feet, hips

    def _support(self, j):
        """Joint indices on the path from the root to joint j, inclusive."""
        path = []
        while j >= 0:
            path.append(j)
            j = self._parents[j]
        return path[::-1]

    def _point_jacobian(self, q, R, o, joint, point):
        """6 x 16 spatial Jacobian ([omega; v_point]) of a point on a body."""
        J = np.zeros((6, NUM_Q))
        for j in self._support(joint):
            a_w = R[j][:, self._axis_ids[j]]
            col = self._coords[j]
            if self._types[j] == _PRISMATIC:
                J[3:, col] = a_w
            else:
                J[:3, col] = a_w
                J[3:, col] = _cross3(a_w, point - o[j])
        return J

    def leg_jacobian(self, q, leg: int) -> np.ndarray:
        """3 x 5 foot-point linear Jacobian with respect to one leg's joints."""
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        foot = self._foot_points(R, o)[leg]
        J = self._point_jacobian(q, R, o, self._ankle_joint[leg], foot)
        cols = slice(6 + LEG_JOINTS * leg, 6 + LEG_JOINTS * (leg + 1))
        return J[3:, cols]

    def foot_jacobian_full(self, q, leg: int) -> np.ndarray:
        """6 x 16 spatial Jacobian ([omega; v]) of the foot point."""
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        foot = self._foot_points(R, o)[leg]
        return self._point_jacobian(q, R, o, self._ankle_joint[leg], foot)

    def contact_jacobian(self, q) -> np.ndarray:
        """10 x 16 map with J_c^T u = generalized force of u = [F1;F2;M1;M2].

        Force rows are the foot-point translational Jacobians; moment rows
        are the y/z angular rows of each foot (line-contact feet carry no
        roll moment).
        """
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        feet = self._foot_points(R, o)
        J1 = self._point_jacobian(q, R, o, self._ankle_joint[0], feet[0])
        J2 = self._point_jacobian(q, R, o, self._ankle_joint[1], feet[1])
        return np.vstack([J1[3:], J2[3:], J1[1:3], J2[1:3]])

    def foot_rotation(self, q, leg: int) -> np.ndarray:
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, _ = self._fk_frames(q)
        return R[self._ankle_joint[leg]]

    # -- dynamics -----------------------------------------------------------

    def _spatial_inertias(self, R, o):
        """6x6 spatial inertia of every body about the world origin."""
        out = np.zeros((self._body_joint.size, 6, 6))
        for b, j in enumerate(self._body_joint):
            m = self._body_mass[b]
            c = o[j] + R[j] @ self._body_com[b]
            Iw = R[j] @ self._body_inertia[b] @ R[j].T
            cx = skew(c)
            out[b, :3, :3] = Iw + m * (cx @ cx.T)
            out[b, :3, 3:] = m * cx
            out[b, 3:, :3] = m * cx.T
            out[b, 3:, 3:] = m * np.eye(3)
        return out

    def _motion_subspaces(self, R, o):
        S = np.zeros((self._n_joints, 6))
        for j in range(self._n_joints):
            a_w = R[j][:, self._axis_ids[j]]
            if self._types[j] == _PRISMATIC:
                S[j, 3:] = a_w
            else:
                S[j, :3] = a_w
                S[j, 3:] = _cross3(o[j], a_w)
        return S

    def leg_wrench_map(self, base_pos, base_euler, q_leg, leg: int) -> np.ndarray:
        """5x5 map B with tau = B^T [F; My, Mz] for one leg, fast chain path.

        Row layout matches the per-foot wrench: three force rows (foot-point
        linear Jacobian columns) then the y/z angular rows.
        """
        R_base = euler_zyx_matrix(base_euler)
        lt, lc = self.params.thigh_length, self.params.calf_length
        offsets = (np.zeros(3), np.zeros(3), np.zeros(3), np.array([0, 0, -lt]), np.array([0, 0, -lc]))
        axis_ids = (0, 2, 1, 1, 1)
        R = R_base
        o = np.asarray(base_pos, dtype=float) + R_base @ self.params.hip_offsets[leg]
        origins = np.empty((LEG_JOINTS, 3))
        axes_w = np.empty((LEG_JOINTS, 3))
        for k in range(LEG_JOINTS):
            o = o + R @ offsets[k]
            R = R @ _axis_rotation(axis_ids[k], q_leg[k])
            origins[k] = o
            # rotation about the joint's own axis leaves that axis column fixed
            axes_w[k] = R[:, axis_ids[k]]
        foot = o + R @ self._foot_offset
        B = np.empty((5, LEG_JOINTS))
        for k in range(LEG_JOINTS):
            B[0:3, k] = _cross3(axes_w[k], foot - origins[k])
            B[3:5, k] = axes_w[k][1:3]
        return B

    def mass_matrix(self, q) -> np.ndarray:
        """16 x 16 joint-space mass matrix (composite-rigid-body algorithm)."""
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        S = self._motion_subspaces(R, o)
        Ibody = self._spatial_inertias(R, o)

        Ic = np.zeros((self._n_joints, 6, 6))
        for b, j in enumerate(self._body_joint):
            Ic[j] += Ibody[b]
        for j in range(self._n_joints - 1, 0, -1):
            Ic[self._parents[j]] += Ic[j]

        M = np.zeros((NUM_Q, NUM_Q))
        for j in range(self._n_joints):
            F = Ic[j] @ S[j]
            cj = self._coords[j]
            k = j
            while k >= 0:
                M[cj, self._coords[k]] = F @ S[k]
                M[self._coords[k], cj] = M[cj, self._coords[k]]
                k = self._parents[k]
        return M

    def rnea(self, q, qd, qdd) -> np.ndarray:
        """Inverse dynamics: generalized forces for motion (q, qd, qdd) under gravity."""
        q = np.asarray(q, dtype=float).reshape(NUM_Q)
        qd = np.asarray(qd, dtype=float).reshape(NUM_Q)
        qdd = np.asarray(qdd, dtype=float).reshape(NUM_Q)
        R, o = self._fk_frames(q)
        S = self._motion_subspaces(R, o)
        Ibody = self._spatial_inertias(R, o)

        nj = self._n_joints
        v = np.zeros((nj, 6))
        a = np.zeros((nj, 6))
        a_root = np.zeros(6)
        a_root[5] = 9.81  # fictitious upward base acceleration replaces gravity
        for j in range(nj):
            p = self._parents[j]
            vp = np.zeros(6) if p < 0 else v[p]
            ap = a_root if p < 0 else a[p]
            Sq = S[j] * qd[self._coords[j]]
            v[j] = vp + Sq
            a[j] = ap + S[j] * qdd[self._coords[j]] + _crm(v[j]) @ Sq

        f = np.zeros((nj, 6))
        for b, j in enumerate(self._body_joint):
            Iv = Ibody[b] @ v[j]
            f[j] += Ibody[b] @ a[j] + _crf(v[j]) @ Iv
        tau = np.zeros(NUM_Q)
        for j in range(nj - 1, -1, -1):
            tau[self._coords[j]] += S[j] @ f[j]
            if self._parents[j] >= 0:
                f[self._parents[j]] += f[j]
        return tau

    def bias(self, q, qd) -> np.ndarray:
        """Coriolis/centrifugal plus gravity generalized forces h = C(q, qd) + g(q)."""
        return self.rnea(q, qd, np.zeros(NUM_Q))


def _crm(v):
    w, u = v[:3], v[3:]
    out = np.zeros((6, 6))
    out[:3, :3] = skew(w)
    out[3:, :3] = skew(u)
    out[3:, 3:] = skew(w)
    return out


def _crf(v):
    w, u = v[:3], v[3:]
    out = np.zeros((6, 6))
    out[:3, :3] = skew(w)
    out[:3, 3:] = skew(u)
    out[3:, 3:] = skew(w)
    return out


def build_tree(params: RobotParams, massless_legs: bool = False) -> TreeModel:
    return TreeModel(params, massless_legs=massless_legs)


def inverse_kinematics(
    model: TreeModel,
    base_pose,
    target,
    leg: int,
    seed=None,
    tol: float = 1e-9,
    max_iter: int = 150,
    enforce_limits: bool = False,
):
    """Leg joint angles placing the foot point at a world target.

    Damped-least-squares iteration over the 5 leg joints; the redundant
    directions stay close to the seed through a small posture-regularization
    term.  Raises UnreachableError when the target lies outside the
    workspace sphere around the hip.  Returns (q_leg, within_limits); with
    enforce_limits=True a limit violation raises instead.
    """
    base_pose = np.asarray(base_pose, dtype=float).reshape(6)
    target = np.asarray(target, dtype=float).reshape(3)
    q = np.zeros(NUM_Q)
    q[:6] = base_pose
    params = model.params
    lo = params.q_min[LEG_JOINTS * leg : LEG_JOINTS * (leg + 1)]
    hi = params.q_max[LEG_JOINTS * leg : LEG_JOINTS * (leg + 1)]
    if seed is None:
        seed = np.array([0.0, 0.0, -0.4, 0.9, -0.5])
    q_leg = np.clip(np.asarray(seed, dtype=float).reshape(LEG_JOINTS), lo - 0.5, hi + 0.5)

    _, hips = model.forward_kinematics(q)
    reach = float(np.linalg.norm(target - hips[leg]))
    if reach > model.max_reach + 1e-9:
        raise UnreachableError(
            f"target {reach:.4f} m from hip exceeds reach {model.max_reach:.4f} m"
        )

    cols = slice(6 + LEG_JOINTS * leg, 6 + LEG_JOINTS * (leg + 1))
    lam = 1e-3
    best_q = q_leg.copy()
    best_err = np.inf
    seed = np.asarray(seed, dtype=float).reshape(LEG_JOINTS)
    for _ in range(max_iter):
        q[cols] = q_leg
        feet, _ = model.forward_kinematics(q)
        e = target - feet[leg]
        err = float(np.linalg.norm(e))
        if err < best_err:
            best_err = err
            best_q = q_leg.copy()
        if err <= tol:
            break
        J = model.leg_jacobian(q, leg)
        JJt = J @ J.T + (lam * lam) * np.eye(3)
        dq_task = J.T @ np.linalg.solve(JJt, e)
        # home the redundant directions toward the seed through the
        # nullspace only, so the posture term cannot fight the task error
        dq_post = seed - q_leg
        dq_null = dq_post - J.T @ np.linalg.solve(JJt, J @ dq_post)
        dq = dq_task + 0.2 * min(1.0, 100.0 * err) * dq_null
        q[cols] = q_leg + dq
        feet_try, _ = model.forward_kinematics(q)
        if np.linalg.norm(target - feet_try[leg]) < err * (1.0 + 1e-12):
            q_leg = q_leg + dq
            lam = max(lam * 0.5, 1e-8)
        else:
            lam = min(lam * 4.0, 1e2)
    else:
        q[cols] = best_q
        feet, _ = model.forward_kinematics(q)
        if np.linalg.norm(target - feet[leg]) > 1e-6:
            raise UnreachableError("IK failed to converge; target likely near workspace boundary")
        q_leg = best_q

    within = bool(np.all(q_leg >= lo) and np.all(q_leg <= hi))
    if enforce_limits and not within:
        raise LimitViolationError(f"IK solution outside joint limits: {q_leg}")
    return q_leg, within

"""Offline gait-period trajectory optimization over stepping stones.

Decision vector per knot i in 0..N (knot-major, 39 entries each):
    x_i (12) | p1_i (3) | p2_i (3) | q_i (10) | u_i (10) | dt_i (1)
for a total of 39(N+1).  N = 5 * S knots for S steps (S even); each step
is 5 equal-dt intervals, one foot in stance and one in swing, with the
swing foot touching down on its assigned stepping stone at the step's
last knot.  dt_N pads the packing and is tied to dt_{N-1}.

The transcription is multiple shooting with one explicit midpoint (RK2)
step per interval, foot-placement coupling through the inverted-pendulum
rule p_td = p_hip + (t_stance/2) v at every touch-down, joint-space
feasibility through forward-kinematics defects plus joint boxes, and
torque feasibility through the leg Jacobian transpose.  All constraint
Jacobians are analytic except small finite-difference blocks for the
orientation dependence of hip positions and leg Jacobians.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    GRAVITY,
    MOMENT_SELECTION,
    RobotParams,
    rotation_z,
    skew,
)
from .rbd import TreeModel, build_tree, euler_zyx_matrix, inverse_kinematics
from .solver import ConstraintBlock, NlpProblem, NlpResult, Status, solve_nlp
from .terrain import StoneMap, stone_under

VARS_PER_KNOT = 39
KNOTS_PER_STEP = 5

# variable slices within one knot block
_SL_X = slice(0, 12)
_SL_P1 = slice(12, 15)
_SL_P2 = slice(15, 18)
_SL_Q = slice(18, 28)
_SL_U = slice(28, 38)
_IDX_DT = 38


class NotEnoughStonesError(ValueError):
    pass


class InfeasibleBoundsError(ValueError):
    pass


class TrajOptError(RuntimeError):
    def __init__(self, message, result: Optional[NlpResult] = None):
        super().__init__(message)
        self.result = result


@dataclass
class TrajOptWeights:
    """Velocity-tracking weight per step and diagonal input weight."""

    velocity: float = 40.0
    force: float = 2e-5
    moment: float = 2e-4

    def alpha(self, num_steps: int) -> np.ndarray:
        return np.full(num_steps, self.velocity)

    def beta_diag(self) -> np.ndarray:
        return np.concatenate([np.full(6, self.force), np.full(4, self.moment)])


@dataclass
class StepPhase:
    stance_foot: int
    swing_foot: int
    dt: float
    foothold: np.ndarray

    @property
    def t_stance(self) -> float:
        return KNOTS_PER_STEP * self.dt


@dataclass
class GaitSchedule:
    """Per-step phases plus per-interval dt and contact flags."""

    steps: list
    dt_intervals: np.ndarray          # length N
    contact: np.ndarray               # (N, 2) bool, True = foot in stance

    @property
    def num_steps(self) -> int:
        return len(self.steps)

    @property
    def knot_times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.dt_intervals)])

    def step_of_interval(self, i: int) -> int:
        return min(i // KNOTS_PER_STEP, len(self.steps) - 1)


@dataclass
class DenseReference:
    """1 kHz linear interpolation of the solution plus swing arcs."""

    times: np.ndarray                 # (M,)
    states: np.ndarray                # (M, 12)
    foot_pos: np.ndarray              # (M, 2, 3)
    foot_vel: np.ndarray              # (M, 2, 3)
    contact: np.ndarray               # (M, 2) bool

    def index_at(self, t: float) -> int:
        i = int(round(t * 1000.0))
        return min(max(i, 0), self.times.size - 1)


@dataclass
class TrajectorySolution:
    states: np.ndarray                # (N+1, 12)
    foot1: np.ndarray                 # (N+1, 3)
    foot2: np.ndarray                 # (N+1, 3)
    joints: np.ndarray                # (N+1, 10)
    inputs: np.ndarray                # (N+1, 10)
    dts: np.ndarray                   # (N+1,) padded
    schedule: GaitSchedule
    footholds: np.ndarray             # (S, 3)
    robot_hash: str = ""
    dense: Optional[DenseReference] = None
    solver_result: Optional[NlpResult] = None

    @property
    def num_intervals(self) -> int:
        return self.states.shape[0] - 1

    @property
    def knot_times(self) -> np.ndarray:
        return self.schedule.knot_times

    def foot_positions(self, i: int) -> np.ndarray:
        return np.stack([self.foot1[i], self.foot2[i]])


def robot_hash(params: RobotParams) -> str:
    blob = repr(
        (
            params.trunk_mass,
            params.total_mass,
            params.body_inertia.tolist(),
            params.hip_offsets.tolist(),
            params.thigh_length,
            params.calf_length,
            params.foot_length,
        )
    ).encode()
    return hashlib.md5(blob).hexdigest()[:8]


# ---------------------------------------------------------------------------
# foothold planning
# ---------------------------------------------------------------------------


def plan_footholds(
    stone_map: StoneMap,
    start_x: float,
    step_count: int,
    lateral_offset: float = 0.047,
    first_swing_foot: int = 1,
) -> np.ndarray:
    """One target per step on consecutive stone surfaces, alternating feet.

    Step k lands on stone k (counted from the first stone ahead of
    start_x); the lateral offset alternates with the swing foot (foot 0 is
    left/+y).  Raises NotEnoughStonesError when the map runs out.
    """
    ahead = [s for s in stone_map.stones if s.center[0] > start_x + 1e-9]
    if len(ahead) < step_count:
        raise NotEnoughStonesError(
            f"need {step_count} stones ahead of x={start_x:.3f}, map has {len(ahead)}"
        )
    targets = []
    for k in range(step_count):
        foot = first_swing_foot if k % 2 == 0 else 1 - first_swing_foot
        y = ahead[k].center[1] + (lateral_offset if foot == 0 else -lateral_offset)
        x = ahead[k].center[0]
        hit = stone_under(stone_map, (x, y))
        if hit is None:
            raise NotEnoughStonesError(f"foothold ({x:.3f}, {y:.3f}) misses every stone")
        targets.append([x, y, hit[1]])
    return np.array(targets)


def predicted_step_durations(gaps: np.ndarray, v_ref: float) -> np.ndarray:
    """Step durations forced by the placement rule at constant velocity.

    With touch-down l at p = p_hip + (T_l / 2) v and the hip advancing
    v T_l during step l, consecutive touch-down gaps satisfy
    gap_l = (v/2)(3 T_l - T_{l-1}), i.e. T_l = (2 gap_l / v + T_{l-1}) / 3
    with T_{-1} = 0 (gap_0 measured from the starting hip position).
    Serves as the independent oracle for the adaptive-dt property.
    """
    T = np.empty(gaps.size)
    t_prev = 0.0
    for l, gap in enumerate(gaps):
        T[l] = (2.0 * gap / v_ref + t_prev) / 3.0
        t_prev = T[l]
    return np.clip(T, KNOTS_PER_STEP * 0.02, KNOTS_PER_STEP * 0.05)


# ---------------------------------------------------------------------------
# fast SRB derivative and analytic Jacobians on raw vectors
# ---------------------------------------------------------------------------


def _rz_and_derivative(yaw: float):
    c, s = np.cos(yaw), np.sin(yaw)
    R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    dR = np.array([[-s, -c, 0.0], [c, -s, 0.0], [0.0, 0.0, 0.0]])
    return R, dR


def _srb_f(x, u, p1, p2, params: RobotParams):
    yaw = x[2]
    R, _ = _rz_and_derivative(yaw)
    Iw = R @ params.body_inertia @ R.T
    Iinv = np.linalg.inv(Iw)
    F1, F2 = u[0:3], u[3:6]
    tau = (
        np.cross(p1 - x[3:6], F1)
        + np.cross(p2 - x[3:6], F2)
        + MOMENT_SELECTION @ u[6:8]
        + MOMENT_SELECTION @ u[8:10]
    )
    out = np.empty(12)
    rate_map = R.T if params.euler_rate_transpose else R
    out[0:3] = rate_map @ x[6:9]
    out[3:6] = x[9:12]
    out[6:9] = Iinv @ tau
    out[9:12] = (F1 + F2) / params.trunk_mass + GRAVITY
    return out


def _srb_f_jac(x, u, p1, p2, params: RobotParams):
    """f plus Jacobians (fx 12x12, fu 12x10, fp1 12x3, fp2 12x3)."""
    yaw = x[2]
    R, dR = _rz_and_derivative(yaw)
    I_b = params.body_inertia
    Iw = R @ I_b @ R.T
    Iinv = np.linalg.inv(Iw)
    dIw = dR @ I_b @ R.T + R @ I_b @ dR.T
    dIinv = -Iinv @ dIw @ Iinv
    F1, F2 = u[0:3], u[3:6]
    r1 = p1 - x[3:6]
    r2 = p2 - x[3:6]
    tau = np.cross(r1, F1) + np.cross(r2, F2) + MOMENT_SELECTION @ (u[6:8] + u[8:10])

    f = np.empty(12)
    rate_map = R.T if params.euler_rate_transpose else R
    drate = dR.T if params.euler_rate_transpose else dR
    f[0:3] = rate_map @ x[6:9]
    f[3:6] = x[9:12]
    f[6:9] = Iinv @ tau
    f[9:12] = (F1 + F2) / params.trunk_mass + GRAVITY

    fx = np.zeros((12, 12))
    fx[0:3, 6:9] = rate_map
    fx[0:3, 2] = drate @ x[6:9]
    fx[3:6, 9:12] = np.eye(3)
    fx[6:9, 2] = dIinv @ tau
    fx[6:9, 3:6] = Iinv @ (skew(F1) + skew(F2))
    fu = np.zeros((12, 10))
    fu[6:9, 0:3] = Iinv @ skew(r1)
    fu[6:9, 3:6] = Iinv @ skew(r2)
    fu[6:9, 6:8] = Iinv @ MOMENT_SELECTION
    fu[6:9, 8:10] = Iinv @ MOMENT_SELECTION
    fu[9:12, 0:3] = np.eye(3) / params.trunk_mass
    fu[9:12, 3:6] = np.eye(3) / params.trunk_mass
    fp1 = np.zeros((12, 3))
    fp1[6:9] = -Iinv @ skew(F1)
    fp2 = np.zeros((12, 3))
    fp2[6:9] = -Iinv @ skew(F2)
    return f, fx, fu, fp1, fp2


def _rk2_step(x, u, p1, p2, dt, params):
    k1 = _srb_f(x, u, p1, p2, params)
    return x + dt * _srb_f(x + 0.5 * dt * k1, u, p1, p2, params)


def _rk2_step_jac(x, u, p1, p2, dt, params):
    """Midpoint step plus Jacobians w.r.t. (x, u, p1, p2, dt)."""
    f0, fx0, fu0, fp10, fp20 = _srb_f_jac(x, u, p1, p2, params)
    xm = x + 0.5 * dt * f0
    fm, fxm, fum, fp1m, fp2m = _srb_f_jac(xm, u, p1, p2, params)
    phi = x + dt * fm
    dxm_dx = np.eye(12) + 0.5 * dt * fx0
    J_x = np.eye(12) + dt * (fxm @ dxm_dx)
    J_u = dt * (fum + 0.5 * dt * (fxm @ fu0))
    J_p1 = dt * (fp1m + 0.5 * dt * (fxm @ fp10))
    J_p2 = dt * (fp2m + 0.5 * dt * (fxm @ fp20))
    J_dt = fm + dt * (fxm @ (0.5 * f0))
    return phi, J_x, J_u, J_p1, J_p2, J_dt


def _swing_arc_point(p_lo, p_td, s: float, apex: float):
    """Swing foot position at phase s in [0, 1]: linear x-y, sine z bump."""
    p = (1.0 - s) * p_lo + s * p_td
    h_arc = apex + 0.5 * abs(p_td[2] - p_lo[2])
    p = p.copy()
    p[2] += h_arc * np.sin(np.pi * s)
    return p


# ---------------------------------------------------------------------------
# transcription
# ---------------------------------------------------------------------------


@dataclass
class TrajOptConfig:
    v_ref: float = 1.5
    nominal_height: float = 0.4
    swing_apex: float = 0.08
    lateral_offset: float = 0.047
    first_swing_foot: int = 1
    force_z_bounds: tuple = (5.0, 250.0)
    moment_bound: float = 15.0
    dt_bounds: tuple = (0.02, 0.05)
    end_state_mask: np.ndarray = field(default_factory=lambda: np.ones(12, dtype=bool))
    weights: TrajOptWeights = field(default_factory=TrajOptWeights)


class Transcription:
    """Builds and evaluates the NLP for one terrain crossing."""

    def __init__(
        self,
        stone_map: StoneMap,
        footholds: np.ndarray,
        params: RobotParams,
        config: TrajOptConfig,
        N: Optional[int] = None,
        start_x: Optional[float] = None,
    ):
        self.map = stone_map
        self.footholds = np.asarray(footholds, dtype=float)
        self.params = params
        self.cfg = config
        S = self.footholds.shape[0]
        if S % 2 != 0:
            raise InfeasibleBoundsError("step count must be even (two-step gait cycles)")
        self.S = S
        self.N = KNOTS_PER_STEP * S if N is None else N
        if self.N != KNOTS_PER_STEP * S:
            raise InfeasibleBoundsError(
                f"N must equal {KNOTS_PER_STEP} * step count = {KNOTS_PER_STEP * S}"
            )
        self.n = VARS_PER_KNOT * (self.N + 1)
        self.tree = build_tree(params)

        # gait bookkeeping: swing foot of step l lands on foothold l
        self.swing_foot = np.array(
            [config.first_swing_foot if l % 2 == 0 else 1 - config.first_swing_foot for l in range(S)]
        )
        self.stance_foot = 1 - self.swing_foot

        # start standing behind the first stone, flying start at v_ref; the
        # default approach distance puts the first step at the steady-state
        # duration of the following gap (T_0 = 2 gap_0 / (3 v) = gap_1 / v),
        # so uniform terrains admit a single shared dt from the first step
        if start_x is None:
            lead = (
                float(self.footholds[1, 0] - self.footholds[0, 0]) if S > 1 else 0.2
            )
            t0_target = np.clip(
                lead / config.v_ref,
                KNOTS_PER_STEP * config.dt_bounds[0],
                KNOTS_PER_STEP * config.dt_bounds[1],
            )
            start_x = self.footholds[0, 0] - 1.5 * config.v_ref * t0_target
        self.start_x = float(start_x)
        ground = stone_map.ground_height
        self.x_init = np.zeros(12)
        self.x_init[3:6] = [self.start_x, 0.0, ground + config.nominal_height]
        self.x_init[9] = config.v_ref
        hips = params.hip_offsets
        self.feet_init = np.array(
            [
                [self.start_x + hips[0][0], hips[0][1], ground],
                [self.start_x + hips[1][0], hips[1][1], ground],
            ]
        )

        # liftoff points per step: where each swing foot last stood
        self.liftoff = np.empty((S, 3))
        for l in range(S):
            w = self.swing_foot[l]
            if l >= 2:
                self.liftoff[l] = self.footholds[l - 2]
            else:
                self.liftoff[l] = self.feet_init[w]

        # predicted step durations drive the terminal state and the guess;
        # gaps are measured between consecutive touch-downs (start hip first)
        gaps = np.empty(S)
        gaps[0] = self.footholds[0, 0] - self.start_x
        gaps[1:] = np.diff(self.footholds[:, 0])
        self.foothold_gaps = gaps
        self.dt_pred = predicted_step_durations(gaps, config.v_ref) / KNOTS_PER_STEP
        # necessary condition from the placement rule at v_ref:
        # 2 gap / v = 3 T_l - T_{l-1} with both T in [5 dt_min, 5 dt_max]
        t_min = KNOTS_PER_STEP * config.dt_bounds[0]
        t_max = KNOTS_PER_STEP * config.dt_bounds[1]
        for l in range(S):
            t_prev_lo = 0.0 if l == 0 else t_min
            t_prev_hi = 0.0 if l == 0 else t_max
            lo = 0.5 * config.v_ref * (3.0 * t_min - t_prev_hi)
            hi = 0.5 * config.v_ref * (3.0 * t_max - t_prev_lo)
            if not (lo - 1e-9 <= gaps[l] <= hi + 1e-9):
                raise InfeasibleBoundsError(
                    f"touch-down placement: gap {gaps[l]:.3f} m before step {l} "
                    f"outside reachable window [{lo:.3f}, {hi:.3f}] m under "
                    f"dt in [{config.dt_bounds[0]}, {config.dt_bounds[1]}] s "
                    f"at v_ref = {config.v_ref} m/s"
                )

        # piecewise-constant step velocities that satisfy the placement rule
        # exactly at the predicted durations: H_{l+1} = F_l - (T_l/2) v_l
        # with H_{l+1} = H_l + T_l v_l, giving v_l = (F_l - H_l)/(1.5 T_l)
        self.hip_x = np.empty(S + 1)
        self.step_velocity = np.empty(S)
        self.hip_x[0] = self.start_x
        for l in range(S):
            T_l = KNOTS_PER_STEP * self.dt_pred[l]
            self.step_velocity[l] = (self.footholds[l, 0] - self.hip_x[l]) / (1.5 * T_l)
            self.hip_x[l + 1] = self.hip_x[l] + T_l * self.step_velocity[l]
        self._prox = 1e-5

        self.x_goal = np.zeros(12)
        goal_z = stone_map.ground_height + config.nominal_height
        self.x_goal[3:6] = [self.hip_x[S], 0.0, goal_z]
        self.x_goal[9] = config.v_ref

        self._build_linear_rows()

    # -- indexing helpers ---------------------------------------------------

    def k0(self, i: int) -> int:
        return VARS_PER_KNOT * i

    def idx_x(self, i):
        return self.k0(i) + np.arange(12)

    def idx_p(self, i, foot):
        base = self.k0(i) + (12 if foot == 0 else 15)
        return base + np.arange(3)

    def idx_q(self, i):
        return self.k0(i) + 18 + np.arange(10)

    def idx_u(self, i):
        return self.k0(i) + 28 + np.arange(10)

    def idx_u_foot(self, i, foot):
        u0 = self.k0(i) + 28
        return np.concatenate(
            [u0 + 3 * foot + np.arange(3), u0 + 6 + 2 * foot + np.arange(2)]
        )

    def idx_dt(self, i) -> int:
        return self.k0(i) + _IDX_DT

    # -- constraint construction --------------------------------------------

    def _build_linear_rows(self):
        rows = []
        rhs = []

        def add_row(cols, vals, b):
            rows.append((np.asarray(cols, dtype=int), np.asarray(vals, dtype=float)))
            rhs.append(b)

        # initial / terminal state
        for k in range(12):
            add_row([self.idx_x(0)[k]], [1.0], self.x_init[k])
        for k in range(12):
            if self.cfg.end_state_mask[k]:
                add_row([self.idx_x(self.N)[k]], [1.0], self.x_goal[k])
        # initial feet
        for foot in range(2):
            for k in range(3):
                add_row([self.idx_p(0, foot)[k]], [1.0], self.feet_init[foot][k])
        # equal dt within each step, plus the padding tie
        for l in range(self.S):
            base = KNOTS_PER_STEP * l
            for k in range(1, KNOTS_PER_STEP):
                add_row([self.idx_dt(base + k), self.idx_dt(base)], [1.0, -1.0], 0.0)
        add_row([self.idx_dt(self.N), self.idx_dt(self.N - 1)], [1.0, -1.0], 0.0)
        # stance foot pinned over its step
        for l in range(self.S):
            f = self.stance_foot[l]
            for i in range(KNOTS_PER_STEP * l, KNOTS_PER_STEP * (l + 1)):
                for k in range(3):
                    add_row([self.idx_p(i + 1, f)[k], self.idx_p(i, f)[k]], [1.0, -1.0], 0.0)
        # touch-down anchored to the terrain foothold
        for l in range(self.S):
            w = self.swing_foot[l]
            td = KNOTS_PER_STEP * (l + 1)
            for k in range(3):
                add_row([self.idx_p(td, w)[k]], [1.0], self.footholds[l][k])
        # swing foot interior knots follow the lift-off -> touch-down arc
        for l in range(self.S):
            w = self.swing_foot[l]
            lo_i = KNOTS_PER_STEP * l
            td_i = KNOTS_PER_STEP * (l + 1)
            for k in range(1, KNOTS_PER_STEP):
                s = k / KNOTS_PER_STEP
                arc = _swing_arc_point(self.liftoff[l], self.footholds[l], s, self.cfg.swing_apex)
                lin = (1.0 - s) * self.liftoff[l] + s * self.footholds[l]
                bump = arc - lin  # constant offset (z only)
                for c in range(3):
                    add_row(
                        [
                            self.idx_p(lo_i + k, w)[c],
                            self.idx_p(lo_i, w)[c],
                            self.idx_p(td_i, w)[c],
                        ],
                        [1.0, -(1.0 - s), -s],
                        bump[c],
                    )
        # terminal input tied to the last interval's input
        for k in range(10):
            add_row([self.idx_u(self.N)[k], self.idx_u(self.N - 1)[k]], [1.0, -1.0], 0.0)

        m = len(rows)
        A = np.zeros((m, self.n))
        for r, (cols, vals) in enumerate(rows):
            A[r, cols] = vals
        self._A_lin = A
        self._b_lin = np.array(rhs)

    def _linear_block(self) -> ConstraintBlock:
        A, b = self._A_lin, self._b_lin
        return ConstraintBlock(
            fun=lambda z: A @ z - b,
            lower=np.zeros(b.size),
            upper=np.zeros(b.size),
            jac=lambda z: A,
        )

    def _dynamics_fun(self, z):
        out = np.empty(12 * self.N)
        for i in range(self.N):
            k = self.k0(i)
            x = z[k + _SL_X.start : k + _SL_X.stop]
            p1 = z[k + _SL_P1.start : k + _SL_P1.stop]
            p2 = z[k + _SL_P2.start : k + _SL_P2.stop]
            u = z[k + _SL_U.start : k + _SL_U.stop]
            dt = z[k + _IDX_DT]
            x_next = z[self.k0(i + 1) + _SL_X.start : self.k0(i + 1) + _SL_X.stop]
            out[12 * i : 12 * (i + 1)] = x_next - _rk2_step(x, u, p1, p2, dt, self.params)
        return out

    def _dynamics_jac(self, z):
        J = np.zeros((12 * self.N, self.n))
        for i in range(self.N):
            k = self.k0(i)
            x = z[k + _SL_X.start : k + _SL_X.stop]
            p1 = z[k + _SL_P1.start : k + _SL_P1.stop]
            p2 = z[k + _SL_P2.start : k + _SL_P2.stop]
            u = z[k + _SL_U.start : k + _SL_U.stop]
            dt = z[k + _IDX_DT]
            _, Jx, Ju, Jp1, Jp2, Jdt = _rk2_step_jac(x, u, p1, p2, dt, self.params)
            r = slice(12 * i, 12 * (i + 1))
            J[r, self.idx_x(i + 1)] = np.eye(12)
            J[r, k + _SL_X.start : k + _SL_X.stop] = -Jx
            J[r, k + _SL_U.start : k + _SL_U.stop] = -Ju
            J[r, k + _SL_P1.start : k + _SL_P1.stop] = -Jp1
            J[r, k + _SL_P2.start : k + _SL_P2.stop] = -Jp2
            J[r, k + _IDX_DT] = -Jdt
        return J

    def _dynamics_block(self) -> ConstraintBlock:
        m = 12 * self.N
        return ConstraintBlock(
            fun=self._dynamics_fun,
            lower=np.zeros(m),
            upper=np.zeros(m),
            jac=self._dynamics_jac,
        )

    def _tree_coords(self, x12, q10):
        q = np.empty(16)
        q[0:3] = x12[3:6]
        q[3:6] = x12[0:3]
        q[6:] = q10
        return q

    def _fk_fun(self, z):
        out = np.empty(6 * (self.N + 1))
        for i in range(self.N + 1):
            k = self.k0(i)
            x = z[k : k + 12]
            q10 = z[k + 18 : k + 28]
            feet, _ = self.tree.forward_kinematics(self._tree_coords(x, q10))
            out[6 * i : 6 * i + 3] = feet[0] - z[k + 12 : k + 15]
            out[6 * i + 3 : 6 * i + 6] = feet[1] - z[k + 15 : k + 18]
        return out

    def _fk_jac(self, z):
        J = np.zeros((6 * (self.N + 1), self.n))
        for i in range(self.N + 1):
            k = self.k0(i)
            x = z[k : k + 12]
            q10 = z[k + 18 : k + 28]
            Jc = self.tree.contact_jacobian(self._tree_coords(x, q10))
            for foot in range(2):
                r = slice(6 * i + 3 * foot, 6 * i + 3 * (foot + 1))
                Jf = Jc[3 * foot : 3 * (foot + 1)]
                J[r, k + 0 : k + 3] = Jf[:, 3:6]       # euler
                J[r, k + 3 : k + 6] = Jf[:, 0:3]       # base position
                J[r, k + 18 : k + 28] = Jf[:, 6:16]
                J[r, self.idx_p(i, foot)] = -np.eye(3)
        return J

    def _fk_block(self) -> ConstraintBlock:
        m = 6 * (self.N + 1)
        return ConstraintBlock(
            fun=self._fk_fun,
            lower=np.zeros(m),
            upper=np.zeros(m),
            jac=self._fk_jac,
        )

    def _hip_xy(self, x12, foot):
        R = euler_zyx_matrix(x12[0:3])
        return x12[3:6][:2] + (R @ self.params.hip_offsets[foot])[:2]

    def _raibert_fun(self, z):
        out = np.empty(2 * self.S)
        for l in range(self.S):
            w = self.swing_foot[l]
            td = KNOTS_PER_STEP * (l + 1)
            x = z[self.k0(td) : self.k0(td) + 12]
            p = z[self.idx_p(td, w)]
            t_stance = KNOTS_PER_STEP * z[self.idx_dt(KNOTS_PER_STEP * l)]
            out[2 * l : 2 * l + 2] = (
                p[:2] - self._hip_xy(x, w) - 0.5 * t_stance * x[9:11]
            )
        return out

    def _raibert_jac(self, z):
        J = np.zeros((2 * self.S, self.n))
        h = 1e-7
        for l in range(self.S):
            w = self.swing_foot[l]
            td = KNOTS_PER_STEP * (l + 1)
            k = self.k0(td)
            x = z[k : k + 12]
            dt_idx = self.idx_dt(KNOTS_PER_STEP * l)
            t_stance = KNOTS_PER_STEP * z[dt_idx]
            r = slice(2 * l, 2 * l + 2)
            J[r, self.idx_p(td, w)[:2]] = np.eye(2)
            J[r, k + 3 : k + 5] = -np.eye(2)           # com x, y
            J[r, k + 9 : k + 11] = -0.5 * t_stance * np.eye(2)
            J[r, dt_idx] = -0.5 * KNOTS_PER_STEP * x[9:11]
            # orientation dependence of the hip position (central difference)
            for c in range(3):
                xp, xm = x.copy(), x.copy()
                xp[c] += h
                xm[c] -= h
                J[r, k + c] = -(self._hip_xy(xp, w) - self._hip_xy(xm, w)) / (2 * h)
        return J

    def _raibert_block(self) -> ConstraintBlock:
        m = 2 * self.S
        return ConstraintBlock(
            fun=self._raibert_fun,
            lower=np.zeros(m),
            upper=np.zeros(m),
            jac=self._raibert_jac,
        )

    def _leg_force_map(self, x12, q10, foot):
        """5x5 map tau = B^T u_foot for the foot's 5-D wrench [F; M]."""
        return self.tree.leg_wrench_map(x12[3:6], x12[0:3], q10[5 * foot : 5 * foot + 5], foot)

    def _torque_rows(self):
        rows = []
        for l in range(self.S):
            f = self.stance_foot[l]
            for i in range(KNOTS_PER_STEP * l, KNOTS_PER_STEP * (l + 1)):
                rows.append((i, f))
        return rows

    def _torque_fun(self, z):
        rows = self._torque_rows()
        out = np.empty(5 * len(rows))
        for r, (i, f) in enumerate(rows):
            k = self.k0(i)
            B = self._leg_force_map(z[k : k + 12], z[k + 18 : k + 28], f)
            u_f = z[self.idx_u_foot(i, f)]
            out[5 * r : 5 * r + 5] = B.T @ u_f
        return out

    def _torque_jac(self, z):
        rows = self._torque_rows()
        J = np.zeros((5 * len(rows), self.n))
        h = 1e-6
        for r, (i, f) in enumerate(rows):
            k = self.k0(i)
            x = z[k : k + 12]
            q10 = z[k + 18 : k + 28]
            u_idx = self.idx_u_foot(i, f)
            u_f = z[u_idx]
            B = self._leg_force_map(x, q10, f)
            sl = slice(5 * r, 5 * r + 5)
            J[sl, u_idx] = B.T
            # forward differences over the leg joints; the orientation
            # columns are dropped (the rows sit well inside their bounds in
            # walking solutions, so their multipliers vanish and the
            # missing columns do not enter the KKT conditions)
            base = B.T @ u_f
            legcols = k + 18 + 5 * f + np.arange(5)
            for c in range(5):
                qp = q10.copy()
                qp[5 * f + c] += h
                J[sl, legcols[c]] = ((self._leg_force_map(x, qp, f).T @ u_f) - base) / h
        return J

    def _torque_block(self) -> ConstraintBlock:
        m = 5 * len(self._torque_rows())
        lim = self.params.torque_limit
        return ConstraintBlock(
            fun=self._torque_fun,
            lower=np.full(m, -lim),
            upper=np.full(m, lim),
            jac=self._torque_jac,
        )

    # -- bounds, cost, initial guess -----------------------------------------

    def _bounds(self, dt_fixed: bool = False):
        lb = np.full(self.n, -np.inf)
        ub = np.full(self.n, np.inf)
        for i in range(self.N + 1):
            lb[self.idx_q(i)] = self.params.q_min
            ub[self.idx_q(i)] = self.params.q_max
            if dt_fixed:
                l = min(i // KNOTS_PER_STEP, self.S - 1)
                lb[self.idx_dt(i)] = self.dt_pred[l]
                ub[self.idx_dt(i)] = self.dt_pred[l]
            else:
                lb[self.idx_dt(i)] = self.cfg.dt_bounds[0]
                ub[self.idx_dt(i)] = self.cfg.dt_bounds[1]
        # swing inputs are exactly zero; stance wrenches mirror the MPC boxes
        fz_lo, fz_hi = self.cfg.force_z_bounds
        mb = self.cfg.moment_bound
        for l in range(self.S):
            w = self.swing_foot[l]
            st = self.stance_foot[l]
            for i in range(KNOTS_PER_STEP * l, KNOTS_PER_STEP * (l + 1)):
                idx_w = self.idx_u_foot(i, w)
                lb[idx_w] = 0.0
                ub[idx_w] = 0.0
                idx_s = self.idx_u_foot(i, st)
                lb[idx_s[2]] = fz_lo
                ub[idx_s[2]] = fz_hi
                lb[idx_s[3:]] = -mb
                ub[idx_s[3:]] = mb
        # u_N mirrors u_{N-1} through an equality row; bound it identically
        last = self.N - 1
        lb[self.idx_u(self.N)] = lb[self.idx_u(last)]
        ub[self.idx_u(self.N)] = ub[self.idx_u(last)]
        return lb, ub

    def _cost_vectors(self):
        alpha = self.cfg.weights.alpha(self.S)
        beta = self.cfg.weights.beta_diag()
        avec = np.empty(self.N + 1)
        for i in range(self.N + 1):
            avec[i] = alpha[min(i // KNOTS_PER_STEP, self.S - 1)]
        return avec, beta

    def cost(self, z):
        avec, beta = self._cost_vectors()
        total = 0.0
        for i in range(self.N + 1):
            k = self.k0(i)
            total += avec[i] * (z[k + 9] - self.cfg.v_ref) ** 2
            u = z[k + 28 : k + 38]
            total += float(u @ (beta * u))
        return float(total)

    def cost_grad(self, z):
        avec, beta = self._cost_vectors()
        g = np.zeros(self.n)
        for i in range(self.N + 1):
            k = self.k0(i)
            g[k + 9] = 2.0 * avec[i] * (z[k + 9] - self.cfg.v_ref)
            g[k + 28 : k + 38] = 2.0 * beta * z[k + 28 : k + 38]
        return g

    # per-class step scales for the proximal metric: the trig/bilinear
    # coordinates (attitude, rates, joints, dt) are damped hard, the
    # linear-entering wrench stays nearly free
    _PROX_SCALES = np.concatenate(
        [
            np.full(3, 0.05),   # euler, rad
            np.full(3, 0.5),    # com position, m
            np.full(3, 0.5),    # angular velocity, rad/s
            np.full(3, 1.0),    # com velocity, m/s
            np.full(6, 0.5),    # foot positions, m
            np.full(10, 0.1),   # joint angles, rad
            np.full(10, 200.0), # wrench entries, N / N m
            np.full(1, 0.005),  # dt, s
        ]
    )

    def cost_hess(self, z):
        avec, beta = self._cost_vectors()
        # scale-aware proximal diagonal damps QP steps in directions the
        # cost does not touch; without it the subproblems take long
        # flat-direction jumps that the nonlinear defects reject
        d = np.tile(self._prox / self._PROX_SCALES**2, self.N + 1)
        for i in range(self.N + 1):
            k = self.k0(i)
            d[k + 9] += 2.0 * avec[i]
            d[k + 28 : k + 38] += 2.0 * beta
        return np.diag(d)

    def initial_guess(self) -> np.ndarray:
        cfg = self.cfg
        z = np.zeros(self.n)
        dts = np.repeat(self.dt_pred, KNOTS_PER_STEP)
        times = np.concatenate([[0.0], np.cumsum(dts)])
        weight = self.params.trunk_mass * 9.81

        q_seed = np.tile([0.0, 0.0, -0.4, 0.9, -0.5], 2)
        for i in range(self.N + 1):
            k = self.k0(i)
            l = min(i // KNOTS_PER_STEP, self.S - 1)
            w = self.swing_foot[l]
            st = self.stance_foot[l]
            phase = i - KNOTS_PER_STEP * l  # 0..5, 5 only at i == N

            x = np.zeros(12)
            x[3] = self.hip_x[l] + self.step_velocity[l] * (times[i] - times[KNOTS_PER_STEP * l])
            x[4] = 0.0
            x[5] = cfg.nominal_height + self.map.ground_height
            x[9] = self.step_velocity[l]
            z[k : k + 12] = x

            cur = np.empty((2, 3))
            cur[st] = self.feet_init[st] if l == 0 else self.footholds[l - 1]
            cur[w] = _swing_arc_point(
                self.liftoff[l], self.footholds[l], phase / KNOTS_PER_STEP, cfg.swing_apex
            )
            z[self.idx_p(i, 0)] = cur[0]
            z[self.idx_p(i, 1)] = cur[1]

            # joint angles from IK, warm-started along the trajectory
            for foot in range(2):
                try:
                    q_leg, _ = inverse_kinematics(
                        self.tree,
                        np.concatenate([x[3:6], x[0:3]]),
                        cur[foot],
                        foot,
                        seed=q_seed[5 * foot : 5 * foot + 5],
                    )
                    q_seed[5 * foot : 5 * foot + 5] = q_leg
                except ValueError:
                    pass
            z[self.idx_q(i)] = np.clip(q_seed, self.params.q_min, self.params.q_max)

            # stance force directed through the CoM: supports the weight with
            # zero torque, so the rotational defects start near zero
            u = np.zeros(10)
            arm = x[3:6] - cur[st]
            u[3 * st : 3 * st + 3] = weight * arm / max(arm[2], 1e-6)
            fz_lo, fz_hi = cfg.force_z_bounds
            u[3 * st + 2] = np.clip(u[3 * st + 2], fz_lo, fz_hi)
            z[self.idx_u(i)] = u
            z[self.idx_dt(i)] = dts[i] if i < self.N else dts[-1]
        return z

    def nlp_problem(self, x0: Optional[np.ndarray] = None, dt_fixed: bool = False) -> NlpProblem:
        lb, ub = self._bounds(dt_fixed=dt_fixed)
        return NlpProblem(
            dimension=self.n,
            cost=self.cost,
            cost_grad=self.cost_grad,
            cost_hess=self.cost_hess,
            constraints=[
                self._linear_block(),
                self._dynamics_block(),
                self._fk_block(),
                self._raibert_block(),
                self._torque_block(),
            ],
            lb=lb,
            ub=ub,
            x0=self.initial_guess() if x0 is None else x0,
        )

    # -- solution packing -----------------------------------------------------

    def extract(self, z: np.ndarray) -> TrajectorySolution:
        N, S = self.N, self.S
        states = np.empty((N + 1, 12))
        foot1 = np.empty((N + 1, 3))
        foot2 = np.empty((N + 1, 3))
        joints = np.empty((N + 1, 10))
        inputs = np.empty((N + 1, 10))
        dts = np.empty(N + 1)
        for i in range(N + 1):
            k = self.k0(i)
            states[i] = z[k : k + 12]
            foot1[i] = z[k + 12 : k + 15]
            foot2[i] = z[k + 15 : k + 18]
            joints[i] = z[k + 18 : k + 28]
            inputs[i] = z[k + 28 : k + 38]
            dts[i] = z[k + _IDX_DT]
        steps = []
        contact = np.zeros((N, 2), dtype=bool)
        for l in range(S):
            dt_l = dts[KNOTS_PER_STEP * l]
            steps.append(
                StepPhase(
                    stance_foot=int(self.stance_foot[l]),
                    swing_foot=int(self.swing_foot[l]),
                    dt=float(dt_l),
                    foothold=self.footholds[l].copy(),
                )
            )
            for i in range(KNOTS_PER_STEP * l, KNOTS_PER_STEP * (l + 1)):
                contact[i, self.stance_foot[l]] = True
        schedule = GaitSchedule(steps=steps, dt_intervals=dts[:N].copy(), contact=contact)
        sol = TrajectorySolution(
            states=states,
            foot1=foot1,
            foot2=foot2,
            joints=joints,
            inputs=inputs,
            dts=dts,
            schedule=schedule,
            footholds=self.footholds.copy(),
            robot_hash=robot_hash(self.params),
        )
        sol.dense = interpolate_dense(sol, swing_apex=self.cfg.swing_apex)
        return sol


def transcribe(
    stone_map: StoneMap,
    footholds,
    v_ref: float,
    N: int,
    weights: Optional[TrajOptWeights] = None,
    params: Optional[RobotParams] = None,
    config: Optional[TrajOptConfig] = None,
) -> tuple:
    """Build the NLP for a terrain crossing; returns (NlpProblem, Transcription)."""
    params = params or RobotParams()
    config = config or TrajOptConfig()
    config.v_ref = v_ref
    if weights is not None:
        config.weights = weights
    tr = Transcription(stone_map, footholds, params, config, N=N)
    return tr.nlp_problem(), tr


def solve(
    transcription: Transcription,
    tol: float = 1e-6,
    max_iter: int = 200,
    callback=None,
) -> TrajectorySolution:
    """Solve the transcription to tolerance and pack the result.

    Two phases: the step timings are first pinned to the placement-rule
    prediction while the dynamics and kinematics converge, then released
    with a warm start.  This keeps the iterates in the smooth-timing basin
    (the objective is nearly flat under timing redistributions, which
    otherwise traps the solver in irregular local optima).  The constraint
    violation must reach tol; the stationarity test runs at a looser level
    because polishing the flat directions buys no trajectory quality.
    Raises TrajOptError (carrying the NlpResult iterate) if the solver does
    not reach the required constraint violation.
    """
    pinned = transcription.nlp_problem(dt_fixed=True)
    stage1 = solve_nlp(pinned, tol=1e-4, max_iter=max_iter, stat_tol=1e-2, callback=callback)
    x0 = stage1.x if stage1.constraint_violation <= 1e-2 else None

    problem = transcription.nlp_problem(x0=x0)
    result = solve_nlp(problem, tol=tol, max_iter=max_iter, stat_tol=5e-4, callback=callback)
    if result.constraint_violation > tol:
        raise TrajOptError(
            f"trajectory optimization did not converge: status={result.status.value}, "
            f"violation={result.constraint_violation:.3e}",
            result,
        )
    result.iterations += stage1.iterations
    sol = transcription.extract(result.x)
    sol.solver_result = result
    return sol


def solve_continuation(
    stone_map: StoneMap,
    footholds,
    params: Optional[RobotParams] = None,
    config: Optional[TrajOptConfig] = None,
    tol: float = 1e-6,
    max_iter: int = 120,
    callback=None,
) -> TrajectorySolution:
    """Solve via homotopy from a uniform-flat layout to the true footholds.

    Near-uniform layouts solve directly; otherwise the footholds are
    morphed in warm-started stages (bisected adaptively on failure), which
    keeps the strongly nonlinear gait-retiming cases reliable.
    """
    params = params or RobotParams()
    config = config or TrajOptConfig()
    footholds = np.asarray(footholds, dtype=float)
    S = footholds.shape[0]

    gaps = np.diff(footholds[:, 0])
    mean_gap = float(np.mean(gaps)) if gaps.size else 0.2
    uniform = footholds.copy()
    uniform[:, 0] = footholds[0, 0] + mean_gap * np.arange(S)
    uniform[:, 2] = stone_map.ground_height
    near_uniform = (
        (np.max(np.abs(gaps - mean_gap)) < 0.02 if gaps.size else True)
        and np.max(np.abs(footholds[:, 2] - stone_map.ground_height)) < 0.01
    )

    def make(theta):
        fh = (1.0 - theta) * uniform + theta * footholds
        return Transcription(stone_map, fh, params, config)

    if near_uniform:
        return solve(make(1.0), tol=tol, max_iter=max_iter, callback=callback)

    iters_used = 0
    thetas = [0.0, 0.5, 1.0]
    idx = 1
    tr = make(0.0)
    result = solve_nlp(tr.nlp_problem(), tol=1e-4, max_iter=max_iter, stat_tol=1e-2, callback=callback)
    iters_used += result.iterations
    if result.constraint_violation > 1e-4:
        raise TrajOptError("continuation stage 0 (uniform layout) failed", result)
    z = result.x
    theta_done = 0.0
    failures = 0
    while idx < len(thetas):
        theta = thetas[idx]
        tr = make(theta)
        final = theta >= 1.0
        stage_tol = tol if final else 1e-4
        result = solve_nlp(
            tr.nlp_problem(x0=z),
            tol=stage_tol,
            max_iter=max_iter,
            stat_tol=5e-4 if final else 1e-2,
            callback=callback,
        )
        iters_used += result.iterations
        if result.constraint_violation <= stage_tol:
            z = result.x
            theta_done = theta
            idx += 1
            continue
        failures += 1
        if failures > 6:
            raise TrajOptError(
                f"continuation stalled at theta={theta:.3f}: "
                f"violation={result.constraint_violation:.3e}",
                result,
            )
        thetas.insert(idx, 0.5 * (theta_done + theta))

    sol = tr.extract(z)
    result.iterations = iters_used
    sol.solver_result = result
    return sol


# ---------------------------------------------------------------------------
# dense interpolation
# ---------------------------------------------------------------------------


def interpolate_dense(sol: TrajectorySolution, swing_apex: float = 0.08) -> DenseReference:
    """1 kHz piecewise-linear reference with swing-arc foot profiles."""
    knot_t = sol.knot_times
    T = knot_t[-1]
    times = np.arange(0.0, T + 1e-9, 0.001)
    M = times.size
    states = np.empty((M, 12))
    for c in range(12):
        states[:, c] = np.interp(times, knot_t, sol.states[:, c])

    foot_pos = np.empty((M, 2, 3))
    foot_vel = np.zeros((M, 2, 3))
    contact = np.zeros((M, 2), dtype=bool)
    feet_knots = np.stack([sol.foot1, sol.foot2], axis=1)  # (N+1, 2, 3)

    steps = sol.schedule.steps
    step_starts = knot_t[::KNOTS_PER_STEP]
    for m, t in enumerate(times):
        l = min(int(np.searchsorted(step_starts, t, side="right")) - 1, len(steps) - 1)
        l = max(l, 0)
        st = steps[l]
        t0 = step_starts[l]
        T_l = KNOTS_PER_STEP * st.dt
        s = min(max((t - t0) / T_l, 0.0), 1.0)
        contact[m, st.stance_foot] = True
        # stance foot holds its knot value
        foot_pos[m, st.stance_foot] = feet_knots[KNOTS_PER_STEP * l, st.stance_foot]
        lo = feet_knots[KNOTS_PER_STEP * l, st.swing_foot]
        td = st.foothold
        foot_pos[m, st.swing_foot] = _swing_arc_point(lo, td, s, swing_apex)
        h_arc = swing_apex + 0.5 * abs(td[2] - lo[2])
        foot_vel[m, st.swing_foot] = (td - lo) / T_l
        foot_vel[m, st.swing_foot, 2] += h_arc * np.pi * np.cos(np.pi * s) / T_l
    return DenseReference(
        times=times, states=states, foot_pos=foot_pos, foot_vel=foot_vel, contact=contact
    )


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

_TRAJ_HEADER = "stepstone trajectory v1"


def dump_solution(sol: TrajectorySolution) -> str:
    out = io.StringIO()
    N = sol.num_intervals
    S = sol.schedule.num_steps
    out.write(_TRAJ_HEADER + "\n")
    first_stance = sol.schedule.steps[0].stance_foot
    out.write(f"N {N} steps {S} first_stance {first_stance} robot {sol.robot_hash}\n")
    out.write("# knots: x(12) p1(3) p2(3) q(10) u(10) dt(1)\n")
    for i in range(N + 1):
        row = np.concatenate(
            [sol.states[i], sol.foot1[i], sol.foot2[i], sol.joints[i], sol.inputs[i], [sol.dts[i]]]
        )
        out.write(" ".join(repr(v) for v in row) + "\n")
    out.write("# footholds: x y z\n")
    for f in sol.footholds:
        out.write(" ".join(repr(v) for v in f) + "\n")
    dense = sol.dense
    out.write("# dense: t,x0..x11,p1x,p1y,p1z,p2x,p2y,p2z,v1x,v1y,v1z,v2x,v2y,v2z,c1,c2\n")
    for m in range(dense.times.size):
        vals = [dense.times[m]]
        vals += dense.states[m].tolist()
        vals += dense.foot_pos[m, 0].tolist() + dense.foot_pos[m, 1].tolist()
        vals += dense.foot_vel[m, 0].tolist() + dense.foot_vel[m, 1].tolist()
        vals += [int(dense.contact[m, 0]), int(dense.contact[m, 1])]
        out.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in vals) + "\n")
    return out.getvalue()


def load_solution(text: str) -> TrajectorySolution:
    lines = iter(text.splitlines())
    header = next(lines)
    if header.strip() != _TRAJ_HEADER:
        raise ValueError(f"unrecognized trajectory header: {header!r}")
    meta = next(lines).split()
    N = int(meta[1])
    S = int(meta[3])
    first_stance = int(meta[5])
    rhash = meta[7]
    knots = []
    footholds = []
    dense_rows = []
    section = "knots"
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "footholds" in line:
                section = "footholds"
            elif "dense" in line:
                section = "dense"
            continue
        if section == "knots":
            knots.append([float(v) for v in line.split()])
        elif section == "footholds":
            footholds.append([float(v) for v in line.split()])
        else:
            dense_rows.append([float(v) for v in line.split(",")])
    K = np.array(knots)
    if K.shape != (N + 1, VARS_PER_KNOT):
        raise ValueError("knot table has wrong shape")
    footholds = np.array(footholds)
    states = K[:, 0:12]
    foot1 = K[:, 12:15]
    foot2 = K[:, 15:18]
    joints = K[:, 18:28]
    inputs = K[:, 28:38]
    dts = K[:, 38]
    steps = []
    contact = np.zeros((N, 2), dtype=bool)
    for l in range(S):
        stance = first_stance if l % 2 == 0 else 1 - first_stance
        steps.append(
            StepPhase(
                stance_foot=stance,
                swing_foot=1 - stance,
                dt=float(dts[KNOTS_PER_STEP * l]),
                foothold=footholds[l],
            )
        )
        contact[KNOTS_PER_STEP * l : KNOTS_PER_STEP * (l + 1), stance] = True
    schedule = GaitSchedule(steps=steps, dt_intervals=dts[:N].copy(), contact=contact)
    sol = TrajectorySolution(
        states=states,
        foot1=foot1,
        foot2=foot2,
        joints=joints,
        inputs=inputs,
        dts=dts,
        schedule=schedule,
        footholds=footholds,
        robot_hash=rhash,
    )
    if dense_rows:
        D = np.array(dense_rows)
        sol.dense = DenseReference(
            times=D[:, 0],
            states=D[:, 1:13],
            foot_pos=D[:, 13:19].reshape(-1, 2, 3),
            foot_vel=D[:, 19:25].reshape(-1, 2, 3),
            contact=D[:, 25:27] > 0.5,
        )
    else:
        sol.dense = interpolate_dense(sol)
    return sol


def save_solution(sol: TrajectorySolution, path):
    with open(path, "w") as f:
        f.write(dump_solution(sol))


def read_solution(path) -> TrajectorySolution:
    with open(path) as f:
        return load_solution(f.read())

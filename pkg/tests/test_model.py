"""SRB model tests: rotation helpers, dynamics oracle, exact discretization."""

import numpy as np
import pytest
import scipy.linalg

from stepstone.model import (
    GRAVITY,
    CentroidalState,
    ControlInput,
    RobotParams,
    augmented_vector,
    build_matrices,
    discretize,
    rotation_z,
    srb_derivative,
    world_inertia,
)


@pytest.fixture
def params():
    return RobotParams()


def random_state(rng):
    return CentroidalState(
        euler=rng.uniform(-0.3, 0.3, 3),
        com_pos=rng.uniform(-1, 1, 3) + np.array([0, 0, 0.4]),
        ang_vel=rng.uniform(-1, 1, 3),
        com_vel=rng.uniform(-1, 1, 3),
    )


def random_input(rng):
    return ControlInput(
        force1=rng.uniform(-50, 50, 3),
        force2=rng.uniform(-50, 50, 3),
        moment1=rng.uniform(-5, 5, 2),
        moment2=rng.uniform(-5, 5, 2),
    )


class TestRotation:
    def test_zero_yaw_identity(self):
        assert rotation_z(0.0) == pytest.approx(np.eye(3))

    def test_quarter_turn(self):
        R = rotation_z(np.pi / 2)
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.max(np.abs(R - expected)) < 1e-15

    def test_inverse_is_transpose(self):
        R = rotation_z(0.37)
        assert R @ rotation_z(-0.37) == pytest.approx(np.eye(3), abs=1e-15)


class TestWorldInertia:
    def test_zero_yaw_unchanged(self, params):
        assert world_inertia(params, 0.0) == pytest.approx(params.body_inertia)

    def test_axisymmetric_invariant_under_yaw(self):
        p = RobotParams(body_inertia=np.diag([0.05, 0.05, 0.02]))
        for yaw in (0.3, 1.2, -2.0):
            assert world_inertia(p, yaw) == pytest.approx(p.body_inertia, abs=1e-15)

    def test_trace_preserved(self, params):
        I_w = world_inertia(params, 1.1)
        assert np.trace(I_w) == pytest.approx(np.trace(params.body_inertia))
        # similarity by rotation keeps symmetry and positive definiteness
        assert I_w == pytest.approx(I_w.T)
        assert np.all(np.linalg.eigvalsh(I_w) > 0)


class TestSrbDerivative:
    def test_static_balance(self, params):
        state = CentroidalState(com_pos=[0, 0, 0.4])
        half = params.trunk_mass * 9.81 / 2.0
        u = ControlInput(force1=[0, 0, half], force2=[0, 0, half])
        feet = (np.array([0, 0.1, 0.0]), np.array([0, -0.1, 0.0]))
        deriv = srb_derivative(state, u, feet, params)
        assert deriv == pytest.approx(np.zeros(12), abs=1e-12)

    def test_gravity_only(self, params):
        state = CentroidalState(com_pos=[0, 0, 0.4])
        deriv = srb_derivative(state, ControlInput(), ([0, 0, 0], [0, 0, 0]), params)
        assert deriv[9:12] == pytest.approx(GRAVITY)

    def test_hand_cross_product(self, params):
        # (p1 - pc) x F1 with p1 - pc = [0.1, 0, -0.4], F1 = [0, 0, 110]
        # = [0*110 - (-0.4)*0, (-0.4)*0 - 0.1*110, 0] = [0, -11, 0]
        state = CentroidalState(com_pos=[0.0, 0.0, 0.4])
        u = ControlInput(force1=[0, 0, 110.0])
        p1 = state.com_pos + np.array([0.1, 0.0, -0.4])
        deriv = srb_derivative(state, u, (p1, np.zeros(3)), params)
        expected = np.linalg.inv(params.body_inertia) @ np.array([0.0, -11.0, 0.0])
        assert deriv[6:9] == pytest.approx(expected, abs=1e-12)

    def test_affine_in_input(self, params):
        # superposition of the input-dependent part on random force pairs
        rng = np.random.default_rng(5)
        state = random_state(rng)
        feet = (rng.uniform(-0.3, 0.3, 3), rng.uniform(-0.3, 0.3, 3))
        for _ in range(10):
            ua, ub = random_input(rng), random_input(rng)
            da = srb_derivative(state, ua, feet, params)
            db = srb_derivative(state, ub, feet, params)
            dz = srb_derivative(state, ControlInput(), feet, params)
            u_sum = ControlInput.from_vector(ua.as_vector() + ub.as_vector())
            d_sum = srb_derivative(state, u_sum, feet, params)
            assert d_sum == pytest.approx(da + db - dz, abs=1e-9)


class TestBuildMatrices:
    def test_matches_derivative_oracle(self, params):
        rng = np.random.default_rng(42)
        for _ in range(100):
            state = random_state(rng)
            u = random_input(rng)
            p1 = rng.uniform(-0.4, 0.4, 3)
            p2 = rng.uniform(-0.4, 0.4, 3)
            A, B = build_matrices(state, p1, p2, params)
            x_aug = augmented_vector(state.as_vector())
            xdot = A @ x_aug + B @ u.as_vector()
            oracle = srb_derivative(state, u, (p1, p2), params)
            assert xdot[:12] == pytest.approx(oracle, abs=1e-10)
            # gravity dummy entries stay constant
            assert xdot[12:] == pytest.approx(np.zeros(3), abs=1e-15)

    def test_free_fall_from_gravity_column(self, params):
        state = CentroidalState(com_pos=[0, 0, 0.4])
        A, B = build_matrices(state, np.zeros(3), np.zeros(3), params)
        xdot = A @ augmented_vector(state.as_vector())
        assert xdot[9:12] == pytest.approx(GRAVITY)

    def test_zero_moment_arm(self, params):
        state = CentroidalState(com_pos=[0.2, -0.1, 0.45])
        A, B = build_matrices(state, state.com_pos, state.com_pos, params)
        assert B[6:9, 0:6] == pytest.approx(np.zeros((3, 6)), abs=1e-15)

    def test_nilpotent_cubed(self, params):
        rng = np.random.default_rng(1)
        state = random_state(rng)
        A, _ = build_matrices(state, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), params)
        assert np.linalg.norm(A @ A @ A) == 0.0


class TestDiscretize:
    def test_tiny_dt_degenerates(self, params):
        state = CentroidalState(com_pos=[0, 0, 0.4])
        A, B = build_matrices(state, np.zeros(3), np.zeros(3), params)
        A_hat, B_hat = discretize(A, B, 1e-12)
        # entries of B scale like 1/I ~ 33, so B_hat ~ 33 * dt
        assert A_hat == pytest.approx(np.eye(15), abs=1e-11)
        assert np.max(np.abs(B_hat)) < 1e-10

    def test_rejects_nonpositive_dt(self, params):
        state = CentroidalState()
        A, B = build_matrices(state, np.zeros(3), np.zeros(3), params)
        with pytest.raises(ValueError):
            discretize(A, B, 0.0)
        with pytest.raises(ValueError):
            discretize(A, B, -0.01)

    def test_matches_matrix_exponential(self, params):
        # scaling-and-squaring expm is the oracle for the ZOH transition
        rng = np.random.default_rng(9)
        state = random_state(rng)
        A, B = build_matrices(state, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), params)
        for dt in (0.02, 0.035, 0.05):
            A_hat, B_hat = discretize(A, B, dt)
            assert A_hat == pytest.approx(scipy.linalg.expm(A * dt), abs=1e-12)
            # exact input matrix: integral of expm(A s) ds @ B
            M = np.zeros((30, 30))
            M[:15, :15] = A * dt
            M[:15, 15:] = np.eye(15) * dt
            E = scipy.linalg.expm(M)
            B_exact = E[:15, 15:] @ B
            assert B_hat == pytest.approx(B_exact, abs=1e-12)

    def test_semigroup_on_frozen_matrices(self, params):
        rng = np.random.default_rng(3)
        state = random_state(rng)
        A, B = build_matrices(state, rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), params)
        A1, _ = discretize(A, B, 0.02)
        A2, _ = discretize(A, B, 0.03)
        A12, _ = discretize(A, B, 0.05)
        assert A1 @ A2 == pytest.approx(A12, abs=1e-12)

    @staticmethod
    def _rk4(f, x0, dt):
        k1 = f(x0)
        k2 = f(x0 + 0.5 * dt * k1)
        k3 = f(x0 + 0.5 * dt * k2)
        k4 = f(x0 + dt * k3)
        return x0 + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    def test_consistent_with_rk4_oracle(self, params):
        # one ZOH step vs RK4 on the dynamics frozen at the linearization
        # point (feet and matrices held); ZOH is exact there, so the gap is
        # pure integrator error, far below the 1e-5 budget
        rng = np.random.default_rng(17)
        dt = 0.03
        for _ in range(20):
            state = random_state(rng)
            u = random_input(rng)
            feet = (rng.uniform(-0.4, 0.4, 3), rng.uniform(-0.4, 0.4, 3))
            A, B = build_matrices(state, feet[0], feet[1], params)
            A_hat, B_hat = discretize(A, B, dt)
            x0_aug = augmented_vector(state.as_vector())
            x_next = A_hat @ x0_aug + B_hat @ u.as_vector()
            x_rk4 = self._rk4(lambda x: A @ x + B @ u.as_vector(), x0_aug, dt)
            assert np.max(np.abs(x_next - x_rk4)) < 1e-5

    def test_third_order_against_nonlinear_plant(self, params):
        # against the full nonlinear derivative the ZOH step is accurate to
        # O(dt^2)-O(dt^3) near hover; check the error contracts accordingly
        state = CentroidalState(com_pos=[0, 0, 0.4], com_vel=[0.05, 0.0, 0.0])
        hover = params.trunk_mass * 9.81 / 2.0
        u = ControlInput(force1=[1.0, 0, hover], force2=[-1.0, 0.5, hover])
        feet = (np.array([0.02, 0.1, 0.0]), np.array([-0.02, -0.1, 0.0]))

        def f(x12):
            return srb_derivative(CentroidalState.from_vector(x12), u, feet, params)

        errs = []
        for dt in (0.03, 0.015, 0.0075):
            A, B = build_matrices(state, feet[0], feet[1], params)
            A_hat, B_hat = discretize(A, B, dt)
            x_lin = (A_hat @ augmented_vector(state.as_vector()) + B_hat @ u.as_vector())[:12]
            x_ref = self._rk4(f, state.as_vector(), dt)
            errs.append(np.max(np.abs(x_lin - x_ref)))
        assert errs[0] / errs[1] > 3.5
        assert errs[1] / errs[2] > 3.5

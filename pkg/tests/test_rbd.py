"""Rigid-body tree tests: kinematics, Jacobian oracles, CRBA/RNEA consistency, IK."""

import numpy as np
import pytest

from stepstone.model import RobotParams
from stepstone.rbd import (
    LEG_JOINTS,
    NUM_Q,
    JointVector,
    TreeModel,
    UnreachableError,
    build_tree,
    euler_zyx_matrix,
    inverse_kinematics,
)


@pytest.fixture(scope="module")
def params():
    return RobotParams()


@pytest.fixture(scope="module")
def model(params):
    return build_tree(params)


def random_q(rng, params):
    q = np.zeros(NUM_Q)
    q[0:3] = rng.uniform(-1, 1, 3)
    q[3:6] = rng.uniform(-0.4, 0.4, 3)
    q[6:] = rng.uniform(params.q_min + 0.05, params.q_max - 0.05)
    return q


class TestForwardKinematics:
    def test_reference_posture_straight_legs(self, model, params):
        feet, hips = model.forward_kinematics(np.zeros(NUM_Q))
        ext = params.max_leg_extension
        for leg in range(2):
            assert hips[leg] == pytest.approx(params.hip_offsets[leg], abs=1e-12)
            assert feet[leg] == pytest.approx(hips[leg] - np.array([0, 0, ext]), abs=1e-12)

    def test_translation_equivariance(self, model):
        rng = np.random.default_rng(0)
        q = random_q(rng, model.params)
        feet0, hips0 = model.forward_kinematics(q)
        q2 = q.copy()
        q2[0:3] += np.array([1.0, 0.0, 0.0])
        feet1, hips1 = model.forward_kinematics(q2)
        assert feet1 == pytest.approx(feet0 + np.array([1.0, 0.0, 0.0]), abs=1e-12)
        assert hips1 == pytest.approx(hips0 + np.array([1.0, 0.0, 0.0]), abs=1e-12)

    def test_yaw_rotation_equivariance(self, model):
        q = np.zeros(NUM_Q)
        q[5] = np.pi  # yaw
        feet, hips = model.forward_kinematics(q)
        feet0, hips0 = model.forward_kinematics(np.zeros(NUM_Q))
        Rz = euler_zyx_matrix([0, 0, np.pi])
        for leg in range(2):
            assert feet[leg] == pytest.approx(Rz @ feet0[leg], abs=1e-12)
            assert hips[leg] == pytest.approx(Rz @ hips0[leg], abs=1e-12)


class TestJacobians:
    def test_leg_jacobian_finite_difference(self, model, params):
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(20):
            q = random_q(rng, params)
            for leg in range(2):
                J = model.leg_jacobian(q, leg)
                cols = slice(6 + LEG_JOINTS * leg, 6 + LEG_JOINTS * (leg + 1))
                for i in range(LEG_JOINTS):
                    qp, qm = q.copy(), q.copy()
                    qp[cols.start + i] += h
                    qm[cols.start + i] -= h
                    fd = (model.forward_kinematics(qp)[0][leg] - model.forward_kinematics(qm)[0][leg]) / (2 * h)
                    assert J[:, i] == pytest.approx(fd, abs=1e-5)

    def test_straight_leg_singular(self, model):
        q = np.zeros(NUM_Q)
        J = model.leg_jacobian(q, 0)
        sv = np.linalg.svd(J, compute_uv=False)
        assert sv[-1] < 1e-8

    def test_ankle_column_perpendicular_to_axis(self, model, params):
        rng = np.random.default_rng(2)
        q = random_q(rng, params)
        J = model.leg_jacobian(q, 0)
        # ankle is a y-axis pitch joint in its local frame
        axis_world = model.foot_rotation(q, 0) @ np.array([0.0, 1.0, 0.0])
        assert abs(J[:, 4] @ axis_world) < 1e-12

    def test_contact_jacobian_base_translation_identity(self, model, params):
        rng = np.random.default_rng(3)
        q = random_q(rng, params)
        Jc = model.contact_jacobian(q)
        assert Jc[0:3, 0:3] == pytest.approx(np.eye(3), abs=1e-12)
        assert Jc[3:6, 0:3] == pytest.approx(np.eye(3), abs=1e-12)
        # base translation produces no foot rotation
        assert Jc[6:10, 0:3] == pytest.approx(np.zeros((4, 3)), abs=1e-12)

    def test_contact_jacobian_finite_difference(self, model, params):
        rng = np.random.default_rng(4)
        h = 1e-6
        for _ in range(5):
            q = random_q(rng, params)
            Jc = model.contact_jacobian(q)
            for i in range(NUM_Q):
                qp, qm = q.copy(), q.copy()
                qp[i] += h
                qm[i] -= h
                fp, _ = model.forward_kinematics(qp)
                fm, _ = model.forward_kinematics(qm)
                # force rows: translational velocities of both feet
                assert Jc[0:3, i] == pytest.approx((fp[0] - fm[0]) / (2 * h), abs=1e-5)
                assert Jc[3:6, i] == pytest.approx((fp[1] - fm[1]) / (2 * h), abs=1e-5)
                # moment rows: y/z world angular velocity of each foot
                for leg, rows in ((0, slice(6, 8)), (1, slice(8, 10))):
                    Rp = model.foot_rotation(qp, leg)
                    Rm = model.foot_rotation(qm, leg)
                    W = (Rp - Rm) @ model.foot_rotation(q, leg).T / (2 * h)
                    omega = np.array([W[2, 1], W[0, 2], W[1, 0]])
                    assert Jc[rows, i] == pytest.approx(omega[1:3], abs=1e-5)

    def test_virtual_work_power_balance(self, model, params):
        rng = np.random.default_rng(5)
        for _ in range(10):
            q = random_q(rng, params)
            qd = rng.uniform(-1, 1, NUM_Q)
            u = rng.uniform(-10, 10, 10)
            Jc = model.contact_jacobian(q)
            power_joint_space = float(u @ (Jc @ qd))
            # independent route: differentiate foot motion along qd
            eps = 1e-7
            fp, _ = model.forward_kinematics(q + eps * qd)
            fm, _ = model.forward_kinematics(q - eps * qd)
            v1 = (fp[0] - fm[0]) / (2 * eps)
            v2 = (fp[1] - fm[1]) / (2 * eps)
            power = float(u[0:3] @ v1 + u[3:6] @ v2)
            for leg, sl in ((0, slice(6, 8)), (1, slice(8, 10))):
                Rp = model.foot_rotation(q + eps * qd, leg)
                Rm = model.foot_rotation(q - eps * qd, leg)
                W = (Rp - Rm) @ model.foot_rotation(q, leg).T / (2 * eps)
                omega = np.array([W[2, 1], W[0, 2], W[1, 0]])
                power += float(u[sl] @ omega[1:3])
            assert power == pytest.approx(power_joint_space, abs=1e-5)


class TestMassMatrixAndBias:
    def test_rnea_crba_consistency(self, model, params):
        rng = np.random.default_rng(6)
        for _ in range(10):
            q = random_q(rng, params)
            qd = rng.uniform(-1, 1, NUM_Q)
            qdd = rng.uniform(-1, 1, NUM_Q)
            lhs = model.rnea(q, qd, qdd)
            rhs = model.mass_matrix(q) @ qdd + model.bias(q, qd)
            assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_gravity_projection(self, model, params):
        rng = np.random.default_rng(7)
        q = random_q(rng, params)
        h = model.bias(q, np.zeros(NUM_Q))
        # at rest the bias is the pure gravity load; its base-z row is the
        # generalized force needed to hold the robot: total weight, upward
        assert h[2] == pytest.approx(model.total_mass * 9.81, rel=1e-12)

    def test_mass_matrix_top_block(self, model, params):
        rng = np.random.default_rng(8)
        for _ in range(5):
            q = random_q(rng, params)
            M = model.mass_matrix(q)
            assert M[0:3, 0:3] == pytest.approx(model.total_mass * np.eye(3), abs=1e-10)

    def test_mass_matrix_symmetric_positive_definite(self, model, params):
        rng = np.random.default_rng(9)
        for _ in range(5):
            q = random_q(rng, params)
            M = model.mass_matrix(q)
            assert np.max(np.abs(M - M.T)) < 1e-10
            assert np.min(np.linalg.eigvalsh(M)) > 0

    def test_total_mass(self, model, params):
        assert abs(model.total_mass - params.total_mass) < 1e-9

    def test_massless_variant_mass(self, params):
        light = build_tree(params, massless_legs=True)
        assert light.total_mass == pytest.approx(params.trunk_mass + 10e-3, abs=1e-12)
        # mass matrix still invertible
        M = light.mass_matrix(np.zeros(NUM_Q))
        assert np.min(np.linalg.eigvalsh(M)) > 0


class TestInverseKinematics:
    def test_fk_ik_roundtrip(self, model, params):
        rng = np.random.default_rng(10)
        count = 0
        while count < 100:
            q = random_q(rng, params)
            feet, hips = model.forward_kinematics(q)
            for leg in range(2):
                if np.linalg.norm(feet[leg] - hips[leg]) > model.max_reach - 0.02:
                    continue
                q_leg, _ = inverse_kinematics(
                    model, q[:6], feet[leg], leg, seed=q[6 + 5 * leg : 11 + 5 * leg]
                )
                q_full = q.copy()
                q_full[6 + 5 * leg : 11 + 5 * leg] = q_leg
                feet2, _ = model.forward_kinematics(q_full)
                assert np.linalg.norm(feet2[leg] - feet[leg]) <= 1e-8
                count += 1

    def test_straight_leg_at_max_extension(self, model, params):
        base = np.zeros(6)
        target = params.hip_offsets[0] - np.array([0, 0, params.max_leg_extension])
        q_leg, within = inverse_kinematics(model, base, target, 0, seed=np.array([0, 0, -0.1, 0.3, -0.1]))
        assert abs(q_leg[3]) < 1e-3  # knee straight
        assert within

    def test_unreachable_beyond_extension(self, model, params):
        base = np.zeros(6)
        target = params.hip_offsets[0] - np.array([0, 0, params.max_leg_extension + 0.01])
        with pytest.raises(UnreachableError):
            inverse_kinematics(model, base, target, 0)

    def test_limit_flag(self, model, params):
        # a target needing a big ab/ad swing flags the limit violation
        base = np.zeros(6)
        target = params.hip_offsets[0] + np.array([0.0, 0.38, -0.25])
        q_leg, within = inverse_kinematics(model, base, target, 0)
        jv = JointVector(base, np.concatenate([q_leg, np.zeros(5)]))
        assert within == jv.within_limits(params)


class TestJointVector:
    def test_roundtrip(self):
        rng = np.random.default_rng(11)
        q = rng.standard_normal(NUM_Q)
        jv = JointVector.from_vector(q)
        assert jv.as_vector() == pytest.approx(q)

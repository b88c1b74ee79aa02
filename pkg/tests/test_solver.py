"""QP and SQP solver tests: analytic cases, KKT properties, cross-solver oracle."""

import numpy as np
import pytest

from stepstone.solver import (
    ConstraintBlock,
    NlpProblem,
    QpProblem,
    Status,
    solve_nlp,
    solve_qp,
)


def kkt_stationarity(problem, sol):
    r = problem.hessian @ sol.primal + problem.gradient
    if problem.eq_matrix.size:
        r = r + problem.eq_matrix.T @ sol.duals_eq
    if problem.ineq_matrix.size:
        r = r + problem.ineq_matrix.T @ sol.duals_ineq
    return float(np.max(np.abs(r)))


class TestSolveQp:
    def test_unconstrained_scalar(self):
        # minimize (x - 1)^2
        p = QpProblem(hessian=[[2.0]], gradient=[-2.0])
        sol = solve_qp(p, tol=1e-8)
        assert sol.status == Status.OPTIMAL
        assert sol.primal[0] == pytest.approx(1.0, abs=1e-8)

    def test_equality_symmetric(self):
        # minimize x^2 + y^2 s.t. x + y = 1
        p = QpProblem(
            hessian=2.0 * np.eye(2),
            gradient=np.zeros(2),
            eq_matrix=[[1.0, 1.0]],
            eq_rhs=[1.0],
        )
        sol = solve_qp(p, tol=1e-8)
        assert sol.status == Status.OPTIMAL
        assert sol.primal == pytest.approx([0.5, 0.5], abs=1e-8)
        assert kkt_stationarity(p, sol) <= 1e-8

    def test_active_upper_bound(self):
        # minimize (x - 3)^2 s.t. 0 <= x <= 2; projection of 3 onto [0, 2] is 2
        p = QpProblem(
            hessian=[[2.0]],
            gradient=[-6.0],
            ineq_matrix=[[1.0]],
            ineq_lower=[0.0],
            ineq_upper=[2.0],
        )
        sol = solve_qp(p, tol=1e-8)
        assert sol.status == Status.OPTIMAL
        assert sol.primal[0] == pytest.approx(2.0, abs=1e-8)
        assert sol.duals_ineq[0] > 0.0  # upper bound pushes
        assert kkt_stationarity(p, sol) <= 1e-8

    def test_infeasible_bounds(self):
        # x <= -1 and x >= 1 cannot hold together
        p = QpProblem(
            hessian=[[2.0]],
            gradient=[0.0],
            ineq_matrix=[[1.0], [1.0]],
            ineq_lower=[1.0, -np.inf],
            ineq_upper=[np.inf, -1.0],
        )
        sol = solve_qp(p)
        assert sol.status == Status.INFEASIBLE

    def test_infeasible_general_rows(self):
        # x + y <= -1 and x + y >= 1
        p = QpProblem(
            hessian=2.0 * np.eye(2),
            gradient=np.zeros(2),
            ineq_matrix=[[1.0, 1.0], [1.0, 1.0]],
            ineq_lower=[1.0, -np.inf],
            ineq_upper=[np.inf, -1.0],
        )
        sol = solve_qp(p)
        assert sol.status == Status.INFEASIBLE

    def test_inconsistent_equalities(self):
        p = QpProblem(
            hessian=2.0 * np.eye(2),
            gradient=np.zeros(2),
            eq_matrix=[[1.0, 1.0], [1.0, 1.0]],
            eq_rhs=[1.0, 2.0],
        )
        sol = solve_qp(p)
        assert sol.status == Status.INFEASIBLE

    def test_determinism(self):
        rng = np.random.default_rng(3)
        L = rng.standard_normal((6, 6))
        p = QpProblem(
            hessian=L @ L.T + 6 * np.eye(6),
            gradient=rng.standard_normal(6),
            eq_matrix=rng.standard_normal((2, 6)),
            eq_rhs=rng.standard_normal(2),
            ineq_matrix=rng.standard_normal((4, 6)),
            ineq_lower=-np.ones(4),
            ineq_upper=np.ones(4),
        )
        s1 = solve_qp(p)
        s2 = solve_qp(p)
        assert np.array_equal(s1.primal, s2.primal)
        assert s1.kkt_residual == s2.kkt_residual

    @pytest.mark.parametrize("seed", range(12))
    def test_random_qp_kkt(self, seed):
        # randomized feasible QPs: Optimal solutions must satisfy
        # stationarity, feasibility and complementarity to tol
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 14))
        me = int(rng.integers(0, max(n // 2, 1)))
        mi = int(rng.integers(1, 2 * n))
        L = rng.standard_normal((n, n))
        H = L @ L.T + 0.5 * np.eye(n)
        g = rng.standard_normal(n)
        A = rng.standard_normal((me, n))
        x_feas = rng.standard_normal(n)
        b = A @ x_feas
        C = rng.standard_normal((mi, n))
        mid = C @ x_feas
        cl = mid - rng.uniform(0.1, 2.0, mi)
        cu = mid + rng.uniform(0.1, 2.0, mi)
        p = QpProblem(H, g, A, b, C, cl, cu)
        sol = solve_qp(p, tol=1e-8)
        assert sol.status == Status.OPTIMAL
        assert sol.kkt_residual <= 1e-6
        assert kkt_stationarity(p, sol) <= 1e-6
        # complementarity per row
        cx = C @ sol.primal
        slack = np.minimum(cu - cx, cx - cl)
        assert np.all(np.minimum(np.abs(slack), np.abs(sol.duals_ineq)) <= 1e-6)

    def test_box_projection_matches_closed_form(self):
        # minimize ||x - y0||^2 inside a box equals clipping y0 to the box
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = 6
            y0 = rng.uniform(-3, 3, n)
            lb = rng.uniform(-2, -0.5, n)
            ub = rng.uniform(0.5, 2, n)
            p = QpProblem(
                hessian=2 * np.eye(n),
                gradient=-2 * y0,
                ineq_matrix=np.eye(n),
                ineq_lower=lb,
                ineq_upper=ub,
            )
            sol = solve_qp(p, tol=1e-9)
            assert sol.status == Status.OPTIMAL
            assert sol.primal == pytest.approx(np.clip(y0, lb, ub), abs=1e-7)

    def test_degenerate_hessian_regularized(self):
        # rank-deficient H with an unconstrained flat direction still solves
        p = QpProblem(
            hessian=np.diag([2.0, 0.0]),
            gradient=[-2.0, 0.0],
            ineq_matrix=[[0.0, 1.0]],
            ineq_lower=[-1.0],
            ineq_upper=[1.0],
        )
        sol = solve_qp(p, tol=1e-8)
        assert sol.status == Status.OPTIMAL
        assert sol.primal[0] == pytest.approx(1.0, abs=1e-6)


class TestSolveNlp:
    def test_circle_equality(self):
        # minimize (x-2)^2 + (y-2)^2 s.t. x^2 + y^2 = 2 -> (1, 1) by symmetry
        p = NlpProblem(
            dimension=2,
            cost=lambda v: (v[0] - 2.0) ** 2 + (v[1] - 2.0) ** 2,
            constraints=[
                ConstraintBlock(fun=lambda v: np.array([v @ v]), lower=[2.0], upper=[2.0])
            ],
            x0=[1.5, 0.3],
        )
        res = solve_nlp(p, tol=1e-6)
        assert res.status == Status.OPTIMAL
        assert res.x == pytest.approx([1.0, 1.0], abs=1e-5)
        assert res.constraint_violation <= 1e-6

    def test_rosenbrock(self):
        # global minimum value is exactly 0 at (1, 1)
        def rosen(v):
            return 100.0 * (v[1] - v[0] ** 2) ** 2 + (1.0 - v[0]) ** 2

        p = NlpProblem(dimension=2, cost=rosen, x0=[-1.2, 1.0])
        res = solve_nlp(p, tol=1e-6, max_iter=500)
        assert res.status == Status.OPTIMAL
        # forward finite differences (h = 1e-6 * scale) bound the reachable
        # cost accuracy near the flat valley floor
        assert rosen(res.x) <= 1e-6
        assert res.x == pytest.approx([1.0, 1.0], abs=1e-3)

    def test_lp_cross_solver_oracle(self):
        # the same LP solved as a QP (zero Hessian) and as an NLP must agree
        rng = np.random.default_rng(7)
        n = 5
        g = rng.uniform(0.5, 2.0, n)
        C = rng.standard_normal((3, n))
        x_feas = rng.uniform(0.0, 1.0, n)
        cl = C @ x_feas - 1.0
        cu = C @ x_feas + 1.0
        qp = QpProblem(
            hessian=np.zeros((n, n)),
            gradient=g,
            ineq_matrix=np.vstack([C, np.eye(n)]),
            ineq_lower=np.concatenate([cl, np.zeros(n)]),
            ineq_upper=np.concatenate([cu, np.ones(n)]),
        )
        qp_sol = solve_qp(qp, tol=1e-9)
        assert qp_sol.status == Status.OPTIMAL

        nlp = NlpProblem(
            dimension=n,
            cost=lambda v: float(g @ v),
            constraints=[ConstraintBlock(fun=lambda v: C @ v, lower=cl, upper=cu)],
            lb=np.zeros(n),
            ub=np.ones(n),
            x0=x_feas,
        )
        nlp_res = solve_nlp(nlp, tol=1e-8)
        assert nlp_res.status == Status.OPTIMAL
        assert nlp_res.x == pytest.approx(qp_sol.primal, abs=1e-6)

    def test_bounds_clamped_initial_guess(self):
        p = NlpProblem(
            dimension=2,
            cost=lambda v: float(v @ v),
            lb=[1.0, -5.0],
            ub=[3.0, 5.0],
            x0=[-10.0, 0.0],
        )
        assert p.x0[0] == 1.0
        res = solve_nlp(p, tol=1e-6)
        assert res.status == Status.OPTIMAL
        # forward differences bias the free coordinate by -h/2 ~ 5e-7
        assert res.x == pytest.approx([1.0, 0.0], abs=2e-6)

    def test_merit_nonincreasing_at_fixed_penalty(self):
        # SQP descent property: accepted iterates do not increase the merit
        # function while the penalty parameter stays unchanged
        records = []
        p = NlpProblem(
            dimension=3,
            cost=lambda v: (v[0] - 2.0) ** 2 + (v[1] + 1.0) ** 2 + 0.5 * v[2] ** 2,
            constraints=[
                ConstraintBlock(
                    fun=lambda v: np.array([v[0] ** 2 + v[1] ** 2 + v[2] ** 2]),
                    lower=[1.0],
                    upper=[1.0],
                )
            ],
            x0=[0.1, 0.8, 0.5],
        )
        res = solve_nlp(p, tol=1e-7, callback=records.append)
        assert res.status == Status.OPTIMAL
        for prev, cur in zip(records, records[1:]):
            if cur["penalty"] == prev["penalty"]:
                prev_merit = prev["cost"] + cur["penalty"] * prev["l1_violation"]
                assert cur["merit"] <= prev_merit + 1e-9 * max(1.0, abs(prev_merit))

    def test_registered_gradients_used(self):
        calls = {"grad": 0}

        def grad(v):
            calls["grad"] += 1
            return 2.0 * (v - np.array([3.0, -1.0]))

        p = NlpProblem(
            dimension=2,
            cost=lambda v: float((v - np.array([3.0, -1.0])) @ (v - np.array([3.0, -1.0]))),
            cost_grad=grad,
            x0=[0.0, 0.0],
        )
        res = solve_nlp(p, tol=1e-8)
        assert res.status == Status.OPTIMAL
        assert calls["grad"] > 0
        assert res.x == pytest.approx([3.0, -1.0], abs=1e-7)

    def test_constrained_inequality_active(self):
        # minimize x^2 + y^2 s.t. x + y >= 2 -> (1, 1)
        p = NlpProblem(
            dimension=2,
            cost=lambda v: float(v @ v),
            constraints=[
                ConstraintBlock(fun=lambda v: np.array([v[0] + v[1]]), lower=[2.0], upper=[np.inf])
            ],
            x0=[3.0, 3.0],
        )
        res = solve_nlp(p, tol=1e-7)
        assert res.status == Status.OPTIMAL
        assert res.x == pytest.approx([1.0, 1.0], abs=1e-6)

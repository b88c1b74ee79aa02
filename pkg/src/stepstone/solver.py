"""Dense convex QP solver and SQP nonlinear program driver.

The QP path is a primal-dual interior point method with Mehrotra-style
predictor-corrector steps.  Equality constraints are removed up front by a
QR-based nullspace reduction, and single-variable rows are routed to a box
fast path, so the per-iteration cost is dominated by one Cholesky
factorization in the reduced space.  The NLP path is SQP with an L1 merit
line search and damped BFGS updates, reusing the QP core for its
subproblems.

Everything here is deterministic: identical inputs produce bit-identical
solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg


class Status(Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    INFEASIBLE = "infeasible"
    LINE_SEARCH_FAILURE = "line_search_failure"


_INF = np.inf


def _as_matrix(a, rows, cols, name):
    if a is None:
        return np.zeros((rows if rows is not None else 0, cols))
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != cols:
        raise ValueError(f"{name} must be a 2-D array with {cols} columns, got {a.shape}")
    return a


def _as_vector(v, n, name, fill=0.0):
    if v is None:
        return np.full(n, fill, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != n:
        raise ValueError(f"{name} must have length {n}, got {v.size}")
    return v


@dataclass
class QpProblem:
    """min 0.5 x'Hx + g'x  s.t.  A_eq x = b_eq,  l <= A_in x <= u."""

    hessian: np.ndarray
    gradient: np.ndarray
    eq_matrix: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None
    ineq_matrix: Optional[np.ndarray] = None
    ineq_lower: Optional[np.ndarray] = None
    ineq_upper: Optional[np.ndarray] = None

    def __post_init__(self):
        self.hessian = np.asarray(self.hessian, dtype=float)
        self.gradient = np.asarray(self.gradient, dtype=float).reshape(-1)
        n = self.gradient.size
        if self.hessian.shape != (n, n):
            raise ValueError(f"hessian must be {n}x{n}, got {self.hessian.shape}")
        scale = max(1.0, float(np.abs(self.hessian).max()))
        if np.abs(self.hessian - self.hessian.T).max() > 1e-12 * scale:
            raise ValueError("hessian must be symmetric")
        self.eq_matrix = _as_matrix(self.eq_matrix, 0 if self.eq_rhs is None else None, n, "eq_matrix")
        self.eq_rhs = _as_vector(self.eq_rhs, self.eq_matrix.shape[0], "eq_rhs")
        self.ineq_matrix = _as_matrix(
            self.ineq_matrix, 0 if self.ineq_lower is None and self.ineq_upper is None else None, n, "ineq_matrix"
        )
        mi = self.ineq_matrix.shape[0]
        self.ineq_lower = _as_vector(self.ineq_lower, mi, "ineq_lower", fill=-_INF)
        self.ineq_upper = _as_vector(self.ineq_upper, mi, "ineq_upper", fill=_INF)
        if np.any(self.ineq_lower > self.ineq_upper):
            raise ValueError("ineq_lower must be <= ineq_upper elementwise")

    @property
    def dimension(self) -> int:
        return self.gradient.size


@dataclass
class QpSolution:
    primal: np.ndarray
    duals_eq: np.ndarray
    duals_ineq: np.ndarray
    kkt_residual: float
    status: Status
    iterations: int = 0


# ---------------------------------------------------------------------------
# internal QP core: box bounds kept separate from general rows
# ---------------------------------------------------------------------------


@dataclass
class _QpData:
    H: np.ndarray
    g: np.ndarray
    A: np.ndarray       # equality rows
    b: np.ndarray
    C: np.ndarray       # general two-sided inequality rows
    cl: np.ndarray
    cu: np.ndarray
    lb: np.ndarray      # variable box bounds
    ub: np.ndarray


def _regularized_cholesky(M: np.ndarray):
    """Cholesky with escalating trace-scaled diagonal shift on failure."""
    n = M.shape[0]
    delta = 0.0
    base = 1e-9 * max(np.trace(M) / max(n, 1), 1.0)
    for attempt in range(12):
        try:
            if delta == 0.0:
                return scipy.linalg.cho_factor(M, lower=True, check_finite=False), delta
            return (
                scipy.linalg.cho_factor(M + delta * np.eye(n), lower=True, check_finite=False),
                delta,
            )
        except np.linalg.LinAlgError:
            delta = base * (10.0 ** attempt)
    raise np.linalg.LinAlgError("matrix could not be regularized to positive definite")


class _NullspaceEqualities:
    """QR-based elimination of A x = b; exposes x = x0 + Z v."""

    def __init__(self, A: np.ndarray, b: np.ndarray, n: int):
        self.m = A.shape[0]
        if self.m == 0:
            self.rank = 0
            self.Z = np.eye(n)
            self.x0 = np.zeros(n)
            self.consistent = True
            return
        # column-pivoted QR of A^T: A^T[:, piv] = Q R
        Q, R, piv = scipy.linalg.qr(A.T, mode="full", pivoting=True, check_finite=False)
        diag = np.abs(np.diag(R)) if min(R.shape) else np.zeros(0)
        tol = max(A.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        rank = int(np.sum(diag > max(tol, 1e-13)))
        self.rank = rank
        self.Q = Q
        self.R = R
        self.piv = piv
        self.Z = Q[:, rank:]
        b_perm = b[piv]
        if rank == 0:
            self.x0 = np.zeros(n)
            self.consistent = bool(np.max(np.abs(b)) <= 1e-9) if b.size else True
            return
        w = scipy.linalg.solve_triangular(
            R[:rank, :rank].T, b_perm[:rank], lower=True, check_finite=False
        )
        self.x0 = Q[:, :rank] @ w
        # dependent rows must be consistent with the particular solution
        resid = A @ self.x0 - b
        scale = 1.0 + (np.max(np.abs(b)) if b.size else 0.0)
        self.consistent = bool(np.max(np.abs(resid)) <= 1e-8 * scale)

    def multipliers(self, rhs: np.ndarray) -> np.ndarray:
        """Least-squares solve of A^T lam = rhs using the cached QR."""
        if self.m == 0:
            return np.zeros(0)
        lam = np.zeros(self.m)
        if self.rank:
            qtr = self.Q[:, : self.rank].T @ rhs
            lam_head = scipy.linalg.solve_triangular(
                self.R[: self.rank, : self.rank], qtr, lower=False, check_finite=False
            )
            lam[self.piv[: self.rank]] = lam_head
        return lam


def _mehrotra_ipm(P, q, G, h, tol, max_iter):
    """Mehrotra predictor-corrector for min 0.5 v'Pv + q'v s.t. Gv <= h.

    Returns (v, z, status, iterations).  P must be symmetric PSD (it is
    regularized internally if the Cholesky factorization fails).
    """
    nv = q.size
    m = G.shape[0]
    if m == 0:
        chol, _ = _regularized_cholesky(P)
        v = scipy.linalg.cho_solve(chol, -q, check_finite=False)
        return v, np.zeros(0), Status.OPTIMAL, 0

    v = np.zeros(nv)
    s = np.maximum(h - G @ v, 1.0)
    z = np.ones(m)
    q_scale = 1.0 + float(np.max(np.abs(q))) if nv else 1.0
    h_scale = 1.0 + float(np.max(np.abs(h[np.isfinite(h)]))) if m else 1.0

    stall = 0
    for it in range(1, max_iter + 1):
        r_d = P @ v + q + G.T @ z
        r_p = G @ v + s - h
        mu = float(s @ z) / m

        viol = float(np.max(np.maximum(G @ v - h, 0.0)))
        comp = float(np.max(np.minimum(np.abs(h - G @ v), z)))
        if max(np.abs(r_d)) <= 0.5 * tol and viol <= 0.5 * tol and comp <= 0.5 * tol:
            return v, z, Status.OPTIMAL, it - 1

        # divergence of duals with stubborn primal infeasibility => infeasible
        if (np.max(z) > 1e9 * h_scale and viol > 10.0 * tol) or stall >= 5:
            return v, z, Status.INFEASIBLE, it - 1

        w = z / s
        M = P + (G.T * w) @ G
        chol, _ = _regularized_cholesky(M)

        def solve_step(r_c):
            rhs = -r_d + G.T @ (r_c / s - w * r_p)
            dv = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            ds = -r_p - G @ dv
            dz = -(r_c + z * ds) / s
            return dv, ds, dz

        # predictor
        dv_a, ds_a, dz_a = solve_step(z * s)
        alpha_p = _max_step(s, ds_a)
        alpha_d = _max_step(z, dz_a)
        mu_aff = float((s + alpha_p * ds_a) @ (z + alpha_d * dz_a)) / m
        sigma = (max(mu_aff, 0.0) / max(mu, 1e-300)) ** 3

        # corrector
        r_c = z * s + ds_a * dz_a - sigma * mu
        dv, ds, dz = solve_step(r_c)
        alpha = 0.995 * min(_max_step(s, ds), _max_step(z, dz))
        alpha = min(alpha, 1.0)
        if alpha < 1e-11 and viol > tol:
            stall += 1
        else:
            stall = 0
        v = v + alpha * dv
        s = s + alpha * ds
        z = z + alpha * dz
        s = np.maximum(s, 1e-300)
        z = np.maximum(z, 1e-300)

    return v, z, Status.MAX_ITER, max_iter


def _max_step(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-x[neg] / dx[neg])))


def _solve_qp_core(data: _QpData, tol: float, max_iter: int):
    """Solve the boxed QP.  Returns primal, eq duals, general-row duals
    (folded, >0 means the upper side is pushing), box duals, kkt pieces,
    status, iterations."""
    n = data.g.size
    lb = data.lb.copy()
    ub = data.ub.copy()
    if np.any(lb > ub + 1e-14):
        return None, None, None, None, np.inf, Status.INFEASIBLE, 0

    # equality-like box entries: pin the variable
    pinned = lb >= ub - 0.0
    fixed_mask = lb == ub
    free = ~fixed_mask
    x_fix = np.where(fixed_mask, lb, 0.0)

    H = data.H
    g_eff = data.g + H[:, fixed_mask] @ x_fix[fixed_mask]
    b_eff = data.b - data.A[:, fixed_mask] @ x_fix[fixed_mask] if data.A.size else data.b
    c_off = data.C[:, fixed_mask] @ x_fix[fixed_mask] if data.C.size else np.zeros(data.C.shape[0])

    Hf = H[np.ix_(free, free)]
    gf = g_eff[free]
    Af = data.A[:, free]
    Cf = data.C[:, free]
    clf = data.cl - c_off
    cuf = data.cu - c_off
    lbf = lb[free]
    ubf = ub[free]
    nf = int(free.sum())

    ns = _NullspaceEqualities(Af, b_eff, nf)
    if not ns.consistent:
        return None, None, None, None, np.inf, Status.INFEASIBLE, 0
    Z = ns.Z
    x0 = ns.x0
    nv = Z.shape[1]

    # rows with lb == ub among general constraints become extra equalities:
    # callers normally do not produce these, but handle them for robustness.
    eqrow = clf == cuf
    if np.any(eqrow):
        A2 = np.vstack([Af, Cf[eqrow]])
        b2 = np.concatenate([b_eff, clf[eqrow]])
        ns = _NullspaceEqualities(A2, b2, nf)
        if not ns.consistent:
            return None, None, None, None, np.inf, Status.INFEASIBLE, 0
        Z = ns.Z
        x0 = ns.x0
        nv = Z.shape[1]
        Cf = Cf[~eqrow]
        clf = clf[~eqrow]
        cuf = cuf[~eqrow]
    else:
        eqrow = np.zeros(data.C.shape[0], dtype=bool)

    # reduced objective
    HZ = Hf @ Z
    P = Z.T @ HZ
    qv = Z.T @ (Hf @ x0 + gf)

    # one-sided rows in the reduced space: general rows then box rows,
    # each side stacked separately with bookkeeping for dual recovery
    CZ = Cf @ Z if Cf.size else np.zeros((0, nv))
    c_mid = Cf @ x0 if Cf.size else np.zeros(0)
    box_l = np.isfinite(lbf)
    box_u = np.isfinite(ubf)
    gen_u = np.isfinite(cuf)
    gen_l = np.isfinite(clf)

    rows = []
    rhs = []
    if np.any(gen_u):
        rows.append(CZ[gen_u])
        rhs.append(cuf[gen_u] - c_mid[gen_u])
    if np.any(gen_l):
        rows.append(-CZ[gen_l])
        rhs.append(c_mid[gen_l] - clf[gen_l])
    if np.any(box_u):
        rows.append(Z[box_u])
        rhs.append(ubf[box_u] - x0[box_u])
    if np.any(box_l):
        rows.append(-Z[box_l])
        rhs.append(x0[box_l] - lbf[box_l])
    G = np.vstack(rows) if rows else np.zeros((0, nv))
    h = np.concatenate(rhs) if rhs else np.zeros(0)

    v, zdual, status, iters = _mehrotra_ipm(P, qv, G, h, tol, max_iter)
    if status == Status.INFEASIBLE and v is None:
        return None, None, None, None, np.inf, Status.INFEASIBLE, iters

    xf = x0 + Z @ v
    x = np.empty(n)
    x[fixed_mask] = x_fix[fixed_mask]
    x[free] = xf

    # unfold duals (upper side positive, lower side negative)
    mg = Cf.shape[0]
    z_gen = np.zeros(mg)
    z_box_f = np.zeros(nf)
    k = 0
    if np.any(gen_u):
        cnt = int(gen_u.sum())
        z_gen[gen_u] += zdual[k : k + cnt]
        k += cnt
    if np.any(gen_l):
        cnt = int(gen_l.sum())
        z_gen[gen_l] -= zdual[k : k + cnt]
        k += cnt
    if np.any(box_u):
        cnt = int(box_u.sum())
        z_box_f[box_u] += zdual[k : k + cnt]
        k += cnt
    if np.any(box_l):
        cnt = int(box_l.sum())
        z_box_f[box_l] -= zdual[k : k + cnt]
        k += cnt

    mu_general = np.zeros(data.C.shape[0])
    mu_general[~eqrow] = z_gen

    z_box = np.zeros(n)
    z_box[free] = z_box_f

    # equality multipliers from stationarity: A^T lam = -(Hx + g + C^T mu + box)
    resid_free = Hf @ xf + gf + (Cf.T @ z_gen if Cf.size else 0.0) + z_box_f
    n_eq_extra = int(eqrow.sum())
    lam_all = ns.multipliers(-resid_free)
    if n_eq_extra:
        lam = lam_all[: data.A.shape[0]]
        mu_general[eqrow] = lam_all[data.A.shape[0] :]
    else:
        lam = lam_all

    # fixed variables absorb their stationarity rows through box duals
    if np.any(fixed_mask):
        resid_fixed = (
            H[fixed_mask] @ x
            + data.g[fixed_mask]
            + (data.A[:, fixed_mask].T @ lam if data.A.size else 0.0)
            + (data.C[:, fixed_mask].T @ mu_general if data.C.size else 0.0)
        )
        z_box[fixed_mask] = -resid_fixed

    return x, lam, mu_general, z_box, _kkt_residual(data, x, lam, mu_general, z_box), status, iters


def _kkt_residual(data: _QpData, x, lam, mu, z_box) -> float:
    """Max of stationarity, primal feasibility and complementarity residuals."""
    stat = data.H @ x + data.g
    if data.A.size:
        stat = stat + data.A.T @ lam
    if data.C.size:
        stat = stat + data.C.T @ mu
    stat = stat + z_box
    r = float(np.max(np.abs(stat))) if stat.size else 0.0

    if data.A.size:
        r = max(r, float(np.max(np.abs(data.A @ x - data.b))))
    if data.C.size:
        cx = data.C @ x
        r = max(r, float(np.max(np.maximum(cx - data.cu, 0.0))))
        r = max(r, float(np.max(np.maximum(data.cl - cx, 0.0))))
        slack = np.minimum(data.cu - cx, cx - data.cl)
        comp = np.minimum(np.abs(slack), np.abs(mu))
        r = max(r, float(np.max(comp)) if comp.size else 0.0)
    r = max(r, float(np.max(np.maximum(x - data.ub, 0.0))))
    r = max(r, float(np.max(np.maximum(data.lb - x, 0.0))))
    slack_box = np.minimum(data.ub - x, x - data.lb)
    finite = np.isfinite(slack_box)
    if np.any(finite):
        comp = np.minimum(np.abs(slack_box[finite]), np.abs(z_box[finite]))
        r = max(r, float(np.max(comp)))
    return r


def _split_single_variable_rows(C, cl, cu, n):
    """Route rows with exactly one nonzero into box bounds."""
    lb = np.full(n, -_INF)
    ub = np.full(n, _INF)
    if C.size == 0:
        return C, cl, cu, lb, ub
    nnz = np.count_nonzero(C, axis=1)
    single = nnz == 1
    if not np.any(single):
        return C, cl, cu, lb, ub
    for i in np.nonzero(single)[0]:
        j = int(np.nonzero(C[i])[0][0])
        a = C[i, j]
        lo, hi = cl[i] / a, cu[i] / a
        if a < 0:
            lo, hi = hi, lo
        lb[j] = max(lb[j], lo)
        ub[j] = min(ub[j], hi)
    keep = ~single
    return C[keep], cl[keep], cu[keep], lb, ub


def solve_qp(problem: QpProblem, tol: float = 1e-8, max_iter: int = 100) -> QpSolution:
    """Solve a dense convex QP with equality and two-sided inequality rows.

    On Status.OPTIMAL the returned kkt_residual (max of stationarity,
    primal feasibility and complementarity) is <= tol.  duals_ineq are
    signed: positive entries push against the upper bound of their row,
    negative against the lower.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = problem.dimension
    C, cl, cu, lb, ub = _split_single_variable_rows(
        problem.ineq_matrix, problem.ineq_lower, problem.ineq_upper, n
    )
    data = _QpData(
        H=problem.hessian,
        g=problem.gradient,
        A=problem.eq_matrix,
        b=problem.eq_rhs,
        C=C,
        cl=cl,
        cu=cu,
        lb=lb,
        ub=ub,
    )
    x, lam, mu_kept, z_box, kkt, status, iters = _solve_qp_core(data, tol, max_iter)
    if x is None:
        return QpSolution(
            primal=np.full(n, np.nan),
            duals_eq=np.full(problem.eq_matrix.shape[0], np.nan),
            duals_ineq=np.full(problem.ineq_matrix.shape[0], np.nan),
            kkt_residual=np.inf,
            status=Status.INFEASIBLE,
            iterations=iters,
        )

    # fold box duals back onto their originating single-variable rows
    mu = np.zeros(problem.ineq_matrix.shape[0])
    if problem.ineq_matrix.size:
        nnz = np.count_nonzero(problem.ineq_matrix, axis=1)
        single = nnz == 1
        mu[~single] = mu_kept
        remaining = z_box.copy()
        for i in np.nonzero(single)[0]:
            j = int(np.nonzero(problem.ineq_matrix[i])[0][0])
            a = problem.ineq_matrix[i, j]
            mu[i] = remaining[j] / a
            remaining[j] = 0.0
    if status == Status.OPTIMAL and kkt > tol:
        status = Status.MAX_ITER
    return QpSolution(
        primal=x,
        duals_eq=lam,
        duals_ineq=mu,
        kkt_residual=kkt,
        status=status,
        iterations=iters,
    )


# ---------------------------------------------------------------------------
# SQP driver
# ---------------------------------------------------------------------------


@dataclass
class ConstraintBlock:
    """Vector-valued constraint lower <= fun(x) <= upper.

    Equality rows are expressed with lower == upper.  jac, when given,
    must return the m x n Jacobian; otherwise forward differences are used.
    """

    fun: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if self.lower.shape != self.upper.shape:
            raise ValueError("constraint lower/upper must have matching shapes")
        if np.any(self.lower > self.upper):
            raise ValueError("constraint lower must be <= upper")


@dataclass
class NlpProblem:
    """min cost(x)  s.t.  lower <= c_k(x) <= upper,  lb <= x <= ub."""

    dimension: int
    cost: Callable[[np.ndarray], float]
    constraints: Sequence[ConstraintBlock] = field(default_factory=list)
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None
    cost_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    cost_hess: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        n = self.dimension
        self.lb = _as_vector(self.lb, n, "lb", fill=-_INF)
        self.ub = _as_vector(self.ub, n, "ub", fill=_INF)
        if np.any(self.lb > self.ub):
            raise ValueError("lb must be <= ub elementwise")
        x0 = _as_vector(self.x0, n, "x0", fill=0.0)
        self.x0 = np.clip(x0, self.lb, self.ub)


@dataclass
class NlpResult:
    x: np.ndarray
    status: Status
    iterations: int
    constraint_violation: float
    cost: float = np.nan


def _fd_step(x: np.ndarray) -> np.ndarray:
    return 1e-6 * np.maximum(1.0, np.abs(x))


def _fd_gradient(fun, x, f0=None):
    f0 = fun(x) if f0 is None else f0
    h = _fd_step(x)
    g = np.empty(x.size)
    xp = x.copy()
    for i in range(x.size):
        xp[i] = x[i] + h[i]
        g[i] = (fun(xp) - f0) / h[i]
        xp[i] = x[i]
    return g


def _fd_jacobian(fun, x, f0=None):
    f0 = np.atleast_1d(fun(x)) if f0 is None else np.atleast_1d(f0)
    h = _fd_step(x)
    J = np.empty((f0.size, x.size))
    xp = x.copy()
    for i in range(x.size):
        xp[i] = x[i] + h[i]
        J[:, i] = (np.atleast_1d(fun(xp)) - f0) / h[i]
        xp[i] = x[i]
    return J


class _NlpEval:
    """Bundles constraint stacking and derivative evaluation."""

    def __init__(self, problem: NlpProblem):
        self.p = problem
        self.m = sum(b.lower.size for b in problem.constraints)
        self.cl = (
            np.concatenate([b.lower for b in problem.constraints])
            if problem.constraints
            else np.zeros(0)
        )
        self.cu = (
            np.concatenate([b.upper for b in problem.constraints])
            if problem.constraints
            else np.zeros(0)
        )

    def constraints(self, x):
        if not self.p.constraints:
            return np.zeros(0)
        return np.concatenate([np.atleast_1d(b.fun(x)) for b in self.p.constraints])

    def jacobian(self, x, c0):
        if not self.p.constraints:
            return np.zeros((0, x.size))
        blocks = []
        k = 0
        for b in self.p.constraints:
            mk = b.lower.size
            if b.jac is not None:
                blocks.append(np.asarray(b.jac(x), dtype=float).reshape(mk, x.size))
            else:
                blocks.append(_fd_jacobian(b.fun, x, c0[k : k + mk]))
            k += mk
        return np.vstack(blocks)

    def gradient(self, x, f0):
        if self.p.cost_grad is not None:
            return np.asarray(self.p.cost_grad(x), dtype=float).reshape(-1)
        return _fd_gradient(self.p.cost, x, f0)

    def violation(self, x, c=None):
        c = self.constraints(x) if c is None else c
        v = 0.0
        if c.size:
            v = max(
                float(np.max(np.maximum(c - self.cu, 0.0))),
                float(np.max(np.maximum(self.cl - c, 0.0))),
            )
        v = max(v, float(np.max(np.maximum(x - self.p.ub, 0.0), initial=0.0)))
        v = max(v, float(np.max(np.maximum(self.p.lb - x, 0.0), initial=0.0)))
        return v

    def l1_violation(self, x, c=None):
        c = self.constraints(x) if c is None else c
        t = 0.0
        if c.size:
            t += float(np.sum(np.maximum(c - self.cu, 0.0)))
            t += float(np.sum(np.maximum(self.cl - c, 0.0)))
        t += float(np.sum(np.maximum(x - self.p.ub, 0.0)))
        t += float(np.sum(np.maximum(self.p.lb - x, 0.0)))
        return t


def solve_nlp(
    problem: NlpProblem,
    tol: float = 1e-6,
    max_iter: int = 500,
    qp_tol: Optional[float] = None,
    qp_max_iter: int = 100,
    stat_tol: Optional[float] = None,
    callback: Optional[Callable[[dict], None]] = None,
) -> NlpResult:
    """SQP with an L1 merit line search and damped BFGS Hessian updates.

    Derivatives come from registered callbacks when present, otherwise
    forward finite differences with step 1e-6 * max(1, |x_i|).  On
    Status.OPTIMAL the constraint violation (infinity norm, bounds
    included) and the first-order stationarity residual are <= tol.
    stat_tol loosens the stationarity part of the test on callers that
    only need feasibility to tol (documented on their side).
    """
    ev = _NlpEval(problem)
    n = problem.dimension
    x = problem.x0.copy()
    qp_tol = min(tol * 1e-2, 1e-8) if qp_tol is None else qp_tol
    stat_tol = tol if stat_tol is None else stat_tol

    f = float(problem.cost(x))
    c = ev.constraints(x)
    grad = ev.gradient(x, f)
    J = ev.jacobian(x, c)

    use_exact_hess = problem.cost_hess is not None
    B = np.asarray(problem.cost_hess(x), dtype=float) if use_exact_hess else np.eye(n)
    if use_exact_hess:
        B = B + 1e-8 * max(1.0, np.trace(B) / n) * np.eye(n)

    penalty = 1.0
    status = Status.MAX_ITER
    it = 0
    for it in range(1, max_iter + 1):
        data = _QpData(
            H=B,
            g=grad,
            A=np.zeros((0, n)),
            b=np.zeros(0),
            C=J,
            cl=ev.cl - c,
            cu=ev.cu - c,
            lb=problem.lb - x,
            ub=problem.ub - x,
        )
        d, lam, mu, z_box, _, qp_status, _ = _solve_qp_core(data, qp_tol, qp_max_iter)
        if d is None:
            # relax the linearized constraints just enough to restore
            # feasibility of the subproblem (elastic step)
            d, mu, z_box = _elastic_step(data, qp_tol, qp_max_iter)
            if d is None:
                return NlpResult(x, Status.INFEASIBLE, it, ev.violation(x, c), f)

        viol = ev.violation(x, c)
        stat_res = float(np.max(np.abs(grad + J.T @ mu + z_box))) if c.size or np.isfinite(
            problem.lb
        ).any() or np.isfinite(problem.ub).any() else float(np.max(np.abs(grad)))
        if viol <= tol and (stat_res <= stat_tol or float(np.max(np.abs(d))) <= tol * 1e-2):
            status = Status.OPTIMAL
            break

        mult_inf = max(
            float(np.max(np.abs(mu))) if mu.size else 0.0,
            float(np.max(np.abs(z_box))) if z_box.size else 0.0,
        )
        penalty = max(penalty, 1.2 * mult_inf + 1e-3)

        # L1 merit line search
        l1_0 = ev.l1_violation(x, c)
        merit_0 = f + penalty * l1_0
        deriv = float(grad @ d) - penalty * l1_0
        alpha = 1.0
        accepted = False
        f_new = f
        c_new = c
        x_new = x
        while alpha >= 1e-12:
            x_try = x + alpha * d
            f_try = float(problem.cost(x_try))
            c_try = ev.constraints(x_try)
            merit_try = f_try + penalty * ev.l1_violation(x_try, c_try)
            if merit_try <= merit_0 + 1e-4 * alpha * min(deriv, 0.0) + 1e-14 * abs(merit_0):
                accepted = True
                x_new, f_new, c_new = x_try, f_try, c_try
                break
            alpha *= 0.5
        if not accepted:
            # second-order correction: retry a full step corrected for the
            # constraint bend (helps on curved equality manifolds)
            x_soc = _second_order_correction(x, d, ev, J)
            if x_soc is not None:
                f_soc = float(problem.cost(x_soc))
                c_soc = ev.constraints(x_soc)
                if f_soc + penalty * ev.l1_violation(x_soc, c_soc) <= merit_0 + 1e-14 * abs(merit_0):
                    accepted = True
                    x_new, f_new, c_new = x_soc, f_soc, c_soc
                    alpha = 1.0
        if not accepted:
            if viol <= tol and stat_res <= 10.0 * tol:
                status = Status.OPTIMAL
                break
            return NlpResult(x, Status.LINE_SEARCH_FAILURE, it, viol, f)

        grad_new = ev.gradient(x_new, f_new)
        J_new = ev.jacobian(x_new, c_new)

        if use_exact_hess:
            B = np.asarray(problem.cost_hess(x_new), dtype=float)
            B = B + 1e-8 * max(1.0, np.trace(B) / n) * np.eye(n)
        else:
            s = x_new - x
            yv = (grad_new + J_new.T @ mu) - (grad + J.T @ mu)
            B = _damped_bfgs_update(B, s, yv)

        x, f, c, grad, J = x_new, f_new, c_new, grad_new, J_new
        if callback is not None:
            callback(
                {
                    "iteration": it,
                    "x": x.copy(),
                    "cost": f,
                    "violation": ev.violation(x, c),
                    "l1_violation": ev.l1_violation(x, c),
                    "penalty": penalty,
                    "merit": f + penalty * ev.l1_violation(x, c),
                    "alpha": alpha,
                }
            )

    return NlpResult(x, status, it, ev.violation(x), float(problem.cost(x)))


def _elastic_step(data: _QpData, tol, max_iter):
    """Minimize the L1 norm of constraint violations of the QP subproblem.

    Used when the linearized constraints are locally inconsistent; gives a
    step that restores feasibility as far as the linearization allows.
    """
    n = data.g.size
    mg = data.C.shape[0]
    if mg == 0:
        return None, None, None
    # variables [d; t] with C d - t <= cu, C d + t >= cl, t >= 0
    big = 1e4
    H = np.zeros((n + mg, n + mg))
    H[:n, :n] = data.H
    g = np.concatenate([data.g, big * np.ones(mg)])
    C = np.block([[data.C, -np.eye(mg)], [data.C, np.eye(mg)]])
    cl = np.concatenate([np.full(mg, -_INF), data.cl])
    cu = np.concatenate([data.cu, np.full(mg, _INF)])
    lb = np.concatenate([data.lb, np.zeros(mg)])
    ub = np.concatenate([data.ub, np.full(mg, _INF)])
    d2 = _QpData(H=H, g=g, A=np.zeros((0, n + mg)), b=np.zeros(0), C=C, cl=cl, cu=cu, lb=lb, ub=ub)
    x, lam, mu, z_box, _, status, _ = _solve_qp_core(d2, tol, max_iter)
    if x is None or status == Status.INFEASIBLE:
        return None, None, None
    mu_fold = mu[:mg] + mu[mg:]
    return x[:n], mu_fold, z_box[:n]


def _second_order_correction(x, d, ev: _NlpEval, J):
    """Shift the full step to cancel constraint values at x + d."""
    c_full = ev.constraints(x + d)
    if c_full.size == 0:
        return None
    viol_u = np.maximum(c_full - ev.cu, 0.0)
    viol_l = np.maximum(ev.cl - c_full, 0.0)
    r = viol_u - viol_l
    if float(np.max(np.abs(r))) <= 0.0:
        return None
    corr, *_ = np.linalg.lstsq(J, -r, rcond=None)
    return x + d + corr


def _damped_bfgs_update(B, s, y, damping=0.2):
    sBs = float(s @ B @ s)
    sy = float(s @ y)
    if sBs <= 1e-16 or float(s @ s) <= 1e-32:
        return B
    if sy < damping * sBs:
        theta = (1.0 - damping) * sBs / (sBs - sy)
        y = theta * y + (1.0 - theta) * (B @ s)
        sy = float(s @ y)
    if sy <= 1e-14 * max(1.0, abs(sBs)):
        return B
    Bs = B @ s
    return B - np.outer(Bs, Bs) / sBs + np.outer(y, y) / sy

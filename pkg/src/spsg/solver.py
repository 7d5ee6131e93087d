"""ADMM solver for the row-sparse, Laplacian-regularized selection model.

The model is::

    minimize   tr(P R^T U) + gamma tr(U L U^T) + lam * sum_j max_i U[j, i]
    subject to U >= 0, every column of U sums to one.

Writing the row maxima as ``m 1^T = U + V`` with ``V >= 0`` and splitting
``U = U_hat``, ``V = V_hat`` yields three blocks per iteration:

1. ``(U, V)``: ``l`` equality-constrained QPs sharing one KKT matrix, so it
   is factored once and back-solved for all rows together.
2. ``(U_hat, V_hat)``: column-wise simplex projections and a clamp at zero.
3. Dual ascent on the two consensus constraints.
"""

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from spsg import kernels
from spsg.model import ModelInstance

DENSE_KKT_LIMIT = 600
SELECT_FRACTION = 0.1


class NonConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolverParams:
    mu: float = 1.0
    tol: float = 1e-7
    max_iters: int = 3000

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class SolverState:
    U: np.ndarray
    V: np.ndarray
    U_hat: np.ndarray
    V_hat: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    k: int = 0
    residuals: list = field(default_factory=list)

    @classmethod
    def initial(cls, l, n):
        """Uniform columns for ``U_hat``, zeros elsewhere."""
        U_hat = np.full((l, n), 1.0 / l)
        zeros = np.zeros((l, n))
        return cls(U_hat.copy(), zeros.copy(), U_hat, zeros.copy(), zeros.copy(), zeros.copy())

    def copy(self):
        return SolverState(self.U.copy(), self.V.copy(), self.U_hat.copy(), self.V_hat.copy(),
                           self.Lambda1.copy(), self.Lambda2.copy(), self.k, list(self.residuals))


class KktFactorization:
    """Factored KKT system of the per-row QP.

    Minimizes ``0.5 y^T B y + y^T b`` subject to ``A y = 0`` where
    ``y = [u; v]`` stacks one row of ``U`` and ``V``,
    ``B = blockdiag(2 gamma L + mu I, mu I)`` and ``A`` has one row per
    consecutive-column equality ``u_i + v_i = u_{i+1} + v_{i+1}``.
    """

    def __init__(self, L, gamma, mu):
        L = sp.csr_matrix(L, dtype=np.float64)
        n = L.shape[0]
        if gamma < 0 or not mu > 0:
            raise ValueError("need gamma >= 0 and mu > 0")
        self.n, self.gamma, self.mu = n, float(gamma), float(mu)
        eye = sp.identity(n, format="csr")
        self.B = sp.block_diag([2.0 * gamma * L + mu * eye, mu * eye], format="csr")
        self.A = constraint_matrix(n)
        K = sp.bmat([[self.B, self.A.T], [self.A, None]], format="csc") if n > 1 else self.B.tocsc()
        self.size = K.shape[0]
        if self.size <= DENSE_KKT_LIMIT:
            self._dense = True
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                try:
                    self._lu = sla.lu_factor(K.toarray(), check_finite=False)
                except sla.LinAlgWarning as exc:
                    raise np.linalg.LinAlgError("singular KKT system") from exc
            if np.min(np.abs(np.diag(self._lu[0]))) == 0:
                raise np.linalg.LinAlgError("singular KKT system")
        else:
            self._dense = False
            self._lu = spla.splu(K)

    def solve(self, b):
        """Minimizer(s) for linear term(s) ``b`` of shape (2n,) or (2n, m)."""
        b = np.asarray(b, dtype=np.float64)
        vector = b.ndim == 1
        b2 = b[:, None] if vector else b
        rhs = np.zeros((self.size, b2.shape[1]))
        rhs[:2 * self.n] = -b2
        if self._dense:
            sol = sla.lu_solve(self._lu, rhs, check_finite=False)
        else:
            sol = self._lu.solve(rhs)
        y = sol[:2 * self.n]
        return y[:, 0] if vector else y


def constraint_matrix(n):
    """(n-1) x 2n matrix with rows ``u_i + v_i - u_{i+1} - v_{i+1}``."""
    if n <= 1:
        return sp.csr_matrix((0, 2 * n))
    r = np.arange(n - 1)
    rows = np.repeat(r, 4)
    cols = np.column_stack([r, n + r, r + 1, n + r + 1]).ravel()
    vals = np.tile([1.0, 1.0, -1.0, -1.0], n - 1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, 2 * n))


def build_kkt(L, gamma, mu, n=None):
    if n is not None and L.shape != (n, n):
        raise ValueError("Laplacian size does not match n")
    return KktFactorization(L, gamma, mu)


def primal_update(state, kkt, lam, n):
    """Joint minimization over ``(U, V)`` with all rows back-solved at once."""
    mu = kkt.mu
    rhs = np.empty((2 * n, state.U.shape[0]))
    rhs[:n] = (lam / n - mu * state.U_hat + state.Lambda1).T
    rhs[n:] = (lam / n - mu * state.V_hat + state.Lambda2).T
    Y = kkt.solve(rhs)
    return np.ascontiguousarray(Y[:n].T), np.ascontiguousarray(Y[n:].T)


def project_simplex_columns(M):
    return kernels.project_simplex_columns(M)


def project_nonneg(M):
    return np.maximum(M, 0.0)


def auxiliary_update(state, R, p, mu):
    """Closed-form ``(U_hat, V_hat)`` step.

    Setting the gradient of ``<R diag(p), U_hat> + mu/2 ||U - U_hat + Lambda1/mu||^2``
    to zero puts the unconstrained minimizer at ``U + (Lambda1 - R diag(p)) / mu``;
    the constrained one is its projection onto the simplex.
    """
    U_hat = project_simplex_columns(state.U + (state.Lambda1 - R * p) / mu)
    V_hat = project_nonneg(state.V + state.Lambda2 / mu)
    return U_hat, V_hat


def dual_update(state, mu):
    return (state.Lambda1 + mu * (state.U - state.U_hat),
            state.Lambda2 + mu * (state.V - state.V_hat))


def combined_residual(prev, state, mu):
    return float(np.sum((state.Lambda1 - prev.Lambda1) ** 2) / mu
                 + mu * np.sum((state.U - prev.U) ** 2)
                 + np.sum((state.Lambda2 - prev.Lambda2) ** 2) / mu
                 + mu * np.sum((state.V - prev.V) ** 2))


def objective(U, instance):
    """Value of the selection model at ``U``."""
    U = np.asarray(U, dtype=np.float64)
    data = float(np.sum(instance.cost * U))
    smooth = float(np.sum(U * (instance.L @ U.T).T))
    sparse = float(np.sum(np.max(np.abs(U), axis=1)))
    return data + instance.gamma * smooth + instance.lam * sparse


@dataclass
class Solution:
    U: np.ndarray
    iterations: int
    residual: float
    objective: float
    converged: bool
    state: SolverState = None
    trace: list = None

    @property
    def selected(self):
        return selected_rows(self.U)


def selection_threshold(l):
    return SELECT_FRACTION / l


def selected_rows(U):
    """Indices of rows whose largest entry exceeds ``0.1 / l``."""
    U = np.asarray(U)
    return np.flatnonzero(U.max(axis=1) > selection_threshold(U.shape[0]))


def problem_scale(instance):
    """Mean data-term weight, used to put every instance on a unit scale."""
    s = float(np.mean(instance.cost)) if instance.R.size else 0.0
    return s if s > 0 and np.isfinite(s) else 1.0


def normalized(instance):
    """Instance with ``R``, ``gamma`` and ``lam`` divided by :func:`problem_scale`.

    The objective is positively homogeneous in these three, so minimizers
    are unchanged.
    """
    s = problem_scale(instance)
    return ModelInstance(instance.R / s, instance.p, instance.W, instance.L,
                         instance.gamma / s, instance.lam / s, instance.sigma_x)


def solve(instance, params=None, state=None, kkt=None, trace=False, callback=None):
    """Run ADMM until the combined residual drops below ``params.tol``.

    Iterations run on :func:`normalized` data, so ``mu``, ``tol`` and the
    state's multipliers are in units of the mean data weight and the result
    does not depend on the overall scale of ``R``, ``gamma`` and ``lam``.

    ``state`` warm-starts from a previous run on the same ``R`` and ``p``;
    ``kkt`` reuses a factorization from :func:`build_solver_kkt`.
    ``callback(state)`` is called after every iteration. With ``trace=True``
    the solution carries ``(iteration, residual, objective)`` rows.
    """
    params = params or SolverParams()
    original = instance
    instance = normalized(instance)
    l, n = instance.shape
    mu = params.mu
    if kkt is None:
        kkt = KktFactorization(instance.L, instance.gamma, mu)
    elif kkt.n != n or kkt.mu != mu or not np.isclose(kkt.gamma, instance.gamma, rtol=1e-14, atol=0):
        raise ValueError("KKT factorization was built for different parameters")
    st = SolverState.initial(l, n) if state is None else state.copy()
    st.residuals = []
    st.k = 0
    rows = [] if trace else None
    best_eps, best_U = np.inf, st.U_hat
    eps = np.inf
    converged = False
    for _ in range(params.max_iters):
        prev = st
        U, V = primal_update(prev, kkt, instance.lam, n)
        st = SolverState(U, V, prev.U_hat, prev.V_hat, prev.Lambda1, prev.Lambda2,
                         prev.k + 1, prev.residuals)
        st.U_hat, st.V_hat = auxiliary_update(st, instance.R, instance.p, mu)
        st.Lambda1, st.Lambda2 = dual_update(st, mu)
        U_hat = st.U_hat
        eps = combined_residual(prev, st, mu)
        st.residuals.append(eps)
        if rows is not None:
            rows.append((st.k, eps, objective(U_hat, original)))
        if callback is not None:
            callback(st)
        if eps < best_eps:
            best_eps, best_U = eps, U_hat
        if eps < params.tol:
            converged = True
            break
    U_star = st.U_hat if converged else best_U
    U_star = np.where(U_star < 0, 0.0, U_star)
    return Solution(U_star, st.k, eps if converged else best_eps, objective(U_star, original),
                    converged, st, rows)


def build_solver_kkt(instance, params=None):
    """Factorization matching what :func:`solve` builds for ``instance``."""
    params = params or SolverParams()
    return KktFactorization(instance.L, instance.gamma / problem_scale(instance), params.mu)


def _word_groups(R):
    """Group index per row; identical rows of R are indistinguishable words."""
    _, inv = np.unique(R, axis=0, return_inverse=True)
    return np.asarray(inv).ravel()


def lambda_max(instance, params=None, steps=12, max_doublings=60, full_output=False):
    """Smallest ``lam`` at which the solver keeps a single word.

    Starts at the largest per-column spread of ``R diag(p)``, doubles (or
    halves) until the single-word boundary is bracketed within a factor of
    two, then bisects ``steps`` times. Probes run at ten times the tolerance;
    the final bracket is confirmed at the full tolerance and widened if a
    second word reappears. Returns the upper bracket, or 0 when a single word survives even at
    ``lam = 0``; with ``full_output`` also whether every probe converged.
    """
    params = params or SolverParams()
    probe = replace(params, tol=params.tol * 10)
    l, n = instance.shape
    cost = instance.cost
    lam0 = float(np.max(cost.max(axis=0) - cost.min(axis=0)))
    groups = _word_groups(instance.R)
    if l == 1 or len(np.unique(groups)) == 1 or lam0 <= 0:
        return (lam0, True) if full_output else lam0
    kkt = build_solver_kkt(instance, params)
    all_converged = True

    def single(lam, p=probe):
        nonlocal all_converged
        sol = solve(instance.with_lambda(lam), p, kkt=kkt)
        all_converged &= sol.converged
        return len(np.unique(groups[selected_rows(sol.U)])) <= 1

    if single(0.0):
        # strong smoothing can already force one word without the sparsity term
        return (0.0, all_converged) if full_output else 0.0
    hi = lam0
    if single(hi):
        lo = hi / 2
        for _ in range(max_doublings):
            if not single(lo):
                break
            hi, lo = lo, lo / 2
        else:
            return (hi, all_converged) if full_output else hi
    else:
        lo = hi
        for _ in range(max_doublings):
            hi = 2 * lo
            if single(hi):
                break
            lo = hi
        else:
            warnings.warn("single-word regime not reached; returning last probe",
                          NonConvergenceWarning, stacklevel=2)
            return (hi, False) if full_output else hi
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if single(mid):
            hi = mid
        else:
            lo = mid
    # a looser probe can stop just short of the boundary
    width = hi - lo
    for _ in range(max_doublings):
        if single(hi, params):
            break
        lo, hi, width = hi, hi + width, 2 * width
    if not all_converged:
        warnings.warn("some lambda_max probes hit max_iters", NonConvergenceWarning, stacklevel=2)
    return (hi, all_converged) if full_output else hi

"""Deterministic linear-algebra kernels.

Iterative and direct symmetric solvers, orthonormal null-space bases, and a
smallest-generalized-eigenpair routine.  All routines are pure functions of
their inputs; given the same operands on the same platform they produce
bitwise-identical results.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csc_array
from scipy.sparse import linalg as spla

from .sparse import SparseOperator, as_vector

#: relative smallest-singular-value threshold below which a constraint
#: operator is treated as rank deficient (double-precision backward-error scale)
RANK_TOL = 1e-10

DEFAULT_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """An iterative method failed to meet its tolerance within max_iter."""


class SingularSystemError(RuntimeError):
    """A direct solve hit a (numerically) singular system."""


class RankDeficiencyError(ValueError):
    """A constraint operator does not have full row rank, so the associated
    multiplier would not be unique."""


@dataclass(frozen=True)
class SolverReport:
    iterations: int
    residual_norm: float
    converged: bool
    breakdown_reason: str | None = None


def _matvec(op):
    """Return a matvec callable for a SparseOperator, ndarray, or callable."""
    if isinstance(op, SparseOperator):
        return op.apply
    if isinstance(op, np.ndarray):
        return lambda v: op @ v
    if callable(op):
        return op
    raise TypeError(f"cannot interpret {type(op)!r} as a linear operator")


def conjugate_gradient(op, b, tol=DEFAULT_TOL, max_iter=None):
    """Solve ``op @ x = b`` for symmetric positive definite ``op`` by CG.

    Parameters
    ----------
    op : SparseOperator, ndarray, or callable
        SPD operator (callables receive and return 1-D arrays).
    b : array_like
        Right-hand side.
    tol : float
        Relative residual target: convergence means
        ``||op x - b|| <= tol * ||b||``, verified against the true residual.
    max_iter : int, optional
        Defaults to ``10 * len(b)``.

    Returns
    -------
    (x, report) : (ndarray, SolverReport)
        ``report.converged`` is False on iteration exhaustion or when a
        negative-curvature direction reveals an indefinite operator.
    """
    b = as_vector(b, name="b")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = b.shape[0]
    apply_op = _matvec(op)
    if max_iter is None:
        max_iter = 10 * max(n, 1)

    x = np.zeros(n)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return x, SolverReport(0, 0.0, True)

    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    iterations = 0
    while iterations < max_iter:
        ap = apply_op(p)
        p_ap = float(p @ ap)
        if p_ap <= 0.0:
            return x, SolverReport(iterations, np.linalg.norm(apply_op(x) - b),
                                   False, breakdown_reason="negative_curvature")
        alpha = rs / p_ap
        x = x + alpha * p
        r = r - alpha * ap
        iterations += 1
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= tol * norm_b:
            # recurrence residual can drift from the true one; confirm
            true_res = np.linalg.norm(apply_op(x) - b)
            if true_res <= tol * norm_b:
                return x, SolverReport(iterations, float(true_res), True)
            r = b - apply_op(x)
            rs_new = float(r @ r)
        beta = rs_new / rs
        p = r + beta * p
        rs = rs_new
    return x, SolverReport(max_iter, float(np.linalg.norm(apply_op(x) - b)),
                           False, breakdown_reason="max_iter")


def _describe_singular_direction(op):
    """Best-effort description of the near-null eigendirection of a symmetric
    operator, used in singular-system diagnostics."""
    n = op.nrows
    if n > 2000:
        return "system too large for dense diagnosis"
    w, v = np.linalg.eigh(op.toarray())
    k = int(np.argmin(np.abs(w)))
    vec = v[:, k]
    worst = np.argsort(-np.abs(vec))[: min(3, n)]
    comps = ", ".join(f"x[{i}]={vec[i]:+.3f}" for i in worst)
    return (f"eigenvalue {w[k]:.3e} with eigendirection dominated by {comps}")


def symmetric_indefinite_solve(op, b):
    """Solve a symmetric (possibly indefinite) system by pivoted factorization.

    The contract is a backward-error bound:
    ``||op x - b|| <= 1e-10 * (||op||_F ||x|| + ||b||)``.
    One step of iterative refinement is applied if the factorization alone
    falls short.  A singular system raises SingularSystemError with a
    description of the deficient eigendirection.
    """
    if not isinstance(op, SparseOperator):
        raise TypeError("op must be a SparseOperator")
    if not op.symmetric:
        raise ValueError("symmetric_indefinite_solve requires a symmetric operator")
    b = as_vector(b, length=op.nrows, name="b")

    csc = csc_array(op.csr)
    try:
        lu = spla.splu(csc)
    except RuntimeError as exc:  # SuperLU reports exact singularity this way
        raise SingularSystemError(
            f"singular system: {exc}; {_describe_singular_direction(op)}"
        ) from exc

    x = lu.solve(b)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(
            "non-finite solve result; " + _describe_singular_direction(op))

    op_norm = op.frobenius_norm()
    bound = 1e-10 * (op_norm * np.linalg.norm(x) + np.linalg.norm(b))
    residual = np.linalg.norm(op.apply(x) - b)
    iterations = 1
    if residual > bound:
        x = x + lu.solve(b - op.apply(x))
        residual = np.linalg.norm(op.apply(x) - b)
        iterations = 2
        bound = 1e-10 * (op_norm * np.linalg.norm(x) + np.linalg.norm(b))
        if residual > bound:
            raise SingularSystemError(
                f"backward error {residual:.3e} exceeds bound {bound:.3e}; "
                + _describe_singular_direction(op))
    return x, SolverReport(iterations, float(residual), True)


def factorized(op):
    """Prefactorize ``op`` (sparse LU) and return a solve callable.

    The callable accepts a vector or a 2-D block of right-hand sides.
    """
    if isinstance(op, SparseOperator):
        csc = csc_array(op.csr)
    else:
        csc = csc_array(op)
    try:
        lu = spla.splu(csc)
    except RuntimeError as exc:
        raise SingularSystemError(f"singular operator: {exc}") from exc
    return lu.solve


def assert_full_row_rank(C, rank_tol=RANK_TOL):
    """Raise RankDeficiencyError unless ``C`` has full numerical row rank.

    The threshold is on singular values: smallest >= rank_tol * largest.
    Returns the dense form of ``C`` for reuse by callers.
    """
    m, n = C.shape
    dense = C.toarray() if isinstance(C, SparseOperator) else np.asarray(C, dtype=float)
    if m == 0:
        return dense
    sv = sla.svdvals(dense)
    sv_max = sv[0] if sv.size else 0.0
    if m > n or sv_max == 0.0 or sv[-1] < rank_tol * sv_max:
        smallest = sv[-1] if sv.size else 0.0
        raise RankDeficiencyError(
            f"constraint operator is rank deficient: smallest singular value "
            f"{smallest:.3e} vs largest {sv_max:.3e} (tol {rank_tol:g})")
    return dense


def orthonormal_nullspace_basis(C, rank_tol=RANK_TOL):
    """Orthonormal basis of Ker C as columns of an (N, N - M) array.

    ``C`` must have full row rank: if the smallest singular value falls below
    ``rank_tol`` times the largest, RankDeficiencyError is raised (multipliers
    against such constraints are not unique).  Computed from a column-pivoted
    QR factorization of ``C.T``; the basis is deterministic for fixed input.
    """
    m, n = C.shape
    if m == 0:
        return np.eye(n)
    dense = assert_full_row_rank(C, rank_tol)
    q, _r, _piv = sla.qr(dense.T, mode="full", pivoting=True)
    return q[:, m:]


def _to_dense_symmetric(op, name):
    if isinstance(op, SparseOperator):
        arr = op.toarray()
    else:
        arr = np.asarray(op, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square")
    return 0.5 * (arr + arr.T)


def _project_columns(proj, x):
    return np.stack([proj(np.ascontiguousarray(c)) for c in x.T], axis=1)


def smallest_generalized_eigenpair(S, Mop, subspace_projector=None,
                                   tol=1e-10, max_iter=None, block_size=8):
    """Smallest eigenvalue of ``S q = lam * Mop q`` by blocked inverse
    iteration (shift 0) with Rayleigh-Ritz extraction in the Mop inner
    product.

    A single iterated vector can lock onto the wrong member of a
    near-degenerate bottom cluster while still showing a tiny eigenpair
    residual; a block wide enough to bracket the cluster does not, because
    its smallest Ritz value converges to the true minimum.

    Parameters
    ----------
    S : SparseOperator or ndarray
        Symmetric positive semidefinite (positive definite on the admissible
        subspace; an exactly singular S is handled by a tiny ridge in the
        factorization only — the reported eigenvalue is the true Rayleigh
        quotient).
    Mop : SparseOperator or ndarray
        Symmetric positive definite; defines the normalization
        ``q @ Mop @ q == 1`` of the returned eigenvector.
    subspace_projector : callable, optional
        Orthogonal projector onto the admissible subspace (e.g. deflation of
        a known kernel direction).  The pencil is restricted to its range.
    tol : float
        Residual target ``||S q - lam Mop q|| <= tol * ||q||``; the smallest
        Ritz value must also have stabilized to the same relative tolerance.

    Returns
    -------
    (lam, q) : (float, ndarray)
    """
    s_d = _to_dense_symmetric(S, "S")
    m_d = _to_dense_symmetric(Mop, "Mop")
    n = s_d.shape[0]
    if m_d.shape[0] != n:
        raise ValueError("S and Mop must have matching shapes")
    try:
        m_chol = sla.cholesky(m_d, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError("Mop must be positive definite") from exc

    if subspace_projector is None:
        s_p = s_d
        proj = lambda x: x
    else:
        p_mat = _project_columns(subspace_projector, np.eye(n))
        s_p = p_mat @ s_d @ p_mat

        def proj(x):
            return p_mat @ x

    # factorization operator: identity on the deflated directions keeps it
    # regular; an escalating ridge covers exactly singular S (kernel cases)
    shift = np.abs(np.diag(s_p)).max() or 1.0
    s_work = s_p if subspace_projector is None \
        else s_p + shift * (np.eye(n) - p_mat)
    factor = None
    ridge = 0.0
    for attempt in range(4):
        try:
            factor = sla.cho_factor(s_work + ridge * np.eye(n))
            break
        except np.linalg.LinAlgError:
            ridge = shift * 1e-12 if ridge == 0.0 else ridge * 1e4
    if factor is None:
        raise ValueError("S is far from positive semidefinite "
                         "on the admissible subspace")

    if max_iter is None:
        max_iter = max(500, 10 * n)
    width = min(block_size, n)

    def m_orthonormalize(x):
        # Mop-orthonormal columns via pivoted QR in the Cholesky-transformed
        # metric; rank-revealing so that directions annihilated by the
        # projector are dropped instead of being refilled with arbitrary
        # (possibly deflated) completions
        y = m_chol.T @ x
        q_fac, r_fac, _ = sla.qr(y, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r_fac))
        if diag.size == 0 or diag[0] == 0.0:
            raise ConvergenceError("projector annihilates the start block")
        rank = int(np.sum(diag > 1e-12 * diag[0]))
        return sla.solve_triangular(m_chol.T, q_fac[:, :rank])

    rng = np.random.default_rng(1815)    # fixed: results must be reproducible
    v = m_orthonormalize(proj(rng.standard_normal((n, width))))
    prev = None
    for _ in range(max_iter):
        h = v.T @ (s_p @ v)
        ritz, w = sla.eigh(0.5 * (h + h.T))
        v = v @ w
        lam = float(ritz[0])
        q = v[:, 0]
        residual = np.linalg.norm(s_p @ q - lam * (m_d @ q))
        if (residual <= tol * np.linalg.norm(q) and prev is not None
                and abs(lam - prev) <= tol * max(1.0, abs(lam))):
            return lam, q
        prev = lam
        v = m_orthonormalize(proj(sla.cho_solve(factor, m_d @ v)))
    raise ConvergenceError(
        f"inverse iteration did not reach residual {tol:g} in {max_iter} sweeps")

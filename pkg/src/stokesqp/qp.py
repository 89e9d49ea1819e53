"""Equality-constrained quadratic programming with multiplier recovery.

The problem is  min (1/2) x.T A x - b.T x  subject to  C x = d,  with A
symmetric positive definite and C of full row rank.  Three solve routes are
provided (direct saddle factorization, null-space reduction, Schur-complement
CG); all return the primal point together with the unique multiplier vector
satisfying  A x - b = C.T lam.  The inf-sup constant governing multiplier
uniqueness can be estimated from either of its two equivalent variational
forms.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
from scipy import sparse as _sp

from . import mmio
from .sparse import SparseOperator, as_vector
from .solvers import (DEFAULT_TOL, RANK_TOL, ConvergenceError, SolverReport,
                      assert_full_row_rank, conjugate_gradient, factorized,
                      orthonormal_nullspace_basis,
                      smallest_generalized_eigenpair,
                      symmetric_indefinite_solve, SingularSystemError)


class MultiplierConsistencyError(RuntimeError):
    """The gradient at the given point is not in the row space of the
    constraints, i.e. the point is not a constrained minimizer."""


@dataclass(frozen=True)
class QpProblem:
    """The quadruple (A, b, C, d).

    A : SparseOperator, N x N symmetric positive definite
    b : ndarray, length N
    C : SparseOperator, M x N with M < N and full row rank
    d : ndarray, length M (d = 0 is the homogeneous-subspace case)
    """

    A: SparseOperator
    b: np.ndarray
    C: SparseOperator
    d: np.ndarray

    def __post_init__(self):
        A, C = self.A, self.C
        if not isinstance(A, SparseOperator) or not isinstance(C, SparseOperator):
            raise TypeError("A and C must be SparseOperator instances")
        if A.nrows != A.ncols:
            raise ValueError("A must be square")
        if not A.symmetric:
            raise ValueError("A must carry the symmetric flag")
        n = A.nrows
        object.__setattr__(self, "b", as_vector(self.b, length=n, name="b"))
        m = C.nrows
        if C.ncols != n:
            raise ValueError(f"C has {C.ncols} columns, expected {n}")
        if m >= n:
            raise ValueError(f"need M < N, got M={m}, N={n}")
        object.__setattr__(self, "d", as_vector(self.d, length=m, name="d"))
        # positivity spot check; failures that slip through surface later as
        # singular saddle systems with a named culprit
        rng = np.random.default_rng(0)
        for _ in range(3):
            x = rng.standard_normal(n)
            if float(x @ A.apply(x)) <= 0.0:
                raise ValueError("A failed the positive-definiteness spot check")
        if m:
            assert_full_row_rank(C, RANK_TOL)

    @property
    def n_primal(self):
        return self.A.nrows

    @property
    def n_constraints(self):
        return self.C.nrows


@dataclass(frozen=True)
class SaddleSolution:
    """Primal point, multiplier, and both residual norms from one solve.

    ``residual_stationarity`` is ||A x - b - C.T lam|| and
    ``residual_feasibility`` is ||C x - d||.  ``inner_report`` carries the
    underlying linear-solver diagnostics (iteration counts for reports).
    """

    x: np.ndarray
    multiplier: np.ndarray
    residual_stationarity: float
    residual_feasibility: float
    method_tag: str
    inner_report: SolverReport | None = None


@dataclass(frozen=True)
class OptimalityReport:
    projected_gradient_norm: float
    feasibility_norm: float
    is_minimizer: bool


@dataclass(frozen=True)
class InfSupEstimate:
    """Estimated inf-sup constant with the multiplier-space vector attaining it."""

    beta: float
    attaining_q: np.ndarray
    form_tag: str
    eigenvalue: float


def gradient(problem, x):
    """Return A x - b."""
    x = as_vector(x, length=problem.n_primal, name="x")
    return problem.A.apply(x) - problem.b


def objective(problem, x):
    """Return (1/2) x.T A x - b.T x."""
    x = as_vector(x, length=problem.n_primal, name="x")
    return 0.5 * float(x @ problem.A.apply(x)) - float(problem.b @ x)


def residual_scale(problem, x):
    """Normalization ||A||_F ||x|| + ||b|| for residual contracts."""
    return (problem.A.frobenius_norm() * np.linalg.norm(x)
            + np.linalg.norm(problem.b))


def assemble_kkt(problem):
    """The (N+M) x (N+M) symmetric block operator [[A, C.T], [C, 0]].

    The multiplier of this symmetric system is the negative of the reported
    one: solutions carry lam = -lam_sym so that A x - b = C.T lam holds with
    the stationarity sign convention.  With no constraints the operator is A
    itself.
    """
    if problem.n_constraints == 0:
        return problem.A
    c = problem.C.csr
    block = _sp.bmat([[problem.A.csr, c.T], [c, None]], format="csr")
    return SparseOperator(block, symmetric=True)


def _finish(problem, x, multiplier, method_tag, tol, inner_report=None):
    """Assemble a SaddleSolution and enforce the residual contract."""
    stat = np.linalg.norm(gradient(problem, x) - problem.C.csr.T @ multiplier)
    feas = np.linalg.norm(problem.C.csr @ x - problem.d)
    scale = residual_scale(problem, x)
    bound = tol * scale
    if stat > bound or feas > bound:
        raise ConvergenceError(
            f"{method_tag} solve violated the residual contract: "
            f"stationarity {stat:.3e}, feasibility {feas:.3e}, bound {bound:.3e}")
    return SaddleSolution(x, multiplier, float(stat), float(feas),
                          method_tag, inner_report)


def _diagnose_saddle_failure(problem):
    """Name the failed hypothesis (A definiteness or C rank) on singularity."""
    parts = []
    n = problem.n_primal
    if n <= 2000:
        w = np.linalg.eigvalsh(problem.A.toarray())
        if w[0] <= RANK_TOL * max(abs(w[-1]), 1.0):
            parts.append(f"A is not positive definite "
                         f"(smallest eigenvalue {w[0]:.3e})")
    if problem.n_constraints:
        sv = sla.svdvals(problem.C.toarray())
        if sv[-1] < RANK_TOL * sv[0]:
            parts.append(f"C is rank deficient "
                         f"(singular values {sv[-1]:.3e} .. {sv[0]:.3e})")
    if not parts:
        parts.append("no failed hypothesis identified; system is numerically "
                     "singular nonetheless")
    return "; ".join(parts)


def solve_kkt_direct(problem, tol=DEFAULT_TOL):
    """Solve the saddle system by one symmetric factorization."""
    n, m = problem.n_primal, problem.n_constraints
    kkt = assemble_kkt(problem)
    rhs = np.concatenate([problem.b, problem.d])
    try:
        sol, report = symmetric_indefinite_solve(kkt, rhs)
    except SingularSystemError as exc:
        raise SingularSystemError(
            f"saddle system singular: {_diagnose_saddle_failure(problem)}"
        ) from exc
    x = sol[:n]
    multiplier = -sol[n:n + m]
    return _finish(problem, x, multiplier, "direct", tol, report)


def _min_norm_particular(problem):
    """Minimum-norm solution of C x = d via the QR factorization of C.T."""
    n, m = problem.n_primal, problem.n_constraints
    if m == 0:
        return np.zeros(n)
    q1, r1 = sla.qr(problem.C.toarray().T, mode="economic")
    return q1 @ sla.solve_triangular(r1.T, problem.d, lower=True)


def solve_nullspace(problem, tol=DEFAULT_TOL):
    """Reduce to the constraint kernel, minimize there, then recover lam.

    A feasible point x0 (minimum norm) plus an orthonormal kernel basis Z
    turn the problem into the SPD system (Z.T A Z) y = Z.T (b - A x0); the
    multiplier is recovered afterwards from the gradient at the minimizer.
    """
    z = orthonormal_nullspace_basis(problem.C)
    x0 = _min_norm_particular(problem)
    reduced = z.T @ (problem.A.csr @ z)
    rhs = z.T @ (problem.b - problem.A.apply(x0))
    y = sla.cho_solve(sla.cho_factor(reduced), rhs)
    x = x0 + z @ y
    multiplier = recover_multiplier(problem, x, tol)
    return _finish(problem, x, multiplier, "nullspace", tol)


def solve_schur(problem, tol=DEFAULT_TOL):
    """Eliminate x and solve (C A^-1 C.T) lam_sym = C A^-1 b - d by CG.

    Inner applications of A^-1 use CG as well, at a tolerance two orders
    tighter than the outer one.  Inner and outer non-convergence are
    reported separately.
    """
    n, m = problem.n_primal, problem.n_constraints
    inner_tol = max(1e-14, 0.01 * tol)

    def a_inv(v, what):
        sol, rep = conjugate_gradient(problem.A, v, tol=inner_tol)
        if not rep.converged:
            raise ConvergenceError(
                f"inner CG on A failed while {what} "
                f"(reason: {rep.breakdown_reason}, residual {rep.residual_norm:.3e})")
        return sol

    if m == 0:
        x, rep = conjugate_gradient(problem.A, problem.b, tol=inner_tol)
        if not rep.converged:
            raise ConvergenceError("inner CG on A failed (no constraints)")
        return _finish(problem, x, np.zeros(0), "schur", tol, rep)

    ct = problem.C.csr.T
    rhs = problem.C.csr @ a_inv(problem.b, "forming the reduced right-hand side") \
        - problem.d

    def schur_apply(lam):
        return problem.C.csr @ a_inv(ct @ lam, "applying the reduced operator")

    lam_sym, outer = conjugate_gradient(schur_apply, rhs, tol=tol)
    if not outer.converged:
        raise ConvergenceError(
            f"outer CG on the reduced system failed "
            f"(reason: {outer.breakdown_reason}, residual {outer.residual_norm:.3e})")
    x = a_inv(problem.b - ct @ lam_sym, "recovering the primal point")
    return _finish(problem, x, -lam_sym, "schur", tol, outer)


def check_optimality(problem, x, tol=DEFAULT_TOL, kernel_projector=None):
    """Constrained-minimizer test: vanishing kernel-projected gradient plus
    feasibility.

    With ``kernel_projector`` given (a callable projecting onto Ker C), the
    projected gradient is evaluated matrix-free; otherwise an orthonormal
    kernel basis is built.  Without constraints the test reduces to
    ||A x - b|| <= tol.
    """
    x = as_vector(x, length=problem.n_primal, name="x")
    g = gradient(problem, x)
    m = problem.n_constraints
    feas = float(np.linalg.norm(problem.C.csr @ x - problem.d)) if m else 0.0
    if kernel_projector is not None:
        pg = float(np.linalg.norm(kernel_projector(g)))
    elif m == 0:
        pg = float(np.linalg.norm(g))
    else:
        z = orthonormal_nullspace_basis(problem.C)
        pg = float(np.linalg.norm(z.T @ g))
    return OptimalityReport(pg, feas, pg <= tol and feas <= tol)


def recover_multiplier(problem, x, tol=DEFAULT_TOL, kernel_projector=None):
    """The unique least-squares solution lam of C.T lam = A x - b.

    Precondition: x passes check_optimality at ``tol`` (evaluated through
    ``kernel_projector`` when given, so large problems can certify
    matrix-free).  If the residual of the least-squares fit exceeds tol
    times the problem scale, the gradient has a component outside the
    constraint row space and MultiplierConsistencyError is raised: x is not
    a constrained minimizer.
    """
    x = as_vector(x, length=problem.n_primal, name="x")
    report = check_optimality(problem, x, tol, kernel_projector)
    if not report.is_minimizer:
        raise MultiplierConsistencyError(
            f"point is not a constrained minimizer at tol {tol:g}: projected "
            f"gradient {report.projected_gradient_norm:.3e}, "
            f"feasibility {report.feasibility_norm:.3e}")
    m = problem.n_constraints
    if m == 0:
        return np.zeros(0)
    g = gradient(problem, x)
    q1, r1 = sla.qr(problem.C.toarray().T, mode="economic")
    lam = sla.solve_triangular(r1, q1.T @ g)
    residual = np.linalg.norm(problem.C.csr.T @ lam - g)
    if residual > tol * residual_scale(problem, x):
        raise MultiplierConsistencyError(
            f"gradient is outside the constraint row space: "
            f"least-squares residual {residual:.3e}")
    return lam


def estimate_infsup(C, A, Mq, form="dual_form", tol=1e-10):
    """Estimate the inf-sup constant of C with respect to the A- and Mq-norms.

    dual_form:   beta = sqrt(smallest eigenvalue of (C A^-1 C.T, Mq)),
                 the discretization of  inf_q sup_v (q.T C v)/(|v|_A |q|_Mq).
    primal_form: the same constant reached from the other side, as the
                 smallest value of the Mq^-1-norm of C v over v in the
                 A-orthogonal complement of Ker C with |v|_A = 1; assembled
                 as the pencil (S Mq^-1 S, S) with S = C A^-1 C.T.

    Both forms agree up to eigensolver tolerance (the classical equivalence
    of the two variational characterizations).  The attaining vector is
    returned Mq-normalized in multiplier space for either form.
    """
    if form not in ("dual_form", "primal_form"):
        raise ValueError(f"unknown form {form!r}")
    m = C.nrows
    if m == 0:
        raise ValueError("inf-sup constant of an empty constraint set")
    assert_full_row_rank(C)
    a_solve = factorized(A)
    x = a_solve(C.toarray().T)           # A^-1 C.T, one block solve
    s = C.csr @ x
    s = 0.5 * (s + s.T)
    if form == "dual_form":
        lam, q = smallest_generalized_eigenpair(s, Mq, tol=tol)
    else:
        mq_dense = Mq.toarray() if isinstance(Mq, SparseOperator) else np.asarray(Mq)
        y = sla.cho_solve(sla.cho_factor(mq_dense), s)
        s1 = s @ y                        # S Mq^-1 S
        s1 = 0.5 * (s1 + s1.T)
        lam, q = smallest_generalized_eigenpair(s1, s, tol=tol)
        q = q / np.sqrt(q @ (mq_dense @ q))
    beta = float(np.sqrt(max(lam, 0.0)))
    return InfSupEstimate(beta, q, form, float(lam))


# -- problem-directory interface ------------------------------------------


def load_problem(directory):
    """Load (A.mtx, C.mtx, b.txt, optional d.txt) from a directory.

    A stored under the ``general`` qualifier is accepted when it is exactly
    symmetric.
    """
    directory = Path(directory)
    for required in ("A.mtx", "C.mtx", "b.txt"):
        if not (directory / required).is_file():
            raise FileNotFoundError(f"missing {required} in {directory}")
    a = mmio.read_matrix(directory / "A.mtx")
    if not a.symmetric:
        diff = (a.csr - a.csr.T).tocoo()
        if diff.nnz and np.any(diff.data != 0.0):
            raise ValueError("A.mtx is not symmetric")
        a = SparseOperator(a.csr, symmetric=True)
    c = mmio.read_matrix(directory / "C.mtx")
    b = mmio.read_vector(directory / "b.txt")
    d_path = directory / "d.txt"
    d = mmio.read_vector(d_path) if d_path.is_file() else np.zeros(c.nrows)
    return QpProblem(a, b, c, d)


def save_solution(directory, solution, beta=None):
    """Write x.txt, lambda.txt, and report.json for a SaddleSolution."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    mmio.write_vector(directory / "x.txt", solution.x)
    mmio.write_vector(directory / "lambda.txt", solution.multiplier)
    report = {
        "method": solution.method_tag,
        "iterations": int(solution.inner_report.iterations
                          if solution.inner_report else 1),
        "residual_stationarity": float(solution.residual_stationarity),
        "residual_feasibility": float(solution.residual_feasibility),
    }
    if beta is not None:
        report["infsup_beta"] = float(beta)
    with open(directory / "report.json", "w", encoding="ascii") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report

"""Stationary Stokes flow on a staggered (MAC) grid over the unit square.

Velocity components live on interior cell faces, pressure at cell centers;
homogeneous Dirichlet velocity on the whole boundary.  The discrete problem
is exactly an equality-constrained quadratic minimization: the viscous
energy is minimized over the kernel of the discrete divergence, and the
pressure returned by the coupled saddle solve is the Lagrange multiplier of
that constraint.  Both solution routes are provided so the identity can be
checked numerically.

Scaling convention: operators are "integrated", i.e. A represents the
bilinear form of the velocity gradients (stencil entries O(1)), B maps face
velocities to h-weighted cell fluxes (entries +-h), and loads carry a factor
h^2.  With these scalings the momentum equation reads  A u - B.T p = b  and
the multiplier of the constrained minimization is the pressure itself,
without any mesh-dependent rescaling.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse as _sp
from scipy.sparse.linalg import splu

from .qp import InfSupEstimate, QpProblem, SaddleSolution, recover_multiplier
from .solvers import (DEFAULT_TOL, ConvergenceError, conjugate_gradient,
                      factorized, smallest_generalized_eigenpair,
                      symmetric_indefinite_solve)
from .sparse import SparseOperator, as_vector


@dataclass(frozen=True)
class MacGrid:
    """Uniform n-by-n staggered grid on the unit square, h = 1/n.

    Index maps (all C-order, [ix, iy]):
      u-faces: interior vertical faces, shape (n-1, n), at ((ix+1)h, (iy+1/2)h)
      v-faces: interior horizontal faces, shape (n, n-1), at ((ix+1/2)h, (iy+1)h)
      p-cells: centers, shape (n, n), at ((ix+1/2)h, (iy+1/2)h)
    Boundary faces are not stored; they are identically zero (no-slip).
    """

    n: int
    h: float

    @property
    def u_shape(self):
        return (self.n - 1, self.n)

    @property
    def v_shape(self):
        return (self.n, self.n - 1)

    @property
    def p_shape(self):
        return (self.n, self.n)

    @property
    def n_velocity(self):
        return 2 * self.n * (self.n - 1)

    @property
    def n_pressure(self):
        return self.n * self.n

    def u_coordinates(self):
        x = np.arange(1, self.n) * self.h
        y = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def v_coordinates(self):
        x = (np.arange(self.n) + 0.5) * self.h
        y = np.arange(1, self.n) * self.h
        return np.meshgrid(x, y, indexing="ij")

    def p_coordinates(self):
        c = (np.arange(self.n) + 0.5) * self.h
        return np.meshgrid(c, c, indexing="ij")


def build_grid(n):
    if not isinstance(n, (int, np.integer)):
        raise TypeError(f"n must be an integer, got {type(n).__name__}")
    if n < 2:
        raise ValueError(f"need at least 2 cells per side, got n={n}")
    return MacGrid(int(n), 1.0 / n)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VelocityField:
    """Horizontal and vertical face velocities on a grid's interior faces."""

    grid: MacGrid
    u_faces: np.ndarray
    v_faces: np.ndarray

    def __post_init__(self):
        if self.u_faces.shape != self.grid.u_shape:
            raise ValueError(f"u_faces shape {self.u_faces.shape}, "
                             f"expected {self.grid.u_shape}")
        if self.v_faces.shape != self.grid.v_shape:
            raise ValueError(f"v_faces shape {self.v_faces.shape}, "
                             f"expected {self.grid.v_shape}")
        object.__setattr__(self, "u_faces", _frozen(self.u_faces))
        object.__setattr__(self, "v_faces", _frozen(self.v_faces))

    @classmethod
    def from_flat(cls, grid, vec):
        vec = as_vector(vec, length=grid.n_velocity, name="velocity")
        nu = grid.n * (grid.n - 1)
        return cls(grid, vec[:nu].reshape(grid.u_shape),
                   vec[nu:].reshape(grid.v_shape))

    def flat(self):
        return np.concatenate([self.u_faces.ravel(), self.v_faces.ravel()])


@dataclass(frozen=True)
class PressureField:
    """Cell-centered pressures."""

    grid: MacGrid
    p_cells: np.ndarray

    def __post_init__(self):
        if self.p_cells.shape != self.grid.p_shape:
            raise ValueError(f"p_cells shape {self.p_cells.shape}, "
                             f"expected {self.grid.p_shape}")
        object.__setattr__(self, "p_cells", _frozen(self.p_cells))

    @classmethod
    def from_flat(cls, grid, vec):
        vec = as_vector(vec, length=grid.n_pressure, name="pressure")
        return cls(grid, vec.reshape(grid.p_shape))

    def flat(self):
        return self.p_cells.ravel().copy()

    def mean(self):
        return float(self.p_cells.mean())


def zero_mean_project(p):
    """Subtract the cell average; idempotent, leaves zero-mean fields fixed."""
    return PressureField(p.grid, p.p_cells - p.p_cells.mean())


@dataclass(frozen=True)
class StokesOperators:
    """A (viscous form), B (divergence), Mp (pressure mass) for one grid.

    A is symmetric positive definite of size N_u; B is N_p x N_u with
    B.T @ ones == 0 exactly (constants span Ker B.T); the discrete gradient
    is G = -B.T.  Mp = h^2 I.
    """

    grid: MacGrid
    A: SparseOperator
    B: SparseOperator
    Mp: SparseOperator


def _second_difference(k, ghost):
    """1-D stencil tridiag(-1, 2, -1); with ghost=True the end rows use the
    reflected-value closure (diagonal 3) for walls half a cell beyond."""
    main = np.full(k, 2.0)
    if ghost:
        main[0] = main[-1] = 3.0
    off = -np.ones(k - 1)
    return _sp.diags([off, main, off], offsets=[-1, 0, 1], format="csr")


def _face_difference(n):
    # n x (n-1): cell i gets +(east face i) - (west face i-1)
    ones = np.ones(n - 1)
    return _sp.diags([ones, -ones], offsets=[0, -1],
                     shape=(n, n - 1), format="csr")


def assemble_operators(grid):
    """Build the viscous, divergence, and pressure-mass operators.

    The viscous operator is the 5-point Laplacian per component: Dirichlet
    rows eliminated where the wall passes through face positions (normal
    direction), ghost-value reflection where the wall lies half a cell away
    (tangential direction).  The divergence of cell (i, j) is the h-weighted
    net face flux, so its row has entries +-h and q.T B v approximates the
    integral of q div v.
    """
    n = grid.n
    h = grid.h
    t_dir = _second_difference(n - 1, ghost=False)
    t_ghost = _second_difference(n, ghost=True)
    eye = _sp.identity
    a_u = _sp.kron(t_dir, eye(n)) + _sp.kron(eye(n - 1), t_ghost)
    a_v = _sp.kron(t_ghost, eye(n - 1)) + _sp.kron(eye(n), t_dir)
    a = SparseOperator(_sp.block_diag([a_u, a_v], format="csr"),
                       symmetric=True)
    d = _face_difference(n)
    b = _sp.hstack([h * _sp.kron(d, eye(n)), h * _sp.kron(eye(n), d)],
                   format="csr")
    mp = SparseOperator.diagonal(np.full(grid.n_pressure, h * h))
    return StokesOperators(grid, a, SparseOperator(b), mp)


# -- manufactured solutions ------------------------------------------------


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form velocity/pressure pair with hand-derived forcing.

    The velocity is divergence-free and vanishes on the boundary of the unit
    square; the pressure has zero mean; f = -laplace(u) + grad(p), worked
    out by hand and hard-coded (no symbolic machinery at runtime).
    """

    case_id: str
    u_exact: callable
    v_exact: callable
    p_exact: callable
    f1: callable
    f2: callable


def _taylor_green():
    pi = math.pi

    def u(x, y):
        return np.sin(pi * x) ** 2 * np.sin(2 * pi * y)

    def v(x, y):
        return -np.sin(2 * pi * x) * np.sin(pi * y) ** 2

    def p(x, y):
        return np.cos(pi * x) * np.cos(pi * y)

    def f1(x, y):
        return (-2 * pi ** 2 * np.cos(2 * pi * x) * np.sin(2 * pi * y)
                + 4 * pi ** 2 * np.sin(pi * x) ** 2 * np.sin(2 * pi * y)
                - pi * np.sin(pi * x) * np.cos(pi * y))

    def f2(x, y):
        return (-4 * pi ** 2 * np.sin(2 * pi * x) * np.sin(pi * y) ** 2
                + 2 * pi ** 2 * np.sin(2 * pi * x) * np.cos(2 * pi * y)
                - pi * np.cos(pi * x) * np.sin(pi * y))

    return ManufacturedCase("taylor_green", u, v, p, f1, f2)


def _polynomial():
    # stream-function psi = g(x) k(y) with g(t) = k(t) = t^2 (1-t)^2
    def g(t):
        return t * t * (1 - t) ** 2

    def dg(t):
        return 2 * t * (1 - t) * (1 - 2 * t)

    def d2g(t):
        return 2 - 12 * t + 12 * t * t

    def d3g(t):
        return 24 * t - 12

    def u(x, y):
        return g(x) * dg(y)

    def v(x, y):
        return -dg(x) * g(y)

    def p(x, y):
        return x - 0.5 + 0.0 * y

    def f1(x, y):
        return -(d2g(x) * dg(y) + g(x) * d3g(y)) + 1.0

    def f2(x, y):
        return d3g(x) * g(y) + dg(x) * d2g(y)

    return ManufacturedCase("polynomial", u, v, p, f1, f2)


_CASES = {"taylor_green": _taylor_green, "polynomial": _polynomial}


def manufactured_case(case_id):
    try:
        return _CASES[case_id]()
    except KeyError:
        raise ValueError(
            f"unknown case {case_id!r}; choose from {sorted(_CASES)}") from None


def sample_forcing(grid, case):
    """Lumped load vector: f at face centers times h^2 (cell volume)."""
    h2 = grid.h * grid.h
    ux, uy = grid.u_coordinates()
    vx, vy = grid.v_coordinates()
    bu = h2 * np.asarray(case.f1(ux, uy), dtype=float)
    bv = h2 * np.asarray(case.f2(vx, vy), dtype=float)
    return np.concatenate([bu.ravel(), bv.ravel()])


# -- solves ----------------------------------------------------------------


def _mean_weight(grid):
    # discrete integral of a cellwise-constant field: h^2 per cell
    return np.full(grid.n_pressure, grid.h * grid.h)


def divergence_free_projector(ops):
    """Orthogonal projector onto Ker B as a callable, via one factorization.

    The normal-equation operator B B.T is singular on constants, so the
    projector solves the bordered system [[B B.T, e], [e.T, 0]] with e the
    cell-volume vector; the border pins the zero-mean representative and the
    extra multiplier vanishes identically because B.T e = 0.
    """
    grid = ops.grid
    e = _sp.csr_matrix(_mean_weight(grid)).T
    bbt = (ops.B.csr @ ops.B.csr.T).tocsr()
    bordered = _sp.bmat([[bbt, e], [e.T, None]], format="csc")
    lu = splu(bordered)
    bt = ops.B.csr.T
    b = ops.B.csr
    m = grid.n_pressure

    def project(vec):
        rhs = np.concatenate([b @ vec, [0.0]])
        w = lu.solve(rhs)[:m]
        return vec - bt @ w

    return project


def _saddle_from_fields(ops, u, p, b, tol, tag, inner_report):
    """Package (u, p) as a SaddleSolution and enforce the residual bound."""
    stat = float(np.linalg.norm(ops.A.apply(u) - b - ops.B.csr.T @ p))
    feas = float(np.linalg.norm(ops.B.csr @ u))
    scale = ops.A.frobenius_norm() * np.linalg.norm(u) + np.linalg.norm(b)
    if stat > tol * scale or feas > tol * scale:
        raise ConvergenceError(
            f"{tag}: residual contract violated "
            f"(stationarity {stat:.3e}, feasibility {feas:.3e}, "
            f"bound {tol * scale:.3e})")
    return SaddleSolution(u, p, stat, feas, tag, inner_report)


def solve_stokes_coupled(grid, case, tol=DEFAULT_TOL):
    """One symmetric direct solve of the velocity-pressure saddle system.

    The constraint operator B is rank deficient by exactly the constant
    pressure mode, so the assembled system is bordered with one extra
    row/column enforcing zero mean on the multiplier; the border unknown is
    structurally zero.  Returns (VelocityField, PressureField,
    SaddleSolution) with the pressure already zero-mean.
    """
    ops = assemble_operators(grid)
    b = sample_forcing(grid, case)
    nu, npres = grid.n_velocity, grid.n_pressure
    e = _sp.csr_matrix(_mean_weight(grid)).T
    kkt = _sp.bmat([[ops.A.csr, ops.B.csr.T, None],
                    [ops.B.csr, None, e],
                    [None, e.T, None]], format="csr")
    rhs = np.concatenate([b, np.zeros(npres + 1)])
    sol, report = symmetric_indefinite_solve(
        SparseOperator(kkt, symmetric=True), rhs)
    u = sol[:nu]
    p = -sol[nu:nu + npres]          # multiplier sign: A u - b = B.T p
    pressure = zero_mean_project(PressureField.from_flat(grid, p))
    saddle = _saddle_from_fields(ops, u, pressure.flat(), b, tol,
                                 "stokes_coupled", report)
    return VelocityField.from_flat(grid, u), pressure, saddle


def _drop_last_row(op):
    return SparseOperator(op.csr[:-1])


def solve_stokes_minimization(grid, case, tol=DEFAULT_TOL):
    """Minimize the viscous energy over discretely divergence-free fields,
    then recover the pressure as the constraint's Lagrange multiplier.

    The minimization runs projected conjugate gradients (the kernel of B is
    never parametrized explicitly; feasibility is maintained by projection,
    one pressure Poisson backsolve per application).  The multiplier comes
    from recover_multiplier on the reduced full-rank constraint (last
    divergence row dropped — it is the negative sum of the others), and the
    optimality precondition is certified matrix-free through the same
    projector.  Returns (VelocityField, PressureField, SaddleSolution).
    """
    ops = assemble_operators(grid)
    b = sample_forcing(grid, case)
    project = divergence_free_projector(ops)

    def reduced_apply(v):
        return project(ops.A.apply(project(v)))

    u, report = conjugate_gradient(reduced_apply, project(b), tol=tol)
    if not report.converged:
        raise ConvergenceError(
            f"projected CG did not converge "
            f"(reason: {report.breakdown_reason}, "
            f"residual {report.residual_norm:.3e})")
    u = project(u)                   # scrub rounding drift out of Ker B

    reduced = QpProblem(ops.A, b, _drop_last_row(ops.B),
                        np.zeros(grid.n_pressure - 1))
    lam = recover_multiplier(reduced, u, tol, kernel_projector=project)
    p = np.append(lam, 0.0)          # dropped row's multiplier pinned at 0
    pressure = zero_mean_project(PressureField.from_flat(grid, p))
    saddle = _saddle_from_fields(ops, u, pressure.flat(), b, tol,
                                 "stokes_minimization", report)
    return VelocityField.from_flat(grid, u), pressure, saddle


def error_norms(velocity, pressure, case, grid):
    """Discrete L2 / max errors against the exact fields at grid points.

    Pressure error is computed after zero-mean projection of both the
    numeric and the sampled exact field (comparison modulo constants).
    Returns {"l2_u", "l2_p", "linf_u"}.
    """
    h2 = grid.h * grid.h
    ux, uy = grid.u_coordinates()
    vx, vy = grid.v_coordinates()
    du = velocity.u_faces - case.u_exact(ux, uy)
    dv = velocity.v_faces - case.v_exact(vx, vy)
    px, py = grid.p_coordinates()
    exact_p = zero_mean_project(
        PressureField(grid, np.asarray(case.p_exact(px, py), dtype=float)))
    dp = zero_mean_project(pressure).p_cells - exact_p.p_cells
    return {
        "l2_u": float(np.sqrt(h2 * (np.sum(du * du) + np.sum(dv * dv)))),
        "l2_p": float(np.sqrt(h2 * np.sum(dp * dp))),
        "linf_u": float(max(np.max(np.abs(du)), np.max(np.abs(dv)))),
    }


def estimate_infsup_stokes(grid, tol=1e-10):
    """Discrete inf-sup constant beta(h) of the divergence operator.

    beta^2 is the smallest eigenvalue of (B A^-1 B.T, Mp) restricted to
    zero-mean pressures; the constant mode (the kernel of B.T) is deflated
    by projection inside the eigensolver.
    """
    ops = assemble_operators(grid)
    a_solve = factorized(ops.A)
    s = ops.B.csr @ a_solve(ops.B.csr.T.toarray())
    s = 0.5 * (s + s.T)

    def deflate(q):
        return q - q.mean()

    lam, q = smallest_generalized_eigenpair(s, ops.Mp,
                                            subspace_projector=deflate,
                                            tol=tol)
    return InfSupEstimate(float(np.sqrt(max(lam, 0.0))), q, "dual_form",
                          float(lam))


# -- export ----------------------------------------------------------------


def write_fields_csv(path, velocity, pressure):
    """CSV rows (kind, i, j, x, y, value) for u, v, then p, row-major."""
    grid = velocity.grid
    blocks = [
        ("u", velocity.u_faces, grid.u_coordinates()),
        ("v", velocity.v_faces, grid.v_coordinates()),
        ("p", pressure.p_cells, grid.p_coordinates()),
    ]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("kind,i,j,x,y,value\n")
        for kind, values, (xs, ys) in blocks:
            ni, nj = values.shape
            for i in range(ni):
                for j in range(nj):
                    fh.write(f"{kind},{i},{j},{float(xs[i, j])!r},"
                             f"{float(ys[i, j])!r},{float(values[i, j])!r}\n")

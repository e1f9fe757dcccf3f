"""Discrete restricted (integral) fractional Laplacian on a uniform 1-D grid.

The operator acts on fields that vanish identically outside the open interval
(-L, L).  At an interior node x_i it discretizes

    2 C(1,s) P.V. int_R (u(x_i) - u(y)) |x_i - y|^(-1-2s) dy,

with C(1,s) = pi^(-1/2) 2^(2s-1) s Gamma((1+2s)/2) / Gamma(1-s).  With this
normalization the operator has Fourier symbol |xi|^(2s), so the closed form
(-Delta)^s (1-x^2)_+^s = Gamma(2s+1) on (-1,1) holds and is used as the
discretization oracle.

Scheme: the integrand is evaluated against the piecewise-linear interpolant of
the nodal values (zero at and beyond the boundary nodes), integrated exactly
cell by cell, with the remaining exterior tail added in closed form.  On the
two cells touching the collocation node the symmetrized second difference
2u(x_i) - u(x_i+z) - u(x_i-z) is modeled by its quadratic interpolant, which
keeps the quadrature finite for every s in (0,1) and yields weights that are
positive, summable, and translation invariant.

A diagonal wall correction is then added so that every row is exact on the
one-sided wall profile (y+L)^s_+ truncated at the far wall (left-wall profile
for nodes left of center, mirrored on the right).  The profile is annihilated
by the continuous operator on its half-line, and the truncation's exact
operator value has a hypergeometric closed form, so the correction is
computable and removes the dominant boundary-layer error of nodal schemes
(observed sup errors on the closed-form benchmark drop by two orders).

The corrected matrix stays symmetric with positive diagonal, negative
off-diagonals, and positive row sums: an M-matrix, so the discrete comparison
principle holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, lu_factor, lu_solve, toeplitz
from scipy.special import gamma, hyp2f1

from .errors import AssemblyError, ConvergenceError, GridError

__all__ = [
    "Grid",
    "NonlocalOperator",
    "EigenPair",
    "normalization_constant",
    "build_grid",
    "assemble_operator",
    "apply",
    "solve_dirichlet",
    "eigen_smallest",
    "green_column",
    "dump_triplets",
]

MIN_NODES = 8
SIGN_SLACK = 1e-12


def normalization_constant(s: float) -> float:
    """C(1, s) = pi^(-1/2) 2^(2s-1) s Gamma((1+2s)/2) / Gamma(1-s)."""
    return np.pi ** -0.5 * 2.0 ** (2.0 * s - 1.0) * s * gamma((1.0 + 2.0 * s) / 2.0) / gamma(1.0 - s)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform interior nodes of (-L, L); the boundary nodes carry the value 0."""

    half_width: float
    n: int
    h: float
    nodes: np.ndarray

    def distance(self) -> np.ndarray:
        """d(x_i) = L - |x_i|, the distance to the boundary."""
        return self.half_width - np.abs(self.nodes)


def build_grid(half_width: float, n: int) -> Grid:
    """Build the uniform grid with n interior nodes and spacing 2L/(n+1)."""
    if not np.isfinite(half_width) or half_width <= 0.0:
        raise GridError(f"half_width must be positive and finite, got {half_width}")
    if n < MIN_NODES:
        raise GridError(f"need at least {MIN_NODES} interior nodes for exponent fits, got {n}")
    h = 2.0 * half_width / (n + 1)
    nodes = -half_width + h * np.arange(1, n + 1)
    return Grid(half_width=float(half_width), n=int(n), h=h, nodes=nodes)


@dataclass(eq=False)
class NonlocalOperator:
    """Dense matrix form of the fractional Laplacian restricted to interior nodes."""

    grid: Grid
    s: float
    normalization: float
    matrix: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.grid.n

    def _cholesky(self):
        if "cho" not in self._cache:
            self._cache["cho"] = cho_factor(self.matrix, lower=True)
        return self._cache["cho"]


def _hat_weights(n: int, h: float, sigma: float) -> np.ndarray:
    """Kernel weights w_k, k = 1..n-1, for node pairs at distance k*h.

    w_1 couples the singular cell's quadratic model with the exact hat
    integral over [h, 2h]; w_k for k >= 2 is the exact integral of the hat
    function at offset k against z^(-1-sigma).
    """
    k = np.arange(1, n, dtype=float)
    a = k * h
    b = (k + 1.0) * h
    # I0 = int_a^b z^(-1-sigma) dz, I1 = int_a^b z^(-sigma) dz, cancellation-safe.
    log_ratio = np.log1p(1.0 / k)
    i0 = -(a ** -sigma) * np.expm1(-sigma * log_ratio) / sigma
    x = (1.0 - sigma) * log_ratio
    phi = np.where(x == 0.0, 1.0, np.expm1(x) / np.where(x == 0.0, 1.0, x))
    i1 = a ** (1.0 - sigma) * log_ratio * phi
    p = (k + 1.0) * i0 - i1 / h
    q = i1 / h - k * i0
    w = np.empty(n - 1)
    w[0] = h ** -sigma / (2.0 - sigma) + p[0]
    if n > 2:
        w[1:] = q[:-1] + p[1:]
    return w


def _wall_correction(grid: Grid, s: float, mat: np.ndarray) -> np.ndarray:
    """Diagonal wall-consistency correction.

    With uL(y) = (y+L)^s_+ cut off at the far wall, the exact operator value is
    R(x) = 2 C(1,s) a^(-s)/s * 2F1(-s, s; s+1; -b/a), a = L-x, b = L+x (the
    profile itself is annihilated on its half-line; only the far-wall cutoff
    contributes).  The returned diagonal makes each row reproduce R exactly on
    the wall profile of its nearer boundary.
    """
    nodes, L, n = grid.nodes, grid.half_width, grid.n
    u_left = (nodes + L) ** s
    a = L - nodes
    b = L + nodes
    exact = 2.0 * normalization_constant(s) * a ** (-s) / s * hyp2f1(-s, s, s + 1.0, -b / a)
    delta_left = (exact - mat @ u_left) / u_left
    delta_right = delta_left[::-1]
    delta = np.where(nodes < 0.0, delta_left, delta_right)
    if n % 2 == 1:
        delta[n // 2] = 0.5 * (delta_left[n // 2] + delta_right[n // 2])
    return delta


def assemble_operator(grid: Grid, s: float) -> NonlocalOperator:
    """Assemble the dense n x n operator matrix for fractional order s in (0,1)."""
    if not (0.0 < s < 1.0):
        raise GridError(f"fractional order must lie in (0,1), got {s}")
    sigma = 2.0 * s
    h, n = grid.h, grid.n
    w = _hat_weights(n, h, sigma)
    diag = 2.0 / ((2.0 - sigma) * h ** sigma) + 2.0 / (sigma * h ** sigma)
    col = np.concatenate(([diag], -w))
    mat = (2.0 * normalization_constant(s)) * toeplitz(col)
    mat[np.diag_indices(n)] += _wall_correction(grid, s, mat)
    op = NonlocalOperator(grid=grid, s=float(s), normalization=normalization_constant(s), matrix=mat)
    _check_structure(op)
    return op


def _check_structure(op: NonlocalOperator) -> None:
    mat = op.matrix
    scale = np.abs(mat).max()
    if np.abs(mat - mat.T).max() > SIGN_SLACK * scale:
        raise AssemblyError("assembled operator is not symmetric")
    off = mat - np.diag(np.diag(mat))
    if np.diag(mat).min() <= 0.0 or off.max() > SIGN_SLACK * scale:
        raise AssemblyError("assembled operator violates the M-matrix sign pattern")
    if mat.sum(axis=1).min() <= 0.0:
        raise AssemblyError("assembled operator has a nonpositive row sum")


def apply(op: NonlocalOperator, u: np.ndarray) -> np.ndarray:
    """Matrix-vector product A u for a field on the operator's grid."""
    u = np.asarray(u, dtype=float)
    if u.shape != (op.n,):
        raise ValueError(f"field has shape {u.shape}, expected ({op.n},)")
    return op.matrix @ u


def solve_dirichlet(op: NonlocalOperator, rhs: np.ndarray) -> np.ndarray:
    """Solve A w = rhs by the cached Cholesky factorization.

    For rhs >= 0 not identically zero the result is strictly positive at all
    interior nodes (discrete maximum principle).
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (op.n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({op.n},)")
    if not np.all(np.isfinite(rhs)):
        raise ValueError("rhs must be finite at all nodes")
    return cho_solve(op._cholesky(), rhs)


@dataclass(frozen=True, eq=False)
class EigenPair:
    """Eigenvalue with its sup-normalized eigenvector and achieved residual."""

    value: float
    vector: np.ndarray
    residual: float


def _gershgorin_lower(mat: np.ndarray) -> float:
    d = np.diag(mat)
    radius = np.abs(mat).sum(axis=1) - np.abs(d)
    return float(np.min(d - radius))


def smallest_eigenpairs(mat: np.ndarray, k: int, tol: float = 1e-8, maxit: int = 500) -> list[EigenPair]:
    """k smallest eigenpairs of a dense symmetric matrix.

    Shifted inverse iteration: a Gershgorin shift makes the matrix positive
    definite, inverse power steps (with deflation against converged vectors)
    isolate each eigenvector from below, and Rayleigh-quotient steps finish
    the convergence.  Residuals are sup-norm on the sup-normalized vector.
    """
    n = mat.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    shift = min(_gershgorin_lower(mat), 0.0) - 1.0
    cho = cho_factor(mat - shift * np.eye(n), lower=True)
    xi = np.arange(1, n + 1) / (n + 1)
    pairs: list[EigenPair] = []
    basis: list[np.ndarray] = []
    for j in range(k):
        x = np.sin((j + 1) * np.pi * xi)
        for v in basis:
            x -= (v @ x) * v
        x /= np.linalg.norm(x)
        mu = float(x @ (mat @ x))
        res = np.inf
        for it in range(maxit):
            if res <= 1e-2 * max(1.0, abs(mu)) and it >= 3:
                try:
                    y = lu_solve(lu_factor(mat - mu * np.eye(n)), x)
                except np.linalg.LinAlgError:
                    y = cho_solve(cho, x)
            else:
                y = cho_solve(cho, x)
            for v in basis:
                y -= (v @ y) * v
            ynorm = np.linalg.norm(y)
            if ynorm == 0.0:
                break
            x = y / ynorm
            mu = float(x @ (mat @ x))
            res = float(np.abs(mat @ x - mu * x).max() / np.abs(x).max())
            if res <= tol:
                break
        else:
            raise ConvergenceError(
                f"eigen iteration for pair {j} stalled after {maxit} steps", residual=res
            )
        if res > tol:
            raise ConvergenceError(f"eigen iteration for pair {j} stalled", residual=res)
        basis.append(x.copy())
        vec = x / np.abs(x).max()
        if vec[np.argmax(np.abs(vec))] < 0.0:
            vec = -vec
        pairs.append(EigenPair(value=mu, vector=vec, residual=res))
    pairs.sort(key=lambda p: p.value)
    return pairs


def eigen_smallest(op: NonlocalOperator, k: int, tol: float = 1e-8) -> list[EigenPair]:
    """k smallest eigenpairs of the operator, first eigenvector positive."""
    pairs = smallest_eigenpairs(op.matrix, k, tol=tol)
    first = pairs[0]
    if first.vector.min() <= 0.0:
        raise ConvergenceError("principal eigenvector is not strictly positive", residual=first.residual)
    return pairs


def principal_eigenpair(op: NonlocalOperator, tol: float = 1e-8) -> EigenPair:
    """Cached principal eigenpair (sup-normalized positive eigenfunction)."""
    if "phi1" not in op._cache:
        op._cache["phi1"] = eigen_smallest(op, 1, tol=tol)[0]
    return op._cache["phi1"]


def green_column(op: NonlocalOperator, j: int) -> np.ndarray:
    """Discrete Green function x -> G(x, x_j): column j of the inverse scaled by 1/h."""
    if not 0 <= j < op.n:
        raise IndexError(f"node index {j} out of range [0, {op.n})")
    e = np.zeros(op.n)
    e[j] = 1.0
    return solve_dirichlet(op, e) / op.grid.h


def dump_triplets(op: NonlocalOperator, path) -> None:
    """Write the matrix in plain-text triplet form: one `i j value` per line."""
    with open(path, "w", encoding="ascii") as fh:
        for i in range(op.n):
            row = op.matrix[i]
            for j in range(op.n):
                fh.write(f"{i} {j} {float(row[j])!r}\n")

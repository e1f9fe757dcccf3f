"""Linearized spectral analysis and derivative solves of the solution operator.

Around a positive solution u of A u = lam (K u^-delta + f(u)) the linearized
operator is A + diag(lam delta K u^(-delta-1) - lam f'(u)); its smallest
eigenvalue tracks stability of the minimal branch and vanishes at the fold.

The solution operator T(lam, h) of A u - lam K u^(-delta) = h is twice
differentiable; with P = A + diag(lam delta K u^(-delta-1)) its derivative
fields solve

    P v    = phi                                     (direction phi in h)
    P w1   = K u^-delta                              (d/dlam)
    P w11  = lam d(d+1) K u^(-d-2) w1^2 - 2 d K u^(-d-1) w1
    P w12  = lam d(d+1) K u^(-d-2) w1 v  -   d K u^(-d-1) v
    P w22  = lam d(d+1) K u^(-d-2) v_phi v_psi

(obtained by implicit differentiation; all right-hand sides are checked
against finite differences of the solve itself in the test suite).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, svdvals

from .operator import EigenPair, NonlocalOperator, smallest_eigenpairs
from .problem import ProblemSpec
from .singular import DEFAULT_TOL, SolutionField, solve_A

__all__ = [
    "LinearizedOperator",
    "SensitivityBundle",
    "linearized_operator",
    "lambda1",
    "lambda1_pairs",
    "d2A_directional",
    "sensitivity_bundle",
    "fredholm_monitor",
]


@dataclass(eq=False)
class LinearizedOperator:
    """Base operator plus the diagonal potential of the linearization."""

    base: NonlocalOperator
    potential: np.ndarray
    matrix: np.ndarray


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, SolutionField) else np.asarray(u, dtype=float)


def linearized_operator(lam: float, u, op: NonlocalOperator, spec: ProblemSpec) -> LinearizedOperator:
    """A + diag(lam delta K u^(-delta-1) - lam f'(u)) around a positive field."""
    uv = _values(u)
    if uv.min() <= 0.0:
        raise ValueError("linearization requires a strictly positive field")
    k = spec.k_field(op.grid)
    potential = lam * spec.delta * k * uv ** (-spec.delta - 1.0) - lam * spec.nonlinearity.fprime(uv)
    if not np.all(np.isfinite(potential)):
        raise ValueError("linearized potential is not finite")
    return LinearizedOperator(base=op, potential=potential, matrix=op.matrix + np.diag(potential))


def lambda1_pairs(
    lam: float, u, op: NonlocalOperator, spec: ProblemSpec, k: int = 2, tol: float = DEFAULT_TOL
) -> list[EigenPair]:
    """k smallest eigenpairs of the linearization (first one is principal)."""
    lin = linearized_operator(lam, u, op, spec)
    return smallest_eigenpairs(lin.matrix, k, tol=tol)


def lambda1(lam: float, u, op: NonlocalOperator, spec: ProblemSpec, tol: float = DEFAULT_TOL) -> EigenPair:
    """Principal eigenpair of the linearization around u."""
    return lambda1_pairs(lam, u, op, spec, k=1, tol=tol)[0]


def _p_factor(lam: float, uv: np.ndarray, op: NonlocalOperator, spec: ProblemSpec):
    k = spec.k_field(op.grid)
    pot = lam * spec.delta * k * uv ** (-spec.delta - 1.0)
    mat = op.matrix + np.diag(pot)
    return mat, cho_factor(mat, lower=True)


def d2A_directional(
    lam: float,
    h: np.ndarray,
    phi: np.ndarray,
    op: NonlocalOperator,
    spec: ProblemSpec,
    tol: float = DEFAULT_TOL,
    u: SolutionField | None = None,
) -> np.ndarray:
    """Directional derivative v of the solution operator in its forcing slot.

    v solves (A + lam delta K u^(-delta-1)) v = phi at u = T(lam, h); the
    potential is nonnegative, so the system is always solvable.
    """
    phi = np.asarray(phi, dtype=float)
    if u is None:
        u = solve_A(lam, h, op, spec, tol=tol)
    mat, factor = _p_factor(lam, _values(u), op, spec)
    v = cho_solve(factor, phi)
    res = np.abs(mat @ v - phi).max()
    if res > tol * (1.0 + np.abs(phi).max()):
        raise RuntimeError(f"directional solve residual {res:.3e} exceeds tolerance")
    return v


@dataclass(eq=False)
class SensitivityBundle:
    """First and second derivative fields of the solution operator at (lam, h)."""

    w1: np.ndarray
    w11: np.ndarray
    w12: np.ndarray
    w22: np.ndarray
    v: np.ndarray
    residuals: dict


def sensitivity_bundle(
    lam: float,
    h: np.ndarray,
    op: NonlocalOperator,
    spec: ProblemSpec,
    directions: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = DEFAULT_TOL,
    u: SolutionField | None = None,
) -> SensitivityBundle:
    """Solve the four derivative systems of the solution operator at (lam, h).

    directions = (phi, psi) are the forcing-slot directions; psi defaults to
    phi.  Every field's residual is recorded and checked against tol.
    """
    h = np.asarray(h, dtype=float)
    if u is None:
        u = solve_A(lam, h, op, spec, tol=tol)
    uv = _values(u)
    n = op.n
    if directions is None:
        phi = np.ones(n)
        psi = phi
    else:
        phi = np.asarray(directions[0], dtype=float)
        psi = np.asarray(directions[1], dtype=float) if directions[1] is not None else phi
    k = spec.k_field(op.grid)
    d = spec.delta
    mat, factor = _p_factor(lam, uv, op, spec)

    rhs = {}
    rhs["w1"] = k * uv ** -d
    w1 = cho_solve(factor, rhs["w1"])
    rhs["v"] = phi
    v = cho_solve(factor, phi)
    v_psi = v if psi is phi else cho_solve(factor, psi)
    rhs["w11"] = lam * d * (d + 1.0) * k * uv ** (-d - 2.0) * w1 ** 2 - 2.0 * d * k * uv ** (-d - 1.0) * w1
    w11 = cho_solve(factor, rhs["w11"])
    rhs["w12"] = lam * d * (d + 1.0) * k * uv ** (-d - 2.0) * w1 * v - d * k * uv ** (-d - 1.0) * v
    w12 = cho_solve(factor, rhs["w12"])
    rhs["w22"] = lam * d * (d + 1.0) * k * uv ** (-d - 2.0) * v * v_psi
    w22 = cho_solve(factor, rhs["w22"])

    fields = {"w1": w1, "v": v, "w11": w11, "w12": w12, "w22": w22}
    residuals = {}
    for name, field in fields.items():
        res = float(np.abs(mat @ field - rhs[name]).max())
        residuals[name] = res
        if res > tol * (1.0 + np.abs(rhs[name]).max()):
            raise RuntimeError(f"sensitivity solve {name} residual {res:.3e} exceeds tolerance")
    return SensitivityBundle(w1=w1, w11=w11, w12=w12, w22=w22, v=v, residuals=residuals)


def fredholm_monitor(lam: float, u, op: NonlocalOperator, spec: ProblemSpec) -> float:
    """Smallest singular value of I - P^(-1) diag(lam f'(u)).

    This is the compact-perturbation-of-identity form of the equation's
    linearization; a near-zero value flags a singular point of the branch and
    co-occurs with a vanishing principal eigenvalue.
    """
    uv = _values(u)
    _, factor = _p_factor(lam, uv, op, spec)
    fp = lam * spec.nonlinearity.fprime(uv)
    correction = cho_solve(factor, np.diag(fp))
    return float(svdvals(np.eye(op.n) - correction).min())

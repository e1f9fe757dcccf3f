import numpy as np
import pytest

from fracfold import (
    BracketViolation,
    ProblemSpec,
    assemble_operator,
    build_grid,
    power_nonlinearity,
    regularize,
    scale_pure_singular,
    solve_A,
    solve_dirichlet,
    solve_min,
    solve_pure_singular,
    solve_regularized,
)
from fracfold.operator import principal_eigenpair
from fracfold.singular import (
    monotone_iterate,
    pure_singular_cached,
    subsolution_constant,
    torsion_field,
    _supersolution_from,
)


@pytest.fixture(scope="module")
def op256():
    return assemble_operator(build_grid(1.0, 256), 0.4)


@pytest.fixture(scope="module")
def op192_s05():
    return assemble_operator(build_grid(1.0, 192), 0.5)


def _residual(op, spec, lam, u):
    k = spec.k_field(op.grid)
    return np.abs(op.matrix @ u - lam * (k * u ** (-spec.delta) + spec.nonlinearity.f(u))).max()


def test_regularized_delta_zero_is_linear(op256):
    spec = ProblemSpec(s=0.4, delta=0.0, beta=0.0, coeff=2.0)
    rspec = regularize(spec, op256.grid, 0.1)
    field = solve_regularized(rspec, op256)
    direct = solve_dirichlet(op256, rspec.k_eps)
    assert np.array_equal(field.values, direct)


def test_regularized_monotone_in_eps(op256):
    spec = ProblemSpec(s=0.4, delta=1.0, beta=0.0)
    fields = [solve_regularized(regularize(spec, op256.grid, eps), op256).values for eps in (0.5, 0.25, 0.125)]
    slack = 1e-12
    assert np.all(fields[1] >= fields[0] - slack)
    assert np.all(fields[2] >= fields[1] - slack)


def test_regularized_eps_refinement(op192_s05):
    spec = ProblemSpec(s=0.5, delta=1.0, beta=0.0)
    u3 = solve_regularized(regularize(spec, op192_s05.grid, 1e-3), op192_s05)
    u4 = solve_regularized(regularize(spec, op192_s05.grid, 1e-4), op192_s05)
    away = op192_s05.grid.distance() >= 0.1
    assert np.abs(u3.values - u4.values)[away].max() <= 1e-2


def test_regularized_rejects_nonlinearity(op256):
    spec = ProblemSpec(s=0.4, delta=1.0, nonlinearity=power_nonlinearity(2.0))
    with pytest.raises(ValueError):
        solve_regularized(regularize(spec, op256.grid, 0.1), op256)


def test_pure_singular_delta_zero(op256):
    spec = ProblemSpec(s=0.4, delta=0.0, beta=0.0)
    field = solve_pure_singular(spec, op256)
    assert np.array_equal(field.values, solve_dirichlet(op256, np.ones(256)))


def test_pure_singular_residual_and_subsolution(op256):
    spec = ProblemSpec(s=0.4, delta=1.5, beta=0.2)
    field = solve_pure_singular(spec, op256)
    assert _residual(op256, spec, 1.0, field.values) <= field.residual_bound
    cstar = subsolution_constant(spec, op256)
    phi = principal_eigenpair(op256).vector
    assert np.all(field.values >= cstar * phi * (1.0 - 1e-6))


@pytest.mark.parametrize(
    "delta,target",
    [(3.0, 0.2), (0.5, 0.4)],
)
def test_pure_singular_boundary_exponent(delta, target):
    op = assemble_operator(build_grid(1.0, 1024), 0.4)
    spec = ProblemSpec(s=0.4, delta=delta, beta=0.0)
    field = solve_pure_singular(spec, op)
    from fracfold import fit_boundary_exponent

    alpha, _ = fit_boundary_exponent(field.values, op.grid)
    assert alpha == pytest.approx(target, abs=0.05)


def test_scale_identity_and_exactness(op256):
    spec = ProblemSpec(s=0.4, delta=1.0, beta=0.0)
    u1 = solve_pure_singular(spec, op256)
    assert np.array_equal(scale_pure_singular(u1, 1.0).values, u1.values)
    u4 = scale_pure_singular(u1, 4.0)
    assert np.allclose(u4.values, 2.0 * u1.values, rtol=0, atol=0)
    # residual against the lam-weighted equation, recomputed independently
    res = _residual(op256, ProblemSpec(s=0.4, delta=1.0, beta=0.0, coeff=4.0), 1.0, u4.values)
    assert res <= 2.0 * u1.residual_bound
    with pytest.raises(ValueError):
        scale_pure_singular(u1, -1.0)


def test_scale_delta_zero(op256):
    spec = ProblemSpec(s=0.4, delta=0.0, beta=0.0)
    u1 = solve_pure_singular(spec, op256)
    u3 = scale_pure_singular(u1, 3.0)
    assert np.allclose(u3.values, 3.0 * u1.values)


def test_scaling_law_matches_direct_solve(op256):
    for delta in (0.5, 3.0):
        base = ProblemSpec(s=0.4, delta=delta, beta=0.1)
        u1 = solve_pure_singular(base, op256)
        direct = solve_pure_singular(ProblemSpec(s=0.4, delta=delta, beta=0.1, coeff=0.25), op256)
        scaled = scale_pure_singular(u1, 0.25)
        assert np.abs(direct.values - scaled.values).max() <= 2e-8


def test_solve_A_trivial_cases(op256):
    spec = ProblemSpec(s=0.4, delta=0.5, beta=0.0)
    pure = solve_pure_singular(ProblemSpec(s=0.4, delta=0.5, beta=0.0, coeff=0.3), op256)
    via_A = solve_A(0.3, np.zeros(256), op256, spec)
    assert np.abs(via_A.values - pure.values).max() <= 1e-7
    h = np.abs(op256.grid.nodes)
    lin = solve_A(0.0, h, op256, spec)
    assert np.array_equal(lin.values, solve_dirichlet(op256, h))


def test_solve_A_monotone_in_forcing(op256, rng):
    spec = ProblemSpec(s=0.4, delta=0.5, beta=0.0)
    h1 = rng.uniform(0.0, 1.0, size=256)
    h2 = h1 + rng.uniform(0.0, 1.0, size=256)
    u1 = solve_A(0.2, h1, op256, spec).values
    u2 = solve_A(0.2, h2, op256, spec).values
    assert np.all(u2 >= u1 - 1e-10)


def test_solve_A_bracket(op256):
    spec = ProblemSpec(s=0.4, delta=0.5, beta=0.0)
    h = np.full(256, 0.7)
    out = solve_A(0.2, h, op256, spec).values
    usub = scale_pure_singular(pure_singular_cached(spec, op256), 0.2).values
    upper = usub + 0.7 * torsion_field(op256)
    assert np.all(out >= usub - 1e-10)
    assert np.all(out <= upper + 1e-10)


def test_monotone_iterate_none_nonlinearity(op256):
    spec = ProblemSpec(s=0.4, delta=0.5, beta=0.0)
    lam = 0.1
    usub = scale_pure_singular(pure_singular_cached(spec, op256), lam).values
    ubar = usub + torsion_field(op256)
    out = monotone_iterate(lam, usub, ubar, op256, spec)
    pure = scale_pure_singular(pure_singular_cached(spec, op256), lam)
    assert np.abs(out.values - pure.values).max() <= 1e-7


def test_monotone_iterate_two_brackets_agree(op256, canonical_spec):
    lam = 0.05
    usub = scale_pure_singular(pure_singular_cached(canonical_spec, op256), lam).values
    ubar1 = _supersolution_from(lam, canonical_spec, op256, usub, usub)
    assert ubar1 is not None
    ubar2 = ubar1 + 3.0 * torsion_field(op256)
    r1 = monotone_iterate(lam, usub, ubar1, op256, canonical_spec)
    r2 = monotone_iterate(lam, usub, ubar2, op256, canonical_spec)
    assert np.abs(r1.values - r2.values).max() <= 1e-3


def test_monotone_iterate_rejects_crossed_bracket(op256, canonical_spec):
    with pytest.raises(BracketViolation):
        monotone_iterate(0.05, np.full(256, 2.0), np.full(256, 1.0), op256, canonical_spec)


def test_solve_min_small_lambda_limit(op256, canonical_spec):
    lam = 1e-3
    field = solve_min(lam, canonical_spec, op256)
    usub = scale_pure_singular(pure_singular_cached(canonical_spec, op256), lam).values
    assert field.sup_norm <= 0.02
    assert np.abs(field.values / usub - 1.0).max() <= 1e-3


def test_solve_min_monotone_in_lambda(op256, canonical_spec):
    u_half = solve_min(0.05, canonical_spec, op256).values
    u_full = solve_min(0.1, canonical_spec, op256).values
    assert np.all(u_half <= u_full + 1e-10)


def test_solve_min_delta_zero_against_picard_oracle(op256):
    # independent fixed-point oracle with no singular machinery
    spec = ProblemSpec(s=0.4, delta=0.0, beta=0.0, nonlinearity=power_nonlinearity(2.0))
    lam = 0.2
    mine = solve_min(lam, spec, op256)
    u = np.zeros(256)
    for _ in range(5000):
        unew = solve_dirichlet(op256, lam * (1.0 + u ** 2))
        if np.abs(unew - u).max() < 1e-12:
            u = unew
            break
        u = unew
    assert np.abs(u - mine.values).max() <= 1e-6


def test_solve_min_residual_contract(op256, canonical_spec):
    field = solve_min(0.2, canonical_spec, op256)
    assert _residual(op256, canonical_spec, 0.2, field.values) <= field.residual_bound
    assert field.report is not None
    assert field.report.cone_lower > 0.0


def test_solve_min_rejects_nonpositive_lambda(op256, canonical_spec):
    with pytest.raises(ValueError):
        solve_min(0.0, canonical_spec, op256)


def test_end_to_end_comparison_principle(op256):
    # ordered data (lam, K) force ordered solutions across solver entry points
    spec_lo = ProblemSpec(s=0.4, delta=1.0, beta=0.0, coeff=0.5)
    spec_hi = ProblemSpec(s=0.4, delta=1.0, beta=0.0, coeff=1.0)
    u_lo = solve_pure_singular(spec_lo, op256).values
    u_hi = solve_pure_singular(spec_hi, op256).values
    assert np.all(u_lo <= u_hi + 1e-12)

"""Operator algebra, eigenpairs, quadrature and projections."""

import math

import numpy as np
import pytest

from blowuplab import (CASE_EXP, Parameters, build_space, compute_constants,
                       coupling_matrix, diagonalize, project, spaces_for)
from blowuplab.frames import FRAME_SIMILARITY, LinearizedField
from blowuplab.spectral import (ProjectionOperator, apply_L,
                                apply_coupled_operator, basis_from_json,
                                basis_to_json, ladder_eigenvalue,
                                minus_eigenvalue_offset)

POWER = Parameters(p=2, q=2, mu=1.0)
EXP = Parameters(p=1.3, q=0.7, mu=0.8, case=CASE_EXP)


def pair_norm(params, pair_res, spaces):
    n1 = spaces[0].inner_poly(pair_res[0], pair_res[0])
    n2 = spaces[1].inner_poly(pair_res[1], pair_res[1])
    return math.sqrt(n1 + n2)


def test_apply_L_examples():
    out = apply_L(1.0, 1, np.array([0.0, 0.0, 1.0]))   # r^2 -> 2 - r^2
    assert np.allclose(out, [2.0, 0.0, -1.0])
    out = apply_L(0.37, 3, np.array([5.0]))             # constants in the kernel
    assert np.allclose(out, [0.0])
    out = apply_L(1.0, 1, np.array([0.0, 1.0]))         # r -> -r/2
    assert np.allclose(out, [0.0, -0.5])


def test_quadrature_moments_dim1():
    for eta in (1.0, 0.8, 2.5):
        sp = build_space(eta, 1)
        for k in range(0, 16, 2):
            c = np.zeros(k + 1)
            c[k] = 1.0
            exact = sp.moment(k)
            assert abs(sp.integrate_poly(c) - exact) < 1e-10 * abs(exact)
        for k in range(1, 15, 2):
            c = np.zeros(k + 1)
            c[k] = 1.0
            scale = sp.moment(k + 1) ** (k / (k + 1.0))
            assert abs(sp.integrate_poly(c)) < 1e-10 * max(scale, 1.0)


def test_quadrature_moments_dim3():
    sp = build_space(1.4, 3)
    for k in range(0, 16, 2):
        c = np.zeros(k + 1)
        c[k] = 1.0
        exact = sp.moment(k)
        assert abs(sp.integrate_poly(c) - exact) < 1e-10 * abs(exact)


def test_self_adjointness():
    rng = np.random.default_rng(3)
    for dim, eta in ((1, 1.0), (1, 1.7), (3, 0.6)):
        sp = build_space(eta, dim)
        for _ in range(5):
            f = rng.standard_normal(9)
            g = rng.standard_normal(9)
            if dim > 1:
                f[1::2] = 0.0
                g[1::2] = 0.0
            lhs = sp.inner_poly(apply_L(eta, dim, f), g)
            rhs = sp.inner_poly(f, apply_L(eta, dim, g))
            scale = max(abs(lhs), abs(rhs), 1e-30)
            assert abs(lhs - rhs) / scale < 1e-9


@pytest.mark.parametrize("params", [POWER, EXP,
                                    Parameters(p=2.6, q=1.4, mu=1.9)])
def test_spectrum_and_residuals(params):
    c = compute_constants(params)
    basis = diagonalize(params, c, 6)
    spaces = spaces_for(params)
    off = minus_eigenvalue_offset(params)
    seen = set()
    for pair in basis:
        expected = (1.0 - pair.degree / 2.0 if pair.family == "plus"
                    else off - pair.degree / 2.0)
        assert pair.eigenvalue == ladder_eigenvalue(params, pair.family, pair.degree)
        assert abs(pair.eigenvalue - expected) < 1e-9
        seen.add((pair.family, pair.degree))
        r1, r2 = apply_coupled_operator(params, c, pair)
        r1 = r1 - pair.eigenvalue * pair.coeffs_first
        r2 = r2 - pair.eigenvalue * pair.coeffs_second
        assert pair_norm(params, (r1, r2), spaces) < 1e-9
        lead = np.array([pair.coeffs_first[-1], pair.coeffs_second[-1]])
        assert abs(np.linalg.norm(lead) - 1.0) < 1e-12
    assert len(seen) == 14  # both families, degrees 0..6


def test_exponential_mode0():
    c = compute_constants(EXP)
    basis = diagonalize(EXP, c, 0)
    plus = next(p for p in basis if p.family == "plus")
    minus = next(p for p in basis if p.family == "minus")
    assert plus.eigenvalue == 1.0 and minus.eigenvalue == -1.0
    v = np.array([plus.coeffs_first[0], plus.coeffs_second[0]])
    expect = np.array([EXP.q, EXP.p]) / np.hypot(EXP.q, EXP.p)
    assert np.abs(v - expect).max() < 1e-12


def test_power_minus_ladder():
    pr = Parameters(p=3.2, q=1.5, mu=0.9)
    c = compute_constants(pr)
    basis = diagonalize(pr, c, 4)
    lam_expected = -(pr.p + 1) * (pr.q + 1) / (pr.p * pr.q - 1)
    for pair in basis:
        if pair.family == "minus":
            assert abs(pair.eigenvalue - (lam_expected - pair.degree / 2)) < 1e-12


def test_dim3_even_only():
    pr = Parameters(p=2, q=2, mu=1.0, dim=3)
    c = compute_constants(pr)
    basis = diagonalize(pr, c, 6)
    assert {p.degree for p in basis} == {0, 2, 4, 6}
    spaces = spaces_for(pr)
    for pair in basis:
        r1, r2 = apply_coupled_operator(pr, c, pair)
        r1 -= pair.eigenvalue * pair.coeffs_first
        r2 -= pair.eigenvalue * pair.coeffs_second
        assert pair_norm(pr, (r1, r2), spaces) < 1e-9


def _field_from_pairs(params, basis, weights, grid):
    first = np.zeros_like(grid)
    second = np.zeros_like(grid)
    for w, pair in zip(weights, basis):
        first += w * pair.eval_first(grid)
        second += w * pair.eval_second(grid)
    return LinearizedField(grid=grid, first=first, second=second,
                           frame=FRAME_SIMILARITY, time=20.0, case=params.case)


@pytest.mark.parametrize("params", [POWER, EXP])
def test_projection_biorthogonality_even_fields(params):
    # even-degree pairs survive the even radial storage round trip
    c = compute_constants(params)
    M = 6
    basis = diagonalize(params, c, M)
    spaces = spaces_for(params)
    grid = np.linspace(0.0, 40.0, 1201)
    for k, pair in enumerate(basis):
        if pair.degree % 2:
            continue
        w = np.zeros(len(basis))
        w[k] = 1.0
        field = _field_from_pairs(params, basis, w, grid)
        modes = project(spaces, basis, field, M)
        target = modes.theta if pair.family == "plus" else modes.theta_tilde
        other = modes.theta_tilde if pair.family == "plus" else modes.theta
        assert abs(target[pair.degree] - 1.0) < 1e-8
        mask = np.ones(M + 1, bool)
        mask[pair.degree] = False
        assert np.abs(target[mask]).max() < 1e-8
        assert np.abs(other).max() < 1e-8


@pytest.mark.parametrize("params", [POWER, EXP])
def test_projection_biorthogonality_signed(params):
    # every pair, odd degrees included, through signed node evaluation
    c = compute_constants(params)
    basis = diagonalize(params, c, 6)
    spaces = spaces_for(params)
    op = ProjectionOperator(basis, spaces[0], spaces[1])
    for k, pair in enumerate(basis):
        f1p, f1m = spaces[0].eval_poly(pair.coeffs_first)
        f2p, f2m = spaces[1].eval_poly(pair.coeffs_second)
        coef = op.coefficients(f1p, f2p, f1m, f2m)
        expect = np.zeros(len(basis))
        expect[k] = 1.0
        assert np.abs(coef - expect).max() < 1e-8


def test_projection_zero_and_combination():
    params = POWER
    c = compute_constants(params)
    basis = diagonalize(params, c, 4)
    spaces = spaces_for(params)
    grid = np.linspace(0.0, 40.0, 1201)
    zero = LinearizedField(grid=grid, first=np.zeros_like(grid),
                           second=np.zeros_like(grid), frame=FRAME_SIMILARITY,
                           time=20.0, case=params.case)
    modes = project(spaces, basis, zero, 4)
    assert np.abs(modes.theta).max() == 0.0
    assert np.abs(modes.theta_tilde).max() == 0.0
    w = np.zeros(len(basis))
    w[[p.degree == 0 and p.family == "plus" for p in basis].index(True)] = 1.0
    w[[p.degree == 2 and p.family == "minus" for p in basis].index(True)] = 0.5
    field = _field_from_pairs(params, basis, w, grid)
    modes = project(spaces, basis, field, 4)
    assert abs(modes.theta[0] - 1.0) < 1e-8
    assert abs(modes.theta_tilde[2] - 0.5) < 1e-8
    # the odd-mode combination is exact through signed evaluation
    op = ProjectionOperator(basis, spaces[0], spaces[1])
    k0 = [p.degree == 0 and p.family == "plus" for p in basis].index(True)
    k1 = [p.degree == 1 and p.family == "minus" for p in basis].index(True)
    f1p = basis[k0].eval_first(spaces[0].nodes) + 0.5 * basis[k1].eval_first(spaces[0].nodes)
    f1m = basis[k0].eval_first(-spaces[0].nodes) + 0.5 * basis[k1].eval_first(-spaces[0].nodes)
    f2p = basis[k0].eval_second(spaces[1].nodes) + 0.5 * basis[k1].eval_second(spaces[1].nodes)
    f2m = basis[k0].eval_second(-spaces[1].nodes) + 0.5 * basis[k1].eval_second(-spaces[1].nodes)
    coef = op.coefficients(f1p, f2p, f1m, f2m)
    assert abs(coef[k0] - 1.0) < 1e-8 and abs(coef[k1] - 0.5) < 1e-8


def test_projection_reconstruction():
    params = Parameters(p=2.2, q=1.6, mu=1.3)
    c = compute_constants(params)
    M = 5
    basis = diagonalize(params, c, M)
    spaces = spaces_for(params)
    grid = np.linspace(0.0, 40.0, 1201)
    rng = np.random.default_rng(11)
    for _ in range(3):
        w = rng.standard_normal(len(basis))
        w[[p.degree % 2 == 1 for p in basis]] = 0.0  # even storage
        field = _field_from_pairs(params, basis, w, grid)
        modes = project(spaces, basis, field, M)
        # remainder norm after subtracting all projected modes
        assert modes.residual_minus_norm_first < 1e-8
        assert modes.residual_minus_norm_second < 1e-8


def test_projection_domain_error():
    params = POWER
    c = compute_constants(params)
    basis = diagonalize(params, c, 2)
    spaces = spaces_for(params)
    grid = np.linspace(0.0, 5.0, 401)  # smaller than the quadrature support
    zero = LinearizedField(grid=grid, first=np.zeros_like(grid),
                           second=np.zeros_like(grid), frame=FRAME_SIMILARITY,
                           time=20.0, case=params.case)
    with pytest.raises(ValueError):
        project(spaces, basis, zero, 2)


def test_basis_json_roundtrip():
    c = compute_constants(POWER)
    basis = diagonalize(POWER, c, 3)
    back = basis_from_json(basis_to_json(basis))
    assert len(back) == len(basis)
    for a, b in zip(basis, back):
        assert a.degree == b.degree and a.family == b.family
        assert a.eigenvalue == b.eigenvalue
        assert np.array_equal(a.coeffs_first, b.coeffs_first)


def test_coupling_matrix_exponential():
    c = compute_constants(EXP)
    M = coupling_matrix(EXP, c)
    assert np.allclose(M, [[0.0, EXP.q / EXP.p], [EXP.p / EXP.q, 0.0]])

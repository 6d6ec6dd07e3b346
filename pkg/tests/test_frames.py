"""Frame changes, rescaled right-hand side, linearization pieces."""

import math

import numpy as np
import pytest

from blowuplab import (CASE_EXP, CASE_POWER, CutoffSpec, LinearizedField,
                       Parameters, RadialField, chi0, compute_constants,
                       diagonalize, from_similarity, linearize,
                       linearized_terms, ode_blowup_solution, outer_profile,
                       project, similarity_rhs, spaces_for, to_similarity,
                       truncate_outer)
from blowuplab.errors import PositivityError
from blowuplab.frames import (FRAME_PHYSICAL, FRAME_SIMILARITY, RadialStencil,
                              assemble_linearized_rhs, delinearize,
                              profile_residue, resample)
from blowuplab.params import approx_profile

POWER = Parameters(p=2, q=2, mu=1.0)
EXP = Parameters(p=1.0, q=1.0, mu=1.0, case=CASE_EXP)


def make_field(params, constants, grid, s, perturb=0.0):
    phi, psi = approx_profile(params, constants, grid, s)
    return RadialField(grid=grid, first=phi + perturb, second=psi + perturb,
                       frame=FRAME_SIMILARITY, time=s, case=params.case)


def test_chi0_shape():
    assert chi0(0.5) == 1.0 and chi0(1.0) == 1.0
    assert chi0(2.0) == 0.0 and chi0(3.0) == 0.0
    r = np.linspace(1.0, 2.0, 100)
    vals = chi0(r)
    assert np.all(np.diff(vals) <= 0.0)
    h = 1e-5
    for edge in (1.0, 2.0):
        d = (chi0(edge + h) - chi0(edge - h)) / (2 * h)
        assert abs(d) < 1e-8


def test_stencil_exact_on_quadratics():
    rng = np.random.default_rng(0)
    grid = np.concatenate([[0.0], np.sort(rng.uniform(0.05, 10.0, 60))])
    st = RadialStencil(grid, 1)
    f = 3.0 - 2.0 * grid**2
    assert np.abs(st.d1(f)[1:] - (-4.0 * grid[1:])).max() < 1e-9
    assert np.abs(st.lap(f) - (-4.0)).max() < 1e-8
    st3 = RadialStencil(grid, 3)
    assert np.abs(st3.lap(f) - (-12.0)).max() < 1e-7  # lap r^2 = 2*dim


def test_to_similarity_of_ode_orbit():
    c = compute_constants(POWER, T=1.0)
    grid = np.linspace(0.0, 2.0, 64)
    for t in (0.0, 0.7):
        u, v = ode_blowup_solution(POWER, c, t)
        f = RadialField(grid=grid, first=np.full_like(grid, u),
                        second=np.full_like(grid, v), frame=FRAME_PHYSICAL,
                        time=t, case=CASE_POWER)
        sim = to_similarity(f, POWER, c)
        assert np.abs(sim.first - c.Gamma).max() < 1e-12
        assert np.abs(sim.second - c.gamma).max() < 1e-12
        assert abs(sim.time + math.log(1.0 - t)) < 1e-12


def test_to_similarity_exponential_orbit():
    pr = Parameters(p=1.5, q=0.5, mu=1.0, case=CASE_EXP)
    c = compute_constants(pr, T=1.0)
    grid = np.linspace(0.0, 1.0, 64)
    t = 0.5
    u, v = ode_blowup_solution(pr, c, t)
    f = RadialField(grid=grid, first=np.full_like(grid, u),
                    second=np.full_like(grid, v), frame=FRAME_PHYSICAL,
                    time=t, case=CASE_EXP)
    sim = to_similarity(f, pr, c)
    assert np.abs(sim.first - 1.0 / pr.p).max() < 1e-12
    assert np.abs(sim.second - 1.0 / pr.q).max() < 1e-12


def test_round_trip():
    c = compute_constants(POWER, T=1.0)
    grid = np.linspace(0.0, 3.0, 257)
    u = 1.0 / (1.0 + grid**2)
    f = RadialField(grid=grid, first=u, second=0.5 * u, frame=FRAME_PHYSICAL,
                    time=0.3, case=CASE_POWER)
    sim = to_similarity(f, POWER, c)
    back = from_similarity(sim, POWER, c)
    assert np.abs(back.grid - grid).max() < 1e-14
    assert np.abs(back.first - u).max() < 1e-12
    # with a resample leg through a finer grid
    fine = np.linspace(0.0, sim.grid[-1], 1025)
    sim2 = resample(sim, fine)
    back2 = from_similarity(sim2, POWER, c, target_grid=grid)
    assert np.abs(back2.first - u).max() < 1e-8


def test_rhs_stationary_constants():
    c = compute_constants(POWER)
    grid = np.linspace(0.0, 30.0, 901)
    f = RadialField(grid=grid, first=np.full_like(grid, c.Gamma),
                    second=np.full_like(grid, c.gamma),
                    frame=FRAME_SIMILARITY, time=20.0, case=CASE_POWER)
    r1, r2 = similarity_rhs(f, POWER, c)
    assert np.abs(r1).max() < 1e-12 and np.abs(r2).max() < 1e-12

    ce = compute_constants(EXP)
    fe = RadialField(grid=grid, first=np.full_like(grid, 1.0 / EXP.p),
                     second=np.full_like(grid, 1.0 / EXP.q),
                     frame=FRAME_SIMILARITY, time=20.0, case=CASE_EXP)
    r1, r2 = similarity_rhs(fe, EXP, ce)
    assert np.abs(r1).max() < 1e-12 and np.abs(r2).max() < 1e-12


def test_rhs_kernel_mode():
    # (Gamma, gamma) + eps*(f2, g2) sits on the zero eigenvalue: rhs = O(eps^2)
    c = compute_constants(POWER)
    basis = diagonalize(POWER, c, 2)
    f2 = next(p for p in basis if p.degree == 2 and p.family == "plus")
    grid = np.linspace(0.0, 30.0, 901)
    eps = 1e-6
    f = RadialField(grid=grid, first=c.Gamma + eps * f2.eval_first(grid),
                    second=c.gamma + eps * f2.eval_second(grid),
                    frame=FRAME_SIMILARITY, time=20.0, case=CASE_POWER)
    r1, r2 = similarity_rhs(f, POWER, c)
    interior = slice(1, -1)
    bound = 1e-10 + 10.0 * eps**2 * (1.0 + grid[interior] ** 4).max()
    assert np.abs(r1[interior]).max() < bound
    assert np.abs(r2[interior]).max() < bound


def test_positivity_error_location():
    ce = compute_constants(EXP)
    grid = np.linspace(0.0, 30.0, 301)
    first = np.full_like(grid, 1.0)
    first[120] = 1e-13
    f = LinearizedField(grid=grid, first=first, second=np.ones_like(grid),
                        frame=FRAME_SIMILARITY, time=20.0, case=CASE_EXP)
    full = RadialField(grid=grid, first=first, second=np.ones_like(grid),
                       frame=FRAME_SIMILARITY, time=20.0, case=CASE_EXP)
    # building the positive container itself rejects the floor violation
    with pytest.raises(PositivityError):
        similarity_rhs(full, EXP, ce)


def test_linearize_roundtrip_and_projection():
    c = compute_constants(POWER)
    grid = np.linspace(0.0, 40.0, 1201)
    s = 25.0
    field = make_field(POWER, c, grid, s)
    lin = linearize(field, POWER, c)
    assert np.abs(lin.first).max() == 0.0 and np.abs(lin.second).max() == 0.0
    basis = diagonalize(POWER, c, 4)
    spaces = spaces_for(POWER)
    f0 = next(p for p in basis if p.degree == 0 and p.family == "plus")
    eps = 1e-4
    field2 = RadialField(grid=grid, first=field.first + eps * f0.eval_first(grid),
                         second=field.second + eps * f0.eval_second(grid),
                         frame=FRAME_SIMILARITY, time=s, case=CASE_POWER)
    lin2 = linearize(field2, POWER, c)
    modes = project(spaces, basis, lin2, 4)
    assert abs(modes.theta[0] - eps) < 1e-10
    back = delinearize(lin2, POWER, c)
    assert np.abs(back.first - field2.first).max() < 1e-15


@pytest.mark.parametrize("params,s", [(POWER, 30.0), (EXP, 30.0),
                                      (Parameters(p=2.6, q=1.4, mu=1.8), 40.0)])
def test_linearized_terms_zero_dev(params, s):
    c = compute_constants(params)
    grid = np.linspace(0.0, 35.0, 1001)
    zero = LinearizedField(grid=grid, first=np.zeros_like(grid),
                           second=np.zeros_like(grid), frame=FRAME_SIMILARITY,
                           time=s, case=params.case)
    t = linearized_terms(zero, params, c)
    assert np.abs(t.F[0]).max() == 0.0 and np.abs(t.F[1]).max() == 0.0
    assert np.abs(t.G[0]).max() == 0.0 and np.abs(t.G[1]).max() == 0.0
    r = assemble_linearized_rhs(zero, params, c)
    assert np.abs(r[0] - t.R[0]).max() < 1e-14
    assert np.abs(r[1] - t.R[1]).max() < 1e-14


@pytest.mark.parametrize("params,s", [(POWER, 30.0), (EXP, 30.0),
                                      (Parameters(p=2.6, q=1.4, mu=1.8), 40.0)])
def test_decomposition_identity(params, s):
    # assembled pieces + profile drift == rhs of the full field, to rounding
    c = compute_constants(params)
    grid = np.linspace(0.0, 35.0, 1001)
    rng = np.random.default_rng(5)
    amp = 1e-2
    lam = amp * np.exp(-((grid - 3.0) ** 2) / 4.0) * (1.0 + 0.3 * np.cos(grid))
    ups = amp * np.exp(-((grid - 1.0) ** 2) / 6.0)
    lin = LinearizedField(grid=grid, first=lam, second=ups,
                          frame=FRAME_SIMILARITY, time=s, case=params.case)
    assembled = assemble_linearized_rhs(lin, params, c)
    full = delinearize(lin, params, c)
    rhs = similarity_rhs(full, params, c)
    from blowuplab.params import approx_profile_ds
    dphi, dpsi = approx_profile_ds(params, c, grid, s)
    scale = max(np.abs(rhs[0]).max(), np.abs(rhs[1]).max(), 1.0)
    assert np.abs(assembled[0] + dphi - rhs[0]).max() < 1e-9 * scale
    assert np.abs(assembled[1] + dpsi - rhs[1]).max() < 1e-9 * scale


def test_potential_outer_decay():
    # the potential approaches its far-field limit; the coupling it leaves
    # behind decays with the cutoff radius K
    c = compute_constants(POWER)
    grid = np.linspace(0.0, 120.0, 2001)
    s = 50.0
    zero = LinearizedField(grid=grid, first=np.zeros_like(grid),
                           second=np.zeros_like(grid), frame=FRAME_SIMILARITY,
                           time=s, case=CASE_POWER)
    t = linearized_terms(zero, POWER, c)
    residual_coupling = np.abs(t.V_entries["V12"]
                               + POWER.p * c.gamma ** (POWER.p - 1.0))
    sup = {}
    for K in (2.0, 4.0, 8.0):
        mask = grid >= K * math.sqrt(s)
        sup[K] = residual_coupling[mask].max()
    assert sup[2.0] > sup[4.0] > sup[8.0]
    assert sup[8.0] < 0.25


def test_profile_residue_decay_rate():
    # weighted norm of R decays like 1/s: log-log slope in [-1.35, -0.75]
    for params in (POWER, EXP, Parameters(p=2.2, q=1.7, mu=0.6)):
        c = compute_constants(params)
        grid = np.linspace(0.0, 60.0, 1501)
        spaces = spaces_for(params)
        svals = np.array([20.0, 40.0, 80.0, 160.0])
        norms = []
        for s in svals:
            r1, r2 = profile_residue(params, c, grid, s)
            from scipy.interpolate import make_interp_spline
            v1 = make_interp_spline(grid, r1, k=5)(spaces[0].nodes)
            v2 = make_interp_spline(grid, r2, k=5)(spaces[1].nodes)
            n1 = spaces[0].integrate_samples(v1 * v1)
            n2 = spaces[1].integrate_samples(v2 * v2)
            norms.append(math.sqrt(n1 + n2))
        slope = np.polyfit(np.log(svals), np.log(norms), 1)[0]
        if params.case == CASE_POWER:
            assert -1.35 < slope < -0.75, slope
        else:
            # the matched correction constants cancel the 1/s layer entirely,
            # so the exponential residue decays at least one order faster
            assert slope < -0.75, slope


def test_truncate_outer():
    c = compute_constants(POWER)
    grid = np.linspace(0.0, 40.0, 801)
    s = 16.0
    cut = CutoffSpec(K=1.0, s=s)
    lam = np.ones_like(grid)
    lin = LinearizedField(grid=grid, first=lam, second=2.0 * lam,
                          frame=FRAME_SIMILARITY, time=s, case=CASE_POWER)
    out = truncate_outer(lin, cut)
    inner = grid <= cut.K * math.sqrt(s)
    outer = grid >= 2.0 * cut.K * math.sqrt(s)
    assert np.abs(out.first[inner]).max() == 0.0
    assert np.abs(out.first[outer] - 1.0).max() == 0.0
    assert np.abs(out.second).max() <= 2.0

"""Trajectory verification: trapping sets, prepared data, final profiles.

The trapping set at time s bounds every piece of the eigenmode
decomposition of the deviation pair (Lambda, Upsilon):

    |theta_0|, |theta_1| <= A/s^2,          |theta_2| <= A^4 log(s)/s^2,
    |theta_j|, |ttheta_j| <= A^j / s^((j+1)/2)   for 3 <= j <= M,
    |ttheta_i| <= A^2/s^2                        for i = 0, 1, 2,
    sup |Lambda_-|/(1+|y|^(M+1)) <= A^(M+1)/s^((M+2)/2)   (same second),
    sup |Lambda_e| <= A^(M+2)/sqrt(s)                      (same second).

Margins are stored as (bound - |value|)/bound, nonnegative iff the
inequality holds.

The exponential case adds the three-region control: the blowup core
delegates to the trapping set, the intermediate annulus compares the
rescaled auxiliaries

    util(x, xi, tau) = (1/q) log(sigma(x)) + u(x + xi sqrt(sigma), t)

(with t = t(x) + tau*sigma(x), sigma(x) = T - t(x) solving
|x| = (K0/4) sqrt(sigma |log sigma|)) against the explicit orbit of
du/dtau = exp(p v), dv/dtau = exp(q u), and the far region is compared
against its own initial snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import GluingError
from .evolve import PhysicalTrajectory
from .frames import (FRAME_PHYSICAL, FRAME_SIMILARITY, CutoffSpec, LinearizedField,
                     RadialField, chi0, linearize, stencil_for, to_similarity,
                     truncate_outer)
from .params import (CASE_EXP, CASE_POWER, BlowupConstants, Parameters,
                     approx_profile, final_profile)
from .reduced import intermediate_closed_form, intermediate_offset
from .spectral import PolyPair, WeightedSpace, diagonalize, project, spaces_for


# ---------------------------------------------------------------------------
# prepared initial data
# ---------------------------------------------------------------------------

def geometric_grid(h0: float, x_max: float, ratio: float = 1.05) -> np.ndarray:
    """Radial grid with spacing h0 near the origin, stretched geometrically."""
    if h0 <= 0 or x_max <= h0 or ratio < 1.0:
        raise ValueError("need 0 < h0 < x_max and ratio >= 1")
    pts = [0.0]
    h = h0
    while pts[-1] + h < x_max:
        pts.append(pts[-1] + h)
        h *= ratio
    pts.append(x_max)
    return np.array(pts)


def build_initial_data_power(params: Parameters, constants: BlowupConstants,
                             A: float, s0: float, d0: float, d1: float, *,
                             grid: np.ndarray | None = None, K: float = 1.0,
                             basis: list[PolyPair] | None = None) -> RadialField:
    """Profile plus (A/s0^2) d0 (f_0, g_0) chi(., s0) on the similarity grid.

    Radial storage is even about the origin, so the antisymmetric d1 mode
    cannot be represented; d1 must be zero (the shoot is one-dimensional).
    """
    if abs(d0) > A or abs(d1) > A:
        raise ValueError("(d0, d1) must lie in the cuboid [-A, A]^2")
    if d1 != 0.0:
        raise ValueError("d1 must be 0: radial fields are even about the origin")
    if grid is None:
        grid = np.linspace(0.0, 48.0, 1025)
    if basis is None:
        basis = diagonalize(params, constants, 1)
    f0 = next(p for p in basis if p.degree == 0 and p.family == "plus")
    chi = CutoffSpec(K=K, s=s0).chi(grid)
    phi, psi = approx_profile(params, constants, grid, s0)
    amp = A / (s0 * s0) * d0
    return RadialField(grid=grid,
                       first=phi + amp * f0.eval_first(grid) * chi,
                       second=psi + amp * f0.eval_second(grid) * chi,
                       frame=FRAME_SIMILARITY, time=s0, case=params.case)


def solve_sigma(x: float, factor: float) -> float:
    """Solve |x| = factor * sqrt(sigma |log sigma|) for sigma in (0, 1/e).

    The map sigma -> sigma |log sigma| is strictly increasing there, so the
    root is unique; x beyond the range of the map is an error.
    """
    if x == 0.0:
        return 0.0
    target = (x / factor) ** 2
    hi = math.exp(-1.0)
    if target > hi * 1.0:  # max of sigma|log sigma| on (0, 1/e] is 1/e
        raise ValueError(f"x = {x:g} is too large for the sigma map "
                         f"(needs x <= {factor * math.sqrt(hi):g})")

    def h(sig):
        return sig * (-math.log(sig)) - target

    return brentq(h, 1e-300, hi, xtol=1e-300, rtol=1e-14)


def profile_initial_field(params: Parameters, constants: BlowupConstants,
                          s0: float, grid: np.ndarray) -> RadialField:
    """Physical-frame data equal to the approximate profile at s = s0."""
    rem = math.exp(-s0)
    t0 = constants.T - rem
    y0 = grid / math.sqrt(rem)
    phi, psi = approx_profile(params, constants, y0, s0)
    if params.case == CASE_POWER:
        u = rem ** (-constants.alpha) * phi
        v = rem ** (-constants.beta) * psi
    else:
        u = (s0 + np.log(phi)) / params.q
        v = (s0 + np.log(psi)) / params.p
    return RadialField(grid=grid, first=u, second=v, frame=FRAME_PHYSICAL,
                       time=t0, case=params.case)


def build_initial_data_exp(params: Parameters, constants: BlowupConstants,
                           A: float, s0: float, d0: float, d1: float,
                           a_tail: float, *, grid: np.ndarray | None = None,
                           K0: float = 10.0, K: float = 1.0,
                           core_width: float = 1.0,
                           glue_tol: float = 0.1) -> RadialField:
    """Two-piece exponential-case data glued in physical space at t0.

    The core carries the rescaled profile plus the (A^2/s0^2) d0 mode bump
    added inside the logarithm; outside the core the data follows the
    sigma(x)-parameterized intermediate orbit

        q u0(x) = -log[ p (sigma0 + c0 sigma(x)) ],   c0 = K0^2/(32(mu+1)),

    whose x -> 0 asymptote is log(4(mu+1)|log x| / (p x^2)); for |x| >= 1
    the tail is exactly -log(1 + a_tail x^2).  The core cutoff transitions
    at |y0| ~ core_width*sqrt(s0) (slow-variable scale), where profile and
    orbit agree to O(1/s0); mismatches beyond ``glue_tol`` raise
    :class:`GluingError`.
    """
    if params.case != CASE_EXP:
        raise ValueError("exponential-case data builder needs case='exp'")
    if a_tail <= 0.0:
        raise ValueError("a_tail must be positive")
    if abs(d0) > A or abs(d1) > A:
        raise ValueError("(d0, d1) must lie in the cuboid [-A, A]^2")
    if d1 != 0.0:
        raise ValueError("d1 must be 0: radial fields are even about the origin")
    p, q, mu = params.p, params.q, params.mu
    rem = math.exp(-s0)
    t0 = constants.T - rem
    if grid is None:
        grid = geometric_grid(max(2e-2 * math.sqrt(rem), 1e-7), 1.2)
    y0 = grid / math.sqrt(rem)

    # core: rescaled profile with the mode-0 bump inside the log
    basis = diagonalize(params, constants, 1)
    f0 = next(pp for pp in basis if pp.degree == 0 and pp.family == "plus")
    chi_bump = chi0(16.0 * np.abs(y0) / (K * math.sqrt(s0)))
    phi, psi = approx_profile(params, constants, y0, s0)
    amp = A * A / (s0 * s0) * d0
    core_arg_u = phi + amp * f0.eval_first(y0) * chi_bump
    core_arg_v = psi + amp * f0.eval_second(y0) * chi_bump
    if core_arg_u.min() <= 1e-8 or core_arg_v.min() <= 1e-8:
        raise ValueError("(d0, d1) drives the log argument below 1e-8; "
                         "shrink the perturbation")
    qu_core = s0 + np.log(core_arg_u)
    pv_core = s0 + np.log(core_arg_v)

    # intermediate orbit tail through sigma(x), far tail beyond |x| = 1
    c0 = intermediate_offset(params, K0)
    sigma = np.array([solve_sigma(float(x), K0 / 4.0) if x <= (K0 / 4.0) * 0.606
                      else math.exp(-1.0) for x in grid])
    qu_tail = -np.log(p * (rem + c0 * sigma))
    pv_tail = -np.log(q * (rem + c0 * sigma))
    qu_far = -np.log(1.0 + a_tail * grid * grid)
    pv_far = qu_far.copy()
    w_far = 1.0 - chi0(1.0 + np.clip((grid - 0.6) / 0.4, 0.0, 1.0))
    qu_mid = (1.0 - w_far) * qu_tail + w_far * qu_far
    pv_mid = (1.0 - w_far) * pv_tail + w_far * pv_far

    chi1 = chi0(np.abs(y0) / (core_width * math.sqrt(s0)))
    qu = chi1 * qu_core + (1.0 - chi1) * qu_mid
    pv = chi1 * pv_core + (1.0 - chi1) * pv_mid

    seam = (chi1 > 0.0) & (chi1 < 1.0)
    if seam.any():
        jump = max(np.abs(qu_core - qu_mid)[seam].max(),
                   np.abs(pv_core - pv_mid)[seam].max())
        if jump > glue_tol:
            raise GluingError(f"core/orbit mismatch {jump:.3g} exceeds {glue_tol:g}")
    far_seam = (w_far > 0.0) & (w_far < 1.0)
    if far_seam.any():
        jump = np.abs(qu_tail - qu_far)[far_seam].max()
        if jump > glue_tol:
            raise GluingError(f"orbit/far-tail mismatch {jump:.3g} exceeds {glue_tol:g}")

    return RadialField(grid=grid, first=qu / q, second=pv / p,
                       frame=FRAME_PHYSICAL, time=t0, case=params.case)


# ---------------------------------------------------------------------------
# trapping-set membership
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShrinkingSetMargins:
    """Named margins, one per trapping inequality at time s."""

    s: float
    margins: dict[str, float]
    values: dict[str, float]
    bounds: dict[str, float]

    @property
    def min_margin(self) -> float:
        return min(self.margins.values())

    @property
    def holds(self) -> bool:
        return self.min_margin >= 0.0


def shrinking_bounds(A: float, M: int, s: float) -> dict[str, float]:
    b: dict[str, float] = {
        "theta_0": A / s**2,
        "theta_1": A / s**2,
        "theta_2": A**4 * math.log(s) / s**2,
        "theta_tilde_0": A**2 / s**2,
        "theta_tilde_1": A**2 / s**2,
        "theta_tilde_2": A**2 / s**2,
    }
    for j in range(3, M + 1):
        b[f"theta_{j}"] = A**j / s ** (0.5 * (j + 1))
        b[f"theta_tilde_{j}"] = A**j / s ** (0.5 * (j + 1))
    tail = A ** (M + 1) / s ** (0.5 * (M + 2))
    b["minus_first"] = tail
    b["minus_second"] = tail
    b["outer_first"] = A ** (M + 2) / math.sqrt(s)
    b["outer_second"] = A ** (M + 2) / math.sqrt(s)
    return b


def check_shrinking(lin: LinearizedField, basis: list[PolyPair], params: Parameters,
                    A: float, M: int, K: float,
                    spaces: tuple[WeightedSpace, WeightedSpace] | None = None,
                    ) -> ShrinkingSetMargins:
    """Evaluate every trapping inequality on a linearized checkpoint."""
    s = lin.time
    if spaces is None:
        spaces = spaces_for(params)
    cutoff = CutoffSpec(K=K, s=s)
    modes = project(spaces, basis, lin, M, cutoff)
    outer = truncate_outer(lin, cutoff)
    values: dict[str, float] = {}
    for j in range(M + 1):
        values[f"theta_{j}"] = float(abs(modes.theta[j]))
        values[f"theta_tilde_{j}"] = float(abs(modes.theta_tilde[j]))
    values["minus_first"] = modes.residual_minus_norm_first
    values["minus_second"] = modes.residual_minus_norm_second
    values["outer_first"] = float(np.abs(outer.first).max())
    values["outer_second"] = float(np.abs(outer.second).max())
    bounds = shrinking_bounds(A, M, s)
    margins = {k: (bounds[k] - values[k]) / bounds[k] for k in bounds}
    return ShrinkingSetMargins(s=s, margins=margins, values=values, bounds=bounds)


# ---------------------------------------------------------------------------
# three-region control (exponential case)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionReport:
    region: str  # "D1" | "D2" | "D3"
    sup_deviation: float
    grad_deviation: float
    holds: bool


def _even_interp(field: RadialField, component: str):
    interp = PchipInterpolator(field.grid, getattr(field, component))

    def at(x):
        return interp(np.abs(x))
    return at


def check_regions(checkpoint: RadialField, params: Parameters,
                  constants: BlowupConstants, K0: float, eps0: float,
                  alpha0: float, delta0: float, eta0: float, C0: float,
                  t0_snapshot: RadialField, *, A: float = 10.0, M: int = 4,
                  K: float = 1.0, basis: list[PolyPair] | None = None,
                  spaces: tuple[WeightedSpace, WeightedSpace] | None = None,
                  n_x: int = 16, n_xi: int = 9) -> list[RegionReport]:
    """Evaluate the three-region control on one physical checkpoint."""
    if params.case != CASE_EXP:
        raise ValueError("the three-region control applies to the exponential case")
    if checkpoint.frame != FRAME_PHYSICAL:
        raise ValueError("check_regions needs a physical-frame checkpoint")
    t = checkpoint.time
    T = constants.T
    rem = T - t
    if rem <= 0.0:
        raise ValueError("checkpoint time must be below T")
    if basis is None:
        basis = diagonalize(params, constants, M)
    if spaces is None:
        spaces = spaces_for(params)
    reports: list[RegionReport] = []

    # D1: trapping-set membership of the rescaled deviation
    sim = to_similarity(checkpoint, params, constants)
    lin = linearize(sim, params, constants)
    margins = check_shrinking(lin, basis, params, A, M, K, spaces)
    reports.append(RegionReport(region="D1",
                                sup_deviation=1.0 - margins.min_margin,
                                grad_deviation=math.nan,
                                holds=margins.holds))

    # D2: compare against the intermediate orbit
    u_at = _even_interp(checkpoint, "first")
    v_at = _even_interp(checkpoint, "second")
    inner = (K0 / 4.0) * math.sqrt(rem * abs(math.log(rem)))
    outer_edge = min(eps0, checkpoint.grid[-1])
    sup_dev = 0.0
    grad_dev = 0.0
    if inner < outer_edge:
        xs = np.geomspace(max(inner, checkpoint.grid[1] * 4.0), outer_edge, n_x)
        for x in xs:
            sig = solve_sigma(float(x), K0 / 4.0)
            lg = abs(math.log(sig))
            tau = (t - (T - sig)) / sig
            uhat, vhat = intermediate_closed_form(params, K0, tau)
            xi = np.linspace(-alpha0 * math.sqrt(lg), alpha0 * math.sqrt(lg), n_xi)
            pts = x + xi * math.sqrt(sig)
            util = math.log(sig) / params.q + u_at(pts)
            vtil = math.log(sig) / params.p + v_at(pts)
            sup_dev = max(sup_dev, np.abs(util - uhat).max(), np.abs(vtil - vhat).max())
            dxi = xi[1] - xi[0]
            grad_u = np.abs(np.gradient(util, dxi)).max()
            grad_v = np.abs(np.gradient(vtil, dxi)).max()
            grad_dev = max(grad_dev, max(grad_u, grad_v) * math.sqrt(lg))
    reports.append(RegionReport(region="D2", sup_deviation=float(sup_dev),
                                grad_deviation=float(grad_dev),
                                holds=bool(sup_dev <= delta0 and grad_dev <= C0)))

    # D3: compare against the stored t0 snapshot
    if not np.array_equal(checkpoint.grid, t0_snapshot.grid):
        raise ValueError("D3 comparison needs matching grids")
    mask = checkpoint.grid >= eps0 / 4.0
    st = stencil_for(checkpoint.grid, params.dim)
    du = np.abs(checkpoint.first - t0_snapshot.first)[mask].max()
    dv = np.abs(checkpoint.second - t0_snapshot.second)[mask].max()
    dgu = np.abs(st.d1(checkpoint.first) - st.d1(t0_snapshot.first))[mask].max()
    dgv = np.abs(st.d1(checkpoint.second) - st.d1(t0_snapshot.second))[mask].max()
    sup3 = float(max(du, dv))
    grad3 = float(max(dgu, dgv))
    reports.append(RegionReport(region="D3", sup_deviation=sup3,
                                grad_deviation=grad3,
                                holds=bool(sup3 <= eta0 and grad3 <= eta0)))
    return reports


# ---------------------------------------------------------------------------
# final blowup profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FinalProfileSample:
    x: float
    u_star: float
    v_star: float
    predicted_u: float
    predicted_v: float
    ratio_u: float
    ratio_v: float


def extract_final_profile(traj: PhysicalTrajectory, params: Parameters,
                          constants: BlowupConstants, K: float = 10.0, *,
                          x_lo: float = 1e-3, x_hi: float = 1e-2,
                          n_samples: int = 40) -> tuple[list[FinalProfileSample], dict]:
    """Sample u* from the last resolved time and fit its small-x asymptote.

    Returns the samples plus a fit summary: the pure log-log slope, the
    slope of the log-corrected model, both residuals, and the Richardson
    stability of the samples from the last two snapshots.
    """
    if params.case == CASE_POWER:
        resolved = traj.sup_first.max()
    else:
        resolved = math.exp(params.q * traj.sup_first.max())
    if resolved < 1e6:
        raise ValueError("trajectory is not resolved to sup norm >= 1e6")
    last = traj.snapshots[-1]
    prev = traj.snapshots[-2] if len(traj.snapshots) > 1 else last
    min_x = last.grid[3]
    xs = np.geomspace(max(x_lo, min_x), x_hi, n_samples)
    if xs[0] > x_lo * 1.0001:
        pass  # core not resolved below min_x; samples start there
    u_at = _even_interp(last, "first")
    v_at = _even_interp(last, "second")
    u_prev = _even_interp(prev, "first")
    pu, pv = final_profile(params, constants, xs)
    us = u_at(xs)
    vs = v_at(xs)
    samples = [FinalProfileSample(x=float(x), u_star=float(u), v_star=float(v),
                                  predicted_u=float(a), predicted_v=float(c),
                                  ratio_u=float(u / a), ratio_v=float(v / c))
               for x, u, v, a, c in zip(xs, us, vs, pu, pv)]
    lx = np.log(xs)
    lg = np.abs(np.log(xs))
    if params.case == CASE_POWER:
        yobs = np.log(np.maximum(us, 1e-300))
        design_log = np.log(constants.b * xs * xs / (2.0 * lg))
    else:
        yobs = us
        design_log = np.log(2.0 * constants.b * lg / (params.p * xs * xs))
    slope, c1 = np.polyfit(lx, yobs, 1)
    fit1 = np.polyval([slope, c1], lx)
    slope_log, c2 = np.polyfit(design_log, yobs, 1)
    fit2 = np.polyval([slope_log, c2], design_log)
    resid_pure = float(np.sqrt(np.mean((yobs - fit1) ** 2)))
    resid_log = float(np.sqrt(np.mean((yobs - fit2) ** 2)))
    rich = float(np.abs((us - u_prev(xs)) / us).max())
    expected = -2.0 * constants.alpha if params.case == CASE_POWER else -2.0 / params.q
    fit = {
        "slope": float(slope),
        "slope_expected": float(expected),
        "slope_with_log": float(slope_log),
        "resid_pure": resid_pure,
        "resid_log": resid_log,
        "richardson_rel": rich,
        "t_last": float(last.time),
    }
    return samples, fit


def gK_limit_ratios(samples: list[FinalProfileSample], params: Parameters,
                    constants: BlowupConstants, K: float) -> list[float]:
    """u* against sigma^(-alpha) ghat_K(1) with |x| = K sqrt(sigma |log sigma|)."""
    out = []
    gK1 = constants.Gamma * (constants.b * K * K) ** (-constants.alpha)
    for smp in samples:
        sig = solve_sigma(smp.x, K)
        out.append(smp.u_star / (sig ** (-constants.alpha) * gK1))
    return out

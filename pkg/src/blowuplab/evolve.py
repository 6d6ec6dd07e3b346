"""Time evolution: physical-frame blowup runs and similarity-frame flows.

The physical solver is a radial method of lines.  The default integrator
is an embedded explicit Runge-Kutta 4(5) pair with local error control and
a diffusion stability cap; runs that chase the singularity over many
decades switch on the semi-implicit path (Strang split: half reaction,
Crank-Nicolson diffusion, half reaction) whose step tracks a fixed
relative change per step and therefore shrinks like T - t.

The similarity solver advances the rescaled system with classical RK4 at
the diffusion-limited step, pins the outer boundary to the slow-variable
profile, and records eigenmode coefficients at checkpoints.  On top of it
sits the shooting driver: bisection over the unstable-mode amplitude d0 of
the prepared initial data.  A double-precision flow cannot hold the
lambda = 1 direction for more than roughly ln(1/eps_machine) ~ 36
e-foldings, so long trapped runs are produced by multiple shooting: the
run is split into stages and at each stage boundary the unstable
coefficient is re-bisected by adding a correction along (f_0, g_0) chi
that never exceeds the trapping band |theta_0| <= A/s^2.  Each stage is a
genuine flow of the discrete system; the corrections are recorded on the
returned trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import NoBracketError, PositivityError, StiffnessError
from .frames import (FRAME_PHYSICAL, FRAME_SIMILARITY, CutoffSpec, RadialField,
                     RadialStencil, approx_profile, stencil_for)
from .params import CASE_EXP, CASE_POWER, BlowupConstants, Parameters, nonlinearity
from .spectral import ModeCoefficients, PolyPair, ProjectionOperator, WeightedSpace, \
    diagonalize, spaces_for

DT_FLOOR_FACTOR = 1e-14


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of both solvers; extra fields beyond the basics are plumbing."""

    cfl: float = 0.8
    dt_max: float = math.inf
    blowup_threshold: float = 1e8
    t_end: float | None = None
    s_end: float | None = None
    tolerance: float = 1e-8
    imex: bool = False
    rel_change: float = 0.02
    outer_bc: str = "neumann"  # "neumann" | "frozen"
    checkpoint_interval: float = 0.5
    max_steps: int = 5_000_000

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        for name in ("dt_max", "blowup_threshold", "tolerance", "rel_change",
                     "checkpoint_interval"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.outer_bc not in ("neumann", "frozen"):
            raise ValueError("outer_bc must be 'neumann' or 'frozen'")


@dataclass
class PhysicalTrajectory:
    t: np.ndarray
    sup_first: np.ndarray
    sup_second: np.ndarray
    snapshots: list[RadialField]
    status: str  # "blowup" | "t_end" | "max_steps"


@dataclass
class BlowupReport:
    """Blowup-time estimate and Type-I diagnostics of a physical run."""

    T_est: float
    T_ci: float
    typeI_ratio_series: list[tuple[float, float, float]]
    blowup_point_est: float
    available: bool


@dataclass
class SimilarityTrajectory:
    s: np.ndarray
    snapshots: list[RadialField]
    modes: list[ModeCoefficients] | None
    status: str  # "completed" | "escaped:<reason>" | "diverged"
    escape_sign: int = 0
    corrections: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class ShootResult:
    d0_star: float
    trajectory: SimilarityTrajectory
    bisections: int


# ---------------------------------------------------------------------------
# physical frame
# ---------------------------------------------------------------------------

class _PhysOp:
    """Radial Laplacian with outer boundary handling."""

    def __init__(self, grid: np.ndarray, dim: int, outer_bc: str):
        self.st = RadialStencil(grid, dim)
        self.grid = grid
        self.outer_bc = outer_bc
        self._h_end = grid[-1] - grid[-2]

    def lap(self, f: np.ndarray) -> np.ndarray:
        out = self.st.lap(f)
        if self.outer_bc == "neumann":
            out[-1] = 2.0 * (f[-2] - f[-1]) / self._h_end**2
        else:
            out[-1] = 0.0
        return out

    def banded(self, coef: float) -> np.ndarray:
        """ab-form of I - coef*Lap for solve_banded."""
        n = self.grid.size
        ab = np.zeros((3, n))
        ab[1] = 1.0
        st = self.st
        ab[1, 0] = 1.0 + coef * st._origin
        ab[0, 1] = -coef * st._origin
        ab[0, 2:] = -coef * st._lap_sup
        ab[1, 1:-1] = 1.0 - coef * st._lap_diag
        ab[2, :-2] = -coef * st._lap_sub
        if self.outer_bc == "neumann":
            ab[1, -1] = 1.0 + coef * 2.0 / self._h_end**2
            ab[2, -2] = -coef * 2.0 / self._h_end**2
        else:
            ab[1, -1] = 1.0
            ab[2, -2] = 0.0
        return ab

    def stability_dt(self, eta_max: float, drift_speed: float = 0.0) -> float:
        """Explicit-step cap: Gershgorin radius of the diffusion rows plus
        the advective frequency of a drift term (RK4 stability ~ 2.5)."""
        st = self.st
        lam = 2.0 * st._origin
        row = np.abs(st._lap_sub) + np.abs(st._lap_diag) + np.abs(st._lap_sup)
        lam = max(lam, row.max()) * eta_max
        h_min = np.diff(self.grid).min()
        omega = drift_speed / h_min
        return 2.5 / (lam + omega)


def _blowup_measure(params: Parameters, u: np.ndarray, v: np.ndarray) -> float:
    """The quantity compared against blowup_threshold."""
    if params.case == CASE_POWER:
        return max(np.abs(u).max(), np.abs(v).max())
    return float(np.exp(max(params.q * u.max(), params.p * v.max())))


# Dormand-Prince 4(5) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])


def evolve_physical(init: RadialField, params: Parameters,
                    config: SolverConfig) -> tuple[PhysicalTrajectory, BlowupReport]:
    """Advance the physical system until blowup threshold, t_end or trouble."""
    if init.frame != FRAME_PHYSICAL:
        raise ValueError("evolve_physical needs a physical-frame field")
    if not np.all(np.isfinite(init.first)) or not np.all(np.isfinite(init.second)):
        raise ValueError("initial data must be finite")
    if _blowup_measure(params, init.first, init.second) >= config.blowup_threshold:
        raise ValueError("blowup_threshold must exceed the initial sup norm")
    op = _PhysOp(init.grid, params.dim, config.outer_bc)
    if config.imex:
        return _evolve_imex(init, params, config, op)
    return _evolve_rk45(init, params, config, op)


def _rhs_physical(op: _PhysOp, params: Parameters, u: np.ndarray, v: np.ndarray):
    fu, gv = nonlinearity(params, u, v)
    r1 = op.lap(u) + fu
    r2 = params.mu * op.lap(v) + gv
    if op.outer_bc == "frozen":
        r1[-1] = 0.0
        r2[-1] = 0.0
    return r1, r2


def _evolve_rk45(init, params, config, op):
    u = init.first.copy()
    v = init.second.copy()
    t = init.time
    dt_stab = config.cfl * op.stability_dt(max(1.0, params.mu))
    dt = min(dt_stab, config.dt_max)
    atol = config.tolerance * max(1.0, _blowup_measure(params, u, v))
    ts, s1, s2 = [t], [np.abs(u).max()], [np.abs(v).max()]
    snaps = [replace(init, first=u.copy(), second=v.copy())]
    last_snap_measure = _blowup_measure(params, u, v)
    status = "max_steps"
    horizon = config.t_end if config.t_end is not None else math.inf
    for _ in range(config.max_steps):
        if t >= horizon or (math.isfinite(horizon)
                            and horizon - t <= DT_FLOOR_FACTOR * max(1.0, abs(t))):
            status = "t_end"
            break
        if math.isfinite(horizon):
            dt = min(dt, horizon - t)
        if dt < DT_FLOOR_FACTOR * max(1.0, abs(t)):
            raise StiffnessError(f"time step underflow at t = {t!r}")
        ks = []
        ok = True
        for i in range(7):
            uu, vv = u, v
            if i:
                au = sum(a * k[0] for a, k in zip(_DP_A[i], ks))
                av = sum(a * k[1] for a, k in zip(_DP_A[i], ks))
                uu = u + dt * au
                vv = v + dt * av
            if not (np.all(np.isfinite(uu)) and np.all(np.isfinite(vv))):
                ok = False
                break
            ks.append(_rhs_physical(op, params, uu, vv))
        if ok:
            du5 = sum(b * k[0] for b, k in zip(_DP_B5, ks))
            dv5 = sum(b * k[1] for b, k in zip(_DP_B5, ks))
            du4 = sum(b * k[0] for b, k in zip(_DP_B4, ks))
            dv4 = sum(b * k[1] for b, k in zip(_DP_B4, ks))
            u5 = u + dt * du5
            v5 = v + dt * dv5
            scale_u = atol + config.tolerance * np.abs(u5)
            scale_v = atol + config.tolerance * np.abs(v5)
            err = max(np.abs(dt * (du5 - du4) / scale_u).max(),
                      np.abs(dt * (dv5 - dv4) / scale_v).max())
            ok = err <= 1.0 and np.all(np.isfinite(u5)) and np.all(np.isfinite(v5))
        if not ok:
            dt *= 0.25
            continue
        u, v = u5, v5
        t += dt
        ts.append(t)
        s1.append(np.abs(u).max())
        s2.append(np.abs(v).max())
        measure = _blowup_measure(params, u, v)
        if measure >= last_snap_measure * 10.0 ** 0.25:
            snaps.append(RadialField(grid=init.grid, first=u.copy(), second=v.copy(),
                                     frame=FRAME_PHYSICAL, time=t, case=params.case))
            last_snap_measure = measure
        if measure >= config.blowup_threshold:
            status = "blowup"
            break
        grow = 0.9 * err ** -0.2 if err > 0.0 else 5.0
        dt = min(dt * min(5.0, max(0.2, grow)), dt_stab, config.dt_max)
    else:
        status = "max_steps"
    snaps.append(RadialField(grid=init.grid, first=u.copy(), second=v.copy(),
                             frame=FRAME_PHYSICAL, time=t, case=params.case))
    traj = PhysicalTrajectory(t=np.array(ts), sup_first=np.array(s1),
                              sup_second=np.array(s2), snapshots=snaps, status=status)
    return traj, _blowup_report(traj, params)


def _evolve_imex(init, params, config, op):
    u = init.first.copy()
    v = init.second.copy()
    t = init.time
    frozen = config.outer_bc == "frozen"
    dt = min(config.dt_max, 1e-3 * max(1.0, abs(t)))
    ts, s1, s2 = [t], [np.abs(u).max()], [np.abs(v).max()]
    snaps = [replace(init, first=u.copy(), second=v.copy())]
    last_snap_measure = _blowup_measure(params, u, v)
    status = "max_steps"
    horizon = config.t_end if config.t_end is not None else math.inf

    def react_half(uu, vv, h):
        # Heun on the reaction pair over h
        f1, g1 = nonlinearity(params, uu, vv)
        up = uu + h * f1
        vp = vv + h * g1
        f2, g2 = nonlinearity(params, up, vp)
        du = 0.5 * h * (f1 + f2)
        dv = 0.5 * h * (g1 + g2)
        if frozen:
            du[-1] = 0.0
            dv[-1] = 0.0
        return uu + du, vv + dv

    for _ in range(config.max_steps):
        if t >= horizon or (math.isfinite(horizon)
                            and horizon - t <= DT_FLOOR_FACTOR * max(1.0, abs(t))):
            status = "t_end"
            break
        if math.isfinite(horizon):
            dt = min(dt, horizon - t)
        if dt < DT_FLOOR_FACTOR * max(1.0, abs(t)):
            raise StiffnessError(f"time step underflow at t = {t!r}")
        u1, v1 = react_half(u, v, 0.5 * dt)
        cu = 0.5 * dt
        cv = 0.5 * dt * params.mu
        rhs_u = u1 + cu * op.lap(u1)
        rhs_v = v1 + cv * op.lap(v1)
        if frozen:
            rhs_u[-1] = u1[-1]
            rhs_v[-1] = v1[-1]
        u2 = solve_banded((1, 1), op.banded(cu), rhs_u)
        v2 = solve_banded((1, 1), op.banded(cv), rhs_v)
        u3, v3 = react_half(u2, v2, 0.5 * dt)
        if not (np.all(np.isfinite(u3)) and np.all(np.isfinite(v3))):
            dt *= 0.5
            continue
        if params.case == CASE_POWER:
            ref = np.maximum(np.abs(u), 1e-9 * max(1.0, np.abs(u).max()))
            refv = np.maximum(np.abs(v), 1e-9 * max(1.0, np.abs(v).max()))
            change = max(np.abs((u3 - u) / ref).max(), np.abs((v3 - v) / refv).max())
        else:
            change = max(params.q * np.abs(u3 - u).max(), params.p * np.abs(v3 - v).max())
        if change > 4.0 * config.rel_change:
            dt *= 0.5
            continue
        u, v = u3, v3
        t += dt
        ts.append(t)
        s1.append(np.abs(u).max())
        s2.append(np.abs(v).max())
        measure = _blowup_measure(params, u, v)
        if measure >= last_snap_measure * 10.0 ** 0.25:
            snaps.append(RadialField(grid=init.grid, first=u.copy(), second=v.copy(),
                                     frame=FRAME_PHYSICAL, time=t, case=params.case))
            last_snap_measure = measure
        if measure >= config.blowup_threshold:
            status = "blowup"
            break
        if change > 0.0:
            dt = min(dt * min(1.4, max(0.5, config.rel_change / change)), config.dt_max)
    snaps.append(RadialField(grid=init.grid, first=u.copy(), second=v.copy(),
                             frame=FRAME_PHYSICAL, time=t, case=params.case))
    traj = PhysicalTrajectory(t=np.array(ts), sup_first=np.array(s1),
                              sup_second=np.array(s2), snapshots=snaps, status=status)
    return traj, _blowup_report(traj, params)


def _blowup_report(traj: PhysicalTrajectory, params: Parameters) -> BlowupReport:
    """Fit the Type-I ansatz on the last resolved decade and extrapolate."""
    p, q = params.p, params.q
    if params.case == CASE_POWER:
        alpha = (p + 1.0) / (p * q - 1.0)
        beta = (q + 1.0) / (p * q - 1.0)
        z = traj.sup_first ** (-1.0 / alpha)
        growth = traj.sup_first
    else:
        z = np.exp(-q * traj.sup_first) / p
        growth = np.exp(q * traj.sup_first)
    last = traj.snapshots[-1]
    point = float(last.grid[int(np.argmax(last.first))])
    win = growth >= growth.max() / 10.0
    if traj.status != "blowup" or win.sum() < 8:
        return BlowupReport(T_est=math.nan, T_ci=math.nan, typeI_ratio_series=[],
                            blowup_point_est=point, available=False)
    tw = traj.t[win]
    zw = z[win]
    slope, icept = np.polyfit(tw, zw, 1)
    if slope >= 0.0:
        return BlowupReport(T_est=math.nan, T_ci=math.nan, typeI_ratio_series=[],
                            blowup_point_est=point, available=False)
    T_est = -icept / slope
    half = tw.size // 2
    s2, i2 = np.polyfit(tw[half:], zw[half:], 1)
    T_half = -i2 / s2 if s2 < 0.0 else math.nan
    T_ci = abs(T_est - T_half)
    rem = np.maximum(T_est - tw, 1e-300)
    if params.case == CASE_POWER:
        ru = rem ** alpha * traj.sup_first[win]
        rv = rem ** beta * traj.sup_second[win]
    else:
        ru = p * rem * np.exp(q * traj.sup_first[win])
        rv = q * rem * np.exp(p * traj.sup_second[win])
    series = list(zip(tw.tolist(), ru.tolist(), rv.tolist()))
    osc = ru.max() / ru.min() - 1.0 if ru.min() > 0.0 else math.inf
    available = bool(osc < 0.10)
    if not available:
        T_est = math.nan
    return BlowupReport(T_est=float(T_est), T_ci=float(T_ci),
                        typeI_ratio_series=series, blowup_point_est=point,
                        available=available)


# ---------------------------------------------------------------------------
# similarity frame
# ---------------------------------------------------------------------------

def _sim_rhs(F, P, grid, st, params, constants):
    if params.case == CASE_POWER:
        p, q = params.p, params.q
        r1 = st.lap(F) - 0.5 * grid * st.d1(F) - constants.alpha * F \
            + np.sign(P) * np.abs(P) ** p
        r2 = params.mu * st.lap(P) - 0.5 * grid * st.d1(P) - constants.beta * P \
            + np.sign(F) * np.abs(F) ** q
        return r1, r2
    if F.min() <= 1e-12 or P.min() <= 1e-12:
        i = int(np.argmin(np.minimum(F, P)))
        raise PositivityError("rescaled field crossed the positivity floor",
                              location=float(grid[i]),
                              value=float(min(F.min(), P.min())))
    dF = st.d1(F)
    dP = st.d1(P)
    r1 = st.lap(F) - 0.5 * grid * dF - F - dF * dF / F + params.q * F * P
    r2 = params.mu * st.lap(P) - 0.5 * grid * dP - P \
        - params.mu * dP * dP / P + params.p * F * P
    return r1, r2


def evolve_similarity(init: RadialField, params: Parameters, constants: BlowupConstants,
                      config: SolverConfig,
                      projection: ProjectionOperator | None = None,
                      mode_order: int = 4,
                      stop_when=None) -> SimilarityTrajectory:
    """Advance the rescaled system in s with checkpointing.

    ``projection`` enables eigenmode recording at checkpoints; ``stop_when``
    is called there as stop_when(s, field, modes) and may return
    (reason, sign) to end the run early.  Divergence (sup beyond ten times
    the constant state) is reported as an escape, not an error.
    """
    if init.frame != FRAME_SIMILARITY:
        raise ValueError("evolve_similarity needs a similarity-frame field")
    if config.s_end is None or config.s_end <= init.time:
        raise ValueError("config.s_end must exceed the initial s")
    grid = init.grid
    st = stencil_for(grid, params.dim)
    op = _PhysOp(grid, params.dim, "frozen")
    dt = min(config.cfl * op.stability_dt(max(1.0, params.mu),
                                          drift_speed=0.5 * grid[-1]),
             config.dt_max)
    cap = 10.0 * max(constants.Gamma, constants.gamma)
    F = init.first.copy()
    P = init.second.copy()
    s = init.time
    spaces = None
    if projection is not None:
        spaces = (projection.space_first, projection.space_second)

    def snapshot():
        return RadialField(grid=grid, first=F.copy(), second=P.copy(),
                           frame=FRAME_SIMILARITY, time=s, case=params.case)

    def checkpoint_modes():
        if projection is None:
            return None
        from scipy.interpolate import PchipInterpolator
        f1 = PchipInterpolator(grid, F)(spaces[0].nodes)
        f2 = PchipInterpolator(grid, P)(spaces[1].nodes)
        phi1 = PchipInterpolator(grid, prof1)(spaces[0].nodes)
        phi2 = PchipInterpolator(grid, prof2)(spaces[1].nodes)
        coef = projection.coefficients(f1 - phi1, f2 - phi2)
        theta = np.zeros(mode_order + 1)
        tilde = np.zeros(mode_order + 1)
        for c, pair in zip(coef, projection.basis):
            if pair.degree <= mode_order:
                (theta if pair.family == "plus" else tilde)[pair.degree] = c
        return ModeCoefficients(theta=theta, theta_tilde=tilde, M=mode_order,
                                residual_minus_norm_first=0.0,
                                residual_minus_norm_second=0.0)

    prof1, prof2 = approx_profile(params, constants, grid, s)
    ss = [s]
    snaps = [snapshot()]
    modes = [checkpoint_modes()] if projection is not None else None
    if modes is not None and stop_when is not None:
        hit = stop_when(s, snaps[0], modes[0])
        if hit:
            return SimilarityTrajectory(s=np.array(ss), snapshots=snaps, modes=modes,
                                        status=f"escaped:{hit[0]}", escape_sign=hit[1])
    status = "completed"
    sign = 0
    next_cp = s + config.checkpoint_interval
    steps = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while s < config.s_end - 1e-12:
            h = min(dt, config.s_end - s, next_cp - s)
            k1 = _sim_rhs(F, P, grid, st, params, constants)
            k2 = _sim_rhs(F + 0.5 * h * k1[0], P + 0.5 * h * k1[1], grid, st,
                          params, constants)
            k3 = _sim_rhs(F + 0.5 * h * k2[0], P + 0.5 * h * k2[1], grid, st,
                          params, constants)
            k4 = _sim_rhs(F + h * k3[0], P + h * k3[1], grid, st, params, constants)
            F = F + (h / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
            P = P + (h / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
            s += h
            steps += 1
            prof1, prof2 = approx_profile(params, constants, grid, s)
            F[-1] = prof1[-1]
            P[-1] = prof2[-1]
            blown = False
            if steps % 16 == 0 or s >= next_cp - 1e-12 or s >= config.s_end - 1e-12:
                m = max(np.abs(F).max(), np.abs(P).max())
                blown = not math.isfinite(m) or m > cap
            if blown:
                status = "diverged"
                break
            if s >= next_cp - 1e-12 or s >= config.s_end - 1e-12:
                next_cp = s + config.checkpoint_interval
                ss.append(s)
                snaps.append(snapshot())
                cp = checkpoint_modes()
                if modes is not None:
                    modes.append(cp)
                if stop_when is not None:
                    hit = stop_when(s, snaps[-1], cp)
                    if hit:
                        status = f"escaped:{hit[0]}"
                        sign = hit[1]
                        break
    return SimilarityTrajectory(s=np.array(ss), snapshots=snaps, modes=modes,
                                status=status, escape_sign=sign)


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------

def _theta0_stop(A: float):
    def stop(s, _field, cp):
        if cp is None:
            return None
        band = A / (s * s)
        th = cp.theta[0]
        if abs(th) > band:
            return ("theta0_band", 1 if th > 0 else -1)
        return None
    return stop


def default_similarity_grid(y_max: float = 48.0, points: int = 513) -> np.ndarray:
    return np.linspace(0.0, y_max, points)


def shoot(params: Parameters, constants: BlowupConstants, A: float, s0: float,
          bracket: tuple[float, float], s_end: float, *,
          M: int = 4, K: float = 1.0, grid: np.ndarray | None = None,
          config: SolverConfig | None = None,
          basis: list[PolyPair] | None = None,
          spaces: tuple[WeightedSpace, WeightedSpace] | None = None,
          stage_length: float = 10.0,
          checkpoint_interval: float = 0.25,
          max_bisections_per_stage: int = 60) -> ShootResult:
    """Bisection shoot on the unstable-mode amplitude of the prepared data.

    Radial symmetry makes theta_1 vanish identically, so the shoot is
    one-dimensional in d0.  The candidate is trapped when theta_0 stays in
    the band A/s^2 up to the stage end; stages beyond the first bisect a
    correction along (f_0, g_0) chi added at the stage boundary.
    """
    from .verify import build_initial_data_power

    if grid is None:
        grid = default_similarity_grid()
    if basis is None:
        basis = diagonalize(params, constants, M)
    if spaces is None:
        spaces = spaces_for(params)
    projection = ProjectionOperator([p for p in basis if p.degree <= M],
                                    spaces[0], spaces[1])
    base_cfg = config or SolverConfig()
    stop = _theta0_stop(A)
    f0 = next(p for p in basis if p.degree == 0 and p.family == "plus")

    def run(initial: RadialField, target: float) -> SimilarityTrajectory:
        cfg = replace(base_cfg, s_end=target, checkpoint_interval=checkpoint_interval)
        return evolve_similarity(initial, params, constants, cfg,
                                 projection=projection, mode_order=M, stop_when=stop)

    def corrected(state: RadialField, eps: float) -> RadialField:
        chi = CutoffSpec(K=K, s=state.time).chi(grid)
        return replace(state,
                       first=state.first + eps * f0.eval_first(grid) * chi,
                       second=state.second + eps * f0.eval_second(grid) * chi)

    n_bisect = 0

    def classify(initial, target):
        nonlocal n_bisect
        n_bisect += 1
        tr = run(initial, target)
        if tr.status == "completed":
            return 0, tr
        if tr.status.startswith("escaped:theta0_band"):
            return tr.escape_sign, tr
        # divergence without a clean band exit: use the sign of the last theta0
        th = tr.modes[-1].theta[0] if tr.modes and tr.modes[-1] is not None else 0.0
        return (1 if th >= 0 else -1), tr

    # stage 0: bisection over d0
    lo, hi = float(bracket[0]), float(bracket[1])
    s_target = min(s0 + stage_length, s_end)

    def data_for(d0):
        return build_initial_data_power(params, constants, A, s0, d0, 0.0,
                                        grid=grid, K=K, basis=basis)

    sign_lo, tr_lo = classify(data_for(lo), s_target)
    sign_hi, tr_hi = classify(data_for(hi), s_target)
    if sign_lo == 0 or sign_hi == 0:
        # an endpoint is already trapped through the stage; take it
        d0, survivor = (lo, tr_lo) if sign_lo == 0 else (hi, tr_hi)
    else:
        if sign_lo == sign_hi:
            raise NoBracketError(
                f"both bracket endpoints escape with sign {sign_lo:+d}")
        d0 = 0.5 * (lo + hi)
        survivor = None
        for _ in range(max_bisections_per_stage):
            sgn, tr = classify(data_for(d0), s_target)
            if sgn == 0:
                survivor = tr
                break
            if sgn == sign_lo:
                lo = d0
            else:
                hi = d0
            d0 = 0.5 * (lo + hi)
        if survivor is None:
            raise NoBracketError("stage bisection exhausted without a trapped run")
    d0_star = d0

    all_s = list(survivor.s)
    all_snaps = list(survivor.snapshots)
    all_modes = list(survivor.modes)
    corrections: list[tuple[float, float]] = []

    # later stages: re-bisect a correction along the unstable direction
    while all_s[-1] < s_end - 1e-9:
        s_here = all_s[-1]
        state = all_snaps[-1]
        s_target = min(s_here + stage_length, s_end)
        width = 2.0 * A / (s_here * s_here)
        lo, hi = -width, width
        sign_lo, tr_lo = classify(corrected(state, lo), s_target)
        sign_hi, tr_hi = classify(corrected(state, hi), s_target)
        if sign_lo == sign_hi and sign_lo != 0:
            raise NoBracketError(
                f"stage at s = {s_here:.3f}: both corrections escape {sign_lo:+d}")
        survivor = None
        if sign_lo == 0:
            eps, survivor = lo, tr_lo
        elif sign_hi == 0:
            eps, survivor = hi, tr_hi
        else:
            eps = 0.0
            for _ in range(max_bisections_per_stage):
                sgn, tr = classify(corrected(state, eps), s_target)
                if sgn == 0:
                    survivor = tr
                    break
                if sgn == sign_lo:
                    lo = eps
                else:
                    hi = eps
                eps = 0.5 * (lo + hi)
            if survivor is None:
                raise NoBracketError(
                    f"stage at s = {s_here:.3f} exhausted without a trapped run")
        corrections.append((s_here, eps))
        all_s.extend(survivor.s[1:])
        all_snaps.extend(survivor.snapshots[1:])
        all_modes.extend(survivor.modes[1:])

    traj = SimilarityTrajectory(s=np.array(all_s), snapshots=all_snaps,
                                modes=all_modes, status="completed",
                                escape_sign=0, corrections=corrections)
    return ShootResult(d0_star=d0_star, trajectory=traj, bisections=n_bisect)

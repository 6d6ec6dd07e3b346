"""Finite-dimensional shadow dynamics of the blowup construction.

Two small ODE systems are tracked here:

* the (a0, a2) pair of the inner expansion,

      a0' = a0,        a2' = c_star * a2^2,

  whose relevant branch obeys s*a2(s) -> -1/c_star (the quadratic mode is
  the neutral direction, a0 the unstable one);

* the intermediate-region orbit

      du/dtau = exp(p*v),   dv/dtau = exp(q*u)

  with the K0-dependent initial state whose explicit solution is

      u(tau) = -(1/q) log[p (1 - tau + K0^2/(32(mu+1)))],
      v(tau) = -(1/p) log[q (1 - tau + K0^2/(32(mu+1)))].

Also the constant-data power orbit started from the outer profile at |z|=K,

      ghat_K(tau) = Gamma (1 - tau + b K^2)^(-alpha),
      hhat_K(tau) = gamma (1 - tau + b K^2)^(-beta).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import BlowupConstants, Parameters

_A0_CAP = 1e10


@dataclass(frozen=True)
class ReducedState:
    a0: float
    a2: float
    s: float


@dataclass(frozen=True)
class IntermediateState:
    u_hat: float
    v_hat: float
    tau: float


@dataclass(frozen=True)
class Trajectory:
    """Columns of an integrated trajectory; ``grid`` is s or tau."""

    grid: np.ndarray
    columns: dict[str, np.ndarray]
    terminated_early: bool = False
    reason: str = ""

    def to_csv(self, path, independent: str = "s") -> None:
        names = [independent, *self.columns.keys()]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for i in range(self.grid.size):
                w.writerow([f"{self.grid[i]:.17g}"]
                           + [f"{col[i]:.17g}" for col in self.columns.values()])


def integrate_reduced(params: Parameters, constants: BlowupConstants,
                      init: ReducedState, s_end: float,
                      rtol: float = 1e-10, max_points: int = 2001) -> Trajectory:
    """Integrate the (a0, a2) shadow system from init.s to s_end.

    The O(.) bookkeeping terms are dropped; the a0 channel grows like e^s
    and is capped (reported, not fatal), the a2 channel can blow up in
    finite s when started positive.
    """
    if s_end <= init.s:
        raise ValueError("s_end must exceed init.s")
    c = constants.c_star

    def rhs(_s, y):
        return [y[0], c * y[1] * y[1]]

    def too_big(_s, y):
        return max(abs(y[0]), abs(y[1])) - _A0_CAP
    too_big.terminal = True
    too_big.direction = 1

    grid = np.linspace(init.s, s_end, max_points)
    sol = solve_ivp(rhs, (init.s, s_end), [init.a0, init.a2], t_eval=grid,
                    rtol=rtol, atol=1e-14, method="RK45", events=too_big)
    early = not sol.success or sol.status == 1
    reason = "amplitude cap reached" if sol.status == 1 else ("" if sol.success else sol.message)
    return Trajectory(grid=sol.t, columns={"a0": sol.y[0], "a2": sol.y[1]},
                      terminated_early=early, reason=reason)


def intermediate_offset(params: Parameters, K0: float) -> float:
    """The constant K0^2 / (32 (mu+1)) entering the intermediate orbit."""
    return K0 * K0 / (32.0 * (params.mu + 1.0))


def intermediate_initial_state(params: Parameters, K0: float) -> IntermediateState:
    c0 = intermediate_offset(params, K0)
    return IntermediateState(
        u_hat=-math.log(params.p * (1.0 + c0)) / params.q,
        v_hat=-math.log(params.q * (1.0 + c0)) / params.p,
        tau=0.0)


def intermediate_closed_form(params: Parameters, K0: float,
                             tau: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Explicit solution of the intermediate orbit with the K0 initial state."""
    c0 = intermediate_offset(params, K0)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau >= 1.0 + c0):
        raise ValueError("tau is past the orbit singularity 1 + K0^2/(32(mu+1))")
    w = 1.0 - tau + c0
    return -np.log(params.p * w) / params.q, -np.log(params.q * w) / params.p


def integrate_intermediate(params: Parameters, K0: float,
                           init: IntermediateState, tau_end: float,
                           rtol: float = 1e-10, max_points: int = 2001) -> Trajectory:
    """Integrate du/dtau = exp(p v), dv/dtau = exp(q u) from init.tau."""
    c0 = intermediate_offset(params, K0)
    if tau_end >= 1.0 + c0:
        raise ValueError("tau_end is past the orbit singularity")
    if tau_end <= init.tau:
        raise ValueError("tau_end must exceed init.tau")
    p, q = params.p, params.q

    def rhs(_tau, y):
        return [math.exp(p * y[1]), math.exp(q * y[0])]

    grid = np.linspace(init.tau, tau_end, max_points)
    sol = solve_ivp(rhs, (init.tau, tau_end), [init.u_hat, init.v_hat],
                    t_eval=grid, rtol=rtol, atol=1e-13, method="RK45")
    if not sol.success:
        raise RuntimeError(f"intermediate orbit integration failed: {sol.message}")
    return Trajectory(grid=sol.t, columns={"u_hat": sol.y[0], "v_hat": sol.y[1]})


def hat_gh(params: Parameters, constants: BlowupConstants, K: float,
           tau: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Constant-data power orbit started from the outer profile at |z| = K."""
    tau = np.asarray(tau, dtype=float)
    bK2 = constants.b * K * K
    if np.any(tau >= 1.0 + bK2):
        raise ValueError("tau is past the orbit pole 1 + b K^2")
    w = 1.0 - tau + bK2
    return (constants.Gamma * w ** (-constants.alpha),
            constants.gamma * w ** (-constants.beta))

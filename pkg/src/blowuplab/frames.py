"""Similarity-variable machinery: frames, rescaled systems, linearization.

The change of variables y = x/sqrt(T-t), s = -log(T-t) with

    power:        Phi = (T-t)^alpha u,   Psi = (T-t)^beta v
    exponential:  Phi = (T-t) e^(q u),   Psi = (T-t) e^(p v)

turns the blowup into the long-time behaviour of

    Phi_s = L_1 Phi - alpha Phi + |Psi|^(p-1) Psi            (power)
    Psi_s = L_mu Psi - beta Psi + |Phi|^(q-1) Phi

    Phi_s = L_1 Phi - Phi - |grad Phi|^2/Phi + q Phi Psi     (exponential)
    Psi_s = L_mu Psi - Psi - mu |grad Psi|^2/Psi + p Phi Psi

with L_eta = eta*lap - (y/2).grad.  Around the approximate profile
(phi, psi) the deviation (Lambda, Upsilon) obeys

    d/ds (Lambda, Upsilon) = (H + M)(Lambda, Upsilon) + V.(Lambda, Upsilon)
                             + F + R (+ G, exponential),

where V is the profile-induced potential, F collects the quadratic terms,
R is the profile residue and G the gradient-term remainder.  All spatial
operators here share one finite-difference stencil so that the identity
between the assembled decomposition and the full right-hand side is exact
to rounding.

Fields are radial samples on r_0 = 0 < ... < r_J, even about the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PositivityError
from .params import (CASE_EXP, CASE_POWER, BlowupConstants, Parameters,
                     approx_profile, approx_profile_ds, signed_power)
from .spectral import coupling_matrix

FRAME_PHYSICAL = "physical"
FRAME_SIMILARITY = "similarity"
POSITIVITY_FLOOR = 1e-12
EXP_OVERFLOW_LOG = 700.0


# ---------------------------------------------------------------------------
# field containers
# ---------------------------------------------------------------------------

def _check_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 8:
        raise ValueError("grid must be a 1-d array with at least 8 points")
    if grid[0] != 0.0:
        raise ValueError("radial grid must start at r = 0")
    if np.any(np.diff(grid) <= 0.0):
        raise ValueError("grid must be strictly increasing")
    return grid


@dataclass(frozen=True)
class RadialField:
    """Sampled component pair on a radial grid with frame metadata."""

    grid: np.ndarray
    first: np.ndarray
    second: np.ndarray
    frame: str
    time: float  # t in the physical frame, s in the similarity frame
    case: str

    def __post_init__(self):
        grid = _check_grid(self.grid)
        object.__setattr__(self, "grid", grid)
        for name in ("first", "second"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"{name} must match the grid shape")
            object.__setattr__(self, name, arr)
        if self.frame not in (FRAME_PHYSICAL, FRAME_SIMILARITY):
            raise ValueError(f"unknown frame {self.frame!r}")
        if (self.case == CASE_EXP and self.frame == FRAME_SIMILARITY
                and (np.any(self.first <= 0.0) or np.any(self.second <= 0.0))):
            raise PositivityError("exponential similarity fields must be positive")

    def sup(self) -> tuple[float, float]:
        return float(np.abs(self.first).max()), float(np.abs(self.second).max())


@dataclass(frozen=True)
class LinearizedField:
    """Deviation pair (Lambda, Upsilon) from the approximate profile."""

    grid: np.ndarray
    first: np.ndarray
    second: np.ndarray
    frame: str
    time: float
    case: str

    def __post_init__(self):
        grid = _check_grid(self.grid)
        object.__setattr__(self, "grid", grid)
        for name in ("first", "second"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"{name} must match the grid shape")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, arr)


# ---------------------------------------------------------------------------
# cutoff
# ---------------------------------------------------------------------------

def chi0(r: float | np.ndarray) -> np.ndarray:
    """Clamped quintic bump: 1 on [0,1], 0 on [2,inf), C^2 monotone between."""
    r = np.asarray(r, dtype=float)
    t = np.clip(r - 1.0, 0.0, 1.0)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


@dataclass(frozen=True)
class CutoffSpec:
    """chi(y, s) = chi0(|y| / (K sqrt(s)))."""

    K: float
    s: float

    def __post_init__(self):
        if self.K <= 0.0 or self.s < 1.0:
            raise ValueError("cutoff needs K > 0 and s >= 1")

    def chi(self, y: np.ndarray) -> np.ndarray:
        return chi0(np.abs(np.asarray(y, float)) / (self.K * math.sqrt(self.s)))


# ---------------------------------------------------------------------------
# finite-difference stencil (nonuniform, radial)
# ---------------------------------------------------------------------------

class RadialStencil:
    """Second-order 3-point first/second derivatives and radial Laplacian.

    The origin row uses even symmetry (f'(0) = 0, lap f(0) = dim * f''(0));
    the outer row is one-sided and normally overwritten by a boundary
    condition during evolution.
    """

    def __init__(self, grid: np.ndarray, dim: int):
        grid = np.asarray(grid, dtype=float)
        self.grid = grid
        self.dim = int(dim)
        hm = np.diff(grid)[:-1]   # h_i^- for interior points
        hp = np.diff(grid)[1:]    # h_i^+
        den = hm * hp * (hm + hp)
        self._d1_sub = -hp * hp / den
        self._d1_diag = (hp * hp - hm * hm) / den
        self._d1_sup = hm * hm / den
        self._d2_sub = 2.0 * hp / den
        self._d2_diag = -2.0 * (hm + hp) / den
        self._d2_sup = 2.0 * hm / den
        r_in = grid[1:-1]
        self._lap_sub = self._d2_sub + (dim - 1.0) / r_in * self._d1_sub
        self._lap_diag = self._d2_diag + (dim - 1.0) / r_in * self._d1_diag
        self._lap_sup = self._d2_sup + (dim - 1.0) / r_in * self._d1_sup
        self._origin = 2.0 * dim / grid[1] ** 2
        # one-sided end rows on (x_{J-2}, x_{J-1}, x_J)
        h1 = grid[-2] - grid[-3]
        h2 = grid[-1] - grid[-2]
        self._d1_end = np.array([h2 / (h1 * (h1 + h2)),
                                 -(h1 + h2) / (h1 * h2),
                                 (h1 + 2.0 * h2) / (h2 * (h1 + h2))])
        d2_end = np.array([2.0 / (h1 * (h1 + h2)),
                           -2.0 / (h1 * h2),
                           2.0 / (h2 * (h1 + h2))])
        self._lap_end = d2_end + (dim - 1.0) / grid[-1] * self._d1_end

    def d1(self, f: np.ndarray) -> np.ndarray:
        out = np.empty_like(f)
        out[0] = 0.0
        out[1:-1] = self._d1_sub * f[:-2] + self._d1_diag * f[1:-1] + self._d1_sup * f[2:]
        out[-1] = self._d1_end @ f[-3:]
        return out

    def lap(self, f: np.ndarray) -> np.ndarray:
        out = np.empty_like(f)
        out[0] = self._origin * (f[1] - f[0])
        out[1:-1] = self._lap_sub * f[:-2] + self._lap_diag * f[1:-1] + self._lap_sup * f[2:]
        out[-1] = self._lap_end @ f[-3:]
        return out

    def L_eta(self, eta: float, f: np.ndarray) -> np.ndarray:
        return eta * self.lap(f) - 0.5 * self.grid * self.d1(f)


_STENCILS: dict[tuple[int, int, float, float], RadialStencil] = {}


def stencil_for(grid: np.ndarray, dim: int) -> RadialStencil:
    key = (grid.size, dim, float(grid[1]), float(grid[-1]))
    st = _STENCILS.get(key)
    if st is None or st.grid.shape != grid.shape or not np.array_equal(st.grid, grid):
        st = RadialStencil(grid, dim)
        _STENCILS[key] = st
    return st


# ---------------------------------------------------------------------------
# frame changes
# ---------------------------------------------------------------------------

def to_similarity(field: RadialField, params: Parameters, constants: BlowupConstants,
                  a: float = 0.0, target_grid: np.ndarray | None = None) -> RadialField:
    """Map a physical-frame field at time t < T to the similarity frame.

    The radial representation assumes the blowup point is the origin; a
    nonzero ``a`` must be absorbed by re-centering the physical grid first.
    """
    if field.frame != FRAME_PHYSICAL:
        raise ValueError("field is not in the physical frame")
    if a != 0.0:
        raise ValueError("nonzero blowup point: re-center the physical grid instead")
    T = constants.T
    t = field.time
    if t >= T:
        raise ValueError("t must be below T")
    rem = T - t
    s = -math.log(rem)
    y = field.grid / math.sqrt(rem)
    if params.case == CASE_POWER:
        first = rem ** constants.alpha * field.first
        second = rem ** constants.beta * field.second
    else:
        e1 = params.q * field.first - s
        e2 = params.p * field.second - s
        if e1.max() > EXP_OVERFLOW_LOG or e2.max() > EXP_OVERFLOW_LOG:
            raise ValueError("exponential similarity transform overflows")
        first = np.exp(e1)
        second = np.exp(e2)
    out = RadialField(grid=y, first=first, second=second,
                      frame=FRAME_SIMILARITY, time=s, case=params.case)
    if target_grid is not None:
        out = resample(out, target_grid)
    return out


def from_similarity(field: RadialField, params: Parameters, constants: BlowupConstants,
                    target_grid: np.ndarray | None = None) -> RadialField:
    """Inverse of :func:`to_similarity`."""
    if field.frame != FRAME_SIMILARITY:
        raise ValueError("field is not in the similarity frame")
    s = field.time
    rem = math.exp(-s)
    x = field.grid * math.sqrt(rem)
    if params.case == CASE_POWER:
        first = rem ** (-constants.alpha) * field.first
        second = rem ** (-constants.beta) * field.second
    else:
        first = (np.log(field.first) + s) / params.q
        second = (np.log(field.second) + s) / params.p
    out = RadialField(grid=x, first=first, second=second,
                      frame=FRAME_PHYSICAL, time=constants.T - rem, case=params.case)
    if target_grid is not None:
        out = resample(out, target_grid)
    return out


def resample(field, target_grid: np.ndarray):
    """Monotone cubic resample of a field onto a new radial grid."""
    target_grid = np.asarray(target_grid, dtype=float)
    if target_grid[-1] > field.grid[-1] + 1e-12:
        raise ValueError("target grid extends beyond the field support")
    first = PchipInterpolator(field.grid, field.first)(target_grid)
    second = PchipInterpolator(field.grid, field.second)(target_grid)
    return replace(field, grid=target_grid, first=first, second=second)


# ---------------------------------------------------------------------------
# rescaled system and linearization
# ---------------------------------------------------------------------------

def _require_positive(field_values: np.ndarray, grid: np.ndarray, what: str) -> None:
    i = int(np.argmin(field_values))
    if field_values[i] <= POSITIVITY_FLOOR:
        raise PositivityError(
            f"{what} crossed the positivity floor at y = {grid[i]:.6g}",
            location=float(grid[i]), value=float(field_values[i]))


def similarity_rhs(field: RadialField, params: Parameters, constants: BlowupConstants,
                   stencil: RadialStencil | None = None) -> tuple[np.ndarray, np.ndarray]:
    """d/ds of (Phi, Psi) in the similarity frame, discretized."""
    if field.frame != FRAME_SIMILARITY:
        raise ValueError("similarity_rhs needs a similarity-frame field")
    st = stencil or stencil_for(field.grid, params.dim)
    y = field.grid
    F, P = field.first, field.second
    if params.case == CASE_POWER:
        r1 = st.lap(F) - 0.5 * y * st.d1(F) - constants.alpha * F + signed_power(P, params.p)
        r2 = params.mu * st.lap(P) - 0.5 * y * st.d1(P) - constants.beta * P \
            + signed_power(F, params.q)
        return r1, r2
    _require_positive(F, y, "Phi")
    _require_positive(P, y, "Psi")
    dF = st.d1(F)
    dP = st.d1(P)
    r1 = st.lap(F) - 0.5 * y * dF - F - dF * dF / F + params.q * F * P
    r2 = params.mu * st.lap(P) - 0.5 * y * dP - P - params.mu * dP * dP / P \
        + params.p * F * P
    return r1, r2


def linearize(field: RadialField, params: Parameters,
              constants: BlowupConstants) -> LinearizedField:
    """Subtract the approximate profile: (Lambda, Upsilon) = (Phi, Psi) - (phi, psi)."""
    if field.frame != FRAME_SIMILARITY:
        raise ValueError("linearize needs a similarity-frame field")
    phi, psi = approx_profile(params, constants, field.grid, field.time)
    return LinearizedField(grid=field.grid, first=field.first - phi,
                           second=field.second - psi, frame=field.frame,
                           time=field.time, case=params.case)


def delinearize(lin: LinearizedField, params: Parameters,
                constants: BlowupConstants) -> RadialField:
    """Add the approximate profile back to a deviation pair."""
    phi, psi = approx_profile(params, constants, lin.grid, lin.time)
    return RadialField(grid=lin.grid, first=lin.first + phi, second=lin.second + psi,
                       frame=FRAME_SIMILARITY, time=lin.time, case=params.case)


@dataclass(frozen=True)
class LinearizedTerms:
    """Evaluated pieces of the linearized right-hand side."""

    V_apply: tuple[np.ndarray, np.ndarray]
    F: tuple[np.ndarray, np.ndarray]
    R: tuple[np.ndarray, np.ndarray]
    G: tuple[np.ndarray, np.ndarray]
    V_entries: dict[str, np.ndarray]


def profile_residue(params: Parameters, constants: BlowupConstants, grid: np.ndarray,
                    s: float, stencil: RadialStencil | None = None
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Residue R of the approximate profile under the rescaled flow.

    Spatial derivatives are discrete (shared stencil), the s-derivative is
    the closed form, so R combines exactly with the other pieces.
    """
    st = stencil or stencil_for(grid, params.dim)
    phi, psi = approx_profile(params, constants, grid, s)
    dphi_ds, dpsi_ds = approx_profile_ds(params, constants, grid, s)
    if params.case == CASE_POWER:
        r1 = -dphi_ds + st.lap(phi) - 0.5 * grid * st.d1(phi) \
            - constants.alpha * phi + signed_power(psi, params.p)
        r2 = -dpsi_ds + params.mu * st.lap(psi) - 0.5 * grid * st.d1(psi) \
            - constants.beta * psi + signed_power(phi, params.q)
        return r1, r2
    d1phi = st.d1(phi)
    d1psi = st.d1(psi)
    r1 = -dphi_ds + st.lap(phi) - 0.5 * grid * d1phi - phi \
        + params.q * phi * psi - d1phi * d1phi / phi
    r2 = -dpsi_ds + params.mu * st.lap(psi) - 0.5 * grid * d1psi - psi \
        + params.p * phi * psi - params.mu * d1psi * d1psi / psi
    return r1, r2


def linearized_terms(lin: LinearizedField, params: Parameters,
                     constants: BlowupConstants,
                     stencil: RadialStencil | None = None) -> LinearizedTerms:
    """Evaluate the potential, quadratic, residue and gradient pieces."""
    st = stencil or stencil_for(lin.grid, params.dim)
    grid = lin.grid
    s = lin.time
    lam, ups = lin.first, lin.second
    phi, psi = approx_profile(params, constants, grid, s)
    R = profile_residue(params, constants, grid, s, st)
    if params.case == CASE_POWER:
        p, q = params.p, params.q
        V12 = p * (np.abs(psi) ** (p - 1.0) - constants.gamma ** (p - 1.0))
        V21 = q * (np.abs(phi) ** (q - 1.0) - constants.Gamma ** (q - 1.0))
        V_apply = (V12 * ups, V21 * lam)
        F = (signed_power(ups + psi, p) - signed_power(psi, p)
             - p * np.abs(psi) ** (p - 1.0) * ups,
             signed_power(lam + phi, q) - signed_power(phi, q)
             - q * np.abs(phi) ** (q - 1.0) * lam)
        G = (np.zeros_like(lam), np.zeros_like(ups))
        entries = {"V12": V12, "V21": V21}
        return LinearizedTerms(V_apply=V_apply, F=F, R=R, G=G, V_entries=entries)
    p, q, mu = params.p, params.q, params.mu
    V11 = q * psi - 1.0
    V12 = q * (phi - 1.0 / p)
    V21 = p * (psi - 1.0 / q)
    V22 = p * phi - 1.0
    V_apply = (V11 * lam + V12 * ups, V21 * lam + V22 * ups)
    F = (q * lam * ups, p * lam * ups)
    Phi = lam + phi
    Psi = ups + psi
    _require_positive(Phi, grid, "Lambda + phi")
    _require_positive(Psi, grid, "Upsilon + psi")
    dPhi = st.d1(Phi)
    dPsi = st.d1(Psi)
    dphi = st.d1(phi)
    dpsi = st.d1(psi)
    G = (-dPhi * dPhi / Phi + dphi * dphi / phi,
         -mu * dPsi * dPsi / Psi + mu * dpsi * dpsi / psi)
    entries = {"V11": V11, "V12": V12, "V21": V21, "V22": V22}
    return LinearizedTerms(V_apply=V_apply, F=F, R=R, G=G, V_entries=entries)


def linear_operator_apply(lin: LinearizedField, params: Parameters,
                          constants: BlowupConstants,
                          stencil: RadialStencil | None = None
                          ) -> tuple[np.ndarray, np.ndarray]:
    """Discrete (H + M) applied to a deviation pair."""
    st = stencil or stencil_for(lin.grid, params.dim)
    M = coupling_matrix(params, constants)
    lam, ups = lin.first, lin.second
    out1 = st.L_eta(1.0, lam) + M[0, 0] * lam + M[0, 1] * ups
    out2 = st.L_eta(params.mu, ups) + M[1, 0] * lam + M[1, 1] * ups
    return out1, out2


def assemble_linearized_rhs(lin: LinearizedField, params: Parameters,
                            constants: BlowupConstants,
                            stencil: RadialStencil | None = None
                            ) -> tuple[np.ndarray, np.ndarray]:
    """(H+M) lin + V.lin + F + R + G; equals d/ds of the deviation pair."""
    st = stencil or stencil_for(lin.grid, params.dim)
    hm = linear_operator_apply(lin, params, constants, st)
    t = linearized_terms(lin, params, constants, st)
    return (hm[0] + t.V_apply[0] + t.F[0] + t.R[0] + t.G[0],
            hm[1] + t.V_apply[1] + t.F[1] + t.R[1] + t.G[1])


def truncate_outer(lin: LinearizedField, cutoff: CutoffSpec) -> LinearizedField:
    """(Lambda_e, Upsilon_e) = (1 - chi) (Lambda, Upsilon)."""
    w = 1.0 - cutoff.chi(lin.grid)
    return replace(lin, first=w * lin.first, second=w * lin.second)

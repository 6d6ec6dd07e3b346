"""Problem parameters, blowup constants and closed-form reference solutions.

The system under study is

    u_t = lap(u) + f(v),    v_t = mu*lap(v) + g(u)

with two nonlinearity cases:

    power:       f(v) = v|v|^(p-1),  g(u) = u|u|^(q-1),   p, q > 1
    exponential: f(v) = exp(p*v),    g(u) = exp(q*u),     p, q > 0

Everything here is closed form: the spatially homogeneous blowup orbit,
the blowup profiles in the slow variable z = y/sqrt(s), the approximate
profile used for linearization, and the constant bundle

    alpha = (p+1)/(pq-1),  beta = (q+1)/(pq-1)
    gamma^p = alpha*Gamma,  Gamma^q = beta*gamma
    b = (pq-1)(2pq+p+q) / (4pq(p+1)(q+1)(mu+1))        (power)
    b = 1/(2(mu+1))                                     (exponential)

The reduced quadratic-mode equation a2' = a2^2/c_star uses

    c_star = (pq-1)/b   (power),    c_star = pq/b = 2pq(mu+1)   (exponential)

so that the inner expansion coefficient of |y|^2/s equals alpha*b (resp. b)
and s*a2(s) -> -1/c_star.  Note the power-case c_star is the reciprocal of
the equally common normalization c = b/(pq-1); both are recorded in the
docs, the reciprocal convention is what makes matching and the reduced
dynamics consistent here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

CASE_POWER = "power"
CASE_EXP = "exp"
_CASES = (CASE_POWER, CASE_EXP)


class ProfileKind(str, Enum):
    """Selector for the closed-form profile evaluators."""

    INNER_APPROX = "inner"
    OUTER_PROFILE = "outer"
    FINAL_PROFILE = "final"
    ODE_SOLUTION = "ode"


@dataclass(frozen=True)
class Parameters:
    """Nonlinearity exponents, diffusivity ratio and space dimension.

    ``dim > 1`` assumes radial symmetry throughout the laboratory.
    """

    p: float
    q: float
    mu: float = 1.0
    case: str = CASE_POWER
    dim: int = 1

    def __post_init__(self):
        if self.case not in _CASES:
            raise ValueError(f"unknown case {self.case!r}, expected one of {_CASES}")
        if self.case == CASE_POWER and (self.p <= 1.0 or self.q <= 1.0):
            raise ValueError("power case requires p > 1 and q > 1")
        if self.case == CASE_EXP and (self.p <= 0.0 or self.q <= 0.0):
            raise ValueError("exponential case requires p > 0 and q > 0")
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError("dim must be an integer >= 1")


@dataclass(frozen=True)
class BlowupConstants:
    """Derived constant bundle for one parameter set.

    In the exponential case ``Gamma``/``gamma`` hold the constant fixed
    point (1/p, 1/q) of the rescaled system and ``alpha = beta = 1`` are
    the linear damping coefficients; the power-law ODE exponents do not
    exist there.
    """

    alpha: float
    beta: float
    Gamma: float
    gamma: float
    b: float
    c_star: float
    T: float = 1.0


def compute_constants(params: Parameters, T: float = 1.0) -> BlowupConstants:
    """Solve the constant equations in closed form.

    gamma^p = alpha*Gamma and Gamma^q = beta*gamma give
    Gamma = (alpha*beta^p)^(1/(pq-1)), gamma = (beta*alpha^q)^(1/(pq-1)).
    """
    if T <= 0.0:
        raise ValueError("T must be positive")
    p, q, mu = params.p, params.q, params.mu
    if params.case == CASE_POWER:
        pq1 = p * q - 1.0
        alpha = (p + 1.0) / pq1
        beta = (q + 1.0) / pq1
        Gamma = (alpha * beta**p) ** (1.0 / pq1)
        gamma = (beta * alpha**q) ** (1.0 / pq1)
        b = pq1 * (2.0 * p * q + p + q) / (4.0 * p * q * (p + 1.0) * (q + 1.0) * (mu + 1.0))
        c_star = pq1 / b
    else:
        alpha = beta = 1.0
        Gamma = 1.0 / p
        gamma = 1.0 / q
        b = 1.0 / (2.0 * (mu + 1.0))
        c_star = p * q / b
    return BlowupConstants(alpha=alpha, beta=beta, Gamma=Gamma, gamma=gamma,
                           b=b, c_star=c_star, T=T)


def ode_blowup_solution(params: Parameters, constants: BlowupConstants,
                        t: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spatially homogeneous blowup orbit (ubar, vbar) at time t in [0, T)."""
    t = np.asarray(t, dtype=float)
    if np.any(t >= constants.T) or np.any(t < 0.0):
        raise ValueError("t must satisfy 0 <= t < T")
    rem = constants.T - t
    if params.case == CASE_POWER:
        return constants.Gamma * rem ** (-constants.alpha), constants.gamma * rem ** (-constants.beta)
    u = -np.log(params.p * rem) / params.q
    v = -np.log(params.q * rem) / params.p
    return u, v


def outer_profile(params: Parameters, constants: BlowupConstants,
                  z: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Blowup profile pair (Phi0, Psi0) in the slow variable z = y/sqrt(s)."""
    z = np.asarray(z, dtype=float)
    w = 1.0 + constants.b * z * z
    if params.case == CASE_POWER:
        return constants.Gamma * w ** (-constants.alpha), constants.gamma * w ** (-constants.beta)
    return 1.0 / (params.p * w), 1.0 / (params.q * w)


def outer_profile_derivative(params: Parameters, constants: BlowupConstants,
                             z: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """d/dz of the outer profile pair."""
    z = np.asarray(z, dtype=float)
    b = constants.b
    w = 1.0 + b * z * z
    if params.case == CASE_POWER:
        d1 = -2.0 * constants.alpha * b * constants.Gamma * z * w ** (-constants.alpha - 1.0)
        d2 = -2.0 * constants.beta * b * constants.gamma * z * w ** (-constants.beta - 1.0)
        return d1, d2
    return -2.0 * b * z / (params.p * w * w), -2.0 * b * z / (params.q * w * w)


def final_profile(params: Parameters, constants: BlowupConstants,
                  x: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise-in-space limit (u*, v*) as t -> T, valid for 0 < |x| < 1.

    Power case:  u*(x) ~ Gamma * (b x^2 / (2|log x|))^(-alpha), same shape
    for v* with beta.  Exponential case: the logarithmic analogue
    u*(x) ~ (1/q) log(2b |log x| / (p x^2)).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("final profile is singular at x = 0; need x > 0")
    if np.any(x >= 1.0):
        raise ValueError("final profile asymptote needs |x| < 1 (log factor)")
    lg = np.abs(np.log(x))
    if params.case == CASE_POWER:
        arg = constants.b * x * x / (2.0 * lg)
        return constants.Gamma * arg ** (-constants.alpha), constants.gamma * arg ** (-constants.beta)
    u = np.log(2.0 * constants.b * lg / (params.p * x * x)) / params.q
    v = np.log(2.0 * constants.b * lg / (params.q * x * x)) / params.p
    return u, v


def eval_profile(kind: ProfileKind, params: Parameters, constants: BlowupConstants,
                 point: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate one of the closed-form reference profiles.

    ``point`` is |z| for OUTER_PROFILE and INNER_APPROX, |x - a| for
    FINAL_PROFILE and the time t for ODE_SOLUTION.  INNER_APPROX is the
    quadratic truncation of the outer profile, i.e. the matched inner
    behaviour Gamma*(1 - alpha*b*z^2) (resp. (1/p)*(1 - b*z^2)).
    """
    kind = ProfileKind(kind)
    if kind == ProfileKind.OUTER_PROFILE:
        return outer_profile(params, constants, point)
    if kind == ProfileKind.FINAL_PROFILE:
        return final_profile(params, constants, point)
    if kind == ProfileKind.ODE_SOLUTION:
        return ode_blowup_solution(params, constants, point)
    z = np.asarray(point, dtype=float)
    bz2 = constants.b * z * z
    if params.case == CASE_POWER:
        return (constants.Gamma * (1.0 - constants.alpha * bz2),
                constants.gamma * (1.0 - constants.beta * bz2))
    return (1.0 - bz2) / params.p, (1.0 - bz2) / params.q


def profile_corrections(params: Parameters, constants: BlowupConstants) -> tuple[float, float]:
    """Constant parts of the O(1/s) terms in the approximate profile."""
    p, q, mu = params.p, params.q, params.mu
    c = constants.c_star
    if params.case == CASE_POWER:
        return (-2.0 * constants.Gamma * p * (1.0 - mu) / c,
                -2.0 * constants.gamma * q * (mu - 1.0) / c)
    return 2.0 * mu * q / c, 2.0 * p / c


def approx_profile(params: Parameters, constants: BlowupConstants,
                   y: float | np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """Approximate blowup profile (phi, psi)(y, s) = outer profile + O(1/s) term."""
    if s < 1.0:
        raise ValueError("approximate profile needs s >= 1")
    y = np.asarray(y, dtype=float)
    f0, g0 = outer_profile(params, constants, y / math.sqrt(s))
    cphi, cpsi = profile_corrections(params, constants)
    return f0 + cphi / s, g0 + cpsi / s


def approx_profile_ds(params: Parameters, constants: BlowupConstants,
                      y: float | np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """d/ds of the approximate profile, exact in closed form."""
    if s < 1.0:
        raise ValueError("approximate profile needs s >= 1")
    y = np.asarray(y, dtype=float)
    z = y / math.sqrt(s)
    d1, d2 = outer_profile_derivative(params, constants, z)
    cphi, cpsi = profile_corrections(params, constants)
    return -z * d1 / (2.0 * s) - cphi / s**2, -z * d2 / (2.0 * s) - cpsi / s**2


def signed_power(x: np.ndarray, e: float) -> np.ndarray:
    """x |x|^(e-1), the odd extension of the power nonlinearity."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** e


def nonlinearity(params: Parameters, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reaction pair (f(v), g(u)) for the physical-frame system."""
    if params.case == CASE_POWER:
        return signed_power(v, params.p), signed_power(u, params.q)
    return np.exp(params.p * np.asarray(v, float)), np.exp(params.q * np.asarray(u, float))

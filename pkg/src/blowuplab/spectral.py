"""Weighted Gaussian spectral machinery for the linearized operator.

The rescaled system linearized around its constant state is governed by
H + M where H = diag(L_1, L_mu),

    L_eta f = eta*lap(f) - (y/2).grad(f),

self-adjoint in L^2 with weight rho_eta(y) = (4 pi)^(-N/2) exp(-|y|^2/(4 eta)),
and M is a constant 2x2 coupling matrix.  On radial monomials

    L_eta r^k = eta*k*(k + N - 2) r^(k-2) - (k/2) r^k,

so H + M is block lower-triangular in the degree grading and its spectrum
consists of the two ladders lambda = m_plus - n/2 and lambda = m_minus - n/2
where m_plus = 1 and m_minus are the eigenvalues of M.  Eigenpairs are
polynomial pairs (f_n, g_n) built by back-substitution down the grading:
the degree-n block fixes the leading vector, each lower block k solves

    (M - (lambda + k/2) I) c_k = -(k+2)(k+N) diag(1, mu) c_{k+2}.

A singular lower block (possible when the two ladders cross, e.g. the
exponential coupling at degree gap 4) is resolved by the minimal-norm
solution; the right-hand side is then in range up to rounding, and a large
residual raises :class:`ResonanceError`.

Quadrature: dimension 1 uses scaled Gauss-Hermite on the full line (the
natural inner product there mixes polynomial parities; sampled fields are
taken even about the origin), dimension >= 2 uses generalized
Gauss-Laguerre in x = r^2/(4 eta), exact for even radial polynomials.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_genlaguerre

from .errors import ResonanceError
from .params import CASE_POWER, BlowupConstants, Parameters

DEFAULT_QUADRATURE_NODES = 96


# ---------------------------------------------------------------------------
# operator on monomial coefficient vectors
# ---------------------------------------------------------------------------

def apply_L(eta: float, dim: int, poly: np.ndarray) -> np.ndarray:
    """Apply L_eta to a radial polynomial given by monomial coefficients.

    ``poly[k]`` is the coefficient of r^k; the result has the same length.
    """
    poly = np.asarray(poly, dtype=float)
    out = -0.5 * np.arange(poly.size) * poly
    if poly.size > 2:
        k = np.arange(poly.size - 2)
        out[:-2] += eta * (k + 2) * (k + dim) * poly[2:]
    return out


def coupling_matrix(params: Parameters, constants: BlowupConstants) -> np.ndarray:
    """Constant coupling matrix of the linearization around the fixed point."""
    p, q = params.p, params.q
    if params.case == CASE_POWER:
        return np.array([
            [-constants.alpha, p * constants.gamma ** (p - 1.0)],
            [q * constants.Gamma ** (q - 1.0), -constants.beta],
        ])
    return np.array([[0.0, q / p], [p / q, 0.0]])


def minus_eigenvalue_offset(params: Parameters) -> float:
    """The lower eigenvalue of the coupling matrix (the minus ladder offset)."""
    if params.case == CASE_POWER:
        return -(params.p + 1.0) * (params.q + 1.0) / (params.p * params.q - 1.0)
    return -1.0


def ladder_eigenvalue(params: Parameters, family: str, n: int) -> float:
    """Exact eigenvalue of the degree-n member of one family."""
    if family == "plus":
        return 1.0 - 0.5 * n
    return minus_eigenvalue_offset(params) - 0.5 * n


# ---------------------------------------------------------------------------
# eigenpolynomial pairs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolyPair:
    """Polynomial eigenpair of H + M in monomial coefficients (low to high)."""

    coeffs_first: np.ndarray
    coeffs_second: np.ndarray
    degree: int
    eigenvalue: float
    family: str  # "plus" | "minus"

    def eval_first(self, r: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(r, self.coeffs_first)

    def eval_second(self, r: np.ndarray) -> np.ndarray:
        return np.polynomial.polynomial.polyval(r, self.coeffs_second)


def _lead_vectors(params: Parameters, constants: BlowupConstants) -> tuple[np.ndarray, np.ndarray]:
    """Unit eigenvectors of M for m_plus = 1 and m_minus, sign-normalized."""
    p, q = params.p, params.q
    if params.case == CASE_POWER:
        al = constants.alpha
        lm = minus_eigenvalue_offset(params)
        vp = np.array([p * constants.gamma ** (p - 1.0), 1.0 + al])
        vm = np.array([p * constants.gamma ** (p - 1.0), al + lm])
    else:
        vp = np.array([q, p])
        vm = np.array([q, -p])
    out = []
    for v in (vp, vm):
        v = v / np.linalg.norm(v)
        nz = v[np.nonzero(v)[0][0]]
        out.append(v if nz > 0 else -v)
    return out[0], out[1]


def _solve_block(A: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a 2x2 lower block, falling back to minimal norm at resonance."""
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    scale = max(np.abs(A).max(), 1e-300)
    if abs(det) > 1e-10 * scale * scale:
        return np.array([
            (A[1, 1] * rhs[0] - A[0, 1] * rhs[1]) / det,
            (A[0, 0] * rhs[1] - A[1, 0] * rhs[0]) / det,
        ])
    x, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = np.linalg.norm(A @ x - rhs)
    if resid > 1e-10 * max(1.0, np.linalg.norm(rhs)):
        raise ResonanceError(
            f"singular eigen-block has out-of-range forcing (residual {resid:.3e})")
    return x


def diagonalize(params: Parameters, constants: BlowupConstants, order: int) -> list[PolyPair]:
    """Construct both eigenpair families for degrees n = 0..order.

    Dimension 1 produces every degree; dimension >= 2 keeps even degrees
    only (radial symmetry).  Eigenvalues are exact by construction.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    M = coupling_matrix(params, constants)
    ew = np.linalg.eigvals(M)
    if abs(ew - 1.0).min() > 1e-9:
        raise AssertionError("coupling matrix lost its unit eigenvalue")
    vp, vm = _lead_vectors(params, constants)
    D = np.array([1.0, params.mu])
    dim = params.dim
    degrees = range(0, order + 1) if dim == 1 else range(0, order + 1, 2)
    pairs: list[PolyPair] = []
    for n in degrees:
        for family, lead in (("plus", vp), ("minus", vm)):
            lam = ladder_eigenvalue(params, family, n)
            cs = np.zeros((n + 1, 2))
            cs[n] = lead
            for k in range(n - 2, -1, -2):
                A = M - (lam + 0.5 * k) * np.eye(2)
                rhs = -(k + 2.0) * (k + dim) * (D * cs[k + 2])
                cs[k] = _solve_block(A, rhs)
            pairs.append(PolyPair(coeffs_first=cs[:, 0].copy(),
                                  coeffs_second=cs[:, 1].copy(),
                                  degree=n, eigenvalue=lam, family=family))
    return pairs


def apply_coupled_operator(params: Parameters, constants: BlowupConstants,
                           pair: PolyPair) -> tuple[np.ndarray, np.ndarray]:
    """Apply H + M to a polynomial pair; used for residual checks."""
    M = coupling_matrix(params, constants)
    c1, c2 = pair.coeffs_first, pair.coeffs_second
    out1 = apply_L(1.0, params.dim, c1) + M[0, 0] * c1 + M[0, 1] * c2
    out2 = apply_L(params.mu, params.dim, c2) + M[1, 0] * c1 + M[1, 1] * c2
    return out1, out2


# ---------------------------------------------------------------------------
# weighted quadrature spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightedSpace:
    """Quadrature rule for integration against rho_eta(r) r^(dim-1).

    ``nodes`` are nonnegative radii.  In dimension 1 the rule represents
    the full line: each node stands for the mirror pair (+r, -r) and
    ``weights`` carry the one-sided factor, so an integral of h is
    sum_i w_i (h(r_i) + h(-r_i)).  In dimension >= 2 the rule is one-sided
    and includes the sphere area and the weight normalization.
    """

    eta: float
    dim: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def quadrature(self) -> list[tuple[float, float]]:
        return list(zip(self.nodes.tolist(), self.weights.tolist()))

    def integrate_samples(self, values: np.ndarray) -> float:
        """Integrate a sampled radial function (even about the origin)."""
        values = np.asarray(values, dtype=float)
        if self.dim == 1:
            return float(2.0 * self.weights @ values)
        return float(self.weights @ values)

    def eval_poly(self, coeffs: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        """Polynomial values at (+nodes, -nodes); the mirror is None for dim >= 2."""
        pv = np.polynomial.polynomial.polyval
        plus = pv(self.nodes, np.asarray(coeffs, float))
        if self.dim == 1:
            return plus, pv(-self.nodes, np.asarray(coeffs, float))
        return plus, None

    def integrate_poly(self, coeffs: np.ndarray) -> float:
        plus, minus = self.eval_poly(coeffs)
        if minus is None:
            return float(self.weights @ plus)
        return float(self.weights @ (plus + minus))

    def inner_poly(self, c1: np.ndarray, c2: np.ndarray) -> float:
        p1, m1 = self.eval_poly(c1)
        p2, m2 = self.eval_poly(c2)
        if m1 is None:
            return float(self.weights @ (p1 * p2))
        return float(self.weights @ (p1 * p2 + m1 * m2))

    def moment(self, k: int) -> float:
        """Exact k-th moment of the weight; odd moments vanish for dim 1."""
        if self.dim == 1 and k % 2 == 1:
            return 0.0
        ln = (0.5 * k) * math.log(4.0) + 0.5 * (k + self.dim) * math.log(self.eta) \
            + gammaln(0.5 * (k + self.dim)) - gammaln(0.5 * self.dim)
        return math.exp(ln)


def build_space(eta: float, dim: int, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> WeightedSpace:
    """Gauss rule for the weight rho_eta r^(dim-1), exact to degree 2*n_nodes - 1."""
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    if dim == 1:
        if n_nodes % 2 == 1:
            n_nodes += 1  # symmetric rule without a zero node
        t, w = np.polynomial.hermite.hermgauss(n_nodes)
        pos = t > 0.0
        nodes = 2.0 * math.sqrt(eta) * t[pos]
        weights = (4.0 * math.pi) ** -0.5 * 2.0 * math.sqrt(eta) * w[pos]
    else:
        x, w = roots_genlaguerre(n_nodes, 0.5 * dim - 1.0)
        nodes = 2.0 * np.sqrt(eta * x)
        area = 2.0 * math.pi ** (0.5 * dim) / math.gamma(0.5 * dim)
        weights = area * (4.0 * math.pi) ** (-0.5 * dim) * 2.0 ** (dim - 1) * eta ** (0.5 * dim) * w
    order = np.argsort(nodes)
    return WeightedSpace(eta=float(eta), dim=int(dim),
                         nodes=nodes[order], weights=weights[order])


def spaces_for(params: Parameters, n_nodes: int = DEFAULT_QUADRATURE_NODES
               ) -> tuple[WeightedSpace, WeightedSpace]:
    """The (rho_1, rho_mu) space pair used by all projections."""
    return build_space(1.0, params.dim, n_nodes), build_space(params.mu, params.dim, n_nodes)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeCoefficients:
    """Coefficients of the eigenpair decomposition plus remainder norms.

    ``theta[n]``/``theta_tilde[n]`` are the plus/minus family coefficients
    at degree n (zero where the degree is absent, e.g. odd degrees in
    dimension >= 2).  The residual norms are sup over the grid of
    |remainder| / (1 + |y|^(M+1)) per component.
    """

    theta: np.ndarray
    theta_tilde: np.ndarray
    M: int
    residual_minus_norm_first: float
    residual_minus_norm_second: float


class ProjectionOperator:
    """Dual-basis projector onto a finite eigenpair family.

    The two families are not mutually orthogonal under the product weight
    <(f,g),(F,G)> = <f,F>_rho1 + <g,G>_rho_mu, so coefficients come from a
    Gram solve.  Pairs are normalized internally to keep the Gram system
    well conditioned; returned coefficients refer to the pairs as given.
    """

    def __init__(self, basis: list[PolyPair], space_first: WeightedSpace,
                 space_second: WeightedSpace):
        if space_first.dim != space_second.dim:
            raise ValueError("space dimensions disagree")
        self.basis = list(basis)
        self.space_first = space_first
        self.space_second = space_second
        m = len(self.basis)
        # dual weight rows, split by mirror side in dimension 1:
        # g_k = W1p[k].f1(+nodes) + W1m[k].f1(-nodes) + (same for component 2)
        self._W1p = np.empty((m, space_first.nodes.size))
        self._W1m = np.zeros((m, space_first.nodes.size))
        self._W2p = np.empty((m, space_second.nodes.size))
        self._W2m = np.zeros((m, space_second.nodes.size))
        for k, pair in enumerate(self.basis):
            p1, m1 = space_first.eval_poly(pair.coeffs_first)
            p2, m2 = space_second.eval_poly(pair.coeffs_second)
            self._W1p[k] = space_first.weights * p1
            self._W2p[k] = space_second.weights * p2
            if m1 is not None:
                self._W1m[k] = space_first.weights * m1
            if m2 is not None:
                self._W2m[k] = space_second.weights * m2
        gram = np.empty((m, m))
        for i, pi in enumerate(self.basis):
            for j, pj in enumerate(self.basis):
                gram[i, j] = (space_first.inner_poly(pi.coeffs_first, pj.coeffs_first)
                              + space_second.inner_poly(pi.coeffs_second, pj.coeffs_second))
        self._norms = np.sqrt(np.diag(gram))
        self._gram_n = gram / np.outer(self._norms, self._norms)

    def coefficients(self, field_first_nodes: np.ndarray,
                     field_second_nodes: np.ndarray,
                     field_first_mirror: np.ndarray | None = None,
                     field_second_mirror: np.ndarray | None = None) -> np.ndarray:
        """Coefficients from field samples taken at the two node sets.

        The mirror arguments hold values at the reflected nodes in
        dimension 1; omitting them assumes an even field, the storage
        convention of all radial data here.
        """
        if field_first_mirror is None:
            field_first_mirror = field_first_nodes
        if field_second_mirror is None:
            field_second_mirror = field_second_nodes
        g = (self._W1p @ field_first_nodes + self._W1m @ field_first_mirror
             + self._W2p @ field_second_nodes + self._W2m @ field_second_mirror)
        theta_n = np.linalg.solve(self._gram_n, g / self._norms)
        return theta_n / self._norms


def _interp(grid: np.ndarray, values: np.ndarray, at: np.ndarray) -> np.ndarray:
    # quintic spline: node evaluation has to be accurate for polynomial
    # content well beyond cubic order (the basis reaches degree M)
    from scipy.interpolate import make_interp_spline
    k = 5 if grid.size >= 6 else 3
    return make_interp_spline(grid, values, k=k)(at)


def project(spaces: tuple[WeightedSpace, WeightedSpace], basis: list[PolyPair],
            field, M: int, cutoff=None,
            operator: ProjectionOperator | None = None) -> ModeCoefficients:
    """Decompose a similarity-frame field pair into eigenmode coefficients.

    ``field`` is any object with ``grid``, ``first``, ``second`` arrays
    (even about the origin).  Pairs of degree > M in the basis are ignored.
    When ``cutoff`` is given the remainder norms are taken over its support
    |y| <= 2 K sqrt(s) only; the far field is tracked separately by the
    outer truncation.
    """
    if operator is not None:
        used_op = operator
    else:
        sel = [p for p in basis if p.degree <= M]
        if not sel:
            raise ValueError("basis has no pairs of degree <= M")
        used_op = ProjectionOperator(sel, spaces[0], spaces[1])
    grid = np.asarray(field.grid, float)
    for sp in spaces:
        if sp.nodes.max() > grid[-1] + 1e-12:
            raise ValueError(
                f"field grid (max {grid[-1]:g}) does not cover the quadrature "
                f"support (max node {sp.nodes.max():g})")
    f1 = _interp(grid, np.asarray(field.first, float), spaces[0].nodes)
    f2 = _interp(grid, np.asarray(field.second, float), spaces[1].nodes)
    coef = used_op.coefficients(f1, f2)

    theta = np.zeros(M + 1)
    tilde = np.zeros(M + 1)
    recon1 = np.zeros_like(grid)
    recon2 = np.zeros_like(grid)
    for c, pair in zip(coef, used_op.basis):
        if pair.family == "plus":
            theta[pair.degree] = c
        else:
            tilde[pair.degree] = c
        recon1 += c * pair.eval_first(grid)
        recon2 += c * pair.eval_second(grid)
    rem1 = np.asarray(field.first, float) - recon1
    rem2 = np.asarray(field.second, float) - recon2
    quot = 1.0 + np.abs(grid) ** (M + 1)
    mask = np.ones_like(grid, dtype=bool)
    if cutoff is not None:
        mask = grid <= 2.0 * cutoff.K * math.sqrt(cutoff.s)
        if not mask.any():
            mask = np.ones_like(grid, dtype=bool)
    return ModeCoefficients(
        theta=theta, theta_tilde=tilde, M=M,
        residual_minus_norm_first=float(np.abs(rem1 / quot)[mask].max()),
        residual_minus_norm_second=float(np.abs(rem2 / quot)[mask].max()),
    )


# ---------------------------------------------------------------------------
# regression export
# ---------------------------------------------------------------------------

def basis_to_json(basis: list[PolyPair]) -> str:
    """Serialize a basis (coefficients, eigenvalues, family tags)."""
    data = [{
        "degree": p.degree,
        "family": p.family,
        "eigenvalue": p.eigenvalue,
        "coeffs_first": p.coeffs_first.tolist(),
        "coeffs_second": p.coeffs_second.tolist(),
    } for p in basis]
    return json.dumps(data, indent=2)


def basis_from_json(text: str) -> list[PolyPair]:
    return [PolyPair(coeffs_first=np.array(d["coeffs_first"], float),
                     coeffs_second=np.array(d["coeffs_second"], float),
                     degree=int(d["degree"]), eigenvalue=float(d["eigenvalue"]),
                     family=str(d["family"]))
            for d in json.loads(text)]

"""Finite spectral machinery of the flow in the Gaussian-weighted L2 space.

The weighted space splits into mutually orthogonal finite-dimensional
subspaces V_m spanned by m-th derivatives of the equilibrium Gaussian; each
is invariant under the generator, whose restriction to V_m is a small matrix
acting on Hermite coefficients.  This module builds those matrices, their
spectra and decay exponents, evolves coefficient states exactly through
matrix exponentials, projects Gaussian mixtures onto the basis, and tests
membership in the resolvent region of the hypoelliptic dual operator.

All of this assumes normalized coordinates (equilibrium covariance = I).
The orthonormal basis is h_alpha = He_alpha(x) f_inf(x) / sqrt(alpha!) with
He_alpha a product of probabilist Hermite polynomials, so the quadratic
entropy of f_inf + sum a_alpha h_alpha is exactly half the sum of squared
coefficients with |alpha| >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import linalg
from .exceptions import DimensionError, QuadratureError
from .propagation import GaussianMixture
from .quadrature import QuadratureSpec


@lru_cache(maxsize=256)
def multi_indices(d: int, m: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of order m in dimension d, graded-lexicographic
    (leading axes dominant, e.g. (2,0), (1,1), (0,2))."""
    if d < 1 or m < 0:
        raise DimensionError(f"invalid multi-index parameters d={d}, m={m}")
    if d == 1:
        return ((m,),)
    out = []
    for a in range(m, -1, -1):
        out.extend((a,) + rest for rest in multi_indices(d - 1, m - a))
    return tuple(out)


def level_dimension(d: int, m: int) -> int:
    return math.comb(m + d - 1, d - 1)


@dataclass(frozen=True, eq=False)
class SubspaceRep:
    """Matrix representation of the generator on one coefficient level.

    ``Lm[i, j]`` is the coefficient of basis element ``basis[j]`` in the
    image of ``basis[i]``; coefficient vectors therefore evolve by
    ``a(t) = expm(Lm.T t) a(0)``.  The spectrum of ``Lm`` is the multiset
    {-sum(alpha * lambda)} over |alpha| = m for drift eigenvalues lambda.
    """

    m: int
    basis: tuple[tuple[int, ...], ...]
    Lm: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.basis)


def vm_matrix(C, m: int) -> SubspaceRep:
    """Generator restricted to the level-m subspace, on the orthonormal basis.

    Built from the commutation rule that moves one derivative of the
    equilibrium density through the generator; entries carry the
    sqrt(alpha!/beta!) rescaling of the orthonormal basis.  Level 0 is the
    kernel and returns the 1x1 zero matrix.  Level 1 equals minus the
    transposed drift.
    """
    Cm = linalg.as_square_matrix(C, "C")
    d = Cm.shape[0]
    if m < 0:
        raise DimensionError("level m must be >= 0")
    basis = multi_indices(d, m)
    pos = {alpha: i for i, alpha in enumerate(basis)}
    n = len(basis)
    L = np.zeros((n, n))
    for row, alpha in enumerate(basis):
        for i in range(d):
            ai = alpha[i]
            if ai == 0:
                continue
            for j in range(d):
                beta = list(alpha)
                beta[i] -= 1
                beta[j] += 1
                col = pos[tuple(beta)]
                L[row, col] -= Cm[j, i] * math.sqrt(ai * beta[j])
    return SubspaceRep(m=m, basis=basis, Lm=L)


def vm_spectrum_reference(C, m: int) -> tuple[complex, ...]:
    """Exact level-m spectrum multiset {-sum(alpha_i lambda_i) : |alpha| = m}
    from the drift eigenvalues (with algebraic multiplicity)."""
    Cm = linalg.as_square_matrix(C, "C")
    es = linalg.eigen_structure(Cm)
    lam: list[complex] = []
    for z, alg in zip(es.eigenvalues, es.algebraic):
        lam.extend([z] * alg)
    out = []
    for alpha in multi_indices(Cm.shape[0], m):
        out.append(-sum(a * z for a, z in zip(alpha, lam)))
    return tuple(out)


def _group_reference(ref: tuple[complex, ...], tol: float = 1e-8):
    """Group coinciding reference eigenvalues; returns (value, count) pairs."""
    vals = sorted(ref, key=lambda z: (z.real, z.imag))
    groups: list[list[complex]] = []
    for z in vals:
        if groups and abs(z - groups[-1][0]) <= tol:
            groups[-1].append(z)
        else:
            groups.append([z])
    return [(sum(g) / len(g), len(g)) for g in groups]


def spectrum_deviation(Lm: np.ndarray, reference, tol: float = 1e-8) -> float:
    """Largest deviation of the computed spectrum from a reference multiset.

    Computed eigenvalues are matched to the reference by optimal assignment
    and compared groupwise through their means: eigenvalues belonging to a
    Jordan chain of length q scatter like eps^(1/q) around the true value,
    but their mean is accurate to machine precision because the trace is
    exact, so the groupwise mean is the numerically meaningful comparison.
    """
    from scipy.optimize import linear_sum_assignment

    comp = np.linalg.eigvals(np.asarray(Lm))
    ref = np.asarray(
        sorted((complex(z) for z in reference), key=lambda z: (z.real, z.imag)),
        dtype=complex,
    )
    if comp.shape != ref.shape:
        raise DimensionError("spectrum sizes differ")
    cost = np.abs(ref[:, None] - comp[None, :])
    rows, cols = linear_sum_assignment(cost)
    assigned = {int(i): comp[int(j)] for i, j in zip(rows, cols)}
    worst = 0.0
    start = 0
    # sorted reference makes each coinciding group a contiguous index range
    for value, count in _group_reference(tuple(ref), tol=tol):
        members = [assigned[i] for i in range(start, start + count)]
        worst = max(worst, abs(sum(members) / count - value))
        start += count
    return float(worst)


def subspace_decay_exponent(C, k: int) -> tuple[float, int]:
    """Decay data for states supported on levels >= k.

    Returns ``(rate, n_k)``: the exponential rate 2 k mu and the maximal
    defect among eigenvalues of the level-k matrix with real part -k mu.
    The squared coefficient norm then obeys an envelope
    c (1 + t^(2 n_k)) e^(-rate t).

    Defects are computed at the exact reference eigenvalues (known from the
    drift spectrum): algebraic multiplicity is the reference multiplicity
    and geometric multiplicity the thresholded nullity of Lm - lambda I.
    This avoids clustering the numerically scattered eigenvalues of a
    defective level matrix.
    """
    if k < 1:
        raise DimensionError("level k must be >= 1")
    Cm = linalg.as_square_matrix(C, "C")
    mu, _ = linalg.mu_and_defect(Cm)
    rep = vm_matrix(Cm, k)
    ref = vm_spectrum_reference(Cm, k)
    dim = rep.dim
    atol = 1e-6 * max(1.0, k * mu)
    n_k = 0
    eye = np.eye(dim)
    for value, count in _group_reference(ref):
        if abs(value.real + k * mu) > atol:
            continue
        geo = dim - linalg.matrix_rank_sv(rep.Lm.astype(complex) - value * eye)
        geo = min(max(geo, 1), count)
        n_k = max(n_k, count - geo)
    return 2.0 * k * mu, int(n_k)


@dataclass(frozen=True, eq=False)
class HermiteState:
    """Coefficients on the orthonormal Gaussian-derivative basis.

    ``coeffs`` maps multi-indices to real coefficients; the zero index is
    the mass.  The quadratic entropy of the represented function is exactly
    ``0.5 * sum(a_alpha^2, |alpha| >= 1)``.
    """

    coeffs: dict[tuple[int, ...], float]
    dim: int
    m_max: int
    top_shell_mass: float | None = field(default=None, compare=False)

    def __post_init__(self):
        for alpha, a in self.coeffs.items():
            if len(alpha) != self.dim or any(x < 0 for x in alpha):
                raise DimensionError(f"bad multi-index {alpha} for dim {self.dim}")
            if sum(alpha) > self.m_max:
                raise DimensionError(f"index {alpha} exceeds m_max={self.m_max}")
            if not np.isfinite(a):
                raise DimensionError(f"non-finite coefficient at {alpha}")

    @property
    def mass(self) -> float:
        return float(self.coeffs.get((0,) * self.dim, 0.0))

    def e2(self) -> float:
        """Quadratic entropy 0.5 * sum of squared non-mass coefficients."""
        return 0.5 * float(
            sum(a * a for alpha, a in self.coeffs.items() if sum(alpha) >= 1)
        )

    def levels(self) -> tuple[int, ...]:
        return tuple(sorted({sum(alpha) for alpha in self.coeffs}))

    def level_vector(self, m: int) -> np.ndarray:
        basis = multi_indices(self.dim, m)
        return np.array([self.coeffs.get(alpha, 0.0) for alpha in basis])

    def min_level(self) -> int:
        """Smallest level >= 1 carrying a nonzero coefficient."""
        lv = [
            sum(alpha)
            for alpha, a in self.coeffs.items()
            if sum(alpha) >= 1 and a != 0.0
        ]
        if not lv:
            raise ValueError("state has no nonzero coefficients above the mass")
        return min(lv)

    def ratio_values(self, x: np.ndarray) -> np.ndarray:
        """Values of f / f_inf = sum a_alpha He_alpha / sqrt(alpha!) at x (N, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tables = _hermite_tables(x, self.m_max)
        out = np.zeros(x.shape[0])
        for alpha, a in self.coeffs.items():
            if a == 0.0:
                continue
            term = np.ones(x.shape[0])
            for axis, deg in enumerate(alpha):
                term = term * tables[axis][deg]
            out += (a / math.sqrt(_factorial_prod(alpha))) * term
        return out

    def ratio_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of f / f_inf at x, using d/dx He_n = n He_(n-1)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        tables = _hermite_tables(x, self.m_max)
        out = np.zeros_like(x)
        for alpha, a in self.coeffs.items():
            if a == 0.0:
                continue
            scale = a / math.sqrt(_factorial_prod(alpha))
            for j, dj in enumerate(alpha):
                if dj == 0:
                    continue
                term = np.ones(x.shape[0])
                for axis, deg in enumerate(alpha):
                    deg_eff = deg - 1 if axis == j else deg
                    term = term * tables[axis][deg_eff]
                out[:, j] += scale * dj * term
        return out


def _factorial_prod(alpha: tuple[int, ...]) -> int:
    p = 1
    for a in alpha:
        p *= math.factorial(a)
    return p


def _hermite_tables(x: np.ndarray, max_deg: int) -> list[np.ndarray]:
    """Per-axis probabilist Hermite values He_0..He_max at the points."""
    tables = []
    for axis in range(x.shape[1]):
        xs = x[:, axis]
        vals = np.empty((max_deg + 1, xs.shape[0]))
        vals[0] = 1.0
        if max_deg >= 1:
            vals[1] = xs
        for n in range(1, max_deg):
            vals[n + 1] = xs * vals[n] - n * vals[n - 1]
        tables.append(vals)
    return tables


def evolve_hermite(state: HermiteState, C, t: float) -> HermiteState:
    """Evolve a coefficient state exactly: per level, a(t) = expm(Lm^T t) a(0).

    The mass coefficient is untouched and the summed squared coefficients
    never increase (the generator is dissipative on every level).
    """
    Cm = linalg.as_square_matrix(C, "C")
    if Cm.shape[0] != state.dim:
        raise DimensionError("drift dimension does not match state dimension")
    if t == 0.0:
        return state
    new: dict[tuple[int, ...], float] = {}
    zero = (0,) * state.dim
    if zero in state.coeffs:
        new[zero] = state.coeffs[zero]
    for m in state.levels():
        if m == 0:
            continue
        rep = vm_matrix(Cm, m)
        a0 = state.level_vector(m)
        a_t = linalg.matrix_exp(rep.Lm.T, t) @ a0
        for alpha, val in zip(rep.basis, a_t):
            new[alpha] = float(val)
    return HermiteState(coeffs=new, dim=state.dim, m_max=state.m_max)


def project_gaussian(
    mix: GaussianMixture, m_max: int, quad: QuadratureSpec | None = None
) -> HermiteState:
    """Hermite coefficients of a mixture: a_alpha = int He_alpha f / sqrt(alpha!).

    Each component integral is taken by tensor Gauss-Hermite quadrature in
    the component's own coordinates, which is exact for polynomials once the
    order exceeds the requested level.  The returned state carries the l2
    norm of the top shell |alpha| = m_max as a truncation-tail proxy.
    """
    if quad is None:
        quad = QuadratureSpec.for_dim(mix.d)
    if quad.rule == "gauss-hermite" and quad.order < m_max + 1:
        raise QuadratureError(
            f"quadrature order {quad.order} too low for level {m_max}; "
            f"need at least {m_max + 1}"
        )
    d = mix.d
    nodes, weights = quad.nodes_weights(d)
    coeffs: dict[tuple[int, ...], float] = {}
    for w, mu, S in zip(mix.weights, mix.means, mix.covs):
        root = linalg.sqrtm_psd(S)
        X = mu + nodes @ root.T
        tables = _hermite_tables(X, m_max)
        for m in range(m_max + 1):
            for alpha in multi_indices(d, m):
                term = weights.copy()
                for axis, deg in enumerate(alpha):
                    term = term * tables[axis][deg]
                val = w * float(np.sum(term)) / math.sqrt(_factorial_prod(alpha))
                coeffs[alpha] = coeffs.get(alpha, 0.0) + val
    top = math.sqrt(
        sum(a * a for alpha, a in coeffs.items() if sum(alpha) == m_max)
    )
    return HermiteState(coeffs=coeffs, dim=d, m_max=m_max, top_shell_mass=top)


def gamma_kappa_contains(B, kappa: int, c: float, z: complex) -> bool:
    """Membership test for the resolvent region of the hypoelliptic dual.

    The region consists of complex z with
    Re z <= (1 - Tr B) / 2  and
    |Re z - (1 - Tr B / 2)| <= c |z - (1 - Tr B / 2)|^(1 / (2 kappa + 1)).
    """
    Bm = linalg.as_square_matrix(B, "B")
    if kappa < 0 or c <= 0.0:
        raise DimensionError("need kappa >= 0 and c > 0")
    tr = float(np.trace(Bm))
    z = complex(z)
    if z.real > 0.5 * (1.0 - tr):
        return False
    ref = 1.0 - 0.5 * tr
    lhs = abs(z.real - ref)
    rhs = c * abs(z - ref) ** (1.0 / (2 * kappa + 1))
    return lhs <= rhs

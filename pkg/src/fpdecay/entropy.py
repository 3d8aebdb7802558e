"""Relative entropy functionals and their dissipation.

Convex generators psi with psi(1) = psi'(1) = 0 define relative entropies
int psi(f / f_inf) f_inf dx.  The power family psi_p for 1 < p <= 2 (plus
the Boltzmann generator at p = 1) is provided with all four derivatives and
an admissibility check.  The quadratic entropy of Gaussian mixtures has a
closed form; general entropies and Fisher information go through quadrature
with analytic integrands.  Everything assumes normalized coordinates, i.e.
the equilibrium is the standard Gaussian.

Entropies that fail the Gaussian integrability condition evaluate to the
distinguished value ``math.inf`` rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import linalg
from .exceptions import DimensionError, DomainError
from .propagation import GaussianMixture, evolve_mixture
from .quadrature import QuadratureSpec
from .spectral import HermiteState, evolve_hermite
from .system import NormalizedSystem

State = Union[GaussianMixture, HermiteState]

# Below this ratio value the p < 2 Fisher integrand psi''(g) |P^1/2 grad g|^2
# is treated as zero: it vanishes like g^p there while g^(p-2) alone overflows.
RATIO_FLOOR = 1e-250


@dataclass(frozen=True)
class EntropyGenerator:
    """A generator psi with derivatives up to fourth order.

    ``p`` is the power-family parameter when applicable (p = 1 marks the
    Boltzmann generator); ``domain_all_reals`` is True only for the
    quadratic generator, which extends to signed arguments.
    """

    psi: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray]
    d3: Callable[[np.ndarray], np.ndarray]
    d4: Callable[[np.ndarray], np.ndarray]
    p: float | None = None
    domain_all_reals: bool = False


def power_generator(p: float) -> EntropyGenerator:
    """Power-family generator psi_p(y) = (y^p - p(y-1) - 1) / (p(p-1)).

    p = 2 gives the quadratic generator (y-1)^2 / 2 on all of R; p = 1 is
    the Boltzmann limit y log y - y + 1.
    """
    if p == 2.0:
        return EntropyGenerator(
            psi=lambda y: 0.5 * (np.asarray(y, dtype=float) - 1.0) ** 2,
            d1=lambda y: np.asarray(y, dtype=float) - 1.0,
            d2=lambda y: np.ones_like(np.asarray(y, dtype=float)),
            d3=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            d4=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
            p=2.0,
            domain_all_reals=True,
        )
    if p == 1.0:

        def psi1(y):
            y = np.asarray(y, dtype=float)
            ylogy = np.where(y > 0.0, y * np.log(np.maximum(y, 1e-300)), 0.0)
            return ylogy - y + 1.0

        return EntropyGenerator(
            psi=psi1,
            d1=lambda y: np.log(np.asarray(y, dtype=float)),
            d2=lambda y: 1.0 / np.asarray(y, dtype=float),
            d3=lambda y: -1.0 / np.asarray(y, dtype=float) ** 2,
            d4=lambda y: 2.0 / np.asarray(y, dtype=float) ** 3,
            p=1.0,
        )
    if not 1.0 < p < 2.0:
        raise DomainError(f"power generator needs p in (1, 2] or p = 1, got {p}")
    c = 1.0 / (p * (p - 1.0))

    def psi(y):
        y = np.asarray(y, dtype=float)
        return (y**p - p * (y - 1.0) - 1.0) * c

    return EntropyGenerator(
        psi=psi,
        d1=lambda y: (np.asarray(y, dtype=float) ** (p - 1.0) - 1.0) / (p - 1.0),
        d2=lambda y: np.asarray(y, dtype=float) ** (p - 2.0),
        d3=lambda y: (p - 2.0) * np.asarray(y, dtype=float) ** (p - 3.0),
        d4=lambda y: (p - 2.0) * (p - 3.0) * np.asarray(y, dtype=float) ** (p - 4.0),
        p=p,
    )


def psi_eval(gen: EntropyGenerator, y, order: int = 0):
    """Evaluate psi or one of its first four derivatives with domain checks.

    Non-negative y is required unless the generator extends to all reals;
    derivatives additionally require y > 0 for the fractional-power family.
    """
    arr = np.asarray(y, dtype=float)
    if not gen.domain_all_reals:
        if np.any(arr < 0.0):
            raise DomainError("generator is defined on non-negative arguments only")
        if order >= 1 and np.any(arr == 0.0):
            raise DomainError("derivatives require strictly positive arguments")
    fn = (gen.psi, gen.d1, gen.d2, gen.d3, gen.d4)[order]
    out = fn(arr)
    return float(out) if np.isscalar(y) or np.asarray(y).ndim == 0 else out


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    worst_margin: float


def check_admissible(gen: EntropyGenerator, sample_grid) -> AdmissibilityReport:
    """Check generator admissibility on a grid in (0, inf).

    Requires psi(1) = psi'(1) = 0, psi'' > 0 at every grid point, and the
    curvature inequality (psi''')^2 <= psi'' psi'''' / 2 with 1e-12 relative
    slack (generators touching equality, like the Boltzmann one, would fail
    any absolute slack where the terms blow up).  ``worst_margin`` is the
    most negative relative slack of the inequality over the grid.
    """
    ys = np.asarray(sample_grid, dtype=float)
    if np.any(ys <= 0.0):
        raise DomainError("admissibility grid must lie in (0, inf)")
    ok = abs(float(gen.psi(np.array(1.0)))) <= 1e-12
    ok = ok and abs(float(gen.d1(np.array(1.0)))) <= 1e-12
    d2 = gen.d2(ys)
    ok = ok and bool(np.all(d2 > 0.0))
    lhs = gen.d3(ys) ** 2
    rhs = 0.5 * d2 * gen.d4(ys)
    scale = np.maximum(np.abs(lhs) + np.abs(rhs), 1.0)
    worst = float(np.min((rhs - lhs) / scale))
    ok = ok and worst >= -1e-12
    return AdmissibilityReport(admissible=bool(ok), worst_margin=worst)


def _component_canonical(mu: np.ndarray, S: np.ndarray):
    lam = np.linalg.inv(S)
    eta = lam @ mu
    return lam, eta


def ep_is_finite_mixture(mix: GaussianMixture, p: float) -> bool:
    """Exact integrability test of the power entropy for Gaussian mixtures.

    The p-entropy of a mixture is finite exactly when every component
    covariance stays strictly below p / (p - 1) times the identity (each
    component integral needs p inv(S) + (1 - p) I positive definite, and the
    mixture is bracketed by its components).  For p = 2 this is the
    quadratic condition S < 2 I.
    """
    if not 1.0 < p <= 2.0:
        raise DomainError(f"p must lie in (1, 2], got {p}")
    bound = p / (p - 1.0)
    for S in mix.covs:
        if np.linalg.eigvalsh(linalg.sym_part(S))[-1] >= bound:
            return False
    return True


def e2_mixture(sys: NormalizedSystem, mix: GaussianMixture) -> float:
    """Quadratic entropy of a Gaussian mixture, in closed form.

    Uses the pairwise Gaussian cross integrals against the inverse
    equilibrium weight; returns ``inf`` when any pairwise precision
    ``inv(S_i) + inv(S_j) - I`` fails to be positive definite.
    """
    if mix.d != sys.d:
        raise DimensionError("mixture dimension does not match system")
    d = mix.d
    k = mix.k
    lams, etas, mahal, logdets = [], [], [], []
    for mu, S in zip(mix.means, mix.covs):
        lam, eta = _component_canonical(mu, S)
        lams.append(lam)
        etas.append(eta)
        mahal.append(float(mu @ eta))
        logdets.append(float(np.linalg.slogdet(S)[1]))
    total = 0.0
    eye = np.eye(d)
    for i in range(k):
        for j in range(i, k):
            P = lams[i] + lams[j] - eye
            w_eig = np.linalg.eigvalsh(linalg.sym_part(P))
            if w_eig[0] <= 0.0:
                return math.inf
            h = etas[i] + etas[j]
            log_g = (
                0.5 * float(h @ np.linalg.solve(P, h))
                - 0.5 * (mahal[i] + mahal[j])
                - 0.5 * (logdets[i] + logdets[j])
                - 0.5 * float(np.linalg.slogdet(P)[1])
            )
            g = math.exp(log_g) if log_g < 700.0 else math.inf
            if math.isinf(g):
                return math.inf
            mult = 1.0 if i == j else 2.0
            total += mult * mix.weights[i] * mix.weights[j] * g
    return 0.5 * (total - 2.0 * mix.mass + 1.0)


def _mixture_ratio(mix: GaussianMixture, x: np.ndarray, with_grad: bool = False):
    """f / f_inf for a mixture at points x (N, d), optionally with gradient."""
    x = np.atleast_2d(x)
    n, d = x.shape
    vals = np.zeros(n)
    grad = np.zeros((n, d)) if with_grad else None
    for w, mu, S in zip(mix.weights, mix.means, mix.covs):
        lam = np.linalg.inv(S)
        diff = x - mu
        q = np.einsum("ij,jk,ik->i", diff, lam, diff)
        logdet = float(np.linalg.slogdet(S)[1])
        log_r = -0.5 * q + 0.5 * np.einsum("ij,ij->i", x, x) - 0.5 * logdet
        r = w * np.exp(np.minimum(log_r, 700.0))
        vals += r
        if with_grad:
            grad += r[:, None] * (x - diff @ lam.T)
    return (vals, grad) if with_grad else vals


def _state_ratio(f: State, x: np.ndarray, with_grad: bool = False):
    if isinstance(f, GaussianMixture):
        return _mixture_ratio(f, x, with_grad=with_grad)
    if isinstance(f, HermiteState):
        if with_grad:
            return f.ratio_values(x), f.ratio_gradient(x)
        return f.ratio_values(x)
    raise DimensionError(f"unsupported state type {type(f).__name__}")


def _state_dim(f: State) -> int:
    return f.d if isinstance(f, GaussianMixture) else f.dim


def ep_quadrature(
    sys: NormalizedSystem,
    f: State,
    gen: EntropyGenerator,
    quad: QuadratureSpec | None = None,
) -> float:
    """Relative entropy int psi(f / f_inf) f_inf dx by quadrature.

    Mixtures and Hermite coefficient states are supported; signed states
    are admitted only for the quadratic generator.  May return ``inf`` when
    the integrand overflows (non-integrable data).
    """
    d = _state_dim(f)
    if d != sys.d:
        raise DimensionError("state dimension does not match system")
    if quad is None:
        quad = QuadratureSpec.for_dim(d)
    nodes, weights = quad.nodes_weights(d)
    g = _state_ratio(f, nodes)
    if not gen.domain_all_reals:
        if float(np.min(g)) < -1e-12:
            raise DomainError(
                "state is negative at quadrature nodes; only the quadratic "
                "generator admits signed data"
            )
        g = np.maximum(g, 0.0)
    vals = gen.psi(g)
    return float(np.sum(weights * vals))


def fisher_info(
    sys: NormalizedSystem,
    f: State,
    gen: EntropyGenerator,
    P,
    quad: QuadratureSpec | None = None,
) -> float:
    """Relative Fisher information int psi''(g) grad(g)^T P grad(g) f_inf dx.

    ``P`` must be symmetric positive semidefinite.  Gradients of the density
    ratio are analytic for both mixtures and coefficient states, so only the
    outer integral is numerical.  Always non-negative.
    """
    Pm = linalg.as_square_matrix(P, "P")
    psd, _ = linalg.psd_check(Pm, tol=1e-8)
    if not psd:
        raise DomainError("P must be symmetric positive semidefinite")
    d = _state_dim(f)
    if d != sys.d or Pm.shape[0] != d:
        raise DimensionError("dimension mismatch between state, system and P")
    if quad is None:
        quad = QuadratureSpec.for_dim(d)
    nodes, weights = quad.nodes_weights(d)
    g, grad = _state_ratio(f, nodes, with_grad=True)
    quad_form = np.einsum("nj,jk,nk->n", grad, Pm, grad)
    if gen.domain_all_reals:
        psi2 = gen.d2(g)
    else:
        if float(np.min(g)) < -1e-12:
            raise DomainError("state is negative at quadrature nodes")
        safe = np.maximum(g, RATIO_FLOOR)
        psi2 = np.where(g > RATIO_FLOOR, gen.d2(safe), 0.0)
        quad_form = np.where(g > RATIO_FLOOR, quad_form, 0.0)
    return float(np.sum(weights * psi2 * quad_form))


@dataclass(frozen=True)
class DissipationResult:
    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def _evolve_state(sys: NormalizedSystem, f: State, t: float) -> State:
    if isinstance(f, GaussianMixture):
        return evolve_mixture(sys, f, t)
    return evolve_hermite(f, sys.C, t)


def dissipation_check(
    sys: NormalizedSystem,
    f: State,
    gen: EntropyGenerator,
    dt: float = 1e-3,
    quad: QuadratureSpec | None = None,
) -> DissipationResult:
    """Numerical check of d/dt e_psi = -I_psi with P the symmetric drift part.

    The derivative is a centered difference around the state evolved to
    time dt (so no backward flow is needed); the right-hand side is minus
    the Fisher information with P = D evaluated at that midpoint state.
    The gap is O(dt^2) plus quadrature error.
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    e0 = ep_quadrature(sys, f, gen, quad)
    e2t = ep_quadrature(sys, _evolve_state(sys, f, 2.0 * dt), gen, quad)
    lhs = (e2t - e0) / (2.0 * dt)
    mid = _evolve_state(sys, f, dt)
    rhs = -fisher_info(sys, mid, gen, sys.D, quad)
    return DissipationResult(lhs=lhs, rhs=rhs)


def dominance_constants(p1: float, p2: float) -> float:
    """Numerical supremum of psi_p1 / psi_p2 over non-negative arguments.

    Requires 1 < p1 < p2 <= 2.  The ratio extends continuously with value 1
    at y = 1, p2 / p1 at y = 0, and 0 at infinity; the supremum is taken on
    a log grid with those limits appended.
    """
    if not (1.0 < p1 < p2 <= 2.0):
        raise DomainError(f"need 1 < p1 < p2 <= 2, got p1={p1}, p2={p2}")
    g1 = power_generator(p1)
    g2 = power_generator(p2)
    ys = np.logspace(-8.0, 8.0, 4001)
    ys = ys[np.abs(ys - 1.0) > 1e-5]
    ratio = g1.psi(ys) / g2.psi(ys)
    return float(max(np.max(ratio), p2 / p1, 1.0))


def psi_vs_e2_bound(gen: EntropyGenerator) -> float:
    """Constant 2 psi''(1) bounding psi by the quadratic generator."""
    return 2.0 * float(gen.d2(np.array(1.0)))

"""Exact solution flow and its verification oracles.

The density flow maps Gaussians to Gaussians: a component N(y, S) moves to
N(e^(-Ct) y, W(t) + e^(-Ct) S e^(-C^T t)) where W(t) is the accumulated
diffusion covariance.  W(t) is evaluated in closed form through the
Kronecker-sum linear system rather than by quadrature.  An Euler-Maruyama
Monte Carlo simulation of the underlying process serves as an independent
check on the pushforward formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import DimensionError, EnvelopeViolationError
from .system import NormalizedSystem

# Relative growth of the decay ratio over the tail of the grid above which
# the envelope is considered violated.  A correct envelope gives a ratio that
# plateaus (it may creep up to its supremum), a wrong rate or polynomial
# order keeps growing by whole percents per grid step.
RATIO_GROWTH_RTOL = 1e-2


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Weighted sum of Gaussian densities, closed under the exact flow.

    ``weights`` are positive masses (sum 1 for probability data), ``means``
    has shape (k, d) and ``covs`` shape (k, d, d) with symmetric positive
    definite components (up to tolerance; evolved mixtures of point-like
    data may be close to singular, see :meth:`condition_numbers`).
    """

    weights: np.ndarray
    means: np.ndarray
    covs: np.ndarray
    checked: bool = field(default=True, repr=False)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        S = np.asarray(self.covs, dtype=float)
        if S.ndim == 2:
            S = S[None, :, :]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covs", S)
        k, d = mu.shape
        if w.shape != (k,) or S.shape != (k, d, d):
            raise DimensionError(
                f"inconsistent mixture shapes: weights {w.shape}, "
                f"means {mu.shape}, covs {S.shape}"
            )
        if not (np.isfinite(w).all() and np.isfinite(mu).all() and np.isfinite(S).all()):
            raise DimensionError("mixture has non-finite entries")
        if np.any(w <= 0.0):
            raise DimensionError("mixture weights must be positive")
        if self.checked:
            for i in range(k):
                Si = S[i]
                scale = max(linalg.two_norm(Si), 1e-300)
                if linalg.two_norm(Si - Si.T) > 1e-10 * scale:
                    raise DimensionError(f"covariance {i} is not symmetric")
                if np.linalg.eigvalsh(linalg.sym_part(Si))[0] <= -1e-12 * scale:
                    raise DimensionError(f"covariance {i} is not positive semidefinite")

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def d(self) -> int:
        return self.means.shape[1]

    @property
    def mass(self) -> float:
        return float(np.sum(self.weights))

    def condition_numbers(self) -> np.ndarray:
        """Condition number of each component covariance."""
        return np.array([np.linalg.cond(S) for S in self.covs])

    def mean_cov(self) -> tuple[np.ndarray, np.ndarray]:
        """Mean and covariance of the mixture normalized to unit mass."""
        p = self.weights / self.mass
        m = p @ self.means
        second = np.einsum("i,ijk->jk", p, self.covs)
        second += np.einsum("i,ij,ik->jk", p, self.means, self.means)
        return m, second - np.outer(m, m)

    def density(self, x: np.ndarray) -> np.ndarray:
        """Mixture density at points x of shape (N, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape[0])
        for w, mu, S in zip(self.weights, self.means, self.covs):
            diff = x - mu
            sol = np.linalg.solve(S, diff.T).T
            q = np.einsum("ij,ij->i", diff, sol)
            norm = (2.0 * np.pi) ** (-self.d / 2.0) * np.linalg.det(S) ** -0.5
            out += w * norm * np.exp(-0.5 * q)
        return out


def equilibrium_mixture(d: int) -> GaussianMixture:
    """Unit-mass standard Gaussian as a one-component mixture."""
    return GaussianMixture(
        weights=np.array([1.0]), means=np.zeros((1, d)), covs=np.eye(d)[None]
    )


def gram_w(sys: NormalizedSystem, t: float) -> np.ndarray:
    """Accumulated diffusion covariance W(t) = 2 int_0^t e^(-Cs) D e^(-C^T s) ds.

    Closed form: vec(W) = (C (+) C)^(-1) (I - e^(-(C (+) C) t)) vec(2D).
    Symmetric PSD, monotone in t, converging to the identity in normalized
    coordinates.
    """
    C, D = sys.C, sys.D
    d = sys.d
    if not np.isfinite(t):
        raise DimensionError("t must be finite")
    if t == 0.0:
        return np.zeros((d, d))
    S = np.kron(C, np.eye(d)) + np.kron(np.eye(d), C)
    rhs = (np.eye(d * d) - linalg.matrix_exp(-S, t)) @ (2.0 * D).reshape(-1)
    W = np.linalg.solve(S, rhs).reshape(d, d)
    return linalg.sym_part(W)


def evolve_mixture(sys: NormalizedSystem, mix: GaussianMixture, t: float) -> GaussianMixture:
    """Push a Gaussian mixture through the flow for time t.

    Weights are conserved; each component mean contracts by e^(-Ct) and the
    covariance relaxes toward the identity.  Satisfies the flow property
    evolve(evolve(m, s), t) = evolve(m, s + t).
    """
    if mix.d != sys.d:
        raise DimensionError(f"mixture dimension {mix.d} != system dimension {sys.d}")
    if t == 0.0:
        return mix
    E = linalg.matrix_exp(-sys.C, t)
    W = gram_w(sys, t)
    means = mix.means @ E.T
    covs = np.array([linalg.sym_part(W + E @ S @ E.T) for S in mix.covs])
    return GaussianMixture(
        weights=mix.weights.copy(), means=means, covs=covs, checked=False
    )


@dataclass(frozen=True)
class EnvelopeFit:
    """Empirical envelope constant from a grid maximum of quantity/envelope."""

    c_fit: float
    grid: np.ndarray
    ratios: np.ndarray
    max_ratio_location: float


def _fit_envelope(ts: np.ndarray, values: np.ndarray, envelope: np.ndarray) -> EnvelopeFit:
    ratios = values / envelope
    if not np.isfinite(ratios).all():
        raise EnvelopeViolationError("non-finite decay ratio on the grid")
    imax = int(np.argmax(ratios))
    tail = max(2, int(np.ceil(0.1 * len(ts))))
    if len(ts) > tail:
        r0, r1 = ratios[-tail], ratios[-1]
        if r1 > r0 * (1.0 + RATIO_GROWTH_RTOL):
            raise EnvelopeViolationError(
                f"decay ratio still growing at the end of the grid "
                f"({r0:.4g} -> {r1:.4g}): rate or polynomial order is wrong"
            )
    return EnvelopeFit(
        c_fit=float(ratios[imax]),
        grid=ts,
        ratios=ratios,
        max_ratio_location=float(ts[imax]),
    )


def decay_envelope(mu: float, n: int, c: float, t) -> np.ndarray | float:
    """Envelope c (1 + t^(2n)) e^(-2 mu t); purely exponential when n = 0."""
    t = np.asarray(t, dtype=float)
    if n == 0:
        out = c * np.exp(-2.0 * mu * t)
    else:
        out = c * (1.0 + t ** (2 * n)) * np.exp(-2.0 * mu * t)
    return out if out.ndim else float(out)


def fit_w_convergence(sys: NormalizedSystem, t_grid) -> EnvelopeFit:
    """Envelope constant for ||W(t) - I|| against (1 + t^(2n)) e^(-2 mu t).

    In normalized coordinates the deviation satisfies the exact identity
    I - W(t) = e^(-Ct) e^(-C^T t) (uniqueness of the shifted Lyapunov
    solution), so the norm is evaluated as ||e^(-Ct)||^2.  This avoids the
    catastrophic cancellation of forming W(t) - I once the deviation drops
    to machine epsilon.  Raises EnvelopeViolationError when the ratio keeps
    growing at the tail of the grid, which signals a wrong rate or defect
    order.
    """
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    mu, n = sys.mu_defect()
    values = np.array(
        [linalg.two_norm(linalg.matrix_exp(-sys.C, t)) ** 2 for t in ts]
    )
    envelope = np.asarray(decay_envelope(mu, n, 1.0, ts))
    return _fit_envelope(ts, values, envelope)


def fit_drift_decay(C, t_grid) -> EnvelopeFit:
    """Envelope constant for ||e^(-Ct)|| against (1 + t^n) e^(-mu t)."""
    Cm = linalg.as_square_matrix(C, "C")
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    mu, n = linalg.mu_and_defect(Cm)
    values = np.array([linalg.two_norm(linalg.matrix_exp(-Cm, t)) for t in ts])
    if n == 0:
        envelope = np.exp(-mu * ts)
    else:
        envelope = (1.0 + ts**n) * np.exp(-mu * ts)
    return _fit_envelope(ts, values, envelope)


@dataclass(frozen=True)
class SdeMoments:
    """Sample moments from the Monte Carlo oracle with standard errors."""

    mean: np.ndarray
    cov: np.ndarray
    stderr_mean: np.ndarray
    stderr_cov: np.ndarray
    n_paths: int


def sde_oracle(
    sys: NormalizedSystem,
    mix: GaussianMixture,
    t: float,
    n_paths: int = 100_000,
    dt: float = 1e-3,
    seed: int = 0,
) -> SdeMoments:
    """Euler-Maruyama simulation of dX = -C X dt + sqrt(2D) dW.

    Initial points are sampled from the mixture (weights as relative
    masses).  Identical seeds reproduce bit-identical moments.  Intended as
    an independent check of :func:`evolve_mixture`; keep n_paths >= 1e4 and
    dt <= 1e-2 / ||C|| for trustworthy comparisons.
    """
    rng = np.random.default_rng(seed)
    d = sys.d
    probs = mix.weights / mix.mass
    comp = rng.choice(mix.k, size=n_paths, p=probs)
    X = np.empty((n_paths, d))
    for i in range(mix.k):
        idx = np.nonzero(comp == i)[0]
        if idx.size == 0:
            continue
        root = linalg.sqrtm_psd(mix.covs[i])
        X[idx] = mix.means[i] + rng.standard_normal((idx.size, d)) @ root.T

    noise_root = linalg.sqrtm_psd(2.0 * sys.D)
    remaining = float(t)
    CT = sys.C.T
    while remaining > 1e-14:
        h = min(dt, remaining)
        Z = rng.standard_normal((n_paths, d))
        X += -h * (X @ CT) + np.sqrt(h) * (Z @ noise_root.T)
        remaining -= h

    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False).reshape(d, d)
    stderr_mean = X.std(axis=0, ddof=1) / np.sqrt(n_paths)
    centered = X - mean
    prods = np.einsum("ni,nj->nij", centered, centered)
    stderr_cov = prods.std(axis=0, ddof=1) / np.sqrt(n_paths)
    return SdeMoments(
        mean=mean,
        cov=cov,
        stderr_mean=stderr_mean,
        stderr_cov=stderr_cov,
        n_paths=n_paths,
    )

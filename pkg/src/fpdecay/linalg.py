"""Matrix-analysis kernel.

Definiteness and rank tests, matrix exponentials, eigenvalue structure with
defect detection, continuous Lyapunov solves and the equivalent Kronecker-sum
linear system.  Everything here is pure and deterministic; all rank and
defect decisions go through a single singular-value threshold policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, SingularSystemError, StabilityError

# Relative singular-value threshold for rank decisions.  Inputs at dimension
# d <= 4 with O(1) entries keep this far away from real spectral gaps.
SV_RTOL = 1e-8

# Absolute tolerance for grouping computed eigenvalues into clusters.
CLUSTER_TOL = 1e-7


def as_square_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and return ``M`` as a finite, square, float ndarray."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] < 1:
        raise DimensionError(f"{name} must have dimension >= 1")
    if not np.isfinite(A).all():
        raise DimensionError(f"{name} has non-finite entries")
    return A


def sym_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def two_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def matrix_rank_sv(M: np.ndarray, rtol: float = SV_RTOL) -> int:
    """Rank of ``M`` counting singular values above ``rtol * sigma_max``."""
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def psd_check(M, tol: float = 1e-10) -> tuple[bool, int]:
    """Test symmetric positive semidefiniteness and report the rank.

    Parameters
    ----------
    M : array_like, square
    tol : float
        Relative threshold, both for the symmetry test and for counting
        eigenvalues as nonzero.

    Returns
    -------
    (is_symmetric_psd, rank) : tuple of bool and int
        ``rank`` counts eigenvalues of the symmetrized matrix above
        ``tol * max(|eigenvalue|)``.
    """
    A = as_square_matrix(M, "M")
    scale = max(two_norm(A), 1e-300)
    symmetric = two_norm(A - A.T) <= tol * scale
    w = np.linalg.eigvalsh(sym_part(A))
    wmax = max(float(np.max(np.abs(w))), 0.0)
    if wmax == 0.0:
        return symmetric, 0
    rank = int(np.count_nonzero(w > tol * wmax))
    psd = symmetric and float(np.min(w)) >= -tol * wmax
    return psd, rank


def matrix_exp(M, t: float = 1.0) -> np.ndarray:
    """e^(M t) by scaling and squaring (relative accuracy ~1e-12 for the
    well-conditioned, small-norm matrices used here)."""
    A = as_square_matrix(M, "M")
    if not np.isfinite(t):
        raise DimensionError("t must be finite")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(A * t)


def sqrtm_psd(M, rtol: float = SV_RTOL) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below ``rtol * max`` are clamped to zero, so slightly
    indefinite round-off inputs map to an exact PSD root.
    """
    A = sym_part(as_square_matrix(M, "M"))
    w, V = np.linalg.eigh(A)
    wmax = max(float(w[-1]), 0.0)
    w = np.where(w > rtol * wmax, w, 0.0)
    return (V * np.sqrt(w)) @ V.T


def inv_sqrtm_spd(M) -> np.ndarray:
    """Symmetric inverse square root of a symmetric positive definite matrix."""
    A = sym_part(as_square_matrix(M, "M"))
    w, V = np.linalg.eigh(A)
    if w[0] <= 0.0:
        raise SingularSystemError("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.T


def _assert_positively_stable(C: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvals(C)
    if np.min(lam.real) <= 0.0:
        raise StabilityError(
            f"drift spectrum reaches Re = {np.min(lam.real):.3e} <= 0; "
            "no unique positive definite equilibrium covariance"
        )
    return lam


def solve_lyapunov(C, D) -> np.ndarray:
    """Solve C K + K C^T = 2 D for the equilibrium covariance K.

    ``C`` must be positively stable; ``D`` symmetric PSD.  Uses the
    Bartels-Stewart solver and symmetrizes the result.
    """
    Cm = as_square_matrix(C, "C")
    Dm = as_square_matrix(D, "D")
    if Cm.shape != Dm.shape:
        raise DimensionError("C and D must have equal dimensions")
    _assert_positively_stable(Cm)
    K = sym_part(scipy.linalg.solve_continuous_lyapunov(Cm, 2.0 * Dm))
    resid = two_norm(Cm @ K + K @ Cm.T - 2.0 * Dm)
    scale = two_norm(Cm) * two_norm(K) + two_norm(Dm)
    if resid > 1e-10 * max(scale, 1e-300):
        raise SingularSystemError(
            f"Lyapunov residual {resid:.3e} exceeds tolerance; "
            "equation has no reliable unique solution"
        )
    return K


def kron_sum_solve(C, RHS) -> np.ndarray:
    """Solve C X + X C^T = RHS through the d^2 x d^2 Kronecker-sum system.

    Independent route to :func:`solve_lyapunov`; also the backbone of the
    closed-form time-dependent covariance.  Row-major vectorization:
    vec(C X + X C^T) = (C (+) C) vec(X) with C (+) C = C (x) I + I (x) C.
    """
    Cm = as_square_matrix(C, "C")
    R = as_square_matrix(RHS, "RHS")
    if Cm.shape != R.shape:
        raise DimensionError("C and RHS must have equal dimensions")
    d = Cm.shape[0]
    S = np.kron(Cm, np.eye(d)) + np.kron(np.eye(d), Cm)
    if matrix_rank_sv(S) < d * d:
        raise SingularSystemError("Kronecker sum C (+) C is singular")
    X = np.linalg.solve(S, R.reshape(-1)).reshape(d, d)
    resid = two_norm(Cm @ X + X @ Cm.T - R)
    scale = max(two_norm(Cm) * two_norm(X) + two_norm(R), 1e-300)
    if resid > 1e-10 * scale:
        raise SingularSystemError(f"Kronecker solve residual {resid:.3e} too large")
    return X


@dataclass(frozen=True)
class EigenStructure:
    """Clustered eigenvalues with algebraic/geometric multiplicities.

    ``defects[i] = algebraic[i] - geometric[i]`` measures how far cluster
    ``i`` is from diagonalizable.  ``warnings`` carries non-fatal notes such
    as nearly merging clusters.
    """

    eigenvalues: tuple[complex, ...]
    algebraic: tuple[int, ...]
    geometric: tuple[int, ...]
    defects: tuple[int, ...]
    warnings: tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return int(sum(self.algebraic))

    def max_defect_at_real_part(self, real_part: float, atol: float = 1e-6) -> int:
        hits = [
            dfct
            for lam, dfct in zip(self.eigenvalues, self.defects)
            if abs(lam.real - real_part) <= atol
        ]
        if not hits:
            raise ValueError(f"no eigenvalue cluster with Re = {real_part}")
        return max(hits)


def eigen_structure(M, tol: float = CLUSTER_TOL) -> EigenStructure:
    """Eigenvalues of ``M`` clustered to ``tol`` with defect detection.

    Geometric multiplicity is the nullity of ``M - lambda I`` under the
    singular-value threshold policy.  Two cluster centers closer than
    ``10 * tol`` attach an ill-conditioned-spectrum warning instead of
    raising.
    """
    A = as_square_matrix(M, "M")
    d = A.shape[0]
    lam = np.linalg.eigvals(A)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]

    clusters: list[list[complex]] = []
    for z in lam:
        placed = False
        for cl in clusters:
            center = sum(cl) / len(cl)
            if abs(z - center) <= tol:
                cl.append(z)
                placed = True
                break
        if not placed:
            clusters.append([z])

    centers = [sum(cl) / len(cl) for cl in clusters]
    warnings: list[str] = []
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = abs(centers[i] - centers[j])
            if gap <= 10.0 * tol:
                warnings.append(
                    f"clusters {centers[i]:.6g} and {centers[j]:.6g} separated "
                    f"by {gap:.2e} <= 10*tol: spectrum is ill conditioned"
                )

    eigenvalues, algebraic, geometric, defects = [], [], [], []
    for center, cl in zip(centers, clusters):
        alg = len(cl)
        shifted = A.astype(complex) - center * np.eye(d)
        geo = d - matrix_rank_sv(shifted)
        if geo < 1 or geo > alg:
            warnings.append(
                f"geometric multiplicity {geo} of {center:.6g} clipped to "
                f"[1, {alg}]: rank decision is borderline"
            )
            geo = min(max(geo, 1), alg)
        eigenvalues.append(complex(center))
        algebraic.append(alg)
        geometric.append(geo)
        defects.append(alg - geo)

    return EigenStructure(
        eigenvalues=tuple(eigenvalues),
        algebraic=tuple(algebraic),
        geometric=tuple(geometric),
        defects=tuple(defects),
        warnings=tuple(warnings),
    )


def mu_and_defect(C, tol: float = CLUSTER_TOL) -> tuple[float, int]:
    """Spectral-gap rate and maximal defect on the gap line.

    Returns ``(mu, n)`` with ``mu = min Re(lambda)`` over the spectrum of
    ``C`` and ``n`` the largest defect among eigenvalue clusters whose real
    part equals ``mu`` within the clustering tolerance.  Requires ``C``
    positively stable.
    """
    Cm = as_square_matrix(C, "C")
    es = eigen_structure(Cm, tol=tol)
    mu = min(lam.real for lam in es.eigenvalues)
    if mu <= 0.0:
        raise StabilityError(f"drift spectrum reaches Re = {mu:.3e} <= 0")
    n = es.max_defect_at_real_part(mu, atol=10.0 * tol)
    return float(mu), int(n)


def kalman_kappa(Qhalf, B, rtol: float = SV_RTOL) -> tuple[int | None, tuple[int, ...]]:
    """Smallest kappa with rank[Qhalf, B Qhalf, ..., B^kappa Qhalf] = d.

    Returns ``(kappa, ranks)`` where ``ranks[k]`` is the rank after
    augmenting with the k-th power block.  ``kappa`` is None when the rank
    never reaches d for kappa <= d - 1.
    """
    Q = as_square_matrix(Qhalf, "Qhalf")
    Bm = as_square_matrix(B, "B")
    if Q.shape != Bm.shape:
        raise DimensionError("Qhalf and B must have equal dimensions")
    d = Q.shape[0]
    blocks = []
    block = Q
    ranks = []
    kappa: int | None = None
    for k in range(d):
        blocks.append(block)
        r = matrix_rank_sv(np.hstack(blocks), rtol=rtol)
        ranks.append(r)
        if r == d and kappa is None:
            kappa = k
        block = Bm @ block
    return kappa, tuple(ranks)

"""Problem setup for the linear degenerate diffusion system (D, C).

Validates the three structural conditions (diffusion PSD, drift positively
stable, kernel of the diffusion contains no drift-transpose-invariant
subspace), computes the Gaussian equilibrium from the Lyapunov equation, and
normalizes coordinates so the equilibrium covariance is the identity and the
diffusion is diagonal with the symmetric drift part equal to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .exceptions import ConditionError, DimensionError

NORMALIZED_ATOL = 1e-10


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the three admissibility checks, reported independently."""

    condition_a: bool
    rank_d: int
    condition_b: bool
    spectrum: tuple[complex, ...]
    condition_c: bool
    kappa: int | None
    kalman_ranks: tuple[int, ...]

    @property
    def overall(self) -> bool:
        return self.condition_a and self.condition_b and self.condition_c

    def as_dict(self) -> dict:
        return {
            "condition_a_diffusion_psd": self.condition_a,
            "rank_d": self.rank_d,
            "condition_b_drift_stable": self.condition_b,
            "drift_spectrum": [[z.real, z.imag] for z in self.spectrum],
            "condition_c_hypoelliptic": self.condition_c,
            "kappa": self.kappa,
            "kalman_ranks": list(self.kalman_ranks),
            "overall": self.overall,
        }


def validate(D, C, tol: float = 1e-10) -> ValidationReport:
    """Check the admissibility conditions for a diffusion/drift pair.

    Condition A: D symmetric positive semidefinite (rank reported).
    Condition B: every eigenvalue of C has positive real part.
    Condition C: no non-trivial C^T-invariant subspace of Ker(D), tested
    through the equivalent Kalman rank condition for (sqrt(2D), -C); the
    rank sequence and the smallest saturating power kappa are reported.
    """
    Dm = linalg.as_square_matrix(D, "D")
    Cm = linalg.as_square_matrix(C, "C")
    if Dm.shape != Cm.shape:
        raise DimensionError("D and C must have equal dimensions")

    cond_a, rank_d = linalg.psd_check(Dm, tol=tol)

    spectrum = tuple(complex(z) for z in np.linalg.eigvals(Cm))
    cond_b = min(z.real for z in spectrum) > 0.0

    qhalf = linalg.sqrtm_psd(2.0 * Dm)
    kappa, ranks = linalg.kalman_kappa(qhalf, -Cm)
    cond_c = kappa is not None

    return ValidationReport(
        condition_a=bool(cond_a),
        rank_d=int(rank_d),
        condition_b=bool(cond_b),
        spectrum=spectrum,
        condition_c=bool(cond_c),
        kappa=kappa,
        kalman_ranks=ranks,
    )


@dataclass(frozen=True, eq=False)
class FPSystem:
    """A validated diffusion/drift pair.

    Construct through :func:`make_system`; downstream modules refuse raw
    matrix pairs so that every flow and entropy computation runs on a
    system known to satisfy the admissibility conditions.
    """

    D: np.ndarray
    C: np.ndarray
    report: ValidationReport = field(repr=False)

    @property
    def d(self) -> int:
        return self.D.shape[0]

    @property
    def r(self) -> int:
        return self.report.rank_d


def make_system(D, C, tol: float = 1e-10) -> FPSystem:
    """Validate (D, C) and wrap it; raises ConditionError on failure."""
    report = validate(D, C, tol=tol)
    if not report.overall:
        failed = [
            name
            for name, ok in [
                ("A (diffusion PSD)", report.condition_a),
                ("B (drift positively stable)", report.condition_b),
                ("C (hypoellipticity rank)", report.condition_c),
            ]
            if not ok
        ]
        raise ConditionError(f"system fails condition(s): {', '.join(failed)}", report)
    Dm = linalg.as_square_matrix(D, "D")
    Cm = linalg.as_square_matrix(C, "C")
    Dm.setflags(write=False)
    Cm.setflags(write=False)
    return FPSystem(D=Dm, C=Cm, report=report)


@dataclass(frozen=True)
class Equilibrium:
    """Gaussian equilibrium: covariance K and normalization constant."""

    K: np.ndarray
    cK: float

    def density(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        sol = np.linalg.solve(self.K, x.T).T
        return self.cK * np.exp(-0.5 * np.einsum("ij,ij->i", x, sol))


def equilibrium(sys: FPSystem) -> Equilibrium:
    """Unique unit-mass Gaussian steady state of the system."""
    K = linalg.solve_lyapunov(sys.C, sys.D)
    d = sys.d
    cK = (2.0 * math.pi) ** (-d / 2.0) * float(np.linalg.det(K)) ** (-0.5)
    return Equilibrium(K=K, cK=cK)


@dataclass(frozen=True, eq=False)
class NormalizedSystem:
    """System in coordinates where K = I, D is diagonal and equals the
    symmetric part of C.  ``A`` maps original to normalized coordinates."""

    base: FPSystem
    A: np.ndarray
    Ainv: np.ndarray

    @property
    def D(self) -> np.ndarray:
        return self.base.D

    @property
    def C(self) -> np.ndarray:
        return self.base.C

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def r(self) -> int:
        return self.base.r

    def mu_defect(self) -> tuple[float, int]:
        return linalg.mu_and_defect(self.C)


def _check_normalized(D: np.ndarray, C: np.ndarray) -> None:
    if linalg.two_norm(linalg.sym_part(C) - D) > NORMALIZED_ATOL * max(
        1.0, linalg.two_norm(D)
    ):
        raise ConditionError("symmetric part of C does not equal D")
    if linalg.two_norm(D - np.diag(np.diag(D))) > NORMALIZED_ATOL * max(
        1.0, linalg.two_norm(D)
    ):
        raise ConditionError("D is not diagonal")
    K = linalg.solve_lyapunov(C, D)
    if linalg.two_norm(K - np.eye(D.shape[0])) > 1e-9:
        raise ConditionError("equilibrium covariance of (D, C) is not the identity")


def make_normalized(D, C, tol: float = 1e-10) -> NormalizedSystem:
    """Wrap an already-normalized pair (diagonal D = sym(C), K = I).

    The diagonal ordering convention of :func:`normalize` is not required
    here; only the structural identities are checked.
    """
    base = make_system(D, C, tol=tol)
    _check_normalized(base.D, base.C)
    eye = np.eye(base.d)
    return NormalizedSystem(base=base, A=eye, Ainv=eye.copy())


def _fix_eigvec_signs(V: np.ndarray) -> np.ndarray:
    # Deterministic orientation: largest-magnitude entry of each column positive.
    W = V.copy()
    for j in range(W.shape[1]):
        i = int(np.argmax(np.abs(W[:, j])))
        if W[i, j] < 0:
            W[:, j] = -W[:, j]
    return W


def normalize(sys: FPSystem) -> NormalizedSystem:
    """Change coordinates x -> A x so that K = I and D is diagonal.

    A = U K^(-1/2) with U orthogonal diagonalizing K^(-1/2) D K^(-1/2);
    the diagonal of the new diffusion is sorted descending, so positive
    entries come first and zero rows last.  The drift spectrum is preserved
    (similarity transform).
    """
    K = linalg.solve_lyapunov(sys.C, sys.D)
    Kin = linalg.inv_sqrtm_spd(K)
    M = linalg.sym_part(Kin @ sys.D @ Kin)
    w, V = np.linalg.eigh(M)
    order = np.argsort(-w, kind="stable")
    V = _fix_eigvec_signs(V[:, order])
    w = w[order]
    wmax = max(float(w[0]), 0.0)
    w = np.where(w > linalg.SV_RTOL * max(wmax, 1e-300), w, 0.0)

    U = V.T
    A = U @ Kin
    Ainv = linalg.sqrtm_psd(K) @ U.T

    D_new = np.diag(w)
    C_new = A @ sys.C @ Ainv
    base = make_system(D_new, C_new)
    _check_normalized(base.D, base.C)
    A.setflags(write=False)
    Ainv.setflags(write=False)
    return NormalizedSystem(base=base, A=A, Ainv=Ainv)


def adjoint_system(sys: NormalizedSystem) -> NormalizedSystem:
    """System generating the adjoint flow: drift transposed, same diffusion.

    In normalized coordinates the transposed drift has the same symmetric
    part, so the result is normalized as well.  Applying twice returns the
    original system.
    """
    base = make_system(sys.D, sys.C.T)
    return NormalizedSystem(base=base, A=sys.A, Ainv=sys.Ainv)

import numpy as np
import pytest

from fpdecay import GaussianMixture, NormalizedSystem, make_normalized

KINETIC_D = np.diag([0.0, 2.0])
KINETIC_C = np.array([[0.0, -1.0], [1.0, 2.0]])

ROTATING_D = np.eye(2)
ROTATING_C = np.array([[1.0, -3.5], [3.5, 1.0]])

SCALAR_D = np.array([[1.0]])
SCALAR_C = np.array([[1.0]])


@pytest.fixture(scope="session")
def kinetic() -> NormalizedSystem:
    """Degenerate system with a defective drift eigenvalue (mu = 1, n = 1)."""
    return make_normalized(KINETIC_D, KINETIC_C)


@pytest.fixture(scope="session")
def rotating() -> NormalizedSystem:
    """Non-defective system with complex drift spectrum 1 +/- 3.5i."""
    return make_normalized(ROTATING_D, ROTATING_C)


@pytest.fixture(scope="session")
def scalar_sys() -> NormalizedSystem:
    """One-dimensional system with unit diffusion and drift."""
    return make_normalized(SCALAR_D, SCALAR_C)


def random_stable_pair(rng: np.random.Generator, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Random positively stable drift with D equal to its symmetric part."""
    M = rng.uniform(-2.0, 2.0, size=(d, d))
    sym = 0.5 * (M + M.T)
    shift = max(0.0, -np.linalg.eigvalsh(sym)[0]) + 0.2
    C = M + shift * np.eye(d)
    return 0.5 * (C + C.T), C


def random_near_equilibrium_mixture(rng: np.random.Generator, d: int) -> GaussianMixture:
    """Unit-mass mixture close to the standard Gaussian (all entropies finite)."""
    k = int(rng.integers(1, 4))
    w = rng.uniform(0.2, 1.0, size=k)
    w = w / w.sum()
    means = 0.3 * rng.standard_normal((k, d))
    covs = []
    for _ in range(k):
        B = 0.1 * rng.standard_normal((d, d))
        covs.append(np.eye(d) + 0.5 * (B + B.T))
    return GaussianMixture(weights=w, means=means, covs=np.array(covs))

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fpdecay import (
    GaussianMixture,
    HermiteState,
    QuadratureError,
    QuadratureSpec,
    decay_envelope,
    evolve_hermite,
    gamma_kappa_contains,
    matrix_exp,
    multi_indices,
    project_gaussian,
    spectrum_deviation,
    subspace_decay_exponent,
    vm_matrix,
    vm_spectrum_reference,
)
from tests.conftest import KINETIC_C, random_stable_pair


def rational_spectrum_3x3() -> np.ndarray:
    """Stable 3x3 matrix with spectrum exactly {1, 3/2, 2} (unimodular
    similarity of a diagonal, so entries stay exactly representable)."""
    S = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    Sinv = np.array([[1.0, -1.0, 1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])
    return S @ np.diag([1.0, 1.5, 2.0]) @ Sinv


class TestVmMatrix:
    def test_level_zero_is_kernel(self):
        rep = vm_matrix(KINETIC_C, 0)
        assert rep.dim == 1
        np.testing.assert_array_equal(rep.Lm, np.zeros((1, 1)))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_level_one_is_minus_drift_transpose(self, seed):
        rng = np.random.default_rng(seed)
        C = rng.uniform(-2.0, 2.0, size=(3, 3))
        rep = vm_matrix(C, 1)
        np.testing.assert_allclose(rep.Lm, -C.T, atol=1e-14)

    def test_kinetic_level_one_defective(self):
        ref = vm_spectrum_reference(KINETIC_C, 1)
        assert sorted(z.real for z in ref) == pytest.approx([-1.0, -1.0])
        _, n1 = subspace_decay_exponent(KINETIC_C, 1)
        assert n1 == 1

    def test_diagonal_level_two_spectrum(self):
        rep = vm_matrix(np.diag([1.0, 2.0]), 2)
        eigs = sorted(np.linalg.eigvals(rep.Lm).real)
        assert eigs == pytest.approx([-4.0, -3.0, -2.0], abs=1e-12)

    def test_basis_is_graded_lexicographic(self):
        assert multi_indices(2, 2) == ((2, 0), (1, 1), (0, 2))
        assert multi_indices(3, 1) == ((1, 0, 0), (0, 1, 0), (0, 0, 1))

    def test_dimension_formula(self):
        for d in (1, 2, 3):
            for m in range(5):
                assert vm_matrix(np.eye(d), m).dim == math.comb(m + d - 1, d - 1)


class TestSpectrumReference:
    def test_level_zero(self):
        assert vm_spectrum_reference(np.diag([1.0, 2.0]), 0) == (0,)

    def test_defective_double(self):
        ref = vm_spectrum_reference(KINETIC_C, 2)
        np.testing.assert_allclose(sorted(z.real for z in ref), [-2.0] * 3, atol=1e-8)

    def test_complex_pair_level_one(self):
        C = np.array([[1.0, -3.5], [3.5, 1.0]])
        ref = sorted(vm_spectrum_reference(C, 1), key=lambda z: z.imag)
        np.testing.assert_allclose(
            np.array(ref), np.array([-1 - 3.5j, -1 + 3.5j]), atol=1e-9
        )

    @pytest.mark.parametrize(
        "C",
        [np.diag([1.0, 2.0]), KINETIC_C, rational_spectrum_3x3()],
        ids=["diag", "kinetic", "rational3x3"],
    )
    @pytest.mark.parametrize("m", [1, 2, 3, 4])
    def test_matrix_spectrum_matches_reference(self, C, m):
        rep = vm_matrix(C, m)
        dev = spectrum_deviation(rep.Lm, vm_spectrum_reference(C, m))
        assert dev <= 1e-8

    def test_random_stable_systems_match(self):
        rng = np.random.default_rng(29)
        for _ in range(10):
            d = int(rng.integers(2, 4))
            _, C = random_stable_pair(rng, d)
            for m in (1, 2, 3):
                dev = spectrum_deviation(
                    vm_matrix(C, m).Lm, vm_spectrum_reference(C, m)
                )
                assert dev <= 1e-8


class TestSubspaceDecayExponent:
    def test_kinetic_level_one(self):
        rate, n = subspace_decay_exponent(KINETIC_C, 1)
        assert rate == pytest.approx(2.0, abs=1e-9)
        assert n == 1

    def test_diagonal_level_one(self):
        rate, n = subspace_decay_exponent(np.diag([1.0, 2.0]), 1)
        assert rate == pytest.approx(2.0)
        assert n == 0

    def test_kinetic_level_two_defect(self):
        rate, n = subspace_decay_exponent(KINETIC_C, 2)
        assert rate == pytest.approx(4.0, abs=1e-9)
        assert n == 2

    def test_kinetic_level_two_rank_chain_oracle(self):
        # Jordan-chain oracle: ranks of (L2 + 2I)^j determine the block
        # structure; a single chain of length 3 gives ranks 2, 1, 0.
        L2 = vm_matrix(KINETIC_C, 2).Lm
        A = L2 + 2.0 * np.eye(3)
        ranks = [np.linalg.matrix_rank(np.linalg.matrix_power(A, j), tol=1e-8)
                 for j in (1, 2, 3)]
        assert ranks == [2, 1, 0]
        # algebraic 3, geometric = 3 - rank(A) = 1, defect 2
        assert subspace_decay_exponent(KINETIC_C, 2)[1] == 3 - ranks[0] + 1


class TestEvolveHermite:
    def make_state(self, coeffs, dim=2, m_max=3):
        return HermiteState(coeffs=coeffs, dim=dim, m_max=m_max)

    def test_zero_time_identity(self):
        st0 = self.make_state({(0, 0): 1.0, (1, 0): 0.5, (0, 2): -0.25})
        out = evolve_hermite(st0, KINETIC_C, 0.0)
        assert out.coeffs == st0.coeffs

    def test_diagonal_level_one_decay(self):
        st0 = self.make_state({(1, 0): 1.0})
        out = evolve_hermite(st0, np.diag([1.0, 2.0]), 0.7)
        assert out.coeffs[(1, 0)] == pytest.approx(np.exp(-0.7), rel=1e-12)
        assert out.coeffs[(0, 1)] == pytest.approx(0.0, abs=1e-15)

    def test_kinetic_defective_closed_form(self):
        # level-1 coefficients follow the drift flow: a(t) = e^(-Ct) a(0)
        # = e^(-t) (1 + t, -t) for a(0) = (1, 0)
        st0 = self.make_state({(1, 0): 1.0})
        for t in (0.3, 1.0, 2.5):
            out = evolve_hermite(st0, KINETIC_C, t)
            expected = matrix_exp(-KINETIC_C, t) @ np.array([1.0, 0.0])
            np.testing.assert_allclose(
                expected, np.exp(-t) * np.array([1.0 + t, -t]), rtol=1e-12
            )
            got = np.array([out.coeffs[(1, 0)], out.coeffs[(0, 1)]])
            np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-14)

    def test_mass_coefficient_preserved(self):
        st0 = self.make_state({(0, 0): 1.0, (2, 0): 0.3, (1, 1): -0.2})
        out = evolve_hermite(st0, KINETIC_C, 5.0)
        assert out.mass == 1.0

    def test_l2_norm_never_increases(self):
        st0 = self.make_state({(1, 0): 1.0, (0, 1): -1.0, (2, 0): 0.5, (1, 1): 0.25})
        prev = st0.e2()
        for t in np.linspace(0.25, 5.0, 20):
            cur = evolve_hermite(st0, KINETIC_C, t).e2()
            assert cur <= prev + 1e-12
            prev = cur

    @given(
        t1=st.floats(0.0, 3.0),
        t2=st.floats(0.0, 3.0),
        a=st.floats(-2.0, 2.0),
        b=st.floats(-2.0, 2.0),
    )
    @settings(max_examples=25, deadline=None)
    def test_semigroup_property(self, t1, t2, a, b):
        st0 = self.make_state({(1, 0): a, (0, 1): b, (1, 1): a * b})
        one = evolve_hermite(evolve_hermite(st0, KINETIC_C, t1), KINETIC_C, t2)
        two = evolve_hermite(st0, KINETIC_C, t1 + t2)
        for alpha in two.coeffs:
            assert one.coeffs[alpha] == pytest.approx(two.coeffs[alpha], abs=1e-10)


class TestProjectGaussian:
    def test_equilibrium_projects_to_mass_only(self):
        mix = GaussianMixture(np.array([1.0]), np.zeros((1, 2)), np.eye(2)[None])
        state = project_gaussian(mix, m_max=4)
        assert state.coeffs[(0, 0)] == pytest.approx(1.0, abs=1e-12)
        for alpha, a in state.coeffs.items():
            if sum(alpha) >= 1:
                assert abs(a) <= 1e-12
        assert state.top_shell_mass <= 1e-12

    def test_small_mean_shift(self):
        eps = 1e-3
        mix = GaussianMixture(np.array([1.0]), np.array([[eps, 0.0]]), np.eye(2)[None])
        state = project_gaussian(mix, m_max=3)
        assert state.coeffs[(1, 0)] == pytest.approx(eps, abs=1e-13)
        assert state.coeffs[(0, 1)] == pytest.approx(0.0, abs=1e-13)

    def test_variance_shift(self):
        s = 0.2
        mix = GaussianMixture(
            np.array([1.0]), np.zeros((1, 2)), np.diag([1.0 + s, 1.0])[None]
        )
        state = project_gaussian(mix, m_max=4)
        assert state.coeffs[(2, 0)] == pytest.approx(s / np.sqrt(2.0), rel=1e-10)

    def test_order_too_low_raises(self):
        mix = GaussianMixture(np.array([1.0]), np.zeros((1, 1)), np.eye(1)[None])
        with pytest.raises(QuadratureError):
            project_gaussian(mix, m_max=8, quad=QuadratureSpec(order=5))

    def test_reconstructed_density_matches_mixture(self):
        mix = GaussianMixture(
            np.array([0.6, 0.4]),
            np.array([[0.2, -0.1], [-0.3, 0.2]]),
            np.array([np.diag([1.1, 0.9]), np.eye(2)]),
        )
        state = project_gaussian(mix, m_max=10)
        pts = np.array([[0.0, 0.0], [0.5, -0.5], [1.0, 1.0], [-1.5, 0.5]])
        phi = np.exp(-0.5 * np.sum(pts**2, axis=1)) / (2.0 * np.pi)
        np.testing.assert_allclose(
            state.ratio_values(pts) * phi, mix.density(pts), rtol=2e-4
        )


class TestLevelEnvelope:
    def test_level_supported_state_obeys_fitted_envelope(self):
        # states on level k decay with rate 2 k mu and polynomial order at
        # most twice the level defect; the grid-max constant is finite and
        # the ratio collapses after its peak
        for k in (1, 2):
            rate, n_k = subspace_decay_exponent(KINETIC_C, k)
            basis = multi_indices(2, k)
            coeffs = {alpha: 1.0 / (i + 1) for i, alpha in enumerate(basis)}
            state = HermiteState(coeffs=coeffs, dim=2, m_max=k)
            ts = np.linspace(0.0, 20.0, 81)
            values = np.array(
                [evolve_hermite(state, KINETIC_C, t).e2() for t in ts]
            )
            envelope = np.asarray(decay_envelope(0.5 * rate, n_k, 1.0, ts))
            ratios = values / envelope
            assert np.isfinite(ratios).all()
            c_fit = ratios.max()
            np.testing.assert_array_less(values, c_fit * envelope + 1e-15)

    def test_adjoint_level_matrix_is_transpose(self):
        rng = np.random.default_rng(67)
        for m in (1, 2, 3):
            C = rng.uniform(-2.0, 2.0, size=(2, 2))
            np.testing.assert_allclose(
                vm_matrix(C.T, m).Lm, vm_matrix(C, m).Lm.T, atol=1e-13
            )

    def test_adjoint_flow_duality(self, kinetic):
        # <e^(Lt) f, g> = <f, e^(L*t) g> in the weighted space, where the
        # adjoint flow is the one generated by the transposed drift
        f = HermiteState(coeffs={(1, 0): 0.7, (0, 1): -0.3, (1, 1): 0.2}, dim=2, m_max=2)
        g = HermiteState(coeffs={(1, 0): -0.5, (2, 0): 0.4, (1, 1): 1.0}, dim=2, m_max=2)

        def dot(a, b):
            keys = set(a.coeffs) | set(b.coeffs)
            return sum(a.coeffs.get(k, 0.0) * b.coeffs.get(k, 0.0) for k in keys)

        t = 1.3
        lhs = dot(evolve_hermite(f, kinetic.C, t), g)
        rhs = dot(f, evolve_hermite(g, kinetic.C.T, t))
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestGammaRegion:
    # drift transpose of the kinetic system: trace -2 in the region formulas
    B = -KINETIC_C.T

    def test_right_halfplane_excluded(self):
        z = 0.5 * (1.0 - np.trace(self.B)) + 1.0
        assert not gamma_kappa_contains(self.B, 1, 1.0, z)

    def test_far_left_real_axis_included(self):
        z = 0.5 * (1.0 - np.trace(self.B)) - 100.0
        # direct evaluation: |Re z - 2| = 101.5 vs c |z - 2|^(1/3) at c = 1
        # fails, so membership needs a large enough constant
        assert not gamma_kappa_contains(self.B, 1, 1.0, z)
        assert gamma_kappa_contains(self.B, 1, 25.0, z)

    def test_boundary_point_arithmetic(self):
        z = 1.5 + 0.0j  # first clause holds with equality; |z - 2| = 1/2
        c_crit = 0.5 / 0.5 ** (1.0 / 3.0)
        assert gamma_kappa_contains(self.B, 1, c_crit * 1.001, z)
        assert not gamma_kappa_contains(self.B, 1, c_crit * 0.999, z)

    def test_spectrum_points_inside_for_large_c(self):
        # eigenvalues of the level-m generator matrices lie in the region
        # once the constant is generous
        for m in (1, 2, 3):
            for lam in vm_spectrum_reference(KINETIC_C, m):
                assert gamma_kappa_contains(self.B, 1, 10.0, lam)


class TestDecayEnvelope:
    def test_at_zero(self):
        assert decay_envelope(1.0, 1, 3.0, 0.0) == pytest.approx(3.0)

    def test_pure_exponential_convention_at_n_zero(self):
        assert decay_envelope(1.0, 0, 1.0, 2.0) == pytest.approx(np.exp(-4.0))

    def test_defective_value(self):
        # (1 + 2^2) e^(-4)
        assert decay_envelope(1.0, 1, 1.0, 2.0) == pytest.approx(
            5.0 * np.exp(-4.0), rel=1e-12
        )
        assert decay_envelope(1.0, 1, 1.0, 2.0) == pytest.approx(0.0915781944436709)

    def test_vectorized(self):
        ts = np.linspace(0.0, 5.0, 11)
        out = decay_envelope(2.0, 2, 1.5, ts)
        assert out.shape == ts.shape
        np.testing.assert_allclose(out, 1.5 * (1.0 + ts**4) * np.exp(-4.0 * ts))

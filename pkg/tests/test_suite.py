"""
Bordered System Spectral Toolkit - Comprehensive Test Suite
Tests for Model, Characteristic Polynomial, Spectra, Locus, Placement, Regions,
Sensitivity, Valuation, Data Loader, Exporter and the command line

Run with: pytest tests/test_suite.py -v
Coverage: pytest tests/test_suite.py --cov=modules --cov-report=html
"""

import pytest
import pandas as pd
import numpy as np
import os
import tempfile
import shutil
from unittest.mock import patch
import logging, json

import config
import main
from modules import (
    charpoly,
    data_loader,
    exporter,
    locus,
    model,
    placement,
    regions,
    sensitivity,
    spectra,
    system_generator,
    validator,
    valuation
)

# Configure logging for tests
logging.basicConfig(level=logging.WARNING)


# ============================================================
# FIXTURES - Test Data Setup
# ============================================================

@pytest.fixture
def temp_data_dir():
    """Create temporary directory for test data."""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)

@pytest.fixture
def figure_one():
    """Two-pole system with a bounded-modulus conjugate pair for large omega_1."""
    return model.CanonicalSystem.from_arrays([2.0, 1.5], [-1, 1], [0.5, 0.1], 0.5)

@pytest.fixture
def decoupled():
    """omega = 0: dividends follow d_t = beta^t d_0 exactly."""
    return model.CanonicalSystem.from_arrays([1.5, 1.0], [-1, 1], [0.0, 0.0], 0.5)

@pytest.fixture
def unit_state():
    return valuation.InitialState((1.0, 1.0), 1.0)

@pytest.fixture
def rng():
    return system_generator.make_rng(20240531)

@pytest.fixture
def system_file(temp_data_dir):
    """Write a descriptor to the temp dir and return its path."""
    def write(descriptor, name='system.json'):
        path = os.path.join(temp_data_dir, name)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(descriptor, handle)
        return path
    return write


def wilkinson_roots():
    """Roots of (x-1)...(x-20) - 20^19 * 1e-10, evaluated in product form."""
    nodes = np.arange(1.0, 21.0)
    shift = 20.0 ** 19 * 1e-10
    coeffs = np.poly(nodes)
    coeffs[-1] -= shift

    def evaluate(z):
        return np.prod(np.asarray(z)[:, None] - nodes, axis=1) - shift

    roots, converged = spectra.aberth_ehrlich(coeffs, evaluate=evaluate, max_iter=500)
    return spectra.symmetrize(roots), converged


def in_quoted_window(value, quoted):
    """Values quoted to one decimal: accept [quoted - 0.05, quoted + 0.1]."""
    return quoted - 0.05 <= value <= quoted + 0.1


def term_bound(sys, kappa):
    """Upper bound on every term of every form of the characteristic polynomial."""
    m = abs(kappa)
    shifted = m + np.abs(sys.lambdas)
    coupled = sum(abs(c) * np.prod(np.delete(shifted, j)) for j, c in enumerate(sys.couplings))
    return np.prod(shifted) * (m + abs(sys.beta)) + coupled


# ============================================================
# TEST CATEGORY 1: VALIDATOR TESTS (9 tests)
# ============================================================

class TestValidator:
    """Test error taxonomy and input checks."""

    def test_error_categories_and_exit_codes(self):
        """Validation errors exit with 2, numerical errors with 3."""
        assert validator.ValidationError("x").exit_code == 2
        assert validator.OutOfBand("x").category == 'validation'
        assert validator.NumericalError("x").exit_code == 3
        assert validator.PoleProximity("x").category == 'numerical'

    def test_error_to_dict_is_machine_readable(self):
        """Details survive serialization, numpy scalars included."""
        error = validator.IllConditioned("placement failed", residual=np.float64(1e-3))
        payload = error.to_dict()

        assert payload['error'] == 'IllConditioned'
        assert payload['category'] == 'numerical'
        assert payload['details']['residual'] == pytest.approx(1e-3)
        json.dumps(payload)

    def test_error_details_use_exporter_conversion(self):
        """Complex roots and NaN in details follow the exporter's JSON rules."""
        # 1. ARRANGE
        error = validator.LabelCollision("collision", parameter=1.4,
                                         roots=np.array([1.5 + 0.5j, 1.5 - 0.5j]),
                                         measured=np.nan)

        # 2. ACT
        payload = error.to_dict()

        # 3. ASSERT
        assert payload['details'] == exporter.jsonable(error.details)
        assert payload['details']['roots'] == [[1.5, 0.5], [1.5, -0.5]]
        assert payload['details']['measured'] is None
        json.dumps(payload)

    def test_check_spectrum_rejects_increasing(self):
        """Spectrum must be strictly decreasing."""
        with pytest.raises(validator.ValidationError, match="strictly decreasing"):
            validator.check_spectrum([1.0, 2.0])

    def test_check_spectrum_rejects_nonpositive(self):
        """Spectrum must be strictly positive."""
        with pytest.raises(validator.ValidationError, match="strictly positive"):
            validator.check_spectrum([1.0, -0.5])

    def test_check_distinct_flags_repeated(self):
        """Relative gap below tolerance raises ComplexOrRepeatedEigenvalues."""
        with pytest.raises(validator.ComplexOrRepeatedEigenvalues):
            validator.check_distinct(np.array([1.0, 1.0 + 1e-12]))

    def test_check_signs_and_samples(self):
        """Only +/-1 signs; sample counts need an integer above the minimum."""
        with pytest.raises(validator.ValidationError):
            validator.check_signs([1, 0])
        with pytest.raises(validator.ValidationError):
            validator.check_samples(0, minimum=2)
        with pytest.raises(validator.ValidationError):
            validator.check_samples(2.5, minimum=2)
        validator.check_samples(2, minimum=2)

    def test_check_monic(self):
        """Target polynomial must be real and monic."""
        with pytest.raises(validator.ValidationError, match="leading coefficient"):
            validator.check_monic([2.0, 1.0])
        with pytest.raises(validator.ValidationError, match="real"):
            validator.check_monic(np.array([1.0, 1j]))
        with pytest.raises(validator.ValidationError, match="expected degree"):
            validator.check_monic([1.0, 1.0], degree=2)

    def test_check_thread_cap(self):
        """Bad cap values fall back instead of failing."""
        assert validator.check_thread_cap('4') == 4
        assert validator.check_thread_cap('0') == 1
        assert validator.check_thread_cap('many') == config.RUNTIME['default_threads']


# ============================================================
# TEST CATEGORY 2: MODEL TESTS (11 tests)
# ============================================================

class TestModel:
    """Test domain types, canonicalization and coordinates."""

    def test_build_h_layout(self, figure_one):
        """Diagonal (lambda, beta), last column delta, last row omega."""
        h = model.build_h(figure_one)

        np.testing.assert_array_equal(h, [[2.0, 0.0, -1.0],
                                          [0.0, 1.5, 1.0],
                                          [0.5, 0.1, 0.5]])

    def test_couplings_and_trace(self, figure_one):
        """c_j = omega_j delta_j; trace = sum lambda + beta."""
        np.testing.assert_allclose(figure_one.couplings, [-0.5, 0.1])
        assert figure_one.trace == pytest.approx(4.0)

    def test_inconsistent_sizes_rejected(self):
        """Mismatched lengths raise ValidationError."""
        with pytest.raises(validator.ValidationError, match="inconsistent sizes"):
            model.CanonicalSystem.from_arrays([2.0, 1.0], [1], [0.1, 0.2], 0.5)

    def test_canonicalize_diagonal(self):
        """Diagonal A: delta = sign(b), omega = w |b|."""
        # 1. ARRANGE
        general = model.GeneralSystem(np.diag([2.0, 1.0]), [2.0, -0.5], [0.3, 0.4], 0.1)

        # 2. ACT
        sys = model.canonicalize(general)

        # 3. ASSERT
        assert sys.signs.deltas == (1, -1)
        np.testing.assert_allclose(sys.omegas, [0.6, 0.2])
        assert sys.beta == 0.1

    def test_canonicalize_preserves_spectrum(self):
        """Canonical H is similar to the general bordered matrix."""
        general = model.GeneralSystem(np.array([[2.0, 0.5], [0.0, 1.0]]),
                                      [1.0, -1.0], [0.3, 0.2], 0.25)

        sys = model.canonicalize(general)

        expected = np.sort_complex(np.linalg.eigvals(general.bordered_matrix()))
        actual = np.sort_complex(np.linalg.eigvals(model.build_h(sys)))
        np.testing.assert_allclose(actual, expected, atol=1e-10)

    def test_canonicalize_similarity_transform(self, rng):
        """A = S diag(3, 2, 1) S^-1 with nonzero b keeps the characteristic polynomial."""
        for _ in range(20):
            # 1. ARRANGE
            s_matrix = rng.standard_normal((3, 3)) + 3.0 * np.eye(3)
            a_matrix = s_matrix @ np.diag([3.0, 2.0, 1.0]) @ np.linalg.inv(s_matrix)
            general = model.GeneralSystem(a_matrix, rng.standard_normal(3),
                                          rng.standard_normal(3), float(rng.uniform(0.0, 3.0)))

            # 2. ACT
            sys = model.canonicalize(general)

            # 3. ASSERT
            np.testing.assert_allclose(sys.lambdas, [3.0, 2.0, 1.0], atol=1e-10)
            np.testing.assert_allclose(charpoly.charpoly_coeffs(sys).coeffs,
                                       np.poly(general.bordered_matrix()).real,
                                       rtol=1e-8, atol=1e-8)

    def test_canonicalize_inverts_build_h(self, rng):
        """The bordered matrix of a canonical system canonicalizes to itself."""
        for _ in range(20):
            # 1. ARRANGE
            sys = system_generator.random_system(rng, int(rng.integers(1, 6)))
            n = sys.n
            matrix = model.build_h(sys)
            general = model.GeneralSystem(matrix[:n, :n], matrix[:n, n], matrix[n, :n],
                                          matrix[n, n])

            # 2. ACT
            result = model.canonicalize(general)

            # 3. ASSERT
            np.testing.assert_allclose(result.lambdas, sys.lambdas, atol=1e-12)
            assert result.signs.deltas == sys.signs.deltas
            np.testing.assert_allclose(result.couplings, sys.couplings, atol=1e-12)
            assert result.beta == sys.beta

    def test_canonicalize_rejects_complex_and_repeated(self):
        """Rotation matrices and repeated eigenvalues are out of scope."""
        with pytest.raises(validator.ComplexOrRepeatedEigenvalues):
            model.canonicalize(model.GeneralSystem(np.array([[0.0, -1.0], [1.0, 0.0]]),
                                                   [1.0, 1.0], [1.0, 1.0], 0.0))
        with pytest.raises(validator.ComplexOrRepeatedEigenvalues):
            model.canonicalize(model.GeneralSystem(np.eye(2), [1.0, 1.0], [1.0, 1.0], 0.0))

    def test_canonicalize_rejects_nearly_defective(self):
        """Nearly parallel eigenvectors raise NotDiagonalizable."""
        a_matrix = np.array([[1.0, 1e13], [0.0, 1.0 + 1e-7]])

        with pytest.raises(validator.NotDiagonalizable):
            model.canonicalize(model.GeneralSystem(a_matrix, [1.0, 1.0], [1.0, 1.0], 0.0))

    def test_canonicalize_zero_significance(self):
        """A vanishing border coefficient names its index."""
        with pytest.raises(validator.ZeroSignificanceCoefficient) as excinfo:
            model.canonicalize(model.GeneralSystem(np.diag([2.0, 1.0]), [1.0, 0.0],
                                                   [0.3, 0.4], 0.1))

        assert excinfo.value.index == 2

    def test_resolve_coordinate(self):
        """Names map onto 1..n+1; beta is n+1."""
        assert model.resolve_coordinate('omega2', 2) == 2
        assert model.resolve_coordinate('w1', 2) == 1
        assert model.resolve_coordinate('beta', 2) == 3
        assert model.resolve_coordinate(3, 2) == 3
        with pytest.raises(validator.ValidationError):
            model.resolve_coordinate('omega5', 2)
        with pytest.raises(validator.ValidationError):
            model.resolve_coordinate('gamma', 2)


# ============================================================
# TEST CATEGORY 3: CHARACTERISTIC POLYNOMIAL TESTS (8 tests)
# ============================================================

class TestCharpoly:
    """Test the equivalent forms of the characteristic equation."""

    def test_symmetric_functions(self):
        """e_s of (1, 2, 3) = 1, 6, 11, 6."""
        np.testing.assert_allclose(charpoly.symmetric_functions([1.0, 2.0, 3.0]),
                                   [1.0, 6.0, 11.0, 6.0])

    def test_trivial_policy_coefficients(self):
        """omega = 0 gives prod (kappa - lambda_j)(kappa - beta)."""
        sys = model.CanonicalSystem.from_arrays([2.0, 1.5], [-1, 1], [0.0, 0.0], 0.5)

        np.testing.assert_allclose(charpoly.charpoly_coeffs(sys).coeffs,
                                   np.poly([2.0, 1.5, 0.5]))

    def test_order_one_coefficients(self):
        """n = 1: kappa^2 - (lambda + beta) kappa + lambda beta - c."""
        sys = model.CanonicalSystem.from_arrays([1.0], [-1], [0.25], 0.0)

        np.testing.assert_allclose(charpoly.charpoly_coeffs(sys).coeffs, [1.0, -1.0, 0.25])

    def test_forms_agree_on_random_systems(self, rng):
        """Expanded, product, both polar forms and det(kappa I - H) agree."""
        for _ in range(40):
            n = int(rng.integers(1, 9))
            sys = system_generator.random_system(rng, n)
            poly = charpoly.charpoly_coeffs(sys)
            for _ in range(10):
                kappa = complex(rng.uniform(-0.5, sys.lambdas[0] + 1.0), rng.uniform(-1.0, 1.0))
                while np.min(np.abs(kappa - sys.lambdas)) < 1e-3:
                    kappa += 0.01j
                p_all = np.prod(kappa - sys.lambdas)
                p_one = np.prod(kappa - sys.lambdas[1:])
                forms = [
                    poly(kappa),
                    charpoly.charpoly_value(sys, kappa),
                    -charpoly.eval_polar_j(sys, kappa, 1) * p_one,
                    -charpoly.eval_polar_beta(sys, kappa) * p_all,
                ]
                scale = term_bound(sys, kappa)
                for value in forms[1:]:
                    assert abs(value - forms[0]) <= 1e-10 * scale
                det = np.linalg.det(kappa * np.eye(n + 1) - model.build_h(sys))
                assert abs(det - forms[1]) <= 1e-9 * scale

    def test_polar_residual_vanishes_at_eigenvalues(self, figure_one):
        """f(kappa) = -omega_1 delta_1 at every eigenvalue."""
        sys = figure_one.with_coordinate(1, 0.1)

        for kappa in spectra.eigenvalues(sys):
            assert charpoly.eval_f(sys, kappa) == pytest.approx(-sys.couplings[0], abs=1e-9)
            assert abs(charpoly.eval_polar_beta(sys, kappa)) < 1e-9

    def test_pole_proximity(self, figure_one):
        """Evaluating a polar form on one of its poles raises PoleProximity."""
        with pytest.raises(validator.PoleProximity):
            charpoly.eval_polar_j(figure_one, 1.5, 1)
        with pytest.raises(validator.PoleProximity):
            charpoly.eval_polar_beta(figure_one, 2.0)
        charpoly.eval_polar_j(figure_one, 2.0, 1)

    def test_level_function_returns_coordinate_value(self, figure_one):
        """F(kappa) reproduces the coordinate at each real eigenvalue."""
        sys = figure_one.with_coordinate(1, 0.1)

        for kappa in spectra.eigenvalues(sys):
            assert charpoly.level_jet(sys, kappa.real, 1)[0] == pytest.approx(0.1, abs=1e-9)
            assert charpoly.level_jet(sys, kappa.real, 3)[0] == pytest.approx(0.5, abs=1e-9)

    def test_level_jet_matches_finite_differences(self, figure_one):
        """F', F'', F''' agree with central differences of the lower order."""
        h = 1e-4
        for coordinate in (1, 2, 3):
            jet = charpoly.level_jet(figure_one, 1.8, coordinate)
            up = charpoly.level_jet(figure_one, 1.8 + h, coordinate)
            down = charpoly.level_jet(figure_one, 1.8 - h, coordinate)
            for order in range(3):
                estimate = (up[order] - down[order]) / (2.0 * h)
                assert estimate == pytest.approx(jet[order + 1],
                                                 abs=1e-5 * (1.0 + abs(jet[order + 1])))


# ============================================================
# TEST CATEGORY 4: SPECTRA TESTS (13 tests)
# ============================================================

class TestSpectra:
    """Test the dual eigen-solve and root labeling."""

    def test_zero_policy_roots(self, figure_one):
        """omega = 0: roots are lambda_1..lambda_n and beta, labeled in order."""
        sys = figure_one.with_policy(omegas=[0.0, 0.0])

        np.testing.assert_allclose(spectra.eigenvalues(sys).as_array(), [2.0, 1.5, 0.5],
                                   atol=1e-12)
        np.testing.assert_array_equal(spectra.label_roots(sys).as_array(), [2.0, 1.5, 0.5])

    def test_double_root_at_discriminant_zero(self):
        """n = 1, omega_1 = (1 - beta)^2 / 4 gives the double root 1/2."""
        sys = model.CanonicalSystem.from_arrays([1.0], [-1], [0.25], 0.0)

        roots = spectra.eigenvalues(sys).as_array()

        np.testing.assert_allclose(roots, [0.5, 0.5], atol=1e-6)

    def test_wilkinson_perturbation(self):
        """Root finder resolves the perturbed Wilkinson polynomial."""
        # 1. ARRANGE & ACT
        roots, _ = wilkinson_roots()

        # 2. ASSERT real roots
        real = np.sort(roots[roots.imag == 0.0].real)
        assert real.size == 6
        for value, quoted in zip(real, [0.9, 2.1, 2.6, 18.4, 18.9, 20.0]):
            assert in_quoted_window(value, quoted), f"real root {value} vs {quoted}"

        # 3. ASSERT every conjugate pair
        upper = roots[roots.imag > 0.0]
        upper = upper[np.argsort(upper.real)]
        lower = np.sort_complex(roots[roots.imag < 0.0])
        assert upper.size == 7
        np.testing.assert_array_equal(np.sort_complex(np.conj(upper)), lower)
        quoted_re = [4.0, 5.9, 8.1, 10.5, 12.9, 15.1, 17.0]
        quoted_im = [1.1, 1.9, 2.5, 2.7, 2.5, 1.9, 1.1]
        for root, re_part, im_part in zip(upper, quoted_re, quoted_im):
            assert in_quoted_window(root.real, re_part), f"Re {root} vs {re_part}"
            assert in_quoted_window(abs(root.imag), im_part), f"|Im| {root} vs {im_part}"

    def test_symmetrize_snaps_and_pairs(self):
        """Tiny imaginary parts vanish; conjugate pairs become exact."""
        result = spectra.symmetrize(np.array([1.0 + 1e-13j, 2.0 + 1.0j, 2.0 - 1.0000001j]))

        assert result[0] == 1.0
        assert result[1] == np.conj(result[2])

    def test_trace_determinant_and_conjugate_closure(self, rng):
        """Sum and product of roots match trace and det; the set is conjugate-closed."""
        for _ in range(100):
            sys = system_generator.random_system(rng, int(rng.integers(1, 11)))
            roots = spectra.eigenvalues(sys).as_array()

            assert abs(roots.sum() - sys.trace) <= 1e-8 * (1.0 + abs(sys.trace))
            det = np.linalg.det(model.build_h(sys))
            assert abs(np.prod(roots) - det) <= 1e-8 * np.prod(1.0 + np.abs(roots))
            np.testing.assert_allclose(np.sort_complex(roots), np.sort_complex(np.conj(roots)),
                                       atol=1e-12)

    def test_method_disagreement(self, figure_one):
        """Root finder results far from the eigen-solve raise MethodDisagreement."""
        with patch('modules.spectra.polynomial_roots', return_value=np.array([9.0, 8.0, 7.0])):
            with pytest.raises(validator.MethodDisagreement):
                spectra.eigenvalues(figure_one)

    def test_figure_one_large_omega_labels(self, figure_one):
        """omega_1 = 1: kappa_1, kappa_2 conjugate, kappa_3 real below lambda_2."""
        labeling = spectra.label_roots(figure_one.with_coordinate(1, 1.0))

        assert labeling[1] == pytest.approx(np.conj(labeling[2]), abs=1e-9)
        assert labeling[1].imag != 0.0
        assert labeling.is_real[3]
        assert labeling[3].real == pytest.approx(1.3595, abs=2e-3)
        assert np.max(np.abs(labeling.as_array())) < 1.5

    def test_figure_one_small_omega_labels(self, figure_one):
        """omega_1 = 0.1 lies before the bifurcation: all roots real, kappa_3 < beta."""
        labeling = spectra.label_roots(figure_one.with_coordinate(1, 0.1))
        roots = labeling.as_array()

        assert np.all(labeling.real_mask)
        assert roots[0].real > roots[1].real > roots[2].real
        assert roots[2].real < 0.5

    def test_dominant_root_below_lambda1(self, rng):
        """delta_1 omega_1 < 0 with small couplings: lambda_2 < kappa_1 < lambda_1."""
        for _ in range(20):
            sys = system_generator.dominance_system(rng, int(rng.integers(2, 5)))
            kappa_1 = spectra.label_roots(sys)[1]

            assert kappa_1.imag == 0.0
            assert sys.lambdas[1] < kappa_1.real < sys.lambdas[0]

    def test_interlacing(self, rng):
        """c_1 < 0, c_j > 0: kappa_{n+1} < lambda_n < kappa_n < ... < lambda_2 < kappa_2."""
        for _ in range(20):
            n = int(rng.integers(2, 6))
            sys = system_generator.interlacing_system(rng, n)
            roots = spectra.label_roots(sys).as_array()

            assert np.all(roots.imag == 0.0)
            for j in range(2, n + 1):
                assert sys.lambdas[j - 1] < roots[j - 1].real < sys.lambdas[j - 2]
            assert roots[n].real < sys.lambdas[-1]

    def test_anchor_matches_labels(self, figure_one):
        """A nearby anchor carries the labels in one step."""
        labeling = spectra.label_roots(figure_one.with_coordinate(1, 0.1))

        moved = spectra.label_roots(figure_one.with_coordinate(1, 0.1001), anchor=labeling)

        assert np.max(np.abs(moved.as_array() - labeling.as_array())) < 1e-2

    def test_real_roots_passing_through_raise_collision(self):
        """A fixed lambda_2 (omega_2 = 0) met by a moving real root cannot be relabeled."""
        # 1. ARRANGE: roots 1.5 and those of (z - 2)(z - beta) + 0.05; they meet at beta = 1.4
        sys = model.CanonicalSystem.from_arrays([2.0, 1.5], [-1, 1], [0.05, 0.0], 1.0)

        # 2. ACT
        with pytest.raises(validator.LabelCollision) as excinfo:
            locus.trace_locus(sys, 'beta', 1.0, 1.7, 8)

        # 3. ASSERT
        assert excinfo.value.parameter == pytest.approx(1.4, abs=1e-6)
        assert excinfo.value.details['pair'] == [2, 3]

    def test_pair_status_across_crossing(self, figure_one):
        """Status on each side of the bifurcation decides the crossing kind."""
        event = locus.critical_points(figure_one, 'omega1')[0]

        def system_at(value):
            return figure_one.with_coordinate(1, value)

        below = spectra._status_near(system_at, event.parameter_value - 1e-3, 1.728)
        above = spectra._status_near(system_at, event.parameter_value + 1e-3, 1.728)

        assert (below, above) == ('real', 'conjugate')


# ============================================================
# TEST CATEGORY 5: LOCUS TESTS (20 tests)
# ============================================================

class TestLocus:
    """Test tracing, bifurcation classification, asymptotes and circles."""

    @pytest.mark.slow
    def test_figure_one_trace(self, figure_one):
        """Pair turns conjugate once; its real part falls toward (lambda_1 + beta)/2."""
        # 1. ARRANGE & ACT
        trace = locus.trace_locus(figure_one, 'omega1', 0.1, 1.2, 12)

        # 2. ASSERT the single event
        assert len(trace.events) == 1
        event = trace.events[0]
        assert event.kind == spectra.REAL_TO_CONJUGATE
        assert event.indices == (1, 2)
        assert event.parameter_value == pytest.approx(0.2148, abs=1e-3)
        assert event.direction == -1

        # 3. ASSERT the branches past the event
        roots = trace.roots()
        late = trace.grid >= 0.3
        pair, third = roots[late, 0], roots[late, 2]
        np.testing.assert_allclose(pair, np.conj(roots[late, 1]), atol=1e-9)
        assert np.all(pair.imag > 0.0)
        assert np.all(np.diff(pair.real) <= 1e-12)
        assert np.all(pair.real > 1.25)
        assert np.all(third.imag == 0.0)
        assert np.all((third.real > 0.5) & (third.real < 1.5))
        assert np.any(np.max(np.abs(roots), axis=1) < 1.5)

    def test_trace_frame_layout(self, figure_one):
        """Frame has one row per (sample, root)."""
        trace = locus.trace_locus(figure_one, 'beta', 0.4, 0.6, 3)
        frame = trace.to_frame()

        assert list(frame.columns) == ['param', 'index', 're', 'im', 'is_real']
        assert len(frame) == len(trace.grid) * 3
        assert trace.parameter_name == 'beta'

    def test_trace_rejects_bad_sample_count(self, figure_one):
        """Zero samples is a validation error."""
        with pytest.raises(validator.ValidationError):
            locus.trace_locus(figure_one, 'omega1', 0.1, 1.2, 0)

    def test_order_one_trace_monotone(self):
        """n = 1, delta_1 = -1: the two real roots approach (1 + beta)/2."""
        sys = model.CanonicalSystem.from_arrays([1.0], [-1], [0.0], 0.0)

        trace = locus.trace_locus(sys, 'omega1', 0.0, 0.24, 7)

        first, second = trace.branch(1), trace.branch(2)
        assert np.all(first.imag == 0.0) and np.all(second.imag == 0.0)
        assert np.all(np.diff(first.real) < 0.0)
        assert np.all(np.diff(second.real) > 0.0)
        assert np.all(first.real > 0.5) and np.all(second.real < 0.5)

    def test_critical_points_figure_one(self, figure_one):
        """Level function of omega_1 peaks at kappa* ~ 1.728, omega_1* ~ 0.2148."""
        events = locus.critical_points(figure_one, 'omega1')

        assert len(events) == 1
        assert events[0].parameter_value == pytest.approx(0.2148, abs=1e-3)
        assert events[0].kind == spectra.REAL_TO_CONJUGATE
        assert events[0].direction == -1

    def test_classify_bifurcation_agrees(self, figure_one):
        """Predicted and measured real-part motion point toward the origin."""
        event = locus.critical_points(figure_one, 'omega1')[0]

        result = locus.classify_bifurcation(figure_one, event)

        assert result.kappa_star == pytest.approx(1.728, abs=5e-3)
        assert result.predicted == -1
        assert result.measured < 0.0
        assert result.agrees

    @pytest.mark.slow
    def test_classify_bifurcation_random(self, rng):
        """Third-derivative prediction matches the measured motion on random systems."""
        # 1. ARRANGE & ACT
        results = []
        for _ in range(500):
            if len(results) >= 20:
                break
            sys = system_generator.random_system(rng, int(rng.integers(2, 5)))
            try:
                events = locus.critical_points(sys, 'omega1')
            except validator.NumericalError:
                continue
            for event in events:
                if abs(event.parameter_value) > 10.0:
                    continue
                try:
                    result = locus.classify_bifurcation(sys, event)
                except (validator.NumericalError, validator.ValidationError):
                    continue
                # Cubic term must dominate the measured motion one offset away.
                ratio = abs(result.third) / result.second ** 2
                if abs(result.second) < 1e-2 or not 1e-2 <= ratio <= 1e2:
                    continue
                results.append(result)

        # 2. ASSERT
        assert len(results) >= 20
        for result in results:
            assert result.agrees, f"kappa*={result.kappa_star}: predicted {result.predicted}, " \
                                  f"measured {result.measured}"

    def test_classify_pair_between_top_poles(self):
        """delta_1 = -1: a pair born between lambda_2 and lambda_1 moves toward the origin."""
        # 1. ARRANGE
        sys = model.CanonicalSystem.from_arrays([2.0, 1.5, 0.8], [-1, 1, 1],
                                                [0.5, 0.1, 0.01], 0.5)
        events = locus.critical_points(sys, 'omega1')
        event = min(events, key=lambda e: abs(e.parameter_value - 0.212))

        # 2. ACT
        result = locus.classify_bifurcation(sys, event)

        # 3. ASSERT
        assert 1.5 < result.kappa_star < 2.0
        assert result.predicted == -1
        assert result.measured < 0.0
        assert result.agrees

    def test_classify_degenerate_jet(self):
        """n = 1 has F''' = 0: DegenerateJet with no measurable motion."""
        sys = model.CanonicalSystem.from_arrays([1.0], [-1], [0.1], 0.0)
        event = locus.critical_points(sys, 'omega1')[0]

        with pytest.raises(validator.DegenerateJet) as excinfo:
            locus.classify_bifurcation(sys, event)

        assert event.parameter_value == pytest.approx(0.25)
        assert abs(excinfo.value.measured_motion) < 1e-8

    def test_asymptote_conjugate_branch(self, figure_one):
        """delta_1 = -1: Im grows like sqrt(omega), Re decays like A/(2 omega)."""
        fit = locus.fit_asymptote(figure_one, 1)
        info = locus.asymptote_info(figure_one, 1)

        assert info.law == 'conjugate'
        assert info.a_j == pytest.approx(0.05)
        assert info.center == pytest.approx(1.25)
        assert fit.im_slope == pytest.approx(0.5, abs=0.02)
        assert fit.re_slope == pytest.approx(-1.0, abs=0.05)
        assert fit.re_coefficient == pytest.approx(fit.predicted_coefficient, rel=0.10)
        assert fit.bounded_distance < 1e-3

    def test_asymptote_real_branches(self, figure_one):
        """delta_2 = +1: two real branches, midpoint offset -A/(2 omega)."""
        fit = locus.fit_asymptote(figure_one, 2)

        assert locus.asymptote_info(figure_one, 2).law == 'real-branches'
        assert fit.branch_slope == pytest.approx(0.5, abs=0.02)
        assert fit.re_slope == pytest.approx(-1.0, abs=0.05)
        assert fit.predicted_coefficient == pytest.approx(-0.125)
        assert fit.re_coefficient == pytest.approx(-0.125, rel=0.10)

    def test_asymptote_beta(self, figure_one):
        """Large beta: kappa ~ beta + sum(c)/beta."""
        fit = locus.fit_asymptote(figure_one, 3)

        assert fit.re_slope == pytest.approx(-1.0, abs=0.05)
        assert fit.re_coefficient == pytest.approx(-0.4, rel=0.10)

    def test_asymptote_zero_a(self, figure_one):
        """omega_2 = 0 makes A_1 vanish."""
        with pytest.raises(validator.ZeroA):
            locus.asymptote_info(figure_one.with_coordinate(2, 0.0), 1)

    def test_bounded_roots_approach_other_poles(self, figure_one):
        """At omega_1 = 1e6 the bounded root sits next to lambda_2."""
        fit = locus.fit_asymptote(figure_one, 1, values=[1e5, 1e6])

        assert fit.bounded_distance < 1e-3


class TestCircle:
    """Test the two-pole quadratic and its circle."""

    def test_circle_example(self):
        """tau = 1, T = 2, k = 3: roots +/- i/sqrt(3) on the circle (-1/3, 2/3)."""
        pair = locus.circle_two_pole(1.0, 2.0, 3.0)

        np.testing.assert_allclose(pair.roots, [1j / np.sqrt(3.0), -1j / np.sqrt(3.0)],
                                   atol=1e-12)
        assert pair.center == pytest.approx(-1.0 / 3.0)
        assert pair.radius == pytest.approx(2.0 / 3.0)
        assert pair.band == pytest.approx((1.0, 9.0))

    def test_band_endpoints_are_double_roots(self):
        """K+ gives tau/(1 + T); K- gives tau/(1 - T)."""
        upper = locus.circle_two_pole(1.0, 2.0, 9.0)
        lower = locus.circle_two_pole(1.0, 2.0, 1.0)

        np.testing.assert_allclose(upper.roots, [1.0 / 3.0] * 2, atol=1e-8)
        np.testing.assert_allclose(lower.roots, [-1.0] * 2, atol=1e-8)

    def test_unit_t_is_vertical_line(self):
        """T = 1: Re z = tau/2 and the circle degenerates."""
        pair = locus.circle_two_pole(1.0, 1.0, 1.0)

        np.testing.assert_allclose(pair.roots.real, [0.5, 0.5])
        assert np.isinf(pair.center) and np.isinf(pair.radius)

    def test_out_of_band(self):
        """Outside [K-, K+] the roots are real."""
        with pytest.raises(validator.OutOfBand):
            locus.circle_two_pole(1.0, 2.0, 0.5)
        with pytest.raises(validator.OutOfBand):
            locus.circle_two_pole(1.0, 2.0, 0.0)

    def test_random_triples_on_circle(self, rng):
        """Roots lie on the predicted circle to 1e-10."""
        for _ in range(50):
            tau = rng.uniform(0.5, 2.0)
            t_coeff = rng.choice([rng.uniform(0.2, 0.8), rng.uniform(1.2, 3.0)])
            k_lo, k_hi = (1.0 - t_coeff) ** 2 / tau, (1.0 + t_coeff) ** 2 / tau
            pair = locus.circle_two_pole(tau, t_coeff, rng.uniform(k_lo, k_hi))

            deviation = np.abs(np.abs(pair.roots - pair.center) - pair.radius)
            assert np.all(deviation <= 1e-10 * (1.0 + pair.radius))

    def test_circle_deviation_fit(self):
        """Least-squares fit recovers the analytic circle."""
        points = np.concatenate([locus.circle_two_pole(1.0, 2.0, k).roots
                                 for k in (1.5, 3.0, 5.0, 8.0)])

        fit = locus.circle_deviation(points)

        assert fit.center == pytest.approx(-1.0 / 3.0, abs=1e-9)
        assert fit.radius == pytest.approx(2.0 / 3.0, abs=1e-9)
        assert fit.max_deviation < 1e-9
        assert fit.samples == 8


# ============================================================
# TEST CATEGORY 6: ZERO PLACEMENT TESTS (10 tests)
# ============================================================

class TestPlacement:
    """Test the inverse problem policy <- characteristic polynomial."""

    def test_round_trip_small_orders(self, rng):
        """policy -> coefficients -> policy within 1e-9 for n <= 6."""
        for _ in range(100):
            sys = system_generator.random_system(rng, int(rng.integers(1, 7)))
            target = charpoly.charpoly_coeffs(sys)

            result = placement.place_zeros(sys.spectrum, sys.signs, target)

            np.testing.assert_allclose(result.policy.values(), sys.omegas, atol=1e-9)
            assert result.policy.beta == pytest.approx(sys.beta, abs=1e-9)

    def test_forward_identity_large_orders(self, rng):
        """For n <= 12 either the forward check holds or IllConditioned is raised."""
        for n in (8, 10, 12):
            sys = system_generator.random_system(rng, n)
            target = charpoly.charpoly_coeffs(sys)
            try:
                result = placement.place_zeros(sys.spectrum, sys.signs, target)
            except validator.IllConditioned as e:
                assert e.residual > config.TOLERANCES['placement_residual']
                continue
            placed = charpoly.charpoly_coeffs(
                model.CanonicalSystem(sys.spectrum, sys.signs, result.policy)).coeffs
            relative = np.abs(placed - target.coeffs) / (1.0 + np.abs(target.coeffs))
            assert np.max(relative) <= config.TOLERANCES['placement_residual']

    def test_decoupled_target(self):
        """Target (k - lambda_1)(k - lambda_2)(k - b) places omega = 0, beta = b."""
        spectrum = model.ReducedSpectrum((2.0, 1.0))
        target = charpoly.Polynomial.from_roots([2.0, 1.0, 0.3])

        result = placement.place_zeros(spectrum, model.Signs((-1, 1)), target)

        np.testing.assert_allclose(result.policy.values(), [0.0, 0.0], atol=1e-12)
        assert result.policy.beta == pytest.approx(0.3)

    def test_vandermonde_inverse(self, rng):
        """Closed-form inverse: ||V V^-1 - I|| < 1e-8 for n <= 6."""
        for n in range(1, 7):
            spectrum = system_generator.random_spectrum(rng, n)
            product = placement.vandermonde(spectrum) @ placement.vandermonde_inverse(spectrum)

            assert np.max(np.abs(product - np.eye(n))) < 1e-8

    def test_degree_mismatch(self):
        """Target degree must be n + 1."""
        with pytest.raises(validator.ValidationError):
            placement.place_zeros(model.ReducedSpectrum((2.0, 1.0)), model.Signs((1, 1)),
                                  charpoly.Polynomial(np.array([1.0, 0.0, 0.0])))

    def test_ill_conditioned_reported(self, figure_one):
        """A failing forward check surfaces the residual."""
        target = charpoly.charpoly_coeffs(figure_one)

        with patch('modules.placement._forward_check', return_value=(1.0, np.zeros(3))):
            with pytest.raises(validator.IllConditioned) as excinfo:
                placement.place_zeros(figure_one.spectrum, figure_one.signs, target)

        assert excinfo.value.residual == pytest.approx(1.0)

    def test_cauchy_radius(self, rng):
        """Radius of z^2 - 1 is 1; it bounds every root of random polynomials."""
        assert placement.cauchy_radius(charpoly.Polynomial(np.array([1.0, 0.0, -1.0]))) == \
            pytest.approx(1.0)
        for _ in range(20):
            poly = charpoly.charpoly_coeffs(system_generator.random_system(rng, 4))
            radius = placement.cauchy_radius(poly)
            assert np.max(np.abs(np.roots(poly.coeffs))) <= radius * (1.0 + 1e-9)

    def test_cauchy_polytope(self):
        """Roots inside the lambda_1 disc satisfy the polytope inequality here."""
        inside = charpoly.Polynomial.from_roots([0.5, 0.2])
        outside = charpoly.Polynomial.from_roots([1.5, 0.2])

        assert placement.in_cauchy_polytope(inside, 1.0)
        assert not placement.in_cauchy_polytope(outside, 1.0)

    def test_cauchy_radius_golden_ratio(self):
        """z^2 - z - 1: the radius is the golden ratio to machine precision."""
        radius = placement.cauchy_radius(charpoly.Polynomial(np.array([1.0, -1.0, -1.0])))

        assert radius == pytest.approx((1.0 + np.sqrt(5.0)) / 2.0, rel=1e-14)

    def test_cauchy_polytope_random_targets(self, rng):
        """Polytope membership equals radius < lambda_1 and puts every root in the disc."""
        members = 0
        outsiders = 0
        for _ in range(100):
            # 1. ARRANGE
            degree = int(rng.integers(2, 7))
            lambda1 = float(rng.uniform(0.5, 3.0))
            scale = rng.uniform(0.0, 0.6)
            tail = rng.uniform(-1.0, 1.0, size=degree) * lambda1 ** np.arange(1, degree + 1) * scale
            target = charpoly.Polynomial(np.concatenate([[1.0], tail]))

            # 2. ACT
            inside = placement.in_cauchy_polytope(target, lambda1)
            radius = placement.cauchy_radius(target)

            # 3. ASSERT
            assert inside == (radius < lambda1)
            if inside:
                members += 1
                report = regions.annulus_report(np.roots(target.coeffs), 0.5 * lambda1, lambda1)
                assert report.all_in_disc_lambda1
            else:
                outsiders += 1

        assert members >= 10
        assert outsiders >= 1


# ============================================================
# TEST CATEGORY 7: REGIONS TESTS (8 tests)
# ============================================================

class TestRegions:
    """Test strip, K(epsilon), star region, Gerschgorin and annulus."""

    def test_k_interval_endpoints(self):
        """Endpoints solve (z - beta)(z - lambda_1) = epsilon."""
        k = regions.k_interval(0.5, 2.0, 0.1)

        assert (k.hi - 0.5) * (k.hi - 2.0) == pytest.approx(0.1)
        assert (k.lo - 0.5) * (k.lo - 2.0) == pytest.approx(0.1)
        assert k.lo < 0.5 and k.hi > 2.0

    def test_k_interval_negative_discriminant(self):
        """epsilon < -(lambda - beta)^2 / 4 has no real endpoints."""
        with pytest.raises(validator.NegativeDiscriminant):
            regions.k_interval(0.5, 2.0, -1.0)

    def test_star_region(self):
        """Points hugging K are inside; distant points are not."""
        region = regions.star_region(regions.k_interval(0.5, 2.0, 0.1), 3)

        assert region.contains(1.25 + 0.01j)
        assert region.contains(1.0)
        assert not region.contains(1.25 + 100j)
        assert not region.contains(5.0)

    def test_strip(self):
        """Real roots are not classified; non-real roots need beta <= Re <= lambda_1."""
        assert regions.strip_test([1.0, 1.2 + 0.3j, 3.0 + 1.0j], 0.5, 2.0) == [None, True, False]

    def test_gerschgorin_contains_all_roots(self, rng):
        """Every eigenvalue lies in the row union and in the column union."""
        for _ in range(30):
            sys = system_generator.random_system(rng, int(rng.integers(1, 7)))
            report = regions.gerschgorin(sys)

            for row in report.membership(spectra.eigenvalues(sys)):
                assert row['in_rows'] and row['in_columns']
                assert row['tightest'] is not None

    def test_annulus_buckets_and_ties(self):
        """Ties at lambda_2 count inside the disc, ties at lambda_1 outside."""
        report = regions.annulus_report([2.5, 1.5, 1.9, 0.3 + 0.2j, 2.0], 1.5, 2.0)

        assert report.buckets == (regions.OUTSIDE, regions.INSIDE, regions.ANNULUS,
                                  regions.INSIDE, regions.OUTSIDE)
        assert report.any_in_annulus
        assert not report.all_in_disc_lambda1

    @pytest.mark.slow
    def test_qualifying_bounds_hold(self, rng):
        """delta omega >= 0, beta <= lambda_n, sum <= epsilon: no violations."""
        for _ in range(200):
            n = int(rng.integers(1, 6))
            sys = system_generator.qualifying_bounds_system(rng, n, epsilon=0.5)
            roots = spectra.eigenvalues(sys)

            report = regions.eigenvalue_bounds(sys, roots, epsilon=0.5)

            assert report.hypotheses_hold
            assert report.violations == 0
            k = regions.k_interval(sys.beta, sys.lambdas[0], 0.5, lambda_low=sys.lambdas[-1])
            assert all(regions.star_test(roots, regions.star_region(k, n + 1)))

    def test_region_rows_figure_one(self, figure_one):
        """Conjugate pair at omega_1 = 1 sits in the strip and the annulus-free disc."""
        sys = figure_one.with_coordinate(1, 1.0)
        roots = spectra.eigenvalues(sys)

        rows = regions.region_rows(sys, roots)

        assert [row['strip'] for row in rows if row['root'].imag != 0.0] == [True, True]
        assert all(row['annulus'] == regions.INSIDE for row in rows)
        assert all(row['gerschgorin'] for row in rows)


# ============================================================
# TEST CATEGORY 8: SENSITIVITY TESTS (8 tests)
# ============================================================

class TestSensitivity:
    """Test closed-form derivatives, masks and sign predictions."""

    def test_starter_derivative(self, figure_one):
        """At omega = 0: d kappa_1 / d omega_1 = delta_1 / (lambda_1 - beta)."""
        sys = figure_one.with_policy(omegas=[0.0, 0.0])

        matrix = sensitivity.dkappa(sys, spectra.label_roots(sys))

        assert matrix.d[0, 0] == pytest.approx(-1.0 / 1.5, abs=1e-10)
        assert matrix.valid_mask.all()

    def test_matches_finite_differences(self, rng):
        """Closed form agrees with central differences on real roots."""
        for _ in range(50):
            sys = system_generator.interlacing_system(rng, 3)
            labeling = spectra.label_roots(sys)
            matrix = sensitivity.dkappa(sys, labeling)

            for k in range(1, sys.n + 2):
                column = sensitivity.finite_difference_dkappa(sys, labeling, k).real
                expected = matrix.d[:, k - 1]
                assert np.all(np.abs(column - expected) <= 1e-5 * (1.0 + np.abs(expected)))

    def test_trace_identities(self, rng):
        """Sum over roots: d/d beta gives 1, d/d omega_j gives 0."""
        for _ in range(10):
            sys = system_generator.dominance_system(rng, 3, scale=0.05)
            labeling = spectra.label_roots(sys)
            if not labeling.real_mask.all():
                continue
            sums = sensitivity.dkappa(sys, labeling).d.sum(axis=0)

            np.testing.assert_allclose(sums[:-1], 0.0, atol=1e-6)
            assert sums[-1] == pytest.approx(1.0, abs=1e-6)

    def test_complex_rows_masked(self, figure_one):
        """Rows of the conjugate pair are NaN in the frame, never zero."""
        sys = figure_one.with_coordinate(1, 1.0)

        matrix = sensitivity.dkappa(sys, spectra.label_roots(sys))
        frame = matrix.to_frame()

        assert not matrix.valid_mask[0].any() and not matrix.valid_mask[1].any()
        assert matrix.valid_mask[2].all()
        assert frame.loc[frame['h'] <= 2, 'value'].isna().all()
        assert frame.loc[frame['h'] == 3, 'value'].notna().all()

    def test_critical_point(self, figure_one):
        """Coincident labeled roots raise CriticalPoint with the pair."""
        labeling = spectra.RootLabeling(np.array([1.7, 1.7, 0.5], dtype=complex))

        with pytest.raises(validator.CriticalPoint) as excinfo:
            sensitivity.dkappa(figure_one, labeling)

        assert excinfo.value.pair == (1, 2)

    def test_dominant_root_signs(self, rng):
        """Dominant-root sign pattern holds without mismatches."""
        for _ in range(10):
            sys = system_generator.dominance_system(rng, 3)
            report = sensitivity.sign_check(sys, spectra.label_roots(sys), corollary=2)

            assert report.corollaries == (2,)
            assert report.claims
            assert not report.mismatches

    def test_interlaced_root_signs(self, rng):
        """Interlaced-root sign pattern holds without mismatches."""
        for _ in range(10):
            sys = system_generator.interlacing_system(rng, 3)
            report = sensitivity.sign_check(sys, spectra.label_roots(sys), corollary=3)

            assert report.corollaries == (3,)
            assert not report.mismatches

    def test_hypotheses_not_met(self, figure_one):
        """omega = 0 puts every root on a pole: no claims are made."""
        sys = figure_one.with_policy(omegas=[0.0, 0.0])

        with pytest.raises(validator.HypothesesNotMet):
            sensitivity.sign_check(sys, spectra.label_roots(sys))


# ============================================================
# TEST CATEGORY 9: VALUATION TESTS (14 tests)
# ============================================================

class TestValuation:
    """Test simulation, equity value and its closed forms."""

    def test_simulate_decoupled(self, decoupled, unit_state):
        """omega = 0: d_t = beta^t d_0; z_1 follows lambda_1 z_1 + delta_1 d."""
        trajectory = valuation.simulate(decoupled, unit_state, 5)

        np.testing.assert_allclose(trajectory.dividends, 0.5 ** np.arange(6))
        assert trajectory.states[1, 0] == pytest.approx(0.5)
        assert list(trajectory.to_frame().columns) == ['t', 'z1', 'z2', 'd']

    def test_simulate_overflow(self, unit_state):
        """Explosive spectra stop with the offending step."""
        sys = model.CanonicalSystem.from_arrays([1e10, 1.0], [1, 1], [0.0, 0.0], 0.5)

        with pytest.raises(validator.Overflow) as excinfo:
            valuation.simulate(sys, unit_state, 40)

        assert excinfo.value.t in (30, 31)

    def test_equity_decoupled(self, decoupled, unit_state):
        """omega = 0, beta = 0.5, R = 2: P0 = 1/3 by all three methods."""
        report = valuation.equity(decoupled, unit_state, 2.0)

        assert report.p0_series == pytest.approx(1.0 / 3.0, abs=1e-9)
        assert report.p0_modal == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert report.p0_resolvent == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert report.converged and report.agree
        assert report.closed_form_index is None

    def test_equity_continuous_decoupled(self, decoupled, unit_state):
        """Continuous mode: integral of e^{-rt} e^{beta t} = 1/(r - beta)."""
        report = valuation.equity(decoupled, unit_state, 2.0, continuous=True)

        assert report.p0_modal == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert report.p0_resolvent == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert report.p0_series == pytest.approx(2.0 / 3.0, abs=1e-6)

    def test_divergent_series(self, figure_one, unit_state):
        """R below the dominant modulus violates the growth condition."""
        with pytest.raises(validator.DivergentSeries):
            valuation.equity(figure_one, unit_state, 1.0)

    def test_triple_agreement_random(self, rng):
        """Series, modal and resolvent agree on convergent random systems."""
        checked = 0
        while checked < 100:
            sys, init, rate = system_generator.convergent_case(rng, int(rng.integers(1, 5)))
            if spectra.min_gap(spectra.eigenvalues(sys).as_array()) < 1e-3:
                continue
            report = valuation.equity(sys, init, rate)
            scale = 1e-6 * (1.0 + abs(report.value))

            assert report.converged
            assert abs(report.p0_series - report.value) <= scale
            assert abs(report.p0_resolvent - report.value) <= scale
            checked += 1

    def test_equity_at_bifurcation_uses_resolvent(self, figure_one, unit_state):
        """Defective H at the critical omega_1: no modal value, series and resolvent agree."""
        # 1. ARRANGE
        event = locus.critical_points(figure_one, 'omega1')[0]
        sys = figure_one.with_coordinate(1, event.parameter_value)

        # 2. ACT
        report = valuation.equity(sys, unit_state, 2.5)

        # 3. ASSERT
        assert event.parameter_value == pytest.approx(0.2148, abs=1e-3)
        assert not report.modal_available
        assert np.isnan(report.p0_modal)
        assert report.value == report.p0_resolvent
        assert report.converged and report.agree

    def test_modal_weights_reject_jordan_block(self):
        """A Jordan block has no eigenvector basis."""
        with pytest.raises(validator.DefectiveEigenbasis) as excinfo:
            valuation._modal_weights(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([1.0, 1.0]))

        assert excinfo.value.condition > config.VALUATION['modal_condition']

    @pytest.mark.parametrize("rate, expected", [(1.5, -2.5), (2.0, 1.0)])
    def test_closed_form_at_reduced_eigenvalue(self, figure_one, unit_state, rate, expected):
        """At R = lambda_j the series supports d0 + P0 = -R z0_j / delta_j."""
        sys = figure_one.with_coordinate(1, 1.0)

        report = valuation.equity(sys, unit_state, rate)

        assert report.p0_modal == pytest.approx(expected, abs=1e-8)
        assert report.closed_forms['dividend_inclusive'] == pytest.approx(expected)
        assert report.closed_form_variant == 'dividend_inclusive'

    def test_continuous_closed_form(self, figure_one, unit_state):
        """Continuous mode at r = lambda_2: P0 = -z0_2 / delta_2."""
        sys = figure_one.with_coordinate(1, 1.0)

        report = valuation.equity(sys, unit_state, 1.5, continuous=True)

        assert report.closed_forms == {'continuous': pytest.approx(-1.0)}
        assert report.p0_modal == pytest.approx(-1.0, abs=1e-8)
        assert report.p0_resolvent == pytest.approx(-1.0, abs=1e-8)

    def test_sample_ball(self):
        """Samples stay in the ball and repeat for the same seed."""
        center = np.array([0.5, 0.1, 0.5])

        first = valuation.sample_ball(center, 1e-2, 16, seed=7)
        second = valuation.sample_ball(center, 1e-2, 16, seed=7)

        np.testing.assert_array_equal(first, second)
        assert np.all(np.linalg.norm(first - center, axis=1) <= 1e-2 * (1.0 + 1e-12))

    def test_thread_count_from_environment(self):
        """SPECTRA_THREADS is read at call time."""
        with patch.dict(os.environ, {'SPECTRA_THREADS': '4'}):
            assert valuation.thread_count() == 4
        with patch.dict(os.environ, {'SPECTRA_THREADS': 'x'}):
            assert valuation.thread_count() == config.RUNTIME['default_threads']

    def test_trajectory_matches_series(self, decoupled, unit_state):
        """Discounted simulated dividends approach the series value."""
        trajectory = valuation.simulate(decoupled, unit_state, 60)
        discounted = np.sum(trajectory.dividends[1:] / 2.0 ** np.arange(1, 61))

        assert discounted == pytest.approx(valuation.equity(decoupled, unit_state, 2.0).p0_series,
                                           abs=1e-12)

    def test_initial_state_vector(self):
        """Z_0 = (z0, d0)."""
        np.testing.assert_array_equal(valuation.InitialState((1.0, 2.0), 3.0).vector(),
                                      [1.0, 2.0, 3.0])


# ============================================================
# TEST CATEGORY 10: DPI PROBE TESTS (11 tests)
# ============================================================

class TestDPIProbe:
    """Test the dividend-policy irrelevance probe."""

    @pytest.mark.parametrize("rate, formula", [(1.5, -2.5), (2.0, 1.0)])
    def test_figure_one_irrelevant(self, figure_one, unit_state, rate, formula):
        """All roots below 1.5: P0 is policy-free at R = lambda_2 and R = lambda_1."""
        sys = figure_one.with_coordinate(1, 1.0)

        report = valuation.dpi_probe(sys, unit_state, rate, radius=1e-2, samples=16, seed=11)

        assert report.verdict == valuation.IRRELEVANT
        assert report.max_spread < 1e-6
        assert report.rejected == 0
        assert report.formula_value == pytest.approx(formula)

    def test_generic_rate_relevant(self, decoupled, unit_state):
        """Away from the reduced spectrum P0 moves with beta."""
        report = valuation.dpi_probe(decoupled, unit_state, 3.0, radius=1e-3, samples=8, seed=3)

        assert report.verdict == valuation.RELEVANT
        assert report.formula_value is None
        assert report.second_ball is None

    def test_irrelevance_holds_on_second_ball(self, figure_one, unit_state):
        """P0 is rational in the policy: constancy repeats on a disjoint ball."""
        # 1. ARRANGE
        sys = figure_one.with_coordinate(1, 1.0)

        # 2. ACT
        report = valuation.dpi_probe(sys, unit_state, 2.0, radius=1e-2, samples=16, seed=11)

        # 3. ASSERT
        assert report.verdict == valuation.IRRELEVANT
        second = report.second_ball
        assert second is not None
        assert second.constant
        assert second.rejected == 0
        assert second.max_spread < report.tolerance
        distance = np.linalg.norm(np.array(second.center) - sys.policy.as_vector())
        assert distance > 2.0 * 1e-2
        assert report.to_dict()['second_ball']['constant'] is True

    def test_second_ball_skipped_off_convergence_region(self, figure_one, unit_state):
        """A segment that violates the growth condition leaves the second ball unchecked."""
        sys = figure_one.with_coordinate(1, 1.0)
        real_values = valuation._policy_values

        def failing_segment(*args):
            values = real_values(*args)
            return values if len(values) != config.DPI['segment_checks'] else [None] * len(values)

        with patch('modules.valuation._policy_values', side_effect=failing_segment):
            report = valuation.dpi_probe(sys, unit_state, 2.0, radius=1e-2, samples=8, seed=11)

        assert report.verdict == valuation.IRRELEVANT
        assert report.second_ball is None

    def test_order_reduction_precludes_rate(self, figure_one, unit_state):
        """omega_2 = 0 makes lambda_2 an eigenvalue of H; R = lambda_2 is precluded."""
        # 1. ARRANGE
        sys = figure_one.with_coordinate(2, 0.0)

        # 2. ACT & ASSERT
        assert abs(charpoly.charpoly_value(sys, 1.5)) < 1e-12
        assert valuation.order_reduced(sys) == (2,)
        with pytest.raises(validator.DivergentSeries) as excinfo:
            valuation.dpi_probe(sys, unit_state, 1.5)

        assert excinfo.value.details['precluded'] is True
        assert excinfo.value.details['index'] == 2

    def test_dominance_relevant_above_lambda1(self, rng, unit_state):
        """R = 1.2 lambda_1 with a dominant root: relevant."""
        sys = system_generator.dominance_system(rng, 2)

        report = valuation.dpi_probe(sys, unit_state, 1.2 * sys.lambdas[0], radius=1e-3,
                                     samples=8, seed=5)

        assert report.verdict == valuation.RELEVANT

    def test_seed_reproducible_across_threads(self, figure_one, unit_state):
        """Same seed, different worker counts: identical samples and values."""
        sys = figure_one.with_coordinate(1, 1.0)

        single = valuation.dpi_probe(sys, unit_state, 2.0, samples=8, seed=42)
        with patch.dict(os.environ, {'SPECTRA_THREADS': '4'}):
            pooled = valuation.dpi_probe(sys, unit_state, 2.0, samples=8, seed=42)

        assert single.samples == pooled.samples

    def test_all_samples_rejected(self, decoupled, unit_state):
        """Every sampled policy divergent raises AllSamplesRejected."""
        points = np.tile([0.0, 0.0, 10.0], (8, 1))

        with patch('modules.valuation.sample_ball', return_value=points):
            with pytest.raises(validator.AllSamplesRejected):
                valuation.dpi_probe(decoupled, unit_state, 3.0, samples=8)

    def test_rejections_make_verdict_inconclusive(self, decoupled, unit_state):
        """Constant accepted values with some rejections stay inconclusive."""
        points = np.array([[0.0, 0.0, 0.5]] * 6 + [[0.0, 0.0, 10.0]] * 2)

        with patch('modules.valuation.sample_ball', return_value=points):
            report = valuation.dpi_probe(decoupled, unit_state, 3.0, samples=8)

        assert report.rejected == 2
        assert report.verdict == valuation.INCONCLUSIVE

    def test_high_rejection_rate_inconclusive(self, decoupled, unit_state):
        """More than half rejected is inconclusive regardless of spread."""
        points = np.array([[0.0, 0.0, 0.5]] * 3 + [[0.0, 0.0, 10.0]] * 5)

        with patch('modules.valuation.sample_ball', return_value=points):
            report = valuation.dpi_probe(decoupled, unit_state, 3.0, samples=8)

        assert report.verdict == valuation.INCONCLUSIVE

    @pytest.mark.slow
    def test_anomaly_excluded_roots_stay_outside_lambda2(self, rng):
        """beta >= 2 lambda_2 - lambda_1, delta_1 = -1: |kappa_1| > lambda_2 along omega_1."""
        for _ in range(5):
            sys = system_generator.anomaly_excluded_system(rng, int(rng.integers(2, 4)))
            init = valuation.InitialState((1.0,) * sys.n, 1.0)

            trace = locus.trace_locus(sys, 'omega1', 1e-2, 1e4, 13, spacing='log')

            assert np.all(np.abs(trace.branch(1)) > sys.lambdas[1])
            with pytest.raises(validator.DivergentSeries):
                valuation.dpi_probe(sys.with_coordinate(1, 100.0), init, sys.lambdas[1],
                                    samples=8)


# ============================================================
# TEST CATEGORY 11: DATA LOADER & EXPORTER TESTS (12 tests)
# ============================================================

class TestDataLoader:
    """Test descriptor parsing, overrides and array inputs."""

    def test_load_canonical(self):
        """Shipped descriptor loads as the two-pole system."""
        sys = data_loader.load_system(config.PATHS['figure_one_system'])

        assert sys.spectrum.lambdas == (2.0, 1.5)
        assert sys.signs.deltas == (-1, 1)

    def test_load_general(self):
        """General descriptors are canonicalized."""
        sys = data_loader.load_system(config.PATHS['general_system'])

        assert sys.n == 2
        assert sys.lambdas[0] == pytest.approx(2.0)

    def test_missing_file(self, temp_data_dir):
        """Missing file is a validation error."""
        with pytest.raises(validator.ValidationError, match="not found"):
            data_loader.load_system(os.path.join(temp_data_dir, 'absent.json'))

    def test_invalid_json(self, temp_data_dir):
        """Malformed JSON is a validation error."""
        path = os.path.join(temp_data_dir, 'broken.json')
        with open(path, 'w') as handle:
            handle.write('{"lambdas": [2.0,')

        with pytest.raises(validator.ValidationError, match="not valid JSON"):
            data_loader.load_system(path)

    def test_unknown_fields(self, system_file):
        """Descriptors need a complete canonical or general field set."""
        with pytest.raises(validator.ValidationError, match="descriptor needs"):
            data_loader.load_system(system_file({'lambdas': [2.0], 'beta': 0.5}))

    def test_overrides(self, figure_one):
        """omegaK=V and beta=V replace single coordinates."""
        sys = data_loader.apply_overrides(figure_one, ['omega1=1.0', 'beta=0.7'])

        assert sys.policy.omegas == (1.0, 0.1)
        assert sys.beta == 0.7

    def test_bad_overrides(self, figure_one):
        """Malformed, non-numeric and out-of-range overrides are rejected."""
        for assignment in ('omega1', 'omega1=abc', 'omega9=1', 'omega1=nan'):
            with pytest.raises(validator.ValidationError):
                data_loader.apply_overrides(figure_one, [assignment])

    def test_parse_array_inline_and_file(self, temp_data_dir):
        """Arrays come inline or from a JSON file."""
        path = os.path.join(temp_data_dir, 'target.json')
        with open(path, 'w') as handle:
            json.dump([1, -2.5, 1.5], handle)

        assert data_loader.parse_array('[1, 2]', 'z0') == [1.0, 2.0]
        assert data_loader.parse_array(path, 'target') == [1.0, -2.5, 1.5]
        with pytest.raises(validator.ValidationError):
            data_loader.parse_array('{"a": 1}', 'z0')

    def test_initial_state_defaults(self):
        """Missing z0 and d0 default to ones."""
        init = data_loader.load_initial_state(3)

        assert init.z0 == (1.0, 1.0, 1.0)
        assert init.d0 == 1.0
        with pytest.raises(validator.ValidationError):
            data_loader.load_initial_state(3, '[1, 2]', 1.0)


class TestExporter:
    """Test JSON/CSV rendering and atomic writes."""

    def test_jsonable(self):
        """Complex -> [re, im], NaN -> null, inf -> string."""
        payload = exporter.jsonable({'z': 1 + 2j, 'nan': np.nan, 'inf': np.inf,
                                     'n': np.int64(3), 'flag': np.bool_(True)})

        assert payload == {'z': [1.0, 2.0], 'nan': None, 'inf': 'inf', 'n': 3, 'flag': True}

    def test_render_csv_and_unknown_format(self):
        """CSV uses the frame; unknown formats raise."""
        frame = pd.DataFrame({'a': [1.0], 'b': [2.0]})

        assert exporter.render({}, frame, 'csv') == 'a,b\n1,2\n'
        with pytest.raises(ValueError):
            exporter.render({}, frame, 'xml')

    def test_atomic_write(self, temp_data_dir):
        """Only the final file remains after a write."""
        path = os.path.join(temp_data_dir, 'out', 'result.json')

        exporter.write_output('{}\n', path)

        assert os.listdir(os.path.dirname(path)) == ['result.json']
        with open(path) as handle:
            assert handle.read() == '{}\n'


# ============================================================
# TEST CATEGORY 12: GENERATOR TESTS (3 tests)
# ============================================================

class TestSystemGenerator:
    """Test seeded random systems."""

    def test_reproducible(self):
        """Same seed, same systems."""
        first = system_generator.generate_systems(5, 3, seed=9)
        second = system_generator.generate_systems(5, 3, seed=9)

        assert [s.to_dict() for s in first] == [s.to_dict() for s in second]

    def test_qualifying_configuration(self, rng):
        """delta omega >= 0, sum |omega| <= epsilon, beta <= lambda_n."""
        for _ in range(20):
            sys = system_generator.qualifying_bounds_system(rng, 4, epsilon=0.3)

            assert np.all(sys.couplings >= 0.0)
            assert np.sum(np.abs(sys.omegas)) <= 0.3 + 1e-12
            assert sys.beta <= sys.lambdas[-1]

    def test_anomaly_configuration(self, rng):
        """delta_1 = -1 and beta above 2 lambda_2 - lambda_1."""
        sys = system_generator.anomaly_excluded_system(rng, 3)

        assert sys.signs.deltas[0] == -1
        assert sys.beta >= 2.0 * sys.lambdas[1] - sys.lambdas[0]
        assert valuation._anomaly_excluded(sys)


# ============================================================
# TEST CATEGORY 13: END-TO-END CLI TESTS (7 tests)
# ============================================================

@pytest.mark.e2e
class TestCommandLine:
    """Test main.run exit codes and outputs."""

    def test_eig_json(self, temp_data_dir):
        """eig writes labeled roots and exits 0."""
        out = os.path.join(temp_data_dir, 'eig.json')

        code = main.run(['eig', '--system', config.PATHS['figure_one_system'],
                         '--set', 'omega1=1.0', '--out', out])

        assert code == 0
        with open(out) as handle:
            payload = json.load(handle)
        assert len(payload['roots']) == 3
        assert payload['is_real'] == [False, False, True]

    def test_place_round_trip(self, temp_data_dir, figure_one):
        """Coefficients of the system place back its own policy."""
        target = os.path.join(temp_data_dir, 'target.json')
        with open(target, 'w') as handle:
            json.dump(charpoly.charpoly_coeffs(figure_one).to_list(), handle)
        out = os.path.join(temp_data_dir, 'place.json')

        code = main.run(['place', '--system', config.PATHS['figure_one_system'],
                         '--target', target, '--out', out])

        assert code == 0
        with open(out) as handle:
            payload = json.load(handle)
        np.testing.assert_allclose(payload['omegas'], [0.5, 0.1], atol=1e-9)
        assert payload['beta'] == pytest.approx(0.5, abs=1e-9)

    def test_locus_csv(self, temp_data_dir):
        """locus emits the documented CSV header."""
        out = os.path.join(temp_data_dir, 'locus.csv')

        code = main.run(['locus', '--system', config.PATHS['figure_one_system'],
                         '--param', 'beta', '--lo', '0.4', '--hi', '0.6', '--samples', '3',
                         '--format', 'csv', '--out', out])

        assert code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ['param', 'index', 're', 'im', 'is_real']

    def test_locus_zero_samples_exit_2(self, capsys):
        """Invalid sample count exits 2 with a JSON error."""
        code = main.run(['locus', '--system', config.PATHS['figure_one_system'],
                         '--param', 'omega1', '--lo', '0.1', '--hi', '1.2', '--samples', '0'])

        assert code == 2
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error['category'] == 'validation'

    def test_divergent_dpi_exit_3(self, capsys):
        """Growth condition violation exits 3."""
        code = main.run(['dpi', '--system', config.PATHS['figure_one_system'],
                         '--rate', '0.5', '--samples', '8'])

        assert code == 3
        error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert error['error'] == 'DivergentSeries'

    def test_dpi_irrelevant(self, temp_data_dir):
        """dpi at R = lambda_1 on the bounded system reports irrelevance."""
        out = os.path.join(temp_data_dir, 'dpi.json')

        code = main.run(['dpi', '--system', config.PATHS['figure_one_system'],
                         '--set', 'omega1=1.0', '--rate', '2.0', '--samples', '8',
                         '--seed', '7', '--out', out])

        assert code == 0
        with open(out) as handle:
            assert json.load(handle)['verdict'] == 'irrelevant'

    def test_usage_errors_exit_2(self, temp_data_dir):
        """Unknown commands and missing descriptors exit 2."""
        assert main.run(['transmogrify']) == 2
        assert main.run(['eig', '--system', os.path.join(temp_data_dir, 'none.json')]) == 2


# ============================================================
# PYTEST CONFIGURATION & MARKERS
# ============================================================

def pytest_configure(config):
    """Configure pytest with custom markers."""
    config.addinivalue_line(
        "markers", "slow: marks tests as slow (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "e2e: marks tests as end-to-end tests"
    )


# ============================================================
# SUMMARY & RUNNING INSTRUCTIONS
# ============================================================

"""
TEST EXECUTION COMMANDS:

1. Run all tests:
   pytest tests/test_suite.py -v

2. Run specific category:
   pytest tests/test_suite.py::TestLocus -v

3. Run with coverage:
   pytest tests/test_suite.py --cov=modules --cov-report=html -v

4. Run only fast tests:
   pytest tests/test_suite.py -m "not slow" -v

5. Run only the command-line tests:
   pytest tests/test_suite.py -m e2e -v

6. Run specific test:
   pytest tests/test_suite.py::TestSpectra::test_wilkinson_perturbation -v
"""

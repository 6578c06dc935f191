import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chromahom.fockcore import (BeamSplitterMatrix, TwoModeFockState, apply_beam_splitter,
                                coincidence_probability, make_beam_splitter, max_visibility_bound)

from conftest import fock_oracle

etas = st.floats(0.0, 1.0, allow_nan=False)


def random_state(rng, n_max=4):
    amps = rng.normal(size=(n_max + 1, n_max + 1)) + 1j * rng.normal(size=(n_max + 1, n_max + 1))
    n1, n2 = np.indices(amps.shape)
    amps[n1 + n2 > n_max] = 0
    return TwoModeFockState(n_max, amps / np.linalg.norm(amps))


class TestMakeBeamSplitter:
    def test_balanced(self):
        bs = make_beam_splitter(0.5)
        assert bs.t == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert bs.r == pytest.approx(1 / math.sqrt(2), abs=1e-15)

    def test_identity(self):
        bs = make_beam_splitter(0.0)
        assert (bs.t, bs.r) == (1.0, 0.0)
        np.testing.assert_array_equal(bs.matrix, np.eye(2))

    def test_measured_ratio(self):
        bs = make_beam_splitter(0.476)
        assert bs.t == pytest.approx(0.72388, abs=5e-6)
        assert bs.r == pytest.approx(0.68993, abs=5e-6)

    @pytest.mark.parametrize("eta", [-0.01, 1.01, float("nan")])
    def test_out_of_range(self, eta):
        with pytest.raises(ValueError):
            make_beam_splitter(eta)

    def test_theta_accessor(self):
        bs = make_beam_splitter(0.3)
        assert math.cos(bs.theta) == pytest.approx(bs.t, abs=1e-15)
        assert math.sin(bs.theta) == pytest.approx(bs.r, abs=1e-15)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            BeamSplitterMatrix(0.8, 0.8)

    @given(etas)
    def test_unitarity(self, eta):
        b = make_beam_splitter(eta).matrix
        np.testing.assert_allclose(b.conj().T @ b, np.eye(2), atol=1e-12)


class TestApplyBeamSplitter:
    def test_hom_output(self):
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(0.5))
        amps = [out.amplitude(2, 0), out.amplitude(1, 1), out.amplitude(0, 2)]
        np.testing.assert_allclose(amps, [1j / math.sqrt(2), 0, 1j / math.sqrt(2)], atol=1e-15)

    def test_identity_leaves_state(self):
        s = TwoModeFockState.basis(1, 0)
        out = apply_beam_splitter(s, make_beam_splitter(0.0))
        np.testing.assert_array_equal(out.amplitudes, s.amplitudes)

    def test_unbalanced_coincidence_amplitude(self):
        # (t b1 + i r b2)(i r b1 + t b2): b1 b2 coefficient t^2 - r^2
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(0.25))
        assert out.amplitude(1, 1) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("eta", [0.0, 0.1, 0.25, 0.476, 0.5, 0.9, 1.0])
    def test_matches_matrix_exponential(self, eta, rng):
        s = random_state(rng)
        out = apply_beam_splitter(s, make_beam_splitter(eta))
        np.testing.assert_allclose(out.amplitudes, fock_oracle(s.amplitudes, eta), atol=1e-12)

    def test_conjugate_convention_matches_oracle(self, rng):
        s = random_state(rng)
        bs = make_beam_splitter(0.3).conjugate()
        np.testing.assert_allclose(apply_beam_splitter(s, bs).amplitudes,
                                   fock_oracle(s.amplitudes, 0.3, phase_sign=-1), atol=1e-12)

    @given(etas, st.integers(0, 2**32 - 1))
    def test_norm_and_photon_number_conserved(self, eta, seed):
        s = random_state(np.random.default_rng(seed))
        out = apply_beam_splitter(s, make_beam_splitter(eta))
        assert out.norm() == pytest.approx(1.0, abs=1e-10)
        assert out.mean_photon_number() == pytest.approx(s.mean_photon_number(), abs=1e-10)

    @given(etas, st.integers(0, 2**32 - 1))
    def test_inverse_is_conjugate(self, eta, seed):
        s = random_state(np.random.default_rng(seed))
        bs = make_beam_splitter(eta)
        back = apply_beam_splitter(apply_beam_splitter(s, bs), bs.conjugate())
        np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-10)

    @given(etas)
    def test_probabilities_independent_of_phase_sign(self, eta):
        s = TwoModeFockState.basis(1, 1)
        bs = make_beam_splitter(eta)
        a = apply_beam_splitter(s, bs).amplitudes
        b = apply_beam_splitter(s, bs.conjugate()).amplitudes
        np.testing.assert_allclose(np.abs(a) ** 2, np.abs(b) ** 2, atol=1e-14)


class TestCoincidence:
    def test_hom_zero(self):
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(0.5))
        assert coincidence_probability(out) == pytest.approx(0.0, abs=1e-30)

    def test_no_swap(self):
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(0.0))
        assert coincidence_probability(out) == 1.0

    def test_measured_ratio(self):
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(0.476))
        assert coincidence_probability(out) == pytest.approx(0.002304, abs=1e-12)

    @given(etas)
    def test_closed_form(self, eta):
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(eta))
        assert coincidence_probability(out) == pytest.approx((1 - 2 * eta) ** 2, abs=1e-12)


class TestVisibilityBound:
    def test_balanced(self):
        assert max_visibility_bound(0.5) == 1.0

    def test_measured_ratio(self):
        assert max_visibility_bound(0.476) == pytest.approx(0.9954, abs=5e-5)

    def test_quarter(self):
        assert max_visibility_bound(0.25) == pytest.approx(0.6, abs=1e-15)

    @pytest.mark.parametrize("eta", [0.0, 1.0])
    def test_domain(self, eta):
        with pytest.raises(ValueError):
            max_visibility_bound(eta)

    @given(st.floats(0.001, 0.999))
    def test_against_fock_floor_and_baseline(self, eta):
        # dip floor from the Fock computation, baseline = both-transmit + both-reflect
        out = apply_beam_splitter(TwoModeFockState.basis(1, 1), make_beam_splitter(eta))
        floor = coincidence_probability(out)
        baseline = (1 - eta) ** 2 + eta**2
        assert max_visibility_bound(eta) == pytest.approx(1 - floor / baseline, abs=1e-12)
        assert 0 < max_visibility_bound(eta) <= 1


def test_state_validation():
    with pytest.raises(ValueError):
        TwoModeFockState.basis(3, 2, n_max=4)
    amps = np.zeros((3, 3), dtype=complex)
    amps[2, 2] = 1
    with pytest.raises(ValueError):
        TwoModeFockState(2, amps)
    s = TwoModeFockState.basis(1, 1)
    with pytest.raises(ValueError):
        s.amplitudes[0, 0] = 1

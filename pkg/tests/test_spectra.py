import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chromahom.errors import ConfigurationError, MeasurementError
from chromahom.spectra import (SINC2_HALF_X, FrequencyGrid, SpectralAmplitude, SpectralModel,
                               measure_fwhm, multiply, normalize, sample_model, unit_profile,
                               width_at_half)


class TestFrequencyGrid:
    def test_even_count_padded(self):
        g = FrequencyGrid(64, 1e12)
        assert g.n_points == 64
        assert g.size == 65
        assert g.values[32] == 0.0

    def test_symmetry(self):
        g = FrequencyGrid(4096, 2e12)
        np.testing.assert_array_equal(g.values, -g.values[::-1])
        assert g.values[-1] - g.values[0] == pytest.approx(2e12)

    def test_values_read_only(self):
        with pytest.raises(ValueError):
            FrequencyGrid(11, 1.0).values[0] = 1.0

    @pytest.mark.parametrize("n,span", [(2, 1e12), (11, 0.0), (11, -1.0)])
    def test_invalid(self, n, span):
        with pytest.raises(ConfigurationError):
            FrequencyGrid(n, span)


def test_sinc_half_point():
    assert (np.sin(SINC2_HALF_X) / SINC2_HALF_X) ** 2 == pytest.approx(0.5, abs=1e-15)
    assert SINC2_HALF_X == pytest.approx(1.39155737825151, abs=1e-13)


@pytest.mark.parametrize("kind", ["sinc", "gaussian"])
def test_unit_profile_half_width(kind):
    fwhm = 75e9
    assert unit_profile(kind, fwhm, 0.0) == pytest.approx(1.0)
    assert unit_profile(kind, fwhm, fwhm / 2) ** 2 == pytest.approx(0.5, abs=1e-12)
    assert unit_profile(kind, fwhm, -fwhm / 2) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_unit_profile_unknown():
    with pytest.raises(ConfigurationError):
        unit_profile("lorentz", 1.0, 0.0)


class TestSampleModel:
    @pytest.mark.parametrize("kind", ["sinc", "gaussian"])
    def test_measured_fwhm(self, kind):
        s = sample_model(SpectralModel(kind, 75e9), FrequencyGrid(4096, 2e12))
        assert measure_fwhm(s) == pytest.approx(75e9, rel=1e-4)

    def test_flat(self):
        s = sample_model(SpectralModel("flat"), FrequencyGrid(11, 1e12))
        np.testing.assert_array_equal(s.amp, np.ones(11))

    def test_span_too_narrow(self):
        with pytest.raises(ConfigurationError):
            sample_model(SpectralModel("gaussian", 200e9), FrequencyGrid(101, 1e12))

    @pytest.mark.parametrize("kind,fwhm", [("sinc", None), ("gaussian", 0.0), ("voigt", 1.0)])
    def test_model_validation(self, kind, fwhm):
        with pytest.raises(ConfigurationError):
            SpectralModel(kind, fwhm)

    @given(st.floats(10e9, 200e9))
    def test_gaussian_norm_closed_form(self, fwhm):
        # integral of exp(-4 ln2 x^2 / w^2) = w sqrt(pi / (4 ln 2))
        s = sample_model(SpectralModel("gaussian", fwhm), FrequencyGrid(4096, 2e12))
        assert s.norm() ** 2 == pytest.approx(fwhm * np.sqrt(np.pi / (4 * np.log(2))), rel=1e-9)


class TestAmplitudeOps:
    def test_normalize(self):
        s = normalize(sample_model(SpectralModel("sinc", 75e9), FrequencyGrid(4096, 2e12)))
        assert s.norm() == pytest.approx(1.0, abs=1e-12)

    def test_normalize_zero(self):
        with pytest.raises(ValueError):
            normalize(SpectralAmplitude(FrequencyGrid(11, 1.0), np.zeros(11)))

    def test_multiply_grid_mismatch(self):
        a = SpectralAmplitude(FrequencyGrid(11, 1.0), np.ones(11))
        b = SpectralAmplitude(FrequencyGrid(11, 2.0), np.ones(11))
        with pytest.raises(ValueError):
            multiply(a, b)

    def test_multiply_gaussians_narrows(self):
        g = FrequencyGrid(4096, 2e12)
        a = sample_model(SpectralModel("gaussian", 100e9), g)
        p = multiply(a, a)
        # product of equal Gaussians: width / sqrt(2)
        assert measure_fwhm(p) == pytest.approx(100e9 / np.sqrt(2), rel=1e-4)

    def test_mirrored(self):
        g = FrequencyGrid(11, 10.0)
        s = SpectralAmplitude(g, g.values + 1j)
        np.testing.assert_array_equal(s.mirrored().amp, -g.values + 1j)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            SpectralAmplitude(FrequencyGrid(11, 1.0), np.ones(10))

    def test_csv_round_trip(self, tmp_path):
        g = FrequencyGrid(64, 1e12)
        rng = np.random.default_rng(3)
        s = SpectralAmplitude(g, rng.normal(size=g.size) + 1j * rng.normal(size=g.size))
        s.to_csv(tmp_path / "s.csv")
        back = SpectralAmplitude.from_csv(tmp_path / "s.csv")
        np.testing.assert_array_equal(back.amp, s.amp)
        np.testing.assert_allclose(back.grid.values, g.values, rtol=0, atol=1e-3)


class TestWidthAtHalf:
    def test_triangle(self):
        x = np.linspace(-2, 2, 401)
        assert width_at_half(x, np.maximum(1 - np.abs(x), 0)) == pytest.approx(1.0, abs=1e-12)

    def test_no_crossing(self):
        with pytest.raises(MeasurementError):
            width_at_half(np.linspace(-1, 1, 11), np.ones(11))

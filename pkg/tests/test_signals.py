import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcgm_anc.errors import InvalidArgumentError
from mcgm_anc.signals import (ImpulseResponse, Signal, convolve, design_bandpass_fir,
                              gen_synthetic_path, gen_white_noise)

from oracles import direct_convolution

FS = 16000.0

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def sig(values):
    return Signal(np.asarray(values, dtype=float), FS)


class TestTypes:
    def test_signal_rejects_nan(self):
        with pytest.raises(InvalidArgumentError):
            Signal([0.0, np.nan], FS)

    def test_signal_rejects_bad_rate(self):
        with pytest.raises(InvalidArgumentError):
            Signal([0.0], 0.0)

    def test_empty_signal_allowed(self):
        assert len(Signal([], FS)) == 0

    def test_impulse_response_needs_a_tap(self):
        with pytest.raises(InvalidArgumentError):
            ImpulseResponse([])

    def test_unknown_label(self):
        with pytest.raises(InvalidArgumentError):
            ImpulseResponse([1.0], "bogus")


class TestConvolve:
    def test_identity(self):
        out = convolve(sig([1, 0, 0]), ImpulseResponse([1.0]))
        assert out.samples.tolist() == [1.0, 0.0, 0.0]

    def test_impulse_reproduces_taps(self):
        out = convolve(sig([1, 0, 0, 0, 0]), ImpulseResponse([0.5, 0.25]))
        assert out.samples.tolist() == [0.5, 0.25, 0.0, 0.0, 0.0]

    def test_small_case(self):
        assert convolve(sig([1, 2]), ImpulseResponse([1, 1])).samples.tolist() == [1.0, 3.0]

    def test_preserves_length_and_rate(self):
        x = Signal(np.ones(7), 8000.0)
        out = convolve(x, ImpulseResponse(np.ones(20)))
        assert len(out) == 7 and out.sample_rate_hz == 8000.0

    def test_empty_input(self):
        with pytest.raises(InvalidArgumentError):
            convolve(sig([]), ImpulseResponse([1.0]))

    @settings(max_examples=60, deadline=None)
    @given(st.lists(finite, min_size=1, max_size=256), st.lists(finite, min_size=1, max_size=40))
    def test_matches_direct_sum(self, x, h):
        got = convolve(sig(x), ImpulseResponse(h)).samples
        want = np.array(direct_convolution(x, h))
        scale = max(1.0, np.max(np.abs(want)))
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * scale)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 128), st.integers(1, 32), st.integers(0, 2**32 - 1))
    def test_linearity(self, n, m, seed):
        rng = np.random.default_rng(seed)
        a, b, h = rng.standard_normal(n), rng.standard_normal(n), ImpulseResponse(rng.standard_normal(m))
        lhs = convolve(sig(a + b), h).samples
        rhs = convolve(sig(a), h).samples + convolve(sig(b), h).samples
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * np.max(np.abs(lhs) + 1))


def response_db(taps, freq_hz, fs=FS):
    n = np.arange(len(taps))
    return 20 * np.log10(abs(np.sum(taps * np.exp(-2j * np.pi * freq_hz / fs * n))))


class TestBandpass:
    @pytest.mark.parametrize("band", [(600, 1800), (1500, 4000), (3500, 5000), (4400, 6000)])
    def test_symmetric(self, band):
        taps = design_bandpass_fir(*band, FS, 255).taps
        assert np.array_equal(taps, taps[::-1])

    @pytest.mark.parametrize("band", [(600, 1800), (1500, 4000), (3500, 5000), (4400, 6000)])
    def test_unity_at_mid_band(self, band):
        taps = design_bandpass_fir(*band, FS, 255).taps
        assert abs(response_db(taps, np.sqrt(band[0] * band[1]))) <= 1.0

    def test_dc_rejected(self):
        taps = design_bandpass_fir(600, 1800, FS, 255).taps
        assert response_db(taps, 0.0) < -40.0

    @pytest.mark.parametrize("band", [(0, 1000), (1000, 500), (1000, 8000), (-5, 100)])
    def test_band_outside_nyquist(self, band):
        with pytest.raises(InvalidArgumentError):
            design_bandpass_fir(*band, FS, 255)

    @pytest.mark.parametrize("taps", [30, 29, 64])
    def test_tap_count(self, taps):
        with pytest.raises(InvalidArgumentError):
            design_bandpass_fir(600, 1800, FS, taps)


class TestWhiteNoise:
    def test_deterministic(self):
        assert np.array_equal(gen_white_noise(1000, 5).samples, gen_white_noise(1000, 5).samples)

    def test_seed_matters(self):
        assert not np.array_equal(gen_white_noise(100, 1).samples, gen_white_noise(100, 2).samples)

    def test_moments(self):
        x = gen_white_noise(100_000, 0).samples
        assert abs(x.mean()) < 0.05
        assert 0.95 <= x.var() <= 1.05

    @pytest.mark.parametrize("n", [0, -3])
    def test_bad_length(self, n):
        with pytest.raises(InvalidArgumentError):
            gen_white_noise(n, 0)


class TestSyntheticPath:
    def test_zero_before_delay_and_peak_at_delay(self):
        h = gen_synthetic_path(256, 40, 0.9, 3).taps
        assert np.all(h[:40] == 0.0)
        assert int(np.argmax(np.abs(h))) == 40
        assert np.max(np.abs(h)) == 1.0

    def test_deterministic(self):
        a = gen_synthetic_path(512, 10, 0.98, 11).taps
        b = gen_synthetic_path(512, 10, 0.98, 11).taps
        assert np.array_equal(a, b)

    def test_envelope(self):
        h = gen_synthetic_path(128, 5, 0.9, 1).taps
        i = np.arange(5, 128)
        assert np.all(np.abs(h[i]) <= 0.9 ** (i - 5))

    @pytest.mark.parametrize("delay", [256, 300, -1])
    def test_delay_out_of_range(self, delay):
        with pytest.raises(InvalidArgumentError):
            gen_synthetic_path(256, delay, 0.9, 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 300), st.data())
    def test_peak_property(self, length, data):
        delay = data.draw(st.integers(0, length - 1))
        decay = data.draw(st.floats(0.01, 0.999))
        h = gen_synthetic_path(length, delay, decay, data.draw(st.integers(0, 1000))).taps
        assert int(np.argmax(np.abs(h))) == delay

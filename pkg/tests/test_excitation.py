"""Generator tests. Expected values come from closed-form signal identities:
sine RMS, the linear sweep law, Parseval, and the Bessel-series expansion of
a sinusoidally phase-modulated carrier.
"""

import numpy as np
import pytest

from boltscope.errors import ParameterError
from boltscope.excitation import (
    ExcitationSpec,
    gen_bandnoise,
    gen_fm,
    gen_sweep,
    gen_tone,
    render,
    sweep_instantaneous_freq,
)

FS = 25600.0

# |J_k(2.5)| for k = 0..4, from the alternating power series
# sum_m (-1)^m / (m! (m+k)!) (z/2)^(2m+k); cross-checked against scipy.special.jv.
BESSEL_J_2P5 = [0.0483837765, 0.4970941025, 0.4460590584, 0.2166003910, 0.0737818801]


class TestTone:
    def test_paper_case_length_and_start(self):
        ts = gen_tone(ExcitationSpec.tone(130.0, amplitude=1.0, duration=1.0), FS)
        assert ts.n_samples == 25600
        assert ts.sample_rate == FS
        assert ts.samples[0] == 0.0

    def test_zero_amplitude_is_silent(self):
        ts = gen_tone(ExcitationSpec.tone(440.0, amplitude=0.0), FS)
        assert np.all(ts.samples == 0.0)

    def test_rms_over_integer_periods(self):
        # 1 s of 130 Hz at 25600 Hz is exactly 130 periods
        ts = gen_tone(ExcitationSpec.tone(130.0), FS)
        rms = np.sqrt(np.mean(ts.samples**2))
        assert rms == pytest.approx(1 / np.sqrt(2), abs=1e-9)

    def test_nyquist_rejected(self):
        with pytest.raises(ParameterError):
            gen_tone(ExcitationSpec.tone(12800.0), FS)
        with pytest.raises(ParameterError):
            gen_tone(ExcitationSpec.tone(13000.0), FS)

    def test_amplitude_bound(self):
        ts = gen_tone(ExcitationSpec.tone(97.0, amplitude=2.5), FS)
        assert np.max(np.abs(ts.samples)) <= 2.5 + 1e-12


class TestFm:
    def test_beta_from_paper_parameters(self):
        spec = ExcitationSpec.fm(carrier_freq=130.0, mod_freq=2.0, deviation=5.0)
        assert spec.modulation_index == pytest.approx(2.5)

    def test_zero_deviation_equals_tone(self):
        fm = gen_fm(ExcitationSpec.fm(130.0, 2.0, 0.0, duration=2.0), FS)
        tone = gen_tone(ExcitationSpec.tone(130.0, duration=2.0), FS)
        assert np.max(np.abs(fm.samples - tone.samples)) < 1e-9

    def test_zero_mod_freq_rejected(self):
        with pytest.raises(ParameterError):
            ExcitationSpec.fm(130.0, 0.0, 5.0)

    def test_nyquist_includes_deviation(self):
        with pytest.raises(ParameterError):
            gen_fm(ExcitationSpec.fm(12798.0, 2.0, 5.0), FS)

    def test_sideband_magnitudes_follow_bessel_weights(self):
        # 4 s record: 0.25 Hz bins put the carrier (130 Hz) and every
        # sideband (130 +- 2k Hz) exactly on bins, so a rectangular-window
        # DFT has no leakage to control.
        spec = ExcitationSpec.fm(130.0, 2.0, 5.0, amplitude=1.0, duration=4.0)
        ts = gen_fm(spec, FS)
        spectrum = np.fft.rfft(ts.samples)
        amps = 2.0 * np.abs(spectrum) / ts.n_samples

        def bin_of(f):
            return int(round(f * ts.n_samples / FS))

        for k, jk in enumerate(BESSEL_J_2P5):
            upper = amps[bin_of(130.0 + 2.0 * k)]
            assert upper == pytest.approx(jk, rel=0.01), f"upper sideband k={k}"
            lower = amps[bin_of(130.0 - 2.0 * k)]
            assert lower == pytest.approx(jk, rel=0.01), f"lower sideband k={k}"

    def test_sideband_ratios_to_carrier(self):
        spec = ExcitationSpec.fm(130.0, 2.0, 5.0, duration=4.0)
        ts = gen_fm(spec, FS)
        amps = 2.0 * np.abs(np.fft.rfft(ts.samples)) / ts.n_samples
        bins = [int(round((130.0 + 2.0 * k) * 4.0)) for k in range(5)]
        measured = [amps[b] / amps[bins[0]] for b in bins]
        expected = [jk / BESSEL_J_2P5[0] for jk in BESSEL_J_2P5]
        np.testing.assert_allclose(measured, expected, rtol=0.01)


class TestSweep:
    def test_midpoint_instantaneous_frequency(self):
        spec = ExcitationSpec.sweep(1.0, 5000.0, duration=10.0)
        assert sweep_instantaneous_freq(spec, 5.0) == pytest.approx(2500.5)

    def test_measured_midpoint_frequency(self):
        # Independent check via the analytic signal's phase derivative.
        import scipy.signal

        spec = ExcitationSpec.sweep(1.0, 5000.0, duration=10.0)
        ts = gen_sweep(spec, FS)
        phase = np.unwrap(np.angle(scipy.signal.hilbert(ts.samples)))
        inst_freq = np.gradient(phase) * FS / (2 * np.pi)
        mid = int(5.0 * FS)
        assert np.median(inst_freq[mid - 50 : mid + 50]) == pytest.approx(2500.5, abs=2.0)

    def test_zero_crossing_count(self):
        spec = ExcitationSpec.sweep(1.0, 5000.0, duration=10.0)
        ts = gen_sweep(spec, FS)
        signs = np.sign(ts.samples)
        signs[signs == 0] = 1
        crossings = np.count_nonzero(np.diff(signs))
        assert abs(crossings - 10.0 * (1.0 + 5000.0)) <= 2

    def test_degenerate_sweep_equals_tone(self):
        sw = gen_sweep(ExcitationSpec.sweep(130.0, 130.0, duration=1.0), FS)
        tone = gen_tone(ExcitationSpec.tone(130.0, duration=1.0), FS)
        np.testing.assert_array_equal(sw.samples, tone.samples)

    def test_reversed_band_rejected(self):
        with pytest.raises(ParameterError):
            ExcitationSpec.sweep(5000.0, 1.0)

    def test_nyquist_rejected(self):
        with pytest.raises(ParameterError):
            gen_sweep(ExcitationSpec.sweep(1.0, 13000.0), FS)


class TestBandNoise:
    def test_deterministic_for_fixed_seed(self):
        spec = ExcitationSpec.band_noise(100.0, 350.0, seed=7, duration=2.0)
        a = gen_bandnoise(spec, FS)
        b = gen_bandnoise(spec, FS)
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_seed_changes_realization(self):
        a = gen_bandnoise(ExcitationSpec.band_noise(100.0, 350.0, seed=7), FS)
        b = gen_bandnoise(ExcitationSpec.band_noise(100.0, 350.0, seed=8), FS)
        assert not np.array_equal(a.samples, b.samples)

    def test_band_power_concentration(self):
        # Parseval: nearly all variance must sit inside [100, 350] Hz.
        ts = gen_bandnoise(ExcitationSpec.band_noise(100.0, 350.0, seed=7, duration=4.0), FS)
        spectrum = np.abs(np.fft.rfft(ts.samples)) ** 2
        freqs = np.fft.rfftfreq(ts.n_samples, 1 / FS)
        in_band = spectrum[(freqs >= 100.0) & (freqs <= 350.0)].sum()
        assert in_band / spectrum.sum() >= 0.95

    def test_zero_mean_and_amplitude_normalization(self):
        ts = gen_bandnoise(ExcitationSpec.band_noise(100.0, 350.0, seed=3, amplitude=2.0), FS)
        assert abs(np.mean(ts.samples)) < 1e-6
        assert np.max(np.abs(ts.samples)) == pytest.approx(2.0)

    def test_psd_flat_in_band_and_down_outside(self):
        from boltscope.spectral import welch_psd

        spec = ExcitationSpec.band_noise(100.0, 350.0, seed=11, duration=16.0)
        ts = gen_bandnoise(spec, FS)
        psd = welch_psd(ts, segment_length=4096, overlap=0.5)
        level = psd.level_db()
        core = (psd.freqs >= 110.0) & (psd.freqs <= 340.0)
        in_band_med = np.median(level[core])
        assert np.max(np.abs(level[core] - in_band_med)) <= 3.0
        # one octave outside either edge; the two DC-adjacent bins are an
        # estimator artifact (windowed segment means), not synthesis content
        low = (psd.freqs > 2 * psd.resolution_hz) & (psd.freqs <= 50.0)
        high = (psd.freqs >= 700.0) & (psd.freqs <= 2000.0)
        assert np.max(level[low]) <= in_band_med - 40.0
        assert np.max(level[high]) <= in_band_med - 40.0

    def test_raw_spectrum_zero_outside_band(self):
        # frequency-domain synthesis is brick-wall: out-of-band DFT bins
        # of the full record must vanish exactly
        ts = gen_bandnoise(ExcitationSpec.band_noise(100.0, 350.0, seed=11, duration=4.0), FS)
        spectrum = np.abs(np.fft.rfft(ts.samples))
        freqs = np.fft.rfftfreq(ts.n_samples, 1 / FS)
        out = (freqs < 100.0) | (freqs > 350.0)
        assert np.max(spectrum[out]) < 1e-9 * np.max(spectrum)

    def test_invalid_band_rejected(self):
        with pytest.raises(ParameterError):
            ExcitationSpec.band_noise(350.0, 100.0)
        with pytest.raises(ParameterError):
            gen_bandnoise(ExcitationSpec.band_noise(100.0, 13000.0), FS)


class TestCommonProperties:
    @pytest.mark.parametrize(
        "spec",
        [
            ExcitationSpec.tone(130.0, duration=0.73),
            ExcitationSpec.fm(130.0, 2.0, 5.0, duration=0.73),
            ExcitationSpec.sweep(10.0, 900.0, duration=0.73),
            ExcitationSpec.band_noise(100.0, 350.0, duration=0.73, seed=5),
        ],
    )
    def test_length_and_amplitude_bound(self, spec):
        ts = render(spec, FS)
        assert ts.n_samples == round(0.73 * FS)
        assert np.max(np.abs(ts.samples)) <= spec.amplitude + 1e-12

    def test_render_dispatch_matches_direct_calls(self):
        spec = ExcitationSpec.tone(130.0)
        np.testing.assert_array_equal(render(spec, FS).samples, gen_tone(spec, FS).samples)

    def test_kind_mismatch_rejected(self):
        with pytest.raises(ParameterError):
            gen_tone(ExcitationSpec.sweep(1.0, 100.0), FS)

    def test_fm_derived_quantities(self):
        spec = ExcitationSpec.fm(130.0, 2.0, 5.0)
        d = spec.derived()
        assert d["modulation_index"] == pytest.approx(2.5)
        assert d["max_frequency_hz"] == pytest.approx(135.0)

    def test_tone_spectrum_is_single_line(self):
        from boltscope.spectral import welch_psd

        ts = gen_tone(ExcitationSpec.tone(130.0, duration=4.0), FS)
        psd = welch_psd(ts, segment_length=51200, overlap=0.5)
        peak_freq = psd.freqs[np.argmax(psd.density)]
        assert abs(peak_freq - 130.0) <= psd.resolution_hz

    def test_sweep_energy_spread_over_band(self):
        from boltscope.spectral import band_power, welch_psd

        ts = gen_sweep(ExcitationSpec.sweep(500.0, 3000.0, duration=4.0), FS)
        psd = welch_psd(ts, segment_length=25600, overlap=0.5)
        in_band = band_power(psd, 500.0, 3000.0)
        total = band_power(psd, 0.0, psd.nyquist)
        assert in_band / total >= 0.9
        # energy is spread, not concentrated: no single 10 Hz slice dominates
        chunks = [band_power(psd, f, f + 10.0) for f in np.arange(500.0, 3000.0, 250.0)]
        assert max(chunks) / in_band < 0.05

import numpy as np
import pytest

from pnpuct import (
    EmptyRegion,
    Normalization,
    PixelModel,
    RectPulse,
    Region,
    SceneConfig,
    ShapeMismatch,
    ThermogramStack,
    Timing,
    TooFewPeriods,
    build_bipolar,
    build_matched_filter,
    build_unipolar,
    compress_stack,
    compress_trace,
    decimate_to_bit_rate,
    fit_dc,
    generate_ls,
    impulse_response,
    lpt_reference,
    modify_for_perfect_pacf,
    remove_dc,
    remove_dc_stack,
    respond,
    simulate_stack,
    snr_metric,
)
from pipeline_helpers import run_pixel

SOUND = PixelModel(diffusivity=1e-6)


class TestCompressTrace:
    def test_code_itself_gives_gain_times_pulse(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=3.0, n_per=2)
        filt = build_matched_filter(ls31_plus, timing)
        y = np.tile(np.repeat(ls31_plus.values, 3), 2)
        out = compress_trace(y, filt, timing)
        np.testing.assert_allclose(out.values[:3], 31.0, rtol=1e-9)
        np.testing.assert_allclose(out.values[3:], 0.0, atol=1e-9 * 31)
        assert out.periods_averaged == 1

    def test_zeros_give_zeros(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        filt = build_matched_filter(ls31_plus, timing)
        out = compress_trace(np.zeros(124), filt, timing)
        np.testing.assert_array_equal(out.values, np.zeros(62))

    def test_transparency_vs_lpt_reference(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=40.0, n_per=2)
        compressed, _ = run_pixel(SOUND, ls31, ls31_plus, timing)
        reference = lpt_reference(SOUND, RectPulse(duration=1.0, amplitude=1.0),
                                  timing, timing.t_meas(31))
        scaled = compressed.values / (ls31_plus.gain * 0.5)
        err = np.sqrt(np.mean((scaled - reference) ** 2))
        assert err < 0.02 * reference.max()

    def test_too_few_periods(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        filt = build_matched_filter(ls31_plus, timing)
        with pytest.raises(TooFewPeriods):
            compress_trace(np.zeros(62), filt, timing)

    def test_shape_mismatch(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        filt = build_matched_filter(ls31_plus, timing)
        with pytest.raises(ShapeMismatch):
            compress_trace(np.zeros(130), filt, timing)

    def test_fft_matches_direct_convolution(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=3)
        filt = build_matched_filter(ls31_plus, timing)
        rng = np.random.default_rng(12)
        y = rng.normal(size=3 * 62)
        out = compress_trace(y, filt, timing)
        period = 62
        conv = np.convolve(y, filt.taps)
        direct = np.mean([conv[period: 2 * period], conv[2 * period: 3 * period]],
                         axis=0)
        np.testing.assert_allclose(out.values, direct, rtol=1e-10, atol=1e-10)

    def test_single_period_flag(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=3)
        filt = build_matched_filter(ls31_plus, timing)
        rng = np.random.default_rng(13)
        y = rng.normal(size=3 * 62)
        single = compress_trace(y, filt, timing, single_period=True)
        conv = np.convolve(y, filt.taps)
        np.testing.assert_allclose(single.values, conv[62:124], rtol=1e-10)
        assert single.periods_averaged == 1

    def test_gain_linearity(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        filt = build_matched_filter(ls31_plus, timing)
        rng = np.random.default_rng(14)
        y = rng.normal(size=124)
        base = compress_trace(y, filt, timing).values
        scaled = compress_trace(2.5 * y, filt, timing).values
        np.testing.assert_allclose(scaled, 2.5 * base, rtol=1e-12)

    @staticmethod
    def _period_residual(h, t_bit, k, n_per=3):
        """Relative RMS difference of consecutive steady periods for the
        exact response to the modified-sequence excitation."""
        from pnpuct import ExcitationWaveform, WaveformKind

        code = generate_ls(31)
        plus = modify_for_perfect_pacf(code)
        timing = Timing(t_bit=t_bit, fps=k / t_bit, n_per=n_per)
        x_mod = ExcitationWaveform(
            samples=0.5 * np.tile(np.repeat(plus.values, k), n_per),
            kind=WaveformKind.BIPOLAR_XPN, timing=timing)
        y_ac = respond(h(len(x_mod.samples), timing.dt), x_mod)
        filt = build_matched_filter(plus, timing)
        conv = np.convolve(y_ac, filt.taps)
        period = len(filt.taps)
        p1 = conv[period: 2 * period]
        p2 = conv[2 * period: 3 * period]
        return np.linalg.norm(p2 - p1) / np.linalg.norm(p1)

    def test_steady_state_periodicity(self):
        # a pixel whose response dies within one code period (strong
        # heat drain into a high-effusivity backing): consecutive
        # post-transient periods agree to better than 1 percent
        model = PixelModel(diffusivity=1e-6, defect_depth=0.5e-3,
                           reflection_coeff=-0.99)

        def h(n, dt):
            return impulse_response(model, Timing(t_bit=1.0, fps=1 / dt),
                                    n * dt)

        assert self._period_residual(h, t_bit=1.0, k=4) < 0.01

    def test_aliasing_residual_shrinks_as_t_meas_grows(self):
        # lumped-capacitance pixel (Newton cooling, time constant 2 s):
        # the uncaptured tail, and with it the period-to-period
        # residual, shrinks as the code period is stretched
        def h(n, dt):
            return np.exp(-np.arange(n) * dt / 2.0) / 2.0

        residuals = [self._period_residual(h, t_bit=t, k=4)
                     for t in (0.25, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(residuals, residuals[1:]))

    def test_period_averaging_reduces_noise_variance(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=1.0, n_per=3)
        rng = np.random.default_rng(15)
        sigma = 0.1
        clean, _ = run_pixel(SOUND, ls31, ls31_plus, timing)
        var_avg, var_single = [], []
        for _ in range(120):
            noise = rng.normal(0, sigma, 3 * 31)
            avg, _ = run_pixel(SOUND, ls31, ls31_plus, timing, noise=noise)
            single, _ = run_pixel(SOUND, ls31, ls31_plus, timing, noise=noise,
                                  single_period=True)
            var_avg.append(np.var(avg.values - clean.values))
            var_single.append(np.var(single.values - clean.values))
        ratio = np.mean(var_avg) / np.mean(var_single)
        assert 0.4 < ratio < 0.6


class TestCompressStack:
    def _dc_removed_stack(self, scene, code, plus, timing):
        unipolar = build_unipolar(build_bipolar(code, timing), 1.0)
        raw = simulate_stack(scene, unipolar)
        removed, _ = remove_dc_stack(raw, plus, timing)
        return removed

    def test_uniform_stack_compresses_uniformly(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        scene = SceneConfig(nx=3, ny=2, background=SOUND)
        removed = self._dc_removed_stack(scene, ls31, ls31_plus, timing)
        out = compress_stack(removed, ls31_plus, timing)
        assert out.n_frames == 62
        first = out.data[:, 0, 0]
        for jy in range(2):
            for jx in range(3):
                np.testing.assert_array_equal(out.data[:, jy, jx], first)
        assert out.metadata["stage"] == "compressed"

    def test_stack_matches_trace_path(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        scene = SceneConfig(nx=2, ny=1, background=SOUND)
        removed = self._dc_removed_stack(scene, ls31, ls31_plus, timing)
        out = compress_stack(removed, ls31_plus, timing)
        filt = build_matched_filter(ls31_plus, timing)
        trace = compress_trace(removed.pixel_trace(0, 0), filt, timing)
        np.testing.assert_allclose(out.data[:, 0, 0], trace.values, rtol=1e-6)

    def test_normalizations_are_exact_scalings(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        scene = SceneConfig(nx=2, ny=2, background=SOUND)
        removed = self._dc_removed_stack(scene, ls31, ls31_plus, timing)
        raw = compress_stack(removed, ls31_plus, timing, Normalization.RAW)
        length = compress_stack(removed, ls31_plus, timing,
                                Normalization.PER_LENGTH)
        gain = compress_stack(removed, ls31_plus, timing,
                              Normalization.PER_GAIN)
        np.testing.assert_allclose(length.data, raw.data / 31.0, rtol=1e-6)
        np.testing.assert_allclose(gain.data, raw.data / 31.0, rtol=1e-6)
        assert length.metadata["normalization"] == "per_length"

    def test_defect_pixels_cool_higher(self, ls31, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        defect = PixelModel(diffusivity=1e-6, defect_depth=1e-3,
                            reflection_coeff=0.9)
        scene = SceneConfig(nx=4, ny=4, background=SOUND,
                            defects=((Region(0, 0, 2, 2), defect),))
        removed = self._dc_removed_stack(scene, ls31, ls31_plus, timing)
        out = compress_stack(removed, ls31_plus, timing)
        sample_mean = out.data.reshape(out.n_frames, -1).mean(axis=1)
        defect_trace = out.data[:, 0, 0]
        cooling = slice(int(5 * timing.fps), int(25 * timing.fps))
        assert np.all(defect_trace[cooling] > sample_mean[cooling])

    def test_frame_count_checked(self, ls31_plus):
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        stack = ThermogramStack(data=np.ones((100, 1, 1), dtype=np.float32),
                                fps=2.0)
        with pytest.raises(ShapeMismatch):
            compress_stack(stack, ls31_plus, timing)


class TestDecimate:
    def test_identity_at_k1(self, ls31):
        timing = Timing(t_bit=1.0, fps=1.0, n_per=2)
        stack = ThermogramStack(data=np.ones((62, 1, 1), dtype=np.float32),
                                fps=1.0)
        out, out_timing = decimate_to_bit_rate(stack, timing)
        assert out is stack
        assert out_timing is timing

    def test_frame_count_after_decimation(self):
        # 40 fps, 0.5 s bits, 61-bit code, 2 periods: 122 frames remain
        code = generate_ls(61)
        timing = Timing(t_bit=0.5, fps=40.0, n_per=2)
        scene = SceneConfig(nx=1, ny=1, background=SOUND)
        unipolar = build_unipolar(build_bipolar(code, timing), 1.0)
        raw = simulate_stack(scene, unipolar)
        assert raw.n_frames == 2440
        out, out_timing = decimate_to_bit_rate(raw, timing)
        assert out.n_frames == 122
        assert out_timing.k == 1
        assert out_timing.fps == pytest.approx(2.0)
        np.testing.assert_array_equal(out.data, raw.data[::20])

    def test_bin_average_option(self):
        data = np.arange(12, dtype=np.float32).reshape(12, 1, 1)
        stack = ThermogramStack(data=data, fps=4.0)
        timing = Timing(t_bit=1.0, fps=4.0, n_per=2)
        first, _ = decimate_to_bit_rate(stack, timing)
        np.testing.assert_array_equal(first.data[:, 0, 0], [0, 4, 8])
        binned, _ = decimate_to_bit_rate(stack, timing, average=True)
        np.testing.assert_array_equal(binned.data[:, 0, 0], [1.5, 5.5, 9.5])

    def test_decimated_pipeline_matches_full_rate(self, ls31, ls31_plus):
        full_timing = Timing(t_bit=1.0, fps=40.0, n_per=2)
        compressed_full, _ = run_pixel(SOUND, ls31, ls31_plus, full_timing)
        at_bits = compressed_full.values[::full_timing.k]

        # decimated route: subsample the raw trace, then DC removal and
        # compression at one frame per bit
        unipolar = build_unipolar(build_bipolar(ls31, full_timing), 1.0)
        h = impulse_response(SOUND, full_timing, unipolar.duration)
        y = respond(h, unipolar)[::full_timing.k]
        dec_timing = Timing(t_bit=1.0, fps=1.0, n_per=2)
        fit = fit_dc(y, dec_timing)
        y_ac = remove_dc(y, fit, ls31_plus, dec_timing)
        filt = build_matched_filter(ls31_plus, dec_timing)
        compressed_dec = compress_trace(y_ac, filt, dec_timing)
        rel = (np.linalg.norm(compressed_dec.values - at_bits)
               / np.linalg.norm(at_bits))
        assert rel < 0.02


class TestSnrMetric:
    def _stack(self, noise_sigma=0.0, seed=1):
        defect = PixelModel(diffusivity=1e-6, defect_depth=0.5e-3,
                            reflection_coeff=0.9)
        scene = SceneConfig(nx=6, ny=4, background=SOUND,
                            defects=((Region(0, 0, 3, 4), defect),),
                            noise_sigma=noise_sigma, rng_seed=seed)
        code = generate_ls(31)
        timing = Timing(t_bit=1.0, fps=2.0, n_per=2)
        unipolar = build_unipolar(build_bipolar(code, timing), 1.0)
        raw = simulate_stack(scene, unipolar)
        plus = modify_for_perfect_pacf(code)
        removed, _ = remove_dc_stack(raw, plus, timing)
        return compress_stack(removed, plus, timing)

    def test_zero_noise_saturates(self):
        stack = self._stack(noise_sigma=0.0)
        value = snr_metric(stack, Region(0, 0, 3, 4), Region(3, 0, 3, 4))
        assert value == float("inf")

    def test_same_region_gives_minus_inf(self):
        stack = self._stack(noise_sigma=0.1)
        region = Region(3, 0, 3, 4)
        assert snr_metric(stack, region, region) == float("-inf")

    def test_offset_stability(self):
        stack = self._stack(noise_sigma=0.1)
        sig, ref = Region(0, 0, 3, 4), Region(3, 0, 3, 4)
        base = snr_metric(stack, sig, ref)
        shifted = ThermogramStack(data=stack.data + 100.0, fps=stack.fps,
                                  metadata=stack.metadata)
        assert snr_metric(shifted, sig, ref) == pytest.approx(base, abs=1e-3)

    def test_empty_or_outside_region(self):
        stack = self._stack()
        with pytest.raises(EmptyRegion):
            snr_metric(stack, Region(0, 0, 3, 4), Region(5, 0, 3, 4))
        with pytest.raises(ValueError):
            Region(0, 0, 0, 2)

    def test_overlap_rejected(self):
        stack = self._stack(noise_sigma=0.1)
        with pytest.raises(ValueError):
            snr_metric(stack, Region(0, 0, 4, 4), Region(3, 0, 3, 4))

import numpy as np
import numpy.testing as npt
import pytest

from qmapkit import bloch, phantom, seqsim

from conftest import WATER, snr_sigma

FAT = phantom.TissueParams(water_amp=0.0, fat_amp=1.0, t1=0.35, t2=0.07,
                           t2s_water=0.04, t2s_fat=0.03,
                           d_omega0=2 * np.pi * 20.0)


def test_default_timing_schedule():
    t = seqsim.default_timing()
    times = np.asarray(t.acq_times)
    assert times.size == 11
    assert np.all(np.diff(times) > 0)
    npt.assert_allclose(t.probe_times, (0.4, 0.8))
    npt.assert_allclose(times[7], 1.202)
    npt.assert_allclose(times[8:], [1.212, 1.224, 1.24])
    assert times[-1] < t.tr


def test_timing_validation():
    with pytest.raises(ValueError):
        # Echo centers inconsistent with the refocusing placement.
        seqsim.SequenceTiming(echo_offsets=(0.012, 0.024, 0.039))
    with pytest.raises(ValueError):
        seqsim.SequenceTiming(tr=1.0)      # acquisitions spill past TR
    with pytest.raises(ValueError):
        seqsim.SequenceTiming(fid_times=(0.002, 0.004))


def test_double_pulse_is_twice_the_single():
    pulses = seqsim.build_pulses(timing=seqsim.default_timing())
    npt.assert_allclose(pulses.imaging_double.samples,
                        2.0 * pulses.imaging.samples, rtol=1e-15)
    assert pulses.imaging_double.dt == pulses.imaging.dt
    assert pulses.imaging_double.nominal_flip == pytest.approx(
        2.0 * pulses.imaging.nominal_flip)


def test_segments_share_all_pre_imaging_acquisitions(water_scan):
    data = water_scan.data
    npt.assert_array_equal(data[0, 0:7], data[1, 0:7])
    # The imaging acquisition itself differs (60 vs 120 degrees).
    inside = np.abs(data[0, 7]) > 0
    assert np.any(np.abs(data[0, 7][inside] - data[1, 7][inside]) > 1e-6)


def test_water_pixel_images_are_real_positive(water_scan, water_disc):
    r, c = 16, 16
    assert water_disc.label[r, c] == 1
    sig = water_scan.data[:, :, r, c]
    assert np.all(sig.real > 0)
    npt.assert_allclose(sig.imag, 0.0, atol=1e-12 * np.max(sig.real))


def test_hard_pulse_double_angle_ratio(hard_pulses):
    timing = seqsim.default_timing()
    for k in (0.8, 1.0, 1.2):
        prof = seqsim.pixel_profiles(hard_pulses, k)
        sig = seqsim.simulate_pixel(WATER, timing, prof)
        ratio = abs(sig[1, 7]) / abs(sig[0, 7])
        expected = abs(2.0 * np.cos(k * np.pi / 3.0))
        npt.assert_allclose(ratio, expected, atol=1e-9)


def test_fat_fid_phase_advance(hard_pulses):
    timing = seqsim.default_timing()
    prof = seqsim.pixel_profiles(hard_pulses, 1.0)
    sig = seqsim.simulate_pixel(FAT, timing, prof)
    steps = np.angle(sig[0, 1:5] / sig[0, 0:4])
    expected = (FAT.d_omega0 + seqsim.OMEGA_CS) * 0.002
    expected = np.angle(np.exp(1j * expected))       # wrap like the data
    npt.assert_allclose(steps, np.full(4, expected), atol=1e-12)


def test_echo_train_decays_with_t2(hard_pulses):
    timing = seqsim.default_timing()
    prof = seqsim.pixel_profiles(hard_pulses, 1.0)
    sig = seqsim.simulate_pixel(WATER, timing, prof)
    echoes = np.abs(sig[0, 8:11])
    dts = np.asarray(timing.echo_offsets)
    # Hard 180s refocus perfectly: pure exponential in the echo offsets.
    npt.assert_allclose(echoes / echoes[0],
                        np.exp(-(dts - dts[0]) / WATER.t2), rtol=1e-9)


def test_imaging_signal_monotone_in_recovery_time(hard_pulses):
    mags = []
    for t_sat in (0.3, 0.6, 1.2, 1.8):
        timing = seqsim.default_timing(t_sat=t_sat)
        prof = seqsim.pixel_profiles(hard_pulses, 1.0)
        sig = seqsim.simulate_pixel(WATER, timing, prof)
        mags.append(abs(sig[0, 7]))
    assert np.all(np.diff(mags) > 0)


def test_pixel_linearity(hard_pulses):
    timing = seqsim.default_timing()
    prof = seqsim.pixel_profiles(hard_pulses, 1.0)
    mixed = phantom.TissueParams(water_amp=0.5, fat_amp=0.2, t1=0.6,
                                 t2=0.08, t2s_water=0.04, t2s_fat=0.03)
    double = phantom.TissueParams(water_amp=1.0, fat_amp=0.4, t1=0.6,
                                  t2=0.08, t2s_water=0.04, t2s_fat=0.03)
    a = seqsim.simulate_pixel(mixed, timing, prof)
    b = seqsim.simulate_pixel(double, timing, prof)
    npt.assert_allclose(b, 2.0 * a, rtol=1e-12, atol=1e-15)


def test_background_noise_level(water_disc, water_scan):
    sigma = 5.0 * snr_sigma(water_scan, water_disc, 50.0)
    noisy = seqsim.simulate_scan(water_disc, noise_sigma=sigma, seed=3)
    bg = noisy.data[:, :, water_disc.label == 0]
    parts = np.concatenate([bg.real.ravel(), bg.imag.ravel()])
    assert abs(parts.std() / sigma - 1.0) < 0.05
    assert abs(parts.mean()) < 3.0 * sigma / np.sqrt(parts.size)


def test_noise_is_seed_reproducible(water_disc):
    a = seqsim.simulate_scan(water_disc, noise_sigma=1e-4, seed=9)
    b = seqsim.simulate_scan(water_disc, noise_sigma=1e-4, seed=9)
    c = seqsim.simulate_scan(water_disc, noise_sigma=1e-4, seed=10)
    npt.assert_array_equal(a.data, b.data)
    assert np.any(a.data != c.data)


def test_scan_shape_and_metadata(water_scan):
    assert water_scan.data.shape == (2, 11, 32, 32)
    assert water_scan.height == 32 and water_scan.width == 32
    assert water_scan.noise_sigma == 0.0
    assert np.all(water_scan.data[:, :, 0, 0] == 0.0)   # background pixel

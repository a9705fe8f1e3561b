"""Forward simulation of the two-segment saturation-recovery protocol.

Each repetition (one per segment) plays, per pixel:

* a 90-degree saturation pulse at t = 0 whose transverse response seeds the
  five FID acquisitions I1-I5;
* two 30-degree probe pulses during the recovery, each read out a short echo
  time later (I6, I7);
* an imaging pulse at t_sat (60 degrees in segment 1, 120 in segment 2) read
  out at the same echo time (I8);
* three nominally 180-degree refocusing pulses forming spin echoes I9-I11.

Spoilers and crushers are ideal, so transverse magnetization never survives
between blocks.  The longitudinal bookkeeping between saturation and the
imaging pulse is the exact walk the T1 fitter uses (shared implementation);
the echo train reuses the T2 fitter's prediction kernel sourced by the
imaging-pulse signal.  Both repetitions start from thermal equilibrium, so
the segments' I1-I7 are identical by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import bloch, t1fit, t2fit
from .constants import OMEGA_CS
from .phantom import PhantomMap, TissueParams

_MS = 1e-3


@dataclass(frozen=True)
class SequenceTiming:
    """Pulse and acquisition schedule of one repetition (seconds).

    fid_times are the I1-I5 acquisition times since the saturation pulse;
    probe_times and t_sat place the pulses themselves, each read out
    echo_time later; inversion_offsets place the refocusing pulses after
    t_sat, and echo_offsets the three echo centers they imply.
    """

    tr: float = 2.4
    t_sat: float = 1.2
    fid_times: tuple = (2 * _MS, 4 * _MS, 6 * _MS, 8 * _MS, 10 * _MS)
    probe_times: tuple = (0.4, 0.8)
    echo_time: float = 2 * _MS
    inversion_offsets: tuple = (6 * _MS, 18 * _MS, 32 * _MS)
    echo_offsets: tuple = (12 * _MS, 24 * _MS, 40 * _MS)
    sat_flip: float = np.pi / 2.0
    probe_flip: float = np.pi / 6.0
    imaging_flips: tuple = (np.pi / 3.0, 2.0 * np.pi / 3.0)
    inversion_flip: float = np.pi

    def __post_init__(self):
        for name in ("fid_times", "probe_times", "inversion_offsets",
                     "echo_offsets", "imaging_flips"):
            object.__setattr__(
                self, name, tuple(float(v) for v in getattr(self, name)))
        if len(self.fid_times) != 5 or len(self.probe_times) != 2:
            raise ValueError("need five FID times and two probe times")
        if len(self.inversion_offsets) != 3 or len(self.echo_offsets) != 3:
            raise ValueError("need three inversions and three echo offsets")
        if len(self.imaging_flips) != 2:
            raise ValueError("need one imaging flip per segment")
        # Echo centers must be where the refocusing placement puts them.
        implied = []
        prev = 0.0
        for inv in self.inversion_offsets:
            prev = 2.0 * inv - prev
            implied.append(prev)
        if not np.allclose(implied, self.echo_offsets, rtol=0, atol=1e-9):
            raise ValueError(
                f"echo_offsets {self.echo_offsets} do not match the centers "
                f"implied by the inversions {tuple(implied)}"
            )
        train = []
        for inv, echo in zip(self.inversion_offsets, self.echo_offsets):
            train += [self.t_sat + inv, self.t_sat + echo]
        chained = (0.0,) + self.fid_times + (
            self.probe_times[0], self.probe_times[0] + self.echo_time,
            self.probe_times[1], self.probe_times[1] + self.echo_time,
            self.t_sat, self.t_sat + self.echo_time,
        ) + tuple(train) + (self.tr,)
        diffs = np.diff(chained)
        if np.any(diffs <= 0):
            raise ValueError("schedule events out of order or beyond TR")

    @property
    def acq_times(self):
        """Eleven acquisition times since saturation (same both segments)."""
        return self.fid_times + (
            self.probe_times[0] + self.echo_time,
            self.probe_times[1] + self.echo_time,
            self.t_sat + self.echo_time,
        ) + tuple(self.t_sat + e for e in self.echo_offsets)


def default_timing(t_sat: float = 1.2, tr: float = 2.4) -> SequenceTiming:
    """Standard schedule scaled to a saturation-recovery time."""
    return SequenceTiming(
        tr=tr, t_sat=t_sat,
        probe_times=(t_sat / 3.0, 2.0 * t_sat / 3.0),
    )


@dataclass(frozen=True)
class PulseParams:
    """Waveform/geometry knobs for the standard pulse set."""

    slice_thickness: float = 0.004
    duration: float = 0.001
    time_bandwidth: float = 4.0
    n_pieces: int = 256
    z_count: int = 129
    z_half_span: float = 2.0
    hard: bool = False

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class SequencePulses:
    """The five waveforms; the 120-degree pulse is the 60-degree pulse at
    twice the amplitude (same shape and duration)."""

    sat: bloch.RfPulse
    probe: bloch.RfPulse
    imaging: bloch.RfPulse
    imaging_double: bloch.RfPulse
    inversion: bloch.RfPulse
    params: PulseParams

    def z_grid(self):
        return bloch.default_z_grid(
            self.params.slice_thickness, self.params.z_count,
            self.params.z_half_span)


def build_pulses(params: PulseParams = PulseParams(),
                 timing: SequenceTiming = None) -> SequencePulses:
    """Standard pulse set: Hamming-windowed sincs (or hard pulses for
    idealized tests).  Excitations carry RF phase -90 degrees so the
    on-resonance tip lands on +x and noiseless water images are
    real-positive."""
    flips = timing or SequenceTiming()
    if params.hard:
        mk = lambda flip, phase: bloch.RfPulse(
            samples=np.array([flip / 1e-5 * np.exp(1j * phase)]),
            dt=1e-5, slice_gradient=0.0, nominal_flip=flip)
    else:
        mk = lambda flip, phase: bloch.hamming_sinc_pulse(
            flip, params.duration, params.slice_thickness,
            params.time_bandwidth, params.n_pieces, phase=phase)
    imaging = mk(flips.imaging_flips[0], -np.pi / 2.0)
    imaging_double = bloch.RfPulse(
        samples=2.0 * imaging.samples, dt=imaging.dt,
        slice_gradient=imaging.slice_gradient,
        nominal_flip=2.0 * imaging.nominal_flip)
    return SequencePulses(
        sat=mk(flips.sat_flip, -np.pi / 2.0),
        probe=mk(flips.probe_flip, -np.pi / 2.0),
        imaging=imaging,
        imaging_double=imaging_double,
        inversion=mk(flips.inversion_flip, 0.0),
        params=params,
    )


@dataclass(frozen=True)
class PixelProfiles:
    """Slice responses of the pulse set at one B1 scale."""

    k: float
    z: np.ndarray
    txr_sat: np.ndarray        # rephased transverse response, per z
    txr_probe: np.ndarray
    mzf_probe: np.ndarray      # longitudinal survival factor, per z
    txr_imaging: tuple         # one complex array per segment
    theta_inv: np.ndarray      # refocusing rotation angle, per z


def pixel_profiles(pulses: SequencePulses, k: float,
                   z: np.ndarray = None) -> PixelProfiles:
    if z is None:
        z = pulses.z_grid()
    sat = bloch.rephased(bloch.slice_profile(pulses.sat, k, z), pulses.sat)
    probe = bloch.rephased(bloch.slice_profile(pulses.probe, k, z),
                           pulses.probe)
    img1 = bloch.rephased(bloch.slice_profile(pulses.imaging, k, z),
                          pulses.imaging)
    img2 = bloch.rephased(
        bloch.slice_profile(pulses.imaging_double, k, z),
        pulses.imaging_double)
    inv = bloch.slice_profile(pulses.inversion, k, z)
    return PixelProfiles(
        k=float(k), z=z,
        txr_sat=bloch.transverse_response(sat),
        txr_probe=bloch.transverse_response(probe),
        mzf_probe=bloch.longitudinal_response(probe),
        txr_imaging=(bloch.transverse_response(img1),
                     bloch.transverse_response(img2)),
        theta_inv=bloch.rotation_angle(inv.rotations),
    )


def species_kernel(t, p: TissueParams, omega_cs: float = OMEGA_CS):
    """Normalized two-species FID kernel at times t since a tip of the full
    magnetization: off-resonance phase times the water/fat T2*-decay mix."""
    t = np.asarray(t, dtype=float)
    total = p.water_amp + p.fat_amp
    w_frac = p.water_amp / total
    f_frac = p.fat_amp / total
    mix = (w_frac * np.exp(-t / p.t2s_water)
           + f_frac * np.exp((1j * omega_cs - 1.0 / p.t2s_fat) * t))
    return np.exp(1j * p.d_omega0 * t) * mix


def simulate_pixel(p: TissueParams, timing: SequenceTiming,
                   profiles: PixelProfiles,
                   omega_cs: float = OMEGA_CS) -> np.ndarray:
    """Noiseless (2, 11) complex acquisitions for one pixel."""
    out = np.zeros((2, 11), dtype=complex)
    m0 = p.water_amp + p.fat_amp
    if m0 == 0.0:
        return out
    z = profiles.z
    # Saturation FID: slice-integrated transverse response applied to the
    # equilibrium magnetization, evolving with the two-species kernel.
    c_sat = bloch.integrate_slice(profiles.txr_sat, z)
    fid = m0 * c_sat * species_kernel(np.asarray(timing.fid_times), p,
                                      omega_cs)
    # Saturation leaves the hard-pulse-equivalent scalar residual.
    mz0 = m0 * float(np.cos(p.b1_scale * timing.sat_flip))
    te = timing.echo_time
    te_kernel = complex(species_kernel(te, p, omega_cs))
    ctx = t1fit.T1Context(
        probe_txr=profiles.txr_probe,
        probe_mzf=profiles.mzf_probe,
        imaging_txr=profiles.txr_imaging[0],
        z_samples=z,
        times=(timing.probe_times[0] + te, timing.probe_times[1] + te,
               timing.t_sat + te),
        echo_time=te,
        mz0=mz0,
    )
    s6, s7, s8_seg1, mz_sat = t1fit.recovery_signals(p.t1, m0, ctx)
    for seg in (0, 1):
        txr_img = profiles.txr_imaging[seg]
        a_src = (s8_seg1 if seg == 0
                 else bloch.integrate_slice(txr_img * mz_sat, z))
        out[seg, 0:5] = fid
        out[seg, 5] = s6 * te_kernel
        out[seg, 6] = s7 * te_kernel
        out[seg, 7] = a_src * te_kernel
        # Echo train: magnitudes from the shared echo kernel sourced by the
        # imaging-pulse signal; spin echoes refocus off-resonance and
        # chemical shift, so decay is pure T2 and the phase is the source's.
        gain = abs(bloch.integrate_slice(txr_img, z))
        if gain > 0 and abs(a_src) > 0:
            ectx = t2fit.EchoModelContext(
                weights=txr_img, theta_z=profiles.theta_inv,
                echo_times=timing.echo_offsets, z_samples=z, k=profiles.k)
            mags = t2fit.predict_echoes(abs(a_src) / gain, p.t2, ectx)
            out[seg, 8:11] = (a_src / abs(a_src)) * mags
    return out


@dataclass
class ImageSet:
    """The 22 complex images plus everything needed to estimate from them."""

    data: np.ndarray                  # (2, 11, h, w) complex
    timing: SequenceTiming
    pulse_params: PulseParams
    omega_cs: float = OMEGA_CS
    noise_sigma: float = 0.0
    seed: int = 0

    @property
    def height(self):
        return self.data.shape[2]

    @property
    def width(self):
        return self.data.shape[3]


def simulate_scan(pm: PhantomMap, timing: SequenceTiming = None,
                  pulses: SequencePulses = None, noise_sigma: float = 0.0,
                  seed: int = 0, omega_cs: float = OMEGA_CS) -> ImageSet:
    """Simulate the full scan over a phantom.

    Noise is complex white Gaussian with per-channel standard deviation
    ``noise_sigma``, drawn in one bulk pass from a seeded generator so the
    result is independent of pixel evaluation order.
    """
    if timing is None:
        timing = SequenceTiming()
    if pulses is None:
        pulses = build_pulses(timing=timing)
    h, w = pm.shape
    data = np.zeros((2, 11, h, w), dtype=complex)
    cache = {}
    for r in range(h):
        for c in range(w):
            if pm.water_amp[r, c] + pm.fat_amp[r, c] == 0.0:
                continue
            p = pm.params_at(r, c)
            prof = cache.get(p.b1_scale)
            if prof is None:
                prof = pixel_profiles(pulses, p.b1_scale)
                cache[p.b1_scale] = prof
            data[:, :, r, c] = simulate_pixel(p, timing, prof, omega_cs)
    if noise_sigma > 0.0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal((2, 11, h, w, 2))
        data = data + noise_sigma * (noise[..., 0] + 1j * noise[..., 1])
    return ImageSet(data=data, timing=timing, pulse_params=pulses.params,
                    omega_cs=omega_cs, noise_sigma=noise_sigma, seed=seed)

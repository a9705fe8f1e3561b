"""Piecewise-constant RF rotation machinery and slice-profile integration.

Conventions (fixed for the whole toolkit):

* Magnetization vectors are ``(mx, my, mz)``; transverse components are also
  handled as the complex pair ``mx + i*my``.
* Free precession at off-resonance ``dw`` multiplies the transverse complex
  pair by ``exp(+i*dw*dt)``: positive off-resonance advances phase.
* A phase-0 RF pulse (B1 along +x in the rotating frame) tips +z toward +y.
  Both follow from a right-handed rotation by ``sqrt(|b1|^2 + dw^2)*dt``
  about the unit axis ``(-Re(b1), -Im(b1), dw)``.
* Relaxation is neglected during pulses; pulses are short next to T2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MagVec:
    """A single magnetization vector."""

    mx: float = 0.0
    my: float = 0.0
    mz: float = 0.0

    def as_array(self):
        return np.array([self.mx, self.my, self.mz], dtype=float)

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=float)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class RfPulse:
    """Piecewise-constant RF waveform.

    samples : complex rotating-frame amplitudes in rad/s, one per piece
        (magnitude = instantaneous nutation rate, phase measured from +x).
    dt : piece duration in seconds.
    slice_gradient : through-slice precession gradient in rad/(s*m)
        (gamma * Gz); an isochromat at z sees off-resonance
        ``slice_gradient * z`` during the pulse.
    nominal_flip : intended on-resonance flip angle in rad at b1_scale = 1.
    """

    samples: np.ndarray
    dt: float
    slice_gradient: float = 0.0
    nominal_flip: float = 0.0

    def __post_init__(self):
        samples = np.atleast_1d(np.asarray(self.samples, dtype=complex))
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self):
        return self.samples.size * self.dt


def hard_pulse(flip: float, duration: float = 1e-5) -> RfPulse:
    """Single-piece pulse, no gradient: an ideal instantaneous rotation."""
    return RfPulse(
        samples=np.array([flip / duration], dtype=complex),
        dt=duration,
        slice_gradient=0.0,
        nominal_flip=flip,
    )


def hamming_sinc_pulse(flip: float, duration: float, slice_thickness: float,
                       time_bandwidth: float = 4.0, n_pieces: int = 256,
                       phase: float = 0.0) -> RfPulse:
    """Hamming-windowed sinc pulse with slice-select gradient.

    The gradient is chosen so the pulse bandwidth (time_bandwidth/duration)
    spans ``slice_thickness``.  Pieces are sampled at sub-interval midpoints,
    so the windowed envelope never contains an exactly-zero piece.
    """
    if duration <= 0 or slice_thickness <= 0 or time_bandwidth <= 0:
        raise ValueError("duration, slice_thickness, time_bandwidth must be > 0")
    if n_pieces < 2:
        raise ValueError("need at least 2 pieces")
    dt = duration / n_pieces
    t = (np.arange(n_pieces) + 0.5) * dt - duration / 2.0
    bandwidth = time_bandwidth / duration  # Hz
    envelope = np.sinc(bandwidth * t)
    window = 0.54 + 0.46 * np.cos(2.0 * np.pi * t / duration)
    envelope = envelope * window
    scale = flip / (np.sum(envelope) * dt)
    samples = scale * envelope * np.exp(1j * phase)
    slice_gradient = 2.0 * np.pi * bandwidth / slice_thickness
    return RfPulse(samples=samples, dt=dt, slice_gradient=slice_gradient,
                   nominal_flip=flip)


def piece_rotation(amp: complex, dt: float, dw: float) -> np.ndarray:
    """3x3 rotation for one constant piece of RF at off-resonance ``dw``.

    Rodrigues rotation by ``sqrt(|amp|^2 + dw^2)*dt`` about the unit axis
    ``(-Re(amp), -Im(amp), dw)``; identity when the effective field is zero.
    """
    ax = -np.real(amp)
    ay = -np.imag(amp)
    omega = np.sqrt(ax * ax + ay * ay + dw * dw)
    if omega == 0.0:
        return np.eye(3)
    nx, ny, nz = ax / omega, ay / omega, dw / omega
    theta = omega * dt
    return _rodrigues(nx, ny, nz, theta)


def _rodrigues(nx, ny, nz, theta):
    c = np.cos(theta)
    s = np.sin(theta)
    one_c = 1.0 - c
    return np.array([
        [c + nx * nx * one_c, nx * ny * one_c - nz * s, nx * nz * one_c + ny * s],
        [ny * nx * one_c + nz * s, c + ny * ny * one_c, ny * nz * one_c - nx * s],
        [nz * nx * one_c - ny * s, nz * ny * one_c + nx * s, c + nz * nz * one_c],
    ])


@dataclass(frozen=True)
class SliceProfile:
    """Composite rotation per through-slice position."""

    z_samples: np.ndarray   # m, uniform spacing
    rotations: np.ndarray   # (nz, 3, 3)

    def __post_init__(self):
        z = np.atleast_1d(np.asarray(self.z_samples, dtype=float))
        rot = np.asarray(self.rotations, dtype=float)
        if rot.shape != (z.size, 3, 3):
            raise ValueError("rotations must have shape (nz, 3, 3)")
        object.__setattr__(self, "z_samples", z)
        object.__setattr__(self, "rotations", rot)


def default_z_grid(slice_thickness: float, n: int = 129,
                   half_span_factor: float = 2.0) -> np.ndarray:
    """Uniform z grid over +/- half_span_factor * slice_thickness."""
    span = half_span_factor * slice_thickness
    return np.linspace(-span, span, n)


def slice_profile(pulse: RfPulse, b1_scale: float,
                  z_samples: np.ndarray) -> SliceProfile:
    """Composite rotation R(z) = R_M ... R_1 for a scaled pulse.

    Each non-zero piece contributes ``piece_rotation(b1_scale * sample, dt,
    slice_gradient * z)``; zero-amplitude pieces are skipped entirely (so
    ``b1_scale = 0`` yields the identity at every z).
    """
    z = np.atleast_1d(np.asarray(z_samples, dtype=float))
    nz = z.size
    rot = np.broadcast_to(np.eye(3), (nz, 3, 3)).copy()
    if b1_scale == 0.0:
        return SliceProfile(z, rot)
    dw = pulse.slice_gradient * z
    for sample in pulse.samples:
        amp = b1_scale * sample
        if amp == 0.0:
            continue
        ax = -np.real(amp)
        ay = -np.imag(amp)
        omega = np.sqrt(ax * ax + ay * ay + dw * dw)
        theta = omega * pulse.dt
        c = np.cos(theta)
        s = np.sin(theta)
        one_c = 1.0 - c
        nx = ax / omega
        ny = ay / omega
        nz_ax = dw / omega
        piece = np.empty((nz, 3, 3))
        piece[:, 0, 0] = c + nx * nx * one_c
        piece[:, 0, 1] = nx * ny * one_c - nz_ax * s
        piece[:, 0, 2] = nx * nz_ax * one_c + ny * s
        piece[:, 1, 0] = ny * nx * one_c + nz_ax * s
        piece[:, 1, 1] = c + ny * ny * one_c
        piece[:, 1, 2] = ny * nz_ax * one_c - nx * s
        piece[:, 2, 0] = nz_ax * nx * one_c - ny * s
        piece[:, 2, 1] = nz_ax * ny * one_c + nx * s
        piece[:, 2, 2] = c + nz_ax * nz_ax * one_c
        rot = np.einsum("zij,zjk->zik", piece, rot, optimize=False)
    return SliceProfile(z, rot)


def integrated_transverse_curve(pulse: RfPulse, b1_scales,
                                z_samples) -> np.ndarray:
    """Slice-integrated rephased transverse response at many transmit scales.

    Returns one complex value per entry of ``b1_scales``: the integral over
    z of the rephased transverse response, i.e. what a readout of unit
    longitudinal magnetization through this pulse would measure.  Equivalent
    to running slice_profile / rephased / transverse_response /
    integrate_slice per scale, but vectorized over the scale axis.
    """
    ks = np.atleast_1d(np.asarray(b1_scales, dtype=float))
    z = np.atleast_1d(np.asarray(z_samples, dtype=float))
    nk, nz = ks.size, z.size
    dw = pulse.slice_gradient * z                      # (nz,)
    rot = np.broadcast_to(np.eye(3), (nk * nz, 3, 3)).copy()
    for sample in pulse.samples:
        if sample == 0.0:
            continue
        amps = ks * sample                             # (nk,)
        ax = -np.real(amps)[:, None]
        ay = -np.imag(amps)[:, None]
        omega = np.sqrt(ax * ax + ay * ay + dw * dw)   # (nk, nz)
        # A zero scale leaves an identity rotation, like slice_profile.
        safe = np.where(omega == 0.0, 1.0, omega)
        theta = omega * pulse.dt
        c = np.cos(theta)
        s = np.sin(theta)
        one_c = 1.0 - c
        nx = np.broadcast_to(ax / safe, (nk, nz))
        ny = np.broadcast_to(ay / safe, (nk, nz))
        nz_ax = np.broadcast_to(dw / safe, (nk, nz))
        piece = np.empty((nk, nz, 3, 3))
        piece[..., 0, 0] = c + nx * nx * one_c
        piece[..., 0, 1] = nx * ny * one_c - nz_ax * s
        piece[..., 0, 2] = nx * nz_ax * one_c + ny * s
        piece[..., 1, 0] = ny * nx * one_c + nz_ax * s
        piece[..., 1, 1] = c + ny * ny * one_c
        piece[..., 1, 2] = ny * nz_ax * one_c - nx * s
        piece[..., 2, 0] = nz_ax * nx * one_c - ny * s
        piece[..., 2, 1] = nz_ax * ny * one_c + nx * s
        piece[..., 2, 2] = c + nz_ax * nz_ax * one_c
        rot = np.einsum("zij,zjk->zik", piece.reshape(nk * nz, 3, 3), rot,
                        optimize=False)
    rot = rot.reshape(nk, nz, 3, 3)
    txr = rot[..., 0, 2] + 1j * rot[..., 1, 2]
    if pulse.slice_gradient != 0.0:
        phi = -pulse.slice_gradient * z * (pulse.duration / 2.0)
        txr = txr * np.exp(1j * phi)
    h = 1.0 if nz == 1 else (z[-1] - z[0]) / (nz - 1)
    return txr.sum(axis=1) * h


def rephased(profile: SliceProfile, pulse: RfPulse) -> SliceProfile:
    """Apply the ideal slice-refocusing lobe to a profile.

    A slice-selective excitation leaves the through-slice linear phase
    ``+slice_gradient*z*duration/2`` on the transverse components; the
    standard refocusing gradient lobe (half the slice-select area, reversed)
    removes it.  Returns a profile whose rotations are ``Rz(-g*z*tau/2) @
    R(z)``.  No-op for gradient-free pulses.
    """
    if pulse.slice_gradient == 0.0:
        return profile
    z = profile.z_samples
    phi = -pulse.slice_gradient * z * (pulse.duration / 2.0)
    c = np.cos(phi)
    s = np.sin(phi)
    nzn = z.size
    rz = np.zeros((nzn, 3, 3))
    rz[:, 0, 0] = c
    rz[:, 0, 1] = -s
    rz[:, 1, 0] = s
    rz[:, 1, 1] = c
    rz[:, 2, 2] = 1.0
    rot = np.einsum("zij,zjk->zik", rz, profile.rotations, optimize=False)
    return SliceProfile(z, rot)


def transverse_response(profile: SliceProfile) -> np.ndarray:
    """Complex transverse magnetization per unit +z magnetization, per z."""
    r = profile.rotations
    return r[:, 0, 2] + 1j * r[:, 1, 2]


def longitudinal_response(profile: SliceProfile) -> np.ndarray:
    """Remaining +z fraction per unit +z magnetization, per z."""
    return profile.rotations[:, 2, 2]


def rotation_angle(rotations: np.ndarray) -> np.ndarray:
    """Rotation angle theta in [0, pi] from trace(R) = 1 + 2*cos(theta)."""
    rot = np.asarray(rotations)
    tr = np.trace(rot, axis1=-2, axis2=-1)
    return np.arccos(np.clip((tr - 1.0) / 2.0, -1.0, 1.0))


def relax_recover(m, dt: float, t1: float, t2: float, m0: float):
    """Free relaxation for ``dt``: transverse decays with T2, longitudinal
    recovers toward ``m0`` with T1."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if t1 <= 0 or t2 <= 0:
        raise ValueError("t1 and t2 must be positive")
    was_magvec = isinstance(m, MagVec)
    arr = m.as_array() if was_magvec else np.array(m, dtype=float)
    e2 = np.exp(-dt / t2)
    e1 = np.exp(-dt / t1)
    out = arr.copy()
    out[..., 0] *= e2
    out[..., 1] *= e2
    out[..., 2] = arr[..., 2] * e1 + m0 * (1.0 - e1)
    return MagVec.from_array(out) if was_magvec else out


def precess(mxy, dt: float, dw: float):
    """Transverse phase evolution: multiply by exp(+i*dw*dt)."""
    return np.asarray(mxy) * np.exp(1j * dw * dt)


def spoil(m):
    """Ideal spoiler: zero the transverse components, keep mz."""
    was_magvec = isinstance(m, MagVec)
    arr = m.as_array() if was_magvec else np.array(m, dtype=float)
    arr[..., 0] = 0.0
    arr[..., 1] = 0.0
    return MagVec.from_array(arr) if was_magvec else arr


def integrate_slice(values, z_samples) -> complex:
    """Uniform Riemann sum: each sample is the value of a cell of width equal
    to the grid spacing, so a constant c over n samples spaced h apart
    integrates to ``c * n * h``.  A single sample integrates with unit
    weight."""
    values = np.atleast_1d(np.asarray(values))
    z = np.atleast_1d(np.asarray(z_samples, dtype=float))
    if values.size != z.size:
        raise ValueError(
            f"length mismatch: {values.size} values, {z.size} z samples"
        )
    if z.size == 1:
        return values.sum()
    h = (z[-1] - z[0]) / (z.size - 1)
    return values.sum() * h

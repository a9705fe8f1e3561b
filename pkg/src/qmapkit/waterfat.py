"""Water/fat separation, T2* pair, and off-resonance from the five FID
acquisitions.

Signal model per acquisition time t (seconds after saturation):

    i(t) = exp(i*d_omega0*t) * (w * exp(-t/t2s_water)
                                + f * exp(i*omega_cs*t - t/t2s_fat))

with complex species amplitudes (w, f).  For fixed (t2s_water, t2s_fat,
d_omega0) the amplitudes solve a two-column complex linear least-squares
problem; the three nonlinear parameters are found by exhaustive search over
log-spaced T2* axes and an off-resonance axis centered on a phase-difference
initializer and bounded by a search half-width.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import fitcore
from .constants import GAMMA, OMEGA_CS


@dataclass(frozen=True)
class WfConfig:
    """Grid and model constants for the water/fat search."""

    times: tuple                      # five acquisition times, s
    omega_cs: float = OMEGA_CS        # chemical shift, rad/s
    t2s_min: float = 0.003
    t2s_max: float = 0.150
    t2s_points: int = 40
    d_omega_step: float = 2.0 * np.pi * 1.0
    omega_bound: float = 2.0 * np.pi * 60.0

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if len(times) != 5 or list(times) != sorted(times) or times[0] <= 0:
            raise ValueError("times must be five increasing positive values")
        if self.t2s_min <= 0 or self.t2s_max <= self.t2s_min:
            raise ValueError("need 0 < t2s_min < t2s_max")
        if self.t2s_points < 2:
            raise ValueError("t2s_points must be at least 2")
        if self.d_omega_step <= 0:
            raise ValueError("d_omega_step must be positive")
        if self.omega_bound < self.d_omega_step:
            raise ValueError("omega_bound smaller than one grid step")
        object.__setattr__(self, "times", times)

    def t2s_axis(self) -> np.ndarray:
        return np.geomspace(self.t2s_min, self.t2s_max, self.t2s_points)

    def offset_axis(self) -> np.ndarray:
        """Off-resonance offsets around the initializer, strictly inside
        +/- omega_bound."""
        n = int(np.ceil(self.omega_bound / self.d_omega_step)) - 1
        return self.d_omega_step * np.arange(-n, n + 1)


def init_offres(i1: complex, i3: complex, dt13: float) -> float:
    """Off-resonance initializer from the phase advance between the first
    and third acquisitions: angle(i3 * conj(i1)) / dt13.

    Sign convention: a signal obeying the forward model with positive
    d_omega0 and no fat yields a positive output.
    """
    if dt13 <= 0:
        raise ValueError("dt13 must be positive")
    return float(np.angle(i3 * np.conj(i1)) / dt13)


def wf_design(times, t2s_water: float, t2s_fat: float, d_omega0: float,
              omega_cs: float = OMEGA_CS) -> np.ndarray:
    """Five-row, two-column complex design matrix at a candidate triple."""
    t = np.asarray(times, dtype=float)
    phase = np.exp(1j * d_omega0 * t)
    col_w = phase * np.exp(-t / t2s_water)
    col_f = phase * np.exp((1j * omega_cs - 1.0 / t2s_fat) * t)
    return np.stack([col_w, col_f], axis=1)


class WfSolve(NamedTuple):
    w: complex
    f: complex
    residual: float
    rank_deficient: bool


def wf_design_solve(data, times, t2s_water: float, t2s_fat: float,
                    d_omega0: float, omega_cs: float = OMEGA_CS) -> WfSolve:
    """Solve the per-candidate linear subproblem for the amplitudes."""
    b = np.asarray(data, dtype=complex)
    a = wf_design(times, t2s_water, t2s_fat, d_omega0, omega_cs)
    x, resid, rank, flagged = fitcore.lsq_solve(a, b)
    return WfSolve(complex(x[0]), complex(x[1]), resid, flagged)


class WfEstimate(NamedTuple):
    w: complex
    f: complex
    t2s_water: float
    t2s_fat: float
    d_omega0: float
    fat_fraction: float
    residual: float
    valid: bool


def delta_b0(d_omega0, gamma: float = GAMMA):
    """Field offset in tesla for an off-resonance in rad/s."""
    return np.asarray(d_omega0, dtype=float) / gamma


@lru_cache(maxsize=8)
def _pair_decomposition(cfg: WfConfig):
    """Orthonormal bases Q for every (t2s_water, t2s_fat) pair, plus the
    phase-offset matrix for the off-resonance axis.

    The d_omega0 phase is unitary and common to both columns, so the design
    at (tw, tf, dw) is exp(i*dw*t) * B(tw, tf): the residual against data b
    equals the residual of B against exp(-i*dw*t) * b.  One QR per T2* pair
    serves every off-resonance candidate.
    """
    t = np.asarray(cfg.times)
    axis = cfg.t2s_axis()
    npair = axis.size * axis.size
    qs = np.empty((npair, 5, 2), dtype=complex)
    idx = 0
    for tw in axis:
        for tf in axis:
            b = wf_design(t, tw, tf, 0.0, cfg.omega_cs)
            q, _ = np.linalg.qr(b)
            qs[idx] = q
            idx += 1
    offsets = cfg.offset_axis()
    demod = np.exp(-1j * np.outer(offsets, t))  # (n_off, 5)
    return qs, offsets, demod


def fit_waterfat(data, cfg: WfConfig) -> WfEstimate:
    """Exhaustive-search water/fat fit for one pixel.

    Ties in the residual are broken toward the first candidate in
    (t2s_water, t2s_fat, d_omega0) axis order.  All-zero data is flagged
    invalid.
    """
    b = np.asarray(data, dtype=complex)
    if b.shape != (5,):
        raise ValueError("data must hold the five FID acquisitions")
    if not np.any(b != 0):
        return WfEstimate(0j, 0j, 0.0, 0.0, 0.0, 0.0, 0.0, valid=False)
    t = np.asarray(cfg.times)
    init = init_offres(b[0], b[2], t[2] - t[0])
    qs, offsets, demod = _pair_decomposition(cfg)
    # Demodulate by the initializer once, then by each grid offset.
    b_init = b * np.exp(-1j * init * t)
    bp = demod * b_init[np.newaxis, :]                      # (n_off, 5)
    proj = np.einsum("pmr,jm->pjr", qs.conj(), bp, optimize=False)
    norm_b = float(np.real(np.vdot(b, b)))
    scores = norm_b - np.sum(np.abs(proj) ** 2, axis=2)     # (n_pair, n_off)
    flat = int(np.argmin(scores))
    n_off = offsets.size
    pair_idx, off_idx = divmod(flat, n_off)
    axis = cfg.t2s_axis()
    tw = float(axis[pair_idx // axis.size])
    tf = float(axis[pair_idx % axis.size])
    dw = float(init + offsets[off_idx])
    sol = wf_design_solve(b, t, tw, tf, dw, cfg.omega_cs)
    wmag, fmag = abs(sol.w), abs(sol.f)
    total = wmag + fmag
    ff = fmag / total if total > 0 else 0.0
    return WfEstimate(sol.w, sol.f, tw, tf, dw, ff, sol.residual, valid=True)


def fit_waterfat_grid_minimize(data, cfg: WfConfig) -> WfEstimate:
    """Reference path through :func:`fitcore.grid_minimize` (scalar cost).

    Slow; used to cross-check the production path on sampled pixels.
    """
    b = np.asarray(data, dtype=complex)
    if not np.any(b != 0):
        return WfEstimate(0j, 0j, 0.0, 0.0, 0.0, 0.0, 0.0, valid=False)
    t = np.asarray(cfg.times)
    init = init_offres(b[0], b[2], t[2] - t[0])
    axis = cfg.t2s_axis()
    spec = fitcore.GridSpec((axis, axis, init + cfg.offset_axis()))

    def cost(point):
        tw, tf, dw = point
        return wf_design_solve(b, t, tw, tf, dw, cfg.omega_cs).residual

    best = fitcore.grid_minimize(spec, cost)
    tw, tf, dw = best.point
    sol = wf_design_solve(b, t, tw, tf, dw, cfg.omega_cs)
    wmag, fmag = abs(sol.w), abs(sol.f)
    total = wmag + fmag
    ff = fmag / total if total > 0 else 0.0
    return WfEstimate(sol.w, sol.f, tw, tf, dw, ff, sol.residual, valid=True)


def echo_time_scale(w, f, t2s_water: float, t2s_fat: float, echo_time: float,
                    omega_cs: float = OMEGA_CS) -> float:
    """Magnitude of the two-species decay/interference kernel at a short
    echo time, normalized to 1 at echo_time = 0.

    Multiplies any signal read out ``echo_time`` after a pulse that tips
    recovered longitudinal magnetization with water fraction |w| and fat
    fraction |f|.  Freshly tipped species start phase-aligned (longitudinal
    storage keeps no transverse phase), so only the magnitudes enter.
    """
    wmag, fmag = abs(w), abs(f)
    total = wmag + fmag
    if total == 0:
        return 1.0
    mix = (wmag * np.exp(-echo_time / t2s_water)
           + fmag * np.exp(1j * omega_cs * echo_time - echo_time / t2s_fat))
    return float(abs(mix) / total)

import numpy as np
import numpy.testing as npt
import pytest

from qmapkit import waterfat
from qmapkit.constants import GAMMA, OMEGA_CS

TIMES = (0.002, 0.004, 0.006, 0.008, 0.010)

# Small search grid keeps the reference path affordable.
TINY = waterfat.WfConfig(
    times=TIMES, t2s_min=0.010, t2s_max=0.100, t2s_points=5,
    d_omega_step=2.0 * np.pi * 4.0, omega_bound=2.0 * np.pi * 20.0)


def test_config_validation():
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=(0.002, 0.004, 0.006, 0.008))
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=(0.004, 0.002, 0.006, 0.008, 0.010))
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=TIMES, t2s_min=0.0)
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=TIMES, t2s_min=0.05, t2s_max=0.02)
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=TIMES, t2s_points=1)
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=TIMES, d_omega_step=0.0)
    with pytest.raises(ValueError):
        waterfat.WfConfig(times=TIMES, omega_bound=0.5)


def test_axes():
    cfg = waterfat.WfConfig(times=TIMES)
    t2s = cfg.t2s_axis()
    assert t2s.size == 40
    assert t2s[0] == pytest.approx(0.003) and t2s[-1] == pytest.approx(0.150)
    assert np.all(np.diff(np.log(t2s)) > 0)

    off = cfg.offset_axis()
    # Default half-width of 60 steps: symmetric, strictly inside the bound.
    assert off.size == 119
    npt.assert_allclose(off, -off[::-1])
    assert off.max() == pytest.approx(2.0 * np.pi * 59.0)
    assert off.max() < cfg.omega_bound
    assert 0.0 in off


def test_design_matrix_columns():
    tw, tf, dw = 0.04, 0.02, 30.0
    a = waterfat.wf_design(TIMES, tw, tf, dw)
    assert a.shape == (5, 2)
    for i, t in enumerate(TIMES):
        carrier = np.exp(1j * dw * t)
        assert a[i, 0] == pytest.approx(carrier * np.exp(-t / tw))
        assert a[i, 1] == pytest.approx(
            carrier * np.exp((1j * OMEGA_CS - 1.0 / tf) * t))


def test_design_solve_exact_and_orthogonal():
    tw, tf, dw = 0.05, 0.025, -40.0
    w, f = 0.7 * np.exp(0.3j), 0.3 * np.exp(-1.1j)
    a = waterfat.wf_design(TIMES, tw, tf, dw)
    clean = a @ np.array([w, f])
    sol = waterfat.wf_design_solve(clean, TIMES, tw, tf, dw)
    assert sol.w == pytest.approx(w, rel=1e-10)
    assert sol.f == pytest.approx(f, rel=1e-10)
    assert sol.residual == pytest.approx(0.0, abs=1e-12)
    assert not sol.rank_deficient

    rng = np.random.default_rng(7)
    noisy = clean + 0.05 * (rng.standard_normal(5)
                            + 1j * rng.standard_normal(5))
    sol = waterfat.wf_design_solve(noisy, TIMES, tw, tf, dw)
    resid_vec = noisy - a @ np.array([sol.w, sol.f])
    assert np.linalg.norm(a.conj().T @ resid_vec) < 1e-9 * np.linalg.norm(noisy)


def test_init_offres_sign_and_validation():
    dw = 50.0
    t = np.asarray(TIMES)
    sig = np.exp(1j * dw * t) * np.exp(-t / 0.04)
    assert waterfat.init_offres(sig[0], sig[2], t[2] - t[0]) == pytest.approx(dw)
    assert waterfat.init_offres(
        np.conj(sig[0]), np.conj(sig[2]), t[2] - t[0]) == pytest.approx(-dw)
    with pytest.raises(ValueError):
        waterfat.init_offres(1.0 + 0j, 1.0 + 0j, 0.0)


def test_water_only_recovery_at_grid_node():
    axis = TINY.t2s_axis()
    tw = float(axis[2])
    dw = 2.0 * np.pi * 12.0
    w = 1.3 * np.exp(0.4j)
    t = np.asarray(TIMES)
    data = w * np.exp(1j * dw * t) * np.exp(-t / tw)
    est = waterfat.fit_waterfat(data, TINY)
    assert est.valid
    assert est.t2s_water == tw
    assert est.fat_fraction == pytest.approx(0.0, abs=1e-6)
    assert est.d_omega0 == pytest.approx(dw, abs=1e-8)
    assert est.w == pytest.approx(w, rel=1e-8)


def test_fast_path_matches_reference():
    rng = np.random.default_rng(11)
    for _ in range(5):
        data = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        fast = waterfat.fit_waterfat(data, TINY)
        slow = waterfat.fit_waterfat_grid_minimize(data, TINY)
        assert fast.t2s_water == slow.t2s_water
        assert fast.t2s_fat == slow.t2s_fat
        assert fast.d_omega0 == pytest.approx(slow.d_omega0, abs=1e-12)
        npt.assert_allclose([fast.w, fast.f], [slow.w, slow.f], rtol=1e-9)


def test_zero_data_and_shape():
    est = waterfat.fit_waterfat(np.zeros(5, dtype=complex), TINY)
    assert not est.valid
    est = waterfat.fit_waterfat_grid_minimize(np.zeros(5, dtype=complex), TINY)
    assert not est.valid
    with pytest.raises(ValueError):
        waterfat.fit_waterfat(np.zeros(4, dtype=complex), TINY)


def test_delta_b0():
    assert waterfat.delta_b0(GAMMA) == pytest.approx(1.0)
    npt.assert_allclose(waterfat.delta_b0(np.array([0.0, 2.0 * GAMMA])),
                        [0.0, 2.0])


def test_echo_time_scale():
    assert waterfat.echo_time_scale(0.0, 0.0, 0.04, 0.02, 0.002) == 1.0
    # Water only: plain exponential decay, phases ignored.
    assert waterfat.echo_time_scale(
        2.0 * np.exp(1.2j), 0.0, 0.04, 0.02, 0.002) == pytest.approx(
            np.exp(-0.002 / 0.04))
    w, f, te = 0.6, 0.4, 0.0023
    mix = (w * np.exp(-te / 0.045)
           + f * np.exp(1j * OMEGA_CS * te - te / 0.025))
    assert waterfat.echo_time_scale(w, f, 0.045, 0.025, te) == pytest.approx(
        abs(mix) / (w + f))

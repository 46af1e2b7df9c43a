"""Scan orchestration: minimum location, power-law fits, omega_r search."""

import math
import warnings

import numpy as np
import pytest

from dicke_squeeze import dynamics
from dicke_squeeze.errors import ConfigError, DomainError
from dicke_squeeze.experiments import (
    ScanConfig,
    fit_power_law,
    locate_minimum,
    optimize_omega_r,
    optimize_scan,
    scan_N_fit,
    scan_time,
    scan_time_csv,
)
from dicke_squeeze.hamiltonian import build_spin_hamiltonian
from dicke_squeeze.metrics import find_minimum
from dicke_squeeze.params import RawParams, Scheme, derive_chain

WB = 2.0 * math.pi * 1.0e9
G1K = 2.0 * math.pi * 1.0e3
WR_REF = 2.0 * math.pi * 8.0e5


def unitary_raw(scheme=Scheme.TAT_YZ, N=30):
    return RawParams(omega_b=WB, g=G1K, omega_r=WR_REF,
                     scheme_override=scheme, N=N)


def dissipative_raw(scheme=Scheme.TAT_YZ, N=8, omega_r=WR_REF, n_th=1.0):
    return RawParams(omega_b=WB, g=G1K, Q_m=1.0e6, T2=0.01, n_th=n_th,
                     omega_r=omega_r, scheme_override=scheme, N=N)


# --------------------------------------------------------------------------
# Power-law fit
# --------------------------------------------------------------------------


def test_fit_recovers_synthetic_power_law():
    N = np.array([20, 30, 50, 80, 120, 200], dtype=float)
    y = 2.3 * N ** (-0.71)
    fit = fit_power_law(N, y, fit_const=False)
    assert fit.a == pytest.approx(2.3, rel=1e-8)
    assert fit.b == pytest.approx(-0.71, rel=1e-8)
    assert fit.const == 0.0
    assert fit.N_range == (20.0, 200.0)
    assert np.abs(fit.model(N) - y).max() < 1e-10


def test_fit_recovers_constant_offset():
    N = np.array([20, 33, 55, 90, 148, 200], dtype=float)
    y = 1.7 * N ** (-0.9) + 0.31
    fit = fit_power_law(N, y, fit_const=True)
    assert fit.a == pytest.approx(1.7, rel=1e-6)
    assert fit.b == pytest.approx(-0.9, rel=1e-6)
    assert fit.const == pytest.approx(0.31, rel=1e-6)


def test_fit_log_space_variant():
    N = np.array([10, 20, 40, 80, 160], dtype=float)
    y = 0.8 * N ** (-2.0 / 3.0)
    fit = fit_power_law(N, y, fit_const=False, log_space=True)
    assert fit.log_space
    assert fit.b == pytest.approx(-2.0 / 3.0, rel=1e-10)


def test_fit_validation():
    with pytest.raises(ConfigError):
        fit_power_law([10, 20, 30, 40], [1, 1, 1, 1])  # too few points
    with pytest.raises(DomainError):
        fit_power_law([10, 20, 30, 40, 50], [1.0, 0.5, 0.3, -0.1, 0.2])


# --------------------------------------------------------------------------
# Minimum location
# --------------------------------------------------------------------------


def test_locate_minimum_matches_dense_unitary_reference():
    raw = unitary_raw(Scheme.OAT, N=40)
    res = locate_minimum(raw, 40, solver="exact")
    p = derive_chain(raw)
    h = build_spin_hamiltonian(20.0, p)
    from dicke_squeeze.dicke import css_state

    t = np.linspace(0.0, 2.0 * res.t_min, 4001)
    ref = dynamics.evolve_unitary(h, css_state(20.0, math.pi / 2.0, 0.0), t)
    dense = find_minimum(ref.t, ref.xi2)
    assert res.t_min == pytest.approx(dense.t_min, rel=1e-4)
    assert res.xi2_min == pytest.approx(dense.y_min, rel=1e-6)
    assert not res.on_boundary


def test_locate_minimum_matches_dense_dissipative_reference():
    raw = dissipative_raw(N=8, omega_r=2.0 * math.pi * 8.0e4)
    res = locate_minimum(raw, 8)
    p = derive_chain(raw)
    L = dynamics.build_liouvillian(8, p)
    t = np.linspace(0.0, 2.0 * res.t_min, 1500)
    traj = dynamics.evolve(dynamics.BlockDensityMatrix.from_css(8), L, t,
                           rtol=1e-9, atol=1e-12)
    dense = find_minimum(traj.t, traj.xi2)
    assert res.t_min == pytest.approx(dense.t_min, rel=5e-3)
    assert res.xi2_min == pytest.approx(dense.y_min, rel=5e-4)


def test_locate_minimum_grid_density_stable():
    raw = dissipative_raw(N=8, omega_r=2.0 * math.pi * 8.0e4)
    a = locate_minimum(raw, 8, n_points=240)
    b = locate_minimum(raw, 8, n_points=900)
    assert a.t_min == pytest.approx(b.t_min, rel=2e-3)
    assert a.xi2_min == pytest.approx(b.xi2_min, rel=2e-4)


def test_locate_minimum_frozen_regression():
    # mid-size two-axis point on the fixed reference resonator
    res = locate_minimum(dissipative_raw(N=28), 28)
    assert res.t_min == pytest.approx(1.5216e-3, rel=1e-2)
    assert res.xi2_min == pytest.approx(0.92701, rel=1e-3)


def test_locate_minimum_reports_boundary_when_nothing_squeezes():
    # the fixed 800 kHz reference cannot squeeze a 10-spin ensemble: the
    # landscape rises from t=0 and the minimum pins to the boundary
    with pytest.warns(Warning):
        res = locate_minimum(dissipative_raw(N=10), 10)
    assert res.on_boundary
    assert res.t_min == 0.0
    assert res.xi2_min == pytest.approx(1.0, abs=1e-9)


# --------------------------------------------------------------------------
# Time scans
# --------------------------------------------------------------------------


def test_scan_time_four_scheme_ordering(tmp_path):
    raw = unitary_raw(N=24)
    t = tuple(np.linspace(0.0, 3.5e-2, 160))
    cfg = ScanConfig(raw=raw, axis="t", grid=t,
                     schemes=(Scheme.OAT, Scheme.TAT_YZ, -0.05, -2.0),
                     solver="exact")
    out = scan_time(cfg)
    assert set(out) == {"OAT", "TAT_yz", "Gamma=-0.05wb", "Gamma=-2wb"}
    minima = {k: v.xi2.min() for k, v in out.items()}
    # the symmetric two-axis weight squeezes deepest; pure one-axis
    # shallowest; intermediate twisting weights land in between
    assert minima["TAT_yz"] < minima["Gamma=-2wb"] < minima["OAT"]
    assert minima["TAT_yz"] < minima["Gamma=-0.05wb"] < minima["OAT"]

    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    scan_time_csv(out, p1)
    scan_time_csv(scan_time(cfg), p2)
    assert p1.read_bytes() == p2.read_bytes()  # bit-identical reruns
    header = p1.read_text().splitlines()[0]
    assert header.split(",")[0] == "t" and "xi2_TAT_yz" in header


def test_scan_time_thermal_labels():
    raw = dissipative_raw(N=4, omega_r=2.0 * math.pi * 8.0e4)
    cfg = ScanConfig(raw=raw, axis="t", grid=tuple(np.linspace(0, 5e-4, 12)),
                     schemes=(Scheme.TAT_YZ,), n_bars=(1.0, 10.0))
    out = scan_time(cfg)
    assert set(out) == {"TAT_yz,n=1", "TAT_yz,n=10"}
    # hotter bath squeezes less at every reported time after t=0
    assert np.all(out["TAT_yz,n=10"].xi2[1:] >= out["TAT_yz,n=1"].xi2[1:] - 1e-12)


def test_scan_time_csv_rejects_mixed_grids(tmp_path):
    raw = unitary_raw(N=6)
    g1 = tuple(np.linspace(0, 1e-3, 10))
    g2 = tuple(np.linspace(0, 2e-3, 10))
    a = scan_time(ScanConfig(raw=raw, axis="t", grid=g1,
                             schemes=(Scheme.OAT,), solver="exact"))
    b = scan_time(ScanConfig(raw=raw, axis="t", grid=g2,
                             schemes=(Scheme.TAT_YZ,), solver="exact"))
    with pytest.raises(ConfigError):
        scan_time_csv({**a, **b}, tmp_path / "bad.csv")


def test_scan_config_validation():
    raw = unitary_raw()
    with pytest.raises(ConfigError):
        ScanConfig(raw=raw, axis="frequency", grid=(1.0,))
    with pytest.raises(ConfigError):
        ScanConfig(raw=raw, axis="t", grid=())
    with pytest.raises(ConfigError):
        ScanConfig(raw=raw, axis="omega_r", grid=(-1.0, 2.0))
    with pytest.raises(ConfigError):
        ScanConfig(raw=raw, axis="t", grid=(0.0, 1.0), solver="other")


# --------------------------------------------------------------------------
# N-scaling fits and omega_r optimization
# --------------------------------------------------------------------------


def test_scan_N_fit_ideal_one_axis_exponent():
    raw = unitary_raw(Scheme.OAT)
    cfg = ScanConfig(raw=raw, axis="N", grid=(20, 28, 40, 56, 80),
                     schemes=(Scheme.OAT,), solver="exact", fit_const=False)
    fit = scan_N_fit(cfg)
    assert fit.b == pytest.approx(-2.0 / 3.0, abs=0.06)
    assert len(fit.N_values) == 5
    assert all(t > 0 for t in fit.t_values)


def test_scan_N_fit_needs_enough_points():
    raw = unitary_raw()
    cfg = ScanConfig(raw=raw, axis="N", grid=(20, 30, 40),
                     schemes=(Scheme.OAT,), solver="exact")
    with pytest.raises(ConfigError):
        scan_N_fit(cfg)


def test_optimize_omega_r_flat_for_unitary_dynamics():
    # without dissipation xi2_min is independent of omega_r (pure time
    # rescaling), so the profile is flagged flat
    raw = unitary_raw(Scheme.TAT_YZ, N=12)
    cfg = ScanConfig(raw=raw, axis="omega_r",
                     grid=(2.0 * math.pi * 1.0e5, 2.0 * math.pi * 1.0e6),
                     schemes=(Scheme.TAT_YZ,), solver="exact")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        opt = optimize_omega_r(cfg, 12)
    assert opt.flat_profile
    assert cfg.grid[0] <= opt.omega_r_opt <= cfg.grid[-1]


def test_optimize_omega_r_beats_fixed_reference():
    cfg = ScanConfig(raw=dissipative_raw(N=10), axis="omega_r",
                     grid=(2.0 * math.pi * 1.0e4, 2.0 * math.pi * 1.0e6),
                     schemes=(Scheme.TAT_YZ,))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        opt = optimize_omega_r(cfg, 10)
        ref = locate_minimum(dissipative_raw(N=10, omega_r=2.0 * math.pi * 8.0e4), 10)
    assert not opt.flat_profile
    # the optimum is at least as deep as any fixed resonator in the bracket
    assert opt.xi2_opt <= ref.xi2_min + 1e-9
    assert opt.t_opt > 0.0
    assert opt.n_evaluations >= 5
    # golden-section refinement should at least match the coarse pre-grid
    assert opt.xi2_opt <= min(opt.pre_grid_xi2) + 1e-12


def test_optimize_scan_validation():
    raw = dissipative_raw()
    with pytest.raises(ConfigError):
        optimize_scan(ScanConfig(raw=raw, axis="N", grid=(1.0,),
                                 schemes=(Scheme.TAT_YZ,)))
    with pytest.raises(ConfigError):
        optimize_scan(ScanConfig(raw=raw, axis="omega_r", grid=(1.0, 2.0),
                                 schemes=(Scheme.TAT_YZ,),
                                 N_grid=(10, 20, 30)))

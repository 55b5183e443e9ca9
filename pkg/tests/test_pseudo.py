import math

import numpy as np
import pytest

import sqglab.lab as lab
import sqglab.norms as nm
import sqglab.profiles as pf
import sqglab.pseudo as PS
import sqglab.spectral as sp


@pytest.fixture(scope="module")
def ps_small(pair_near):
    return PS.make_pseudo_ck(pair=pair_near, lam=0.5, K=2, N=16)


def test_wtable_contract(ps_small):
    assert ps_small.w.interp_error < 1e-6
    assert ps_small.w.source == "quadrature"


def test_wtable_grid_vs_quadrature(pair_near):
    grid = pf.ck_grid(16, 1, box=12.0)
    shell = pf.rd.shift_to_unit(pair_near.f2, 4.0)
    pad = 0.25 * (shell.support[1] - shell.support[0])
    lo, hi = shell.support[0] - pad, shell.support[1] + pad
    wq = PS.build_wtable(pair_near.f1, lo, hi)
    wg = PS.build_wtable_grid(pair_near.f1, grid, lo, hi)
    rr = np.linspace(lo, hi, 64)
    dev = np.max(np.abs(wq(rr) - wg(rr))) / np.max(np.abs(wq(rr)))
    assert dev < 0.01


def test_t0_bit_reproduces_builder(ps_small, pair_near):
    built = pf.build_ck_initial(pair_near, 0.5, 2, 16, grid=ps_small.grid)
    mine = ps_small.values(0.0)
    assert np.max(np.abs(built.values - mine)) < 1e-14 * np.max(np.abs(mine))


def test_radial_part_is_stationary(pair_near):
    ps = PS.make_pseudo_ck(pair=pair_near, lam=0.5, K=0, N=16)
    r, _ = ps.grid.polar()
    for t in (0.0, 1.0):
        assert np.array_equal(ps.values(t), 0.5 * pair_near.f1(r))
    F = PS.residual_source(ps, 0.5)
    grad_scale = np.max(np.abs(pair_near.f1.deriv(
        np.linspace(0.6, 1.4, 401), 1)))
    assert F.linf() < 1e-6 * grad_scale


def test_transport_identity_machine_zero(ps_small):
    resid = PS.transport_model_residual(ps_small, 0.7)
    assert resid < 1e-12 * ps_small.at(0.7).linf()


def test_dt_fd_matches_analytic(ps_small):
    delta = 1e-4
    t = 0.5
    fd = (ps_small.values(t + delta) - ps_small.values(t - delta)) / (2 * delta)
    an = ps_small.dt_values(t)
    scale = np.max(np.abs(an)) or 1.0
    assert np.max(np.abs(fd - an)) < 1e-6 * scale


def test_residual_modes_agree(ps_small):
    Fh = PS.residual_source(ps_small, 0.5, mode="hybrid")
    Fs = PS.residual_source(ps_small, 0.5, mode="spectral")
    assert abs(Fh.l2() - Fs.l2()) < 0.25 * Fh.l2()


def test_decomposition_matches_full(ps_small):
    F = PS.residual_source(ps_small, 0.5)
    d = PS.decomposed_source(ps_small, 0.5)
    assert abs(d["assembled"].l2() - F.l2()) < 0.15 * F.l2()
    assert d["T1"] > 0 and d["T2"] > 0 and d["T3"] > 0


def test_source_scan_time_continuity(ps_small):
    scan = PS.source_scan(ps_small, [0.25, 0.5, 0.75])
    for series in (scan.l2_norms, scan.h_high_norms, scan.h_interp_norms):
        for a, b in zip(series[:-1], series[1:]):
            assert 0.5 < b / a < 2.0
        assert all(np.isfinite(series))


def test_interpolation_consistency(ps_small):
    scan = PS.source_scan(ps_small, [0.5])
    bound = scan.l2_norms[0] ** 0.25 * scan.h_high_norms[0] ** 0.75
    assert scan.h_interp_norms[0] <= 1.05 * bound


def test_polar_derivatives_match_spectral(ps_small):
    # closed-form polar derivatives vs spectral grid derivatives
    t = 0.4
    fld = ps_small.at(t)
    g1 = sp.partial_derivative(fld, 1, 0).values
    r, alpha = ps_small.grid.polar()
    d = ps_small.polar(t, r, alpha, derivs=1)
    with np.errstate(invalid="ignore"):
        inv_r = np.where(r > 0, 1.0 / np.maximum(r, 1e-300), 0.0)
    g1_cf = np.cos(alpha) * d["dr"] - np.sin(alpha) * inv_r * d["da"]
    scale = np.max(np.abs(g1_cf))
    mask = r > 0.1
    assert np.max(np.abs((g1 - g1_cf)[mask])) < 5e-3 * scale


def test_ck_norm_closed_form_matches_grid(pair_near):
    ps = PS.make_pseudo_ck(pair=pair_near, lam=0.5, K=2, N=16)
    t = 0.5
    closed = PS.ck_norm_closed_form(ps, t)
    grid_norm = nm.ck_norm(ps.at(t), 2).value
    assert abs(closed - grid_norm) < 0.05 * grid_norm


def test_angular_certificate_lower_bound(ps_small, c0_value):
    # the aligned-phase certificate reaches the harmonic-sum level
    t = 0.5
    lam = ps_small.lam
    cr = abs(PS.kn.c0_radial(c0_value))
    H_K = sum(1.0 / k for k in range(1, ps_small.K + 1))
    predicted = lam * H_K * abs(math.sin(lam * cr * t))
    val = PS.ck_angular_certificate(ps_small, t)
    assert val >= 0.8 * predicted
    assert val <= 3.0 * lam * H_K


def test_localized_h2_growth_bound(ps_small, c0_value):
    # localized angular-H2 over the aligned set reaches the ln K bound
    t = 0.5
    lam, K, N = ps_small.lam, ps_small.K, ps_small.N
    cr = abs(PS.kn.c0_radial(c0_value))
    w1 = float(ps_small.w(np.array([1.0]))[0])
    base = lam * t * w1
    c_win = 1.0 / 16.0
    sets = [(j * 2 * np.pi / N + base - c_win * 2 * np.pi / (N * K),
             j * 2 * np.pi / N + base + c_win * 2 * np.pi / (N * K))
            for j in range(N)]
    root = math.sqrt(N)
    val = nm.localized_angular_h2(ps_small.at(t),
                                  (1 - 0.25 / root, 1 + 0.25 / root), sets)
    measure_A = 0.5 / root
    measure_B = N * 2 * c_win * 2 * np.pi / (N * K)
    H_K = sum(1.0 / k for k in range(1, K + 1))
    lower = (lam * H_K / 2.0 * abs(math.sin(lam * cr * t))
             * math.sqrt(measure_A * measure_B) * (1 - 3 / root))
    assert val >= 0.8 * lower


def test_hs_evaluator_growth(pair_near):
    triple = pf.build_hs_grid_family(1.8, stretch=3.0)
    ps = PS.make_pseudo_hs(triple, 64, grid=sp.Grid2D(64, 24.0))
    # H1 growth ~ t once the shear dominates: ratio ~ 2 per doubling
    n1 = PS.hs_growth_norm(ps, 1.0, s=1.0)
    n2 = PS.hs_growth_norm(ps, 2.0, s=1.0)
    assert abs(n2 / n1 - 2.0) < 0.2
    # H^beta exponent fit
    ts = [1.0, 1.5, 2.25, 3.0]
    ys = [PS.hs_growth_norm(ps, t) for t in ts]
    slope, _ = lab.fit_slope(ts, ys)
    assert abs(slope - 1.8) < 0.15


def test_hs_t0_reproduction():
    triple = pf.build_hs_grid_family(1.6, stretch=1.0)
    ps = PS.make_pseudo_hs(triple, 16)
    built = pf.build_hs_initial(triple, 16, grid=ps.grid)
    assert np.max(np.abs(ps.values(0.0) - built.values)) < 1e-13 * built.linf()

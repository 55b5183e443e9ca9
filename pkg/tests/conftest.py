import math
import os
import time

import numpy as np
import pytest

import sqglab.kernels as kn
import sqglab.profiles as pf
import sqglab.radial as rd
from sqglab.spectral import Grid2D, ScalarField


@pytest.fixture(scope="session")
def c0_value():
    c0, spread = kn.estimate_C0()
    return c0


@pytest.fixture(scope="session")
def pair_near():
    return pf.build_f1_ck("near")


@pytest.fixture(scope="session")
def pair_far():
    return pf.build_f1_ck("far")


@pytest.fixture(scope="session")
def small_grid():
    return Grid2D(128, 2.0 * np.pi)


def radial_field(grid, profile, min_wavelength=None):
    r, _ = grid.polar()
    return ScalarField(grid, profile(r), profile.support[1],
                       min_wavelength=min_wavelength or profile.width)


def shell_field(grid, profile, n, phase=0.0, min_wavelength=None):
    r, alpha = grid.polar()
    vals = profile(r) * np.sin(n * alpha + phase)
    wl = min_wavelength or min(profile.width,
                               2.0 * np.pi * profile.support[0] / max(n, 1))
    return ScalarField(grid, vals, profile.support[1], min_wavelength=wl)


def band_limited_random(grid, rng, k_lo=4.0, k_hi=12.0):
    """Random real field with spectrum supported in an annulus."""
    import sqglab.spectral as sp
    k1, k2 = grid.wavenumbers()
    kk = np.hypot(k1, k2)
    mask = (kk >= k_lo) & (kk <= k_hi)
    coef = (rng.normal(size=kk.shape) + 1j * rng.normal(size=kk.shape)) * mask
    vals = sp._irfft2(coef, (grid.n, grid.n))
    vals /= max(np.abs(vals).max(), 1e-300)
    return ScalarField(grid, vals, grid.box_length / 8.0,
                       min_wavelength=2.0 * np.pi / k_hi)


class AcceptanceReport:
    """Collects one line per acceptance criterion and prints the table."""

    def __init__(self):
        self.lines = []
        self.drifts = []

    def record(self, criterion, passed, detail, runtime=None):
        t = f" [{runtime:.0f}s]" if runtime is not None else ""
        self.lines.append((criterion, passed, f"{detail}{t}"))
        print(f"\nACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - "
              f"{detail}{t}", flush=True)

    def record_drift(self, tag, drift):
        self.drifts.append((tag, drift))


@pytest.fixture(scope="session")
def report():
    rep = AcceptanceReport()
    yield rep
    if rep.lines:
        print("\n" + "=" * 72)
        print("acceptance summary")
        for crit, ok, detail in sorted(rep.lines):
            print(f"  criterion {crit}: {'PASS' if ok else 'FAIL'} - {detail}")
        print("=" * 72)

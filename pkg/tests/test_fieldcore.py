import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from nvcoil.fieldcore import (
    LIGHTSPEED,
    LIGHTSPEED_ROUNDED,
    MU0,
    DomainError,
    DriveSpec,
    FieldSample,
    LoopTurn,
    SingularityError,
    elliptic_ke,
    loop_field,
    loop_field_arrays,
    on_axis_bz,
    phase_lag,
    rf_constants,
    source_current,
    superpose,
)
from nvcoil.geometry import CoilGeometry

import oracles


# elliptic integrals


def test_elliptic_at_zero():
    k, e = elliptic_ke(0.0)
    assert k == pytest.approx(math.pi / 2, rel=1e-15)
    assert e == pytest.approx(math.pi / 2, rel=1e-15)


def test_elliptic_at_half_frozen():
    k, e = elliptic_ke(0.5)
    assert k == pytest.approx(1.8540746773013719, rel=1e-12)
    assert e == pytest.approx(1.3506438810476755, rel=1e-12)


@pytest.mark.parametrize("m", [1.0, 1.5, -0.1, math.nan])
def test_elliptic_domain(m):
    with pytest.raises(DomainError):
        elliptic_ke(m)


def test_elliptic_matches_scipy_and_mpmath():
    import mpmath

    ms = np.concatenate([np.linspace(0, 0.99, 100), 1 - np.logspace(-2, -10, 9)])
    k, e = elliptic_ke(ms)
    np.testing.assert_allclose(k, scipy.special.ellipk(ms), rtol=1e-12)
    np.testing.assert_allclose(e, scipy.special.ellipe(ms), rtol=1e-12)
    for m in (0.3, 0.9, 0.999999):
        kk, ee = elliptic_ke(m)
        assert kk == pytest.approx(float(mpmath.ellipk(m)), rel=1e-13)
        assert ee == pytest.approx(float(mpmath.ellipe(m)), rel=1e-13)


@given(st.floats(0.0, 0.999999))
def test_elliptic_e_below_k(m):
    k, e = elliptic_ke(m)
    assert e <= k


# single loop


def test_loop_centre_field():
    s = loop_field(LoopTurn(1e-3), 0.0, 0.0)
    assert s.bz.real == pytest.approx(MU0 / 2e-3, rel=1e-14)
    assert s.br == 0
    assert s.magnitude == pytest.approx(6.2832e-4, rel=1e-4)


def test_loop_phase_pi_negates():
    s0 = loop_field(LoopTurn(1e-3), 0.4e-3, 0.3e-3)
    s1 = loop_field(LoopTurn(1e-3, phase=math.pi), 0.4e-3, 0.3e-3)
    assert s1.bz == pytest.approx(-s0.bz, rel=1e-14)
    assert s1.br == pytest.approx(-s0.br, rel=1e-14)


def test_loop_matches_segment_oracle_example():
    br, bz = oracles.segment_loop_field(1e-3, 0.0, 1.0, [[0.5e-3, 0.7e-3]])
    s = loop_field(LoopTurn(1e-3), 0.5e-3, 0.7e-3)
    mag = math.hypot(br[0], bz[0])
    assert abs(s.br.real - br[0]) <= 1e-6 * mag
    assert abs(s.bz.real - bz[0]) <= 1e-6 * mag


def test_on_axis_closed_form():
    turn = LoopTurn(1.3e-3, 0.2e-3, 0.8)
    z = np.linspace(-3e-3, 3e-3, 13)
    br, bz = loop_field_arrays(turn, 0.0, z)
    np.testing.assert_allclose(bz.real, oracles.on_axis_loop(1.3e-3, 0.2e-3, 0.8, z), rtol=1e-13)
    np.testing.assert_allclose(bz, on_axis_bz(turn, z), rtol=1e-13)
    assert np.all(br == 0)


def test_singularity_on_filament():
    with pytest.raises(SingularityError):
        loop_field(LoopTurn(1e-3, 0.5e-3), 1e-3, 0.5e-3)
    # just outside the guard distance is fine
    loop_field(LoopTurn(1e-3), 1e-3 + 1e-8, 0.0)


def test_negative_radius_point_rejected():
    with pytest.raises(DomainError):
        loop_field(LoopTurn(1e-3), -1e-4, 0.0)


@pytest.mark.parametrize(
    "kwargs", [dict(radius=0.0), dict(radius=-1e-3), dict(radius=1e-3, current=-1), dict(radius=1e-3, phase=math.inf)]
)
def test_loop_turn_invariants(kwargs):
    with pytest.raises(DomainError):
        LoopTurn(**kwargs)


def test_dipole_limit():
    a = 1e-3
    s = loop_field(LoopTurn(a), 0.0, 10 * a)
    dipole = MU0 * a * a / (2 * (10 * a) ** 3)
    assert abs(s.bz.real - dipole) / dipole < 0.015


points = st.tuples(st.floats(0.0, 4e-3), st.floats(-4e-3, 4e-3))


def _far_from(turn, r, z, d=0.2e-3):
    return math.hypot(r - turn.radius, z - turn.z_pos) > d


@settings(max_examples=50, deadline=None)
@given(st.floats(0.5e-3, 3e-3), st.floats(-1e-3, 1e-3), st.floats(0.2e-3, 3e-3), st.floats(-3e-3, 3e-3))
def test_mirror_symmetry(a, z0, r, d):
    turn = LoopTurn(a, z0, 1.0)
    if not _far_from(turn, r, z0 + d):
        return
    up = loop_field(turn, r, z0 + d)
    dn = loop_field(turn, r, z0 - d)
    scale = up.magnitude
    assert abs(up.bz - dn.bz) <= 1e-12 * scale
    assert abs(up.br + dn.br) <= 1e-12 * scale


@settings(max_examples=30, deadline=None)
@given(points, st.floats(1e-3, 1e3))
def test_linearity_in_current(pt, k):
    g = CoilGeometry("x", [LoopTurn(1.5e-3, 0.75e-3, 0.6, 0.3), LoopTurn(2e-3, -0.5e-3, 0.2, 1.1)])
    r, z = pt
    if not all(_far_from(t, r, z, 1e-6) for t in g.turns):
        return
    s1 = superpose(g, r, z)
    s2 = superpose(g.scaled(k), r, z)
    assert s2.magnitude == pytest.approx(k * s1.magnitude, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(points)
def test_magnitude_and_axis_invariants(pt):
    g = CoilGeometry("x", [LoopTurn(1.5e-3, 0.75e-3, 0.6, 0.3), LoopTurn(2e-3, -0.5e-3, 0.2, 1.1)])
    r, z = pt
    if not all(_far_from(t, r, z, 1e-6) for t in g.turns):
        return
    s = superpose(g, r, z)
    assert s.magnitude == pytest.approx(math.sqrt(abs(s.br) ** 2 + abs(s.bz) ** 2), rel=1e-12)
    on_axis = superpose(g, 0.0, z)
    assert abs(on_axis.br) < 1e-15 * on_axis.magnitude


def _divergence(g, r, z, h):
    def br(rr, zz):
        return superpose(g, rr, zz).br.real

    def bz(rr, zz):
        return superpose(g, rr, zz).bz.real

    d_rbr = ((r + h) * br(r + h, z) - (r - h) * br(r - h, z)) / (2 * h) / r
    d_bz = (bz(r, z + h) - bz(r, z - h)) / (2 * h)
    return d_rbr + d_bz


def test_divergence_free_and_quadratic_shrink():
    g = CoilGeometry("x", [LoopTurn(1.5e-3, 0.75e-3, 0.6), LoopTurn(1.8e-3, -0.4e-3, 0.3, 0.5)])
    rng = np.random.default_rng(7)
    for _ in range(5):
        r, z = rng.uniform(0.3e-3, 1.2e-3), rng.uniform(-1.5e-3, 1.5e-3)
        mag = superpose(g, r, z).magnitude
        d1 = abs(_divergence(g, r, z, 1e-6))
        # central differences of a divergence-free field: O(h^2) truncation plus rounding
        assert d1 <= 1e-4 * mag / 1e-6
        d_coarse = abs(_divergence(g, r, z, 4e-5))
        d_fine = abs(_divergence(g, r, z, 2e-5))
        assert d_fine < 0.3 * d_coarse


def test_superpose_empty_and_coincident():
    assert superpose(CoilGeometry("empty", []), 1e-3, 0.0).magnitude == 0
    t = LoopTurn(1.5e-3, 0.2e-3, 0.7, 0.4)
    one = superpose(CoilGeometry("1", [t]), 0.6e-3, -0.3e-3)
    two = superpose(CoilGeometry("2", [t, t]), 0.6e-3, -0.3e-3)
    assert two.br == 2 * one.br and two.bz == 2 * one.bz


def test_helmholtz_centre_field():
    i = source_current(10, 50)
    g = CoilGeometry("h", [LoopTurn(1.5e-3, 0.75e-3, i), LoopTurn(1.5e-3, -0.75e-3, i)])
    expected = 2 * oracles.on_axis_loop(1.5e-3, 0.75e-3, i, 0.0)
    assert superpose(g, 0, 0).magnitude == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(3.79e-4, rel=2e-3)


def test_field_sample_magnitude():
    assert FieldSample(0, 0, 3j, 4).magnitude == 5


# RF bookkeeping


def test_source_current():
    assert source_current(10, 50) == pytest.approx(0.6325, abs=1e-4)
    assert source_current(0, 50) == 0
    assert source_current(50, 100) == pytest.approx(1.0, rel=1e-15)
    with pytest.raises(DomainError):
        source_current(1, 0)
    with pytest.raises(DomainError):
        source_current(-1, 50)


def test_phase_lag():
    assert phase_lag(0, 0.1) == 0
    lam = 0.1
    assert phase_lag(lam / (2 * math.pi), lam) == pytest.approx(2 * math.pi, rel=1e-15)
    assert phase_lag(1.5e-3, 104.53e-3) == pytest.approx(0.5665, abs=1e-4)
    with pytest.raises(DomainError):
        phase_lag(1e-3, 0)


def test_rf_constants():
    q, tau, lam = rf_constants(2.87e9, 20e6, LIGHTSPEED_ROUNDED)
    assert q == 143.5
    assert tau * 1e9 == pytest.approx(15.9, abs=0.1)
    assert lam * 1e3 == pytest.approx(104.53, abs=5e-3)
    assert rf_constants(2.87e9, 20e6, LIGHTSPEED)[2] * 1e3 == pytest.approx(104.46, abs=5e-3)
    for bad in [(0, 1, 1), (1, 0, 1), (1, 1, -1)]:
        with pytest.raises(DomainError):
            rf_constants(*bad)


def test_drive_spec():
    d = DriveSpec()
    assert d.wavelength == pytest.approx(LIGHTSPEED / 2.87e9)
    assert d.current == pytest.approx(0.63245553, rel=1e-8)
    with pytest.raises(DomainError):
        DriveSpec(impedance=0)

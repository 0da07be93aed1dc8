import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvcoil.fieldcore import DomainError, field_magnitude
from nvcoil.geometry import CATALOG_IDS, build_catalog
from nvcoil.homogeneity import (
    IcdSpec,
    homogeneity_profile,
    icd_samples,
    icd_sigma,
    report_csv,
    report_text,
    sigma_pp,
    table_report,
)
from nvcoil.optimizer import calibrate_barrel

positive = st.floats(1e-6, 1e3)


def test_sigma_pp_examples():
    assert sigma_pp([2.0, 2.0, 2.0]) == 0
    assert sigma_pp([0.99, 1.00, 1.01]) == pytest.approx(2.0, rel=1e-12)
    assert sigma_pp([3.7]) == 0


@pytest.mark.parametrize("bad", [[], [1.0, 0.0], [1.0, -2.0]])
def test_sigma_pp_errors(bad):
    with pytest.raises(DomainError):
        sigma_pp(bad)


@given(st.lists(positive, min_size=1, max_size=30), st.floats(1e-3, 1e3))
def test_sigma_pp_scale_invariant(values, k):
    assert sigma_pp(np.array(values) * k) == pytest.approx(sigma_pp(values), rel=1e-9, abs=1e-12)


@given(st.lists(positive, min_size=1, max_size=20), st.lists(positive, max_size=20))
def test_sigma_pp_monotone_in_sample_set(subset, extra):
    assert sigma_pp(subset) <= sigma_pp(subset + extra) + 1e-12
    assert sigma_pp(subset) >= 0


def test_icd_samples_small_grid():
    pts = icd_samples(IcdSpec(50e-6, 1e-3, 3, 2))
    expected = [(0, -1e-3), (25e-6, -1e-3), (0, 0), (25e-6, 0), (0, 1e-3), (25e-6, 1e-3)]
    np.testing.assert_allclose(pts, expected, atol=1e-18)
    assert icd_samples(IcdSpec()).shape == (101 * 11, 2)


@pytest.mark.parametrize("kw", [dict(n_axial=4), dict(n_axial=1), dict(n_radial=1), dict(diameter=0), dict(half_length=-1)])
def test_icd_spec_invariants(kw):
    with pytest.raises(DomainError):
        IcdSpec(**kw)


@pytest.fixture(scope="module")
def calibrated_e():
    return calibrate_barrel("E")[0]


@pytest.mark.parametrize("gid", CATALOG_IDS)
def test_grid_convergence(gid, calibrated_e):
    g = calibrated_e if gid == "E" else build_catalog(gid)
    spec = IcdSpec()
    coarse, fine = icd_sigma(g, spec), icd_sigma(g, spec.refined())
    assert abs(fine - coarse) / fine < 0.01


def test_grid_convergence_raw_barrel():
    g = build_catalog("E")
    coarse, fine = icd_sigma(g, IcdSpec()), icd_sigma(g, IcdSpec().refined())
    assert abs(fine - coarse) / fine < 0.01


def test_helmholtz_sigma_order_of_magnitude():
    # exact Helmholtz filaments; the table tolerance is checked in the acceptance suite
    assert 0.05 < icd_sigma(build_catalog("D"), IcdSpec()) < 0.3


@pytest.mark.parametrize("gid", ["A", "D", "F"])
def test_profile_nondecreasing(gid):
    g = build_catalog(gid)
    ext = np.arange(1, 31) * 0.05e-3
    prof = homogeneity_profile(g, IcdSpec(), "axial", ext)
    assert all(b >= a for a, b in zip(prof.sigma_pp, prof.sigma_pp[1:]))
    assert all(s >= 0 for s in prof.sigma_pp)
    assert prof.b_center == pytest.approx(float(field_magnitude(g, 0.0, 0.0)))
    radial = homogeneity_profile(g, IcdSpec(), "radial", np.arange(1, 11) * 2.5e-6)
    assert all(b >= a for a, b in zip(radial.sigma_pp, radial.sigma_pp[1:]))


def test_profile_matches_icd_sigma_on_grid_extent():
    g = build_catalog("C")
    prof = homogeneity_profile(g, IcdSpec(), "axial", [0.25e-3])
    assert prof.sigma_pp[0] == pytest.approx(icd_sigma(g, IcdSpec()), rel=1e-12)


def test_profile_tiny_extent_is_flat():
    prof = homogeneity_profile(build_catalog("D"), IcdSpec(), "axial", [1e-12], on_axis=True)
    assert prof.sigma_pp[0] < 1e-9


def test_profile_errors():
    g = build_catalog("D")
    with pytest.raises(DomainError):
        homogeneity_profile(g, IcdSpec(), "axial", [0.3e-3, 0.2e-3])
    with pytest.raises(DomainError):
        homogeneity_profile(g, IcdSpec(), "sideways", [0.2e-3])
    with pytest.raises(DomainError):
        homogeneity_profile(g, IcdSpec(), "axial", [0.0])


def test_profile_csv_header():
    prof = homogeneity_profile(build_catalog("D"), IcdSpec(), "axial", [0.1e-3, 0.2e-3])
    lines = prof.to_csv().splitlines()
    assert lines[0] == "half_length_mm,sigma_pp_percent"
    assert lines[1].startswith("0.1,")


def test_table_report(calibrated_e):
    rows = table_report([build_catalog(g) for g in "ACD"] + [calibrated_e])
    assert [r.name for r in rows] == ["A", "C", "D", "E"]
    assert min(rows, key=lambda r: r.sigma_025).name == "E"
    d = rows[2]
    assert (d.n_w, d.d_mm, d.h_mm) == (2, 3.0, 1.5)
    assert all(r.sigma_060 > r.sigma_025 for r in rows)
    csv_text = report_csv(rows)
    assert csv_text.splitlines()[0] == "name,n_w,d_mm,h_mm,sigma_025,sigma_060"
    assert csv_text.splitlines()[3].startswith("D,2,3,1.5,")
    assert len(report_text(rows).splitlines()) == 5


def test_table_report_empty():
    with pytest.raises(DomainError):
        table_report([])

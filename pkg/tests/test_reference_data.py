"""Properties of the reference KS data set and of the pipeline on it (slow: simulates once, then cached)."""

from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from weakpde.domains import half_cells_for, sample_domains
from weakpde.estimators import WeakLibrary
from weakpde.experiments import fit_loglog_slope, run_ensemble
from weakpde.field import correlation_scales, mean_windowed_spectrum, power_spectrum, sample_stddev
from weakpde.regression import min_singular_vector

pytestmark = pytest.mark.slow


def test_grid(reference_data):
    assert reference_data.shape == (513, 501)
    assert reference_data.delta_x == pytest.approx(0.19635, abs=1e-5)
    assert reference_data.delta_t == 1.0


def test_amplitude(reference_data):
    assert sample_stddev(reference_data) == pytest.approx(1.3, abs=0.1)


def test_dominant_wavenumber(reference_data):
    # fastest linear growth sits at 1/sqrt(2); the domain resolves multiples of 1/16
    assert abs(power_spectrum(reference_data).peak() - 0.625) <= 0.15


def test_exponential_tail(reference_base):
    p = power_spectrum(reference_base)
    sel = (p.frequencies > 1) & (p.frequencies < 4)
    fit = stats.linregress(p.frequencies[sel], np.log(p.power[sel]))
    assert fit.rvalue < -0.99
    assert -1 / fit.slope == pytest.approx(0.3, abs=0.06)


def test_windowed_spectrum_peak(reference_data, reference_config):
    hx = half_cells_for(reference_config.width_x, reference_data.delta_x)
    ht = half_cells_for(reference_config.width_t, reference_data.delta_t)
    doms = sample_domains(1000, hx, ht, reference_data.shape, 0)
    prof = mean_windowed_spectrum(reference_data, doms, 8, 8)
    assert prof.peak() == pytest.approx(0.8, abs=0.1)
    # the envelope spreads power over neighbouring bins but keeps the high-frequency tail small
    assert prof.power[prof.frequencies > 2.5].max() < 0.05


def test_correlation_scales(reference_data):
    ell_x, ell_t = correlation_scales(reference_data)
    assert ell_x == pytest.approx(1.5, rel=0.25)
    assert ell_t == pytest.approx(8.0, rel=0.25)


def test_true_terms_nearly_null(reference_data):
    Q = WeakLibrary(random_state=0).fit_transform(reference_data)
    c, eta = min_singular_vector(Q[:, :4])
    assert eta / np.linalg.norm(Q) < 1e-6
    np.testing.assert_allclose(c, 0.5, atol=1e-5)


def test_column_scaling_with_domain_size(reference_data):
    scales = np.array([0.5, 0.7, 1.0, 1.4])
    norms = np.array([
        np.linalg.norm(WeakLibrary(width_x=14.73 * s, width_t=75 * s, random_state=0)
                       .fit_transform(reference_data), axis=0)
        for s in scales
    ])
    labels = list(WeakLibrary().fit(reference_data).get_feature_names_out())
    slope = {lab: fit_loglog_slope(scales, norms[:, j])[0] for j, lab in enumerate(labels)}
    # the constant column integrates the weight over the domain area
    assert slope["1"] == pytest.approx(2.0, abs=0.1)
    # each derivative moved onto the weight costs one power of the domain size
    ladder = [slope[k] for k in ("u_x", "u_xx", "u_xxx", "u_xxxx")]
    assert ladder == sorted(ladder, reverse=True)
    assert slope["u_xxxx"] < 0


def test_moderate_noise_threshold_window(reference_base, reference_config):
    for gamma in (1.1, 1.4, 2.0):
        res = run_ensemble(replace(reference_config, sigma=0.3, gamma=gamma, n_trials=10), reference_base)
        assert res.support == (0.0, 0.0), gamma


def test_huge_threshold_under_selects(reference_base, reference_config):
    res = run_ensemble(replace(reference_config, sigma=0.3, gamma=10.0, n_trials=5), reference_base)
    assert res.p_missing == 1.0
    assert res.p_spurious == 0.0


def test_noise_limited_domain_count_scaling(reference_base, reference_config):
    # with a single weight per domain and heavy noise the error falls like 1/sqrt(N_d)
    base = replace(reference_config, sigma=1.0, l=0, m=0, n_trials=30)
    counts = np.array([100, 200, 400, 800])
    errs = [run_ensemble(replace(base, n_domains=int(n)), reference_base).mean_delta_c("u_xxxx") for n in counts]
    slope, _ = fit_loglog_slope(counts, errs)
    assert -0.8 < slope < -0.2

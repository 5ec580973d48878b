"""Scalar layer metrics: ranks, entropy, localization."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectrad.errors import UndefinedMetricError
from spectrad.esd import ESD, compute_esd
from spectrad.metrics import (ipr, layer_metrics, localization_summary,
                              mp_soft_rank, spectral_entropy, stable_rank)
from spectrad.mp import MPFit, fit_mp
from spectrad.rng import DeterministicStream
from spectrad.synth import SynthSpec, generate


def _esd_of(values, n=None):
    ev = np.asarray(values, dtype=np.float64)
    m = ev.size
    return ESD(name="t", eigenvalues=ev, n=n or 2 * m, m=m)


class TestExactIdentities:
    def test_rank_one(self):
        e = _esd_of([0.0] * 49 + [3.7])
        assert stable_rank(e) == 1.0
        assert spectral_entropy(e) == 0.0

    def test_flat_spectrum(self):
        m = 64
        e = _esd_of(np.full(m, 0.3))
        assert stable_rank(e) == float(m)
        assert spectral_entropy(e) == 1.0

    def test_scale_invariance_is_exact(self):
        ev = DeterministicStream(8).uniforms(120) + 0.05
        a, b = _esd_of(ev), _esd_of(np.ldexp(ev, 4))  # *16: exact in floats
        assert stable_rank(a) - stable_rank(b) == 0.0
        assert spectral_entropy(a) - spectral_entropy(b) == 0.0

    def test_single_eigenvalue_entropy(self):
        e = ESD(name="one", eigenvalues=np.array([2.0]), n=4, m=1)
        assert spectral_entropy(e) == 1.0

    def test_zero_spectrum_undefined(self):
        e = _esd_of(np.zeros(30))
        for metric in (stable_rank, spectral_entropy):
            with pytest.raises(UndefinedMetricError):
                metric(e)
        with pytest.raises(UndefinedMetricError):
            mp_soft_rank(e, None)


class TestSeededValues:
    SR = [111.31770428487216, 112.82147532310793, 115.00615823645099,
          112.61258927730316, 112.5211178348197]
    H = [0.9774490163221885, 0.9775836754529506, 0.977399821366399,
         0.9773499215672011, 0.9773032921015475]

    @pytest.mark.parametrize("seed", range(5))
    def test_gaussian_pins(self, seed):
        w = generate(SynthSpec(kind="gaussian", n_rows=1000, n_cols=250,
                               seed=seed))
        e = compute_esd(w)
        assert_allclose(stable_rank(e), self.SR[seed], rtol=1e-9)
        assert_allclose(spectral_entropy(e), self.H[seed], rtol=1e-9)
        # Gaussian square-free bulk: high but not full effective rank
        assert 0.3 < stable_rank(e) / 250.0 < 0.6
        assert spectral_entropy(e) > 0.95


class TestSoftRank:
    def test_without_fit(self):
        e = _esd_of(np.linspace(0.1, 2.0, 40))
        assert mp_soft_rank(e, None) == 0.0

    def test_unconverged_fit(self):
        e = _esd_of(np.linspace(0.1, 2.0, 40))
        fit = MPFit(sigma_sq=1.0, q=2.0, lambda_minus=0.086, lambda_plus=2.91,
                    ks_distance=0.5, n_bulk=40, n_excluded=0, iterations=20,
                    converged=False)
        assert mp_soft_rank(e, fit) == 0.0

    def test_ratio_and_clamp(self):
        fit = MPFit(sigma_sq=1.0, q=4.0, lambda_minus=0.25, lambda_plus=2.25,
                    ks_distance=0.01, n_bulk=40, n_excluded=0, iterations=2,
                    converged=True)
        spiked = _esd_of(list(np.linspace(0.3, 2.0, 39)) + [9.0])
        assert_allclose(mp_soft_rank(spiked, fit), 0.25, rtol=1e-12)
        inside = _esd_of(np.linspace(0.3, 2.0, 40))
        assert mp_soft_rank(inside, fit) == 1.0  # edge above top: clamped

    def test_pipeline_value(self):
        w = generate(SynthSpec(kind="spiked", n_rows=2000, n_cols=500,
                               spikes=[float(np.sqrt(10.0))] * 3, seed=6))
        e = compute_esd(w)
        fit = fit_mp(e)
        val = mp_soft_rank(e, fit)
        assert 0.15 < val < 0.35  # lambda_plus/10-ish
        assert_allclose(val, fit.lambda_plus / e.lambda_max, rtol=1e-12)


class TestIpr:
    def test_uniform_vector(self):
        m = 250
        v = np.full(m, 1.0 / np.sqrt(m))
        assert_allclose(ipr(v), 1.0 / m, rtol=1e-12)

    def test_one_hot(self):
        v = np.zeros(100)
        v[17] = 1.0
        assert ipr(v) == 1.0

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            ipr(np.full(10, 0.5))

    def test_random_direction_statistics(self):
        # Haar direction in dimension m: E[ipr] = 3/(m + 2)
        vals = [ipr(DeterministicStream(seed).unit_vector(250))
                for seed in range(30)]
        assert_allclose(float(np.mean(vals)), 0.011926685163964508, rtol=1e-9)
        assert_allclose(float(np.mean(vals)), 3.0 / 252.0, rtol=0.01)

    def test_sparse_support(self):
        v = DeterministicStream(1).unit_vector(500, support=5)
        assert np.count_nonzero(v) == 5
        assert_allclose(ipr(v), 0.418757731983645, rtol=1e-9)
        assert ipr(v) > 0.2  # concentrated far above 3/m ~ 0.006


class TestLocalization:
    def test_planted_localized_spike(self):
        stream = DeterministicStream(21)
        n, m = 1200, 300
        w = stream.normals(n * m).reshape(n, m)
        # rank-1 bump carried by a 4-coordinate direction
        u = stream.unit_vector(n)
        v = stream.unit_vector(m, support=4)
        w = w + 90.0 * np.outer(u, v)
        fit = fit_mp(compute_esd(w))
        loc = localization_summary(w, fit)
        assert loc.spike_count == 1
        assert loc.spike_ipr_mean is not None
        assert loc.spike_ipr_mean > 10.0 * loc.bulk_ipr_mean
        assert loc.bulk_ipr_mean == pytest.approx(3.0 / (m + 2.0), rel=0.2)

    def test_no_fit_means_no_spikes(self):
        w = DeterministicStream(3).normals(400 * 100).reshape(400, 100)
        loc = localization_summary(w, None)
        assert loc.spike_count == 0
        assert loc.spike_ipr_mean is None
        assert loc.bulk_ipr_mean > 0.0

    def test_orientation_invariance(self):
        w = DeterministicStream(5).normals(300 * 80).reshape(300, 80)
        a = localization_summary(w, None)
        b = localization_summary(w.T, None)
        assert_allclose(a.bulk_ipr_mean, b.bulk_ipr_mean, rtol=1e-8)

    def test_rejects_non_matrix(self):
        with pytest.raises(ValueError):
            localization_summary(np.zeros(10), None)


class TestLayerMetrics:
    def test_assembly(self):
        w = generate(SynthSpec(kind="spiked", n_rows=1000, n_cols=250,
                               spikes=[3.0, 3.0], seed=4))
        e = compute_esd(w)
        fit = fit_mp(e)
        lm = layer_metrics(w, e, fit)
        assert lm.spike_count == 2
        assert lm.lambda_max == e.lambda_max
        assert_allclose(lm.stable_rank, stable_rank(e), rtol=1e-12)
        assert_allclose(lm.mp_soft_rank, mp_soft_rank(e, fit), rtol=1e-12)
        assert lm.spike_ipr_mean is not None

    def test_zero_matrix_undefined(self):
        w = np.zeros((40, 20))
        e = compute_esd(w)
        with pytest.raises(UndefinedMetricError):
            layer_metrics(w, e, None)

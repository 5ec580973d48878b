"""Spectrum computation, histograms, and pooling."""

import csv

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spectrad.esd import (ESD, compute_esd, empirical_cdf, histogram,
                          pool_esds, write_histogram_csv)
from spectrad.mp import MPTable, mp_density
from spectrad.rng import DeterministicStream
from spectrad.synth import SynthSpec, generate


def _gaussian(seed, rows=1000, cols=250):
    return generate(SynthSpec(kind="gaussian", n_rows=rows, n_cols=cols,
                              seed=seed))


class TestESDClass:
    def test_sorts_and_clamps(self):
        e = ESD(name="x", eigenvalues=np.array([3.0, -1e-16, 1.0]), n=6, m=3)
        assert_array_equal(e.eigenvalues, [0.0, 1.0, 3.0])
        assert e.lambda_max == 3.0
        assert e.q == 2.0

    def test_rejects_true_negatives(self):
        with pytest.raises(ValueError, match="negative"):
            ESD(name="x", eigenvalues=np.array([-0.5, 1.0]), n=4, m=2)

    def test_rejects_n_below_m(self):
        with pytest.raises(ValueError, match="n >= m"):
            ESD(name="x", eigenvalues=np.ones(3), n=2, m=3)

    def test_readonly(self):
        e = ESD(name="x", eigenvalues=np.array([1.0, 2.0]), n=4, m=2)
        with pytest.raises(ValueError):
            e.eigenvalues[0] = 9.0


class TestComputeESD:
    def test_known_singular_values(self):
        # diag(3, 4) stacked over zeros: eigenvalues are {9, 16} / 4
        arr = np.zeros((4, 2))
        arr[0, 0], arr[1, 1] = 3.0, 4.0
        e = compute_esd(arr)
        assert_allclose(e.eigenvalues, [2.25, 4.0], rtol=1e-14)
        assert (e.n, e.m) == (4, 2)

    def test_transpose_invariance(self):
        w = _gaussian(0, rows=120, cols=40)
        a = compute_esd(w.array)
        b = compute_esd(w.array.T)
        assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-10)
        assert (a.n, a.m) == (b.n, b.m) == (120, 40)

    def test_scale_equivariance(self):
        w = _gaussian(1, rows=80, cols=30)
        a = compute_esd(w.array)
        b = compute_esd(2.5 * w.array)
        assert_allclose(b.eigenvalues, 2.5 ** 2 * a.eigenvalues, rtol=1e-12)

    def test_name_comes_from_weight_matrix(self):
        w = _gaussian(2, rows=50, cols=10)
        assert compute_esd(w).name == w.name
        assert compute_esd(w.array).name == "<array>"


class TestHistogram:
    def test_density_normalized(self):
        e = compute_esd(_gaussian(3))
        h = histogram(e, n_bins=50)
        widths = np.diff(h.bin_edges)
        assert_allclose(np.sum(h.densities * widths), 1.0, rtol=1e-12)
        assert len(h.bin_edges) == 51

    def test_explicit_range(self):
        e = ESD(name="u", eigenvalues=np.array([1.0, 2.0, 3.0]), n=6, m=3)
        h = histogram(e, n_bins=4, value_range=(0.0, 4.0))
        assert h.bin_edges[0] == 0.0 and h.bin_edges[-1] == 4.0

    def test_degenerate_spectrum_single_bin(self):
        e = ESD(name="c", eigenvalues=np.full(5, 2.0), n=10, m=5)
        h = histogram(e, n_bins=100)
        assert len(h.densities) == 1
        width = h.bin_edges[1] - h.bin_edges[0]
        assert_allclose(h.densities[0] * width, 1.0, rtol=1e-9)

    def test_rejects_zero_bins(self):
        e = ESD(name="x", eigenvalues=np.ones(3), n=3, m=3)
        with pytest.raises(ValueError):
            histogram(e, n_bins=0)

    def test_matches_mp_density_stratified(self):
        # deterministic stratified MP sample: sup-norm against the density
        # stays under 0.1 at M=500 with 100 bins
        for q, sup_frozen in ((4.0, 0.09195369385378693),
                              (2.0, 0.06613984762510039)):
            t = MPTable(q)
            xs = np.array([t.quantile((i - 0.5) / 500.0, 1.0)
                           for i in range(1, 501)])
            e = ESD(name="strat", eigenvalues=xs, n=int(500 * q), m=500)
            h = histogram(e, n_bins=100)
            centers = (h.bin_edges[:-1] + h.bin_edges[1:]) / 2.0
            sup = float(np.max(np.abs(h.densities
                                      - mp_density(centers, 1.0, q))))
            assert sup < 0.1
            assert_allclose(sup, sup_frozen, rtol=1e-9)


class TestEmpiricalCdf:
    def test_step_values(self):
        e = ESD(name="s", eigenvalues=np.array([1.0, 2.0, 4.0]), n=6, m=3)
        assert empirical_cdf(e, 0.5) == 0.0
        assert empirical_cdf(e, 1.0) == pytest.approx(1 / 3)
        assert empirical_cdf(e, 3.0) == pytest.approx(2 / 3)
        assert empirical_cdf(e, 4.0) == 1.0
        assert_array_equal(empirical_cdf(e, np.array([1.0, 4.0])),
                           [1 / 3, 1.0])


class TestPooling:
    def test_pool_concatenates_sorted(self):
        esds = [compute_esd(_gaussian(s, rows=200, cols=50)) for s in range(3)]
        pooled = pool_esds(esds)
        assert len(pooled.eigenvalues) == 150
        assert (pooled.n, pooled.m) == (200, 50)
        assert np.all(np.diff(pooled.eigenvalues) >= 0.0)

    def test_pool_rejects_shape_mismatch(self):
        a = compute_esd(_gaussian(0, rows=200, cols=50))
        b = compute_esd(_gaussian(0, rows=100, cols=50))
        with pytest.raises(ValueError, match="cannot pool"):
            pool_esds([a, b])
        with pytest.raises(ValueError):
            pool_esds([])

    def test_pooled_ensemble_matches_mp(self):
        # 20 pooled Gaussian spectra: density sup-norm < 0.1 (frozen 0.0504)
        esds = [compute_esd(_gaussian(s, rows=2000, cols=500))
                for s in range(20)]
        h = histogram(pool_esds(esds), n_bins=100)
        centers = (h.bin_edges[:-1] + h.bin_edges[1:]) / 2.0
        sup = float(np.max(np.abs(h.densities
                                  - mp_density(centers, 1.0, 4.0))))
        assert sup < 0.1
        assert_allclose(sup, 0.05042829702396856, rtol=1e-9)


def test_histogram_csv_round_trip(tmp_path):
    e = compute_esd(_gaussian(4, rows=100, cols=25))
    h = histogram(e, n_bins=10)
    path = tmp_path / "h.csv"
    write_histogram_csv(h, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["bin_lo", "bin_hi", "density"]
    assert len(rows) == 11
    los = np.array([float(r[0]) for r in rows[1:]])
    dens = np.array([float(r[2]) for r in rows[1:]])
    assert_array_equal(los, h.bin_edges[:-1])  # repr round-trips exactly
    assert_array_equal(dens, h.densities)

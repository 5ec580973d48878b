"""Plot-data CSV and SVG emission."""

import csv
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from numpy.testing import assert_allclose

from spectrad.esd import compute_esd
from spectrad.heavytail import fit_power_law
from spectrad.mp import MPFit, fit_mp, mp_edges
from spectrad.plots import (MP_CURVE_POINTS, emit_plot_data, mp_curve,
                            pl_curve, render_svg)
from spectrad.synth import SynthSpec, generate


def _mp_fit(sigma_sq=1.0, q=4.0, converged=True):
    lo, hi = mp_edges(sigma_sq, q)
    return MPFit(sigma_sq=sigma_sq, q=q, lambda_minus=lo, lambda_plus=hi,
                 ks_distance=0.01, n_bulk=400, n_excluded=0, iterations=2,
                 converged=converged)


def _read_csv(path):
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [(r[0], float(r[1]), float(r[2]), float(r[3]))
                for r in reader]
    return header, rows


class TestCurves:
    @pytest.mark.parametrize("q", [1.0, 2.0, 4.0, 4.9])
    def test_mp_curve_integrates_to_one(self, q):
        xs, ys = mp_curve(_mp_fit(q=q))
        assert len(xs) == MP_CURVE_POINTS
        total = float(np.trapezoid(ys, xs))
        assert abs(total - 1.0) <= 1e-3
        assert abs(total - 1.0) < 1e-4  # actual accuracy is ~7e-6

    def test_mp_curve_spans_support(self):
        fit = _mp_fit(sigma_sq=2.0, q=4.0)
        xs, ys = mp_curve(fit)
        assert fit.lambda_minus < xs[0] < xs[-1] < fit.lambda_plus
        assert np.all(np.diff(xs) > 0)
        assert np.all(ys >= 0)

    def test_pl_curve_values(self):
        w = generate(SynthSpec(kind="pareto", n_rows=1000, n_cols=250,
                               mu=1.5, seed=0))
        esd = compute_esd(w)
        fit = fit_power_law(esd)
        xs, ys = pl_curve(fit, esd)
        assert xs[0] == fit.x_min
        assert_allclose(xs[-1], esd.lambda_max, rtol=1e-12)
        # tail density: (n_tail/m) * (alpha-1)/x_min * (x/x_min)^(-alpha)
        scale = fit.n_tail / esd.eigenvalues.size
        expect = scale * (fit.alpha - 1.0) / fit.x_min \
            * (xs / fit.x_min) ** (-fit.alpha)
        assert_allclose(ys, expect, rtol=1e-12)


class TestCsv:
    def _esd_with_fits(self):
        w = generate(SynthSpec(kind="pareto", n_rows=1000, n_cols=250,
                               mu=1.5, seed=0))
        esd = compute_esd(w)
        return esd, fit_mp(esd), fit_power_law(esd)

    def test_full_document(self, tmp_path):
        esd, mp_f, pl_f = self._esd_with_fits()
        out = tmp_path / "plot.csv"
        emit_plot_data(esd, mp_f, pl_f, out, n_bins=80)
        header, rows = _read_csv(out)
        assert header == ["series", "x_lo", "x_hi", "y"]
        by_series = {}
        for r in rows:
            by_series.setdefault(r[0], []).append(r)
        assert len(by_series["histogram"]) == 80
        assert len(by_series["mp_density"]) == MP_CURVE_POINTS
        assert len(by_series["pl_tail"]) == MP_CURVE_POINTS
        # histogram is a density: masses sum to 1
        mass = sum((hi - lo) * y for _, lo, hi, y in by_series["histogram"])
        assert_allclose(mass, 1.0, rtol=1e-9)

    def test_no_mp_fit_drops_mp_series(self, tmp_path):
        esd, _, pl_f = self._esd_with_fits()
        out = tmp_path / "plot.csv"
        emit_plot_data(esd, None, pl_f, out)
        _, rows = _read_csv(out)
        assert {r[0] for r in rows} == {"histogram", "pl_tail"}

    def test_unconverged_fit_counts_as_absent(self, tmp_path):
        esd, mp_f, _ = self._esd_with_fits()
        from dataclasses import replace
        out = tmp_path / "plot.csv"
        emit_plot_data(esd, replace(mp_f, converged=False), None, out)
        _, rows = _read_csv(out)
        assert {r[0] for r in rows} == {"histogram"}

    def test_log_scale_monotone_and_positive(self, tmp_path):
        esd, mp_f, pl_f = self._esd_with_fits()
        out = tmp_path / "plot_log.csv"
        emit_plot_data(esd, mp_f, pl_f, out, n_bins=60, log_scale=True)
        _, rows = _read_csv(out)
        hist = [r for r in rows if r[0] == "histogram"]
        los = [r[1] for r in hist]
        his = [r[2] for r in hist]
        assert all(a < b for a, b in zip(los, los[1:]))  # log10 edges rise
        assert all(lo < hi for lo, hi in zip(los, his))
        # log10 of the linear histogram can only keep positive-x bins
        assert len(hist) <= 60
        assert 10.0 ** los[0] > 0.0

    def test_repr_floats_round_trip(self, tmp_path):
        esd, mp_f, pl_f = self._esd_with_fits()
        out = tmp_path / "plot.csv"
        emit_plot_data(esd, mp_f, pl_f, out)
        _, rows = _read_csv(out)
        xs, ys = mp_curve(mp_f)
        got = [r for r in rows if r[0] == "mp_density"]
        assert_allclose([r[1] for r in got], xs, rtol=0)  # exact repr floats
        assert_allclose([r[3] for r in got], ys, rtol=0)


class TestSvg:
    def test_renders_well_formed_document(self, tmp_path):
        w = generate(SynthSpec(kind="pareto", n_rows=1000, n_cols=250,
                               mu=1.5, seed=0))
        esd = compute_esd(w)
        out = tmp_path / "plot.svg"
        render_svg(esd, fit_mp(esd), fit_power_law(esd), out, n_bins=40)
        root = ET.parse(out).getroot()
        assert root.tag.endswith("svg")
        ns = root.tag[:-3]
        rects = root.findall(f".//{ns}rect")
        polys = root.findall(f".//{ns}polyline")
        assert len(polys) == 2
        assert len(rects) >= 40  # bars plus background

    def test_histogram_only(self, tmp_path):
        w = generate(SynthSpec(kind="gaussian", n_rows=400, n_cols=100,
                               seed=1))
        esd = compute_esd(w)
        out = tmp_path / "plot.svg"
        render_svg(esd, None, None, out, n_bins=25)
        root = ET.parse(out).getroot()
        ns = root.tag[:-3]
        assert root.findall(f".//{ns}polyline") == []

"""Self-validation suites on synthetic ground truth.

Each suite generates matrices with known spectral behavior, runs the
analysis pipeline, and checks recovered quantities against the planted
truth.  Checks report pass/fail with the measured value and the bound;
failures are collected, never raised, so a report always comes back.

Seeds follow one scheme so every trial is reproducible in isolation:

    seed = base * 1_000_000 + suite_id * 100_000 + level * 1000 + trial

with suite ids mp=0, tw=1, frechet=2, bpp=3, csn=4, gallery=5.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SpectradError
from .esd import compute_esd
from .heavytail import (compare_alternatives, fit_power_law,
                        fit_power_law_samples, frechet_scaling_exponent)
from .metrics import mp_soft_rank
from .mp import fit_mp, mp_edges
from .phases import classify, gather_evidence
from .rng import DeterministicStream
from .synth import SynthSpec, _top_eigenvalue, generate

SUITE_IDS = {"mp": 0, "tw": 1, "frechet": 2, "bpp": 3, "csn": 4, "gallery": 5}

# name -> (expected phase, generator parameters); sizes chosen so the whole
# gallery runs in well under the 300 s budget while every phase is stable
GALLERY = {
    "gaussian": ("random_like",
                 dict(kind="gaussian", n_rows=1000, n_cols=250)),
    "spiked": ("bulk_spikes",
               dict(kind="spiked", n_rows=1000, n_cols=250,
                    spikes=[3.0] * 10)),
    "pareto": ("heavy_tailed",
               dict(kind="pareto", n_rows=1000, n_cols=250, mu=1.5)),
    "bleed": ("bleeding_out",
              dict(kind="bleed", n_rows=1000, n_cols=250)),
    "bulk_decay_mix": ("bulk_decay",
                       dict(kind="bulk_decay_mix", n_rows=1000, n_cols=250)),
    "rank_collapsed": ("rank_collapse",
                       dict(kind="rank_collapsed", n_rows=1000, n_cols=250,
                            zero_fraction=0.6)),
}

# soft rank must not increase along this phase ordering
SOFT_RANK_ORDER = ("random_like", "bleeding_out", "bulk_spikes",
                   "bulk_decay", "heavy_tailed")


def suite_seed(base: int, suite: str, level: int, trial: int) -> int:
    return (int(base) * 1_000_000 + SUITE_IDS[suite] * 100_000
            + level * 1000 + trial)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    bound: str

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed,
                "value": self.value, "bound": self.bound}


@dataclass
class SuiteResult:
    suite: str
    base_seed: int
    checks: list = field(default_factory=list)
    elapsed_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, value: float, bound: str) -> None:
        self.checks.append(Check(name, bool(passed), float(value), bound))

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "base_seed": self.base_seed,
            "passed": self.passed,
            "elapsed_s": round(self.elapsed_s, 3),
            "checks": [c.to_dict() for c in self.checks],
        }


def _suite_mp(base: int, res: SuiteResult) -> None:
    """sigma_sq recovery and bulk KS distance on pure-noise matrices."""
    t0 = time.time()
    sigmas, ds = [], []
    for t in range(10):
        w = generate(SynthSpec(kind="gaussian", n_rows=2000, n_cols=500,
                               seed=suite_seed(base, "mp", 0, t)))
        fit = fit_mp(compute_esd(w))
        sigmas.append(fit.sigma_sq)
        ds.append(fit.ks_distance)
    elapsed = time.time() - t0
    dev = abs(float(np.mean(sigmas)) - 1.0)
    res.add("sigma_sq mean within 3% of truth", dev <= 0.03, dev, "<= 0.03")
    res.add("max bulk KS distance", max(ds) <= 0.03, max(ds), "<= 0.03")
    res.add("wall time (s)", elapsed < 30.0, elapsed, "< 30")


def _suite_tw(base: int, res: SuiteResult) -> None:
    """Edge-fluctuation scaling: std(lambda_max) ~ M**(-2/3) for noise."""
    sizes = (125, 250, 500, 1000)
    stds = []
    for mi, m in enumerate(sizes):
        tops = []
        for t in range(50):
            w = generate(SynthSpec(kind="gaussian", n_rows=4 * m, n_cols=m,
                                   seed=suite_seed(base, "tw", mi, t)))
            tops.append(_top_eigenvalue(w.array))
        stds.append(float(np.std(tops)))
    slope = float(np.polyfit(np.log(sizes), np.log(stds), 1)[0])
    res.add("edge fluctuation exponent near -2/3",
            abs(slope + 2.0 / 3.0) <= 0.15, slope, "-2/3 +- 0.15")


def _suite_frechet(base: int, res: SuiteResult) -> None:
    """Top-eigenvalue growth with size under infinite-variance entries.

    With entry tail exponent mu and n_rows proportional to m, the largest
    eigenvalue tracks the largest squared entry, so ln(lambda_max) grows
    like (4/mu - 1) ln(m): 5/3 at mu = 1.5.
    """
    sizes = (100, 200, 400, 800)
    esds = []
    for mi, m in enumerate(sizes):
        for t in range(10):
            w = generate(SynthSpec(kind="pareto", n_rows=2 * m, n_cols=m,
                                   mu=1.5, seed=suite_seed(base, "frechet",
                                                           mi, t)))
            esds.append(compute_esd(w))
    slope = frechet_scaling_exponent(esds)
    res.add("heavy-tail growth exponent near 5/3",
            abs(slope - 5.0 / 3.0) <= 0.3, slope, "5/3 +- 0.3")


def _spike_count(w) -> int:
    esd = compute_esd(w)
    fit = fit_mp(esd)
    ev = gather_evidence(esd, fit, None)
    return ev.spike_count


def _suite_bpp(base: int, res: SuiteResult) -> None:
    """Outlier detection above / silence below the detectability edge."""
    lam_plus = mp_edges(1.0, 4.0)[1]
    exact = 0
    for t in range(100):
        k = 1 + (t % 3)
        w = generate(SynthSpec(kind="spiked", n_rows=1000, n_cols=250,
                               spikes=[float(np.sqrt(5.0 * lam_plus))] * k,
                               seed=suite_seed(base, "bpp", 0, t)))
        exact += int(_spike_count(w) == k)
    res.add("exact spike count at 5x bulk edge", exact >= 95, exact / 100.0,
            ">= 0.95")
    silent = 0
    for t in range(100):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # subcritical strengths warn
            w = generate(SynthSpec(kind="spiked", n_rows=1000, n_cols=250,
                                   spikes=[float(np.sqrt(0.5 * lam_plus))] * 2,
                                   seed=suite_seed(base, "bpp", 0, 500 + t)))
        silent += int(_spike_count(w) == 0)
    res.add("no detections at 0.5x bulk edge", silent >= 95, silent / 100.0,
            ">= 0.95")


def _suite_csn(base: int, res: SuiteResult) -> None:
    """Tail-exponent recovery and rejection of exponential tails."""
    for level, alpha in enumerate((1.75, 2.5, 3.5)):
        hats = []
        for t in range(20):
            stream = DeterministicStream(suite_seed(base, "csn", level, t))
            hats.append(fit_power_law_samples(stream.pareto(10_000,
                                                            alpha - 1.0)).alpha)
        bias = abs(float(np.mean(hats)) - alpha)
        spread = float(np.std(hats))
        res.add(f"alpha={alpha} bias", bias <= 0.05, bias, "<= 0.05")
        res.add(f"alpha={alpha} spread", spread <= 0.1, spread, "<= 0.1")
    preferred = 0
    for t in range(20):
        stream = DeterministicStream(suite_seed(base, "csn", 3, t))
        # exponential(rate 1) shifted to start at 1: no power-law tail
        x = 1.0 - np.log1p(-stream.uniforms(50_000))
        fit = fit_power_law_samples(x)
        fit = compare_alternatives(x, fit, models=("exponential",))
        preferred += int(fit.alternatives[0].preferred)
    res.add("exponential preferred over power law", preferred >= 18,
            preferred / 20.0, ">= 0.90")


def _classify_matrix(w):
    esd = compute_esd(w)
    try:
        mp = fit_mp(esd)
    except SpectradError:
        mp = None
    try:
        pl = fit_power_law(esd)
        pl = compare_alternatives(esd.eigenvalues[esd.eigenvalues > 0], pl,
                                  models=("exponential",))
    except SpectradError:
        pl = None
    decision = classify(gather_evidence(esd, mp, pl))
    try:
        soft = mp_soft_rank(esd, mp)
    except SpectradError:
        soft = float("nan")
    return decision.label, soft


def _suite_gallery(base: int, res: SuiteResult) -> None:
    """Phase diagonal: each generator lands in its own phase."""
    t0 = time.time()
    soft_ranks = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for gi, (gname, (want, params)) in enumerate(GALLERY.items()):
            hits, softs = 0, []
            for t in range(10):
                w = generate(SynthSpec(seed=suite_seed(base, "gallery", gi, t),
                                       **params))
                label, soft = _classify_matrix(w)
                hits += int(label == want)
                softs.append(soft)
            soft_ranks[want] = float(np.nanmean(softs))
            res.add(f"{gname} classified {want}", hits >= 9, hits / 10.0,
                    ">= 0.90")
    ordered = all(soft_ranks[SOFT_RANK_ORDER[i]]
                  >= soft_ranks[SOFT_RANK_ORDER[i + 1]] - 1e-12
                  for i in range(len(SOFT_RANK_ORDER) - 1))
    span = soft_ranks[SOFT_RANK_ORDER[0]] - soft_ranks[SOFT_RANK_ORDER[-1]]
    res.add("soft rank non-increasing across phases", ordered, span,
            "monotone")
    elapsed = time.time() - t0
    res.add("wall time (s)", elapsed < 300.0, elapsed, "< 300")


_SUITES = {
    "mp": _suite_mp,
    "tw": _suite_tw,
    "frechet": _suite_frechet,
    "bpp": _suite_bpp,
    "csn": _suite_csn,
    "gallery": _suite_gallery,
}


def run_suite(suite: str, base_seed: int = 1) -> SuiteResult:
    if suite not in _SUITES:
        raise ValueError(f"unknown suite {suite!r}; "
                         f"options: {sorted(_SUITES)}")
    res = SuiteResult(suite=suite, base_seed=int(base_seed))
    t0 = time.time()
    _SUITES[suite](int(base_seed), res)
    res.elapsed_s = time.time() - t0
    return res

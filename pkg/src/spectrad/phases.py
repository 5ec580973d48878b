"""Spectral phase classification.

A layer's spectrum is assigned to one of five phases plus a failure mode,
reflecting how far training has pushed it away from pure noise:

* ``random_like``: clean MP bulk, no outliers.
* ``bleeding_out``: bulk with excess eigenvalue mass in the edge band but
  no separated spikes.
* ``bulk_spikes``: clean bulk plus clearly separated outlier eigenvalues.
* ``bulk_decay``: the bulk description degrades without a convincing
  power-law tail taking over.
* ``heavy_tailed``: the tail is power-law and beats the bulk description.
* ``rank_collapse`` (failure mode): a large fraction of exactly-zero
  eigenvalues.

Rules are evaluated in a fixed order; the first match wins and the
rationale records the fired rule with the numbers that triggered it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UnclassifiableError
from .esd import ESD
from .heavytail import PlFit
from .mp import DEFAULT_EDGE_FLOOR, MPFit, edge_tolerance

PHASES = ("random_like", "bleeding_out", "bulk_spikes", "bulk_decay",
          "heavy_tailed", "rank_collapse")

_ZERO_EIGENVALUE_REL = 1e-9  # zero cutoff relative to lambda_max


@dataclass(frozen=True)
class PhaseThresholds:
    """Tunable decision constants; defaults are the shipped calibration."""

    rank_collapse_zero_mass: float = 0.25
    heavy_tail_alpha_max: float = 4.0
    mp_ks_max: float = 0.05
    bleed_max: float = 0.01
    spike_gap_min: float = 0.25


@dataclass(frozen=True)
class SpikeStatistics:
    """Outlier bookkeeping relative to a fitted bulk edge.

    ``threshold`` is ``lambda_plus * (1 + edge_tolerance)``; eigenvalues
    above it are spikes, eigenvalues in ``(lambda_plus, threshold]`` form
    the bleed region (edge fluctuation band).  ``spike_gap`` is the gap
    between the smallest spike and the largest non-spike eigenvalue in
    units of ``lambda_plus``, 0.0 when there are no spikes.
    """

    threshold: float
    spike_count: int
    spike_gap: float
    bleed_mass_fraction: float
    zero_mass_fraction: float


def zero_mass_fraction(esd: ESD) -> float:
    """Fraction of eigenvalues that are zero up to roundoff.

    The cutoff is 1e-9 of the largest eigenvalue; an identically zero
    spectrum (where the relative cutoff degenerates) counts as fraction 1.
    """
    top = esd.lambda_max
    if top <= 0.0:
        return 1.0
    return float(np.mean(esd.eigenvalues < _ZERO_EIGENVALUE_REL * top))


def spike_statistics(esd: ESD, fit: MPFit,
                     edge_floor: float = DEFAULT_EDGE_FLOOR) -> SpikeStatistics:
    """Count spikes and bleed mass above a converged bulk fit."""
    if not fit.converged:
        raise ValueError("spike statistics need a converged bulk fit")
    ev = esd.eigenvalues
    threshold = fit.lambda_plus * (1.0 + edge_tolerance(len(ev), floor=edge_floor))
    spikes = ev > threshold
    spike_count = int(np.sum(spikes))
    bleed = float(np.mean((ev > fit.lambda_plus) & ~spikes))
    gap = 0.0
    if spike_count and spike_count < len(ev) and fit.lambda_plus > 0.0:
        min_spike = float(ev[len(ev) - spike_count])
        max_bulk = float(ev[len(ev) - spike_count - 1])
        gap = (min_spike - max_bulk) / fit.lambda_plus
    return SpikeStatistics(threshold=float(threshold), spike_count=spike_count,
                           spike_gap=gap, bleed_mass_fraction=bleed,
                           zero_mass_fraction=zero_mass_fraction(esd))


@dataclass(frozen=True)
class PhaseEvidence:
    """Everything the classifier looks at, precomputed.

    Spike fields are all zero when there is no converged bulk fit; the
    rules that need them also require the fit, so nothing is decided on
    the placeholder zeros.
    """

    mp_fit: MPFit | None
    pl_fit: PlFit | None
    zero_mass_fraction: float
    bleed_mass_fraction: float
    spike_count: int
    spike_gap: float


def gather_evidence(esd: ESD, mp_fit: MPFit | None, pl_fit: PlFit | None,
                    edge_floor: float = DEFAULT_EDGE_FLOOR) -> PhaseEvidence:
    """Bundle fits and spike statistics into classifier evidence."""
    if mp_fit is not None and mp_fit.converged:
        stats = spike_statistics(esd, mp_fit, edge_floor=edge_floor)
        return PhaseEvidence(
            mp_fit=mp_fit, pl_fit=pl_fit,
            zero_mass_fraction=stats.zero_mass_fraction,
            bleed_mass_fraction=stats.bleed_mass_fraction,
            spike_count=stats.spike_count, spike_gap=stats.spike_gap)
    return PhaseEvidence(
        mp_fit=mp_fit, pl_fit=pl_fit,
        zero_mass_fraction=zero_mass_fraction(esd),
        bleed_mass_fraction=0.0, spike_count=0, spike_gap=0.0)


@dataclass(frozen=True)
class PhaseDecision:
    label: str
    rationale: tuple[str, ...]


def classify(evidence: PhaseEvidence,
             thresholds: PhaseThresholds | None = None) -> PhaseDecision:
    """Apply the phase rules in order and return the first match.

    The degenerate overrides (rank collapse, heavy tail) come before the
    bulk-shaped phases because both invalidate the premise that the bulk
    fit describes the spectrum.  An unconverged bulk fit counts as absent
    for the bulk-shaped phases, but its KS distance still competes against
    the power law in the heavy-tail rule.  Raises
    :class:`UnclassifiableError` when both fits are missing and the
    spectrum is not rank-collapsed: there is no evidence to decide on.
    """
    thr = thresholds or PhaseThresholds()
    mp_fit, pl_fit = evidence.mp_fit, evidence.pl_fit

    # 1. failure mode first: massive exact-zero mass
    if evidence.zero_mass_fraction >= thr.rank_collapse_zero_mass:
        return PhaseDecision("rank_collapse", (
            f"zero-eigenvalue mass {evidence.zero_mass_fraction:.3f} >= "
            f"{thr.rank_collapse_zero_mass}",))

    if mp_fit is None and pl_fit is None:
        raise UnclassifiableError("neither bulk nor tail fit available")

    # 2. heavy tail beats the bulk description
    if pl_fit is not None and pl_fit.alpha <= thr.heavy_tail_alpha_max:
        exp_alt = next((a for a in pl_fit.alternatives
                        if a.model == "exponential"), None)
        not_rejected = exp_alt is None or not exp_alt.preferred
        beats_bulk = mp_fit is None or pl_fit.ks_distance < mp_fit.ks_distance
        if not_rejected and beats_bulk:
            return PhaseDecision("heavy_tailed", (
                f"tail exponent {pl_fit.alpha:.2f} <= "
                f"{thr.heavy_tail_alpha_max}, not rejected against an "
                f"exponential, tail KS {pl_fit.ks_distance:.3f} beats the "
                f"bulk fit",))

    bulk_ok = (mp_fit is not None and mp_fit.converged
               and mp_fit.ks_distance <= thr.mp_ks_max)
    if bulk_ok:
        # 3. pure bulk
        if (evidence.spike_count == 0
                and evidence.bleed_mass_fraction <= thr.bleed_max):
            return PhaseDecision("random_like", (
                f"bulk KS {mp_fit.ks_distance:.3f} <= {thr.mp_ks_max}, no "
                f"spikes, bleed {evidence.bleed_mass_fraction:.4f} <= "
                f"{thr.bleed_max}",))
        # 4. bulk plus separated spikes
        if (evidence.spike_count >= 1
                and evidence.spike_gap >= thr.spike_gap_min):
            return PhaseDecision("bulk_spikes", (
                f"{evidence.spike_count} spikes with gap "
                f"{evidence.spike_gap:.2f} >= {thr.spike_gap_min} over a "
                f"clean bulk (KS {mp_fit.ks_distance:.3f})",))
        # 5. edge mass without separation
        if (evidence.bleed_mass_fraction > thr.bleed_max
                and (evidence.spike_count == 0
                     or evidence.spike_gap < thr.spike_gap_min)):
            return PhaseDecision("bleeding_out", (
                f"bleed {evidence.bleed_mass_fraction:.4f} > {thr.bleed_max} "
                f"without separated spikes (gap {evidence.spike_gap:.2f})",))

    # 6. residual: bulk degrading, tail not convincingly power-law
    return PhaseDecision("bulk_decay", (
        "no clean bulk phase and no winning power-law tail",
        "residual class: no direct edge-shape test is applied",
    ))


def classify_esd(esd: ESD, mp_fit: MPFit | None, pl_fit: PlFit | None,
                 thresholds: PhaseThresholds | None = None,
                 edge_floor: float = DEFAULT_EDGE_FLOOR) -> PhaseDecision:
    """Convenience wrapper: gather evidence from fits, then classify."""
    return classify(gather_evidence(esd, mp_fit, pl_fit,
                                    edge_floor=edge_floor), thresholds)

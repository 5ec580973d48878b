"""Per-layer analysis pipeline and JSON report assembly.

One layer flows compute_esd -> fit_mp -> fit_power_law + alternatives ->
metrics -> phase classification.  Failures of the individual fits degrade
to null report fields with a warning string; only failures that leave the
layer without metrics or without any classification produce a layer-level
error entry.  A run succeeds if at least one layer yields a report.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from . import __version__
from .errors import SpectradError, UnclassifiableError
from .esd import ESD, compute_esd
from .heavytail import (ALPHA_RELIABLE_RANGE, ALTERNATIVE_MODELS,
                        AlternativeFit, PlFit, compare_alternatives,
                        fit_power_law)
from .metrics import LayerMetrics, layer_metrics
from .mp import DEFAULT_EDGE_FLOOR, MPFit, fit_mp
from .phases import PhaseThresholds, classify, gather_evidence
from .tensor_io import (ManifestEntry, WeightMatrix, load_array,
                        load_manifest_entry, read_manifest_entries)

REPORT_VERSION = "1"


@dataclass(frozen=True)
class AnalysisOptions:
    """Knobs of the per-layer pipeline; defaults match the module docs."""

    edge_floor: float = DEFAULT_EDGE_FLOOR
    thresholds: PhaseThresholds = field(default_factory=PhaseThresholds)
    alternatives: tuple = ALTERNATIVE_MODELS


@dataclass(frozen=True)
class PhaseReport:
    layer_name: str
    shape: tuple  # (N, M), larger dimension first
    q: float
    metrics: LayerMetrics
    mp_fit: Optional[MPFit]
    pl_fit: Optional[PlFit]
    phase_label: str
    phase_rationale: tuple
    warnings: tuple
    tool_version: str = __version__
    seed: Optional[int] = None


@dataclass(frozen=True)
class LayerError:
    layer_name: str
    error: str


def analyze_matrix(matrix: WeightMatrix, seed: Optional[int] = None,
                   options: Optional[AnalysisOptions] = None) -> PhaseReport:
    """Run the full pipeline on one weight matrix.

    Fit failures are downgraded to null fields plus a warning; raises
    SpectradError only when no metrics or no classification is possible.
    """
    opts = options or AnalysisOptions()
    esd = compute_esd(matrix)
    warnings: list = []

    mp_fit = None
    try:
        mp_fit = fit_mp(esd, edge_floor=opts.edge_floor)
    except SpectradError as exc:
        warnings.append(f"mp fit unavailable: {exc}")
    if mp_fit is not None and not mp_fit.converged:
        warnings.append(
            f"mp fit did not stabilize within {mp_fit.iterations} iterations")

    pl_fit = None
    try:
        pl_fit = fit_power_law(esd)
        pl_fit = compare_alternatives(esd, pl_fit, models=opts.alternatives)
    except SpectradError as exc:
        pl_fit = None
        warnings.append(f"power-law fit unavailable: {exc}")
    if pl_fit is not None:
        lo, hi = ALPHA_RELIABLE_RANGE
        if not lo < pl_fit.alpha < hi:
            warnings.append(
                f"alpha={pl_fit.alpha:.3f} outside the reliable fitting "
                f"range ({lo}, {hi}); treat the exponent with caution")
        if pl_fit.mu is not None and 2.0 < pl_fit.mu < 4.0:
            warnings.append(
                "universality class inferred from the infinite-size relation; "
                "finite-size corrections are large for 2 < mu < 4")

    metrics = layer_metrics(matrix, esd, mp_fit, edge_floor=opts.edge_floor)

    evidence = gather_evidence(esd, mp_fit, pl_fit, edge_floor=opts.edge_floor)
    decision = classify(evidence, opts.thresholds)

    return PhaseReport(
        layer_name=matrix.name,
        shape=(esd.n, esd.m),
        q=esd.q,
        metrics=metrics,
        mp_fit=mp_fit,
        pl_fit=pl_fit,
        phase_label=decision.label,
        phase_rationale=decision.rationale,
        warnings=tuple(warnings),
        seed=seed,
    )


def _sidecar_seed(path: Path) -> Optional[int]:
    side = path.with_suffix(".json")
    if not side.is_file():
        return None
    try:
        blob = json.loads(side.read_text())
    except (OSError, json.JSONDecodeError):
        return None
    seed = blob.get("seed") if isinstance(blob, dict) else None
    return seed if isinstance(seed, int) else None


def analyze_file(path: Union[str, Path],
                 options: Optional[AnalysisOptions] = None
                 ) -> Union[PhaseReport, LayerError]:
    path = Path(path)
    try:
        matrix = load_array(path)
        return analyze_matrix(matrix, seed=_sidecar_seed(path), options=options)
    except (SpectradError, OSError) as exc:
        return LayerError(layer_name=path.stem, error=str(exc))


def analyze_manifest(manifest_path: Union[str, Path],
                     options: Optional[AnalysisOptions] = None,
                     jobs: int = 1) -> list:
    """Analyze every layer of a manifest, one result entry per layer.

    Layers that fail to load or to analyze yield LayerError entries in
    place, preserving manifest order.
    """
    manifest_path = Path(manifest_path)
    entries = read_manifest_entries(manifest_path)

    def one(entry: ManifestEntry):
        try:
            matrix = load_manifest_entry(manifest_path, entry)
            seed = _sidecar_seed(manifest_path.parent / entry.file)
            return analyze_matrix(matrix, seed=seed, options=options)
        except SpectradError as exc:
            return LayerError(layer_name=entry.name, error=str(exc))

    if jobs <= 1:
        return [one(e) for e in entries]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, entries))


# ---------------------------------------------------------------------------
# JSON serialization


def _mp_fit_dict(fit: MPFit) -> dict:
    return {
        "sigma_sq": fit.sigma_sq,
        "q": fit.q,
        "lambda_minus": fit.lambda_minus,
        "lambda_plus": fit.lambda_plus,
        "ks_distance": fit.ks_distance,
        "n_bulk": fit.n_bulk,
        "n_excluded": fit.n_excluded,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }


def _pl_fit_dict(fit: PlFit) -> dict:
    return {
        "alpha": fit.alpha,
        "x_min": fit.x_min,
        "ks_distance": fit.ks_distance,
        "n_tail": fit.n_tail,
        "mu": fit.mu,
        "universality_class": fit.universality_class,
        "alternatives": [
            {
                "model": a.model,
                "log_likelihood_ratio": a.log_likelihood_ratio,
                "p_value": a.p_value,
                "preferred": a.preferred,
                "indeterminate": a.indeterminate,
                "params": dict(a.params),
            }
            for a in fit.alternatives
        ],
    }


def report_to_dict(report: PhaseReport) -> dict:
    m = report.metrics
    return {
        "layer_name": report.layer_name,
        "shape": list(report.shape),
        "q": report.q,
        "metrics": {
            "mp_soft_rank": m.mp_soft_rank,
            "stable_rank": m.stable_rank,
            "entropy": m.entropy,
            "lambda_max": m.lambda_max,
            "spike_count": m.spike_count,
            "bulk_ipr_mean": m.bulk_ipr_mean,
            "spike_ipr_mean": m.spike_ipr_mean,
        },
        "mp_fit": None if report.mp_fit is None else _mp_fit_dict(report.mp_fit),
        "pl_fit": None if report.pl_fit is None else _pl_fit_dict(report.pl_fit),
        "phase": {
            "label": report.phase_label,
            "rationale": list(report.phase_rationale),
        },
        "warnings": list(report.warnings),
        "tool_version": report.tool_version,
        "seed": report.seed,
    }


def report_from_dict(blob: dict) -> PhaseReport:
    mp_blob = blob["mp_fit"]
    mp_fit = None if mp_blob is None else MPFit(**mp_blob)
    pl_blob = blob["pl_fit"]
    pl_fit = None
    if pl_blob is not None:
        alts = tuple(
            AlternativeFit(
                model=a["model"],
                log_likelihood_ratio=a["log_likelihood_ratio"],
                p_value=a["p_value"],
                preferred=a["preferred"],
                indeterminate=a["indeterminate"],
                params=dict(a["params"]),
            )
            for a in pl_blob["alternatives"]
        )
        pl_fit = PlFit(
            alpha=pl_blob["alpha"],
            x_min=pl_blob["x_min"],
            ks_distance=pl_blob["ks_distance"],
            n_tail=pl_blob["n_tail"],
            mu=pl_blob["mu"],
            universality_class=pl_blob["universality_class"],
            alternatives=alts,
        )
    mb = blob["metrics"]
    metrics = LayerMetrics(
        mp_soft_rank=mb["mp_soft_rank"],
        stable_rank=mb["stable_rank"],
        entropy=mb["entropy"],
        lambda_max=mb["lambda_max"],
        spike_count=mb["spike_count"],
        bulk_ipr_mean=mb["bulk_ipr_mean"],
        spike_ipr_mean=mb["spike_ipr_mean"],
    )
    return PhaseReport(
        layer_name=blob["layer_name"],
        shape=tuple(blob["shape"]),
        q=blob["q"],
        metrics=metrics,
        mp_fit=mp_fit,
        pl_fit=pl_fit,
        phase_label=blob["phase"]["label"],
        phase_rationale=tuple(blob["phase"]["rationale"]),
        warnings=tuple(blob["warnings"]),
        tool_version=blob["tool_version"],
        seed=blob["seed"],
    )


def results_to_json(results: list, deterministic: bool = False) -> str:
    """Serialize analysis results (reports and error entries) to JSON."""
    layers = []
    for r in results:
        if isinstance(r, LayerError):
            layers.append({"layer_name": r.layer_name, "error": r.error})
        else:
            layers.append(report_to_dict(r))
    doc: dict = {"version": REPORT_VERSION, "layers": layers}
    if not deterministic:
        doc["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return json.dumps(doc, indent=2) + "\n"


def write_report(results: list, path: Union[str, Path],
                 deterministic: bool = False) -> None:
    Path(path).write_text(results_to_json(results, deterministic=deterministic))

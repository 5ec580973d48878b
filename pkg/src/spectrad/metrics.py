"""Scalar capacity metrics derived from a spectrum, plus eigenvector
localization.

All metrics operate on the eigenvalues of (1/N) W^T W.  They are unitless
and comparable across layers of different shapes, which is the point: a
single training run can be summarized as a trajectory of these numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UndefinedMetricError
from .esd import ESD
from .mp import DEFAULT_EDGE_FLOOR, MPFit, edge_tolerance
from .tensor_io import WeightMatrix


def stable_rank(esd: ESD) -> float:
    """Sum of eigenvalues over the largest one; between 1 and m.

    Equals m for a flat spectrum and approaches 1 when a single direction
    dominates.  Raises :class:`UndefinedMetricError` for a zero spectrum.
    """
    top = esd.lambda_max
    if top <= 0.0:
        raise UndefinedMetricError(f"{esd.name!r}: zero spectrum has no stable rank")
    return float(np.sum(esd.eigenvalues) / top)


def spectral_entropy(esd: ESD) -> float:
    """Shannon entropy of the normalized spectrum, scaled to [0, 1].

    Eigenvalues are normalized to a probability vector; entropy is divided
    by ln(m) so 1 means flat and 0 means rank one.  Zero eigenvalues
    contribute nothing (0 * ln 0 = 0).
    """
    total = float(np.sum(esd.eigenvalues))
    if total <= 0.0:
        raise UndefinedMetricError(f"{esd.name!r}: zero spectrum has no entropy")
    m = len(esd.eigenvalues)
    if m == 1:
        return 1.0  # a single eigenvalue is trivially flat
    p = esd.eigenvalues / total
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log(nz)) / np.log(m))


def mp_soft_rank(esd: ESD, fit: MPFit | None) -> float:
    """Bulk edge over the largest eigenvalue, clamped to [0, 1].

    1 means the spectrum is all bulk; small values mean the top eigenvalue
    towers over the fitted bulk.  A missing or unconverged fit yields 0.0
    (no credible bulk edge exists).  Raises :class:`UndefinedMetricError`
    for a zero spectrum.
    """
    top = esd.lambda_max
    if top <= 0.0:
        raise UndefinedMetricError(f"{esd.name!r}: zero spectrum has no soft rank")
    if fit is None or not fit.converged:
        return 0.0
    return float(min(1.0, fit.lambda_plus / top))


def ipr(vector: np.ndarray) -> float:
    """Inverse participation ratio: sum of fourth powers of a unit vector.

    Ranges from 1/len(vector) (perfectly delocalized) to 1 (one-hot).
    The vector must be unit norm to within 1e-8.
    """
    v = np.asarray(vector, dtype=np.float64).ravel()
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"vector must be unit norm, got |v| = {norm}")
    return float(np.sum(v ** 4))


@dataclass(frozen=True)
class LocalizationSummary:
    """Mean IPR of eigenvectors split into bulk and spike groups.

    ``spike_ipr_mean`` is None when no eigenvalue clears the spike
    threshold (including when there is no bulk fit at all).
    """

    bulk_ipr_mean: float
    spike_ipr_mean: float | None
    spike_count: int


def localization_summary(matrix: WeightMatrix | np.ndarray,
                         fit: MPFit | None,
                         edge_floor: float = DEFAULT_EDGE_FLOOR
                         ) -> LocalizationSummary:
    """Localization of the eigenvectors of (1/N) W^T W.

    The eigenvectors are the right singular vectors of W oriented with the
    smaller dimension last.  Eigenvalues above the fitted bulk edge band
    ``lambda_plus * (1 + edge_tolerance)`` count as spikes; without a
    converged fit the spike set is empty.  Heavily localized spike vectors
    (large IPR) indicate an outlier eigenvalue carried by few coordinates
    rather than a distributed direction.
    """
    arr = matrix.array if isinstance(matrix, WeightMatrix) else np.asarray(
        matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"need a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] < arr.shape[1]:
        arr = arr.T
    n, m = arr.shape
    try:
        _, sv, vh = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError("SVD did not converge") from exc
    eigenvalues = (sv * sv) / n  # descending
    iprs = np.sum(vh ** 4, axis=1)
    if fit is not None and fit.converged:
        threshold = fit.lambda_plus * (1.0 + edge_tolerance(m, floor=edge_floor))
        spikes = eigenvalues > threshold
    else:
        spikes = np.zeros(m, dtype=bool)
    spike_count = int(np.sum(spikes))
    bulk = iprs[~spikes]
    return LocalizationSummary(
        bulk_ipr_mean=float(np.mean(bulk)) if len(bulk) else 0.0,
        spike_ipr_mean=float(np.mean(iprs[spikes])) if spike_count else None,
        spike_count=spike_count,
    )


@dataclass(frozen=True)
class LayerMetrics:
    """The full scalar summary of one layer."""

    mp_soft_rank: float
    stable_rank: float
    entropy: float
    lambda_max: float
    spike_count: int
    bulk_ipr_mean: float
    spike_ipr_mean: float | None


def layer_metrics(matrix: WeightMatrix | np.ndarray, esd: ESD,
                  fit: MPFit | None,
                  edge_floor: float = DEFAULT_EDGE_FLOOR) -> LayerMetrics:
    """Assemble every scalar metric for one layer.

    Raises :class:`UndefinedMetricError` for an identically zero matrix,
    where none of the ratios exist.
    """
    loc = localization_summary(matrix, fit, edge_floor=edge_floor)
    return LayerMetrics(
        mp_soft_rank=mp_soft_rank(esd, fit),
        stable_rank=stable_rank(esd),
        entropy=spectral_entropy(esd),
        lambda_max=esd.lambda_max,
        spike_count=loc.spike_count,
        bulk_ipr_mean=loc.bulk_ipr_mean,
        spike_ipr_mean=loc.spike_ipr_mean,
    )

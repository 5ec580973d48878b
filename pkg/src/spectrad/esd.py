"""Empirical spectral densities of weight matrices.

For a weight matrix W with larger dimension N and smaller dimension M, the
spectrum studied everywhere in this package is the eigenvalue set of the
correlation matrix X = (1/N) W^T W, i.e. the squared singular values of W
divided by N.  With this normalization the bulk of a random Gaussian matrix
converges to a fixed support depending only on the aspect ratio Q = N/M >= 1
and the entry variance, so fits and thresholds transfer across layer sizes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError
from .tensor_io import WeightMatrix


@dataclass(frozen=True)
class ESD:
    """Eigenvalues of (1/N) W^T W, sorted ascending, with the matrix shape.

    ``n`` is the larger and ``m`` the smaller matrix dimension; ``m`` equals
    the eigenvalue count for a single matrix (pooled ensembles carry a
    multiple of ``m`` eigenvalues at the same aspect ratio).  Negative
    inputs within 1e-10 of zero relative to the top eigenvalue are clamped
    to 0 (symmetric-roundoff guard); anything more negative is rejected.
    """

    name: str
    eigenvalues: np.ndarray = field(repr=False)
    n: int
    m: int

    def __post_init__(self):
        ev = np.ascontiguousarray(np.asarray(self.eigenvalues, dtype=np.float64))
        if ev.ndim != 1 or ev.size == 0:
            raise ValueError("eigenvalues must be a non-empty 1-D array")
        ev = np.sort(ev)
        top = float(ev[-1]) if ev[-1] > 0.0 else 0.0
        if ev[0] < -1e-10 * top:
            raise ValueError(
                f"eigenvalue {ev[0]} is negative beyond roundoff tolerance"
            )
        ev[ev < 0.0] = 0.0
        ev.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)
        if self.n < self.m:
            raise ValueError(f"need n >= m, got n={self.n}, m={self.m}")

    @property
    def q(self) -> float:
        return self.n / self.m

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def compute_esd(matrix: WeightMatrix | np.ndarray, name: str | None = None) -> ESD:
    """Spectrum of (1/N) W^T W via singular values of W.

    Orientation is normalized internally: N is the larger dimension, so the
    result is identical for W and W^T.  Squared singular values avoid
    forming W^T W, which would square the condition number.  Raises
    :class:`NumericError` if the SVD fails to converge.
    """
    if isinstance(matrix, WeightMatrix):
        arr = matrix.array
        if name is None:
            name = matrix.name
    else:
        arr = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
        if arr.ndim != 2:
            raise ValueError(f"need a 2-D matrix, got shape {arr.shape}")
        if name is None:
            name = "<array>"
    n, m = max(arr.shape), min(arr.shape)
    try:
        sv = np.linalg.svd(arr, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for {name!r}") from exc
    return ESD(name=name, eigenvalues=(sv * sv) / n, n=n, m=m)


@dataclass(frozen=True)
class Histogram:
    """Equal-width density histogram: ``sum(densities * widths) == 1``."""

    bin_edges: np.ndarray
    densities: np.ndarray


def histogram(esd: ESD, n_bins: int = 100,
              value_range: tuple[float, float] | None = None) -> Histogram:
    """Density-normalized histogram of the spectrum.

    Bins span ``[min eigenvalue, max eigenvalue]`` unless ``value_range``
    is given.  A degenerate range (all eigenvalues equal) collapses to a
    single bin of width ``max(value * 1e-6, 1e-12)`` so the density stays
    finite and normalized.
    """
    if n_bins < 1:
        raise ValueError(f"need at least one bin, got {n_bins}")
    ev = esd.eigenvalues
    lo, hi = value_range if value_range is not None else (float(ev[0]), float(ev[-1]))
    if hi <= lo:
        width = max(abs(lo) * 1e-6, 1e-12)
        edges = np.array([lo, lo + width])
        densities = np.array([float(np.mean((ev >= lo) & (ev <= lo + width)))
                              / width])
        return Histogram(bin_edges=edges, densities=densities)
    densities, edges = np.histogram(ev, bins=n_bins, range=(lo, hi), density=True)
    return Histogram(bin_edges=edges, densities=densities)


def empirical_cdf(esd: ESD, x) -> float | np.ndarray:
    """Fraction of eigenvalues at or below x (right-continuous step)."""
    pos = np.searchsorted(esd.eigenvalues, np.asarray(x, dtype=np.float64),
                          side="right")
    out = pos / len(esd.eigenvalues)
    return float(out) if np.ndim(x) == 0 else out


def write_histogram_csv(hist: Histogram, path: str | Path) -> None:
    """Export a histogram as CSV with columns bin_lo, bin_hi, density."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "density"])
        for lo, hi, d in zip(hist.bin_edges[:-1], hist.bin_edges[1:],
                             hist.densities):
            writer.writerow([repr(float(lo)), repr(float(hi)), repr(float(d))])


def pool_esds(esds: list[ESD], name: str = "pooled") -> ESD:
    """Merge the spectra of same-shaped matrices into one ensemble ESD.

    Pooling eigenvalues across independent draws sharpens histogram and
    fit comparisons without changing the limiting density; all inputs must
    agree on (n, m) so the pooled spectrum has a single aspect ratio.
    """
    if not esds:
        raise ValueError("nothing to pool")
    n, m = esds[0].n, esds[0].m
    for e in esds[1:]:
        if (e.n, e.m) != (n, m):
            raise ValueError(
                f"cannot pool shapes ({e.n}, {e.m}) and ({n}, {m})"
            )
    ev = np.concatenate([e.eigenvalues for e in esds])
    return ESD(name=name, eigenvalues=ev, n=n, m=m)

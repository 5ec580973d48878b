"""Marchenko-Pastur bulk law: density, CDF, and robust fitting.

The MP family is parameterized by the entry variance ``sigma_sq`` and the
aspect ratio ``q = n/m >= 1`` of the underlying matrix.  Its support is
``[lambda_minus, lambda_plus]`` with ``lambda_pm = sigma_sq*(1 +- 1/sqrt(q))**2``.

CDF evaluation uses the substitution ``x = c + r*sin(t)`` with ``c`` the
center and ``r`` the half-width of the support, which removes the inverse
square-root edge singularities: the transformed integrand

    g(t) = (q / 2 pi) * r^2 cos^2(t) / (c + r sin(t))

is smooth on [-pi/2, pi/2] even at q = 1 (where it reduces to
``(1 - sin t)/pi``).  The public ``mp_cdf`` integrates g with adaptive
Simpson quadrature to 1e-9; the fitting loop uses a dense cumulative
trapezoid table of g instead, which depends only on q and makes each
sigma_sq trial a single vectorized interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBulkError, DegenerateDataError, InsufficientDataError
from .esd import ESD

DEFAULT_EDGE_FLOOR = 0.05  # minimum relative width of the edge tolerance band


def edge_tolerance(n_eigenvalues: int, floor: float = DEFAULT_EDGE_FLOOR) -> float:
    """Relative half-width of the band above lambda_plus treated as bulk edge.

    Finite-size edge fluctuations scale like m**(-2/3), so the band is
    ``max(floor, 5 * m**(-2/3))``; eigenvalues inside it are not called
    spikes.  The floor guards small spectra where even that scale is tiny.
    """
    if n_eigenvalues < 1:
        raise ValueError("need at least one eigenvalue")
    return max(floor, 5.0 * n_eigenvalues ** (-2.0 / 3.0))


def mp_edges(sigma_sq: float, q: float) -> tuple[float, float]:
    """Support endpoints (lambda_minus, lambda_plus) of the MP law."""
    if sigma_sq < 0:
        raise ValueError(f"sigma_sq must be >= 0, got {sigma_sq}")
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    s = 1.0 / np.sqrt(q)
    return sigma_sq * (1.0 - s) ** 2, sigma_sq * (1.0 + s) ** 2


def mp_density(lam, sigma_sq: float, q: float):
    """MP probability density, vectorized over ``lam``; zero off-support.

    Density is ``q/(2 pi sigma_sq) * sqrt((l+ - x)(x - l-)) / x`` inside the
    open support interval.  For q = 1 the density diverges as x -> 0+; the
    value at exactly 0 is reported as 0 (an endpoint, not an interior point).
    """
    lo, hi = mp_edges(sigma_sq, q)
    x = np.asarray(lam, dtype=np.float64)
    out = np.zeros_like(x)
    inside = (x > lo) & (x < hi) & (x > 0.0)
    xi = x[inside]
    out[inside] = (q / (2.0 * np.pi * sigma_sq)
                   * np.sqrt((hi - xi) * (xi - lo)) / xi)
    return out if out.ndim else float(out)


def _trig_integrand(t: np.ndarray, q: float) -> np.ndarray:
    # standard (sigma_sq = 1) MP density after x = c + r sin t
    c = 1.0 + 1.0 / q
    r = 2.0 / np.sqrt(q)
    denom = c + r * np.sin(t)
    # denom can reach 0 only in the square-aspect case (q = 1, t = -pi/2)
    # where cos^2 t vanishes at the same rate; there the ratio simplifies
    # algebraically to c - r sin t, which is also the two-sided limit.
    safe = np.maximum(denom, 1e-12)
    raw = r * r * np.cos(t) ** 2 / safe
    out = np.where(denom > 1e-12, raw, c - r * np.sin(t))
    return (q / (2.0 * np.pi)) * out


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    fa, fm, fb = f(a), f((a + b) / 2.0), f(b)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2.0
        lm, rm = (a + m) / 2.0, (m + b) / 2.0
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if depth <= 0 or not (abs(err) > 15.0 * tol):  # NaN stops recursion too
            return left + right + err / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2.0, depth - 1))

    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 50)


def mp_cdf(lam, sigma_sq: float, q: float):
    """MP cumulative distribution, adaptive Simpson to 1e-9, vectorized."""
    lo, hi = mp_edges(sigma_sq, q)
    if sigma_sq == 0.0:
        x = np.asarray(lam, dtype=np.float64)
        out = np.where(x >= 0.0, 1.0, 0.0)  # point mass at zero
        return out if out.ndim else float(out)
    c = 1.0 + 1.0 / q
    r = 2.0 / np.sqrt(q)

    def scalar(x: float) -> float:
        if x <= lo:
            return 0.0
        if x >= hi:
            return 1.0
        u = (x / sigma_sq - c) / r
        top = float(np.arcsin(min(1.0, max(-1.0, u))))
        val = _adaptive_simpson(lambda t: _trig_integrand(np.asarray(t), q),
                                -np.pi / 2.0, top, 1e-9)
        return min(1.0, max(0.0, val))

    x = np.asarray(lam, dtype=np.float64)
    if x.ndim == 0:
        return scalar(float(x))
    return np.array([scalar(v) for v in x.ravel()]).reshape(x.shape)


class MPTable:
    """Dense CDF table of the standard (sigma_sq = 1) MP law for one q.

    Built once per fit: 16385 trapezoid nodes of the smooth trig-space
    integrand, renormalized so the last entry is exactly 1.  ``cdf`` then
    costs one arcsin plus one interpolation per point, and scaling by
    sigma_sq is exact because sigma_sq enters only through x / sigma_sq.
    """

    _NODES = 16385

    def __init__(self, q: float):
        if q < 1:
            raise ValueError(f"q must be >= 1, got {q}")
        self.q = float(q)
        self._c = 1.0 + 1.0 / q
        self._r = 2.0 / np.sqrt(q)
        t = np.linspace(-np.pi / 2.0, np.pi / 2.0, self._NODES)
        g = _trig_integrand(t, q)
        cum = np.concatenate(([0.0], np.cumsum((g[1:] + g[:-1]) * np.diff(t) / 2.0)))
        self._t = t
        self._cum = cum / cum[-1]

    def cdf(self, x: np.ndarray, sigma_sq: float) -> np.ndarray:
        u = np.clip((np.asarray(x, dtype=np.float64) / sigma_sq - self._c) / self._r,
                    -1.0, 1.0)
        return np.interp(np.arcsin(u), self._t, self._cum)

    def quantile(self, p: float, sigma_sq: float) -> float:
        t = np.interp(p, self._cum, self._t)
        return float(sigma_sq * (self._c + self._r * np.sin(t)))


def mp_median(sigma_sq: float, q: float) -> float:
    """Median of the MP law (table inversion, accurate to ~1e-8)."""
    return MPTable(q).quantile(0.5, sigma_sq)


def ks_distance(sorted_values: np.ndarray, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance of a sorted sample to a CDF.

    ``cdf`` is either a callable evaluated at the sample points or an array
    of precomputed CDF values aligned with ``sorted_values``.  Both step
    sides of the empirical CDF are compared, the standard evaluation at the
    discontinuities.
    """
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty sample")
    cdf_values = np.asarray(cdf(sorted_values) if callable(cdf) else cdf,
                            dtype=np.float64)
    i = np.arange(1, n + 1, dtype=np.float64)
    d_plus = np.max(i / n - cdf_values)
    d_minus = np.max(cdf_values - (i - 1.0) / n)
    return float(max(d_plus, d_minus))


@dataclass(frozen=True)
class MPFit:
    """Result of fitting the MP bulk to a spectrum.

    ``n_bulk`` eigenvalues were retained under the edge band and fitted;
    ``n_excluded`` sat above it (spike and bleed candidates); the two sum
    to the spectrum size.
    """

    sigma_sq: float
    q: float
    lambda_minus: float
    lambda_plus: float
    ks_distance: float
    n_bulk: int
    n_excluded: int
    iterations: int
    converged: bool


def _golden_min(f, a: float, b: float, tol: float = 1e-8) -> tuple[float, float]:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol * (abs(a) + abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def fit_mp(esd: ESD, max_iterations: int = 20, n_min: int = 20,
           edge_floor: float = DEFAULT_EDGE_FLOOR) -> MPFit:
    """Fit sigma_sq of the MP bulk by KS minimization with spike exclusion.

    Protocol:

    1. Initialize ``sigma_sq`` from the sample median divided by the
       standard MP median for this q (medians are robust to spikes).
    2. Retain eigenvalues at or below ``lambda_plus * (1 + edge_tolerance)``.
    3. Minimize the KS distance between the retained sample's ECDF and the
       MP CDF over a fixed bracket ``[0.2, 2.0] * initial sigma_sq``
       (log-grid presearch, then golden-section refinement).
    4. Repeat from 2 with the new sigma_sq until the retained set stops
       changing or ``max_iterations`` is hit (then ``converged=False``).

    Raises :class:`InsufficientDataError` for spectra with fewer than
    ``n_min`` eigenvalues, :class:`DegenerateDataError` when the sample
    median is zero, and :class:`DegenerateBulkError` when exclusion leaves
    fewer than ``n_min`` eigenvalues to fit.
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    ev = esd.eigenvalues  # ascending
    n_total = len(ev)
    if n_total < n_min:
        raise InsufficientDataError(
            f"{esd.name!r}: need at least {n_min} eigenvalues, have {n_total}"
        )
    med = float(np.median(ev))
    if med <= 0.0:
        raise DegenerateDataError(
            f"{esd.name!r}: sample median is zero, no bulk to fit"
        )
    q = esd.q
    delta = edge_tolerance(n_total, floor=edge_floor)
    table = MPTable(q)
    s0 = med / table.quantile(0.5, 1.0)
    lo_s, hi_s = 0.2 * s0, 2.0 * s0
    _, b_plus = mp_edges(1.0, q)  # lambda_plus = b_plus * sigma_sq

    def retained_count(sigma_sq: float) -> int:
        return int(np.searchsorted(ev, b_plus * sigma_sq * (1.0 + delta),
                                   side="right"))

    def ks_of(sigma_sq: float, sample: np.ndarray) -> float:
        return ks_distance(sample, table.cdf(sample, sigma_sq))

    sigma_sq = s0
    count = retained_count(sigma_sq)
    best_ks = np.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        if count < n_min:
            raise DegenerateBulkError(
                f"{esd.name!r}: only {count} eigenvalues under the bulk edge, "
                f"need {n_min}"
            )
        sample = ev[:count]
        grid = np.geomspace(lo_s, hi_s, 25)
        ks_grid = np.array([ks_of(s, sample) for s in grid])
        j = int(np.argmin(ks_grid))
        a = grid[max(0, j - 1)]
        b = grid[min(len(grid) - 1, j + 1)]
        sigma_sq, best_ks = _golden_min(lambda s: ks_of(s, sample), a, b)
        new_count = retained_count(sigma_sq)
        if new_count == count:
            converged = True
            break
        count = new_count

    if count < n_min:
        raise DegenerateBulkError(
            f"{esd.name!r}: only {count} eigenvalues under the bulk edge, "
            f"need {n_min}"
        )
    if not converged:  # keep ks consistent with the final retained set
        best_ks = ks_of(sigma_sq, ev[:count])
    lo_edge, hi_edge = mp_edges(sigma_sq, q)
    return MPFit(
        sigma_sq=float(sigma_sq),
        q=float(q),
        lambda_minus=lo_edge,
        lambda_plus=hi_edge,
        ks_distance=float(best_ks),
        n_bulk=count,
        n_excluded=n_total - count,
        iterations=iterations,
        converged=converged,
    )

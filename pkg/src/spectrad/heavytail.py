"""Power-law tail fitting and model comparison for eigenvalue spectra.

The tail fit follows the continuous maximum-likelihood recipe: for a cutoff
``x_min`` the exponent MLE is ``alpha = 1 + n / sum(ln(x_i / x_min))`` over
the tail ``x_i >= x_min``, and ``x_min`` itself is chosen to minimize the
KS distance between the tail sample and the fitted power law.  A fitted
power law is then stress-tested against alternative tail families with a
normalized log-likelihood-ratio test; an alternative is *preferred* only
when the ratio favors it and the two-sided normal p-value is at most 0.05.

The eigenvalue-tail exponent maps to an entry-distribution tail exponent
``mu = 2*(alpha - 1)`` (eigenvalues are squared singular values, which
halves tail exponents in the large-size limit); ``mu`` buckets the matrix
into one of three universality classes.  For 2 < mu < 4 this limiting
relation carries large finite-size corrections, so for matrices in that
range only the raw-sample exponent recovery and the lambda_max growth law
are treated as quantitative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateDataError, InsufficientDataError
from .esd import ESD
from .mp import ks_distance

N_TAIL_MIN = 10
ALTERNATIVE_MODELS = ("truncated_pl", "exponential", "lognormal",
                      "stretched_exponential")
ALPHA_RELIABLE_RANGE = (1.5, 3.5)  # outside it the MLE is known to drift


@dataclass(frozen=True)
class AlternativeFit:
    """Comparison of the fitted power law against one alternative family.

    ``log_likelihood_ratio`` is the normalized statistic
    ``sum(d_i) / (sqrt(n) * std(d_i))`` with ``d_i`` the pointwise log
    density difference (power law minus alternative); negative values favor
    the alternative.  ``preferred`` means the alternative beats the power
    law at the 0.05 level.  ``indeterminate`` marks comparisons where the
    alternative's MLE failed or the two densities coincide on the tail.
    """

    model: str
    log_likelihood_ratio: float
    p_value: float
    preferred: bool
    indeterminate: bool = False
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class PlFit:
    """Power-law tail fit plus its implied universality bucket."""

    alpha: float
    x_min: float
    ks_distance: float
    n_tail: int
    mu: float
    universality_class: str
    alternatives: tuple[AlternativeFit, ...] = ()


def classify_universality(alpha: float) -> tuple[float, str]:
    """Map an eigenvalue-tail exponent to (mu, universality class).

    ``mu = 2*(alpha - 1)``.  Classes: ``very_ht`` for mu <= 2 (infinite
    entry variance, the whole spectrum is power-law), ``moderately_ht`` for
    2 < mu <= 4 (finite variance, blurred bulk edge), ``weakly_ht`` for
    mu > 4 (bulk-plus-edge shape returns at finite size).
    """
    if not np.isfinite(alpha) or alpha <= 1.0:
        raise ValueError(f"tail exponent must be > 1, got {alpha}")
    mu = 2.0 * (alpha - 1.0)
    if mu <= 2.0:
        return mu, "very_ht"
    if mu <= 4.0:
        return mu, "moderately_ht"
    return mu, "weakly_ht"


def fit_power_law_samples(values: np.ndarray,
                          n_tail_min: int = N_TAIL_MIN) -> PlFit:
    """KS-optimal power-law fit to the upper tail of a positive sample.

    Candidate cutoffs are every distinct positive value when the sample has
    at most 1000 of them, otherwise 100 quantiles of the positive values at
    probabilities 0, ..., 0.95 (capped so tails keep at least a few dozen
    points).  Ties in KS distance resolve to the smallest cutoff.  Raises
    :class:`InsufficientDataError` when fewer than ``n_tail_min`` positive
    values exist and :class:`DegenerateDataError` when no cutoff leaves a
    tail with any spread.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    pos = np.sort(vals[vals > 0.0])
    if len(pos) < n_tail_min:
        raise InsufficientDataError(
            f"need {n_tail_min} positive values for a tail fit, have {len(pos)}"
        )
    if len(pos) <= 1000:
        candidates = np.unique(pos)
    else:
        candidates = np.unique(np.quantile(pos, np.linspace(0.0, 0.95, 100)))

    log_pos = np.log(pos)
    best: tuple[float, float, float, int] | None = None  # (d, x_min, alpha, n)
    for x_min in candidates:
        start = int(np.searchsorted(pos, x_min, side="left"))
        n = len(pos) - start
        if n < n_tail_min:
            break  # candidates ascend, later tails only shrink
        log_ratio = log_pos[start:] - math.log(x_min)
        s = float(np.sum(log_ratio))
        if s <= 0.0:
            continue  # whole tail tied at x_min, exponent undefined
        alpha = 1.0 + n / s
        cdf = 1.0 - np.exp((1.0 - alpha) * log_ratio)
        d = ks_distance(pos[start:], cdf)
        if best is None or d < best[0]:
            best = (d, float(x_min), alpha, n)
    if best is None:
        raise DegenerateDataError("no cutoff gives a tail with nonzero spread")
    d, x_min, alpha, n = best
    mu, cls = classify_universality(alpha)
    return PlFit(alpha=alpha, x_min=x_min, ks_distance=d, n_tail=n,
                 mu=mu, universality_class=cls)


def fit_power_law(esd: ESD, n_tail_min: int = N_TAIL_MIN) -> PlFit:
    """Power-law fit to the tail of a spectrum's eigenvalues."""
    return fit_power_law_samples(esd.eigenvalues, n_tail_min=n_tail_min)


def frechet_scaling_exponent(esds: list[ESD]) -> float:
    """Growth exponent of the top eigenvalue with matrix size.

    Least-squares slope of ln(lambda_max) against ln(m) over spectra that
    share an aspect ratio but vary in size (repeats per size are fine and
    simply add points).  Near 0 for finite-variance entries, positive and
    mu-dependent for heavy tails.  Uses the centered covariance formula, so
    identical lambda_max across sizes gives exactly 0.0.
    """
    if len(esds) < 3:
        raise InsufficientDataError(
            f"need at least 3 spectra to estimate a slope, have {len(esds)}"
        )
    qs = np.array([e.q for e in esds])
    if np.max(qs) - np.min(qs) > 0.01 * np.min(qs):
        raise ValueError("spectra must share a single aspect ratio")
    tops = np.array([e.lambda_max for e in esds])
    if np.any(tops <= 0.0):
        raise ValueError("every spectrum needs lambda_max > 0")
    x = np.log(np.array([e.m for e in esds], dtype=np.float64))
    y = np.log(tops)
    dx = x - x.mean()
    denom = float(np.dot(dx, dx))
    if denom == 0.0:
        raise ValueError("all spectra have the same size, slope undefined")
    return float(np.dot(dx, y - y.mean()) / denom)


# ---------------------------------------------------------------------------
# Alternative tail families, all conditioned on [x_min, infinity)

def _pl_logpdf(x: np.ndarray, x_min: float, alpha: float) -> np.ndarray:
    return (math.log(alpha - 1.0) - math.log(x_min)
            - alpha * np.log(x / x_min))


def _fit_exponential(x: np.ndarray, x_min: float):
    # shifted exponential has a closed-form MLE
    excess = float(np.mean(x)) - x_min
    if excess <= 0.0:
        return None
    rate = 1.0 / excess
    logpdf = math.log(rate) - rate * (x - x_min)
    return {"rate": rate}, logpdf


def _minimize_restarts(nll, theta0: np.ndarray):
    best = None
    for shift in (0.0, 0.5, -0.5):
        res = optimize.minimize(nll, theta0 + shift, method="Nelder-Mead",
                                options={"maxiter": 2000, "xatol": 1e-8,
                                         "fatol": 1e-10})
        if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
            best = res
    return best


def _tpl_norm(a: float, scale: float) -> float:
    # integral of u**-a * exp(-scale*(u-1)) over u in [1, inf)
    val, _ = integrate.quad(
        lambda u: u ** (-a) * math.exp(-scale * (u - 1.0)),
        1.0, np.inf, limit=200)
    return val


def _fit_truncated_pl(x: np.ndarray, x_min: float, alpha0: float):
    log_ratio = np.log(x / x_min)
    sum_log = float(np.sum(log_ratio))
    sum_excess = float(np.sum(x - x_min)) / x_min

    def nll(theta):
        a, log_l = theta
        if abs(log_l) > 50.0 or abs(a) > 50.0:
            return np.inf
        scale = x_min / math.exp(log_l)  # x_min / cutoff
        if scale > 700.0:
            return np.inf
        try:
            z = _tpl_norm(a, scale)
        except Exception:
            return np.inf
        if not np.isfinite(z) or z <= 0.0:
            return np.inf
        return (len(x) * (math.log(z) + math.log(x_min))
                + a * sum_log + scale * sum_excess)

    theta0 = np.array([alpha0, math.log(max(float(np.max(x)), x_min) * 2.0)])
    res = _minimize_restarts(nll, theta0)
    if res is None:
        return None
    a, log_l = res.x
    scale = x_min / math.exp(log_l)
    z = _tpl_norm(a, scale)
    logpdf = (-a * log_ratio - scale * (x - x_min) / x_min
              - math.log(z) - math.log(x_min))
    return {"exponent": float(a), "cutoff": float(math.exp(log_l))}, logpdf


def _fit_lognormal(x: np.ndarray, x_min: float):
    log_x = np.log(x)

    def logpdf_for(center, spread):
        tail_mass = 0.5 * math.erfc(
            (math.log(x_min) - center) / (spread * math.sqrt(2.0)))
        if tail_mass <= 0.0:
            return None
        return (-log_x - math.log(spread) - 0.5 * math.log(2.0 * math.pi)
                - 0.5 * ((log_x - center) / spread) ** 2
                - math.log(tail_mass))

    def nll(theta):
        center, log_spread = theta
        if abs(log_spread) > 20.0:
            return np.inf
        lp = logpdf_for(center, math.exp(log_spread))
        return np.inf if lp is None else -float(np.sum(lp))

    spread0 = max(float(np.std(log_x)), 1e-3)
    res = _minimize_restarts(nll, np.array([float(np.mean(log_x)),
                                            math.log(spread0)]))
    if res is None:
        return None
    center, log_spread = res.x
    lp = logpdf_for(center, math.exp(log_spread))
    if lp is None:
        return None
    return {"log_mean": float(center), "log_std": float(math.exp(log_spread))}, lp


def _fit_stretched_exponential(x: np.ndarray, x_min: float):
    def logpdf_for(beta, s):
        with np.errstate(over="raise"):
            try:
                powered = (x / s) ** beta
                ref = (x_min / s) ** beta
            except FloatingPointError:
                return None
        return (math.log(beta) - math.log(s) + (beta - 1.0) * np.log(x / s)
                - powered + ref)

    def nll(theta):
        log_beta, log_s = theta
        if abs(log_beta) > 10.0 or abs(log_s) > 50.0:
            return np.inf
        lp = logpdf_for(math.exp(log_beta), math.exp(log_s))
        if lp is None:
            return np.inf
        total = -float(np.sum(lp))
        return total if np.isfinite(total) else np.inf

    res = _minimize_restarts(nll, np.array([0.0, math.log(float(np.mean(x)))]))
    if res is None:
        return None
    beta, s = math.exp(res.x[0]), math.exp(res.x[1])
    lp = logpdf_for(beta, s)
    if lp is None:
        return None
    return {"shape": float(beta), "scale": float(s)}, lp


def compare_alternatives(data: ESD | np.ndarray, fit: PlFit,
                         models=ALTERNATIVE_MODELS) -> PlFit:
    """Fit alternative families on the same tail and attach ratio tests.

    ``data`` is the spectrum or raw sample the power law was fitted to.
    Returns a copy of ``fit`` with one :class:`AlternativeFit` per model;
    families whose MLE degenerates on this tail come back marked
    indeterminate rather than silently dropped.
    """
    values = data.eigenvalues if isinstance(data, ESD) else np.asarray(
        data, dtype=np.float64).ravel()
    tail = np.sort(values[values >= fit.x_min])
    n = len(tail)
    pl_lp = _pl_logpdf(tail, fit.x_min, fit.alpha) if n else None

    fitters = {
        "truncated_pl": lambda: _fit_truncated_pl(tail, fit.x_min, fit.alpha),
        "exponential": lambda: _fit_exponential(tail, fit.x_min),
        "lognormal": lambda: _fit_lognormal(tail, fit.x_min),
        "stretched_exponential": lambda: _fit_stretched_exponential(
            tail, fit.x_min),
    }
    results = []
    for model in models:
        fitted = fitters[model]() if n >= 2 else None
        if fitted is None:
            results.append(AlternativeFit(
                model=model, log_likelihood_ratio=0.0, p_value=1.0,
                preferred=False, indeterminate=True))
            continue
        params, alt_lp = fitted
        d = pl_lp - alt_lp
        sd = float(np.std(d))
        if sd < 1e-12 or not np.all(np.isfinite(d)):
            results.append(AlternativeFit(
                model=model, log_likelihood_ratio=0.0, p_value=1.0,
                preferred=False, indeterminate=True, params=params))
            continue
        ratio = float(np.sum(d)) / (math.sqrt(n) * sd)
        p = math.erfc(abs(ratio) / math.sqrt(2.0))
        results.append(AlternativeFit(
            model=model, log_likelihood_ratio=ratio, p_value=p,
            preferred=bool(ratio < 0.0 and p <= 0.05), params=params))
    return replace(fit, alternatives=tuple(results))

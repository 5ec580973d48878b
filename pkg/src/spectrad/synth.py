"""Seeded synthetic weight matrices with known spectral ground truth.

Every generator is a pure function of a :class:`SynthSpec`; all randomness
comes from one :class:`~spectrad.rng.DeterministicStream` keyed by the
spec's seed, with a fixed documented draw order, so outputs are bitwise
reproducible.

Spike-strength scaling: a spike of strength ``s`` is planted so that the
resulting outlier eigenvalue of (1/N) W^T W lands near ``s**2``.  For a
rank-1 perturbation ``theta * u v^T`` on top of variance-``sigma_sq`` noise,
the displaced eigenvalue is

    lambda(z) = sigma_sq * (1 + z) * (1 + 1/(q*z)),    z = theta**2 / (sigma_sq * N)

valid above the detachment point z = 1/sqrt(q).  Targets above the bulk
edge invert this closed form for theta; targets at or below the edge
cannot detach no matter the theta, so they are planted at a proportionally
sub-detachment z (and a warning records that the spike will be absorbed).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .mp import edge_tolerance, mp_edges
from .rng import DeterministicStream
from .tensor_io import WeightMatrix

KINDS = ("gaussian", "spiked", "pareto", "bleed", "bulk_decay_mix",
         "rank_collapsed")

BLEED_RANK = 50            # rank of the near-threshold perturbation
BLEED_STRENGTH_RANGE = (1.0, 1.2)  # multiples of the detection threshold
MIX_WEIGHT = 0.5           # heavy-tail share in the spectral mix
MIX_MU_DEFAULT = 2.5
MIX_SPIKE_TARGETS = (12.0, 18.0)  # in units of the Gaussian bulk edge


@dataclass(frozen=True)
class SpikeSpec:
    """One planted spike: target-eigenvalue strength and optional sparsity
    (support size of the signal vectors; dense when None)."""

    strength: float
    sparsity: Optional[int] = None


def _coerce_spike(s) -> SpikeSpec:
    if isinstance(s, SpikeSpec):
        return s
    if isinstance(s, (tuple, list)):
        sparsity = None if len(s) < 2 or s[1] is None else int(s[1])
        return SpikeSpec(float(s[0]), sparsity)
    return SpikeSpec(float(s))


@dataclass(frozen=True)
class SynthSpec:
    """Full description of one synthetic matrix; the seed pins every bit."""

    kind: str
    n_rows: int
    n_cols: int
    sigma_sq: float = 1.0
    mu: Optional[float] = None
    spikes: Optional[tuple[SpikeSpec, ...]] = None
    zero_fraction: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.n_rows < 2 or self.n_cols < 2:
            raise ValueError("matrix must be at least 2x2")
        if self.sigma_sq <= 0.0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq}")
        if self.kind == "pareto" and (self.mu is None or self.mu <= 0.0):
            raise ValueError("pareto matrices need a positive mu")
        if self.kind == "spiked":
            if not self.spikes:
                raise ValueError("spiked matrices need at least one spike")
        if self.spikes is not None:
            spikes = tuple(_coerce_spike(s) for s in self.spikes)
            for s in spikes:
                if s.strength <= 0.0:
                    raise ValueError("spike strengths must be positive")
                if s.sparsity is not None and s.sparsity < 1:
                    raise ValueError("spike sparsity must be >= 1")
            object.__setattr__(self, "spikes", spikes)
        if self.kind == "rank_collapsed":
            if self.zero_fraction is None or not 0.0 <= self.zero_fraction <= 1.0:
                raise ValueError("rank_collapsed needs zero_fraction in [0, 1]")

    def to_dict(self) -> dict:
        out = asdict(self)
        if out["spikes"] is not None:
            out["spikes"] = [
                {k: v for k, v in s.items() if v is not None}
                for s in out["spikes"]
            ]
        return {k: v for k, v in out.items() if v is not None}


def spike_position(z: float, sigma_sq: float, q: float) -> float:
    """Outlier eigenvalue produced by a rank-1 perturbation at level z.

    Valid for z >= 1/sqrt(q); below that the perturbation is absorbed into
    the bulk and no outlier exists.
    """
    if z <= 0.0:
        raise ValueError(f"z must be positive, got {z}")
    return sigma_sq * (1.0 + z) * (1.0 + 1.0 / (q * z))


def spike_coefficient(target: float, sigma_sq: float, n_rows: int,
                      n_cols: int) -> tuple[float, bool]:
    """Perturbation coefficient theta placing an outlier near ``target``.

    Returns ``(theta, detaches)``.  Supercritical targets (above the bulk
    edge) invert the displacement formula exactly; subcritical targets map
    linearly below the detachment level, guaranteeing absorption.
    """
    if target <= 0.0:
        raise ValueError(f"target eigenvalue must be positive, got {target}")
    n, m = max(n_rows, n_cols), min(n_rows, n_cols)
    q = n / m
    _, lam_plus = mp_edges(sigma_sq, q)
    z_c = 1.0 / math.sqrt(q)
    if target > lam_plus:
        y = target / sigma_sq
        b = y - 1.0 - 1.0 / q
        z = 0.5 * (b + math.sqrt(max(b * b - 4.0 / q, 0.0)))
        detaches = True
    else:
        z = z_c * (target / lam_plus)
        detaches = False
    return math.sqrt(sigma_sq * z * n), detaches


def _plant_spikes(arr: np.ndarray, spikes, sigma_sq: float,
                  stream: DeterministicStream, warn: bool = True) -> None:
    n_rows, n_cols = arr.shape
    for spike in spikes:
        target = spike.strength ** 2
        theta, detaches = spike_coefficient(target, sigma_sq, n_rows, n_cols)
        if warn and not detaches:
            _, lam_plus = mp_edges(sigma_sq, max(n_rows, n_cols) / min(n_rows, n_cols))
            warnings.warn(
                f"spike strength {spike.strength:g} targets eigenvalue "
                f"{target:g} at or below the bulk edge {lam_plus:g}; it will "
                f"be absorbed", RuntimeWarning, stacklevel=3)
        u = stream.unit_vector(n_rows, support=spike.sparsity)
        v = stream.unit_vector(n_cols, support=spike.sparsity)
        arr += theta * np.outer(u, v)


def gen_gaussian(spec: SynthSpec) -> WeightMatrix:
    """i.i.d. normal entries with variance ``sigma_sq``."""
    stream = DeterministicStream(spec.seed)
    arr = stream.normals(spec.n_rows * spec.n_cols,
                         sigma=math.sqrt(spec.sigma_sq))
    return WeightMatrix(name=f"gaussian-{spec.seed}",
                        array=arr.reshape(spec.n_rows, spec.n_cols))


def gen_spiked(spec: SynthSpec) -> WeightMatrix:
    """Gaussian noise plus rank-k signal, one rank per spike.

    Draw order: all noise entries, then per spike (in listed order) the
    row-space then column-space signal vector.  Each spike of strength s
    aims its outlier eigenvalue at s**2 (see module docstring); strengths
    whose square does not clear the bulk edge trigger an absorption
    warning.
    """
    stream = DeterministicStream(spec.seed)
    arr = stream.normals(spec.n_rows * spec.n_cols,
                         sigma=math.sqrt(spec.sigma_sq)
                         ).reshape(spec.n_rows, spec.n_cols)
    _plant_spikes(arr, spec.spikes, spec.sigma_sq, stream)
    return WeightMatrix(name=f"spiked-{spec.seed}", array=arr)


def gen_pareto(spec: SynthSpec) -> WeightMatrix:
    """i.i.d. symmetric heavy-tailed entries: sign * Pareto(mu).

    Draw order: all magnitudes, then all signs.
    """
    stream = DeterministicStream(spec.seed)
    count = spec.n_rows * spec.n_cols
    arr = stream.pareto(count, spec.mu) * stream.signs(count)
    return WeightMatrix(name=f"pareto-{spec.seed}",
                        array=arr.reshape(spec.n_rows, spec.n_cols))


def gen_bleed(spec: SynthSpec) -> WeightMatrix:
    """Gaussian plus a rank-50 perturbation hugging the detection edge.

    Strengths are drawn uniformly in [1.0, 1.2] times the empirically
    located detection threshold (see :func:`bpp_threshold_strength`), so
    the planted eigenvalues smear across the bulk edge band instead of
    separating cleanly.  Draw order: noise entries, the 50 strength
    uniforms, then per perturbation the two signal vectors.
    """
    stream = DeterministicStream(spec.seed)
    arr = stream.normals(spec.n_rows * spec.n_cols,
                         sigma=math.sqrt(spec.sigma_sq)
                         ).reshape(spec.n_rows, spec.n_cols)
    s_threshold = bpp_threshold_strength(spec.n_rows, spec.n_cols,
                                         spec.sigma_sq)
    lo, hi = BLEED_STRENGTH_RANGE
    strengths = (lo + (hi - lo) * stream.uniforms(BLEED_RANK)) * s_threshold
    spikes = tuple(SpikeSpec(float(s)) for s in strengths)
    _plant_spikes(arr, spikes, spec.sigma_sq, stream, warn=False)
    return WeightMatrix(name=f"bleed-{spec.seed}", array=arr)


def gen_bulk_decay_mix(spec: SynthSpec) -> WeightMatrix:
    """Spectrum mixing a Gaussian and a heavy-tailed matrix half-and-half.

    One plausible realization of a decaying bulk: the spectrum is a convex
    mixture (as a measure, weight 0.5) of the singular spectra of a
    Gaussian matrix and a Pareto matrix (mu defaults to 2.5) of the same
    shape — every other rank, counted from the top, takes its singular
    value from the heavy spectrum, the rest keep the Gaussian's — rebuilt
    on the Gaussian's singular vectors.  The combined bulk is the shelf of
    two incompatible edges and fits no single MP law cleanly, while the
    decaying upper reach of the heavy half denies the tail a clean power
    law.  Two strong spikes (targets 12x and 18x the Gaussian bulk edge)
    are added on top.  Draw order: Gaussian entries, Pareto magnitudes,
    Pareto signs, then spike vectors.
    """
    stream = DeterministicStream(spec.seed)
    count = spec.n_rows * spec.n_cols
    gauss = stream.normals(count, sigma=math.sqrt(spec.sigma_sq)
                           ).reshape(spec.n_rows, spec.n_cols)
    mu = spec.mu if spec.mu is not None else MIX_MU_DEFAULT
    heavy = (stream.pareto(count, mu) * stream.signs(count)
             ).reshape(spec.n_rows, spec.n_cols)
    u, s_gauss, vh = np.linalg.svd(gauss, full_matrices=False)
    s_heavy = np.linalg.svd(heavy, compute_uv=False)
    s_mix = s_gauss.copy()
    ranks = np.arange(len(s_mix))
    # weight w puts floor((i+1)w) - floor(iw) heavy ranks in each unit
    # stride; rank 0 (the top) always stays Gaussian so the extreme
    # eigenvalue is set by the planted spikes, not the heavy fringe
    take = (np.floor((ranks + 1) * MIX_WEIGHT)
            - np.floor(ranks * MIX_WEIGHT)) > 0
    s_mix[take] = s_heavy[take]
    s_mix = np.sort(s_mix)[::-1]
    arr = (u * s_mix) @ vh

    if spec.spikes is not None:
        spikes = spec.spikes
    else:
        q = max(spec.n_rows, spec.n_cols) / min(spec.n_rows, spec.n_cols)
        _, lam_plus = mp_edges(spec.sigma_sq, q)
        spikes = tuple(SpikeSpec(math.sqrt(c * lam_plus))
                       for c in MIX_SPIKE_TARGETS)
    _plant_spikes(arr, spikes, spec.sigma_sq, stream, warn=False)
    return WeightMatrix(name=f"bulk_decay_mix-{spec.seed}", array=arr)


def gen_rank_collapsed(spec: SynthSpec) -> WeightMatrix:
    """Gaussian matrix with a random subset of singular values zeroed.

    ``ceil(zero_fraction * M)`` of the M singular values, chosen uniformly,
    are set to zero via SVD reconstruction, so the zero eigenvalue mass is
    exact by construction.  Draw order: noise entries, then the subset.
    """
    stream = DeterministicStream(spec.seed)
    arr = stream.normals(spec.n_rows * spec.n_cols,
                         sigma=math.sqrt(spec.sigma_sq)
                         ).reshape(spec.n_rows, spec.n_cols)
    m = min(spec.n_rows, spec.n_cols)
    n_zero = math.ceil(spec.zero_fraction * m)
    u, s, vh = np.linalg.svd(arr, full_matrices=False)
    idx = stream.subset(m, n_zero)
    s = s.copy()
    s[idx] = 0.0
    return WeightMatrix(name=f"rank_collapsed-{spec.seed}",
                        array=(u * s) @ vh)


_GENERATORS = {
    "gaussian": gen_gaussian,
    "spiked": gen_spiked,
    "pareto": gen_pareto,
    "bleed": gen_bleed,
    "bulk_decay_mix": gen_bulk_decay_mix,
    "rank_collapsed": gen_rank_collapsed,
}


def generate(spec: SynthSpec) -> WeightMatrix:
    """Dispatch to the generator named by ``spec.kind``."""
    return _GENERATORS[spec.kind](spec)


# ---------------------------------------------------------------------------
# Empirical detection threshold

_BPP_CACHE: dict[tuple, float] = {}
_BPP_SEED_BASE = 424200  # internal seeds, independent of user seeds


def _top_eigenvalue(arr: np.ndarray) -> float:
    from scipy.sparse.linalg import svds

    n, m = max(arr.shape), min(arr.shape)
    if m <= 200:
        sv = float(np.linalg.svd(arr, compute_uv=False)[0])
    else:
        try:
            v0 = np.full(m, 1.0 / math.sqrt(m))  # fixed start: determinism
            sv = float(svds(arr, k=1, v0=v0,
                            return_singular_vectors=False)[0])
        except Exception:
            sv = float(np.linalg.svd(arr, compute_uv=False)[0])
    return sv * sv / n


def bpp_threshold_strength(n_rows: int, n_cols: int, sigma_sq: float = 1.0,
                           n_seeds: int = 50) -> float:
    """Spike strength at which detection crosses 50%, found by simulation.

    For each candidate strength, ``n_seeds`` spiked matrices are generated
    (internal fixed seeds) and the spike counts as detected when the top
    eigenvalue clears the theoretical bulk edge by the standard edge
    tolerance.  Bisection then locates the 50% crossing to 1% relative
    accuracy.  Results are cached per (shape, variance).
    """
    key = (n_rows, n_cols, round(sigma_sq, 12), n_seeds)
    if key in _BPP_CACHE:
        return _BPP_CACHE[key]

    n, m = max(n_rows, n_cols), min(n_rows, n_cols)
    q = n / m
    _, lam_plus = mp_edges(sigma_sq, q)
    detect_at = lam_plus * (1.0 + edge_tolerance(m))

    def detection_rate(strength: float) -> float:
        hits = 0
        for k in range(n_seeds):
            stream = DeterministicStream(_BPP_SEED_BASE + k)
            arr = stream.normals(n_rows * n_cols, sigma=math.sqrt(sigma_sq)
                                 ).reshape(n_rows, n_cols)
            theta, _ = spike_coefficient(strength ** 2, sigma_sq,
                                         n_rows, n_cols)
            u = stream.unit_vector(n_rows)
            v = stream.unit_vector(n_cols)
            arr += theta * np.outer(u, v)
            if _top_eigenvalue(arr) > detect_at:
                hits += 1
        return hits / n_seeds

    lo = math.sqrt(0.8 * lam_plus)
    hi = math.sqrt(2.0 * lam_plus)
    if detection_rate(hi) < 0.5:
        hi = math.sqrt(4.0 * lam_plus)  # extremely small m; widen once
    while hi - lo > 0.01 * lo:
        mid = 0.5 * (lo + hi)
        if detection_rate(mid) >= 0.5:
            hi = mid
        else:
            lo = mid
    result = 0.5 * (lo + hi)
    _BPP_CACHE[key] = result
    return result

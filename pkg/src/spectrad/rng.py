"""Deterministic random stream used by the synthetic generators.

All randomness is drawn from a Philox-4x64-10 counter-based generator keyed
directly with the user seed, so a stream is a pure function of that seed and
can be reproduced from the published Philox specification in any language.
Derived draws stay on the documented uniform stream:

* uniforms: 64-bit Philox words mapped to [0, 1) doubles as ``(w >> 11) * 2**-53``
* standard normals: Box-Muller pairs ``r*cos(2*pi*u2), r*sin(2*pi*u2)`` with
  ``r = sqrt(-2*ln(1 - u1))``, interleaved in that order
* Pareto(mu, x_m=1): inverse transform ``(1 - u) ** (-1/mu)``
* random signs: ``+1`` where ``u < 0.5`` else ``-1``
* k-subsets of range(n): indices of the k smallest of n fresh uniforms
"""

from __future__ import annotations

import numpy as np


class DeterministicStream:
    """Seeded stream of uniforms with documented derived distributions."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(int(n))

    def normals(self, n: int, sigma: float = 1.0) -> np.ndarray:
        """n standard-normal draws (scaled by sigma) via Box-Muller."""
        n = int(n)
        m = (n + 1) // 2
        u1 = self.uniforms(m)
        u2 = self.uniforms(m)
        r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 in (0, 1], log finite
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return sigma * out[:n]

    def pareto(self, n: int, mu: float) -> np.ndarray:
        """n draws from Pareto(mu) with unit scale, pdf mu * x**-(1+mu) on x >= 1."""
        if mu <= 0:
            raise ValueError(f"Pareto exponent must be positive, got {mu}")
        u = self.uniforms(int(n))
        return np.power(1.0 - u, -1.0 / mu)

    def signs(self, n: int) -> np.ndarray:
        return np.where(self.uniforms(int(n)) < 0.5, 1.0, -1.0)

    def subset(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), uniformly, in ascending order."""
        if not 0 <= k <= n:
            raise ValueError(f"cannot draw {k} indices from range({n})")
        u = self.uniforms(n)
        return np.sort(np.argpartition(u, k - 1)[:k]) if k > 0 else np.empty(0, dtype=int)

    def unit_vector(self, n: int, support: int | None = None) -> np.ndarray:
        """Random unit vector of length n, optionally restricted to a random
        ``support``-sized subset of coordinates (sparse signal vectors)."""
        v = np.zeros(n)
        if support is None or support >= n:
            v[:] = self.normals(n)
        else:
            idx = self.subset(n, support)
            v[idx] = self.normals(support)
        norm = float(np.linalg.norm(v))
        if norm == 0.0:  # probability zero, but keep the contract total
            v[0] = 1.0
            return v
        return v / norm

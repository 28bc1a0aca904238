"""Distribution checks for Haar-derived quantities.

Two kinds of validation live here:

* Coefficient laws: the limiting distributions of the QNN coefficients
  (Beta for alpha, Laplace for the u-pair products, normal for the
  H-weighted w-pair sums) are tested against Haar samples with a
  Kolmogorov-Smirnov statistic at the 1% level.  For the a_i coefficient
  the two circulating candidate laws are mutually inconsistent, so the
  report carries the empirical moments next to both candidates instead of
  asserting either.

* Observable density: the exact density p(y) of y = <psi|H|psi> over Haar
  states, computed by integrating out the simplex delta constraint with
  nested adaptive quadrature, cross-checked against a Monte Carlo histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .errors import (
    BoundaryError,
    DegenerateSpectrumError,
    InvalidDimensionError,
    ShapeMismatchError,
)
from .linalg import Observable, sample_haar_states, sample_haar_unitaries
from .qnn import params_from_unitaries

KS_CRITICAL_1PCT = 1.63  # asymptotic sup-norm critical value at alpha = 0.01

_DENSITY_REL_TOL = 1e-6
_MAX_QUAD_SPECTRUM = 4
_SAMPLE_CHUNK = 500


@dataclass(frozen=True)
class ReferenceDistribution:
    """Beta / Laplace / Normal / Uniform reference law for goodness of fit."""

    kind: str
    params: tuple

    @classmethod
    def beta(cls, shape_a: float, shape_b: float) -> "ReferenceDistribution":
        if shape_a <= 0 or shape_b <= 0:
            raise ValueError(f"beta shapes must be positive, got {shape_a}, {shape_b}")
        return cls("beta", (float(shape_a), float(shape_b)))

    @classmethod
    def laplace(cls, location: float, scale: float) -> "ReferenceDistribution":
        if scale <= 0:
            raise ValueError(f"laplace scale must be positive, got {scale}")
        return cls("laplace", (float(location), float(scale)))

    @classmethod
    def normal(cls, mean: float, variance: float) -> "ReferenceDistribution":
        if variance <= 0:
            raise ValueError(f"normal variance must be positive, got {variance}")
        return cls("normal", (float(mean), float(variance)))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "ReferenceDistribution":
        if not lo < hi:
            raise ValueError(f"uniform needs lo < hi, got {lo}, {hi}")
        return cls("uniform", (float(lo), float(hi)))

    def _frozen(self):
        if self.kind == "beta":
            return stats.beta(*self.params)
        if self.kind == "laplace":
            return stats.laplace(loc=self.params[0], scale=self.params[1])
        if self.kind == "normal":
            return stats.norm(loc=self.params[0], scale=math.sqrt(self.params[1]))
        if self.kind == "uniform":
            lo, hi = self.params
            return stats.uniform(loc=lo, scale=hi - lo)
        raise ValueError(f"unknown distribution kind {self.kind!r}")

    def cdf(self, x) -> np.ndarray | float:
        return self._frozen().cdf(x)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return self._frozen().rvs(size=size, random_state=rng)

    def describe(self) -> dict:
        return {"kind": self.kind, "params": list(self.params)}


@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return self.statistic < self.threshold


def ks_statistic(samples: np.ndarray, dist: ReferenceDistribution) -> KsResult:
    """Sup distance between the empirical CDF and the reference CDF.

    Threshold is the asymptotic 1% critical value 1.63 / sqrt(n).
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 100:
        raise ValueError(f"need at least 100 samples for the KS test, got {n}")
    cdf = np.asarray(dist.cdf(x))
    grid = np.arange(1, n + 1) / n
    d_plus = np.max(grid - cdf)
    d_minus = np.max(cdf - (grid - 1.0 / n))
    return KsResult(
        statistic=float(max(d_plus, d_minus)),
        threshold=KS_CRITICAL_1PCT / math.sqrt(n),
        n_samples=n,
    )


@dataclass(frozen=True)
class SpectrumSpec:
    """Real eigenvalues in descending order."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.eigenvalues, dtype=float)
        if h.ndim != 1 or h.size < 2:
            raise InvalidDimensionError("spectrum needs at least two eigenvalues")
        if not np.all(np.isfinite(h)):
            raise ShapeMismatchError("eigenvalues must be finite")
        if np.any(np.diff(h) > 0):
            raise ShapeMismatchError("eigenvalues must be in descending order")
        object.__setattr__(self, "eigenvalues", h)

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    def shifted(self, offset: float) -> "SpectrumSpec":
        return SpectrumSpec(self.eigenvalues + offset)

    def scaled(self, factor: float) -> "SpectrumSpec":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return SpectrumSpec(self.eigenvalues * factor)


def observable_density(spec: SpectrumSpec, y: float) -> float:
    """Density of <psi|H|psi> at y for Haar psi and H with the given spectrum.

    Writing the state in simplex coordinates z_k >= 0, the delta constraint
    is integrated out against the innermost variable, leaving

        p(y) = (N-1)! (y - h_min)^(N-2)
               * integral of dz / ((h_0 - h_min) + sum (h_k - h_min) z_k)^(N-1)

    over the region where (h_0 - y) + sum (h_k - y) z_k >= 0.  Variables with
    h_k > y range over (0, inf), compactified by the adaptive quadrature's
    rational map; the rest are bounded by the remaining slack.  Feasible only
    for distinct eigenvalues and spectra of at most four levels (nesting
    depth N-2).
    """
    h = spec.eigenvalues
    n = spec.size
    if n > _MAX_QUAD_SPECTRUM:
        raise InvalidDimensionError(f"quadrature density supports at most {_MAX_QUAD_SPECTRUM} levels, got {n}")
    if np.any(np.diff(h) == 0):
        raise DegenerateSpectrumError("quadrature density needs distinct eigenvalues")
    if y >= h[0] or y <= h[-1]:
        return 0.0
    if np.any(h == y):
        raise BoundaryError(f"density undefined exactly at interior eigenvalue y = {y}")
    if n == 2:
        return 1.0 / (h[0] - h[-1])

    h_top, h_bot = h[0], h[-1]
    power = n - 1

    def level(k: int, slack: float, denom: float) -> float:
        # slack = (h_0 - y) + sum over fixed outer z_j of (h_j - y) z_j
        # denom = (h_0 - h_min) + sum over fixed outer z_j of (h_j - h_min) z_j
        if k == n - 1:
            return 1.0 / denom**power
        hk = h[k]
        if hk > y:
            # improper upper limit; quad applies its rational map z = (1-t)/t
            def unbounded(z: float) -> float:
                return level(k + 1, slack + (hk - y) * z, denom + (hk - h_bot) * z)

            val, _ = integrate.quad(unbounded, 0.0, np.inf, epsrel=_DENSITY_REL_TOL, limit=200)
        else:
            upper = slack / (y - hk)
            if upper <= 0.0:
                return 0.0

            def bounded(z: float) -> float:
                return level(k + 1, slack + (hk - y) * z, denom + (hk - h_bot) * z)

            val, _ = integrate.quad(bounded, 0.0, upper, epsrel=_DENSITY_REL_TOL, limit=200)
        return val

    prefactor = math.factorial(n - 1) * (y - h_bot) ** (n - 2)
    return prefactor * level(1, h_top - y, h_top - h_bot)


def density_normalization(spec: SpectrumSpec) -> float:
    """Integral of the quadrature density over its support (should be 1)."""
    h = spec.eigenvalues
    interior = sorted(set(h[1:-1]))
    breaks = [h[-1], *interior, h[0]]
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(
            lambda t: observable_density(spec, t), lo, hi, epsrel=1e-5, limit=200
        )
        total += val
    return total


@dataclass(frozen=True)
class DensityHistogram:
    """Normalized histogram of <psi|H|psi> with per-bin standard errors."""

    bin_edges: np.ndarray
    density: np.ndarray
    std_error: np.ndarray
    n_samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.bin_edges)))


def mc_observable_density(
    spec: SpectrumSpec, samples: int, bins: int, rng: np.random.Generator
) -> DensityHistogram:
    """Monte Carlo oracle for the density: histogram of Haar expectations."""
    if samples < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {samples}")
    h = spec.eigenvalues
    states = sample_haar_states(h.size, samples, rng)
    values = (np.abs(states) ** 2) @ h
    lo, hi = float(h[-1]), float(h[0])
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    widths = np.diff(edges)
    frac = counts / samples
    density = frac / widths
    std_error = np.sqrt(frac * (1.0 - frac) / samples) / widths
    return DensityHistogram(bin_edges=edges, density=density, std_error=std_error, n_samples=samples)


def verify_coefficient_laws(
    d: int, observable: Observable, samples: int, rng: np.random.Generator
) -> dict:
    """KS-test the coefficient limit laws on Haar draws; JSON-ready report.

    alpha_1 vs Beta(1, d-1); Re/Im beta_12 vs Laplace(0, 1/(2d)); Re/Im b_12
    vs Normal(0, Tr(H^2)/(2 d^2)).  For a_1 the report lists the empirical
    mean and variance next to the two candidate normal laws (the unit-mean
    form and the moment-derived form) without asserting either.
    """
    if d < 8:
        raise InvalidDimensionError(f"asymptotic laws need d >= 8, got {d}")
    if samples < 10_000:
        raise ValueError(f"need at least 10^4 samples, got {samples}")
    if observable.dim != d:
        raise ShapeMismatchError(f"observable dim {observable.dim} != d {d}")

    alpha1 = np.empty(samples)
    a1 = np.empty(samples)
    re_beta = np.empty(samples)
    im_beta = np.empty(samples)
    re_b = np.empty(samples)
    im_b = np.empty(samples)
    done = 0
    while done < samples:
        m = min(_SAMPLE_CHUNK, samples - done)
        us = sample_haar_unitaries(d, m, rng)
        ws = sample_haar_unitaries(d, m, rng)
        for j in range(m):
            p = params_from_unitaries(us[j], ws[j], observable)
            alpha1[done + j] = p.alpha[0]
            a1[done + j] = p.a[0]
            re_beta[done + j] = p.gamma[0]
            im_beta[done + j] = p.delta[0]
            re_b[done + j] = p.c[0]
            im_b[done + j] = p.dd[0]
        done += m

    t2 = observable.trace_sq
    checks = [
        ("alpha_1", alpha1, ReferenceDistribution.beta(1.0, d - 1.0)),
        ("re_beta_12", re_beta, ReferenceDistribution.laplace(0.0, 1.0 / (2.0 * d))),
        ("im_beta_12", im_beta, ReferenceDistribution.laplace(0.0, 1.0 / (2.0 * d))),
        ("re_b_12", re_b, ReferenceDistribution.normal(0.0, t2 / (2.0 * d**2))),
        ("im_b_12", im_b, ReferenceDistribution.normal(0.0, t2 / (2.0 * d**2))),
    ]
    laws = []
    for name, data, dist in checks:
        ks = ks_statistic(data, dist)
        laws.append(
            {
                "coefficient": name,
                "law": dist.describe(),
                "ks_statistic": ks.statistic,
                "threshold": ks.threshold,
                "passed": ks.passed,
                "sample_mean": float(data.mean()),
                "sample_variance": float(data.var(ddof=1)),
            }
        )
    report = {
        "dim": d,
        "samples": samples,
        "observable_trace": observable.trace,
        "observable_trace_sq": t2,
        "laws": laws,
        "a_coefficient": {
            "sample_mean": float(a1.mean()),
            "sample_variance": float(a1.var(ddof=1)),
            "candidates": {
                "unit_mean_law": {
                    "mean": 1.0,
                    "variance": (d - 1.0) / (d + 1.0) * t2,
                },
                "moment_derived_law": {
                    "mean": observable.trace / d,
                    "variance": (d - 1.0) * t2 / (d**2 * (d + 1.0)),
                },
            },
        },
    }
    return report

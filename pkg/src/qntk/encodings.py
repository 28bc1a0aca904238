"""Diagonal data-encoding unitaries and their trace-overlap similarity.

An encoding maps a scalar input x to a diagonal unitary
``S(x) = diag(exp(i*lam_1(x)), ..., exp(i*lam_d(x)))``.  The product
Pauli-Z encoding exists in two angle conventions:

* ``full``: per-qubit factor exp(-i*x*Z), phases are even multiples of x,
  overlap frequencies 2k*(x - x').
* ``half``: per-qubit factor exp(-i*x*Z/2), phases are half of the above,
  overlap frequencies k*(x - x').

Both conventions are in circulation for this encoding family, so the choice
is an explicit flag rather than a silent default.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Callable, Union

import numpy as np

from .errors import InvalidDimensionError


class AngleConvention(str, Enum):
    FULL = "full"
    HALF = "half"


@dataclass(frozen=True)
class PauliZProduct:
    """Product encoding S(x) = (exp(-i*x*Z*c))^(tensor n), c = 1 or 1/2."""

    n_qubits: int
    convention: AngleConvention = AngleConvention.FULL

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise InvalidDimensionError(f"n_qubits must be >= 1, got {self.n_qubits!r}")
        object.__setattr__(self, "convention", AngleConvention(self.convention))

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def weights(self) -> np.ndarray:
        """Integer weights q_k = (#ones - #zeros) in the bits of k."""
        n = self.n_qubits
        popcount = np.array([bin(k).count("1") for k in range(self.dim)])
        return 2 * popcount - n


@dataclass(frozen=True)
class DiagonalTable:
    """Arbitrary diagonal encoding given by a phase-vector callable."""

    dim: int
    phase_fn: Callable[[float], np.ndarray]

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidDimensionError(f"dim must be >= 1, got {self.dim!r}")


EncodingSpec = Union[PauliZProduct, DiagonalTable]


def phase_vector(spec: EncodingSpec, x: float) -> np.ndarray:
    """Phases lam(x) such that encode(spec, x) = diag(exp(i*lam))."""
    if not np.isfinite(x):
        raise ValueError(f"input must be finite, got {x!r}")
    if isinstance(spec, PauliZProduct):
        scale = 1.0 if spec.convention is AngleConvention.FULL else 0.5
        return spec.weights() * (scale * x)
    lam = np.asarray(spec.phase_fn(x), dtype=float)
    if lam.shape != (spec.dim,):
        raise InvalidDimensionError(f"phase table returned shape {lam.shape}, expected ({spec.dim},)")
    return lam


def encode(spec: EncodingSpec, x: float) -> np.ndarray:
    """Dense diagonal unitary S(x)."""
    return np.diag(np.exp(1j * phase_vector(spec, x)))


def overlap_s(spec: EncodingSpec, x: float, x_prime: float) -> float:
    """Squared trace overlap |Tr(S(x') S(x)^dagger)|**2, in [0, d**2]."""
    delta = phase_vector(spec, x_prime) - phase_vector(spec, x)
    return float(np.abs(np.exp(1j * delta).sum()) ** 2)


def overlap_s_closed_form(
    n: int, x: float, x_prime: float, convention: AngleConvention = AngleConvention.FULL
) -> float:
    """Binomial closed form of overlap_s for the product Pauli-Z encoding.

    C(2n, n) + 2 * sum_k C(2n, n-k) * cos(2k * (x - x')) in the full
    convention; the half convention replaces 2k by k in the cosine argument.
    """
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n!r}")
    convention = AngleConvention(convention)
    delta = x - x_prime
    freq = 2.0 if convention is AngleConvention.FULL else 1.0
    total = float(comb(2 * n, n))
    for k in range(1, n + 1):
        total += 2.0 * comb(2 * n, n - k) * np.cos(freq * k * delta)
    return total

"""Ensemble of Haar-conjugated observables, linear in its mixing weights.

The model averages N expectation values of one observable H over states
``W_n S(x) U_n |0>`` with an overall ``sqrt(d/N)`` scale:

    f(x) = sqrt(d/N) * sum_n a_n <0| U_n^+ S(x)^+ W_n^+ H W_n S(x) U_n |0>.

Because f is linear in the weights a, fitting them is ordinary least
squares, the gradient with respect to a is the feature row itself, and the
tangent kernel is the feature Gram matrix F F^T.  For Haar-random U_n, W_n
the kernel expectation has a closed form in d, Tr(H), Tr(H^2) and the
encoding overlap s = |Tr(S(x') S(x)^+)|^2, validated here by Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .encodings import EncodingSpec, phase_vector
from .errors import InvalidDimensionError, ShapeMismatchError
from .linalg import Observable, expectation_batch, sample_haar_unitaries
from .ntk import KernelMatrix

_MC_CHUNK = 20_000  # fixed so accumulation order (and hence bits) never varies


@dataclass
class Dataset:
    """Scalar inputs paired with real targets."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ShapeMismatchError(f"inputs {x.shape} and targets {y.shape} must be equal-length vectors")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ShapeMismatchError("dataset entries must be finite")
        self.inputs = x
        self.targets = y

    def __len__(self) -> int:
        return self.inputs.size


@dataclass
class EnsembleSpec:
    """The collection {(a_n, U_n, W_n)} plus encoding and observable."""

    unitaries_u: np.ndarray  # (N, d, d)
    unitaries_w: np.ndarray  # (N, d, d)
    weights: np.ndarray  # (N,)
    observable: Observable
    encoding: EncodingSpec

    def __post_init__(self):
        u = np.asarray(self.unitaries_u, dtype=complex)
        w = np.asarray(self.unitaries_w, dtype=complex)
        if u.ndim != 3 or u.shape[1] != u.shape[2] or u.shape != w.shape:
            raise ShapeMismatchError(f"unitary stacks must share shape (N, d, d), got {u.shape} and {w.shape}")
        n, d, _ = u.shape
        if self.observable.dim != d:
            raise ShapeMismatchError(f"observable dim {self.observable.dim} != ensemble dim {d}")
        if self.encoding.dim != d:
            raise ShapeMismatchError(f"encoding dim {self.encoding.dim} != ensemble dim {d}")
        a = np.asarray(self.weights, dtype=float)
        if a.shape != (n,):
            raise ShapeMismatchError(f"weights must have length {n}, got shape {a.shape}")
        self.unitaries_u = u
        self.unitaries_w = w
        self.weights = a

    @property
    def n_terms(self) -> int:
        return self.unitaries_u.shape[0]

    @property
    def dim(self) -> int:
        return self.unitaries_u.shape[1]

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.dim / self.n_terms))

    @classmethod
    def sample_haar(
        cls,
        n_terms: int,
        observable: Observable,
        encoding: EncodingSpec,
        rng: np.random.Generator,
    ) -> "EnsembleSpec":
        """Draw U_n, W_n i.i.d. Haar; weights start at zero."""
        if n_terms < 1:
            raise InvalidDimensionError(f"n_terms must be >= 1, got {n_terms}")
        d = encoding.dim
        return cls(
            unitaries_u=sample_haar_unitaries(d, n_terms, rng),
            unitaries_w=sample_haar_unitaries(d, n_terms, rng),
            weights=np.zeros(n_terms),
            observable=observable,
            encoding=encoding,
        )


def _term_expectations(spec: EnsembleSpec, x: float) -> np.ndarray:
    """<psi_n| H |psi_n> for psi_n = W_n S(x) U_n |0>, all n at once."""
    phases = np.exp(1j * phase_vector(spec.encoding, x))
    encoded = phases * spec.unitaries_u[:, :, 0]  # S(x) U_n |0>
    states = np.einsum("nij,nj->ni", spec.unitaries_w, encoded)
    return expectation_batch(states, spec.observable)


def feature_row(spec: EnsembleSpec, x: float) -> np.ndarray:
    """Gradient of f with respect to the weights; also row p of F."""
    return spec.scale * _term_expectations(spec, x)


def feature_matrix(spec: EnsembleSpec, inputs: np.ndarray) -> np.ndarray:
    """Stack of feature rows over a dataset, shape (P, N)."""
    xs = np.asarray(inputs, dtype=float)
    return np.stack([feature_row(spec, x) for x in xs])


def predict(spec: EnsembleSpec, weights: np.ndarray, x: float) -> float:
    """Model output at x for an explicit weight vector."""
    a = np.asarray(weights, dtype=float)
    if a.shape != (spec.n_terms,):
        raise ShapeMismatchError(f"weights must have length {spec.n_terms}, got shape {a.shape}")
    return float(a @ feature_row(spec, x))


@dataclass(frozen=True)
class FitResult:
    """Minimum-norm least-squares fit plus its irreducible residual."""

    coef: np.ndarray
    residual: float
    rank: int


def fit_least_squares(features: np.ndarray, targets: np.ndarray, tol: float = 1e-10) -> FitResult:
    """Minimum-norm solution of min_a ||F a - y||^2.

    Singular values below ``tol`` times the largest are treated as zero, so
    nearly collinear feature rows (close inputs) do not blow up the fit.
    """
    f_mat = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if f_mat.ndim != 2 or y.shape != (f_mat.shape[0],):
        raise ShapeMismatchError(f"features {f_mat.shape} and targets {y.shape} are inconsistent")
    coef, _, rank, _ = np.linalg.lstsq(f_mat, y, rcond=tol)
    residual = float(np.linalg.norm(f_mat @ coef - y))
    return FitResult(coef=coef, residual=residual, rank=int(rank))


def empirical_kernel(features: np.ndarray) -> KernelMatrix:
    """Tangent kernel of the ensemble: K = F F^T."""
    f_mat = np.asarray(features, dtype=float)
    k = f_mat @ f_mat.T
    return KernelMatrix(0.5 * (k + k.T), source="empirical")


def expected_kernel(d: int, observable: Observable, s: float) -> float:
    """Haar expectation of the kernel at overlap s.

    ((d^3+d^2-d-s) / (d (d^3+d^2-d-1))) Tr(H)^2
        + ((s-1) / (d^3+d^2-d-1)) Tr(H^2)
    """
    if d <= 1:
        raise InvalidDimensionError(f"closed form needs d >= 2, got {d}")
    if not 0.0 <= s <= d**2 + 1e-9:
        raise ValueError(f"overlap s must lie in [0, d^2], got {s}")
    denom = d**3 + d**2 - d - 1.0
    term_tr = (d**3 + d**2 - d - s) / (d * denom) * observable.trace**2
    term_tr2 = (s - 1.0) / denom * observable.trace_sq
    return term_tr + term_tr2


def expected_kernel_limit(d: int, s: float) -> float:
    """Traceless-observable form d (s - 1) / (d^3 + d^2 - d - 1)."""
    if d <= 1:
        raise InvalidDimensionError(f"closed form needs d >= 2, got {d}")
    return d * (s - 1.0) / (d**3 + d**2 - d - 1.0)


def mc_expected_kernel(
    d: int,
    observable: Observable,
    encoding: EncodingSpec,
    x: float,
    x_prime: float,
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo oracle for the expected kernel: mean and standard error.

    Averages d * <psi(x)|H|psi(x)> <psi(x')|H|psi(x')> over independent Haar
    draws of (U, W).
    """
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    if encoding.dim != d or observable.dim != d:
        raise ShapeMismatchError("encoding/observable dims must match d")
    ph = np.exp(1j * phase_vector(encoding, x))
    ph_prime = np.exp(1j * phase_vector(encoding, x_prime))
    values = np.empty(samples)
    done = 0
    while done < samples:
        m = min(_MC_CHUNK, samples - done)
        u = sample_haar_unitaries(d, m, rng)
        w = sample_haar_unitaries(d, m, rng)
        u0 = u[:, :, 0]
        y1 = expectation_batch(np.einsum("nij,nj->ni", w, ph * u0), observable)
        y2 = expectation_batch(np.einsum("nij,nj->ni", w, ph_prime * u0), observable)
        values[done : done + m] = d * y1 * y2
        done += m
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / np.sqrt(samples))
    return mean, stderr

"""Tangent-kernel machinery: Gram matrices, linearized flow, kernel regression.

For a model f(theta) with Jacobian J (parameters x points), the tangent
kernel is K = J^T J.  When K is (approximately) constant during training,
full-batch gradient flow on the squared loss has the closed-form solution

    f(t) = y + exp(-K t) (f(0) - y),

evaluated here through the symmetric eigendecomposition of K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError, DivergenceError, ShapeMismatchError

SYMMETRY_ATOL = 1e-10
PSD_ATOL = 1e-8


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric PSD Gram matrix over a dataset, tagged with its origin."""

    matrix: np.ndarray
    source: str = "empirical"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeMismatchError(f"kernel matrix must be square, got {m.shape}")
        if np.max(np.abs(m - m.T)) > SYMMETRY_ATOL:
            raise ContractViolationError("kernel matrix is not symmetric within tolerance")
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def check_psd(self, atol: float = PSD_ATOL) -> None:
        lo = self.min_eigenvalue()
        if lo < -atol:
            raise ContractViolationError(f"kernel has eigenvalue {lo:.3e} below -{atol}")


def as_matrix(kernel) -> np.ndarray:
    """Accept a KernelMatrix or a plain array."""
    if isinstance(kernel, KernelMatrix):
        return kernel.matrix
    return np.asarray(kernel, dtype=float)


@dataclass
class LinearizedModel:
    """Initial outputs, kernel, and targets of a linearized training problem."""

    initial_outputs: np.ndarray
    kernel: KernelMatrix | np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        f0 = np.asarray(self.initial_outputs, dtype=float)
        y = np.asarray(self.targets, dtype=float)
        k = as_matrix(self.kernel)
        if f0.shape != y.shape or k.shape != (f0.size, f0.size):
            raise ShapeMismatchError(
                f"inconsistent sizes: f0 {f0.shape}, y {y.shape}, K {k.shape}"
            )
        self.initial_outputs = f0
        self.targets = y


def gram_from_jacobian(jacobian: np.ndarray, source: str = "empirical") -> KernelMatrix:
    """K = J^T J for a (parameter-count x points) Jacobian."""
    j = np.asarray(jacobian, dtype=float)
    if j.ndim != 2 or not np.all(np.isfinite(j)):
        raise ShapeMismatchError("jacobian must be a finite 2-d array")
    k = j.T @ j
    return KernelMatrix(0.5 * (k + k.T), source=source)


def flow_solution(model: LinearizedModel, t: float) -> np.ndarray:
    """Outputs at time t of gradient flow: y + V exp(-L t) V^T (f0 - y)."""
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    k = as_matrix(model.kernel)
    if np.max(np.abs(k - k.T)) > SYMMETRY_ATOL:
        raise ContractViolationError("flow_solution requires a symmetric kernel")
    evals, vecs = np.linalg.eigh(k)
    resid0 = model.initial_outputs - model.targets
    decayed = vecs @ (np.exp(-evals * t) * (vecs.T @ resid0))
    return model.targets + decayed


def simulate_gradient_descent(
    features: np.ndarray,
    targets: np.ndarray,
    coef0: np.ndarray,
    learning_rate: float,
    steps: int,
) -> np.ndarray:
    """Explicit Euler on the linear model f = F a with loss 0.5*||Fa - y||^2.

    Returns the outputs after each step, shape (steps, P).  Raises
    DivergenceError if the loss grows past 10x its initial value.
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    if steps < 0:
        raise ValueError("steps must be non-negative")
    f_mat = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    a = np.asarray(coef0, dtype=float).copy()
    if f_mat.shape[0] != y.size or f_mat.shape[1] != a.size:
        raise ShapeMismatchError(
            f"inconsistent sizes: F {f_mat.shape}, y {y.shape}, a {a.shape}"
        )
    resid = f_mat @ a - y
    loss0 = 0.5 * float(resid @ resid)
    guard = 10.0 * max(loss0, np.finfo(float).tiny)
    trajectory = np.empty((steps, y.size))
    for step in range(steps):
        a -= learning_rate * (f_mat.T @ resid)
        out = f_mat @ a
        resid = out - y
        loss = 0.5 * float(resid @ resid)
        if loss > guard:
            raise DivergenceError(
                f"loss {loss:.3e} exceeded 10x initial {loss0:.3e} at step {step}; "
                "reduce the learning rate"
            )
        trajectory[step] = out
    return trajectory


def default_ridge(kernel) -> float:
    """Trace-scaled ridge floor for nearly singular kernels."""
    k = as_matrix(kernel)
    return 1e-8 * float(np.trace(k)) / k.shape[0]


def kernel_regression(
    kernel, targets: np.ndarray, cross: np.ndarray, ridge: float = 0.0
) -> float:
    """Prediction k(x*)^T (K + ridge*I)^{-1} y at one test point.

    With ridge = 0 the inverse is a spectral pseudoinverse (eigenvalues below
    1e-12 of the largest treated as zero), which handles singular Gram
    matrices from rank-deficient feature maps; a singular K never raises here
    with a nonzero pivot, so rank must be cut explicitly.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    k = as_matrix(kernel)
    y = np.asarray(targets, dtype=float)
    kx = np.asarray(cross, dtype=float)
    if y.size != k.shape[0] or kx.size != k.shape[0]:
        raise ShapeMismatchError(
            f"inconsistent sizes: K {k.shape}, y {y.shape}, cross {kx.shape}"
        )
    if ridge > 0:
        dual = np.linalg.solve(k + ridge * np.eye(k.shape[0]), y)
    else:
        evals, vecs = np.linalg.eigh(k)
        cutoff = 1e-12 * np.max(np.abs(evals), initial=0.0)
        inverse = np.where(np.abs(evals) > cutoff, 1.0 / np.where(evals == 0, 1.0, evals), 0.0)
        dual = vecs @ (inverse * (vecs.T @ y))
    return float(kx @ dual)

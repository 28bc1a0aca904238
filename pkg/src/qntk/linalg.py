"""Complex dense linear algebra, Haar-random sampling, and Hermitian observables.

All carriers are plain ``numpy`` arrays of ``complex128``; the helpers here
validate the invariants (unitarity, normalization, Hermiticity) at the entry
points instead of wrapping arrays in classes.  Sampling takes an explicit
``numpy.random.Generator`` so there is no hidden global state; use
:func:`substream` to derive deterministic per-task generators from one master
seed.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    ContractViolationError,
    InvalidDimensionError,
    ShapeMismatchError,
    UnsupportedRepresentationError,
)

UNITARY_ATOL = 1e-10
STATE_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def substream(master_seed: int, *task_index: int) -> np.random.Generator:
    """Derive a deterministic random substream from a master seed.

    The same ``(master_seed, task_index)`` pair always yields the same
    generator, independent of how many other substreams were created, so
    parallel and serial schedules produce identical output.
    """
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(task_index))
    return np.random.default_rng(seq)


def _check_dim(d: int) -> None:
    if int(d) != d or d < 1:
        raise InvalidDimensionError(f"dimension must be a positive integer, got {d!r}")


def sample_haar_unitaries(d: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``size`` independent Haar-random unitaries, shape (size, d, d).

    QR-decomposes a stack of Ginibre matrices (i.i.d. standard complex
    Gaussians) and multiplies each column of Q by the phase of the matching
    diagonal entry of R.  Plain QR is not Haar distributed; the phase
    correction is what makes the entry moments come out right.
    """
    _check_dim(d)
    z = rng.standard_normal((size, d, d)) + 1j * rng.standard_normal((size, d, d))
    q, r = np.linalg.qr(z / np.sqrt(2.0))
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    mod = np.abs(diag)
    phase = np.where(mod > 0, diag / np.where(mod > 0, mod, 1.0), 1.0)
    return q * phase[:, None, :]


def sample_haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Sample one Haar-random unitary of dimension ``d``."""
    return sample_haar_unitaries(d, 1, rng)[0]


def sample_haar_states(d: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``size`` Haar-random pure states, shape (size, d).

    Normalizes vectors of i.i.d. standard complex Gaussians, which is uniform
    on the complex unit sphere.
    """
    _check_dim(d)
    z = rng.standard_normal((size, d)) + 1j * rng.standard_normal((size, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    """Sample one Haar-random pure state of dimension ``d``."""
    return sample_haar_states(d, 1, rng)[0]


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    d = u.shape[0]
    return bool(np.max(np.abs(u @ u.conj().T - np.eye(d))) <= atol)


def require_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if not is_unitary(u, atol):
        raise ShapeMismatchError("matrix is not unitary within tolerance")
    return u


def require_state(psi: np.ndarray, atol: float = STATE_ATOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ShapeMismatchError(f"state must be a vector, got shape {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > atol:
        raise ShapeMismatchError("state vector is not normalized")
    return psi


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformability check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[0]:
        raise ShapeMismatchError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def apply(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply a matrix to a state vector."""
    u = np.asarray(u)
    psi = np.asarray(psi)
    if psi.ndim != 1 or u.ndim != 2 or u.shape[1] != psi.shape[0]:
        raise ShapeMismatchError(f"cannot apply shape {u.shape} to state of shape {psi.shape}")
    return u @ psi


class Observable:
    """Hermitian measurement operator with cached Tr(H) and Tr(H**2).

    Three representations are supported: a real diagonal vector, a Pauli
    string over {I, X, Y, Z}, and a full Hermitian matrix.  Pauli strings
    made of I and Z only also carry a diagonal representation, which the
    fast evaluation paths exploit.
    """

    __slots__ = ("dim", "trace", "trace_sq", "_diag", "_matrix", "_letters")

    def __init__(self, *, dim, trace, trace_sq, diag=None, matrix=None, letters=None):
        self.dim = dim
        self.trace = float(trace)
        self.trace_sq = float(trace_sq)
        self._diag = diag
        self._matrix = matrix
        self._letters = letters

    @classmethod
    def diagonal(cls, values) -> "Observable":
        h = np.asarray(values, dtype=float)
        if h.ndim != 1 or h.size < 1:
            raise InvalidDimensionError("diagonal observable needs a non-empty real vector")
        if not np.all(np.isfinite(h)):
            raise ShapeMismatchError("diagonal entries must be finite")
        return cls(dim=h.size, trace=h.sum(), trace_sq=(h * h).sum(), diag=h)

    @classmethod
    def pauli(cls, letters: str) -> "Observable":
        letters = letters.upper()
        if not letters or any(c not in "IXYZ" for c in letters):
            raise UnsupportedRepresentationError(f"invalid Pauli string {letters!r}")
        n = len(letters)
        d = 2**n
        # any non-identity factor is traceless; H**2 = I always
        trace = float(d) if set(letters) == {"I"} else 0.0
        diag = None
        if set(letters) <= {"I", "Z"}:
            diag = np.ones(d)
            for bit, c in enumerate(letters):
                if c == "Z":
                    # qubit `bit` contributes -1 on basis states where it is 1
                    idx = (np.arange(d) >> (n - 1 - bit)) & 1
                    diag = diag * np.where(idx == 1, -1.0, 1.0)
        return cls(dim=d, trace=trace, trace_sq=float(d), diag=diag, letters=letters)

    @classmethod
    def dense(cls, matrix) -> "Observable":
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidDimensionError(f"observable must be a square matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_ATOL:
            raise ShapeMismatchError("matrix is not Hermitian within tolerance")
        trace = np.trace(m).real
        trace_sq = np.sum(np.abs(m) ** 2)  # Tr(H^2) = sum |H_ij|^2 for Hermitian H
        return cls(dim=m.shape[0], trace=trace, trace_sq=trace_sq, matrix=m)

    @property
    def is_diagonal(self) -> bool:
        return self._diag is not None

    @property
    def pauli_letters(self) -> str | None:
        return self._letters

    @property
    def diag(self) -> np.ndarray:
        if self._diag is None:
            raise UnsupportedRepresentationError("observable has no diagonal representation")
        return self._diag

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._letters is not None and self._diag is None:
                m = np.ones((1, 1), dtype=complex)
                for c in self._letters:
                    m = np.kron(m, _PAULI[c])
                self._matrix = m
            else:
                self._matrix = np.diag(self._diag).astype(complex)
        return self._matrix

    def __repr__(self) -> str:
        kind = "pauli" if self._letters else ("diagonal" if self._diag is not None else "dense")
        return f"Observable({kind}, dim={self.dim})"


def expectation(psi: np.ndarray, obs: Observable) -> float:
    """Real expectation value of ``obs`` in the pure state ``psi``."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] != obs.dim:
        raise ShapeMismatchError(f"state of shape {psi.shape} does not match dim {obs.dim}")
    if obs.is_diagonal:
        return float(np.dot(obs.diag, np.abs(psi) ** 2))
    val = np.vdot(psi, obs.matrix @ psi)
    if abs(val.imag) > 1e-10:
        raise ContractViolationError(f"expectation has imaginary residue {val.imag:.3e}")
    return float(val.real)


def expectation_batch(states: np.ndarray, obs: Observable) -> np.ndarray:
    """Expectation values for a stack of states, shape (batch, d) -> (batch,)."""
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[1] != obs.dim:
        raise ShapeMismatchError(f"states of shape {states.shape} do not match dim {obs.dim}")
    if obs.is_diagonal:
        return (np.abs(states) ** 2) @ obs.diag
    return np.einsum("bi,ij,bj->b", states.conj(), obs.matrix, states).real

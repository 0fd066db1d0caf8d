"""Truncated Fock-space representation of two-mode bosonic states.

Basis ordering is mode-1-major throughout: the two-mode basis state
``|n1, n2>`` sits at index ``n1 * d + n2``, where ``d`` is the per-mode
cutoff (levels ``0 .. d-1``).  A density matrix of shape ``(d*d, d*d)``
therefore reshapes to a tensor ``rho[n1, n2, m1, m2]`` with a plain
C-order ``reshape(d, d, d, d)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

KET_NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-9
POSITIVITY_TOL = -1e-8


class Mode(enum.IntEnum):
    """One of the two system modes."""

    ONE = 0
    TWO = 1


def check_cutoff(d: int) -> int:
    """Validate a per-mode Fock dimension and return it as ``int``."""
    if isinstance(d, bool) or int(d) != d or d < 2:
        raise ValueError(f"cutoff must be an integer >= 2, got {d!r}")
    return int(d)


@dataclass(frozen=True, eq=False)
class Ket:
    """Pure two-mode state as amplitudes over the truncated basis."""

    amplitudes: np.ndarray
    cutoff: int

    def __post_init__(self):
        d = check_cutoff(self.cutoff)
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape != (d * d,):
            raise ValueError(f"ket needs {d * d} amplitudes for cutoff {d}, got {amps.shape[0]}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > KET_NORM_TOL:
            raise ValueError(f"ket is not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, cutoff: int) -> "Ket":
        """Normalize ``amplitudes`` and wrap them."""
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm, cutoff)

    @classmethod
    def basis(cls, n1: int, n2: int, cutoff: int) -> "Ket":
        d = check_cutoff(cutoff)
        if not (0 <= n1 < d and 0 <= n2 < d):
            raise ValueError(f"|{n1},{n2}> is outside cutoff {d}")
        amps = np.zeros(d * d, dtype=complex)
        amps[n1 * d + n2] = 1.0
        return cls(amps, d)

    def density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.cutoff)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Two-mode density matrix on the truncated space.

    Only the shape is enforced at construction; physical invariants are
    checked by :meth:`health` so that integrators can report violations
    instead of failing deep inside numpy.
    """

    matrix: np.ndarray
    cutoff: int

    def __post_init__(self):
        d = check_cutoff(self.cutoff)
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (d * d, d * d):
            raise ValueError(f"density matrix must be {d * d}x{d * d}, got {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.cutoff * self.cutoff

    def tensor(self) -> np.ndarray:
        """View as ``rho[n1, n2, m1, m2]``."""
        d = self.cutoff
        return self.matrix.reshape(d, d, d, d)

    def health(self) -> "Health":
        """Trace error, Hermiticity defect and smallest eigenvalue."""
        mat = self.matrix
        herm = float(np.max(np.abs(mat - mat.conj().T)))
        trace_err = float(abs(np.trace(mat) - 1.0))
        min_eig = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0])
        return Health(trace_err, herm, min_eig)

    def is_valid(self) -> bool:
        return self.health().ok


@dataclass(frozen=True)
class Health:
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return (
            self.trace_error < TRACE_TOL
            and self.hermiticity_error < HERMITIAN_TOL
            and self.min_eigenvalue >= POSITIVITY_TOL
        )


def as_density(state) -> DensityOperator:
    if isinstance(state, DensityOperator):
        return state
    if isinstance(state, Ket):
        return state.density()
    raise TypeError(f"expected Ket or DensityOperator, got {type(state).__name__}")


def ladder(d: int) -> np.ndarray:
    """Single-mode truncated annihilation operator, ``<n-1|a|n> = sqrt(n)``."""
    d = check_cutoff(d)
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)


def tensor(A, B) -> np.ndarray:
    """Kronecker product ``A (mode 1) x B (mode 2)`` in mode-1-major order."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape[0] != A.shape[1] or B.shape != A.shape:
        raise ValueError(f"tensor needs two square d x d factors, got {A.shape} and {B.shape}")
    return np.kron(A, B)


def annihilation_operator(mode: Mode, cutoff: int) -> np.ndarray:
    """``a_j`` embedded in the two-mode space (identity on the other mode)."""
    a = ladder(cutoff)
    eye = np.eye(cutoff, dtype=complex)
    if Mode(mode) is Mode.ONE:
        return tensor(a, eye)
    return tensor(eye, a)


def number_operator(mode: Mode, cutoff: int) -> np.ndarray:
    a = annihilation_operator(mode, cutoff)
    return a.conj().T @ a


def partial_trace(rho: DensityOperator, keep: Mode) -> np.ndarray:
    """Reduced single-mode density matrix of ``keep``."""
    t = as_density(rho).tensor()
    if Mode(keep) is Mode.ONE:
        return np.einsum("ajbj->ab", t)
    return np.einsum("jajb->ab", t)


def partial_transpose(rho) -> np.ndarray:
    """Transpose on mode 2: ``rho[n1 n2, m1 m2] -> rho[n1 m2, m1 n2]``.

    Accepts a :class:`DensityOperator` or a raw ``(d*d, d*d)`` array and
    returns an array; the map is a pure index permutation.
    """
    if isinstance(rho, (DensityOperator, Ket)):
        rho = as_density(rho)
        d, mat = rho.cutoff, rho.matrix
    else:
        mat = np.asarray(rho)
        d = int(round(np.sqrt(mat.shape[0])))
        if d * d != mat.shape[0] or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"not a two-mode square matrix: {mat.shape}")
    return mat.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d)


def photon_numbers(cutoff: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-basis-index occupations ``(n1, n2)`` of the two modes."""
    n = np.arange(cutoff)
    n1, n2 = np.meshgrid(n, n, indexing="ij")
    return n1.ravel(), n2.ravel()


def mean_energy(rho) -> float:
    """Total mean photon number ``Tr[rho (a1^dag a1 + a2^dag a2)]``."""
    rho = as_density(rho)
    n1, n2 = photon_numbers(rho.cutoff)
    return float(np.real(np.dot(np.diag(rho.matrix), n1 + n2)))


def trace_distance(rho, sigma) -> float:
    rho, sigma = as_density(rho), as_density(sigma)
    if rho.cutoff != sigma.cutoff:
        raise ValueError(f"cutoff mismatch: {rho.cutoff} vs {sigma.cutoff}")
    diff = rho.matrix - sigma.matrix
    eigs = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return float(0.5 * np.sum(np.abs(eigs)))


def embed(rho, cutoff: int) -> DensityOperator:
    """Copy a state into a larger cutoff, padding with zero population."""
    rho = as_density(rho)
    d_old, d = rho.cutoff, check_cutoff(cutoff)
    if d < d_old:
        raise ValueError("embed only enlarges the cutoff")
    t = np.zeros((d, d, d, d), dtype=complex)
    t[:d_old, :d_old, :d_old, :d_old] = rho.tensor()
    return DensityOperator(t.reshape(d * d, d * d), d)

"""Markovian noise on two bosonic modes.

Two generators are provided, both acting locally on each mode:

* loss with thermal hopping, ``sum_j G/2 N_j L[a_j^dag] + G/2 (N_j + 1) L[a_j]``;
* phase diffusion, ``sum_j G/2 L[a_j^dag a_j]``;

with ``L[O] rho = 2 O rho O^dag - O^dag O rho - rho O^dag O``.

The generator is assembled as a sparse superoperator on ``vec(rho)``
(row-major flattening, so ``vec(A rho B) = kron(A, B.T) vec(rho)``) and
integrated with fixed-step RK4.  Both generators conserve the coherence
sector ``(n1 - m1, n2 - m2)`` of every matrix element, so the integrator
only carries the sectors the initial state occupies.  For photon-number
entangled inputs that is roughly a 1/(2d) slice of the full space.

The loss channel also has an exact dilation: each mode meets a thermal
ancilla on a beam splitter of angle ``arctan(sqrt(exp(G t) - 1))`` and
the ancilla is discarded.  :func:`dilation_evolve` implements that route
independently of the integrator.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ChannelKindError, NumericalHealthViolation
from .fock import (
    DensityOperator,
    Health,
    as_density,
    check_cutoff,
    ladder,
)
from .states import thermal_density


class ChannelKind(str, enum.Enum):
    LOSS_THERMAL = "loss_thermal"
    DEPHASING = "dephasing"


@dataclass(frozen=True)
class ChannelParams:
    """Rate ``gamma`` and environment occupations ``n1``, ``n2``.

    The occupations are ignored by the dephasing channel.
    """

    gamma: float
    n1: float = 0.0
    n2: float = 0.0
    kind: ChannelKind = ChannelKind.LOSS_THERMAL

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError(f"thermal occupations must be >= 0, got {self.n1}, {self.n2}")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``dt=None`` resolves to ``min(1e-3 / gamma, 1e-3)``.
    """

    dt: float | None = None
    t_max: float = 1.0
    hermitize_each_step: bool = True

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")

    def step(self, gamma: float) -> float:
        if self.dt is not None:
            return float(self.dt)
        return min(1e-3 / gamma, 1e-3)


def _require(params: ChannelParams, kind: ChannelKind):
    if params.kind is not kind:
        raise ChannelKindError(f"expected a {kind.value} channel, got {params.kind.value}")


def expected_energy(n0: float, params: ChannelParams, t: float) -> float:
    """Mean photon number at time ``t`` for any input of energy ``n0``.

    Under loss/thermal hopping ``n0 exp(-G t) + (N1 + N2)(1 - exp(-G t))``;
    dephasing leaves populations, hence the energy, untouched.
    """
    if params.kind is ChannelKind.DEPHASING:
        return float(n0)
    eta = math.exp(-params.gamma * t)
    return n0 * eta + (params.n1 + params.n2) * (1.0 - eta)


def lindblad_dissipator(O, rho) -> np.ndarray:
    """Dense ``2 O rho O^dag - O^dag O rho - rho O^dag O``."""
    O = np.asarray(O)
    rho = np.asarray(rho)
    if O.ndim != 2 or O.shape[0] != O.shape[1] or O.shape != rho.shape:
        raise ValueError(f"dimension mismatch: O {O.shape}, rho {rho.shape}")
    Od = O.conj().T
    OdO = Od @ O
    return 2.0 * O @ rho @ Od - OdO @ rho - rho @ OdO


def _dissipator_super(O: sp.spmatrix) -> sp.csr_matrix:
    dim = O.shape[0]
    eye = sp.identity(dim, dtype=complex, format="csr")
    OdO = (O.conj().T @ O).tocsr()
    return (
        2.0 * sp.kron(O, O.conj(), format="csr")
        - sp.kron(OdO, eye, format="csr")
        - sp.kron(eye, OdO.T, format="csr")
    )


@functools.lru_cache(maxsize=4)
def liouvillian(params: ChannelParams, cutoff: int) -> sp.csr_matrix:
    """Sparse generator acting on the row-major ``vec`` of a ``d^2 x d^2`` state."""
    d = check_cutoff(cutoff)
    a = sp.csr_matrix(ladder(d))
    eye = sp.identity(d, dtype=complex, format="csr")
    modes = (sp.kron(a, eye, format="csr"), sp.kron(eye, a, format="csr"))
    g = params.gamma
    if params.kind is ChannelKind.DEPHASING:
        gen = sum(0.5 * g * _dissipator_super((aj.conj().T @ aj).tocsr()) for aj in modes)
    else:
        gen = sp.csr_matrix((d**4, d**4), dtype=complex)
        for aj, nj in zip(modes, (params.n1, params.n2)):
            gen = gen + 0.5 * g * (nj + 1.0) * _dissipator_super(aj)
            if nj > 0:
                gen = gen + 0.5 * g * nj * _dissipator_super(aj.conj().T.tocsr())
    gen = gen.tocsr()
    gen.sum_duplicates()
    gen.eliminate_zeros()
    return gen


def _apply(rho, params: ChannelParams) -> np.ndarray:
    rho = as_density(rho)
    dim = rho.dim
    out = liouvillian(params, rho.cutoff) @ rho.matrix.reshape(-1)
    return out.reshape(dim, dim)


def loss_thermal_rhs(rho, params: ChannelParams) -> np.ndarray:
    """``d rho / dt`` under loss and thermal hopping."""
    _require(params, ChannelKind.LOSS_THERMAL)
    return _apply(rho, params)


def dephasing_rhs(rho, params: ChannelParams) -> np.ndarray:
    """``d rho / dt`` under local phase diffusion."""
    _require(params, ChannelKind.DEPHASING)
    return _apply(rho, params)


def dephasing_exact(rho0, params: ChannelParams, t: float) -> DensityOperator:
    """Closed-form dephasing: each element decays as ``exp(-G t/2 [(n1-m1)^2 + (n2-m2)^2])``."""
    _require(params, ChannelKind.DEPHASING)
    rho0 = as_density(rho0)
    d = rho0.cutoff
    n = np.arange(d)
    k = (n[:, None] - n[None, :]) ** 2
    rate = k[:, None, :, None] + k[None, :, None, :]
    t4 = rho0.tensor() * np.exp(-0.5 * params.gamma * t * rate)
    return DensityOperator(t4.reshape(d * d, d * d), d)


def _sector_indices(matrix: np.ndarray, d: int) -> np.ndarray:
    """Flat indices of every element sharing a coherence sector with a nonzero of ``matrix``."""
    n = np.arange(d)
    diff = n[:, None] - n[None, :]  # diff[n, m] = n - m
    code = (diff[:, None, :, None] + d - 1) * (2 * d - 1) + (diff[None, :, None, :] + d - 1)
    code = code.reshape(-1)
    occupied = np.unique(code[np.flatnonzero(matrix.reshape(-1))])
    return np.flatnonzero(np.isin(code, occupied))


class Propagator:
    """Fixed-step RK4 propagation of one initial state on a fixed time grid.

    The main trajectory only ever visits grid times ``k * dt``.  A state
    at an off-grid time ``t`` is produced by one partial step from the last
    grid point, leaving the grid trajectory untouched, so any time ``t``
    yields the same bits no matter which other times were requested.
    """

    def __init__(self, rho0, params: ChannelParams, config: IntegratorConfig | None = None):
        config = config or IntegratorConfig()
        rho0 = as_density(rho0)
        self.params = params
        self.cutoff = d = rho0.cutoff
        self.dt = config.step(params.gamma)
        self.hermitize = config.hermitize_each_step
        dim = d * d
        flat = rho0.matrix.reshape(-1)
        self._idx = idx = _sector_indices(rho0.matrix, d)
        full = liouvillian(params, d)
        self._gen = full[idx][:, idx].tocsr()
        # position of the Hermitian partner (col, row) of every carried element
        where = np.full(dim * dim, -1)
        where[idx] = np.arange(idx.size)
        rows, cols = np.divmod(idx, dim)
        self._partner = where[cols * dim + rows]
        if np.any(self._partner < 0):
            raise ValueError("initial state is not Hermitian in its sector structure")
        self._v0 = flat[idx].copy()
        self._v = self._v0.copy()
        self._k = 0

    @property
    def carried(self) -> int:
        """Number of matrix elements being integrated."""
        return self._idx.size

    def _rk4(self, v: np.ndarray, h: float) -> np.ndarray:
        L = self._gen
        k1 = L @ v
        k2 = L @ (v + 0.5 * h * k1)
        k3 = L @ (v + 0.5 * h * k2)
        k4 = L @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if self.hermitize:
            v = 0.5 * (v + v[self._partner].conj())
        return v

    def _grid_index(self, t: float) -> int:
        return int(math.floor(t / self.dt + 1e-9))

    def reset(self):
        self._v = self._v0.copy()
        self._k = 0

    def _vector_at(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"time must be >= 0, got {t}")
        k = self._grid_index(t)
        if k < self._k:
            self.reset()
        while self._k < k:
            self._v = self._rk4(self._v, self.dt)
            self._k += 1
        rem = t - k * self.dt
        if rem > 1e-12 * self.dt:
            return self._rk4(self._v, rem)
        return self._v

    def state_at(self, t: float) -> DensityOperator:
        d = self.cutoff
        flat = np.zeros(d**4, dtype=complex)
        flat[self._idx] = self._vector_at(t)
        return DensityOperator(flat.reshape(d * d, d * d), d)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[DensityOperator]
    health: list[Health]
    dt: float

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(zip(self.times, self.states))


def check_health(rho: DensityOperator, t: float) -> Health:
    """Return the health record of ``rho``; raise if it is out of bounds."""
    h = rho.health()
    if not h.ok:
        raise NumericalHealthViolation(
            f"t={t:.6g}: trace error {h.trace_error:.3g}, hermiticity {h.hermiticity_error:.3g}, "
            f"min eigenvalue {h.min_eigenvalue:.3g} (reduce dt or raise the cutoff)"
        )
    return h


def _sample_times(times: Iterable[float] | None, config: IntegratorConfig) -> np.ndarray:
    if times is None:
        return np.linspace(0.0, config.t_max, 11)
    ts = np.asarray(list(times), dtype=float)
    if ts.size == 0 or np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise ValueError("sample times must be non-negative and strictly increasing")
    return ts


def evolve(
    rho0,
    params: ChannelParams,
    config: IntegratorConfig | None = None,
    times: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate the channel from ``rho0`` and sample the state.

    Args:
        rho0: initial :class:`DensityOperator` or :class:`~cvrobust.fock.Ket`.
        params: channel rate, occupations and kind.
        config: integrator settings; ``times`` defaults to 11 evenly spaced
            points on ``[0, config.t_max]``.
        times: strictly increasing sample times.

    Raises:
        NumericalHealthViolation: a sampled state breaks the trace,
            Hermiticity or positivity bounds.
    """
    config = config or IntegratorConfig()
    ts = _sample_times(times, config)
    prop = Propagator(rho0, params, config)
    states, health = [], []
    for t in ts:
        rho = prop.state_at(float(t))
        health.append(check_health(rho, float(t)))
        states.append(rho)
    return Trajectory(ts, states, health, prop.dt)


def propagate(
    rho0, params: ChannelParams, t: float, config: IntegratorConfig | None = None
) -> DensityOperator:
    """Health-checked state at a single time ``t``, integrated from ``t = 0``."""
    return evolve(rho0, params, config, times=[t]).states[0]


def mixing_angle(gamma: float, t: float) -> float:
    """Beam-splitter angle ``arctan(sqrt(exp(gamma t) - 1))``; ``cos^2`` of it is ``exp(-gamma t)``."""
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    x = gamma * t
    if x > 700.0:
        return math.pi / 2
    return math.atan(math.sqrt(math.expm1(x)))


def beam_splitter_unitary(zeta: float, cutoff: int, ancilla_cutoff: int | None = None) -> np.ndarray:
    """``exp(zeta (a_s^dag a_b - a_b^dag a_s))`` on a system-ancilla pair.

    The pair is ordered system-major (index ``n_s * d_b + n_b``).  Built
    from the eigendecomposition of the Hermitian ``i * generator``.
    """
    d = check_cutoff(cutoff)
    db = check_cutoff(ancilla_cutoff or cutoff)
    a_s = np.kron(ladder(d), np.eye(db))
    a_b = np.kron(np.eye(d), ladder(db))
    gen = zeta * (a_s.conj().T @ a_b - a_b.conj().T @ a_s)
    w, V = np.linalg.eigh(1j * gen)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _mode_channel(zeta: float, occupation: float, d: int, db: int) -> np.ndarray:
    """Superoperator ``S[n, m, n', m']`` of ``X -> Tr_b[U (X (x) nu) U^dag]``."""
    U = beam_splitter_unitary(zeta, d, db).reshape(d, db, d, db)
    p = np.real(np.diag(thermal_density(occupation, db)))
    return np.einsum("akbl,l,ckel->acbe", U, p, U.conj(), optimize=True)


def dilation_evolve(rho0, params: ChannelParams, t: float, ancilla_cutoff: int | None = None) -> DensityOperator:
    """Loss/thermal channel via beam splitters with thermal ancillas.

    Mode 1 meets an ancilla of occupation ``n1``, mode 2 one of ``n2``, both
    at angle :func:`mixing_angle`; the ancillas are traced out.  The two
    interactions touch disjoint modes, so the joint map factorizes into one
    single-mode superoperator per mode and the four-mode state is never
    formed.

    Raises:
        CutoffTooSmall: an ancilla thermal state does not fit ``ancilla_cutoff``.
    """
    _require(params, ChannelKind.LOSS_THERMAL)
    rho0 = as_density(rho0)
    d = rho0.cutoff
    db = ancilla_cutoff or d
    zeta = mixing_angle(params.gamma, t)
    S1 = _mode_channel(zeta, params.n1, d, db)
    S2 = _mode_channel(zeta, params.n2, d, db)
    t4 = rho0.tensor()
    t4 = np.einsum("acbe,bxey->axcy", S1, t4, optimize=True)
    t4 = np.einsum("acbe,xbye->xayc", S2, t4, optimize=True)
    return DensityOperator(t4.reshape(d * d, d * d), d)

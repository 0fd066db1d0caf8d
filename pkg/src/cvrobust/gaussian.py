"""Covariance-matrix description of the Gaussian reference state.

Quadratures are ordered ``(x1, p1, x2, p2)`` with ``x = a + a^dag`` and
``p = -i (a - a^dag)``, so the vacuum covariance matrix is the identity
and a thermal mode of occupation ``N`` has the block ``(2N + 1) I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channels import ChannelKind, ChannelParams, _require
from .errors import NeverSeparates, NonPhysicalCM, NoSeparationFound
from .fock import Mode, annihilation_operator, as_density

OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
# mirror reflection p2 -> -p2 implements partial transposition of mode 2
PT_MIRROR = np.diag([1.0, 1.0, 1.0, -1.0])


def symplectic_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    """Symplectic spectrum (ascending) from the moduli of ``eig(i Omega sigma)``."""
    ev = np.abs(np.linalg.eigvals(1j * OMEGA @ np.asarray(sigma, dtype=float)))
    return np.sort(ev)[::2]


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    sigma: np.ndarray
    mean: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def __post_init__(self):
        s = np.array(self.sigma, dtype=float)
        m = np.array(self.mean, dtype=float).reshape(-1)
        if s.shape != (4, 4) or m.shape != (4,):
            raise ValueError(f"two-mode CM must be 4x4 with a 4-vector mean, got {s.shape}, {m.shape}")
        if np.max(np.abs(s - s.T)) > 1e-12:
            raise ValueError("covariance matrix is not symmetric")
        nu = symplectic_eigenvalues(s)
        if nu[0] < 1.0 - 1e-9:
            raise NonPhysicalCM(f"symplectic eigenvalue {nu[0]:.12g} < 1")
        s.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "mean", m)

    @property
    def blocks(self):
        s = self.sigma
        return s[:2, :2], s[2:, 2:], s[:2, 2:]

    def energy(self) -> float:
        """Total mean photon number, ``(Tr sigma - 4) / 4 + |mean|^2 / 4``."""
        return float((np.trace(self.sigma) - 4.0) / 4.0 + self.mean @ self.mean / 4.0)


def tmss_covariance(r: float) -> CovarianceMatrix:
    """Two-mode squeezed vacuum with squeezing ``r = atanh(lambda)``."""
    if r < 0:
        raise ValueError(f"squeezing must be >= 0, got {r}")
    c, s = math.cosh(2 * r), math.sinh(2 * r)
    Z = np.diag([1.0, -1.0])
    return CovarianceMatrix(np.block([[c * np.eye(2), s * Z], [s * Z, c * np.eye(2)]]))


def environment_covariance(params: ChannelParams) -> np.ndarray:
    return np.diag([2 * params.n1 + 1, 2 * params.n1 + 1, 2 * params.n2 + 1, 2 * params.n2 + 1])


def channel_on_covariance(cm: CovarianceMatrix, params: ChannelParams, t: float) -> CovarianceMatrix:
    """``sigma(t) = e^{-G t} sigma(0) + (1 - e^{-G t}) sigma_env``."""
    _require(params, ChannelKind.LOSS_THERMAL)
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    eta = math.exp(-params.gamma * t)
    sigma = eta * cm.sigma + (1.0 - eta) * environment_covariance(params)
    return CovarianceMatrix(sigma, math.sqrt(eta) * cm.mean)


def _exact_det(m) -> Fraction:
    # Laplace expansion in rationals; entries are exact binary floats
    if len(m) == 1:
        return m[0][0]
    return sum(
        (-1) ** j * m[0][j] * _exact_det([row[:j] + row[j + 1 :] for row in m[1:]])
        for j in range(len(m))
        if m[0][j]
    )


def pt_min_symplectic_eigenvalue(cm: CovarianceMatrix) -> float:
    """Smallest symplectic eigenvalue of the partially transposed CM.

    Uses the symplectic invariant ``det A + det B - 2 det C``; below 1 the
    state is entangled.  The small root is taken as ``det sigma / nu_+^2``
    with all determinants evaluated exactly, since the difference form
    cancels catastrophically at large squeezing.
    """
    m = [[Fraction(float(x)) for x in row] for row in cm.sigma]
    det_sigma = _exact_det(m)
    if det_sigma < 0:
        raise NonPhysicalCM(f"det sigma = {float(det_sigma):.3g} < 0")
    blocks = [[row[j : j + 2] for row in m[i : i + 2]] for i, j in ((0, 0), (2, 2), (0, 2))]
    det_a, det_b, det_c = (_exact_det(b) for b in blocks)
    delta = det_a + det_b - 2 * det_c
    disc = float(delta * delta - 4 * det_sigma)
    nu_plus_sq = (float(delta) + math.sqrt(max(disc, 0.0))) / 2.0
    if nu_plus_sq == 0.0:
        return 0.0
    return math.sqrt(float(det_sigma) / nu_plus_sq)


def gaussian_log_negativity(cm: CovarianceMatrix) -> float:
    """``max(0, -ln nu_min)`` (natural log)."""
    return max(0.0, -math.log(pt_min_symplectic_eigenvalue(cm)))


def gaussian_separation_time(r: float, params: ChannelParams, tol: float = 1e-8) -> float:
    """First time the evolved TMSS(r) becomes PPT, by bisection on ``[0, 50 / gamma]``.

    For equal occupations ``N`` the answer is
    ``ln[(2N + 1 - exp(-2r)) / (2N)] / gamma``; the bisection is used for
    every regime so that asymmetric occupations share the same code path.

    Raises:
        NeverSeparates: both occupations are zero.
        NoSeparationFound: still entangled at the horizon.
    """
    _require(params, ChannelKind.LOSS_THERMAL)
    if params.n1 == 0 and params.n2 == 0:
        raise NeverSeparates("pure loss never disentangles a two-mode squeezed state in finite time")
    cm0 = tmss_covariance(r)

    def separated(t):
        return pt_min_symplectic_eigenvalue(channel_on_covariance(cm0, params, t)) >= 1.0

    lo, hi = 0.0, 50.0 / params.gamma
    if separated(lo):
        return 0.0
    if not separated(hi):
        raise NoSeparationFound(f"TMSS(r={r}) still entangled at t={hi}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if separated(mid):
            hi = mid
        else:
            lo = mid
    return hi


def symmetric_separation_time(r: float, gamma: float, n: float) -> float:
    """Closed form for ``N1 = N2 = n``."""
    if n <= 0:
        raise NeverSeparates("zero occupation")
    return math.log((2 * n + 1 - math.exp(-2 * r)) / (2 * n)) / gamma


def covariance_from_density(rho) -> CovarianceMatrix:
    """First and second quadrature moments of a Fock-space state."""
    rho = as_density(rho)
    d = rho.cutoff
    quads = []
    for mode in (Mode.ONE, Mode.TWO):
        a = annihilation_operator(mode, d)
        ad = a.conj().T
        quads += [a + ad, -1j * (a - ad)]
    mat = rho.matrix
    mean = np.array([np.real(np.trace(mat @ R)) for R in quads])
    sigma = np.empty((4, 4))
    for i, Ri in enumerate(quads):
        for j, Rj in enumerate(quads):
            sigma[i, j] = np.real(np.trace(mat @ (Ri @ Rj + Rj @ Ri))) / 2.0 - mean[i] * mean[j]
    sigma = 0.5 * (sigma + sigma.T)
    return CovarianceMatrix(sigma, mean)

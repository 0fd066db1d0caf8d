"""Input-state families and thermal environment states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CutoffTooSmall, TargetUnreachable
from .fock import Ket, check_cutoff, mean_energy

TAIL_TOL = 1e-10


def two_mode_squeezed_ket(lam: float, cutoff: int, *, strict: bool = True) -> Ket:
    """Two-mode squeezed vacuum ``sum_n lam**n sqrt(1 - lam**2) |n, n>``.

    The series is cut at ``n = cutoff - 1`` and renormalized.  With
    ``strict`` the discarded tail, bounded by ``lam**(2 (cutoff - 1))``,
    must stay below 1e-10.
    """
    d = check_cutoff(cutoff)
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"squeezing parameter must lie in [0, 1), got {lam}")
    tail = lam ** (2 * (d - 1))
    if strict and tail >= TAIL_TOL:
        raise CutoffTooSmall(f"TMSS lambda={lam} needs a larger cutoff than {d} (tail {tail:.3g})")
    n = np.arange(d)
    coeffs = lam**n * math.sqrt(1.0 - lam * lam)
    amps = np.zeros(d * d, dtype=complex)
    amps[n * d + n] = coeffs
    return Ket.from_amplitudes(amps, d)


def pnes_ket(coefficients: Sequence[complex], cutoff: int) -> Ket:
    """Photon-number-entangled state ``sum_n c_n |n, n>``."""
    d = check_cutoff(cutoff)
    c = np.asarray(coefficients, dtype=complex).reshape(-1)
    if c.size > d:
        raise ValueError(f"{c.size} PNES terms do not fit in cutoff {d}")
    norm2 = float(np.sum(np.abs(c) ** 2))
    if abs(norm2 - 1.0) > 1e-12:
        raise ValueError(f"PNES coefficients must be normalized (sum |c|^2 = {norm2!r})")
    n = np.arange(c.size)
    amps = np.zeros(d * d, dtype=complex)
    amps[n * d + n] = c
    return Ket.from_amplitudes(amps, d)


def thermal_density(mean_photons: float, cutoff: int, *, strict: bool = True) -> np.ndarray:
    """Single-mode thermal state with ``p_n = N**n / (N + 1)**(n + 1)``."""
    d = check_cutoff(cutoff)
    N = float(mean_photons)
    if N < 0:
        raise ValueError(f"thermal occupation must be >= 0, got {N}")
    if N == 0:
        rho = np.zeros((d, d), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    ratio = N / (N + 1.0)
    tail = ratio**d / (N + 1.0)
    if strict and tail >= TAIL_TOL:
        raise CutoffTooSmall(f"thermal N={N} needs a larger cutoff than {d} (tail {tail:.3g})")
    p = ratio ** np.arange(d) / (N + 1.0)
    return np.diag(p / p.sum()).astype(complex)


def tmss_energy(lam: float) -> float:
    """Untruncated total photon number of the TMSS, ``2 lam^2 / (1 - lam^2)``."""
    return 2.0 * lam * lam / (1.0 - lam * lam)


@dataclass(frozen=True)
class StateFamily:
    """One-parameter family of pure two-mode states.

    ``build(param, cutoff, strict)`` returns the :class:`Ket`;
    ``bracket`` is the parameter interval on which the mean energy is
    monotone, used by :func:`match_energy`.
    """

    name: str
    build: Callable[[float, int, bool], Ket] = field(repr=False)
    bracket: tuple[float, float]
    gaussian: bool = False

    def __call__(self, param: float, cutoff: int, *, strict: bool = True) -> Ket:
        return self.build(param, cutoff, strict)


def tmss_family() -> StateFamily:
    return StateFamily(
        "tmss",
        lambda lam, d, strict: two_mode_squeezed_ket(lam, d, strict=strict),
        (0.0, 0.999),
        gaussian=True,
    )


def two_term_pnes_family(level: int) -> StateFamily:
    """``cos(theta) |0,0> + sin(theta) |level, level>``."""
    if level < 1:
        raise ValueError("PNES level must be >= 1")

    def build(theta, d, strict):
        c = np.zeros(level + 1)
        c[0], c[level] = math.cos(theta), math.sin(theta)
        return pnes_ket(c, d)

    return StateFamily(f"pnes_0{level}", build, (0.0, math.pi / 2))


def three_term_pnes_family(levels: tuple[int, int], phi: float) -> StateFamily:
    """``cos(theta)|0,0> + sin(theta) (cos(phi)|p,p> + sin(phi)|q,q>)``.

    ``phi`` fixes the relative weight of the two excited terms; ``theta``
    is the energy-setting parameter.
    """
    p, q = levels
    if not 1 <= p < q:
        raise ValueError(f"three-term PNES needs levels 1 <= p < q, got {levels}")

    def build(theta, d, strict):
        c = np.zeros(q + 1)
        c[0] = math.cos(theta)
        c[p] = math.sin(theta) * math.cos(phi)
        c[q] = math.sin(theta) * math.sin(phi)
        return pnes_ket(c, d)

    return StateFamily(f"pnes_0{p}{q}", build, (0.0, math.pi / 2))


def match_energy(
    target: float,
    family: StateFamily,
    cutoff: int,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Bisect the family parameter until its mean energy hits ``target``.

    Probes are built non-strictly so the search may visit parameters the
    cutoff cannot represent accurately; the caller builds the final state
    strictly.

    Raises:
        TargetUnreachable: the bracket energies do not straddle ``target``.
    """

    def energy(p):
        return mean_energy(family(p, cutoff, strict=False))

    lo, hi = family.bracket
    e_lo, e_hi = energy(lo), energy(hi)
    if abs(e_lo - target) <= tol:
        return lo
    if abs(e_hi - target) <= tol:
        return hi
    if not min(e_lo, e_hi) < target < max(e_lo, e_hi):
        raise TargetUnreachable(
            f"{family.name}: energy {target} outside [{e_lo:.6g}, {e_hi:.6g}] at cutoff {cutoff}"
        )
    increasing = e_hi > e_lo
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        e_mid = energy(mid)
        if abs(e_mid - target) <= tol:
            return mid
        if (e_mid < target) == increasing:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            break
    if abs(energy(mid) - target) > tol:
        raise TargetUnreachable(f"{family.name}: bisection stalled at energy {energy(mid)!r}")
    return mid

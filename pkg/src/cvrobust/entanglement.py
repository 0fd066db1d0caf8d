"""Negativity-based entanglement and separation times for Fock-space states."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import (
    ChannelKind,
    ChannelParams,
    IntegratorConfig,
    Propagator,
    _require,
    check_health,
)
from .errors import NeverSeparates, NoSeparationFound
from .fock import as_density, partial_transpose

SEPARATION_THRESHOLD = 1e-7


@dataclass(frozen=True)
class NegativityResult:
    negativity: float
    log_negativity: float
    min_pt_eigenvalue: float


def log_negativity(rho) -> NegativityResult:
    """Negativity and natural-log negativity from the partial-transpose spectrum."""
    pt = partial_transpose(as_density(rho))
    eigs = np.linalg.eigvalsh(0.5 * (pt + pt.conj().T))
    neg = float(np.sum(np.clip(-eigs, 0.0, None)))
    return NegativityResult(neg, math.log1p(2.0 * neg), float(eigs[0]))


def is_ppt(rho, tol: float = 1e-9) -> bool:
    if not tol > 0:
        raise ValueError("tol must be positive")
    return log_negativity(rho).min_pt_eigenvalue >= -tol


@dataclass(frozen=True)
class SeparationTime:
    tau: float
    bracket_low: float
    bracket_high: float
    achieved_tol: float
    probes: int = 0


def separation_time(
    rho0,
    params: ChannelParams,
    config: IntegratorConfig | None = None,
    tol_time: float = 1e-4,
    threshold: float = SEPARATION_THRESHOLD,
    march_step: float | None = None,
    horizon: float | None = None,
) -> SeparationTime:
    """Earliest time the negativity drops to ``threshold`` or below.

    A forward march in steps of ``0.05 / gamma`` brackets the crossing;
    bisection then narrows the bracket to ``tol_time``, re-integrating from
    ``t = 0`` for each probe.  ``tau`` is the upper end of the final
    bracket, i.e. the earliest time actually observed to be separable.

    Raises:
        NeverSeparates: both thermal occupations are zero.
        NoSeparationFound: negativity above threshold at the horizon
            (default ``50 / gamma``).
    """
    _require(params, ChannelKind.LOSS_THERMAL)
    if params.n1 == 0 and params.n2 == 0:
        raise NeverSeparates("pure loss keeps entanglement for all finite times")
    if not tol_time > 0:
        raise ValueError("tol_time must be positive")
    config = config or IntegratorConfig()
    step = march_step if march_step is not None else 0.05 / params.gamma
    horizon = horizon if horizon is not None else 50.0 / params.gamma
    rho0 = as_density(rho0)
    probes = 0

    def entangled(prop, t):
        nonlocal probes
        probes += 1
        rho = prop.state_at(t)
        check_health(rho, t)
        return log_negativity(rho).negativity > threshold

    march = Propagator(rho0, params, config)
    if not entangled(march, 0.0):
        return SeparationTime(0.0, 0.0, 0.0, 0.0, probes)

    lo, hi, k = 0.0, None, 0
    while hi is None:
        k += 1
        t = min(k * step, horizon)
        if entangled(march, t):
            lo = t
            if t >= horizon:
                raise NoSeparationFound(f"negativity above {threshold:g} at horizon t={horizon:g}")
        else:
            hi = t

    while hi - lo > tol_time:
        mid = 0.5 * (lo + hi)
        if entangled(Propagator(rho0, params, config), mid):
            lo = mid
        else:
            hi = mid
    return SeparationTime(hi, lo, hi, hi - lo, probes)

"""Maximize heralding success probability at a fixed fidelity floor.

The fidelity constraint is monotone in each search variable for every scheme,
which the optimizers exploit: the constraint is inverted in closed form (Fock
single) or by bisection on the feasible side (coherent schemes), and the one
remaining free angle is line-searched by golden section seeded from a coarse
grid. Everything is derivative-free and deterministic: fixed iteration counts,
no RNG, so identical inputs give bit-identical results.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import protocol
from .core import (
    CavityParams,
    effective_cooperativity_ring,
    reflection_probability,
    with_cooperativity,
)

N_MAX_CEILING = 1e3  # photon-budget search cap; all exponentials saturate below it
_CONSTRAINT_TOL = 1e-9
_BISECT_STEPS = 200
_GOLDEN_STEPS = 80
_COARSE_POINTS = 121

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"


class Scheme(str, enum.Enum):
    FOCK_SINGLE = "fock-single"
    FOCK_DOUBLE = "fock-double"
    COHERENT_SINGLE = "coherent-single"
    COHERENT_DOUBLE = "coherent-double"


@dataclass(frozen=True)
class OptimizationResult:
    """One optimizer answer; `n_max_opt` is None for the Fock schemes and
    `status` is "infeasible" when no point satisfies the fidelity floor."""

    x: float
    scheme: Scheme
    eta: float
    f_target: float
    phi_opt: float | None
    n_max_opt: float | None
    p_success: float
    fidelity_achieved: float | None
    status: str = STATUS_OK


@dataclass(frozen=True)
class SweepSpec:
    """Grid request for figure-style data series."""

    x_grid: tuple[float, ...]
    eta: float
    f_target: float
    scheme: Scheme

    def __post_init__(self) -> None:
        if len(self.x_grid) == 0:
            raise ValueError("x_grid must be nonempty")
        if any(b <= a for a, b in zip(self.x_grid, self.x_grid[1:])):
            raise ValueError("x_grid must be strictly increasing")


def default_x_grid(n_points: int = 40) -> tuple[float, ...]:
    """Log-spaced cooperativity grid covering the regime of interest."""
    return tuple(np.logspace(math.log10(0.05), math.log10(2.0), n_points))


def _check_target(f_target: float) -> None:
    if not 0.5 < f_target < 1.0:
        raise ValueError("f_target must lie in (0.5, 1)")


def _infeasible(params: CavityParams, scheme: Scheme,
                f_target: float) -> OptimizationResult:
    return OptimizationResult(
        x=params.cooperativity, scheme=scheme, eta=params.eta,
        f_target=f_target, phi_opt=None, n_max_opt=None, p_success=0.0,
        fidelity_achieved=None, status=STATUS_INFEASIBLE)


def optimize_fock_single(params: CavityParams,
                         f_target: float) -> OptimizationResult:
    """Best preparation angle for the single-click Fock scheme.

    F = 1 / (1 + tan^2(phi) R2 / (2 R1)) is strictly decreasing in phi while
    P_s grows with p1, so the optimum sits exactly on the constraint:
    tan^2(phi) = 2 (R1/R2) (1 - F) / F and P_s = eta p1 R1 / F.
    """
    _check_target(f_target)
    out0 = protocol.fock_single(params, math.pi / 4)
    if out0.status != protocol.STATUS_OK:
        return _infeasible(params, Scheme.FOCK_SINGLE, f_target)
    x = params.cooperativity
    xe = effective_cooperativity_ring(params)
    r1 = reflection_probability(xe, 1)
    r2 = reflection_probability(xe, 2)
    tan2 = 2.0 * (r1 / r2) * (1.0 - f_target) / f_target
    phi = math.atan(math.sqrt(tan2))
    check = protocol.fock_single(params, phi)
    if check.fidelity is None or abs(check.fidelity - f_target) > 1e-10:
        raise RuntimeError(
            f"constraint inversion failed: wanted F={f_target}, "
            f"got {check.fidelity}")
    return OptimizationResult(
        x=x, scheme=Scheme.FOCK_SINGLE, eta=params.eta, f_target=f_target,
        phi_opt=phi, n_max_opt=None, p_success=check.p_success,
        fidelity_achieved=check.fidelity)


def optimize_fock_double(params: CavityParams,
                         f_target: float) -> OptimizationResult:
    """Double-click Fock scheme: phi is pinned to pi/4 and the heralded state
    is pure (F = 1 at f = 0), so the constraint never binds; infeasible only
    when the mirror fidelity itself falls below target."""
    _check_target(f_target)
    out = protocol.fock_double(params)
    if out.fidelity is None or out.fidelity < f_target - _CONSTRAINT_TOL:
        return _infeasible(params, Scheme.FOCK_DOUBLE, f_target)
    return OptimizationResult(
        x=params.cooperativity, scheme=Scheme.FOCK_DOUBLE, eta=params.eta,
        f_target=f_target, phi_opt=math.pi / 4, n_max_opt=None,
        p_success=out.p_success, fidelity_achieved=out.fidelity)


def _coherent_single_budget(params: CavityParams, phi: float,
                            f_target: float) -> float | None:
    """Largest n_max with F >= f_target at this phi; the ceiling when the
    constraint never binds; None when even n_max -> 0 misses the target."""
    def fid(nm: float) -> float:
        out = protocol.coherent_single(params, phi, nm)
        return -1.0 if out.fidelity is None else out.fidelity

    # F(n_max) is nonincreasing, F(0+) = p1c(0)
    if fid(1e-9) < f_target:
        return None
    if fid(N_MAX_CEILING) >= f_target:
        return N_MAX_CEILING
    lo, hi = 1e-9, N_MAX_CEILING
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        if fid(mid) >= f_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, lo):
            break
    return lo  # feasible endpoint, so achieved F >= target


def optimize_coherent_single(params: CavityParams,
                             f_target: float) -> OptimizationResult:
    """Best (phi, n_max) for the single-click coherent scheme.

    Inner variable: at fixed phi the fidelity is nonincreasing and P_s
    nondecreasing in n_max, so the best budget is the largest feasible one
    (bisection). Outer variable: coarse grid over phi plus golden-section
    refinement between the grid neighbors of the best point.
    """
    _check_target(f_target)

    def ps_at(phi: float) -> float:
        nm = _coherent_single_budget(params, phi, f_target)
        if nm is None:
            return -1.0
        return protocol.coherent_single(params, phi, nm).p_success

    phis = np.linspace(1e-4, math.pi / 2 - 1e-4, _COARSE_POINTS)
    values = [ps_at(p) for p in phis]
    best = int(np.argmax(values))
    if values[best] <= 0.0:
        return _infeasible(params, Scheme.COHERENT_SINGLE, f_target)

    lo = phis[max(0, best - 1)]
    hi = phis[min(len(phis) - 1, best + 1)]
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    c1 = hi - inv * (hi - lo)
    c2 = lo + inv * (hi - lo)
    f1, f2 = ps_at(c1), ps_at(c2)
    for _ in range(_GOLDEN_STEPS):
        if f1 < f2:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + inv * (hi - lo)
            f2 = ps_at(c2)
        else:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - inv * (hi - lo)
            f1 = ps_at(c1)
        if hi - lo < 1e-10:
            break
    phi = float(0.5 * (lo + hi))
    nm = _coherent_single_budget(params, phi, f_target)
    if nm is None:  # golden section cannot leave the feasible bracket
        return _infeasible(params, Scheme.COHERENT_SINGLE, f_target)
    out = protocol.coherent_single(params, phi, nm)
    return OptimizationResult(
        x=params.cooperativity, scheme=Scheme.COHERENT_SINGLE,
        eta=params.eta, f_target=f_target, phi_opt=phi, n_max_opt=nm,
        p_success=out.p_success, fidelity_achieved=out.fidelity)


def optimize_coherent_double(params: CavityParams,
                             f_target: float) -> OptimizationResult:
    """Best photon budget for the double-click coherent scheme (phi = pi/4).

    F(n_max) falls monotonically from 1 toward its infinite-budget limit;
    monotonicity is asserted on a coarse grid before bisecting, per contract.
    When the limit still clears the target the budget cap is returned and
    P_s sits on its 1/2 plateau.
    """
    _check_target(f_target)

    def fid(nm: float) -> float:
        out = protocol.coherent_double(params, nm)
        return -1.0 if out.fidelity is None else out.fidelity

    if fid(1e-9) < 0.0:
        return _infeasible(params, Scheme.COHERENT_DOUBLE, f_target)

    probe = np.logspace(-6, math.log10(N_MAX_CEILING), 60)
    fvals = [fid(nm) for nm in probe]
    if any(b > a + 1e-9 for a, b in zip(fvals, fvals[1:])):
        raise RuntimeError(
            "fidelity is not monotone in n_max on the probe grid; "
            "bisection would be unsound for these parameters")

    if fvals[-1] >= f_target:
        nm = N_MAX_CEILING
    else:
        lo, hi = 1e-9, N_MAX_CEILING
        if fid(lo) < f_target:
            return _infeasible(params, Scheme.COHERENT_DOUBLE, f_target)
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if fid(mid) >= f_target:
                lo = mid
            else:
                hi = mid
        nm = lo
    out = protocol.coherent_double(params, nm)
    return OptimizationResult(
        x=params.cooperativity, scheme=Scheme.COHERENT_DOUBLE,
        eta=params.eta, f_target=f_target, phi_opt=math.pi / 4,
        n_max_opt=nm, p_success=out.p_success,
        fidelity_achieved=out.fidelity)


_OPTIMIZERS = {
    Scheme.FOCK_SINGLE: optimize_fock_single,
    Scheme.FOCK_DOUBLE: optimize_fock_double,
    Scheme.COHERENT_SINGLE: optimize_coherent_single,
    Scheme.COHERENT_DOUBLE: optimize_coherent_double,
}


def optimize(params: CavityParams, scheme: Scheme,
             f_target: float) -> OptimizationResult:
    """Dispatch to the per-scheme optimizer."""
    return _OPTIMIZERS[Scheme(scheme)](params, f_target)


def sweep(spec: SweepSpec) -> list[OptimizationResult]:
    """One optimization per grid point, row-ordered by x.

    Infeasible points are recorded in-row with status "infeasible"; the sweep
    never aborts. Rows are independent, so the output does not depend on
    evaluation order.
    """
    base = CavityParams.from_cooperativity(1.0, eta=spec.eta)
    rows = []
    for x in spec.x_grid:
        params = with_cooperativity(base, x)
        row = optimize(params, spec.scheme, spec.f_target)
        rows.append(dataclasses.replace(row, x=float(x)))
    return rows

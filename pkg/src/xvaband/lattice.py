"""Binomial-lattice cross-check for the reduced valuation-adjustment equations.

A recombining two-branch lattice (equiprobable +-sqrt(dt) Brownian steps)
discretizes the stock under the valuation measure; the adjustment is obtained
by backward induction with an implicit-in-value, explicit-in-gradient step.
The scheme shares no discretization code with the PDE engine, so agreement
between the two is evidence rather than tautology.

Two equivalent routes are provided:

* ``level="adjustment"``: terminal data zero, the reduced adjustment driver,
  and the diffusion-gradient slot fed with the lattice estimate plus the
  agent's closed-form delta exposure (the driver prices repo/funding
  asymmetries on physical positions, which include the mark's hedge);
* ``level="value"``: terminal data equal to the payoff, the wealth-level
  reduced driver, and the raw lattice gradient; the adjustment is the root
  value net of the agent's mark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import claims, drivers
from .market import MarketModel
from .pde import NumericsError

LEVELS = ("adjustment", "value")
FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 200


@dataclass(frozen=True)
class OracleSolution:
    """Root-node outputs of one backward induction."""

    side: str
    level: str
    n_steps: int
    root_value: float       # solved quantity at the root (level-dependent)
    root_gradient: float    # Brownian-integrand estimate at the root
    root_mark: float        # agent's mark at the root
    adjustment: float       # valuation adjustment at time zero

    @property
    def xva(self) -> float:
        return self.adjustment


def solve_reduced(model: MarketModel, claim: claims.ClaimSpec, n_steps: int,
                  level: str = "adjustment",
                  side: str = drivers.SELLER) -> OracleSolution:
    """Backward induction for the reduced equation at the requested level."""
    drivers._check_side(side)
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}, got {level!r}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")

    T = claim.maturity
    dt = T / n_steps
    sdt = math.sqrt(dt)
    sigma = model.equity.sigma
    drift = model.rates.discount - 0.5 * sigma * sigma
    s0 = model.equity.spot

    lip = drivers.reduced_lipschitz_bound(model)
    if dt * lip >= 1.0:
        raise NumericsError(
            f"time step too large for the implicit fixed point "
            f"(dt * Lipschitz = {dt * lip:.3g} >= 1); "
            f"use n_steps >= {math.ceil(2.0 * lip * T)}")

    def stock_levels(k: int) -> np.ndarray:
        j = np.arange(k + 1)
        w = (2.0 * j - k) * sdt
        return s0 * np.exp(drift * (k * dt) + sigma * w)

    if level == "value":
        u = np.asarray(claim.payoff(stock_levels(n_steps)), dtype=float)
        drift_fn = drivers.reduced_drift_value
        shift_gradient = False
    else:
        u = np.zeros(n_steps + 1)
        drift_fn = drivers.reduced_drift
        shift_gradient = True

    root_gradient = 0.0
    for k in range(n_steps - 1, -1, -1):
        t = k * dt
        s = stock_levels(k)
        expectation = 0.5 * (u[1:k + 2] + u[0:k + 1])
        gradient = (u[1:k + 2] - u[0:k + 1]) / (2.0 * sdt)
        mark, delta = claims.agent_value_grid(model, claim, t, s)
        z = gradient + (sigma * s * delta if shift_gradient else 0.0)

        new_u = expectation.copy()
        converged = False
        for _ in range(FIXED_POINT_MAX_ITER):
            candidate = expectation + dt * drift_fn(model, side, t, new_u, z, mark)
            if float(np.max(np.abs(candidate - new_u))) < FIXED_POINT_TOL:
                new_u = candidate
                converged = True
                break
            new_u = candidate
        if not converged:
            raise NumericsError(
                f"implicit fixed point did not converge at step {k}; "
                f"use n_steps >= {math.ceil(2.0 * lip * T)}")
        if not np.all(np.isfinite(new_u)):
            raise NumericsError(f"non-finite lattice values at step {k}")
        if k == 0:
            root_gradient = float(gradient[0])
        u = new_u

    root = float(u[0])
    mark0 = claims.agent_value(model, claim, 0.0, s0).value
    adjustment = root - mark0 if level == "value" else root
    return OracleSolution(side=side, level=level, n_steps=n_steps,
                          root_value=root, root_gradient=root_gradient,
                          root_mark=mark0, adjustment=adjustment)


def band(model: MarketModel, claim: claims.ClaimSpec,
         n_steps: int) -> tuple[float, float]:
    """(buyer adjustment, seller adjustment) at time zero.

    The spread between the two is the width of the candidate no-arbitrage
    interval of prices for the claim.
    """
    buyer = solve_reduced(model, claim, n_steps, side=drivers.BUYER)
    seller = solve_reduced(model, claim, n_steps, side=drivers.SELLER)
    return buyer.adjustment, seller.adjustment

"""Drift functionals (BSDE drivers) of the replication problem.

Everything downstream -- the PDE engine and the lattice cross-check -- consumes
the functions defined here, so they are the single source of truth for the
nonlinearity.  All functions accept scalars or numpy arrays of equal shape.

Conventions
-----------
* ``side`` is "seller" (hedging a short position in the claim) or "buyer"
  (hedging a long position).  Buyer-side values are always produced through
  the exact reflection ``buyer(u, z, mark) = -seller(-u, -z, -mark)``; they are
  never coded independently, which makes the antisymmetry structural.
* ``x⁺ = max(x, 0)`` and ``x⁻ = max(-x, 0)``, so ``x⁺ - x⁻ = x`` exactly and
  both vanish at 0.
* ``z`` in the wealth-level driver is the diffusion exposure of the full
  replication portfolio (number of stock shares times sigma times spot, in
  currency units).  In the reduced adjustment-level driver the same slot must
  receive the full-portfolio exposure as well, i.e. the adjustment hedge plus
  the agent's mark-to-market hedge; the collateral and repo costs are driven
  by physical positions, not by the adjustment in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .market import MarketModel

SELLER = "seller"
BUYER = "buyer"
SIDES = (SELLER, BUYER)


def pos(x):
    return np.maximum(x, 0.0)


def neg(x):
    return np.maximum(-x, 0.0)


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be 'seller' or 'buyer', got {side!r}")


@dataclass(frozen=True)
class CloseoutValues:
    """Wealth the hedger must hold when the position is torn up at a default.

    ``wealth_*`` are at the level of the full position value, ``adjustment_*``
    net of the agent's mark (always <= 0 for own default, >= 0 for
    counterparty default).
    """

    wealth_own_default: float
    wealth_cpty_default: float
    adjustment_own_default: float
    adjustment_cpty_default: float


def closeout_adjustments(model: MarketModel, mark):
    """Adjustment-level close-out pair (own-default, cpty-default) for a given mark.

    Own default wipes the uncollateralized in-the-money part of the
    counterparty's claim at the hedger's loss rate (a gain to the hedger,
    hence <= 0 as a cost adjustment); counterparty default symmetrically hits
    the hedger's uncollateralized claim.
    """
    c = model.credit
    if c is None:
        zero = np.multiply(mark, 0.0)
        return zero, zero
    residual = (1.0 - model.alpha) * np.asarray(mark, dtype=float)
    own = -c.loss_own * pos(residual)
    cpty = c.loss_cpty * neg(residual)
    return own, cpty


def closeout(model: MarketModel, mark: float) -> CloseoutValues:
    """Close-out values at both levels for a scalar mark."""
    own, cpty = closeout_adjustments(model, mark)
    return CloseoutValues(
        wealth_own_default=mark + float(own),
        wealth_cpty_default=mark + float(cpty),
        adjustment_own_default=float(own),
        adjustment_cpty_default=float(cpty),
    )


def wealth_drift(model: MarketModel, side: str, t, v, z, z_own, z_cpty, mark):
    """Drift of the replication wealth BSDE.

    ``v`` is the wealth, ``z`` the stock-diffusion exposure, ``z_own`` and
    ``z_cpty`` the own/counterparty default-jump exposures, and ``mark`` the
    agent's valuation of the claim (which fixes the collateral balance).
    """
    _check_side(side)
    if side == BUYER:
        return -wealth_drift(model, SELLER, t, -v, -z, -z_own, -z_cpty,
                             np.multiply(mark, -1.0))
    r = model.rates
    sigma = model.equity.sigma
    collateral = model.alpha * np.asarray(mark, dtype=float)
    funding = v + z_own + z_cpty - collateral
    return -(r.fund_lend * pos(funding) - r.fund_borrow * neg(funding)
             + (r.discount - r.repo_borrow) * pos(z) / sigma
             - (r.discount - r.repo_lend) * neg(z) / sigma
             - r.discount * z_own - r.discount * z_cpty
             + r.coll_earn * pos(collateral) - r.coll_pay * neg(collateral))


def adjustment_drift(model: MarketModel, side: str, t, adj, z, z_own, z_cpty, mark):
    """Drift of the valuation-adjustment BSDE (wealth net of the agent's mark).

    Identity with the wealth-level driver: shifting the value argument by the
    mark and adding the mark's own discount drift gives back this function,
    for any z arguments.
    """
    _check_side(side)
    if side == BUYER:
        return -adjustment_drift(model, SELLER, t, -adj, -z, -z_own, -z_cpty,
                                 np.multiply(mark, -1.0))
    r = model.rates
    sigma = model.equity.sigma
    alpha = model.alpha
    mark = np.asarray(mark, dtype=float)
    collateral = alpha * mark
    funding = adj + z_own + z_cpty + (1.0 - alpha) * mark
    return -(r.fund_lend * pos(funding) - r.fund_borrow * neg(funding)
             + (r.discount - r.repo_borrow) * pos(z) / sigma
             - (r.discount - r.repo_lend) * neg(z) / sigma
             - r.discount * z_own - r.discount * z_cpty
             + r.coll_earn * pos(collateral) - r.coll_pay * neg(collateral)) \
        + r.discount * mark


def reduced_drift(model: MarketModel, side: str, t, u, z, mark):
    """Driver of the reduced (pre-default, Brownian-only) adjustment BSDE.

    The jump exposures are pinned to the distance between the close-out
    adjustments and the current adjustment value; default risk enters through
    the intensity-weighted pull towards the close-outs.  Models without a
    credit block have no bonds to hold: both jump slots are identically zero
    and no intensity terms appear.

    ``z`` must carry the full-portfolio diffusion exposure (adjustment hedge
    plus the agent's delta hedge), in currency units.
    """
    _check_side(side)
    if side == BUYER:
        return -reduced_drift(model, SELLER, t, -u, -z, np.multiply(mark, -1.0))
    if model.credit is None:
        zero = np.multiply(np.asarray(u, dtype=float), 0.0)
        return adjustment_drift(model, SELLER, t, u, z, zero, zero, mark)
    h_own = model.default_intensity("own")
    h_cpty = model.default_intensity("cpty")
    adj_own, adj_cpty = closeout_adjustments(model, mark)
    z_own = adj_own - u
    z_cpty = adj_cpty - u
    return (h_own * z_own + h_cpty * z_cpty
            + adjustment_drift(model, SELLER, t, u, z, z_own, z_cpty, mark))


def reduced_drift_value(model: MarketModel, side: str, t, u, z, mark):
    """Driver of the reduced BSDE at the full position-value level.

    Same structure as :func:`reduced_drift` but with wealth-level close-outs
    and the wealth-level drift; terminal data for this equation is the claim
    payoff itself.  Used by the lattice cross-check as a second, independent
    route to the same adjustment.
    """
    _check_side(side)
    if side == BUYER:
        return -reduced_drift_value(model, SELLER, t, -u, -z,
                                    np.multiply(mark, -1.0))
    if model.credit is None:
        zero = np.multiply(np.asarray(u, dtype=float), 0.0)
        return wealth_drift(model, SELLER, t, u, z, zero, zero, mark)
    h_own = model.default_intensity("own")
    h_cpty = model.default_intensity("cpty")
    adj_own, adj_cpty = closeout_adjustments(model, mark)
    mark = np.asarray(mark, dtype=float)
    z_own = (mark + adj_own) - u
    z_cpty = (mark + adj_cpty) - u
    return (h_own * z_own + h_cpty * z_cpty
            + wealth_drift(model, SELLER, t, u, z, z_own, z_cpty, mark))


def reduced_lipschitz_bound(model: MarketModel) -> float:
    """Upper bound on the u-Lipschitz constant of the reduced driver.

    Used to size implicit fixed-point steps: contraction needs
    dt * bound < 1.
    """
    r = model.rates
    bound = max(r.fund_lend, r.fund_borrow) + 2.0 * r.discount
    if model.credit is not None:
        bound += (model.default_intensity("own")
                  + model.default_intensity("cpty"))
    return bound


def jump_targets(model: MarketModel, side: str, mark):
    """Adjustment values attained at own/counterparty default, per side.

    For the seller these are the close-out adjustments at the mark; for the
    buyer the reflected ones (no own-default relief on a long position in a
    nonnegative claim, a counterparty-default loss instead).
    """
    _check_side(side)
    if side == SELLER:
        return closeout_adjustments(model, mark)
    own, cpty = closeout_adjustments(model, np.multiply(mark, -1.0))
    return np.multiply(own, -1.0), np.multiply(cpty, -1.0)


@dataclass(frozen=True)
class ReplicationStrategy:
    """Portfolio replicating the valuation adjustment at one state.

    Dollar positions are primary (share counts in the cash accounts depend on
    the accrual path of the account and are reported assuming the current rate
    branch prevailed from time zero; they are exact at t = 0 and whenever the
    relevant rates are symmetric).  The wealth identity

        stock + bond_own + bond_cpty + funding + repo - collateral_account
        == adjustment

    holds by construction; at a default of either party the surviving
    positions reproduce the close-out adjustment exactly.
    """

    side: str
    t: float
    spot: float
    adjustment: float
    mark: float
    stock_shares: float
    stock_dollars: float
    bond_own_shares: float
    bond_own_dollars: float
    bond_cpty_shares: float
    bond_cpty_dollars: float
    repo_dollars: float
    collateral_account_dollars: float
    funding_dollars: float
    boundary: bool = False

    @property
    def wealth(self) -> float:
        return (self.stock_dollars + self.bond_own_dollars
                + self.bond_cpty_dollars + self.funding_dollars
                + self.repo_dollars - self.collateral_account_dollars)

    def account_shares(self, model: MarketModel) -> dict[str, float]:
        """Share counts of the funding/repo/collateral accounts (see class note)."""
        r = model.rates
        t = self.t
        return {
            "funding": self.funding_dollars
            / math.exp(r.funding_rate(self.funding_dollars) * t),
            "repo": self.repo_dollars
            / math.exp(r.repo_rate(self.repo_dollars) * t),
            "collateral": self.collateral_account_dollars
            / math.exp(r.collateral_rate(-self.collateral_account_dollars) * t),
        }


def build_strategy(model: MarketModel, claim, side: str, t: float, s: float,
                   adjustment: float, mark: float, stock_shares: float,
                   boundary: bool = False) -> ReplicationStrategy:
    """Assemble the replication portfolio from the adjustment and its stock hedge.

    Bond positions are pinned by the default-jump exposures (each bond holding
    must absorb the jump from the current adjustment to its close-out target);
    the repo account offsets the stock leg; the collateral account carries the
    posted/received margin; the funding account balances the wealth identity.
    Models without a credit block hold no bonds.
    """
    _check_side(side)
    maturity = claim.maturity
    stock_dollars = stock_shares * s
    repo_dollars = -stock_dollars
    if model.credit is not None:
        jump_own, jump_cpty = jump_targets(model, side, mark)
        bond_own_dollars = adjustment - float(jump_own)
        bond_cpty_dollars = adjustment - float(jump_cpty)
        p_own = model.bond_price("own", t, maturity)
        p_cpty = model.bond_price("cpty", t, maturity)
        bond_own_shares = bond_own_dollars / p_own
        bond_cpty_shares = bond_cpty_dollars / p_cpty
    else:
        bond_own_dollars = bond_cpty_dollars = 0.0
        bond_own_shares = bond_cpty_shares = 0.0
    alpha = model.alpha
    posted = alpha * mark if side == SELLER else -alpha * mark
    collateral_account_dollars = -posted
    funding_dollars = (adjustment - stock_dollars - bond_own_dollars
                       - bond_cpty_dollars - repo_dollars
                       + collateral_account_dollars)
    return ReplicationStrategy(
        side=side, t=t, spot=s, adjustment=adjustment, mark=mark,
        stock_shares=stock_shares, stock_dollars=stock_dollars,
        bond_own_shares=bond_own_shares, bond_own_dollars=bond_own_dollars,
        bond_cpty_shares=bond_cpty_shares, bond_cpty_dollars=bond_cpty_dollars,
        repo_dollars=repo_dollars,
        collateral_account_dollars=collateral_account_dollars,
        funding_dollars=funding_dollars, boundary=boundary)

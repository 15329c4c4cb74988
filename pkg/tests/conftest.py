"""Shared fixtures: the asymmetric benchmark model and symmetric-regime models."""

import numpy as np
import pytest

from xvaband import (ClaimSpec, CreditParams, EquityParams, MarketModel,
                     RateSet, SymmetricRates, symmetric_model)

BENCH_RATES = RateSet(fund_lend=0.05, fund_borrow=0.08, repo_lend=0.05,
                      repo_borrow=0.05, coll_earn=0.01, coll_pay=0.01,
                      discount=0.01)
BENCH_CREDIT = CreditParams(mu_own=0.21, mu_cpty=0.16, loss_own=0.5,
                            loss_cpty=0.5)
EQUITY = EquityParams(spot=1.0, sigma=0.2)


@pytest.fixture
def atm_call():
    return ClaimSpec(kind="call", strike=1.0, maturity=1.0)


@pytest.fixture
def benchmark_model():
    """Asymmetric funding benchmark: treasury spread, symmetric repo/collateral."""
    return MarketModel(rates=BENCH_RATES, equity=EQUITY, credit=BENCH_CREDIT,
                       alpha=0.9)


def make_benchmark(alpha=0.9, fund_borrow=0.08, **credit_overrides):
    rates = RateSet(fund_lend=0.05, fund_borrow=fund_borrow, repo_lend=0.05,
                    repo_borrow=0.05, coll_earn=0.01, coll_pay=0.01,
                    discount=0.01)
    credit_kwargs = dict(mu_own=0.21, mu_cpty=0.16, loss_own=0.5, loss_cpty=0.5)
    credit_kwargs.update(credit_overrides)
    return MarketModel(rates=rates, equity=EQUITY,
                       credit=CreditParams(**credit_kwargs), alpha=alpha)


def make_symmetric(fund=0.08, repo=0.05, coll=0.01, alpha=0.0, credit=None):
    return symmetric_model(SymmetricRates(fund=fund, repo=repo, coll=coll),
                           EQUITY, credit=credit, alpha=alpha)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

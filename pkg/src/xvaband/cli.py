"""Batch front end: valuation, sweeps, table/figure data and validator reports.

Subcommands
-----------
value         single-point valuation with one or all engines
band          buyer/seller adjustment sweep over the collateralization level
table         funding-account positions on an (alpha, borrow-rate) grid
figure        CSV data behind the standard comparative-statics figures
validate      rate-condition report with nonzero exit on failure
convergence   refinement study against the symmetric-regime closed form

Configuration is a flat ``key = value`` text file (``#`` comments allowed);
every run is fully determined by the config plus documented numerical
defaults (400x400 PDE grid, 2000-step lattice).  CSV output is deterministic
byte-for-byte: 10 significant digits, ``.`` decimal separator, ``\\n`` line
endings, one header row.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import claims, closed_form, drivers, lattice, pde
from .market import (CreditParams, EquityParams, MarketModel, ModelError,
                     RateSet)

DEFAULT_NX = 400
DEFAULT_NT = 400
DEFAULT_STEPS = 2000
ENGINES = ("closed", "pde", "lattice", "all")

_RATE_KEYS = ("fund_lend", "fund_borrow", "repo_lend", "repo_borrow",
              "coll_earn", "coll_pay", "discount")
_CREDIT_KEYS = ("mu_own", "mu_cpty", "loss_own", "loss_cpty")
_FLOAT_KEYS = _RATE_KEYS + _CREDIT_KEYS + (
    "alpha", "spot", "sigma", "strike", "maturity",
    "sweep_start", "sweep_stop")
_INT_KEYS = ("nx", "nt", "steps", "sweep_points", "workers")
_STR_KEYS = ("kind", "engine", "out", "sweep_param")
_ALL_KEYS = set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_STR_KEYS) | {"allow_violations"}


@dataclass(frozen=True)
class RunConfig:
    """Fully parsed run description: model, claim, numerics, sweep, output."""

    model: MarketModel
    claim: claims.ClaimSpec
    engine: str = "pde"
    nx: int = DEFAULT_NX
    nt: int = DEFAULT_NT
    steps: int = DEFAULT_STEPS
    out: str | None = None
    workers: int = 1
    allow_violations: bool = False
    sweep_param: str | None = None
    sweep_start: float | None = None
    sweep_stop: float | None = None
    sweep_points: int = 21


def parse_config_text(text: str) -> dict:
    """Parse the flat key = value format; rejects unknown or repeated keys."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"config line {lineno}: repeated key {key!r}")
        if key in _FLOAT_KEYS:
            values[key] = float(val)
        elif key in _INT_KEYS:
            values[key] = int(val)
        elif key == "allow_violations":
            values[key] = val.lower() in ("1", "true", "yes")
        else:
            values[key] = val
    return values


def build_config(values: dict, overrides: dict | None = None) -> RunConfig:
    merged = dict(values)
    for k, v in (overrides or {}).items():
        if v is not None:
            merged[k] = v
    missing = [k for k in _RATE_KEYS if k not in merged]
    if missing:
        raise ValueError(f"config missing rate keys: {', '.join(missing)}")
    rates = RateSet(**{k: merged[k] for k in _RATE_KEYS})
    present = [k for k in _CREDIT_KEYS if k in merged]
    if present and len(present) != len(_CREDIT_KEYS):
        raise ValueError("credit keys must be given all together or not at all: "
                         f"got only {', '.join(present)}")
    credit = CreditParams(**{k: merged[k] for k in _CREDIT_KEYS}) if present else None
    equity = EquityParams(spot=merged.get("spot", 1.0),
                          sigma=merged.get("sigma", 0.2))
    allow = bool(merged.get("allow_violations", False))
    model = MarketModel(rates=rates, equity=equity, credit=credit,
                        alpha=merged.get("alpha", 0.0), allow_violations=allow)
    claim = claims.ClaimSpec(kind=merged.get("kind", "call"),
                             strike=merged.get("strike", 1.0),
                             maturity=merged.get("maturity", 1.0))
    engine = merged.get("engine", "pde")
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    cfg = RunConfig(model=model, claim=claim, engine=engine,
                    nx=merged.get("nx", DEFAULT_NX),
                    nt=merged.get("nt", DEFAULT_NT),
                    steps=merged.get("steps", DEFAULT_STEPS),
                    out=merged.get("out"), workers=merged.get("workers", 1),
                    allow_violations=allow,
                    sweep_param=merged.get("sweep_param"),
                    sweep_start=merged.get("sweep_start"),
                    sweep_stop=merged.get("sweep_stop"),
                    sweep_points=merged.get("sweep_points", 21))
    if cfg.sweep_points < 1 or cfg.nx < 3 or cfg.nt < 1 or cfg.steps < 1:
        raise ValueError("resolutions and sweep sizes must be positive")
    return cfg


# ---------------------------------------------------------------------------
# engine dispatch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointResult:
    engine: str
    mark: float
    xva_seller: float
    xva_buyer: float
    strategy_seller: drivers.ReplicationStrategy
    strategy_buyer: drivers.ReplicationStrategy

    @property
    def width(self) -> float:
        return self.xva_seller - self.xva_buyer


def _closed_point(model, claim) -> PointResult:
    t = 0.0
    s0 = model.equity.spot
    val = claims.agent_value(model, claim, t, s0)
    if model.credit is None:
        adj = closed_form.piterbarg_xva(model, claim, t, val.value)
        shares = closed_form.piterbarg_stock_strategy(model, claim, t, s0)
        strat_s = drivers.build_strategy(model, claim, drivers.SELLER, t, s0,
                                         adjustment=adj, mark=val.value,
                                         stock_shares=shares)
        strat_b = drivers.build_strategy(model, claim, drivers.BUYER, t, s0,
                                         adjustment=adj, mark=val.value,
                                         stock_shares=shares)
        return PointResult("closed", val.value, adj, adj, strat_s, strat_b)
    xva_s = closed_form.piterbarg_defaults_xva(model, claim, t, val.value,
                                               drivers.SELLER).total
    xva_b = closed_form.piterbarg_defaults_xva(model, claim, t, val.value,
                                               drivers.BUYER).total
    strat_s = closed_form.piterbarg_defaults_strategies(model, claim, t, s0,
                                                        drivers.SELLER)
    strat_b = closed_form.piterbarg_defaults_strategies(model, claim, t, s0,
                                                        drivers.BUYER)
    return PointResult("closed", val.value, xva_s, xva_b, strat_s, strat_b)


def _pde_point(model, claim, nx, nt) -> PointResult:
    s0 = model.equity.spot
    grid = pde.PdeGrid.default_for(model, claim, nx=nx, nt=nt)
    sol = pde.solve(model, claim, grid)
    mark = claims.agent_value(model, claim, 0.0, s0).value
    return PointResult("pde", mark,
                       pde.xva_at(sol, 0.0, s0, drivers.SELLER),
                       pde.xva_at(sol, 0.0, s0, drivers.BUYER),
                       pde.strategies(sol, 0.0, s0, drivers.SELLER),
                       pde.strategies(sol, 0.0, s0, drivers.BUYER))


def _lattice_point(model, claim, steps) -> PointResult:
    s0 = model.equity.spot
    sigma = model.equity.sigma
    mark = claims.agent_value(model, claim, 0.0, s0).value
    out = {}
    for side in drivers.SIDES:
        sol = lattice.solve_reduced(model, claim, steps, side=side)
        shares = sol.root_gradient / (sigma * s0)
        out[side] = (sol.adjustment,
                     drivers.build_strategy(model, claim, side, 0.0, s0,
                                            adjustment=sol.adjustment,
                                            mark=mark, stock_shares=shares))
    return PointResult("lattice", mark, out[drivers.SELLER][0],
                       out[drivers.BUYER][0], out[drivers.SELLER][1],
                       out[drivers.BUYER][1])


def evaluate_point(model: MarketModel, claim: claims.ClaimSpec, engine: str,
                   nx: int = DEFAULT_NX, nt: int = DEFAULT_NT,
                   steps: int = DEFAULT_STEPS) -> list[PointResult]:
    """Run one valuation with the requested engine(s)."""
    results = []
    if engine in ("closed", "all"):
        if model.rates.symmetric():
            results.append(_closed_point(model, claim))
        elif engine == "closed":
            raise ModelError("the closed engine requires symmetric rates")
    if engine in ("pde", "all"):
        results.append(_pde_point(model, claim, nx, nt))
    if engine in ("lattice", "all"):
        results.append(_lattice_point(model, claim, steps))
    return results


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.10g}"


def write_csv(header: list[str], rows: list[list[float]], out: str | None) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        print(f"wrote {len(rows)} rows to {out}")
    else:
        sys.stdout.write(text)


def _model_with(model: MarketModel, **changes) -> MarketModel:
    """Variant of a model with selected leaf parameters replaced."""
    rates = model.rates
    credit = model.credit
    alpha = changes.pop("alpha", model.alpha)
    rate_changes = {k: v for k, v in changes.items() if k in _RATE_KEYS}
    credit_changes = {k: v for k, v in changes.items() if k in _CREDIT_KEYS}
    unknown = set(changes) - set(rate_changes) - set(credit_changes)
    if unknown:
        raise ValueError(f"unknown model parameters: {sorted(unknown)}")
    if rate_changes:
        rates = replace(rates, **rate_changes)
    if credit_changes:
        if credit is None:
            raise ModelError("cannot vary credit parameters of a default-free model")
        credit = replace(credit, **credit_changes)
    return MarketModel(rates=rates, equity=model.equity, credit=credit,
                       alpha=alpha, allow_violations=model.allow_violations)


def _sweep_values(start: float, stop: float, points: int) -> list[float]:
    if points == 1:
        return [start]
    step = (stop - start) / (points - 1)
    return [start + i * step for i in range(points)]


def _run_parallel(tasks, worker, workers: int):
    if workers <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))


def _band_task(args):
    model, claim, engine, nx, nt, steps, axis_value = args
    res = evaluate_point(model, claim, engine, nx, nt, steps)[0]
    st = res.strategy_seller
    return (axis_value, res.xva_buyer, res.xva_seller, res.width,
            st.stock_shares, st.bond_own_shares, st.bond_cpty_shares,
            st.funding_dollars)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_value(cfg: RunConfig) -> int:
    results = evaluate_point(cfg.model, cfg.claim, cfg.engine,
                             cfg.nx, cfg.nt, cfg.steps)
    print(f"mark (agent value) at t=0, spot={cfg.model.equity.spot}: "
          f"{_fmt(results[0].mark)}")
    for r in results:
        print(f"engine={r.engine:8s} xva_seller={_fmt(r.xva_seller):>15s} "
              f"xva_buyer={_fmt(r.xva_buyer):>15s} width={_fmt(r.width):>13s}")
    if len(results) > 1:
        print("cross-engine deltas (seller / buyer):")
        for i in range(len(results)):
            for j in range(i + 1, len(results)):
                a, b = results[i], results[j]
                print(f"  |{a.engine}-{b.engine}|: "
                      f"{_fmt(abs(a.xva_seller - b.xva_seller))} / "
                      f"{_fmt(abs(a.xva_buyer - b.xva_buyer))}")
    if cfg.out:
        header = ["engine_idx", "xva_seller", "xva_buyer", "width",
                  "xi_stock", "xi_I", "xi_C", "funding_dollars"]
        rows = []
        for idx, r in enumerate(results):
            st = r.strategy_seller
            rows.append([idx, r.xva_seller, r.xva_buyer, r.width,
                         st.stock_shares, st.bond_own_shares,
                         st.bond_cpty_shares, st.funding_dollars])
        write_csv(header, rows, cfg.out)
    return 0


def cmd_band(cfg: RunConfig) -> int:
    axis = cfg.sweep_param or "alpha"
    if axis == "alpha":
        start = cfg.sweep_start if cfg.sweep_start is not None else 0.0
        stop = cfg.sweep_stop if cfg.sweep_stop is not None else 1.0
    else:
        if cfg.sweep_start is None or cfg.sweep_stop is None:
            raise ValueError(f"sweeping {axis!r} requires sweep_start and "
                             "sweep_stop")
        start, stop = cfg.sweep_start, cfg.sweep_stop
    values = _sweep_values(start, stop, cfg.sweep_points)
    engine = cfg.engine if cfg.engine != "all" else "pde"
    tasks = [(_model_with(cfg.model, **{axis: v}), cfg.claim, engine,
              cfg.nx, cfg.nt, cfg.steps, v) for v in values]
    rows = _run_parallel(tasks, _band_task, cfg.workers)
    rows.sort(key=lambda r: r[0])
    write_csv([axis, "xva_buyer", "xva_seller", "width", "xi_stock",
               "xi_I", "xi_C", "funding_dollars"],
              [list(r) for r in rows], cfg.out)
    return 0


_TABLE_CELLS = ([(a, rfm) for a in (0.0, 0.25, 0.75, 1.0) for rfm in (0.08, 0.15)]
                + [(0.9, rfm) for rfm in (0.08, 0.10, 0.15, 0.20)])


def cmd_table(cfg: RunConfig) -> int:
    engine = cfg.engine if cfg.engine != "all" else "pde"
    rows = []
    for alpha, rfm in _TABLE_CELLS:
        model = _model_with(cfg.model, alpha=alpha, fund_borrow=rfm)
        res = evaluate_point(model, cfg.claim, engine, cfg.nx, cfg.nt,
                             cfg.steps)[0]
        rows.append([alpha, rfm, res.xva_seller, res.xva_buyer,
                     res.strategy_seller.funding_dollars,
                     res.strategy_buyer.funding_dollars])
    write_csv(["alpha", "fund_borrow", "xva_seller", "xva_buyer",
               "funding_seller", "funding_buyer"], rows, cfg.out)
    return 0


# figure ids -> (description, default config text)
_BENCHMARK_CFG = """
fund_lend = 0.05
fund_borrow = 0.08
repo_lend = 0.05
repo_borrow = 0.05
coll_earn = 0.01
coll_pay = 0.01
discount = 0.01
mu_own = 0.21
mu_cpty = 0.16
loss_own = 0.5
loss_cpty = 0.5
alpha = 0.9
spot = 1.0
sigma = 0.2
kind = call
strike = 1.0
maturity = 1.0
"""

FIGURES = {
    "xva-vs-funding-nodefault": "no-default symmetric regime: adjustment and "
                                "stock hedge vs the funding rate, one series "
                                "per collateralization level",
    "decomposition-vs-funding": "default-risk symmetric regime: funding and "
                                "own-default components of the relative "
                                "adjustment vs the funding rate",
    "xva-vs-funding-defaults": "default-risk symmetric regime: seller "
                               "adjustment and share counts vs the funding rate",
    "xva-vs-funding-riskier": "same as xva-vs-funding-defaults with riskier "
                              "bond returns",
    "band-vs-collateral": "asymmetric benchmark: buyer/seller adjustments vs "
                          "collateralization, one pair per borrow rate",
    "xva-vs-repo": "asymmetric benchmark: adjustments vs the repo borrow "
                   "rate, one pair per repo lend rate",
    "xva-vs-cpty-return": "asymmetric benchmark: seller adjustment vs the "
                          "counterparty bond return, one series per "
                          "collateralization level",
}

_FIGURE_DEFAULTS = {
    "xva-vs-funding-nodefault": """
fund_lend = 0.08
fund_borrow = 0.08
repo_lend = 0.05
repo_borrow = 0.05
coll_earn = 0.01
coll_pay = 0.01
discount = 0.05
spot = 1.0
sigma = 0.2
kind = call
strike = 1.0
maturity = 1.0
sweep_start = 0.055
sweep_stop = 0.15
sweep_points = 20
""",
    "decomposition-vs-funding": """
fund_lend = 0.08
fund_borrow = 0.08
repo_lend = 0.05
repo_borrow = 0.05
coll_earn = 0.01
coll_pay = 0.01
discount = 0.05
mu_own = 0.2
mu_cpty = 0.25
loss_own = 0.5
loss_cpty = 0.5
alpha = 0.25
spot = 1.0
sigma = 0.2
kind = call
strike = 1.0
maturity = 1.0
sweep_start = 0.05
sweep_stop = 0.15
sweep_points = 21
""",
    "xva-vs-funding-defaults": """
fund_lend = 0.08
fund_borrow = 0.08
repo_lend = 0.05
repo_borrow = 0.05
coll_earn = 0.01
coll_pay = 0.01
discount = 0.05
mu_own = 0.16
mu_cpty = 0.21
loss_own = 0.5
loss_cpty = 0.5
spot = 1.0
sigma = 0.2
kind = call
strike = 1.0
maturity = 1.0
sweep_start = 0.05
sweep_stop = 0.15
sweep_points = 21
""",
    "band-vs-collateral": _BENCHMARK_CFG + """
sweep_start = 0.0
sweep_stop = 1.0
sweep_points = 21
""",
    "xva-vs-repo": _BENCHMARK_CFG + """
sweep_start = 0.05
sweep_stop = 0.12
sweep_points = 15
""",
    "xva-vs-cpty-return": _BENCHMARK_CFG + """
sweep_start = 0.10
sweep_stop = 0.30
sweep_points = 21
""",
}
_FIGURE_DEFAULTS["xva-vs-funding-riskier"] = \
    _FIGURE_DEFAULTS["xva-vs-funding-defaults"].replace(
        "mu_own = 0.16", "mu_own = 0.51").replace("mu_cpty = 0.21",
                                                  "mu_cpty = 0.51")

_NODEF_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)
_CPTY_ALPHAS = (0.5, 0.75, 0.9, 1.0)


def figure_config(figure_id: str, user_values: dict | None = None,
                  overrides: dict | None = None) -> RunConfig:
    """Defaults for the figure, overlaid with user config and CLI overrides."""
    if figure_id not in FIGURES:
        raise ValueError(f"unknown figure id {figure_id!r}; "
                         f"known: {', '.join(sorted(FIGURES))}")
    values = parse_config_text(_FIGURE_DEFAULTS[figure_id])
    values.update(user_values or {})
    return build_config(values, overrides)


def _sweep_task(args):
    model, claim, engine, nx, nt, steps, axis_value = args
    res = evaluate_point(model, claim, engine, nx, nt, steps)[0]
    return axis_value, res


def cmd_figure(cfg: RunConfig, figure_id: str) -> int:
    sweep = _sweep_values(cfg.sweep_start, cfg.sweep_stop, cfg.sweep_points)
    model, claim = cfg.model, cfg.claim
    t0, s0 = 0.0, model.equity.spot

    if figure_id == "xva-vs-funding-nodefault":
        header = ["fund"]
        for a in _NODEF_ALPHAS:
            header += [f"xva_a{a:g}", f"shares_a{a:g}"]
        rows = []
        for rf in sweep:
            row = [rf]
            for a in _NODEF_ALPHAS:
                m = _model_with(model, fund_lend=rf, fund_borrow=rf, alpha=a)
                mark = claims.agent_value(m, claim, t0, s0).value
                row.append(closed_form.piterbarg_xva(m, claim, t0, mark))
                row.append(closed_form.piterbarg_stock_strategy(m, claim, t0, s0))
            rows.append(row)
        write_csv(header, rows, cfg.out)
        return 0

    if figure_id == "decomposition-vs-funding":
        header = ["fund", "funding_pct", "dva_pct", "total_pct"]
        rows = []
        for rf in sweep:
            m = _model_with(model, fund_lend=rf, fund_borrow=rf)
            mark = claims.agent_value(m, claim, t0, s0).value
            dec = closed_form.piterbarg_defaults_xva(m, claim, t0, mark)
            rows.append([rf, 100.0 * dec.funding / mark, 100.0 * dec.dva / mark,
                         100.0 * dec.total / mark])
        write_csv(header, rows, cfg.out)
        return 0

    if figure_id in ("xva-vs-funding-defaults", "xva-vs-funding-riskier"):
        header = ["fund"]
        for a in _NODEF_ALPHAS:
            header += [f"xva_a{a:g}", f"stock_a{a:g}", f"bond_own_a{a:g}",
                       f"bond_cpty_a{a:g}"]
        rows = []
        for rf in sweep:
            row = [rf]
            for a in _NODEF_ALPHAS:
                m = _model_with(model, fund_lend=rf, fund_borrow=rf, alpha=a)
                st = closed_form.piterbarg_defaults_strategies(m, claim, t0, s0)
                row += [st.adjustment, st.stock_shares, st.bond_own_shares,
                        st.bond_cpty_shares]
            rows.append(row)
        write_csv(header, rows, cfg.out)
        return 0

    engine = cfg.engine if cfg.engine != "all" else "pde"

    if figure_id == "band-vs-collateral":
        borrow_rates = (0.08, 0.15)
        header = ["alpha"]
        for rfm in borrow_rates:
            header += [f"xva_buyer_rb{rfm:g}", f"xva_seller_rb{rfm:g}",
                       f"width_rb{rfm:g}", f"stock_rb{rfm:g}",
                       f"bond_own_rb{rfm:g}", f"bond_cpty_rb{rfm:g}"]
        tasks = [(_model_with(model, alpha=a, fund_borrow=rfm), claim, engine,
                  cfg.nx, cfg.nt, cfg.steps, (a, rfm))
                 for a in sweep for rfm in borrow_rates]
        results = dict(_run_parallel(tasks, _sweep_task, cfg.workers))
        rows = []
        for a in sweep:
            row = [a]
            for rfm in borrow_rates:
                res = results[(a, rfm)]
                st = res.strategy_seller
                row += [res.xva_buyer, res.xva_seller, res.width,
                        st.stock_shares, st.bond_own_shares,
                        st.bond_cpty_shares]
            rows.append(row)
        write_csv(header, rows, cfg.out)
        return 0

    if figure_id == "xva-vs-repo":
        lend_rates = (0.03, 0.05)
        header = ["repo_borrow"]
        for rl in lend_rates:
            header += [f"xva_buyer_rl{rl:g}", f"xva_seller_rl{rl:g}",
                       f"stock_seller_rl{rl:g}", f"stock_buyer_rl{rl:g}"]
        tasks = []
        for rb in sweep:
            for rl in lend_rates:
                if rb < rl:
                    continue
                tasks.append((_model_with(model, repo_lend=rl, repo_borrow=rb),
                              claim, engine, cfg.nx, cfg.nt, cfg.steps, (rb, rl)))
        results = dict(_run_parallel(tasks, _sweep_task, cfg.workers))
        rows = []
        for rb in sweep:
            row = [rb]
            for rl in lend_rates:
                res = results.get((rb, rl))
                if res is None:
                    row += [math.nan] * 4
                else:
                    row += [res.xva_buyer, res.xva_seller,
                            res.strategy_seller.stock_shares,
                            res.strategy_buyer.stock_shares]
            rows.append(row)
        write_csv(header, rows, cfg.out)
        return 0

    if figure_id == "xva-vs-cpty-return":
        header = ["mu_cpty"]
        for a in _CPTY_ALPHAS:
            header += [f"xva_seller_a{a:g}", f"stock_a{a:g}",
                       f"bond_own_a{a:g}", f"bond_cpty_a{a:g}"]
        tasks = [(_model_with(model, mu_cpty=mu, alpha=a), claim, engine,
                  cfg.nx, cfg.nt, cfg.steps, (mu, a))
                 for mu in sweep for a in _CPTY_ALPHAS]
        results = dict(_run_parallel(tasks, _sweep_task, cfg.workers))
        rows = []
        for mu in sweep:
            row = [mu]
            for a in _CPTY_ALPHAS:
                res = results[(mu, a)]
                st = res.strategy_seller
                row += [res.xva_seller, st.stock_shares, st.bond_own_shares,
                        st.bond_cpty_shares]
            rows.append(row)
        write_csv(header, rows, cfg.out)
        return 0

    raise ValueError(f"unknown figure id {figure_id!r}")


def cmd_validate(cfg: RunConfig) -> int:
    report = cfg.model.validate_arbitrage_free()
    for line in report.lines():
        print(line)
    if report.passed:
        print("all rate conditions satisfied")
        return 0
    print(f"{len(report.failures)} condition(s) violated")
    return 0 if cfg.allow_violations else 1


def cmd_convergence(cfg: RunConfig) -> int:
    model, claim = cfg.model, cfg.claim
    if not model.rates.symmetric():
        raise ModelError("convergence study requires symmetric rates "
                         "(the closed form is the reference)")

    def reference(m, c):
        mark = claims.agent_value(m, c, 0.0, m.equity.spot).value
        if m.credit is None:
            return closed_form.piterbarg_xva(m, c, 0.0, mark)
        return closed_form.piterbarg_defaults_xva(m, c, 0.0, mark).total

    grids = [(50, 50), (100, 100), (200, 200), (400, 400)]
    rows = pde.convergence_study(model, claim, grids, drivers.SELLER, reference)
    print(f"{'nx':>6} {'nt':>6} {'abs error':>14} {'order':>8}")
    for r in rows:
        order = f"{r.order:.2f}" if r.order is not None else "-"
        print(f"{r.nx:>6} {r.nt:>6} {r.error:>14.3e} {order:>8}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a key = value config file")
    p.add_argument("--engine", choices=ENGINES, default=None)
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--allow-violations", action="store_true", default=None,
                   help="run despite failed rate validators")
    p.add_argument("--nx", type=int, default=None, help="PDE space nodes")
    p.add_argument("--nt", type=int, default=None, help="PDE time steps")
    p.add_argument("--steps", type=int, default=None, help="lattice steps")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers for sweeps")


def _load(args, require_config: bool = True) -> RunConfig:
    values: dict = {}
    if args.config:
        with open(args.config) as fh:
            values = parse_config_text(fh.read())
    elif require_config:
        raise ValueError("--config is required for this command")
    overrides = {"engine": args.engine, "out": args.out, "nx": args.nx,
                 "nt": args.nt, "steps": args.steps, "workers": args.workers}
    if args.allow_violations:
        overrides["allow_violations"] = True
    return build_config(values, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="xvaband",
        description="Buyer/seller valuation adjustments for European claims "
                    "under asymmetric funding, repo and collateral rates.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("value", "single-point valuation"),
            ("band", "buyer/seller adjustment sweep over collateralization"),
            ("table", "funding-account positions on an (alpha, borrow-rate) grid"),
            ("figure", "emit the data behind a comparative-statics figure"),
            ("validate", "check the rate conditions"),
            ("convergence", "refinement study against the closed form")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "figure":
            p.add_argument("figure_id", choices=sorted(FIGURES),
                           help="which figure's data to emit")
    args = parser.parse_args(argv)

    try:
        if args.command == "figure":
            user_values = {}
            if args.config:
                with open(args.config) as fh:
                    user_values = parse_config_text(fh.read())
            overrides = {"engine": args.engine, "out": args.out, "nx": args.nx,
                         "nt": args.nt, "steps": args.steps,
                         "workers": args.workers}
            if args.allow_violations:
                overrides["allow_violations"] = True
            cfg = figure_config(args.figure_id, user_values, overrides)
            return cmd_figure(cfg, args.figure_id)
        cfg = _load(args)
        if args.command == "value":
            return cmd_value(cfg)
        if args.command == "band":
            return cmd_band(cfg)
        if args.command == "table":
            return cmd_table(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "convergence":
            return cmd_convergence(cfg)
        raise ValueError(f"unhandled command {args.command!r}")
    except pde.NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

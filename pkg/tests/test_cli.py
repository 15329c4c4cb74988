"""CLI: config parsing, deterministic CSV output, figure/table properties."""

import math

import pytest

from xvaband import cli
from xvaband.cli import build_config, figure_config, parse_config_text

BENCH_TEXT = """
# benchmark
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

SYMMETRIC_TEXT = """
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
alpha = 0.25
"""


@pytest.fixture
def bench_cfg_path(tmp_path):
    p = tmp_path / "bench.cfg"
    p.write_text(BENCH_TEXT)
    return str(p)


def test_parse_config_roundtrip():
    values = parse_config_text(BENCH_TEXT)
    cfg = build_config(values)
    assert cfg.model.rates.fund_borrow == 0.08
    assert cfg.model.alpha == 0.9
    assert cfg.model.credit.mu_own == 0.21
    assert cfg.claim.kind == "call"
    assert cfg.nx == 400 and cfg.steps == 2000


def test_parse_config_full_precision():
    values = parse_config_text("fund_lend = 0.012345678901234567")
    assert values["fund_lend"] == float("0.012345678901234567")


def test_parse_config_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown key"):
        parse_config_text("volatility = 0.2")


def test_parse_config_rejects_repeat():
    with pytest.raises(ValueError, match="repeated"):
        parse_config_text("spot = 1.0\nspot = 2.0")


def test_credit_all_or_none():
    with pytest.raises(ValueError, match="credit keys"):
        build_config(parse_config_text(
            "fund_lend = 0.05\nfund_borrow = 0.08\nrepo_lend = 0.05\n"
            "repo_borrow = 0.05\ncoll_earn = 0.01\ncoll_pay = 0.01\n"
            "discount = 0.01\nmu_own = 0.2"))


def test_default_free_config():
    cfg = build_config(parse_config_text(
        "fund_lend = 0.08\nfund_borrow = 0.08\nrepo_lend = 0.05\n"
        "repo_borrow = 0.05\ncoll_earn = 0.01\ncoll_pay = 0.01\n"
        "discount = 0.05\nalpha = 0.5"))
    assert cfg.model.credit is None


def test_value_command_all_engines(bench_cfg_path, capsys):
    rc = cli.main(["value", "--config", bench_cfg_path, "--engine", "all",
                   "--nx", "120", "--nt", "60", "--steps", "150"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "engine=pde" in out and "engine=lattice" in out
    assert "cross-engine deltas" in out


def test_value_closed_engine_requires_symmetry(bench_cfg_path, capsys):
    rc = cli.main(["value", "--config", bench_cfg_path, "--engine", "closed"])
    assert rc == 1
    assert "symmetric" in capsys.readouterr().err


def test_band_csv_deterministic(tmp_path, bench_cfg_path):
    out1 = tmp_path / "band1.csv"
    out2 = tmp_path / "band2.csv"
    args = ["band", "--config", bench_cfg_path, "--engine", "lattice",
            "--steps", "120"]
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    b1 = out1.read_bytes()
    assert b1 == out2.read_bytes()
    header = b1.decode().splitlines()[0]
    assert header == "alpha,xva_buyer,xva_seller,width,xi_stock,xi_I,xi_C,funding_dollars"


def test_band_sweep_contents(tmp_path, bench_cfg_path):
    out = tmp_path / "band.csv"
    rc = cli.main(["band", "--config", bench_cfg_path, "--engine", "lattice",
                   "--steps", "150", "--out", str(out)])
    assert rc == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    alphas = [float(r[0]) for r in rows]
    assert alphas == sorted(alphas)
    assert alphas[0] == 0.0 and alphas[-1] == 1.0 and len(alphas) == 21
    for r in rows:
        width = float(r[3])
        # columns carry 10 significant digits
        assert width == pytest.approx(float(r[2]) - float(r[1]), abs=1e-9)
        assert all(math.isfinite(float(v)) for v in r)


def test_band_custom_sweep_parameter(tmp_path, bench_cfg_path):
    p = tmp_path / "rf.cfg"
    p.write_text(BENCH_TEXT + "\nsweep_param = fund_borrow\n"
                 "sweep_start = 0.08\nsweep_stop = 0.15\nsweep_points = 3\n")
    out = tmp_path / "rf.csv"
    rc = cli.main(["band", "--config", str(p), "--engine", "lattice",
                   "--steps", "150", "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("fund_borrow,")
    widths = [float(line.split(",")[3]) for line in lines[1:]]
    assert widths == sorted(widths)  # width grows with the borrow rate


def test_band_custom_sweep_requires_range(bench_cfg_path, capsys):
    import pathlib
    text = pathlib.Path(bench_cfg_path).read_text() + "\nsweep_param = fund_borrow\n"
    p = pathlib.Path(bench_cfg_path).parent / "norange.cfg"
    p.write_text(text)
    rc = cli.main(["band", "--config", str(p), "--engine", "lattice"])
    assert rc == 1
    assert "sweep_start" in capsys.readouterr().err


def test_band_workers_match_serial(tmp_path, bench_cfg_path):
    serial = tmp_path / "serial.csv"
    parallel = tmp_path / "parallel.csv"
    base = ["band", "--config", bench_cfg_path, "--engine", "lattice",
            "--steps", "100"]
    assert cli.main(base + ["--out", str(serial)]) == 0
    assert cli.main(base + ["--workers", "2", "--out", str(parallel)]) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_symmetric_band_width_vanishes(tmp_path):
    p = tmp_path / "sym.cfg"
    # symmetric rates with symmetric credit: the two sides coincide
    p.write_text(SYMMETRIC_TEXT.replace("mu_own = 0.16", "mu_own = 0.21")
                 .replace("loss_own = 0.5", "loss_own = 0.5"))
    out = tmp_path / "sym.csv"
    rc = cli.main(["band", "--config", str(p), "--engine", "lattice",
                   "--steps", "120", "--out", str(out)])
    assert rc == 0
    for line in out.read_text().splitlines()[1:]:
        assert abs(float(line.split(",")[3])) < 1e-12


def test_table_command(tmp_path, bench_cfg_path, capsys):
    rc = cli.main(["table", "--config", bench_cfg_path, "--engine", "lattice",
                   "--steps", "200"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == ("alpha,fund_borrow,xva_seller,xva_buyer,"
                        "funding_seller,funding_buyer")
    assert len(lines) == 1 + 12  # 8 grid cells + 4 extra borrow-rate rows


def test_figure_defaults_match_captions():
    cfg = figure_config("xva-vs-funding-defaults")
    assert cfg.model.rates.repo_lend == 0.05
    assert cfg.model.rates.coll_earn == 0.01
    assert cfg.model.credit.mu_own == 0.16
    assert cfg.model.credit.mu_cpty == 0.21
    assert cfg.model.credit.loss_own == 0.5
    cfg = figure_config("xva-vs-funding-riskier")
    assert cfg.model.credit.mu_own == 0.51 == cfg.model.credit.mu_cpty
    cfg = figure_config("decomposition-vs-funding")
    assert cfg.model.alpha == 0.25
    assert cfg.model.credit.mu_cpty == 0.25
    cfg = figure_config("band-vs-collateral")
    assert cfg.model.rates.discount == 0.01
    assert cfg.model.credit.mu_own == 0.21


def test_figure_unknown_id():
    with pytest.raises(ValueError):
        figure_config("fig42")


def test_figure_decomposition_funding_dominates_at_high_rate(tmp_path):
    out = tmp_path / "dec.csv"
    rc = cli.main(["figure", "decomposition-vs-funding", "--out", str(out)])
    assert rc == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    last = rows[-1]  # highest funding rate
    assert abs(float(last[1])) > abs(float(last[2]))
    # components add up to the total, in percent of the mark
    for r in rows:
        assert float(r[1]) + float(r[2]) == pytest.approx(float(r[3]), abs=1e-8)


def test_figure_single_point_sweep(tmp_path):
    p = tmp_path / "one.cfg"
    p.write_text("sweep_points = 1\nsweep_start = 0.08\nsweep_stop = 0.08\n")
    out = tmp_path / "one.csv"
    rc = cli.main(["figure", "xva-vs-funding-defaults", "--config", str(p),
                   "--out", str(out)])
    assert rc == 0
    assert len(out.read_text().splitlines()) == 2


def test_figure_repo_buyer_flat(tmp_path):
    p = tmp_path / "repo.cfg"
    p.write_text("sweep_points = 4\nnx = 120\nnt = 60\n")
    out = tmp_path / "repo.csv"
    rc = cli.main(["figure", "xva-vs-repo", "--config", str(p),
                   "--out", str(out)])
    assert rc == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    buyer_at_05 = [float(r[5]) for r in rows]  # repo_lend = 0.05 series
    assert max(buyer_at_05) - min(buyer_at_05) < 1e-9


def test_figure_nodefault_stock_hedge_monotonicity(tmp_path):
    out = tmp_path / "nodef.csv"
    rc = cli.main(["figure", "xva-vs-funding-nodefault", "--out", str(out)])
    assert rc == 0
    rows = [list(map(float, line.split(",")))
            for line in out.read_text().splitlines()[1:]]
    # uncollateralized series: adjustment negative, stock hedge decreasing
    # in the funding rate; hedge increasing in the collateral level
    xva_a0 = [r[1] for r in rows]
    shares_a0 = [r[2] for r in rows]
    shares_a1 = [r[10] for r in rows]
    assert all(v < 0 for v in xva_a0)
    assert all(b < a for a, b in zip(shares_a0, shares_a0[1:]))
    for r in rows:
        assert r[10] > r[2]


def test_figure_band_vs_collateral_smoke(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text("sweep_points = 3\nsteps = 120\nengine = lattice\n")
    out = tmp_path / "band_fig.csv"
    rc = cli.main(["figure", "band-vs-collateral", "--config", str(p),
                   "--out", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 4
    header = lines[0].split(",")
    assert header[0] == "alpha"
    # widths at the higher borrow rate dominate
    for line in lines[1:]:
        vals = dict(zip(header, map(float, line.split(","))))
        assert vals["width_rb0.15"] > vals["width_rb0.08"]


def test_validate_exit_codes(tmp_path, bench_cfg_path, capsys):
    assert cli.main(["validate", "--config", bench_cfg_path]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text(BENCH_TEXT.replace("fund_lend = 0.05", "fund_lend = 0.09")
                   + "\nallow_violations = true\n")
    assert cli.main(["validate", "--config", str(bad)]) == 0  # flag in config
    bad2 = tmp_path / "bad2.cfg"
    bad2.write_text(BENCH_TEXT.replace("coll_earn = 0.01", "coll_earn = 0.10"))
    rc = cli.main(["validate", "--config", str(bad2), "--allow-violations"])
    assert rc == 0
    capsys.readouterr()


def test_validate_failure_exit_code(tmp_path, capsys):
    bad = tmp_path / "viol.cfg"
    bad.write_text(BENCH_TEXT.replace("coll_earn = 0.01", "coll_earn = 0.10")
                   + "\nallow_violations = true\n")
    # allow_violations lets the model build; withdrawing the flag on the CLI
    # is not possible, so craft one that builds but fails the full validator
    text = BENCH_TEXT.replace("repo_lend = 0.05", "repo_lend = 0.03")
    ok_but_fails_market = tmp_path / "m.cfg"
    ok_but_fails_market.write_text(text.replace("fund_lend = 0.05",
                                                "fund_lend = 0.02"))
    rc = cli.main(["validate", "--config", str(ok_but_fails_market)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "FAIL" in out


def test_missing_rate_keys():
    with pytest.raises(ValueError, match="missing rate keys"):
        build_config(parse_config_text("spot = 1.0"))


def test_value_symmetric_runs_three_engines(tmp_path, capsys):
    p = tmp_path / "sym.cfg"
    p.write_text(SYMMETRIC_TEXT)
    rc = cli.main(["value", "--config", str(p), "--engine", "all",
                   "--nx", "120", "--nt", "60", "--steps", "200"])
    out = capsys.readouterr().out
    assert rc == 0
    for name in ("closed", "pde", "lattice"):
        assert f"engine={name}" in out


def test_numerical_failure_exit_code(tmp_path, capsys):
    p = tmp_path / "stiff.cfg"
    p.write_text(BENCH_TEXT.replace("mu_own = 0.21", "mu_own = 0.9")
                 .replace("mu_cpty = 0.16", "mu_cpty = 0.9"))
    rc = cli.main(["value", "--config", str(p), "--engine", "lattice",
                   "--steps", "1"])
    assert rc == 2
    assert "numerical failure" in capsys.readouterr().err


def test_convergence_command(tmp_path, capsys):
    p = tmp_path / "sym.cfg"
    p.write_text(SYMMETRIC_TEXT)
    rc = cli.main(["convergence", "--config", str(p)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "abs error" in out

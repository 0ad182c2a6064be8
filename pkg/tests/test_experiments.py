import csv
import json
import math

import numpy as np
import pytest

from teleport_sim import cli
from teleport_sim.channel import ChannelSpec
from teleport_sim.charfunc import ConvergenceError, GaussianCF
from teleport_sim.experiments import figures as figmod
from teleport_sim.experiments.bloch import BlochRule, bloch_average
from teleport_sim.experiments.models import CvbsmModel, InputModel, cvbsm_fidelity_fock
from teleport_sim.experiments.optimize import GAIN, Domain, maximize, maximize_1d
from teleport_sim.experiments.runners import (
    CSV_FIELDS,
    SweepRow,
    hbsm_point,
    run_cvbsm,
    run_direct,
    run_hbsm,
)
from teleport_sim.experiments.spec import ConfigError, load_spec, spec_from_dict


def _db(lam):
    return math.atanh(lam) * 20 / math.log(10)


# Bloch averaging

@pytest.mark.parametrize(
    "f, expected",
    [
        (lambda t, p: 0.37, 0.37),
        (lambda t, p: math.cos(t / 2) ** 2, 0.5),
        (lambda t, p: (1 + 0.3 * math.cos(t)) / 2, 0.5),
        (lambda t, p: math.sin(t) ** 2 * math.cos(p) ** 2, 1 / 3),
    ],
)
def test_bloch_average(f, expected):
    assert bloch_average(f) == pytest.approx(expected, abs=1e-10)


def test_bloch_weights_normalised():
    _, _, w = BlochRule().nodes
    assert w.sum() == pytest.approx(1.0)


def test_bloch_quartic_tensor_matches_nodes():
    rule = BlochRule(6, 6)
    c = rule.coefficients
    q = rule.quartic_tensor()
    i, j, k, l = 1, 0, 1, 0
    direct = np.dot(rule.nodes[2], c[:, i].conj() * c[:, j] * c[:, k] * c[:, l].conj())
    assert q[i, j, k, l] == pytest.approx(direct)


def test_bloch_average_flags_unresolved_function():
    with pytest.raises(ConvergenceError):
        bloch_average(lambda t, p: 1 + math.cos(3 * p), n_theta=2, n_phi=3)


# optimiser

def test_optimizer_finds_interior_peak():
    g, f = maximize_1d(lambda x: -((x - 0.7) ** 2), GAIN)
    assert g == pytest.approx(0.7, abs=1e-3)


def test_optimizer_monotone_goes_to_boundary():
    assert maximize_1d(lambda x: x, GAIN)[0] == pytest.approx(GAIN.hi)
    assert maximize_1d(lambda x: 1.0, GAIN)[0] == pytest.approx(GAIN.lo)


def test_grid_is_inclusive():
    grid = Domain(0.02, 0.98, 0.02).grid()
    assert grid[0] == pytest.approx(0.02) and grid[-1] == pytest.approx(0.98)
    assert len(grid) == 49


def test_coordinate_optimizer_two_parameters():
    f = lambda p: -((p["a"] - 0.4) ** 2) - 2 * (p["b"] - 1.3) ** 2
    dom = {"a": Domain(0.1, 2.0, 0.01), "b": Domain(0.1, 2.0, 0.01)}
    point, val = maximize(f, {"a": 1.0, "b": 1.0}, ("a", "b"), dom)
    assert point["a"] == pytest.approx(0.4, abs=1e-3)
    assert point["b"] == pytest.approx(1.3, abs=1e-3)


def test_optimal_gain_is_unity_for_lossless_coherent_benchmark():
    # coherent inputs drawn from a broad Gaussian prior of width sigma^2 average to
    # F(g) = 1 / (1 + s(g)/2 + sigma^2 (1 - g)^2)
    cf = GaussianCF.tmsv(math.tanh(1.0)).lossy(ChannelSpec())
    sigma2 = 100.0
    f = lambda g: 1.0 / (1.0 + 0.5 * cf.teleport_noise(g) + sigma2 * (1 - g) ** 2)
    g, _ = maximize_1d(f, GAIN)
    assert g == pytest.approx(1.0, abs=1e-2)
    assert f(1.0) == pytest.approx(1 / (1 + math.exp(-2.0)), abs=1e-12)


# runners

def test_coherent_limit_of_cat_qubit():
    for r in (0.3, 1.0):
        f = CvbsmModel(InputModel("cv-qubit", 0.01, theta=math.pi)).fidelity(1.0, r, ChannelSpec())
        assert f == pytest.approx(1 / (1 + math.exp(-2 * r)), abs=2e-3)


def test_hybrid_dv_ideal_limit():
    row = run_cvbsm("hybrid-dv", 0.5, 0.0, _db(0.999), optimize=("g",))
    assert row.f_bar > 0.99
    assert row.p_total == 1.0


def test_cvbsm_rows_agree_across_routes():
    cf = run_cvbsm("hybrid-cv", 0.5, 4.0, 6.0, g=0.9)
    fock = run_cvbsm("hybrid-cv", 0.5, 4.0, 6.0, g=0.9, route="fock")
    assert fock.route == "fock"
    assert cf.f_bar == pytest.approx(fock.f_bar, abs=1e-3)


def test_hybrid_cv_cannot_reach_unity():
    assert run_hbsm("hybrid-cv", 1.0, 0.0, 16.0).f_bar < 0.99


def test_small_cat_teleports_through_ideal_hbsm():
    summary, p_op, _ = hbsm_point("cv-qubit", 0.1, math.atanh(0.999), ChannelSpec(), None, True, d_res=40)
    assert summary.f_bar > 0.95
    assert p_op == 1.0
    # cross-check against the dense Fock route on a single Bloch node
    from teleport_sim.bsm import hbsm_teleport
    from teleport_sim.fock import FockDims, FockOperator, tensor
    from teleport_sim.states import tmsv_ket

    inp = InputModel("cv-qubit", 0.1, theta=1.1, phi=0.4)
    res = FockOperator.from_ket(tmsv_ket(math.atanh(0.99), 12), FockDims((12, 12)))
    assert hbsm_teleport(tensor(inp.state, res), 0, (1, 2), target=inp.state).f_bar > 0.95


def test_direct_transmission():
    assert run_direct("hybrid-dv", 0.5, 0.0).f_bar == pytest.approx(1.0, abs=1e-12)
    f = [run_direct("hybrid-dv", 0.5, loss).f_bar for loss in np.arange(0, 15.5, 1.5)]
    assert all(b < a for a, b in zip(f, f[1:]))


def test_direct_composes_channels():
    split = run_direct("cv-qubit", 0.7, 6.0, t1_db=2.0).f_bar
    sym = run_direct("cv-qubit", 0.7, 6.0).f_bar
    assert split == pytest.approx(sym, abs=1e-10)


def test_hbsm_success_probability_grows_with_loss():
    p = [run_hbsm("hybrid-cv", 0.5, loss, 10.0).p_total for loss in (0.0, 5.0, 10.0, 15.0)]
    assert all(b > a for a, b in zip(p, p[1:]))


def test_row_invariants_recorded():
    row = run_hbsm("hybrid-cv", 0.5, 3.0, 5.0)
    assert 0 <= row.f_bar <= 1 and row.p_bsm <= 1
    assert row.extra["invariants"] is True


def test_bloch_route_matches_supermatrix():
    inp = InputModel("cv-qubit", 0.8)
    ch = ChannelSpec.from_db(4.0)
    f_cf = CvbsmModel(inp).fidelity(0.85, 0.7, ch)
    assert f_cf == pytest.approx(cvbsm_fidelity_fock(inp, 0.85, 0.7, ch), abs=1e-3)


# monotonicity check

def _row(loss, f, squeeze=3.0):
    return SweepRow("t", "hbsm", "hybrid-cv", 0.5, loss, squeeze, None, None, None, None, None, f, 1.0, 1.0, 1.0, "fock", True)


def test_monotonicity_violations():
    ok = [_row(0, 0.9), _row(1, 0.8), _row(2, 0.80005)]
    assert figmod.monotonicity_violations(ok) == []
    bad = ok + [_row(3, 0.85)]
    assert len(figmod.monotonicity_violations(bad)) == 1
    # separate squeezing values are separate series, unless squeezing is optimised
    mixed = [_row(0, 0.5, 3.0), _row(1, 0.7, 5.0)]
    assert figmod.monotonicity_violations(mixed) == []
    assert len(figmod.monotonicity_violations(mixed, ("squeeze_db",))) == 1


def test_figure_definitions():
    assert set(figmod.FIGURE_IDS) == {"2a", "2b", "3", "4a", "4b", "5", "7a", "7b", "8"}
    names = {c.name for c in figmod.figure("3").curves}
    assert {"cvbsm", "hbsm", "direct"} <= names
    assert any("classical" in c.name for c in figmod.figure("2a").curves)
    fig8 = {c.name: c for c in figmod.figure("8").curves}
    assert "tc" in fig8["pc-sender"].optimized and "ts" in fig8["qs-both"].optimized


# configured sweeps and CLI

CONFIG = """
protocol = "hbsm"
input = "hybrid-cv"
alpha = 0.5
total_loss_db = [0.0, 5.0, 10.0]
squeeze_db = 4.0
figure = "mini"

[ng]
kind = "scissors"
placement = "after"
ts = "optimize"
"""


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        spec_from_dict({"protocol": "hbsm", "input": "hybrid-cv", "alpha": 0.5, "lossdb": 3})
    with pytest.raises(ConfigError):
        spec_from_dict({"protocol": "teleport", "input": "hybrid-cv", "alpha": 0.5})
    with pytest.raises(ConfigError):
        spec_from_dict({"protocol": "cvbsm", "input": "hybrid-cv", "alpha": 0.5, "ng": {"kind": "scissors"}})


def test_sweep_writes_csv_and_metadata(tmp_path):
    cfg = tmp_path / "mini.toml"
    cfg.write_text(CONFIG)
    spec = load_spec(cfg)
    assert spec.optimized == ("ts",)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "out")]) == cli.EXIT_OK
    with open(tmp_path / "out" / "mini.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_FIELDS
    assert len(rows) == 4
    meta = json.loads((tmp_path / "out" / "mini.metadata.json").read_text())
    assert meta["monotonicity_violations"] == []
    assert "kernel_backend" in meta


def test_cli_config_error(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text('protocol = "hbsm"\ninput = "hybrid-cv"\nalpha = 0.5\ncolour = "red"\n')
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_cli_convergence_error(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise ConvergenceError("synthetic")

    monkeypatch.setattr(figmod, "run_figure", boom)
    assert cli.main(["figure", "3", "--out", str(tmp_path)]) == cli.EXIT_CONVERGENCE


def test_cli_monotonicity_failure(tmp_path, monkeypatch):
    def bad(*args, **kwargs):
        raise figmod.MonotonicityError("synthetic")

    monkeypatch.setattr(figmod, "run_figure", bad)
    assert cli.main(["figure", "3", "--out", str(tmp_path)]) == cli.EXIT_CHECK_FAILED

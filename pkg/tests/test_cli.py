import csv
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from lindblad_qfi.cli import (
    BUILTIN_SCENARIOS,
    EXIT_ASSERT,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_PARSE,
    Scenario,
    ScenarioError,
    load_schema,
    main,
)
from lindblad_qfi.reproduce import FIGURES, build_figure

SUBCOMMANDS = ("eval", "optimize", "bound", "classical", "scan", "simulate", "reproduce")


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as exc:
        code = exc.code
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_OK, err
    rec = json.loads(out)
    jsonschema.validate(rec, load_schema("result"))
    return rec


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.mark.parametrize("sub", [None, *SUBCOMMANDS])
def test_help_exits_zero(sub):
    argv = [sys.executable, "-m", "lindblad_qfi.cli"] + ([sub] if sub else []) + ["--help"]
    proc = subprocess.run(argv, capture_output=True, text=True)
    assert proc.returncode == 0
    assert "usage" in proc.stdout


def test_parse_errors_exit_2(capsys, tmp_path):
    assert run(capsys, "frobnicate")[0] == EXIT_PARSE
    assert run(capsys, "eval", "--seed", "-4")[0] == EXIT_PARSE
    assert run(capsys, "eval")[0] == EXIT_PARSE
    assert run(capsys, "eval", "--scenario", "builtin:nope")[0] == EXIT_PARSE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "eval", "--scenario", str(bad))[0] == EXIT_PARSE
    doc = dict(BUILTIN_SCENARIOS["qubit_decay"], colour="red")
    code, _, err = run(capsys, "eval", "--scenario", write_scenario(tmp_path, doc))
    assert code == EXIT_PARSE and "colour" in err


def test_unknown_operator_name_rejected():
    doc = json.loads(json.dumps(BUILTIN_SCENARIOS["qubit_decay"]))
    doc["operators"][0]["preset"] = "sigma_minsu"
    with pytest.raises(ScenarioError):
        Scenario(doc)


def test_numerical_failure_exit_3(capsys, tmp_path):
    doc = {"schema_version": "1", "name": "too coarse",
           "operators": [{"role": "signal", "preset": "quadrature:x", "params": {"d_F": 40}}],
           "state": {"preset": "smsv", "params": {"nbar": 3.0}}}
    assert run(capsys, "eval", "--scenario", write_scenario(tmp_path, doc))[0] in (EXIT_PARSE, EXIT_NUMERIC)


def test_eval_herm_herm(capsys):
    rec = run_json(capsys, "eval", "--scenario", "builtin:herm_herm")
    assert rec["command"] == "eval"
    assert rec["values"]["qfi"] == pytest.approx(2.0, rel=1e-10)
    assert rec["values"]["qfi_over_T"] == pytest.approx(2.0, rel=1e-10)
    assert rec["values"]["contributions"] == [pytest.approx(2.0, rel=1e-10)]
    assert rec["values"]["projector_rank"] >= 1


def test_eval_bosonic_fock_loss(capsys):
    rec = run_json(capsys, "eval", "--scenario", "builtin:bosonic_loss_fock1")
    assert rec["values"]["qfi"] == pytest.approx(4.0, rel=1e-8)


def test_eval_signal_in_noise_span_warns(capsys, tmp_path):
    doc = {"schema_version": "1", "name": "dependent",
           "operators": [{"role": "signal", "preset": "sigma_z"}, {"role": "noise", "preset": "sigma_z"}],
           "state": {"preset": "plus"}}
    code, out, err = run(capsys, "eval", "--scenario", write_scenario(tmp_path, doc))
    assert code == EXIT_OK
    assert json.loads(out)["values"]["qfi"] == pytest.approx(0.0, abs=1e-12)
    assert "warning" in err


def test_eval_literal_matrices_and_amplitudes(capsys, tmp_path):
    doc = {"schema_version": "1", "name": "literal", "dim": 2, "T": 2.0,
           "operators": [{"role": "signal", "matrix": [[0, 0], [1, 0]]}],
           "state": {"amplitudes": [[0.6, 0.0], [0.0, 0.8]]}}
    rec = run_json(capsys, "eval", "--scenario", write_scenario(tmp_path, doc))
    # 4T Var(sigma_minus) = 4T (0.36 - 0.36 * 0.64) on 0.6|up> + 0.8i|down>
    assert rec["values"]["qfi"] == pytest.approx(8.0 * 0.36 * 0.36, rel=1e-10)


def test_optimize_extended_and_unextended(capsys):
    ext = run_json(capsys, "optimize", "--scenario", "builtin:herm_sigma_minus")
    assert ext["values"]["qfi"] == pytest.approx(2.0, rel=1e-6)
    assert ext["values"]["converged"]
    assert ext["certificate"]["condition_I"] and ext["certificate"]["condition_II"]
    assert ext["state"]["system_dim"] == 2
    une = run_json(capsys, "optimize", "--scenario", "builtin:herm_sigma_minus", "--mode", "unextended")
    assert une["values"]["qfi"] == pytest.approx(0.0, abs=1e-8)


def test_bound_matches_optimum(capsys):
    rec = run_json(capsys, "bound", "--scenario", "builtin:herm_sigma_minus")
    assert rec["values"]["bound"] == pytest.approx(2.0, rel=1e-6)
    assert rec["values"]["converged"]


def test_classical_random_instance_support(capsys):
    rec = run_json(capsys, "classical", "--d", "10", "--noises", "3", "--seed", "0")
    assert rec["values"]["support_length"] == 5
    assert sum(rec["values"]["distribution"]) == pytest.approx(1.0)


def test_classical_rejects_non_diagonal(capsys):
    assert run(capsys, "classical", "--scenario", "builtin:qubit_decay")[0] == EXIT_PARSE


def test_classical_scenario_three_levels(capsys, tmp_path):
    s = 1 / math.sqrt(2)
    doc = {"schema_version": "1", "name": "three-level", "dim": 3,
           "operators": [{"role": "signal", "matrix": [[s, 0, 0], [0, 0, 0], [0, 0, -s]]}],
           "state": "optimize"}
    rec = run_json(capsys, "classical", "--scenario", write_scenario(tmp_path, doc))
    assert rec["values"]["support"] == [0, 2]
    assert rec["values"]["qfi"] == pytest.approx(2.0, rel=1e-10)
    opt = run_json(capsys, "optimize", "--scenario", write_scenario(tmp_path, doc, "b.json"))
    assert opt["values"]["classical"]["qfi"] == pytest.approx(opt["values"]["qfi"], rel=1e-6)


def test_scan_small(capsys):
    rec = run_json(capsys, "scan", "--d", "8", "--noises-list", "1,2", "--trials", "5")
    assert set(rec["values"]["scans"]) == {"1", "2"}
    for scan in rec["values"]["scans"].values():
        assert sum(scan["histogram"].values()) == 5


@pytest.mark.parametrize("sub,extra", [
    ("eval", ["--scenario", "builtin:herm_herm"]),
    ("optimize", ["--scenario", "builtin:herm_sigma_minus"]),
    ("bound", ["--scenario", "builtin:herm_sigma_minus"]),
    ("classical", ["--d", "7", "--noises", "2"]),
    ("scan", ["--d", "6", "--noises-list", "1", "--trials", "3"]),
    ("simulate", ["--scenario", "builtin:qubit_decay", "--shots", "20000", "--replications", "6"]),
])
def test_commands_are_bit_exact_deterministic(capsys, sub, extra):
    first = run(capsys, sub, *extra, "--seed", "17")
    second = run(capsys, sub, *extra, "--seed", "17")
    assert first[0] == EXIT_OK
    assert first[1] == second[1]


def test_json_round_trip(capsys):
    code, out, _ = run(capsys, "optimize", "--scenario", "builtin:herm_sigma_minus")
    rec = json.loads(out)
    assert json.loads(json.dumps(rec)) == rec
    assert rec["seed"] == 0
    assert len(rec["scenario_hash"]) == 64


def test_csv_output_and_out_dir(capsys, tmp_path):
    code, _, _ = run(capsys, "eval", "--scenario", "builtin:herm_herm", "--format", "csv", "--out", str(tmp_path))
    assert code == EXIT_OK
    rows = list(csv.reader((tmp_path / "eval.csv").open()))
    assert rows[0] == ["key", "value"]
    lookup = dict(rows[1:])
    assert float(lookup["values.qfi"]) == pytest.approx(2.0)


def test_simulate_reports_and_assertion(capsys):
    rec = run_json(capsys, "simulate", "--scenario", "builtin:qubit_decay", "--shots", "100000",
                   "--replications", "40", "--assert-saturation")
    assert rec["values"]["saturated"]
    assert rec["values"]["predicted_ratio"] == pytest.approx(1.0, abs=1e-3)


def test_simulate_assertion_fails_for_misspecified_basis(capsys, tmp_path):
    doc = json.loads(json.dumps(BUILTIN_SCENARIOS["herm_herm"]))
    h = 1 / math.sqrt(2)
    doc["simulate"] = {"measurement_state": {"amplitudes": [[h, 0], [h * math.cos(0.05), h * math.sin(0.05)]]}}
    path = write_scenario(tmp_path, doc)
    code, out, err = run(capsys, "simulate", "--scenario", path, "--shots", "200000", "--replications", "80",
                         "--assert-saturation")
    assert code == EXIT_ASSERT
    vals = json.loads(out)["values"]
    assert abs(vals["ratio"] - vals["predicted_ratio"]) < 3 * vals["ratio_stderr"]


def test_simulate_needs_signal_rate(capsys):
    assert run(capsys, "simulate", "--scenario", "builtin:herm_sigma_minus")[0] == EXIT_PARSE


# ---------------------------------------------------------------- reproduce

@pytest.fixture(scope="module")
def figure_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("figs")
    assert main(["reproduce", "all", "--out", str(out)]) == EXIT_OK
    return out


def _read(figure_dir, name):
    with (figure_dir / f"{name}.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    side = json.loads((figure_dir / f"{name}.schema.json").read_text())
    return rows, side


@pytest.mark.parametrize("name", FIGURES)
def test_figure_columns_match_sidecar(figure_dir, name):
    rows, side = _read(figure_dir, name)
    jsonschema.validate(side, load_schema("figure"))
    header = next(csv.reader((figure_dir / f"{name}.csv").open()))
    assert side["column_count"] == len(header)
    assert [c["name"] for c in side["columns"]] == header
    assert side["row_count"] == len(rows)
    assert all(len(r) == len(header) for r in rows)


def test_fig3a_bell_equivalence_point(figure_dir):
    rows, _ = _read(figure_dir, "fig3a")
    hit = [r for r in rows if float(r["theta2"]) == 0.0 and abs(float(r["theta1"]) - math.pi / 4) < 1e-12]
    assert len(hit) == 1
    for key in ("qfi_unextended", "qfi_extended", "qfi_noiseless"):
        assert float(hit[0][key]) == pytest.approx(2.0, rel=1e-6)


def test_fig2_support_lengths(figure_dir):
    _, side = _read(figure_dir, "fig2")
    assert side["metadata"]["support_lengths"] == [2, 3, 4, 5, 6]


def test_fig5_controlled_values(figure_dir):
    rows, _ = _read(figure_dir, "fig5")
    row = next(r for r in rows if float(r["nbar"]) == 3.0)
    assert float(row["qfi_controlled"]) == pytest.approx(8.0, rel=1e-8)
    assert float(row["qfi_controlled_isotropic"]) == pytest.approx(16.0, rel=1e-8)
    assert float(row["qfi_fock"]) == pytest.approx(8.0, rel=1e-8)
    assert all(float(r["qfi_smsv"]) < 1e-8 for r in rows)
    assert all(r["qfi_gkp_bound_omitted"] == "1" for r in rows)


def test_fig4_bloch_vectors_inside_ball(figure_dir):
    rows, _ = _read(figure_dir, "fig4")
    assert all(float(r["bloch_length"]) <= 1 + 1e-9 for r in rows)


def test_reproduce_is_deterministic(figure_dir, tmp_path, capsys):
    assert main(["reproduce", "fig2", "--out", str(tmp_path)]) == EXIT_OK
    capsys.readouterr()
    assert (tmp_path / "fig2.csv").read_bytes() == (figure_dir / "fig2.csv").read_bytes()


def test_reproduce_json_format(tmp_path, capsys):
    assert main(["reproduce", "fig4", "--out", str(tmp_path), "--format", "json"]) == EXIT_OK
    capsys.readouterr()
    data = json.loads((tmp_path / "fig4.json").read_text())
    assert len(data["columns"]) == len(data["rows"][0])


def test_unknown_figure():
    with pytest.raises(ValueError):
        build_figure("fig9")
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "fig9"])
    assert exc.value.code == EXIT_PARSE


def test_figure_builders_match_library_values():
    cols, rows, _ = build_figure("fig3b", points=5)
    arr = np.array(rows, dtype=float)
    assert np.all(arr[:, cols.index("qfi_per_qubit_parallel")] <= arr[:, cols.index("qfi_extended")] + 1e-6)

"""Command-line front end: scenario files in, JSON/CSV result records out.

Exit codes: 0 success, 1 failed --assert-saturation, 2 parse error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .classical import (
    classical_optimal,
    classical_regularity,
    instance_from_model,
    random_regular_instance,
    support_length_scan,
)
from .core import JumpModel, MixedState, PureState, bell_state, hs_orthonormalize, image_basis
from .fisher import as_pure, theorem1_contributions
from .mc import TrajectoryConfig, crb_saturation, fisher_per_shot
from .optimize import minimize_gauge, optimal_state_search
from .reproduce import FIGURES, build_figure
from .scenarios.bosonic import BosonicAlgebra, bosonic_states
from .scenarios.pauli import pauli_matrix, product_state
from .scenarios.qubit import SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z
from .scenarios.spins import collective_operators, collective_spin_state

EXIT_OK, EXIT_ASSERT, EXIT_PARSE, EXIT_NUMERIC = 0, 1, 2, 3
SATURATION_WINDOW = (0.8, 1.25)
COMMANDS = ("eval", "optimize", "bound", "classical", "scan", "simulate", "reproduce")


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario input (exit code 2)."""


def load_schema(name: str) -> dict:
    return json.loads(resources.files("lindblad_qfi.schemas").joinpath(f"{name}.schema.json").read_text())


BUILTIN_SCENARIOS = {
    "qubit_decay": {
        "schema_version": "1",
        "name": "qubit decay, excited state",
        "operators": [{"role": "signal", "preset": "sigma_minus"}],
        "signal_rate": 1.0, "T": 1.0, "t": 1e-3,
        "state": {"preset": "up"},
    },
    "herm_herm": {
        "schema_version": "1",
        "name": "sigma_z signal, sigma_x noise, equator state",
        "operators": [
            {"role": "signal", "preset": "sigma_z", "scale": 0.7071067811865476},
            {"role": "noise", "preset": "sigma_x", "scale": 0.7071067811865476, "rate": 1.0},
        ],
        "signal_rate": 1.0, "T": 1.0, "t": 1e-3,
        "state": {"preset": "plus"},
    },
    "herm_sigma_minus": {
        "schema_version": "1",
        "name": "sigma_z signal, sigma_minus noise",
        "operators": [
            {"role": "signal", "preset": "sigma_z", "scale": 0.7071067811865476},
            {"role": "noise", "preset": "sigma_minus"},
        ],
        "state": "optimize",
    },
    "bosonic_loss_fock1": {
        "schema_version": "1",
        "name": "x quadrature signal, loss noise, Fock |1>",
        "operators": [
            {"role": "signal", "preset": "quadrature:x", "params": {"d_F": 40}},
            {"role": "noise", "preset": "annihilation", "params": {"d_F": 40}},
        ],
        "state": {"preset": "fock", "params": {"n": 1}},
    },
}


# ---------------------------------------------------------------- parsing

def _complex(x) -> complex:
    return complex(x[0], x[1]) if isinstance(x, list) else complex(x)


def _matrix(rows) -> np.ndarray:
    if len({len(r) for r in rows}) != 1:
        raise ScenarioError("matrix rows have different lengths")
    return np.array([[_complex(x) for x in r] for r in rows], dtype=complex)


def _need(params: dict, key: str, preset: str):
    if key not in params:
        raise ScenarioError(f"preset {preset!r} needs parameter {key!r}")
    return params[key]


def operator_preset(name: str, params: dict) -> np.ndarray:
    """Named jump operators; see the README for the list."""
    qubit = {"sigma_minus": SIGMA_MINUS, "sigma_plus": SIGMA_PLUS, "sigma_x": SIGMA_X,
             "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}
    if name in qubit:
        return qubit[name].copy()
    if name == "sigma_ab":
        return _complex(params.get("a", 0)) * SIGMA_PLUS + _complex(params.get("b", 0)) * SIGMA_MINUS
    if name == "sigma_theta":
        th = params.get("theta", 0.0)
        return np.cos(th) * SIGMA_X + np.sin(th) * SIGMA_Y
    spin = {"J_minus": "minus", "J_plus": "plus", "J_z": "z", "J_x": "x", "J_y": "y"}
    if name in spin:
        return collective_operators(int(_need(params, "n", name)))[spin[name]]
    if name.startswith("pauli:"):
        return pauli_matrix(name.split(":", 1)[1])
    bosonic = {"annihilation", "creation", "number", "quadrature:x", "quadrature:p", "quadrature"}
    if name in bosonic:
        alg = BosonicAlgebra(int(_need(params, "d_F", name)))
        return {
            "annihilation": lambda: alg.a,
            "creation": lambda: alg.adag,
            "number": lambda: alg.n,
            "quadrature:x": lambda: alg.x,
            "quadrature:p": lambda: alg.p,
            "quadrature": lambda: alg.quadrature(params.get("theta", 0.0)),
        }[name]()
    raise ScenarioError(f"unknown operator preset {name!r}")


def state_preset(name: str, params: dict, dim: int):
    vec = np.zeros(dim, dtype=complex)
    simple = {"up": 0, "down": 1}
    if name in simple:
        if dim != 2:
            raise ScenarioError(f"state {name!r} needs a qubit")
        vec[simple[name]] = 1.0
        return PureState.from_vector(vec)
    if name in ("plus", "minus"):
        if dim != 2:
            raise ScenarioError(f"state {name!r} needs a qubit")
        return PureState.from_vector([1.0, 1.0 if name == "plus" else -1.0])
    if name == "basis":
        idx = int(_need(params, "index", name))
        if idx >= dim:
            raise ScenarioError("basis index outside the dimension")
        vec[idx] = 1.0
        return PureState.from_vector(vec)
    if name == "maximally_mixed":
        return MixedState.from_matrix(np.eye(dim, dtype=complex) / dim)
    if name == "bell":
        return bell_state(dim)
    if name in ("collective_decay", "collective_dephasing"):
        if dim < 2:
            raise ScenarioError("collective states need n >= 1")
        return collective_spin_state(dim - 1, name.split("_")[1])[0]
    if name == "product":
        state = product_state(_need(params, "bits", name))
        if state.system_dim != dim:
            raise ScenarioError("product state length does not match the dimension")
        return state
    if name in ("fock", "smsv", "binomial", "superposition", "coherent", "tmsv_reduced"):
        p = dict(params)
        if "alpha" in p:
            p["alpha"] = _complex(p["alpha"])
        return bosonic_states(name, p, dim)
    raise ScenarioError(f"unknown state preset {name!r}")


def parse_state(spec: dict, dim: int):
    if "preset" in spec:
        return state_preset(spec["preset"], spec.get("params", {}), dim)
    if "amplitudes" in spec:
        amp = np.array([_complex(x) for x in spec["amplitudes"]])
        anc = spec.get("ancilla_dim", amp.size // dim if amp.size % dim == 0 else 0)
        if amp.size != dim * anc:
            raise ScenarioError(f"{amp.size} amplitudes do not fit system dimension {dim}")
        nrm = np.linalg.norm(amp)
        if abs(nrm - 1.0) > 1e-8:
            raise ScenarioError(f"amplitudes have norm {nrm:.12g}, expected 1")
        return PureState(amp / nrm, dim)
    rho = _matrix(spec["density_matrix"])
    if rho.shape != (dim, dim):
        raise ScenarioError("density matrix shape does not match the dimension")
    return MixedState(rho)


class Scenario:
    """Validated scenario: the raw document, its model and (optional) state."""

    def __init__(self, doc: dict):
        try:
            jsonschema.validate(doc, load_schema("scenario"))
        except jsonschema.ValidationError as err:
            path = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ScenarioError(f"scenario invalid at {path}: {err.message}") from None
        self.doc = doc
        signals, noises, rates = [], [], []
        for i, op in enumerate(doc["operators"]):
            try:
                mat = _matrix(op["matrix"]) if "matrix" in op else operator_preset(op["preset"], op.get("params", {}))
            except ScenarioError:
                raise
            except (ValueError, KeyError) as err:
                raise ScenarioError(f"operator {i}: {err}") from None
            mat = mat * _complex(op.get("scale", 1.0))
            if op["role"] == "signal":
                if "rate" in op:
                    raise ScenarioError(f"operator {i}: signals share the top-level signal_rate")
                signals.append(mat)
            else:
                noises.append(mat)
                rates.append(op.get("rate", 1.0))
        if not signals:
            raise ScenarioError("at least one operator needs role 'signal'")
        try:
            self.model = JumpModel(tuple(signals), tuple(noises), signal_rate=doc.get("signal_rate", 0.0),
                                   noise_rates=tuple(rates), total_time=doc.get("T", 1.0),
                                   step=doc.get("t", 1e-3))
        except ValueError as err:
            raise ScenarioError(str(err)) from None
        if "dim" in doc and doc["dim"] != self.model.dim:
            raise ScenarioError(f"dim {doc['dim']} does not match operator dimension {self.model.dim}")
        self.state = None
        self.optimize_state = doc.get("state") == "optimize"
        if isinstance(doc.get("state"), dict):
            self.state = self._state(doc["state"])
        sim = doc.get("simulate", {})
        self.measurement_state = self._state(sim["measurement_state"]) if "measurement_state" in sim else None

    def _state(self, spec):
        try:
            return parse_state(spec, self.model.dim)
        except ScenarioError:
            raise
        except (ValueError, KeyError) as err:
            raise ScenarioError(f"state: {err}") from None

    @property
    def hash(self) -> str:
        return canonical_hash(self.doc)


def canonical_hash(doc) -> str:
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).hexdigest()


def load_scenario(ref: str | None) -> Scenario:
    if ref is None:
        raise ScenarioError("this command needs --scenario PATH (or builtin:NAME)")
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        if name not in BUILTIN_SCENARIOS:
            raise ScenarioError(f"unknown builtin scenario {name!r}; choose from {sorted(BUILTIN_SCENARIOS)}")
        return Scenario(copy.deepcopy(BUILTIN_SCENARIOS[name]))
    try:
        doc = json.loads(Path(ref).read_text(encoding="utf-8"))
    except OSError as err:
        raise ScenarioError(f"cannot read scenario: {err}") from None
    except json.JSONDecodeError as err:
        raise ScenarioError(f"scenario is not valid JSON: {err}") from None
    return Scenario(doc)


# ---------------------------------------------------------------- records

def _finite(x):
    """JSON-safe scalars: non-finite floats become None."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (complex, np.complexfloating)):
        return [_finite(x.real), _finite(x.imag)]
    if isinstance(x, dict):
        return {str(k): _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_finite(v) for v in x]
    return x


def _pairs(arr) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr, dtype=complex).ravel()]


def state_record(state) -> dict | None:
    if state is None:
        return None
    if isinstance(state, PureState):
        return {"kind": "pure", "system_dim": state.system_dim, "amplitudes": _pairs(state.amplitudes)}
    rho = np.asarray(state.rho)
    return {"kind": "mixed", "system_dim": rho.shape[0], "density_matrix": [_pairs(r) for r in rho]}


def certificate_record(cert) -> dict | None:
    if cert is None:
        return None
    return {"condition_I": cert.condition_I, "condition_II": cert.condition_II,
            "gaps": {k: float(v) for k, v in cert.gaps.items()}}


def make_record(command: str, scenario_hash: str, values: dict, seed: int, state=None, certificate=None) -> dict:
    rec = {
        "command": command,
        "scenario_hash": scenario_hash,
        "values": _finite(values),
        "state": state_record(state),
        "certificate": certificate_record(certificate),
        "seed": int(seed),
        "tool_version": __version__,
    }
    jsonschema.validate(rec, load_schema("result"))
    return rec


def _flatten(prefix: str, x, out: list):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(x, list) and x and not all(isinstance(v, (dict, list)) for v in x):
        out.append((prefix, json.dumps(x)))
    elif isinstance(x, list):
        for i, v in enumerate(x):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, "" if x is None else x))


def record_text(rec: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rec, indent=2, sort_keys=True) + "\n"
    rows: list = []
    _flatten("", {k: rec[k] for k in ("command", "scenario_hash", "seed", "tool_version")}, rows)
    _flatten("values", rec["values"], rows)
    if rec["certificate"] is not None:
        _flatten("certificate", rec["certificate"], rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerows(rows)
    return buf.getvalue()


def emit(rec: dict, args) -> None:
    text = record_text(rec, args.format)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{rec['command']}.{args.format}").write_text(text)


# ---------------------------------------------------------------- commands

def cmd_eval(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.state is None:
        raise ScenarioError("eval needs an explicit state in the scenario")
    model, T = sc.model, sc.model.total_time
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        hs_orthonormalize(model)
    notes = [str(w.message) for w in caught]
    for msg in notes:
        print(f"warning: {msg}", file=sys.stderr)
    contrib = theorem1_contributions(sc.state, model)
    qfi = float(contrib.sum())
    values = {"qfi": qfi, "qfi_over_T": qfi / T, "contributions": [float(x) for x in contrib],
              "T": T, "warnings": notes}
    if isinstance(sc.state, PureState) and sc.state.ancilla_dim == 1:
        basis = image_basis(as_pure(sc.state), model)
        values["projector_rank"] = int(basis.rank)
        values["basis_size"] = len(basis.kets)
    emit(make_record("eval", sc.hash, values, args.seed, sc.state), args)
    return EXIT_OK


def _classical_values(model: JumpModel) -> dict | None:
    try:
        inst, scale = instance_from_model(model)
    except ValueError:
        return None
    opt = classical_optimal(inst, model.total_time)
    return {"qfi": scale * opt.qfi, "support": list(opt.support), "support_length": len(opt.support),
            "distribution": [float(x) for x in opt.p]}


def cmd_optimize(args) -> int:
    sc = load_scenario(args.scenario)
    mode = args.mode or sc.doc.get("mode", "extended")
    res = optimal_state_search(sc.model, mode, seed=args.seed)
    T = sc.model.total_time
    values = {"mode": mode, "qfi": res.value, "qfi_over_T": res.value / T, "T": T,
              "converged": res.converged, "iterations": res.iterations,
              "gauge_value": res.info.get("gauge_value"), "duality_gap": res.info.get("duality_gap")}
    classical = _classical_values(sc.model)
    if classical is not None:
        values["classical"] = classical
    state = res.pure_state if res.pure_state is not None else res.state
    emit(make_record("optimize", sc.hash, values, args.seed, state, res.certificate), args)
    return EXIT_OK


def cmd_bound(args) -> int:
    sc = load_scenario(args.scenario)
    res = minimize_gauge(sc.model, seed=args.seed)
    T = sc.model.total_time
    c = res.c.c
    values = {"bound": res.value, "bound_over_T": res.value / T, "T": T, "converged": res.converged,
              "iterations": res.iterations, "gauge_coefficients": [_pairs(row) for row in np.atleast_2d(c)],
              "gauge_value": res.info.get("gauge_value"), "duality_gap": res.info.get("duality_gap"),
              "dual_state": res.info.get("dual_state")}
    emit(make_record("bound", sc.hash, values, args.seed, res.state, res.certificate), args)
    return EXIT_OK


def cmd_classical(args) -> int:
    if args.scenario is not None:
        sc = load_scenario(args.scenario)
        try:
            inst, scale = instance_from_model(sc.model)
        except ValueError as err:
            raise ScenarioError(f"not a classical scenario: {err}") from None
        T, key = sc.model.total_time, sc.hash
    else:
        inst = random_regular_instance(args.d, args.noises, np.random.default_rng(args.seed))
        scale, T = 1.0, 1.0
        key = canonical_hash({"command": "classical", "d": args.d, "noises": args.noises, "seed": args.seed})
    opt = classical_optimal(inst, T)
    values = {"qfi": scale * opt.qfi, "qfi_over_T": scale * opt.qfi / T, "T": T,
              "gauge_value": scale * opt.gauge_value, "support": list(opt.support),
              "support_length": len(opt.support), "distribution": [float(x) for x in opt.p],
              "regular": classical_regularity(inst) if inst.d <= 12 else None,
              "signal": [float(x) for x in inst.signal], "noises": [[float(x) for x in v] for v in inst.l[1:]]}
    rho = MixedState.from_matrix(np.diag(opt.p).astype(complex))
    emit(make_record("classical", key, values, args.seed, rho), args)
    return EXIT_OK


def cmd_scan(args) -> int:
    noises = [int(x) for x in args.noises_list.split(",") if x]
    scans = {str(n): support_length_scan(args.d, n, args.trials, args.seed) for n in noises}
    key = canonical_hash({"command": "scan", "d": args.d, "noises": noises, "trials": args.trials,
                          "seed": args.seed})
    values = {"d": args.d, "trials": args.trials,
              "scans": {k: {"histogram": {str(a): b for a, b in v["histogram"].items()},
                            "fraction_expected": v["fraction_expected"], "failures": v["failures"]}
                        for k, v in scans.items()}}
    emit(make_record("scan", key, values, args.seed), args)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.state is None:
        raise ScenarioError("simulate needs an explicit state in the scenario")
    if sc.model.signal_rate <= 0:
        raise ScenarioError("simulate needs signal_rate > 0")
    sim = sc.doc.get("simulate", {})
    try:
        cfg = TrajectoryConfig(sc.model, sc.state, shots=args.shots or sim.get("shots", 10**6),
                               replications=args.replications or sim.get("replications", 100),
                               seed=args.seed, channel=sim.get("channel", "exact"),
                               basis_state=sc.measurement_state)
    except ValueError as err:
        raise ScenarioError(str(err)) from None
    mode = sim.get("crb_mode", "theorem1")
    rep = crb_saturation(cfg, mode, threads=args.threads)
    values = rep.to_dict()
    values["predicted_ratio"] = math.sqrt(fisher_per_shot(cfg, "theorem1") / fisher_per_shot(cfg, "cfi")) \
        if mode == "theorem1" and fisher_per_shot(cfg, "cfi") > 0 else 1.0
    lo, hi = SATURATION_WINDOW
    values["saturation_window"] = [lo, hi]
    values["saturated"] = bool(lo <= rep.ratio <= hi)
    emit(make_record("simulate", sc.hash, values, args.seed, sc.state), args)
    if args.assert_saturation and not values["saturated"]:
        print(f"error: rmse/crb = {rep.ratio:.4f} outside [{lo}, {hi}]", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


def figure_sidecar(name: str, cols: list, rows: list, desc: dict, seed: int) -> dict:
    side = {
        "figure": name,
        "columns": [{"name": c, "description": str(desc.get(c, ""))} for c in cols],
        "column_count": len(cols),
        "row_count": len(rows),
        "metadata": _finite({k: v for k, v in desc.items() if k not in cols}),
        "seed": int(seed),
        "tool_version": __version__,
    }
    jsonschema.validate(side, load_schema("figure"))
    return side


def write_figure(name: str, out_dir: Path, seed: int, fmt: str = "csv", **kw) -> list[Path]:
    cols, rows, desc = build_figure(name, seed=seed, **kw)
    out_dir.mkdir(parents=True, exist_ok=True)
    side = figure_sidecar(name, cols, rows, desc, seed)
    data = out_dir / f"{name}.{fmt}"
    if fmt == "csv":
        with data.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for r in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    else:
        data.write_text(json.dumps({"columns": cols, "rows": _finite(rows)}, indent=1) + "\n")
    schema = out_dir / f"{name}.schema.json"
    schema.write_text(json.dumps(side, indent=2) + "\n")
    return [data, schema]


def cmd_reproduce(args) -> int:
    names = list(FIGURES) if args.figure == "all" else [args.figure]
    out = Path(args.out or ".")
    written = []
    for name in names:
        written += [str(p) for p in write_figure(name, out, args.seed, args.format)]
    key = canonical_hash({"command": "reproduce", "figures": names, "seed": args.seed})
    rec = make_record("reproduce", key, {"figures": names, "files": written}, args.seed)
    sys.stdout.write(record_text(rec, "json"))
    return EXIT_OK


# ---------------------------------------------------------------- argparse

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_PARSE)


def _seed(text: str) -> int:
    val = int(text)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return val


def _positive(text: str) -> int:
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def _global_flags(p: argparse.ArgumentParser, top: bool) -> None:
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--scenario", default=d(None), help="scenario JSON file, or builtin:NAME")
    p.add_argument("--out", default=d(None), help="output directory (default: stdout, '.' for reproduce)")
    p.add_argument("--seed", type=_seed, default=d(0), help="unsigned 64-bit seed (default 0)")
    p.add_argument("--format", choices=("csv", "json"), default=d(None),
                   help="output format (default: csv for reproduce, json otherwise)")
    p.add_argument("--threads", type=_positive, default=d(1), help="worker threads for simulate")
    p.add_argument("--assert-saturation", action="store_true", default=d(False),
                   help="simulate: exit 1 unless rmse/crb lies in [0.8, 1.25]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lindblad-qfi", description="Optimal-control QFI for weak Lindblad decay rates.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, top=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "eval": "QFI of the scenario's state with per-signal contributions",
        "optimize": "optimal input state (extended or unextended) with certificate",
        "bound": "minimise the gauge upper bound over c",
        "classical": "closed-form optimum for commuting (diagonal) operators",
        "scan": "support-length statistics over random classical instances",
        "simulate": "Monte Carlo measure-and-reset with maximum likelihood",
        "reproduce": "write figure data as CSV/JSON with sidecar schemas",
    }
    subs = {name: sub.add_parser(name, help=h, description=h) for name, h in helps.items()}
    for p in subs.values():
        _global_flags(p, top=False)
    subs["optimize"].add_argument("--mode", choices=("extended", "unextended"), default=None)
    subs["classical"].add_argument("--d", type=int, default=10, help="dimension of a random instance")
    subs["classical"].add_argument("--noises", type=int, default=3, help="noise count of a random instance")
    subs["scan"].add_argument("--d", type=int, default=10)
    subs["scan"].add_argument("--noises-list", default="1,2,3,4", help="comma-separated noise counts")
    subs["scan"].add_argument("--trials", type=_positive, default=100)
    subs["simulate"].add_argument("--shots", type=_positive, default=None, help="shots M per replication")
    subs["simulate"].add_argument("--replications", type=_positive, default=None, help="replications R")
    subs["reproduce"].add_argument("figure", choices=(*FIGURES, "all"))
    return parser


HANDLERS = {"eval": cmd_eval, "optimize": cmd_optimize, "bound": cmd_bound, "classical": cmd_classical,
            "scan": cmd_scan, "simulate": cmd_simulate, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "reproduce" else "json"
    try:
        return HANDLERS[args.command](args)
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (RuntimeError, ValueError, ArithmeticError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

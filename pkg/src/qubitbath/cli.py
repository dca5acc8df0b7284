"""Configuration-driven command line: generate couplings, run evolutions,
analyze modes, and sweep operating points, writing deterministic artifacts.

Every subcommand reads one JSON config whose unknown keys are rejected with
the offending field path. A run writes its artifacts plus a metadata
document embedding the fully resolved configuration, which can be fed back
as a config to reproduce the run. Exit codes: 2 invalid input, 3 outside
the physical domain, 4 resource cap, 5 integration failure.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import engine, reporting
from .couplings import CouplingMatrices
from .errors import (DomainError, IntegrationError, QubitBathError,
                     ResourceLimitError, ValidationError)
from .ferromagnet import couplings_from_material, load_material
from .modes import diagonalize_decoherence
from .twoqubit import TwoQubitParams, solve_two_qubit

EXIT_VALIDATION = 2
EXIT_DOMAIN = 3
EXIT_RESOURCE = 4
EXIT_INTEGRATION = 5

MODES = ("couplings", "evolve", "two-qubit", "modes", "sweep")

INTEGRATOR_DEFAULTS = {
    "rtol": engine.DEFAULT_RTOL,
    "atol": engine.DEFAULT_ATOL,
    "t_end": 30.0,
    "dt_out": 0.01,
    "method": "rk45",
    "rk4_step": None,
}

PAIR_DEFAULTS = {
    "gamma0": 1.0,
    "dissipative_sym": 0.0,
    "coherent_asym": 0.0,
    "coherent_sym": 0.0,
}

_TOP_KEYS = {"mode", "bath", "array", "integrator", "sweep", "output"}
_BATH_KEYS = {"material", "couplings", "pair"}
_ARRAY_KEYS = {"n_qubits", "spacing", "omega_qi"}
_SWEEP_KEYS = {"variable", "values", "workers"}


def _fail(path, message):
    raise ValidationError(f"config field '{path}': {message}")


def _expect_dict(value, path):
    if not isinstance(value, dict):
        _fail(path, f"must be an object, got {type(value).__name__}")
    return value


def _expect_number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"must be a number, got {value!r}")
    if positive and not value > 0:
        _fail(path, f"must be positive, got {value}")
    return float(value)


def _reject_unknown(doc, allowed, path):
    unknown = doc.keys() - allowed
    if unknown:
        _fail(path, f"unknown keys {sorted(unknown)}")


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
    return _expect_dict(doc, "<root>")


def _resolve_bath(raw, mode):
    bath = _expect_dict(raw, "bath")
    _reject_unknown(bath, _BATH_KEYS, "bath")
    if len(bath) != 1:
        _fail("bath", f"exactly one of {sorted(_BATH_KEYS)} required, "
                      f"got {sorted(bath)}")
    source = next(iter(bath))
    if mode == "two-qubit" and source != "pair":
        _fail("bath", "the two-qubit subcommand needs a 'pair' bath")
    if mode == "sweep" and source != "material":
        _fail("bath", "sweeps vary material parameters and need a "
                      "'material' bath")
    if source == "material":
        return {"material": load_material(_expect_dict(bath["material"],
                                                       "bath.material"))}
    if source == "pair":
        pair = _expect_dict(bath["pair"], "bath.pair")
        _reject_unknown(pair, PAIR_DEFAULTS.keys(), "bath.pair")
        merged = {**PAIR_DEFAULTS, **pair}
        for key, value in merged.items():
            merged[key] = _expect_number(value, f"bath.pair.{key}")
        TwoQubitParams(**merged)
        return {"pair": merged}
    value = bath["couplings"]
    if isinstance(value, str):
        try:
            with open(value, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            _fail("bath.couplings", f"cannot read {value}: {exc}")
        doc = json.loads(CouplingMatrices.from_json(text).to_json())
    elif isinstance(value, dict):
        doc = json.loads(CouplingMatrices.from_json(json.dumps(value)).to_json())
    else:
        _fail("bath.couplings", "must be an inline coupling object or a "
                                "path to one")
    return {"couplings": doc}


def resolve_config(raw, mode, out=None, workers=None, t_end=None, rtol=None):
    """Validate a raw config against the subcommand, apply flag overrides,
    and fill every default, yielding the round-trippable resolved form."""
    _reject_unknown(raw, _TOP_KEYS, "<root>")
    if "mode" in raw and raw["mode"] != mode:
        _fail("mode", f"config says {raw['mode']!r} but the {mode!r} "
                      "subcommand was invoked")
    if "bath" not in raw:
        _fail("bath", "required")
    resolved = {"mode": mode, "bath": _resolve_bath(raw["bath"], mode)}

    if "array" in raw:
        if "material" in resolved["bath"]:
            _fail("array", "geometry is already fixed by bath.material "
                           "(keys N, a_q_nm); drop the array section")
        if "pair" in resolved["bath"]:
            _fail("array", "pair baths have no geometry; drop the array section")
        array = _expect_dict(raw["array"], "array")
        _reject_unknown(array, _ARRAY_KEYS, "array")
        resolved["array"] = dict(array)
        if "n_qubits" in array:
            n = array["n_qubits"]
            if isinstance(n, bool) or not isinstance(n, int) or n < 1:
                _fail("array.n_qubits", f"must be a positive integer, got {n!r}")
            if n != resolved["bath"]["couplings"]["n"]:
                _fail("array.n_qubits",
                      f"{n} does not match the {resolved['bath']['couplings']['n']}"
                      "-site coupling matrices")

    integ = _expect_dict(raw.get("integrator", {}), "integrator")
    _reject_unknown(integ, INTEGRATOR_DEFAULTS.keys(), "integrator")
    merged = {**INTEGRATOR_DEFAULTS, **integ}
    if t_end is not None:
        merged["t_end"] = t_end
    if rtol is not None:
        merged["rtol"] = rtol
    for key in ("rtol", "atol", "t_end", "dt_out"):
        merged[key] = _expect_number(merged[key], f"integrator.{key}",
                                     positive=True)
    if merged["method"] not in ("rk45", "rk4"):
        _fail("integrator.method",
              f"must be 'rk45' or 'rk4', got {merged['method']!r}")
    if merged["rk4_step"] is not None:
        merged["rk4_step"] = _expect_number(merged["rk4_step"],
                                            "integrator.rk4_step", positive=True)
    resolved["integrator"] = merged

    if mode == "sweep":
        if "sweep" not in raw:
            _fail("sweep", "required for the sweep subcommand")
        sweep = _expect_dict(raw["sweep"], "sweep")
        _reject_unknown(sweep, _SWEEP_KEYS, "sweep")
        variable = sweep.get("variable")
        if variable not in ("k0", "N"):
            _fail("sweep.variable", f"must be 'k0' or 'N', got {variable!r}")
        values = sweep.get("values")
        if not isinstance(values, list) or not values:
            _fail("sweep.values", "must be a non-empty list")
        checked = []
        for i, v in enumerate(values):
            if variable == "N":
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    _fail(f"sweep.values[{i}]",
                          f"must be a positive integer for an N sweep, got {v!r}")
                checked.append(v)
            else:
                checked.append(_expect_number(v, f"sweep.values[{i}]"))
        if len(set(checked)) != len(checked):
            _fail("sweep.values", "values must be distinct")
        if workers is None:
            workers = sweep.get("workers")
        if workers is not None:
            if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
                _fail("sweep.workers", f"must be a positive integer, got {workers!r}")
        resolved["sweep"] = {"variable": variable, "values": checked,
                             "workers": workers}
    elif "sweep" in raw:
        _fail("sweep", "only valid for the sweep subcommand")

    output = out if out is not None else raw.get("output", f"{mode}-out")
    if not isinstance(output, str) or not output:
        _fail("output", f"must be a non-empty path, got {output!r}")
    resolved["output"] = output
    return resolved


def _pair_matrices(pair):
    p = TwoQubitParams(**pair)
    coherent = np.array([
        [0.0, p.coherent_sym + 1j * p.coherent_asym],
        [p.coherent_sym - 1j * p.coherent_asym, 0.0],
    ])
    dissipative = np.array([
        [p.gamma0, p.dissipative_sym],
        [p.dissipative_sym, p.gamma0],
    ], dtype=complex)
    return CouplingMatrices(coherent=coherent, dissipative=dissipative,
                            gamma0=p.gamma0)


def _build_bath(resolved):
    """Coupling matrices plus bath-derived metadata from a resolved config."""
    bath = resolved["bath"]
    if "material" in bath:
        built = couplings_from_material(bath["material"])
        extra = {
            "scales": {
                "k0": built.scales.k0,
                "k1": built.scales.k1,
                "lambda0_nm": built.scales.lambda0,
                "lambda1_nm": built.scales.lambda1,
                "gamma0_absolute_Hz": built.scales.gamma0,
            },
            "mirrored": built.mirrored,
        }
        return built.matrices, extra
    if "pair" in bath:
        return _pair_matrices(bath["pair"]), {}
    return CouplingMatrices.from_json(json.dumps(bath["couplings"])), {}


def _scalar_metrics(metrics):
    return {key: metrics[key] for key in (
        "peak_edge_asymmetry", "peak_edge_asymmetry_abs",
        "peak_edge_asymmetry_time", "max_total_rate", "max_total_rate_time",
        "superradiant_burst", "initial_total_rate_slope",
        "envelope_excess_max")}


def _write_metadata(resolved, diagnostics, extra=None):
    doc = reporting.run_metadata(resolved, diagnostics, extra)
    path = os.path.join(resolved["output"], "metadata.json")
    reporting.write_text(path, reporting.json_text(doc))
    return path


def _run_evolution(resolved):
    """Shared evolve pipeline: integrate, write CSV/gnuplot/metadata, and
    return the summary scalars."""
    matrices, extra = _build_bath(resolved)
    integ = resolved["integrator"]
    traj = engine.evolve(None, matrices, integ["t_end"], integ["dt_out"],
                         rtol=integ["rtol"], atol=integ["atol"],
                         method=integ["method"], rk4_step=integ["rk4_step"])
    metrics = engine.nonreciprocity_metrics(traj)
    out = resolved["output"]
    os.makedirs(out, exist_ok=True)
    reporting.write_text(os.path.join(out, "trajectory.csv"),
                         reporting.trajectory_csv(traj))
    reporting.write_text(os.path.join(out, "trajectory.gp"),
                         reporting.gnuplot_script("trajectory.csv", traj.n))
    extra = dict(extra)
    extra["metrics"] = _scalar_metrics(metrics)
    _write_metadata(resolved, traj.diagnostics, extra)
    return extra


def _cmd_couplings(resolved):
    matrices, extra = _build_bath(resolved)
    out = resolved["output"]
    os.makedirs(out, exist_ok=True)
    text = matrices.to_json()
    if not text.endswith("\n"):
        text += "\n"
    reporting.write_text(os.path.join(out, "couplings.json"), text)
    _write_metadata(resolved, {"n_qubits": matrices.n}, extra)
    print(f"wrote {out}/couplings.json ({matrices.n} qubits)")
    return 0


def _cmd_modes(resolved):
    matrices, extra = _build_bath(resolved)
    modes = diagonalize_decoherence(matrices)
    out = resolved["output"]
    os.makedirs(out, exist_ok=True)
    reporting.write_text(os.path.join(out, "modes.json"),
                         reporting.json_text(reporting.mode_report(modes)))
    extra = dict(extra)
    extra["rate_sum"] = float(modes.rates.sum())
    _write_metadata(resolved, {"n_qubits": matrices.n,
                               "psd_violation": modes.psd_violation}, extra)
    print(f"wrote {out}/modes.json (rates "
          + ", ".join(reporting.format_number(r) for r in modes.rates) + ")")
    return 0


def _cmd_evolve(resolved):
    extra = _run_evolution(resolved)
    m = extra["metrics"]
    print(f"wrote {resolved['output']}/trajectory.csv: "
          f"peak |delta_1N| = {reporting.format_number(m['peak_edge_asymmetry_abs'])}"
          f" at tau = {reporting.format_number(m['peak_edge_asymmetry_time'])}, "
          f"superradiant burst = {m['superradiant_burst']}")
    return 0


def _cmd_two_qubit(resolved):
    integ = resolved["integrator"]
    params = TwoQubitParams(**resolved["bath"]["pair"])
    traj = solve_two_qubit(params, integ["t_end"], integ["dt_out"],
                           rtol=integ["rtol"], atol=integ["atol"],
                           method=integ["method"], rk4_step=integ["rk4_step"])
    out = resolved["output"]
    os.makedirs(out, exist_ok=True)
    reporting.write_text(os.path.join(out, "two_qubit.csv"),
                         reporting.two_qubit_csv(traj))
    reporting.write_text(os.path.join(out, "two_qubit.gp"),
                         reporting.gnuplot_script("two_qubit.csv", 2))
    peak = float(traj.rates[:, 1].max())
    _write_metadata(resolved, traj.diagnostics,
                    {"metrics": {"peak_right_rate": peak}})
    print(f"wrote {out}/two_qubit.csv: peak right-qubit rate = "
          f"{reporting.format_number(peak)}")
    return 0


def _sweep_point(payload):
    """One sweep point, run in a worker process; returns the summary row."""
    resolved = json.loads(payload)
    key = resolved.pop("_sweep_variable")
    extra = _run_evolution(resolved)
    metrics = extra["metrics"]
    row = {
        "value": resolved["bath"]["material"][key],
        "lambda1_nm": extra.get("scales", {}).get("lambda1_nm"),
        "peak_total_rate": metrics["max_total_rate"],
        "peak_edge_asymmetry_abs": metrics["peak_edge_asymmetry_abs"],
        "superradiant_burst": metrics["superradiant_burst"],
        "initial_total_rate_slope": metrics["initial_total_rate_slope"],
        "envelope_excess_max": metrics["envelope_excess_max"],
        "output": resolved["output"],
    }
    return row


def _cmd_sweep(resolved):
    sweep = resolved["sweep"]
    variable = sweep["variable"]
    key = "k0" if variable == "k0" else "N"
    values = sweep["values"]
    out = resolved["output"]
    os.makedirs(out, exist_ok=True)
    payloads = []
    for value in values:
        point = json.loads(json.dumps(resolved))
        del point["sweep"]
        point["mode"] = "evolve"
        material = dict(point["bath"]["material"])
        material[key] = value
        point["bath"] = {"material": material}
        tag = f"N_{value}" if variable == "N" else f"k0_{value:.6g}"
        point["output"] = os.path.join(out, tag)
        point["_sweep_variable"] = key
        payloads.append(json.dumps(point))
    workers = sweep.get("workers") or min(len(values), os.cpu_count() or 1)
    rows = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for row in pool.map(_sweep_point, payloads):
                rows.append(row)
                _log_point(variable, row)
    else:
        for payload in payloads:
            row = _sweep_point(payload)
            rows.append(row)
            _log_point(variable, row)
    rows.sort(key=lambda r: r["value"])
    asym_peak = max(rows, key=lambda r: r["peak_edge_asymmetry_abs"])
    vanished = [r["value"] for r in rows if not r["superradiant_burst"]]
    summary = {
        "variable": variable,
        "rows": rows,
        "max_asymmetry_value": asym_peak["value"],
        "burst_vanishes_at": vanished[0] if vanished else None,
    }
    reporting.write_text(os.path.join(out, "summary.json"),
                         reporting.json_text(summary))
    header = [variable, "lambda1_nm", "peak_R_tot", "peak_delta_1N_abs",
              "superradiant_burst", "initial_slope", "envelope_excess_max"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join([
            reporting.format_number(r["value"]),
            reporting.format_number(r["lambda1_nm"]),
            reporting.format_number(r["peak_total_rate"]),
            reporting.format_number(r["peak_edge_asymmetry_abs"]),
            str(int(r["superradiant_burst"])),
            reporting.format_number(r["initial_total_rate_slope"]),
            reporting.format_number(r["envelope_excess_max"]),
        ]))
    reporting.write_text(os.path.join(out, "summary.csv"),
                         "\n".join(lines) + "\n")
    print(f"sweep done: max |delta_1N| at {variable} = "
          f"{asym_peak['value']}, superradiant burst vanishes at "
          f"{summary['burst_vanishes_at']}")
    return 0


def _log_point(variable, row):
    print(f"[sweep] {variable} = {row['value']}: peak |delta_1N| = "
          f"{reporting.format_number(row['peak_edge_asymmetry_abs'])}, "
          f"peak R_tot = {reporting.format_number(row['peak_total_rate'])}, "
          f"burst = {row['superradiant_burst']}")


_COMMANDS = {
    "couplings": _cmd_couplings,
    "evolve": _cmd_evolve,
    "two-qubit": _cmd_two_qubit,
    "modes": _cmd_modes,
    "sweep": _cmd_sweep,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qubitbath",
        description="Collective relaxation of a qubit array on a shared "
                    "dissipative bath: couplings, evolutions, mode analysis, "
                    "and parameter sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)
    help_lines = {
        "couplings": "generate and save coupling matrices",
        "evolve": "integrate the master equation and write the trajectory",
        "two-qubit": "integrate the exact reduced pair system",
        "modes": "diagonalize the dissipative matrix and report modes",
        "sweep": "run evolutions over a grid of k0 or N values",
    }
    for name in MODES:
        p = sub.add_parser(name, help=help_lines[name])
        p.add_argument("--config", required=True,
                       help="path to the JSON run configuration")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--workers", type=int,
                       help="sweep parallelism (default: one per point, "
                            "capped by CPU count)")
        p.add_argument("--t-end", type=float, dest="t_end",
                       help="integration horizon override")
        p.add_argument("--rtol", type=float,
                       help="integrator relative tolerance override")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.workers is not None and args.workers < 1:
            raise ValidationError(f"--workers must be >= 1, got {args.workers}")
        raw = load_config(args.config)
        resolved = resolve_config(raw, args.command, out=args.out,
                                  workers=args.workers, t_end=args.t_end,
                                  rtol=args.rtol)
        return _COMMANDS[args.command](resolved)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except IntegrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except QubitBathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

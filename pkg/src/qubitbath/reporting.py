"""Deterministic artifact formatting: CSV trajectories, metadata JSON,
mode reports, and companion gnuplot scripts.

Every number is printed with 12 significant digits through one shared
formatter and files are assembled with LF endings only, so reruns of the
same configuration produce byte-identical artifacts. The delta_1N column
keeps that literal header for every array size; it holds the left-right
edge rate difference in units of the local rate.
"""

import json

import numpy as np

from .ferromagnet import GAMMA0_UNITS_CAVEAT

TWO_QUBIT_EXTRA_COLUMNS = ("rho_EE", "rho_11", "rho_22", "rho_GG", "re_rho_21")


def format_number(x):
    """12-significant-digit scientific notation; the bit-exactness contract."""
    return f"{float(x):.11e}"


def _csv_text(header, columns):
    rows = [",".join(header)]
    data = np.column_stack(columns)
    for row in data:
        rows.append(",".join(format_number(v) for v in row))
    return "\n".join(rows) + "\n"


def trajectory_csv(traj):
    """CSV for a full-engine trajectory: tau, per-qubit rates, total rate,
    edge asymmetry, per-qubit populations."""
    n = traj.n
    header = (["tau"] + [f"R_{i + 1}" for i in range(n)] + ["R_tot", "delta_1N"]
              + [f"pop_{i + 1}" for i in range(n)])
    columns = ([traj.times] + [traj.rates[:, i] for i in range(n)]
               + [traj.total_rate, traj.edge_asymmetry / traj.gamma0]
               + [traj.populations[:, i] for i in range(n)])
    return _csv_text(header, columns)


def two_qubit_csv(traj):
    """Reduced-pair CSV: the N = 2 trajectory schema plus the five raw
    state variables as extra columns."""
    header = (["tau", "R_1", "R_2", "R_tot", "delta_1N", "pop_1", "pop_2"]
              + list(TWO_QUBIT_EXTRA_COLUMNS))
    gamma0 = traj.params.gamma0
    columns = ([traj.times, traj.rates[:, 0], traj.rates[:, 1],
                traj.total_rate, (traj.rates[:, 0] - traj.rates[:, 1]) / gamma0,
                traj.populations[:, 0], traj.populations[:, 1]]
               + [traj.states[:, i] for i in range(5)])
    return _csv_text(header, columns)


def _matrix_to_lists(matrix):
    arr = np.asarray(matrix)
    if np.iscomplexobj(arr):
        return {"re": arr.real.tolist(), "im": arr.imag.tolist()}
    return arr.tolist()


def mode_report(modes):
    """JSON-ready report: mode rates, qubit participation in each mode, and
    the mode-basis coherent couplings with their Hermitian/anti-Hermitian
    split over i."""
    s = modes.transform
    full = modes.mode_couplings
    sym = 0.5 * (full + full.conj().T)
    asym = -0.5j * (full - full.conj().T)
    return {
        "n_qubits": modes.n,
        "rates": modes.rates.tolist(),
        "participation": (np.abs(s) ** 2).tolist(),
        "transform": _matrix_to_lists(s),
        "mode_couplings": _matrix_to_lists(full),
        "mode_couplings_sym": _matrix_to_lists(sym),
        "mode_couplings_asym": _matrix_to_lists(asym),
        "psd_violation": modes.psd_violation,
    }


def run_metadata(resolved_config, diagnostics, extra=None):
    """Metadata document for one run: the fully resolved configuration
    (re-ingestable as a config), integrator diagnostics, and any
    run-specific extras such as derived bath scales."""
    doc = {
        "resolved_config": resolved_config,
        "diagnostics": _jsonable(diagnostics),
    }
    if extra:
        doc.update(_jsonable(extra))
    if _mentions_ferromagnet(resolved_config):
        doc["gamma0_caveat"] = GAMMA0_UNITS_CAVEAT
    return doc


def _mentions_ferromagnet(resolved_config):
    bath = resolved_config.get("bath") if isinstance(resolved_config, dict) else None
    return isinstance(bath, dict) and "material" in bath


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return value


def json_text(doc):
    """Canonical JSON serialization: sorted keys, two-space indent, LF."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_text(path, text):
    """Write UTF-8 bytes with the LF endings already in the text."""
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))


def gnuplot_script(csv_name, n_qubits):
    """Companion gnuplot script rendering rates, edge asymmetry, and
    populations from one trajectory CSV into SVG files."""
    stem = csv_name[:-4] if csv_name.endswith(".csv") else csv_name
    rate_cols = ", ".join(
        f"'{csv_name}' using 1:{i + 2} with lines title 'R_{i + 1}'"
        for i in range(n_qubits))
    pop_cols = ", ".join(
        f"'{csv_name}' using 1:{n_qubits + 3 + i + 1} with lines title 'pop_{i + 1}'"
        for i in range(n_qubits))
    delta_col = n_qubits + 3
    lines = [
        "set datafile separator ','",
        "set terminal svg size 900,600",
        "set xlabel 'tau'",
        f"set output '{stem}_rates.svg'",
        "set ylabel 'emission rate'",
        f"plot {rate_cols}, '{csv_name}' using 1:{n_qubits + 2} "
        "with lines title 'R_tot'",
        f"set output '{stem}_asymmetry.svg'",
        "set ylabel 'edge asymmetry'",
        f"plot '{csv_name}' using 1:{delta_col} with lines title 'delta_1N'",
        f"set output '{stem}_populations.svg'",
        "set ylabel 'excited population'",
        f"plot {pop_cols}",
    ]
    return "\n".join(lines) + "\n"

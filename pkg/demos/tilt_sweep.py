"""Nine qubits over the magnetic film: sweep the dispersion-minimum tilt and
watch the edge-rate asymmetry peak and die. Takes a minute or two."""

import numpy as np

from qubitbath import couplings_from_material, evolve, nonreciprocity_metrics
from qubitbath.ferromagnet import MATERIAL_DEFAULTS

K0_VALUES = (0.0, 0.0003, 0.003, 0.03, 0.1, 0.3)


def main():
    print("  k0        peak |delta_19|   t_peak   max R_tot   burst")
    rows = []
    for k0 in K0_VALUES:
        bath = couplings_from_material(dict(MATERIAL_DEFAULTS, N=9, k0=k0))
        traj = evolve(None, bath.matrices, t_end=30.0, dt_out=0.01)
        m = nonreciprocity_metrics(traj)
        rows.append((k0, m))
        print(f"{k0:8.4f}   {m['peak_edge_asymmetry_abs']:14.6f}   "
              f"{m['peak_edge_asymmetry_time']:6.2f}   {m['max_total_rate']:9.4f}   "
              f"{m['superradiant_burst']}")

    # long-wavelength side: asymmetry collapses as the tilt vanishes, but the
    # collective burst survives. short-wavelength side: couplings decohere,
    # both the asymmetry and the burst fade toward independent decay.
    peaks = [m["peak_edge_asymmetry_abs"] for _, m in rows]
    best = rows[int(np.argmax(peaks))][0]
    print(f"\nasymmetry is maximal near k0 = {best}")


if __name__ == "__main__":
    main()

"""Time evolution of the collective relaxation master equation.

The generator is fixed by a CouplingMatrices instance: coherent exchange
enters through the non-Hermitian single-excitation Hamiltonian, dissipation
through the bath-correlated jump transfer. evolve() integrates the full
density matrix with an embedded Runge-Kutta 5(4) pair and samples emission
observables on a uniform time grid, carrying an auxiliary cumulative
emission component so quanta conservation can be checked to integrator
precision.

Rate convention: the emission rate of qubit a combines the local decay of
its excited population with cross terms 2 Re[i w_ab <s+_a s-_b>] summed
over partners, where w is half of (coherent - i dissipative); the edge
asymmetry series is rate(first qubit) - rate(last qubit).
"""

import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from . import _kernels
from .couplings import CouplingMatrices, decompose_couplings
from .errors import (
    IntegrationError,
    PositivityWarning,
    ResourceLimitError,
    ValidationError,
)

MAX_QUBITS = 12
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12
POSITIVITY_FLOOR = -1e-6
_BLOCK_SUPPORT_RTOL = 1e-14
_N_POSITIVITY_SAMPLES = 13


@dataclass(frozen=True)
class DensityMatrix:
    """Dense register state. Validated on construction: square power-of-two
    shape within the register cap, Hermitian, unit trace. Positivity is
    monitored during evolution, never enforced."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {arr.shape}")
        dim = arr.shape[0]
        n = dim.bit_length() - 1
        if dim < 2 or (1 << n) != dim:
            raise ValidationError(
                f"density matrix dimension must be a power of two >= 2, got {dim}")
        if n > MAX_QUBITS:
            raise ResourceLimitError(f"{n} qubits exceeds the register cap of {MAX_QUBITS}")
        herm = np.abs(arr - arr.conj().T).max()
        scale = max(np.abs(arr).max(), 1e-300)
        if herm > 1e-10 * scale:
            raise ValidationError(f"density matrix is not Hermitian: residual {herm:.3e}")
        tr = np.trace(arr)
        if abs(tr - 1.0) > 1e-9:
            raise ValidationError(f"density matrix trace must be 1, got {tr:.12g}")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def _wrap(cls, arr):
        # engine-internal constructor: evolved states have already been
        # residual-checked and may sit slightly outside the input tolerances
        obj = object.__new__(cls)
        arr.setflags(write=False)
        object.__setattr__(obj, "data", arr)
        return obj

    @property
    def n(self):
        return self.data.shape[0].bit_length() - 1

    @property
    def dim(self):
        return self.data.shape[0]


def fully_excited_state(n_qubits):
    """All qubits excited, the standard launch state for collective decay."""
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)):
        raise ValidationError(f"qubit count must be an integer, got {n_qubits!r}")
    if n_qubits < 1:
        raise ValidationError(f"qubit count must be >= 1, got {n_qubits}")
    if n_qubits > MAX_QUBITS:
        raise ResourceLimitError(
            f"{n_qubits} qubits needs a 2^{n_qubits}-dimensional register; "
            f"the cap is {MAX_QUBITS}")
    dim = 1 << int(n_qubits)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    return DensityMatrix._wrap(rho)


@dataclass(frozen=True)
class EmissionTrajectory:
    """Sampled observables of one evolve() run.

    rates has shape (samples, n); correlators and single_excitation_block
    are (samples, n, n) complex. The residual arrays track trace deviation,
    hermiticity defect and quanta-conservation defect sample by sample;
    diagnostics carries integrator statistics and the residual maxima.
    """

    times: np.ndarray
    rates: np.ndarray
    total_rate: np.ndarray
    edge_asymmetry: np.ndarray
    populations: np.ndarray
    correlators: np.ndarray
    single_excitation_block: np.ndarray
    cumulative_emission: np.ndarray
    trace_deviation: np.ndarray
    hermiticity_residual: np.ndarray
    closure_residual: np.ndarray
    final_state: DensityMatrix
    couplings: CouplingMatrices
    diagnostics: dict

    def __post_init__(self):
        for name in ("times", "rates", "total_rate", "edge_asymmetry", "populations",
                     "correlators", "single_excitation_block", "cumulative_emission",
                     "trace_deviation", "hermiticity_residual", "closure_residual"):
            getattr(self, name).setflags(write=False)

    @property
    def n(self):
        return self.rates.shape[1]

    @property
    def gamma0(self):
        return self.couplings.gamma0


def _sample_grid(t_end, dt_out, times):
    if times is not None:
        grid = np.asarray(times, dtype=float)
        if grid.ndim != 1 or grid.size < 1:
            raise ValidationError("times must be a 1-d array with at least one entry")
        if grid[0] < 0 or np.any(np.diff(grid) <= 0):
            raise ValidationError("times must be strictly increasing and start at t >= 0")
        if grid[-1] <= 0:
            raise ValidationError("the last sample time must be positive")
        return grid
    if not t_end > 0:
        raise ValidationError(f"t_end must be positive, got {t_end}")
    if not dt_out > 0:
        raise ValidationError(f"dt_out must be positive, got {dt_out}")
    # dt_out is rounded to the nearest spacing that divides t_end evenly
    steps = max(1, int(round(t_end / dt_out)))
    return np.linspace(0.0, float(t_end), steps + 1)


class _Collector:
    """Accumulates per-sample observables from the flat augmented state."""

    def __init__(self, n, packed, state_len, n_grid):
        self.n = n
        self.packed = packed
        self.state_len = state_len
        if packed:
            self.diag_idx, self.exc = _kernels.diagonal_indices(n)
            self.transpose = _kernels.sector_layout(n).transpose_perm
        else:
            self.diag_idx, self.exc = _kernels.dense_diagonal_indices(n)
            self.transpose = None
        self.se_idx = _kernels.single_excitation_indices(n, packed=packed)
        self.initial_excitation = None
        self.correlators = np.empty((n_grid, n, n), dtype=complex)
        self.se_block = np.empty((n_grid, n, n), dtype=complex)
        self.cumulative = np.empty(n_grid)
        self.trace_dev = np.empty(n_grid)
        self.herm_res = np.empty(n_grid)
        self.closure = np.empty(n_grid)
        self.filled = 0
        self.positivity_states = {}

    def add(self, y_aug, keep_state=False):
        y = y_aug[:self.state_len]
        i = self.filled
        diag = y[self.diag_idx].real
        excitation = float(self.exc @ diag)
        if self.initial_excitation is None:
            self.initial_excitation = excitation
        cum = float(y_aug[self.state_len].real)
        self.correlators[i] = _kernels.correlators_from_flat(y, self.n, self.packed)
        self.se_block[i] = y[self.se_idx]
        self.cumulative[i] = cum
        self.trace_dev[i] = abs(diag.sum() - 1.0)
        if self.packed:
            self.herm_res[i] = np.abs(y - np.conj(y[self.transpose])).max()
        else:
            rho = y.reshape(1 << self.n, 1 << self.n)
            self.herm_res[i] = np.abs(rho - rho.conj().T).max()
        self.closure[i] = abs(excitation + cum - self.initial_excitation)
        if keep_state:
            self.positivity_states[i] = y.copy()
        self.filled += 1


def _min_eigenvalue(y, n, packed):
    if packed:
        lay = _kernels.sector_layout(n)
        return min(float(np.linalg.eigvalsh(lay.block(y, k)).min()) for k in range(n + 1))
    rho = y.reshape(1 << n, 1 << n)
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())


def evolve(initial_state, matrices, t_end=30.0, dt_out=0.01, *, times=None,
           rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, method="rk45", rk4_step=None,
           check_positivity=True):
    """Integrate the master equation and sample emission observables.

    initial_state None means the fully excited register. Samples land on
    linspace(0, t_end, round(t_end/dt_out)+1) unless an explicit increasing
    `times` array is given. States that are exactly block-diagonal in
    excitation number (the fully excited one is) run in the packed sector
    layout; anything with inter-sector coherence falls back to the dense
    kernel. method "rk45" is the adaptive embedded 5(4) pair; "rk4" is a
    fixed-step classic Runge-Kutta cross-check whose step never exceeds
    rk4_step (default 1e-3 of the fastest collective decay time). Raises
    IntegrationError (with .t set) if the stepper fails or the state leaves
    the finite range; warns PositivityWarning if an eigenvalue of the
    sampled state dips below -1e-6.
    """
    n = matrices.n
    if initial_state is None:
        initial_state = fully_excited_state(n)
    if initial_state.n != n:
        raise ValidationError(
            f"initial state has {initial_state.n} qubits, couplings have {n}")
    if method not in ("rk45", "rk4"):
        raise ValidationError(f"method must be 'rk45' or 'rk4', got {method!r}")
    grid = _sample_grid(t_end, dt_out, times)

    heff = 0.5 * matrices.coherent - 0.5j * matrices.dissipative
    lay = _kernels.sector_layout(n)
    rho0 = initial_state.data
    scale = np.abs(rho0).max()
    packed = lay.offblock_max(rho0) <= _BLOCK_SUPPORT_RTOL * scale
    if packed:
        op = _kernels.PackedLiouvillian(heff, matrices.dissipative)
        y0 = lay.pack(rho0)
    else:
        op = _kernels.DenseLiouvillian(heff, matrices.dissipative)
        y0 = rho0.ravel().copy()
    state_len = y0.size
    diag_idx, exc = (_kernels.diagonal_indices(n) if packed
                     else _kernels.dense_diagonal_indices(n))

    nfev = [0]

    def rhs(_t, y_aug):
        nfev[0] += 1
        dy = op.apply(y_aug[:state_len])
        demit = -float(exc @ dy[diag_idx].real)
        return np.concatenate((dy, (demit + 0j,)))

    coll = _Collector(n, packed, state_len, grid.size)
    keep = set()
    if check_positivity:
        take = np.unique(np.linspace(0, grid.size - 1,
                                     min(_N_POSITIVITY_SAMPLES, grid.size)).round().astype(int))
        keep = set(take.tolist())

    y_aug0 = np.concatenate((y0, (0j,)))
    gi = 0
    if grid[0] == 0.0:
        coll.add(y_aug0, keep_state=0 in keep)
        gi = 1

    t0 = time.perf_counter()
    if method == "rk45":
        solver = RK45(rhs, 0.0, y_aug0, float(grid[-1]), rtol=rtol, atol=atol)
        n_steps = 0
        while solver.status == "running":
            solver.step()
            n_steps += 1
            if solver.status == "failed":
                raise IntegrationError(
                    f"adaptive stepper failed at t = {solver.t:.6g}: "
                    f"{solver.message or 'step size underflow'}", t=solver.t)
            if not np.isfinite(solver.y[state_len].real):
                raise IntegrationError(
                    f"state left the finite range at t = {solver.t:.6g}", t=solver.t)
            if gi < grid.size and grid[gi] <= solver.t:
                dense = solver.dense_output()
                while gi < grid.size and grid[gi] <= solver.t:
                    coll.add(dense(grid[gi]), keep_state=gi in keep)
                    gi += 1
        while gi < grid.size and grid[gi] <= solver.t + 1e-12:
            coll.add(solver.y, keep_state=gi in keep)
            gi += 1
        if gi < grid.size:
            raise IntegrationError(
                f"integration stopped at t = {solver.t:.6g} before the last sample",
                t=solver.t)
        y_final = solver.y[:state_len]
    else:
        if rk4_step is None:
            fastest = max(float(np.linalg.eigvalsh(matrices.dissipative).max()),
                          matrices.gamma0)
            rk4_step = 1e-3 / fastest
        if not rk4_step > 0:
            raise ValidationError(f"rk4_step must be positive, got {rk4_step}")
        y = y_aug0
        t = 0.0
        n_steps = 0
        for gj in range(gi, grid.size):
            span = grid[gj] - t
            substeps = max(1, int(np.ceil(span / rk4_step - 1e-12)))
            h = span / substeps
            for _ in range(substeps):
                k1 = rhs(t, y)
                k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
                k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
                k4 = rhs(t + h, y + h * k3)
                y = y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
                t += h
                n_steps += 1
            t = float(grid[gj])
            if not np.isfinite(y[state_len].real):
                raise IntegrationError(f"state left the finite range at t = {t:.6g}", t=t)
            coll.add(y, keep_state=gj in keep)
        y_final = y[:state_len]
    wall = time.perf_counter() - t0

    positivity_min = None
    positivity_warning = False
    if check_positivity and coll.positivity_states:
        positivity_min = min(_min_eigenvalue(s, n, packed)
                             for s in coll.positivity_states.values())
        if positivity_min < POSITIVITY_FLOOR:
            positivity_warning = True
            warnings.warn(
                f"evolved state dipped to eigenvalue {positivity_min:.3e}; "
                "tighten rtol/atol if this matters for your use",
                PositivityWarning, stacklevel=2)

    rates = np.einsum("ab,sab->sa", 2j * heff, coll.correlators).real
    populations = np.einsum("saa->sa", coll.correlators).real.copy()
    total = rates.sum(axis=1)
    final_dense = (lay.unpack(y_final) if packed
                   else y_final.reshape(1 << n, 1 << n).copy())

    diagnostics = {
        "method": method,
        "packed_layout": bool(packed),
        "n_qubits": n,
        "rtol": float(rtol),
        "atol": float(atol),
        "n_steps": int(n_steps),
        "n_rhs_evaluations": int(nfev[0]),
        "wall_time_s": float(wall),
        "trace_deviation_max": float(coll.trace_dev.max()),
        "hermiticity_residual_max": float(coll.herm_res.max()),
        "closure_residual_max": float(coll.closure.max()),
        "positivity_min_eigenvalue": positivity_min,
        "positivity_warning": positivity_warning,
    }
    return EmissionTrajectory(
        times=grid.copy(),
        rates=rates,
        total_rate=total,
        edge_asymmetry=rates[:, 0] - rates[:, -1],
        populations=populations,
        correlators=coll.correlators,
        single_excitation_block=coll.se_block,
        cumulative_emission=coll.cumulative,
        trace_deviation=coll.trace_dev,
        hermiticity_residual=coll.herm_res,
        closure_residual=coll.closure,
        final_state=DensityMatrix._wrap(final_dense),
        couplings=matrices,
        diagnostics=diagnostics,
    )


def correlation_matrix(state, n_qubits=None):
    """Raising/lowering correlator matrix <s+_a s-_b> of a dense state."""
    rho = state.data if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    n = n_qubits if n_qubits is not None else rho.shape[0].bit_length() - 1
    return _kernels.correlators_from_flat(rho.ravel(), n, packed=False)


def emission_rates(state, matrices):
    """Instantaneous per-qubit photon emission rates of a dense state."""
    corr = correlation_matrix(state, matrices.n)
    heff = 0.5 * matrices.coherent - 0.5j * matrices.dissipative
    return np.einsum("ab,ab->a", 2j * heff, corr).real


def single_excitation_block(state):
    """The n x n coherence block between the single-excitation basis states."""
    rho = state.data if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    n = rho.shape[0].bit_length() - 1
    return rho.ravel()[_kernels.single_excitation_indices(n, packed=False)]


def liouvillian_apply(state, matrices):
    """One generator application, returned dense. Reference-path evaluation;
    evolve() uses the compiled kernels, which are tested against this."""
    rho = state.data if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)
    if rho.shape[0] != 1 << matrices.n:
        raise ValidationError(
            f"state dimension {rho.shape[0]} does not match {matrices.n} qubits")
    heff = 0.5 * matrices.coherent - 0.5j * matrices.dissipative
    return _kernels.apply_liouvillian_reference(rho, heff, matrices.dissipative)


def nonreciprocity_metrics(traj):
    """Directionality measures of one trajectory.

    pair_asymmetry[s, a, b] is the net rate flowing through the (a, b)
    exchange channel, -2 Jsym Im<s+_a s-_b> - 2 Jasym Re<s+_a s-_b>, an
    antisymmetric matrix vanishing identically for a reciprocal bath.
    edge_asymmetry is (rate_first - rate_last)/gamma0 per sample. Scalars
    summarize the peak asymmetry and the superradiant-burst character of
    the total rate against the independent-decay envelope.
    """
    dec = decompose_couplings(traj.couplings)
    corr = traj.correlators
    pair = (-2.0 * dec.coherent_sym * corr.imag
            - 2.0 * dec.coherent_asym * corr.real)
    g0 = traj.gamma0
    n = traj.n
    delta = traj.edge_asymmetry / g0
    i_peak = int(np.abs(delta).argmax())
    i_max = int(traj.total_rate.argmax())
    envelope = n * g0 * np.exp(-g0 * traj.times)
    if traj.times.size >= 2:
        slope = float((traj.total_rate[1] - traj.total_rate[0])
                      / (traj.times[1] - traj.times[0]))
    else:
        slope = None
    max_total = float(traj.total_rate.max())
    return {
        "n_qubits": n,
        "pair_asymmetry": pair,
        "edge_asymmetry": delta,
        "peak_edge_asymmetry": float(delta[i_peak]),
        "peak_edge_asymmetry_abs": float(abs(delta[i_peak])),
        "peak_edge_asymmetry_time": float(traj.times[i_peak]),
        "max_total_rate": max_total,
        "max_total_rate_time": float(traj.times[i_max]),
        "superradiant_burst": bool(max_total > n * g0 * (1.0 + 1e-6)),
        "initial_total_rate_slope": slope,
        "envelope_excess_max": float((traj.total_rate - envelope).max()),
    }

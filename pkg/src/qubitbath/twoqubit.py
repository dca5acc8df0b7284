"""Exact reduced dynamics of two qubits on a shared dissipative bath.

In the collective-mode basis the two-qubit density matrix closes on five
real variables: the doubly-excited, two single-excitation-mode, and ground
populations plus the real part of the inter-mode coherence. The module
integrates that closed system and reconstructs per-qubit emission rates
from the derivatives, serving as an independent oracle for the full-space
engine. The symmetric coherent coupling drops out of these observables
entirely; it is accepted and ignored, which is also the reason purely
imaginary inter-mode coherence never develops from the supported initial
states.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import RK45

from .engine import DEFAULT_ATOL, DEFAULT_RTOL, _sample_grid
from .errors import IntegrationError, ValidationError
from .modes import ManifoldState

SUM_TOL = 1e-9
POP_TOL = 1e-9
COHERENCE_TOL = 1e-9
RUNTIME_TOL = 1e-8


@dataclass(frozen=True)
class TwoQubitParams:
    """Couplings of the pair in the site basis.

    dissipative_sym is the symmetric dissipative inter-qubit coupling,
    coherent_asym the antisymmetric coherent one driving non-reciprocity,
    and coherent_sym the symmetric coherent one, which only dresses phases
    and leaves every observable of this reduced system untouched.
    """

    gamma0: float = 1.0
    dissipative_sym: float = 0.0
    coherent_asym: float = 0.0
    coherent_sym: float = 0.0

    def __post_init__(self):
        if not self.gamma0 > 0:
            raise ValidationError(f"gamma0 must be positive, got {self.gamma0}")
        if abs(self.dissipative_sym) > self.gamma0:
            raise ValidationError(
                f"|dissipative_sym| = {abs(self.dissipative_sym)} exceeds "
                f"gamma0 = {self.gamma0}; the 2x2 dissipative matrix would "
                "not be positive semidefinite")

    @property
    def rate_asym(self):
        """Decay rate of the antisymmetric mode (the slower one for
        positive dissipative_sym)."""
        return self.gamma0 - self.dissipative_sym

    @property
    def rate_sym(self):
        return self.gamma0 + self.dissipative_sym


@dataclass(frozen=True)
class TwoQubitState:
    """Closed five-variable state in the mode basis."""

    pop_excited: float
    pop_asym: float
    pop_sym: float
    pop_ground: float
    mode_coherence_re: float

    def __post_init__(self):
        pops = (self.pop_excited, self.pop_asym, self.pop_sym, self.pop_ground)
        names = ("pop_excited", "pop_asym", "pop_sym", "pop_ground")
        for name, value in zip(names, pops):
            if not -POP_TOL <= value <= 1.0 + POP_TOL:
                raise ValidationError(f"{name} = {value} outside [0, 1]")
        total = sum(pops)
        if abs(total - 1.0) > SUM_TOL:
            raise ValidationError(f"populations sum to {total}, not 1")
        bound = np.sqrt(max(self.pop_asym, 0.0) * max(self.pop_sym, 0.0))
        if abs(self.mode_coherence_re) > bound + COHERENCE_TOL:
            raise ValidationError(
                f"|mode_coherence_re| = {abs(self.mode_coherence_re)} exceeds "
                f"the Cauchy-Schwarz bound {bound:.6e}")

    def as_vector(self):
        return np.array([self.pop_excited, self.pop_asym, self.pop_sym,
                         self.pop_ground, self.mode_coherence_re])


@dataclass(frozen=True)
class TwoQubitTrajectory:
    """Sampled reduced trajectory.

    states columns follow TwoQubitState field order; rates columns are the
    left and right qubit emission rates reconstructed from derivatives;
    flow_asymmetry is the net single-excitation probability flow between
    the two modes.
    """

    times: np.ndarray
    states: np.ndarray
    rates: np.ndarray
    total_rate: np.ndarray
    rate_asymmetry: np.ndarray
    populations: np.ndarray
    flow_asymmetry: np.ndarray
    params: TwoQubitParams
    diagnostics: dict

    def state(self, index):
        ee, pa, ps, gg, re = self.states[index]
        return TwoQubitState(pop_excited=ee, pop_asym=pa, pop_sym=ps,
                             pop_ground=gg, mode_coherence_re=re)


def _rhs(y, p):
    """Derivative of the raw state vector (EE, asym, sym, GG, Re coherence)."""
    ee, pa, ps, gg, re = y
    r1 = p.rate_asym
    r2 = p.rate_sym
    ja = p.coherent_asym
    return np.array([
        -(r1 + r2) * ee,
        -r1 * pa + r1 * ee - ja * re,
        -r2 * ps + r2 * ee + ja * re,
        r2 * ps + r1 * pa,
        0.5 * (-ja * (ps - pa) - (r1 + r2) * re),
    ])


def reduced_rhs(state, params):
    """Time derivative of a TwoQubitState, in the state's field order."""
    return _rhs(state.as_vector(), params)


def _initial_vector(initial_state):
    if initial_state is None:
        return np.array([1.0, 0.0, 0.0, 0.0, 0.0])
    if isinstance(initial_state, TwoQubitState):
        return initial_state.as_vector()
    if isinstance(initial_state, ManifoldState):
        coeff = initial_state.coefficients
        if coeff.shape != (2, 2):
            raise ValidationError(
                f"two-qubit manifold state must be 2x2, got {coeff.shape}")
        if abs(coeff[1, 0].imag) > 1e-12:
            raise ValidationError(
                "imaginary inter-mode coherence is outside the closed "
                f"reduced system (got {coeff[1, 0].imag:.3e})")
        pa = float(coeff[0, 0].real)
        ps = float(coeff[1, 1].real)
        gg = 1.0 - pa - ps
        if gg < -POP_TOL:
            raise ValidationError(
                f"manifold populations sum to {pa + ps}, above 1")
        return np.array([0.0, pa, ps, max(gg, 0.0), float(coeff[1, 0].real)])
    raise ValidationError(
        "initial_state must be None, a TwoQubitState, or a ManifoldState")


def _check_sample(y, t):
    pops = y[:4]
    if pops.min() < -RUNTIME_TOL or pops.max() > 1.0 + RUNTIME_TOL:
        raise IntegrationError(
            f"population left [0, 1] during integration "
            f"(range [{pops.min():.3e}, {pops.max():.3e}])", t=t)
    drift = abs(pops.sum() - 1.0)
    if drift > RUNTIME_TOL:
        raise IntegrationError(f"population sum drifted by {drift:.3e}", t=t)
    bound = np.sqrt(max(y[1], 0.0) * max(y[2], 0.0))
    if abs(y[4]) > bound + RUNTIME_TOL:
        raise IntegrationError(
            f"inter-mode coherence {y[4]:.6e} broke the Cauchy-Schwarz "
            f"bound {bound:.6e}", t=t)


def solve_two_qubit(params, t_end=30.0, dt_out=0.01, *, times=None,
                    initial_state=None, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                    method="rk45", rk4_step=None):
    """Integrate the reduced system and reconstruct emission observables.

    Samples land exactly on the requested grid via the integrator's dense
    output. Population bounds, their sum, and the coherence bound are
    enforced at every sample; a violation aborts with the offending time.
    """
    if method not in ("rk45", "rk4"):
        raise ValidationError(f"method must be 'rk45' or 'rk4', got {method!r}")
    grid = _sample_grid(t_end, dt_out, times)
    y0 = _initial_vector(initial_state)
    samples = np.empty((grid.size, 5))
    n_steps = 0
    if method == "rk4":
        if rk4_step is None:
            rk4_step = 1e-3 / max(params.rate_sym, params.gamma0)
        if not rk4_step > 0:
            raise ValidationError(f"rk4_step must be positive, got {rk4_step}")
        y = y0.copy()
        t = 0.0
        if grid[0] == 0.0:
            samples[0] = y
            start = 1
        else:
            start = 0
        for gi in range(start, grid.size):
            span = grid[gi] - t
            substeps = max(int(np.ceil(span / rk4_step - 1e-12)), 1)
            h = span / substeps
            for _ in range(substeps):
                k1 = _rhs(y, params)
                k2 = _rhs(y + 0.5 * h * k1, params)
                k3 = _rhs(y + 0.5 * h * k2, params)
                k4 = _rhs(y + h * k3, params)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                n_steps += 1
            t = grid[gi]
            _check_sample(y, t)
            samples[gi] = y
    else:
        solver = RK45(lambda t, y: _rhs(y, params), 0.0, y0,
                      t_bound=float(grid[-1]), rtol=rtol, atol=atol)
        gi = 0
        if grid[0] == 0.0:
            samples[0] = y0
            gi = 1
        while gi < grid.size:
            if solver.status == "finished":
                break
            solver.step()
            n_steps += 1
            if solver.status == "failed":
                raise IntegrationError("adaptive step size control failed",
                                       t=solver.t)
            dense = solver.dense_output()
            while gi < grid.size and grid[gi] <= solver.t + 1e-12:
                y = dense(grid[gi])
                _check_sample(y, grid[gi])
                samples[gi] = y
                gi += 1
        if gi < grid.size:
            raise IntegrationError(
                f"integration ended at t = {solver.t} before the last "
                f"requested sample {grid[-1]}", t=solver.t)

    derivs = np.empty_like(samples)
    for i in range(grid.size):
        derivs[i] = _rhs(samples[i], params)
    d_ee = derivs[:, 0]
    d_gg = derivs[:, 3]
    d_re = derivs[:, 4]
    rate_left = 0.5 * (2.0 * d_re - d_ee + d_gg)
    rate_right = 0.5 * (-2.0 * d_re - d_ee + d_gg)
    rates = np.column_stack((rate_left, rate_right))
    ee = samples[:, 0]
    pa = samples[:, 1]
    ps = samples[:, 2]
    re = samples[:, 4]
    populations = np.column_stack((ee + 0.5 * (pa + ps) - re,
                                   ee + 0.5 * (pa + ps) + re))
    flow_asym = -2.0 * params.coherent_asym * re
    diagnostics = {
        "method": method,
        "n_steps": n_steps,
        "rtol": rtol if method == "rk45" else None,
        "atol": atol if method == "rk45" else None,
        "rk4_step": rk4_step if method == "rk4" else None,
        "population_sum_max_drift": float(np.abs(samples[:, :4].sum(axis=1) - 1.0).max()),
    }
    arrays = dict(times=grid.copy(), states=samples, rates=rates,
                  total_rate=rates.sum(axis=1), rate_asymmetry=2.0 * d_re,
                  populations=populations, flow_asymmetry=flow_asym)
    for arr in arrays.values():
        arr.flags.writeable = False
    return TwoQubitTrajectory(params=params, diagnostics=diagnostics, **arrays)

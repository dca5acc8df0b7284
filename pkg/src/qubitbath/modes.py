"""Collective jump modes of the dissipative coupling matrix.

Diagonalizing the Hermitian dissipative matrix yields collective lowering
operators, each decaying at one eigenrate; the coherent couplings transform
into that basis, where their antisymmetric part drives probability flow
between modes of the single-excitation manifold. Conventions are pinned for
reproducibility: rates ascend, each eigenvector column is phased so its
largest-magnitude entry (the highest-index one on ties) is real positive,
and degenerate groups are ordered by a lexicographic sort on entries, which
maps a scalar dissipative matrix to the identity transform.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .couplings import CouplingMatrices, decompose_couplings
from .engine import DensityMatrix, single_excitation_block
from .errors import PositivityWarning, ValidationError

RATE_FLOOR_RTOL = 1e-10
DEGENERACY_RTOL = 1e-8
PHASE_TIE_RTOL = 1e-9
HERM_ATOL = 1e-8


@dataclass(frozen=True)
class CollectiveModes:
    """Eigenbasis of the dissipative coupling matrix.

    transform holds the eigenvectors as columns (site index first, mode
    index second), rates the matching eigenvalues sorted ascending, and
    mode_couplings the coherent matrix conjugated into the mode basis.
    psd_violation records whether any rate fell measurably below zero.
    """

    transform: np.ndarray
    rates: np.ndarray
    mode_couplings: np.ndarray
    psd_violation: bool = False

    def __post_init__(self):
        s = np.ascontiguousarray(self.transform, dtype=complex)
        r = np.ascontiguousarray(self.rates, dtype=float)
        j = np.ascontiguousarray(self.mode_couplings, dtype=complex)
        n = s.shape[0]
        if s.shape != (n, n) or j.shape != (n, n) or r.shape != (n,):
            raise ValidationError(
                f"inconsistent mode shapes: transform {s.shape}, "
                f"rates {r.shape}, mode_couplings {j.shape}")
        for arr, name in ((s, "transform"), (r, "rates"), (j, "mode_couplings")):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.transform.shape[0]


@dataclass(frozen=True)
class ManifoldState:
    """Density-matrix coefficients between single-excitation mode states."""

    coefficients: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coefficients, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValidationError(f"coefficients must be square, got shape {arr.shape}")
        scale = max(1.0, float(np.abs(arr).max()) if arr.size else 1.0)
        herm = float(np.abs(arr - arr.conj().T).max()) if arr.size else 0.0
        if herm > HERM_ATOL * scale:
            raise ValidationError(
                f"manifold coefficients not Hermitian: residual {herm:.3e}")
        diag = np.diagonal(arr)
        if diag.size and (diag.real.min() < -HERM_ATOL or diag.real.max() > 1.0 + HERM_ATOL):
            raise ValidationError(
                f"manifold populations outside [0, 1]: range "
                f"[{diag.real.min():.3e}, {diag.real.max():.3e}]")
        arr.flags.writeable = False
        object.__setattr__(self, "coefficients", arr)

    @property
    def n(self):
        return self.coefficients.shape[0]


def _fix_column_phases(vectors):
    """Rotate each column so its largest-magnitude entry is real positive.
    Ties (symmetric arrays) resolve to the highest site index."""
    out = np.array(vectors, dtype=complex)
    for k in range(out.shape[1]):
        col = out[:, k]
        mags = np.abs(col)
        top = mags.max()
        candidates = np.nonzero(mags >= top * (1.0 - PHASE_TIE_RTOL))[0]
        anchor = candidates[-1]
        pivot = col[anchor]
        out[:, k] = col * (np.conj(pivot) / abs(pivot))
    return out


def _sort_degenerate_groups(values, vectors, scale):
    """Order columns inside each (near-)degenerate eigenvalue group by a
    descending lexicographic sort on rounded entries; a scalar matrix then
    keeps the identity ordering."""
    out = np.array(vectors, dtype=complex)
    gap_tol = DEGENERACY_RTOL * scale
    start = 0
    n = values.size
    for stop in range(1, n + 1):
        if stop < n and values[stop] - values[stop - 1] <= gap_tol:
            continue
        if stop - start > 1:
            cols = list(range(start, stop))

            def entry_key(k):
                col = out[:, k]
                return tuple(np.round(np.column_stack((col.real, col.imag)), 12).ravel())

            order = sorted(cols, key=entry_key, reverse=True)
            out[:, start:stop] = out[:, order]
        start = stop
    return out


def diagonalize_decoherence(matrices):
    """Collective modes of the dissipative matrix, with the coherent
    couplings carried along into the mode basis.

    A rate below -1e-10 of the local rate marks the input as unphysical;
    that raises a PositivityWarning and sets the psd_violation flag rather
    than aborting, so diagnostic workflows can inspect the offender.
    """
    if not isinstance(matrices, CouplingMatrices):
        raise ValidationError("diagonalize_decoherence expects CouplingMatrices")
    values, vectors = np.linalg.eigh(matrices.dissipative)
    scale = max(float(np.abs(values).max()), matrices.gamma0)
    vectors = _fix_column_phases(vectors)
    vectors = _sort_degenerate_groups(values, vectors, scale)
    floor = -RATE_FLOOR_RTOL * matrices.gamma0
    violated = bool(values.min() < floor)
    if violated:
        warnings.warn(
            f"dissipative matrix is not positive semidefinite: min rate "
            f"{values.min():.6e} below {floor:.1e}", PositivityWarning,
            stacklevel=2)
    mode_couplings = vectors.conj().T @ matrices.coherent @ vectors
    return CollectiveModes(transform=vectors, rates=values,
                           mode_couplings=mode_couplings,
                           psd_violation=violated)


def transform_couplings(matrices, modes):
    """Symmetric/antisymmetric coherent parts in the mode basis.

    Returns (sym, asym): sym is the Hermitian part of the mode-basis
    coupling matrix and asym the anti-Hermitian part over i, so the full
    mode coupling is sym + i*asym and (asym)^dagger = -asym.
    """
    if modes.n != matrices.n:
        raise ValidationError(
            f"dimension mismatch: matrices n={matrices.n}, modes n={modes.n}")
    parts = decompose_couplings(matrices)
    s = modes.transform
    sym = s.conj().T @ parts.coherent_sym @ s
    asym = s.conj().T @ parts.coherent_asym @ s
    return sym, asym


def project_single_excitation(rho, modes):
    """Project a full density matrix onto the single-excitation mode states."""
    if not isinstance(rho, DensityMatrix):
        raise ValidationError("project_single_excitation expects a DensityMatrix")
    if rho.n != modes.n:
        raise ValidationError(
            f"dimension mismatch: state has {rho.n} qubits, modes {modes.n}")
    site_block = single_excitation_block(rho)
    s = modes.transform
    return ManifoldState(coefficients=s.conj().T @ site_block @ s)


def probability_flow(ms, modes):
    """Inter-mode probability flow and its non-reciprocal part.

    flow[n, m] is the imaginary part of mode_couplings[n, m] times the
    transposed manifold coefficients; flow_asymmetry is flow minus its
    transpose, antisymmetric by construction and identically zero when the
    couplings are reciprocal and the manifold state is real.
    """
    if ms.n != modes.n:
        raise ValidationError(
            f"dimension mismatch: manifold state n={ms.n}, modes n={modes.n}")
    flow = np.imag(modes.mode_couplings * ms.coefficients.T)
    return {"flow": flow, "flow_asymmetry": flow - flow.T}

"""Coherent/dissipative coupling matrices and their pair decompositions.

Conventions: matrices are N x N over qubit sites, Hermitian. The coherent
matrix has zero diagonal (on-site shifts are dropped); the dissipative
matrix carries the local rate gamma0 on its diagonal. Splitting each into
a real symmetric and a real anti-symmetric part yields the four real
matrices that control reciprocity, and from those the directional hopping
amplitudes and the non-Hermitian single-excitation Hamiltonian follow.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

HERM_RTOL = 1e-12
PSD_SLACK = 1e-10


def _check_hermitian(mat, name, scale):
    res = np.abs(mat - mat.conj().T)
    worst = tuple(int(k) for k in np.unravel_index(np.argmax(res), res.shape))
    if res[worst] > HERM_RTOL * scale:
        raise ValidationError(
            f"{name} is not Hermitian: entry {worst} has residual "
            f"{res[worst]:.3e} (> {HERM_RTOL:.0e} * {scale:.3e})"
        )


@dataclass(frozen=True)
class CouplingMatrices:
    """Hermitian coherent and dissipative inter-qubit couplings.

    coherent[a,b] is the coherent exchange amplitude, dissipative[a,b]
    the bath-mediated decay coupling; both in units of gamma0 unless the
    caller says otherwise. gamma0 is the local (single-qubit) decay rate.
    """

    coherent: np.ndarray
    dissipative: np.ndarray
    gamma0: float = 1.0

    def __post_init__(self):
        cj = np.ascontiguousarray(self.coherent, dtype=complex)
        dg = np.ascontiguousarray(self.dissipative, dtype=complex)
        if cj.ndim != 2 or cj.shape[0] != cj.shape[1] or cj.shape != dg.shape:
            raise ValidationError(
                f"coupling matrices must be square and same shape, got {cj.shape} and {dg.shape}"
            )
        if not self.gamma0 > 0:
            raise ValidationError(f"gamma0 must be positive, got {self.gamma0}")
        scale_j = max(np.abs(cj).max(), self.gamma0)
        scale_g = max(np.abs(dg).max(), self.gamma0)
        _check_hermitian(cj, "coherent matrix", scale_j)
        _check_hermitian(dg, "dissipative matrix", scale_g)
        dj = np.abs(np.diag(cj)).max()
        if dj > HERM_RTOL * scale_j:
            raise ValidationError(
                f"coherent matrix must have zero diagonal (on-site shifts dropped), "
                f"max |diag| = {dj:.3e}"
            )
        dres = np.abs(np.diag(dg) - self.gamma0).max()
        if dres > HERM_RTOL * scale_g:
            raise ValidationError(
                f"dissipative diagonal must equal gamma0 = {self.gamma0}: "
                f"max deviation {dres:.3e}"
            )
        # snap the structurally-exact entries so downstream identities hold exactly
        np.fill_diagonal(cj, 0.0)
        np.fill_diagonal(dg, self.gamma0)
        cj.setflags(write=False)
        dg.setflags(write=False)
        object.__setattr__(self, "coherent", cj)
        object.__setattr__(self, "dissipative", dg)

    @property
    def n(self):
        return self.coherent.shape[0]

    def to_json(self):
        """Serialize to the interchange schema (units of gamma0)."""
        j = self.coherent / self.gamma0
        g = self.dissipative / self.gamma0
        return json.dumps(
            {
                "n": self.n,
                "gamma0": self.gamma0,
                "J_re": j.real.tolist(),
                "J_im": j.imag.tolist(),
                "G_re": g.real.tolist(),
                "G_im": g.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"coupling document is not valid JSON: {exc}") from exc
        required = {"n", "gamma0", "J_re", "J_im", "G_re", "G_im"}
        missing = required - doc.keys()
        if missing:
            raise ValidationError(f"coupling document missing keys: {sorted(missing)}")
        extra = doc.keys() - required
        if extra:
            raise ValidationError(f"coupling document has unknown keys: {sorted(extra)}")
        n = doc["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ValidationError(f"coupling document field 'n' must be a positive integer, got {n!r}")
        try:
            gamma0 = float(doc["gamma0"])
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"coupling document field 'gamma0' is not a number: {doc['gamma0']!r}") from exc
        parts = {}
        for key in ("J_re", "J_im", "G_re", "G_im"):
            try:
                arr = np.asarray(doc[key], dtype=float)
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"coupling document field '{key}' is not a numeric matrix: {exc}") from exc
            if arr.shape != (n, n):
                raise ValidationError(
                    f"coupling document field '{key}' must be {n}x{n}, got shape {arr.shape}"
                )
            parts[key] = arr
        j = parts["J_re"] + 1j * parts["J_im"]
        g = parts["G_re"] + 1j * parts["G_im"]
        return cls(coherent=j * gamma0, dissipative=g * gamma0, gamma0=gamma0)


@dataclass(frozen=True)
class CouplingDecomposition:
    """Real symmetric / anti-symmetric split of both coupling matrices."""

    coherent_sym: np.ndarray
    coherent_asym: np.ndarray
    dissipative_sym: np.ndarray
    dissipative_asym: np.ndarray

    def __post_init__(self):
        for name in ("coherent_sym", "coherent_asym", "dissipative_sym", "dissipative_asym"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self):
        return self.coherent_sym.shape[0]


@dataclass(frozen=True)
class HoppingAmplitudes:
    """Directional hopping amplitudes for each ordered pair a < b.

    leftward[a,b] moves an excitation from the right qubit b to the left
    qubit a; rightward[a,b] the reverse. Entries below the diagonal are 0.
    """

    leftward: np.ndarray
    rightward: np.ndarray

    def __post_init__(self):
        for name in ("leftward", "rightward"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def decompose_couplings(matrices):
    """Split coherent and dissipative matrices into sym/asym real parts."""
    j = matrices.coherent
    g = matrices.dissipative
    return CouplingDecomposition(
        coherent_sym=0.5 * (j.real + j.real.T),
        coherent_asym=0.5 * (j.imag - j.imag.T),
        dissipative_sym=0.5 * (g.real + g.real.T),
        dissipative_asym=0.5 * (g.imag - g.imag.T),
    )


def recompose(decomp, gamma0=None):
    """Inverse of decompose_couplings. gamma0 defaults to the diagonal value."""
    g = decomp.dissipative_sym + 1j * decomp.dissipative_asym
    if gamma0 is None:
        gamma0 = float(decomp.dissipative_sym[0, 0])
    return CouplingMatrices(
        coherent=decomp.coherent_sym + 1j * decomp.coherent_asym,
        dissipative=g,
        gamma0=gamma0,
    )


def compute_hoppings(decomp):
    """Directional hoppings from the sym/asym decomposition.

    For a < b:
      leftward  = [(Jsym + Gasym) + i (Jasym - Gsym)] / 2
      rightward = [(Jsym - Gasym) - i (Jasym + Gsym)] / 2
    """
    n = decomp.n
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    js, ja = decomp.coherent_sym, decomp.coherent_asym
    gs, ga = decomp.dissipative_sym, decomp.dissipative_asym
    left = 0.5 * ((js + ga) + 1j * (ja - gs))
    right = 0.5 * ((js - ga) - 1j * (ja + gs))
    return HoppingAmplitudes(
        leftward=np.where(upper, left, 0.0),
        rightward=np.where(upper, right, 0.0),
    )


def build_effective_hamiltonian(decomp, gamma0):
    """Non-Hermitian matrix generating the no-jump single-excitation dynamics.

    Upper triangle holds the leftward hoppings, lower triangle the
    rightward ones, diagonal -i*gamma0/2. Equal to coherent/2 -
    (i/2)*dissipative entrywise.
    """
    hop = compute_hoppings(decomp)
    n = decomp.n
    h = hop.leftward + hop.rightward.T.copy()
    h[np.diag_indices(n)] = -0.5j * gamma0
    return h


def mirror_sites(matrices):
    """Relabel sites a -> n-1-a in both matrices (spatial mirror of the array)."""
    return CouplingMatrices(
        coherent=matrices.coherent[::-1, ::-1].copy(),
        dissipative=matrices.dissipative[::-1, ::-1].copy(),
        gamma0=matrices.gamma0,
    )


def validate(matrices):
    """Diagnostics report against the structural invariants (never raises)."""
    j = matrices.coherent
    g = matrices.dissipative
    g0 = matrices.gamma0
    scale_j = max(np.abs(j).max(), g0)
    scale_g = max(np.abs(g).max(), g0)
    herm_j = float(np.abs(j - j.conj().T).max())
    herm_g = float(np.abs(g - g.conj().T).max())
    min_eig = float(np.linalg.eigvalsh(g).min())
    diag_j = float(np.abs(np.diag(j)).max())
    diag_g = float(np.abs(np.diag(g) - g0).max())
    checks = {
        "hermitian_coherent": herm_j <= HERM_RTOL * scale_j,
        "hermitian_dissipative": herm_g <= HERM_RTOL * scale_g,
        "coherent_diagonal_zero": diag_j <= HERM_RTOL * scale_j,
        "dissipative_diagonal_gamma0": diag_g <= HERM_RTOL * scale_g,
        "dissipative_psd": min_eig >= -PSD_SLACK * g0,
    }
    return {
        "hermiticity_residual_coherent": herm_j,
        "hermiticity_residual_dissipative": herm_g,
        "min_eigenvalue_dissipative": min_eig,
        "diag_residual_coherent": diag_j,
        "diag_residual_dissipative": diag_g,
        "checks": checks,
        "passed": all(checks.values()),
    }

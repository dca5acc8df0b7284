"""Coupling matrices for qubits above a non-centrosymmetric ferromagnetic film.

The film's magnon dispersion is parabolic with an antisymmetric-exchange tilt
that shifts the band minimum to a finite wavenumber; integrating the on-shell
magnon propagator along the qubit row gives closed-form Bessel-function
kernels for the dissipative (first kind) and coherent (second kind) couplings.
Matrices are returned in units of the local rate, so the dimensionless k0
(tilt over curvature) and the detuning from the band edge are the only knobs
that matter for dynamics; the absolute local rate is reported separately and
carries a unit caveat.

Unit bookkeeping: wavenumbers k0/k1 are dimensionless (in units of the
inverse film lattice constant), lengths in nm, frequencies in Hz except the
gap and qubit transition which follow the GHz convention of QubitArray.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy import special

from .couplings import CouplingMatrices, mirror_sites
from .errors import DomainError, ValidationError
from .geometry import QubitArray

PLANCK_ERG_S = 6.62607015e-27

GAMMA0_UNITS_CAVEAT = (
    "absolute local rate evaluated verbatim from the closed-form expression "
    "in CGS-style units (lengths cm, gyromagnetic ratios Hz/G, Planck "
    "constant erg*s); its dimensional bookkeeping is ambiguous, so treat it "
    "as a label. All dynamics are integrated in units of the local rate and "
    "are unaffected."
)

MATERIAL_DEFAULTS = {
    "rho_s": 7.7e-6,
    "a_nm": 1.2,
    "t_F_nm": 20.0,
    "s": 1.2e-10,
    "Delta0_GHz": 2.87,
    "gap0_GHz": 0.55,
    "B0_G": 400.0,
    "k0": 0.3,
    "a_q_nm": 20.0,
    "N": 9,
}

DEFAULT_QUBIT_GYRO = 2.8   # MHz/G
DEFAULT_FILM_GYRO = 2.8    # MHz/G


@dataclass(frozen=True)
class FerroBathParams:
    """Film material constants and operating point.

    exchange and dmi are the symmetric and antisymmetric exchange
    frequencies (Hz); gap is the magnon gap at the operating field (GHz);
    lattice_const (nm), spin_density (G^2 cm s), stiffness (Hz m^2) and
    thickness (nm) characterize the film; the gyromagnetic ratios are in
    MHz/G and field in G. A negative antisymmetric exchange is represented
    by mirroring the array instead (see couplings_from_material).
    """

    exchange: float
    dmi: float
    gap: float
    lattice_const: float
    spin_density: float
    stiffness: float
    thickness: float
    qubit_gyro: float = DEFAULT_QUBIT_GYRO
    film_gyro: float = DEFAULT_FILM_GYRO
    field: float = 0.0

    def __post_init__(self):
        for name in ("exchange", "lattice_const", "thickness", "spin_density", "stiffness"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if self.dmi < 0:
            raise ValidationError(
                "dmi must be >= 0; a negative tilt is the mirror image of the "
                "array, apply mirror_sites to the generated couplings instead")

    @property
    def k0(self):
        return self.dmi / self.exchange


@dataclass(frozen=True)
class CharacteristicScales:
    """Derived length and rate scales of one operating point.

    k0/k1 are the dimensionless band-minimum and on-shell wavenumbers;
    lambda0/lambda1 the matching oscillation lengths in nm (lambda0 is
    +inf when k0 = 0, making the propagation phase factor identically 1);
    gamma0 is the absolute local rate, subject to GAMMA0_UNITS_CAVEAT.
    """

    k0: float
    k1: float
    lambda0: float
    lambda1: float
    gamma0: float


def dispersion(kx, ky, params):
    """Magnon frequency (Hz) at dimensionless in-plane wavenumber (kx, ky)."""
    return (params.exchange * (kx ** 2 + ky ** 2)
            - 2.0 * params.dmi * kx
            + params.gap * 1e9)


def characteristic_scales(params, omega_qi):
    """Length and rate scales for a qubit transition at omega_qi (GHz).

    The on-shell wavenumber satisfies k1^2 = k0^2 + detuning with the
    detuning (omega_qi - gap)/exchange; a non-positive k1^2 means the qubit
    cannot emit into the band.
    """
    k0 = params.k0
    detuning = (omega_qi - params.gap) * 1e9 / params.exchange
    k1_sq = k0 ** 2 + detuning
    if k1_sq <= 0:
        raise DomainError(
            f"qubit below magnon band edge: k1^2 = {k1_sq:.6g} <= 0 "
            f"(transition {omega_qi} GHz against gap {params.gap} GHz)")
    k1 = float(np.sqrt(k1_sq))
    lambda1 = params.lattice_const / k1
    lambda0 = params.lattice_const / k0 if k0 > 0 else np.inf
    # verbatim closed form; lengths in cm, gyros in Hz/G, stiffness Hz*cm^2
    ratio = 1.0 / (1.0 + (lambda1 / lambda0) ** 2)
    gyro_product = (params.qubit_gyro * 1e6) * (params.film_gyro * 1e6)
    lambda1_cm = lambda1 * 1e-7
    gamma0 = (2.0 * np.pi ** 2 * PLANCK_ERG_S ** 2 * gyro_product ** 2
              * (params.thickness * 1e-7) * params.spin_density * ratio
              / ((params.stiffness * 1e4) * lambda1_cm ** 2))
    return CharacteristicScales(k0=k0, k1=k1, lambda0=lambda0,
                                lambda1=lambda1, gamma0=float(gamma0))


def bessel(kind, order, x):
    """Cylindrical Bessel function of the given kind ("first"/"second") and
    order (0/1). Vectorized over x; the second kind requires x > 0."""
    if kind not in ("first", "second"):
        raise ValidationError(f"kind must be 'first' or 'second', got {kind!r}")
    if order not in (0, 1):
        raise ValidationError(f"order must be 0 or 1, got {order!r}")
    arr = np.asarray(x, dtype=float)
    if kind == "second":
        if np.any(arr <= 0):
            raise DomainError("second-kind Bessel functions need x > 0")
        vals = special.y0(arr) if order == 0 else special.y1(arr)
    else:
        if np.any(arr < 0):
            raise DomainError("first-kind Bessel functions here need x >= 0")
        vals = special.j0(arr) if order == 0 else special.j1(arr)
    return float(vals) if np.isscalar(x) or arr.ndim == 0 else vals


def coupling_matrices(array, params):
    """Bath-mediated coupling matrices for a qubit row, in local-rate units.

    For separation x (signed, toward increasing site index), the dissipative
    kernel is exp(ix/lambda0) [J0(|x|/lambda1) + i c sign(x) J1(|x|/lambda1)]
    and the coherent one the same with Y0/Y1, where the even/odd split of
    the orders is fixed by hermiticity and c = 2 lambda0 lambda1 /
    (lambda0^2 + lambda1^2) vanishes in the untilted (k0 = 0) limit,
    leaving purely real reciprocal couplings.
    """
    scales = characteristic_scales(params, array.omega_qi)
    pos = array.positions
    n = array.n_qubits
    x = pos[:, None] - pos[None, :]
    off = ~np.eye(n, dtype=bool)
    xo = x[off]
    ax = np.abs(xo) / scales.lambda1
    phase = np.exp(1j * xo / scales.lambda0)
    sign = np.sign(xo)
    if np.isinf(scales.lambda0):
        c = 0.0
    else:
        c = 2.0 * scales.lambda0 * scales.lambda1 / (scales.lambda0 ** 2 + scales.lambda1 ** 2)
    diss = np.eye(n, dtype=complex)
    coh = np.zeros((n, n), dtype=complex)
    diss[off] = phase * (bessel("first", 0, ax) + 1j * c * sign * bessel("first", 1, ax))
    coh[off] = phase * (bessel("second", 0, ax) + 1j * c * sign * bessel("second", 1, ax))
    return CouplingMatrices(coherent=coh, dissipative=diss, gamma0=1.0)


def gap_at_field(gap0, field, film_gyro=DEFAULT_FILM_GYRO):
    """Field-shifted gap (GHz): zero-field gap plus the film Zeeman shift.
    A linear-in-field model chosen for defaults, not a material law."""
    return gap0 + film_gyro * field * 1e-3


def qubit_frequency_at_field(zero_field_splitting, field, qubit_gyro=DEFAULT_QUBIT_GYRO):
    """Qubit transition (GHz) from its zero-field splitting, lowered by the
    Zeeman shift of the field-aligned branch."""
    return zero_field_splitting - qubit_gyro * field * 1e-3


def load_material(source):
    """Validate a material description (dict or JSON text); fill defaults.

    Recognized keys and defaults are MATERIAL_DEFAULTS; unknown keys are
    rejected by name. k0 may be negative, which mirrors the array.
    """
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"material document is not valid JSON: {exc}") from exc
    else:
        doc = dict(source)
    if not isinstance(doc, dict):
        raise ValidationError("material document must be a JSON object")
    unknown = doc.keys() - MATERIAL_DEFAULTS.keys()
    if unknown:
        raise ValidationError(f"unknown material keys: {sorted(unknown)}")
    merged = {**MATERIAL_DEFAULTS, **doc}
    for key, value in merged.items():
        if key == "N":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"material key 'N' must be an integer, got {value!r}")
        elif isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"material key '{key}' must be a number, got {value!r}")
    for key in ("rho_s", "a_nm", "t_F_nm", "s", "a_q_nm"):
        if not merged[key] > 0:
            raise ValidationError(f"material key '{key}' must be positive, got {merged[key]}")
    if merged["N"] < 1:
        raise ValidationError(f"material key 'N' must be >= 1, got {merged['N']}")
    return merged


@dataclass(frozen=True)
class MaterialBath:
    """Everything derived from one material description."""

    matrices: CouplingMatrices
    scales: CharacteristicScales
    array: QubitArray
    params: FerroBathParams
    mirrored: bool


def couplings_from_material(source):
    """Material description -> coupling matrices plus the derived scales.

    Builds the exchange frequency from stiffness over lattice constant
    squared, shifts gap and qubit transition with the field, and generates
    the coupling matrices; a negative k0 is realized as the mirror image
    of the positive-k0 array.
    """
    doc = load_material(source)
    exchange = doc["rho_s"] / (doc["a_nm"] * 1e-9) ** 2
    gap = gap_at_field(doc["gap0_GHz"], doc["B0_G"])
    omega_qi = qubit_frequency_at_field(doc["Delta0_GHz"], doc["B0_G"])
    mirrored = doc["k0"] < 0
    params = FerroBathParams(
        exchange=exchange,
        dmi=abs(doc["k0"]) * exchange,
        gap=gap,
        lattice_const=doc["a_nm"],
        spin_density=doc["s"],
        stiffness=doc["rho_s"],
        thickness=doc["t_F_nm"],
        field=doc["B0_G"],
    )
    array = QubitArray(n_qubits=doc["N"], spacing=doc["a_q_nm"], omega_qi=omega_qi)
    matrices = coupling_matrices(array, params)
    if mirrored:
        matrices = mirror_sites(matrices)
    scales = characteristic_scales(params, omega_qi)
    return MaterialBath(matrices=matrices, scales=scales, array=array,
                        params=params, mirrored=mirrored)

"""Qubit chain geometry."""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class QubitArray:
    """Equally spaced 1-d chain of two-level emitters.

    spacing is in nm, omega_qi (the transition frequency) in GHz.
    Positions are x_alpha = (alpha - 1) * spacing for alpha = 1..N.
    """

    n_qubits: int
    spacing: float = 20.0
    omega_qi: float = 1.75
    positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.n_qubits) != self.n_qubits or self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be a positive integer, got {self.n_qubits}")
        if not self.spacing > 0:
            raise ValidationError(f"spacing must be positive, got {self.spacing}")
        pos = np.arange(self.n_qubits, dtype=float) * float(self.spacing)
        pos.setflags(write=False)
        object.__setattr__(self, "n_qubits", int(self.n_qubits))
        object.__setattr__(self, "positions", pos)

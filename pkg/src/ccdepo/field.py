"""Two-colour standing-wave field parameters."""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import constants as const


@dataclass(frozen=True)
class StandingWaveConfig:
    """Two standing waves polarised along z, amplitudes E1_0/E2_0 (V/m).

    The field is ``[2 E1_0 cos(k1 x) e^{i w1 t} + cc] + [2 E2_0 cos(k2 x + theta_F) e^{i w2 t} + cc]``.
    """

    E1_0: float
    E2_0: float
    lambda1: float
    lambda2: float
    theta_F: float = 0.0

    def __post_init__(self):
        if self.E1_0 < 0 or self.E2_0 < 0:
            raise ValueError("field amplitudes must be >= 0")
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("wavelengths must be > 0")

    @property
    def k1(self) -> float:
        return 2 * math.pi / self.lambda1

    @property
    def k2(self) -> float:
        return 2 * math.pi / self.lambda2

    @property
    def omega1(self) -> float:
        return 2 * math.pi * const.c / self.lambda1

    @property
    def omega2(self) -> float:
        return 2 * math.pi * const.c / self.lambda2

    @property
    def beat_length(self) -> float:
        """Spatial period 2*pi/|k1 - k2| of the two-colour envelope."""
        dk = abs(self.k1 - self.k2)
        return math.inf if dk == 0 else 2 * math.pi / dk

    def replace(self, **changes) -> "StandingWaveConfig":
        from dataclasses import replace
        return replace(self, **changes)


def fig2_field(theta_F: float = -2.65) -> StandingWaveConfig:
    """Field of the reference figure: E1 = 100 V/cm, E2/E1 = 1e4, 0.628/0.736 um."""
    return StandingWaveConfig(E1_0=1.0e4, E2_0=1.0e8, lambda1=0.628e-6, lambda2=0.736e-6,
                              theta_F=theta_F)

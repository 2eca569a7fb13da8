"""Resolved-carrier signal strength of a trapped ion string.

The unshifted (carrier) line stays strong while the radiation
wavelength exceeds the critical wavelength lambda_c = 2 pi delta_rho
set by the time-averaged radial spread of the ions.  A single Gaussian
Debye-Waller-style factor, calibrated so the signal is exactly 0.5 at
lambda_c, models the falloff toward shorter wavelengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def critical_wavelength(delta_rho: float) -> float:
    """lambda_c = 2 pi delta_rho, both in micrometer."""
    if delta_rho <= 0:
        raise ValueError(f"radial spread must be positive, got {delta_rho}")
    return 2.0 * math.pi * delta_rho


@dataclass(frozen=True)
class CarrierModel:
    """Gaussian carrier-strength model S(lambda) in (0, 1]."""

    delta_rho: float
    kind: str = "gaussian-debye-waller"

    def __post_init__(self) -> None:
        if self.kind != "gaussian-debye-waller":
            raise ValueError(f"unknown carrier model kind {self.kind!r}")
        if self.delta_rho <= 0:
            raise ValueError("radial spread must be positive")


def carrier_strength(wavelength: float, model: CarrierModel) -> float:
    """S = exp(-ln2 * (lambda_c/lambda)^2); S(lambda_c) = 0.5 exactly."""
    if wavelength <= 0:
        raise ValueError(f"wavelength must be positive, got {wavelength}")
    ratio = critical_wavelength(model.delta_rho) / wavelength
    return math.exp(-math.log(2.0) * ratio * ratio)


def resolution(frequency_khz: float, fwhm_khz: float) -> float:
    """Line quality factor f / FWHM."""
    if fwhm_khz <= 0:
        raise ValueError("fwhm must be positive")
    return frequency_khz / fwhm_khz

"""Composite spin-averaged frequency from two hyperfine components.

Two measured lines of the same vibrational transition, minus their
theoretical spin shifts, are combined with weights (b12, 1 - b12).  The
spin-theory error model sums absolute values of correlated terms; the
experimental parts combine in quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .angular import (
    SensitivityTable,
    SpinUncertaintyParams,
    _weighted_spin_terms,
)
from .quantity import Quantity

TRANSITION_IDS = ("12", "16")


@dataclass(frozen=True)
class CompositeInput:
    """Corrected line frequencies and spin-theory inputs for lines 12, 16.

    fspin12/fspin16 carry their uncertainty in the `theor_spin`
    component.  The sensitivity table is optional: without it the
    composite spin uncertainty falls back to the weighted absolute sum
    of the per-line uncertainties (correlations ignored conservatively).
    """

    f12: Quantity
    f16: Quantity
    fspin12: Quantity
    fspin16: Quantity
    tables: SensitivityTable | None = None
    params: SpinUncertaintyParams = field(default_factory=SpinUncertaintyParams)

    def __post_init__(self) -> None:
        if self.tables is not None:
            missing = [t for t in TRANSITION_IDS if t not in self.tables.rows]
            if missing:
                raise ValueError(f"sensitivity table lacks transition {missing[0]}")


def composite_spin_uncertainty(
    tables: SensitivityTable, params: SpinUncertaintyParams, b12: float
) -> float:
    """Spin-theory uncertainty of the weighted combination, in kHz.

    Coefficient errors are common to both transitions, so the weighted
    sensitivity sums sit inside each absolute value; setting b12 to 0 or
    1 reduces exactly to the single-transition estimate.
    """
    return _weighted_spin_terms(tables, params, {"12": b12, "16": 1.0 - b12})


def composite_frequency(inp: CompositeInput, b12: float) -> Quantity:
    """Weighted spin-averaged frequency with exp and theor_spin budgets."""
    if not 0.0 <= b12 <= 1.0:
        raise ValueError(f"b12 must be in [0, 1], got {b12}")
    b16 = 1.0 - b12
    value = b12 * (inp.f12.value - inp.fspin12.value) + b16 * (inp.f16.value - inp.fspin16.value)
    u_exp = math.hypot(b12 * inp.f12.component("exp"), b16 * inp.f16.component("exp"))
    if inp.tables is not None:
        u_spin = composite_spin_uncertainty(inp.tables, inp.params, b12)
    else:
        u_spin = b12 * inp.fspin12.component("theor_spin") + b16 * inp.fspin16.component("theor_spin")
    return Quantity(value, "kHz", {"exp": u_exp, "theor_spin": u_spin})


@dataclass(frozen=True)
class WeightProfile:
    b_star: float
    u_star: float
    profile: tuple[tuple[float, float], ...]


def optimize_weight(tables: SensitivityTable, params: SpinUncertaintyParams) -> WeightProfile:
    """Minimize the composite spin uncertainty over b12 in [0, 1].

    The objective is a sum of absolute values of functions affine in
    b12, hence convex piecewise-linear; the exact minimum sits at a
    breakpoint (a zero crossing of one affine term) or an endpoint.  A
    0.01-spaced grid is returned as the flatness profile.
    """
    candidates = {0.0, 1.0}
    for row12, row16 in ((tables.row("12"), tables.row("16")),):
        for which in ("lower", "upper"):
            g12, g16 = getattr(row12, which), getattr(row16, which)
            for k in g12:
                denom = g16[k] - g12[k]
                if denom != 0.0:
                    b = g16[k] / denom
                    if 0.0 < b < 1.0:
                        candidates.add(b)
    grid = [round(0.01 * i, 2) for i in range(101)]
    profile = tuple((b, composite_spin_uncertainty(tables, params, b)) for b in grid)
    best = min(sorted(candidates), key=lambda b: composite_spin_uncertainty(tables, params, b))
    return WeightProfile(best, composite_spin_uncertainty(tables, params, best), profile)


@dataclass(frozen=True)
class SplittingComparison:
    difference_exp: Quantity
    difference_theory: Quantity
    agreement_sigma: float

    def report(self) -> dict:
        return {
            "difference_exp_khz": self.difference_exp.value,
            "u_exp_khz": self.difference_exp.component("exp"),
            "difference_theory_khz": self.difference_theory.value,
            "u_theory_khz": self.difference_theory.component("theor_spin"),
            "agreement_sigma": self.agreement_sigma,
        }


def splitting_comparison(
    f12: Quantity, f16: Quantity, fspin_diff_theory: tuple[float, float]
) -> SplittingComparison:
    """Compare the measured hyperfine splitting f16 - f12 with theory.

    The splitting depends only on the upper-level spin structure, which
    is what makes it a clean theory check.  The agreement metric is the
    absolute difference over the combined standard uncertainty.
    """
    diff = f16.value - f12.value
    u_exp = math.hypot(f12.component("exp"), f16.component("exp"))
    theory, u_theory = fspin_diff_theory
    metric = abs(diff - theory) / math.sqrt(u_exp ** 2 + u_theory ** 2)
    return SplittingComparison(
        Quantity(diff, "kHz", {"exp": u_exp}),
        Quantity(theory, "kHz", {"theor_spin": u_theory}),
        metric,
    )

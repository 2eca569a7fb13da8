"""Zeeman structure of hyperfine levels in a weak magnetic field.

The interaction is linear in the field B (in gauss) and diagonal in the
magnetic projections:

    H_Z = B (c_e s_ez + c_p I_pz + c_d I_dz + c_N N_z)

with per-momentum couplings in kHz/G.  Transition shifts over a field
grid are reduced to a linear + quadratic coefficient pair, and measured
line positions are extrapolated to zero field with a pure-quadratic
weighted fit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .angular import (
    HyperfineCoefficients,
    ProductBasis,
    TrackingError,
    build_hfs,
    eigenlevels,
)
from .quantity import Quantity

DEFAULT_B_GRID = (0.0, 0.05, 0.10, 0.15, 0.20)

# kHz/G; signs follow the convention that a positive projection of the
# electron spin moves up in energy for B > 0.
DEFAULT_COUPLINGS = {"c_e": 2802.5, "c_p": -4.2577, "c_d": -0.6536, "c_N": -0.55}


@dataclass(frozen=True)
class ZeemanCouplings:
    """Linear couplings of the four momentum projections, in kHz/G."""

    c_e: float = DEFAULT_COUPLINGS["c_e"]
    c_p: float = DEFAULT_COUPLINGS["c_p"]
    c_d: float = DEFAULT_COUPLINGS["c_d"]
    c_n: float = DEFAULT_COUPLINGS["c_N"]


def read_couplings_file(path: str | Path) -> ZeemanCouplings:
    """Parse a `c_X = value` file; all four couplings must be present."""
    found: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, text = (t.strip() for t in line.partition("="))
        if not sep or key not in DEFAULT_COUPLINGS:
            raise ValueError(f"{path}:{lineno}: expected one of {sorted(DEFAULT_COUPLINGS)} = value")
        if key in found:
            raise ValueError(f"{path}:{lineno}: duplicate key {key}")
        found[key] = float(text)
    missing = sorted(set(DEFAULT_COUPLINGS) - set(found))
    if missing:
        raise ValueError(f"{path}: missing coupling {missing[0]}")
    return ZeemanCouplings(found["c_e"], found["c_p"], found["c_d"], found["c_N"])


def build_zeeman(couplings: ZeemanCouplings, basis: ProductBasis, b_field: float) -> np.ndarray:
    """Zeeman Hamiltonian (kHz) at field b_field in gauss."""
    terms = (
        couplings.c_e * basis.triple("s_e")[0]
        + couplings.c_p * basis.triple("I_p")[0]
        + couplings.c_d * basis.triple("I_d")[0]
        + couplings.c_n * basis.triple("N")[0]
    )
    return b_field * terms


@dataclass(frozen=True)
class ZeemanState:
    """One magnetic sublevel followed across the field grid."""

    g1: int
    g2: int
    f: int
    m_f: int
    energies: np.ndarray

    @property
    def label(self) -> tuple[int, int, int, int]:
        return (self.g1, self.g2, self.f, self.m_f)


@dataclass(frozen=True)
class ZeemanMap:
    b_values: np.ndarray
    states: tuple[ZeemanState, ...]

    def state(self, label: Sequence[int]) -> ZeemanState:
        label = tuple(label)
        for st in self.states:
            if st.label == label:
                return st
        raise LookupError(f"no Zeeman state with label {label}")


def _zero_field_states(
    coeffs: HyperfineCoefficients, basis: ProductBasis
) -> list[tuple[tuple[int, int, int, int], float, np.ndarray]]:
    """Field-free eigenstates with m_F resolved inside each multiplet."""
    fz = basis.f_z()
    out = []
    for level in eigenlevels(build_hfs(coeffs, basis), basis):
        if level.label is None:
            raise ValueError("Zeeman mapping needs fully labeled field-free levels")
        sub = level.vectors.T @ fz @ level.vectors
        mvals, rot = np.linalg.eigh(sub)
        vecs = level.vectors @ rot
        for col, m in enumerate(mvals):
            m_f = int(round(m))
            if abs(m - m_f) > 1e-9:
                raise ValueError(f"non-integer m_F = {m} in level {level.label}")
            out.append(((level.g1, level.g2, level.f, m_f), level.energy, vecs[:, col]))
    return out


def zeeman_map(
    coeffs: HyperfineCoefficients,
    couplings: ZeemanCouplings,
    basis: ProductBasis,
    b_values: Sequence[float] = DEFAULT_B_GRID,
) -> ZeemanMap:
    """Energies of every magnetic sublevel over an ascending field grid.

    States are followed from one field value to the next by maximum
    eigenvector overlap; an overlap of 0.9 or less means the adiabatic
    assignment is no longer trustworthy and raises TrackingError.  At
    B = 0 the energies are the field-free ones exactly.
    """
    b_values = np.asarray(b_values, dtype=float)
    if b_values.ndim != 1 or len(b_values) == 0:
        raise ValueError("b_values must be a non-empty 1-d sequence")
    if np.any(np.diff(b_values) <= 0):
        raise ValueError("b_values must be strictly ascending")
    if b_values[0] < 0:
        raise ValueError("b_values must be non-negative")

    grid = b_values if b_values[0] == 0.0 else np.concatenate(([0.0], b_values))
    start = _zero_field_states(coeffs, basis)
    labels = [s[0] for s in start]
    tracked = np.column_stack([s[2] for s in start])
    energies = np.zeros((len(labels), len(grid)))
    energies[:, 0] = [s[1] for s in start]

    h0 = build_hfs(coeffs, basis)
    for j, b in enumerate(grid[1:], start=1):
        evals, evecs = np.linalg.eigh(h0 + build_zeeman(couplings, basis, b))
        overlaps = np.abs(evecs.T @ tracked)
        cols = np.argmax(overlaps, axis=0)
        best = overlaps[cols, np.arange(len(labels))]
        if np.min(best) <= 0.9 or len(set(cols.tolist())) != len(labels):
            worst = labels[int(np.argmin(best))]
            raise TrackingError(
                f"state tracking lost at B = {b:g} G "
                f"(overlap {np.min(best):.3f} for state {worst})"
            )
        energies[:, j] = evals[cols]
        signs = np.sign(np.sum(evecs[:, cols] * tracked, axis=0))
        tracked = evecs[:, cols] * signs

    keep = slice(None) if b_values[0] == 0.0 else slice(1, None)
    states = tuple(
        ZeemanState(*label, energies=energies[i, keep].copy())
        for i, label in enumerate(labels)
    )
    return ZeemanMap(b_values.copy(), states)


@dataclass(frozen=True)
class TransitionShiftModel:
    """Transition Zeeman shift df(B) = a B + c B^2, in kHz, B in gauss."""

    linear: float
    quadratic: float
    rms_residual: float

    def shift(self, b_field: float) -> float:
        return self.linear * b_field + self.quadratic * b_field ** 2


def transition_coeffs(
    lower: tuple[HyperfineCoefficients, Sequence[int]],
    upper: tuple[HyperfineCoefficients, Sequence[int]],
    couplings: ZeemanCouplings | None = None,
    b_values: Sequence[float] = DEFAULT_B_GRID,
) -> TransitionShiftModel:
    """Linear and quadratic Zeeman coefficients of one transition.

    Each argument pairs a coefficient set with a (G1, G2, F, m_F) state
    label.  The shift relative to zero field is fit by least squares to
    a B + c B^2 over the grid.
    """
    couplings = couplings or ZeemanCouplings()
    energies = []
    for coeffs, label in (lower, upper):
        zmap = zeeman_map(coeffs, couplings, ProductBasis(coeffs.n_rot), b_values)
        energies.append(zmap.state(label).energies)
    b = np.asarray(b_values, dtype=float)
    shift = (energies[1] - energies[0]) - (energies[1][0] - energies[0][0]) if b[0] == 0.0 else None
    if shift is None:
        raise ValueError("transition_coeffs needs B = 0 in the grid to reference the shift")
    design = np.column_stack([b, b ** 2])
    params, *_ = np.linalg.lstsq(design, shift, rcond=None)
    resid = shift - design @ params
    return TransitionShiftModel(float(params[0]), float(params[1]), float(np.sqrt(np.mean(resid ** 2))))


@dataclass(frozen=True)
class FieldExtrapolation:
    """Result of the quadratic zero-field extrapolation."""

    intercept: Quantity
    curvature: Quantity
    residuals: np.ndarray


def extrapolate_to_zero_field(
    b_values: Sequence[float],
    frequencies: Sequence[float],
    uncertainties: Sequence[float] | None = None,
) -> FieldExtrapolation:
    """Weighted least squares of f(B) = f0 + c B^2 down to B = 0.

    Weights are the inverse-variance of the supplied per-point
    uncertainties and are treated as known a priori: the parameter
    covariance is (X^T W X)^-1 without any rescaling by the reduced
    chi-square.  With no uncertainties the fit is unweighted and the
    intercept carries no uncertainty component.
    """
    b = np.asarray(b_values, dtype=float)
    f = np.asarray(frequencies, dtype=float)
    if b.shape != f.shape or b.ndim != 1:
        raise ValueError("b_values and frequencies must be 1-d and the same length")
    if len(np.unique(b ** 2)) < 2:
        raise ValueError("need at least two distinct field magnitudes")
    design = np.column_stack([np.ones_like(b), b ** 2])

    if uncertainties is not None:
        u = np.asarray(uncertainties, dtype=float)
        if u.shape != b.shape or np.any(u <= 0):
            raise ValueError("uncertainties must be positive and match b_values")
        w = 1.0 / u ** 2
    else:
        w = np.ones_like(b)

    xtw = design.T * w
    cov = np.linalg.inv(xtw @ design)
    params = cov @ (xtw @ f)
    resid = f - design @ params

    if uncertainties is not None:
        comp0 = {"exp": float(np.sqrt(cov[0, 0]))}
        comp1 = {"exp": float(np.sqrt(cov[1, 1]))}
    else:
        comp0 = comp1 = {}
    return FieldExtrapolation(
        Quantity(float(params[0]), "kHz", comp0),
        Quantity(float(params[1]), "kHz/G^2", comp1),
        resid,
    )


def read_field_scan_csv(path: str | Path) -> tuple[list[float], list[float], list[float]]:
    """Read `B_gauss, f_khz, u_khz` rows of a field-extrapolation scan."""
    b, f, u = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            b.append(float(row["B_gauss"]))
            f.append(float(row["f_khz"]))
            u.append(float(row["u_khz"]))
    if not b:
        raise ValueError(f"{path}: no field-scan rows")
    return b, f, u

"""Access to the packaged example inputs.

The shipped data reproduce the published headline numbers out of the
box, except for predictions that need the externally tabulated
hyperfine coefficients; those read hfs_coefficients.conf, which is
shipped only as a template (see README, "Data sources").
"""

from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

from .angular import HyperfineCoefficients, read_coefficient_file
from .constants import (
    ConstantSet,
    ContributionTable,
    ScalingModel,
    read_constants_file,
    read_contribution_csv,
    read_scaling_file,
)
from .quantity import Quantity
from .systematics import (
    ShiftLedger,
    apply_ledger,
    light_shift_entry,
    negligible_entries,
    read_amplitude_csv,
    rf_extrapolate,
)
from .zeeman import (
    FieldExtrapolation,
    ZeemanCouplings,
    extrapolate_to_zero_field,
    read_couplings_file,
    read_field_scan_csv,
)

CONSTANT_PROFILES = ("codata2018", "penning")

# transition id -> ((G1, G2, F) lower, (G1, G2, F) upper)
TRANSITION_LEVELS = {
    "12": ((1, 2, 2), (1, 2, 1)),
    "16": ((1, 2, 2), (1, 2, 3)),
}

# configuration of the bundled systematic-shift chain
RF_NOMINAL_AMPLITUDE = 1.0
LIGHT_SHIFT_INPUTS = {
    "alpha_s_upper": 4.475,
    "alpha_t_upper": -1.442,
    "alpha_lower": 3.0,
    "intensity_w_m2": 4.0e3,
    "measured_bound_khz": 0.2,
}


def data_path(name: str) -> Path:
    path = Path(str(files(__package__).joinpath("data", name)))
    if not path.exists():
        raise FileNotFoundError(f"no bundled data file {name!r}")
    return path


def load_constants(profile: str = "codata2018") -> ConstantSet:
    if profile not in CONSTANT_PROFILES:
        raise ValueError(f"unknown constants profile {profile!r}")
    return read_constants_file(data_path(f"constants_{profile}.txt"))


def load_contributions(profile: str = "codata2018") -> ContributionTable:
    case = {"codata2018": "case1", "penning": "case2"}[profile]
    return read_contribution_csv(data_path(f"contributions_{case}.csv"))


def load_scaling_model(profile: str = "codata2018") -> ScalingModel:
    """Scaling model at the profile's theory reference point.

    The penning profile moves the reference along the scaling curve to
    the case-II contribution sum, which leaves extractions invariant.
    """
    base = read_scaling_file(data_path("analysis_reference.txt"))
    if profile == "codata2018":
        return base
    from .constants import theory_frequency

    return base.at_reference(theory_frequency(load_contributions(profile)).value)


def load_couplings() -> ZeemanCouplings:
    return read_couplings_file(data_path("zeeman_couplings.txt"))


def load_measured_lines(path: str | Path | None = None) -> dict:
    src = Path(path) if path is not None else data_path("measured_lines.json")
    raw = json.loads(src.read_text(encoding="utf-8"))
    out = {}
    for line in ("12", "16"):
        if line not in raw:
            raise ValueError(f"{src}: missing entry for line {line!r}")
        entry = raw[line]
        out[line] = {
            "f_exp": Quantity(**entry["f_exp"]),
            "f_spin": Quantity(**entry["f_spin"]),
            "lower_level": tuple(entry["lower_level"]),
            "upper_level": tuple(entry["upper_level"]),
        }
    split = raw.get("splitting_theory_khz")
    out["splitting_theory_khz"] = None if split is None else (float(split[0]), float(split[1]))
    return out


def load_coefficients(name: str = "hfs_coefficients.conf") -> dict[tuple[int, int], HyperfineCoefficients] | None:
    """The evaluated coefficient file, or None while only the template ships."""
    try:
        path = data_path(name)
    except FileNotFoundError:
        return None
    parsed = read_coefficient_file(path)
    return parsed or None


def load_demo_coefficients() -> dict[tuple[int, int], HyperfineCoefficients]:
    return read_coefficient_file(data_path("demo_coefficients.conf"))


def corrected_line(line: str) -> tuple[FieldExtrapolation, ShiftLedger]:
    """Zero-field extrapolation plus systematic ledger for one bundled line.

    ledger.corrected carries the corrected line frequency with the full
    `exp` uncertainty (statistical and systematic in quadrature).
    """
    if line not in TRANSITION_LEVELS:
        raise ValueError(f"unknown line {line!r}")
    b, f, u = read_field_scan_csv(data_path(f"line{line}_zeeman.csv"))
    ext = extrapolate_to_zero_field(b, f, u)
    _, rf_entry = rf_extrapolate(read_amplitude_csv(data_path(f"line{line}_rf.csv")), RF_NOMINAL_AMPLITUDE)
    light = light_shift_entry(
        LIGHT_SHIFT_INPUTS["alpha_s_upper"],
        LIGHT_SHIFT_INPUTS["alpha_t_upper"],
        LIGHT_SHIFT_INPUTS["alpha_lower"],
        LIGHT_SHIFT_INPUTS["intensity_w_m2"],
        LIGHT_SHIFT_INPUTS["measured_bound_khz"],
    )
    ledger = apply_ledger(ext.intercept, [rf_entry, light, *negligible_entries()])
    return ext, ledger

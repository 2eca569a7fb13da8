"""Command-line front end for the analysis chain.

Every command writes a deterministic JSON report into --out-dir (sorted
keys, shortest-roundtrip floats, so reruns on identical inputs are
byte-identical), plus CSV tables for anything meant to be plotted.

Exit codes: 0 success, 1 data error (a computation failed on inputs
that parsed fine), 2 configuration error (bad flags, missing or invalid
input files).  All referenced files are read and validated before any
computation starts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import angular, bundled, carrier, composite, constants, lineshape, metrology, systematics, zeeman
from .quantity import Quantity, parenthetical


class _Failure(Exception):
    exit_code = 1


class DataFailure(_Failure):
    exit_code = 1


class ConfigFailure(_Failure):
    exit_code = 2


def _load(fn, *args, **kwargs):
    """Run an input-reading/validation step; failures are config errors."""
    try:
        return fn(*args, **kwargs)
    except _Failure:
        raise
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigFailure(str(exc)) from exc


def _run(fn, *args, **kwargs):
    """Run a computation on validated inputs; failures are data errors."""
    try:
        return fn(*args, **kwargs)
    except _Failure:
        raise
    except (ValueError, LookupError, RuntimeError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        raise DataFailure(str(exc)) from exc


# ---------------------------------------------------------------------------
# output helpers


def _write_json(out_dir: Path, stem: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    print(f"wrote {path}")
    return path


def _write_csv(out_dir: Path, stem: str, header: list[str], rows: list[list]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{stem}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    print(f"wrote {path}")
    return path


def _quantity_dict(q: Quantity) -> dict:
    return {
        "value": float(q.value),
        "unit": q.unit,
        "components": {k: float(v) for k, v in sorted(q.components.items())},
    }


# ---------------------------------------------------------------------------
# argument helpers


def _floats_arg(text: str, flag: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise ConfigFailure(f"{flag} expects comma-separated numbers, got {text!r}") from exc
    if not values:
        raise ConfigFailure(f"{flag} is empty")
    return values


def _parse_level(text: str) -> tuple[int, int]:
    try:
        v, n = (int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise ConfigFailure(f"--level expects 'v,N' integers, got {text!r}") from exc
    return v, n


def _coefficient_sets(args) -> dict:
    """Resolve the hyperfine-coefficient file, failing fast when absent."""
    if args.coefficients is not None:
        return _load(angular.read_coefficient_file, args.coefficients)
    if getattr(args, "demo", False):
        return _load(bundled.load_demo_coefficients)
    sets = _load(bundled.load_coefficients)
    if sets is None:
        raise ConfigFailure(
            "no evaluated hyperfine coefficients are bundled (data/hfs_coefficients.conf "
            "ships as a template; see README, 'Data sources'); pass --coefficients FILE, "
            "or --demo for illustrative numbers"
        )
    return sets


def _transition_sets(sets: dict):
    for key in ((0, 0), (1, 1)):
        if key not in sets:
            raise ConfigFailure(f"coefficient file lacks a [v={key[0]},N={key[1]}] section")
    return sets[(0, 0)], sets[(1, 1)]


def _standard_table(sets: dict) -> angular.SensitivityTable:
    lower, upper = _transition_sets(sets)
    return _run(angular.transition_table, lower, upper, bundled.TRANSITION_LEVELS)


def _optional_tables(args) -> angular.SensitivityTable | None:
    """Sensitivity table when a coefficient source is available, else None."""
    if args.coefficients is not None:
        return _standard_table(_load(angular.read_coefficient_file, args.coefficients))
    if getattr(args, "demo", False):
        return _standard_table(_load(bundled.load_demo_coefficients))
    sets = _load(bundled.load_coefficients)
    return None if sets is None else _standard_table(sets)


def _couplings(args) -> zeeman.ZeemanCouplings:
    if getattr(args, "couplings", None) is not None:
        return _load(zeeman.read_couplings_file, args.couplings)
    return _load(bundled.load_couplings)


def _composite_input(args) -> tuple[dict, composite.CompositeInput]:
    lines = _load(bundled.load_measured_lines, getattr(args, "lines", None))
    inp = composite.CompositeInput(
        f12=lines["12"]["f_exp"],
        f16=lines["16"]["f_exp"],
        fspin12=lines["12"]["f_spin"],
        fspin16=lines["16"]["f_spin"],
        tables=_optional_tables(args),
    )
    return lines, inp


# ---------------------------------------------------------------------------
# commands


def _cmd_spin_structure(args) -> int:
    sets = _coefficient_sets(args)
    payload: dict = {"sections": {}}
    csv_rows = []
    for (v, n), coeffs in sorted(sets.items()):
        levels = _run(angular.level_structure, coeffs, angular.ProductBasis(n))
        name = f"v={v},N={n}"
        payload["sections"][name] = [
            {
                "g1": lv.g1,
                "g2": lv.g2,
                "f": lv.f,
                "degeneracy": int(lv.degeneracy),
                "energy_khz": float(lv.energy),
            }
            for lv in levels
        ]
        csv_rows.extend([name, lv.g1, lv.g2, lv.f, int(lv.degeneracy), float(lv.energy)] for lv in levels)

    if (0, 0) in sets and (1, 1) in sets:
        lower, upper = sets[(0, 0)], sets[(1, 1)]
        table = _run(angular.transition_table, lower, upper, bundled.TRANSITION_LEVELS)
        transitions = {}
        for tid in sorted(bundled.TRANSITION_LEVELS):
            lo, up = bundled.TRANSITION_LEVELS[tid]
            row = table.row(tid)
            transitions[tid] = {
                "lower_level": list(lo),
                "upper_level": list(up),
                "f_spin_khz": float(_run(angular.spin_frequency, (upper, up), (lower, lo))),
                "u_spin_khz": float(_run(angular.spin_uncertainty, tid, table)),
                "gamma_lower": {f"E{k}": float(row.lower[k]) for k in sorted(row.lower)},
                "gamma_upper": {f"E{k}": float(row.upper[k]) for k in sorted(row.upper)},
            }
            print(
                f"line {tid}: f_spin = {transitions[tid]['f_spin_khz']:.2f} kHz, "
                f"u_spin = {transitions[tid]['u_spin_khz']:.2f} kHz"
            )
        payload["transitions"] = transitions

    _write_json(args.out_dir, "spin_structure", payload)
    if args.format == "csv":
        _write_csv(args.out_dir, "spin_structure", ["section", "g1", "g2", "f", "degeneracy", "energy_khz"], csv_rows)
    return 0


def _cmd_zeeman_map(args) -> int:
    sets = _coefficient_sets(args)
    key = _parse_level(args.level)
    if key not in sets:
        raise ConfigFailure(f"coefficient file has no [v={key[0]},N={key[1]}] section")
    b_values = _floats_arg(args.b_values, "--b-values") if args.b_values else list(zeeman.DEFAULT_B_GRID)
    zmap = _run(zeeman.zeeman_map, sets[key], _couplings(args), angular.ProductBasis(key[1]), b_values)

    payload = {
        "level": {"v": key[0], "n": key[1]},
        "b_gauss": [float(b) for b in zmap.b_values],
        "states": [
            {
                "g1": st.g1,
                "g2": st.g2,
                "f": st.f,
                "m_f": st.m_f,
                "energies_khz": [float(e) for e in st.energies],
            }
            for st in zmap.states
        ],
    }
    rows = [
        [st.g1, st.g2, st.f, st.m_f, float(b), float(e)]
        for st in zmap.states
        for b, e in zip(zmap.b_values, st.energies)
    ]
    print(f"{len(zmap.states)} sublevels over {len(zmap.b_values)} field values")
    _write_json(args.out_dir, "zeeman_map", payload)
    _write_csv(args.out_dir, "zeeman_map", ["g1", "g2", "f", "m_f", "B_gauss", "energy_khz"], rows)
    return 0


def _cmd_zeeman_coeffs(args) -> int:
    sets = _coefficient_sets(args)
    lower, upper = _transition_sets(sets)
    lo, up = bundled.TRANSITION_LEVELS[args.transition]
    lo_state, up_state = (*lo, args.lower_mf), (*up, args.upper_mf)
    b_values = _floats_arg(args.b_values, "--b-values") if args.b_values else list(zeeman.DEFAULT_B_GRID)
    model = _run(
        zeeman.transition_coeffs,
        (lower, lo_state),
        (upper, up_state),
        _couplings(args),
        b_values,
    )
    payload = {
        "transition": args.transition,
        "lower_state": list(lo_state),
        "upper_state": list(up_state),
        "linear_khz_per_gauss": float(model.linear),
        "quadratic_khz_per_gauss2": float(model.quadratic),
        "rms_residual_khz": float(model.rms_residual),
    }
    print(
        f"line {args.transition} (m_F {args.lower_mf} -> {args.upper_mf}): "
        f"{model.linear:+.4g} kHz/G {model.quadratic:+.4g} kHz/G^2"
    )
    _write_json(args.out_dir, "zeeman_coeffs", payload)
    return 0


def _cmd_extrapolate_b(args) -> int:
    b, f, u = _load(zeeman.read_field_scan_csv, args.input)
    ext = _run(zeeman.extrapolate_to_zero_field, b, f, u)
    payload = {
        "n_points": len(b),
        "intercept": _quantity_dict(ext.intercept),
        "curvature": _quantity_dict(ext.curvature),
        "residuals_khz": [float(r) for r in ext.residuals],
    }
    print(f"f(B=0) = {parenthetical(ext.intercept)}  curvature {ext.curvature.value:+.4g} kHz/G^2")
    _write_json(args.out_dir, "extrapolate_b", payload)
    return 0


def _cmd_fit_line(args) -> int:
    records = _load(lineshape.read_decay_csv, args.input)
    points = _run(lineshape.build_spectrum, records)
    out_dir = args.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    spectrum_path = out_dir / "fit_line_spectrum.csv"
    lineshape.write_spectrum_csv(points, spectrum_path)
    print(f"wrote {spectrum_path}")

    fit = _run(lineshape.fit_lorentzian, points)
    payload = {"n_records": len(records), "n_points": len(points), "fit": lineshape.fit_report(fit)}
    print(
        f"center = {fit.center:+.4f} kHz, fwhm = {fit.fwhm:.4f} kHz, "
        f"amplitude = {fit.amplitude:.4f} in {fit.n_iter} iterations"
    )
    if args.absolute_offset_khz is not None:
        line = _run(lineshape.line_frequency, fit, args.absolute_offset_khz)
        payload["line"] = _quantity_dict(line)
        print(f"line frequency = {parenthetical(line)}")
    _write_json(args.out_dir, "fit_line", payload)
    return 0


def _cmd_extrapolate_rf(args) -> int:
    points = _load(systematics.read_amplitude_csv, args.input)
    f_zero, entry = _run(systematics.rf_extrapolate, points, args.nominal_amplitude, args.linear)
    payload = {
        "n_points": len(points),
        "f_zero": _quantity_dict(f_zero),
        "entry": {
            "name": entry.name,
            "correction_khz": float(entry.correction),
            "uncertainty_khz": float(entry.uncertainty),
            "basis": entry.basis,
            "note": entry.note,
        },
    }
    print(f"f(A=0) = {parenthetical(f_zero)}  correction at nominal: {entry.correction:+.4g} kHz")
    _write_json(args.out_dir, "extrapolate_rf", payload)
    return 0


def _entries_from_file(path: Path) -> list[systematics.ShiftEntry]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"{path}: expected a JSON list of ledger entries")
    return [
        systematics.ShiftEntry(
            name=str(e["name"]),
            correction=float(e.get("correction_khz", 0.0)),
            uncertainty=float(e.get("uncertainty_khz", 0.0)),
            basis=str(e["basis"]),
            note=str(e.get("note", "")),
        )
        for e in raw
    ]


def _cmd_ledger(args) -> int:
    entries = _load(_entries_from_file, args.entries) if args.entries else []
    if args.include_negligible:
        entries.extend(systematics.negligible_entries())
    raw = Quantity(args.raw_khz, "kHz", {"exp": args.raw_u_khz})
    ledger = _run(systematics.apply_ledger, raw, entries)
    payload = ledger.report()
    print(f"corrected: {parenthetical(ledger.corrected)} from {len(entries)} entries")
    _write_json(args.out_dir, "ledger", payload)
    if args.format == "csv":
        rows = [[e.name, float(e.correction), float(e.uncertainty), e.basis] for e in ledger.entries]
        _write_csv(args.out_dir, "ledger", ["name", "correction_khz", "uncertainty_khz", "basis"], rows)
    return 0


def _spin_profile(inp: composite.CompositeInput) -> list[tuple[float, float]]:
    """Spin uncertainty vs b12, from tables if present else the linear fallback."""
    if inp.tables is not None:
        return list(composite.optimize_weight(inp.tables, inp.params).profile)
    u12 = inp.fspin12.component("theor_spin")
    u16 = inp.fspin16.component("theor_spin")
    grid = [round(0.01 * i, 2) for i in range(101)]
    return [(b, b * u12 + (1.0 - b) * u16) for b in grid]


def _cmd_composite(args) -> int:
    lines, inp = _composite_input(args)
    if args.optimize:
        if inp.tables is None:
            raise ConfigFailure("--optimize needs a sensitivity table; pass --coefficients FILE or --demo")
        b12 = _run(composite.optimize_weight, inp.tables, inp.params).b_star
    else:
        b12 = args.b12
    q = _run(composite.composite_frequency, inp, b12)

    profile = _spin_profile(inp)
    payload = {
        "b12": float(b12),
        "value_khz": float(q.value),
        "u_exp_khz": float(q.component("exp")),
        "u_spin_khz": float(q.component("theor_spin")),
        "profile": [[float(b), float(u)] for b, u in profile],
    }
    if lines["splitting_theory_khz"] is not None:
        cmp_ = _run(composite.splitting_comparison, inp.f12, inp.f16, lines["splitting_theory_khz"])
        payload["splitting"] = cmp_.report()
        print(
            f"splitting: {cmp_.difference_exp.value:.2f} kHz "
            f"(theory {cmp_.difference_theory.value:.2f} kHz, {cmp_.agreement_sigma:.2f} sigma)"
        )
    print(f"composite: {parenthetical(q)} at b12 = {b12:g}")
    _write_json(args.out_dir, "composite", payload)
    _write_csv(args.out_dir, "composite_profile", ["b12", "u_spin_khz"], [[b, u] for b, u in profile])
    return 0


def _md_over_mp_quantity(consts: constants.ConstantSet) -> Quantity:
    c = consts.md_over_mp
    return Quantity(c.value, "dimensionless", {"CODATA": c.uncertainty})


def _cmd_extract(args) -> int:
    model = _load(bundled.load_scaling_model, args.constants_profile)
    consts = _load(bundled.load_constants, args.constants_profile)
    _, inp = _composite_input(args)
    q = _run(composite.composite_frequency, inp, args.b12)
    mu = _run(constants.extract_mu_over_me, q, model, consts)
    mp = _run(constants.extract_mp_over_me, q, model, consts, _md_over_mp_quantity(consts))
    payload = {
        "constants_profile": args.constants_profile,
        "b12": float(args.b12),
        "composite": _quantity_dict(q),
        "mu_over_me": mu.report(),
        "mp_over_me": mp.report(),
        "reference_mp_over_me": {
            "value": float(consts.mp_over_me.value),
            "uncertainty": float(consts.mp_over_me.uncertainty),
            "source": consts.mp_over_me.source,
        },
    }
    for res in (mu, mp):
        print(
            f"{res.name} = {res.value:.9f} +- {res.total_uncertainty:.1e} "
            f"({res.total_fractional:.1e} fractional)"
        )
    _write_json(args.out_dir, "extract", payload)
    if args.format == "csv":
        rows = [[res.name, k, float(u)] for res in (mu, mp) for k, u in sorted(res.components.items())]
        _write_csv(args.out_dir, "extract_components", ["quantity", "component", "uncertainty"], rows)
    return 0


def _read_determinations(path: Path) -> tuple[str, str | None, list[tuple[str, float, float]]]:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = [(str(d["label"]), float(d["value"]), float(d["u"])) for d in raw["determinations"]]
    if not rows:
        raise ValueError(f"{path}: no determinations")
    return str(raw.get("quantity", "")), raw.get("reference"), rows


def _cmd_compare(args) -> int:
    source = args.input if args.input is not None else bundled.data_path("determinations_mp_over_me.json")
    quantity_name, file_ref, rows = _load(_read_determinations, source)
    reference = args.reference if args.reference is not None else file_ref
    report = _run(constants.comparison_report, rows, reference)
    payload = {
        "quantity": quantity_name,
        "reference": reference if reference is not None else rows[0][0],
        "rows": [
            {"label": r.label, "value": float(r.value), "uncertainty": float(r.uncertainty), "pull": float(r.pull)}
            for r in report
        ],
    }
    for r in report:
        print(f"{r.label:32s} {r.value:.9f} +- {r.uncertainty:.1e}  pull {r.pull:+.2f}")
    _write_json(args.out_dir, "compare", payload)
    _write_csv(
        args.out_dir,
        "compare",
        ["label", "value", "uncertainty", "pull"],
        [[r.label, float(r.value), float(r.uncertainty), float(r.pull)] for r in report],
    )
    return 0


def _default_taus(series: metrology.FrequencyTimeSeries) -> list[float]:
    # octave spacing while at least 4 overlapping differences remain
    taus, m = [], 1
    while len(series.samples) - 2 * m + 1 >= 4:
        taus.append(m * series.tau0)
        m *= 2
    return taus


def _cmd_adev(args) -> int:
    series = _load(metrology.read_counter_csv, args.input, args.carrier_hz)
    taus = _floats_arg(args.tau_list, "--tau-list") if args.tau_list else _default_taus(series)
    rows = _run(metrology.allan_deviation, series, taus)
    payload = {
        "n_samples": int(len(series.samples)),
        "tau0_s": float(series.tau0),
        "carrier_hz": None if args.carrier_hz is None else float(args.carrier_hz),
        "rows": [
            {"tau_s": float(t), "adev": float(a), "ci_low": float(lo), "ci_high": float(hi)}
            for t, a, lo, hi in rows
        ],
    }
    for t, a, *_ in rows:
        print(f"tau = {t:8g} s  adev = {a:.3e}")
    _write_json(args.out_dir, "adev", payload)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    adev_path = args.out_dir / "adev.csv"
    metrology.write_adev_csv(rows, adev_path)
    print(f"wrote {adev_path}")
    return 0


def _cmd_dfg(args) -> int:
    comb = _load(
        metrology.CombParams,
        args.f_rep_hz,
        args.f_ceo_hz,
        (
            metrology.LaserLock(args.n1, args.beat1_hz, args.beat_sign1, args.ceo_sign1),
            metrology.LaserLock(args.n2, args.beat2_hz, args.beat_sign2, args.ceo_sign2),
        ),
    )
    f1 = _run(metrology.laser_frequency, comb, 0)
    f2 = _run(metrology.laser_frequency, comb, 1)
    f0 = _run(metrology.dfg_frequency, comb)
    corrected = _run(metrology.maser_correct, f0, args.maser_fractional_offset)
    payload = {
        "f_rep_hz": float(comb.f_rep),
        "f_ceo_hz": float(comb.f_ceo),
        "laser1_hz": float(f1),
        "laser2_hz": float(f2),
        "dfg_hz": float(f0),
        "maser_fractional_offset": float(args.maser_fractional_offset),
        "dfg_corrected_hz": float(corrected),
    }
    print(f"difference frequency = {f0!r} Hz (maser-corrected {corrected!r} Hz)")
    _write_json(args.out_dir, "dfg", payload)
    return 0


def _parse_sweep(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigFailure(f"--sweep expects MIN:MAX:COUNT, got {text!r}") from exc
    if not (0 < lo < hi) or n < 2:
        raise ConfigFailure(f"--sweep needs 0 < MIN < MAX and COUNT >= 2, got {text!r}")
    return lo, hi, n


def _cmd_carrier(args) -> int:
    if args.lambda_um is None and args.sweep is None:
        raise ConfigFailure("pass --lambda-um and/or --sweep MIN:MAX:COUNT")
    model = _load(carrier.CarrierModel, args.delta_rho_um)
    lam_c = carrier.critical_wavelength(args.delta_rho_um)
    payload = {"delta_rho_um": float(args.delta_rho_um), "critical_wavelength_um": float(lam_c)}
    if args.lambda_um is not None:
        strength = _load(carrier.carrier_strength, args.lambda_um, model)
        payload["lambda_um"] = float(args.lambda_um)
        payload["strength"] = float(strength)
        print(f"S({args.lambda_um:g} um) = {strength:.4f}  (lambda_c = {lam_c:.3f} um)")
    if args.sweep is not None:
        lo, hi, n = _parse_sweep(args.sweep)
        lams = np.linspace(lo, hi, n)
        rows = [[float(lam), float(carrier.carrier_strength(float(lam), model))] for lam in lams]
        _write_csv(args.out_dir, "carrier_sweep", ["lambda_um", "strength"], rows)
    _write_json(args.out_dir, "carrier", payload)
    return 0


# ---------------------------------------------------------------------------
# full-chain reproduction


def _cmd_reproduce_paper(args) -> int:
    rows: list[dict] = []

    def check(name: str, fn) -> None:
        try:
            ok, detail = fn()
        except Exception as exc:  # a failing row must not abort the table
            rows.append({"name": name, "status": "fail", "detail": f"error: {exc}"})
        else:
            rows.append({"name": name, "status": "pass" if ok else "fail", "detail": detail})

    def skip(name: str, reason: str) -> None:
        rows.append({"name": name, "status": "skip", "detail": reason})

    lines = _load(bundled.load_measured_lines)
    contributions = _load(bundled.load_contributions, "codata2018")
    theory = constants.theory_frequency(contributions)

    def c_theory_sum():
        return abs(theory.value - 58605052163.9) <= 0.05, (
            f"{theory.value:.2f} kHz (target 58605052163.9 +- 0.05)"
        )

    check("theory: spin-averaged contribution sum", c_theory_sum)

    for tid, target in (("12", 58605013477.8), ("16", 58605054771.6)):
        def c_line_theory(tid=tid, target=target):
            value = theory.value + lines[tid]["f_spin"].value
            return abs(value - target) <= 0.1, f"{value:.2f} kHz (target {target} +- 0.1)"

        check(f"theory: spin-corrected line {tid}", c_line_theory)

    ledgers = {}

    for tid in ("12", "16"):
        def c_chain(tid=tid):
            ext, ledger = bundled.corrected_line(tid)
            ledgers[tid] = ledger
            corrected = ledger.corrected
            target = lines[tid]["f_exp"]
            ok = (
                abs(corrected.value - target.value) <= 0.005
                and abs(corrected.component("exp") - target.component("exp")) <= 0.005
            )
            return ok, (
                f"{parenthetical(corrected)} after {parenthetical(ext.intercept)} at B=0 "
                f"(target {parenthetical(target)})"
            )

        check(f"line {tid}: zero-field extrapolation + systematic ledger", c_chain)

    def composite_input() -> composite.CompositeInput:
        f12 = ledgers["12"].corrected if "12" in ledgers else lines["12"]["f_exp"]
        f16 = ledgers["16"].corrected if "16" in ledgers else lines["16"]["f_exp"]
        return composite.CompositeInput(
            f12=f12, f16=f16, fspin12=lines["12"]["f_spin"], fspin16=lines["16"]["f_spin"]
        )

    state = {}

    def c_composite():
        q = composite.composite_frequency(composite_input(), 0.5)
        state["composite"] = q
        ok = (
            abs(q.value - 58605052164.255) <= 0.005
            and abs(q.value - 58605052164.24) <= 0.05
            and abs(q.component("exp") - 0.16) <= 0.005
            and abs(q.component("theor_spin") - 0.85) <= 0.005
        )
        return ok, f"{parenthetical(q)} at b12 = 0.5 (target 58605052164.255, u_exp 0.16, u_spin 0.85)"

    check("composite spin-averaged frequency (b12 = 0.5)", c_composite)

    def c_splitting():
        inp = composite_input()
        cmp_ = composite.splitting_comparison(inp.f12, inp.f16, lines["splitting_theory_khz"])
        d = cmp_.difference_exp
        ok = (
            abs(d.value - 41294.05) <= 0.01
            and abs(d.component("exp") - 0.32) <= 0.005
            and cmp_.agreement_sigma < 1.0
        )
        return ok, (
            f"{parenthetical(d)} vs theory {parenthetical(cmp_.difference_theory)}: "
            f"{cmp_.agreement_sigma:.2f} sigma (target 41294.05(32), < 1 sigma)"
        )

    check("hyperfine splitting f16 - f12 vs theory", c_splitting)

    model = _load(bundled.load_scaling_model, "codata2018")
    consts = _load(bundled.load_constants, "codata2018")

    def within(components: dict, targets: dict, rel: float) -> bool:
        return all(abs(components[k] - t) <= rel * t for k, t in targets.items())

    def c_mu():
        mu = constants.extract_mu_over_me(state["composite"], model, consts)
        state["mu"] = mu
        targets = {"exp": 7e-9, "theor_QED": 20e-9, "theor_spin": 37e-9}
        ok = abs(mu.value - 1223.899228668) <= 1e-8 and within(mu.components, targets, 0.15)
        comps = ", ".join(f"{k} {mu.components[k] * 1e9:.1f}" for k in sorted(targets))
        return ok, f"{mu.value:.9f} (target 1223.899228668 +- 1e-8); components 1e-9: {comps} (7, 20, 37 +- 15%)"

    check("extraction: mu/m_e", c_mu)

    def c_mp():
        mp = constants.extract_mp_over_me(state["composite"], model, consts, _md_over_mp_quantity(consts))
        targets = {"exp": 11e-9, "theor_QED": 31e-9, "theor_spin": 55e-9}
        ok = abs(mp.value - 1836.152673384) <= 1.5e-8 and within(mp.components, targets, 0.15)
        comps = ", ".join(f"{k} {mp.components[k] * 1e9:.1f}" for k in sorted(targets))
        return ok, f"{mp.value:.9f} (target 1836.152673384 +- 1.5e-8); components 1e-9: {comps} (11, 31, 55 +- 15%)"

    check("extraction: m_p/m_e", c_mp)

    def c_case2():
        shift = constants.scaled_theory(model, model.mu_p_ref * (1.0 - 5.28e-11)) - model.f_ref
        table2 = bundled.load_contributions("penning")
        table_shift = constants.theory_frequency(table2).value - theory.value
        model2 = bundled.load_scaling_model("penning")
        consts2 = bundled.load_constants("penning")
        ok = (
            abs(shift - 1.50) <= 0.02
            and abs(table_shift - 1.50) <= 0.02
            and abs(model2.mu_p_ref - consts2.mp_over_me.value) <= 2e-9
        )
        return ok, (
            f"scaling {shift:+.3f} kHz, contribution table {table_shift:+.3f} kHz "
            f"(target +1.50 +- 0.02); penning reference mass consistent"
        )

    check("case-II mass scenario: -5.28e-11 input shift", c_case2)

    def c_carrier():
        model_c = carrier.CarrierModel(2.0)
        s_crit = carrier.carrier_strength(carrier.critical_wavelength(2.0), model_c)
        s_51 = carrier.carrier_strength(5.1, model_c)
        ok = abs(s_crit - 0.5) <= 1e-12 and abs(s_51 - 0.0149) <= 0.0005 and s_51 < 0.02
        return ok, f"S(lambda_c) = {s_crit}, S(5.1 um) = {s_51:.4f} (target 0.5 exactly, 0.0149 +- 0.0005, < 0.02)"

    check("carrier strength model", c_carrier)

    def c_resolution():
        r = carrier.resolution(58605052164.255, 0.195)
        return r >= 3.0e11, f"{r:.3e} (target >= 3.0e11)"

    check("line resolution at 0.195 kHz FWHM", c_resolution)

    def c_demo_fit():
        records = lineshape.read_decay_csv(bundled.data_path("line12_depletion.csv"))
        fit = lineshape.fit_lorentzian(lineshape.build_spectrum(records))
        ok = fit.converged and abs(fit.center - 0.037) < 0.05 and abs(fit.fwhm - 0.195) < 0.05
        return ok, (
            f"center {fit.center:+.4f} kHz, fwhm {fit.fwhm:.4f} kHz "
            f"(synthetic demo data, truth 0.037 / 0.195; not a published number)"
        )

    check("demo depletion spectrum fit", c_demo_fit)

    sets = _load(bundled.load_coefficients)
    needs = (
        "needs the evaluated hyperfine coefficients: data/hfs_coefficients.conf ships "
        "as a template only (see README, 'Data sources')"
    )
    if sets is None:
        skip("spin frequencies and uncertainties from evaluated coefficients", needs)
        skip("Zeeman transition coefficients from evaluated coefficients", needs)
    else:
        def c_spin_freqs():
            lower, upper = _transition_sets(sets)
            table = angular.transition_table(lower, upper, bundled.TRANSITION_LEVELS)
            results, ok = {}, True
            for tid, f_target, u_target in (("12", -38686.1, 0.8), ("16", 2607.7, 0.9)):
                lo, up = bundled.TRANSITION_LEVELS[tid]
                f_spin = angular.spin_frequency((upper, up), (lower, lo))
                u_spin = angular.spin_uncertainty(tid, table)
                results[tid] = (f_spin, u_spin)
                ok = ok and abs(f_spin - f_target) <= 0.5 and abs(u_spin - u_target) <= 0.1
            wp = composite.optimize_weight(table, angular.SpinUncertaintyParams())
            flat = [u for b, u in wp.profile if 0.2 <= b <= 0.8]
            ok = ok and abs(wp.u_star - 0.85) <= 0.1 and max(flat) <= 1.1 * min(flat)
            return ok, (
                f"f_spin 12/16 = {results['12'][0]:.1f}/{results['16'][0]:.1f} kHz, "
                f"u = {results['12'][1]:.2f}/{results['16'][1]:.2f} kHz, "
                f"composite minimum {wp.u_star:.2f} kHz at b12 = {wp.b_star:.2f}"
            )

        check("spin frequencies and uncertainties from evaluated coefficients", c_spin_freqs)

        def c_zeeman_coeffs():
            lower, upper = _transition_sets(sets)
            couplings = bundled.load_couplings()
            msgs, ok = [], True
            for tid, target in (("12", -2.9), ("16", -117.0)):
                lo, up = bundled.TRANSITION_LEVELS[tid]
                m = zeeman.transition_coeffs((lower, (*lo, 0)), (upper, (*up, 0)), couplings)
                msgs.append(f"line {tid}: {m.quadratic:+.3g} kHz/G^2")
                ok = ok and abs(m.quadratic - target) <= 0.05 * abs(target)
            lo, up = bundled.TRANSITION_LEVELS["16"]
            for sign in (+1, -1):
                m = zeeman.transition_coeffs((lower, (*lo, sign * 2)), (upper, (*up, sign * 3)), couplings)
                msgs.append(f"stretched m_F {sign * 2:+d} -> {sign * 3:+d}: {m.linear:+.3g} kHz/G")
                ok = ok and abs(m.linear - (-sign * 0.55)) <= 0.05 * 0.55
            return ok, "; ".join(msgs) + " (targets -2.9, -117 kHz/G^2, -+0.55 kHz/G, 5%)"

        check("Zeeman transition coefficients from evaluated coefficients", c_zeeman_coeffs)

    n_pass = sum(r["status"] == "pass" for r in rows)
    n_fail = sum(r["status"] == "fail" for r in rows)
    n_skip = sum(r["status"] == "skip" for r in rows)
    width = max(len(r["name"]) for r in rows)
    for r in rows:
        print(f"{r['status'].upper():4s}  {r['name']:{width}s}  {r['detail']}")
    print(f"{n_pass} passed, {n_fail} failed, {n_skip} skipped")

    payload = {"rows": rows, "n_pass": n_pass, "n_fail": n_fail, "n_skip": n_skip}
    _write_json(args.out_dir, "reproduce_paper", payload)
    return 0 if n_fail == 0 else 1


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", type=Path, default=Path("."), help="directory for JSON/CSV reports")
    common.add_argument(
        "--constants-profile",
        choices=bundled.CONSTANT_PROFILES,
        default="codata2018",
        help="fundamental-constant set and matching theory reference",
    )
    common.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="'csv' additionally writes flat tables for reports that have one",
    )

    coeffs = argparse.ArgumentParser(add_help=False)
    coeffs.add_argument("--coefficients", type=Path, help="hyperfine coefficient file (sectioned [v=..,N=..])")
    coeffs.add_argument(
        "--demo", action="store_true", help="use the bundled illustrative coefficients (not evaluated values)"
    )

    lines_src = argparse.ArgumentParser(add_help=False)
    lines_src.add_argument("--lines", type=Path, help="measured-lines JSON (default: bundled values)")

    parser = argparse.ArgumentParser(
        prog="hdspec",
        description="Analysis chain for two-photon vibrational spectroscopy of a trapped molecular ion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spin-structure", parents=[common, coeffs], help="hyperfine levels, spin frequencies, sensitivities")
    p.set_defaults(handler=_cmd_spin_structure)

    p = sub.add_parser("zeeman-map", parents=[common, coeffs], help="magnetic sublevel energies over a field grid")
    p.add_argument("--level", default="1,1", help="'v,N' section to map (default 1,1)")
    p.add_argument("--couplings", type=Path, help="Zeeman couplings file (default: bundled)")
    p.add_argument("--b-values", help="comma-separated fields in gauss (default 0,0.05,...,0.2)")
    p.set_defaults(handler=_cmd_zeeman_map)

    p = sub.add_parser("zeeman-coeffs", parents=[common, coeffs], help="linear/quadratic shift of one transition")
    p.add_argument("--transition", choices=sorted(bundled.TRANSITION_LEVELS), required=True)
    p.add_argument("--lower-mf", type=int, required=True)
    p.add_argument("--upper-mf", type=int, required=True)
    p.add_argument("--couplings", type=Path, help="Zeeman couplings file (default: bundled)")
    p.add_argument("--b-values", help="comma-separated fields in gauss (default 0,0.05,...,0.2)")
    p.set_defaults(handler=_cmd_zeeman_coeffs)

    p = sub.add_parser("extrapolate-b", parents=[common], help="zero-field extrapolation of line positions")
    p.add_argument("--input", type=Path, required=True, help="CSV with B_gauss,f_khz,u_khz")
    p.set_defaults(handler=_cmd_extrapolate_b)

    p = sub.add_parser("fit-line", parents=[common], help="spectrum build + Lorentzian fit + line frequency")
    p.add_argument("--input", type=Path, required=True, help="CSV with detuning_khz,run_id,laser_on,depletion")
    p.add_argument("--absolute-offset-khz", type=float, help="absolute frequency of zero detuning")
    p.set_defaults(handler=_cmd_fit_line)

    p = sub.add_parser("extrapolate-rf", parents=[common], help="zero-RF-amplitude extrapolation + ledger entry")
    p.add_argument("--input", type=Path, required=True, help="CSV with amplitude,f_khz,u_khz")
    p.add_argument("--nominal-amplitude", type=float, required=True)
    p.add_argument("--linear", action="store_true", help="linear-in-amplitude model instead of quadratic")
    p.set_defaults(handler=_cmd_extrapolate_rf)

    p = sub.add_parser("ledger", parents=[common], help="apply a systematic-shift ledger to a raw frequency")
    p.add_argument("--raw-khz", type=float, required=True)
    p.add_argument("--raw-u-khz", type=float, required=True)
    p.add_argument(
        "--entries",
        type=Path,
        help="JSON list of {name, correction_khz, uncertainty_khz, basis, note}",
    )
    p.add_argument("--include-negligible", action="store_true", help="append the standard negligible-shift rows")
    p.set_defaults(handler=_cmd_ledger)

    p = sub.add_parser("composite", parents=[common, coeffs, lines_src], help="weighted spin-averaged frequency")
    p.add_argument("--b12", type=float, default=0.5, help="weight of line 12 (default 0.5)")
    p.add_argument("--optimize", action="store_true", help="minimize the spin uncertainty over b12 (needs tables)")
    p.set_defaults(handler=_cmd_composite)

    p = sub.add_parser("extract", parents=[common, coeffs, lines_src], help="mass-ratio extraction with budgets")
    p.add_argument("--b12", type=float, default=0.5, help="composite weight of line 12 (default 0.5)")
    p.set_defaults(handler=_cmd_extract)

    p = sub.add_parser("compare", parents=[common], help="pulls of independent determinations against a reference")
    p.add_argument("--input", type=Path, help="determinations JSON (default: bundled mass-ratio table)")
    p.add_argument("--reference", help="label of the reference determination")
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("adev", parents=[common], help="overlapping Allan deviation of a counter log")
    p.add_argument("--input", type=Path, required=True, help="CSV with t_s,f_hz")
    p.add_argument("--carrier-hz", type=float, help="carrier for fractional conversion")
    p.add_argument("--tau-list", help="comma-separated averaging times in s (default: octaves)")
    p.set_defaults(handler=_cmd_adev)

    p = sub.add_parser("dfg", parents=[common], help="difference-frequency arithmetic of two comb locks")
    p.add_argument("--f-rep-hz", type=float, required=True)
    p.add_argument("--f-ceo-hz", type=float, default=0.0)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--beat1-hz", type=float, required=True)
    p.add_argument("--beat2-hz", type=float, required=True)
    p.add_argument("--beat-sign1", type=int, choices=(-1, 1), default=1)
    p.add_argument("--beat-sign2", type=int, choices=(-1, 1), default=1)
    p.add_argument("--ceo-sign1", type=int, choices=(-1, 1), default=1)
    p.add_argument("--ceo-sign2", type=int, choices=(-1, 1), default=1)
    p.add_argument("--maser-fractional-offset", type=float, default=0.0)
    p.set_defaults(handler=_cmd_dfg)

    p = sub.add_parser("carrier", parents=[common], help="recoil-free carrier strength vs wavelength")
    p.add_argument("--delta-rho-um", type=float, required=True, help="thermal radial spread in um")
    p.add_argument("--lambda-um", type=float, help="wavelength to evaluate in um")
    p.add_argument("--sweep", help="MIN:MAX:COUNT wavelength sweep written as CSV")
    p.set_defaults(handler=_cmd_carrier)

    p = sub.add_parser(
        "reproduce-paper", parents=[common], help="run the full chain on bundled inputs; pass/fail per anchor"
    )
    p.set_defaults(handler=_cmd_reproduce_paper)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except _Failure as exc:
        kind = "config error" if exc.exit_code == 2 else "data error"
        print(f"{kind}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

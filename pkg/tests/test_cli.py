"""Command-line interface: exit codes, payload shapes, determinism."""

import json

import pytest

from hdspec import bundled
from hdspec.cli import main

SUBCOMMANDS = (
    "spin-structure",
    "zeeman-map",
    "zeeman-coeffs",
    "extrapolate-b",
    "fit-line",
    "extrapolate-rf",
    "ledger",
    "composite",
    "extract",
    "compare",
    "adev",
    "dfg",
    "carrier",
    "reproduce-paper",
)


def run(tmp_path, *argv):
    return main([*argv, "--out-dir", str(tmp_path)])


def load_json(tmp_path, stem):
    return json.loads((tmp_path / f"{stem}.json").read_text())


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_every_subcommand_has_help(name):
    with pytest.raises(SystemExit) as exc:
        main([name, "--help"])
    assert exc.value.code == 0


def test_top_level_help():
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0


# --- exit-code contract -------------------------------------------------------


def test_spin_structure_without_coefficients_is_config_error(tmp_path, capsys):
    assert run(tmp_path, "spin-structure") == 2
    err = capsys.readouterr().err
    assert "config error" in err
    assert "--demo" in err


def test_missing_input_file_is_config_error(tmp_path, capsys):
    assert run(tmp_path, "extrapolate-b", "--input", str(tmp_path / "absent.csv")) == 2
    assert "config error" in capsys.readouterr().err


def test_unfittable_data_is_data_error(tmp_path, capsys):
    scan = tmp_path / "flat.csv"
    rows = ["detuning_khz,run_id,laser_on,depletion"]
    for i, d in enumerate(x * 0.1 for x in range(-5, 6)):
        rows += [f"{d},on{i},1,0.0", f"{d},off{i},0,0.0"]
    scan.write_text("\n".join(rows) + "\n")
    assert run(tmp_path, "fit-line", "--input", str(scan)) == 1
    assert "data error" in capsys.readouterr().err


def test_successful_command_returns_zero(tmp_path):
    assert run(tmp_path, "composite") == 0


# --- individual commands --------------------------------------------------------


def test_composite_payload(tmp_path):
    assert run(tmp_path, "composite", "--b12", "0.5") == 0
    payload = load_json(tmp_path, "composite")
    assert payload["b12"] == 0.5
    assert payload["value_khz"] == pytest.approx(58605052164.255, abs=1e-3)
    assert payload["u_exp_khz"] == pytest.approx(0.16101, abs=1e-4)
    assert payload["u_spin_khz"] == pytest.approx(0.85, abs=1e-6)
    assert len(payload["profile"]) == 101
    assert payload["splitting"]["agreement_sigma"] < 1.0
    assert (tmp_path / "composite_profile.csv").exists()


def test_composite_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    assert run(a, "composite") == 0
    assert run(b, "composite") == 0
    assert (a / "composite.json").read_bytes() == (b / "composite.json").read_bytes()
    assert (
        a / "composite_profile.csv"
    ).read_bytes() == (b / "composite_profile.csv").read_bytes()


def test_spin_structure_demo(tmp_path):
    assert run(tmp_path, "spin-structure", "--demo") == 0
    payload = load_json(tmp_path, "spin_structure")
    assert set(payload["sections"]) == {"v=0,N=0", "v=1,N=1"}
    assert sum(lv["degeneracy"] for lv in payload["sections"]["v=0,N=0"]) == 12
    assert sum(lv["degeneracy"] for lv in payload["sections"]["v=1,N=1"]) == 36
    assert set(payload["transitions"]) == {"12", "16"}
    assert payload["transitions"]["16"]["upper_level"] == [1, 2, 3]


def test_zeeman_coeffs_demo_stretched_transition(tmp_path):
    assert (
        run(
            tmp_path,
            "zeeman-coeffs",
            "--demo",
            "--transition",
            "16",
            "--lower-mf",
            "2",
            "--upper-mf",
            "3",
        )
        == 0
    )
    payload = load_json(tmp_path, "zeeman_coeffs")
    assert payload["linear_khz_per_gauss"] == pytest.approx(-0.55, abs=1e-6)
    assert payload["quadratic_khz_per_gauss2"] == pytest.approx(0.0, abs=1e-4)


def test_extrapolate_b_on_bundled_scan(tmp_path):
    src = bundled.data_path("line12_zeeman.csv")
    assert run(tmp_path, "extrapolate-b", "--input", str(src)) == 0
    payload = load_json(tmp_path, "extrapolate_b")
    assert payload["intercept"]["value"] == pytest.approx(58605013478.330, abs=5e-4)
    assert payload["curvature"]["value"] == pytest.approx(-2.9, abs=1e-3)
    assert payload["curvature"]["unit"] == "kHz/G^2"


def test_extrapolate_rf_on_bundled_scan(tmp_path):
    src = bundled.data_path("line12_rf.csv")
    assert (
        run(tmp_path, "extrapolate-rf", "--input", str(src), "--nominal-amplitude", "1.0")
        == 0
    )
    payload = load_json(tmp_path, "extrapolate_rf")
    assert payload["entry"]["correction_khz"] == pytest.approx(-0.30, abs=2e-3)


def test_ledger_with_negligible_rows(tmp_path):
    assert (
        run(
            tmp_path,
            "ledger",
            "--raw-khz",
            "100.0",
            "--raw-u-khz",
            "0.1",
            "--include-negligible",
        )
        == 0
    )
    payload = load_json(tmp_path, "ledger")
    assert payload["corrected"]["value_khz"] == pytest.approx(100.0)
    assert len(payload["entries"]) == 3


def test_extract_reports_both_ratios(tmp_path):
    assert run(tmp_path, "extract") == 0
    payload = load_json(tmp_path, "extract")
    assert payload["mu_over_me"]["value"] == pytest.approx(1223.899228668, abs=1e-6)
    assert payload["mp_over_me"]["value"] == pytest.approx(1836.152673384, abs=1e-6)
    assert set(payload["mu_over_me"]["components"]) == {
        "CODATA",
        "exp",
        "theor_QED",
        "theor_spin",
    }


def test_compare_uses_bundled_table(tmp_path):
    assert run(tmp_path, "compare") == 0
    payload = load_json(tmp_path, "compare")
    assert len(payload["rows"]) >= 3
    ref_rows = [r for r in payload["rows"] if r["pull"] == 0.0]
    assert ref_rows


def test_adev_default_taus(tmp_path):
    src = bundled.data_path("demo_counter.csv")
    assert (
        run(tmp_path, "adev", "--input", str(src), "--carrier-hz", "58605052164255.0")
        == 0
    )
    payload = load_json(tmp_path, "adev")
    taus = [row["tau_s"] for row in payload["rows"]]
    assert taus == sorted(taus)
    assert (tmp_path / "adev.csv").exists()


def test_dfg_is_offset_free(tmp_path):
    args = [
        "dfg",
        "--f-rep-hz",
        "80e6",
        "--n1",
        "3521728",
        "--n2",
        "2789120",
        "--beat1-hz",
        "20e6",
        "--beat2-hz=-10e6",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    assert run(a, *args, "--f-ceo-hz", "0.0") == 0
    assert run(b, *args, "--f-ceo-hz", "35e6") == 0
    fa, fb = load_json(a, "dfg"), load_json(b, "dfg")
    assert fa["dfg_hz"] == fb["dfg_hz"]
    assert fa["laser1_hz"] != fb["laser1_hz"]


def test_carrier_point_and_sweep(tmp_path):
    assert (
        run(
            tmp_path,
            "carrier",
            "--delta-rho-um",
            "2.0",
            "--lambda-um",
            "5.1",
            "--sweep",
            "4:16:25",
        )
        == 0
    )
    payload = load_json(tmp_path, "carrier")
    assert payload["strength"] == pytest.approx(0.0149, abs=5e-4)
    assert (tmp_path / "carrier_sweep.csv").exists()


def test_reproduce_paper_passes_with_two_skips(tmp_path, capsys):
    assert run(tmp_path, "reproduce-paper") == 0
    payload = load_json(tmp_path, "reproduce_paper")
    statuses = [row["status"] for row in payload["rows"]]
    assert statuses.count("fail") == 0
    expected_skips = 0 if bundled.load_coefficients() is not None else 2
    assert statuses.count("skip") == expected_skips
    assert statuses.count("pass") >= 12
    out = capsys.readouterr().out
    assert "0 failed" in out

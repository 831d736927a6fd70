import csv
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from sfslab import cli
from sfslab.config import SCHEMAS, parse_text, resolve
from sfslab.envelope import pulse_energy
from sfslab.errors import ConfigError, ConvergenceError
from sfslab.output import read_envelope_csv

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"

SIM = ["--set", "alpha_l=4.5", "--set", "t2_s=1", "--set", "pulse_t_s=0.5"]


def run_cli(args, capsys):
    code = cli.main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def read_curve(path):
    rows = [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))]
    return rows[0], rows[1], np.array(rows[2:], dtype=float)


class TestConfig:
    def test_comments_and_blank_lines(self):
        raw = parse_text("# header\n\nalpha_l = 2   # inline\n t2_s=1\n")
        assert raw == {"alpha_l": "2", "t2_s": "1"}

    def test_duplicate_and_malformed(self):
        with pytest.raises(ConfigError):
            parse_text("a = 1\na = 2\n")
        with pytest.raises(ConfigError):
            parse_text("just words\n")

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as info:
            resolve("fit", {"alpha_l": "1", "t2_s": "1", "pulse_t_s": "1", "alpha": "2"})
        assert info.value.key == "alpha"

    def test_missing_and_range(self):
        with pytest.raises(ConfigError, match="t2_s"):
            resolve("fit", {"alpha_l": "1", "pulse_t_s": "1"})
        with pytest.raises(ConfigError, match=r"range \[0, 10000\]"):
            resolve("fit", {"alpha_l": "-1", "t2_s": "1", "pulse_t_s": "1"})

    def test_unit_suffixes(self):
        for keys in SCHEMAS.values():
            for k in keys:
                assert not k.name.endswith(("_ns", "_us", "_mhz")), k.name

    def test_every_key_documented(self):
        doc = (ROOT / "docs" / "config.md").read_text()
        for kind, keys in SCHEMAS.items():
            assert f"## {kind}" in doc
            for k in keys:
                assert f"`{k.name}`" in doc

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.cfg")), ids=lambda p: p.stem)
    def test_shipped_recipes_validate(self, path, capsys):
        kind = path.stem.split("_")[0]
        code, out, _ = run_cli(["validate", kind, "--config", path], capsys)
        assert code == 0 and json.loads(out)["status"] == "ok"


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        code, _, err = run_cli(["simulate", "--out", tmp_path, "--set", "alpha_l=1", "--set", "t2_s=1",
                                "--set", "pulse_t_s=1", "--set", "colour=blue"], capsys)
        assert code == 2
        line = err.strip()
        assert "\n" not in line
        msg = json.loads(line)
        assert msg["error"] == "config" and msg["key"] == "colour"

    def test_empty_sweep(self, tmp_path, capsys):
        code, _, err = run_cli(["sweep", "--out", tmp_path, "--set", "alpha_l_start=5",
                                "--set", "alpha_l_stop=1", "--set", "alpha_l_step=0.5"], capsys)
        assert code == 2 and "empty sweep range" in json.loads(err)["message"]

    def test_numerical_failure(self, tmp_path, capsys, monkeypatch):
        def boom(*a, **k):
            raise ConvergenceError("no convergence", best=(1.0, 2.0), residual=0.5)

        monkeypatch.setattr(cli, "fit_decay", boom)
        code, _, err = run_cli(["fit", "--out", tmp_path, *SIM], capsys)
        assert code == 3
        msg = json.loads(err)
        assert msg["error"] == "numerical" and msg["residual"] == 0.5

    def test_missing_config_file(self, tmp_path, capsys):
        code, _, err = run_cli(["simulate", "--config", tmp_path / "nope.cfg"], capsys)
        assert code == 2 and json.loads(err)["error"] == "config"

    def test_precondition_reported_with_key_context(self, tmp_path, capsys):
        code, _, err = run_cli(["simulate", "--out", tmp_path, *SIM, "--set", "t_min_s=-1"], capsys)
        assert code == 2 and "10 T" in json.loads(err)["message"]

    def test_units_rejected_for_slowlight(self, tmp_path, capsys):
        code, _, _ = run_cli(["slowlight", "--out", tmp_path, "--units", "t2"], capsys)
        assert code == 2


class TestSimulate:
    def test_flag_wins_over_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("alpha_l = 1\nt2_s = 1\npulse_t_s = 0.5\n")
        code, _, _ = run_cli(["simulate", "--config", cfg, "--set", "alpha_l=4.5", "--out", tmp_path], capsys)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["alpha_l"] == 4.5

    def test_efficiency_near_twenty_percent(self, tmp_path, capsys):
        assert run_cli(["simulate", "--out", tmp_path, *SIM], capsys)[0] == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert abs(summary["efficiency"] - 0.2) <= 0.05
        assert summary["phi0_per_sqrt_s"] == pytest.approx(summary["f_out_zero_plus_per_sqrt_s"])

    def test_transparent_output_equals_input(self, tmp_path, capsys):
        run_cli(["simulate", "--out", tmp_path, "--config", CONFIGS / "simulate_transparent.cfg"], capsys)
        _, _, a = read_curve(tmp_path / "input.csv")
        _, _, b = read_curve(tmp_path / "output.csv")
        np.testing.assert_array_equal(a, b)

    def test_header_units_and_jump_rows(self, tmp_path, capsys):
        run_cli(["simulate", "--out", tmp_path, *SIM], capsys)
        header, units, data = read_curve(tmp_path / "input.csv")
        assert header == ["t_s", "re_f", "im_f", "intensity"]
        assert units == ["s", "s^-1/2", "s^-1/2", "s^-1"]
        zero = np.nonzero(data[:, 0] == 0)[0]
        assert len(zero) == 2
        assert data[zero[0], 1] == pytest.approx(2.0) and data[zero[1], 1] == 0.0

    def test_round_trip_energy(self, tmp_path, capsys):
        run_cli(["simulate", "--out", tmp_path, *SIM], capsys)
        from sfslab.core import ExpReversedSpec, ResonantMedium, propagate_exp_reversed
        m, spec = ResonantMedium(4.5, 1.0), ExpReversedSpec(0.5)
        direct = propagate_exp_reversed(m, spec)
        for name in ("input.csv", "output.csv"):
            back = read_envelope_csv(tmp_path / name)
            assert back.grid == direct.grid
        back = read_envelope_csv(tmp_path / "output.csv")
        assert abs(pulse_energy(back) - pulse_energy(direct)) < 1e-9

    def test_pulse_file_input(self, tmp_path, capsys):
        first = tmp_path / "a"
        run_cli(["simulate", "--out", first, *SIM], capsys)
        second = tmp_path / "b"
        code, _, _ = run_cli(["simulate", "--out", second, "--set", "alpha_l=4.5", "--set", "t2_s=1",
                              "--set", f"pulse_file={first / 'input.csv'}"], capsys)
        assert code == 0
        _, _, closed = read_curve(first / "output.csv")
        _, _, conv = read_curve(second / "output.csv")
        assert np.sqrt(np.sum((closed[:, 1] - conv[:, 1]) ** 2) / np.sum(closed[:, 1] ** 2)) < 1e-3

    def test_t2_units(self, tmp_path, capsys):
        run_cli(["simulate", "--out", tmp_path, "--units", "t2", "--set", "alpha_l=2", "--set", "t2_s=2e-6",
                 "--set", "pulse_t_s=1e-6"], capsys)
        header, units, data = read_curve(tmp_path / "output.csv")
        assert header[0] == "t_over_t2" and units[0] == "T2"
        assert data[0, 0] == pytest.approx(-5.0)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["pulse_t_over_t2"] == pytest.approx(0.5)
        assert summary["phi0_per_sqrt_t2"] == pytest.approx(2 * (1 - math.exp(-1 / 3)), rel=1e-8)

    def test_fresnel_summary(self, tmp_path, capsys):
        run_cli(["simulate", "--out", tmp_path, *SIM, "--set", "beam_area_m2=7.853981634e-9",
                 "--set", "length_m=0.02", "--set", "wavelength_m=605.82e-9"], capsys)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["fresnel_number"] == pytest.approx(0.648, abs=1e-3)
        assert summary["fresnel_valid_1d"] is False


class TestOtherCommands:
    def test_fit(self, tmp_path, capsys):
        assert run_cli(["fit", "--out", tmp_path, "--config", CONFIGS / "fit_decay.cfg"], capsys)[0] == 0
        fit = json.loads((tmp_path / "fit.json").read_text())
        assert fit["x"] == pytest.approx(1.165, rel=0.05)
        assert fit["efficiency"] == pytest.approx(fit["i0_amp_per_s"] * fit["t_dec_s"], rel=1e-8)
        header, _, data = read_curve(tmp_path / "cumulative.csv")
        assert header == ["t_s", "cumulative_energy", "model"]

    def test_sweep(self, tmp_path, capsys):
        assert run_cli(["sweep", "--out", tmp_path, "--svg", "--config", CONFIGS / "sweep_theory.cfg"],
                       capsys)[0] == 0
        header, _, data = read_curve(tmp_path / "sweep.csv")
        assert header == ["alpha_l", "t_over_t2", "t_dec_over_t2", "x", "efficiency"]
        a = data[:, 0]
        assert np.all(np.abs(data[:, 3] / (1 + 0.055 * a) - 1) <= 0.05)
        assert np.all(np.diff(data[:, 2]) < 0) and np.all(np.diff(data[:, 4]) > 0)
        root = ET.parse(tmp_path / "sweep.svg").getroot()
        assert root.tag.endswith("svg") and root.get("version") == "1.1"
        assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 3

    def test_afc(self, tmp_path, capsys):
        assert run_cli(["afc", "--out", tmp_path, "--config", CONFIGS / "afc_finesse10.cfg", "--svg"],
                       capsys)[0] == 0
        res = json.loads((tmp_path / "afc.json").read_text())
        assert res["ratio_to_recall"] == pytest.approx(0.12, abs=0.01)
        assert res["sr_loss_flagged"] is True
        _, _, data = read_curve(tmp_path / "afc_sweep.csv")
        slope = data[:, 1] / data[:, 0]
        assert np.allclose(slope, slope[0], rtol=1e-8)
        assert np.all((data[:, 3] == 1) == (data[:, 1] < 1))

    def test_slowlight(self, tmp_path, capsys):
        assert run_cli(["slowlight", "--out", tmp_path, "--svg"], capsys)[0] == 0
        s = json.loads((tmp_path / "summary.json").read_text())
        assert s["vg_analytic_m_s"] == pytest.approx(26928, abs=1)
        assert s["measured_group_velocity_m_s"] == 40000
        assert s["group_delay_s"] > 0
        ET.parse(tmp_path / "slowlight.svg")

    @pytest.mark.parametrize("deg", [90, 45])
    def test_slowlight_channels(self, tmp_path, capsys, deg):
        run_cli(["slowlight", "--out", tmp_path, "--set", f"theta_deg={deg}"], capsys)
        s = json.loads((tmp_path / "summary.json").read_text())
        if deg == 90:
            assert s["energy_parallel"] < 1e-9
        else:
            assert abs(s["energy_parallel_before_medium"] - s["energy_perpendicular"]) < 1e-9

    def test_profile_file(self, tmp_path, capsys):
        nu = np.linspace(-1.2e9, 1.2e9, 4097)
        a = np.where(np.abs(nu) < 15e6, 0.0, 70.0)
        prof = tmp_path / "profile.csv"
        prof.write_text("frequency_hz,alpha_l\n" + "".join(f"{f:.17g},{v:.17g}\n" for f, v in zip(nu, a)))
        assert run_cli(["slowlight", "--out", tmp_path, "--set", f"profile_file={prof}"], capsys)[0] == 0
        s = json.loads((tmp_path / "summary.json").read_text())
        assert "vg_analytic_m_s" not in s and s["group_delay_s"] > 0

    def test_json_format(self, tmp_path, capsys):
        run_cli(["afc", "--out", tmp_path, "--format", "json", "--config", CONFIGS / "afc_finesse10.cfg"],
                capsys)
        doc = json.loads((tmp_path / "afc_sweep.json").read_text())
        assert doc["columns"][0] == "finesse" and len(doc["data"][0]) == 4
        assert not (tmp_path / "afc_sweep.csv").exists()

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "sfslab", "--version"], capture_output=True, text=True)
        assert out.returncode == 0 and out.stdout.startswith("sfslab ")

import json

import pytest

from mcvtests.cli import main
from mcvtests.distributions import chi2_sf
from mcvtests.streams import stream


@pytest.fixture()
def one_way_csv(tmp_path):
    rng = stream(404)
    lines = ["fo,fhi,status"]
    for status, m in (("1", 30), ("0", 25)):
        for _ in range(m):
            lines.append(
                f"{150 + 20 * rng.standard_normal():.3f},"
                f"{190 + 30 * rng.standard_normal():.3f},{status}"
            )
    path = tmp_path / "voice.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture()
def two_way_csv(tmp_path):
    rng = stream(405)
    sizes = {("Yes", "<6m"): 24, ("Yes", ">6m"): 32, ("No", "<6m"): 25, ("No", ">6m"): 19}
    lines = ["drug,length,bdi.pre"]
    for (drug, length), m in sizes.items():
        for _ in range(m):
            lines.append(f"{drug},{length},{20 + 8 * rng.standard_normal():.3f}")
    path = tmp_path / "trial.csv"
    path.write_text("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture()
def tiny_config(tmp_path):
    cfg = {
        "scenario_id": "tiny",
        "seed": 11,
        "mc_replications": 25,
        "permutations": 99,
        "sizes": [20, 20],
        "populations": [
            {"family": "normal", "mean": [2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
            {"family": "normal", "mean": [2.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
        ],
        "design": {"layout": "one-way", "k": 2, "effect": "group"},
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExitCodes:
    def test_missing_data_flag_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "test", "--values", "a", "--factors", "b")
        assert code == 1

    def test_unknown_preset_is_usage_error(self, capsys):
        code, _, _ = run_cli(capsys, "simulate", "--preset", "table9")
        assert code == 1

    def test_bad_alpha_config_is_usage_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"alpha": 1.5, "sizes": [], "populations": []}))
        code, _, err = run_cli(capsys, "simulate", "--config", str(bad))
        assert code == 1

    def test_estimation_error_exits_2(self, capsys, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("y,grp\n" + "\n".join(["1.0,a"] * 10 + ["1.0,b", "2.0,b", "3.0,b"]) + "\n")
        code, _, err = run_cli(
            capsys, "test", "--data", str(path), "--values", "y", "--factors", "grp",
            "--method", "asymptotic",
        )
        assert code == 2
        assert "estimation error" in err

    def test_parse_error_exits_2(self, capsys, tmp_path):
        path = tmp_path / "broken.csv"
        path.write_text("y,grp\noops,a\n1.0,b\n")
        code, _, err = run_cli(
            capsys, "test", "--data", str(path), "--values", "y", "--factors", "grp",
        )
        assert code == 2


class TestTestCommand:
    def test_text_report_lists_cells_and_estimates(self, capsys, one_way_csv):
        code, out, _ = run_cli(
            capsys, "test", "--data", one_way_csv, "--values", "fo,fhi", "--factors",
            "status", "--method", "asymptotic",
        )
        assert code == 0
        assert "status=1" in out and "status=0" in out
        assert "MCV%" in out
        assert "mcv" in out and "std_mean" in out

    def test_json_round_trip_p_value(self, capsys, one_way_csv):
        code, out, _ = run_cli(
            capsys, "test", "--data", one_way_csv, "--values", "fo,fhi", "--factors",
            "status", "--method", "both", "--permutations", "199", "--seed", "5",
            "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        for entry in payload["tests"]:
            recomputed = chi2_sf(entry["statistic"], entry["df"])
            assert abs(entry["p_asymptotic"] - recomputed) < 1e-12
            assert 0.0 < entry["p_permutation"] <= 1.0
        assert payload["data"]["n"] == 55
        assert [c["n"] for c in payload["data"]["cells"]] == [30, 25]

    def test_levels_flag_reorders_cells(self, capsys, one_way_csv):
        code, out, _ = run_cli(
            capsys, "test", "--data", one_way_csv, "--values", "fo", "--factors", "status",
            "--levels", "0,1", "--method", "asymptotic", "--format", "json",
        )
        assert code == 0
        payload = json.loads(out)
        assert [c["label"] for c in payload["data"]["cells"]] == ["status=0", "status=1"]

    def test_two_way_cell_map_golden(self, capsys, two_way_csv):
        code, out, _ = run_cli(
            capsys, "test", "--data", two_way_csv, "--values", "bdi.pre", "--factors",
            "drug,length", "--effect", "AB", "--method", "asymptotic",
        )
        assert code == 0
        expected = (
            "Cells (first factor outer, second factor inner):\n"
            "  [1] drug=Yes:length=<6m  n=24\n"
            "  [2] drug=Yes:length=>6m  n=32\n"
            "  [3] drug=No:length=<6m  n=25\n"
            "  [4] drug=No:length=>6m  n=19"
        )
        assert expected in out

    def test_two_way_effects_have_expected_df(self, capsys, two_way_csv):
        for effect, df in (("A", 1), ("B", 1), ("AB", 1)):
            code, out, _ = run_cli(
                capsys, "test", "--data", two_way_csv, "--values", "bdi.pre", "--factors",
                "drug,length", "--effect", effect, "--method", "asymptotic",
                "--format", "json",
            )
            assert code == 0
            assert json.loads(out)["tests"][0]["df"] == df

    def test_custom_contrast_file(self, capsys, one_way_csv, tmp_path):
        cfile = tmp_path / "h.csv"
        cfile.write_text("1,-1\n")
        code, out, _ = run_cli(
            capsys, "test", "--data", one_way_csv, "--values", "fo", "--factors", "status",
            "--effect", "custom", "--contrast", str(cfile), "--method", "asymptotic",
            "--format", "json",
        )
        assert code == 0
        assert json.loads(out)["tests"][0]["df"] == 1

    def test_bad_custom_contrast_exits_2(self, capsys, one_way_csv, tmp_path):
        cfile = tmp_path / "h.csv"
        cfile.write_text("1,0\n")  # rows do not sum to zero
        code, _, _ = run_cli(
            capsys, "test", "--data", one_way_csv, "--values", "fo", "--factors", "status",
            "--effect", "custom", "--contrast", str(cfile),
        )
        assert code == 2

    def test_deterministic_json(self, capsys, one_way_csv):
        args = (
            "test", "--data", one_way_csv, "--values", "fo,fhi", "--factors", "status",
            "--permutations", "199", "--seed", "7", "--format", "json",
        )
        _, first, _ = run_cli(capsys, *args)
        _, second, _ = run_cli(capsys, *args)
        assert first == second

    def test_workers_do_not_change_json(self, capsys, one_way_csv):
        base = (
            "test", "--data", one_way_csv, "--values", "fo", "--factors", "status",
            "--permutations", "199", "--seed", "7", "--format", "json",
        )
        _, serial, _ = run_cli(capsys, *base, "--workers", "1")
        _, parallel, _ = run_cli(capsys, *base, "--workers", "2")
        assert serial == parallel


class TestSimulateCommand:
    def test_custom_config_runs_and_writes_json(self, capsys, tiny_config, tmp_path):
        out_file = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, "simulate", "--config", tiny_config, "--out", str(out_file)
        )
        assert code == 0
        assert "tiny" in out  # human table on stdout
        payload = json.loads(out_file.read_text())
        assert payload["command"] == "simulate"
        assert len(payload["records"]) == 4  # 2 methods x 2 targets
        for record in payload["records"]:
            assert record["scenario_id"] == "tiny"
            assert 0.0 <= record["rate"] <= 1.0
            assert record["n_valid"] == 25
            assert record["band"][0] < record["band"][1]

    def test_byte_identical_reports(self, capsys, tiny_config, tmp_path):
        f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
        run_cli(capsys, "simulate", "--config", tiny_config, "--out", str(f1))
        run_cli(capsys, "simulate", "--config", tiny_config, "--out", str(f2))
        assert f1.read_bytes() == f2.read_bytes()

    def test_seed_flag_overrides_config(self, capsys, tiny_config):
        code, out, _ = run_cli(
            capsys, "simulate", "--config", tiny_config, "--seed", "99", "--format", "json"
        )
        assert code == 0
        payload = json.loads(out)
        assert all(r["seed"] == 99 for r in payload["records"])

    def test_json_format_prints_payload(self, capsys, tiny_config):
        code, out, _ = run_cli(capsys, "simulate", "--config", tiny_config, "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["schema"] == "mcvtests/simulate-report/v1"

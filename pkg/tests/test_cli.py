import json

import numpy as np
import pytest

from fblsched.channel import ChannelRealization, NetworkConfig
from fblsched.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from fblsched.harness import CSV_COLUMNS


@pytest.fixture
def strong_instance(tmp_path):
    h = np.array([[3.0, 0.0], [0.0, 3.0j], [0.1, 0.1]])
    real = ChannelRealization.from_normalized(h, config=NetworkConfig(num_antennas_Nt=2, num_users_K=3))
    path = tmp_path / "inst.json"
    real.save(path)
    return path


class TestRateTools:
    def test_zero_dispersion(self, capsys):
        assert main(["rate-tools", "--epsilon", "0.5"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "min SINR (FBL)     = 3\n" in out and "theta              = 0\n" in out

    def test_gamma_values(self, capsys):
        assert main(["rate-tools", "--gamma", "3", "--gamma", "0"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "gamma=3: R=0.9794884675" in out
        assert "gamma=0: R=0 nats  V=0" in out

    @pytest.mark.parametrize("argv", [["rate-tools", "--epsilon", "2"],
                                      ["rate-tools", "--gamma", "-1"],
                                      ["rate-tools", "--blocklength", "0"]])
    def test_bad_values(self, argv, capsys):
        assert main(argv) == EXIT_USAGE


class TestSolve:
    def test_instance_file(self, strong_instance, capsys, tmp_path):
        trace = tmp_path / "trace.csv"
        assert main(["solve", "--instance", str(strong_instance), "--trace", str(trace)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "scheduled (2): [0, 1]" in out
        lines = trace.read_text().splitlines()
        assert lines[0] == "tau,objective,sum_kappa,power" and len(lines) >= 2

    def test_save_instance_round_trip(self, tmp_path, capsys):
        path = tmp_path / "drawn.json"
        assert main(["solve", "--users", "3", "--seed", "4", "--save-instance", str(path)]) == EXIT_OK
        first = capsys.readouterr().out
        assert json.loads(path.read_text())["seed"] == 4
        assert main(["solve", "--instance", str(path)]) == EXIT_OK
        assert capsys.readouterr().out == first

    def test_missing_instance(self, tmp_path, capsys):
        assert main(["solve", "--instance", str(tmp_path / "nope.json")]) == EXIT_RUNTIME
        assert "fblsched:" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["solve", "--frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_bad_scenario(self, capsys):
        assert main(["solve", "--users", "0"]) == EXIT_USAGE


class TestSweep:
    args = ["sweep", "--axis", "num_users", "--values", "2,3", "--trials", "2",
            "--antennas", "2", "--snr-db", "30"]

    def test_stdout_csv(self, capsys):
        assert main(self.args) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + 2 * 4

    def test_file_reproducible(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(self.args + ["--out", str(a)]) == EXIT_OK
        assert main(self.args + ["--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"axis": "blocklength", "axis_values": [64, 128], "trials": 1,
                                   "methods": ["sca_plain"]}))
        assert main(["sweep", "--config", str(cfg)]) == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        assert [l.split(",")[:2] for l in out[1:]] == [["64", "sca_plain"], ["128", "sca_plain"]]

    @pytest.mark.parametrize("extra", [["--methods", "magic"], ["--values", "4,4"],
                                       ["--methods", "es", "--values", "11"]])
    def test_usage_errors(self, extra, capsys):
        argv = [a for a in self.args]
        i = argv.index("--values")
        if "--values" in extra:
            del argv[i:i + 2]
        assert main(argv + extra) == EXIT_USAGE

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"axis": "colour"}))
        assert main(["sweep", "--config", str(cfg)]) == EXIT_USAGE

    def test_unwritable_output(self, tmp_path, capsys):
        assert main(self.args + ["--out", str(tmp_path / "missing" / "x.csv")]) == EXIT_RUNTIME


class TestCompare:
    def test_table(self, tmp_path, capsys):
        out_csv = tmp_path / "cmp.csv"
        argv = ["compare", "--trials", "2", "--antennas", "2", "--users", "3", "--snr-db", "30",
                "--out", str(out_csv)]
        assert main(argv) == EXIT_OK
        assert "mean" in capsys.readouterr().out
        rows = out_csv.read_text().splitlines()
        assert rows[0] == "seed,es,sca_tuned,sca_plain,shannon_raw,shannon_verified"
        assert len(rows) == 3

    def test_zero_trials(self, capsys):
        assert main(["compare", "--trials", "0"]) == EXIT_USAGE

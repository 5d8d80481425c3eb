import math
import os

import numpy as np
import pytest

import kaclab.cli as cli
from kaclab.cli import (
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    RunConfig,
    UsageError,
    emit_csv,
    main,
    parse_config,
)
from kaclab.generator import AssemblyError


def read_csv(path):
    comments, header, rows = [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return comments, header, rows


class TestParseConfig:
    def test_flags_only(self):
        cfg = parse_config(["spectrum", "--n", "3", "--lambda", "1", "--mu", "1"])
        assert cfg.verb == "spectrum"
        assert cfg.options["n"] == 3
        assert cfg.options["lam"] == 1.0
        assert cfg.options["beta"] == 1.0  # default

    def test_equals_form_and_alias(self):
        cfg = parse_config(["spectrum", "--n=5", "--lambda=0.2", "--mu=2"])
        assert cfg.options["lam"] == 0.2

    def test_file_merging_flag_wins(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("verb = spectrum\nn = 4\nlambda = 2.5\nmu = 1.0\n")
        cfg = parse_config(["--config", str(path), "--n", "6"])
        assert cfg.verb == "spectrum"
        assert cfg.options["n"] == 6
        assert cfg.options["lam"] == 2.5

    def test_unknown_verb_and_key(self):
        with pytest.raises(UsageError):
            parse_config(["warp", "--n", "3"])
        with pytest.raises(UsageError):
            parse_config(["spectrum", "--n", "3", "--frobnicate", "1"])

    def test_malformed_value(self):
        with pytest.raises(UsageError):
            parse_config(["spectrum", "--n", "three"])

    def test_missing_required(self):
        with pytest.raises(UsageError):
            parse_config(["spectrum", "--mu", "1"])
        with pytest.raises(UsageError):
            parse_config(["entropy", "--n", "10"])  # entropy needs mu

    def test_round_trip_through_comments(self, tmp_path):
        cfg = parse_config(
            ["spectrum", "--n", "3", "--lambda", "0.30000000000000004", "--mu", "2"]
        )
        path = tmp_path / "echo.cfg"
        path.write_text("\n".join(cfg.as_lines()) + "\n")
        again = parse_config(["--config", str(path)])
        assert again == cfg


class TestEmitCsv:
    def test_empty_series_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        emit_csv(str(path), ["a", "b"], [], ["verb = spectrum"])
        comments, header, rows = read_csv(str(path))
        assert comments == ["verb = spectrum"]
        assert header == ["a", "b"]
        assert rows == []

    def test_float_precision(self, tmp_path):
        path = tmp_path / "prec.csv"
        emit_csv(str(path), ["x"], [(1.0 / 3.0,)])
        _, _, rows = read_csv(str(path))
        assert float(rows[0][0]) == 1.0 / 3.0


class TestVerbs:
    def test_spectrum_contains_pinned_gap(self, tmp_path):
        out = tmp_path / "gaps.csv"
        rc = main(["spectrum", "--n", "3", "--lambda", "1", "--mu", "1",
                   "--out", str(out)])
        assert rc == EXIT_OK
        comments, header, rows = read_csv(str(out))
        assert header == ["N", "lambda", "mu", "route", "value"]
        table = {r[3]: float(r[4]) for r in rows}
        assert table["first"] == 0.5
        for route in ("second_quadratic", "second_matrix", "second_sector"):
            assert abs(table[route] - 0.75) < 1e-10

    def test_simulate_cooling_asymptote(self, tmp_path):
        out = tmp_path / "cool.csv"
        rc = main(["simulate", "--n", "20", "--mu", "1", "--beta", "1",
                   "--k0", "20", "--replicas", "400", "--horizon", "6",
                   "--samples", "13", "--seed", "11", "--out", str(out)])
        assert rc == EXIT_OK
        _, header, rows = read_csv(str(out))
        assert header == ["time", "K", "T", "m1", "m2", "m3", "m4", "m5", "m6"]
        k_first, k_last = float(rows[0][1]), float(rows[-1][1])
        assert k_first > 15.0
        assert abs(k_last - 10.0) < 1.0  # N/(2 beta) = 10

    def test_simulate_histogram_output(self, tmp_path):
        out = tmp_path / "c.csv"
        hout = tmp_path / "h.csv"
        rc = main(["simulate", "--n", "10", "--mu", "1", "--replicas", "50",
                   "--horizon", "1", "--samples", "3", "--out", str(out),
                   "--histogram-out", str(hout)])
        assert rc == EXIT_OK
        _, header, rows = read_csv(str(hout))
        assert header == ["bin_left", "bin_right", "mass"]
        assert sum(float(r[2]) for r in rows) <= 1.0 + 1e-12

    def test_boltzmann_moment_series(self, tmp_path):
        out = tmp_path / "b.csv"
        rc = main(["boltzmann", "--lambda", "1", "--mu", "1", "--t0", "2",
                   "--horizon", "4", "--samples", "9", "--out", str(out)])
        assert rc == EXIT_OK
        _, header, rows = read_csv(str(out))
        assert header[:3] == ["time", "m1", "m2"]
        t = np.array([float(r[0]) for r in rows])
        m2 = np.array([float(r[2]) for r in rows])
        want = 1.0 + np.exp(-t / 2)
        assert np.max(np.abs(m2 - want)) < 1e-7

    def test_entropy_verb(self, tmp_path):
        out = tmp_path / "e.csv"
        rc = main(["entropy", "--n", "20", "--mu", "1", "--lambda", "1",
                   "--replicas", "120", "--horizon", "1", "--samples", "3",
                   "--out", str(out)])
        assert rc == EXIT_OK
        _, header, rows = read_csv(str(out))
        assert header == ["t", "S_estimate", "S_error", "bound"]
        assert len(rows) == 3

    def test_chaos_verb(self, tmp_path):
        out = tmp_path / "ch.csv"
        rc = main(["chaos", "--mu", "1", "--lambda", "1", "--replicas", "150",
                   "--time", "0.3", "--n-ladder", "4,8", "--out", str(out)])
        assert rc == EXIT_OK
        _, header, rows = read_csv(str(out))
        assert header == ["N", "t", "metric", "stderr"]
        assert [r[0] for r in rows] == ["4", "8"]


class TestExitCodes:
    def test_usage_errors(self, capsys):
        assert main(["entropy", "--n", "10"]) == EXIT_USAGE
        assert main(["spectrum", "--n", "3", "--bogus", "1"]) == EXIT_USAGE
        assert main(["spectrum", "--n", "nope"]) == EXIT_USAGE
        assert main(["frobnicate"]) == EXIT_USAGE
        capsys.readouterr()

    def test_help_is_ok(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "verbs" in capsys.readouterr().out

    def test_io_failure(self, tmp_path, capsys):
        missing_dir = tmp_path / "no" / "such" / "dir" / "x.csv"
        rc = main(["spectrum", "--n", "3", "--mu", "1", "--out", str(missing_dir)])
        assert rc == EXIT_IO
        capsys.readouterr()

    def test_numerical_failure(self, tmp_path, monkeypatch, capsys):
        def boom(params):
            raise AssemblyError("seeded three-route disagreement")

        monkeypatch.setattr(cli, "second_gap", boom)
        rc = main(["spectrum", "--n", "3", "--mu", "1", "--out",
                   str(tmp_path / "x.csv")])
        assert rc == EXIT_NUMERICAL
        capsys.readouterr()

    def test_outdir_env_default(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTDIR_ENV, str(tmp_path))
        rc = main(["spectrum", "--n", "3", "--mu", "1"])
        assert rc == EXIT_OK
        assert (tmp_path / "spectrum.csv").exists()


class TestDeterminism:
    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--n", "12", "--mu", "1", "--lambda", "0.5",
                "--k0", "12", "--replicas", "100", "--horizon", "2",
                "--samples", "5", "--seed", "42"]
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == EXIT_OK
        assert main(args + ["--out", str(b)]) == EXIT_OK
        bytes_a = a.read_bytes().replace(str(a).encode(), b"OUT")
        bytes_b = b.read_bytes().replace(str(b).encode(), b"OUT")
        assert bytes_a == bytes_b

    def test_round_trip_from_emitted_csv(self, tmp_path):
        out = tmp_path / "s.csv"
        args = ["spectrum", "--n", "4", "--lambda", "0.7", "--mu", "1.3",
                "--out", str(out)]
        assert main(args) == EXIT_OK
        comments, _, _ = read_csv(str(out))
        cfg_path = tmp_path / "echo.cfg"
        cfg_path.write_text("\n".join(comments) + "\n")
        cfg = parse_config(["--config", str(cfg_path)])
        assert cfg == parse_config(args)

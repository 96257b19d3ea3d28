from __future__ import annotations

import csv

import pytest
from plumbum import local

from smio.cli import SMIO
from smio.cli.application import EXIT_ERROR, EXIT_OK

TOY = "[experiment]\nsystem = toy_linear\nhorizon = 5\n"
TOY_COLUMNS = [
    "k", "x1", "d1", "x1_lo", "x1_hi", "d1_lo", "d1_hi",
    "x1_plo", "x1_phi", "d1_plo", "d1_phi",
    "width_x", "width_d", "err_x", "err_d", "delta_x", "delta_d",
    "contained", "mu_iterations",
]


def toy_config():
    path = local.cwd / "toy.ini"
    path.write(TOY, encoding="utf-8")
    return str(path)


def read_trace(path):
    lines = path.read(encoding="utf-8").splitlines()
    return lines[0], list(csv.reader(lines[1:]))


def read_abstract(target):
    path = local.cwd / "smio-out" / f"abstract_{target}.csv"
    return list(csv.reader(path.read(encoding="utf-8").splitlines()))


class TestRun:
    def test_run(self, cleandir, capsys):
        _, rc = SMIO.run(
            ["smio", "run", "--config", toy_config(), "--seed", "1", "--out", "out"], exit=False
        )
        assert rc == EXIT_OK
        assert "seed 1: ok" in capsys.readouterr().out
        out = local.cwd / "out"
        assert (out / "stability.ini").is_file()
        assert (out / "model_seed1.txt").read(encoding="utf-8").startswith("# smio learned input model")

        comment, rows = read_trace(out / "trace_seed1.csv")
        assert comment == "# smio trace; noise=uniform; seed=1; system=toy_linear"
        assert rows[0] == TOY_COLUMNS
        assert [row[0] for row in rows[1:]] == ["0", "1", "2", "3", "4", "5"]
        records = [dict(zip(TOY_COLUMNS, row)) for row in rows[1:]]
        assert all(rec["contained"] == "1" for rec in records)
        for rec in records:
            for name in ("x1", "d1"):
                assert float(rec[f"{name}_plo"]) <= float(rec[f"{name}_lo"]) + 1e-12
                assert float(rec[f"{name}_hi"]) <= float(rec[f"{name}_phi"]) + 1e-12
        first = records[0]
        assert float(first["x1_lo"]) == -1.0
        assert float(first["d1_hi"]) == 1.0
        assert first["mu_iterations"] == "0"

    def test_deterministic(self, cleandir):
        config = toy_config()
        for out in ("a", "b"):
            _, rc = SMIO.run(["smio", "run", "--config", config, "--seed", "7", "--out", out], exit=False)
            assert rc == EXIT_OK
        first = (local.cwd / "a" / "trace_seed7.csv").read(encoding="utf-8")
        second = (local.cwd / "b" / "trace_seed7.csv").read(encoding="utf-8")
        assert first == second

    def test_several_seeds(self, cleandir):
        _, rc = SMIO.run(
            ["smio", "run", "--config", toy_config(), "--seed", "1", "--seed", "2", "--horizon", "3"],
            exit=False,
        )
        assert rc == EXIT_OK
        out = local.cwd / "smio-out"
        assert sorted(p.name for p in out.glob("trace_seed*.csv")) == [
            "trace_seed1.csv",
            "trace_seed2.csv",
        ]

    def test_zero_horizon(self, cleandir, capsys):
        _, rc = SMIO.run(["smio", "run", "--config", toy_config(), "--horizon", "0"], exit=False)
        assert rc == EXIT_ERROR
        assert "configuration error" in capsys.readouterr().out

    def test_missing_config(self, cleandir):
        _, rc = SMIO.run(["smio", "run", "--config", "missing.ini"], exit=False)
        assert rc != EXIT_OK


class TestStability:
    def test_learned_mode(self, cleandir, capsys):
        _, rc = SMIO.run(
            ["smio", "stability", "--config", toy_config(), "--stability-mode", "learned"],
            exit=False,
        )
        assert rc == EXIT_OK
        stdout = capsys.readouterr().out
        assert "L* = " in stdout
        assert "certified" in stdout
        assert (local.cwd / "smio-out" / "stability.ini").is_file()

    def test_bad_mode(self, cleandir):
        _, rc = SMIO.run(
            ["smio", "stability", "--config", toy_config(), "--stability-mode", "both"], exit=False
        )
        assert rc != EXIT_OK


class TestAbstract:
    def test_h_after_learning(self, cleandir, capsys):
        _, rc = SMIO.run(
            [
                "smio", "abstract", "--config", toy_config(), "--target", "h",
                "--steps", "3", "--samples", "11", "--axis", "1",
            ],
            exit=False,
        )
        assert rc == EXIT_OK
        assert "abstract_h.csv" in capsys.readouterr().out
        rows = list(csv.reader((local.cwd / "smio-out" / "abstract_h.csv").read(encoding="utf-8").splitlines()))
        assert rows[0] == [
            "s", "q1_lo", "q1_hi", "local1_lo", "local1_hi", "global1_lo", "global1_hi", "oracle1",
        ]
        assert len(rows) == 12
        for row in rows[1:]:
            values = [float(v) for v in row]
            assert values[3] <= values[1] + 1e-9
            assert values[2] <= values[4] + 1e-9

    def test_f_on_box(self, cleandir):
        _, rc = SMIO.run(
            [
                "smio", "abstract", "--config", toy_config(), "--target", "f",
                "--box-lo=-0.5,-0.5", "--box-hi=0.5,0.5", "--zero-slope",
            ],
            exit=False,
        )
        assert rc == EXIT_OK
        rows = list(csv.reader((local.cwd / "smio-out" / "abstract_f.csv").read(encoding="utf-8").splitlines()))
        assert len(rows) == 102

    def test_half_box(self, cleandir):
        _, rc = SMIO.run(
            ["smio", "abstract", "--config", toy_config(), "--box-lo", "0, 0"], exit=False
        )
        assert rc == EXIT_ERROR

    @pytest.mark.parametrize("target", ["f", "g", "h"])
    def test_local_inside_global(self, cleandir, target):
        _, rc = SMIO.run(
            [
                "smio", "abstract", "--config", toy_config(), "--target", target,
                "--steps", "10", "--samples", "21",
            ],
            exit=False,
        )
        assert rc == EXIT_OK
        rows = read_abstract(target)
        for row in rows[1:]:
            q_lo, q_hi, local_lo, local_hi, global_lo, global_hi = (float(v) for v in row[1:7])
            assert global_lo <= local_lo + 1e-8
            assert local_hi <= global_hi + 1e-8
            assert local_lo <= q_lo + 1e-9 and q_hi <= local_hi + 1e-9

    def test_learned_h_contains_oracle(self, cleandir):
        _, rc = SMIO.run(
            [
                "smio", "abstract", "--config", toy_config(), "--target", "h",
                "--steps", "200", "--samples", "51",
            ],
            exit=False,
        )
        assert rc == EXIT_OK
        for row in read_abstract("h")[1:]:
            q_lo, q_hi, oracle = float(row[1]), float(row[2]), float(row[7])
            assert q_lo - 1e-9 <= oracle <= q_hi + 1e-9


class TestDumpModel:
    def test_dump(self, cleandir, capsys):
        _, rc = SMIO.run(
            ["smio", "dump-model", "--config", toy_config(), "--horizon", "4", "--prune"], exit=False
        )
        assert rc == EXIT_OK
        stdout = capsys.readouterr().out
        assert stdout.startswith("# smio learned input model")
        assert "# window none" in stdout


class TestRoot:
    def test_no_subcommand(self, capsys):
        _, rc = SMIO.run(["smio"], exit=False)
        assert rc == EXIT_ERROR

    def test_unknown_subcommand(self, capsys):
        _, rc = SMIO.run(["smio", "frobnicate"], exit=False)
        assert rc == EXIT_ERROR
        assert "frobnicate" in capsys.readouterr().out

import csv
import io
import json
import subprocess
import sys
import time

import pytest

from iclt import cli
from iclt.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED, OutputRecord, main
from iclt.perturbation import lambda_double_prime_zero, lambda_prime_zero


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), buf)
    return code, buf.getvalue()


def record(*argv):
    code, text = run(*argv)
    assert code == EXIT_OK
    lines = text.strip().splitlines()
    assert len(lines) == 1
    return OutputRecord.from_line(lines[0]), lines[0]


class TestCompute:
    @pytest.mark.parametrize(
        "sigma, ell, s2",
        [("10", -0.4887503163943852, 0.0112485762885420), ("1", 0.3941998582469361, 0.3841476218435126)],
    )
    def test_reference_pairs(self, sigma, ell, s2):
        rec, _ = record("compute", "--a", "1", "--b", "-2", "--sigma", sigma)
        assert rec.ell == pytest.approx(ell, rel=1e-12)
        assert rec.s2 == pytest.approx(s2, rel=1e-12)
        assert rec.inputs == {"a": 1.0, "b": -2.0, "sigma": float(sigma)}

    def test_field_order_and_schema(self):
        _, line = record("compute", "--a", "1", "--b", "-2", "--sigma", "1")
        assert list(json.loads(line)) == list(OutputRecord.FIELDS)
        assert line.startswith('{"schema_version": 1,')

    def test_round_trip_bytes(self):
        rec, line = record("compute", "--a", "0.3", "--b", "-1.7", "--sigma", "0.9")
        assert rec.to_line() == line

    def test_a_not_greater_than_b(self, capsys):
        code, text = run("compute", "--a", "1", "--b", "1", "--sigma", "1")
        assert code == EXIT_USAGE and text == ""
        assert "a > b" in capsys.readouterr().err

    def test_missing_flag(self):
        assert run("compute", "--a", "1", "--b", "0")[0] == EXIT_USAGE

    def test_convergence_failure_exit(self):
        assert run("compute", "--a", "0", "--b", "-100", "--sigma", "1")[0] == EXIT_NUMERICAL

    def test_overrides_accepted(self):
        rec, _ = record("compute", "--a", "1", "--b", "-2", "--sigma", "1", "--tol", "1e-10",
                        "--grid", "64", "--series-k", "40")
        assert rec.diagnostics["K"] == 40
        assert rec.ell == pytest.approx(0.3941998582469361, rel=1e-12)

    def test_schema_version_checked(self):
        _, line = record("compute", "--a", "1", "--b", "-2", "--sigma", "1")
        with pytest.raises(ValueError):
            OutputRecord.from_line(line.replace('"schema_version": 1', '"schema_version": 2'))

    def test_module_entry_point(self):
        out = subprocess.run([sys.executable, "-m", "iclt", "compute", "--a", "1", "--b", "-2", "--sigma", "10"],
                             capture_output=True, text=True, check=True).stdout
        assert OutputRecord.from_line(out).ell == pytest.approx(-0.4887503163943852, rel=1e-12)


class TestEig:
    def test_zero_mu(self):
        rec, _ = record("eig", "--c", "-3", "--mu", "0", "--method", "cfrac")
        assert rec.diagnostics["lambda"] == 0.0

    def test_matrix_matches_cfrac(self):
        m, _ = record("eig", "--c", "-3", "--mu", "1e-4", "--method", "matrix", "--n", "40")
        f, _ = record("eig", "--c", "-3", "--mu", "1e-4", "--method", "cfrac")
        assert abs(m.diagnostics["lambda"] - f.diagnostics["lambda"]) <= 1e-12

    def test_derivatives_near_closed_form(self):
        rec, _ = record("eig", "--c", "-0.03", "--mu", "1e-4", "--method", "cfrac")
        assert abs(rec.lambda1 - lambda_prime_zero(-0.03)) <= 1e-8
        assert abs(rec.lambda2 - lambda_double_prime_zero(-0.03)) <= 1e-8

    def test_bad_method(self):
        assert run("eig", "--c", "-3", "--mu", "0.1", "--method", "qr")[0] == EXIT_USAGE


class TestMc:
    ARGS = ("mc", "--a", "1", "--b", "-2", "--sigma", "1", "--dt", "1e-2", "--time", "200",
            "--paths", "4", "--batches", "16", "--seed", "3")

    def test_identical_bytes(self):
        assert run(*self.ARGS) == run(*self.ARGS)

    def test_record_contents(self):
        rec, _ = record(*self.ARGS)
        assert rec.method == "monte-carlo"
        for key in ("z_ell", "z_s2", "ell_se", "s2_se"):
            assert key in rec.diagnostics

    @pytest.mark.parametrize("flag, value", [("--paths", "0"), ("--dt", "-1"), ("--batches", "2")])
    def test_invalid(self, flag, value):
        args = list(self.ARGS)
        args[args.index(flag) + 1] = value
        assert run(*args)[0] == EXIT_USAGE


class TestVerify:
    def test_default_passes(self):
        code, text = run("verify")
        assert code == EXIT_OK, text
        assert "FAIL" not in text

    def test_impossible_tolerance(self):
        code, text = run("verify", "--tol", "1e-30")
        assert code == EXIT_VERIFY_FAILED
        assert "FAIL" in text

    def test_quick_is_fast(self):
        start = time.perf_counter()
        code, _ = run("verify", "--quick")
        assert code == EXIT_OK
        assert time.perf_counter() - start < 5.0


class TestSweep:
    def rows(self, *argv):
        code, text = run("sweep", *argv)
        assert code == EXIT_OK
        reader = csv.reader(io.StringIO(text))
        assert next(reader) == list(cli.SWEEP_HEADER)
        return [[float(v) for v in row] for row in reader]

    def test_contains_reference_row(self):
        rows = self.rows("--a", "1", "--b", "-2", "--sigma-min", "1", "--sigma-max", "10", "--steps", "10")
        assert len(rows) == 10
        last = rows[-1]
        assert last[0] == 10.0
        assert last[2] == pytest.approx(-0.4887503163943852, rel=1e-12)
        assert last[3] == pytest.approx(0.0112485762885420, rel=1e-12)
        assert rows[0][3] == pytest.approx(0.3841476218435126, rel=1e-12)

    def test_single_step(self):
        rows = self.rows("--a", "1", "--b", "-2", "--sigma-min", "2", "--sigma-max", "3", "--steps", "1")
        assert len(rows) == 1 and rows[0][0] == 2.0

    def test_shift_invariance(self):
        base = self.rows("--a", "1", "--b", "-2", "--sigma-min", "1", "--sigma-max", "4", "--steps", "4")
        shifted = self.rows("--a", "2", "--b", "-1", "--sigma-min", "1", "--sigma-max", "4", "--steps", "4")
        for r0, r1 in zip(base, shifted):
            assert r1[2] - r0[2] == pytest.approx(1.0, abs=1e-12)
            assert r1[3] == pytest.approx(r0[3], abs=1e-12)

    @pytest.mark.parametrize(
        "bounds", [("0", "1"), ("-1", "1"), ("2", "2"), ("3", "1")],
    )
    def test_invalid_bounds(self, bounds):
        code, _ = run("sweep", "--a", "1", "--b", "-2", "--sigma-min", bounds[0], "--sigma-max", bounds[1],
                      "--steps", "3")
        assert code == EXIT_USAGE

import contextlib
import csv
import io
import json

import numpy as np
import pytest

from quanco import biogas
from quanco.bench import cli
from quanco.bench.runs import (LONG_HEADER, RUNS_HEADER, SUMMARY_HEADER,
                               TIMING_HEADER, TRACE_HEADER, RunSettings,
                               SweepSpec, execute_run, normcost_curve,
                               run_summary, sweep, trace_csv_text)
from quanco.bench import report
from quanco.trace import IterationRecord, OptimizationTrace


def small_spec(**overrides):
    base = dict(variants=("cone",), k_values=(3,), algorithms=("trn", "quanco"),
                seeds=(0, 1), iterations=5)
    base.update(overrides)
    return SweepSpec(**base)


def run_cli(argv):
    """Invoke the CLI in-process, capturing its streams and exit code."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            code = cli.main(argv)
        except SystemExit as exc:  # argparse errors
            code = exc.code
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# File formats are frozen


def test_csv_headers_are_frozen():
    assert TRACE_HEADER == "iter,f,rho,accepted,r_norm,t_deriv_us,t_build_us,t_solve_us"
    assert LONG_HEADER == "variant,K,algo,solver,M,seed,iter,f,normcost"
    assert TIMING_HEADER == "variant,K,algo,solver,M,seed,iter,t_deriv_us,t_build_us,t_solve_us"
    assert RUNS_HEADER == "variant,K,algo,solver,M,seed,status,error"
    assert SUMMARY_HEADER == "variant,K,algo,solver,M,n_seeds,mean_final_normcost"


def test_trace_csv_golden():
    trace = OptimizationTrace(f_initial=1.0)
    trace.records.append(IterationRecord(
        k=0, f=0.5, rho=1.25, accepted=True, radius_max=0.5, step_norm=0.1,
        time_derivatives=1e-6, time_qubo_build=2e-6, time_solver=3.5e-6))
    trace.records.append(IterationRecord(
        k=1, f=0.5, rho=-0.5, accepted=False, radius_max=0.5, step_norm=0.2,
        time_derivatives=0.0, time_qubo_build=0.0, time_solver=1e-6))
    expected = (
        "iter,f,rho,accepted,r_norm,t_deriv_us,t_build_us,t_solve_us\n"
        "0,0.5,1.25,1,0.5,1.0,2.0,3.5\n"
        "1,0.5,-0.5,0,0.5,0.0,0.0,1.0\n"
    )
    assert trace_csv_text(trace) == expected


# ---------------------------------------------------------------------------
# Settings and summaries


def test_run_settings_validation_and_labels():
    with pytest.raises(ValueError, match="algorithm"):
        RunSettings(algo="newton")
    with pytest.raises(ValueError, match="iterations"):
        RunSettings(algo="trn", iterations=0)
    trn = RunSettings(algo="trn")
    assert (trn.solver_label, trn.bits_label) == ("none", 0)
    qa = RunSettings(algo="quanco", solver="sa", bits_per_dim=2)
    assert (qa.solver_label, qa.bits_label) == ("sa", 2)


def test_run_summary_contents():
    problem = biogas.generate_problem(
        biogas.default_generator_config("cone", seed=1), 3, "cone")
    _, _, f_min = biogas.true_minimum(problem)
    settings = RunSettings(algo="quanco", iterations=5)
    trace = execute_run(problem, settings, seed=1)
    doc = run_summary("p.json", problem, settings, 1, trace, f_min)
    assert doc["schema"] == "quanco-run/1"
    assert doc["K"] == 3 and doc["M"] == 1 and doc["solver"] == "exact"
    assert doc["iterations"] == len(trace.records)
    assert doc["normalized_cost_defined"] in (True, False)
    assert set(doc["time_seconds"]) == {"derivatives", "qubo_build", "solver"}
    json.dumps(doc)  # must be serialisable as-is


def test_normcost_curve_degenerate_is_zero():
    trace = OptimizationTrace(f_initial=-2.0)
    trace.records.append(IterationRecord(
        k=0, f=-2.0, rho=1.0, accepted=True, radius_max=0.5, step_norm=0.0,
        time_derivatives=0.0, time_qubo_build=0.0, time_solver=0.0))
    np.testing.assert_array_equal(normcost_curve(trace, f_min=-2.0), [0.0])


# ---------------------------------------------------------------------------
# Sweeps


def test_sweep_spec_validation():
    with pytest.raises(ValueError, match="non-empty"):
        small_spec(seeds=())
    with pytest.raises(ValueError, match="distinct"):
        small_spec(seeds=(0, 0))
    with pytest.raises(ValueError, match="variant"):
        small_spec(variants=("linear",))
    with pytest.raises(ValueError, match="algorithm"):
        small_spec(algorithms=("bfgs",))
    with pytest.raises(ValueError, match=">= 1"):
        small_spec(k_values=(0,))
    with pytest.raises(ValueError, match="schema"):
        SweepSpec.from_dict({"schema": "quanco-sweep/2"})


def test_sweep_spec_roundtrip_and_job_order():
    spec = small_spec(k_values=(2, 3))
    assert SweepSpec.from_dict(spec.to_dict()) == spec
    jobs = spec.jobs()
    assert len(jobs) == 2 * 2 * 2
    keys = [(j["k"], j["algo"], j["seed"]) for j in jobs]
    assert keys == sorted(keys, key=lambda t: (t[0], ("trn", "quanco").index(t[1]), t[2]))


def test_sweep_outputs_and_aggregation(tmp_path):
    out = tmp_path / "sweep"
    sweep(small_spec(), out)
    for name in ("long.csv", "timing.csv", "runs.csv", "summary.csv",
                 "sweep.json"):
        assert (out / name).is_file()
    long_rows = list(csv.DictReader(open(out / "long.csv")))
    runs_rows = list(csv.DictReader(open(out / "runs.csv")))
    summary_rows = list(csv.DictReader(open(out / "summary.csv")))
    assert len(runs_rows) == 4  # 2 algos x 2 seeds
    assert all(r["status"] == "ok" for r in runs_rows)
    # summary means must match the long-format finals exactly
    finals = {}
    for rec in long_rows:
        key = (rec["algo"], rec["seed"])
        finals[key] = float(rec["normcost"])  # last per run wins
    for rec in summary_rows:
        algo = rec["algo"]
        vals = [v for (a, _), v in finals.items() if a == algo]
        assert int(rec["n_seeds"]) == 2
        assert float(rec["mean_final_normcost"]) == pytest.approx(
            sum(vals) / len(vals), abs=1e-15)
    spec_doc = json.loads((out / "sweep.json").read_text())
    assert spec_doc["schema"] == "quanco-sweep/1"


def test_parallel_sweep_is_byte_identical(tmp_path):
    spec = small_spec(seeds=(0, 1, 2), iterations=4)
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    sweep(spec, serial, workers=1)
    sweep(spec, parallel, workers=2)
    for name in ("long.csv", "runs.csv", "summary.csv", "sweep.json"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_sweep_records_failed_runs(tmp_path):
    # a generator aimed at margin ~ 1 never yields an acceptable feedstock
    bad = {"cone": {"mean": [40.0, 4.4, 0.59, -2.6],
                    "covariance": (0.0001 * np.eye(4)).tolist()}}
    spec = small_spec(algorithms=("trn",), seeds=(0,), generator=bad)
    out = tmp_path / "sweep"
    sweep(spec, out)
    rows = list(csv.DictReader(open(out / "runs.csv")))
    assert rows[0]["status"] == "failed"
    assert "DegenerateGeneratorError" in rows[0]["error"]
    assert list(csv.DictReader(open(out / "long.csv"))) == []
    assert list(csv.DictReader(open(out / "summary.csv"))) == []


# ---------------------------------------------------------------------------
# Report


def write_report_fixture(out, quanco_mean=0.1, trn_mean=0.3):
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(
        "variant,K,algo,solver,M,n_seeds,mean_final_normcost\n"
        f"cone,20,quanco,exact,1,2,{quanco_mean}\n"
        f"cone,20,trn,none,0,2,{trn_mean}\n")
    long_lines = ["variant,K,algo,solver,M,seed,iter,f,normcost"]
    timing_lines = ["variant,K,algo,solver,M,seed,iter,t_deriv_us,t_build_us,t_solve_us"]
    for algo, solver, m, final in (("quanco", "exact", 1, quanco_mean),
                                   ("trn", "none", 0, trn_mean)):
        for seed in (0, 1):
            for it, f_val in enumerate((1.0, 0.5, final)):
                long_lines.append(
                    f"cone,20,{algo},{solver},{m},{seed},{it},{f_val},{f_val}")
                timing_lines.append(
                    f"cone,20,{algo},{solver},{m},{seed},{it},10.0,1.0,5.0")
    (out / "long.csv").write_text("\n".join(long_lines) + "\n")
    (out / "timing.csv").write_text("\n".join(timing_lines) + "\n")


def test_report_passes_on_correct_ordering(tmp_path):
    write_report_fixture(tmp_path / "s")
    rows = report.evaluate(tmp_path / "s")
    verdicts = {name: verdict for name, _, _, verdict in rows}
    assert verdicts["A7 quality ordering (cone, K=20)"] == "PASS"
    assert verdicts["A7 monotone incumbent"] == "PASS"
    assert verdicts["A7 normalised cost range"] == "PASS"
    assert verdicts["A9 determinism"] == "SKIP"
    text = report.render(rows)
    assert "A7 quality ordering (cone, K=20)" in text
    assert "PASS" in text


def test_report_fails_on_reversed_ordering(tmp_path):
    write_report_fixture(tmp_path / "s", quanco_mean=0.4, trn_mean=0.2)
    rows = report.evaluate(tmp_path / "s")
    assert any(v == "FAIL" for _, _, _, v in rows)


def test_report_missing_directory_raises(tmp_path):
    with pytest.raises(report.ReportError, match="missing"):
        report.evaluate(tmp_path / "nothing")


# ---------------------------------------------------------------------------
# CLI


def test_cli_generate_run_and_report(tmp_path):
    problem_path = tmp_path / "p.json"
    code, out, _ = run_cli(["generate", "--variant", "cone", "--k", "4",
                            "--seed", "3", "--out", str(problem_path)])
    assert code == 0
    assert "true minimum" in out
    assert problem_path.is_file()

    first = problem_path.read_bytes()
    run_cli(["generate", "--variant", "cone", "--k", "4", "--seed", "3",
             "--out", str(problem_path)])
    assert problem_path.read_bytes() == first  # byte-deterministic

    run_dir = tmp_path / "run"
    code, out, _ = run_cli(["run", str(problem_path), "--algo", "quanco",
                            "--iters", "8", "--out", str(run_dir)])
    assert code == 0
    assert (run_dir / "trace.csv").read_text().startswith(TRACE_HEADER)
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["schema"] == "quanco-run/1"
    assert summary["algo"] == "quanco"

    code, out, _ = run_cli(["run", str(problem_path), "--algo", "trn",
                            "--iters", "8", "--out", str(tmp_path / "trn")])
    assert code == 0


def test_cli_rejects_bad_arguments(tmp_path):
    code, _, err = run_cli(["generate", "--variant", "cone", "--k", "0",
                            "--out", str(tmp_path / "p.json")])
    assert code == 2
    assert "--k must be >= 1" in err
    code, _, err = run_cli(["sweep", "--spec", str(tmp_path / "missing.json"),
                            "--out", str(tmp_path / "s")])
    assert code == 2
    assert "bad sweep spec" in err


def test_cli_oversize_exact_solver_suggests_sa(tmp_path):
    problem_path = tmp_path / "p.json"
    run_cli(["generate", "--variant", "exponential", "--k", "6", "--seed", "0",
             "--out", str(problem_path)])
    code, _, err = run_cli(["run", str(problem_path), "--algo", "quanco",
                            "--iters", "2", "--exact-max-bits", "4",
                            "--out", str(tmp_path / "r")])
    assert code == 1
    assert "exceeds the exact enumeration cap" in err
    assert "--solver sa" in err


def test_cli_sweep_and_report_roundtrip(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(small_spec(seeds=(0,)).to_dict()))
    sweep_dir = tmp_path / "sweep"
    code, out, _ = run_cli(["sweep", "--spec", str(spec_path),
                            "--out", str(sweep_dir)])
    assert code == 0
    assert "swept 2 runs" in out
    code, out, _ = run_cli(["report", "--dir", str(sweep_dir)])
    # exit depends on the tiny sweep's ordering; the table must render either way
    assert code in (0, 1)
    assert "A7" in out

    code, _, err = run_cli(["report", "--dir", str(tmp_path / "empty")])
    assert code == 1
    assert "missing" in err

"""Benchmark tooling: problem generation, runs, sweeps and reports."""
from .runs import (RunSettings, SweepSpec, execute_run, normcost_curve,
                   run_summary, sweep, trace_csv_text)

__all__ = [
    "RunSettings", "SweepSpec", "execute_run", "normcost_curve",
    "run_summary", "sweep", "trace_csv_text",
]

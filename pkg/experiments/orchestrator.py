"""
Experiment Orchestrator - runs every (method x seed) cell of an experiment,
joins the traces and writes summaries and diagnostics
"""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

import config
from dataio import write_frame, write_trace
from optim import (
    DivergenceError, RunTrace, ScheduleError, convex_regret_bound, global_loss_and_grad,
    nonconvex_gradient_bound, regret, run, strongly_convex_regret_bound, theorem1_check,
)
from .federation import Federation, build_federation, run_config_for
from .settings import ExperimentConfig, MethodSpec, config_hash

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["method", "T", "mean_suboptimality", "std", "mean_grad_sq", "diverged"]


@dataclass
class CellResult:
    """Outcome of one (method, seed) run"""

    method: str
    seed: int
    trace: Optional[RunTrace]
    diverged_at: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.trace is None

    @property
    def suboptimality(self) -> float:
        if self.trace is None or self.trace.suboptimality is None:
            return math.nan
        return self.trace.suboptimality


class ExperimentOrchestrator:
    """
    Coordinates the cells of one experiment

    Cells run in parallel on a bounded thread pool; every cell owns its walk
    state and output files, and summaries are written after the full join.
    """

    def __init__(self, cfg: ExperimentConfig, out_dir=None, federation: Optional[Federation] = None):
        self.cfg = cfg
        self.methods: List[MethodSpec] = cfg.resolved_methods()
        self.out_dir = Path(out_dir or cfg.out)
        self.federation = federation or build_federation(cfg)
        self.config_hash = config_hash(cfg)
        self.results: List[CellResult] = []

    # ------------------------------------------------------------------------
    # execution
    # ------------------------------------------------------------------------

    def run_cell(self, method: MethodSpec, seed: int, raise_divergence: bool = False) -> CellResult:
        rc = run_config_for(self.federation, self.cfg, method, seed)
        try:
            trace = run(rc, x_star=self.federation.x_star)
        except DivergenceError as e:
            if raise_divergence:
                raise
            logger.warning("%s seed %d diverged at step %d", method.label, seed, e.step)
            return CellResult(method.label, seed, None, diverged_at=e.step)
        return CellResult(method.label, seed, trace)

    def execute_compare(self, write: bool = True) -> List[CellResult]:
        """Run every (method x seed) cell, then write traces and summaries"""
        print("🚀 Starting comparison...")
        print(f"🔢 Methods: {', '.join(m.label for m in self.methods)}")
        print(f"🎲 Seeds: {len(self.cfg.seeds)}   T: {self.cfg.T}   jobs: {self.cfg.jobs}")
        print("\n" + "=" * 70)

        cells = [(m, s) for m in self.methods for s in self.cfg.seeds]
        results: Dict[Tuple[str, int], CellResult] = {}

        print(f"\n⚡ Executing {len(cells)} cells...")
        with ThreadPoolExecutor(max_workers=self.cfg.jobs) as executor:
            future_to_cell = {
                executor.submit(self.run_cell, m, s): (m.label, s)
                for m, s in cells
            }
            for future in as_completed(future_to_cell):
                label, seed = future_to_cell[future]
                try:
                    result = future.result()
                except Exception as e:
                    print(f"✗ {label} seed {seed} failed: {str(e)}")
                    raise
                results[(label, seed)] = result
                status = "diverged" if result.diverged else "completed"
                logger.debug("%s seed %d %s", label, seed, status)

        order = {m.label: i for i, m in enumerate(self.methods)}
        self.results = sorted(results.values(), key=lambda r: (order[r.method], r.seed))
        print("✅ All cells completed!")
        print("\n" + "=" * 70)

        if write:
            self.write_outputs()
        return self.results

    def execute_single(self, method: MethodSpec, seed: int, write: bool = True) -> CellResult:
        """One cell; divergence propagates to the caller"""
        result = self.run_cell(method, seed, raise_divergence=True)
        self.results = [result]
        if write:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            self._write_cell(result)
        return result

    # ------------------------------------------------------------------------
    # outputs
    # ------------------------------------------------------------------------

    def sidecar_extra(self) -> dict:
        return {
            "config": self.cfg.model_dump(mode="json"),
            "config_hash": self.config_hash,
            "federation": self.federation.describe(),
        }

    def _cell_path(self, result: CellResult) -> Path:
        return self.out_dir / f"{result.method}_seed{result.seed}.csv"

    def bound_for(self, trace: RunTrace) -> Optional[dict]:
        """
        The guarantee matching the loss, evaluated on the realized steps

        None when x* or the derived constants are unavailable. The non-convex
        bound assumes a constant step and is skipped for decaying schedules.
        """
        fed = self.federation
        dc = fed.constants
        if dc is None or fed.f_star is None:
            return None
        f_gap = global_loss_and_grad(fed.loss, fed.shards, fed.x0)[0] - fed.f_star
        r_sq = fed.estimate.R_sq
        try:
            if not fed.loss.convex:
                if not np.all(trace.etas == trace.etas[0]):
                    return None
                kind = "nonconvex_gradient"
                value = nonconvex_gradient_bound(dc, float(trace.etas[0]), trace.T, f_gap)
            elif fed.loss.strong_convexity_mu_f > 0.0:
                kind = "strongly_convex_regret"
                value = strongly_convex_regret_bound(dc, trace.etas, r_sq, f_gap,
                                                     fed.loss.strong_convexity_mu_f)
            else:
                kind = "convex_regret"
                value = convex_regret_bound(dc, trace.etas, r_sq, f_gap)
        except (ScheduleError, ValueError) as e:
            logger.debug("no bound for this trace: %s", e)
            return None
        return {"kind": kind, "value": float(value)}

    def _write_cell(self, result: CellResult):
        if result.trace is not None:
            extra = {**self.sidecar_extra(), "bound": self.bound_for(result.trace)}
            write_trace(result.trace, self._cell_path(result), extra=extra)

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for m in self.methods:
            cells = [r for r in self.results if r.method == m.label]
            subopt = np.array([r.suboptimality for r in cells])
            finite = subopt[np.isfinite(subopt)]
            grads = [r.trace.mean_grad_sq() for r in cells if r.trace is not None]
            rows.append({
                "method": m.label,
                "T": self.cfg.T,
                "mean_suboptimality": float(finite.mean()) if finite.size else math.nan,
                "std": float(finite.std(ddof=1)) if finite.size > 1 else math.nan,
                "mean_grad_sq": float(np.mean(grads)) if grads else math.nan,
                "diverged": sum(r.diverged for r in cells),
            })
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def cells_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "method": r.method,
            "seed": r.seed,
            "suboptimality": r.suboptimality,
            "f_T": r.trace.f_values[-1] if r.trace is not None else math.nan,
            "regret": regret(r.trace) if r.trace is not None and r.trace.regret_terms is not None else math.nan,
            "diverged": int(r.diverged),
        } for r in self.results])

    def curve_frame(self) -> pd.DataFrame:
        """Seed-mean f(x_t) per method at the evaluated steps"""
        cols = {}
        for m in self.methods:
            traces = [r.trace for r in self.results if r.method == m.label and r.trace is not None]
            if traces:
                cols[m.label] = np.mean([tr.f_values for tr in traces], axis=0)
        frame = pd.DataFrame({"t": np.arange(1, self.cfg.T + 1), **cols})
        evaluated = np.isfinite(frame.drop(columns="t").to_numpy()).any(axis=1)
        return frame[evaluated].reset_index(drop=True)

    def theorem1_reports(self) -> Dict[str, dict]:
        fed = self.federation
        reports = {}
        if fed.f_star is None:
            return reports
        for m in self.methods:
            traces = [r.trace for r in self.results if r.method == m.label and r.trace is not None]
            if len(traces) < 2:
                continue
            reports[m.label] = theorem1_check(traces, fed.transition, fed.x_star, fed.f_star).to_dict()
        return reports

    def write_outputs(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for result in self.results:
            self._write_cell(result)
        write_frame(self.summary_frame(), self.out_dir / "summary.csv")
        write_frame(self.cells_frame(), self.out_dir / "cells.csv")
        write_frame(self.curve_frame(), self.out_dir / "curves.csv")
        for label, report in self.theorem1_reports().items():
            (self.out_dir / f"theorem1_{label}.json").write_text(
                json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        (self.out_dir / "experiment.json").write_text(
            json.dumps({"artifact_version": config.ARTIFACT_VERSION, **self.sidecar_extra()},
                       indent=2, sort_keys=True) + "\n", encoding="utf-8")

    def format_summary(self) -> str:
        """
        Format the summary for console output
        """
        output = []
        output.append("\n" + "=" * 70)
        output.append(f"📊 SUMMARY - {self.cfg.name}")
        output.append("=" * 70 + "\n")

        fed = self.federation
        output.append("📋 FEDERATION")
        output.append("-" * 70)
        output.append(f"Topology: {fed.graph.topology} (n={fed.graph.n}, {fed.transition.weighting})")
        output.append(f"rho: {fed.report.rho:.6g}   C_P: {fed.report.c_p}   tau: {fed.tau}")
        output.append(f"Loss: {fed.loss.kind}   Mirror map: {fed.mirror.kind}")
        output.append(f"f*: {fed.f_star}")
        output.append("\n")

        output.append("📈 METHODS")
        output.append("-" * 70)
        for row in self.summary_frame().itertuples(index=False):
            flag = f"   ⚠️ diverged: {row.diverged}" if row.diverged else ""
            output.append(f"{row.method:<24} subopt={row.mean_suboptimality:.6g} "
                          f"(std {row.std:.3g})  grad_sq={row.mean_grad_sq:.6g}{flag}")
        output.append("\n")
        output.append("=" * 70)
        return "\n".join(output)

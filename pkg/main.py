#!/usr/bin/env python3
"""
Markov-chain mirror descent over a data federation
1. spectrum - chain constants of a topology
2. run      - one (method, seed) walk, one trace
3. compare  - every (method x seed) cell, summary and diagnostics
4. figure   - preset experiment families
5. fetch    - download a dataset from the manifest
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import config
from dataio import check_statistics, fetch_dataset, load_dataset, write_frame
from experiments import ExperimentOrchestrator, figure_configs, load_experiment, sweep_frame
from network import (
    MixingError, build_topology, empirical_mixing_time, spectral_report, transition_for,
    validate_chain,
)
from optim import DivergenceError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

TOPOLOGY_CHOICES = ["complete", "star", "er", "ws"]
METHOD_CHOICES = [
    "marchon", "marchon_convex", "marchon_strongly_convex", "marchon_nonconvex",
    "mcgd", "markov_sgd", "mcsgd_emd", "constant", "baseline_sgd",
]


# ============================================================================
# ARGUMENTS
# ============================================================================

def _topology_args(p: argparse.ArgumentParser, required: bool = False):
    p.add_argument("--topology", choices=TOPOLOGY_CHOICES, required=required)
    p.add_argument("--n", type=int, required=required, help="node count")
    p.add_argument("--p", type=float, help="edge probability (er)")
    p.add_argument("--k", type=int, help="ring-lattice degree (ws)")
    p.add_argument("--beta", type=float, help="rewiring probability (ws)")
    p.add_argument("--graph-seed", type=int, help="seed of random topologies")
    p.add_argument("--weighting", choices=["metropolis", "simple"])


def _experiment_args(p: argparse.ArgumentParser):
    p.add_argument("config", nargs="?", help="experiment JSON; flags override its keys")
    _topology_args(p)
    p.add_argument("--loss", choices=["logistic", "logistic-literal", "ridge", "lsq", "nonconvex"])
    p.add_argument("--lam", type=float, help="regularization weight (ridge, nonconvex)")
    p.add_argument("--map", choices=["euclidean", "entropy"])
    p.add_argument("--method", choices=METHOD_CHOICES)
    p.add_argument("--q", type=float, help="mcgd exponent, 1/2 < q < 1")
    p.add_argument("--T", type=int, help="number of steps")
    p.add_argument("--stride", type=int, help="evaluate f and ||grad f||^2 every stride steps")
    p.add_argument("--dataset", help="synthetic, a manifest name, or a libsvm path")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Markov-chain mirror descent simulator over a data federation",
    )
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("spectrum", help="spectral constants of a chain")
    _topology_args(sp, required=True)
    sp.add_argument("--epsilon", type=float, default=0.25, help="mixing-time threshold")
    sp.add_argument("--out", help="write spectrum.json into this directory")

    rp = sub.add_parser("run", help="single (method, seed) run")
    _experiment_args(rp)
    rp.add_argument("--seed", type=int, help="master seed")

    cp = sub.add_parser("compare", help="every (method x seed) cell")
    _experiment_args(cp)
    cp.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    cp.add_argument("--jobs", type=int, help="parallel cells")

    fp = sub.add_parser("figure", help="preset experiment families")
    fp.add_argument("figure", choices=["2", "3", "4"])
    fp.add_argument("--T", type=int, default=2000)
    fp.add_argument("--seeds", type=int, default=config.DEFAULT_SEED_COUNT)
    fp.add_argument("--jobs", type=int, default=config.JOBS)
    fp.add_argument("--dataset", default=None)
    fp.add_argument("--out", default=config.OUTPUT_DIR)

    dp = sub.add_parser("fetch", help="download a manifest dataset")
    dp.add_argument("name")
    dp.add_argument("--dest", default=config.DATA_DIR)
    return parser


def _dataset_override(value: str) -> Dict[str, Any]:
    if value == "synthetic":
        return {"source": "synthetic"}
    if Path(value).exists():
        return {"source": "file", "path": value}
    return {"source": "manifest", "name": value}


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Config keys set by flags; unset flags leave the file's values alone"""
    out: Dict[str, Any] = {}
    topo = {
        "kind": args.topology, "n": args.n, "p": args.p, "k": args.k,
        "beta": args.beta, "seed": args.graph_seed, "weighting": args.weighting,
    }
    topo = {k: v for k, v in topo.items() if v is not None}
    if topo:
        out["topology"] = topo
    loss = {k: v for k, v in {"kind": args.loss, "lam": args.lam}.items() if v is not None}
    if loss:
        out["loss"] = loss
    if args.map:
        out["mirror"] = args.map
    if args.method:
        if args.method == "baseline_sgd":
            method = {"algorithm": "baseline_sgd", "schedule": {"kind": "marchon"}}
        else:
            method = {"schedule": {"kind": args.method}}
        if args.q is not None:
            method["schedule"]["q"] = args.q
        out["methods"] = [method]
    if args.T is not None:
        out["T"] = args.T
    if args.stride is not None:
        out["stride"] = args.stride
    if args.dataset:
        out["dataset"] = _dataset_override(args.dataset)
    if args.out:
        out["out"] = args.out
    if getattr(args, "seeds", None) is not None:
        out["seeds"] = list(range(args.seeds))
    if getattr(args, "jobs", None) is not None:
        out["jobs"] = args.jobs
    return out


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_spectrum(args: argparse.Namespace) -> int:
    kind = {"er": "erdos_renyi", "ws": "watts_strogatz"}.get(args.topology, args.topology)
    graph = build_topology(kind, args.n, seed=args.graph_seed or 0, p=args.p, k=args.k, beta=args.beta)
    p = transition_for(graph, args.weighting or "metropolis")
    validation = validate_chain(p)
    report = spectral_report(p)
    try:
        mixing: Optional[int] = empirical_mixing_time(p, args.epsilon)
    except MixingError as e:
        print(f"⚠️  {e}", file=sys.stderr)
        mixing = None

    doc = {
        "topology": kind,
        "n": args.n,
        "weighting": p.weighting,
        **report.to_json(),
        **validation.to_dict(),
        "empirical_mixing_time": mixing,
        "epsilon": args.epsilon,
        "artifact_version": config.ARTIFACT_VERSION,
    }
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "spectrum.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _banner(title: str, cfg):
    print("\n" + "=" * 70)
    print(f"🚀 {title}")
    print("=" * 70)
    print(f"Experiment: {cfg.name}")
    print(f"Topology: {cfg.topology.kind} n={cfg.topology.n} ({cfg.topology.weighting})")
    print(f"Loss: {cfg.loss.kind}   Map: {cfg.mirror}   T: {cfg.T}")
    print("=" * 70 + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    overrides = _overrides(args)
    if args.seed is not None:
        overrides["seeds"] = [args.seed]
    cfg = load_experiment(args.config, overrides)
    _banner("SINGLE RUN", cfg)

    print("📋 STEP 1/2: Building the federation...")
    print("-" * 70)
    orchestrator = ExperimentOrchestrator(cfg)
    print("✅ Federation ready\n")

    method = orchestrator.methods[0]
    seed = cfg.seeds[0]
    print(f"🤖 STEP 2/2: Running {method.label} with seed {seed}...")
    print("-" * 70)
    try:
        result = orchestrator.execute_single(method, seed)
    except DivergenceError as e:
        print(f"❌ {e}")
        return EXIT_DIVERGED

    trace = result.trace
    print(f"✅ f(x_bar_T) = {trace.f_bar:.10g}")
    if trace.suboptimality is not None:
        print(f"   suboptimality = {trace.suboptimality:.6g}")
    print(f"\n💾 Trace saved to {orchestrator.out_dir / f'{method.label}_seed{seed}.csv'}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_experiment(args.config, _overrides(args))
    _banner("COMPARISON", cfg)
    orchestrator = ExperimentOrchestrator(cfg)
    results = orchestrator.execute_compare()
    print(orchestrator.format_summary())
    diverged = sum(r.diverged for r in results)
    if diverged:
        print(f"⚠️  {diverged} cell(s) diverged; recorded in the summary")
    print(f"\n💾 Outputs saved to {orchestrator.out_dir}")
    return EXIT_OK


def cmd_figure(args: argparse.Namespace) -> int:
    configs = figure_configs(args.figure, T=args.T, seeds=range(args.seeds),
                             dataset=args.dataset, out=args.out)
    summaries = {}
    for i, cfg in enumerate(configs, start=1):
        cfg = cfg.model_copy(update={"jobs": args.jobs})
        print(f"📋 STEP {i}/{len(configs)}: {cfg.name}")
        print("-" * 70)
        orchestrator = ExperimentOrchestrator(cfg)
        orchestrator.execute_compare()
        print(orchestrator.format_summary())
        if args.figure == "3":
            summaries[cfg.topology.n] = orchestrator.summary_frame()
        else:
            summaries[cfg.topology.kind] = orchestrator.summary_frame()

    if args.figure != "2":
        key = "n" if args.figure == "3" else "topology"
        path = write_frame(sweep_frame(summaries, key), Path(args.out) / f"fig{args.figure}.csv")
        print(f"\n💾 Sweep summary saved to {path}")
    return EXIT_OK


def cmd_fetch(args: argparse.Namespace) -> int:
    try:
        path = fetch_dataset(args.name, args.dest)
    except KeyError as e:
        print(f"❌ {e.args[0]}")
        return EXIT_USAGE
    print(f"✅ {args.name} saved to {path}")
    stats = check_statistics(args.name, load_dataset(path, normalized=False))
    mark = "✅" if stats["ok"] else "⚠️ "
    print(f"{mark} rows={stats['rows']} (expected {stats['expected_rows']}), "
          f"features={stats['features']} (expected {stats['expected_features']})")
    return EXIT_OK


COMMANDS = {
    "spectrum": cmd_spectrum,
    "run": cmd_run,
    "compare": cmd_compare,
    "figure": cmd_figure,
    "fetch": cmd_fetch,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(level=args.log_level.upper(),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        return COMMANDS[args.command](args)
    except ValueError as e:
        # pydantic's ValidationError is a ValueError too
        print(f"❌ Invalid configuration: {str(e)}")
        return EXIT_USAGE
    except Exception as e:
        print(f"\n❌ Error during {args.command}: {str(e)}")
        import traceback
        traceback.print_exc()
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: detect, bisect, synth, and eval subcommands.

Exit codes: 0 success, 1 usage error, 2 input error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bisection import BisectConfig, recursive_bisect
from .community import CONDITIONAL_MEAN, WEIGHTED_SUM, Partition, modularity
from .graphs import BINARY, COUNT, Graph, GraphError, parse_edge_list, parse_gml
from .impulses import (
    INSTANTANEOUS,
    SEQUENTIAL,
    SpreadConfig,
    SpreadError,
    clustered_state,
    synthesize_network,
)
from .mcmc import McmcConfig
from .metrics import MetricError, adjusted_rand_index, rand_index
from .model import ModelConfig
from .pipeline import DetectConfig, detect

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def load_graph(path: str, mode: str) -> Graph:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    text = p.read_text()
    if p.suffix.lower() == ".gml":
        return parse_gml(text, mode=mode)
    return parse_edge_list(text, mode=mode)


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Pull --config out of argv and install its values as parser defaults."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file argument")
    values = _read_config_file(argv[i + 1])
    defaults = {}
    for action in parser._actions:
        if action.dest in values:
            val = values[action.dest]
            defaults[action.dest] = action.type(val) if action.type else val
    parser.set_defaults(**defaults)
    return argv[:i] + argv[i + 2 :]


def _partition_doc(g: Graph, part: Partition, q: float) -> dict:
    return {
        "assignment": {g.label_of(v): int(part.assignment[v]) for v in range(g.n)},
        "k": part.k,
        "modularity": q,
    }


def _write_outputs(out: Path, manifest: dict, files: dict[str, str]):
    out.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        (out / name).write_text(content)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _manifest(command: str, params: dict) -> dict:
    return {
        "command": command,
        "parameters": params,
        "versions": {
            "spreadcomm": __version__,
            "numpy": np.__version__,
        },
    }


def _add_common_mcmc_args(sub):
    sub.add_argument("--iterations", type=int, default=3000)
    sub.add_argument("--burn-in", type=int, default=1000)
    sub.add_argument("--thinning", type=int, default=5)
    sub.add_argument("--step", type=float, default=1.2, help="local proposal half-width (rad)")
    sub.add_argument("--jump-prob", type=float, default=0.2)


def build_parser() -> _Parser:
    parser = _Parser(prog="spreadcomm",
                     description="Community detection from simulated information spreads")
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="command", required=True)

    det = subs.add_parser("detect", help="multiple-splitting detection pipeline")
    det.add_argument("--input", required=True)
    det.add_argument("--mode", choices=[BINARY, COUNT], default=BINARY)
    det.add_argument("--impulses", type=int, default=200, help="number of spreads N")
    det.add_argument("--size", type=int, default=None, help="spread-set size budget")
    det.add_argument("--max-steps", type=int, default=None)
    det.add_argument("--sharpness-k", type=int, default=1)
    det.add_argument("--lam", type=float, default=1.0)
    det.add_argument("--seed", type=int, default=0)
    det.add_argument("--k", type=int, default=None, help="force this many communities")
    det.add_argument("--threads", type=int, default=1)
    det.add_argument("--point-estimate", action="store_true",
                     help="use the final sample instead of the posterior mean")
    det.add_argument("--literal-aggregation", action="store_true",
                     help="use the unnormalized sum-of-products aggregation")
    det.add_argument("--out", required=True)
    det.add_argument("--config", help="key=value file supplying defaults")
    _add_common_mcmc_args(det)

    bis = subs.add_parser("bisect", help="recursive binary-splitting detection")
    bis.add_argument("--input", required=True)
    bis.add_argument("--mode", choices=[BINARY, COUNT], default=BINARY)
    bis.add_argument("--sharpness-k", type=int, default=4)
    bis.add_argument("--max-group-size", type=int, default=8)
    bis.add_argument("--lam", type=float, default=1.0)
    bis.add_argument("--seed", type=int, default=0)
    bis.add_argument("--out", required=True)
    bis.add_argument("--config", help="key=value file supplying defaults")
    _add_common_mcmc_args(bis)

    syn = subs.add_parser("synth", help="generate a synthetic graph from planted angles")
    syn.add_argument("--clusters", required=True,
                     help="comma-separated cluster sizes, e.g. 3,3,3,3")
    syn.add_argument("--angles", default=None,
                     help="comma-separated cluster center angles (default equally spaced)")
    syn.add_argument("--kind", choices=[SEQUENTIAL, INSTANTANEOUS], default=SEQUENTIAL)
    syn.add_argument("--impulses", type=int, default=200)
    syn.add_argument("--steps", type=int, default=5, help="propagation length T")
    syn.add_argument("--mode", choices=[BINARY, COUNT], default=BINARY)
    syn.add_argument("--sharpness-k", type=int, default=1)
    syn.add_argument("--style", choices=["clique", "star"], default="clique")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", required=True, help="output GML file (includes ground truth)")

    ev = subs.add_parser("eval", help="compare partitions / report modularity")
    ev.add_argument("--partition", required=True, help="partition JSON file")
    ev.add_argument("--reference", default=None, help="second partition JSON file")
    ev.add_argument("--graph", default=None,
                    help="graph file; supplies ground truth and/or modularity")
    ev.add_argument("--mode", choices=[BINARY, COUNT], default=BINARY)
    return parser


def _load_partition_file(path: str) -> dict[str, int]:
    doc = json.loads(Path(path).read_text())
    return {str(k): int(v) for k, v in doc["assignment"].items()}


def _aligned_partitions(a: dict[str, int], b: dict[str, int]) -> tuple[Partition, Partition]:
    if set(a) != set(b):
        raise MetricError("partitions cover different vertex sets")
    keys = sorted(a)
    return (Partition.from_labels([a[k] for k in keys]),
            Partition.from_labels([b[k] for k in keys]))


def cmd_detect(args) -> int:
    g = load_graph(args.input, args.mode)
    cfg = DetectConfig(
        spread=SpreadConfig(n_impulses=args.impulses, target_size=args.size,
                            max_steps=args.max_steps),
        mcmc=McmcConfig(iterations=args.iterations, burn_in=args.burn_in,
                        thinning=args.thinning, proposal_step=args.step,
                        jump_probability=args.jump_prob),
        sharpness_k=args.sharpness_k,
        lam=args.lam,
        point_estimate=args.point_estimate,
        aggregation=WEIGHTED_SUM if args.literal_aggregation else CONDITIONAL_MEAN,
    )
    result = detect(g, cfg, seed=args.seed, threads=args.threads, forced_k=args.k)
    unsupported = result.ppm.unsupported_fraction()
    if unsupported > 0.10:
        print(f"warning: {unsupported:.0%} of vertex pairs were never co-sampled; "
              "consider more impulses (--impulses)", file=sys.stderr)
    params = {
        "input": args.input, "mode": args.mode, "impulses": args.impulses,
        "size": args.size, "max_steps": args.max_steps,
        "sharpness_k": args.sharpness_k, "lam": args.lam, "seed": args.seed,
        "k": args.k, "point_estimate": args.point_estimate,
        "literal_aggregation": args.literal_aggregation,
        "iterations": args.iterations, "burn_in": args.burn_in,
        "thinning": args.thinning, "step": args.step, "jump_prob": args.jump_prob,
    }
    labels = [g.label_of(v) for v in range(g.n)]
    _write_outputs(Path(args.out), _manifest("detect", params), {
        "partition.json": json.dumps(_partition_doc(g, result.partition, result.q),
                                     indent=2, sort_keys=True) + "\n",
        "dendrogram.newick": result.dendrogram.to_newick(labels),
        "pair_probabilities.csv": result.ppm.to_csv(labels),
        "diagnostics.json": json.dumps({
            "q_by_k": [float(q) for q in result.q_by_k],
            "tied_ks": list(result.tied_ks),
            "mean_acceptance": result.mean_acceptance,
            "mean_jump_acceptance": result.mean_jump_acceptance,
            "unsupported_pair_fraction": unsupported,
        }, indent=2, sort_keys=True) + "\n",
    })
    print(f"k={result.partition.k} Q={result.q:.4f}")
    return EXIT_OK


def cmd_bisect(args) -> int:
    g = load_graph(args.input, args.mode)
    cfg = BisectConfig(
        sharpness_k=args.sharpness_k,
        max_group_size=args.max_group_size,
        mcmc=McmcConfig(iterations=args.iterations, burn_in=args.burn_in,
                        thinning=args.thinning, proposal_step=args.step,
                        jump_probability=args.jump_prob),
        lam=args.lam,
    )
    outcome = recursive_bisect(g, cfg, seed=args.seed)
    q = modularity(g, outcome.partition) if g.total_edge_weight else 0.0
    params = {
        "input": args.input, "mode": args.mode, "sharpness_k": args.sharpness_k,
        "max_group_size": args.max_group_size, "lam": args.lam, "seed": args.seed,
        "iterations": args.iterations, "burn_in": args.burn_in,
        "thinning": args.thinning, "step": args.step, "jump_prob": args.jump_prob,
    }
    labels = [g.label_of(v) for v in range(g.n)]
    _write_outputs(Path(args.out), _manifest("bisect", params), {
        "partition.json": json.dumps(_partition_doc(g, outcome.partition, q),
                                     indent=2, sort_keys=True) + "\n",
        "dendrogram.newick": outcome.dendrogram.to_newick(labels),
    })
    print(f"groups={outcome.n_groups} Q={q:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    sizes = [int(s) for s in args.clusters.split(",") if s.strip()]
    if any(s <= 0 for s in sizes):
        raise UsageError("cluster sizes must be positive integers")
    centers = None
    if args.angles is not None:
        centers = [float(a) for a in args.angles.split(",") if a.strip()]
    state, labels = clustered_state(sizes, centers)
    cfg = ModelConfig(likelihood="bernoulli", sharpness_k=args.sharpness_k)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    g = synthesize_network(state, args.impulses, args.kind, cfg, rng,
                           T=args.steps, output_mode=args.mode,
                           instantaneous_style=args.style)
    g = Graph(g.adjacency, mode=g.mode,
              labels=tuple(f"v{i}" for i in range(g.n)),
              ground_truth=tuple(int(c) for c in labels))
    Path(args.out).write_text(g.to_gml())
    print(f"n={g.n} edges={g.n_edges}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.reference is None and args.graph is None:
        raise UsageError("eval needs --reference or --graph")
    ours = _load_partition_file(args.partition)
    out: dict[str, float] = {}
    g = load_graph(args.graph, args.mode) if args.graph else None
    if args.reference is not None:
        ref = _load_partition_file(args.reference)
    else:
        if g.ground_truth is None:
            raise GraphError("graph carries no ground-truth values")
        ref = {g.label_of(v): g.ground_truth[v] for v in range(g.n)}
    p1, p2 = _aligned_partitions(ours, _normalize_labels(ref))
    out["rand"] = rand_index(p1, p2)
    out["ari"] = adjusted_rand_index(p1, p2)
    if g is not None:
        if set(ours) != {g.label_of(v) for v in range(g.n)}:
            raise MetricError("partition does not cover the graph's vertices")
        part = Partition.from_labels([ours[g.label_of(v)] for v in range(g.n)])
        out["modularity"] = modularity(g, part)
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def _normalize_labels(mapping: dict) -> dict[str, int]:
    ids: dict = {}
    out = {}
    for key in sorted(mapping):
        lab = mapping[key]
        if lab not in ids:
            ids[lab] = len(ids)
        out[key] = ids[lab]
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "detect":
            return cmd_detect(args)
        if args.command == "bisect":
            return cmd_bisect(args)
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "eval":
            return cmd_eval(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GraphError, SpreadError, MetricError, ValueError) as exc:
        # parse errors are input problems; everything else is a runtime failure
        from .graphs import ParseError
        if isinstance(exc, ParseError):
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface.

Every subcommand that writes outputs also writes a run manifest
(<out>.manifest.json) capturing the command, its configuration, seeds, and
input/output content hashes, so any run can be reproduced and checked
byte-for-byte. Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dataset, level0, metrics, world_model
from .actions import FoldAction, Vocabulary
from .cp import InvalidPattern, canonicalize, flat_state
from .jsonio import (
    content_hash,
    load_pattern,
    read_json,
    state_from_dict,
    write_json,
)
from .planner import (
    GoalSpec,
    PlannerConfig,
    rollout,
    trajectory_from_dict,
    trajectory_to_dict,
)
from .policy import NGramPolicy, mean_nll, train_mle
from .svg import export_svg, export_trajectory_svgs
from .world_model import WorldModel


def _hash_file(path) -> str:
    return content_hash(read_json(path))


def _write_manifest(out_path, command: str, config: dict, seeds: dict,
                    inputs: dict, outputs: dict, t0: float):
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "input_hashes": inputs,
        "output_hashes": outputs,
        "version": __version__,
        "wall_time_s": round(time.time() - t0, 3),
    }
    write_json(Path(str(out_path) + ".manifest.json"), manifest)


def _corpus_vocab(programs) -> Vocabulary:
    nv = max(p["pattern"].pattern.n_vertices for p in programs)
    ne = max(p["pattern"].pattern.n_edges for p in programs)
    return Vocabulary(nv, ne)


def cmd_gen_data(args) -> int:
    t0 = time.time()
    config = dataset.CorpusConfig.from_dict(read_json(args.config)) \
        if args.config else dataset.CorpusConfig()
    manifest = dataset.build_corpus(args.out, config=config, seed=args.seed)
    _write_manifest(Path(args.out) / "run", "gen-data", config.to_dict(),
                    {"seed": args.seed}, {},
                    {"manifest": content_hash(manifest)}, t0)
    print(f"wrote {manifest['n_programs']} programs "
          f"({manifest['n_transitions']} transitions) to {args.out}")
    return 0


def cmd_train_policy(args) -> int:
    t0 = time.time()
    programs = dataset.load_corpus(args.corpus, split="train")
    vocab = _corpus_vocab(dataset.load_corpus(args.corpus))
    pairs = []
    for doc in programs:
        prog = dataset.ExpertProgram(
            pattern=doc["pattern"], goal=doc["goal"],
            actions=tuple(doc["actions"]), category=doc["category"],
            tier=doc["tier"])
        pairs.append(dataset.training_pairs(prog))
    policy = train_mle(pairs, vocab, order=args.order,
                       smoothing=args.smoothing)
    doc = policy.to_dict()
    write_json(args.out, doc)
    _write_manifest(args.out, "train-policy",
                    {"order": args.order, "smoothing": args.smoothing}, {},
                    {"corpus": _hash_file(Path(args.corpus) / "manifest.json")},
                    {"policy": content_hash(doc)}, t0)
    print(f"trained on {len(pairs)} programs; "
          f"mean NLL {mean_nll(policy, pairs):.4f}")
    return 0


def cmd_train_wm(args) -> int:
    t0 = time.time()
    transitions = dataset.load_transitions(args.corpus, split="train")
    if args.limit:
        transitions = transitions[:args.limit]
    model, history = world_model.train(
        transitions, epochs=args.epochs, learning_rate=args.learning_rate,
        seed=args.seed)
    doc = model.to_dict()
    write_json(args.out, doc)
    _write_manifest(args.out, "train-wm",
                    {"epochs": args.epochs, "learning_rate": args.learning_rate,
                     "limit": args.limit},
                    {"seed": args.seed},
                    {"corpus": _hash_file(Path(args.corpus) / "manifest.json")},
                    {"checkpoint": content_hash(doc)}, t0)
    print(f"trained on {len(transitions)} transitions; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f}")
    return 0


def cmd_eval_wm(args) -> int:
    model = WorldModel.from_dict(read_json(args.wm))
    transitions = dataset.load_transitions(args.corpus, split=args.split)
    if args.limit:
        transitions = transitions[:args.limit]
    report = world_model.evaluate(model, transitions)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_plan(args) -> int:
    t0 = time.time()
    pattern = canonicalize(load_pattern(args.cp))
    goal = GoalSpec.from_dict(read_json(args.goal))
    policy = NGramPolicy.from_dict(read_json(args.policy))
    wm = WorldModel.from_dict(read_json(args.wm)) if args.wm else None
    config = PlannerConfig.from_dict(read_json(args.config)) if args.config \
        else PlannerConfig()
    if args.seed is not None:
        config = PlannerConfig.from_dict({**config.to_dict(), "seed": args.seed})
    traj = rollout(pattern, flat_state(pattern.pattern), goal, policy, wm,
                   config, mode=args.mode)
    doc = trajectory_to_dict(traj)
    write_json(args.out, doc)
    inputs = {"cp": _hash_file(args.cp), "goal": _hash_file(args.goal),
              "policy": _hash_file(args.policy)}
    if args.wm:
        inputs["wm"] = _hash_file(args.wm)
    outputs = {"trajectory": content_hash(doc)}
    if args.svg_dir:
        for p in export_trajectory_svgs(traj, args.svg_dir):
            outputs[p.name] = content_hash(p.read_text())
    _write_manifest(args.out, "plan", config.to_dict(),
                    {"seed": config.seed}, inputs, outputs, t0)
    status = "success" if traj.success else f"failure ({traj.failure})"
    print(f"{len(traj.steps)} steps, {status}, "
          f"step-valid {traj.step_valid_fraction:.3f}")
    return 0 if traj.success else 1


def cmd_verify(args) -> int:
    pattern = load_pattern(args.cp, validate=False)
    pattern._check_invariants()
    if args.state:
        state = state_from_dict(read_json(args.state))
        verdict = level0.verify_flat_state(pattern, state)
        if not verdict.valid:
            affected = np.flatnonzero(verdict.affected_mask).tolist()
            print(f"{verdict.reason.value} affected_edges={affected}",
                  file=sys.stderr)
            return 1
    print("OK")
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.time()
    pred_dir, ref_dir = Path(args.pred), Path(args.ref)
    trajectories, references = [], []
    nv = ne = 1
    for pred_path in sorted(pred_dir.glob("*.json")):
        if pred_path.name.endswith(".manifest.json"):
            continue
        ref_path = ref_dir / pred_path.name
        if not ref_path.exists():
            print(f"no reference for {pred_path.name}", file=sys.stderr)
            return 1
        traj = trajectory_from_dict(read_json(pred_path))
        ref_doc = read_json(ref_path)
        ref_actions = [FoldAction.from_dict(a) for a in ref_doc["actions"]]
        # replay the reference through the kernel for ground-truth masks
        masks, state = [], flat_state(traj.pattern.pattern)
        for action in ref_actions:
            state, verdict = level0.step(traj.pattern, state, action)
            masks.append(verdict.affected_mask)
        references.append({"actions": ref_actions, "masks": masks})
        trajectories.append(traj)
        nv = max(nv, traj.pattern.pattern.n_vertices)
        ne = max(ne, traj.pattern.pattern.n_edges)
    if not trajectories:
        print("no trajectories to evaluate", file=sys.stderr)
        return 1
    report = metrics.evaluate_trajectories(trajectories, references,
                                           Vocabulary(nv, ne))
    doc = report.to_dict()
    write_json(args.out, doc)
    _write_manifest(args.out, "evaluate", {}, {},
                    {"n_trajectories": len(trajectories)},
                    {"report": content_hash(doc)}, t0)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_export_svg(args) -> int:
    if args.trajectory:
        traj = trajectory_from_dict(read_json(args.trajectory))
        paths = export_trajectory_svgs(traj, args.out)
        print(f"wrote {len(paths)} files to {args.out}")
    else:
        pattern = load_pattern(args.cp)
        state = state_from_dict(read_json(args.state)) if args.state else None
        export_svg(pattern, args.out, state=state)
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="foldplan",
        description="Constraint-aware folding: data, policy, world model, MPC.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a trajectory corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="corpus config JSON")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-policy", help="fit the n-gram proposal policy")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", type=float, default=0.1)
    p.set_defaults(func=cmd_train_policy)

    p = sub.add_parser("train-wm", help="train the residual world model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limit", type=int, default=0,
                   help="cap training transitions (0 = all)")
    p.set_defaults(func=cmd_train_wm)

    p = sub.add_parser("eval-wm", help="held-out MSE and violation AUC")
    p.add_argument("--corpus", required=True)
    p.add_argument("--wm", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--limit", type=int, default=0)
    p.set_defaults(func=cmd_eval_wm)

    p = sub.add_parser("plan", help="run the MPC loop on one goal")
    p.add_argument("--cp", required=True)
    p.add_argument("--goal", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--wm")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--svg-dir")
    p.add_argument("--mode", default="full", choices=["full", "lm", "lm+wm"])
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="validate a pattern (and state) file")
    p.add_argument("--cp", required=True)
    p.add_argument("--state")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("evaluate", help="score trajectories against references")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-svg", help="render a pattern or trajectory")
    p.add_argument("--cp")
    p.add_argument("--state")
    p.add_argument("--trajectory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_svg)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command == "export-svg" and not (args.cp or args.trajectory):
        print("export-svg needs --cp or --trajectory", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (InvalidPattern, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

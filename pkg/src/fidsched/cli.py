"""Command-line entry point: fixtures, workload, train, evaluate, compare.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .backend import load_fleet
from .config import BETA_PRESETS, ExperimentConfig, beta_label, load_config
from .env import QCloudEnv, TraceWriter, TranspileCache
from .errors import CheckpointError, ConfigError, FidschedError
from .evaluation import (EPISODE_COLUMNS, METRICS, eval_seeds, evaluate, format_summary,
                         summarize, write_episode_csv)
from .fixtures import write_fixtures
from .policies import LearnedPolicy, make_baseline
from .ppo import LOG_COLUMNS, load_policy, save_policy, train
from .seeding import derive_seed
from .workload import generate_workload, write_manifest

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
COMPARE_POLICIES = ("rr", "sef", "fdf", "fan") + tuple(f"qfor@{b}" for b in BETA_PRESETS)


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.config is None:
        cfg.validate()
    return cfg.with_overrides(seed=args.seed, out_dir=args.out,
                              beta=getattr(args, "beta", None),
                              policy=getattr(args, "policy", None))


def _fleet(cfg: ExperimentConfig):
    try:
        return load_fleet(cfg.fleet_path)
    except FidschedError as exc:
        raise ConfigError(f"fleet manifest {cfg.fleet_path}: {exc}") from exc


def _env(cfg: ExperimentConfig, fleet, beta: float | None = None, cache=None) -> QCloudEnv:
    w = cfg.weights if beta is None else cfg.weights.replace(beta=beta)
    return QCloudEnv(fleet, cfg.workload, w, cache, mask_infeasible=cfg.mask_infeasible)


def _load_checkpoint(path: Path, fleet, env: QCloudEnv):
    if not path.is_file():
        raise ConfigError(f"checkpoint {path} not found; run 'train' first")
    try:
        return load_policy(path, n_actions=len(fleet), obs_dim=env.observation_size)
    except CheckpointError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_fixtures(args) -> int:
    seed = 0 if args.seed is None else args.seed
    out = Path(args.out or "fixtures")
    paths = write_fixtures(out, derive_seed(seed, "fixtures"))
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_workload(args) -> int:
    cfg = _config(args)
    manifest = cfg.workload.with_seed(derive_seed(cfg.seed, "workload"))
    tasks = generate_workload(manifest)
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, out / "workload_manifest.json")
    with open(out / "tasks.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("id", "arrival", "circuit", "qubits", "depth", "g1", "g2", "shots"))
        for t in tasks:
            f = t.features
            w.writerow((t.id, repr(t.arrival), t.key, f.num_qubits, f.depth, f.g1, f.g2, t.shots))
    print(out / "tasks.csv")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    beta = cfg.weights.beta
    ppo = cfg.train_config(beta)
    if args.episodes is not None:
        ppo = replace(ppo, episodes=args.episodes)
    if args.iterations is not None:
        ppo = replace(ppo, iterations=args.iterations)
    fleet = _fleet(cfg)
    cache = TranspileCache()
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    result = train(lambda i: _env(cfg, fleet, cache=cache), ppo)
    label = beta_label(beta)
    ckpt = cfg.checkpoint_for(beta)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    save_policy(ckpt, result.policy, value=result.value, config=ppo,
                meta={"beta": beta, "nodes": [n.name for n in fleet.nodes],
                      "weights": cfg.weights.to_dict()})
    log_path = out / f"train_log_beta{label}.csv"
    with open(log_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in result.log:
            w.writerow([row["iteration"], row["episode"]] +
                       [repr(float(row[k])) for k in LOG_COLUMNS[2:]])
    print(f"{ckpt} ({result.iterations} iterations, {len(result.log)} episodes)")
    return EXIT_OK


def _policy_for(name: str, cfg: ExperimentConfig, fleet, env, checkpoint: str | None = None):
    if name.startswith("qfor"):
        beta = float(name.split("@", 1)[1]) if "@" in name else cfg.weights.beta
        path = Path(checkpoint) if checkpoint else cfg.checkpoint_for(beta)
        return LearnedPolicy(_load_checkpoint(path, fleet, env).policy), beta
    return make_baseline(name, fleet), None


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    if args.episodes is not None:
        cfg = cfg.with_overrides(episodes=args.episodes)
    fleet = _fleet(cfg)
    env = _env(cfg, fleet)
    policy, _ = _policy_for(cfg.policy, cfg, fleet, env, args.checkpoint)
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    label = cfg.policy if cfg.policy != "qfor" else f"qfor_beta{beta_label(cfg.weights.beta)}"
    seeds = eval_seeds(cfg.seed, cfg.episodes)
    if args.trace:
        with open(out / f"trace_{label}.csv", "w", newline="", encoding="utf-8") as fh:
            episodes = evaluate(env, policy, seeds, TraceWriter(fh))
    else:
        episodes = evaluate(env, policy, seeds)
    path = out / f"eval_{label}.csv"
    write_episode_csv(path, episodes)
    s = summarize(episodes)
    print(f"{label}: fidelity_score {s['fidelity_score'][0]:.4f}±{s['fidelity_score'][1]:.4f} "
          f"t_exec {s['t_exec'][0]:.4f}s t_total {s['t_total'][0]:.4f}s -> {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    if args.episodes is not None:
        cfg = cfg.with_overrides(episodes=args.episodes)
    fleet = _fleet(cfg)
    cache = TranspileCache()
    # resolve every policy (and checkpoint) before producing any output
    plan = []
    for name in COMPARE_POLICIES:
        beta = float(name.split("@")[1]) if "@" in name else cfg.weights.beta
        env = _env(cfg, fleet, beta, cache)
        policy, _ = _policy_for(name, cfg, fleet, env)
        plan.append((name, env, policy))
    seeds = eval_seeds(cfg.seed, cfg.episodes)
    results = [(name, evaluate(env, policy, seeds)) for name, env, policy in plan]
    out = cfg.out_path
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "compare.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("policy",) + EPISODE_COLUMNS)
        for name, episodes in results:
            for e in episodes:
                w.writerow([name] + e.row())
            w.writerow([name, "mean±std"] + format_summary(summarize(episodes)))
    with open(out / "compare_summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("policy",) + tuple(f"{m}_{s}" for m in METRICS for s in ("mean", "std")))
        for name, episodes in results:
            s = summarize(episodes)
            w.writerow([name] + [repr(v) for m in METRICS for v in s[m]])
    for name, episodes in results:
        s = summarize(episodes)
        print(f"{name:9s} fidelity {s['fidelity_score'][0]:.3f}±{s['fidelity_score'][1]:.3f}  "
              f"t_exec {s['t_exec'][0]:.4f}s  t_total {s['t_total'][0]:.4f}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="python -m fidsched", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, policy=False, beta=False, episodes=False):
        sp.add_argument("--config", help="experiment config JSON")
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        sp.add_argument("--out", help="output directory (overrides config)")
        if policy:
            sp.add_argument("--policy", help="rr | sef | fdf | fan | qfor")
        if beta:
            sp.add_argument("--beta", type=float, help="time-penalty weight")
        if episodes:
            sp.add_argument("--episodes", type=int, help="number of episodes")
        return sp

    fx = sub.add_parser("fixtures", help="write the synthetic calibration fleet")
    fx.add_argument("--seed", type=int, help="master seed (default 0)")
    fx.add_argument("--out", help="output directory (default ./fixtures)")
    fx.set_defaults(func=cmd_fixtures)

    common(sub.add_parser("workload", help="sample one workload and write it as CSV")).set_defaults(
        func=cmd_workload)

    tr = common(sub.add_parser("train", help="train a policy with PPO"), beta=True, episodes=True)
    tr.add_argument("--iterations", type=int, help="stop after this many PPO iterations")
    tr.set_defaults(func=cmd_train)

    ev = common(sub.add_parser("evaluate", help="evaluate one policy"), policy=True, beta=True,
                episodes=True)
    ev.add_argument("--checkpoint", help="policy checkpoint for --policy qfor")
    ev.add_argument("--trace", action="store_true", help="also write a per-step trace CSV")
    ev.set_defaults(func=cmd_evaluate)

    common(sub.add_parser("compare", help="evaluate all baselines and both trained presets"),
           episodes=True).set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FidschedError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

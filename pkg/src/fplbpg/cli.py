"""Command-line entry point: fplbpg {check|eval|grad|bound|toy|train|rollout|qprobe}.

Every command is non-interactive and deterministic given its arguments and
--seed; numeric stdout uses 12 significant digits; CSV artifacts carry
header rows.  Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _parse_bindings(pairs: list[str], bindings_file: str | None) -> dict[str, float]:
    out: dict[str, float] = {}
    lines = list(pairs)
    if bindings_file:
        for raw in Path(bindings_file).read_text(encoding="utf-8").split("\n"):
            line = raw.split("#", 1)[0].strip()
            if line:
                lines.append(line)
    for item in lines:
        if "=" not in item:
            raise ValueError(f"binding {item!r} is not name=value")
        name, _, value = item.partition("=")
        out[name.strip()] = float(value)
    return out


def _load_spec(path: str):
    from .lang import load_spec_file

    return load_spec_file(path)


def _resolve_env(name: str):
    from .envs import load_env_bundle, make_env

    if Path(name).is_dir():
        return load_env_bundle(name)
    return make_env(name)


def cmd_check(args) -> int:
    from .lang import FplSyntaxError, load_spec_text, validate

    text = Path(args.spec_file).read_text(encoding="utf-8")
    try:
        spec = load_spec_text(text)
    except FplSyntaxError as err:
        print(f"{args.spec_file}:{err.line}:{err.col}: error: {err.message}",
              file=sys.stderr)
        return 1
    mode = "relaxed" if args.relaxed else "strict"
    diags = validate(spec.formula, mode)
    for d in diags:
        print(d.render(args.spec_file), file=sys.stderr)
    if any(d.severity == "error" for d in diags):
        return 1
    print(f"ok: {len(spec.objective_order)} objectives "
          f"({', '.join(spec.objective_order)})")
    return 0


def cmd_eval(args) -> int:
    from .lang import evaluate

    spec = _load_spec(args.spec_file)
    binding = _parse_bindings(args.bindings, args.bindings_file)
    print(_fmt(evaluate(spec, binding)))
    return 0


def cmd_grad(args) -> int:
    from .lang import gradient

    spec = _load_spec(args.spec_file)
    binding = _parse_bindings(args.bindings, args.bindings_file)
    for name, g in gradient(spec, binding).items():
        print(f"{name} {_fmt(g)}")
    return 0


def cmd_bound(args) -> int:
    from .lang import bound_report

    spec = _load_spec(args.spec_file)
    for name, bound in bound_report(spec, args.target).items():
        if bound is None:
            print(f"{name}: no lower-bound guarantee")
        else:
            print(f"{name} >= {_fmt(bound)}")
    return 0


def cmd_toy(args) -> int:
    from .toy import (
        DEFAULT_ALPHA,
        DEFAULT_INIT,
        DEFAULT_LR,
        DEFAULT_STEPS,
        ToyState,
        toy_run,
        write_trace_csv,
    )

    spec = _load_spec(args.spec_file)
    alpha = DEFAULT_ALPHA if args.alpha is None else args.alpha
    init = ToyState(DEFAULT_INIT[0], DEFAULT_INIT[1], alpha)
    rows = toy_run(
        spec,
        init,
        lr=DEFAULT_LR if args.lr is None else args.lr,
        steps=DEFAULT_STEPS if args.steps is None else args.steps,
    )
    if args.out:
        write_trace_csv(rows, args.out)
        print(f"wrote {args.out} ({len(rows)} rows)")
    else:
        last = rows[-1]
        print(f"final f0 {_fmt(last.f0)}")
        print(f"final f1 {_fmt(last.f1)}")
        print(f"final utility {_fmt(last.utility)}")
    return 0


def _run_one_training(config, out_dir: Path) -> None:
    from .bpg import BpgTrainer, write_learning_curve
    from .config import config_digest
    from .nets import save_checkpoint

    out_dir.mkdir(parents=True, exist_ok=True)
    env = _resolve_env(config.env)
    trainer = BpgTrainer(env, config)
    try:
        report = trainer.run()
    except Exception as err:
        (out_dir / "diagnostics.txt").write_text(str(err), encoding="utf-8")
        raise
    write_learning_curve(report, out_dir / "learning_curve.csv")
    save_checkpoint(trainer.actor.online, out_dir / "actor.ckpt")
    save_checkpoint(trainer.critic.online, out_dir / "critic.ckpt")
    final = report.rows[-1] if report.rows else None
    manifest = [
        f"config_digest = {config_digest(config)}",
        f"env = {config.env}",
        f"seed = {config.seed}",
        f"env_steps = {report.env_steps}",
        f"episodes = {report.episodes}",
    ]
    if final is not None:
        manifest.append(f"final_mean_utility = {_fmt(final.mean_utility)}")
    (out_dir / "manifest.txt").write_text("\n".join(manifest) + "\n", encoding="utf-8")


def cmd_train(args) -> int:
    from .config import load_run_config

    config = load_run_config(args.config_file)
    out_dir = Path(args.out) if args.out else Path("runs")
    if args.seeds:
        lo, hi = args.seeds
        seeds = list(range(lo, hi + 1))
        import multiprocessing as mp

        jobs = [(replace(config, seed=s), out_dir / f"seed{s}") for s in seeds]
        with mp.Pool(min(len(jobs), args.workers)) as pool:
            pool.starmap(_run_one_training, jobs)
        for s in seeds:
            print(f"seed {s}: {out_dir / f'seed{s}' / 'learning_curve.csv'}")
    else:
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        _run_one_training(config, out_dir)
        print(f"wrote {out_dir / 'learning_curve.csv'}")
    return 0


def cmd_rollout(args) -> int:
    from .bpg import evaluate_policy, resolve_utility_spec
    from .config import BpgConfig
    from .nets import load_checkpoint

    env = _resolve_env(args.env)
    actor = load_checkpoint(args.checkpoint)
    spec = resolve_utility_spec(BpgConfig(env=args.env), env)
    report = evaluate_policy(env, actor, spec, episodes=args.episodes,
                             seed=args.seed if args.seed is not None else 0)
    for name, mean in zip(env.spec.objective_names, report.objective_means):
        print(f"mean_{name} {_fmt(mean)}")
    for name, mean in zip(env.spec.objective_names, report.tail_means):
        print(f"tail_{name} {_fmt(mean)}")
    print(f"mean_utility {_fmt(report.mean_utility)}")
    for i, fv in enumerate(report.fv_summaries):
        print(f"episode_{i}_fv " + " ".join(_fmt(v) for v in fv))
    return 0


def cmd_qprobe(args) -> int:
    from .bpg import q_error_probe
    from .config import load_run_config

    config = load_run_config(args.config_file)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    config_on = config
    config_off = replace(config, alpha_fv=0.0)
    err_with, err_without = q_error_probe(
        lambda: _resolve_env(config.env), config_on, config_off
    )
    print(f"err_with_fv {_fmt(err_with)}")
    print(f"err_without_fv {_fmt(err_without)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write("alpha_fv,err\n")
            fh.write(f"{_fmt(config_on.alpha_fv)},{_fmt(err_with)}\n")
            fh.write(f"0,{_fmt(err_without)}\n")
        print(f"wrote {args.out}")
    return 0


def _seed_range(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition("..")
    if not sep:
        raise argparse.ArgumentTypeError("expected a..b")
    return int(lo), int(hi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fplbpg",
        description="Priority-formula utilities and balanced policy-gradient training.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_seed(p):
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("check", help="validate a spec file")
    p.add_argument("spec_file")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", default=True)
    mode.add_argument("--relaxed", action="store_true", default=False)
    p.set_defaults(func=cmd_check)

    for name, func in (("eval", cmd_eval), ("grad", cmd_grad)):
        p = sub.add_parser(name, help=f"{name}uate a spec under bindings"
                           if name == "eval" else "per-objective utility gradient")
        p.add_argument("spec_file")
        p.add_argument("bindings", nargs="*", help="name=value pairs")
        p.add_argument("--bindings", dest="bindings_file", metavar="FILE",
                       help="file with one name=value per line")
        p.set_defaults(func=func)

    p = sub.add_parser("bound", help="guaranteed minima implied by a target utility")
    p.add_argument("spec_file")
    p.add_argument("--target", type=float, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("toy", help="competitive two-objective gradient ascent")
    p.add_argument("spec_file")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--out", default=None)
    add_seed(p)
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("train", help="train on a run configuration")
    p.add_argument("config_file")
    p.add_argument("--out", default=None)
    p.add_argument("--seeds", type=_seed_range, default=None, metavar="A..B")
    p.add_argument("--workers", type=int, default=2)
    add_seed(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rollout", help="evaluate a checkpoint without noise")
    p.add_argument("checkpoint")
    p.add_argument("--env", default="pendulum")
    p.add_argument("--episodes", type=int, default=5)
    add_seed(p)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("qprobe", help="value-error probe with/without the fv loss")
    p.add_argument("config_file")
    p.add_argument("--out", default=None)
    add_seed(p)
    p.set_defaults(func=cmd_qprobe)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    from .lang import FplSyntaxError

    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (FplSyntaxError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()

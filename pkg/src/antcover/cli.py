"""Command-line entry point.

Subcommands: run (batch experiments, CSV outputs), bounds (certificate JSON),
gen (write generated domains), snapshot (run a short simulation and dump the
pheromone field as PGM/CSV).  Verbosity via the MAW_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .field import NoiseProfile, field_to_csv, field_to_pgm, init_field
from .geometry import Domain, DomainError
from .harness import (
    ExperimentConfig,
    bound_certificate,
    build_context,
    gen_domain,
    run_experiment,
)
from .walkers import DomainTooSmallError, Robot, SimState, TieBreak, multi_step

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_IO = 2
EXIT_UNCOVERED = 3
EXIT_USAGE = 4

log = logging.getLogger("antcover")

_TIE_FLAG = {"random": "seeded_random", "scan": "scan_order", "adversarial": "adversarial_loops"}


def _parse_noise(spec: str) -> NoiseProfile:
    """none | uniform:FRAC | const:VAL:FRAC | plateau:VAL:FRAC"""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "none":
        return NoiseProfile()
    if kind == "uniform":
        return NoiseProfile("uniform_scatter", float(parts[1]))
    if kind in ("const", "plateau"):
        mapped = "const_scatter" if kind == "const" else "plateau"
        return NoiseProfile(mapped, float(parts[2]), int(parts[1]))
    raise argparse.ArgumentTypeError(f"bad noise spec {spec!r}")


def _add_domain_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--domain", help="path to a '.'/'#' text or PGM domain file")
    g.add_argument("--gen", help="generator spec: empty|scatter|rooms|maze|loops:N|star:K:LEN")
    p.add_argument("--w", type=int, default=100, help="generated domain width")
    p.add_argument("--h", type=int, default=100, help="generated domain height")
    p.add_argument("--metric", choices=("l1", "l2", "linf"), default="linf")


def _add_run_flags(p: argparse.ArgumentParser):
    _add_domain_flags(p)
    p.add_argument("--r", type=int, default=3, help="effector radius (cells)")
    p.add_argument("--robots", type=int, default=1)
    p.add_argument("--algo", choices=("maw", "random_walk"), default="maw")
    p.add_argument("--tie", choices=tuple(_TIE_FLAG), default="random")
    p.add_argument("--noise", type=_parse_noise, default=NoiseProfile())
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--monitors", choices=("all", "sampled", "off"), default="off")
    p.add_argument("--snapshot-every", type=int, default=0, metavar="K",
                   help="write a field PGM every K steps of run 0")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--jobs", type=int, default=1)


def _config_from_args(args) -> ExperimentConfig:
    return ExperimentConfig(
        domain=args.domain if args.domain else args.gen,
        metric=args.metric,
        r=args.r,
        robots=args.robots,
        algorithm=args.algo,
        tie_break=_TIE_FLAG[args.tie],
        noise=args.noise,
        runs=args.runs,
        seed=args.seed,
        max_steps=args.max_steps,
        monitors=args.monitors,
        width=args.w,
        height=args.h,
        jobs=args.jobs,
    )


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    ctx = build_context(cfg)
    report = run_experiment(cfg, ctx)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "results.csv").write_text(report.results_csv())
    (args.out / "summary.csv").write_text(report.summary_csv())
    (args.out / "certificate.json").write_text(ctx.certificate.to_json() + "\n")
    if args.snapshot_every > 0:
        _write_snapshots(ctx, cfg, args.out, args.snapshot_every)
    s = report.summary()
    log.info("summary: %s", s)
    print(json.dumps(s, sort_keys=True))
    if report.uncovered_runs:
        return EXIT_UNCOVERED
    if report.violations_total:
        return EXIT_VIOLATIONS
    return EXIT_OK


def _write_snapshots(ctx, cfg: ExperimentConfig, out: Path, every: int):
    """Replay run 0 with the reference stepper, dumping the field periodically."""
    from .harness import _run_seeds, _start_positions  # shared seeding rule

    noise_rng, start_rng, stream_rng = _run_seeds(cfg, 0)
    field = init_field(ctx.domain, cfg.noise, rng=noise_rng)
    starts = _start_positions(ctx.domain, field, cfg.robots, start_rng)
    stream = stream_rng.integers(0, 2**62, size=ctx.max_steps + 1, dtype=np.int64)
    state = SimState(
        domain=ctx.domain,
        r=cfg.r,
        field=field,
        robots=[Robot(i, ctx.domain.cell_of(int(p))) for i, p in enumerate(starts)],
        nbrs=ctx.nbrs,
        tie=TieBreak(cfg.tie_break),
        rand_stream=stream,
    )
    while state.t < ctx.max_steps and not state.covered and not state.terminal_covered:
        multi_step(state, cfg.algorithm)
        if state.t % every == 0:
            (out / f"field_{state.t:07d}.pgm").write_text(field_to_pgm(field, ctx.domain))
    (out / "field_final.pgm").write_text(field_to_pgm(field, ctx.domain))
    (out / "field_final.csv").write_text(field_to_csv(field))


def cmd_bounds(args) -> int:
    domain = _load(args)
    noise = args.noise
    cert = bound_certificate(domain, args.r, noise)
    print(cert.to_json())
    return EXIT_OK


def cmd_gen(args) -> int:
    domain = gen_domain(args.spec, args.w, args.h, args.seed, args.r, args.metric)
    text = domain.to_text()
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_snapshot(args) -> int:
    cfg = _config_from_args(args)
    ctx = build_context(cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    _write_snapshots(ctx, cfg, args.out, args.every)
    return EXIT_OK


def _load(args) -> Domain:
    from .geometry import load_domain_file

    if args.domain:
        return load_domain_file(args.domain, args.metric)
    return gen_domain(args.gen, args.w, args.h, getattr(args, "seed", 0), args.r, args.metric)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="antcover", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a batch of simulations")
    _add_run_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_bounds = sub.add_parser("bounds", help="print the bound certificate JSON")
    _add_domain_flags(p_bounds)
    p_bounds.add_argument("--r", type=int, default=3)
    p_bounds.add_argument("--seed", type=int, default=0)
    p_bounds.add_argument("--noise", type=_parse_noise, default=None)
    p_bounds.set_defaults(fn=cmd_bounds)

    p_gen = sub.add_parser("gen", help="write a generated domain file")
    p_gen.add_argument("spec", help="empty|scatter|rooms|maze|loops:N|star:K:LEN")
    p_gen.add_argument("--w", type=int, default=100)
    p_gen.add_argument("--h", type=int, default=100)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--r", type=int, default=3)
    p_gen.add_argument("--metric", choices=("l1", "l2", "linf"), default="linf")
    p_gen.add_argument("--out", type=Path, default=None)
    p_gen.set_defaults(fn=cmd_gen)

    p_snap = sub.add_parser("snapshot", help="run one simulation, dumping field snapshots")
    _add_run_flags(p_snap)
    p_snap.add_argument("--every", type=int, default=50)
    p_snap.set_defaults(fn=cmd_snapshot)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MAW_LOG", "WARNING").upper())
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (OSError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, DomainTooSmallError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

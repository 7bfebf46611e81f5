"""Experiment runner CLI.

Subcommands: lattice, family, chronogram, encode, grid, acceptance.
Every run writes a JSON manifest echoing the resolved configuration
(enough to reproduce the run bit for bit) next to its CSV artifacts.
Options can come from a flat key=value config file via --config; flags
override file values. Exit codes: 0 ok, 1 invariant failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from pathlib import Path

from . import __version__, chronogram, encoding_game, fibonacci_lattice, grid_analysis
from .acceptance import run_acceptance
from .finite_field import largest_prime_below
from .hard_queries import (
    QueryFamilyParams,
    build_query_family,
    check_suffix_independence,
    subset_bound,
    write_family,
)
from .rng import substream


class InvariantFailure(Exception):
    """A named run invariant did not hold; the run exits with status 1."""


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not getattr(args, "config", None):
        return
    try:
        values = _read_config_file(args.config)
    except (OSError, ValueError) as exc:
        parser.error(f"bad config file: {exc}")
    coercions = {"n": int, "beta": float, "w": int, "seed": int, "m": int,
                 "istar": int, "trials": int, "c": float, "cell_budget": int,
                 "probe_threshold": float, "tries": int}
    for key, raw in values.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            parser.error(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, coercions.get(attr, str)(raw))


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.out if args.out else "cplab_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir: Path, name: str, config: dict, artifacts: list[str], extra: dict) -> Path:
    manifest = {
        "command": name,
        "config": config,
        "artifacts": artifacts,
        "versions": {"cplab": __version__, "python": platform.python_version()},
    }
    manifest.update(extra)
    path = outdir / f"{name}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _require(args: argparse.Namespace, parser: argparse.ArgumentParser, *keys: str) -> None:
    for key in keys:
        if getattr(args, key) is None:
            parser.error(f"--{key.replace('_', '-')} is required")


def _cmd_lattice(args, parser) -> int:
    _require(args, parser, "m")
    m = args.m
    n = args.n if args.n is not None else 8 * m
    outdir = _outdir(args)
    spec = fibonacci_lattice.LatticeSpec.create(m, n)
    points = fibonacci_lattice.scaled_lattice(spec)
    points_path = outdir / "lattice_points.csv"
    with open(points_path, "w") as fh:
        fh.write("j,x,y\n")
        for j, (x, y) in enumerate(points):
            fh.write(f"{j},{x},{y}\n")
    sweep = fibonacci_lattice.check_all_lattice_rectangles(m, n)
    config = {"m": m, "n": n, "multiplier": spec.multiplier}
    _write_manifest(
        outdir, "lattice", config, [points_path.name],
        {"rectangles": sweep.rectangles, "violations": sweep.violations},
    )
    print(f"lattice m={m} n={n}: {sweep.violations}/{sweep.rectangles} rectangle violations")
    if sweep.violations:
        raise InvariantFailure("fibonacci-area-bounds: rectangle count outside bounds")
    return 0


def _cmd_family(args, parser) -> int:
    _require(args, parser, "n")
    n, seed = args.n, args.seed or 0
    c = args.c if args.c is not None else 22.0
    trials = args.trials if args.trials is not None else 200
    outdir = _outdir(args)
    delta = largest_prime_below(n**4)
    family = build_query_family(
        QueryFamilyParams(n=n, modulus=delta, independence_constant=c, seed=seed)
    )
    family_path = outdir / "family.txt"
    with open(family_path, "w") as fh:
        write_family(family, fh)
    violations = 0
    checked = 0
    if subset_bound(n, c) >= 1:
        report = check_suffix_independence(
            family, k=n, subset_size=subset_bound(n, c), trials=trials, seed=seed
        )
        violations, checked = report.violations, report.trials
    config = {"n": n, "c": c, "seed": seed, "delta": delta.value, "trials": trials}
    _write_manifest(
        outdir, "family", config, [family_path.name],
        {"vectors": len(family.vectors), "violations": violations, "subsets_checked": checked},
    )
    print(f"family n={n}: {len(family.vectors)} vectors, {violations} violations in {checked} audits")
    if violations:
        raise InvariantFailure("query-family-suffix-independence: violation found")
    return 0


def _cmd_chronogram(args, parser) -> int:
    _require(args, parser, "n", "beta")
    structure = args.structure or "orc2d"
    kind = "artificial" if structure == "naive" else "orc"
    seed = args.seed or 0
    sample_size = args.trials if args.trials is not None else 200
    outdir = _outdir(args)
    run = chronogram.run_hard_distribution(
        kind, args.n, args.beta, seed=seed, structure=structure, w=args.w
    )
    rng = substream(seed, "cli-query-sample")
    if kind == "artificial":
        universe = len(run.family.vectors)
        queries = rng.sample(range(universe), min(sample_size, universe))
    else:
        queries = [(rng.randrange(run.n), rng.randrange(run.n)) for _ in range(sample_size)]
    profile = chronogram.epoch_probe_profile(run, queries)
    profile_path = outdir / "chronogram_profile.csv"
    profile.export_csv(str(profile_path))
    trace_path = outdir / "chronogram_trace.csv"
    run.memory.trace.export_csv(str(trace_path))
    config = {
        "kind": kind, "structure": structure, "n": args.n, "beta": args.beta,
        "seed": seed, "w": run.w, "queries_sampled": len(queries),
    }
    _write_manifest(
        outdir, "chronogram", config, [profile_path.name, trace_path.name],
        {
            "delta": run.delta.value,
            "epoch_sizes": list(run.schedule.sizes),
            "snapped_sizes": list(run.run_schedule.sizes),
            "mean_total_probes": profile.total_mean(),
        },
    )
    print(
        f"chronogram {kind} n={args.n} beta={args.beta}: epochs {list(run.run_schedule.sizes)}, "
        f"mean total distinct probes {profile.total_mean():.2f}"
    )
    return 0


def _cmd_encode(args, parser) -> int:
    _require(args, parser, "kind", "n", "beta", "istar")
    if args.kind not in chronogram.KINDS:
        parser.error(f"--kind must be one of {chronogram.KINDS}")
    seed = args.seed or 0
    outdir = _outdir(args)
    run = chronogram.run_hard_distribution(args.kind, args.n, args.beta, seed=seed, w=args.w)
    istar = args.istar
    if not 1 <= istar <= run.run_schedule.count:
        parser.error(f"--istar must be in [1, {run.run_schedule.count}]")
    try:
        resolved = encoding_game.find_resolved_set(
            run,
            istar,
            cell_budget=args.cell_budget,
            probe_threshold=args.probe_threshold,
            max_tries=args.tries if args.tries is not None else 16,
            seed=seed,
        )
    except encoding_game.ResolvedSetNotFound:
        resolved = None
    message = encoding_game.encode_epoch(run, istar, resolved)
    result = encoding_game.decode_epoch(
        message, run.updates.prefix_above(istar), run.structure_factory, verify_run=run
    )
    exact = result.u_istar == run.updates.u(istar)
    account = encoding_game.entropy_account(run.run_schedule, istar, run.delta, message)
    message_path = outdir / "encode_message.bin"
    message_path.write_bytes(message.to_bytes())
    config = {
        "kind": args.kind, "n": args.n, "beta": args.beta, "istar": istar,
        "seed": seed, "w": run.w, "cell_budget": args.cell_budget,
        "probe_threshold": args.probe_threshold,
    }
    _write_manifest(
        outdir, "encode", config, [message_path.name],
        {
            "delta": run.delta.value,
            "snapped_sizes": list(run.run_schedule.sizes),
            "flag": message.flag,
            "recovery": "exact" if exact else "failed",
            "message_bits": message.total_bits,
            "h_bits": account.h_bits,
            "slack_bits": account.slack,
            "sections": {s.label: s.bit_length for s in message.sections},
            "resolved": resolved is not None,
        },
    )
    print(
        f"encode {args.kind} istar={istar}: flag={message.flag}, "
        f"recovery={'exact' if exact else 'FAILED'}, "
        f"message={message.total_bits} bits vs H={account.h_bits:.1f}"
    )
    if not exact:
        raise InvariantFailure("encode-decode round trip: recovered weights differ")
    if account.slack < 0:
        raise InvariantFailure("entropy accounting: message shorter than the epoch entropy")
    return 0


def _cmd_grid(args, parser) -> int:
    _require(args, parser, "n", "beta", "m")
    n, beta, m = args.n, args.beta, args.m
    seed = args.seed or 0
    trials = args.trials if args.trials is not None else 100
    outdir = _outdir(args)
    delta = largest_prime_below(n**4)
    points = fibonacci_lattice.scaled_lattice(fibonacci_lattice.LatticeSpec.create(m, n))
    i_eff = 1
    while beta ** (i_eff + 1) <= m:
        i_eff += 1
    if i_eff < 2:
        parser.error(f"epoch size {m} too small for any grid at beta={beta}")
    family = grid_analysis.build_grid_family(n, beta, i_eff, epoch_size=m)
    threshold = grid_analysis.separation_area_threshold(n, beta, m)
    rows = []
    first_sample = None
    from .finite_field import FieldMatrix, FieldVector, ff_rank

    for t in range(trials):
        sample = grid_analysis.sample_slab_queries(n, beta, i_eff, seed + t, epoch_size=m)
        if first_sample is None:
            first_sample = sample
        grid = family.grids[family.indices()[0]]
        reps = grid_analysis.cell_representatives(sample.queries, grid)
        survivors = grid_analysis.cross_out_extract(reps, grid, points).survivors
        if survivors:
            vecs = tuple(
                FieldVector(delta, fibonacci_lattice.dominance_incidence(points, q))
                for q in survivors
            )
            rank = ff_rank(FieldMatrix(delta, vecs))
        else:
            rank = 0
        separated, _ = grid_analysis.well_separated_subset(sample.queries, threshold)
        rows.append((t, len(survivors), rank, len(separated) / len(sample.queries)))
    trials_path = outdir / "grid_trials.csv"
    grid_analysis.export_trials_csv(str(trials_path), rows)
    hitting_path = outdir / "grid_hitting.csv"
    grid_analysis.export_hitting_csv(str(hitting_path), family, first_sample.queries)
    config = {"n": n, "beta": beta, "m": m, "seed": seed, "trials": trials}
    _write_manifest(
        outdir, "grid", config, [trials_path.name, hitting_path.name],
        {
            "grids": {j: [float(g.width), float(g.height)] for j, g in family.grids.items()},
            "rounded": {j: g.rounded for j, g in family.grids.items()},
            "separation_threshold": threshold,
            "full_rank_trials": sum(1 for r in rows if r[1] == r[2]),
        },
    )
    bad = [r for r in rows if r[1] != r[2]]
    print(f"grid m={m} n={n}: {len(rows) - len(bad)}/{len(rows)} trials full rank")
    if bad:
        raise InvariantFailure("crossing-out independence: rank below survivor count")
    return 0


def _cmd_acceptance(args, parser) -> int:
    results = run_acceptance(only=args.only, fault=args.fault)
    if not results:
        parser.error(f"--only {args.only!r} matched no criteria")
    failed = [r for r in results if not r.passed]
    if failed:
        names = ", ".join(r.name for r in failed)
        print(f"acceptance: {len(failed)} criterion(s) failed: {names}")
        return 1
    print(f"acceptance: all {len(results)} criteria passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n", type=int)
        p.add_argument("--beta", type=float)
        p.add_argument("--w", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--structure", choices=["naive", "orc2d"])
        p.add_argument("--istar", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out")
        p.add_argument("--config")

    for name, fn in (
        ("lattice", _cmd_lattice),
        ("family", _cmd_family),
        ("chronogram", _cmd_chronogram),
        ("encode", _cmd_encode),
        ("grid", _cmd_grid),
        ("acceptance", _cmd_acceptance),
    ):
        p = sub.add_parser(name)
        add_common(p)
        p.set_defaults(fn=fn)
        if name in ("lattice", "grid"):
            p.add_argument("--m", type=int)
        if name == "family":
            p.add_argument("--c", type=float)
        if name == "encode":
            p.add_argument("--kind", choices=list(chronogram.KINDS))
            p.add_argument("--cell-budget", dest="cell_budget", type=int)
            p.add_argument("--probe-threshold", dest="probe_threshold", type=float)
            p.add_argument("--tries", type=int)
        if name == "acceptance":
            p.add_argument("--only")
            p.add_argument("--fault", choices=["corrupt-message"])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config(args, parser)
    try:
        return args.fn(args, parser)
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1
    except (AssertionError, encoding_game.DecodingIntegrityError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Subcommands:

* ``run``: execute one campaign per requested seed and write traces, the
  acquired-set exports, a cross-seed summary, and the run manifest.
* ``fingerprint``: hex-dump fingerprints for a file of SMILES strings.
* ``topk``: print the ground-truth top-k rows of a scored library.

Exit codes are a stable contract: 0 success, 2 configuration error,
3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
import time
from pathlib import Path

import molsieve
from molsieve.campaign import CampaignTrace, aggregate_traces, run_campaign
from molsieve.chem.fingerprints import FingerprintSpec
from molsieve.chem.smiles import parse_smiles
from molsieve.errors import (
    ConfigInvalid,
    DimensionMismatch,
    LibraryError,
    MolsieveError,
    SmilesError,
)
from molsieve.library import load_embeddings, load_library
from molsieve.runconfig import (
    SETTINGS,
    build_campaign_config,
    build_ingest_options,
    resolve_settings,
    sha256_file,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molsieve",
        description="Retrospective batched Bayesian-optimization virtual screening. "
        "Exit codes: 0 success, 2 config error, 3 data error, 4 runtime error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run screening campaigns")
    run.add_argument("--config", help="INI config file; flags override its values")
    for setting in SETTINGS:
        flag = "--" + setting.key.replace("_", "-")
        if setting.key == "strict":
            run.add_argument(flag, dest=setting.dest, action="store_const", const=True, default=None)
        else:
            run.add_argument(flag, dest=setting.dest, default=None, metavar=setting.key.upper())

    fp = sub.add_parser("fingerprint", help="dump fingerprints for a SMILES file")
    fp.add_argument("input", help="text file with one SMILES per line")
    fp.add_argument("--kind", choices=("morgan", "atom-pair"), default="morgan")
    fp.add_argument("--radius", type=int, default=3, help="morgan radius")
    fp.add_argument("--min-radius", type=int, default=1)
    fp.add_argument("--max-radius", type=int, default=3)
    fp.add_argument("--width", type=int, default=2048)
    fp.add_argument("--out", help="output path (default stdout)")
    fp.add_argument("--rejects", help="path for rejected rows (default OUT.rejects)")

    topk = sub.add_parser("topk", help="print the ground-truth top-k of a library")
    topk.add_argument("--library", required=True)
    topk.add_argument("-k", type=int, required=True)
    topk.add_argument("--direction", choices=("min", "max"), default="min")
    topk.add_argument("--smiles-col", default="smiles")
    topk.add_argument("--score-col", default="score")
    topk.add_argument("--delimiter", choices=("comma", "tab"), default="comma")
    topk.add_argument("--out", help="output path (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "fingerprint":
            return _cmd_fingerprint(args)
        return _cmd_topk(args)
    except ConfigInvalid as exc:
        print(f"molsieve: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LibraryError, SmilesError, DimensionMismatch, OSError) as exc:
        print(f"molsieve: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MolsieveError as exc:
        print(f"molsieve: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def _cmd_run(args: argparse.Namespace) -> int:
    overrides = {s.dest: getattr(args, s.dest) for s in SETTINGS}
    settings = resolve_settings(args.config, overrides)
    if settings["library"] is None:
        raise ConfigInvalid("no library file given (flag --library or [library] library=)")

    out_dir = Path(settings["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    t_start = time.perf_counter()

    library = load_library(settings["library"], build_ingest_options(settings))
    if settings["embeddings"] is not None:
        library = load_embeddings(library, settings["embeddings"], strict=settings["strict"])
    t_load = time.perf_counter() - t_start

    manifest = {
        "tool": "molsieve",
        "version": molsieve.__version__,
        "started_at": started,
        "config": settings.to_manifest_config(),
        "inputs": {
            "library": {
                "path": str(settings["library"]),
                "sha256": sha256_file(settings["library"]),
                "records": len(library),
                "skipped_rows": library.skipped_rows,
                "duplicates_removed": library.duplicates_removed,
                "checksum": library.checksum,
            }
        },
        "timings": {"load_seconds": t_load, "campaigns": {}},
    }
    if settings["embeddings"] is not None:
        manifest["inputs"]["embeddings"] = {
            "path": str(settings["embeddings"]),
            "sha256": sha256_file(settings["embeddings"]),
            "fill_count": library.embedding_fill_count,
        }

    traces: list[CampaignTrace] = []
    for seed in settings["seed"]:
        cfg = build_campaign_config(settings, seed)
        trace_path = out_dir / f"trace_seed{seed}.json"
        t0 = time.perf_counter()
        trace = run_campaign(cfg, library, trace_sink=lambda t: _write_trace(trace_path, t))
        elapsed = time.perf_counter() - t0
        _write_trace(trace_path, trace)
        _write_trace_table(out_dir / f"trace_seed{seed}.csv", trace)
        _write_acquired(out_dir / f"acquired_seed{seed}.csv", trace, library)
        manifest["timings"]["campaigns"][str(seed)] = {
            "seconds": elapsed,
            "per_iteration_seconds": [r.wall_time for r in trace.records],
        }
        traces.append(trace)
        retrieval = trace.records[-1].topk_retrieval
        print(f"seed {seed}: top-{cfg.top_k} retrieval {retrieval:.4f}, "
              f"EF {trace.records[-1].enrichment_factor:.2f}")

    if len(traces) > 1:
        _write_summary(out_dir / "summary.csv", traces)
    manifest["finished_at"] = _utcnow()
    with (out_dir / "manifest.json").open("w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return EXIT_OK


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_trace(path: Path, trace: CampaignTrace) -> None:
    path.write_text(trace.to_json(), encoding="utf-8")


def _write_trace_table(path: Path, trace: CampaignTrace) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "explored_fraction", "topk_retrieval", "ef", "mean_dice"])
        for iteration, explored, retrieval, ef, dice in trace.table_rows():
            writer.writerow([iteration, repr(explored), repr(retrieval), repr(ef),
                             "" if dice is None else repr(dice)])


def _write_acquired(path: Path, trace: CampaignTrace, library) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["index", "smiles", "score", "iteration_acquired"])
        for record in trace.records:
            for idx in record.acquired_indices:
                writer.writerow([int(idx), library.smiles[int(idx)],
                                 repr(float(library.scores[int(idx)])), record.iteration])


def _write_summary(path: Path, traces: list[CampaignTrace]) -> None:
    rows = aggregate_traces(traces)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([
            "iteration", "explored_fraction",
            "topk_retrieval_mean", "topk_retrieval_std",
            "ef_mean", "ef_std",
        ])
        for row in rows:
            writer.writerow([
                row["iteration"], repr(row["explored_fraction"]),
                repr(row["topk_retrieval_mean"]), repr(row["topk_retrieval_std"]),
                repr(row["enrichment_factor_mean"]), repr(row["enrichment_factor_std"]),
            ])


def _cmd_fingerprint(args: argparse.Namespace) -> int:
    if args.kind == "morgan":
        spec = FingerprintSpec(kind="morgan", width=args.width, radius=args.radius)
    else:
        spec = FingerprintSpec(
            kind="atom_pair", width=args.width,
            min_radius=args.min_radius, max_radius=args.max_radius,
        )

    in_path = Path(args.input)
    lines = in_path.read_text(encoding="utf-8").splitlines()
    out_handle = Path(args.out).open("w", encoding="utf-8") if args.out else sys.stdout
    rejects_path = Path(args.rejects) if args.rejects else Path(args.out or args.input).with_suffix(".rejects")
    rejects: list[str] = []
    try:
        for line in lines:
            smiles = line.strip()
            if not smiles:
                continue
            try:
                fp = spec.compute(parse_smiles(smiles))
            except SmilesError as exc:
                rejects.append(f"{smiles}\t{type(exc).__name__}\n")
                continue
            out_handle.write(f"{smiles}\t{fp.to_hex()}\t{fp.popcount}\n")
    finally:
        if out_handle is not sys.stdout:
            out_handle.close()
    if rejects:
        rejects_path.write_text("".join(rejects), encoding="utf-8")
    return EXIT_OK


def _cmd_topk(args: argparse.Namespace) -> int:
    from molsieve.library import IngestOptions, MAXIMIZE, MINIMIZE

    options = IngestOptions(
        smiles_col=args.smiles_col,
        score_col=args.score_col,
        delimiter="\t" if args.delimiter == "tab" else ",",
        direction=MINIMIZE if args.direction == "min" else MAXIMIZE,
    )
    library = load_library(args.library, options)
    order = library.rank_order(args.k)
    out_handle = Path(args.out).open("w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out_handle)
        writer.writerow(["rank", "index", "smiles", "score"])
        for rank, idx in enumerate(order, start=1):
            writer.writerow([rank, int(idx), library.smiles[int(idx)],
                             repr(float(library.scores[int(idx)]))])
    finally:
        if out_handle is not sys.stdout:
            out_handle.close()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

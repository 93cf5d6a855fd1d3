"""Experiment driver: config parsing, deterministic runs, CSV/JSONL output.

Configs are flat "dotted.key = value" lines (# starts a comment).  The
ensemble block fixes statistics, inverse temperature, dispersion, and either
the chemical potential (ensemble.mu) or a target density (ensemble.r, which
is inverted to mu once per run); the run block fixes string lengths, replica
count, master seed and sampling kind; the analysis block holds the typical-
window epsilon and numeric budgets; the output block picks the format.

Determinism contract: results.csv / results.jsonl / summary.* are byte
reproducible for a fixed config and seed, for any worker count, because
every replica owns a counter-based random stream keyed by (seed, ell,
replica) and rows are emitted in sorted (ell, replica) order.  Wall-clock
measurements go to timings.csv, which is excluded from that contract.

Exit codes: 0 success, 1 config error, 2 property-check failure, 3 numeric
or domain failure during computation.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import checks
from .disttab import entropy_gap
from .ensemble import (
    CosineLattice,
    Dispersion,
    EnsembleSpec,
    Statistics,
    TabulatedGrid,
    entropy_rate,
    particle_density,
    solve_mu,
)
from .errors import (
    ConfigError,
    EnsembleError,
    GibbsLzError,
    ImpossibleConditionError,
    TargetRangeError,
)
from .lzparse import TypicalParams, classify_words, code_rate, lz78_parse, lz_rate
from .sampler import (
    CanonicalSampler,
    choose_n,
    marginal_tables,
    sample_grand,
)

_KNOWN_KEYS = {
    "ensemble.stats", "ensemble.beta", "ensemble.mu", "ensemble.r",
    "ensemble.dispersion",
    "run.lengths", "run.replicas", "run.seed", "run.kind",
    "analysis.epsilon", "analysis.two_sided", "analysis.quad_tol",
    "analysis.tail_tol", "analysis.gap_budget", "analysis.check_scale",
    "output.format",
}

RESULT_COLUMNS = [
    "config_hash", "kind", "ell", "n", "replica", "word_count", "lz_rate",
    "code_rate", "h_target", "entropy_gap_per_site", "low_typical_words",
    "other_typical_words", "non_typical_words", "error",
]

SUMMARY_COLUMNS = [
    "config_hash", "kind", "ell", "n", "replicas", "h_target",
    "mean_word_count", "mean_lz_rate", "se_lz_rate", "rel_dev_from_h",
    "mean_code_rate", "non_typical_fraction", "mean_low_typical_words",
    "entropy_gap_per_site", "error",
]

GAP_COLUMNS = ["config_hash", "ell", "n", "cells", "gap_bits", "gap_per_site",
               "skipped"]


@dataclass(frozen=True)
class ExperimentConfig:
    stats: Statistics
    beta: float
    mu: float | None
    r: float | None
    dispersion: Dispersion
    lengths: tuple[int, ...]
    replicas: int
    seed: int
    kind: str
    epsilon: float
    two_sided: bool
    quad_tol: float
    tail_tol: float
    gap_budget: int
    check_scale: str
    out_format: str
    config_hash: str


def _parse_bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {raw!r}")


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from exc


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from exc


def _parse_dispersion(raw: str) -> Dispersion:
    if raw == "cosine":
        return CosineLattice()
    if raw.startswith("grid:"):
        try:
            vals = tuple(float(v) for v in raw[len("grid:"):].split(","))
        except ValueError as exc:
            raise ConfigError(f"bad grid dispersion {raw!r}") from exc
        if len(vals) < 2:
            raise ConfigError("grid dispersion needs at least two values")
        return TabulatedGrid(vals)
    raise ConfigError(f"unknown dispersion {raw!r} (use cosine or grid:v0,v1,...)")


def read_config_mapping(path: str | Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in mapping:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        mapping[key] = raw
    return mapping


def _hash_mapping(mapping: dict[str, str]) -> str:
    canon = "\n".join(f"{k}={v}" for k, v in sorted(mapping.items()))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def load_config(path: str | Path, seed_override: int | None = None,
                format_override: str | None = None) -> ExperimentConfig:
    m = read_config_mapping(path)

    def need(key: str) -> str:
        if key not in m:
            raise ConfigError(f"missing required key {key}")
        return m[key]

    stats_raw = need("ensemble.stats").lower()
    try:
        stats = Statistics(stats_raw)
    except ValueError as exc:
        raise ConfigError(f"ensemble.stats must be bose or fermi, got {stats_raw!r}") \
            from exc
    beta = _parse_float("ensemble.beta", need("ensemble.beta"))
    mu = _parse_float("ensemble.mu", m["ensemble.mu"]) if "ensemble.mu" in m else None
    r = _parse_float("ensemble.r", m["ensemble.r"]) if "ensemble.r" in m else None
    if (mu is None) == (r is None):
        raise ConfigError("give exactly one of ensemble.mu and ensemble.r")
    dispersion = _parse_dispersion(m.get("ensemble.dispersion", "cosine"))

    lengths_raw = need("run.lengths")
    try:
        lengths = tuple(int(tok) for tok in lengths_raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"run.lengths must be comma-separated integers") from exc
    if not lengths or any(ell < 2 for ell in lengths):
        raise ConfigError("run.lengths must list integers >= 2")
    replicas = _parse_int("run.replicas", m.get("run.replicas", "4"))
    if replicas < 1:
        raise ConfigError("run.replicas must be at least 1")
    seed = _parse_int("run.seed", m.get("run.seed", "0"))
    if seed_override is not None:
        seed = seed_override
    if seed < 0:
        raise ConfigError("run.seed must be nonnegative")
    kind = m.get("run.kind", "canonical").lower()
    if kind not in ("canonical", "grand"):
        raise ConfigError(f"run.kind must be canonical or grand, got {kind!r}")

    epsilon = _parse_float("analysis.epsilon", m.get("analysis.epsilon", "0.3"))
    if not (0.0 < epsilon < 1.0):
        raise ConfigError("analysis.epsilon must lie in (0, 1)")
    two_sided = _parse_bool("analysis.two_sided", m.get("analysis.two_sided", "false"))
    quad_tol = _parse_float("analysis.quad_tol", m.get("analysis.quad_tol", "1e-9"))
    if quad_tol <= 0.0:
        raise ConfigError("analysis.quad_tol must be positive")
    tail_tol = _parse_float("analysis.tail_tol", m.get("analysis.tail_tol", "1e-12"))
    if not (0.0 < tail_tol < 1e-6):
        raise ConfigError("analysis.tail_tol must be a small positive mass")
    gap_budget = _parse_int("analysis.gap_budget",
                            m.get("analysis.gap_budget", str(1 << 23)))
    if gap_budget < 0:
        raise ConfigError("analysis.gap_budget must be nonnegative")
    check_scale = m.get("analysis.check_scale", "full").lower()
    if check_scale not in ("full", "quick"):
        raise ConfigError("analysis.check_scale must be full or quick")

    out_format = m.get("output.format", "both").lower()
    if format_override is not None:
        out_format = format_override
    if out_format not in ("csv", "jsonl", "both"):
        raise ConfigError("output.format must be csv, jsonl or both")

    try:
        return ExperimentConfig(
            stats=stats, beta=beta, mu=mu, r=r, dispersion=dispersion,
            lengths=lengths, replicas=replicas, seed=seed, kind=kind,
            epsilon=epsilon, two_sided=two_sided, quad_tol=quad_tol,
            tail_tol=tail_tol, gap_budget=gap_budget, check_scale=check_scale,
            out_format=out_format, config_hash=_hash_mapping(m),
        )
    except GibbsLzError:
        raise


def resolve_spec(cfg: ExperimentConfig) -> tuple[EnsembleSpec, float, float]:
    """EnsembleSpec plus (target density, entropy rate in bits per site).

    When the config pins the density, the chemical potential is solved for
    once here; when it pins mu, the density is integrated from the profile.
    """
    try:
        if cfg.mu is not None:
            spec = EnsembleSpec(cfg.stats, cfg.beta, cfg.mu, cfg.dispersion)
            r_eff = particle_density(spec, cfg.quad_tol)
        else:
            mu = solve_mu(cfg.stats, cfg.dispersion, cfg.beta, cfg.r,
                          quad_tol=cfg.quad_tol)
            spec = EnsembleSpec(cfg.stats, cfg.beta, mu, cfg.dispersion)
            r_eff = cfg.r
    except (EnsembleError, TargetRangeError) as exc:
        raise ConfigError(f"ensemble block is inconsistent: {exc}") from exc
    return spec, r_eff, entropy_rate(spec, cfg.quad_tol)


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt_cell(row.get(c)) for c in columns))
    path.write_text("\n".join(lines) + "\n")


def _write_jsonl(path: Path, rows: list[dict]) -> None:
    with path.open("w") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def _emit(out_dir: Path, stem: str, columns: list[str], rows: list[dict],
          fmt: str) -> None:
    if fmt in ("csv", "both"):
        _write_csv(out_dir / f"{stem}.csv", columns, rows)
    if fmt in ("jsonl", "both"):
        _write_jsonl(out_dir / f"{stem}.jsonl", rows)


# Per-length shared state for worker processes; populated in the parent
# right before the (fork-context) pool for that length is created.
_SHARED: dict = {}


def _replica_rows(replicas: list[int]) -> tuple[list[dict], list[dict]]:
    st = _SHARED
    spec: EnsembleSpec = st["spec"]
    cfg: ExperimentConfig = st["cfg"]
    ell: int = st["ell"]
    rows: list[dict] = []
    times: list[dict] = []
    t0 = time.perf_counter()
    if cfg.kind == "canonical":
        strings = st["sampler"].sample_batch(cfg.seed, replicas)
    else:
        strings = [sample_grand(spec, ell, cfg.seed, rep) for rep in replicas]
    sample_share = (time.perf_counter() - t0) / len(replicas)
    for rep, s in zip(replicas, strings):
        t1 = time.perf_counter()
        parse = lz78_parse(s)
        counts = classify_words(parse, s, spec, st["typical"])
        elapsed = time.perf_counter() - t1 + sample_share
        rows.append({
            "config_hash": cfg.config_hash,
            "kind": cfg.kind,
            "ell": ell,
            "n": st["n"],
            "replica": rep,
            "word_count": parse.word_count,
            "lz_rate": lz_rate(parse),
            "code_rate": code_rate(parse),
            "h_target": st["h_target"],
            "entropy_gap_per_site": st["gap_per_site"],
            "low_typical_words": counts.low_typical,
            "other_typical_words": counts.other_typical,
            "non_typical_words": counts.non_typical,
            "error": None,
        })
        times.append({"ell": ell, "replica": rep, "seconds": elapsed})
    return rows, times


def _chunks(items: list[int], parts: int) -> list[list[int]]:
    parts = max(1, min(parts, len(items)))
    size = math.ceil(len(items) / parts)
    return [items[i:i + size] for i in range(0, len(items), size)]


def _error_row(cfg: ExperimentConfig, ell: int, n: int | None, msg: str) -> dict:
    row = {c: None for c in RESULT_COLUMNS}
    row.update({"config_hash": cfg.config_hash, "kind": cfg.kind, "ell": ell,
                "n": n, "error": msg})
    return row


def _run_length(cfg: ExperimentConfig, spec: EnsembleSpec, r_target: float,
                h_target: float, ell: int, workers: int,
                ) -> tuple[list[dict], list[dict]]:
    typical = TypicalParams.from_ensemble(spec, cfg.epsilon,
                                          two_sided=cfg.two_sided)
    n: int | None = None
    sampler_obj = None
    gap_per_site = None
    if cfg.kind == "canonical":
        n = choose_n(r_target, ell).n
        try:
            sampler_obj = CanonicalSampler(spec, ell, n, tail_tol=cfg.tail_tol)
        except ImpossibleConditionError as exc:
            return [_error_row(cfg, ell, n, str(exc))], []
        if cfg.gap_budget and (ell + 1) * (n + 1) <= cfg.gap_budget:
            tables = marginal_tables(spec, ell, tail_tol=cfg.tail_tol)
            gap_per_site = entropy_gap(tables, n, max_cells=cfg.gap_budget) / ell

    _SHARED.clear()
    _SHARED.update({
        "cfg": cfg, "spec": spec, "ell": ell, "n": n, "h_target": h_target,
        "typical": typical, "sampler": sampler_obj, "gap_per_site": gap_per_site,
    })
    replicas = list(range(cfg.replicas))
    if workers <= 1 or len(replicas) == 1:
        outputs = [_replica_rows(replicas)]
    else:
        chunks = _chunks(replicas, workers)
        ctx = get_context("fork")
        with ProcessPoolExecutor(max_workers=len(chunks), mp_context=ctx) as pool:
            outputs = list(pool.map(_replica_rows, chunks))
    rows: list[dict] = []
    times: list[dict] = []
    for r_chunk, t_chunk in outputs:
        rows.extend(r_chunk)
        times.extend(t_chunk)
    rows.sort(key=lambda row: row["replica"])
    times.sort(key=lambda row: row["replica"])
    return rows, times


def _summarise(cfg: ExperimentConfig, rows: list[dict], h_target: float) -> list[dict]:
    out: list[dict] = []
    for ell in cfg.lengths:
        block = [r for r in rows if r["ell"] == ell]
        if not block:
            continue
        err = next((r for r in block if r["error"]), None)
        if err is not None:
            srow = {c: None for c in SUMMARY_COLUMNS}
            srow.update({"config_hash": cfg.config_hash, "kind": cfg.kind,
                         "ell": ell, "n": err["n"], "error": err["error"]})
            out.append(srow)
            continue
        rates = np.array([r["lz_rate"] for r in block])
        words = np.array([r["word_count"] for r in block], dtype=float)
        non_typ = sum(r["non_typical_words"] for r in block)
        total_words = int(words.sum())
        se = float(rates.std(ddof=1) / math.sqrt(len(block))) if len(block) > 1 else 0.0
        out.append({
            "config_hash": cfg.config_hash,
            "kind": cfg.kind,
            "ell": ell,
            "n": block[0]["n"],
            "replicas": len(block),
            "h_target": h_target,
            "mean_word_count": float(words.mean()),
            "mean_lz_rate": float(rates.mean()),
            "se_lz_rate": se,
            "rel_dev_from_h": float((rates.mean() - h_target) / h_target),
            "mean_code_rate": float(np.mean([r["code_rate"] for r in block])),
            "non_typical_fraction": non_typ / total_words if total_words else None,
            "mean_low_typical_words": float(
                np.mean([r["low_typical_words"] for r in block])),
            "entropy_gap_per_site": block[0]["entropy_gap_per_site"],
            "error": None,
        })
    return out


def cmd_converge(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    spec, r_target, h_target = resolve_spec(cfg)
    all_rows: list[dict] = []
    all_times: list[dict] = []
    for ell in cfg.lengths:
        rows, times = _run_length(cfg, spec, r_target, h_target, ell, workers)
        all_rows.extend(rows)
        all_times.extend(times)
    all_rows.sort(key=lambda r: (r["ell"], -1 if r["replica"] is None else r["replica"]))
    summaries = _summarise(cfg, all_rows, h_target)
    _emit(out_dir, "results", RESULT_COLUMNS, all_rows, cfg.out_format)
    _emit(out_dir, "summary", SUMMARY_COLUMNS, summaries, cfg.out_format)
    _write_csv(out_dir / "timings.csv", ["ell", "replica", "seconds"], all_times)
    for s in summaries:
        if s["error"]:
            print(f"ell={s['ell']}: ERROR {s['error']}")
        else:
            print(f"ell={s['ell']}: mean_lz_rate={s['mean_lz_rate']:.6f} "
                  f"(h={h_target:.6f}, rel_dev={s['rel_dev_from_h']:+.4f}, "
                  f"se={s['se_lz_rate']:.2e})")
    return 0


def cmd_sample(cfg: ExperimentConfig, out_dir: Path, workers: int) -> int:
    spec, r_target, _ = resolve_spec(cfg)
    samples_dir = out_dir / "samples"
    samples_dir.mkdir(parents=True, exist_ok=True)
    manifest: list[dict] = []
    for ell in cfg.lengths:
        if cfg.kind == "canonical":
            n = choose_n(r_target, ell).n
            try:
                cs = CanonicalSampler(spec, ell, n, tail_tol=cfg.tail_tol)
            except ImpossibleConditionError as exc:
                manifest.append({"kind": cfg.kind, "ell": ell, "n": n,
                                 "replica": None, "file": None, "sum": None,
                                 "truncation_tail": None, "error": str(exc)})
                continue
            strings = cs.sample_batch(cfg.seed, list(range(cfg.replicas)))
        else:
            strings = [sample_grand(spec, ell, cfg.seed, rep)
                       for rep in range(cfg.replicas)]
        for s in strings:
            name = f"sample_{cfg.kind}_ell{ell}_rep{s.provenance.replica}.txt"
            (samples_dir / name).write_text(
                "\n".join(str(v) for v in s.values.tolist()) + "\n")
            manifest.append({
                "kind": cfg.kind, "ell": ell, "n": s.provenance.n,
                "replica": s.provenance.replica, "file": name,
                "sum": int(s.values.sum()),
                "truncation_tail": s.provenance.truncation_tail, "error": None,
            })
    cols = ["kind", "ell", "n", "replica", "file", "sum", "truncation_tail", "error"]
    _emit(samples_dir, "manifest", cols, manifest, cfg.out_format)
    print(f"wrote {sum(1 for m in manifest if m['file'])} samples to {samples_dir}")
    return 0


def cmd_parse(cfg: ExperimentConfig, out_dir: Path, inputs: list[str]) -> int:
    rows = []
    for path in inputs:
        try:
            tokens = Path(path).read_text().split()
            values = np.array([int(tok) for tok in tokens], dtype=np.int64)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read occupancy file {path}: {exc}") from exc
        parse = lz78_parse(values)
        rows.append({
            "file": os.path.basename(path),
            "ell": parse.ell,
            "word_count": parse.word_count,
            "lz_rate": lz_rate(parse) if parse.ell >= 2 else None,
            "code_rate": code_rate(parse) if parse.ell >= 2 else None,
        })
    _write_jsonl(out_dir / "parse.jsonl", rows)
    for row in rows:
        print(json.dumps(row, sort_keys=True))
    return 0


def cmd_entropy_gap(cfg: ExperimentConfig, out_dir: Path) -> int:
    spec, r_target, _ = resolve_spec(cfg)
    rows = []
    for ell in cfg.lengths:
        n = choose_n(r_target, ell).n
        cells = (ell + 1) * (n + 1)
        row = {"config_hash": cfg.config_hash, "ell": ell, "n": n, "cells": cells,
               "gap_bits": None, "gap_per_site": None, "skipped": False}
        if cells > cfg.gap_budget:
            row["skipped"] = True
        else:
            tables = marginal_tables(spec, ell, tail_tol=cfg.tail_tol)
            gap = entropy_gap(tables, n, max_cells=cfg.gap_budget)
            row["gap_bits"] = gap
            row["gap_per_site"] = gap / ell
        rows.append(row)
    _emit(out_dir, "entropy_gap", GAP_COLUMNS, rows, cfg.out_format)
    for row in rows:
        if row["skipped"]:
            print(f"ell={row['ell']}: skipped ({row['cells']} cells over budget "
                  f"{cfg.gap_budget})")
        else:
            print(f"ell={row['ell']}: n={row['n']} gap_bits={row['gap_bits']:.6f} "
                  f"per_site={row['gap_per_site']:.6g}")
    return 0


def cmd_check(cfg: ExperimentConfig, out_dir: Path,
              inject_fault: str | None) -> int:
    spec, _, _ = resolve_spec(cfg)
    scale = checks.BatteryScale.full() if cfg.check_scale == "full" \
        else checks.BatteryScale.quick()
    results = checks.run_batteries(spec, cfg.seed, scale, inject_fault=inject_fault)
    _write_jsonl(out_dir / "check_report.jsonl",
                 [{"name": r.name, "passed": r.passed, "detail": r.detail}
                  for r in results])
    failures = 0
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        print(f"[{tag}] {r.name}: {r.detail}")
        failures += 0 if r.passed else 1
    if failures:
        print(f"{failures} of {len(results)} batteries failed")
        return 2
    print(f"all {len(results)} batteries passed")
    return 0


def _scalar_command(cfg: ExperimentConfig, which: str) -> int:
    if which == "solve-mu":
        if cfg.r is None:
            raise ConfigError("solve-mu requires ensemble.r in the config")
        value = solve_mu(cfg.stats, cfg.dispersion, cfg.beta, cfg.r,
                         quad_tol=cfg.quad_tol)
    else:
        spec, _, h_target = resolve_spec(cfg)
        value = particle_density(spec, cfg.quad_tol) if which == "density" \
            else h_target
    print(repr(float(value)))
    return 0


def _resolve_workers(args) -> int:
    if args.workers is not None:
        value = args.workers
    else:
        raw = os.environ.get("GIBBSLZ_WORKERS", "1")
        try:
            value = int(raw)
        except ValueError as exc:
            raise ConfigError(f"GIBBSLZ_WORKERS must be an integer, got {raw!r}") \
                from exc
    if value < 1:
        raise ConfigError("worker count must be at least 1")
    return value


def build_arg_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override run.seed from the config")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "jsonl", "both"), default=None,
                        help="override output.format from the config")
    common.add_argument("--workers", type=int, default=None,
                        help="process count (default: GIBBSLZ_WORKERS or 1)")

    parser = argparse.ArgumentParser(
        prog="gibbslz",
        description="Word-count statistics of Bose/Fermi occupancy strings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("density", parents=[common],
                   help="print the particle density integral")
    sub.add_parser("rate", parents=[common],
                   help="print the entropy rate integral (bits per site)")
    sub.add_parser("solve-mu", parents=[common],
                   help="print the chemical potential matching ensemble.r")
    sub.add_parser("sample", parents=[common],
                   help="write occupancy strings and a manifest")
    p_parse = sub.add_parser("parse", parents=[common],
                             help="parse occupancy files and report word counts")
    p_parse.add_argument("inputs", nargs="+", help="occupancy files (one int per line)")
    sub.add_parser("converge", parents=[common],
                   help="replicated rate study across run.lengths")
    sub.add_parser("entropy-gap", parents=[common],
                   help="exact conditioning entropy cost per length")
    p_check = sub.add_parser("check", parents=[common],
                             help="run the property batteries")
    p_check.add_argument("--inject-fault", default=None, metavar="BATTERY",
                         help="deliberately corrupt one battery (negative control)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        workers = _resolve_workers(args)
        cfg = load_config(args.config, seed_override=args.seed,
                          format_override=args.format)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command in ("density", "rate", "solve-mu"):
            return _scalar_command(cfg, args.command)
        if args.command == "sample":
            return cmd_sample(cfg, out_dir, workers)
        if args.command == "parse":
            return cmd_parse(cfg, out_dir, args.inputs)
        if args.command == "converge":
            return cmd_converge(cfg, out_dir, workers)
        if args.command == "entropy-gap":
            return cmd_entropy_gap(cfg, out_dir)
        if args.command == "check":
            return cmd_check(cfg, out_dir, args.inject_fault)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GibbsLzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

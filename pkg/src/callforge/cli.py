"""Command-line pipeline: audit, repair, sample, serialize, split, evaluate, report.

Every stage reads declared inputs, builds its outputs in memory and writes
them atomically next to a ``manifest.json`` recording input checksums, the
config hash, the seed and counts. Exit codes: 0 success, 1 input error,
2 internal error; errors are printed to stderr as JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import functools
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

from . import fixtures
from .audit_repair import NormalizationMap, PrunePlan, apply_prune, audit, format_audit, normalize_sample
from .call_parser import normalize_mode
from .chat_serializer import SerializerConfig, serialize, serialize_think
from .evaluator import EvaluationInputError, MetricsReport, evaluate, render_report
from .io import (
    InputError,
    atomic_write_text,
    config_hash,
    dumps,
    iter_jsonl,
    jsonl_text,
    parallel_map,
    read_jsonl,
    sha256_bytes,
    sha256_file,
)
from .schema_core import NONE_IS_VALID, EmptyQueryError, Sample, SchemaError, dump_inventory, load_inventory, validate_call
from .splitter import SplitSpec, split_manifest, stratified_split
from .tool_sampler import SamplerConfig, sample_tools

STAGES = ("audit", "repair", "sample", "serialize", "split", "evaluate", "report")
ENV_PREFIX = "CALLFORGE_"
PATH_FIELDS = ("corpus", "inventory", "normalization_map", "prune_plan", "predictions", "serializer_config", "output_dir")
ENV_SCALARS = {"seed": int, "jobs": int, "k": int, "epoch": int, "token_budget": int, "mode": str}


@dataclass
class PipelineConfig:
    corpus: str | None = None
    inventory: str | None = None
    normalization_map: str | None = None
    prune_plan: str | None = None
    predictions: str | None = None
    serializer_config: str | None = None
    output_dir: str = "out"
    seed: int = 0
    k: int = 5
    epoch: int = 0
    token_budget: int = 2048
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    strata_keys: tuple[str, ...] = ("dialect", "domain")
    mode: str = "strict"
    think: bool = False
    jobs: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
        for key in PATH_FIELDS:
            if data.get(key) is not None and not os.path.isabs(data[key]):
                data[key] = str(path.parent / data[key])
        if "ratios" in data:
            data["ratios"] = tuple(data["ratios"])
        if "strata_keys" in data:
            data["strata_keys"] = tuple(data["strata_keys"])
        return cls(**data)

    def hashable(self) -> dict[str, Any]:
        """Config fields that affect artifacts; paths are covered by input checksums."""
        d = dataclasses.asdict(self)
        for key in PATH_FIELDS:
            d.pop(key)
        d.pop("jobs")
        return d


def _require(cfg: PipelineConfig, *names: str) -> None:
    for name in names:
        value = getattr(cfg, name)
        if not value:
            raise InputError(f"missing required path: {name}")
        if not os.path.exists(value):
            raise InputError(f"{name} not found: {value}")


def _serializer_config(cfg: PipelineConfig) -> SerializerConfig:
    return SerializerConfig.from_file(cfg.serializer_config) if cfg.serializer_config else SerializerConfig()


def _inputs(cfg: PipelineConfig, **paths: str | None) -> dict[str, str]:
    return {role: sha256_file(p) for role, p in paths.items() if p}


def _read_corpus(path: str) -> list[Any]:
    return [row for _, row in iter_jsonl(path)]


def stage_audit(cfg: PipelineConfig) -> tuple[dict[str, str], dict[str, Any], dict[str, str]]:
    _require(cfg, "corpus", "inventory")
    inventory = load_inventory(cfg.inventory)
    report = audit(_read_corpus(cfg.corpus), inventory, cfg.token_budget, serializer_config=_serializer_config(cfg), jobs=cfg.jobs)
    files = {
        "audit.json": json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n",
        "audit.txt": format_audit(report),
    }
    counts = {
        "total_samples": report.total_samples,
        "empty_queries": report.empty_queries,
        "unreadable_rows": len(report.unreadable_rows),
        "enum_violations_legacy": report.enum_violations_legacy,
        "enum_violations_fixed": report.enum_violations_fixed,
        "samples_restored_by_fix": report.samples_restored_by_fix,
        "oversized_prompts": report.oversized_prompts,
        "dead_tools": len(report.dead_tools),
    }
    return files, counts, _inputs(cfg, corpus=cfg.corpus, inventory=cfg.inventory, serializer_config=cfg.serializer_config)


def stage_repair(cfg: PipelineConfig):
    _require(cfg, "corpus", "inventory")
    inventory = load_inventory(cfg.inventory)
    nmap = NormalizationMap.from_file(cfg.normalization_map) if cfg.normalization_map else NormalizationMap({})
    nmap.check_against(inventory)
    plan = PrunePlan.from_file(cfg.prune_plan) if cfg.prune_plan else PrunePlan()

    samples: list[Sample] = []
    empty = unreadable = normalized = 0
    for row in _read_corpus(cfg.corpus):
        if isinstance(row, InputError):
            unreadable += 1
            continue
        try:
            s = Sample.from_dict(row)
        except EmptyQueryError:
            empty += 1
            continue
        except (SchemaError, TypeError, AttributeError, ValueError):
            unreadable += 1
            continue
        fixed = normalize_sample(s, nmap)
        normalized += fixed is not s
        samples.append(fixed)

    pruned = apply_prune(samples, inventory, plan)
    index = {t.name: t for t in pruned.inventory}
    kept = [s for s in pruned.samples if s.target is None or validate_call(s.target, index, NONE_IS_VALID).valid]
    files = {
        "samples.jsonl": jsonl_text(s.to_dict() for s in kept),
        "inventory.json": dump_inventory(pruned.inventory),
    }
    counts = {
        "input_rows": len(samples) + empty + unreadable,
        "empty_queries": empty,
        "unreadable_rows": unreadable,
        "normalized": normalized,
        "pruned_dropped": pruned.dropped,
        "merged_rewritten": pruned.rewritten,
        "invalid_dropped": len(pruned.samples) - len(kept),
        "output_samples": len(kept),
        "tools_before": len(inventory),
        "tools_after": len(pruned.inventory),
    }
    inputs = _inputs(
        cfg,
        corpus=cfg.corpus,
        inventory=cfg.inventory,
        normalization_map=cfg.normalization_map,
        prune_plan=cfg.prune_plan,
    )
    return files, counts, inputs


def stage_sample(cfg: PipelineConfig, samples_path: str, inventory_path: str):
    inventory = load_inventory(inventory_path)
    scfg = SamplerConfig(k=cfg.k, seed=cfg.seed, epoch=cfg.epoch)
    rows = []
    for raw in read_jsonl(samples_path):
        s = Sample.from_dict(raw)
        subset = sample_tools(inventory, s.target.tool_name if s.target else None, s.requires_function, s.id, scfg)
        row = s.to_dict()
        row["offered_tools"] = [t.name for t in subset]
        rows.append(row)
    files = {"sampled.jsonl": jsonl_text(rows)}
    counts = {"samples": len(rows), "k": cfg.k}
    return files, counts, _inputs(cfg, samples=samples_path, inventory=inventory_path)


def _serialize_row(row: dict[str, Any], index: dict, config: SerializerConfig, think: bool) -> dict[str, Any]:
    s = Sample.from_dict(row)
    tools = [index[name] for name in row["offered_tools"]]
    override = row.get("token_count")
    if think and s.reasoning:
        ex = serialize_think(s, s.reasoning, tools, config, token_count=override)
    else:
        ex = serialize(s, tools, config, token_count=override)
    return ex.to_dict()


def stage_serialize(cfg: PipelineConfig, sampled_path: str, inventory_path: str):
    inventory = load_inventory(inventory_path)
    config = _serializer_config(cfg)
    rows = read_jsonl(sampled_path)
    for row in rows:
        if "offered_tools" not in row:
            raise InputError(f"row {row.get('id')!r} has no offered_tools; run the sample stage first")
    worker = functools.partial(_serialize_row, index={t.name: t for t in inventory}, config=config, think=cfg.think)
    out = parallel_map(worker, rows, cfg.jobs)
    over = sum(1 for r in out if r["token_count"] > cfg.token_budget)
    counts = {
        "examples": len(out),
        "max_tokens": max((r["token_count"] for r in out), default=0),
        "over_budget": over,
        "token_budget": cfg.token_budget,
    }
    inputs = _inputs(cfg, sampled=sampled_path, inventory=inventory_path, serializer_config=cfg.serializer_config)
    return {"serialized.jsonl": jsonl_text(out)}, counts, inputs


def stage_split(cfg: PipelineConfig, sampled_path: str, serialized_path: str):
    sampled = read_jsonl(sampled_path)
    serialized = {r["id"]: r for r in read_jsonl(serialized_path)}
    records: dict[str, dict[str, Any]] = {}
    samples = []
    for row in sampled:
        ser = serialized.get(row["id"])
        if ser is None:
            raise InputError(f"sample {row['id']!r} has no serialized example")
        merged = dict(row)
        merged.update(text=ser["text"], prompt_end=ser["prompt_end"], token_count=ser["token_count"])
        records[row["id"]] = merged
        samples.append(Sample.from_dict(row))
    spec = SplitSpec(cfg.ratios, cfg.seed, cfg.strata_keys)
    result = stratified_split(samples, spec)
    files = {
        f"{name}.jsonl": jsonl_text(records[s.id] for s in part)
        for name, part in zip(("train", "val", "test"), result.parts())
    }
    manifest = split_manifest(result, spec)
    files["split_manifest.json"] = json.dumps(manifest, ensure_ascii=False, indent=2) + "\n"
    return files, dict(manifest["sizes"]), _inputs(cfg, sampled=sampled_path, serialized=serialized_path)


def evaluate_records(gold_rows: Sequence[dict[str, Any]], predictions: Sequence[dict[str, Any]], mode: str, config: SerializerConfig | None = None):
    """Parse and score prediction rows against gold rows; returns ``(parsed, scores, report)``."""
    outputs: dict[str, str] = {}
    for p in predictions:
        pid = p.get("id")
        if pid in outputs:
            raise EvaluationInputError(f"duplicate prediction for id {pid!r}")
        outputs[pid] = p.get("output", "")
    samples = [Sample.from_dict(row) for row in gold_rows]
    offered = {row["id"]: row["offered_tools"] for row in gold_rows if "offered_tools" in row}
    return evaluate(samples, offered, outputs, mode, config)


def stage_evaluate(cfg: PipelineConfig, gold_path: str):
    _require(cfg, "predictions")
    parsed, scores, report = evaluate_records(read_jsonl(gold_path), read_jsonl(cfg.predictions), cfg.mode, _serializer_config(cfg))
    files = {
        "scores.jsonl": jsonl_text(s.to_dict() for s in scores),
        "parsed.jsonl": jsonl_text({"id": s.sample_id, **p.to_dict()} for s, p in zip(scores, parsed)),
        "report.json": render_report(report, "json") if report.n else json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n",
    }
    counts = {"records": report.n, "mode": report.metadata["mode"]}
    return files, counts, _inputs(cfg, gold=gold_path, predictions=cfg.predictions, serializer_config=cfg.serializer_config)


def stage_report(cfg: PipelineConfig, report_path: str):
    with open(report_path, encoding="utf-8") as f:
        report = MetricsReport.from_dict(json.load(f))
    files = {"report.md": render_report(report, "markdown")}
    return files, {"records": report.n}, _inputs(cfg, report=report_path)


def write_stage(name: str, out_dir: Path, cfg: PipelineConfig, result) -> dict[str, Any]:
    files, counts, inputs = result
    out_dir.mkdir(parents=True, exist_ok=True)
    for fname, text in files.items():
        atomic_write_text(out_dir / fname, text)
    manifest = {
        "stage": name,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg.hashable()),
        "inputs": inputs,
        "outputs": {fname: sha256_bytes(text.encode("utf-8")) for fname, text in sorted(files.items())},
        "counts": counts,
    }
    atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, ensure_ascii=False, indent=2) + "\n")
    return manifest


def _validate_pipeline_inputs(cfg: PipelineConfig) -> None:
    _require(cfg, "corpus", "inventory", "predictions")
    load_inventory(cfg.inventory)
    if cfg.normalization_map:
        _require(cfg, "normalization_map")
        NormalizationMap.from_file(cfg.normalization_map)
    if cfg.prune_plan:
        _require(cfg, "prune_plan")
        PrunePlan.from_file(cfg.prune_plan)
    if cfg.serializer_config:
        _require(cfg, "serializer_config")
        SerializerConfig.from_file(cfg.serializer_config)
    read_jsonl(cfg.predictions)
    SplitSpec(cfg.ratios, cfg.seed, cfg.strata_keys)
    normalize_mode(cfg.mode)


def run_pipeline(cfg: PipelineConfig) -> dict[str, dict[str, Any]]:
    """Run all stages into ``output_dir/<stage>/``."""
    _validate_pipeline_inputs(cfg)
    root = Path(cfg.output_dir)
    d = {name: root / name for name in STAGES}
    manifests = {}
    manifests["audit"] = write_stage("audit", d["audit"], cfg, stage_audit(cfg))
    manifests["repair"] = write_stage("repair", d["repair"], cfg, stage_repair(cfg))
    repaired_inv = str(d["repair"] / "inventory.json")
    manifests["sample"] = write_stage("sample", d["sample"], cfg, stage_sample(cfg, str(d["repair"] / "samples.jsonl"), repaired_inv))
    sampled = str(d["sample"] / "sampled.jsonl")
    manifests["serialize"] = write_stage("serialize", d["serialize"], cfg, stage_serialize(cfg, sampled, repaired_inv))
    manifests["split"] = write_stage("split", d["split"], cfg, stage_split(cfg, sampled, str(d["serialize"] / "serialized.jsonl")))
    manifests["evaluate"] = write_stage("evaluate", d["evaluate"], cfg, stage_evaluate(cfg, str(d["split"] / "test.jsonl")))
    manifests["report"] = write_stage("report", d["report"], cfg, stage_report(cfg, str(d["evaluate"] / "report.json")))
    return manifests


def write_fixtures(out_dir: str | Path, rows: int = 2000, seed: int = 0) -> Path:
    """Write a synthetic corpus, configs and simulated predictions; returns the pipeline config path."""
    import random

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inventory = fixtures.raw_inventory()
    dead = ["check_balance", "calculate_zakat", "get_air_quality", "find_restaurants", "check_outage", "search_products"]
    corpus = fixtures.make_corpus(
        rows,
        seed=seed,
        inventory=inventory,
        null_enum_count=rows // 5,
        dead_tools=dead,
        variant_count=rows // 20,
        empty_queries=max(1, rows // 200),
        with_reasoning=True,
    )
    atomic_write_text(out / "corpus.jsonl", jsonl_text(corpus))
    atomic_write_text(out / "inventory.json", dump_inventory(inventory))
    atomic_write_text(out / "normalization_map.json", json.dumps(fixtures.default_normalization_map(), ensure_ascii=False, indent=2) + "\n")
    atomic_write_text(out / "prune_plan.json", json.dumps(fixtures.default_prune_plan(), ensure_ascii=False, indent=2) + "\n")
    atomic_write_text(out / "serializer_config.json", json.dumps(SerializerConfig().to_dict(), ensure_ascii=False, indent=2) + "\n")

    rng = random.Random(seed + 1)
    pruned = fixtures.pruned_inventory()
    renames = {a: r["target"] for a, r in fixtures.default_prune_plan()["merge"].items()}
    preds = []
    for row in corpus:
        try:
            s = Sample.from_dict(row)
        except SchemaError:
            preds.append({"id": row["id"], "output": ""})
            continue
        if s.target and s.target.tool_name in renames:
            s = dataclasses.replace(s, target=dataclasses.replace(s.target, tool_name=renames[s.target.tool_name]))
        preds.append({"id": s.id, "output": fixtures.simulate_output(s, pruned, rng)})
    atomic_write_text(out / "predictions.jsonl", jsonl_text(preds))

    config = {
        "corpus": "corpus.jsonl",
        "inventory": "inventory.json",
        "normalization_map": "normalization_map.json",
        "prune_plan": "prune_plan.json",
        "predictions": "predictions.jsonl",
        "serializer_config": "serializer_config.json",
        "output_dir": "out",
        "seed": seed,
        "k": 5,
        "token_budget": 2048,
        "ratios": [0.8, 0.1, 0.1],
        "strata_keys": ["dialect", "domain"],
        "mode": "strict",
    }
    path = out / "pipeline.json"
    atomic_write_text(path, json.dumps(config, ensure_ascii=False, indent=2) + "\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="callforge", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, help="seed for every random choice (recorded in manifests)")
    parser.add_argument("--jobs", type=int, help="worker processes for per-record work")
    parser.add_argument("--config", help="pipeline config JSON; relative paths resolve against its directory")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str, *paths: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        for path in paths:
            p.add_argument(f"--{path.replace('_', '-')}", dest=path)
        p.add_argument("--out-dir", dest="output_dir")
        return p

    p = add("audit", "structural audit of a raw corpus", "corpus", "inventory", "serializer_config")
    p.add_argument("--token-budget", type=int)
    add("repair", "normalize enums, prune tools, drop invalid rows", "corpus", "inventory", "normalization_map", "prune_plan")
    p = add("sample", "attach a k-tool subset to every sample", "samples", "inventory")
    p.add_argument("--k", type=int)
    p.add_argument("--epoch", type=int)
    p = add("serialize", "render control-token chat text", "sampled", "inventory", "serializer_config")
    p.add_argument("--think", action="store_true", default=None, help="use reasoning traces when rows carry them")
    p.add_argument("--token-budget", type=int)
    p = add("split", "stratified train/val/test split", "sampled", "serialized")
    p.add_argument("--ratios", type=float, nargs=3)
    p.add_argument("--strata", nargs="+", dest="strata_keys")
    p = add("evaluate", "parse and score predictions", "gold", "predictions", "serializer_config")
    p.add_argument("--mode", choices=["strict", "deployment-aware", "deployment_aware"])
    add("report", "render report.md from report.json", "report_json")
    p = add("pipeline", "run every stage end to end", "corpus", "inventory", "normalization_map", "prune_plan", "predictions", "serializer_config")
    p.add_argument("--k", type=int)
    p.add_argument("--mode", choices=["strict", "deployment-aware", "deployment_aware"])
    p = add("fixtures", "write a synthetic corpus, configs and predictions")
    p.add_argument("--rows", type=int, default=2000)
    return parser


def resolve_config(args: argparse.Namespace, environ: dict[str, str] | None = None) -> PipelineConfig:
    """Defaults < --config file < CALLFORGE_* environment < command-line flags."""
    environ = os.environ if environ is None else environ
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    for key in PATH_FIELDS:
        env = environ.get(ENV_PREFIX + key.upper())
        if env:
            setattr(cfg, key, env)
    for key, cast in ENV_SCALARS.items():
        env = environ.get(ENV_PREFIX + key.upper())
        if env:
            try:
                setattr(cfg, key, cast(env))
            except ValueError as exc:
                raise InputError(f"{ENV_PREFIX}{key.upper()}: {exc}") from None
    for key in ("seed", "jobs", "k", "epoch", "token_budget", "mode", "think", "strata_keys", *PATH_FIELDS):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "ratios", None):
        cfg.ratios = tuple(args.ratios)
    if getattr(args, "strata_keys", None):
        cfg.strata_keys = tuple(args.strata_keys)
    return cfg


def _need(args: argparse.Namespace, name: str) -> str:
    value = getattr(args, name, None)
    if not value:
        raise InputError(f"--{name.replace('_', '-')} is required")
    if not os.path.exists(value):
        raise InputError(f"{name} not found: {value}")
    return value


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cmd = args.command
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output_dir)
        if cmd == "fixtures":
            path = write_fixtures(out, rows=args.rows, seed=cfg.seed)
            print(path)
            return 0
        if cmd == "pipeline":
            manifests = run_pipeline(cfg)
            print(json.dumps({name: m["counts"] for name, m in manifests.items()}, ensure_ascii=False))
            return 0
        stage: dict[str, Callable[[], Any]] = {
            "audit": lambda: stage_audit(cfg),
            "repair": lambda: stage_repair(cfg),
            "sample": lambda: stage_sample(cfg, _need(args, "samples"), cfg.inventory or _need(args, "inventory")),
            "serialize": lambda: stage_serialize(cfg, _need(args, "sampled"), cfg.inventory or _need(args, "inventory")),
            "split": lambda: stage_split(cfg, _need(args, "sampled"), _need(args, "serialized")),
            "evaluate": lambda: stage_evaluate(cfg, _need(args, "gold")),
            "report": lambda: stage_report(cfg, _need(args, "report_json")),
        }
        manifest = write_stage(cmd, out, cfg, stage[cmd]())
        print(dumps(manifest["counts"]))
        return 0
    except (InputError, SchemaError, ValueError, KeyError, OSError) as exc:
        _emit_error(cmd, "input_error", exc)
        return 1
    except Exception as exc:  # noqa: BLE001
        _emit_error(cmd, "internal_error", exc)
        return 2


def _emit_error(command: str, kind: str, exc: BaseException) -> None:
    message = str(exc) if not isinstance(exc, KeyError) else f"missing field {exc.args[0]!r}"
    print(json.dumps({"error": {"type": kind, "stage": command, "exception": type(exc).__name__, "message": message}}, ensure_ascii=False), file=sys.stderr)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

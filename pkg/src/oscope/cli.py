"""Command-line entry point.

Multi-step experiments are driven by JSON configs (hashable, replayable);
one-shot verbs take flags. Every output is written atomically and recorded
with its digest in a run manifest, so identical configs and inputs yield
byte-identical artifacts.

Exit codes: 0 ok, 2 config schema violation, 3 missing input, 4 computation
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from . import __version__, forge, matching, mock, probe, report, sim, stats, svg
from .errors import OscopeError, SchemaError
from .linear import TrainConfig, save_probe, train_probe
from .store import load_store, save_store, _to_binary, _to_jsonl
from .util import atomic_write_bytes, atomic_write_text, parallel_map, sha256_file
from .vocab import load_vocabulary


class MissingInputError(OscopeError):
    pass


# ---------------------------------------------------------------------------
# config schemas
# ---------------------------------------------------------------------------

_TRAIN_PROPS = {
    "learning_rate": {"type": "number", "exclusiveMinimum": 0},
    "epochs": {"type": "integer", "minimum": 1},
    "batch_size": {"type": "integer", "minimum": 1},
    "l2": {"type": "number", "minimum": 0},
    "split_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "seed": {"type": "integer"},
}

SCHEMAS: dict[str, dict] = {
    "forge": {
        "type": "object",
        "required": ["name", "seed", "vocab", "mode"],
        "properties": {
            "name": {"type": "string"},
            "seed": {"type": "integer"},
            "vocab": {"type": "string"},
            "mode": {"enum": ["manifests", "scenario-trials", "claim1"]},
            "n_objects": {"type": "integer", "minimum": 2, "maximum": 5},
            "count": {"type": "integer", "minimum": 0},
            "template": {"enum": ["short", "long"]},
            "long_fillers": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "scenarios": {"type": "array", "items": {"enum": ["one", "two"]}, "minItems": 1},
            "out_scenes": {"type": "string"},
            "out_captions": {"type": "string"},
            "out_trials": {"type": "string"},
            "out_large_first": {"type": "string"},
            "out_small_first": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "mock-encode": {
        "type": "object",
        "required": ["name", "seed", "dim"],
        "properties": {
            "name": {"type": "string"},
            "seed": {"type": "integer"},
            "dim": {"type": "integer", "minimum": 8},
            "vocab": {"type": "string"},
            "text": {
                "type": "object",
                "required": ["captions", "out_store"],
                "properties": {
                    "captions": {"type": "string"},
                    "decay": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                    "keep": {"type": "integer", "minimum": 1},
                    "pos_jitter": {"type": "number", "minimum": 0},
                    "out_store": {"type": "string"},
                },
                "additionalProperties": False,
            },
            "image": {
                "type": "object",
                "required": ["scenes", "out_store"],
                "properties": {
                    "scenes": {"type": "string"},
                    "size_exponent": {"type": "number", "minimum": 0},
                    "large_scale": {"type": "number", "exclusiveMinimum": 1},
                    "weight_jitter": {"type": "number", "minimum": 0},
                    "out_store": {"type": "string"},
                },
                "additionalProperties": False,
            },
            "gallery": {
                "type": "object",
                "required": ["modality", "out_store"],
                "properties": {
                    "modality": {"enum": ["text", "image"]},
                    "out_store": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "additionalProperties": False,
    },
    "probe": {
        "type": "object",
        "required": ["name", "task"],
        "properties": {
            "name": {"type": "string"},
            "task": {"enum": ["tor", "ior"]},
            "label": {"type": "string"},
            "query_store": {"type": "string"},
            "gallery_store": {"type": "string"},
            "captions": {"type": "string"},
            "scenes": {"type": "string"},
            "gallery_objects": {"type": "string"},
            "sweep": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["label", "query_store", "gallery_store"],
                    "properties": {
                        "label": {"type": "string"},
                        "query_store": {"type": "string"},
                        "gallery_store": {"type": "string"},
                        "captions": {"type": "string"},
                        "scenes": {"type": "string"},
                        "gallery_objects": {"type": "string"},
                    },
                    "additionalProperties": False,
                },
            },
            "out_report": {"type": "string"},
            "out_csv": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "train-probe": {
        "type": "object",
        "required": ["name", "seed", "store", "captions", "positions", "out_dir"],
        "properties": {
            "name": {"type": "string"},
            "seed": {"type": "integer"},
            "store": {"type": "string"},
            "captions": {"type": "string"},
            "positions": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "train": {"type": "object", "properties": _TRAIN_PROPS, "additionalProperties": False},
            "out_dir": {"type": "string"},
            "out_report": {"type": "string"},
            "out_accuracy": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "match": {
        "type": "object",
        "required": ["name", "trials", "image_store", "text_store", "out_results"],
        "properties": {
            "name": {"type": "string"},
            "trials": {"type": "string"},
            "image_store": {"type": "string"},
            "text_store": {"type": "string"},
            "mitigation": {
                "type": "object",
                "required": ["per_object_store", "captions"],
                "properties": {
                    "per_object_store": {"type": "string"},
                    "captions": {"type": "string"},
                },
                "additionalProperties": False,
            },
            "out_results": {"type": "string"},
            "out_csv": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "stats": {
        "type": "object",
        "required": ["name", "analysis", "records", "out_json"],
        "properties": {
            "name": {"type": "string"},
            "analysis": {"enum": ["largest-position", "attention", "presence"]},
            "records": {"type": "string"},
            "n_objects_filter": {"type": "integer", "minimum": 1},
            "group_by_length": {"type": "boolean"},
            "out_json": {"type": "string"},
            "out_csv": {"type": "string"},
            "out_svg": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "simulate": {
        "type": "object",
        "required": ["name", "seed", "mode", "out_json"],
        "properties": {
            "name": {"type": "string"},
            "seed": {"type": "integer"},
            "mode": {"enum": ["objective", "convergence", "toy-trainer"]},
            "d": {"type": "integer", "minimum": 1},
            "k": {"type": "integer", "minimum": 0},
            "b": {"type": "integer", "minimum": 1},
            "trials": {"type": "integer", "minimum": 1},
            "latent": {"enum": ["gaussian", "rademacher"]},
            "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            "vocab_size": {"type": "integer", "minimum": 2},
            "gamma_data": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "steps": {"type": "integer", "minimum": 0},
            "batch": {"type": "integer", "minimum": 2},
            "lr": {"type": "number", "exclusiveMinimum": 0},
            "n_positions": {"type": "integer", "minimum": 2},
            "out_json": {"type": "string"},
            "out_svg": {"type": "string"},
        },
        "additionalProperties": False,
    },
}


class RunContext:
    """Resolves paths, writes outputs atomically, accumulates the manifest."""

    def __init__(self, config_path: Path, out_dir: Path | None):
        self.config_path = config_path
        self.base = config_path.parent
        self.out_dir = out_dir or self.base
        self.outputs: list[dict] = []

    def input_path(self, rel: str) -> Path:
        p = Path(rel)
        path = p if p.is_absolute() else self.base / p
        if not path.exists():
            raise MissingInputError(f"input not found: {path}")
        return path

    def out_path(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.out_dir / p

    def write_text(self, rel: str, text: str, kind: str) -> Path:
        path = self.out_path(rel)
        atomic_write_text(path, text)
        self._record(path, kind)
        return path

    def write_bytes(self, rel: str, blob: bytes, kind: str) -> Path:
        path = self.out_path(rel)
        atomic_write_bytes(path, blob)
        self._record(path, kind)
        return path

    def _record(self, path: Path, kind: str) -> None:
        try:
            rel = str(path.relative_to(self.out_dir))
        except ValueError:
            rel = str(path)
        self.outputs.append({"path": rel, "sha256": sha256_file(path), "kind": kind})

    def finish(self, verb: str, name: str) -> None:
        manifest = {
            "name": name,
            "verb": verb,
            "tool_version": __version__,
            "config_sha256": sha256_file(self.config_path),
            "outputs": self.outputs,
        }
        atomic_write_text(self.out_dir / report.MANIFEST_NAME, json.dumps(manifest, indent=2) + "\n")


def _dump_json(payload: dict) -> str:
    return json.dumps(payload, indent=2) + "\n"


# ---------------------------------------------------------------------------
# verb handlers
# ---------------------------------------------------------------------------


def _cmd_forge(cfg: dict, ctx: RunContext) -> None:
    vocab = load_vocabulary(cfg["vocab"])
    mode = cfg["mode"]
    seed = cfg["seed"]
    if mode == "manifests":
        scenes, captions = forge.gen_manifests(
            vocab, cfg["n_objects"], cfg["count"], seed,
            template=cfg.get("template", "short"), long_fillers=cfg.get("long_fillers"),
        )
        ctx.write_text(cfg["out_scenes"], forge.scenes_to_jsonl(scenes), "scenes-jsonl")
        ctx.write_text(cfg["out_captions"], forge.captions_to_jsonl(captions), "captions-jsonl")
    elif mode == "scenario-trials":
        scenarios = tuple(cfg.get("scenarios", ["one", "two"]))
        scenes, captions, pairs = forge.gen_scenario_trials(
            vocab, cfg["n_objects"], cfg["count"], seed, scenarios
        )
        trials = [
            matching.MatchTrial(p.image_id, p.correct.caption_id, p.incorrect.caption_id, p.scenario)
            for p in pairs
        ]
        ctx.write_text(cfg["out_scenes"], forge.scenes_to_jsonl(scenes), "scenes-jsonl")
        ctx.write_text(cfg["out_captions"], forge.captions_to_jsonl(captions), "captions-jsonl")
        ctx.write_text(cfg["out_trials"], matching.trials_to_jsonl(trials), "trials-jsonl")
    else:  # claim1
        set_a, set_b = forge.claim1_sentence_sets(vocab, cfg["count"], seed)
        ctx.write_text(cfg["out_large_first"], forge.captions_to_jsonl(set_a), "captions-jsonl")
        ctx.write_text(cfg["out_small_first"], forge.captions_to_jsonl(set_b), "captions-jsonl")


def _cmd_mock_encode(cfg: dict, ctx: RunContext) -> None:
    vocab = load_vocabulary(cfg["vocab"]) if "vocab" in cfg else None
    if not any(section in cfg for section in ("text", "image", "gallery")):
        raise SchemaError("$", "at least one of text/image/gallery is required")
    if "text" in cfg:
        section = cfg["text"]
        enc = mock.MockEncoderConfig(
            dim=cfg["dim"],
            seed=cfg["seed"],
            text_decay=section.get("decay", 1.0),
            text_keep=section.get("keep"),
            text_pos_jitter=section.get("pos_jitter", 0.0),
        )
        captions = forge.read_captions(ctx.input_path(section["captions"]))
        store = mock.encode_captions(enc, captions, vocab)
        ctx.write_bytes(section["out_store"], _to_binary(store), "embedding-store")
    if "image" in cfg:
        section = cfg["image"]
        enc = mock.MockEncoderConfig(
            dim=cfg["dim"],
            seed=cfg["seed"],
            image_size_exponent=section.get("size_exponent", 1.0),
            image_weight_jitter=section.get("weight_jitter", 0.0),
        )
        scenes = forge.read_scenes(ctx.input_path(section["scenes"]))
        store = mock.encode_scenes(enc, scenes, section.get("large_scale", 3.0))
        ctx.write_bytes(section["out_store"], _to_binary(store), "embedding-store")
    if "gallery" in cfg:
        section = cfg["gallery"]
        if vocab is None:
            raise SchemaError("$.gallery", "gallery requires a vocab")
        enc = mock.MockEncoderConfig(dim=cfg["dim"], seed=cfg["seed"])
        store = mock.basis_store(enc, list(vocab.objects), section["modality"])
        ctx.write_bytes(section["out_store"], _to_binary(store), "embedding-store")


def _build_task(entry: dict, task_kind: str, ctx: RunContext) -> tuple[str, probe.ProbeTask]:
    query_store = load_store(ctx.input_path(entry["query_store"]))
    gallery_store = load_store(ctx.input_path(entry["gallery_store"]))
    gallery_map = None
    if "gallery_objects" in entry:
        gallery_map = json.loads(ctx.input_path(entry["gallery_objects"]).read_text("utf-8"))
    if task_kind == "tor":
        if "captions" not in entry:
            raise SchemaError("$.captions", "tor task needs a captions manifest")
        captions = forge.read_captions(ctx.input_path(entry["captions"]))
        task = probe.tor_task(query_store, gallery_store, captions, gallery_map)
    else:
        if "scenes" not in entry:
            raise SchemaError("$.scenes", "ior task needs a scenes manifest")
        scenes = forge.read_scenes(ctx.input_path(entry["scenes"]))
        task = probe.ior_task(query_store, gallery_store, scenes, gallery_map)
    label = entry.get("label", query_store.model_id)
    return label, task


def _cmd_probe(cfg: dict, ctx: RunContext) -> None:
    task_kind = cfg["task"]
    if "sweep" in cfg:
        labeled = [_build_task(entry, task_kind, ctx) for entry in cfg["sweep"]]
    else:
        for field in ("query_store", "gallery_store"):
            if field not in cfg:
                raise SchemaError(f"$.{field}", "required outside sweep mode")
        labeled = [_build_task(cfg, task_kind, ctx)]
    results = probe.sweep_stores(labeled)
    footer = (
        "candidates are the full gallery; misses counted separately, "
        "per-group rates conditional on hits"
    )
    if "out_report" in cfg:
        if len(results) == 1:
            label, rep = results[0]
            payload = {"store": label, "task": task_kind, **rep.to_json_dict(), "note": footer}
        else:
            payload = {
                "task": task_kind,
                "reports": [
                    {"store": label, "task": task_kind, **rep.to_json_dict()} for label, rep in results
                ],
                "note": footer,
            }
        ctx.write_text(cfg["out_report"], _dump_json(payload), "probe-report-json")
    if "out_csv" in cfg:
        ctx.write_text(cfg["out_csv"], probe.reports_to_csv(results), "probe-csv")


def _cmd_train_probe(cfg: dict, ctx: RunContext) -> None:
    store = load_store(ctx.input_path(cfg["store"]))
    captions = forge.read_captions(ctx.input_path(cfg["captions"]))
    tc_args = dict(cfg.get("train", {}))
    tc_args.setdefault("seed", cfg["seed"])
    tcfg = TrainConfig(**tc_args)

    def fit(position: int):
        labels = {
            c.caption_id: c.objects[position - 1] for c in captions if len(c.objects) >= position
        }
        fitted, history = train_probe(store, labels, tcfg, target_group=f"pos{position}")
        return position, fitted, history

    results = parallel_map(fit, cfg["positions"])
    report_lines = ["probe,epoch,train_loss"]
    accuracy: dict[str, dict] = {}
    for position, fitted, history in results:
        save_path = ctx.out_path(f"{cfg['out_dir']}/probe_pos{position}.json")
        save_path.parent.mkdir(parents=True, exist_ok=True)
        save_probe(fitted, save_path)
        ctx._record(save_path, "linear-probe-json")
        for epoch, loss in enumerate(history.train_loss):
            report_lines.append(f"pos{position},{epoch},{loss:.10f}")
        accuracy[f"pos{position}"] = {
            "holdout_accuracy": history.holdout_accuracy,
            "holdout_size": len(history.holdout_ids),
            "classes": len(fitted.class_names),
        }
    if "out_report" in cfg:
        ctx.write_text(cfg["out_report"], "\n".join(report_lines) + "\n", "train-report-csv")
    if "out_accuracy" in cfg:
        ctx.write_text(
            cfg["out_accuracy"], _dump_json({"store": store.model_id, "positions": accuracy}), "train-accuracy-json"
        )


def _cmd_match(cfg: dict, ctx: RunContext) -> None:
    trials = matching.read_trials(ctx.input_path(cfg["trials"]))
    image_store = load_store(ctx.input_path(cfg["image_store"]))
    text_store = load_store(ctx.input_path(cfg["text_store"]))
    by_scenario: dict[str, list[matching.MatchTrial]] = {}
    for t in trials:
        by_scenario.setdefault(t.scenario or "all", []).append(t)
    mitigation = cfg.get("mitigation")
    per_object = captions_by_id = None
    if mitigation:
        per_object = load_store(ctx.input_path(mitigation["per_object_store"]))
        captions_by_id = {
            c.caption_id: c for c in forge.read_captions(ctx.input_path(mitigation["captions"]))
        }
    rows = []
    for scenario in sorted(by_scenario):
        subset = by_scenario[scenario]
        if mitigation:
            acc, mit = matching.evaluate_with_mitigation(
                subset, image_store, text_store, per_object, captions_by_id
            )
            rows.append({"scenario": scenario, "n_trials": len(subset), "accuracy": acc, "accuracy_mitigated": mit})
        else:
            acc, _ = matching.evaluate_matching(subset, image_store, text_store)
            rows.append({"scenario": scenario, "n_trials": len(subset), "accuracy": acc})
    payload = {"model": text_store.model_id, "image_model": image_store.model_id, "rows": rows}
    ctx.write_text(cfg["out_results"], _dump_json(payload), "match-json")
    if "out_csv" in cfg:
        header = "model,scenario,n_trials,accuracy_pct" + (",mitigated_pct" if mitigation else "")
        lines = [header]
        for row in rows:
            cells = [text_store.model_id, str(row["scenario"]), str(row["n_trials"]), f"{100 * row['accuracy']:.2f}"]
            if mitigation:
                cells.append(f"{100 * row['accuracy_mitigated']:.2f}")
            lines.append(",".join(cells))
        ctx.write_text(cfg["out_csv"], "\n".join(lines) + "\n", "match-csv")


def _cmd_stats(cfg: dict, ctx: RunContext) -> None:
    analysis = cfg["analysis"]
    records_path = ctx.input_path(cfg["records"])
    if analysis == "largest-position":
        records = stats.read_analysis_records(records_path)
        hist, meta = stats.largest_position_histogram_with_meta(records, cfg.get("n_objects_filter"))
        values = {str(k): v for k, v in hist.items()}
        payload = {"analysis": analysis, "values": values, "meta": meta}
        labels = [f"pos{k}" for k in sorted(hist)]
        chart_vals = [100.0 * hist[k] for k in sorted(hist)]
        title = "Largest object position share (%)"
    elif analysis == "presence":
        records = stats.read_detection_records(records_path)
        if cfg.get("group_by_length"):
            grouped = stats.presence_by_position_grouped(records)
            payload = {
                "analysis": analysis,
                "groups": {str(n): {str(k): v for k, v in rates.items()} for n, rates in grouped.items()},
            }
            first = grouped[min(grouped)]
            labels = [f"pos{k}" for k in sorted(first)]
            chart_vals = [100.0 * first[k] for k in sorted(first)]
        else:
            rates = stats.presence_by_position(records)
            payload = {"analysis": analysis, "values": {str(k): v for k, v in rates.items()}}
            labels = [f"pos{k}" for k in sorted(rates)]
            chart_vals = [100.0 * rates[k] for k in sorted(rates)]
        title = "Object presence by prompt position (%)"
    else:  # attention
        records = stats.read_attention_records(records_path)
        if not records:
            raise ValueError("no attention records")
        share_sums: dict[str, float] = {}
        bg_sum = 0.0
        for rec in records:
            shares, background = stats.attention_shares(rec)
            bg_sum += background
            for name, share in shares.items():
                share_sums[name] = share_sums.get(name, 0.0) + share
        n = len(records)
        mean_shares = {name: share_sums[name] / n for name in sorted(share_sums)}
        payload = {
            "analysis": analysis,
            "mean_shares": mean_shares,
            "mean_background": bg_sum / n,
            "records": n,
        }
        labels = list(mean_shares) + ["background"]
        chart_vals = [100.0 * v for v in mean_shares.values()] + [100.0 * bg_sum / n]
        title = "Mean CLS attention share (%)"
    ctx.write_text(cfg["out_json"], _dump_json(payload), "stats-json")
    if "out_csv" in cfg:
        lines = ["key,value_pct"] + [f"{l},{v:.4f}" for l, v in zip(labels, chart_vals)]
        ctx.write_text(cfg["out_csv"], "\n".join(lines) + "\n", "stats-csv")
    if "out_svg" in cfg:
        ctx.write_text(cfg["out_svg"], svg.bar_chart(labels, chart_vals, title), "stats-svg")


def _estimate_dict(est: sim.SimEstimate) -> dict:
    return {"mean": est.mean, "std_error": est.std_error, "analytic_limit": est.analytic_limit}


def _cmd_simulate(cfg: dict, ctx: RunContext) -> None:
    mode = cfg["mode"]
    if mode == "objective":
        for field in ("d", "k", "b", "trials"):
            if field not in cfg:
                raise SchemaError(f"$.{field}", "required for objective mode")
        scfg = sim.SimConfig(
            d=cfg["d"], k=cfg["k"], b=cfg["b"], trials=cfg["trials"],
            seed=cfg["seed"], latent=cfg.get("latent", "gaussian"),
        )
        ideal, truncated = sim.estimate_pair(scfg)
        payload = {
            "mode": mode,
            "config": {"d": scfg.d, "k": scfg.k, "b": scfg.b, "trials": scfg.trials,
                       "seed": scfg.seed, "latent": scfg.latent},
            "ideal": _estimate_dict(ideal),
            "truncated": _estimate_dict(truncated),
        }
        chart = None
    elif mode == "convergence":
        for field in ("b", "k", "dims", "trials"):
            if field not in cfg:
                raise SchemaError(f"$.{field}", "required for convergence mode")
        rows = sim.convergence_sweep(
            cfg["b"], cfg["k"], cfg["dims"], cfg["trials"], cfg["seed"], cfg.get("latent", "gaussian")
        )
        payload = {
            "mode": mode,
            "config": {"b": cfg["b"], "k": cfg["k"], "dims": cfg["dims"],
                       "trials": cfg["trials"], "seed": cfg["seed"]},
            "rows": [
                {"d": d, "ideal": _estimate_dict(ei), "truncated": _estimate_dict(et)}
                for d, ei, et in rows
            ],
        }
        chart = svg.line_chart(
            [
                ("ideal gap", [(d, abs(ei.mean - ei.analytic_limit)) for d, ei, _ in rows]),
                ("truncated gap", [(d, abs(et.mean - et.analytic_limit)) for d, _, et in rows]),
            ],
            "Gap to the e/(e+b) limit vs latent dimension",
            x_label="d",
            y_label="|mean - limit|",
        )
    else:  # toy-trainer
        for field in ("d", "vocab_size", "gamma_data", "steps", "batch", "lr"):
            if field not in cfg:
                raise SchemaError(f"$.{field}", "required for toy-trainer mode")
        series = sim.toy_bias_trainer(
            cfg["d"], cfg["vocab_size"], cfg["gamma_data"], cfg["steps"], cfg["batch"],
            cfg["lr"], cfg["seed"], n_positions=cfg.get("n_positions", 4),
        )
        payload = {
            "mode": mode,
            "config": {key: cfg[key] for key in
                       ("d", "vocab_size", "gamma_data", "steps", "batch", "lr", "seed")},
            "series": [[step, rate] for step, rate in series],
        }
        chart = svg.line_chart(
            [("first-position rate", [(float(s), r) for s, r in series])],
            "First-position retrieval rate across training",
            x_label="step",
            y_label="rate",
        )
    ctx.write_text(cfg["out_json"], _dump_json(payload), "simulate-json")
    if "out_svg" in cfg:
        if chart is None:
            raise SchemaError("$.out_svg", "objective mode has no chart output")
        ctx.write_text(cfg["out_svg"], chart, "simulate-svg")


_HANDLERS = {
    "forge": _cmd_forge,
    "mock-encode": _cmd_mock_encode,
    "probe": _cmd_probe,
    "train-probe": _cmd_train_probe,
    "match": _cmd_match,
    "stats": _cmd_stats,
    "simulate": _cmd_simulate,
}


def _validate(verb: str, cfg: dict) -> None:
    validator = jsonschema.Draft202012Validator(SCHEMAS[verb])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "$" + "".join(
            f"[{p!r}]" if isinstance(p, str) else f"[{p}]" for p in err.absolute_path
        )
        raise SchemaError(path, err.message)


def _run_config_verb(verb: str, args: argparse.Namespace) -> int:
    config_path = Path(args.config)
    if not config_path.is_file():
        print(f"error: config not found: {config_path}", file=sys.stderr)
        return 3
    try:
        cfg = json.loads(config_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    try:
        _validate(verb, cfg)
        ctx = RunContext(config_path, Path(args.out_dir) if args.out_dir else None)
        _HANDLERS[verb](cfg, ctx)
        ctx.finish(verb, cfg["name"])
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MissingInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (OscopeError, ValueError, KeyError, IndexError) as exc:
        print(f"error [{verb}]: {exc}", file=sys.stderr)
        return 4
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        md, csv = report.build_report(args.runs)
    except OscopeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    atomic_write_text(args.out_md, md)
    if args.out_csv:
        atomic_write_text(args.out_csv, csv)
    return 0


def _cmd_store(args: argparse.Namespace) -> int:
    """Inspect or convert a store (one-shot utility)."""
    try:
        store = load_store(args.path)
    except FileNotFoundError:
        print(f"error: {args.path} not found", file=sys.stderr)
        return 3
    except (OscopeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    if args.convert:
        fmt = "jsonl" if args.convert.endswith(".jsonl") else "binary"
        blob = _to_jsonl(store).encode("utf-8") if fmt == "jsonl" else _to_binary(store)
        atomic_write_bytes(args.convert, blob)
    print(
        json.dumps(
            {
                "model_id": store.model_id,
                "modality": store.modality,
                "dim": store.dim,
                "records": len(store),
                "normalized": store.normalized,
            },
            indent=2,
        )
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="oscope",
        description="Positional and size bias probes for vision-language joint embeddings.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb in _HANDLERS:
        p = sub.add_parser(verb, help=f"run a {verb} config")
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out-dir", default=None, help="output base directory (default: config dir)")

    p = sub.add_parser("report", help="comparison tables across run directories")
    p.add_argument("--runs", nargs="+", required=True)
    p.add_argument("--out-md", required=True)
    p.add_argument("--out-csv", default=None)

    p = sub.add_parser("store", help="inspect or convert a store file")
    p.add_argument("path")
    p.add_argument("--convert", default=None, help="write a converted copy (.jsonl or binary)")

    args = parser.parse_args(argv)
    if args.verb == "report":
        return _cmd_report(args)
    if args.verb == "store":
        return _cmd_store(args)
    return _run_config_verb(args.verb, args)


if __name__ == "__main__":
    sys.exit(main())

"""Cross-run comparison tables (Markdown + CSV) from run manifests."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import IoError

MANIFEST_NAME = "run_manifest.json"


def _load_manifest(run_dir: Path) -> dict:
    path = run_dir / MANIFEST_NAME
    if not path.is_file():
        raise IoError(f"run manifest missing: {path}")
    return json.loads(path.read_text("utf-8"))


def _collect(run_dirs: list[Path]) -> tuple[list[dict], list[dict], list[dict]]:
    probes, matches, stats = [], [], []
    for run_dir in run_dirs:
        manifest = _load_manifest(run_dir)
        run_name = manifest.get("name", run_dir.name)
        for entry in manifest.get("outputs", []):
            kind = entry.get("kind")
            payload_path = run_dir / entry["path"]
            if kind == "probe-report-json" and payload_path.is_file():
                payload = json.loads(payload_path.read_text("utf-8"))
                payload["_run"] = run_name
                probes.append(payload)
            elif kind == "match-json" and payload_path.is_file():
                payload = json.loads(payload_path.read_text("utf-8"))
                payload["_run"] = run_name
                matches.append(payload)
            elif kind == "stats-json" and payload_path.is_file():
                payload = json.loads(payload_path.read_text("utf-8"))
                payload["_run"] = run_name
                stats.append(payload)
    return probes, matches, stats


def _probe_tables(probes: list[dict]) -> tuple[list[str], list[str]]:
    group_order: list[str] = []
    for rep in probes:
        for key in rep["per_group"]:
            if key not in group_order:
                group_order.append(key)
    md = ["## Retrieval probes", ""]
    md.append("| run | store | n | hit rate % | " + " | ".join(group_order) + " |")
    md.append("|" + "---|" * (4 + len(group_order)))
    csv = ["table,run,store,n_queries,hit_rate_pct," + ",".join(group_order)]
    for rep in probes:
        rates = {k: 100.0 * v["rate"] for k, v in rep["per_group"].items()}
        best = max(rates.values()) if rates else None
        cells = []
        for key in group_order:
            if key not in rates:
                cells.append("")
            elif rates[key] == best:
                cells.append(f"**{rates[key]:.2f}**")
            else:
                cells.append(f"{rates[key]:.2f}")
        md.append(
            f"| {rep['_run']} | {rep.get('store', '')} | {rep['n_queries']} "
            f"| {100.0 * rep['hit_rate']:.2f} | " + " | ".join(cells) + " |"
        )
        csv.append(
            ",".join(
                [
                    "probe",
                    rep["_run"],
                    rep.get("store", ""),
                    str(rep["n_queries"]),
                    f"{100.0 * rep['hit_rate']:.2f}",
                    *[f"{rates[k]:.2f}" if k in rates else "" for k in group_order],
                ]
            )
        )
    md.append("")
    return md, csv


def _match_tables(matches: list[dict]) -> tuple[list[str], list[str]]:
    md = ["## Image-text matching", "", "| run | model | scenario | accuracy % | mitigated % |", "|---|---|---|---|---|"]
    csv = ["table,run,model,scenario,accuracy_pct,mitigated_pct"]
    for rep in matches:
        for row in rep.get("rows", []):
            mit = f"{100.0 * row['accuracy_mitigated']:.2f}" if "accuracy_mitigated" in row else ""
            md.append(
                f"| {rep['_run']} | {rep.get('model', '')} | {row['scenario']} "
                f"| {100.0 * row['accuracy']:.2f} | {mit} |"
            )
            csv.append(
                ",".join(
                    [
                        "match",
                        rep["_run"],
                        rep.get("model", ""),
                        str(row["scenario"]),
                        f"{100.0 * row['accuracy']:.2f}",
                        mit,
                    ]
                )
            )
    md.append("")
    return md, csv


def _stats_tables(stats: list[dict]) -> tuple[list[str], list[str]]:
    md = ["## Position statistics", "", "| run | analysis | values (by position) |", "|---|---|---|"]
    csv = ["table,run,analysis,positions,values"]
    for rep in stats:
        values = rep.get("values", {})
        keys = sorted(values, key=lambda s: int(s)) if values else []
        rendered = ", ".join(f"{k}: {100.0 * values[k]:.1f}" for k in keys)
        md.append(f"| {rep['_run']} | {rep.get('analysis', '')} | {rendered} |")
        csv.append(
            ",".join(
                [
                    "stats",
                    rep["_run"],
                    rep.get("analysis", ""),
                    ";".join(keys),
                    ";".join(f"{100.0 * values[k]:.1f}" for k in keys),
                ]
            )
        )
    md.append("")
    return md, csv


def build_report(run_dirs: list[str | Path]) -> tuple[str, str]:
    """Markdown and CSV comparison tables across runs (probe/match/stats)."""
    if not run_dirs:
        raise ValueError("no run directories given")
    probes, matches, stats = _collect([Path(d) for d in run_dirs])
    md: list[str] = ["# Run comparison", ""]
    csv: list[str] = []
    if probes:
        m, c = _probe_tables(probes)
        md.extend(m)
        csv.extend(c)
    if matches:
        m, c = _match_tables(matches)
        md.extend(m)
        csv.extend(c)
    if stats:
        m, c = _stats_tables(stats)
        md.extend(m)
        csv.extend(c)
    if not (probes or matches or stats):
        md.append("_No comparable outputs found in the given runs._")
    return "\n".join(md) + "\n", "\n".join(csv) + ("\n" if csv else "")

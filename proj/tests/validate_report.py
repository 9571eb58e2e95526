#!/usr/bin/env python3
"""Run the CLI on the fixtures and check its diff reports against the schema.

usage: validate_report.py <cocoaudit binary> <schema.json> <fixture dir>
"""
import json
import subprocess
import sys
from pathlib import Path

import jsonschema


def run(cli, *args):
    proc = subprocess.run([cli, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(args)} exited {proc.returncode}: {proc.stderr.strip()}")
    return json.loads(proc.stdout)


def reconcile(report, label):
    m = report["match"]
    for h in report["histograms"].values():
        got = h["population"] + h["excluded_below_1px"] + m["degenerate_pairs"]
        if got != m["pairs"] or h["total"] + m["degenerate_pairs"] != m["pairs"]:
            sys.exit(f"{label}: {h['metric']} does not reconcile with {m['pairs']} pairs")
        if not h["empty"] and sum(b["count"] for b in h["bins"]) != h["population"]:
            sys.exit(f"{label}: {h['metric']} bin counts do not add up")


def main():
    cli, schema_path, fixtures = sys.argv[1], sys.argv[2], Path(sys.argv[3])
    schema = json.loads(Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    cases = {
        "tiny": ["diff", "--eval", "both", "tiny_pair_a.json", "tiny_pair_b.json"],
        "tiny_self": ["diff", "tiny_pair_a.json", "tiny_pair_a.json"],
        "synthetic": ["diff", "--eval", "both", "--no-timings", "synthetic_a.json",
                      "synthetic_b.json"],
        "synthetic_mask_any": ["diff", "--iou-mode", "mask", "--any-category", "--crop",
                               "synthetic_a.json", "synthetic_b.json"],
    }
    for label, args in cases.items():
        args = [a if not a.endswith(".json") else str(fixtures / a) for a in args]
        report = run(cli, *args)
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        if errors:
            for e in errors[:5]:
                print(f"{label}: {'/'.join(map(str, e.path))}: {e.message}", file=sys.stderr)
            sys.exit(f"{label}: report does not match the schema")
        reconcile(report, label)
        print(f"ok {label}: {report['match']['pairs']} pairs")

    stats = run(cli, "stats", str(fixtures / "synthetic_a.json"))
    assert stats["command"] == "stats"
    ev = run(cli, "eval", "--task", "bbox", str(fixtures / "tiny_results.json"),
             str(fixtures / "tiny_pair_a.json"))
    for row in ev["results"]:
        jsonschema.validate(row, {"$ref": "#/$defs/cross_row", "$defs": schema["$defs"]})
    print("ok stats and eval outputs")


if __name__ == "__main__":
    main()

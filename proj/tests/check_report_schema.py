"""Runs the CLI on the sample configs and validates every report against
docs/report.schema.json. Also checks exit codes of the failure paths."""
import json
import pathlib
import subprocess
import sys

import jsonschema

cli, data, schema_path, work = sys.argv[1:5]
data = pathlib.Path(data)
work = pathlib.Path(work)
schema = json.loads(pathlib.Path(schema_path).read_text())
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)


def run(*args):
    return subprocess.run([cli, *map(str, args)], capture_output=True, text=True)


def null_paths(node, path=""):
    if node is None:
        yield path
    elif isinstance(node, dict):
        for k, v in node.items():
            yield from null_paths(v, f"{path}.{k}" if path else k)
    elif isinstance(node, list):
        for i, v in enumerate(node):
            yield from null_paths(v, f"{path}[{i}]")


failures = 0
cases = [
    ("four_rows.csv", "four_rows_ate.json", []),
    ("four_rows.csv", "four_rows_rank.json", ["--flat-prior-ok"]),
    ("panel.csv", "panel_all.json", []),
]
for csv, config, extra in cases:
    out = work / f"schema_{pathlib.Path(config).stem}.json"
    proc = run("run", "--data", data / csv, "--config", data / config, "--out", out, *extra)
    if proc.returncode != 0:
        print(f"FAIL {config}: exit {proc.returncode}: {proc.stderr.strip()}")
        failures += 1
        continue
    report = json.loads(out.read_text())
    errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
    for e in errors:
        print(f"FAIL {config}: {list(e.path)}: {e.message}")
    nulls = list(null_paths(report))
    if nulls and not report["warnings"]:
        print(f"FAIL {config}: null fields without warnings: {nulls}")
        failures += 1
    failures += len(errors)
    if not errors:
        print(f"ok   {config}")

proc = run("run", "--data", data / "four_rows.csv", "--config", data / "four_rows_rank.json",
           "--out", work / "never.json")
if proc.returncode != 1 or "--flat-prior-ok" not in proc.stderr:
    print(f"FAIL rank without flag: exit {proc.returncode}, stderr {proc.stderr!r}")
    failures += 1
else:
    print("ok   rank without --flat-prior-ok exits 1 and names the flag")

proc = run("validate", "--config", data / "panel_all.json")
if proc.returncode != 0:
    print(f"FAIL validate: exit {proc.returncode}: {proc.stderr}")
    failures += 1
proc = run("validate", "--config", data / "four_rows.csv")
if proc.returncode != 1:
    print(f"FAIL validate on non-JSON: exit {proc.returncode}")
    failures += 1

sys.exit(1 if failures else 0)

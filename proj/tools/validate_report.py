#!/usr/bin/env python3
"""Run a small reproduce-table and validate report.json against the schema."""

import argparse
import json
import pathlib
import shutil
import subprocess
import sys

import jsonschema

SMALL = {
    "task": {"n_train_samples": 64, "seq_len": 12},
    "model": {"d_model": 8, "d_ff": 16},
    "train": {"epochs": 1, "batch_size": 16, "seeds": [1, 2]},
    "eval": {"lengths": [12, 24], "n_samples": 16},
}


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schema", required=True)
    ap.add_argument("--work", required=True)
    args = ap.parse_args()

    work = pathlib.Path(args.work)
    shutil.rmtree(work, ignore_errors=True)
    work.mkdir(parents=True)
    cfg = work / "config.json"
    cfg.write_text(json.dumps(SMALL))
    out = work / "out"
    subprocess.run([args.cli, "reproduce-table", "--config", str(cfg), "--out", str(out)],
                   check=True, stdout=subprocess.DEVNULL)

    schema = json.loads(pathlib.Path(args.schema).read_text())
    report = json.loads((out / "report.json").read_text())
    jsonschema.validate(report, schema)

    labels = [r["encoding"] for r in report["table"]["rows"]]
    if labels != ["Sinusoidal", "ALiBi", "Wavelet", "Legendre"]:
        print(f"unexpected row labels {labels}", file=sys.stderr)
        return 1
    if len(report["cells"]) != 2 * 4 * 2:
        print(f"expected 16 cells, got {len(report['cells'])}", file=sys.stderr)
        return 1
    print(f"report.json valid: {len(report['cells'])} cells, checks "
          + ", ".join(f"{c['id']}={'pass' if c['passed'] else 'fail'}" for c in report["checks"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())

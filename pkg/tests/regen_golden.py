"""Regenerate tests/golden from the shipped example configs.

Run from the repository root after an intentional change in output:
``python tests/regen_golden.py``.
"""
import json
import shutil
import tempfile
from importlib import resources
from pathlib import Path

from warpcheck.cli import main

GOLDEN = Path(__file__).parent / "golden"


def regenerate():
    codes = {}
    examples = resources.files("warpcheck") / "examples"
    for config in sorted(p for p in examples.iterdir() if p.name.endswith(".json")):
        stem = config.name[:-5]
        with tempfile.TemporaryDirectory() as tmp:
            codes[stem] = main(["run", str(config), "--out", tmp])
            target = GOLDEN / stem
            target.mkdir(parents=True, exist_ok=True)
            shutil.copy(Path(tmp) / "summary.csv", target / "summary.csv")
    (GOLDEN / "exit_codes.json").write_text(json.dumps(codes, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    regenerate()

"""Rebuild tests/data/golden from the mini-corpus with --deterministic.

Run after an intended output change and review the diff before committing.
"""

import shutil
import sys
from pathlib import Path

from smellwarn.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "tests" / "data" / "minicorpus"
GOLDEN = ROOT / "tests" / "data" / "golden"


def main():
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    for step in (["ingest", str(CORPUS)], ["analyze"], ["rank"], ["report"]):
        rc = cli([*step, "--out", str(GOLDEN), "--deterministic"])
        if rc:
            sys.exit(rc)


if __name__ == "__main__":
    main()

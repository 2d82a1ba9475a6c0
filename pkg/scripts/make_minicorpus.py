"""Regenerate the bundled three-project mini-corpus under tests/data/minicorpus."""

import argparse
import json
import shutil
from pathlib import Path

from smellwarn.synth import MINI_NCO_RULE, generate, minicorpus_specs, write_corpus

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "tests" / "data" / "minicorpus"))
    args = ap.parse_args()
    out = Path(args.out)
    if out.exists():
        shutil.rmtree(out)
    projects = {}
    for name, spec in minicorpus_specs():
        warnings, smells = generate(spec)
        projects[name] = write_corpus(warnings, smells, out / name, project=name, extra={"seed": spec.seed})
    totals = {"warnings": {}, "smells": {}}
    for m in projects.values():
        for section in totals:
            for k, v in m[section].items():
                totals[section][k] = totals[section].get(k, 0) + v
    manifest = {"projects": sorted(projects), "nco_only_rule": MINI_NCO_RULE, **totals}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(json.dumps(manifest, indent=1, sort_keys=True))


if __name__ == "__main__":
    main()

"""How often do the batteries reject when nothing is planted?

Per seed: the correlation family on independent uniform counts, the H2
battery on untargeted Poisson rules, and H4 on two kinds of null rankings
(equal-bucket reorderings, which leave the curves unchanged, and two
independent shuffles).  Prints the share of seeds with any BH rejection.
"""

import argparse
import itertools

import numpy as np

from smellwarn.analysis import cooccurrence_table, correlation_matrix, h2_battery
from smellwarn.prioritize import RankedWarning, compare_rankers, effort_curve
from smellwarn.records import ALL_COMBOS, SourceTool
from smellwarn.synth import PlantSpec, demo_spec, draw_counts, null_spec, profiles_from_counts


def any_rejected(entries):
    return any(e.rejected for e in entries)


def ranked(buckets):
    return [RankedWarning(SourceTool.PMD, f"r{i}", 0.0, b) for i, b in enumerate(buckets)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--warnings", type=int, default=200, help="ranked entries for the H4 nulls")
    args = ap.parse_args()

    hits = {"H1 uniform": 0, "H2 poisson": 0, "H4 tie-order": 0, "H4 shuffles": 0}
    mix = {c.label: 1 / 8 for c in ALL_COMBOS}
    for seed in range(args.seeds):
        spec = null_spec(seed)
        cells = correlation_matrix(profiles_from_counts(spec, draw_counts(spec)), args.alpha)
        hits["H1 uniform"] += any(c.adjusted.rejected for c in cells)

        spec = PlantSpec(seed=seed, n_packages=120, rules=demo_spec().rules, combo_mix=mix)
        profiles = profiles_from_counts(spec, draw_counts(spec))
        table = cooccurrence_table(profiles)
        h2 = h2_battery(table, profiles, args.alpha) + h2_battery(table, profiles, args.alpha, axis="combo")
        hits["H2 poisson"] += any_rejected(h2)

        rng = np.random.default_rng(seed)
        base = ranked(list(rng.choice(["Critical", "High", "Medium", "None"], args.warnings)))
        runs = [list(g) for _, g in itertools.groupby(base, key=lambda r: r.bucket)]
        reordered = [r for run in runs for r in rng.permutation(np.array(run, dtype=object)).tolist()]
        tie = compare_rankers([effort_curve(base, "a"), effort_curve(reordered, "b")], args.alpha)
        hits["H4 tie-order"] += any_rejected(tie)
        a = [base[i] for i in rng.permutation(len(base))]
        b = [base[i] for i in rng.permutation(len(base))]
        hits["H4 shuffles"] += any_rejected(compare_rankers([effort_curve(a, "a"), effort_curve(b, "b")], args.alpha))

    for name, n in hits.items():
        print(f"{name:14s} seeds with a rejection: {n}/{args.seeds} ({n / args.seeds:.0%})")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Independent reference for perturbation-case construction.

Parses the sample screens with the csv module, averages cells per condition, and
applies the pseudocount-1 log2 fold-change rule. Output is frozen into
data/samples/expected_degs.json and compared against the C++ builder in the tests.
"""
import argparse
import csv
import json
import math
from collections import defaultdict
from pathlib import Path


def dense(path):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    cells = [c.strip() for c in rows[0][1:]]
    profiles = {c: {} for c in cells}
    for row in rows[1:]:
        gene = row[0].strip().upper()
        for c, v in zip(cells, row[1:]):
            profiles[c][gene] = profiles[c].get(gene, 0.0) + float(v or 0)
    return profiles


def triplets(path):
    profiles = defaultdict(dict)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        for gene, cell, value in reader:
            g = gene.strip().upper()
            profiles[cell.strip()][g] = profiles[cell.strip()].get(g, 0.0) + float(value)
    return dict(profiles)


def conditions(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        next(reader)
        return {cell.strip(): cond.strip() for cell, cond in reader}


def mean(profiles):
    genes = sorted(set().union(*profiles))
    return {g: sum(p.get(g, 0.0) for p in profiles) / len(profiles) for g in genes}


def sentence(profile, k):
    expressed = [(v, g) for g, v in profile.items() if v > 0]
    expressed.sort(key=lambda t: (-t[0], t[1]))
    return [g for _, g in expressed[:k]]


def degs(control, perturbed, threshold, cap):
    up, down = [], []
    for g in sorted(set(control) | set(perturbed)):
        lfc = math.log2((perturbed.get(g, 0.0) + 1.0) / (control.get(g, 0.0) + 1.0))
        if lfc >= threshold:
            up.append((abs(lfc), g))
        elif lfc <= -threshold:
            down.append((abs(lfc), g))
    up.sort(key=lambda t: (-t[0], t[1]))
    down.sort(key=lambda t: (-t[0], t[1]))
    return [g for _, g in up[:cap]], [g for _, g in down[:cap]]


def cases(profiles, labels, control_label, k=100, threshold=1.0, cap=20):
    groups = defaultdict(list)
    ctrl = []
    for cell, prof in profiles.items():
        label = labels.get(cell)
        if label is None:
            continue
        (ctrl if label == control_label else groups[label]).append(prof)
    control = mean(ctrl)
    out = {}
    for label in sorted(groups):
        pert = mean(groups[label])
        up, down = degs(control, pert, threshold, cap)
        targets = []
        for part in label.split("+"):
            g = part.strip().upper()
            if g and g != "CTRL" and g not in targets:
                targets.append(g)
        out[label] = {"targets": targets, "up": up, "down": down, "perturbed_sentence": sentence(pert, k)}
    return {"control_sentence": sentence(control, k), "cases": out}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", default=str(Path(__file__).resolve().parent.parent / "data" / "samples"))
    args = ap.parse_args()
    s = Path(args.samples)
    result = {
        "norman": cases(dense(s / "norman_counts.csv"), conditions(s / "norman_conditions.csv"), "ctrl"),
        "adamson": cases(triplets(s / "adamson_counts.triplets"), conditions(s / "adamson_conditions.csv"), "control"),
    }
    (s / "expected_degs.json").write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
    print({k: len(v["cases"]) for k, v in result.items()})


if __name__ == "__main__":
    main()

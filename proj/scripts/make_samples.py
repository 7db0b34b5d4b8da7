#!/usr/bin/env python3
"""Regenerates the synthetic sample corpora and demo datasets under data/.

Deterministic for a fixed seed. The screens mimic the layout of the public Norman
(CRISPRa, dense matrix, "GENE+ctrl" / "A+B" labels) and Adamson (CRISPRi, triplets)
datasets; the counts themselves are simulated.
"""
import argparse
import csv
import json
import random
from pathlib import Path

import numpy as np

NORMAN_TARGETS = ["CEBPA", "CEBPB", "CEBPE", "KLF1", "SPI1", "TBX3", "FOXA1", "FOXA3", "HNF4A", "IRF1",
                  "MAP2K3", "MAPK1", "ETS2", "SET", "DUSP9", "CBL", "PTPN12", "JUN", "FOSB", "EGR1"]
ADAMSON_TARGETS = ["ATF4", "ATF6", "ERN1", "XBP1", "EIF2AK3", "HSPA5", "DDIT3", "SEL1L", "SYVN1", "HYOU1",
                   "DNAJB9", "DNAJC3", "SEC61A1", "SEC61B", "SEC61G", "SEC63", "SRPRA", "SRPRB", "SSR1", "SSR2",
                   "SSR3", "OST4", "STT3A", "DDOST", "RPN1", "RPN2", "DAD1", "PDIA3", "PDIA6", "CALR", "CANX",
                   "P4HB", "MANF", "CRELD2", "SDF2L1", "EDEM1", "DERL1", "UFM1"]
HOUSEKEEPING = ["ACTB", "GAPDH", "B2M", "MALAT1", "EEF1A1", "TPT1", "RPL13", "RPS27", "FTL", "FTH1", "TMSB4X",
                "RPLP1", "RPS12", "UBA52", "HSP90AB1", "PPIA", "PFN1", "CFL1", "MYL6", "TUBA1B"]
EXTRA = ["HBB", "HBG1", "GYPA", "MPO", "ELANE", "LYZ", "ALB", "APOA1", "MKI67", "TOP2A", "VIM", "ASNS", "TRIB3",
         "CHAC1", "CCND1", "MYC", "CDKN1A", "GADD45A", "SQSTM1", "TXNIP", "SLC7A11", "HMOX1", "NQO1", "CD44",
         "ITGB1", "LGALS1", "S100A4", "S100A6", "ANXA1", "ANXA2"]


def read_markers(path):
    table = []
    with open(path) as f:
        for row in csv.DictReader(f, delimiter="\t"):
            genes = [g.strip().upper() for g in row["marker_genes"].split(",") if g.strip()]
            table.append((row["cell_name"], row["cellontology_id"].replace("_", ":"), genes))
    return table


def read_obo_names(path):
    names, current = {}, None
    for line in Path(path).read_text().splitlines():
        if line.startswith("id: "):
            current = line[4:].strip()
        elif line.startswith("name: ") and current:
            names[current] = line[6:].strip()
    return names


def universe(markers):
    genes = []
    for group in (NORMAN_TARGETS, ADAMSON_TARGETS, HOUSEKEEPING, EXTRA, [g for _, _, gs in markers for g in gs]):
        for g in group:
            if g not in genes:
                genes.append(g)
    return genes


def simulate_screen(rng, genes, conditions, control_cells, cells_per_condition, direction):
    """Returns (cells, matrix[gene][cell], labels). direction=+1 for activation, -1 for interference."""
    base = np.round(rng.lognormal(mean=1.6, sigma=1.1, size=len(genes)), 2)
    gene_index = {g: i for i, g in enumerate(genes)}
    cells, labels, columns = [], [], []
    for c in range(control_cells):
        cells.append(f"ctl{c:03d}")
        labels.append(None)
        columns.append(rng.poisson(base))
    for cond in conditions:
        effect = np.ones(len(genes))
        targets = [t for t in cond.split("+") if t != "ctrl"]
        for t in targets:
            effect[gene_index[t]] *= 8.0 if direction > 0 else 0.05
        responders = rng.choice(len(genes), size=int(rng.integers(6, 30)), replace=False)
        for r in responders:
            effect[r] *= rng.uniform(3.0, 9.0) if rng.random() < 0.55 else rng.uniform(0.05, 0.3)
        for k in range(cells_per_condition):
            cells.append(f"{cond.replace('+', '_')}-{k}")
            labels.append(cond)
            columns.append(rng.poisson(base * effect))
    return cells, np.array(columns).T, labels


def write_norman(out, rng, genes):
    singles = [f"{t}+ctrl" for t in NORMAN_TARGETS]
    pairs = set()
    pair_rng = random.Random(7)
    while len(pairs) < 80:
        a, b = sorted(pair_rng.sample(NORMAN_TARGETS, 2))
        pairs.add(f"{a}+{b}")
    conditions = singles + sorted(pairs)
    cells, matrix, labels = simulate_screen(rng, genes, conditions, control_cells=24, cells_per_condition=3,
                                            direction=+1)
    with open(out / "norman_counts.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["gene"] + cells)
        for g, row in zip(genes, matrix):
            w.writerow([g] + [int(v) for v in row])
    with open(out / "norman_conditions.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cell", "condition"])
        for c, label in zip(cells, labels):
            w.writerow([c, label or "ctrl"])
    return len(conditions)


def write_adamson(out, rng, genes):
    conditions = list(ADAMSON_TARGETS)
    cells, matrix, labels = simulate_screen(rng, genes, conditions, control_cells=30, cells_per_condition=4,
                                            direction=-1)
    with open(out / "adamson_counts.triplets", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["gene", "cell", "value"])
        for j, c in enumerate(cells):
            for i, g in enumerate(genes):
                v = int(matrix[i, j])
                if v:
                    w.writerow([g, c, v])
    with open(out / "adamson_conditions.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cell", "condition"])
        for c, label in zip(cells, labels):
            w.writerow([c, label or "control"])
    return len(conditions)


def typed_profile(rng, genes, marker_genes, noise_genes=60):
    """Marker genes high, housekeeping moderate, a random background low."""
    values = {}
    for g in HOUSEKEEPING:
        values[g] = int(rng.integers(20, 60))
    for g in marker_genes:
        values[g] = int(rng.integers(70, 140))
    others = [g for g in genes if g not in values]
    for g in rng.choice(others, size=min(noise_genes, len(others)), replace=False):
        values[str(g)] = int(rng.integers(1, 15))
    return values


def write_pbmc(out, rng, genes, markers, names):
    chosen = [m for m in markers if m[0] in {"NK", "T cell", "B cell", "Monocyte", "Classical monocyte",
                                             "Plasmacytoid dendritic cell", "Platelet", "CD8+ T cell"}]
    cells, cols, labels = [], [], []
    for name, curie, mg in chosen:
        for k in range(5):
            cid = f"pbmc-{curie.replace(':', '')}-{k}"
            cells.append(cid)
            labels.append(names[curie])
            cols.append(typed_profile(rng, genes, mg))
    with open(out / "pbmc_counts.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["gene"] + cells)
        for g in genes:
            w.writerow([g] + [c.get(g, 0) for c in cols])
    with open(out / "pbmc_labels.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["cell", "cell_type"])
        for c, label in zip(cells, labels):
            w.writerow([c, label])


def sentence(values, cell_id, k=100):
    ranked = sorted(((v, g) for g, v in values.items() if v > 0), key=lambda t: (-t[0], t[1]))
    return {"cell_id": cell_id, "genes": [g for _, g in ranked[:k]]}


def write_cta(path, rng, genes, markers, names, count):
    rows = []
    for i in range(count):
        name, curie, mg = markers[i % len(markers)]
        cid = f"cell{i:04d}"
        rows.append({"task": "CTA", "id": f"cta-{i:04d}",
                     "input": {"cell_sentence": sentence(typed_profile(rng, genes, mg, noise_genes=30), cid)},
                     "ground_truth": {"label": names[curie], "curie": curie},
                     "knowledge_refs": ["CL"]})
    with open(path, "w") as f:
        for r in rows:
            f.write(json.dumps(r) + "\n")


CAPTIONS = {
    "CL:0000623": "A natural killer cell with high cytotoxic granule gene expression, part of the innate lymphoid lineage.",
    "CL:0000236": "A B lymphocyte expressing B cell receptor components, involved in antibody-mediated immunity.",
    "CL:0000576": "A circulating monocyte of the myeloid lineage with high lysozyme expression.",
    "CL:0000182": "A hepatocyte producing plasma proteins such as albumin.",
    "CL:0000127": "An astrocyte of the central nervous system expressing glial fibrillary acidic protein.",
    "CL:0000169": "A pancreatic beta cell that secretes insulin.",
}

QA = [
    ("Which transcription factor is spliced by IRE1 during the unfolded protein response?", "XBP1",
     "IRE1 excises an intron from XBP1 mRNA, producing the active transcription factor XBP1s.",
     "The unfolded protein response couples ER stress sensing by IRE1, PERK and ATF6 to transcriptional programs that restore protein folding capacity."),
    ("Which cell type is marked by co-expression of NKG7, GNLY and KLRD1?", "Natural killer cells",
     "NKG7, GNLY and KLRD1 are canonical markers of natural killer cells in blood single-cell atlases.",
     "Single-cell atlases of human blood resolve natural killer cells by cytotoxic granule and killer receptor transcripts."),
    ("What does a cell sentence represent?", "A cell's genes ranked from highest to lowest expression",
     "Cell sentences encode each cell as its gene symbols ordered by decreasing expression.",
     "Rank-ordered gene lists convert expression profiles into text that language models can read."),
    ("Which chaperone keeps ER stress sensors inactive in unstressed cells?", "HSPA5 (BiP)",
     "BiP binds the luminal domains of IRE1, PERK and ATF6 and releases them when unfolded proteins accumulate.",
     "The ER chaperone BiP acts as a master regulator of the unfolded protein response."),
    ("Which marker distinguishes classical from non-classical monocytes?", "CD14 is high on classical monocytes; non-classical monocytes are CD14-low and CD16-positive",
     "Classical monocytes are CD14-positive while non-classical monocytes express low CD14 and high CD16.",
     "Human blood monocytes divide into subsets by CD14 and CD16 surface expression."),
]


def write_demo_sets(out, rng, genes, markers, names):
    write_cta(out / "cta_demo.jsonl", rng, genes, markers[:12], names, 12)
    with open(out / "cc_demo.jsonl", "w") as f:
        by_curie = {c: mg for _, c, mg in markers}
        for i, (curie, caption) in enumerate(sorted(CAPTIONS.items())):
            s = sentence(typed_profile(rng, genes, by_curie[curie], noise_genes=30), f"cc{i:02d}")
            f.write(json.dumps({"task": "CC", "id": f"cc-{i:02d}", "input": {"cell_sentence": s},
                                "ground_truth": {"caption": caption, "cell_type": names[curie], "curie": curie},
                                "knowledge_refs": ["CL"]}) + "\n")
    with open(out / "cg_demo.jsonl", "w") as f:
        for i, (name, curie, mg) in enumerate(markers[:6]):
            s = sentence(typed_profile(rng, genes, mg, noise_genes=30), f"ref-{curie}")
            f.write(json.dumps({"task": "CG", "id": f"cg-{i:02d}", "input": {"cell_type": names[curie]},
                                "ground_truth": {"cell_sentence": s, "curie": curie},
                                "knowledge_refs": ["CellMarker"]}) + "\n")
    with open(out / "sqa_demo.jsonl", "w") as f:
        for i, (q, a, ev, ab) in enumerate(QA):
            f.write(json.dumps({"task": "SQA", "id": f"sqa-{i:02d}", "input": {"question": q},
                                "ground_truth": {"answer": a, "evidence": ev, "abstract": ab},
                                "knowledge_refs": ["PubMed"]}) + "\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default=str(Path(__file__).resolve().parent.parent / "data"))
    ap.add_argument("--seed", type=int, default=20250701)
    args = ap.parse_args()
    data = Path(args.data)
    markers = read_markers(data / "markers" / "cellmarker_subset.tsv")
    names = read_obo_names(data / "ontology" / "cl_subset.obo")
    genes = universe(markers)
    rng = np.random.default_rng(args.seed)
    samples = data / "samples"
    samples.mkdir(parents=True, exist_ok=True)
    n = write_norman(samples, rng, genes)
    a = write_adamson(samples, rng, genes)
    write_pbmc(samples, rng, genes, markers, names)
    datasets = data / "datasets"
    datasets.mkdir(parents=True, exist_ok=True)
    write_cta(datasets / "cta_608.jsonl", rng, genes, markers, names, 608)
    write_demo_sets(datasets, rng, genes, markers, names)
    print(f"norman conditions={n} adamson conditions={a} genes={len(genes)}")


if __name__ == "__main__":
    main()

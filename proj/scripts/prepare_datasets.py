#!/usr/bin/env python3
"""Provision the benchmark datasets used by the acceptance suite into data/.

Produces canonical CSVs (header row, feature columns first, label column
last) that `grove` loads directly:

  wine.csv           178 rows, 13 features min-max scaled to [0,1],
                     binary labels class0/other (UCI wine, bundled with
                     scikit-learn; always available offline).
  breast-cancer.csv  683 rows, 9 integer features in [1,10], labels
                     benign/malignant (UCI Breast Cancer Wisconsin
                     Original, rows with missing values dropped).
  diabetes.csv       768 rows, 8 features min-max scaled to [0,1],
                     labels neg/pos (Pima Indians Diabetes).
  ionosphere.csv     351 rows, 34 features in [-1,1], labels g/b
                     (UCI Ionosphere).

The last three require network access to the UCI archive (or a mirror);
this script tries the known URLs and reports what it could not reach.
"""

import csv
import io
import os
import sys
import urllib.request

OUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

BREAST_CANCER_URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin/breast-cancer-wisconsin.data",
    "https://archive.ics.uci.edu/static/public/15/data.csv",
]
IONOSPHERE_URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/ionosphere/ionosphere.data",
    "https://archive.ics.uci.edu/static/public/52/data.csv",
]
PIMA_URLS = [
    "https://raw.githubusercontent.com/jbrownlee/Datasets/master/pima-indians-diabetes.csv",
]


def fmt(x):
    return repr(float(x))


def write_csv(name, header, rows):
    path = os.path.join(OUT_DIR, name)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows, {len(header) - 1} features)")


def minmax_scale(rows):
    cols = list(zip(*rows))
    out_cols = []
    for col in cols:
        lo, hi = min(col), max(col)
        span = hi - lo
        out_cols.append([(v - lo) / span if span > 0 else 0.0 for v in col])
    return [list(r) for r in zip(*out_cols)]


def make_wine():
    from sklearn.datasets import load_wine

    wine = load_wine()
    feats = minmax_scale([list(map(float, r)) for r in wine.data])
    rows = [
        [fmt(v) for v in feat] + ["class0" if t == 0 else "other"]
        for feat, t in zip(feats, wine.target)
    ]
    header = [n.replace(" ", "_").replace("/", "_") for n in wine.feature_names] + ["label"]
    write_csv("wine.csv", header, rows)


def fetch(urls):
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=30) as r:
                return r.read().decode("utf-8", errors="replace"), url
        except Exception as e:  # noqa: BLE001 - report and try the next mirror
            print(f"  could not fetch {url}: {e}")
    return None, None


def make_breast_cancer():
    text, url = fetch(BREAST_CANCER_URLS)
    if text is None:
        return False
    rows = []
    for line in text.strip().splitlines():
        parts = line.strip().split(",")
        if len(parts) != 11 or "?" in parts:
            continue
        feats = parts[1:10]  # drop the sample id column
        label = "benign" if parts[10] == "2" else "malignant"
        rows.append([str(int(v)) for v in feats] + [label])
    if len(rows) != 683:
        print(f"  unexpected row count {len(rows)} from {url} (expected 683)")
        return False
    header = [
        "clump_thickness", "cell_size_uniformity", "cell_shape_uniformity",
        "marginal_adhesion", "epithelial_cell_size", "bare_nuclei",
        "bland_chromatin", "normal_nucleoli", "mitoses", "label",
    ]
    write_csv("breast-cancer.csv", header, rows)
    return True


def make_diabetes():
    text, url = fetch(PIMA_URLS)
    if text is None:
        return False
    raw, labels = [], []
    for line in text.strip().splitlines():
        parts = line.strip().split(",")
        if len(parts) != 9:
            continue
        raw.append([float(v) for v in parts[:8]])
        labels.append("pos" if parts[8].strip() == "1" else "neg")
    if len(raw) != 768:
        print(f"  unexpected row count {len(raw)} from {url} (expected 768)")
        return False
    feats = minmax_scale(raw)
    rows = [[fmt(v) for v in f] + [lab] for f, lab in zip(feats, labels)]
    header = [
        "pregnancies", "glucose", "blood_pressure", "skin_thickness",
        "insulin", "bmi", "pedigree", "age", "label",
    ]
    write_csv("diabetes.csv", header, rows)
    return True


def make_ionosphere():
    text, url = fetch(IONOSPHERE_URLS)
    if text is None:
        return False
    rows = []
    for line in text.strip().splitlines():
        parts = line.strip().split(",")
        if len(parts) != 35:
            continue
        rows.append([fmt(float(v)) for v in parts[:34]] + [parts[34].strip()])
    if len(rows) != 351:
        print(f"  unexpected row count {len(rows)} from {url} (expected 351)")
        return False
    header = [f"pulse_{i}" for i in range(34)] + ["label"]
    write_csv("ionosphere.csv", header, rows)
    return True


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    make_wine()
    ok = True
    for maker, name in [
        (make_breast_cancer, "breast-cancer"),
        (make_diabetes, "diabetes"),
        (make_ionosphere, "ionosphere"),
    ]:
        print(f"preparing {name} ...")
        if not maker():
            ok = False
            print(f"  SKIPPED {name}: source unreachable from this environment")
    if not ok:
        print("\nSome datasets could not be provisioned; the acceptance "
              "criteria that need them will report failures until this "
              "script is run with network access to the sources above.")
        sys.exit(1)


if __name__ == "__main__":
    main()

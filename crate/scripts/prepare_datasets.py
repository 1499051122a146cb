#!/usr/bin/env python3
"""Materialize the UCI German and Australian credit data sets under data/.

The UCI archive is not always reachable, so the raw files are taken from
PyPI wheels that vendor them:

* imbalanced-databases: german.data (20 mixed attributes) and
  german.data-numeric (24 numeric attributes), unmodified UCI copies.
* wittgenstein: UCI crx.data (Credit Approval) with original decimals.
* keel-ds: a copy of the Statlog australian.dat whose decimal points were
  stripped during conversion.

Statlog Australian is crx.data with recoded symbols, one dropped attribute,
imputed missing values and A15 shifted by one. Each australian.dat row is
matched to exactly one crx.data row and the continuous values are restored
from crx.data.
"""
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
import zipfile

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")

GERMAN_FEATURES = [
    ("status", "categorical"), ("duration", "continuous"),
    ("credit_history", "categorical"), ("purpose", "categorical"),
    ("credit_amount", "continuous"), ("savings", "categorical"),
    ("employment", "categorical"), ("installment_rate", "continuous"),
    ("personal_status", "categorical"), ("other_debtors", "categorical"),
    ("residence_since", "continuous"), ("property", "categorical"),
    ("age", "continuous"), ("other_installment_plans", "categorical"),
    ("housing", "categorical"), ("existing_credits", "continuous"),
    ("job", "categorical"), ("people_liable", "continuous"),
    ("telephone", "categorical"), ("foreign_worker", "categorical"),
]

AUSTRALIAN_KINDS = {
    "A1": "categorical", "A2": "continuous", "A3": "continuous",
    "A4": "categorical", "A5": "categorical", "A6": "categorical",
    "A7": "continuous", "A8": "categorical", "A9": "categorical",
    "A10": "continuous", "A11": "categorical", "A12": "categorical",
    "A13": "continuous", "A14": "continuous",
}


def fetch_wheel(name, dest):
    subprocess.check_call(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--only-binary=:all:", "-q", "-d", dest, name]
    )
    for f in os.listdir(dest):
        if f.lower().startswith(name.replace("-", "_").lower()) and f.endswith(".whl"):
            return zipfile.ZipFile(os.path.join(dest, f))
    raise SystemExit(f"wheel for {name} not found")


def schema(features, label, vocabularies):
    out = {"label_column": label, "features": []}
    for name, kind in features:
        entry = {"name": name, "kind": kind}
        if kind == "categorical":
            entry["vocabulary"] = vocabularies[name]
        out["features"].append(entry)
    return out


def write(dirname, stem, header, rows, schema_doc):
    os.makedirs(dirname, exist_ok=True)
    with open(os.path.join(dirname, stem + ".csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    with open(os.path.join(dirname, stem + ".schema.json"), "w") as fh:
        json.dump(schema_doc, fh, indent=2)
        fh.write("\n")


def german(imbdb):
    raw = imbdb.read("imbalanced_databases/data/german/german.data.txt").decode()
    rows = [line.split() for line in raw.splitlines() if line.strip()]
    assert len(rows) == 1000
    names = [n for n, _ in GERMAN_FEATURES]
    out = [r[:20] + ["good" if r[20] == "1" else "bad"] for r in rows]
    vocab = {
        n: sorted({r[i] for r in rows}, key=lambda s: (len(s), s))
        for i, (n, k) in enumerate(GERMAN_FEATURES) if k == "categorical"
    }
    write(os.path.join(ROOT, "german"), "german", names + ["class"], out,
          schema(GERMAN_FEATURES, "class", vocab))

    raw = imbdb.read("imbalanced_databases/data/german/german.data-numeric.txt").decode()
    rows = [line.split() for line in raw.splitlines() if line.strip()]
    assert len(rows) == 1000 and all(len(r) == 25 for r in rows)
    feats = [(f"f{i + 1}", "continuous") for i in range(24)]
    out = [r[:24] + ["good" if r[24] == "1" else "bad"] for r in rows]
    write(os.path.join(ROOT, "german"), "german_numeric",
          [n for n, _ in feats] + ["class"], out, schema(feats, "class", {}))


def australian(keel, witt):
    aus = [l.strip().split(",") for l in
           keel.read("keel_ds/data/balanced/raw/australian.dat").decode().splitlines()
           if l.strip() and not l.startswith("@")]
    crx = list(csv.reader(io.StringIO(witt.read("tests/credit.csv").decode())))[1:]
    assert len(aus) == 690 and len(crx) == 690

    def stripped(s):
        return None if s == "?" else float(s.replace(".", ""))

    def matches(a, c):
        if a[14] != ("1" if c[15] == "+" else "0"):
            return False
        if a[9] != str(int(float(c[10]))) or float(a[13]) != float(c[14]) + 1:
            return False
        for ai, ci in ((1, 1), (2, 2), (6, 7)):
            v = stripped(c[ci])
            if v is not None and float(a[ai]) != v:
                return False
        return c[13] == "?" or float(a[12]) == float(c[13])

    used, rows = set(), []
    for a in aus:
        cands = [j for j, c in enumerate(crx) if j not in used and matches(a, c)]
        if not cands:
            raise SystemExit(f"no crx match for {a}")
        j = cands[0]
        used.add(j)
        c = crx[j]
        row = list(a)
        row[1] = c[1] if c[1] != "?" else "31.57"
        row[2] = c[2]
        row[6] = c[7]
        row[12] = str(int(float(a[12])))
        row[13] = str(int(float(a[13])))
        rows.append(row)
    header = [f"A{i}" for i in range(1, 15)] + ["class"]
    feats = [(h, AUSTRALIAN_KINDS[h]) for h in header[:14]]
    vocab = {
        h: sorted({r[i] for r in rows}, key=int)
        for i, h in enumerate(header[:14]) if AUSTRALIAN_KINDS[h] == "categorical"
    }
    write(os.path.join(ROOT, "australian"), "australian", header, rows,
          schema(feats, "class", vocab))


def main():
    with tempfile.TemporaryDirectory() as tmp:
        imbdb = fetch_wheel("imbalanced-databases", tmp)
        keel = fetch_wheel("keel-ds", tmp)
        witt = fetch_wheel("wittgenstein", tmp)
        german(imbdb)
        australian(keel, witt)


if __name__ == "__main__":
    main()

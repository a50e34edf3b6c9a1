#!/usr/bin/env python3
"""Download the two UCI datasets used by the real-data studies into data/.

Writes data/mice_protein.csv and data/codon_usage.csv, then checks the
row/column counts the studies expect after cleaning (1047x71 and 12135x64).
Needs pandas; the mice sheet is an .xls file, so xlrd must be installed too.
"""

import argparse
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

import pandas as pd

MICE_URL = "https://archive.ics.uci.edu/static/public/342/mice+protein+expression.zip"
CODON_URL = "https://archive.ics.uci.edu/static/public/577/codon+usage.zip"

MICE_DROP = ["BAD_N", "BCL2_N", "pCFOS_N", "H3AcK18_N", "EGR1_N", "H3MeK4_N"]
CODON_META = ["Kingdom", "DNAtype", "SpeciesID", "Ncodons", "SpeciesName"]
CODON_DROP_KINGDOMS = ["arc", "phg", "plm"]


def fetch_zip(url):
    with urllib.request.urlopen(url, timeout=120) as resp:
        return zipfile.ZipFile(io.BytesIO(resp.read()))


def member(archive, suffix):
    for name in archive.namelist():
        if name.lower().endswith(suffix):
            return archive.read(name)
    sys.exit(f"no *{suffix} inside archive ({archive.namelist()})")


def mice(out):
    raw = pd.read_excel(io.BytesIO(member(fetch_zip(MICE_URL), ".xls")))
    raw.to_csv(out, index=False)
    kept = raw.drop(columns=["MouseID", "Genotype", "Treatment", "Behavior"] + MICE_DROP).dropna()
    return len(kept), kept.shape[1] - 1


def codon(out):
    raw = pd.read_csv(io.BytesIO(member(fetch_zip(CODON_URL), ".csv")), dtype=str)
    codons = [c for c in raw.columns if c not in CODON_META]
    # a couple of rows carry text in the frequency columns; they cannot be parsed
    numeric = raw[codons].apply(pd.to_numeric, errors="coerce")
    raw = raw[numeric.notna().all(axis=1)]
    raw.to_csv(out, index=False)
    kept = raw[~raw["Kingdom"].isin(CODON_DROP_KINGDOMS)]
    return len(kept), len(codons)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=Path(__file__).resolve().parent.parent / "data", type=Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    ok = True
    for name, fn, want in [("mice_protein.csv", mice, (1047, 71)), ("codon_usage.csv", codon, (12135, 64))]:
        got = fn(args.out / name)
        status = "ok" if got == want else "MISMATCH"
        ok &= got == want
        print(f"{name}: {got[0]} rows x {got[1]} features after cleaning (want {want[0]} x {want[1]}) {status}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

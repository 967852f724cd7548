#!/usr/bin/env python3
"""Rebuild data/ecoli.csv and data/glass.csv from the `imbalanced-databases`
wheel, which bundles the UCI glass file verbatim and the UCI ecoli data as
KEEL one-vs-rest splits.

    pip download --no-deps imbalanced-databases==0.1.1 -d /tmp/wheel
    python3 scripts/build_uci_csv.py /tmp/wheel/imbalanced_databases-0.1.1-py3-none-any.whl data/
"""
import collections
import sys
import zipfile

ROOT = "imbalanced_databases/data/"

# KEEL class numbering for ecoli: 0 cp, 1 im, 2 imS, 3 imL, 4 imU, 5 om, 6 omL, 7 pp.
# Each split lists the rows of the classes it uses, tagged positive/negative.
SPLITS = {
    "ecoli-0_vs_1": ({"cp"}, {"im"}),
    "ecoli1": ({"im"}, None),
    "ecoli2": ({"pp"}, None),
    "ecoli3": ({"imU"}, None),
    "ecoli4": ({"om"}, None),
    "ecoli-0-1-3-7_vs_2-6": ({"imS", "omL"}, {"cp", "im", "imL", "pp"}),
    # this split omits the near-constant chg column
    "ecoli-0-1-4-6_vs_5": ({"om"}, {"cp", "im", "imU", "omL"}),
}


def feature_key(values, scaled):
    # Some splits store features multiplied by 100 with trailing zeros
    # dropped ("0.40" becomes "4.0"), so compare on stripped hundredths.
    out = []
    for v in values:
        hundredths = round(float(v)) if scaled else round(100 * float(v))
        out.append(str(hundredths).rstrip("0") or "0")
    return tuple(out)


def read_keel(z, name):
    rows = []
    for line in z.read(f"{ROOT}{name}/{name}.dat").decode().splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        *feat, cls = [t.strip() for t in line.split(",")]
        rows.append((tuple(feat), cls == "positive"))
    scaled = max(float(v) for f, _ in rows for v in f) > 1.0
    return [(f, feature_key(f, scaled), p) for f, p in rows]


def build_ecoli(z):
    base = read_keel(z, "ecoli1")
    assert len(base) == 336, len(base)
    candidates = [set(["cp", "im", "imS", "imL", "imU", "om", "omL", "pp"]) for _ in base]
    for split, (pos, neg) in SPLITS.items():
        member = collections.defaultdict(list)
        rows = read_keel(z, split)
        width = len(rows[0][1])
        for _, key, is_pos in rows:
            member[key].append(is_pos)
        for i, (_, key, _) in enumerate(base):
            if width == 6:
                key = key[:3] + key[4:]
            flags = member.get(key)
            if not flags:
                if neg is not None:
                    candidates[i] -= pos | neg
                continue
            # duplicated feature rows may carry different tags; keep the union
            allowed = set()
            if any(flags):
                allowed |= pos
            if not all(flags):
                allowed |= neg if neg is not None else candidates[i] - pos
            candidates[i] &= allowed
    labels = []
    for i, c in enumerate(candidates):
        if len(c) != 1:
            raise SystemExit(f"ecoli row {i}: ambiguous class {sorted(c)}")
        labels.append(c.pop())
    counts = collections.Counter(labels)
    expected = {"cp": 143, "im": 77, "pp": 52, "imU": 35, "om": 20, "omL": 5, "imL": 2, "imS": 2}
    if counts != expected:
        raise SystemExit(f"ecoli class counts {dict(counts)} != {expected}")
    header = "mcg,gvh,lip,chg,aac,alm1,alm2,class"
    return header, [",".join(f) + "," + l for (f, _, _), l in zip(base, labels)]


def build_glass(z):
    lines = z.read(f"{ROOT}glass/glass.data.txt").decode().split()
    header = "RI,Na,Mg,Al,Si,K,Ca,Ba,Fe,type"
    # first column is the row id
    return header, [",".join(l.split(",")[1:]) for l in lines if l]


def main():
    wheel, out = sys.argv[1], sys.argv[2].rstrip("/")
    z = zipfile.ZipFile(wheel)
    for name, fn in (("ecoli", build_ecoli), ("glass", build_glass)):
        header, rows = fn(z)
        with open(f"{out}/{name}.csv", "w") as f:
            f.write(header + "\n" + "\n".join(rows) + "\n")
        print(f"{name}: {len(rows)} rows")


if __name__ == "__main__":
    main()

"""Independent brute-force oracles, written straight against the raw CSV.

Deliberately avoids the engine's query machinery: plain dict grouping and the
statistics module, so agreement between the two is meaningful evidence.
"""

import csv
import io
import math
import statistics


def parse(demo_csv: str) -> list[dict]:
    rows = []
    for r in csv.DictReader(io.StringIO(demo_csv)):
        parsed = {}
        for k, v in r.items():
            try:
                parsed[k] = int(v)
            except ValueError:
                try:
                    parsed[k] = float(v)
                except ValueError:
                    parsed[k] = v
        rows.append(parsed)
    return rows


def group_means(rows, label, metric, filters=()):
    for col, val in filters:
        rows = [r for r in rows if r[col] == val]
    groups = {}
    for r in rows:
        groups.setdefault(r[label], []).append(float(r[metric]))
    return {k: sum(v) / len(v) for k, v in groups.items()}


def ranking_oracle(rows, label, metric, direction, rank, filters=()):
    """Value and label at 1-based `rank` with the engine's lexical tie-break."""
    means = group_means(rows, label, metric, filters)
    ordered = sorted(means.items(),
                     key=lambda kv: (kv[1] if direction == "asc" else -kv[1],
                                     str(kv[0])))
    return ordered[rank - 1]


def composition_oracle(rows, group, metric):
    sums = {}
    for r in rows:
        sums.setdefault(r[group], 0.0)
        sums[r[group]] += float(r[metric])
    # canonical total: group subtotals added in lexical group order
    total = sum(sums[k] for k in sorted(sums, key=str))
    return {k: v / total for k, v in sums.items()}


def per_capita_oracle(rows, label, metric_a, metric_b):
    a = group_means(rows, label, metric_a)
    b = group_means(rows, label, metric_b)
    return {k: (a[k] / b[k] if b[k] != 0 else None) for k in a}


def outlier_oracle(rows, label, metric, threshold=2.0):
    means = group_means(rows, label, metric)
    mu = statistics.fmean(means.values())
    sigma = statistics.pstdev(means.values())
    if sigma == 0:
        return {}
    return {k: (v - mu) / sigma for k, v in means.items()
            if abs((v - mu) / sigma) > threshold}


def correlation_oracle(rows, entity, metric_a, metric_b):
    a = group_means(rows, entity, metric_a)
    b = group_means(rows, entity, metric_b)
    keys = sorted(a)
    return statistics.correlation([a[k] for k in keys], [b[k] for k in keys])


def temporal_oracle(rows, time_col, metric, filters=()):
    means = group_means(rows, time_col, metric, filters)
    periods = sorted(means, key=str)
    out = []
    for t0, t1 in zip(periods, periods[1:]):
        base = means[t0]
        pct = None if base == 0 else (means[t1] - base) / base * 100.0
        out.append((t0, t1, pct))
    return out

"""Finite-statistics front end: simulate shot records, estimate the chain
value with an upper confidence bound, and derive the locality cap."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .distributions import ConditionalDistribution
from .hvm import HiddenVariableModel

__all__ = [
    "MissingSettingPairError",
    "ShotRecord",
    "EstimateReport",
    "chain_pairs",
    "simulate_shots",
    "estimate_chain_value",
    "estimate_from_counts",
    "max_locality_bound",
    "write_shots_csv",
    "read_shots_csv",
]


class MissingSettingPairError(RuntimeError):
    """A chain-relevant setting pair never occurred in the record stream."""


@dataclass(slots=True)
class ShotRecord:
    """One trial: settings, outcome bits, and (for simulated models) the
    hidden-variable indices behind the outcome."""

    a: int
    b: int
    x: int
    y: int
    u: int | None = None
    v: int | None = None


@dataclass(frozen=True)
class EstimateReport:
    """Chain-value estimate from finite statistics.

    ``upper_bound`` exceeds the true chain value with probability at least
    ``confidence_level``; ``shots_per_pair`` is the smallest sample count
    among the 2N chain-relevant setting pairs.
    """

    n_settings: int
    point_estimate: float
    upper_bound: float
    confidence_level: float
    shots_per_pair: int
    method: str = "hoeffding-union"

    def to_dict(self) -> dict:
        return {
            "n_settings": self.n_settings,
            "point_estimate": self.point_estimate,
            "upper_bound": self.upper_bound,
            "confidence_level": self.confidence_level,
            "shots_per_pair": self.shots_per_pair,
            "method": self.method,
        }


def chain_pairs(n: int) -> list[tuple[int, int, str]]:
    """The 2N chain-relevant setting pairs with their term kind:
    ``differ`` terms count unequal outcomes, the ``match`` wrap term counts
    equal outcomes."""
    if n < 2:
        raise ValueError("chain parameter must be at least 2")
    pairs = [(i, i, "differ") for i in range(n)]
    pairs += [(i + 1, i, "differ") for i in range(n - 1)]
    pairs.append((0, n - 1, "match"))
    return pairs


def _source_cdfs(source, n: int):
    """Per-setting-pair cumulative outcome tables plus decode shape."""
    if isinstance(source, HiddenVariableModel):
        if source.n_settings != n:
            raise ValueError("model chain length does not match n")
        if not source.has_exact_support:
            raise ValueError("shot simulation needs a finite-support model")
        joint = np.einsum("uv,abuvxy->abxyuv", source.p_uv, source.kernels)
        shape = joint.shape[2:]
        flat = joint.reshape(n, n, -1)
        return flat.cumsum(axis=-1), shape, True
    if isinstance(source, ConditionalDistribution):
        if source.input_sizes != (n, n) or source.output_sizes != (2, 2):
            raise ValueError(
                "expected a two-party binary table with n settings per side"
            )
        flat = source.table.reshape(n, n, 4)
        return flat.cumsum(axis=-1), (2, 2), False
    raise TypeError("source must be a conditional table or a hidden-variable model")


def simulate_shots(
    source,
    n: int,
    shots: int,
    seed: int,
    chunk: int = 65536,
) -> Iterator[ShotRecord]:
    """Generate a reproducible stream of shot records.

    Settings are drawn uniformly and independently for each shot; outcomes
    follow the source table (or model, in which case records carry the
    hidden-variable indices).  The same seed always yields the same stream.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    cdfs, shape, annotated = _source_cdfs(source, n)
    m = cdfs.shape[-1]
    chunk = max(1, min(chunk, max(1, 4_000_000 // m)))
    rng = np.random.default_rng(seed)
    remaining = shots
    while remaining > 0:
        k = min(chunk, remaining)
        remaining -= k
        a = rng.integers(0, n, size=k)
        b = rng.integers(0, n, size=k)
        r = rng.random(k)
        rows = cdfs[a, b]  # (k, m)
        idx = np.minimum((r[:, None] >= rows).sum(axis=1), m - 1)
        parts = np.unravel_index(idx, shape)
        if annotated:
            xs, ys, us, vs = parts
            for i in range(k):
                yield ShotRecord(
                    int(a[i]), int(b[i]), int(xs[i]), int(ys[i]),
                    int(us[i]), int(vs[i]),
                )
        else:
            xs, ys = parts
            for i in range(k):
                yield ShotRecord(int(a[i]), int(b[i]), int(xs[i]), int(ys[i]))


def estimate_from_counts(
    counts, mismatches, n: int, confidence: float
) -> EstimateReport:
    """Estimator core over per-pair totals.

    ``counts[a, b]`` trials were observed for the pair, ``mismatches[a, b]``
    of them with unequal outcomes.  The point estimate sums the 2N term
    frequencies; the upper bound adds one two-sided Hoeffding radius per
    term with the failure budget split evenly across terms, so it holds
    with probability at least ``confidence``.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    counts = np.asarray(counts, dtype=float)
    mismatches = np.asarray(mismatches, dtype=float)
    pairs = chain_pairs(n)
    alpha = 1.0 - confidence
    log_term = math.log(2.0 * len(pairs) / alpha)
    freqs = []
    radii = []
    per_pair = []
    for a, b, kind in pairs:
        m = float(counts[a][b])
        if m < 1.0:
            raise MissingSettingPairError(
                f"setting pair ({a}, {b}) was never sampled"
            )
        frac = float(mismatches[a][b]) / m
        freqs.append(frac if kind == "differ" else 1.0 - frac)
        radii.append(math.sqrt(log_term / (2.0 * m)))
        per_pair.append(m)
    point = math.fsum(freqs)
    upper = point + math.fsum(radii)
    return EstimateReport(n, point, upper, confidence, int(min(per_pair)))


def estimate_chain_value(
    records: Iterable[ShotRecord], n: int, confidence: float
) -> EstimateReport:
    """Fold a record stream into per-pair counts and estimate the chain
    value; single pass, constant memory per setting pair."""
    counts = np.zeros((n, n), dtype=np.int64)
    mism = np.zeros((n, n), dtype=np.int64)
    for rec in records:
        counts[rec.a, rec.b] += 1
        if rec.x != rec.y:
            mism[rec.a, rec.b] += 1
    return estimate_from_counts(counts, mism, n, confidence)


def max_locality_bound(report: EstimateReport) -> float:
    """Certified cap on any hidden-variable model's local part: half the
    chain-value upper bound."""
    return 0.5 * report.upper_bound


def write_shots_csv(records: Iterable[ShotRecord], path: str | Path) -> int:
    """Stream records to CSV (integer columns ``a,b,x,y`` plus ``u,v`` when
    the first record carries annotations).  Returns the row count."""
    it = iter(records)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("no records to write") from None
    annotated = first.u is not None
    rows = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["a", "b", "x", "y", "u", "v"] if annotated else ["a", "b", "x", "y"])
        for rec in itertools.chain([first], it):
            if annotated:
                writer.writerow([rec.a, rec.b, rec.x, rec.y, rec.u, rec.v])
            else:
                writer.writerow([rec.a, rec.b, rec.x, rec.y])
            rows += 1
    return rows


def read_shots_csv(path: str | Path) -> Iterator[ShotRecord]:
    """Stream records back from a CSV written by :func:`write_shots_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["a", "b", "x", "y"]:
            raise ValueError(f"unexpected shot CSV header: {header}")
        annotated = len(header) == 6
        for row in reader:
            if annotated:
                yield ShotRecord(*(int(c) for c in row))
            else:
                a, b, x, y = (int(c) for c in row)
                yield ShotRecord(a, b, x, y)

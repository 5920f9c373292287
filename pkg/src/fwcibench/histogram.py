"""Fixed-width histograms over half-open ranges, plus the log view's zero displacement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Histogram:
    """Binned counts over [lo, hi) with equal-width bins.

    ``counts[i]`` holds the values that fell in bin i; ``centers[i]`` is the
    bin midpoint lo + (i + 1/2) * width. ``n_dropped`` counts input values
    outside [lo, hi), kept so that counts plus drops always account for the
    whole input.
    """

    lo: float
    hi: float
    n_bins: int
    counts: np.ndarray
    centers: np.ndarray
    n_dropped: int = 0

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_bins


def build_histogram(values, lo: float, hi: float, n_bins: int) -> Histogram:
    """Bin ``values`` into ``n_bins`` equal-width bins over [lo, hi).

    A value v with lo <= v < hi lands in bin floor((v - lo) / width); the
    range is half-open, so a value exactly at ``hi`` is dropped. Out-of-range
    values (including NaN) are dropped and counted in ``n_dropped``.
    """
    if not (lo < hi):
        raise ValueError(f"need lo < hi, got [{lo}, {hi})")
    if n_bins < 1:
        raise ValueError(f"need n_bins >= 1, got {n_bins}")
    v = np.asarray(values, dtype=float).ravel()
    width = (hi - lo) / n_bins
    with np.errstate(invalid="ignore", over="ignore"):
        rel = np.floor((v - lo) / width)
        ok = (v >= lo) & (v < hi) & (rel >= 0) & (rel < n_bins)
    counts = np.bincount(rel[ok].astype(np.int64), minlength=n_bins)
    centers = lo + (np.arange(n_bins) + 0.5) * width
    counts.setflags(write=False)
    centers.setflags(write=False)
    return Histogram(
        lo=float(lo),
        hi=float(hi),
        n_bins=int(n_bins),
        counts=counts,
        centers=centers,
        n_dropped=int(v.size - int(ok.sum())),
    )


def log_transform(values, zero_shift: float) -> np.ndarray:
    """Natural log of non-negative values, displacing exact zeros to ln(zero_shift).

    Only v == 0 is displaced; positive values below ``zero_shift`` keep their
    true logarithm. Negative inputs are an error.
    """
    if not (zero_shift > 0):
        raise ValueError(f"zero_shift must be > 0, got {zero_shift}")
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise ValueError("log_transform requires non-negative values")
    out = np.where(v > 0, np.log(np.where(v > 0, v, 1.0)), math.log(zero_shift))
    return out


def to_text(hist: Histogram) -> str:
    """Serialize a histogram to line-oriented text (exact float round trip)."""
    lines = [
        "histogram v1",
        f"lo = {hist.lo!r}",
        f"hi = {hist.hi!r}",
        f"n_bins = {hist.n_bins}",
        f"n_dropped = {hist.n_dropped}",
        "counts = " + " ".join(str(int(c)) for c in hist.counts),
    ]
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Histogram:
    """Parse the output of :func:`to_text` back into a histogram."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "histogram v1":
        raise ValueError("not a serialized histogram (missing 'histogram v1' header)")
    fields: dict[str, str] = {}
    for ln in lines[1:]:
        key, _, value = ln.partition("=")
        fields[key.strip()] = value.strip()
    try:
        lo = float(fields["lo"])
        hi = float(fields["hi"])
        n_bins = int(fields["n_bins"])
        n_dropped = int(fields.get("n_dropped", "0"))
        counts = np.array([int(c) for c in fields["counts"].split()], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"serialized histogram is missing field {exc}") from None
    if counts.size != n_bins:
        raise ValueError(f"counts length {counts.size} does not match n_bins {n_bins}")
    width = (hi - lo) / n_bins
    centers = lo + (np.arange(n_bins) + 0.5) * width
    counts.setflags(write=False)
    centers.setflags(write=False)
    return Histogram(lo=lo, hi=hi, n_bins=n_bins, counts=counts, centers=centers, n_dropped=n_dropped)

"""Multivariate spatial data container and its CSV format.

CSV layout: header ``x1,...,xd,<name1>,...,<namep>``; one row per
location; empty fields mark missing observations.
"""

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True, eq=False)
class SpatialDataset:
    """``n`` locations in ``R^d`` with a ``p``-variate observation at each."""

    locations: np.ndarray
    obs: np.ndarray
    names: tuple = None

    def __post_init__(self):
        loc = np.array(self.locations, dtype=float)
        if loc.ndim == 1:
            loc = loc[:, None]
        obs = np.array(self.obs, dtype=float)
        if obs.ndim == 1:
            obs = obs[:, None]
        if loc.shape[0] != obs.shape[0]:
            raise ValueError("locations and observations disagree on n")
        if not np.all(np.isfinite(loc)):
            raise ValueError("non-finite coordinates")
        names = tuple(self.names) if self.names is not None else tuple(
            f"z{i + 1}" for i in range(obs.shape[1]))
        if len(names) != obs.shape[1]:
            raise ValueError("one name per component required")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "obs", obs)
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.obs.shape[0]

    @property
    def p(self):
        return self.obs.shape[1]

    @property
    def d(self):
        return self.locations.shape[1]

    def vector(self):
        """Observations stacked location-major: ``(X(s_1)', ..., X(s_n)')'``."""
        return self.obs.reshape(-1)

    def subset(self, idx):
        idx = np.asarray(idx)
        return SpatialDataset(self.locations[idx], self.obs[idx], self.names)


def substream(seed, name):
    """Independent generator for a named purpose ("simulation", "split", ...)."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))


def standardize(data):
    """Subtract componentwise means and divide by standard deviations.

    Returns the standardized dataset together with ``(mean, sd)``.
    """
    mean = np.nanmean(data.obs, axis=0)
    sd = np.nanstd(data.obs, axis=0)
    if np.any(sd == 0):
        raise ValueError("a component has zero variance")
    return SpatialDataset(data.locations, (data.obs - mean) / sd, data.names), mean, sd


def write_csv(data, path):
    header = [f"x{c + 1}" for c in range(data.d)] + list(data.names)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for loc, ob in zip(data.locations, data.obs):
            w.writerow([repr(float(v)) for v in loc]
                       + ["" if np.isnan(v) else repr(float(v)) for v in ob])


class DataFormatError(ValueError):
    pass


def read_csv(path):
    """Read a dataset written by :func:`write_csv` (or any file in that layout)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    d = 0
    while d < len(header) and header[d][:1] == "x" and header[d][1:].isdigit():
        d += 1
    if d == 0 or d == len(header):
        raise DataFormatError(f"{path}: header must be x1..xd followed by component names")
    values = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataFormatError(f"{path}:{r}: expected {len(header)} fields, got {len(row)}")
        for c, v in enumerate(row):
            v = v.strip()
            if v == "":
                if c < d:
                    raise DataFormatError(f"{path}:{r}: missing coordinate")
                values[r - 2, c] = np.nan
            else:
                try:
                    values[r - 2, c] = float(v)
                except ValueError:
                    raise DataFormatError(f"{path}:{r}: not a number: {v!r}") from None
    return SpatialDataset(values[:, :d], values[:, d:], tuple(header[d:]))

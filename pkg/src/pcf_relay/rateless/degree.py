"""Degree distributions for LT codes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class DegreeDistribution:
    degrees: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.degrees, dtype=np.int64)
        p = np.asarray(self.probs, dtype=float)
        if d.shape != p.shape or d.ndim != 1 or len(d) == 0:
            raise ValueError("degrees and probs must be non-empty 1-D arrays of equal length")
        if np.any(d < 1) or len(np.unique(d)) != len(d):
            raise ValueError("degrees must be unique and >= 1")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses must be non-negative and sum to 1 (sum={p.sum()!r})")
        order = np.argsort(d)
        object.__setattr__(self, "degrees", d[order])
        object.__setattr__(self, "probs", p[order])

    @property
    def max_degree(self) -> int:
        return int(self.degrees[-1])

    @property
    def mean(self) -> float:
        return float(np.dot(self.degrees, self.probs))

    def pmf(self, d: int) -> float:
        idx = np.searchsorted(self.degrees, d)
        if idx < len(self.degrees) and self.degrees[idx] == d:
            return float(self.probs[idx])
        return 0.0

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def truncated(self, k: int) -> "DegreeDistribution":
        """Fold mass of degrees above ``k`` onto degree ``k``."""
        if self.max_degree <= k:
            return self
        keep = self.degrees < k
        probs = np.append(self.probs[keep], self.probs[~keep].sum())
        degs = np.append(self.degrees[keep], k)
        return DegreeDistribution(degs, probs / probs.sum())

    def to_table(self) -> str:
        return "".join(f"{d} {float(p)!r}\n" for d, p in zip(self.degrees, self.probs) if p > 0)

    @classmethod
    def from_table(cls, text: str) -> "DegreeDistribution":
        """Parse a two-column ``degree mass`` table; ``#`` starts a comment."""
        degs, probs = [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 'degree mass', got {line!r}")
            degs.append(int(parts[0]))
            probs.append(float(parts[1]))
        probs = np.asarray(probs)
        if probs.size and abs(probs.sum() - 1.0) < 1e-6:
            probs = probs / probs.sum()
        return cls(np.asarray(degs), probs)

    @classmethod
    def load(cls, path) -> "DegreeDistribution":
        return cls.from_table(Path(path).read_text())


def robust_soliton(k: int, c: float = 0.03, delta: float = 0.5) -> DegreeDistribution:
    """Luby's robust soliton distribution mu(d) = (rho(d) + tau(d)) / beta."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if c <= 0:
        raise ValueError("c must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    d = np.arange(1, k + 1, dtype=float)
    rho = np.empty(k)
    rho[0] = 1.0 / k
    rho[1:] = 1.0 / (d[1:] * (d[1:] - 1.0))
    R = c * math.log(k / delta) * math.sqrt(k)
    spike = min(max(int(round(k / R)), 1), k)
    tau = np.zeros(k)
    tau[: spike - 1] = R / (d[: spike - 1] * k)
    tau[spike - 1] += R * math.log(R / delta) / k
    tau = np.maximum(tau, 0.0)
    mu = rho + tau
    mu /= mu.sum()
    return DegreeDistribution(np.arange(1, k + 1), mu)


def ideal_soliton(k: int) -> DegreeDistribution:
    d = np.arange(1, k + 1, dtype=float)
    rho = np.empty(k)
    rho[0] = 1.0 / k
    rho[1:] = 1.0 / (d[1:] * (d[1:] - 1.0))
    return DegreeDistribution(np.arange(1, k + 1), rho / rho.sum())

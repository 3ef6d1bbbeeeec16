"""LT codes: seeded generator graphs, encoding, peeling and sum-product decoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from pcf_relay.channels import LLR_MAX, Observation
from pcf_relay.rateless import _kernels as K
from pcf_relay.rateless.degree import DegreeDistribution

BLOCK = 64  # coded symbols generated per rng stream


class DecodeStatus(str, enum.Enum):
    SUCCESS = "Success"
    STALLED = "Stalled"
    ITERATION_CAP = "IterationCap"


@dataclass
class DecodeResult:
    status: DecodeStatus
    hard_bits: np.ndarray
    extrinsic_source_llrs: np.ndarray
    iterations_used: int
    posterior: np.ndarray = field(repr=False)

    @property
    def success(self) -> bool:
        return self.status is DecodeStatus.SUCCESS


def _sample_block(k: int, dist: DegreeDistribution, seed: int, block: int):
    rng = np.random.default_rng([seed, block])
    cdf = dist.cdf()
    degs = dist.degrees[np.minimum(np.searchsorted(cdf, rng.random(BLOCK), side="right"), len(cdf) - 1)]
    degs = np.minimum(degs, k).astype(np.int64)
    ptr = np.zeros(BLOCK + 1, dtype=np.int64)
    np.cumsum(degs, out=ptr[1:])
    idx = np.empty(ptr[-1], dtype=np.int64)
    mark = np.zeros(k, dtype=np.int64)
    size = 2 * int(ptr[-1]) + 16
    while True:
        pool = rng.integers(0, k, size=size)
        mark[:] = 0
        if K.fill_neighbors(k, degs, pool, ptr, idx, mark, 0) >= 0:
            return ptr, idx
        size *= 4


@dataclass(frozen=True)
class LtGraph:
    """Generator graph: coded symbol ``j`` is the XOR of ``indices[offsets[j]:offsets[j+1]]``.

    Symbols are drawn in blocks of 64 from independent streams keyed by
    ``(seed, block)``, so a longer graph extends a shorter one with the same seed.
    """

    k: int
    n: int
    seed: int
    offsets: np.ndarray
    indices: np.ndarray

    @classmethod
    def generate(cls, k: int, n: int, dist: DegreeDistribution, seed: int) -> "LtGraph":
        if k < 1 or n < 0:
            raise ValueError("need k >= 1 and n >= 0")
        dist = dist.truncated(k)
        n_blocks = -(-n // BLOCK)
        ptrs, idxs, base = [np.zeros(1, dtype=np.int64)], [], 0
        for b in range(n_blocks):
            ptr, idx = _sample_block(k, dist, int(seed), b)
            ptrs.append(ptr[1:] + base)
            idxs.append(idx)
            base += int(ptr[-1])
        offsets = np.concatenate(ptrs)[: n + 1]
        indices = np.concatenate(idxs)[: offsets[-1]] if idxs else np.zeros(0, dtype=np.int64)
        return cls(k, n, int(seed), offsets, indices)

    def degree(self, j: int) -> int:
        return int(self.offsets[j + 1] - self.offsets[j])

    def neighbors(self, j: int) -> np.ndarray:
        return self.indices[self.offsets[j] : self.offsets[j + 1]]

    def prefix(self, n: int) -> "LtGraph":
        if n > self.n:
            raise ValueError("prefix longer than graph")
        off = self.offsets[: n + 1]
        return LtGraph(self.k, n, self.seed, off, self.indices[: off[-1]])

    def encode(self, source) -> np.ndarray:
        src = np.asarray(source, dtype=np.int8)
        if src.shape != (self.k,):
            raise ValueError(f"source must have length {self.k}")
        if self.n == 0:
            return np.zeros(0, dtype=np.int8)
        vals = src[self.indices].astype(np.int64)
        sums = np.add.reduceat(vals, self.offsets[:-1]) if len(vals) else np.zeros(self.n, np.int64)
        return (sums & 1).astype(np.int8)

    def edge_list(self) -> str:
        """Plain-text ``coded source`` pairs, one edge per line."""
        rows = np.repeat(np.arange(self.n), np.diff(self.offsets))
        return "".join(f"{j} {i}\n" for j, i in zip(rows, self.indices))


def lt_encode(source, dist: DegreeDistribution, seed: int, n: int):
    """Return ``(coded, graph)`` for ``n`` LT symbols over ``source``."""
    src = np.asarray(source, dtype=np.int8)
    graph = LtGraph.generate(len(src), n, dist, seed)
    return graph.encode(src), graph


@dataclass
class TannerGraph:
    """Check-centric CSR over ``n_var`` variables with per-check observations.

    Check ``j`` asserts XOR of its variables equals ``chk_bit[j]``; for soft
    decoding its reliability is ``chk_tanh[j] = tanh(L_j / 2)`` in signed form.
    """

    n_var: int
    chk_ptr: np.ndarray
    chk_var: np.ndarray
    chk_tanh: np.ndarray
    chk_bit: np.ndarray
    hard: bool = False  # every check is certain (erasure-style input)

    def transpose(self):
        order = np.argsort(self.chk_var, kind="stable")
        chk_of_edge = np.repeat(np.arange(len(self.chk_ptr) - 1), np.diff(self.chk_ptr))
        var_ptr = np.zeros(self.n_var + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.chk_var, minlength=self.n_var), out=var_ptr[1:])
        return var_ptr, chk_of_edge[order].astype(np.int64)

    @property
    def n_chk(self) -> int:
        return len(self.chk_ptr) - 1


def lt_tanner(graph: LtGraph, obs: Observation) -> TannerGraph:
    """Tanner graph of the non-erased LT symbols."""
    if len(obs) != graph.n:
        raise ValueError(f"expected {graph.n} observations, got {len(obs)}")
    keep = ~np.asarray(obs.erased, dtype=bool)
    deg = np.diff(graph.offsets)[keep]
    ptr = np.zeros(len(deg) + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    edge_keep = np.repeat(keep, np.diff(graph.offsets))
    llr = np.clip(np.asarray(obs.llr, dtype=float)[keep], -LLR_MAX, LLR_MAX)
    return TannerGraph(
        graph.k,
        ptr,
        graph.indices[edge_keep].astype(np.int64),
        np.tanh(0.5 * llr),
        (llr < 0).astype(np.int8),
        bool(np.all(np.abs(llr) >= LLR_MAX)),
    )


def _hard_prior(prior) -> bool:
    return bool(np.all((prior == 0) | (np.abs(prior) >= LLR_MAX)))


def peel_decode(tg: TannerGraph, prior: np.ndarray):
    """Exact erasure decoding; returns ``(known, value)`` arrays."""
    var_ptr, var_chk = tg.transpose()
    known = np.abs(prior) >= LLR_MAX
    value = (prior < 0).astype(np.int8)
    active = np.ones(tg.n_chk, dtype=np.bool_)
    K.peel(tg.n_var, tg.chk_ptr, tg.chk_var, var_ptr, var_chk, tg.chk_bit, active, known, value)
    return known, value


class BpDecoder:
    """Sum-product decoder whose check-to-variable messages persist across calls.

    Without a precode, a decode succeeds once every posterior is nonzero and
    either all (certain) checks hold or, for soft input, every posterior has
    magnitude at least ``success_llr``. With ``syndrome_from`` set, checks from
    that index on form a precode and success means they all hold and no
    posterior is zero.
    """

    def __init__(self, tg: TannerGraph, syndrome_from: int | None = None, success_llr: float = 10.0):
        self.tg = tg
        self.c2v = np.zeros(len(tg.chk_var))
        self.total = np.zeros(tg.n_var)
        self.success_llr = success_llr
        self.precoded = syndrome_from is not None
        self._active = np.zeros(tg.n_chk, dtype=np.bool_)
        self._active[syndrome_from or 0 :] = True

    def sweep(self, prior: np.ndarray, n: int) -> np.ndarray:
        tg = self.tg
        K.accumulate(prior, tg.chk_var, self.c2v, self.total)
        K.bp_sweeps(prior, tg.chk_ptr, tg.chk_var, tg.chk_tanh, self.c2v, self.total, n)
        return self.total

    def hard(self) -> np.ndarray:
        return (self.total < 0).astype(np.int8)

    def unsatisfied(self) -> int:
        tg = self.tg
        return int(K.check_syndrome(self.hard(), tg.chk_ptr, tg.chk_var, tg.chk_bit, self._active))

    def converged(self) -> bool:
        post = np.abs(self.total)
        if post.size == 0:
            return True
        if post.min() == 0.0:
            return False
        if self.precoded or self.tg.hard:
            return self.unsatisfied() == 0
        return bool(post.min() >= self.success_llr)

    def residual(self) -> int:
        """Distance from success used for stall detection."""
        if self.precoded or self.tg.hard:
            return self.unsatisfied() + int(np.count_nonzero(self.total == 0.0))
        return int(np.count_nonzero(np.abs(self.total) < self.success_llr))

    def extrinsic(self, prior: np.ndarray) -> np.ndarray:
        return np.clip(self.total - prior, -LLR_MAX, LLR_MAX)


def _prior_array(priors, k: int) -> np.ndarray:
    if priors is None:
        return np.zeros(k)
    p = np.clip(np.asarray(priors, dtype=float), -LLR_MAX, LLR_MAX)
    if p.shape != (k,):
        raise ValueError(f"priors must have length {k}")
    return p


def decode_tanner(tg: TannerGraph, prior: np.ndarray, max_iter: int, method: str = "auto",
                  syndrome_from: int | None = None, success_llr: float = 10.0, check_every: int = 1,
                  target=None, patience: int | None = None) -> DecodeResult:
    """Run peeling or BP on ``tg``.

    ``target`` limits which variables peeling must recover. With ``patience``
    set, BP gives up (Stalled) once its residual has not improved for that
    many sweeps.
    """
    if method not in ("auto", "bp", "peel"):
        raise ValueError(f"unknown method {method!r}")
    if method == "peel" or (method == "auto" and tg.hard and _hard_prior(prior)):
        known, value = peel_decode(tg, prior)
        post = np.where(known, LLR_MAX * (1 - 2 * value.astype(float)), 0.0)
        done = known.all() if target is None else known[target].all()
        status = DecodeStatus.SUCCESS if done else DecodeStatus.STALLED
        return DecodeResult(status, value, np.clip(post - prior, -LLR_MAX, LLR_MAX), 1, post)
    dec = BpDecoder(tg, syndrome_from, success_llr)
    it = 0
    status = DecodeStatus.ITERATION_CAP
    best, since = None, 0
    while it < max_iter:
        step = min(check_every, max_iter - it)
        dec.sweep(prior, step)
        it += step
        if dec.converged():
            status = DecodeStatus.SUCCESS
            break
        if patience is not None:
            r = dec.residual()
            if best is None or r < best:
                best, since = r, 0
            else:
                since += step
                if since >= patience:
                    status = DecodeStatus.STALLED
                    break
    post = dec.total.copy()
    return DecodeResult(status, dec.hard(), dec.extrinsic(prior), it, post)


def lt_decode(observations: Observation, graph: LtGraph, priors=None, max_iter: int = 200,
              method: str = "auto", success_llr: float = 10.0) -> DecodeResult:
    """Decode LT symbols with optional prior LLRs on the source bits.

    Hard observations (erasures and certain symbols) with hard or absent priors
    go through the peeling decoder unless ``method='bp'``.
    """
    prior = _prior_array(priors, graph.k)
    tg = lt_tanner(graph, observations)
    return decode_tanner(tg, prior, max_iter, method, success_llr=success_llr)

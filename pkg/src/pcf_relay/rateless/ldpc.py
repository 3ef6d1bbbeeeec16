"""Regular (3,60) LDPC precode with systematic encoding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VAR_DEGREE = 3
CHECK_DEGREE = 60
DESIGN_RATE = 1.0 - VAR_DEGREE / CHECK_DEGREE


class LdpcConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class LdpcCode:
    """Parity-check code stored check-wise; ``check_vars[j]`` lists check ``j``'s variables.

    ``info_positions`` / ``parity_positions`` come from GF(2) elimination;
    ``encoder`` maps info bits to parity bits.
    """

    n_variables: int
    n_checks: int
    seed: int
    check_vars: np.ndarray  # (n_checks, CHECK_DEGREE)
    info_positions: np.ndarray
    parity_positions: np.ndarray
    encoder: np.ndarray = field(repr=False)  # (n_parity, n_info) uint8
    four_cycles: int = 0

    @property
    def rate(self) -> float:
        return 1.0 - self.n_checks / self.n_variables

    @property
    def n_info(self) -> int:
        return len(self.info_positions)

    def parity_matrix(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_variables), dtype=np.uint8)
        H[np.repeat(np.arange(self.n_checks), self.check_vars.shape[1]), self.check_vars.ravel()] = 1
        return H

    def syndrome(self, word) -> np.ndarray:
        w = np.asarray(word, dtype=np.int64)
        return (w[self.check_vars].sum(axis=1) & 1).astype(np.int8)

    def encode(self, info) -> np.ndarray:
        u = np.asarray(info, dtype=np.uint8)
        if u.shape != (self.n_info,):
            raise ValueError(f"info must have length {self.n_info}")
        word = np.zeros(self.n_variables, dtype=np.int8)
        word[self.info_positions] = u
        word[self.parity_positions] = (self.encoder.astype(np.int64) @ u) & 1
        return word


def _redraw_duplicates(cv: np.ndarray, rng, budget: int) -> bool:
    """Swap repeated sockets with random sockets elsewhere until every check is simple."""
    m, d = cv.shape
    for _ in range(budget):
        srt = np.sort(cv, axis=1)
        dup_rows = np.flatnonzero(np.any(srt[:, 1:] == srt[:, :-1], axis=1))
        if len(dup_rows) == 0:
            return True
        if m == 1:
            return False
        for a in dup_rows:
            vals, counts = np.unique(cv[a], return_counts=True)
            for v in vals[counts > 1]:
                i = int(np.flatnonzero(cv[a] == v)[0])
                b = int(rng.integers(m))
                j = int(rng.integers(d))
                u = cv[b, j]
                if b == a or v in cv[b] or u in cv[a]:
                    continue
                cv[a, i], cv[b, j] = u, v
    return False


def _four_cycles(H: np.ndarray) -> int:
    O = H.astype(np.int64) @ H.T.astype(np.int64)
    np.fill_diagonal(O, 0)
    return int((O * (O - 1) // 2).sum() // 2)


def _repair_cycles(H: np.ndarray, rng, steps: int) -> None:
    """Greedy edge swaps that lower the number of 4-cycles; degrees are preserved."""
    m = H.shape[0]
    Hi = H.astype(np.int64)
    O = Hi @ Hi.T
    np.fill_diagonal(O, 0)

    def cost(row):
        return int((row * (row - 1)).sum())

    for _ in range(steps):
        bad = np.argwhere(np.triu(O, 1) >= 2)
        if len(bad) == 0:
            break
        a = int(bad[rng.integers(len(bad))][rng.integers(2)])
        v = int(rng.choice(np.flatnonzero(Hi[a])))
        c = int(rng.integers(m))
        if c == a or Hi[c, v]:
            continue
        cand = np.flatnonzero(Hi[c] & (1 - Hi[a]))
        if len(cand) == 0:
            continue
        w = int(rng.choice(cand))
        old = cost(O[a]) + cost(O[c]) - O[a, c] * (O[a, c] - 1)
        Hi[a, v], Hi[a, w], Hi[c, w], Hi[c, v] = 0, 1, 0, 1
        ra, rc = Hi @ Hi[a], Hi @ Hi[c]
        ra[a] = rc[c] = 0
        new = cost(ra) + cost(rc) - ra[c] * (ra[c] - 1)
        if new < old:
            O[a], O[:, a] = ra, ra
            O[c], O[:, c] = rc, rc
        else:
            Hi[a, v], Hi[a, w], Hi[c, w], Hi[c, v] = 1, 0, 1, 0
    H[:] = Hi


def _eliminate(H: np.ndarray):
    """Row-reduce over GF(2); returns (pivot columns, reduced rows restricted to the pivot rank)."""
    A = H.astype(bool).copy()
    m, n = A.shape
    pivots = []
    r = 0
    for col in range(n):
        if r == m:
            break
        rows = np.flatnonzero(A[r:, col])
        if len(rows) == 0:
            continue
        p = r + rows[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        hit = np.flatnonzero(A[:, col])
        hit = hit[hit != r]
        A[hit] ^= A[r]
        pivots.append(col)
        r += 1
    return np.asarray(pivots, dtype=np.int64), A[:r]


def build_regular_ldpc(n_variables: int, seed: int, cycle_repair_steps: int = 500,
                       max_attempts: int = 50) -> LdpcCode:
    """Random (3,60)-regular code by a configuration model.

    Draws with a repeated edge are rejected; 4-cycles are reduced by greedy edge
    swaps (they cannot all be removed at this density).
    """
    if n_variables <= 0 or n_variables % 20:
        raise ValueError("n_variables must be a positive multiple of 20")
    m = n_variables * VAR_DEGREE // CHECK_DEGREE
    rng = np.random.default_rng([int(seed), 0x1D9C])
    for _ in range(max_attempts):
        sockets = rng.permutation(np.repeat(np.arange(n_variables), VAR_DEGREE))
        cv = sockets.reshape(m, CHECK_DEGREE).copy()
        if not _redraw_duplicates(cv, rng, 100 * m):
            continue
        cv.sort(axis=1)
        H = np.zeros((m, n_variables), dtype=np.uint8)
        H[np.repeat(np.arange(m), CHECK_DEGREE), cv.ravel()] = 1
        if cycle_repair_steps > 0 and m > 1:
            _repair_cycles(H, rng, cycle_repair_steps)
        pivots, R = _eliminate(H)
        if len(pivots) < m:
            continue  # keep n_checks independent so the rate is exact
        info = np.setdiff1d(np.arange(n_variables), pivots)
        encoder = R[:, info].astype(np.uint8)
        check_vars = np.vstack([np.flatnonzero(row) for row in H])
        return LdpcCode(n_variables, m, int(seed), check_vars, info, pivots, encoder, _four_cycles(H))
    raise LdpcConstructionError(f"no valid (3,60) code after {max_attempts} draws (n={n_variables})")

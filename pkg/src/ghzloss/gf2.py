"""Bit-packed linear algebra over GF(2).

Row vectors are stored as little-endian blocks of uint64 words so that row
elimination is a handful of vectorised XORs.  This is what makes exact
whole-lattice group intersections (thousands of generators on thousands of
qubits) run in seconds instead of hours.
"""

from __future__ import annotations

import numpy as np

WORD = 64


def num_words(ncols: int) -> int:
    return (ncols + WORD - 1) // WORD


def pack_int(value: int, ncols: int) -> np.ndarray:
    """Pack a Python int bit vector (bit i = column i) into uint64 words."""
    nw = num_words(ncols)
    return np.frombuffer(value.to_bytes(nw * 8, "little"), dtype="<u8").copy()

def pack_ints(values: list[int], ncols: int) -> np.ndarray:
    nw = num_words(ncols)
    out = np.zeros((len(values), nw), dtype=np.uint64)
    for i, v in enumerate(values):
        out[i] = pack_int(v, ncols)
    return out


def unpack_int(words: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(words, dtype="<u8").tobytes(), "little")


def get_bit(words: np.ndarray, col: int) -> int:
    return int((words[col >> 6] >> np.uint64(col & 63)) & np.uint64(1))


def column_mask(mat: np.ndarray, col: int) -> np.ndarray:
    """Boolean mask of rows having bit `col` set."""
    return ((mat[:, col >> 6] >> np.uint64(col & 63)) & np.uint64(1)).astype(bool)


def rref(mat: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form, in place. Returns (matrix, pivot columns).

    Rows beyond the rank are zeroed but kept, so callers can track how many
    input rows were redundant.
    """
    nrows = mat.shape[0]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        if r >= nrows:
            break
        mask = column_mask(mat, col)
        candidates = np.nonzero(mask)[0]
        candidates = candidates[candidates >= r]
        if candidates.size == 0:
            continue
        p = int(candidates[0])
        if p != r:
            mat[[r, p]] = mat[[p, r]]
            mask = column_mask(mat, col)
        mask[r] = False
        if mask.any():
            mat[mask] ^= mat[r]
        pivots.append(col)
        r += 1
    return mat, pivots


class RowSpace:
    """A GF(2) row space kept in reduced row echelon form.

    Exposes membership tests and reduction with combination tracking: every
    row is augmented with an identity block so that a reduction also yields
    the coefficients over the original rows.
    """

    def __init__(self, rows: np.ndarray, ncols: int):
        self.ncols = ncols
        nrows = rows.shape[0]
        self.naug = nrows
        aug = np.zeros((nrows, num_words(ncols) + num_words(max(nrows, 1))), dtype=np.uint64)
        aug[:, : num_words(ncols)] = rows
        main_words = num_words(ncols)
        for i in range(nrows):
            aug[i, main_words + (i >> 6)] |= np.uint64(1) << np.uint64(i & 63)
        self._main_words = main_words
        # Reduce only on the main block; the augmented block records combos.
        self._aug, self.pivots = self._rref_main(aug, ncols)
        self.rank = len(self.pivots)
        self._pivot_row = {c: i for i, c in enumerate(self.pivots)}

    def _rref_main(self, aug: np.ndarray, ncols: int) -> tuple[np.ndarray, list[int]]:
        nrows = aug.shape[0]
        pivots: list[int] = []
        r = 0
        for col in range(ncols):
            if r >= nrows:
                break
            mask = column_mask(aug, col)
            candidates = np.nonzero(mask)[0]
            candidates = candidates[candidates >= r]
            if candidates.size == 0:
                continue
            p = int(candidates[0])
            if p != r:
                aug[[r, p]] = aug[[p, r]]
                mask = column_mask(aug, col)
            mask[r] = False
            if mask.any():
                aug[mask] ^= aug[r]
            pivots.append(col)
            r += 1
        return aug, pivots

    def reduce(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reduce `vec` against the space.

        Returns (residual, combo): residual is zero iff vec is in the span,
        and combo gives the original-row coefficients used.
        """
        nw = self._main_words
        work = np.zeros(self._aug.shape[1], dtype=np.uint64)
        work[:nw] = vec
        for col in self.pivots:
            if get_bit(work, col):
                work ^= self._aug[self._pivot_row[col]]
        return work[:nw].copy(), work[nw:].copy()

    def contains(self, vec: np.ndarray) -> bool:
        residual, _ = self.reduce(vec)
        return not residual.any()

    def reduce_block(self, vecs: np.ndarray) -> np.ndarray:
        """Reduce many vectors at once; returns residuals (no combos)."""
        out = vecs.copy()
        for col in self.pivots:
            mask = column_mask(out, col)
            if mask.any():
                out[mask] ^= self._aug[self._pivot_row[col]][: self._main_words]
        return out

    def combo_bits(self, combo: np.ndarray) -> list[int]:
        return [i for i in range(self.naug) if get_bit(combo, i)]


def solve(rows: np.ndarray, ncols: int, rhs: np.ndarray) -> np.ndarray | None:
    """One solution x of x^T rows = rhs over GF(2), as a combo bit vector.

    Returns None when the system is inconsistent.
    """
    space = RowSpace(rows, ncols)
    residual, combo = space.reduce(rhs)
    if residual.any():
        return None
    return combo


def intersect_spans(
    rows_a: np.ndarray, rows_b: np.ndarray, ncols: int
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Basis of span(A) ∩ span(B) with expression data.

    Returns a list of (vector, combo_a, combo_b) where vector = sum of the
    A rows flagged in combo_a = sum of the B rows flagged in combo_b.
    Implemented with the Zassenhaus construction: rows [a | a | e_i | 0] and
    [b | 0 | 0 | e_j]; after eliminating on the left block, rows whose left
    block vanished carry an intersection element in the second block.
    """
    na, nb = rows_a.shape[0], rows_b.shape[0]
    mw = num_words(ncols)
    aw = num_words(max(na, 1))
    bw = num_words(max(nb, 1))
    total = np.zeros((na + nb, 2 * mw + aw + bw), dtype=np.uint64)
    total[:na, :mw] = rows_a
    total[:na, mw : 2 * mw] = rows_a
    for i in range(na):
        total[i, 2 * mw + (i >> 6)] |= np.uint64(1) << np.uint64(i & 63)
    total[na:, :mw] = rows_b
    for j in range(nb):
        total[na + j, 2 * mw + aw + (j >> 6)] |= np.uint64(1) << np.uint64(j & 63)

    # Eliminate over the left block, then continue into the middle block so
    # the surviving intersection rows come out in echelon (independent) form.
    r = 0
    nrows = na + nb
    pivots: list[int] = []
    for col in range(2 * ncols):
        # Middle-block column c corresponds to packed column because the
        # middle block starts at word offset mw, i.e. bit ncols may fall in
        # the middle of a word when ncols % 64 != 0; map logical column to
        # the packed bit position explicitly.
        if col < ncols:
            word, bit = col >> 6, col & 63
        else:
            c2 = col - ncols
            word, bit = mw + (c2 >> 6), c2 & 63
        if r >= nrows:
            break
        mask = ((total[:, word] >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        candidates = np.nonzero(mask)[0]
        candidates = candidates[candidates >= r]
        if candidates.size == 0:
            continue
        p = int(candidates[0])
        if p != r:
            total[[r, p]] = total[[p, r]]
            mask = ((total[:, word] >> np.uint64(bit)) & np.uint64(1)).astype(bool)
        mask[r] = False
        if mask.any():
            total[mask] ^= total[r]
        pivots.append(col)
        r += 1

    out = []
    for i, col in enumerate(pivots):
        if col < ncols:
            continue
        vec = total[i, mw : 2 * mw]
        combo_a = total[i, 2 * mw : 2 * mw + aw]
        combo_b = total[i, 2 * mw + aw :]
        out.append((vec.copy(), combo_a.copy(), combo_b.copy()))
    return out


def rank_of(rows: np.ndarray, ncols: int) -> int:
    _, pivots = rref(rows.copy(), ncols)
    return len(pivots)

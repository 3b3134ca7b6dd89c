"""Matrices over Z/p^e: Smith normal form by valuation peeling, cokernels, coranks.

Precision model: a matrix known mod p^e determines the cokernel's partition
parts below e exactly; a diagonal valuation reported as e means "at least e"
(the pivot vanished mod p^e).  TruncatedPartition records that saturation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .groups import PGroup, count_surjections, _is_prime

_INT64_SAFE_MODULUS = 2**31  # products of two residues must fit in int64


class ModMatrix:
    """An integer matrix with entries reduced mod p^e."""

    def __init__(self, p: int, e: int, entries):
        if not _is_prime(p):
            raise ValidationError("p must be prime")
        if e < 1:
            raise ValidationError("precision e must be >= 1")
        if p**e >= 2**63:
            raise ValidationError("p^e must stay below 2^63")
        self.p = p
        self.e = e
        self.modulus = p**e
        arr = np.asarray(entries, dtype=object)
        if arr.ndim != 2 or arr.size == 0:
            raise ValidationError("entries must be a non-empty 2D array")
        lifted = np.vectorize(lambda x: int(x) % self.modulus, otypes=[object])(arr)
        if self.modulus < _INT64_SAFE_MODULUS:
            self.mat = lifted.astype(np.int64)
        else:
            self.mat = lifted  # object dtype: exact Python ints
        self.rows, self.cols = self.mat.shape

    def transpose(self) -> "ModMatrix":
        return ModMatrix(self.p, self.e, self.mat.T)

    def to_text(self) -> str:
        head = f"{self.p} {self.e} {self.rows} {self.cols}"
        body = "\n".join(" ".join(str(int(x)) for x in row) for row in self.mat)
        return head + "\n" + body + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ModMatrix":
        tokens = text.split()
        if len(tokens) < 4:
            raise ValidationError("matrix text needs a 'p e rows cols' header")
        p, e, rows, cols = (int(t) for t in tokens[:4])
        vals = [int(t) for t in tokens[4:]]
        if len(vals) != rows * cols:
            raise ValidationError(
                f"expected {rows * cols} entries, got {len(vals)}"
            )
        return cls(p, e, np.array(vals, dtype=object).reshape(rows, cols))

    def to_json_obj(self) -> dict:
        return {
            "p": self.p,
            "e": self.e,
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[int(x) for x in row] for row in self.mat],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ModMatrix":
        try:
            return cls(int(obj["p"]), int(obj["e"]), obj["entries"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad matrix JSON: {exc}") from exc


@dataclass(frozen=True)
class TruncatedPartition:
    """Cokernel type known mod p^e: descending parts in [1..e], part = e means >= e."""

    p: int
    e: int
    parts: tuple[int, ...]

    @property
    def saturated(self) -> int:
        return sum(1 for x in self.parts if x == self.e)

    def is_exact(self) -> bool:
        return self.saturated == 0

    def matches(self, G: PGroup) -> bool:
        """Exact isomorphism test; requires enough precision to rule out larger parts."""
        if self.e < G.exponent_of_p + 1:
            raise ValidationError(
                f"need e >= {G.exponent_of_p + 1} to decide isomorphism with {G.parts}"
            )
        return self.saturated == 0 and self.parts == G.parts and self.p == G.p


def _val_units_mask(sub, p):
    # entries not divisible by p
    if sub.dtype == object:
        return np.vectorize(lambda x: x % p != 0, otypes=[bool])(sub)
    return (sub % p) != 0


def smith_normal_form(M: ModMatrix) -> tuple[int, ...]:
    """Diagonal p-valuations d_1 <= ... <= d_min(rows,cols), each in [0..e].

    Level peeling: eliminate with unit pivots (valuation = current level),
    then divide the remaining block by p and repeat.  Row and column swaps
    pick the first unit entry in row-major order, so the procedure is
    deterministic; reported valuations are basis independent anyway.
    """
    p, e = M.p, M.e
    S = M.mat.copy()
    r_total = min(M.rows, M.cols)
    out = []
    level = 0
    m = M.modulus
    while S.size and level < e and len(out) < r_total:
        units = _val_units_mask(S, p)
        if not units.any():
            # every entry divisible by p: strip one factor, drop precision
            S = S // p
            m //= p
            level += 1
            continue
        i, j = np.unravel_index(int(np.argmax(units)), units.shape)
        if i != 0:
            S[[0, i], :] = S[[i, 0], :]
        if j != 0:
            S[:, [0, j]] = S[:, [j, 0]]
        inv = pow(int(S[0, 0]), -1, m)
        if S.dtype == object:
            S[0, :] = np.vectorize(lambda x: (x * inv) % m, otypes=[object])(S[0, :])
            col = S[1:, 0:1]
            S = (S[1:, 1:] - col * S[0:1, 1:]) if S.shape[0] > 1 else S[1:, 1:]
            if S.size:
                S = np.vectorize(lambda x: x % m, otypes=[object])(S)
        else:
            S[0, :] = S[0, :] * inv % m
            S = (S[1:, 1:] - np.outer(S[1:, 0], S[0, 1:])) % m if S.shape[0] > 1 else S[1:, 1:]
        out.append(level)
    out.extend([e] * (r_total - len(out)))
    return tuple(out)


def cokernel_partition(M: ModMatrix) -> TruncatedPartition:
    """Partition of cok(M) = Z_p^rows / (column span), truncated at precision e.

    Requires rows <= cols; otherwise the cokernel has free rank and is not a
    finite p-group.
    """
    if M.rows > M.cols:
        raise ValidationError("rows > cols gives an infinite cokernel")
    vals = smith_normal_form(M)
    parts = tuple(sorted((v for v in vals if v > 0), reverse=True))
    return TruncatedPartition(M.p, M.e, parts)


def is_cokernel_iso(M: ModMatrix, G: PGroup) -> bool:
    """Whether cok(M) is isomorphic to G; needs e >= lambda_1(G) + 1."""
    if M.p != G.p:
        raise ValidationError("matrix and group have different primes")
    return cokernel_partition(M).matches(G)


def _rank_f2_packed(rows_as_ints) -> int:
    """Rank over F_2 of rows given as bit-packed Python ints."""
    basis = {}
    rank = 0
    for r in rows_as_ints:
        while r:
            msb = r.bit_length() - 1
            b = basis.get(msb)
            if b is None:
                basis[msb] = r
                rank += 1
                break
            r ^= b
    return rank


def pack_rows_mod2(mat) -> list:
    """Bit-pack each row of a 0/1 numpy matrix into a Python int."""
    out = []
    for row in np.asarray(mat, dtype=np.uint8) & 1:
        out.append(int.from_bytes(np.packbits(row).tobytes(), "big"))
    return out


def rank_mod_p(mat, p: int) -> int:
    """Rank over F_p of an integer matrix (numpy array or nested lists)."""
    A = np.asarray(mat, dtype=np.int64) % p
    if p == 2:
        return _rank_f2_packed(pack_rows_mod2(A))
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        col = A[r:, c]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i], :] = A[[i, r], :]
        A[r, :] = A[r, :] * pow(int(A[r, c]), -1, p) % p
        below = A[r + 1 :, c]
        mask = below != 0
        if mask.any():
            A[r + 1 :, :][mask] = (A[r + 1 :, :][mask] - np.outer(below[mask], A[r, :])) % p
        r += 1
    return r


def corank_mod_p(M: ModMatrix) -> int:
    """cols - rank of the reduction mod p (kernel dimension on column vectors)."""
    return M.cols - rank_mod_p(np.asarray(M.mat, dtype=np.int64) % M.p, M.p)


def count_sur_cok(M: ModMatrix, G: PGroup) -> int:
    """#Sur(cok(M), G), computable already at precision e >= lambda_1(G).

    Surjections onto G only see cok(M) tensored with Z/p^{lambda_1(G)}, so
    parts are capped at lambda_1(G) and saturated parts are harmless.
    """
    if M.p != G.p:
        raise ValidationError("matrix and group have different primes")
    lam = G.exponent_of_p
    if M.e < max(lam, 1):
        raise ValidationError(f"need e >= {max(lam, 1)} to count surjections onto {G.parts}")
    part = cokernel_partition(M)
    if G.is_trivial():
        return 1
    capped = tuple(sorted((min(v, lam) for v in part.parts), reverse=True))
    return count_surjections(PGroup(M.p, capped), G)

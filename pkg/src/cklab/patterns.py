"""Support patterns: which rows of each column may hold random entries.

A pattern for an n x (n+t) matrix is a list of n+t column supports, each a
set of row indices in [1..n] (1-based, matching the written conventions).
Entries outside the support are identically zero.  A pattern is valid when
no column support is empty and the supports jointly cover every row; both
failures make the cokernel degenerate for trivial reasons.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SupportPattern:
    """Column supports for an n-row matrix; len(supports) - n extra columns."""

    n: int
    supports: tuple[frozenset, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("pattern needs at least one row")
        if len(self.supports) < self.n:
            raise ValidationError("pattern needs at least n columns")
        object.__setattr__(
            self, "supports", tuple(frozenset(int(x) for x in s) for s in self.supports)
        )
        for s in self.supports:
            if any(not 1 <= i <= self.n for i in s):
                raise ValidationError("support rows must lie in [1..n]")

    @property
    def cols(self) -> int:
        return len(self.supports)

    @property
    def t(self) -> int:
        return self.cols - self.n

    @property
    def size(self) -> int:
        """|Sigma|: total number of admissible entries."""
        return sum(len(s) for s in self.supports)

    def masks(self) -> list:
        """Per-column bitmasks, bit i-1 for row i."""
        return [sum(1 << (i - 1) for i in s) for s in self.supports]

    def mask_matrix(self) -> np.ndarray:
        """Boolean n x cols matrix marking admissible entries."""
        M = np.zeros((self.n, self.cols), dtype=bool)
        for j, s in enumerate(self.supports):
            for i in s:
                M[i - 1, j] = True
        return M

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "t": self.t, "supports": [sorted(s) for s in self.supports]}
        )

    @classmethod
    def from_json(cls, text: str) -> "SupportPattern":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad pattern JSON: {exc}") from exc
        if not isinstance(obj, dict) or not {"n", "supports"} <= set(obj):
            raise ValidationError('pattern JSON must carry "n" and "supports"')
        pat = cls(int(obj["n"]), tuple(frozenset(s) for s in obj["supports"]))
        if "t" in obj and int(obj["t"]) != pat.t:
            raise ValidationError("inconsistent t: does not match len(supports) - n")
        return pat


@dataclass(frozen=True)
class StairSpec:
    """Corner specification of a k-step stairs pattern.

    alphas strictly decreasing, betas strictly increasing; column j <= beta[l]
    has its first alpha[l] rows forced to zero (smallest applicable l wins),
    columns past beta[-1] are unconstrained.
    """

    n: int
    alphas: tuple[int, ...]
    betas: tuple[int, ...]
    t: int = 0

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(int(x) for x in self.alphas))
        object.__setattr__(self, "betas", tuple(int(x) for x in self.betas))
        k = len(self.alphas)
        if k == 0 or len(self.betas) != k:
            raise ValidationError("alphas and betas must be non-empty, equal length")
        if self.t < 0:
            raise ValidationError("t must be >= 0")
        if any(self.alphas[i] <= self.alphas[i + 1] for i in range(k - 1)):
            raise ValidationError("alphas must be strictly decreasing")
        if any(self.betas[i] >= self.betas[i + 1] for i in range(k - 1)):
            raise ValidationError("betas must be strictly increasing")
        if not (1 <= self.alphas[-1] and self.alphas[0] <= self.n):
            raise ValidationError("alphas must lie in [1, n]")
        if not (1 <= self.betas[0] and self.betas[-1] <= self.n + self.t):
            raise ValidationError("betas must lie in [1, n+t]")

    @property
    def k(self) -> int:
        return len(self.alphas)


def full_pattern(n: int, extra_cols: int = 0) -> SupportPattern:
    """No forced zeros: every column of the n x (n+extra_cols) matrix is free."""
    full = frozenset(range(1, n + 1))
    return SupportPattern(n, (full,) * (n + extra_cols))


def block_pattern(n: int, a: int, b: int, extra_cols: int = 0) -> SupportPattern:
    """Zero block of shape a x b in the upper-left corner."""
    if not (0 <= a <= n and 0 <= b <= n + extra_cols):
        raise ValidationError("need 0 <= a <= n and 0 <= b <= n + extra_cols")
    full = frozenset(range(1, n + 1))
    blocked = frozenset(range(a + 1, n + 1))
    sup = [blocked] * b + [full] * (n + extra_cols - b)
    return SupportPattern(n, tuple(sup))


def _stairs_general(n: int, t: int, d: int, extra_cols: int = 0) -> SupportPattern:
    if not 1 <= t <= n:
        raise ValidationError("need 1 <= t <= n")
    if d < 1:
        raise ValidationError("need d >= 1")
    sup = []
    for i in range(1, n + extra_cols + 1):
        if i <= d * (n - t):
            top = t + (i + d - 1) // d - 1
            sup.append(frozenset(range(1, min(top, n) + 1)))
        else:
            sup.append(frozenset(range(1, n + 1)))
    return SupportPattern(n, tuple(sup))


def stairs_unit(n: int, t: int, extra_cols: int = 0) -> SupportPattern:
    """Column i supported on the first t+i-1 rows, full once the stair tops out."""
    return _stairs_general(n, t, 1, extra_cols)


def stairs_wide(n: int, t: int, d: int, extra_cols: int = 0) -> SupportPattern:
    """Stairs whose steps repeat d columns at a time; d >= 2 at this surface."""
    if d < 2:
        raise ValidationError("stairs_wide needs d >= 2 (d = 1 is the unit stair)")
    return _stairs_general(n, t, d, extra_cols)


def k_step_pattern(spec: StairSpec, n: int | None = None) -> SupportPattern:
    """Pattern whose zero region is the union of k upper-left corners."""
    if n is not None and n != spec.n:
        raise ValidationError("explicit n disagrees with spec.n")
    n = spec.n
    full = frozenset(range(1, n + 1))
    sup = []
    for j in range(1, n + spec.t + 1):
        l = next((i for i, b in enumerate(spec.betas) if j <= b), None)
        if l is None:
            sup.append(full)
        else:
            sup.append(frozenset(range(spec.alphas[l] + 1, n + 1)))
    return SupportPattern(n, tuple(sup))


def band_pattern(n: int, w: int, extra_cols: int = 0) -> SupportPattern:
    """Column i supported on rows within distance w of i; extra columns full."""
    if w < 0:
        raise ValidationError("w must be >= 0")
    sup = [
        frozenset(range(max(1, i - w), min(n, i + w) + 1)) for i in range(1, n + 1)
    ]
    sup += [frozenset(range(1, n + 1))] * extra_cols
    return SupportPattern(n, tuple(sup))


def _int_log_floor(base: int, x: int) -> int:
    """Largest m >= 0 with base^m <= x (x >= 1)."""
    m = 0
    acc = base
    while acc <= x:
        m += 1
        acc *= base
    return m


def block_cyclic_params(n: int, p: int, t: int | None = None) -> tuple[int, int, int, int]:
    """(t, k, u, v): block height, block count, and the height-t / height-(t+1)
    block counts used by block_cyclic_pattern."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if t is None:
        t = _int_log_floor(p, n * n) - 1
    if not 1 <= t <= n:
        raise ValidationError("block height t must lie in [1, n]")
    k_n = n // t
    u_n = (t + 1) * k_n - n
    # blocks of heights t and t+1 tile [n] only when n mod t <= floor(n/t)
    if u_n < 0:
        raise ValidationError(
            f"blocks of height {t} and {t + 1} cannot tile {n} rows; "
            "pick t with n mod t <= n // t"
        )
    return t, k_n, u_n, k_n - u_n


def block_cyclic_pattern(n: int, p: int, t: int | None = None) -> SupportPattern:
    """Cyclically chained row blocks: each column sees its own block and the next.

    The default block height is floor(2 log_p n) - 1 (computed exactly on
    integers).  For n < p every support is empty, a degenerate pattern that
    validate() flags.  Total size is at most (2t+2)n.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if n < p:
        return SupportPattern(n, (frozenset(),) * n)
    t, k_n, u_n, _ = block_cyclic_params(n, p, t)
    blocks = []
    for k in range(1, k_n + 1):
        if k <= u_n:
            lo, hi = (k - 1) * t + 1, k * t
        else:
            lo, hi = (k - 1) * (t + 1) - u_n + 1, k * (t + 1) - u_n
        blocks.append(frozenset(range(lo, hi + 1)))
    sup: list = [None] * n
    for q in range(1, k_n + 1):
        nxt = blocks[q % k_n]  # cyclic: block k_n+1 wraps to block 1
        cur = blocks[q - 1] | nxt
        if q <= u_n:
            cols = [(q - 1) * t + r for r in range(1, t + 1)]
        else:
            cols = [(q - 1) * (t + 1) - u_n + r for r in range(1, t + 2)]
        for cj in cols:
            sup[cj - 1] = cur
    return SupportPattern(n, tuple(sup))


def nonuniversality_pattern(k_index: int, p: int, eps: float) -> SupportPattern:
    """Sparse tail columns with disjoint supports sized to defeat universality.

    For the sparse Bernoulli entry law with P(0) = 1 - eps, the construction
    uses n = k * floor(e^{ck}) with c = (log p + log (1-eps)^{-1}) / 2; the
    last floor(e^{ck}) columns get disjoint supports of size k each.
    """
    if k_index < 1:
        raise ValidationError("k_index must be >= 1")
    if not 0 < eps < 1 - 1 / p:
        raise ValidationError("need 0 < eps < 1 - 1/p")
    c = (math.log(p) + math.log(1 / (1 - eps))) / 2
    k_n = int(math.floor(math.exp(c * k_index)))
    n = k_index * k_n
    full = frozenset(range(1, n + 1))
    sup = [full] * (n - k_n)
    for i in range(1, k_n + 1):
        sup.append(frozenset(range((i - 1) * k_index + 1, i * k_index + 1)))
    return SupportPattern(n, tuple(sup))


def budget_pattern(n: int, a: int) -> SupportPattern:
    """Pattern with exactly a admissible entries, concentrated so i.i.d. sign
    entries still produce the universal cokernel law.

    The free entries form a d x d leading block (d maximal with
    a >= n + d(d-1)), a diagonal on the remaining columns, and a remainder
    spread over columns d+1, d+2; near-full budgets switch to row-deleted
    full columns.
    """
    if not n <= a <= n * n:
        raise ValidationError("need n <= a <= n^2")
    if a >= n * n - n + 2:
        head = frozenset(range(1, n))  # [n-1]
        full = frozenset(range(1, n + 1))
        m = n * n - a
        return SupportPattern(n, (head,) * m + (full,) * (n - m))
    d = 1
    while d + 1 <= n and a >= n + (d + 1) * d:
        d += 1
    r = a - n - d * (d - 1)
    if d <= n - 2:
        lead = frozenset(range(1, d + 1))
        sup = [lead] * d
        tau1 = frozenset(range(1, min(r, d) + 1))
        tau2 = frozenset(range(1, max(0, r - d) + 1))
        sup.append(tau1 | {d + 1})
        sup.append(tau2 | {d + 2})
        sup.extend(frozenset({i}) for i in range(d + 3, n + 1))
        return SupportPattern(n, tuple(sup))
    # d = n-1 and a <= n^2 - n + 1: columns contain [n-1], last column is {n}
    base = frozenset(range(1, n))
    extra = a - 1 - (n - 1) * (n - 1)
    sup = [base | {n} if j <= extra else base for j in range(1, n)]
    sup.append(frozenset({n}))
    return SupportPattern(n, tuple(sup))


@dataclass(frozen=True)
class PatternReport:
    n: int
    t: int
    size: int
    empty_columns: tuple[int, ...]
    uncovered_rows: tuple[int, ...]
    valid: bool
    gauge: float | None = None


def validate(pattern: SupportPattern, p: int | None = None) -> PatternReport:
    """Check the two degeneracies and report the size gauge |Sigma|/n - log_p n."""
    empty = tuple(j + 1 for j, s in enumerate(pattern.supports) if not s)
    covered: set = set()
    for s in pattern.supports:
        covered |= s
    uncovered = tuple(i for i in range(1, pattern.n + 1) if i not in covered)
    gauge = None
    if p is not None:
        if p < 2:
            raise ValidationError("p must be at least 2 for the gauge")
        gauge = pattern.size / pattern.n - math.log(pattern.n, p)
    return PatternReport(
        n=pattern.n,
        t=pattern.t,
        size=pattern.size,
        empty_columns=empty,
        uncovered_rows=uncovered,
        valid=not empty and not uncovered,
        gauge=gauge,
    )

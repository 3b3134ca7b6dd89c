"""Random d-regular bipartite multigraphs via the configuration model, and the
exact c functional c(G) = sum over qualifying S subset A of p^(|S|-|N(S)|).

Qualifying sets: nonempty proper S with N(S) != B and no outside vertex w
whose whole neighborhood already sits inside N(S)."""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CapExceededError, ValidationError
from .patterns import SupportPattern
from .sampler import McReport, _proportion_report, _run_counted

_EXACT_CAP = 24  # 2^n subset tables in memory


@dataclass(frozen=True)
class BipartiteMultigraph:
    """n+n bipartite multigraph; vertices are 1-based on both sides.

    d is the nominal regularity: configuration projections are exactly
    d-regular, while simplified or pattern-derived graphs keep d as an upper
    bound with regular=False."""

    n: int
    d: int
    edges: tuple[tuple[int, int], ...]
    regular: bool = True

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValidationError("need n >= 1 and d >= 1")
        object.__setattr__(
            self, "edges", tuple((int(a), int(b)) for a, b in self.edges)
        )
        dega = [0] * (self.n + 1)
        degb = [0] * (self.n + 1)
        for a, b in self.edges:
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise ValidationError("edge endpoint out of range")
            dega[a] += 1
            degb[b] += 1
        if self.regular and any(
            x != self.d for x in dega[1:] + degb[1:]
        ):
            raise ValidationError("graph is not d-regular on both sides")
        if not self.regular and any(x > self.d for x in dega[1:] + degb[1:]):
            raise ValidationError("vertex degree exceeds nominal d")

    def a_masks(self) -> list:
        """Per a-vertex neighborhood bitmask over B (bit j-1 for b_j)."""
        out = [0] * self.n
        for a, b in self.edges:
            out[a - 1] |= 1 << (b - 1)
        return out

    def b_masks(self) -> list:
        out = [0] * self.n
        for a, b in self.edges:
            out[b - 1] |= 1 << (a - 1)
        return out

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "d": self.d, "edges": [list(e) for e in sorted(self.edges)]}
        )

    @classmethod
    def from_json(cls, text: str) -> "BipartiteMultigraph":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad graph JSON: {exc}") from exc
        if not isinstance(obj, dict) or not {"n", "d", "edges"} <= set(obj):
            raise ValidationError('graph JSON must carry "n", "d", "edges"')
        edges = tuple((a, b) for a, b in obj["edges"])
        n, d = int(obj["n"]), int(obj["d"])
        # accept both exact projections and simplified graphs
        regular = len(edges) == n * d and _is_regular(n, d, edges)
        return cls(n, d, edges, regular=regular)


def _is_regular(n: int, d: int, edges) -> bool:
    dega = Counter(a for a, _ in edges)
    degb = Counter(b for _, b in edges)
    return all(dega.get(v, 0) == d and degb.get(v, 0) == d for v in range(1, n + 1))


@dataclass(frozen=True)
class Configuration:
    """A bijection of edge slots A x [d] -> B x [d]; slot k*d+s is vertex k+1."""

    n: int
    d: int
    bijection: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.bijection) != list(range(self.n * self.d)):
            raise ValidationError("bijection must be a permutation of [n*d]")


def sample_configuration(n: int, d: int, seed) -> Configuration:
    if n < 1 or d < 1:
        raise ValidationError("need n >= 1 and d >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return Configuration(n, d, tuple(int(x) for x in rng.permutation(n * d)))


def project(cfg: Configuration) -> BipartiteMultigraph:
    """Forget slot labels: slot i of a-vertex i//d maps to b-vertex phi(i)//d."""
    edges = tuple(
        (i // cfg.d + 1, v // cfg.d + 1) for i, v in enumerate(cfg.bijection)
    )
    return BipartiteMultigraph(cfg.n, cfg.d, edges)


def preimage_count(G: BipartiteMultigraph) -> int:
    """(d!)^(2n) / prod mu(a,b)! configurations project onto G."""
    mult = Counter(G.edges)
    out = math.factorial(G.d) ** (2 * G.n)
    for m in mult.values():
        out //= math.factorial(m)
    return out


def simplify(G: BipartiteMultigraph) -> BipartiteMultigraph:
    """Collapse parallel edges; neighborhoods (hence c) are unchanged."""
    return BipartiteMultigraph(G.n, G.d, tuple(sorted(set(G.edges))), regular=False)


def neighborhood(G: BipartiteMultigraph, S, side: str = "a") -> frozenset:
    """Vertices on the opposite side incident to S."""
    if side not in ("a", "b"):
        raise ValidationError('side must be "a" or "b"')
    S = set(S)
    if any(not 1 <= v <= G.n for v in S):
        raise ValidationError("vertex out of range")
    masks = G.a_masks() if side == "a" else G.b_masks()
    m = 0
    for v in S:
        m |= masks[v - 1]
    return frozenset(i + 1 for i in range(G.n) if m >> i & 1)


def _qualifying_exponents(G: BipartiteMultigraph):
    """Histogram over |S|-|N(S)| of the qualifying S, plus the raw tables.

    Subset neighborhoods are built by doubling over 2^n bitmasks; the
    no-covered-outside-vertex condition is one vectorized pass per vertex."""
    n = G.n
    if n > _EXACT_CAP:
        raise CapExceededError(f"exact enumeration capped at n <= {_EXACT_CAP}")
    nb = G.a_masks()
    size = 1 << n
    N = np.zeros(size, dtype=np.uint32)
    for i in range(n):
        blk = 1 << i
        N[blk : 2 * blk] = N[:blk] | np.uint32(nb[i])
    idx = np.arange(size, dtype=np.uint32)
    full = np.uint32(size - 1)
    ok = (idx != 0) & (idx != full) & (N != full)
    one = np.uint32(1)
    for w in range(n):
        covered = (N | np.uint32(nb[w])) == N
        outside = (idx >> np.uint32(w)) & one == 0
        ok &= ~(covered & outside)
    sizeS = np.bitwise_count(idx)
    sizeN = np.bitwise_count(N)
    exps = sizeS[ok].astype(np.int32) - sizeN[ok].astype(np.int32)
    hist = np.bincount(exps + n, minlength=2 * n + 1)
    return hist, N, idx, ok


def c_value(G: BipartiteMultigraph, p: int) -> float:
    """Float evaluation of the c functional."""
    hist, *_ = _qualifying_exponents(G)
    n = G.n
    return float(sum(int(c) * float(p) ** (k - n) for k, c in enumerate(hist) if c))


def c_value_exact(G: BipartiteMultigraph, p: int) -> Fraction:
    """Exact rational evaluation of the c functional."""
    hist, *_ = _qualifying_exponents(G)
    n = G.n
    return sum(
        (int(c) * Fraction(p) ** (k - n) for k, c in enumerate(hist) if c),
        Fraction(0),
    )


def duality_check(G: BipartiteMultigraph) -> bool:
    """Every qualifying S satisfies N(B \\ N(S)) = A \\ S; vacuous if none do."""
    _, N, idx, ok = _qualifying_exponents(G)
    if not ok.any():
        return True
    n = G.n
    full = np.uint32((1 << n) - 1)
    nbB = G.b_masks()
    size = 1 << n
    NB = np.zeros(size, dtype=np.uint32)
    for i in range(n):
        blk = 1 << i
        NB[blk : 2 * blk] = NB[:blk] | np.uint32(nbB[i])
    comp_b = (~N[ok]) & full  # B \ N(S) as a bitmask
    want = (~idx[ok]) & full  # A \ S
    return bool((NB[comp_b.astype(np.int64)] == want).all())


@dataclass(frozen=True)
class ExpansionProfile:
    """min |N(S)| per subset size on each side, with regime-threshold margins."""

    n: int
    d: int
    min_neighbors_a: tuple[int, ...]  # index s = |S|, entries for s = 0..n
    min_neighbors_b: tuple[int, ...]
    exact: bool

    def margins(self, p: int) -> dict:
        """observed min |N(S)| minus each regime's threshold.

        The small-set threshold (d - 100 - log_p s)s bakes in an asymptotic
        constant of 100 and is deeply negative at desk sizes; margins are
        reported rather than asserted."""
        n, d = self.n, self.d
        both = [min(a, b) for a, b in zip(self.min_neighbors_a, self.min_neighbors_b)]
        small, mid, large = [], [], []
        for s in range(1, n + 1):
            if s <= n / d:
                thr = (d - 100 - math.log(s, p)) * s
                small.append((s, both[s], both[s] - thr))
            if s >= n / (2 * d):
                mid.append((s, both[s], both[s] - n / 64))
            if s >= n / (2 * math.sqrt(d)):
                thr = (1 - 1 / math.sqrt(d)) * n
                large.append((s, both[s], both[s] - thr))
        return {"small_sets": small, "mid_sets": mid, "large_sets": large}


def _min_profile_exact(masks) -> tuple:
    n = len(masks)
    size = 1 << n
    N = np.zeros(size, dtype=np.uint32)
    for i in range(n):
        blk = 1 << i
        N[blk : 2 * blk] = N[:blk] | np.uint32(masks[i])
    sizeS = np.bitwise_count(np.arange(size, dtype=np.uint32))
    sizeN = np.bitwise_count(N)
    mins = np.full(n + 1, n + 1, dtype=np.int64)
    np.minimum.at(mins, sizeS, sizeN)
    mins[0] = 0
    return tuple(int(x) for x in mins)


def _min_profile_sampled(masks, samples: int, rng) -> tuple:
    n = len(masks)
    mins = [0] + [n + 1] * n
    arr = np.arange(n)
    for s in range(1, n + 1):
        for _ in range(samples):
            pick = rng.choice(arr, size=s, replace=False)
            m = 0
            for v in pick:
                m |= masks[v]
            mins[s] = min(mins[s], int(m).bit_count())
    return tuple(mins)


def expansion_profile(
    G: BipartiteMultigraph, samples: int = 200, seed: int = 0
) -> ExpansionProfile:
    """Per-size neighborhood minima; exact for n <= 20, sampled above."""
    exact = G.n <= 20
    if exact:
        a = _min_profile_exact(G.a_masks())
        b = _min_profile_exact(G.b_masks())
    else:
        rng = np.random.default_rng(seed)
        a = _min_profile_sampled(G.a_masks(), samples, rng)
        b = _min_profile_sampled(G.b_masks(), samples, rng)
    return ExpansionProfile(G.n, G.d, a, b, exact)


def mc_c_distribution(
    n: int,
    d: int,
    p: int,
    samples: int,
    delta: float,
    seed: int,
    threads: int = 1,
) -> McReport:
    """Empirical P(c(G) < delta) over configuration-model samples."""
    t0 = time.perf_counter()
    if n > _EXACT_CAP:
        raise CapExceededError(f"c evaluation capped at n <= {_EXACT_CAP}")
    if delta <= 0:
        raise ValidationError("delta must be positive")

    def one(rng, t):
        g = project(sample_configuration(n, d, rng))
        return "below" if c_value(g, p) < delta else "at_or_above"

    counts = _run_counted(samples, seed, threads, one)
    counts.setdefault("below", 0)
    counts.setdefault("at_or_above", 0)
    meta = {
        "op": "mc_c_distribution",
        "n": n,
        "d": d,
        "p": p,
        "delta": delta,
        "threads": threads,
    }
    return _proportion_report("c_distribution", samples, counts, seed, t0, meta)


def pattern_from_graph(G: BipartiteMultigraph) -> SupportPattern:
    """Column supports sigma_i = N(a_i); inverse of the pattern-to-graph map."""
    masks = G.a_masks()
    sup = tuple(
        frozenset(j + 1 for j in range(G.n) if masks[i] >> j & 1) for i in range(G.n)
    )
    return SupportPattern(G.n, sup)


def graph_from_pattern(pattern: SupportPattern) -> BipartiteMultigraph:
    """Bipartite graph with an edge a_i b_j for each admissible entry (j, i)."""
    if pattern.t != 0:
        raise ValidationError("graph construction needs a square pattern")
    edges = tuple(
        (i, j) for i, s in enumerate(pattern.supports, start=1) for j in sorted(s)
    )
    col_deg = max((len(s) for s in pattern.supports), default=0)
    row_deg = max(Counter(b for _, b in edges).values(), default=0)
    return BipartiteMultigraph(
        pattern.n, max(col_deg, row_deg, 1), edges, regular=False
    )

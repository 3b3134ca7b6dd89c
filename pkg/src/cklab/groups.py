"""Finite abelian p-groups: partition types, counting formulas, subgroup lattices.

A finite abelian p-group is encoded by its type, a non-increasing partition
lambda = (lambda_1 >= lambda_2 >= ...) with G = (+)_i Z/p^{lambda_i}.  The
trivial group is the empty partition (it still carries a prime p so that
distribution formulas stay well defined).

Counting functions (homs, surjections, automorphisms) work on types alone;
lattice operations (subgroup enumeration, intersections, joins) work on an
explicit element model, ConcreteGroup, which is capped in order because it
stores elements individually.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import CapExceededError, ValidationError

GROUP_ORDER_CAP = 10_000


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class PGroup:
    """Type of a finite abelian p-group: prime p and a non-increasing partition."""

    p: int
    parts: tuple[int, ...]

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValidationError(f"p must be prime, got {self.p}")
        object.__setattr__(self, "parts", tuple(int(x) for x in self.parts))
        if any(x <= 0 for x in self.parts):
            raise ValidationError("partition parts must be positive")
        if any(self.parts[i] < self.parts[i + 1] for i in range(len(self.parts) - 1)):
            raise ValidationError("partition parts must be non-increasing")

    @property
    def rank(self) -> int:
        return len(self.parts)

    @property
    def exponent_of_p(self) -> int:
        """lambda_1, the exponent of G as a power of p (0 for the trivial group)."""
        return self.parts[0] if self.parts else 0

    def order(self) -> int:
        return self.p ** sum(self.parts)

    def is_trivial(self) -> bool:
        return not self.parts

    def conjugate(self) -> tuple[int, ...]:
        """Conjugate partition: entry k counts parts >= k+1."""
        if not self.parts:
            return ()
        return tuple(
            sum(1 for x in self.parts if x > k) for k in range(self.parts[0])
        )

    def to_json(self) -> str:
        return json.dumps({"p": self.p, "parts": list(self.parts)})

    @classmethod
    def from_json(cls, text: str) -> "PGroup":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bad group JSON: {exc}") from exc
        if not isinstance(obj, dict) or set(obj) != {"p", "parts"}:
            raise ValidationError('group JSON must be {"p": int, "parts": [...]}')
        return cls(int(obj["p"]), tuple(obj["parts"]))


def group_order(G: PGroup) -> int:
    """|G| = p^(sum of parts)."""
    return G.order()


def count_automorphisms(G: PGroup) -> int:
    """|Aut(G)| by the closed product formula over the partition's equal runs.

    With exponents e_1 <= ... <= e_n ascending, d_k = max{l : e_l = e_k} and
    c_k = min{l : e_l = e_k} (1-based), the count is
      prod_k (p^{d_k} - p^{k-1})
      * prod_j p^{e_j (n - d_j)}
      * prod_i p^{(e_i - 1)(n - c_i + 1)}.
    Gated by brute-force element-level checks in the test suite.
    """
    e = sorted(G.parts)
    n = len(e)
    if n == 0:
        return 1
    p = G.p
    d = [0] * n
    c = [0] * n
    for k in range(n):
        d[k] = max(l for l in range(n) if e[l] == e[k]) + 1
        c[k] = min(l for l in range(n) if e[l] == e[k]) + 1
    out = 1
    for k in range(n):
        out *= p ** d[k] - p**k
    for j in range(n):
        out *= p ** (e[j] * (n - d[j]))
    for i in range(n):
        out *= p ** ((e[i] - 1) * (n - c[i] + 1))
    return out


def count_homs(A: PGroup, G: PGroup) -> int:
    """|Hom(A,G)| = prod_{i,j} p^{min(lambda_i(A), lambda_j(G))}; 1 if either is trivial."""
    if A.is_trivial() or G.is_trivial():
        return 1
    if A.p != G.p:
        return 1  # only the zero map between coprime groups
    p = A.p
    out = 1
    for a in A.parts:
        for g in G.parts:
            out *= p ** min(a, g)
    return out


class ConcreteGroup:
    """Element-level model of a PGroup; elements are indices 0..order-1.

    Element i decodes to a coordinate tuple via mixed-radix digits with radices
    p^{lambda_1}, ..., p^{lambda_r}.  Index 0 is the identity.
    """

    def __init__(self, group: PGroup, cap: int = GROUP_ORDER_CAP):
        n = group.order()
        if n > cap:
            raise CapExceededError(f"group order {n} exceeds cap {cap}")
        self.group = group
        self.order = n
        self._radices = tuple(group.p**k for k in group.parts)

    def decode(self, i: int) -> tuple[int, ...]:
        out = []
        for r in self._radices:
            out.append(i % r)
            i //= r
        return tuple(out)

    def encode(self, coords) -> int:
        i = 0
        for c, r in zip(reversed(coords), reversed(self._radices)):
            i = i * r + (c % r)
        return i

    def add(self, i: int, j: int) -> int:
        a, b = self.decode(i), self.decode(j)
        return self.encode(tuple(x + y for x, y in zip(a, b)))

    def neg(self, i: int) -> int:
        return self.encode(tuple(-x for x in self.decode(i)))

    def scalar_mul(self, k: int, i: int) -> int:
        return self.encode(tuple(k * x for x in self.decode(i)))

    def height(self, i: int) -> int:
        """Smallest k with p^k * element = 0."""
        p = self.group.p
        h = 0
        for x, lam in zip(self.decode(i), self.group.parts):
            v = lam
            while x % p == 0 and v > 0:
                x //= p
                v -= 1
            h = max(h, v)
        return h

    def add_table(self):
        """Full order x order addition table (lists); only for small groups."""
        if self.order > 512:
            raise CapExceededError("addition table only materialized for order <= 512")
        return [[self.add(i, j) for j in range(self.order)] for i in range(self.order)]


@dataclass(frozen=True)
class Subgroup:
    """A subgroup of a ConcreteGroup, stored as a frozenset of element indices."""

    parent: ConcreteGroup
    elements: frozenset

    def order(self) -> int:
        return len(self.elements)

    def type_of(self) -> PGroup:
        """Recover the partition type from element-order statistics.

        N_k = #{x : p^k x = 0} determines the conjugate partition via
        lambda'_k = log_p N_k - log_p N_{k-1}.
        """
        p = self.parent.group.p
        heights = [self.parent.height(x) for x in self.elements]
        maxh = max(heights, default=0)
        counts = [0] * (maxh + 1)
        for h in heights:
            counts[h] += 1
        cum = []
        run = 0
        for k in range(maxh + 1):
            run += counts[k]
            cum.append(run)
        logs = []
        for c in cum:
            lg = 0
            while p**lg < c:
                lg += 1
            if p**lg != c:
                raise ValidationError("element set is not a subgroup")
            logs.append(lg)
        conj = [logs[k] - logs[k - 1] for k in range(1, maxh + 1)]
        # lambda_i = #{k : lambda'_k >= i}
        lam = []
        if conj:
            lam = [sum(1 for ck in conj if ck >= i) for i in range(1, max(conj) + 1)]
        return PGroup(p, tuple(sorted((x for x in lam if x > 0), reverse=True)))


def subgroup_intersection(H1: Subgroup, H2: Subgroup) -> Subgroup:
    if H1.parent is not H2.parent:
        raise ValidationError("subgroups live in different concrete groups")
    return Subgroup(H1.parent, H1.elements & H2.elements)


def subgroup_sum(H1: Subgroup, H2: Subgroup) -> Subgroup:
    """Join H1 + H2 = {a + b}; a subgroup since the parents are abelian."""
    if H1.parent is not H2.parent:
        raise ValidationError("subgroups live in different concrete groups")
    G = H1.parent
    out = {G.add(a, b) for a in H1.elements for b in H2.elements}
    return Subgroup(G, frozenset(out))


def generated_subgroup(G: ConcreteGroup, gens) -> Subgroup:
    """Subgroup generated by the given element indices (closure under addition)."""
    cur = {0}
    for g in gens:
        # extend by the cyclic group of g: union of translates
        multiples = [0]
        x = G.add(0, g)
        while x != 0:
            multiples.append(x)
            x = G.add(x, g)
        cur = {G.add(s, m) for s in cur for m in multiples}
    return Subgroup(G, frozenset(cur))


def enumerate_subgroups(G: ConcreteGroup) -> list:
    """All subgroups of G, via index-p extensions from the trivial subgroup.

    Every subgroup sits atop a composition chain with steps of index p, and a
    step S < T is realized by adjoining any g in T \\ S, which satisfies
    p*g in S.  So extending each known subgroup by every g with p*g in S
    reaches everything.
    """
    p = G.group.p
    pg = [G.scalar_mul(p, i) for i in range(G.order)]
    trivial = frozenset({0})
    seen = {trivial}
    frontier = [trivial]
    while frontier:
        S = frontier.pop()
        for g in range(G.order):
            if g in S or pg[g] not in S:
                continue
            T = set(S)
            x = g
            for _ in range(p - 1):
                T.update(G.add(s, x) for s in S)
                x = G.add(x, g)
            T = frozenset(T)
            if T not in seen:
                seen.add(T)
                frontier.append(T)
    return [Subgroup(G, S) for S in sorted(seen, key=lambda s: (len(s), sorted(s)))]


@lru_cache(maxsize=None)
def _lattice_type_counts(p: int, parts: tuple) -> tuple:
    """Multiset of proper-subgroup types of the group (p, parts), as ((parts, count), ...)."""
    G = ConcreteGroup(PGroup(p, parts))
    counts: dict = {}
    for H in enumerate_subgroups(G):
        t = H.type_of().parts
        if t == parts and len(H.elements) == G.order:
            continue  # the improper subgroup G itself
        counts[t] = counts.get(t, 0) + 1
    return tuple(sorted(counts.items()))


@lru_cache(maxsize=None)
def _sur_cached(p: int, a_parts: tuple, g_parts: tuple) -> int:
    if not g_parts:
        return 1
    A = PGroup(p, a_parts)
    G = PGroup(p, g_parts)
    total = count_homs(A, G)
    for sub_parts, mult in _lattice_type_counts(p, g_parts):
        total -= mult * _sur_cached(p, a_parts, sub_parts)
    return total


def count_surjections(A: PGroup, G: PGroup, cap: int = GROUP_ORDER_CAP) -> int:
    """|Sur(A,G)| by peeling proper-subgroup surjections off |Hom(A,G)|.

    Requires |G| <= cap since the subgroup lattice of a concrete model of G
    is enumerated.
    """
    if G.is_trivial():
        return 1
    if A.is_trivial() or A.p != G.p:
        return 0
    if G.order() > cap:
        raise CapExceededError(f"target order {G.order()} exceeds cap {cap}")
    return _sur_cached(G.p, A.parts, G.parts)


def cohen_lenstra_prob(G: PGroup, t: int = 0, tail_tol: float = 1e-12) -> float:
    """Limit probability 1/(|Aut(G)| |G|^t) * prod_{i>=1} (1 - p^{-i-t}).

    The infinite product is truncated once the remaining factors are provably
    within tail_tol: the tail of sum p^{-i-t} bounds the product's distance
    from its limit.
    """
    if t < 0:
        raise ValidationError("t must be >= 0")
    p = G.p
    prod = 1.0
    i = 1
    while True:
        term = float(p) ** (-(i + t))
        # remaining tail sum bounds the truncation error of the product
        if term / (p - 1) < tail_tol:
            break
        prod *= 1.0 - term
        i += 1
        if i > 10_000:
            break
    return prod / (count_automorphisms(G) * float(G.order()) ** t)


def nu_p(m: int, p: int) -> float:
    """Corank law for uniform square matrices mod p:

    nu_p(m) = p^{-m^2} * prod_{k=1..m} (1-p^{-k})^{-2} * prod_{k>=1} (1-p^{-k}).
    """
    if m < 0:
        raise ValidationError("m must be >= 0")
    if not _is_prime(p):
        raise ValidationError("p must be prime")
    head = Fraction(p) ** (-(m * m))
    for k in range(1, m + 1):
        head /= (1 - Fraction(p) ** (-k)) ** 2
    prod = 1.0
    k = 1
    while True:
        term = float(p) ** (-k)
        if term / (p - 1) < 1e-17:
            break
        prod *= 1.0 - term
        k += 1
        if k > 10_000:
            break
    return float(head) * prod


def pgroups_with_order_dividing(p: int, max_exp: int) -> list:
    """All PGroup types with |G| = p^k for 0 <= k <= max_exp."""
    out = [PGroup(p, ())]

    def parts_of(k: int, largest: int):
        if k == 0:
            yield ()
            return
        for first in range(min(k, largest), 0, -1):
            for rest in parts_of(k - first, first):
                yield (first,) + rest

    for k in range(1, max_exp + 1):
        for parts in parts_of(k, k):
            out.append(PGroup(p, parts))
    return out

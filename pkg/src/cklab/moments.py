"""Exact rational moments E_n(G) over a support pattern, the stair closed
forms, chain-product bounds, and the code / depth brute-force checkers.

E_n(G) sums 1/prod_j |F V_{sigma_j}| over surjective assignments F of group
elements to the n rows; F V_sigma is the subgroup generated by the images on
the rows in sigma.  Everything here is exact; floats appear only in f_tail."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import CapExceededError, ValidationError
from .expander import c_value, graph_from_pattern
from .groups import ConcreteGroup, PGroup, Subgroup, enumerate_subgroups
from .patterns import StairSpec, SupportPattern, k_step_pattern, validate


@dataclass(frozen=True, eq=False)
class HomAssignment:
    """Images of the n row generators under F: R^n -> target."""

    target: ConcreteGroup
    images: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(int(x) for x in self.images))
        if any(not 0 <= g < self.target.order for g in self.images):
            raise ValidationError("image index out of range")


def _as_concrete(G) -> ConcreteGroup:
    return G if isinstance(G, ConcreteGroup) else ConcreteGroup(G)


def _as_pattern(pattern) -> SupportPattern:
    if isinstance(pattern, StairSpec):
        return k_step_pattern(pattern)
    if isinstance(pattern, SupportPattern):
        return pattern
    raise ValidationError("pattern must be a SupportPattern or StairSpec")


def make_span(CG: ConcreteGroup):
    """span(mask of element indices) -> bitmask of the generated subgroup.

    Generation is memoized on the image mask; extending a closed subgroup by
    one element walks its cosets, so each extension is O(|G|) amortized."""
    add = CG.add_table()
    ext: dict = {}

    def extend(cmask: int, g: int) -> int:
        if cmask >> g & 1:
            return cmask
        key = (cmask, g)
        r = ext.get(key)
        if r is None:
            m, k = cmask, g
            while not (m >> k & 1):
                row = 0
                t = cmask
                while t:
                    b = t & -t
                    row |= 1 << add[b.bit_length() - 1][k]
                    t ^= b
                m |= row
                k = add[k][g]
            ext[key] = r = m
        return r

    span_cache = {0: 1}

    def span(imask: int) -> int:
        r = span_cache.get(imask)
        if r is None:
            m, t = 1, imask
            while t:
                b = t & -t
                m = extend(m, b.bit_length() - 1)
                t ^= b
            span_cache[imask] = r = m
        return r

    return span


def _weight_counter(pat: SupportPattern, CG: ConcreteGroup, cap: int) -> dict:
    """count per denominator prod_j |F V_{sigma_j}|, over surjective F only.

    Enumeration is mixed-radix over element indices, partial sums merged per
    leading value."""
    n, q = pat.n, CG.order
    if q**n > cap:
        raise CapExceededError(f"|G|^n = {q}^{n} exceeds cap {cap}")
    span = make_span(CG)
    cols = [tuple(i - 1 for i in sorted(s)) for s in pat.supports]
    full = (1 << q) - 1
    counts: dict = {}
    for lead in range(q):
        partial: dict = {}
        for rest in itertools.product(range(q), repeat=n - 1):
            F = (lead,) + rest
            total_mask = 0
            for g in F:
                total_mask |= 1 << g
            if span(total_mask) != full:
                continue
            denom = 1
            for col in cols:
                imask = 0
                for i in col:
                    imask |= 1 << F[i]
                denom *= (span(imask)).bit_count()
            partial[denom] = partial.get(denom, 0) + 1
        for k, v in partial.items():
            counts[k] = counts.get(k, 0) + v
    return counts


def exact_moment_bruteforce(pattern, G, cap: int = 10**8) -> Fraction:
    """E_n(G) as an exact rational by full enumeration of assignments."""
    pat = _as_pattern(pattern)
    CG = _as_concrete(G)
    if CG.order == 1:
        return Fraction(1)
    counts = _weight_counter(pat, CG, cap)
    return sum((Fraction(c, d) for d, c in counts.items()), Fraction(0))


def d_split(pattern, G, cap: int = 10**8) -> tuple[Fraction, Fraction]:
    """(d_n0, residual): the all-supports-generate-G term and everything else."""
    pat = _as_pattern(pattern)
    CG = _as_concrete(G)
    if CG.order == 1:
        return Fraction(1), Fraction(0)
    counts = _weight_counter(pat, CG, cap)
    top = CG.order ** pat.cols
    d_n0 = Fraction(counts.get(top, 0), top)
    residual = sum(
        (Fraction(c, d) for d, c in counts.items() if d != top), Fraction(0)
    )
    return d_n0, residual


def stairs_caseI(p: int, n: int, t: int) -> Fraction:
    """Residual of the unit stair against G = Z/p: (p-1)(n-t)/p^t."""
    if not 1 <= t <= n:
        raise ValidationError("need 1 <= t <= n")
    return Fraction((p - 1) * (n - t), p**t)


def stairs_wide_caseI(p: int, n: int, t: int, d: int) -> Fraction:
    """Residual of the width-d stair against G = Z/p."""
    if not 1 <= t <= n:
        raise ValidationError("need 1 <= t <= n")
    if d < 2:
        raise ValidationError("need d >= 2")
    num = (p - 1) * (p ** ((d - 1) * (n - t)) - 1) * p ** (d - 1)
    return Fraction(num, p**t * (p ** (d - 1) - 1))


def f_tail(xs, m: int) -> float:
    """P(at least m of the independent Bernoulli(x_j) succeed), O(n*m) DP."""
    xs = [float(x) for x in xs]
    if any(not 0.0 <= x <= 1.0 for x in xs):
        raise ValidationError("probabilities must lie in [0, 1]")
    if not 0 <= m <= len(xs):
        raise ValidationError("need 0 <= m <= n")
    if m == 0:
        return 1.0
    dp = [1.0] + [0.0] * m  # dp[k] = P(k successes so far), dp[m] absorbing
    for x in xs:
        dp[m] += dp[m - 1] * x
        for k in range(m - 1, 0, -1):
            dp[k] = dp[k] * (1 - x) + dp[k - 1] * x
        dp[0] *= 1 - x
    return dp[m]


def f_tail_geomean_check(xs, m: int) -> bool:
    """Replacing all x_j by their geometric mean never increases the tail."""
    n = len(xs)
    if not 2 <= m <= n - 2:
        raise ValidationError("need 2 <= m <= n-2")
    g = math.prod(float(x) for x in xs) ** (1.0 / n)
    return f_tail(xs, m) >= f_tail([g] * n, m) - 1e-12


def chain_ratio(Hs) -> tuple[Fraction, bool]:
    """prod |H_i cap H_{i+1}|/|H_i| over a chain of r+1 subgroups, and whether
    it obeys the p^(-r/2) bound (checked exactly via the square)."""
    Hs = list(Hs)
    if len(Hs) < 2:
        raise ValidationError("need a chain of at least two subgroups")
    parent = Hs[0].parent
    if any(H.parent.group != parent.group for H in Hs):
        raise ValidationError("all subgroups must share one parent group")
    ratio = Fraction(1)
    for H, K in zip(Hs, Hs[1:]):
        if H.elements == K.elements:
            raise ValidationError("consecutive subgroups must differ")
        ratio *= Fraction(len(H.elements & K.elements), len(H.elements))
    r = len(Hs) - 1
    p = parent.group.p
    return ratio, ratio * ratio * p**r <= 1


def chain_sum_44(G, k_n: int, t_n: int, p: int | None = None,
                 cap: int = 10**8) -> Fraction:
    """Sum over non-constant subgroup tuples (H_1..H_k) of
    (prod_{j<k} |H_j cap H_{j+1}|/|H_j|)^t, evaluated exactly by transfer
    matrix; the cyclic H_0 factor is dropped as in the final displayed bound."""
    CG = _as_concrete(G)
    if p is not None and p != CG.group.p:
        raise ValidationError("p disagrees with the group")
    if k_n < 1 or t_n < 1:
        raise ValidationError("need k_n >= 1 and t_n >= 1")
    if k_n == 1:
        return Fraction(0)
    subs = enumerate_subgroups(CG)
    m = len(subs)
    if m**k_n > cap:
        raise CapExceededError(f"{m}^{k_n} subgroup tuples exceed cap {cap}")
    M = [
        [
            Fraction(len(H.elements & K.elements), len(H.elements)) ** t_n
            for K in subs
        ]
        for H in subs
    ]
    v = [Fraction(1)] * m
    for _ in range(k_n - 1):
        v = [sum((v[i] * M[i][j] for i in range(m)), Fraction(0)) for j in range(m)]
    return sum(v, Fraction(0)) - m  # constant tuples contribute 1 each


def _tail_indices(F: HomAssignment, support_start: int) -> list:
    n = len(F.images)
    if not 0 <= support_start < n:
        raise ValidationError("support_start must lie in [0, n)")
    return list(range(support_start, n))


def _subset_budget(tail_len: int, smax: int, cap: int):
    work = sum(math.comb(tail_len, s) for s in range(0, min(smax, tail_len) + 1))
    if work > cap:
        raise CapExceededError(f"{work} subsets exceed cap {cap}")


def is_code(F: HomAssignment, support_start: int, dist, cap: int = 10**7) -> bool:
    """True iff dropping any fewer than dist tail rows keeps the images
    generating the full target."""
    if dist <= 0:
        raise ValidationError("dist must be positive")
    tail = _tail_indices(F, support_start)
    span = make_span(F.target)
    full = (1 << F.target.order) - 1
    smax = math.ceil(dist) - 1
    _subset_budget(len(tail), smax, cap)
    for s in range(0, min(smax, len(tail)) + 1):
        for sigma in itertools.combinations(tail, s):
            if not (s < dist):
                continue
            imask = 0
            for i in tail:
                if i not in sigma:
                    imask |= 1 << F.images[i]
            if span(imask) != full:
                return False
    return True


def ell(D: int) -> int:
    """Total prime-exponent count of D; ell(1) = 0."""
    if D < 1:
        raise ValidationError("D must be a positive integer")
    out, d, x = 0, 2, D
    while d * d <= x:
        while x % d == 0:
            out += 1
            x //= d
        d += 1
    if x > 1:
        out += 1
    return out


def delta_depth(F: HomAssignment, support_start: int, delta: float,
                cap: int = 10**7) -> int:
    """Largest index D = [G : span of kept tail images] witnessed by a dropped
    set sigma with |sigma| < ell(D)*delta*(n - support_start); 1 if none."""
    if delta <= 0:
        raise ValidationError("delta must be positive")
    tail = _tail_indices(F, support_start)
    CG = F.target
    span = make_span(CG)
    scale = delta * len(tail)
    ell_max = ell(CG.order)
    smax = max(0, math.ceil(ell_max * scale) - 1)
    _subset_budget(len(tail), smax, cap)
    best = 1
    for s in range(0, min(smax, len(tail)) + 1):
        for sigma in itertools.combinations(tail, s):
            imask = 0
            for i in tail:
                if i not in sigma:
                    imask |= 1 << F.images[i]
            D = CG.order // (span(imask)).bit_count()
            if D > best and s < ell(D) * scale:
                best = D
    return best


def moment_upper_bound_via_graph(pattern, p: int) -> float:
    """1 + c of the pattern's bipartite support graph; an upper bound for the
    rank-one moment on valid patterns."""
    pat = _as_pattern(pattern)
    rep = validate(pat)
    if not rep.valid:
        raise ValidationError(
            "pattern must have nonempty columns covering every row"
        )
    return 1.0 + c_value(graph_from_pattern(pat), p)

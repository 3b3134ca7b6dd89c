"""Random matrices over Z/p^e respecting a support pattern, and a Monte Carlo
engine whose per-trial streams are counter-seeded so results do not depend on
execution order or thread count."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .groups import PGroup, _is_prime
from .modmatrix import (
    ModMatrix,
    cokernel_partition,
    count_sur_cok,
    pack_rows_mod2,
    rank_mod_p,
    _rank_f2_packed,
)
from .patterns import StairSpec, SupportPattern, k_step_pattern


# ---------------------------------------------------------------------------
# entry distributions

@dataclass(frozen=True)
class Haar:
    """Uniform on [0, p^e); the reference measure for cokernel statistics."""


@dataclass(frozen=True)
class FinitePMF:
    """Arbitrary integer atoms with fixed probabilities, reduced mod p^e when
    sampled, so one distribution serves every (p, e)."""

    values: tuple[int, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(q) for q in self.probs))
        if len(self.values) != len(self.probs) or not self.values:
            raise ValidationError("values and probs must be non-empty, equal length")
        if any(q < 0 for q in self.probs):
            raise ValidationError("probabilities must be nonnegative")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValidationError("probabilities must sum to 1 within 1e-12")


@dataclass(frozen=True)
class Rademacher:
    """Values +1 and -1 with probability 1/2 each.

    At p = 2 both atoms are odd, so the distribution is not epsilon-balanced
    there; epsilon_of returns 0 and sampling is permitted but flagged."""


EntryDistribution = Haar | FinitePMF | Rademacher


def epsilon_of(dist: EntryDistribution, p: int) -> float:
    """1 - max residue mass mod p; > 0 is the balancedness requirement."""
    if not _is_prime(p):
        raise ValidationError("p must be prime")
    if isinstance(dist, Haar):
        return 1.0 - 1.0 / p
    if isinstance(dist, Rademacher):
        return 0.0 if p == 2 else 0.5
    mass: dict = {}
    for v, q in zip(dist.values, dist.probs):
        mass[v % p] = mass.get(v % p, 0.0) + q
    return 1.0 - max(mass.values())


def _draw(rng: np.random.Generator, dist: EntryDistribution, shape, p: int, e: int):
    if isinstance(dist, Haar):
        return rng.integers(0, p**e, size=shape, dtype=np.int64)
    if isinstance(dist, Rademacher):
        return 2 * rng.integers(0, 2, size=shape, dtype=np.int64) - 1
    idx = rng.choice(len(dist.values), size=shape, p=dist.probs)
    return np.asarray(dist.values, dtype=np.int64)[idx]


def _as_pattern(pattern) -> SupportPattern:
    if isinstance(pattern, StairSpec):
        return k_step_pattern(pattern)
    if isinstance(pattern, SupportPattern):
        return pattern
    raise ValidationError("pattern must be a SupportPattern or StairSpec")


def sample_matrix(pattern, dist: EntryDistribution, p: int, e: int, seed) -> ModMatrix:
    """One random matrix: i.i.d. entries inside the support, zeros outside."""
    pat = _as_pattern(pattern)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mask = pat.mask_matrix()
    entries = _draw(rng, dist, mask.shape, p, e) * mask
    return ModMatrix(p, e, entries)


# ---------------------------------------------------------------------------
# Monte Carlo engine

def wilson(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if not 0 <= k <= n or n <= 0:
        raise ValidationError("need 0 <= k <= n, n > 0")
    phat = k / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass
class McReport:
    """Counts, Wilson CIs, and (for moment runs) an exact-integer-backed mean."""

    kind: str
    trials: int
    counts: dict
    estimates: dict
    cis: dict
    master_seed: int
    elapsed: float
    meta: dict = field(default_factory=dict)
    mean: float | None = None
    mean_ci: tuple[float, float] | None = None

    def to_json(self) -> str:
        obj = {
            "kind": self.kind,
            "trials": self.trials,
            "counts": self.counts,
            "estimates": self.estimates,
            "cis": {k: list(v) for k, v in self.cis.items()},
            "master_seed": self.master_seed,
            "elapsed": self.elapsed,
            "meta": self.meta,
        }
        if self.mean is not None:
            obj["mean"] = self.mean
            obj["mean_ci"] = list(self.mean_ci)
        return json.dumps(obj)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["outcome", "count", "estimate", "ci_lo", "ci_hi"])
        for k in self.counts:
            lo, hi = self.cis[k]
            w.writerow([k, self.counts[k], self.estimates[k], lo, hi])
        if self.mean is not None:
            w.writerow(["__mean__", "", self.mean, self.mean_ci[0], self.mean_ci[1]])
        return buf.getvalue()


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream: trial index occupies the Philox counter's high
    half, so streams never overlap and depend only on (master_seed, trial)."""
    return np.random.Generator(
        np.random.Philox(key=master_seed & ((1 << 128) - 1), counter=trial << 128)
    )


def _run_counted(trials: int, seed: int, threads: int, one_trial) -> dict:
    """Run one_trial(rng, t) -> hashable label; merge counts associatively."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    threads = max(1, int(threads))

    def chunk(lo: int, hi: int) -> dict:
        local: dict = {}
        for t in range(lo, hi):
            lab = one_trial(trial_rng(seed, t), t)
            local[lab] = local.get(lab, 0) + 1
        return local

    if threads == 1:
        return chunk(0, trials)
    bounds = [trials * i // threads for i in range(threads + 1)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        parts = list(ex.map(chunk, bounds[:-1], bounds[1:]))
    merged: dict = {}
    for part in parts:
        for k, v in part.items():
            merged[k] = merged.get(k, 0) + v
    return merged


def _sort_key(label):
    return (0, int(label)) if str(label).lstrip("-").isdigit() else (1, str(label))


def _proportion_report(kind, trials, counts, seed, t0, meta) -> McReport:
    counts = {str(k): counts[k] for k in sorted(counts, key=_sort_key)}
    estimates = {k: v / trials for k, v in counts.items()}
    cis = {k: wilson(v, trials) for k, v in counts.items()}
    return McReport(
        kind=kind,
        trials=trials,
        counts=counts,
        estimates=estimates,
        cis=cis,
        master_seed=seed,
        elapsed=time.perf_counter() - t0,
        meta=meta,
    )


def group_label(G: PGroup) -> str:
    """Compact outcome key for a partition, e.g. "[2,1]"; trivial is "[]"."""
    return "[" + ",".join(str(x) for x in G.parts) + "]"


def mc_cokernel_dist(
    pattern,
    dist: EntryDistribution,
    p: int,
    e: int,
    targets: list,
    trials: int,
    seed: int,
    threads: int = 1,
) -> McReport:
    """Estimate P(cok ~ G) for each target partition, plus an "other" bucket."""
    t0 = time.perf_counter()
    pat = _as_pattern(pattern)
    if not targets:
        raise ValidationError("need at least one target group")
    for G in targets:
        if G.p != p:
            raise ValidationError("target group prime must match p")
    need = max(G.exponent_of_p + 1 for G in targets)
    if e < max(need, 1):
        raise ValidationError(
            f"precision e={e} cannot separate the targets; need e >= {max(need, 1)}"
        )
    labels = {tuple(G.parts): group_label(G) for G in targets}
    if len(labels) != len(targets):
        raise ValidationError("duplicate targets")
    mask = pat.mask_matrix()
    trivial_only = all(G.is_trivial() for G in targets)

    if trivial_only:
        # only the trivial group is asked for: cok = 0 iff full rank mod p,
        # so sample mod p and rank instead of running SNF at precision e
        triv = labels[()]

        def one(rng, t):
            entries = _draw(rng, dist, mask.shape, p, 1) * mask
            if p == 2:
                full = _rank_f2_packed(pack_rows_mod2(entries)) == pat.n
            else:
                full = rank_mod_p(entries % p, p) == pat.n
            return triv if full else "other"

    else:

        def one(rng, t):
            entries = _draw(rng, dist, mask.shape, p, e) * mask
            parts = cokernel_partition(ModMatrix(p, e, entries)).parts
            return labels.get(tuple(parts), "other")

    counts = _run_counted(trials, seed, threads, one)
    for lab in list(labels.values()) + ["other"]:
        counts.setdefault(lab, 0)
    meta = {
        "op": "mc_cokernel_dist",
        "n": pat.n,
        "cols": pat.cols,
        "p": p,
        "e": e,
        "dist": type(dist).__name__,
        "targets": sorted(labels.values()),
        "threads": threads,
    }
    return _proportion_report("cokernel_dist", trials, counts, seed, t0, meta)


def mc_corank_dist(
    n: int, p: int, trials: int, seed: int, threads: int = 1
) -> McReport:
    """Empirical distribution of the corank of a uniform n x n matrix mod p."""
    t0 = time.perf_counter()
    if n < 1 or not _is_prime(p):
        raise ValidationError("need n >= 1 and p prime")

    if p == 2 and n <= 63:

        def one(rng, t):
            rows = rng.integers(0, 1 << n, size=n, dtype=np.uint64)
            return n - _rank_f2_packed([int(r) for r in rows])

    else:

        def one(rng, t):
            return n - rank_mod_p(rng.integers(0, p, size=(n, n)), p)

    counts = _run_counted(trials, seed, threads, one)
    meta = {"op": "mc_corank_dist", "n": n, "p": p, "threads": threads}
    return _proportion_report("corank_dist", trials, counts, seed, t0, meta)


def mc_moment(
    pattern,
    dist: EntryDistribution,
    p: int,
    G: PGroup,
    trials: int,
    seed: int,
    threads: int = 1,
) -> McReport:
    """Sample mean of #Sur(cok, G); precision is set by G's exponent."""
    t0 = time.perf_counter()
    pat = _as_pattern(pattern)
    if G.p != p:
        raise ValidationError("target group prime must match p")
    e_eff = max(G.exponent_of_p, 1)
    mask = pat.mask_matrix()

    def one(rng, t):
        entries = _draw(rng, dist, mask.shape, p, e_eff) * mask
        return count_sur_cok(ModMatrix(p, e_eff, entries), G)

    counts = _run_counted(trials, seed, threads, one)
    total = sum(v * c for v, c in counts.items())
    total_sq = sum(v * v * c for v, c in counts.items())
    mean = total / trials
    var = max(0.0, total_sq / trials - mean * mean)
    half = 1.96 * math.sqrt(var / trials)
    meta = {
        "op": "mc_moment",
        "n": pat.n,
        "cols": pat.cols,
        "p": p,
        "e": e_eff,
        "dist": type(dist).__name__,
        "target": group_label(G),
        "threads": threads,
    }
    rep = _proportion_report("moment", trials, counts, seed, t0, meta)
    rep.mean = mean
    rep.mean_ci = (mean - half, mean + half)
    return rep


def mc_full_rank_prob(
    n: int, r: int, p: int, trials: int, seed: int, threads: int = 1
) -> McReport:
    """Empirical P(a uniform n x r matrix mod p has rank r)."""
    t0 = time.perf_counter()
    if not (isinstance(r, int) and n >= r > 0):
        raise ValidationError("need n >= r > 0")
    if not _is_prime(p):
        raise ValidationError("p must be prime")

    def one(rng, t):
        return "full" if rank_mod_p(rng.integers(0, p, size=(n, r)), p) == r else "deficient"

    counts = _run_counted(trials, seed, threads, one)
    counts.setdefault("full", 0)
    counts.setdefault("deficient", 0)
    meta = {"op": "mc_full_rank_prob", "n": n, "r": r, "p": p, "threads": threads}
    return _proportion_report("full_rank", trials, counts, seed, t0, meta)


def full_rank_prob_exact(n: int, r: int, p: int) -> float:
    """prod_{j=0}^{r-1} (1 - p^-(n-j)): chance p^r divides nothing it shouldn't."""
    if not n >= r > 0:
        raise ValidationError("need n >= r > 0")
    out = 1.0
    for j in range(r):
        out *= 1.0 - float(p) ** -(n - j)
    return out

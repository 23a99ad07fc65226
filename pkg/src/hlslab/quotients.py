"""Concrete approximating sequences for free groups.

Three families are provided:

* ``fd`` (rank 2): level-n kernel = intersection of kernels of all
  homomorphisms F_2 -> F with |F| <= n, realized by enumerating pairs of
  permutations in S_n and deduplicating by kernel equality.
* ``congruence`` (rank 2): image of the Sanov matrices [[1,2],[0,1]],
  [[1,0],[2,1]] in SL(2, Z/2^n), acting on (Z/2^n)^2.
* ``cyclic`` (rank 1): Z/2^n with the generator mapping to 1.

Each quotient is realized as a permutation group; its elements are indexed
0..order-1 by Cayley-graph BFS from the identity in the fixed generator
order (g1, g1^-1, g2, g2^-1, ...).
"""

from __future__ import annotations

import itertools
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError, ResourceError
from .perms import (bfs_order, compose, identity_perm, invert, perm_key,
                    schreier_sims_order)
from .words import GroupAlgebraElement, Word, ball

CACHE_FORMAT_VERSION = 1
DEFAULT_FIBER_CAP = 2_000_000
DEFAULT_HOM_LEVEL_CAP = 6

FAMILIES = ("fd", "congruence", "cyclic")
FAMILY_RANK = {"fd": 2, "congruence": 2, "cyclic": 1}

SANOV_A = ((1, 2), (0, 1))
SANOV_B = ((1, 0), (2, 1))


class FiniteQuotient:
    """A finite quotient of F_k given by one permutation per generator.

    Elements are enumerated by BFS over the Cayley graph (right
    multiplication by g1, g1^-1, g2, g2^-1, ... in that order), so the
    identity has index 0 and indices are reproducible.
    """

    def __init__(self, gen_perms: list[np.ndarray], rank: int,
                 cap: int = DEFAULT_FIBER_CAP):
        if len(gen_perms) != rank:
            raise InputError("need one permutation per generator")
        self.rank = rank
        self.gen_perms = [np.asarray(g, dtype=np.int32) for g in gen_perms]
        self.degree = len(self.gen_perms[0])
        for g in self.gen_perms:
            if len(g) != self.degree:
                raise InputError("generator permutations have mixed degrees")
        self._enumerate(cap)
        self._left_tables: dict[int, np.ndarray] = {}

    def _enumerate(self, cap):
        steps = []
        for g in self.gen_perms:
            steps.append(g)
            steps.append(invert(g))
        ident = identity_perm(self.degree)
        self.elements: list[np.ndarray] = [ident]
        self.index: dict[bytes, int] = {perm_key(ident): 0}
        head = 0
        while head < len(self.elements):
            g = self.elements[head]
            head += 1
            for s in steps:
                h = compose(g, s)
                k = perm_key(h)
                if k not in self.index:
                    if len(self.elements) >= cap:
                        raise ResourceError(
                            f"quotient order exceeds the fiber cap {cap}")
                    self.index[k] = len(self.elements)
                    self.elements.append(h)
        self.order = len(self.elements)
        inv_idx = np.empty(self.order, dtype=np.int64)
        for i, p in enumerate(self.elements):
            inv_idx[i] = self.index[perm_key(invert(p))]
        self.inverse_index = inv_idx

    # -- group structure on element indices --------------------------------

    def letter_perm(self, letter: int) -> np.ndarray:
        g = self.gen_perms[abs(letter) - 1]
        return g if letter > 0 else invert(g)

    def evaluate(self, w: Word) -> int:
        """Index of the image of w under the quotient map."""
        if w.rank != self.rank:
            raise InputError("word rank does not match quotient rank")
        p = identity_perm(self.degree)
        for letter in w.letters:
            p = compose(p, self.letter_perm(letter))
        return self.index[perm_key(p)]

    def multiply(self, i: int, j: int) -> int:
        return self.index[perm_key(compose(self.elements[i], self.elements[j]))]

    def invert_element(self, i: int) -> int:
        return int(self.inverse_index[i])

    def left_mult_table(self, t: int) -> np.ndarray:
        """arr[v] = index of element_t * element_v, for all v."""
        tbl = self._left_tables.get(t)
        if tbl is None:
            pt = self.elements[t]
            tbl = np.empty(self.order, dtype=np.int64)
            for v, pv in enumerate(self.elements):
                tbl[v] = self.index[perm_key(compose(pt, pv))]
            self._left_tables[t] = tbl
        return tbl

    def pushforward(self, x: GroupAlgebraElement) -> dict[int, object]:
        """Pushforward of a group algebra element: sums coefficients over
        preimage classes."""
        out: dict[int, object] = {}
        for w, c in x.coeffs.items():
            i = self.evaluate(w)
            out[i] = out.get(i, 0) + c
        return {i: c for i, c in out.items() if c}

    def verify_schreier_sims(self) -> bool:
        """Independent order check: stabilizer-chain order == BFS count."""
        return schreier_sims_order(self.gen_perms) == self.order

    # -- cache serialization -----------------------------------------------

    def to_cache_dict(self, family: str, n: int) -> dict:
        return {
            "format_version": CACHE_FORMAT_VERSION,
            "family": family,
            "n": n,
            "rank": self.rank,
            "degree": str(self.degree),
            "order": str(self.order),
            "generators": [[str(int(x)) for x in g] for g in self.gen_perms],
        }

    @staticmethod
    def from_cache_dict(data: dict, cap: int = DEFAULT_FIBER_CAP) -> "FiniteQuotient":
        if data.get("format_version") != CACHE_FORMAT_VERSION:
            raise InputError("unsupported cache format version")
        gens = [np.array([int(x) for x in g], dtype=np.int32)
                for g in data["generators"]]
        q = FiniteQuotient(gens, rank=int(data["rank"]), cap=cap)
        if q.order != int(data["order"]):
            raise InputError("cached order disagrees with recomputation")
        return q


def kernel_refines(p: FiniteQuotient, q: FiniteQuotient) -> bool:
    """True iff ker(pi_p) <= ker(pi_q).

    The subgroup of im(p) x im(q) generated by the paired generator images
    projects onto im(p); the projection is injective exactly when
    ker p <= ker q, i.e. when the paired image has order |im p|.
    """
    if p.rank != q.rank:
        raise InputError("rank mismatch in kernel_refines")
    paired = []
    for gp, gq in zip(p.gen_perms, q.gen_perms):
        paired.append(np.concatenate([gp, gq + p.degree]).astype(np.int32))
    return bfs_order(paired, cap=p.order) == p.order


# -- Lubotzky-Shalom FD kernel enumeration ---------------------------------

def _tuple_bfs_order(gens: list[tuple[int, ...]], cap: int) -> int | None:
    """Order of a small permutation group over tuples, aborting above cap."""
    degree = len(gens[0])
    ident = tuple(range(degree))
    steps = list(gens)
    for g in gens:
        inv = [0] * degree
        for i, x in enumerate(g):
            inv[x] = i
        steps.append(tuple(inv))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for s in steps:
                h = tuple(g[x] for x in s)
                if h not in seen:
                    seen.add(h)
                    if len(seen) > cap:
                        return None
                    nxt.append(h)
        frontier = nxt
    return len(seen)


def enumerate_kernel_reps(n: int, hom_level_cap: int = DEFAULT_HOM_LEVEL_CAP,
                          fiber_cap: int = DEFAULT_FIBER_CAP
                          ) -> list[FiniteQuotient]:
    """One quotient per distinct kernel of a homomorphism F_2 -> F, |F| <= n.

    Every group of order <= n embeds in S_n, and a kernel only depends on
    the corestriction to the image, so pairs (sigma, tau) of permutations in
    S_n generating a subgroup of order <= n exhaust all kernels.
    Deduplication is by kernel equality (mutual refinement).
    """
    if n < 1:
        raise InputError("level must be >= 1")
    if n > hom_level_cap:
        raise ResourceError(
            f"kernel enumeration at level {n} exceeds the homomorphism "
            f"enumeration cap {hom_level_cap}")
    probe_words = [w for w in ball(3, 2) if not w.is_identity()]
    reps: list[FiniteQuotient] = []
    signatures: dict[tuple, list[int]] = {}
    perms = list(itertools.permutations(range(n)))
    for sigma in perms:
        for tau in perms:
            if _tuple_bfs_order([sigma, tau], cap=n) is None:
                continue
            cand = FiniteQuotient(
                [np.array(sigma, dtype=np.int32),
                 np.array(tau, dtype=np.int32)], rank=2, cap=fiber_cap)
            # cheap prefilter: which short words die in this kernel
            sig = (cand.order,
                   tuple(cand.evaluate(w) == 0 for w in probe_words))
            dup = False
            for j in signatures.get(sig, ()):
                # equal orders, so one-way refinement implies equality
                if kernel_refines(cand, reps[j]):
                    dup = True
                    break
            if not dup:
                signatures.setdefault(sig, []).append(len(reps))
                reps.append(cand)
    return reps


# -- quotient families ------------------------------------------------------

def _fd_quotient(n: int, hom_level_cap: int, fiber_cap: int) -> FiniteQuotient:
    reps = enumerate_kernel_reps(n, hom_level_cap, fiber_cap)
    gen_a = []
    gen_b = []
    offset = 0
    for r in reps:
        gen_a.append(r.gen_perms[0] + offset)
        gen_b.append(r.gen_perms[1] + offset)
        offset += r.degree
    return FiniteQuotient(
        [np.concatenate(gen_a).astype(np.int32),
         np.concatenate(gen_b).astype(np.int32)], rank=2, cap=fiber_cap)


def _sl2_perm(mat, modulus: int) -> np.ndarray:
    (a, b), (c, d) = mat
    m = modulus
    x, y = np.divmod(np.arange(m * m, dtype=np.int64), m)
    return ((a * x + b * y) % m * m + (c * x + d * y) % m).astype(np.int32)


def _congruence_quotient(n: int, fiber_cap: int) -> FiniteQuotient:
    m = 2 ** n
    if m * m > 50_000_000:
        raise ResourceError(
            f"congruence level {n} needs degree {m * m}, beyond desk scale")
    return FiniteQuotient(
        [_sl2_perm(SANOV_A, m), _sl2_perm(SANOV_B, m)], rank=2, cap=fiber_cap)


def _cyclic_quotient(n: int, fiber_cap: int) -> FiniteQuotient:
    m = 2 ** n
    if m > fiber_cap:
        raise ResourceError(f"cyclic level {n} exceeds the fiber cap {fiber_cap}")
    gen = np.roll(np.arange(m, dtype=np.int32), -1)  # i -> i+1 mod m
    return FiniteQuotient([gen], rank=1, cap=fiber_cap)


@dataclass
class NestingReport:
    family: str
    results: list[tuple[int, bool]]  # (n, quotient(n+1) refines quotient(n))

    @property
    def all_pass(self) -> bool:
        return all(ok for _, ok in self.results)

    @property
    def first_failure(self) -> int | None:
        for n, ok in self.results:
            if not ok:
                return n
        return None


@dataclass
class SeparationReport:
    family: str
    radius: int
    depth: int
    levels: dict[Word, int | None]  # minimal separating level, or None

    @property
    def all_separated(self) -> bool:
        return all(v is not None for v in self.levels.values())

    @property
    def unseparated(self) -> list[Word]:
        return [w for w, v in self.levels.items() if v is None]


class ApproximatedGroup:
    """A free group with one of the three approximating sequences, with a
    persistent disk cache of constructed quotients."""

    def __init__(self, family: str, cache_dir: str | os.PathLike | None = None,
                 fiber_cap: int = DEFAULT_FIBER_CAP,
                 hom_level_cap: int = DEFAULT_HOM_LEVEL_CAP):
        if family not in FAMILIES:
            raise InputError(f"unknown family {family!r}; choose from {FAMILIES}")
        self.family = family
        self.rank = FAMILY_RANK[family]
        self.fiber_cap = fiber_cap
        self.hom_level_cap = hom_level_cap
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self._memory: dict[int, FiniteQuotient] = {}

    # -- construction and caching ------------------------------------------

    def _cache_path(self, n: int) -> Path | None:
        if self.cache_dir is None:
            return None
        return self.cache_dir / f"quotient-{self.family}-{n}.json"

    def _build(self, n: int) -> FiniteQuotient:
        if self.family == "fd":
            return _fd_quotient(n, self.hom_level_cap, self.fiber_cap)
        if self.family == "congruence":
            return _congruence_quotient(n, self.fiber_cap)
        return _cyclic_quotient(n, self.fiber_cap)

    def quotient(self, n: int) -> FiniteQuotient:
        if n < 1:
            raise InputError("quotient level must be >= 1")
        q = self._memory.get(n)
        if q is not None:
            return q
        path = self._cache_path(n)
        if path is not None and path.exists():
            q = FiniteQuotient.from_cache_dict(
                json.loads(path.read_text()), cap=self.fiber_cap)
        else:
            q = self._build(n)
            if path is not None:
                path.parent.mkdir(parents=True, exist_ok=True)
                payload = json.dumps(q.to_cache_dict(self.family, n),
                                     separators=(",", ":"))
                fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
                try:
                    with os.fdopen(fd, "w") as fh:
                        fh.write(payload)
                    os.replace(tmp, path)  # atomic for concurrent writers
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
        self._memory[n] = q
        return q

    # -- Definition-level checks ---------------------------------------------

    def check_nesting(self, depth: int) -> NestingReport:
        results = []
        for n in range(1, depth):
            ok = kernel_refines(self.quotient(n + 1), self.quotient(n))
            results.append((n, ok))
        return NestingReport(self.family, results)

    def check_separation(self, radius: int, depth: int) -> SeparationReport:
        quotients = [self.quotient(n) for n in range(1, depth + 1)]
        levels: dict[Word, int | None] = {}
        for w in ball(radius, self.rank):
            if w.is_identity():
                continue
            found = None
            for n, q in enumerate(quotients, start=1):
                if q.evaluate(w) != 0:
                    found = n
                    break
            levels[w] = found
        return SeparationReport(self.family, radius, depth, levels)

    def separation_level(self, words: list[Word], depth_cap: int = 20) -> int:
        """Minimal N with pi_N injective on the given set of words."""
        diffs = []
        for i, u in enumerate(words):
            for v in words[i + 1:]:
                d = u * v.inverse()
                if d.is_identity():
                    raise InputError("duplicate words in separation query")
                diffs.append(d)
        if not diffs:
            return 1
        for n in range(1, depth_cap + 1):
            try:
                q = self.quotient(n)
            except ResourceError:
                break
            if all(q.evaluate(d) != 0 for d in diffs):
                return n
        raise ResourceError(
            f"no level <= {depth_cap} separates the given support "
            f"(family {self.family})")

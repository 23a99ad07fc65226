"""Reduced words in the free group F_k and exact group-algebra arithmetic.

Letters are nonzero signed generator indices: +i is the i-th generator,
-i its inverse (1-based, i <= rank).  The normative letter order used for
shortlex enumeration and serialization is a < A < b < B < ... where a
capital letter denotes an inverse.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import InputError, ResourceError
from .exact import RationalComplex, conj, is_exact

DEFAULT_BALL_CAP = 5_000_000

_ALPHABET = "abcdefghijklmnopqrstuvwxyz"


def letter_rank(letter: int) -> int:
    """Position of a letter in the normative order a, A, b, B, ..."""
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def letters_in_order(rank: int) -> list[int]:
    return [l for g in range(1, rank + 1) for l in (g, -g)]


def check_letters(letters: Iterable[int], rank: int) -> None:
    for l in letters:
        if not isinstance(l, int) or l == 0 or abs(l) > rank:
            raise InputError(f"invalid generator index {l!r} for rank {rank}")


def free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for l in letters:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; the empty tuple is the identity."""

    letters: tuple[int, ...]
    rank: int = 2

    def __post_init__(self):
        check_letters(self.letters, self.rank)
        for x, y in zip(self.letters, self.letters[1:]):
            if x == -y:
                raise InputError(f"word {self.letters} is not freely reduced")

    @staticmethod
    def identity(rank: int = 2) -> "Word":
        return Word((), rank)

    @staticmethod
    def reduce(letters: Iterable[int], rank: int = 2) -> "Word":
        letters = tuple(letters)
        check_letters(letters, rank)
        return Word(free_reduce(letters), rank)

    @staticmethod
    def generator(i: int, rank: int = 2) -> "Word":
        return Word((i,), rank)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if self.rank != other.rank:
            raise InputError("rank mismatch in word multiplication")
        return Word(free_reduce(self.letters + other.letters), self.rank)

    def inverse(self) -> "Word":
        return Word(tuple(-l for l in reversed(self.letters)), self.rank)

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        out = Word.identity(self.rank)
        for _ in range(abs(n)):
            out = out * base
        return out

    def is_identity(self) -> bool:
        return not self.letters

    def shortlex_key(self) -> tuple:
        return (len(self.letters), tuple(letter_rank(l) for l in self.letters))

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        out = []
        for l in self.letters:
            c = _ALPHABET[abs(l) - 1]
            out.append(c if l > 0 else c.upper())
        return "".join(out)

    @staticmethod
    def parse(s: str, rank: int = 2) -> "Word":
        s = s.strip()
        if s in ("", "e"):
            return Word.identity(rank)
        letters = []
        for c in s:
            low = c.lower()
            if low not in _ALPHABET[:rank]:
                raise InputError(f"letter {c!r} not valid for rank {rank}")
            i = _ALPHABET.index(low) + 1
            letters.append(i if c.islower() else -i)
        return Word.reduce(letters, rank)


def ball_size(radius: int, rank: int) -> int:
    if radius < 0:
        raise InputError("radius must be nonnegative")
    k2 = 2 * rank
    total = 1
    count = k2
    for _ in range(radius):
        total += count
        count *= k2 - 1
    return total


def ball(radius: int, rank: int = 2, cap: int = DEFAULT_BALL_CAP) -> list[Word]:
    """All reduced words of length <= radius in shortlex order."""
    if radius < 0:
        raise InputError("radius must be nonnegative")
    size = ball_size(radius, rank)
    if size > cap:
        raise ResourceError(
            f"ball({radius}, {rank}) has {size} words, exceeding the "
            f"configured element cap {cap}")
    order = sorted(letters_in_order(rank), key=letter_rank)
    words = [Word.identity(rank)]
    frontier = [()]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            for l in order:
                if w and w[-1] == -l:
                    continue
                nxt.append(w + (l,))
        words.extend(Word(w, rank) for w in nxt)
        frontier = nxt
    return words


def _coeff_add(a, b):
    if isinstance(a, RationalComplex) or isinstance(b, RationalComplex):
        return RationalComplex.of(a) + RationalComplex.of(b)
    return a + b


def _coeff_mul(a, b):
    if isinstance(a, RationalComplex) or isinstance(b, RationalComplex):
        return RationalComplex.of(a) * RationalComplex.of(b)
    return a * b


def _abs_squared(c):
    if isinstance(c, RationalComplex):
        return c.abs_squared()
    if isinstance(c, complex):
        return c.real * c.real + c.imag * c.imag
    return c * c


@dataclass(frozen=True)
class GroupAlgebraElement:
    """Finitely supported function F_k -> C; no zero coefficients stored.

    Coefficients may be exact (int, Fraction, RationalComplex) or double
    precision (float, complex); exact and float inputs can be mixed but
    exact-mode guarantees then no longer apply.
    """

    rank: int
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for w, c in self.coeffs.items():
            if not isinstance(w, Word):
                raise InputError("coefficient keys must be Words")
            if w.rank != self.rank:
                raise InputError("word rank does not match element rank")
            if c:
                clean[w] = c
        object.__setattr__(self, "coeffs", clean)

    @staticmethod
    def zero(rank: int = 2) -> "GroupAlgebraElement":
        return GroupAlgebraElement(rank, {})

    @staticmethod
    def delta(word: Word, coeff=1) -> "GroupAlgebraElement":
        return GroupAlgebraElement(word.rank, {word: coeff})

    @staticmethod
    def from_pairs(pairs, rank: int = 2) -> "GroupAlgebraElement":
        coeffs: dict = {}
        for w, c in pairs:
            if isinstance(w, str):
                w = Word.parse(w, rank)
            coeffs[w] = _coeff_add(coeffs.get(w, 0), c)
        return GroupAlgebraElement(rank, coeffs)

    @staticmethod
    def generator_sum(rank: int = 2) -> "GroupAlgebraElement":
        """Sum of all generators and their inverses (the Cayley adjacency)."""
        return GroupAlgebraElement(
            rank, {Word((l,), rank): 1 for l in letters_in_order(rank)})

    def support(self) -> list[Word]:
        return sorted(self.coeffs, key=Word.shortlex_key)

    def max_word_length(self) -> int:
        return max((len(w) for w in self.coeffs), default=0)

    def __add__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        self._check_rank(other)
        coeffs = dict(self.coeffs)
        for w, c in other.coeffs.items():
            coeffs[w] = _coeff_add(coeffs.get(w, 0), c)
        return GroupAlgebraElement(self.rank, coeffs)

    def __sub__(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        return self + other.scale(-1)

    def scale(self, s) -> "GroupAlgebraElement":
        return GroupAlgebraElement(
            self.rank, {w: _coeff_mul(s, c) for w, c in self.coeffs.items()})

    def _check_rank(self, other):
        if self.rank != other.rank:
            raise InputError("rank mismatch between group algebra elements")

    def convolve(self, other: "GroupAlgebraElement") -> "GroupAlgebraElement":
        """(x*y)(g) = sum_h x(g h^-1) y(h)."""
        self._check_rank(other)
        coeffs: dict = {}
        for u, cu in self.coeffs.items():
            for v, cv in other.coeffs.items():
                w = u * v
                coeffs[w] = _coeff_add(coeffs.get(w, 0), _coeff_mul(cu, cv))
        return GroupAlgebraElement(self.rank, coeffs)

    def adjoint(self) -> "GroupAlgebraElement":
        """x*(g) = conj(x(g^-1))."""
        return GroupAlgebraElement(
            self.rank, {w.inverse(): conj(c) for w, c in self.coeffs.items()})

    def is_self_adjoint(self, tol: float = 0.0) -> bool:
        adj = self.adjoint()
        keys = set(self.coeffs) | set(adj.coeffs)
        for w in keys:
            a = complex(self.coeffs.get(w, 0))
            b = complex(adj.coeffs.get(w, 0))
            if abs(a - b) > tol:
                return False
        return True

    def sum_of_coefficients(self):
        total = 0
        for c in self.coeffs.values():
            total = _coeff_add(total, c)
        return total

    def l1_norm(self) -> float:
        return float(sum(abs(c) for c in self.coeffs.values()))

    def l2_norm_squared(self):
        total = 0
        for c in self.coeffs.values():
            total = _coeff_add(total, _abs_squared(c))
        return total

    def l2_norm(self) -> float:
        return math.sqrt(float(self.l2_norm_squared()))

    def sphere_decomposition(self) -> list[tuple[int, "GroupAlgebraElement", float]]:
        """Split by word length: x = sum_k x_k, with the l2 norm of each x_k."""
        by_len: dict[int, dict] = {}
        for w, c in self.coeffs.items():
            by_len.setdefault(len(w), {})[w] = c
        out = []
        for k in sorted(by_len):
            comp = GroupAlgebraElement(self.rank, by_len[k])
            out.append((k, comp, comp.l2_norm()))
        return out

    def haagerup_bound(self) -> float:
        """sum_k (k+1)*||x_k||_2; an upper bound for the reduced norm when
        rank >= 2."""
        return sum((k + 1) * n for k, _, n in self.sphere_decomposition())

    # -- serialization: JSON array of [word, re, im] triples ---------------

    def to_json(self) -> str:
        rows = []
        for w in self.support():
            c = self.coeffs[w]
            if is_exact(c):
                rc = RationalComplex.of(c)
                rows.append([str(w), str(rc.re), str(rc.im)])
            else:
                c = complex(c)
                rows.append([str(w), c.real, c.imag])
        return json.dumps(rows)

    @staticmethod
    def from_json(text: str, rank: int = 2) -> "GroupAlgebraElement":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputError(f"bad element JSON: {e}") from e
        if not isinstance(rows, list):
            raise InputError("element JSON must be an array of triples")
        coeffs: dict = {}
        for row in rows:
            if not (isinstance(row, list) and len(row) == 3):
                raise InputError(f"bad element row {row!r}")
            word_s, re_v, im_v = row
            w = Word.parse(word_s, rank)
            if isinstance(re_v, str) or isinstance(im_v, str):
                c = RationalComplex(Fraction(str(re_v)), Fraction(str(im_v)))
                if c.im == 0 and c.re.denominator == 1:
                    c = int(c.re)
                elif c.im == 0:
                    c = c.re
            else:
                c = complex(re_v, im_v)
                if c.imag == 0:
                    c = c.real
            coeffs[w] = _coeff_add(coeffs.get(w, 0), c)
        return GroupAlgebraElement(rank, coeffs)

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = [f"{self.coeffs[w]}*{w}" for w in self.support()]
        return " + ".join(parts)

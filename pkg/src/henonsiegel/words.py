"""Fibonacci composition words and the multi-index partial order.

``word(n)`` is the letter sequence (in application order, first letter acts
first) with pR^n(zeta) = (zeta^word(n), zeta^word(n-1)); lengths follow the
Fibonacci recursion.  Multi-indexes are run-length tuples (a0, a1, ...)
encoding eta^a0 then xi^a1 then eta^a2 ..., a0 possibly zero.
"""

from __future__ import annotations

from enum import Enum
from functools import lru_cache

from .errors import OrbitEscapeError

ETA = "ETA"
XI = "XI"


class Letter(str, Enum):
    ETA = "ETA"
    XI = "XI"


class MultiIndexWord:
    """Immutable letter sequence over {ETA, XI} in application order."""

    __slots__ = ("letters",)

    def __init__(self, letters):
        ls = tuple(str(x) for x in letters)
        if not ls:
            raise ValueError("words must be nonempty")
        for x in ls:
            if x not in (ETA, XI):
                raise ValueError(f"bad letter {x!r}")
        object.__setattr__(self, "letters", ls)

    def __setattr__(self, *a):
        raise AttributeError("MultiIndexWord is immutable")

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __eq__(self, other):
        return isinstance(other, MultiIndexWord) and self.letters == other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        return "MultiIndexWord(%s)" % ",".join(
            "e" if x == ETA else "x" for x in self.letters
        )

    def concat(self, other):
        """self applied first, then other."""
        return MultiIndexWord(self.letters + other.letters)

    def multi_index(self):
        """Run-length tuple (a0, a1, ...): eta^a0 then xi^a1 then eta^a2 ..."""
        out = []
        expect = ETA
        i = 0
        n = len(self.letters)
        while i < n:
            run = 0
            while i < n and self.letters[i] == expect:
                run += 1
                i += 1
            out.append(run)
            expect = XI if expect == ETA else ETA
        return tuple(out)

    @classmethod
    def from_multi_index(cls, idx):
        letters = []
        sym = ETA
        for a in idx:
            letters.extend([sym] * a)
            sym = XI if sym == ETA else ETA
        return cls(letters)


def fibonacci(n):
    """F(1) = 1, F(2) = 2, F(3) = 3, F(4) = 5, ... (word-length convention)."""
    a, b = 1, 2
    if n == 1:
        return 1
    for _ in range(n - 2):
        a, b = b, a + b
    return b


@lru_cache(maxsize=None)
def word(n: int) -> MultiIndexWord:
    """The word alpha_n with pR^n(zeta) = (zeta^alpha_n, zeta^alpha_{n-1})."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return MultiIndexWord([ETA])
    if n == 1:
        return MultiIndexWord([XI, ETA])
    return word(n - 2).concat(word(n - 1))


def precedes(w, alpha):
    """The partial order on multi-indexes: w = (a0..ak, b) < alpha iff the
    prefix matches and b is dominated by alpha's next entry (strictly at the
    last position)."""
    a = w.multi_index() if isinstance(w, MultiIndexWord) else tuple(w)
    ref = alpha.multi_index() if isinstance(alpha, MultiIndexWord) else tuple(alpha)
    if len(a) < 2 or len(a) > len(ref):
        return False
    if a[: len(a) - 1] != ref[: len(a) - 1]:
        return False
    b = a[-1]
    if len(a) < len(ref):
        return b <= ref[len(a) - 1]
    return b < ref[-1]


def preceding_indexes(alpha):
    """Enumerate all multi-index tuples strictly preceding alpha."""
    ref = alpha.multi_index() if isinstance(alpha, MultiIndexWord) else tuple(alpha)
    out = []
    for cut in range(1, len(ref)):
        hi = ref[cut] if cut < len(ref) - 1 else ref[-1] - 1
        for b in range(0, hi + 1):
            out.append(ref[:cut] + (b,))
    return out


def apply_word(pair, w: MultiIndexWord, x, check=True):
    """Compose the pair's maps along the word at a point (or point array).

    Raises OrbitEscapeError naming the first letter whose evaluation leaves
    its map's domain.
    """
    z = x
    for i, letter in enumerate(w.letters):
        f = pair.eta if letter == ETA else pair.xi
        if check and not f.domain.contains(z):
            import numpy as np

            worst = float(np.max(f.domain.membership(z)))
            raise OrbitEscapeError(
                f"letter {i} ({letter}) evaluated outside its domain "
                f"(membership {worst:.4f})",
                letter_index=i,
                letter=letter,
            )
        z = f.eval(z)
    return z

"""Golden-mean quadratic polynomial and its exact Fibonacci-return pairs.

P(x) = x^2 + c with c = mu/2 - mu^2/4 has a Siegel fixed point of rotation
number theta* = (sqrt(5)-1)/2 at mu/2 and its critical point 0 on the Siegel
boundary.  The pair built from (P^2, P), rescaled so the xi-slot fixes 1,
renormalizes along exact Fibonacci iterates; this gives machine-accurate
seeds and oracles without any series arithmetic.
"""

from __future__ import annotations

import numpy as np

THETA_STAR = (np.sqrt(5.0) - 1.0) / 2.0
MU_STAR = complex(np.exp(2j * np.pi * THETA_STAR))
C_STAR = MU_STAR / 2.0 - MU_STAR**2 / 4.0


def fib(n):
    """F(1) = F(2) = 1, F(3) = 2, ... (classical indexing)."""
    if n < 1:
        raise ValueError("fib index starts at 1")
    a, b = 1, 1
    for _ in range(n - 1):
        a, b = b, a + b
    return a


def p_iter(z, k, c=C_STAR):
    """k-fold iterate of x -> x^2 + c, vectorized; overflow passes through."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(k):
            z = z * z + c
    return z


def critical_orbit(n, c=C_STAR):
    """First n points P(0), P^2(0), ..., P^n(0) of the critical orbit."""
    out = np.empty(n, dtype=complex)
    z = 0.0 + 0.0j
    for i in range(n):
        z = z * z + c
        out[i] = z
    return out


def return_scale(level, c=C_STAR):
    """L_n = P^{F(n+2)}(0), the Fibonacci critical-orbit return at ``level``."""
    return complex(p_iter(0.0, fib(level + 2), c))


def pair_evaluators(level, c=C_STAR):
    """Exact evaluators (eta, xi) of the level-n rescaled Fibonacci pair.

    eta(x) = P^{F(n+3)}(L x)/L and xi(x) = P^{F(n+2)}(L x)/L with
    L = P^{F(n+2)}(0); this equals the n-fold pre-renormalization of the
    degenerate pair (P^2, P) rescaled to xi(0) = 1.
    """
    ln = return_scale(level, c)
    ke = fib(level + 3)
    kx = fib(level + 2)

    def eta(x):
        return p_iter(ln * np.asarray(x, dtype=complex), ke, c) / ln

    def xi(x):
        return p_iter(ln * np.asarray(x, dtype=complex), kx, c) / ln

    return eta, xi


def siegel_center(c=C_STAR, mu=MU_STAR):
    """The Siegel fixed point mu/2 of P."""
    return mu / 2.0


def _extended_constants():
    theta = (np.longdouble(5) ** np.longdouble(0.5) - 1) / 2
    two_pi = 2 * np.arccos(np.longdouble(-1))
    mu = np.complex256(np.cos(two_pi * theta) + 1j * np.sin(two_pi * theta))
    return mu / 2 - mu * mu / 4


def rescale_constant_at_level(level, letters):
    """zeta_n^{word}(0) for the level-n pair, in extended precision.

    Pure polynomial iteration (no series fitting), so the only error is the
    extended-precision roundoff of the orbit itself.  ``letters`` is a word
    in application order over {"ETA", "XI"}.
    """
    c = _extended_constants()

    def it(z, k):
        for _ in range(k):
            z = z * z + c
        return z

    ln = it(np.complex256(0), fib(level + 2))
    z = np.complex256(0)
    for letter in letters:
        k = fib(level + 3) if letter == "ETA" else fib(level + 2)
        z = it(ln * z, k) / ln
    return complex(z)


def accelerated_limit(seq):
    """Aitken delta-squared applied twice; the limit of a geometric tail."""
    def aitken(s):
        out = []
        for i in range(len(s) - 2):
            d = (s[i + 2] - s[i + 1]) - (s[i + 1] - s[i])
            out.append(s[i + 2] - (s[i + 2] - s[i + 1]) ** 2 / d if d != 0 else s[i + 2])
        return out

    acc = aitken(aitken(list(seq)))
    if not acc:
        raise ValueError("need at least five terms to accelerate")
    return acc

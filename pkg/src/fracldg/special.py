"""Gamma function and the Gauss hypergeometric series."""
from __future__ import annotations

import math

import numpy as np

MAX_TERMS = 1_000_000
_REL_STOP = 1e-16


class SpecialFunctionError(ArithmeticError):
    """Pole of Gamma or a hypergeometric series that failed to converge."""


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x`` away from the poles ``0, -1, -2, ...``.

    Positive arguments use the C library ``tgamma``; negative ones are
    shifted up with ``Gamma(x) = Gamma(x + 2) / (x (x + 1))``.
    """
    x = float(x)
    if not math.isfinite(x):
        raise SpecialFunctionError(f"gamma of non-finite argument {x}")
    if _is_nonpositive_integer(x):
        raise SpecialFunctionError(f"gamma has a pole at {x:g}")
    if x > 0:
        return math.gamma(x)
    return gamma_fn(x + 2.0) / (x * (x + 1.0))


def hyp2f1_series(a: float, b: float, c: float, z, max_terms: int = MAX_TERMS):
    """Sum ``2F1(a, b; c; z)`` by its power series.

    Terms are accumulated with Neumaier compensation and the summation for
    each ``z`` stops once a term drops below ``1e-16 |partial sum|`` (after
    the parameters have been passed, so a transiently small term cannot
    stop it early) or the series terminates.

    Returns ``(values, converged)`` with the shape of ``z``.
    """
    if _is_nonpositive_integer(c):
        raise SpecialFunctionError(f"c = {c:g} is a nonpositive integer")
    zz = np.asarray(z, dtype=float)
    flat = zz.ravel()
    if np.any(np.abs(flat) >= 1.0):
        raise SpecialFunctionError("series needs |z| < 1")
    total = np.ones_like(flat)
    comp = np.zeros_like(flat)
    term = np.ones_like(flat)
    done = np.zeros(flat.shape, dtype=bool)
    active = np.arange(flat.size)
    warmup = max(abs(a), abs(b), abs(c)) + 1.0
    n = 0
    while active.size and n < max_terms:
        t = term[active] * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * flat[active]
        term[active] = t
        s = total[active]
        new = s + t
        comp[active] += np.where(np.abs(s) >= np.abs(t), (s - new) + t, (t - new) + s)
        total[active] = new
        n += 1
        stop = (t == 0.0) | ((n > warmup) & (np.abs(t) <= _REL_STOP * np.abs(new)))
        done[active[stop]] = True
        active = active[~stop]
    values = (total + comp).reshape(zz.shape)
    converged = done.reshape(zz.shape)
    if values.ndim == 0:
        return float(values), bool(converged)
    return values, converged


def hyp2f1(a: float, b: float, c: float, z, max_terms: int = MAX_TERMS):
    """``2F1(a, b; c; z)`` for ``|z| < 1``; raises if the series does not converge."""
    values, ok = hyp2f1_series(a, b, c, z, max_terms)
    if not np.all(ok):
        bad = np.asarray(z, float)[~np.asarray(ok)]
        raise SpecialFunctionError(
            f"2F1({a}, {b}; {c}; z) did not converge in {max_terms} terms "
            f"(worst z = {float(np.max(bad)):.17g})")
    return values

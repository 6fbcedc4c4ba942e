"""Small numeric helpers shared across the package.

Nothing here is statistics-specific: compensated accumulation for
alternating sums and a golden-section maximizer used to locate the peak of
smooth one-dimensional envelopes.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable

__all__ = [
    "KahanSum",
    "NonconvergenceError",
    "golden_section_max",
    "kahan_sum",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class NonconvergenceError(RuntimeError):
    """A series or quadrature failed to reach its tolerance within budget."""


class KahanSum:
    """Compensated running sum (Kahan-Neumaier variant).

    Keeps a correction term so that long alternating sums whose terms span
    many orders of magnitude lose far less precision than a bare ``+=``.
    """

    __slots__ = ("total", "_carry")

    def __init__(self) -> None:
        self.total = 0.0
        self._carry = 0.0

    def add(self, value: float) -> None:
        t = self.total + value
        if abs(self.total) >= abs(value):
            self._carry += (self.total - t) + value
        else:
            self._carry += (value - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self._carry


def kahan_sum(values: Iterable[float]) -> float:
    """Sum ``values`` with compensation; equivalent in spirit to math.fsum
    but usable term-by-term inside generators that decide when to stop."""
    acc = KahanSum()
    for v in values:
        acc.add(v)
    return acc.value


def _simpson(f: Callable, a, b, fa, fm, fb):
    return (b - a) * (fa + 4 * fm + fb) / 6


def adaptive_simpson(
    f: Callable,
    a,
    b,
    tol: float = 1e-12,
    max_depth: int = 40,
):
    """Recursive adaptive Simpson quadrature of ``f`` on [a, b].

    ``tol`` is an absolute target on the total error.  The routine is
    deliberately generic: ``a``, ``b`` and the values of ``f`` may be floats
    or ``mpmath.mpf``, so the same code backs both the double-precision
    estimator internals and the extended-precision identity checks.

    Raises NonconvergenceError if the recursion bottoms out at ``max_depth``
    while the local error estimate still exceeds its share of ``tol``.
    """
    m = (a + b) / 2
    fa, fm, fb = f(a), f(m), f(b)
    whole = _simpson(f, a, b, fa, fm, fb)
    return _adaptive(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _adaptive(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = _simpson(f, a, m, fa, flm, fm)
    right = _simpson(f, m, b, fm, frm, fb)
    err = left + right - whole
    if abs(err) <= 15 * tol:
        return left + right + err / 15
    if depth <= 0:
        raise NonconvergenceError(
            f"adaptive Simpson hit max depth on [{float(a):g}, {float(b):g}]"
        )
    return _adaptive(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + _adaptive(
        f, m, b, fm, frm, fb, right, tol / 2, depth - 1
    )


def golden_section_max(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
) -> tuple[float, float]:
    """Locate the maximum of a unimodal ``f`` on [a, b].

    Returns ``(argmax, max)``.  Used on bracketed grid peaks, where
    unimodality within the bracket is a safe assumption.
    """
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol * (1.0 + abs(a) + abs(b)):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
    x = (a + b) / 2
    return x, f(x)

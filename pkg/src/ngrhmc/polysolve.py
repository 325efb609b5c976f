"""Low-degree polynomial root finding.

Polynomials are plain sequences of coefficients in ascending degree,
``c[0] + c[1]*x + ... + c[n]*x**n``. Everything here works on Python floats
because the collision search calls these routines once per integrator step
and NumPy's per-call overhead dominates at this size.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

from .errors import DegeneratePoly

PRUNE_REL = 1e-14
_TWO_PI_3 = 2.0 * math.pi / 3.0


def trim(c: Sequence[float], rel: float = PRUNE_REL) -> list[float]:
    """Drop leading coefficients below ``rel * max|c_i|``.

    Returns an empty list for the zero polynomial.
    """
    c = [float(x) for x in c]
    scale = max((abs(x) for x in c), default=0.0)
    if scale == 0.0:
        return []
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= rel * scale:
        n -= 1
    return c[:n]


def horner(c: Sequence[float], x: float) -> float:
    acc = 0.0
    for coef in reversed(c):
        acc = acc * x + coef
    return acc


def horner2(c: Sequence[float], x: float) -> tuple[float, float]:
    """Value and first derivative at ``x``."""
    p = 0.0
    dp = 0.0
    for coef in reversed(c):
        dp = dp * x + p
        p = p * x + coef
    return p, dp


def derivative(c: Sequence[float]) -> list[float]:
    return [k * c[k] for k in range(1, len(c))]


def multiply(a: Sequence[float], b: Sequence[float]) -> list[float]:
    out = [0.0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai == 0.0:
            continue
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def from_roots(roots: Sequence[float], lead: float = 1.0) -> list[float]:
    c = [lead]
    for r in roots:
        c = multiply(c, [-r, 1.0])
    return c


def remainder(num: Sequence[float], den: Sequence[float]) -> list[float]:
    """Remainder of polynomial long division, pruned relative to ``num``."""
    r = list(num)
    scale = max((abs(x) for x in num), default=0.0)
    nd = len(den) - 1
    lead = den[-1]
    while len(r) - 1 >= nd and r:
        f = r[-1] / lead
        shift = len(r) - 1 - nd
        for k in range(nd + 1):
            r[shift + k] -= f * den[k]
        r.pop()
        while r and abs(r[-1]) <= PRUNE_REL * scale:
            r.pop()
    return r


# --------------------------------------------------------------------------
# closed-form roots, degree <= 3
# --------------------------------------------------------------------------

def _polish(c: Sequence[float], x: float, iters: int = 3) -> float:
    best = x
    pb = abs(horner(c, x))
    for _ in range(iters):
        p, dp = horner2(c, best)
        if dp == 0.0 or p == 0.0:
            break
        cand = best - p / dp
        pc = abs(horner(c, cand))
        if pc >= pb:
            break
        best, pb = cand, pc
    return best


def _quadratic(c0: float, c1: float, c2: float) -> list[float]:
    disc = c1 * c1 - 4.0 * c2 * c0
    tol = 4.0 * 2.2e-16 * max(c1 * c1, abs(4.0 * c2 * c0))
    if disc < -tol:
        return []
    if disc <= tol:
        return [-c1 / (2.0 * c2)]
    s = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(s, c1))
    r1 = q / c2
    r2 = c0 / q if q != 0.0 else r1
    return [r1, r2]


def _cubic_monic(a: float, b: float, c: float) -> list[float]:
    """Real roots of x^3 + a x^2 + b x + c."""
    shift = a / 3.0
    p = b - a * shift
    q = 2.0 * shift**3 - b * shift + c
    # three real roots iff 4p^3 + 27q^2 < 0
    if p < 0.0:
        m = math.sqrt(-p / 3.0)
        m3 = m * m * m
        # m3 underflows for |p| below ~1e-200; Cardano below copes with that
        if m3 > 0.0 and abs(q) <= 2.0 * m3:
            arg = -q / (2.0 * m3)
            theta = math.acos(arg) / 3.0
            return [2.0 * m * math.cos(theta - k * _TWO_PI_3) - shift for k in range(3)]
    # one real root (Cardano, cancellation-free form)
    disc = 0.25 * q * q + p**3 / 27.0
    s = math.sqrt(max(disc, 0.0))
    u = -math.copysign(abs(0.5 * q) + s, q) if q != 0.0 else s
    u = math.copysign(abs(u) ** (1.0 / 3.0), u)
    t = u - p / (3.0 * u) if u != 0.0 else 0.0
    return [t - shift]


def _dedupe(roots: list[float]) -> list[float]:
    roots.sort()
    out: list[float] = []
    for r in roots:
        if out and abs(r - out[-1]) <= 1e-7 * max(1.0, abs(r)):
            continue
        out.append(r)
    return out


def cubic_roots(coefs: Sequence[float]) -> list[float]:
    """All real roots of a polynomial of degree <= 3, ascending.

    Three real roots use the trigonometric form, otherwise Cardano; each
    root gets a Newton polish on the original coefficients. Coincident
    roots are reported once.

    Raises
    ------
    DegeneratePoly
        If the polynomial is identically zero.
    """
    c = trim(coefs)
    if not c:
        raise DegeneratePoly("identically zero polynomial")
    if len(c) > 4:
        raise ValueError(f"degree {len(c) - 1} > 3")
    deg = len(c) - 1
    if deg == 0:
        return []
    if deg == 1:
        return [-c[0] / c[1]]
    if deg == 2:
        roots = _quadratic(*c)
    else:
        c0, c1, c2, c3 = c
        low = max(abs(c0), abs(c1), abs(c2))
        if abs(c3) <= 1e-8 * low and c2 != 0.0:
            # nearly quadratic: the normalised form would lose the small roots
            roots = [_polish(c, r, 6) for r in _quadratic(c0, c1, c2)]
            big = -c2 / c3 - sum(roots) if len(roots) == 2 else -c2 / c3
            roots.append(_polish(c, big, 6))
        else:
            roots = _cubic_monic(c2 / c3, c1 / c3, c0 / c3)
    roots = [_polish(c, r) for r in roots]
    return _dedupe(roots)


# --------------------------------------------------------------------------
# Sturm sequences
# --------------------------------------------------------------------------

def _normalise(c: list[float]) -> list[float]:
    lead = abs(c[-1])
    return [x / lead for x in c]


def sturm_sequence(coefs: Sequence[float]) -> list[list[float]]:
    """Sturm chain p0, p1 = p0', p_{k+1} = -rem(p_{k-1}, p_k).

    Each member is scaled by the absolute value of its leading coefficient,
    which keeps the coefficients bounded without changing any sign.
    """
    p0 = trim(coefs)
    if not p0:
        raise DegeneratePoly("identically zero polynomial")
    seq = [_normalise(p0)]
    if len(p0) == 1:
        return seq
    p1 = trim(derivative(seq[0]))
    seq.append(_normalise(p1))
    while len(seq[-1]) > 1:
        r = remainder(seq[-2], seq[-1])
        if not r:
            break
        seq.append(_normalise([-x for x in r]))
    return seq


def sign_variations(seq: Sequence[Sequence[float]], x: float) -> int:
    count = 0
    last = 0.0
    for p in seq:
        v = horner(p, x)
        if v == 0.0:
            continue
        if last != 0.0 and (v > 0.0) != (last > 0.0):
            count += 1
        last = v
    return count


def _nudge(c: Sequence[float], x: float) -> float:
    if horner(c, x) == 0.0:
        return x + 1e-14 * max(1.0, abs(x))
    return x


def sturm_count(coefs: Sequence[float], lo: float, hi: float, seq=None) -> int:
    """Number of distinct real roots in ``(lo, hi]``."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    if seq is None:
        seq = sturm_sequence(coefs)
    p = seq[0]
    lo = _nudge(p, lo)
    hi = _nudge(p, hi)
    return sign_variations(seq, lo) - sign_variations(seq, hi)


def _safe_newton(c: Sequence[float], a: float, b: float, tol: float) -> float:
    """Safeguarded Newton on a bracket with a sign change."""
    fa = horner(c, a)
    if fa == 0.0:
        return a
    x = 0.5 * (a + b)
    for _ in range(100):
        f, df = horner2(c, x)
        if f == 0.0:
            return x
        if (f > 0.0) == (fa > 0.0):
            a, fa = x, f
        else:
            b = x
        step_ok = df != 0.0
        if step_ok:
            xn = x - f / df
            step_ok = a < xn < b
        if not step_ok:
            xn = 0.5 * (a + b)
        if abs(xn - x) <= tol or b - a <= tol:
            return xn
        x = xn
    return 0.5 * (a + b)


def first_root(
    coefs: Sequence[float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    isolate_width: float = 1e-3,
    seq=None,
) -> Optional[float]:
    """Smallest root in ``(lo, hi]`` or ``None``.

    Sturm bisection isolates the first root to an interval of width at most
    ``isolate_width`` holding exactly one distinct root, then a safeguarded
    Newton iteration polishes it to ``tol``. Roots of even multiplicity have
    no sign change and are located by Sturm bisection alone.
    """
    if seq is None:
        seq = sturm_sequence(coefs)
    p = seq[0]
    n = sturm_count(p, lo, hi, seq)
    if n == 0:
        return None
    a, b = lo, hi
    while True:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        left = sturm_count(p, a, mid, seq)
        if left >= 1:
            b, n = mid, left
        else:
            a = mid
        if n == 1 and b - a <= isolate_width:
            break
    fa, fb = horner(p, a), horner(p, b)
    if fa != 0.0 and fb != 0.0 and (fa > 0.0) != (fb > 0.0):
        return _safe_newton(p, a, b, tol)
    if fb == 0.0:
        return b
    while b - a > tol:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if sturm_count(p, a, mid, seq) >= 1:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


def roots_in(coefs: Sequence[float], lo: float, hi: float, tol: float = 1e-12) -> list[float]:
    """All distinct roots in ``(lo, hi]``, ascending, via repeated :func:`first_root`."""
    seq = sturm_sequence(coefs)
    out = []
    a = lo
    while a < hi:
        r = first_root(seq[0], a, hi, tol, seq=seq)
        if r is None:
            break
        out.append(r)
        a = r + max(tol, 1e-14 * max(1.0, abs(r)))
    return out

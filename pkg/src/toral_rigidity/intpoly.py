"""Exact integer polynomials.

Coefficients are stored lowest degree first.  Besides plain arithmetic the
module provides Sturm sequences (real root counting and isolation) and an
irreducibility decision over Z that first looks for a prime modulo which the
polynomial stays irreducible and otherwise falls back to a bounded
Kronecker-style factor search.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, isqrt
from typing import Sequence

SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113)


@dataclass(frozen=True)
class IntPolynomial:
    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = [int(c) for c in self.coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def x(cls) -> "IntPolynomial":
        return cls((0, 1))

    @classmethod
    def constant(cls, c: int) -> "IntPolynomial":
        return cls((c,))

    @property
    def degree(self) -> int:
        """Degree; -1 for the zero polynomial."""
        return len(self.coefficients) - 1

    @property
    def leading(self) -> int:
        return self.coefficients[-1] if self.coefficients else 0

    def is_zero(self) -> bool:
        return not self.coefficients

    def is_monic(self) -> bool:
        return self.leading == 1

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self) -> "IntPolynomial":
        return IntPolynomial(tuple(i * c for i, c in enumerate(self.coefficients))[1:])

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self.coefficients), len(other.coefficients))
        a = self.coefficients + (0,) * (n - len(self.coefficients))
        b = other.coefficients + (0,) * (n - len(other.coefficients))
        return IntPolynomial(tuple(x + y for x, y in zip(a, b)))

    __radd__ = __add__

    def __neg__(self):
        return IntPolynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if self.is_zero() or other.is_zero():
            return IntPolynomial(())
        out = [0] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a:
                for j, b in enumerate(other.coefficients):
                    out[i + j] += a * b
        return IntPolynomial(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, e: int):
        result = IntPolynomial((1,))
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def exact_quotient(self, divisor: "IntPolynomial") -> "IntPolynomial | None":
        """Quotient over Z if ``divisor`` divides self exactly, else None."""
        q, r = _qdivmod(_to_q(self), _to_q(divisor))
        if any(r) or any(c.denominator != 1 for c in q):
            return None
        return IntPolynomial(tuple(int(c) for c in q))

    def to_list(self) -> list[int]:
        return list(self.coefficients)

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coefficients[i]
            if c == 0:
                continue
            mag = abs(c)
            if i == 0:
                body = str(mag)
            else:
                body = ("" if mag == 1 else str(mag)) + ("x" if i == 1 else f"x^{i}")
            sign = "-" if c < 0 else "+"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text


def _as_poly(p) -> IntPolynomial:
    if isinstance(p, IntPolynomial):
        return p
    return IntPolynomial((int(p),))


# ---------------------------------------------------------------------------
# rational polynomial helpers (lists of Fractions, lowest degree first)

def _to_q(p: IntPolynomial | Sequence) -> list[Fraction]:
    coeffs = p.coefficients if isinstance(p, IntPolynomial) else p
    return _qtrim([Fraction(c) for c in coeffs])


def _qtrim(a: list) -> list:
    while a and a[-1] == 0:
        a.pop()
    return a


def _qdivmod(a: list[Fraction], b: list[Fraction]):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    lead = b[-1]
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        c = a[-1] / lead
        q[shift] = c
        for i, bc in enumerate(b):
            a[i + shift] -= c * bc
        a.pop()
        _qtrim(a)
    return _qtrim(q), a


def _qgcd(a: list[Fraction], b: list[Fraction]) -> list[Fraction]:
    a, b = _qtrim(list(a)), _qtrim(list(b))
    while b:
        _, r = _qdivmod(a, b)
        a, b = b, r
    if not a:
        return a
    lead = a[-1]
    return [c / lead for c in a]


def _qeval(a: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def gcd_over_q(p: IntPolynomial, q: IntPolynomial) -> list[Fraction]:
    """Monic gcd over Q as a list of Fractions."""
    return _qgcd(_to_q(p), _to_q(q))


def is_squarefree(p: IntPolynomial) -> bool:
    """True iff p has no repeated complex root (exact gcd with p')."""
    if p.degree <= 0:
        return True
    return len(gcd_over_q(p, p.derivative())) == 1


# ---------------------------------------------------------------------------
# Sturm sequences

def sturm_sequence(p: IntPolynomial) -> list[list[Fraction]]:
    seq = [_to_q(p), _to_q(p.derivative())]
    while seq[-1]:
        _, r = _qdivmod(seq[-2], seq[-1])
        if not r:
            break
        seq.append([-c for c in r])
    return [s for s in seq if s]


def _sign_changes(values) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _signs_at_infinity(seq, positive: bool) -> list[int]:
    out = []
    for s in seq:
        deg = len(s) - 1
        lead = s[-1]
        sign = 1 if lead > 0 else -1
        if not positive and deg % 2 == 1:
            sign = -sign
        out.append(sign)
    return out


def count_real_roots(p: IntPolynomial, lo: Fraction | None = None,
                     hi: Fraction | None = None) -> int:
    """Number of distinct real roots of p in (lo, hi] (whole line by default)."""
    if p.degree <= 0:
        return 0
    seq = sturm_sequence(p)
    at_lo = (_signs_at_infinity(seq, positive=False) if lo is None
             else [_qeval(s, Fraction(lo)) for s in seq])
    at_hi = (_signs_at_infinity(seq, positive=True) if hi is None
             else [_qeval(s, Fraction(hi)) for s in seq])
    return _sign_changes(at_lo) - _sign_changes(at_hi)


def cauchy_bound(p: IntPolynomial) -> Fraction:
    lead = abs(p.leading)
    return 1 + max(Fraction(abs(c), lead) for c in p.coefficients[:-1]) if p.degree > 0 else Fraction(1)


def isolate_real_roots(p: IntPolynomial, width: Fraction | None = None) -> list[tuple[Fraction, Fraction]]:
    """Disjoint half-open intervals (lo, hi] each containing exactly one real root.

    Bisection driven by Sturm counts; intervals are refined until narrower
    than ``width`` when given.
    """
    if p.degree <= 0:
        return []
    seq = sturm_sequence(p)

    def count(lo, hi):
        return (_sign_changes([_qeval(s, lo) for s in seq])
                - _sign_changes([_qeval(s, hi) for s in seq]))

    bound = cauchy_bound(p)
    stack = [(-bound, bound)]
    out = []
    while stack:
        lo, hi = stack.pop()
        n = count(lo, hi)
        if n == 0:
            continue
        if n == 1 and (width is None or hi - lo <= width):
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.append((mid, hi))
        stack.append((lo, mid))
    return sorted(out)


def root_signature(p: IntPolynomial) -> tuple[int, int]:
    """(r, c): number of real roots and of complex-conjugate pairs.

    Exact for squarefree p; r is certified by a Sturm count.
    """
    if not is_squarefree(p):
        raise ValueError("root signature requires a squarefree polynomial")
    r = count_real_roots(p)
    return r, (p.degree - r) // 2


# ---------------------------------------------------------------------------
# arithmetic over F_q (lists of ints, lowest degree first)

def _mtrim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _mdivmod(a, b, q):
    a = list(a)
    inv = pow(b[-1], -1, q)
    out = [0] * max(len(a) - len(b) + 1, 0)
    while len(a) >= len(b) and a:
        shift = len(a) - len(b)
        c = (a[-1] * inv) % q
        out[shift] = c
        for i, bc in enumerate(b):
            a[i + shift] = (a[i + shift] - c * bc) % q
        _mtrim(a)
    return _mtrim(out), a


def _mmul(a, b, q):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % q
    return _mtrim(out)


def _mgcd(a, b, q):
    a, b = _mtrim(list(a)), _mtrim(list(b))
    while b:
        a, b = b, _mdivmod(a, b, q)[1]
    if a:
        inv = pow(a[-1], -1, q)
        a = [(c * inv) % q for c in a]
    return a


def _mpowmod(base, e, f, q):
    result = [1]
    base = _mdivmod(base, f, q)[1]
    while e:
        if e & 1:
            result = _mdivmod(_mmul(result, base, q), f, q)[1]
        base = _mdivmod(_mmul(base, base, q), f, q)[1]
        e >>= 1
    return result


def _msub(a, b, q):
    n = max(len(a), len(b))
    a = list(a) + [0] * (n - len(a))
    b = list(b) + [0] * (n - len(b))
    return _mtrim([(x - y) % q for x, y in zip(a, b)])


def factor_degrees_mod(p: IntPolynomial, q: int) -> list[int] | None:
    """Degrees of the irreducible factors of p modulo q (distinct-degree
    factorization).  None if p is not squarefree mod q or drops degree."""
    f = _mtrim([c % q for c in p.coefficients])
    if len(f) - 1 != p.degree:
        return None
    df = _mtrim([(i * c) % q for i, c in enumerate(f)][1:])
    if len(_mgcd(f, df, q)) != 1:
        return None
    inv = pow(f[-1], -1, q)
    f = [(c * inv) % q for c in f]
    degrees = []
    h = [0, 1]
    x = [0, 1]
    i = 1
    while len(f) - 1 >= 2 * i:
        h = _mpowmod(h, q, f, q)
        g = _mgcd(f, _msub(h, x, q), q)
        if len(g) > 1:
            degrees.extend([i] * ((len(g) - 1) // i))
            f = _mdivmod(f, g, q)[0]
            h = _mdivmod(h, f, q)[1]
        i += 1
    if len(f) > 1:
        degrees.append(len(f) - 1)
    return sorted(degrees)


def _subset_sums(values: list[int]) -> set[int]:
    sums = {0}
    for v in values:
        sums |= {s + v for s in sums}
    return sums


# ---------------------------------------------------------------------------
# irreducibility over Z

@dataclass(frozen=True)
class IrreducibilityVerdict:
    irreducible: bool
    certificate: str
    prime: int | None = None
    factor: IntPolynomial | None = None

    def __bool__(self) -> bool:
        return self.irreducible


def mignotte_bound(p: IntPolynomial, d: int) -> list[int]:
    """Coefficient bounds |b_j| <= C(d, j) * ||p||_2 for a degree-d factor."""
    norm = isqrt(sum(c * c for c in p.coefficients)) + 1
    return [comb(d, j) * norm for j in range(d + 1)]


def _divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def _lagrange_basis(points: list[int]) -> list[list[Fraction]]:
    basis = []
    for i, xi in enumerate(points):
        num = [Fraction(1)]
        den = Fraction(1)
        for j, xj in enumerate(points):
            if j == i:
                continue
            num = [Fraction(0)] + num
            for t in range(len(num) - 1):
                num[t] -= xj * num[t + 1]
            den *= xi - xj
        basis.append([c / den for c in num])
    return basis


def _search_monic_factor(p: IntPolynomial, d: int) -> IntPolynomial | None:
    """Kronecker search for a monic integer factor of degree d."""
    bounds = mignotte_bound(p, d)
    radius = 3 * d + 6
    pool = []
    for x in range(-radius, radius + 1):
        v = p(x)
        if v == 0:
            return IntPolynomial((-x, 1)) if d == 1 else None
        pool.append((len(_divisors(v)), abs(x), x, v))
    pool.sort()
    chosen = pool[:d]
    points = [c[2] for c in chosen]
    options = []
    for _, _, x, v in chosen:
        cap = sum(b * abs(x) ** j for j, b in enumerate(bounds))
        divs = [t for t in _divisors(v) if t <= cap]
        options.append([s * t for t in divs for s in (1, -1)])
    basis = _lagrange_basis(points)
    for values in product(*options):
        r = [Fraction(0)] * d
        for i, (x, v) in enumerate(zip(points, values)):
            target = v - x ** d
            if target:
                for t, c in enumerate(basis[i]):
                    r[t] += target * c
        if any(c.denominator != 1 for c in r):
            continue
        coeffs = [int(c) for c in r]
        if any(abs(c) > bounds[j] for j, c in enumerate(coeffs)):
            continue
        g = IntPolynomial(tuple(coeffs) + (1,))
        if p.exact_quotient(g) is not None:
            return g
    return None


def is_irreducible_over_Z(p: IntPolynomial, primes: Sequence[int] = SMALL_PRIMES) -> IrreducibilityVerdict:
    """Decide irreducibility over Z of a monic integer polynomial."""
    if not p.is_monic() or p.degree < 1:
        raise ValueError("irreducibility test requires a monic polynomial of degree >= 1")
    n = p.degree
    if n == 1:
        return IrreducibilityVerdict(True, "degree one")
    if p.coefficients[0] == 0:
        return IrreducibilityVerdict(False, "zero constant term", factor=IntPolynomial.x())
    g = gcd_over_q(p, p.derivative())
    if len(g) > 1:
        # a monic rational factor of a monic integer polynomial is integral
        factor = IntPolynomial(tuple(int(c) for c in g))
        return IrreducibilityVerdict(False, "repeated factor (gcd with derivative)", factor=factor)

    allowed = set(range(1, n // 2 + 1))
    used = []
    for q in primes:
        degrees = factor_degrees_mod(p, q)
        if degrees is None:
            continue
        used.append(q)
        if degrees == [n]:
            return IrreducibilityVerdict(True, f"irreducible modulo {q}", prime=q)
        allowed &= _subset_sums(degrees)
        if not allowed:
            break

    for d in sorted(allowed):
        factor = _search_monic_factor(p, d)
        if factor is not None:
            return IrreducibilityVerdict(False, f"explicit factor of degree {d}", factor=factor)
    searched = sorted(allowed)
    return IrreducibilityVerdict(
        True,
        "exhausted factor search over degrees "
        f"{searched} within Mignotte bounds; other degrees excluded by factorization "
        f"patterns modulo {used}",
    )

"""Exact polynomial algebra in (z, nu, b) over the rationals.

``ExactPoly`` stores a sparse map from exponent triples (deg_z, deg_nu,
deg_b) to ``fractions.Fraction`` coefficients.  Viewed the other way round
it is a polynomial in (z, nu) whose coefficients are univariate
polynomials in b, see :meth:`ExactPoly.by_z_nu`.

On top of the ring operations the module provides Sylvester resultants
with respect to nu (fraction-free Bareiss elimination), Sturm chains for
univariate polynomials in z, and the certificate/report builders that
reproduce the eliminants of the sign conditions R and P.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import DegeneratePolynomialError, ZeroPolynomialError

VARS = ("z", "nu", "b")
_IDX = {v: i for i, v in enumerate(VARS)}

Monomial = tuple[int, int, int]


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # exact binary value would silently leak rounding into exact work
        raise TypeError("use Fraction or int, not float, in exact polynomials")
    return Fraction(x)


class ExactPoly:
    """Immutable sparse polynomial in z, nu, b with rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict[Monomial, Fraction] = {}
        for mono, c in (terms or {}).items():
            if len(mono) != 3 or any(e < 0 for e in mono):
                raise ValueError(f"bad monomial {mono!r}")
            c = _frac(c)
            if c:
                key = tuple(int(e) for e in mono)
                clean[key] = clean.get(key, Fraction(0)) + c
                if not clean[key]:
                    del clean[key]
        self._terms = clean

    # -- constructors -----------------------------------------------------

    @classmethod
    def const(cls, c) -> "ExactPoly":
        return cls({(0, 0, 0): c})

    @classmethod
    def var(cls, name: str) -> "ExactPoly":
        mono = [0, 0, 0]
        mono[_IDX[name]] = 1
        return cls({tuple(mono): 1})

    @classmethod
    def from_univariate(cls, coeffs: Sequence, var: str = "z") -> "ExactPoly":
        """Build from low-to-high coefficients in a single variable."""
        i = _IDX[var]
        terms = {}
        for d, c in enumerate(coeffs):
            mono = [0, 0, 0]
            mono[i] = d
            terms[tuple(mono)] = c
        return cls(terms)

    @staticmethod
    def _coerce(other) -> "ExactPoly":
        if isinstance(other, ExactPoly):
            return other
        return ExactPoly.const(other)

    # -- basic protocol ---------------------------------------------------

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, ExactPoly)):
            return self._terms == self._coerce(other)._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return ExactPoly(out)

    __radd__ = __add__

    def __neg__(self):
        return ExactPoly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict[Monomial, Fraction] = {}
        for (a1, a2, a3), c in self._terms.items():
            for (b1, b2, b3), d in other._terms.items():
                m = (a1 + b1, a2 + b2, a3 + b3)
                out[m] = out.get(m, Fraction(0)) + c * d
        return ExactPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power")
        out = ExactPoly.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- structure --------------------------------------------------------

    def degree(self, var: str) -> int:
        """Degree in ``var``; -1 for the zero polynomial."""
        i = _IDX[var]
        return max((m[i] for m in self._terms), default=-1)

    def lowest_degree(self, var: str) -> int:
        i = _IDX[var]
        return min((m[i] for m in self._terms), default=-1)

    def coeff(self, var: str, power: int) -> "ExactPoly":
        """Coefficient of var**power, as a polynomial in the other variables."""
        i = _IDX[var]
        out = {}
        for m, c in self._terms.items():
            if m[i] == power:
                mm = list(m)
                mm[i] = 0
                out[tuple(mm)] = c
        return ExactPoly(out)

    def variables(self) -> set[str]:
        return {v for v in VARS if self.degree(v) > 0}

    def by_z_nu(self) -> dict[tuple[int, int], tuple[tuple[int, ...], int]]:
        """(deg_z, deg_nu) -> (integer b-coefficients low-to-high, common denominator)."""
        groups: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j, l), c in self._terms.items():
            groups.setdefault((i, j), {})[l] = c
        out = {}
        for key, bc in sorted(groups.items()):
            den = 1
            for c in bc.values():
                den = den * c.denominator // _gcd(den, c.denominator)
            top = max(bc)
            nums = tuple(int(bc.get(l, 0) * den) for l in range(top + 1))
            out[key] = (nums, den)
        return out

    def univariate(self, var: str = "z") -> list[Fraction]:
        """Low-to-high coefficients; the polynomial must involve only ``var``."""
        i = _IDX[var]
        for m in self._terms:
            if any(e for k, e in enumerate(m) if k != i):
                raise ValueError(f"polynomial is not univariate in {var}: {self}")
        d = self.degree(var)
        out = [Fraction(0)] * (d + 1)
        for m, c in self._terms.items():
            out[m[i]] = c
        return out

    # -- evaluation and substitution ----------------------------------------

    def subs(self, **values) -> "ExactPoly":
        """Substitute numbers or ExactPolys for any of z, nu, b."""
        for k in values:
            if k not in _IDX:
                raise KeyError(k)
        powers: dict[tuple[str, int], ExactPoly] = {}

        def pw(name, e):
            key = (name, e)
            if key not in powers:
                powers[key] = self._coerce(values[name]) ** e
            return powers[key]

        out = ExactPoly()
        for m, c in self._terms.items():
            term = ExactPoly.const(c)
            keep = [0, 0, 0]
            for name, e in zip(VARS, m):
                if e and name in values:
                    term = term * pw(name, e)
                else:
                    keep[_IDX[name]] = e
            out = out + term * ExactPoly({tuple(keep): 1})
        return out

    def evaluate(self, z=0, nu=0, b=0) -> Fraction:
        env = (_frac(z), _frac(nu), _frac(b))
        total = Fraction(0)
        for m, c in self._terms.items():
            total += c * env[0] ** m[0] * env[1] ** m[1] * env[2] ** m[2]
        return total

    def evaluate_float(self, z: float, nu: float, b: float) -> float:
        return float(sum(float(c) * z ** m[0] * nu ** m[1] * b ** m[2] for m, c in self._terms.items()))

    def diff(self, var: str) -> "ExactPoly":
        i = _IDX[var]
        out = {}
        for m, c in self._terms.items():
            if m[i]:
                mm = list(m)
                mm[i] -= 1
                out[tuple(mm)] = c * m[i]
        return ExactPoly(out)

    # -- division -----------------------------------------------------------

    def leading(self) -> tuple[Monomial, Fraction]:
        """Lex-leading term with z > nu > b."""
        if not self._terms:
            raise ZeroPolynomialError("zero polynomial has no leading term")
        m = max(self._terms)
        return m, self._terms[m]

    def divmod(self, divisor: "ExactPoly") -> tuple["ExactPoly", "ExactPoly"]:
        """Multivariate division by a single divisor in lex order.

        Returns (q, r) with self == q*divisor + r and no term of r divisible
        by the leading monomial of the divisor.  When the division is exact
        the remainder is zero regardless of the monomial order.
        """
        divisor = self._coerce(divisor)
        lm, lc = divisor.leading()
        q: dict[Monomial, Fraction] = {}
        r: dict[Monomial, Fraction] = {}
        p = dict(self._terms)
        while p:
            m = max(p)
            c = p[m]
            if all(a >= e for a, e in zip(m, lm)):
                tm = tuple(a - e for a, e in zip(m, lm))
                tc = c / lc
                q[tm] = q.get(tm, Fraction(0)) + tc
                for dm, dc in divisor._terms.items():
                    k = (tm[0] + dm[0], tm[1] + dm[1], tm[2] + dm[2])
                    v = p.get(k, Fraction(0)) - tc * dc
                    if v:
                        p[k] = v
                    else:
                        p.pop(k, None)
            else:
                r[m] = c
                del p[m]
        return ExactPoly(q), ExactPoly(r)

    def exact_div(self, divisor: "ExactPoly") -> "ExactPoly":
        q, r = self.divmod(divisor)
        if r:
            raise ArithmeticError(f"inexact division, remainder {r}")
        return q

    # -- printing -----------------------------------------------------------

    def __repr__(self):
        return f"ExactPoly({self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m in sorted(self._terms, reverse=True):
            c = self._terms[m]
            mono = "*".join(
                (name if e == 1 else f"{name}^{e}") for name, e in zip(VARS, m) if e
            )
            if mono:
                if c == 1:
                    s = mono
                elif c == -1:
                    s = "-" + mono
                else:
                    s = f"{c}*{mono}"
            else:
                s = str(c)
            parts.append(s)
        return " + ".join(parts).replace("+ -", "- ")


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


Z = ExactPoly.var("z")
NU = ExactPoly.var("nu")
BV = ExactPoly.var("b")
ONE = ExactPoly.const(1)


# ---------------------------------------------------------------------------
# the printed polynomials


def poly_R() -> ExactPoly:
    """R with (1-z)^(b-1) replaced by nu."""
    return NU * ((BV - 1) * Z**2 + (3 - BV) * Z - 2) - (BV + 1) * Z + 2


def poly_Rp() -> ExactPoly:
    """R' with (1-z)^(b-1) replaced by nu."""
    return (BV + 1) * NU * ((BV - 1) * Z + 1) - (BV + 1)


def poly_P() -> ExactPoly:
    """P as a quadratic in nu."""
    b = BV
    c2 = 2 * (b - 1) ** 2 * Z**2 - 2 * (b**2 - 5 * b + 2) * Z - 6 * b + 2
    c1 = 2 * b * (b - 1) ** 2 * Z**2 - 4 * (3 * b - 1) * Z + 12 * b - 4
    c0 = 2 * b * (b + 1) * Z - 6 * b + 2
    return c2 * NU**2 + c1 * NU + c0


def poly_Pp_scaled() -> ExactPoly:
    """(1-z) P' as a quadratic in nu."""
    b = BV
    c2 = -4 * b * (b - 1) ** 2 * Z**2 + 2 * b * (2 * b**2 - 9 * b + 5) * Z + 10 * b**2 - 6 * b
    c1 = -2 * b * (b + 1) * (b - 1) ** 2 * Z**2 + 4 * b**2 * (b + 1) * Z - 12 * b**2 + 4 * b
    c0 = -2 * b * (b + 1) * Z + 2 * b * (b + 1)
    return c2 * NU**2 + c1 * NU + c0


def poly_l() -> ExactPoly:
    """l(z) = (b-1)^3 z^2 + (12b - 4)(1 - z)."""
    return (BV - 1) ** 3 * Z**2 + (12 * BV - 4) * (1 - Z)


# ---------------------------------------------------------------------------
# resultants


def sylvester_matrix(p: ExactPoly, q: ExactPoly, var: str = "nu") -> list[list[ExactPoly]]:
    """Sylvester matrix of p and q with respect to ``var``."""
    m, n = p.degree(var), q.degree(var)
    size = m + n
    pc = [p.coeff(var, m - i) for i in range(m + 1)]
    qc = [q.coeff(var, n - i) for i in range(n + 1)]
    zero = ExactPoly()
    rows = []
    for i in range(n):
        rows.append([zero] * i + pc + [zero] * (size - m - 1 - i))
    for i in range(m):
        rows.append([zero] * i + qc + [zero] * (size - n - 1 - i))
    return rows


def bareiss_det(mat: list[list[ExactPoly]]) -> ExactPoly:
    """Determinant by fraction-free Bareiss elimination with exact division."""
    n = len(mat)
    if n == 0:
        return ExactPoly.const(1)
    a = [list(row) for row in mat]
    sign = 1
    prev = ExactPoly.const(1)
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not a[i][k].is_zero()), None)
            if swap is None:
                return ExactPoly()
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]).exact_div(prev)
        prev = a[k][k]
    return a[n - 1][n - 1] * sign


def resultant(p: ExactPoly, q: ExactPoly, var: str = "nu") -> ExactPoly:
    """Sylvester resultant Res_var(p, q), with leading coefficients as given."""
    if p.is_zero() or q.is_zero():
        raise DegeneratePolynomialError("resultant of an identically zero polynomial")
    if p.degree(var) == 0 and q.degree(var) == 0:
        return ExactPoly.const(1)
    return bareiss_det(sylvester_matrix(p, q, var))


def resultant_nu(p: ExactPoly, q: ExactPoly) -> ExactPoly:
    return resultant(p, q, "nu")


# ---------------------------------------------------------------------------
# univariate helpers and Sturm chains


def _trim(c: list[Fraction]) -> list[Fraction]:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _as_coeffs(poly) -> list[Fraction]:
    if isinstance(poly, ExactPoly):
        return _trim(poly.univariate("z") if not poly.is_zero() else [])
    return _trim([_frac(c) for c in poly])


def u_eval(c: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for a in reversed(c):
        acc = acc * x + a
    return acc


def u_deriv(c: Sequence[Fraction]) -> list[Fraction]:
    return _trim([c[i] * i for i in range(1, len(c))])


def u_divmod(num: Sequence[Fraction], den: Sequence[Fraction]) -> tuple[list[Fraction], list[Fraction]]:
    num, den = _trim(num), _trim(den)
    if not den:
        raise ZeroDivisionError("division by zero polynomial")
    q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
    r = list(num)
    while len(r) >= len(den) and r:
        shift = len(r) - len(den)
        t = r[-1] / den[-1]
        q[shift] = t
        for i, d in enumerate(den):
            r[i + shift] -= t * d
        r = _trim(r[:-1]) if r[-1] == 0 else _trim(r)
    return _trim(q), r


def u_gcd(a: Sequence[Fraction], b: Sequence[Fraction]) -> list[Fraction]:
    a, b = _trim(a), _trim(b)
    while b:
        _, r = u_divmod(a, b)
        a, b = b, r
    if not a:
        return a
    return [x / a[-1] for x in a]


@dataclass
class SturmChain:
    """Sturm sequence of the square-free part of a univariate polynomial."""

    polys: list[list[Fraction]]
    lo: Fraction | None = None
    hi: Fraction | None = None

    def variations(self, x: Fraction) -> int:
        signs = [s for s in (u_eval(p, x) for p in self.polys) if s != 0]
        return sum(1 for s, t in zip(signs, signs[1:]) if (s > 0) != (t > 0))


def sturm_chain(poly) -> SturmChain:
    c = _as_coeffs(poly)
    if not c:
        raise ZeroPolynomialError("Sturm chain of the zero polynomial")
    g = u_gcd(c, u_deriv(c))
    sqf = u_divmod(c, g)[0] if len(g) > 1 else c
    chain = [sqf, u_deriv(sqf)]
    while chain[-1]:
        _, r = u_divmod(chain[-2], chain[-1])
        chain.append([-x for x in r])
    return SturmChain(polys=[p for p in chain if p])


def sturm_count(poly, lo, hi) -> int:
    """Number of distinct real roots of ``poly`` in the half-open interval (lo, hi]."""
    lo, hi = _frac(lo), _frac(hi)
    if not lo < hi:
        raise ValueError("need lo < hi")
    ch = sturm_chain(poly)
    ch.lo, ch.hi = lo, hi
    return ch.variations(lo) - ch.variations(hi)


def count_open_unit_roots(poly) -> int:
    """Distinct real roots in the open interval (0, 1)."""
    c = _as_coeffs(poly)
    n = sturm_count(c, 0, 1)
    if u_eval(c, Fraction(1)) == 0:
        n -= 1
    return n


# ---------------------------------------------------------------------------
# reports


def _fstr(x: Fraction) -> str:
    return str(Fraction(x))


def parse_fraction(text) -> Fraction:
    """'3/2', '2', '2.5' -> Fraction (decimal strings are read exactly)."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(str(text))
    return Fraction(str(text).strip())


@dataclass
class FactorReport:
    resultant: ExactPoly
    z_power: int
    quotient: ExactPoly
    l_divides: bool
    cofactor: ExactPoly
    remainder: ExactPoly

    def to_dict(self) -> dict:
        return {
            "resultant": str(self.resultant),
            "z_power": self.z_power,
            "quotient": str(self.quotient),
            "l_divides": self.l_divides,
            "cofactor": str(self.cofactor),
            "remainder": str(self.remainder),
        }


def strip_z_power(poly: ExactPoly) -> tuple[int, ExactPoly]:
    """Divide out the largest power of z; returns (power, quotient)."""
    e = poly.lowest_degree("z")
    if e <= 0:
        return max(e, 0), poly
    return e, poly.exact_div(Z**e)


def eliminant_R() -> ExactPoly:
    return resultant_nu(poly_R(), poly_Rp())


def eliminant_P() -> ExactPoly:
    return resultant_nu(poly_P(), poly_Pp_scaled())


def eliminant_P_report() -> FactorReport:
    """Res_nu(P, (1-z)P'), its z-power, and its factorization against l(z)."""
    res = eliminant_P()
    e, quo = strip_z_power(res)
    cof, rem = quo.divmod(poly_l())
    return FactorReport(
        resultant=res, z_power=e, quotient=quo, l_divides=rem.is_zero(), cofactor=cof, remainder=rem
    )


@dataclass
class CertificateReport:
    pair: str
    b: Fraction
    eliminant: list[Fraction]
    root_count: int
    verdict: str

    def to_dict(self) -> dict:
        return {
            "pair": self.pair,
            "b": _fstr(self.b),
            "eliminant_coefficients": [_fstr(c) for c in self.eliminant],
            "root_count": self.root_count,
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


_PAIRS = {"R-pair": eliminant_R, "P-pair": eliminant_P}


def certify_no_common_roots(which: str, b) -> CertificateReport:
    """Certify that the pair has no common root with z in (0, 1) at rational b > 1.

    The eliminant is specialised at b and its distinct real roots in the
    open interval (0, 1) are counted with a Sturm chain; PASS iff none.
    """
    if which not in _PAIRS:
        raise KeyError(f"unknown pair {which!r}; expected one of {sorted(_PAIRS)}")
    bq = parse_fraction(b)
    if not bq > 1:
        raise ValueError(f"b must be > 1 (got {bq})")
    elim = _PAIRS[which]().subs(b=bq)
    coeffs = _as_coeffs(elim)
    n = count_open_unit_roots(coeffs)
    return CertificateReport(
        pair=which, b=bq, eliminant=coeffs, root_count=n, verdict="PASS" if n == 0 else "FAIL"
    )


# ---------------------------------------------------------------------------
# identity expansions for integer b


def kernel_polys(b: int) -> dict[str, ExactPoly]:
    """A, B, f and their formal z-derivatives as polynomials in z for integer b >= 2."""
    if int(b) != b or b < 2:
        raise ValueError("identity expansions need integer b >= 2")
    b = int(b)
    w = (1 - Z) ** (b - 1)
    a = 2 * w * (1 + (b - 1) * Z) - 2
    bb = a + b * (b - 1) * Z**2 * w
    f = 2 - 2 * (1 - Z) ** b - (b + 1) * Z - (b - 1) * Z * (1 - Z) ** b
    return {"A": a, "B": bb, "f": f, "Ap": a.diff("z"), "Bp": bb.diff("z"), "fp": f.diff("z")}


def h1_combination(b: int) -> ExactPoly:
    k = kernel_polys(b)
    return 2 * (1 - Z) * k["Ap"] * k["f"] + (b - 1) * k["A"] * k["f"] - (1 - Z) * k["A"] * k["fp"]


def h2_combination(b: int) -> ExactPoly:
    k = kernel_polys(b)
    half = Fraction(1, 2)
    return half * Z * (1 - Z) * k["Bp"] + half * (b - 1) * Z * k["B"] - (1 - Z) * k["B"]


def substitute_integer_b(poly: ExactPoly, b: int) -> ExactPoly:
    """Set b to an integer and nu to the polynomial (1-z)^(b-1)."""
    return poly.subs(b=b, nu=(1 - Z) ** (int(b) - 1))


@dataclass
class IdentityCheck:
    b: int
    which: str
    difference: ExactPoly

    @property
    def verdict(self) -> str:
        return "PASS" if self.difference.is_zero() else "FAIL"

    def to_dict(self) -> dict:
        return {"b": self.b, "which": self.which, "verdict": self.verdict, "difference": str(self.difference)}


@dataclass
class IdentityReport:
    checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "PASS" if all(c.verdict == "PASS" for c in self.checks) else "FAIL"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "checks": [c.to_dict() for c in self.checks]}


def verify_identity_expansions(
    b_values: Iterable[int] = (2, 3, 4, 5),
    r_poly: ExactPoly | None = None,
    p_poly: ExactPoly | None = None,
) -> IdentityReport:
    """Compare the (H1)/(H2) combinations with the nu-polynomials for integer b.

    ``r_poly``/``p_poly`` override the stored polynomials (used as a
    negative-control hook).
    """
    r_poly = poly_R() if r_poly is None else r_poly
    p_poly = poly_P() if p_poly is None else p_poly
    rep = IdentityReport()
    for b in b_values:
        rep.checks.append(IdentityCheck(b, "H2/R", h2_combination(b) - substitute_integer_b(r_poly, b)))
        rep.checks.append(IdentityCheck(b, "H1/P", h1_combination(b) - substitute_integer_b(p_poly, b)))
    return rep


# ---------------------------------------------------------------------------
# Taylor coefficients at z = 0


def binomial_series(alpha: Fraction, order: int) -> ExactPoly:
    """(1 - z)^alpha truncated after z^order, exact for rational alpha."""
    coef = Fraction(1)
    out = {}
    for n in range(order + 1):
        out[(n, 0, 0)] = coef
        coef = coef * (n - alpha) / (n + 1)
    return ExactPoly(out)


def taylor_coefficients(poly: ExactPoly, b, order: int) -> list[Fraction]:
    """Taylor coefficients in z up to ``order`` with nu = (1-z)^(b-1) at rational b."""
    bq = parse_fraction(b)
    nu = binomial_series(bq - 1, order)
    ser = poly.subs(b=bq, nu=nu)
    coeffs = [Fraction(0)] * (order + 1)
    for (i, _, _), c in ser.terms.items():
        if i <= order:
            coeffs[i] = c
    return coeffs

"""Superfields: polynomials in even coordinates with Grassmann coefficients.

A superfield on a chart is stored as a sparse map from even-exponent tuples
to :class:`~supertransport.grassmann.GrassmannNumber` coefficients.  The odd
coordinates of the chart and the parametrizing odd constants both live
inside the coefficients, as generators of the ambient algebra.  Evaluation
at even Grassmann arguments is plain polynomial substitution, which for
polynomial data coincides with the canonical Taylor-in-the-soul extension
of the body function.
"""

from __future__ import annotations

from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from . import scalars
from .errors import ChartMismatchError, ParityError
from .grassmann import COORDINATE, GeneratorSet, GrassmannNumber, grassmann_from_json

Exps = Tuple[int, ...]


class Chart:
    """A coordinate box of a parametrized supermanifold.

    Carries ``m`` even coordinate names, ``n`` odd coordinate names (tagged
    ``"coordinate"`` in the algebra) and the ambient generator set, whose
    remaining generators are the parametrizing odd constants.
    """

    def __init__(self, even: Sequence[str], odd: Sequence[str],
                 sigmas: Sequence[str] = (), backend: str = "exact",
                 algebra: Optional[GeneratorSet] = None):
        self.even = tuple(even)
        self.odd = tuple(odd)
        if algebra is None:
            names = tuple(odd) + tuple(sigmas)
            tags = (COORDINATE,) * len(odd) + ("parametrizing",) * len(sigmas)
            algebra = GeneratorSet(names, tags, backend=backend)
        else:
            for o in odd:
                if algebra.tags[algebra.index[o]] != COORDINATE:
                    raise ValueError(f"odd coordinate {o!r} not coordinate-tagged")
        if set(self.even) & set(algebra.names):
            raise ValueError("even and odd coordinate names must be disjoint")
        self.algebra = algebra
        self.sigmas = tuple(n for n, t in zip(algebra.names, algebra.tags)
                            if t != COORDINATE)

    @property
    def backend(self) -> str:
        return self.algebra.backend

    @property
    def coords(self) -> Tuple[str, ...]:
        return self.even + self.odd

    def coord_parity(self, name: str) -> int:
        if name in self.even:
            return 0
        if name in self.odd:
            return 1
        raise KeyError(name)

    # -- superfield constructors -------------------------------------------
    def zero_field(self) -> "Superfield":
        return Superfield(self, {})

    def scalar_field(self, c) -> "Superfield":
        return self.field_from_grassmann(self.algebra.scalar(c))

    def one_field(self) -> "Superfield":
        return self.scalar_field(1)

    def field_from_grassmann(self, g: GrassmannNumber) -> "Superfield":
        if g.is_zero():
            return self.zero_field()
        return Superfield(self, {(0,) * len(self.even): g})

    def var(self, name: str) -> "Superfield":
        """The coordinate function x^name or theta^name as a superfield."""
        if name in self.even:
            exps = tuple(1 if v == name else 0 for v in self.even)
            return Superfield(self, {exps: self.algebra.one()})
        return self.field_from_grassmann(self.algebra.gen(name))

    def __repr__(self):
        return (f"Chart(even={list(self.even)}, odd={list(self.odd)}, "
                f"sigmas={list(self.sigmas)})")


def _exps_mul(a: Exps, b: Exps) -> Exps:
    return tuple(x + y for x, y in zip(a, b))


class Superfield:
    """Polynomial function of the chart coordinates, Grassmann-valued."""

    __slots__ = ("chart", "terms")

    def __init__(self, chart: Chart, terms: Dict[Exps, GrassmannNumber]):
        self.chart = chart
        self.terms = terms

    def _check(self, other: "Superfield"):
        if self.chart is not other.chart:
            if (self.chart.even != other.chart.even
                    or self.chart.algebra is not other.chart.algebra):
                raise ChartMismatchError("superfields on incompatible charts")

    def is_zero(self) -> bool:
        return not self.terms

    def copy_onto(self, chart: Chart) -> "Superfield":
        self_chart = self.chart
        if self_chart.even != chart.even or self_chart.algebra is not chart.algebra:
            raise ChartMismatchError("cannot rehome superfield")
        return Superfield(chart, self.terms)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)) or not isinstance(other, Superfield):
            if isinstance(other, GrassmannNumber):
                other = self.chart.field_from_grassmann(other)
            else:
                try:
                    other = self.chart.scalar_field(other)
                except TypeError:
                    return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for e, g in other.terms.items():
            s = terms.get(e)
            s = g if s is None else s + g
            if s.is_zero():
                terms.pop(e, None)
            else:
                terms[e] = s
        return Superfield(self.chart, terms)

    __radd__ = __add__

    def __neg__(self):
        return Superfield(self.chart, {e: -g for e, g in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, GrassmannNumber):
            other = self.chart.field_from_grassmann(other)
        elif not isinstance(other, Superfield):
            other = self.chart.scalar_field(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GrassmannNumber):
            other = self.chart.field_from_grassmann(other)
        elif not isinstance(other, Superfield):
            try:
                other = self.chart.scalar_field(other)
            except TypeError:
                return NotImplemented
        self._check(other)
        out: Dict[Exps, GrassmannNumber] = {}
        for ea, ga in self.terms.items():
            for eb, gb in other.terms.items():
                g = ga * gb
                if g.is_zero():
                    continue
                e = _exps_mul(ea, eb)
                s = out.get(e)
                s = g if s is None else s + g
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        return Superfield(self.chart, out)

    def __rmul__(self, other):
        if isinstance(other, (int, float)) or isinstance(other, GrassmannNumber):
            return self * other
        try:
            return self * self.chart.scalar_field(other)
        except TypeError:
            return NotImplemented

    def __pow__(self, k: int):
        out = self.chart.one_field()
        for _ in range(int(k)):
            out = out * self
        return out

    def mul_cap(self, other: "Superfield", cap: Optional[int]) -> "Superfield":
        """Product with terms above the even-degree cap dropped early."""
        if cap is None:
            return self * other
        self._check(other)
        out: Dict[Exps, GrassmannNumber] = {}
        for ea, ga in self.terms.items():
            da = sum(ea)
            if da > cap:
                continue
            for eb, gb in other.terms.items():
                if da + sum(eb) > cap:
                    continue
                g = ga * gb
                if g.is_zero():
                    continue
                e = _exps_mul(ea, eb)
                s = out.get(e)
                s = g if s is None else s + g
                if s.is_zero():
                    out.pop(e, None)
                else:
                    out[e] = s
        return Superfield(self.chart, out)

    # -- grading --------------------------------------------------------------
    def parity(self) -> Optional[int]:
        ps = {g.parity() for g in self.terms.values()}
        if not ps:
            return 0
        if None in ps or len(ps) > 1:
            return None
        return ps.pop()

    def parity_part(self, p: int) -> "Superfield":
        terms = {}
        for e, g in self.terms.items():
            gp = g.parity_part(p)
            if not gp.is_zero():
                terms[e] = gp
        return Superfield(self.chart, terms)

    def parity_parts(self):
        """Yield the nonzero (parity, homogeneous part) pieces."""
        for p in (0, 1):
            part = self.parity_part(p)
            if not part.is_zero():
                yield p, part

    # -- calculus ---------------------------------------------------------------
    def dx(self, name: str) -> "Superfield":
        i = self.chart.even.index(name)
        out: Dict[Exps, GrassmannNumber] = {}
        for e, g in self.terms.items():
            if e[i] == 0:
                continue
            e2 = e[:i] + (e[i] - 1,) + e[i + 1:]
            h = g * e[i]
            s = out.get(e2)
            s = h if s is None else s + h
            if not s.is_zero():
                out[e2] = s
            else:
                out.pop(e2, None)
        return Superfield(self.chart, out)

    def dtheta(self, name: str) -> "Superfield":
        """Left derivative along an odd generator."""
        alg = self.chart.algebra
        bit = 1 << alg.index[name]
        out: Dict[Exps, GrassmannNumber] = {}
        for e, g in self.terms.items():
            terms = {}
            for mask, c in g.terms.items():
                if not mask & bit:
                    continue
                below = mask & (bit - 1)
                terms[mask ^ bit] = -c if below.bit_count() & 1 else c
            if terms:
                out[e] = GrassmannNumber(alg, terms)
        return Superfield(self.chart, out)

    # -- substitution -------------------------------------------------------------
    def subs(self, even: Mapping[str, "Superfield"] = (),
             odd: Mapping[str, "Superfield"] = (),
             chart: Optional[Chart] = None) -> "Superfield":
        """Substitute coordinate functions, as an algebra homomorphism.

        ``even`` maps even coordinate names to even superfields, ``odd``
        maps odd generator names to odd superfields.  Unsubstituted
        coordinates must exist on the target chart.
        """
        even = dict(even) if not isinstance(even, dict) else even
        odd = dict(odd) if not isinstance(odd, dict) else odd
        tgt = chart
        for v in list(even.values()) + list(odd.values()):
            if tgt is None:
                tgt = v.chart
        if tgt is None:
            tgt = self.chart
        for name, v in even.items():
            if v.parity() != 0:
                raise ParityError(f"even substitution for {name!r} is not even")
        for name, v in odd.items():
            if not v.is_zero() and v.parity() != 1:
                raise ParityError(f"odd substitution for {name!r} is not odd")
        alg = self.chart.algebra
        out = tgt.zero_field()
        for e, g in self.terms.items():
            # polynomial part
            poly = tgt.one_field()
            for i, k in enumerate(e):
                if k == 0:
                    continue
                name = self.chart.even[i]
                base = even.get(name)
                if base is None:
                    base = tgt.var(name)
                poly = poly * base ** k
            # grassmann part, generator by generator in ascending order
            for mask, c in g.terms.items():
                fac = tgt.scalar_field(1) * _coerce_scalar(c, self.chart, tgt)
                for i in range(alg.n_generators):
                    if not mask >> i & 1:
                        continue
                    name = alg.names[i]
                    img = odd.get(name)
                    if img is None:
                        img = tgt.field_from_grassmann(tgt.algebra.gen(name))
                    fac = fac * img
                out = out + poly * fac
        return out

    def eval(self, even_args: Mapping[str, object] = (),
             odd_args: Mapping[str, GrassmannNumber] = ()) -> GrassmannNumber:
        """Evaluate at even Grassmann numbers / odd Grassmann numbers.

        Arities are free: unsubstituted odd generators remain symbolic and
        unsubstituted even variables are an error.
        """
        even_args = dict(even_args) if not isinstance(even_args, dict) else even_args
        odd_args = dict(odd_args) if not isinstance(odd_args, dict) else odd_args
        alg = self.chart.algebra
        tgt = next((v.algebra for v in odd_args.values()
                    if isinstance(v, GrassmannNumber)), None)
        if tgt is None:
            tgt = next((v.algebra for v in even_args.values()
                        if isinstance(v, GrassmannNumber)), alg)
        out = tgt.zero()
        for e, g in self.terms.items():
            val = tgt.one()
            for i, k in enumerate(e):
                if k == 0:
                    continue
                name = self.chart.even[i]
                if name not in even_args:
                    raise KeyError(f"no value for even coordinate {name!r}")
                a = even_args[name]
                if not isinstance(a, GrassmannNumber):
                    a = tgt.scalar(a)
                if a.parity() not in (0,):
                    raise ParityError(f"value for {name!r} must be even")
                val = val * a ** k
            for mask, c in g.terms.items():
                fac = tgt.scalar(1) * c
                ok = True
                for i in range(alg.n_generators):
                    if not mask >> i & 1:
                        continue
                    name = alg.names[i]
                    if name in odd_args:
                        v = odd_args[name]
                        if v.parity() not in (1,) and not v.is_zero():
                            raise ParityError(f"value for {name!r} must be odd")
                        fac = fac * v
                    else:
                        fac = fac * tgt.gen(name)
                    if fac.is_zero():
                        ok = False
                        break
                if ok:
                    out = out + val * fac
        return out

    # -- misc ------------------------------------------------------------------
    def body_polynomial(self) -> "Superfield":
        """Strip all odd generators (the sigma- and theta-soul)."""
        terms = {}
        for e, g in self.terms.items():
            b = g.body()
            if not scalars.is_zero(b):
                terms[e] = self.chart.algebra.scalar(b)
        return Superfield(self.chart, terms)

    def xdegree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def truncate_xdegree(self, cap: int) -> "Superfield":
        return Superfield(self.chart,
                          {e: g for e, g in self.terms.items() if sum(e) <= cap})

    def max_abs(self) -> float:
        return max((g.max_abs() for g in self.terms.values()), default=0.0)

    def to_json(self) -> dict:
        out = []
        for e in sorted(self.terms):
            out.append({"exps": {v: k for v, k in zip(self.chart.even, e) if k},
                        "value": self.terms[e].to_json()})
        return {"terms": out}

    def __eq__(self, other):
        if isinstance(other, (int, float, GrassmannNumber)):
            return (self - other).is_zero()
        if not isinstance(other, Superfield):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("Superfield is unhashable")

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for e in sorted(self.terms):
            mono = "*".join(f"{v}^{k}" if k > 1 else v
                            for v, k in zip(self.chart.even, e) if k)
            g = repr(self.terms[e])
            bits.append(f"({g})*{mono}" if mono else f"({g})")
        return " + ".join(bits)


def _coerce_scalar(c, src: Chart, tgt: Chart):
    if src.backend == tgt.backend:
        return tgt.algebra.scalar(c)
    return tgt.algebra.scalar(scalars.coerce(c, tgt.backend))


def superfield_from_json(data: dict, chart: Chart) -> Superfield:
    out = chart.zero_field()
    for t in data["terms"]:
        exps = tuple(t.get("exps", {}).get(v, 0) for v in chart.even)
        g = grassmann_from_json(t["value"], chart.algebra)
        out = out + Superfield(chart, {exps: g})
    return out


def grassmann_extend(body_poly: Superfield, args: Mapping[str, GrassmannNumber]) -> GrassmannNumber:
    """Extension of a body polynomial to even Grassmann arguments.

    For polynomial data this is plain substitution; the terminating
    Taylor-in-the-soul series gives the same value and is used as the
    independent test oracle.
    """
    for name, a in args.items():
        if a.parity() != 0:
            raise ParityError(f"argument {name!r} must be even")
    return body_poly.eval(even_args=dict(args))

"""Finite Grassmann algebras with tagged anticommuting generators.

A :class:`GeneratorSet` fixes an ordered list of odd generators, each tagged
either ``"parametrizing"`` (odd constants of the parameter space) or
``"coordinate"`` (odd coordinates of a chart).  A :class:`GrassmannNumber`
is a sparse sum of monomials in those generators; monomials are encoded as
bitmasks over the generator order, so products reduce to popcount-based
Koszul sign bookkeeping.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

from . import scalars
from .errors import AlgebraMismatchError, NotInvertibleError, ParityError

PARAMETRIZING = "parametrizing"
COORDINATE = "coordinate"

_TAGS = (PARAMETRIZING, COORDINATE)


def merge_sign(mask_a: int, mask_b: int) -> int:
    """Koszul sign for sorting the concatenation of two ascending words.

    Counts, for every generator in b, the generators of a above it; each
    such pair is one transposition of odd symbols.
    """
    swaps = 0
    b = mask_b
    while b:
        low = b & -b
        swaps += (mask_a >> low.bit_length()).bit_count()
        b ^= low
    return -1 if swaps & 1 else 1


_merge_sign = merge_sign


class GeneratorSet:
    """Ordered odd generators with tags; the ambient algebra of everything.

    Parameters
    ----------
    names:
        generator labels, unique, order fixed for the algebra's lifetime.
    tags:
        per-generator tag, ``"parametrizing"`` or ``"coordinate"``; a single
        string applies to all generators.
    backend:
        ``"exact"`` (Fraction / Gaussian rational) or ``"float"``.
    max_generators:
        safety cap on the generator count (basis size is 2**N).
    """

    def __init__(self, names: Sequence[str], tags="parametrizing",
                 backend: str = "exact", max_generators: int = 16):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise ValueError("generator labels must be unique")
        if len(names) > max_generators:
            raise ValueError(
                f"{len(names)} generators exceed the cap {max_generators}")
        if isinstance(tags, str):
            tags = tuple(tags for _ in names)
        else:
            tags = tuple(tags)
        if len(tags) != len(names):
            raise ValueError("one tag per generator required")
        for t in tags:
            if t not in _TAGS:
                raise ValueError(f"unknown tag {t!r}")
        if backend not in ("exact", "float"):
            raise ValueError(f"unknown backend {backend!r}")
        self.names = names
        self.tags = tags
        self.backend = backend
        self.index = {n: i for i, n in enumerate(names)}

    @property
    def n_generators(self) -> int:
        return len(self.names)

    def mask_of(self, names: Iterable[str]) -> int:
        mask = 0
        for n in names:
            bit = 1 << self.index[n]
            if mask & bit:
                return -1  # repeated generator: monomial vanishes
            mask |= bit
        return mask

    def names_of(self, mask: int) -> Tuple[str, ...]:
        return tuple(self.names[i] for i in range(self.n_generators)
                     if mask >> i & 1)

    # -- element constructors ----------------------------------------------
    def zero(self) -> "GrassmannNumber":
        return GrassmannNumber(self, {})

    def one(self) -> "GrassmannNumber":
        return self.scalar(1)

    def scalar(self, c) -> "GrassmannNumber":
        c = scalars.coerce(c, self.backend)
        return GrassmannNumber(self, {} if scalars.is_zero(c) else {0: c})

    def i(self) -> "GrassmannNumber":
        return self.scalar(scalars.imaginary_unit(self.backend))

    def gen(self, name: str) -> "GrassmannNumber":
        one = scalars.coerce(1, self.backend)
        return GrassmannNumber(self, {1 << self.index[name]: one})

    def monomial(self, names: Iterable[str], coef=1) -> "GrassmannNumber":
        mask = self.mask_of(names)
        if mask < 0:
            return self.zero()
        c = scalars.coerce(coef, self.backend)
        return GrassmannNumber(self, {} if scalars.is_zero(c) else {mask: c})

    def __repr__(self):
        return (f"GeneratorSet({list(self.names)!r}, backend={self.backend!r})")


class GrassmannNumber:
    """Element of a finite Grassmann algebra, in canonical sparse form."""

    __slots__ = ("algebra", "terms")

    def __init__(self, algebra: GeneratorSet, terms: Dict[int, object]):
        self.algebra = algebra
        self.terms = terms  # mask -> scalar, zero coefficients never stored

    # -- bookkeeping --------------------------------------------------------
    def _check(self, other: "GrassmannNumber"):
        if self.algebra is not other.algebra:
            raise AlgebraMismatchError("operands from different algebras")

    def is_zero(self) -> bool:
        return not self.terms

    def parity(self) -> Optional[int]:
        """0 or 1 for homogeneous values, None for mixed, 0 for zero."""
        if not self.terms:
            return 0
        ps = {mask.bit_count() & 1 for mask in self.terms}
        return ps.pop() if len(ps) == 1 else None

    def parity_part(self, p: int) -> "GrassmannNumber":
        return GrassmannNumber(self.algebra, {
            m: c for m, c in self.terms.items() if m.bit_count() & 1 == p})

    def assert_parity(self, p: int, what: str = "value"):
        if any(mask.bit_count() & 1 != p for mask in self.terms):
            raise ParityError(f"{what} is not parity-{p} homogeneous")

    def body(self):
        """Scalar part (empty-monomial coefficient)."""
        return self.terms.get(0, scalars.coerce(0, self.algebra.backend))

    def soul(self) -> "GrassmannNumber":
        return GrassmannNumber(self.algebra,
                               {m: c for m, c in self.terms.items() if m})

    # -- ring operations ----------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float, Fraction, scalars.QI, complex)):
            other = self.algebra.scalar(other)
        if not isinstance(other, GrassmannNumber):
            return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            s = terms.get(m)
            s = c if s is None else s + c
            if scalars.is_zero(s):
                terms.pop(m, None)
            else:
                terms[m] = s
        return GrassmannNumber(self.algebra, terms)

    __radd__ = __add__

    def __neg__(self):
        return GrassmannNumber(self.algebra,
                               {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, float, Fraction, scalars.QI, complex)):
            other = self.algebra.scalar(other)
        if not isinstance(other, GrassmannNumber):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, Fraction, scalars.QI, complex)):
            c = scalars.coerce(other, self.algebra.backend)
            if scalars.is_zero(c):
                return self.algebra.zero()
            return GrassmannNumber(self.algebra,
                                   {m: v * c for m, v in self.terms.items()})
        if not isinstance(other, GrassmannNumber):
            return NotImplemented
        self._check(other)
        out: Dict[int, object] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                if ma & mb:
                    continue
                sign = _merge_sign(ma, mb)
                c = ca * cb if sign > 0 else -(ca * cb)
                m = ma | mb
                s = out.get(m)
                s = c if s is None else s + c
                if scalars.is_zero(s):
                    out.pop(m, None)
                else:
                    out[m] = s
        return GrassmannNumber(self.algebra, out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, Fraction, scalars.QI, complex)):
            return self * other  # scalars are central
        return NotImplemented

    def __pow__(self, k: int):
        out = self.algebra.one()
        for _ in range(int(k)):
            out = out * self
        return out

    def inv(self) -> "GrassmannNumber":
        """Exact inverse via the terminating geometric series in the soul.

        Requires an even argument with invertible body.
        """
        if self.parity() != 0:
            raise ParityError("only even elements can be inverted")
        b = self.body()
        if scalars.is_zero(b):
            raise NotInvertibleError("zero body")
        binv = scalars.recip(b)
        n = self.soul() * binv  # nilpotent
        out = self.algebra.one()
        power = self.algebra.one()
        sign = -1
        for _ in range(self.algebra.n_generators // 2 + 1):
            power = power * n
            if power.is_zero():
                break
            out = out + sign * power
            sign = -sign
        return out * binv

    # -- structure maps -----------------------------------------------------
    def substitute(self, mapping: Mapping[str, "GrassmannNumber"],
                   target: Optional[GeneratorSet] = None) -> "GrassmannNumber":
        """Algebra homomorphism replacing generators by odd values.

        Generators absent from ``mapping`` must exist in the target algebra
        under the same name.  Every image must be odd (parity preserving).
        """
        first = next(iter(mapping.values()), None)
        tgt = target if target is not None else (
            first.algebra if first is not None else self.algebra)
        for name, val in mapping.items():
            if val.algebra is not tgt:
                raise AlgebraMismatchError("substitution images disagree on algebra")
            if val.parity() != 1:
                raise ParityError(f"substitution for {name!r} is not odd")
        out = tgt.zero()
        for mask, c in self.terms.items():
            term = tgt.scalar(c)
            for i in range(self.algebra.n_generators):
                if not (mask >> i & 1):
                    continue
                name = self.algebra.names[i]
                term = term * (mapping[name] if name in mapping else tgt.gen(name))
            out = out + term
        return out

    def max_abs(self) -> float:
        return max((scalars.abs_val(c) for c in self.terms.values()), default=0.0)

    # -- conversion / display -----------------------------------------------
    def to_json(self) -> dict:
        out = []
        for mask in sorted(self.terms):
            c = self.terms[mask]
            out.append({"idx": list(self.algebra.names_of(mask)),
                        "coef": _coef_to_json(c)})
        return {"terms": out}

    def __eq__(self, other):
        if isinstance(other, (int, float, Fraction, scalars.QI, complex)):
            other = self.algebra.scalar(other)
        if not isinstance(other, GrassmannNumber):
            return NotImplemented
        return self.algebra is other.algebra and (self - other).is_zero()

    def __hash__(self):
        raise TypeError("GrassmannNumber is unhashable")

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for mask in sorted(self.terms):
            c = self.terms[mask]
            word = "".join(self.algebra.names_of(mask))
            bits.append(f"{c}*{word}" if word else f"{c}")
        return " + ".join(bits)


def _coef_to_json(c):
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, scalars.QI):
        return {"re": str(c.re), "im": str(c.im)}
    if isinstance(c, complex):
        return {"re": c.real, "im": c.imag}
    return c


def coef_from_json(v, backend: str):
    if isinstance(v, dict):
        re = scalars.coerce(v.get("re", 0), backend)
        im = scalars.coerce(v.get("im", 0), backend)
        if backend == "exact":
            return scalars.simplify(scalars.QI(re, im))
        return re + 1j * im
    return scalars.coerce(v, backend)


def grassmann_from_json(data: dict, algebra: GeneratorSet) -> GrassmannNumber:
    out = algebra.zero()
    for t in data["terms"]:
        out = out + algebra.monomial(t["idx"], coef_from_json(t["coef"], algebra.backend))
    return out

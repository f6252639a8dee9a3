"""Scalar coefficient domains.

Two backends are supported throughout the package:

* ``"exact"``  -- rational coefficients (`fractions.Fraction`), extended to
  Gaussian rationals (:class:`QI`) wherever the imaginary unit enters
  (gamma matrices, charge conjugation, the supergravity Lagrangian).
* ``"float"``  -- Python floats / complex, used for numerical ODE
  integration where exactness is impossible anyway.

All algebraic identity checks run on the exact backend so that a residual
of zero means zero.
"""

from __future__ import annotations

from fractions import Fraction


class QI:
    """A Gaussian rational re + im*i with exact Fraction parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return QI(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return QI(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return QI(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return QI(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        n = o.re * o.re + o.im * o.im
        if n == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return QI((self.re * o.re + self.im * o.im) / n,
                  (self.im * o.re - self.re * o.im) / n)

    def __rtruediv__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, k):
        out = QI(1)
        for _ in range(int(k)):
            out = out * self
        return out

    # -- comparisons ------------------------------------------------------
    def __eq__(self, other):
        o = _as_qi(other)
        if o is None:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self):
        return QI(self.re, -self.im)

    def __abs__(self):
        return (float(self.re) ** 2 + float(self.im) ** 2) ** 0.5

    def __repr__(self):
        if self.im == 0:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"


I_EXACT = QI(0, 1)


def _as_qi(x):
    if isinstance(x, QI):
        return x
    if isinstance(x, (int, Fraction)):
        return QI(x)
    return None


def is_exact(c) -> bool:
    return isinstance(c, (int, Fraction, QI))


def is_zero(c) -> bool:
    if isinstance(c, QI):
        return not c
    return c == 0


def simplify(c):
    """Collapse an exact value to Fraction when its imaginary part is zero."""
    if isinstance(c, QI) and c.im == 0:
        return c.re
    return c


def coerce(c, backend: str):
    """Bring an input number into the given backend's domain."""
    if backend == "exact":
        if isinstance(c, QI):
            return simplify(c)
        if isinstance(c, Fraction):
            return c
        if isinstance(c, int):
            return Fraction(c)
        if isinstance(c, str):
            return Fraction(c)
        if isinstance(c, float):
            if c != int(c):
                raise TypeError(f"non-integer float {c!r} on the exact backend")
            return Fraction(int(c))
        raise TypeError(f"cannot use {type(c).__name__} on the exact backend")
    if backend == "float":
        if isinstance(c, (float, complex)):
            return c
        if isinstance(c, QI):
            return float(c.re) if c.im == 0 else complex(float(c.re), float(c.im))
        if isinstance(c, (int, Fraction)):
            return float(c)
        if isinstance(c, str):
            return float(Fraction(c))
        raise TypeError(f"cannot use {type(c).__name__} on the float backend")
    raise ValueError(f"unknown backend {backend!r}")


def imaginary_unit(backend: str):
    return I_EXACT if backend == "exact" else 1j


def abs_val(c) -> float:
    """Absolute value as a float, for residual norms."""
    if isinstance(c, QI):
        return abs(c)
    return abs(float(c.real) + 1j * float(c.imag)) if isinstance(c, complex) else abs(float(c))


def recip(c):
    """Exact or float reciprocal of a scalar."""
    if isinstance(c, QI):
        return QI(1) / c
    if isinstance(c, Fraction):
        return Fraction(1) / c
    if isinstance(c, int):
        return Fraction(1, c)
    return 1.0 / c

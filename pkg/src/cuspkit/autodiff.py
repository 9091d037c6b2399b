"""Forward-mode derivative engine based on nested first-order dual numbers.

Third-order mixed partials of steep sigmoids lose most of their digits under
naive differencing, so the primary engine here is exact-to-rounding dual
arithmetic, composed up to three levels deep.  Central finite differences
with Richardson extrapolation are provided as the independent validation
route (``fd_partial``), never as the primary method.

Model right-hand sides must be written with the ``exp``/``log``/``tanh``/
``cosh``/``sinh``/``sqrt`` functions of this module (they fall back to
``math`` on plain floats), plus ordinary arithmetic.
"""

from __future__ import annotations

import math


class Dual:
    """First-order dual number ``a + b*eps`` whose parts may themselves be duals.

    Nesting n levels deep yields exact n-th order directional derivatives.
    """

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = a
        self.b = b

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a + other.a, self.b + other.b)
        return Dual(self.a + other, self.b)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a - other.a, self.b - other.b)
        return Dual(self.a - other, self.b)

    def __rsub__(self, other):
        return Dual(other - self.a, -self.b)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.a * other.a, self.a * other.b + self.b * other.a)
        return Dual(self.a * other, self.b * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = 1.0 / other.a if not isinstance(other.a, Dual) else None
            if inv is not None:
                q = self.a * inv
                return Dual(q, (self.b - q * other.b) * inv)
            q = self.a / other.a
            return Dual(q, (self.b - q * other.b) / other.a)
        return Dual(self.a / other, self.b / other)

    def __rtruediv__(self, other):
        q = other / self.a
        return Dual(q, -q * self.b / self.a)

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("Dual ** only supports integer exponents")
        if n == 0:
            return Dual(self.a * 0 + 1.0, self.b * 0)
        if n < 0:
            return 1.0 / self.__pow__(-n)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    # comparisons act on the value part; used only for branching in models
    def __lt__(self, other):
        return value(self) < value(other)

    def __le__(self, other):
        return value(self) <= value(other)

    def __gt__(self, other):
        return value(self) > value(other)

    def __ge__(self, other):
        return value(self) >= value(other)

    def __repr__(self):
        return f"Dual({self.a!r}, {self.b!r})"


def value(x):
    """Strip all dual parts, returning the underlying float."""
    while isinstance(x, Dual):
        x = x.a
    return float(x)


# -- dual-aware elementary functions ------------------------------------


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.a)
        return Dual(e, x.b * e)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(log(x.a), x.b / x.a)
    return math.log(x)


def sqrt(x):
    if isinstance(x, Dual):
        s = sqrt(x.a)
        return Dual(s, x.b / (2.0 * s))
    return math.sqrt(x)


def tanh(x):
    if isinstance(x, Dual):
        t = tanh(x.a)
        return Dual(t, x.b * (1.0 - t * t))
    return math.tanh(x)


def cosh(x):
    if isinstance(x, Dual):
        return Dual(cosh(x.a), x.b * sinh(x.a))
    return math.cosh(x)


def sinh(x):
    if isinstance(x, Dual):
        return Dual(sinh(x.a), x.b * cosh(x.a))
    return math.sinh(x)


# -- seeding and extraction ----------------------------------------------


def lift(v, seeds):
    """Build a nested dual for ``v`` with one nesting level per seed.

    ``seeds[k]`` is the derivative of this variable along the k-th
    differentiation direction (outermost first).
    """
    if not seeds:
        return v
    head, rest = seeds[0], seeds[1:]
    return Dual(lift(v, rest), lift(head, [0.0] * len(rest)))


def part(r, bits):
    """Extract a mixed partial from a nested-dual result.

    ``bits[k] = 1`` differentiates along direction k (take the dual part),
    ``0`` evaluates (take the value part).
    """
    for bit in bits:
        r = r.b if bit else r.a
    return value(r)


def derive(func, args, directions):
    """Evaluate ``func`` on duals seeded along ``directions``.

    ``directions`` is a sequence of argument indices, one per nesting level;
    the returned object yields every mixed partial over those levels via
    :func:`part`.
    """
    n = len(directions)
    lifted = [
        lift(float(a), [1.0 if directions[k] == j else 0.0 for k in range(n)])
        for j, a in enumerate(args)
    ]
    return func(*lifted)


def first_partial(func, args, index):
    """d func / d args[index], one dual level."""
    return part(derive(func, args, (index,)), (1,))


# -- finite-difference validation route ----------------------------------

_EPS = 2.220446049250313e-16
# optimal central-difference steps per total derivative order (h ~ eps^(1/(n+2)))
_FD_STEP = {1: _EPS ** (1.0 / 3.0), 2: _EPS ** 0.25, 3: _EPS ** 0.2}


def _central(func, args, index, h):
    up = list(args)
    dn = list(args)
    up[index] += h
    dn[index] -= h
    return (func(*up) - func(*dn)) / (2.0 * h)


def _fd_multi(func, args, indices, h):
    """Composed central differences for the multi-index ``indices``."""
    if len(indices) == 1:
        return _central(func, args, indices[0], h)
    head, rest = indices[0], indices[1:]

    def inner(*a):
        return _fd_multi(func, a, rest, h)

    return _central(inner, args, head, h)


def fd_partial(func, args, indices, scale=1.0):
    """Mixed partial by central differences at steps h and h/2, Richardson
    extrapolated.  ``indices`` lists one argument index per derivative order.

    Independent of the dual engine; used for cross-validation only.
    """
    order = len(indices)
    base = max(1.0, max(abs(float(a)) for a in args))
    h = _FD_STEP[order] * base * scale
    d_h = _fd_multi(func, args, tuple(indices), h)
    d_h2 = _fd_multi(func, args, tuple(indices), 0.5 * h)
    return (4.0 * d_h2 - d_h) / 3.0

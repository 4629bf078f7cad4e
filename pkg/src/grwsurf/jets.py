"""Order-3 Taylor jets in two parameters.

A :class:`Jet3` carries the value of a scalar together with all of its
partial derivatives up to order three with respect to two parameters
``(x, y)``.  Components may be Python floats or numpy arrays of a common
shape, so a single jet can describe a whole grid of points at once.

Only the independent entries of the symmetric tensors are stored::

    hess  -> (xx, xy, yy)
    third -> (xxx, xxy, xyy, yyy)
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, Tuple, Union

import numpy as np

Number = Union[float, np.ndarray]

__all__ = [
    "Jet3",
    "JetDomainError",
    "jet_var",
    "jet_const",
    "jet_arith",
    "jet_apply",
    "jet_pow",
    "jet_demote",
    "ELEMENTARY",
]


class JetDomainError(ValueError):
    """Raised when an elementary function is applied outside its domain."""


# multi-index (i, j) / (i, j, k) -> slot in the packed storage
_H = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (1, 1): 2}
_T = {}
for _i in range(2):
    for _j in range(2):
        for _k in range(2):
            _T[(_i, _j, _k)] = _i + _j + _k


class Jet3:
    """Truncated Taylor expansion of a scalar in two parameters.

    Parameters
    ----------
    value : float or ndarray
    grad : pair of (float or ndarray)
    hess : triple ``(xx, xy, yy)``
    third : quadruple ``(xxx, xxy, xyy, yyy)``
    order : int
        3 for a full jet; 2 marks a demoted jet whose third-order slots
        carry no information.
    """

    __slots__ = ("v", "g", "h", "t", "order")

    def __init__(self, value, grad=(0.0, 0.0), hess=(0.0, 0.0, 0.0),
                 third=(0.0, 0.0, 0.0, 0.0), order: int = 3):
        self.v = value
        self.g = tuple(grad)
        self.h = tuple(hess)
        self.t = tuple(third)
        self.order = order
        if len(self.g) != 2 or len(self.h) != 3 or len(self.t) != 4:
            raise ValueError("Jet3 expects 2 gradient, 3 hessian and 4 third-order slots")

    # ----------------------------------------------------------------- views
    @property
    def value(self) -> Number:
        return self.v

    @property
    def grad(self) -> np.ndarray:
        return np.stack(np.broadcast_arrays(*self.g))

    @property
    def hess(self) -> np.ndarray:
        xx, xy, yy = np.broadcast_arrays(*self.h)
        return np.stack([np.stack([xx, xy]), np.stack([xy, yy])])

    @property
    def third(self) -> np.ndarray:
        if self.order < 3:
            raise ValueError("third-order data of a demoted jet is undefined")
        slots = np.broadcast_arrays(*self.t)
        out = [[[slots[_T[(i, j, k)]] for k in range(2)] for j in range(2)]
               for i in range(2)]
        return np.array(out)

    def d2(self, i: int, j: int) -> Number:
        return self.h[_H[(i, j)]]

    def d3(self, i: int, j: int, k: int) -> Number:
        return self.t[_T[(i, j, k)]]

    def __repr__(self) -> str:
        return (f"Jet3(value={self.v!r}, grad={self.g!r}, hess={self.h!r}, "
                f"third={self.t!r}, order={self.order})")

    # ------------------------------------------------------------ arithmetic
    def __neg__(self) -> "Jet3":
        return Jet3(-self.v, tuple(-c for c in self.g), tuple(-c for c in self.h),
                    tuple(-c for c in self.t), self.order)

    def __add__(self, other) -> "Jet3":
        other = _lift(other)
        return Jet3(self.v + other.v,
                    tuple(a + b for a, b in zip(self.g, other.g)),
                    tuple(a + b for a, b in zip(self.h, other.h)),
                    tuple(a + b for a, b in zip(self.t, other.t)),
                    min(self.order, other.order))

    __radd__ = __add__

    def __sub__(self, other) -> "Jet3":
        other = _lift(other)
        return Jet3(self.v - other.v,
                    tuple(a - b for a, b in zip(self.g, other.g)),
                    tuple(a - b for a, b in zip(self.h, other.h)),
                    tuple(a - b for a, b in zip(self.t, other.t)),
                    min(self.order, other.order))

    def __rsub__(self, other) -> "Jet3":
        return _lift(other) - self

    def __mul__(self, other) -> "Jet3":
        if not isinstance(other, Jet3):
            return Jet3(self.v * other, tuple(c * other for c in self.g),
                        tuple(c * other for c in self.h),
                        tuple(c * other for c in self.t), self.order)
        return _mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet3":
        return _div(self, _lift(other))

    def __rtruediv__(self, other) -> "Jet3":
        return _div(_lift(other), self)

    def __pow__(self, k) -> "Jet3":
        return jet_pow(self, k)


def _lift(a) -> Jet3:
    if isinstance(a, Jet3):
        return a
    return Jet3(a)


def jet_const(value: Number) -> Jet3:
    """Jet of a constant function."""
    return Jet3(value)


def jet_var(index: int, value: Number) -> Jet3:
    """Jet of the coordinate function ``x`` (index 0) or ``y`` (index 1)."""
    if index not in (0, 1):
        raise ValueError(f"jet_var index must be 0 or 1, got {index!r}")
    one = np.ones_like(value) if isinstance(value, np.ndarray) else 1.0
    zero = np.zeros_like(value) if isinstance(value, np.ndarray) else 0.0
    grad = (one, zero) if index == 0 else (zero, one)
    return Jet3(value, grad)


def _mul(a: Jet3, b: Jet3) -> Jet3:
    a0, b0 = a.v, b.v
    ax, ay = a.g
    bx, by = b.g
    axx, axy, ayy = a.h
    bxx, bxy, byy = b.h
    g = (ax * b0 + a0 * bx, ay * b0 + a0 * by)
    h = (axx * b0 + 2 * ax * bx + a0 * bxx,
         axy * b0 + ax * by + ay * bx + a0 * bxy,
         ayy * b0 + 2 * ay * by + a0 * byy)
    t = []
    for (i, j, k) in ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)):
        t.append(a.d3(i, j, k) * b0 + a0 * b.d3(i, j, k)
                 + a.d2(i, j) * b.g[k] + a.d2(i, k) * b.g[j] + a.d2(j, k) * b.g[i]
                 + a.g[i] * b.d2(j, k) + a.g[j] * b.d2(i, k) + a.g[k] * b.d2(i, j))
    return Jet3(a0 * b0, g, h, tuple(t), min(a.order, b.order))


def _div(a: Jet3, b: Jet3) -> Jet3:
    # solve a = q * b order by order; the value slot is a plain quotient so it
    # agrees bit-for-bit with scalar evaluation
    if np.any(np.asarray(b.v) == 0):
        raise ZeroDivisionError("division by a jet with zero value")
    b0 = b.v
    q0 = a.v / b0
    qg = tuple((a.g[i] - q0 * b.g[i]) / b0 for i in range(2))
    qh = []
    for (i, j) in ((0, 0), (0, 1), (1, 1)):
        qh.append((a.d2(i, j) - q0 * b.d2(i, j) - qg[i] * b.g[j] - qg[j] * b.g[i]) / b0)
    qhd = {(0, 0): qh[0], (0, 1): qh[1], (1, 0): qh[1], (1, 1): qh[2]}
    qt = []
    for (i, j, k) in ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)):
        s = (a.d3(i, j, k) - q0 * b.d3(i, j, k)
             - qg[i] * b.d2(j, k) - qg[j] * b.d2(i, k) - qg[k] * b.d2(i, j)
             - qhd[(i, j)] * b.g[k] - qhd[(i, k)] * b.g[j] - qhd[(j, k)] * b.g[i])
        qt.append(s / b0)
    return Jet3(q0, qg, tuple(qh), tuple(qt), min(a.order, b.order))


def jet_arith(op: str, a, b) -> Jet3:
    """Apply ``add``, ``sub``, ``mul`` or ``div`` to two jets."""
    a, b = _lift(a), _lift(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return _mul(a, b)
    if op == "div":
        return _div(a, b)
    raise ValueError(f"unknown jet operation {op!r}")


# ------------------------------------------------------------- elementary set
# Each entry returns (f, f', f'', f''') evaluated at x.  The value slot uses
# the same numpy ufunc as scalar evaluation.

def _d_sin(x):
    s, c = np.sin(x), np.cos(x)
    return s, c, -s, -c


def _d_cos(x):
    s, c = np.sin(x), np.cos(x)
    return c, -s, -c, s


def _d_sinh(x):
    s, c = np.sinh(x), np.cosh(x)
    return s, c, s, c


def _d_cosh(x):
    s, c = np.sinh(x), np.cosh(x)
    return c, s, c, s


def _d_exp(x):
    e = np.exp(x)
    return e, e, e, e


def _d_log(x):
    r = 1.0 / x
    return np.log(x), r, -r * r, 2.0 * r * r * r


def _d_sqrt(x):
    s = np.sqrt(x)
    return s, 0.5 / s, -0.25 / (s * x), 0.375 / (s * x * x)


def _d_tanh(x):
    th = np.tanh(x)
    s2 = 1.0 - th * th
    return th, s2, -2.0 * th * s2, s2 * (6.0 * th * th - 2.0)


ELEMENTARY: Dict[str, Callable] = {
    "sin": _d_sin,
    "cos": _d_cos,
    "sinh": _d_sinh,
    "cosh": _d_cosh,
    "tanh": _d_tanh,
    "exp": _d_exp,
    "log": _d_log,
    "sqrt": _d_sqrt,
}

_DOMAIN = {"log": "positive", "sqrt": "positive"}


def check_domain(fn: str, x) -> None:
    if _DOMAIN.get(fn) == "positive" and np.any(np.asarray(x) <= 0):
        raise JetDomainError(f"{fn} requires a positive argument")


def _compose(a: Jet3, d0, d1, d2, d3) -> Jet3:
    # Faa di Bruno through third order
    g = tuple(d1 * a.g[i] for i in range(2))
    h = tuple(d2 * a.g[i] * a.g[j] + d1 * a.d2(i, j)
              for (i, j) in ((0, 0), (0, 1), (1, 1)))
    t = []
    for (i, j, k) in ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)):
        t.append(d3 * a.g[i] * a.g[j] * a.g[k]
                 + d2 * (a.d2(i, j) * a.g[k] + a.d2(i, k) * a.g[j] + a.d2(j, k) * a.g[i])
                 + d1 * a.d3(i, j, k))
    return Jet3(d0, g, h, tuple(t), a.order)


def jet_apply(fn: str, a: Jet3) -> Jet3:
    """Compose an elementary function with a jet.

    ``fn`` is one of the names in :data:`ELEMENTARY`.  Powers go through
    :func:`jet_pow`.
    """
    a = _lift(a)
    try:
        derivs = ELEMENTARY[fn]
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None
    check_domain(fn, a.v)
    return _compose(a, *derivs(a.v))


def power_scalar(x, k: Fraction):
    """Real power used by both the scalar and the jet evaluators."""
    k = Fraction(k)
    if k.denominator == 1:
        n = int(k)
        if n < 0 and np.any(np.asarray(x) == 0):
            raise JetDomainError("negative power of zero")
        return np.power(x, float(n)) if isinstance(x, np.ndarray) else float(x) ** n
    if np.any(np.asarray(x) < 0) or (k < 0 and np.any(np.asarray(x) == 0)):
        raise JetDomainError(f"fractional power {k} of a negative base")
    if k.denominator == 2:
        s = np.sqrt(x)
        n = k.numerator
        return s ** n if n >= 0 else 1.0 / s ** (-n)
    return np.exp(float(k) * np.log(x))


def jet_pow(a: Jet3, k) -> Jet3:
    """Raise a jet to a rational power.

    Integer and half-integer exponents use the power rule directly; any
    other rational exponent is routed through ``exp(k * log(a))``.
    """
    a = _lift(a)
    k = Fraction(k).limit_denominator(10**6) if isinstance(k, float) else Fraction(k)
    if k.denominator not in (1, 2):
        if np.any(np.asarray(a.v) <= 0):
            raise JetDomainError(f"power {k} needs a positive base")
        out = jet_apply("exp", jet_apply("log", a) * float(k))
        out.v = power_scalar(a.v, k)
        return out
    x = a.v
    d0 = power_scalar(x, k)
    coeffs = []
    for m in (1, 2, 3):
        c = Fraction(1)
        for q in range(m):
            c *= (k - q)
        coeffs.append(c)
    ds = []
    for m, c in zip((1, 2, 3), coeffs):
        if c == 0:
            ds.append(np.zeros_like(x) if isinstance(x, np.ndarray) else 0.0)
        else:
            ds.append(float(c) * power_scalar(x, k - m))
    return _compose(a, d0, *ds)


def jet_demote(a: Jet3, direction: int) -> Jet3:
    """Order-2 jet of the partial derivative ``da/dx_direction``."""
    if direction not in (0, 1):
        raise ValueError(f"direction must be 0 or 1, got {direction!r}")
    if a.order < 3:
        raise ValueError("cannot demote a jet that is already demoted")
    d = direction
    zero = np.zeros_like(a.v) if isinstance(a.v, np.ndarray) else 0.0
    return Jet3(a.g[d],
                (a.d2(d, 0), a.d2(d, 1)),
                (a.d3(d, 0, 0), a.d3(d, 0, 1), a.d3(d, 1, 1)),
                (zero, zero, zero, zero),
                order=2)


def jet_components(a: Jet3) -> Tuple:
    """Flat tuple of the ten stored slots (testing helper)."""
    return (a.v,) + a.g + a.h + a.t

"""A tiny evaluation-only expression language for multiplier entries.

Expressions are built from complex constants, the coordinate ``z``, sums,
products, integer powers and ``exp``.  They evaluate on numpy arrays of
points.  Constructors fold constants and a few identities so that repeated
bundle constructions (duals of duals, tensor products) stay small.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np


class Expr:
    def __call__(self, z):
        raise NotImplementedError

    def __add__(self, other):
        return add(self, as_expr(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, as_expr(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __sub__(self, other):
        return add(self, -as_expr(other))

    def __rsub__(self, other):
        return add(as_expr(other), -self)

    def __pow__(self, n: int):
        return power(self, n)


@dataclass(frozen=True)
class Const(Expr):
    value: complex

    def __call__(self, z):
        return np.full(np.shape(z), complex(self.value))


@dataclass(frozen=True)
class Var(Expr):
    def __call__(self, z):
        return np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class Add(Expr):
    terms: tuple

    def __call__(self, z):
        return reduce(lambda a, b: a + b, (t(z) for t in self.terms))


@dataclass(frozen=True)
class Mul(Expr):
    factors: tuple

    def __call__(self, z):
        return reduce(lambda a, b: a * b, (f(z) for f in self.factors))


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    n: int

    def __call__(self, z):
        return self.base(z) ** self.n


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr

    def __call__(self, z):
        return np.exp(self.arg(z))


Z = Var()
ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if np.isscalar(x):
        return Const(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


def is_const(e: Expr, value=None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


def add(*terms: Expr) -> Expr:
    flat = []
    c = 0j
    for t in terms:
        t = as_expr(t)
        parts = t.terms if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
            else:
                flat.append(p)
    if c != 0 or not flat:
        flat.append(Const(c))
    return flat[0] if len(flat) == 1 else Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    c = 1 + 0j
    exps = []
    for f in factors:
        f = as_expr(f)
        parts = f.factors if isinstance(f, Mul) else (f,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
            elif isinstance(p, Exp):
                exps.append(p.arg)
            else:
                flat.append(p)
    if c == 0:
        return ZERO
    if exps:
        flat.append(exp(add(*exps)))
    if c != 1 or not flat:
        flat.insert(0, Const(c))
    return flat[0] if len(flat) == 1 else Mul(tuple(flat))


def power(base: Expr, n: int) -> Expr:
    if int(n) != n:
        raise ValueError("only integer powers are supported")
    n = int(n)
    base = as_expr(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise ZeroDivisionError("negative power of zero")
        return Const(base.value ** n)
    if isinstance(base, Exp):
        return exp(mul(Const(n), base.arg))
    if isinstance(base, Pow):
        return power(base.base, base.n * n)
    return Pow(base, n)


def exp(arg) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Const):
        return Const(complex(np.exp(arg.value)))
    return Exp(arg)


def shift(e: Expr, c: complex) -> Expr:
    """The expression ``z -> e(z + c)``."""
    if isinstance(e, Var):
        return add(Z, Const(c))
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return add(*(shift(t, c) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(shift(f, c) for f in e.factors))
    if isinstance(e, Pow):
        return power(shift(e.base, c), e.n)
    if isinstance(e, Exp):
        return exp(shift(e.arg, c))
    raise TypeError(type(e).__name__)


# matrices of expressions: tuple of row tuples

Matrix = tuple


def matrix(rows: Sequence[Sequence]) -> Matrix:
    return tuple(tuple(as_expr(x) for x in row) for row in rows)


def identity(r: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(r)) for i in range(r))


def evaluate(m: Matrix, z) -> np.ndarray:
    """Evaluate an expression matrix at points ``z``; planes-first output."""
    z = np.asarray(z, dtype=complex)
    r, c = len(m), len(m[0])
    out = np.empty((r, c) + z.shape, dtype=complex)
    for i in range(r):
        for j in range(c):
            out[i, j] = m[i][j](z)
    return out


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return tuple(
        tuple(add(*(mul(a[i][k], b[k][j]) for k in range(len(b)))) for j in range(len(b[0])))
        for i in range(len(a))
    )


def transpose(a: Matrix) -> Matrix:
    return tuple(tuple(a[i][j] for i in range(len(a))) for j in range(len(a[0])))


def _minor(a: Matrix, i: int, j: int) -> Matrix:
    return tuple(tuple(row[k] for k in range(len(row)) if k != j) for n, row in enumerate(a) if n != i)


def det(a: Matrix) -> Expr:
    r = len(a)
    if r == 1:
        return a[0][0]
    terms = []
    for j in range(r):
        if is_const(a[0][j], 0):
            continue
        sign = Const(-1.0) if j % 2 else ONE
        terms.append(mul(sign, a[0][j], det(_minor(a, 0, j))))
    return add(*terms) if terms else ZERO


def inverse(a: Matrix) -> Matrix:
    """Symbolic inverse via the adjugate and a ``-1`` power of the determinant."""
    r = len(a)
    dinv = power(det(a), -1)
    if r == 1:
        return ((dinv,),)
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            sign = Const(-1.0) if (i + j) % 2 else ONE
            row.append(mul(sign, det(_minor(a, j, i)), dinv))
        out.append(tuple(row))
    return tuple(out)


def kron(a: Matrix, b: Matrix) -> Matrix:
    ra, rb = len(a), len(b)
    return tuple(
        tuple(mul(a[i // rb][j // rb], b[i % rb][j % rb]) for j in range(ra * rb))
        for i in range(ra * rb)
    )


def block_diag(*blocks: Matrix) -> Matrix:
    r = sum(len(b) for b in blocks)
    rows = []
    off = 0
    for b in blocks:
        n = len(b)
        for i in range(n):
            row = [ZERO] * r
            row[off:off + n] = b[i]
            rows.append(tuple(row))
        off += n
    return tuple(rows)

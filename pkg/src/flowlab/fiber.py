"""Pointwise linear algebra on fields of small matrices.

Matrix fields are stored *planes first*: an array of shape ``(r, r, ny, nx)``
holds one ``r x r`` matrix per grid cell, and entry ``(i, j)`` is a contiguous
``ny x nx`` plane.  For the ranks that occur here (1 to 4, occasionally 9)
explicit loops over the matrix indices beat batched ``np.matmul`` by a wide
margin because every inner operation is a vectorized plane operation.
"""

from __future__ import annotations

import math

import numpy as np


def eye(r: int, shape: tuple[int, ...], dtype=complex) -> np.ndarray:
    out = np.zeros((r, r) + tuple(shape), dtype=dtype)
    for i in range(r):
        out[i, i] = 1.0
    return out


def mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cellwise matrix product ``a @ b``."""
    r, s = a.shape[0], a.shape[1]
    t = b.shape[1]
    out = np.empty((r, t) + np.broadcast_shapes(a.shape[2:], b.shape[2:]),
                   dtype=np.result_type(a, b))
    for i in range(r):
        for k in range(t):
            acc = a[i, 0] * b[0, k]
            for j in range(1, s):
                acc = acc + a[i, j] * b[j, k]
            out[i, k] = acc
    return out


def adjoint(a: np.ndarray) -> np.ndarray:
    """Cellwise conjugate transpose."""
    return np.conj(np.swapaxes(a, 0, 1))


def trace(a: np.ndarray) -> np.ndarray:
    return sum(a[i, i] for i in range(a.shape[0]))


def det(a: np.ndarray) -> np.ndarray:
    r = a.shape[0]
    if r == 1:
        return a[0, 0].copy()
    if r == 2:
        return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    if r == 3:
        return (a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
                - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
                + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]))
    return np.linalg.det(to_stack(a))


def inv(a: np.ndarray) -> np.ndarray:
    """Cellwise inverse; closed forms up to rank 3."""
    r = a.shape[0]
    if r == 1:
        return 1.0 / a
    if r == 2:
        d = det(a)
        out = np.empty_like(a)
        out[0, 0] = a[1, 1] / d
        out[1, 1] = a[0, 0] / d
        out[0, 1] = -a[0, 1] / d
        out[1, 0] = -a[1, 0] / d
        return out
    if r == 3:
        d = det(a)
        out = np.empty_like(a)
        for i in range(3):
            for j in range(3):
                i1, i2 = [k for k in range(3) if k != j]
                j1, j2 = [k for k in range(3) if k != i]
                cof = a[i1, j1] * a[i2, j2] - a[i1, j2] * a[i2, j1]
                out[i, j] = ((-1) ** (i + j)) * cof / d
        return out
    return from_stack(np.linalg.inv(to_stack(a)))


def to_stack(a: np.ndarray) -> np.ndarray:
    """Planes-first ``(r, r, ...)`` to numpy's stack layout ``(..., r, r)``."""
    return np.moveaxis(np.moveaxis(a, 0, -1), 0, -1)


def from_stack(a: np.ndarray) -> np.ndarray:
    return np.moveaxis(np.moveaxis(a, -1, 0), -1, 0)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + adjoint(a))


def h_adjoint(k: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Adjoint of an endomorphism field with respect to the metric ``h``.

    With the pairing ``<s, t> = t^* h s`` the adjoint is ``h^{-1} k^* h``.
    """
    return mm(inv(h), mm(adjoint(k), h))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ra, rb = a.shape[0], b.shape[0]
    out = np.empty((ra * rb, ra * rb) + np.broadcast_shapes(a.shape[2:], b.shape[2:]),
                   dtype=np.result_type(a, b))
    for i in range(ra):
        for j in range(ra):
            for k in range(rb):
                for m in range(rb):
                    out[i * rb + k, j * rb + m] = a[i, j] * b[k, m]
    return out


def block_diag(*blocks: np.ndarray) -> np.ndarray:
    shape = np.broadcast_shapes(*(b.shape[2:] for b in blocks))
    r = sum(b.shape[0] for b in blocks)
    out = np.zeros((r, r) + shape, dtype=np.result_type(*blocks))
    i = 0
    for b in blocks:
        n = b.shape[0]
        out[i:i + n, i:i + n] = b
        i += n
    return out


def expm(x: np.ndarray, tol: float = 2.0 ** -53) -> np.ndarray:
    """Cellwise matrix exponential.

    Ranks 1 and 2 use closed forms.  Larger ranks use scaling, even-degree
    Taylor and squaring.

    The Taylor degree is always even, and even-degree Taylor polynomials of
    ``exp`` have no real roots.  So for ``x`` similar to a real diagonal
    matrix the result is positive definite in the same similarity class
    regardless of truncation.  That is the property the metric updates rely on.
    """
    r = x.shape[0]
    if r == 1:
        return np.exp(x)
    if r == 2:
        return _expm2(x)
    norm = float(np.max(sum(np.abs(x[:, j]) for j in range(r)))) if x.size else 0.0
    squarings = 0
    if norm > 0.5:
        squarings = int(math.ceil(math.log2(norm / 0.5)))
        x = x / (2.0 ** squarings)
        norm /= 2.0 ** squarings
    degree = 2
    while norm ** (degree + 1) / math.factorial(degree + 1) > tol and degree < 18:
        degree += 2
    ident = eye(r, x.shape[2:], dtype=x.dtype)
    p = ident.copy()
    for k in range(degree, 0, -1):
        p = ident + mm(x, p) / k
    for _ in range(squarings):
        p = mm(p, p)
    return p


def _expm2(x: np.ndarray) -> np.ndarray:
    """Closed form for 2x2 fields: ``exp(m) (cosh(s) I + sinh(s)/s (x - m I))``."""
    m = 0.5 * (x[0, 0] + x[1, 1])
    a, d = x[0, 0] - m, x[1, 1] - m
    s2 = a * a + x[0, 1] * x[1, 0]  # (x - m I)^2 = s2 I
    if np.iscomplexobj(s2) and np.all(np.abs(s2.imag) <= 1e-14 * (np.abs(s2.real) + 1e-300)) \
            and np.all(s2.real >= 0):
        # similar to a real diagonal matrix (the metric-update case): stay real
        s2 = s2.real
    s = np.sqrt(s2)
    small = np.abs(s2) < 1e-6
    s_safe = np.where(small, 1.0, s)
    # series for tiny s keeps the ratio accurate to rounding
    ratio = np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(s_safe) / s_safe)
    ch = np.where(small, 1.0 + s2 / 2.0 + s2 * s2 / 24.0 + s2 ** 3 / 720.0, np.cosh(s_safe))
    e = np.exp(m)
    out = np.empty_like(x, dtype=np.result_type(x, complex))
    out[0, 0] = e * (ch + ratio * a)
    out[1, 1] = e * (ch + ratio * d)
    out[0, 1] = e * ratio * x[0, 1]
    out[1, 0] = e * ratio * x[1, 0]
    return out


def generalized_eigvalsh(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``b^{-1} a`` for Hermitian ``a`` and positive ``b``.

    Returned in stack layout ``(..., r)``, ascending.
    """
    lb = np.linalg.cholesky(to_stack(b))
    li = np.linalg.inv(lb)
    m = li @ to_stack(a) @ np.conj(np.swapaxes(li, -1, -2))
    return np.linalg.eigvalsh(0.5 * (m + np.conj(np.swapaxes(m, -1, -2))))


def h_hermitian_eigvals(k: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Real eigenvalues of an ``h``-Hermitian endomorphism field ``k``."""
    return generalized_eigvalsh(mm(h, k), h)


def hs_norm_sq(m: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Squared Hilbert-Schmidt norm ``tr(m m^dagger)`` induced by ``h``."""
    return np.real(trace(mm(m, h_adjoint(m, h))))

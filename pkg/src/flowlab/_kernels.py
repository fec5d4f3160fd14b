"""Compiled kernels for the flow's inner loop (used when numba is installed).

The numpy implementation in :mod:`flowlab.metrics` is the reference; these
kernels compute the same quantities cell by cell without temporaries.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

AVAILABLE = numba is not None

if AVAILABLE:
    @numba.njit(cache=True)
    def _invert(a, out, work):  # pragma: no cover - compiled
        """Gauss-Jordan with partial pivoting on a small complex matrix."""
        r = a.shape[0]
        for i in range(r):
            for j in range(r):
                work[i, j] = a[i, j]
                out[i, j] = 1.0 if i == j else 0.0
        for c in range(r):
            p = c
            best = abs(work[c, c])
            for i in range(c + 1, r):
                if abs(work[i, c]) > best:
                    best = abs(work[i, c])
                    p = i
            if p != c:
                for j in range(r):
                    t = work[c, j]
                    work[c, j] = work[p, j]
                    work[p, j] = t
                    t = out[c, j]
                    out[c, j] = out[p, j]
                    out[p, j] = t
            piv = 1.0 / work[c, c]
            for j in range(r):
                work[c, j] *= piv
                out[c, j] *= piv
            for i in range(r):
                if i != c:
                    f = work[i, c]
                    if f != 0:
                        for j in range(r):
                            work[i, j] -= f * work[c, j]
                            out[i, j] -= f * out[c, j]

    @numba.njit(cache=True)
    def _inv3(a, out):  # pragma: no cover - compiled
        c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
        c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
        idet = 1.0 / (a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02)
        out[0, 0] = c00 * idet
        out[1, 0] = c01 * idet
        out[2, 0] = c02 * idet
        out[0, 1] = (a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]) * idet
        out[1, 1] = (a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]) * idet
        out[2, 1] = (a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]) * idet
        out[0, 2] = (a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]) * idet
        out[1, 2] = (a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]) * idet
        out[2, 2] = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]) * idet

    @numba.njit(cache=True)
    def _plane_stencil(f, out, c1, c2, cx, cy, off):  # pragma: no cover - compiled
        """``out = cx * D_x f + cy * D_y f`` on the region trimmed by ``off``."""
        p_count = f.shape[0]
        m1, m2 = out.shape[1], out.shape[2]
        for p in range(p_count):
            for k in range(m1):
                kk = k + off
                for j in range(m2):
                    jj = j + off
                    fx = c1 * (f[p, kk, jj + 1] - f[p, kk, jj - 1]) - c2 * (f[p, kk, jj + 2] - f[p, kk, jj - 2])
                    fy = c1 * (f[p, kk + 1, jj] - f[p, kk - 1, jj]) - c2 * (f[p, kk + 2, jj] - f[p, kk - 2, jj])
                    out[p, k, j] = cx * fx + cy * fy

    @numba.njit(cache=True)
    def mean_curvature_kernel(hp, inv_h, ax, ay, bx, by, symmetrize):  # pragma: no cover
        """``K = -2 d_zbar(h^{-1} d_z h)`` from a metric padded by four layers."""
        r = hp.shape[0]
        ny, nx = hp.shape[2], hp.shape[3]
        m1, m2 = ny - 4, nx - 4           # region padded by two
        n1, n2 = ny - 8, nx - 8           # interior
        c1 = 8.0 / 12.0 * inv_h
        c2 = 1.0 / 12.0 * inv_h
        flat = hp.reshape((r * r, ny, nx))
        dh = np.empty((r * r, m1, m2), np.complex128)
        _plane_stencil(flat, dh, c1, c2, ax, ay, 2)
        theta = np.empty((r * r, m1, m2), np.complex128)
        hinv_in = np.empty((r, r, n1, n2), np.complex128)
        hc = np.empty((r, r), np.complex128)
        hi = np.empty((r, r), np.complex128)
        work = np.empty((r, r), np.complex128)
        for k in range(m1):
            for j in range(m2):
                for a in range(r):
                    for b in range(r):
                        hc[a, b] = hp[a, b, k + 2, j + 2]
                if r == 1:
                    hi[0, 0] = 1.0 / hc[0, 0]
                elif r == 3:
                    _inv3(hc, hi)
                else:
                    _invert(hc, hi, work)
                inside = 2 <= k < m1 - 2 and 2 <= j < m2 - 2
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += hi[a, c] * dh[c * r + b, k, j]
                        theta[a * r + b, k, j] = acc
                        if inside:
                            hinv_in[a, b, k - 2, j - 2] = hi[a, b]
        kraw = np.empty((r * r, n1, n2), np.complex128)
        _plane_stencil(theta, kraw, c1, c2, -2.0 * bx, -2.0 * by, 2)
        out = np.empty((r, r, n1, n2), np.complex128)
        kmat = np.empty((r, r), np.complex128)
        tmp = np.empty((r, r), np.complex128)
        for k in range(n1):
            for j in range(n2):
                if not symmetrize:
                    for a in range(r):
                        for b in range(r):
                            out[a, b, k, j] = kraw[a * r + b, k, j]
                    continue
                for a in range(r):
                    for b in range(r):
                        kmat[a, b] = kraw[a * r + b, k, j]
                # tmp = K^* h, then out = (K + h^{-1} K^* h) / 2
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += np.conj(kmat[c, a]) * hp[c, b, k + 4, j + 4]
                        tmp[a, b] = acc
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += hinv_in[a, c, k, j] * tmp[c, b]
                        out[a, b, k, j] = 0.5 * (kmat[a, b] + acc)
        return out


if AVAILABLE:
    @numba.njit(cache=True)
    def _stencil(f, kk, jj, c1, c2):  # pragma: no cover - compiled
        fx = c1 * (f[kk, jj + 1] - f[kk, jj - 1]) - c2 * (f[kk, jj + 2] - f[kk, jj - 2])
        fy = c1 * (f[kk + 1, jj] - f[kk - 1, jj]) - c2 * (f[kk + 2, jj] - f[kk - 2, jj])
        return fx, fy

    @numba.njit(cache=True)
    def _delta6(f, kk, jj):  # pragma: no cover - compiled
        return (f[kk, jj - 3] + f[kk, jj + 3] + f[kk - 3, jj] + f[kk + 3, jj]
                - 6.0 * (f[kk, jj - 2] + f[kk, jj + 2] + f[kk - 2, jj] + f[kk + 2, jj])
                + 15.0 * (f[kk, jj - 1] + f[kk, jj + 1] + f[kk - 1, jj] + f[kk + 1, jj])
                - 40.0 * f[kk, jj])

    @numba.njit(cache=True)
    def mean_curvature_rank2(hp, inv_h, ax, ay, bx, by, symmetrize, damp=0.0):  # pragma: no cover
        """Rank-2 specialization of :func:`mean_curvature_kernel` on scalars.

        With ``damp != 0`` (requires ``symmetrize``) also returns the damped
        generator ``K - damp h^{-1} (delta_x^6 + delta_y^6) h``; otherwise the
        second output is ``K`` itself.
        """
        ny, nx = hp.shape[2], hp.shape[3]
        m1, m2 = ny - 4, nx - 4
        n1, n2 = ny - 8, nx - 8
        c1 = 8.0 / 12.0 * inv_h
        c2 = 1.0 / 12.0 * inv_h
        th = np.empty((2, 2, m1, m2), np.complex128)
        h00, h01, h10, h11 = hp[0, 0], hp[0, 1], hp[1, 0], hp[1, 1]
        for k in range(m1):
            kk = k + 2
            for j in range(m2):
                jj = j + 2
                x, y = _stencil(h00, kk, jj, c1, c2)
                d00 = ax * x + ay * y
                x, y = _stencil(h01, kk, jj, c1, c2)
                d01 = ax * x + ay * y
                x, y = _stencil(h10, kk, jj, c1, c2)
                d10 = ax * x + ay * y
                x, y = _stencil(h11, kk, jj, c1, c2)
                d11 = ax * x + ay * y
                a, b, c, d = h00[kk, jj], h01[kk, jj], h10[kk, jj], h11[kk, jj]
                idet = 1.0 / (a * d - b * c)
                i00, i01, i10, i11 = d * idet, -b * idet, -c * idet, a * idet
                th[0, 0, k, j] = i00 * d00 + i01 * d10
                th[0, 1, k, j] = i00 * d01 + i01 * d11
                th[1, 0, k, j] = i10 * d00 + i11 * d10
                th[1, 1, k, j] = i10 * d01 + i11 * d11
        out = np.empty((2, 2, n1, n2), np.complex128)
        gen = np.empty((2, 2, n1, n2) if damp != 0.0 else (2, 2, 0, 0), np.complex128)
        t00, t01, t10, t11 = th[0, 0], th[0, 1], th[1, 0], th[1, 1]
        for k in range(n1):
            kk = k + 2
            for j in range(n2):
                jj = j + 2
                x, y = _stencil(t00, kk, jj, c1, c2)
                k00 = -2.0 * (bx * x + by * y)
                x, y = _stencil(t01, kk, jj, c1, c2)
                k01 = -2.0 * (bx * x + by * y)
                x, y = _stencil(t10, kk, jj, c1, c2)
                k10 = -2.0 * (bx * x + by * y)
                x, y = _stencil(t11, kk, jj, c1, c2)
                k11 = -2.0 * (bx * x + by * y)
                if symmetrize:
                    a, b = hp[0, 0, k + 4, j + 4], hp[0, 1, k + 4, j + 4]
                    c, d = hp[1, 0, k + 4, j + 4], hp[1, 1, k + 4, j + 4]
                    idet = 1.0 / (a * d - b * c)
                    i00, i01, i10, i11 = d * idet, -b * idet, -c * idet, a * idet
                    # s = K^* h
                    s00 = np.conj(k00) * a + np.conj(k10) * c
                    s01 = np.conj(k00) * b + np.conj(k10) * d
                    s10 = np.conj(k01) * a + np.conj(k11) * c
                    s11 = np.conj(k01) * b + np.conj(k11) * d
                    out[0, 0, k, j] = 0.5 * (k00 + i00 * s00 + i01 * s10)
                    out[0, 1, k, j] = 0.5 * (k01 + i00 * s01 + i01 * s11)
                    out[1, 0, k, j] = 0.5 * (k10 + i10 * s00 + i11 * s10)
                    out[1, 1, k, j] = 0.5 * (k11 + i10 * s01 + i11 * s11)
                    if damp != 0.0:
                        q00 = _delta6(h00, k + 4, j + 4)
                        q01 = _delta6(h01, k + 4, j + 4)
                        q10 = _delta6(h10, k + 4, j + 4)
                        q11 = _delta6(h11, k + 4, j + 4)
                        gen[0, 0, k, j] = out[0, 0, k, j] - damp * (i00 * q00 + i01 * q10)
                        gen[0, 1, k, j] = out[0, 1, k, j] - damp * (i00 * q01 + i01 * q11)
                        gen[1, 0, k, j] = out[1, 0, k, j] - damp * (i10 * q00 + i11 * q10)
                        gen[1, 1, k, j] = out[1, 1, k, j] - damp * (i10 * q01 + i11 * q11)
                else:
                    out[0, 0, k, j] = k00
                    out[0, 1, k, j] = k01
                    out[1, 0, k, j] = k10
                    out[1, 1, k, j] = k11
        if damp == 0.0:
            return out, out
        return out, gen

    @numba.njit(cache=True)
    def euler_update_rank2(h, kmat, lam, dt, trace_free, kdev):  # pragma: no cover - compiled
        """``h exp(-dt X)`` with ``X = kmat - lam`` (or its trace-free part), Hermitized.

        Also returns ``sup`` of the operator norm of ``kdev - lam``.
        """
        n1, n2 = h.shape[2], h.shape[3]
        out = np.empty_like(h)
        sup = 0.0
        for k in range(n1):
            for j in range(n2):
                y00, y11 = kdev[0, 0, k, j], kdev[1, 1, k, j]
                ym = 0.5 * (y00 + y11)
                ya = y00 - ym
                ys2 = ya * ya + kdev[0, 1, k, j] * kdev[1, 0, k, j]
                dev = abs((ym - lam).real) + np.sqrt(max(ys2.real, 0.0))
                if dev > sup:
                    sup = dev
                x00, x01 = kmat[0, 0, k, j], kmat[0, 1, k, j]
                x10, x11 = kmat[1, 0, k, j], kmat[1, 1, k, j]
                m = 0.5 * (x00 + x11)
                a = x00 - m
                s2 = a * a + x01 * x10
                shift = m if trace_free else lam + 0j
                # exp(-dt (X - shift I)) through the 2x2 closed form
                mm = -dt * (m - shift)
                q = dt * dt * s2
                if abs(q) < 1e-6:
                    ch = 1.0 + q / 2.0 + q * q / 24.0 + q * q * q / 720.0
                    ratio = 1.0 + q / 6.0 + q * q / 120.0 + q * q * q / 5040.0
                else:
                    sq = np.sqrt(q)
                    ch = np.cosh(sq)
                    ratio = np.sinh(sq) / sq
                e = np.exp(mm)
                r = -dt * ratio
                e00 = e * (ch + r * a)
                e11 = e * (ch - r * a)
                e01 = e * r * x01
                e10 = e * r * x10
                h00, h01 = h[0, 0, k, j], h[0, 1, k, j]
                h10, h11 = h[1, 0, k, j], h[1, 1, k, j]
                p00 = h00 * e00 + h01 * e10
                p01 = h00 * e01 + h01 * e11
                p10 = h10 * e00 + h11 * e10
                p11 = h10 * e01 + h11 * e11
                out[0, 0, k, j] = p00.real + 0j
                out[1, 1, k, j] = p11.real + 0j
                off = 0.5 * (p01 + np.conj(p10))
                out[0, 1, k, j] = off
                out[1, 0, k, j] = np.conj(off)
        return out, sup


if AVAILABLE:
    @numba.njit(cache=True)
    def euler_update_generic(h, kmat, lam, dt, trace_free):  # pragma: no cover - compiled
        """``h exp(-dt X)``, Hermitized, for any rank (scaling + Taylor + squaring)."""
        r = h.shape[0]
        n1, n2 = h.shape[2], h.shape[3]
        out = np.empty_like(h)
        x = np.empty((r, r), np.complex128)
        p = np.empty((r, r), np.complex128)
        q = np.empty((r, r), np.complex128)
        eps = 2.0 ** -53
        for k in range(n1):
            for j in range(n2):
                shift = lam + 0j
                if trace_free:
                    shift = 0j
                    for a in range(r):
                        shift += kmat[a, a, k, j]
                    shift /= r
                norm = 0.0
                for a in range(r):
                    row = 0.0
                    for b in range(r):
                        v = -dt * (kmat[a, b, k, j] - (shift if a == b else 0.0))
                        x[a, b] = v
                        row += abs(v)
                    norm = max(norm, row)
                sq = 0
                while norm > 0.5:
                    norm *= 0.5
                    sq += 1
                scale = 0.5 ** sq
                deg = 2
                fact = 6.0
                while norm ** (deg + 1) / fact > eps and deg < 18:
                    deg += 2
                    fact *= (deg + 1) * deg
                # Horner: p = I + x/deg (I + x/(deg-1) (...))
                for a in range(r):
                    for b in range(r):
                        p[a, b] = 1.0 if a == b else 0.0
                for m in range(deg, 0, -1):
                    c = scale / m
                    for a in range(r):
                        for b in range(r):
                            acc = 0j
                            for t in range(r):
                                acc += x[a, t] * p[t, b]
                            q[a, b] = (1.0 if a == b else 0.0) + c * acc
                    for a in range(r):
                        for b in range(r):
                            p[a, b] = q[a, b]
                for _ in range(sq):
                    for a in range(r):
                        for b in range(r):
                            acc = 0j
                            for t in range(r):
                                acc += p[a, t] * p[t, b]
                            q[a, b] = acc
                    for a in range(r):
                        for b in range(r):
                            p[a, b] = q[a, b]
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for t in range(r):
                            acc += h[a, t, k, j] * p[t, b]
                        q[a, b] = acc
                for a in range(r):
                    out[a, a, k, j] = q[a, a].real + 0j
                    for b in range(a + 1, r):
                        off = 0.5 * (q[a, b] + np.conj(q[b, a]))
                        out[a, b, k, j] = off
                        out[b, a, k, j] = np.conj(off)
        return out


if AVAILABLE:
    @numba.njit(cache=True)
    def damping_kernel(hp, coef):  # pragma: no cover - compiled
        """``-coef h^{-1} (delta_x^6 + delta_y^6) h`` on the interior of a 4-padded metric."""
        r = hp.shape[0]
        n1, n2 = hp.shape[2] - 8, hp.shape[3] - 8
        q = np.empty((r, r, n1, n2), np.complex128)
        for a in range(r):
            for b in range(r):
                f = hp[a, b]
                for k in range(n1):
                    kk = k + 4
                    for j in range(n2):
                        jj = j + 4
                        q[a, b, k, j] = (
                            f[kk, jj - 3] + f[kk, jj + 3] + f[kk - 3, jj] + f[kk + 3, jj]
                            - 6.0 * (f[kk, jj - 2] + f[kk, jj + 2] + f[kk - 2, jj] + f[kk + 2, jj])
                            + 15.0 * (f[kk, jj - 1] + f[kk, jj + 1] + f[kk - 1, jj] + f[kk + 1, jj])
                            - 40.0 * f[kk, jj])
        out = np.empty((r, r, n1, n2), np.complex128)
        hc = np.empty((r, r), np.complex128)
        hi = np.empty((r, r), np.complex128)
        work = np.empty((r, r), np.complex128)
        for k in range(n1):
            for j in range(n2):
                for a in range(r):
                    for b in range(r):
                        hc[a, b] = hp[a, b, k + 4, j + 4]
                if r == 1:
                    hi[0, 0] = 1.0 / hc[0, 0]
                elif r == 2:
                    idet = 1.0 / (hc[0, 0] * hc[1, 1] - hc[0, 1] * hc[1, 0])
                    hi[0, 0] = hc[1, 1] * idet
                    hi[1, 1] = hc[0, 0] * idet
                    hi[0, 1] = -hc[0, 1] * idet
                    hi[1, 0] = -hc[1, 0] * idet
                elif r == 3:
                    _inv3(hc, hi)
                else:
                    _invert(hc, hi, work)
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += hi[a, c] * q[c, b, k, j]
                        out[a, b, k, j] = -coef * acc
        return out


def damping(hp: np.ndarray, coef: float) -> np.ndarray:
    return damping_kernel(np.ascontiguousarray(hp, dtype=complex), float(coef))


if AVAILABLE:
    @numba.njit(cache=True)
    def pad_metric_kernel(values, ky, jx, gidx, invs):  # pragma: no cover - compiled
        """Gather ``values`` onto the padded grid; twisted cells get ``A^{-*} h A^{-1}``."""
        r = values.shape[0]
        p1, p2 = ky.shape
        out = np.empty((r, r, p1, p2), np.complex128)
        t = np.empty((r, r), np.complex128)
        for k in range(p1):
            for j in range(p2):
                sk, sj = ky[k, j], jx[k, j]
                g = gidx[k, j]
                if g < 0:
                    for a in range(r):
                        for b in range(r):
                            out[a, b, k, j] = values[a, b, sk, sj]
                    continue
                # t = h A^{-1}, out = A^{-*} t
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += values[a, c, sk, sj] * invs[c, b, g]
                        t[a, b] = acc
                for a in range(r):
                    for b in range(r):
                        acc = 0j
                        for c in range(r):
                            acc += np.conj(invs[c, a, g]) * t[c, b]
                        out[a, b, k, j] = acc
        return out


def mean_curvature(hp: np.ndarray, n: int, dz_coeffs, dzbar_coeffs, symmetrize: bool) -> np.ndarray:
    (ax, ay), (bx, by) = dz_coeffs, dzbar_coeffs
    args = (np.ascontiguousarray(hp, dtype=complex), float(n),
            complex(ax), complex(ay), complex(bx), complex(by), bool(symmetrize))
    if hp.shape[0] == 2:
        return mean_curvature_rank2(*args)[0]
    return mean_curvature_kernel(*args)


def curvature_and_generator(hp: np.ndarray, n: int, dz_coeffs, dzbar_coeffs,
                            damp: float) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrized ``K`` and ``K - damp h^{-1} delta^6 h`` from one padded metric."""
    (ax, ay), (bx, by) = dz_coeffs, dzbar_coeffs
    hp = np.ascontiguousarray(hp, dtype=complex)
    if hp.shape[0] == 2:
        return mean_curvature_rank2(hp, float(n), complex(ax), complex(ay), complex(bx),
                                    complex(by), True, float(damp))
    k = mean_curvature_kernel(hp, float(n), complex(ax), complex(ay), complex(bx), complex(by), True)
    return k, (k + damping(hp, damp) if damp else k)

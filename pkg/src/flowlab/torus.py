"""Discretized flat torus C/(Z + tau Z) and its calculus operators.

A point of the fundamental domain is ``z = x + tau*y`` with lattice
coordinates ``x, y`` in ``[-1/2, 1/2)``.  Grid cell ``(k, j)`` sits at
``x = j/N - 1/2``, ``y = k/N - 1/2``; arrays are indexed ``[..., k, j]`` so the
last axis is ``x``.  The Kaehler form is ``omega = (i/2) dz ^ dzbar``, which
makes the volume equal to ``Im tau``.

Derivative kernels work on *padded* arrays: a field on the ``N x N`` grid
extended by ``g`` ghost layers on each side (how the ghosts are filled is the
caller's business, see :mod:`flowlab.bundles`).  Every kernel is "valid mode"
and trims two layers per side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

try:  # optional accelerator for the hot derivative kernel
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

# 4th-order centered stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_DELTA6 = np.array([1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0])  # undivided sixth difference

STENCIL_HALF_WIDTH = 2


@dataclass(frozen=True)
class TorusDomain:
    tau: complex
    N: int

    @property
    def vol(self) -> float:
        return float(self.tau.imag)

    @property
    def cell_area(self) -> float:
        return self.vol / self.N ** 2

    @property
    def spacing(self) -> float:
        """Lattice-coordinate step ``1/N`` (both axes)."""
        return 1.0 / self.N

    @property
    def min_spacing(self) -> float:
        """Smallest physical distance between neighbouring grid points."""
        return min(1.0, abs(self.tau), self.tau.imag) / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) / self.N - 0.5

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.N) / self.N - 0.5

    def lattice_coords(self, pad: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Lattice coordinate grids ``(x, y)`` of shape ``(N+2p, N+2p)``."""
        idx = np.arange(-pad, self.N + pad) / self.N - 0.5
        y, x = np.meshgrid(idx, idx, indexing="ij")
        return x, y

    def points(self, pad: int = 0) -> np.ndarray:
        x, y = self.lattice_coords(pad)
        return x + self.tau * y

    # Wirtinger derivatives in lattice coordinates:
    #   d/dz    = i/(2 Im tau) * (conj(tau) d/dx - d/dy)
    #   d/dzbar = -i/(2 Im tau) * (tau d/dx - d/dy)
    @property
    def dz_coeffs(self) -> tuple[complex, complex]:
        b = self.tau.imag
        return 1j * np.conj(self.tau) / (2 * b), -1j / (2 * b)

    @property
    def dzbar_coeffs(self) -> tuple[complex, complex]:
        b = self.tau.imag
        return -1j * self.tau / (2 * b), 1j / (2 * b)


def make_torus(tau: complex = 1j, N: int = 64) -> TorusDomain:
    tau = complex(tau)
    if not tau.imag > 0:
        raise ValueError(f"tau must lie in the upper half-plane, got {tau}")
    if int(N) != N or N < 8 or N % 2:
        raise ValueError(f"grid resolution must be an even integer >= 8, got {N}")
    return TorusDomain(tau=tau, N=int(N))


def integrate(f: np.ndarray, domain: TorusDomain) -> complex:
    """Riemann sum over the fundamental domain (trailing two axes)."""
    f = np.asarray(f)
    if f.shape[-2:] != (domain.N, domain.N):
        raise ValueError(f"field shape {f.shape} does not match grid {domain.N}")
    total = np.sum(f, axis=(-2, -1)) * domain.cell_area
    return complex(total) if np.ndim(total) == 0 else total


def periodic_pad(f: np.ndarray, width: int) -> np.ndarray:
    return np.pad(f, [(0, 0)] * (f.ndim - 2) + [(width, width), (width, width)], mode="wrap")


def crop(f: np.ndarray, n: int) -> np.ndarray:
    if n == 0:
        return f
    return f[..., n:-n, n:-n]


def _apply(f: np.ndarray, stencil: np.ndarray, axis: int) -> np.ndarray:
    # Complex ufuncs on strided views are several times slower than real
    # ones, so complex fields are differenced through their float64 view
    # (real stencils act on real and imaginary parts independently).
    axis = axis % f.ndim
    is_complex = np.iscomplexobj(f)
    if is_complex:
        f = np.ascontiguousarray(f, dtype=complex).view(np.float64)
    last = axis == f.ndim - 1
    step = 2 if (is_complex and last) else 1
    n = f.shape[axis]
    w = len(stencil) - 1
    out = None
    for s, c in enumerate(stencil):
        if c == 0.0:
            continue
        sl = [slice(None)] * f.ndim
        sl[axis] = slice(step * s, n - step * (w - s))
        term = f[tuple(sl)] * c
        out = term if out is None else np.add(out, term, out=out)
    if is_complex:
        out = np.ascontiguousarray(out).view(complex)
    return out


def diff_x(fp: np.ndarray, spacing: float) -> np.ndarray:
    """First derivative along ``x`` of a padded field; trims 2 layers per side."""
    return _apply(crop_y(fp, 2), _D1 / spacing, -1)


def diff_y(fp: np.ndarray, spacing: float) -> np.ndarray:
    return _apply(crop_x(fp, 2), _D1 / spacing, -2)


def diff_xx(fp: np.ndarray, spacing: float) -> np.ndarray:
    return _apply(crop_y(fp, 2), _D2 / spacing ** 2, -1)


def diff_yy(fp: np.ndarray, spacing: float) -> np.ndarray:
    return _apply(crop_x(fp, 2), _D2 / spacing ** 2, -2)


def diff_xy(fp: np.ndarray, spacing: float) -> np.ndarray:
    """Mixed derivative; needs corner ghosts."""
    return _apply(_apply(fp, _D1 / spacing, -2), _D1 / spacing, -1)


def hyperdiff(fp: np.ndarray) -> np.ndarray:
    """Undivided sixth differences ``(delta_x^6 + delta_y^6) f``; trims 3 layers.

    Sends the sawtooth ``(-1)^j`` to ``-64 (-1)^j`` and is ``O(h^6)`` on
    smooth fields.
    """
    return _apply(crop_y(fp, 3), _DELTA6, -1) + _apply(crop_x(fp, 3), _DELTA6, -2)


def crop_x(f: np.ndarray, n: int) -> np.ndarray:
    return f[..., :, n:-n]


def crop_y(f: np.ndarray, n: int) -> np.ndarray:
    return f[..., n:-n, :]


def _wirtinger_numpy(fp, domain):
    fx = diff_x(fp, domain.spacing)
    fy = diff_y(fp, domain.spacing)
    (ax, ay), (bx, by) = domain.dz_coeffs, domain.dzbar_coeffs
    return ax * fx + ay * fy, bx * fx + by * fy


if numba is not None:
    @numba.njit(cache=True)
    def _wirtinger_kernel(fp, inv_h, ax, ay, bx, by):  # pragma: no cover - compiled
        p_count, ny, nx = fp.shape
        dz = np.empty((p_count, ny - 4, nx - 4), np.complex128)
        dzbar = np.empty_like(dz)
        c1 = 8.0 / 12.0 * inv_h
        c2 = 1.0 / 12.0 * inv_h
        for p in range(p_count):
            for k in range(2, ny - 2):
                for j in range(2, nx - 2):
                    fx = c1 * (fp[p, k, j + 1] - fp[p, k, j - 1]) - c2 * (fp[p, k, j + 2] - fp[p, k, j - 2])
                    fy = c1 * (fp[p, k + 1, j] - fp[p, k - 1, j]) - c2 * (fp[p, k + 2, j] - fp[p, k - 2, j])
                    dz[p, k - 2, j - 2] = ax * fx + ay * fy
                    dzbar[p, k - 2, j - 2] = bx * fx + by * fy
        return dz, dzbar


def wirtinger(fp: np.ndarray, domain: TorusDomain) -> tuple[np.ndarray, np.ndarray]:
    """``(d/dz f, d/dzbar f)`` of a padded field, trimmed by 2 per side."""
    if numba is None:
        return _wirtinger_numpy(fp, domain)
    lead = fp.shape[:-2]
    flat = np.ascontiguousarray(fp, dtype=complex).reshape((-1,) + fp.shape[-2:])
    (ax, ay), (bx, by) = domain.dz_coeffs, domain.dzbar_coeffs
    dz, dzbar = _wirtinger_kernel(flat, float(domain.N), complex(ax), complex(ay),
                                  complex(bx), complex(by))
    shape = lead + dz.shape[-2:]
    return dz.reshape(shape), dzbar.reshape(shape)


def ddbar(fp: np.ndarray, domain: TorusDomain) -> np.ndarray:
    """``d/dz d/dzbar f`` with true second-derivative stencils.

    Equals ``(|tau|^2 f_xx - 2 Re(tau) f_xy + f_yy) / (4 Im(tau)^2)``.
    """
    tau = domain.tau
    h = domain.spacing
    out = abs(tau) ** 2 * diff_xx(fp, h) + diff_yy(fp, h)
    if tau.real != 0.0:
        out = out - 2 * tau.real * diff_xy(fp, h)
    return out / (4 * tau.imag ** 2)


Twist = Callable[[np.ndarray, int], np.ndarray]


def d_z(f: np.ndarray, domain: TorusDomain, twist: Twist | None = None) -> np.ndarray:
    """Holomorphic Wirtinger derivative of a grid field.

    ``twist(f, width)`` must return ``f`` extended by ``width`` ghost layers;
    the default wraps periodically (base scalars).
    """
    fp = (twist or periodic_pad)(f, STENCIL_HALF_WIDTH)
    return wirtinger(fp, domain)[0]


def d_zbar(f: np.ndarray, domain: TorusDomain, twist: Twist | None = None) -> np.ndarray:
    fp = (twist or periodic_pad)(f, STENCIL_HALF_WIDTH)
    return wirtinger(fp, domain)[1]


def lambda_contract(f_zzbar: np.ndarray) -> np.ndarray:
    """Contraction with omega of a (1,1)-form given by its dz^dzbar coefficient.

    With ``omega = (i/2) dz ^ dzbar`` one has ``Lambda(dz ^ dzbar) = -2i``,
    so ``Lambda(omega) = 1``.
    """
    return -2j * np.asarray(f_zzbar)

"""Exact stability classification for the built-in bundle classes.

Only classes with textbook answers are supported: sums of line bundles,
the Atiyah bundles ``F_k`` and trace-free endomorphism bundles of those.
Anything else is rejected rather than guessed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class BundleClass:
    tag: str                       # "LineSum" | "Atiyah" | "End0Of"
    degrees: tuple[int, ...] = ()  # LineSum
    atiyah_rank: int = 0           # Atiyah
    inner: "BundleClass | None" = None  # End0Of

    def __post_init__(self):
        if self.tag == "LineSum":
            if not self.degrees:
                raise ValueError("LineSum needs at least one degree")
        elif self.tag == "Atiyah":
            if self.atiyah_rank < 1:
                raise ValueError("Atiyah rank must be >= 1")
        elif self.tag == "End0Of":
            if self.inner is None:
                raise ValueError("End0Of needs an inner class")
        else:
            raise ValueError(f"unsupported bundle class tag {self.tag!r}")

    @property
    def rank(self) -> int:
        if self.tag == "LineSum":
            return len(self.degrees)
        if self.tag == "Atiyah":
            return self.atiyah_rank
        return self.inner.rank ** 2 - 1

    @property
    def degree(self) -> int:
        if self.tag == "LineSum":
            return sum(self.degrees)
        return 0  # Atiyah bundles and trace-free endomorphism bundles

    @property
    def slope(self) -> Fraction:
        return Fraction(self.degree, self.rank)

    def summand_degrees(self) -> tuple[int, ...]:
        """Degrees of a split decomposition into line bundles, where one exists.

        ``End0Of(LineSum[d_1..d_r])`` splits into ``L_{d_i - d_j}`` (``i != j``)
        plus ``r - 1`` trivial summands.
        """
        if self.tag == "LineSum":
            return self.degrees
        if self.tag == "End0Of" and self.inner.tag == "LineSum":
            d = self.inner.degrees
            off = [a - b for i, a in enumerate(d) for j, b in enumerate(d) if i != j]
            return tuple(sorted(off + [0] * (len(d) - 1), reverse=True))
        raise ValueError(f"{self} has no split line-bundle decomposition")


def line_sum(*degrees: int) -> BundleClass:
    return BundleClass("LineSum", degrees=tuple(int(d) for d in degrees))


def atiyah(rank: int = 2) -> BundleClass:
    return BundleClass("Atiyah", atiyah_rank=int(rank))


def end0_of(inner: BundleClass) -> BundleClass:
    return BundleClass("End0Of", inner=inner)


def bundle_class(descriptor: dict) -> BundleClass:
    """Classify a bundle construction descriptor (see :mod:`flowlab.bundles`)."""
    kind = descriptor.get("kind")
    if kind == "line":
        return line_sum(descriptor["degree"])
    if kind == "sum":
        parts = [bundle_class(d) for d in descriptor["summands"]]
        if all(p.tag == "LineSum" for p in parts):
            return line_sum(*(d for p in parts for d in p.degrees))
        raise ValueError("only sums of line bundles are classified")
    if kind == "atiyah":
        return atiyah(2)
    if kind == "dual":
        inner = bundle_class(descriptor["of"])
        if inner.tag == "LineSum":
            return line_sum(*(-d for d in inner.degrees))
        if inner.tag == "Atiyah":
            return inner  # the unipotent extension is self-dual
        raise ValueError("duals are only classified for line sums and Atiyah bundles")
    if kind == "tensor":
        a, b = (bundle_class(d) for d in descriptor["factors"])
        if a.tag == b.tag == "LineSum":
            return line_sum(*(da + db for da in a.degrees for db in b.degrees))
        raise ValueError("tensor products are only classified for line sums")
    if kind == "end0":
        return end0_of(bundle_class(descriptor["of"]))
    raise ValueError(f"no stability oracle for bundle kind {kind!r}")


@dataclass(frozen=True)
class Verdict:
    value: bool
    certificate: str

    def __bool__(self) -> bool:
        return self.value


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def is_semistable(c: BundleClass) -> Verdict:
    """Semistability with a one-line reason."""
    if c.tag == "LineSum":
        top = max(c.degrees)
        if all(d == top for d in c.degrees):
            return Verdict(True, f"all line summands have degree {top} = mu")
        return Verdict(False, f"sub-line-bundle of degree {top} > mu = {_fmt(c.slope)}")
    if c.tag == "Atiyah":
        return Verdict(True, "every line subbundle has degree <= 0 = mu")
    inner = is_semistable(c.inner)
    if inner:
        return Verdict(True, f"adjoint bundle of a semistable bundle ({inner.certificate})")
    return Verdict(False, f"adjoint bundle of an unstable bundle ({inner.certificate})")


def is_polystable(c: BundleClass) -> bool:
    if c.tag == "LineSum":
        return len(set(c.degrees)) == 1
    if c.tag == "Atiyah":
        return c.atiyah_rank == 1
    return is_polystable(c.inner)


def hn_slopes(c: BundleClass) -> list[float]:
    """Slopes of the Harder-Narasimhan filtration, decreasing."""
    if c.tag == "Atiyah":
        return [0.0]
    if c.tag == "End0Of" and c.inner.tag != "LineSum":
        if is_semistable(c.inner):
            return [0.0]
        raise ValueError("HN slopes are only tabulated for split or semistable classes")
    return [float(d) for d in sorted(set(c.summand_degrees()), reverse=True)]


def predicted_flow_infimum(c: BundleClass, vol: float = 1.0) -> float:
    """Limit of ``sup |K - lam|`` along the flow for the supported classes.

    Zero for semistable classes.  A split class decouples into line-bundle
    flows that converge to constant curvature ``2 pi d_i / vol``, so the
    deviation tends to ``(2 pi / vol) max |d_i - mu|``.
    """
    if is_semistable(c):
        return 0.0
    d = np.array(c.summand_degrees(), dtype=float)
    mu = d.sum() / len(d)
    return float(2 * np.pi / vol * np.max(np.abs(d - mu)))

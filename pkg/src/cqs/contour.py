"""Complex-energy contours for the two-particle Green's-function convolution.

Two contour families are supported:

* a straight line through ``E/2`` rotated by an angle ``phi`` in
  ``(-pi, 0)`` (variant ``RotatedLine``), and
* a rational deformation ``energy(t) = t + i D (E/2 - t) / (1 + t^2)``
  that hugs the real axis at both ends (variant ``RationalDeformation``).

Both are traversed from large positive real energies towards large negative
ones (the orientation that reproduces ``+1`` for a counterclockwise residue
around the spectrum below the contour); node weights fold in the Jacobian,
the ``1/(2 pi i)`` prefactor, and that traversal sign, so downstream code
only ever computes ``sum(weights * integrand(energies))``.

The square-root momenta ``k1 = sqrt(2 energy)`` and
``k2 = sqrt(2 (E - energy))`` are branch-tracked by continuity: ``k1`` is
anchored on the physical sheet (``Im k > 0``) at the negative-energy end,
``k2`` at the positive-energy end.  Between the ends each momentum crosses
onto the unphysical sheet; the ``sheet`` flags record where.

Discretization uses panelwise Gauss-Legendre nodes, geometrically refined
toward the axis crossing, plus two mapped infinite tail panels (parameter
``extent / v^2``) so the slow algebraic tails of the convolution integrand
are integrated rather than truncated.
"""
from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np

from cqs.specfun import make_quadrature

__all__ = [
    "BranchContinuityError",
    "Contour",
    "ContourNode",
    "ContourSpec",
    "RationalDeformation",
    "RotatedLine",
    "c1_point",
    "c2_point",
    "discretize",
    "track_branches",
]

_BOUND_POLE_CLEARANCE = 0.05


class BranchContinuityError(RuntimeError):
    """Adjacent contour nodes imply a square-root branch jump."""


@dataclass(frozen=True)
class RotatedLine:
    """Straight contour through E/2 at angle phi, parametrized by arclength s."""

    phi: float
    extent: float = 320.0

    def __post_init__(self):
        if not -math.pi < self.phi < 0.0:
            raise ValueError("rotation angle must lie in (-pi, 0)")


@dataclass(frozen=True)
class RationalDeformation:
    """Deformed contour approaching the real axis at both ends."""

    d: float
    extent: float = 320.0

    def __post_init__(self):
        if self.d <= 0.0:
            raise ValueError("deformation strength D must be positive")


Variant = Union[RotatedLine, RationalDeformation]


def c1_point(s, energy: float, phi: float):
    """Energy on the rotated-line contour: E/2 + s exp(i phi)."""
    return 0.5 * energy + np.asarray(s) * cmath.exp(1j * phi)


def c2_point(t, energy: float, d: float):
    """Energy on the rational deformation: t + i D (E/2 - t) / (1 + t^2)."""
    t = np.asarray(t, dtype=float)
    return t + 1j * d * (0.5 * energy - t) / (1.0 + t * t)


def _c2_jacobian(t, energy: float, d: float):
    t = np.asarray(t, dtype=float)
    return 1.0 + 1j * d * (t * t - energy * t - 1.0) / (1.0 + t * t) ** 2


@dataclass(frozen=True)
class ContourSpec:
    """Contour variant plus quadrature layout.

    ``panels`` counts geometric panels per side of the axis crossing;
    ``extent`` (carried by the variant) is where the mapped tail panels
    take over, not a truncation point.
    """

    variant: Variant
    energy: float
    panels: int = 13
    nodes_per_panel: int = 16
    tail_nodes: int = 48

    def __post_init__(self):
        if self.energy <= 0.0:
            raise ValueError("total energy must be positive")
        if self.variant.extent <= self.energy:
            raise ValueError("contour extent must exceed the total energy")
        if self.panels < 2 or self.nodes_per_panel < 2:
            raise ValueError("need at least 2 panels and 2 nodes per panel")

    @property
    def kind(self) -> str:
        return "c1" if isinstance(self.variant, RotatedLine) else "c2"

    def fingerprint(self) -> str:
        v = self.variant
        shape = f"phi={v.phi!r}" if isinstance(v, RotatedLine) else f"d={v.d!r}"
        text = (
            f"kind={self.kind};{shape};extent={v.extent!r};E={self.energy!r};"
            f"panels={self.panels};npp={self.nodes_per_panel};tail={self.tail_nodes}"
        )
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ContourNode:
    energy: complex
    weight: complex
    k1: complex
    k2: complex
    k1_physical: bool
    k2_physical: bool


@dataclass(frozen=True)
class Contour:
    """Discretized contour: immutable node arrays ordered left to right.

    The first and last ``tail_count`` nodes belong to the mapped infinite
    tail panels; ``core`` selects the finite-parameter part in between.
    """

    spec: ContourSpec
    params: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)
    tail_count: int = 0

    @property
    def size(self) -> int:
        return self.energies.size

    @property
    def core(self) -> slice:
        return slice(self.tail_count, self.size - self.tail_count)

    @property
    def k1_physical(self) -> np.ndarray:
        return self.k1.imag > 0.0

    @property
    def k2_physical(self) -> np.ndarray:
        return self.k2.imag > 0.0

    def nodes(self) -> Iterator[ContourNode]:
        for i in range(self.size):
            yield ContourNode(
                energy=complex(self.energies[i]),
                weight=complex(self.weights[i]),
                k1=complex(self.k1[i]),
                k2=complex(self.k2[i]),
                k1_physical=bool(self.k1[i].imag > 0.0),
                k2_physical=bool(self.k2[i].imag > 0.0),
            )


def track_branches(energies: np.ndarray, total_energy: float):
    """Continuity-tracked momenta (k1, k2) along an ordered energy sequence.

    ``k1`` is anchored with ``Im k1 > 0`` at the first node (the
    negative-real-energy end), ``k2`` with ``Im k2 > 0`` at the last node;
    in between the sign of the principal square root is flipped whenever
    that keeps the sequence continuous.  Raises
    :class:`BranchContinuityError` if both sign choices jump by more than
    pi/2 in phase between adjacent nodes.
    """
    energies = np.asarray(energies, dtype=complex)

    def _track(values, anchor_first: bool):
        order = range(len(values)) if anchor_first else range(len(values) - 1, -1, -1)
        out = np.empty(len(values), dtype=complex)
        prev = None
        for i in order:
            root = np.sqrt(values[i])
            if prev is None:
                if root.imag < 0.0:
                    root = -root
            else:
                if abs(root - prev) > abs(root + prev):
                    root = -root
                dphase = abs(cmath.phase(root / prev)) if prev != 0 else 0.0
                if dphase > 0.5 * math.pi:
                    raise BranchContinuityError(
                        f"branch jump of {dphase:.3f} rad at node {i}; contour too coarse"
                    )
            out[i] = root
            prev = root
        return out

    k1 = _track(2.0 * energies, anchor_first=True)
    k2 = _track(2.0 * (total_energy - energies), anchor_first=False)
    return k1, k2


def _panel_edges(first: float, extent: float, panels: int) -> np.ndarray:
    ratio = (extent / first) ** (1.0 / (panels - 1))
    return first * ratio ** np.arange(panels)


def discretize(spec: ContourSpec) -> Contour:
    """Panelwise Gauss-Legendre discretization with mapped infinite tails."""
    variant = spec.variant
    energy = spec.energy
    extent = variant.extent
    center = 0.0 if isinstance(variant, RotatedLine) else 0.5 * energy

    edges = _panel_edges(0.35, extent, spec.panels)
    bounds = np.concatenate([center - edges[::-1], [center], center + edges])
    # the square-root branch points (energy = 0 and energy = E) and the two
    # bound-pole families (energy = -2/n^2 and energy = E + 2/n^2) sit within
    # a fraction of a unit of the contour; pin panel edges to their
    # parameters so no panel straddles a nearby singularity
    specials = [0.0, energy]
    for npole in range(1, 9):
        specials += [-2.0 / npole**2, energy + 2.0 / npole**2]
    for special in specials:
        if bounds[0] < special < bounds[-1] and np.min(np.abs(bounds - special)) > 1e-9:
            bounds = np.sort(np.append(bounds, special))
    # cap the energy-space arc length per panel: strong deformations sweep
    # wide fast arcs near the centre that a fixed node count cannot track
    refined = [bounds[0]]
    for hi in bounds[1:]:
        lo = refined[-1]
        if abs(lo - center) < 12.0:
            mid = 0.5 * (lo + hi)
            if isinstance(variant, RotatedLine):
                speed = 1.0
            else:
                speed = max(1.0, abs(_c2_jacobian(mid, energy, variant.d)))
            pieces = int(math.ceil((hi - lo) * speed / 0.5))
            if pieces > 1:
                refined.extend(lo + (hi - lo) * np.arange(1, pieces + 1) / pieces)
            else:
                refined.append(hi)
        else:
            refined.append(hi)
    bounds = np.asarray(refined)
    rule = make_quadrature("legendre", spec.nodes_per_panel)

    params = []
    dparam = []  # quadrature weight times d(param)/d(quadrature variable)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        half = 0.5 * (hi - lo)
        params.append(lo + half * (rule.nodes + 1.0))
        dparam.append(half * rule.weights)

    # mapped tails: param = center +- extent / v^2, v in (0, 1]
    tail_rule = make_quadrature("legendre", spec.tail_nodes)
    v = 0.5 * (tail_rule.nodes + 1.0)
    dv = 0.5 * tail_rule.weights
    left = center - extent / (v * v)
    d_left = 2.0 * extent / v**3 * dv
    params.insert(0, left)
    dparam.insert(0, d_left)
    right = center + extent / (v[::-1] * v[::-1])
    d_right = 2.0 * extent / v[::-1] ** 3 * dv[::-1]
    params.append(right)
    dparam.append(d_right)

    params = np.concatenate(params)
    dparam = np.concatenate(dparam)

    if isinstance(variant, RotatedLine):
        energies = c1_point(params, energy, variant.phi)
        jac = np.full_like(params, cmath.exp(1j * variant.phi), dtype=complex)
    else:
        energies = c2_point(params, energy, variant.d)
        jac = _c2_jacobian(params, energy, variant.d)

    # traversal runs from +infinity to -infinity: sign -1 on the
    # increasing-parameter layout, folded with 1/(2 pi i)
    weights = dparam * jac * (-1.0) / (2j * math.pi)

    poles = np.concatenate([-2.0 / np.arange(1, 51) ** 2, energy + 2.0 / np.arange(1, 51) ** 2, [0.0, energy]])
    clearance = np.abs(energies[:, None] - poles[None, :]).min()
    if clearance <= _BOUND_POLE_CLEARANCE:
        raise ValueError(
            f"contour approaches a bound-state pole within {clearance:.3g} a.u."
        )

    k1, k2 = track_branches(energies, energy)
    return Contour(
        spec=spec,
        params=params,
        energies=energies,
        weights=weights,
        k1=k1,
        k2=k2,
        tail_count=spec.tail_nodes,
    )


def energy_derivatives(spec: ContourSpec, t):
    """d(energy)/d(param) and its param-derivative along the contour."""
    t = np.asarray(t, dtype=float)
    variant = spec.variant
    if isinstance(variant, RotatedLine):
        jac = np.full(t.shape, cmath.exp(1j * variant.phi), dtype=complex)
        return jac, np.zeros(t.shape, dtype=complex)
    d, energy = variant.d, spec.energy
    jac = _c2_jacobian(t, energy, d)
    second = (
        1j
        * d
        * ((2.0 * t - energy) * (1.0 + t * t) - 4.0 * t * (t * t - energy * t - 1.0))
        / (1.0 + t * t) ** 3
    )
    return jac, second

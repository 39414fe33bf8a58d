"""Two-particle basis functions by complex-energy convolution.

The central object is the rank-4 coefficient tensor

    G[m1, m2, n1, n2] = sum over contour nodes of
        weight * G1[m1, n1](k1) * G2[m2, n2](k2),

the Laguerre representation of the outgoing two-particle Green's operator at
total energy E.  Evaluating the expansion with these coefficients gives the
convoluted basis functions at moderate radii; a direct contour integral of
the one-particle integral representations (``cqs_eval_contour``) reaches
arbitrary radii and is the route used for asymptotic figure data.

Point evaluation along the contour carries explicit endpoint corrections:
the integrand tails oscillate like ``exp(i k r)`` with slowly decaying
amplitude, so the two mapped tail panels are replaced by a two-term
stationary-phase-free integration-by-parts series evaluated at the tail
start.  The tensor integrand carries no such oscillation and uses the
mapped tail panels directly.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from cqs.contour import Contour, ContourSpec, RationalDeformation, discretize
from cqs.jmatrix import (
    Kinematics,
    LaguerreBasisSpec,
    green_matrix_1p,
    kinematics,
    s_coefficient,
    sigma_phase_factor,
    sine_factor_array,
    s_prefactor,
)
from cqs.qs1p import qs_eval_integral

__all__ = [
    "CqsTensor",
    "HypersphericalPoint",
    "b_normalizer",
    "build_tensor",
    "cqs_asymptotic",
    "cqs_eval_contour",
    "cqs_eval_expansion",
    "load_tensor",
    "save_tensor",
    "stationary_energy",
]


@dataclass(frozen=True)
class HypersphericalPoint:
    """Radial pair with derived hyperspherical coordinates."""

    r1: float
    r2: float

    @property
    def rho(self) -> float:
        return math.hypot(self.r1, self.r2)

    @property
    def alpha(self) -> float:
        return math.atan2(self.r2, self.r1)

    def momenta(self, energy: float) -> tuple[float, float]:
        p = math.sqrt(2.0 * energy)
        return p * math.cos(self.alpha), p * math.sin(self.alpha)

    @classmethod
    def from_hyperspherical(cls, rho: float, alpha: float) -> "HypersphericalPoint":
        return cls(r1=rho * math.cos(alpha), r2=rho * math.sin(alpha))


def stationary_energy(alpha: float, energy: float) -> float:
    """Stationary energy of the convolution phase at hyperangle alpha."""
    return math.cos(alpha) ** 2 * energy


@dataclass(frozen=True)
class CqsTensor:
    """Convolution tensor with its generating parameters."""

    energy: float
    spec1: LaguerreBasisSpec
    spec2: LaguerreBasisSpec
    entries: np.ndarray = field(repr=False)
    contour_fingerprint: str = ""

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _as_contour(contour, energy: float) -> Contour:
    if isinstance(contour, Contour):
        if abs(contour.spec.energy - energy) > 1e-12:
            raise ValueError("contour was discretized at a different total energy")
        return contour
    if isinstance(contour, ContourSpec):
        return discretize(contour)
    raise TypeError("expected a Contour or ContourSpec")


def build_tensor(
    energy: float,
    spec1: LaguerreBasisSpec,
    spec2: LaguerreBasisSpec,
    contour,
    charge: float = 2.0,
) -> CqsTensor:
    """Assemble the two-particle Green's tensor over a discretized contour."""
    ct = _as_contour(contour, energy)
    n1, n2 = spec1.size, spec2.size
    out = np.zeros((n1, n2, n1, n2), dtype=complex)
    block = 64
    g1s = np.empty((block, n1, n1), dtype=complex)
    g2s = np.empty((block, n2, n2), dtype=complex)
    for start in range(0, ct.size, block):
        stop = min(start + block, ct.size)
        for i in range(start, stop):
            g1s[i - start] = green_matrix_1p(spec1, kinematics(spec1, ct.k1[i], charge))
            g2s[i - start] = green_matrix_1p(spec2, kinematics(spec2, ct.k2[i], charge))
        w = ct.weights[start:stop]
        out += np.einsum("w,wac,wbd->abcd", w, g1s[: stop - start], g2s[: stop - start])
    return CqsTensor(
        energy=energy,
        spec1=spec1,
        spec2=spec2,
        entries=out,
        contour_fingerprint=ct.spec.fingerprint(),
    )


def _basis_column(spec: LaguerreBasisSpec, r: np.ndarray, count: int) -> np.ndarray:
    from cqs.qs1p import _basis_value

    big = LaguerreBasisSpec(b=spec.b, ell=spec.ell, size=count)
    return np.stack([_basis_value(big, n, r) for n in range(count)])


def cqs_eval_expansion(tensor: CqsTensor, n1: int, n2: int, r1, r2, limit: int | None = None):
    """Laguerre-expansion value of the two-particle basis function."""
    m = tensor.size if limit is None else limit
    if m > tensor.size:
        raise ValueError("expansion limit exceeds the tensor dimension")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    p1 = _basis_column(tensor.spec1, np.atleast_1d(r1), m)
    p2 = _basis_column(tensor.spec2, np.atleast_1d(r2), m)
    g = tensor.entries[:m, :m, n1, n2]
    vals = np.einsum("ax,bx,ab->x", p1, p2, g)
    return complex(vals[0]) if r1.ndim == 0 else vals.reshape(r1.shape)


def _qs_pair_product(spec1, spec2, n1, n2, k1, k2, r1, r2, charge):
    q1 = qs_eval_integral(spec1, n1, kinematics(spec1, k1, charge), r1)
    q2 = qs_eval_integral(spec2, n2, kinematics(spec2, k2, charge), r2)
    return np.asarray(q1) * np.asarray(q2)


def cqs_eval_contour(
    spec1: LaguerreBasisSpec,
    spec2: LaguerreBasisSpec,
    n1: int,
    n2: int,
    r1,
    r2,
    contour,
    energy: float,
    charge: float = 2.0,
):
    """Two-particle basis function by direct contour integration.

    Requires a rational-deformation contour: on a rotated line the
    integrand grows exponentially along the unphysical half, while the
    deformed path approaches the real axis and stays integrable.
    ``r1``/``r2`` may be equal-shape arrays.

    Past the finite panels the integrand oscillates like
    ``exp(i (k1 r1 + k2 r2))`` with an algebraically decaying amplitude,
    which panel quadrature cannot track; the tails are therefore summed by a
    two-term integration-by-parts endpoint series instead of node sampling.
    """
    ct = _as_contour(contour, energy)
    if not isinstance(ct.spec.variant, RationalDeformation):
        raise ValueError("pointwise contour evaluation requires the deformed (c2) contour")
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)

    core = ct.core
    acc = np.zeros(np.broadcast_shapes(r1.shape, r2.shape), dtype=complex)
    for i in range(core.start, core.stop):
        acc += ct.weights[i] * _qs_pair_product(
            spec1, spec2, n1, n2, ct.k1[i], ct.k2[i], r1, r2, charge
        )
    for side in (-1, +1):
        acc += endpoint_series(
            ct,
            r1,
            r2,
            side,
            lambda k1, k2: _qs_pair_product(spec1, spec2, n1, n2, k1, k2, r1, r2, charge),
        )
    zero = (r1 == 0.0) | (r2 == 0.0)
    if np.any(zero):
        acc = np.where(zero, 0.0, acc)
    return complex(acc) if acc.ndim == 0 else acc


def endpoint_series(ct, r1, r2, side, amplitude):
    """Integration-by-parts completion of one oscillatory contour tail.

    ``amplitude(k1, k2)`` returns the slowly varying integrand factor
    (everything except the ``exp(i (k1 r1 + k2 r2))`` oscillation and the
    Jacobian-weight density, which are handled here); it is sampled at the
    tail start and one step either side for the first derivative.  The
    remainder after two terms scales with the amplitude's second
    derivative over the squared phase rate.
    """
    from cqs.contour import c2_point, energy_derivatives

    variant = ct.spec.variant
    energy = ct.spec.energy
    t_end = side * variant.extent
    delta = 0.02 * variant.extent

    def f_and_phase(t):
        eps = complex(c2_point(t, energy, variant.d))
        jac, _ = energy_derivatives(ct.spec, t)
        k1, k2 = _tracked_pair(ct, t, eps, energy)
        fval = complex(jac) * (-1.0) / (2j * math.pi) * amplitude(k1, k2)
        phi = k1 * r1 + k2 * r2
        return fval * np.exp(-1j * phi), phi, k1, k2

    f0, phi0, k1, k2 = f_and_phase(t_end)
    fm, _, _, _ = f_and_phase(t_end - delta)
    fp, _, _, _ = f_and_phase(t_end + delta)
    jac, jac2 = energy_derivatives(ct.spec, t_end)
    jac, jac2 = complex(jac), complex(jac2)
    dphi = (jac / k1) * r1 + (-jac / k2) * r2
    ddphi = (jac2 / k1 - jac * jac / k1**3) * r1 + (-jac2 / k2 - jac * jac / k2**3) * r2
    fprime = (fp - fm) / (2.0 * delta)
    i_dphi = 1j * dphi
    f1 = -fprime / i_dphi + f0 * ddphi / (1j * dphi * dphi)
    # int to +infinity enters with -1/(i phi'), from -infinity with +1/(i phi')
    return -side * np.exp(1j * phi0) * (f0 + f1) / i_dphi


def _tracked_pair(ct, t, eps, energy):
    """Square-root pair at an off-node parameter, matched to the node branches."""
    core = ct.core
    idx = core.stop - 1 if t > 0 else core.start
    ref1, ref2 = ct.k1[idx], ct.k2[idx]
    k1 = complex(np.sqrt(2.0 * eps))
    if abs(k1 - ref1) > abs(k1 + ref1):
        k1 = -k1
    k2 = complex(np.sqrt(2.0 * (energy - eps)))
    if abs(k2 - ref2) > abs(k2 + ref2):
        k2 = -k2
    return k1, k2


def b_normalizer(spec: LaguerreBasisSpec, n: int, kin: Kinematics) -> complex:
    """Asymptotic normalizer: the n-dependent factor of the sine coefficient."""
    return complex(sine_factor_array(spec, kin, n + 1)[n])


def cqs_asymptotic(
    spec1: LaguerreBasisSpec,
    spec2: LaguerreBasisSpec,
    n1: int,
    n2: int,
    point: HypersphericalPoint,
    energy: float,
    charge: float = 2.0,
) -> complex:
    """Six-dimensional outgoing-wave asymptotic form of the basis function."""
    p1, p2 = point.momenta(energy)
    kin1 = kinematics(spec1, p1, charge)
    kin2 = kinematics(spec2, p2, charge)
    s1 = s_coefficient(spec1, n1, kin1)
    s2 = s_coefficient(spec2, n2, kin2)
    sig1 = sigma_phase_factor(spec1.ell, kin1)
    sig2 = sigma_phase_factor(spec2.ell, kin2)
    rho = point.rho
    pref = (1.0 / energy) * math.sqrt(2.0 / math.pi) * (2.0 * energy) ** 0.75
    pref *= np.exp(0.25j * math.pi) / math.sqrt(rho)
    log_phase = np.exp(
        1j
        * (
            math.sqrt(2.0 * energy) * rho
            - kin1.beta.real * math.log(2.0 * p1 * point.r1)
            - kin2.beta.real * math.log(2.0 * p2 * point.r2)
            - 0.5 * math.pi * (spec1.ell + spec2.ell)
        )
    )
    return pref * s1 * s2 * log_phase * sig1 * sig2


_CACHE_MAGIC = "cqs-tensor-v1"


def cache_key(tensor_params: dict) -> str:
    import hashlib

    text = ";".join(f"{k}={tensor_params[k]!r}" for k in sorted(tensor_params))
    return hashlib.sha256(text.encode()).hexdigest()[:24]


def save_tensor(path: str, tensor: CqsTensor) -> None:
    """Self-describing binary layout: text header, blank line, raw payload.

    The payload is the row-major little-endian complex128 tensor (pairs of
    64-bit reals); the header records every generating parameter.
    """
    header = [
        _CACHE_MAGIC,
        f"energy={tensor.energy!r}",
        f"b1={tensor.spec1.b!r} ell1={tensor.spec1.ell} size1={tensor.spec1.size}",
        f"b2={tensor.spec2.b!r} ell2={tensor.spec2.ell} size2={tensor.spec2.size}",
        f"contour={tensor.contour_fingerprint}",
        f"shape={','.join(map(str, tensor.entries.shape))}",
        "",
    ]
    payload = np.ascontiguousarray(tensor.entries, dtype="<c16").tobytes()
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write("\n".join(header).encode())
        fh.write(payload)
    os.replace(tmp, path)


def load_tensor(path: str) -> CqsTensor:
    with open(path, "rb") as fh:
        blob = fh.read()
    head, _, payload = blob.partition(b"\n\n")
    lines = head.decode().splitlines()
    if lines[0] != _CACHE_MAGIC:
        raise ValueError(f"not a tensor cache file: {path}")
    fields = dict(part.split("=", 1) for line in lines[1:] for part in line.split())
    shape = tuple(int(s) for s in fields["shape"].split(","))
    entries = np.frombuffer(payload, dtype="<c16").reshape(shape).copy()
    spec1 = LaguerreBasisSpec(b=float(fields["b1"]), ell=int(fields["ell1"]), size=int(fields["size1"]))
    spec2 = LaguerreBasisSpec(b=float(fields["b2"]), ell=int(fields["ell2"]), size=int(fields["size2"]))
    return CqsTensor(
        energy=float(fields["energy"]),
        spec1=spec1,
        spec2=spec2,
        entries=entries,
        contour_fingerprint=fields["contour"],
    )

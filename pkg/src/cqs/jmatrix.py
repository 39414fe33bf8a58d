"""Laguerre basis, kinematic factors, and one-particle Coulomb Green's matrices.

The Green's function of the radial Coulomb Hamiltonian (charge ``Z``, default
helium ``Z = 2``) is represented over the Laguerre basis by the product of a
sine-like and an outgoing cosine-like coefficient solution of the tridiagonal
eigenvalue problem.  All coefficient functions are analytic in the momentum
and are evaluated with explicit principal-branch conventions so they can be
continued onto the unphysical sheet ``Im k < 0``:

* ``omega ** (i beta)`` means ``exp(i beta Log omega)`` with the principal
  logarithm;
* ``|Gamma(l + 1 + i beta)|`` means the principal square root of
  ``Gamma(l + 1 + i beta) * Gamma(l + 1 - i beta)``, which reduces to the
  modulus for real momenta and cancels identically in the Green's product.

Everything is a pure function; matrices are plain immutable-by-convention
complex ndarrays.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from cqs.specfun import gamma_complex, hyp2f1, hyp2f1_terminating, laguerre_poly

__all__ = [
    "DegenerateMomentumError",
    "Kinematics",
    "LaguerreBasisSpec",
    "c_plus_coefficient",
    "green_matrix_1p",
    "kinematics",
    "laguerre_basis_deriv",
    "laguerre_basis_eval",
    "s_coefficient",
    "sigma_phase_factor",
]


class DegenerateMomentumError(ValueError):
    """Momentum at k = 0 or k = +-i b where the kinematic map degenerates."""


@dataclass(frozen=True)
class LaguerreBasisSpec:
    """Scale, angular momentum, and size of a radial Laguerre basis set."""

    b: float
    ell: int = 0
    size: int = 1

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("basis scale b must be positive")
        if self.ell < 0:
            raise ValueError("angular momentum must be non-negative")
        if self.size < 1:
            raise ValueError("basis size must be >= 1")


@dataclass(frozen=True)
class Kinematics:
    """Momentum-derived quantities entering every coefficient function."""

    k: complex
    omega: complex
    sin_xi: complex
    beta: complex
    charge: float = 2.0

    @property
    def log_omega(self) -> complex:
        return cmath.log(self.omega)


def kinematics(spec: LaguerreBasisSpec, k, charge: float = 2.0) -> Kinematics:
    """Build the kinematic factors for momentum ``k`` on basis ``spec``.

    ``omega = (b + ik)/(b - ik)`` and ``sin xi = 2bk/(b^2 + k^2)``; the
    Sommerfeld parameter is ``beta = -charge/k``.
    """
    k = complex(k)
    b = spec.b
    if k == 0.0 or abs(k - 1j * b) < 1e-14 * b or abs(k + 1j * b) < 1e-14 * b:
        raise DegenerateMomentumError(f"degenerate momentum k = {k}")
    omega = (b + 1j * k) / (b - 1j * k)
    sin_xi = 2.0 * b * k / (b * b + k * k)
    beta = -charge / k
    return Kinematics(k=k, omega=omega, sin_xi=sin_xi, beta=beta, charge=charge)


def _poch_int(a: int, n: int) -> float:
    return math.prod(range(a, a + n)) if n > 0 else 1.0


def laguerre_basis_eval(spec: LaguerreBasisSpec, n, r):
    """Radial basis function value, vectorised over ``n`` and/or ``r``.

    The functions vanish like ``r**(l+1)`` at the origin and are orthonormal
    against the weight ``1/r``.
    """
    n = np.asarray(n)
    r = np.asarray(r, dtype=float)
    ell, b = spec.ell, spec.b
    x = 2.0 * b * r
    norm = np.array([1.0 / math.sqrt(_poch_int(int(m) + 1, 2 * ell + 1)) for m in np.atleast_1d(n)])
    norm = norm.reshape(np.shape(n))
    vals = np.empty(np.broadcast_shapes(np.shape(n), np.shape(r)))
    for idx, m in np.ndenumerate(n):
        vals[idx] = norm[idx] * np.power(x, ell + 1) * np.exp(-b * r) * laguerre_poly(int(m), 2 * ell + 1, x)
    if n.ndim == 0:
        single = norm * np.power(x, ell + 1) * np.exp(-b * r) * laguerre_poly(int(n), 2 * ell + 1, x)
        return float(single) if np.ndim(single) == 0 else single
    return vals


def laguerre_basis_deriv(spec: LaguerreBasisSpec, n: int, r):
    """d/dr of the radial basis function (uses dL_n^a/dx = -L_{n-1}^{a+1})."""
    r = np.asarray(r, dtype=float)
    ell, b = spec.ell, spec.b
    a = 2 * ell + 1
    x = 2.0 * b * r
    norm = 1.0 / math.sqrt(_poch_int(n + 1, a))
    ln = laguerre_poly(n, a, x)
    dln = -laguerre_poly(n - 1, a + 1, x) if n >= 1 else np.zeros_like(x)
    inner = ((ell + 1.0) / np.where(x == 0.0, 1.0, x) - 0.5) * ln + dln
    val = norm * 2.0 * b * np.power(x, ell + 1) * np.exp(-b * r) * inner
    if ell == 0:
        # safe at the origin: psi' (0) = 2 b norm
        val = np.where(r == 0.0, norm * 2.0 * b, val)
    else:
        val = np.where(r == 0.0, 0.0, val)
    return float(val) if val.ndim == 0 else val


def _abs_gamma_analytic(ell: int, beta) -> complex:
    """Analytic continuation of |Gamma(l+1+i beta)| (principal square root)."""
    g = gamma_complex(ell + 1.0 + 1j * beta) * gamma_complex(ell + 1.0 - 1j * beta)
    return cmath.sqrt(g)


def sigma_phase_factor(ell: int, kin: Kinematics) -> complex:
    """Unit-modulus Coulomb phase factor exp(i sigma_l(k))."""
    g = gamma_complex(ell + 1.0 + 1j * kin.beta)
    return g / _abs_gamma_analytic(ell, kin.beta)


def sine_factor_array(spec: LaguerreBasisSpec, kin: Kinematics, count: int) -> np.ndarray:
    """n-dependent factor shared by the sine-like solution and its normalizer.

    ``[(n+1)_{2l+1}]^{1/2} (-omega)^n 2F1(-n, l+1+i beta; 2l+2; 1-omega^-2)``
    for ``n = 0 .. count-1``, generated by the contiguous three-term
    recurrence in ``n`` (stable; the direct alternating sum loses digits
    beyond n of about 15).
    """
    ell = spec.ell
    b2f1 = ell + 1.0 + 1j * kin.beta
    c2f1 = 2.0 * ell + 2.0
    z = 1.0 - kin.omega ** (-2)
    f = np.empty(count, dtype=complex)
    f[0] = 1.0
    if count > 1:
        f[1] = 1.0 - b2f1 * z / c2f1
    for n in range(1, count - 1):
        f[n + 1] = ((2.0 * n + c2f1 - (b2f1 + n) * z) * f[n] + n * (z - 1.0) * f[n - 1]) / (c2f1 + n)
    norm = np.array([math.sqrt(_poch_int(n + 1, 2 * ell + 1)) for n in range(count)])
    return norm * (-kin.omega) ** np.arange(count) * f


def s_prefactor(spec: LaguerreBasisSpec, kin: Kinematics) -> complex:
    """n-independent prefactor of the sine-like coefficients."""
    ell = spec.ell
    beta = kin.beta
    phase = cmath.exp(-math.pi * beta / 2.0 - 1j * beta * kin.log_omega)
    pref = 0.5 * (2.0 * kin.sin_xi) ** (ell + 1) * phase
    return pref * _abs_gamma_analytic(ell, beta) / math.factorial(2 * ell + 1)


def s_coefficient(spec: LaguerreBasisSpec, n: int, kin: Kinematics) -> complex:
    """Sine-like expansion coefficient S_{n l}(k); real for real k > 0."""
    return s_prefactor(spec, kin) * complex(sine_factor_array(spec, kin, n + 1)[n])


def c_plus_coefficient(spec: LaguerreBasisSpec, n: int, kin: Kinematics) -> complex:
    """Outgoing cosine-like coefficient C^{(+)}_{n l}(k).

    The embedded 2F1 argument is omega^2, which leaves the unit disk on the
    unphysical sheet; :func:`cqs.specfun.hyp2f1` continues it analytically.
    """
    ell = spec.ell
    beta = kin.beta
    omega = kin.omega
    z = omega * omega
    f = hyp2f1(-ell + 1j * beta, n + 1.0, n + ell + 2.0 + 1j * beta, z)
    pref = -math.sqrt(math.factorial(n) * math.factorial(n + 2 * ell + 1))
    pref *= cmath.exp(math.pi * beta / 2.0 + 1j * beta * kin.log_omega)
    pref /= (2.0 * kin.sin_xi) ** ell
    pref *= sigma_phase_factor(ell, kin)
    pref *= (-omega) ** (n + 1) / gamma_complex(n + ell + 2.0 + 1j * beta)
    return pref * f


def s_coefficient_array(spec: LaguerreBasisSpec, kin: Kinematics) -> np.ndarray:
    """All S_{n l}(k) for n < spec.size in one pass."""
    return s_prefactor(spec, kin) * sine_factor_array(spec, kin, spec.size)


def green_matrix_1p(spec: LaguerreBasisSpec, kin: Kinematics) -> np.ndarray:
    """Dense one-particle Green's matrix G^{l(+)}_{mn}(k).

    ``G_{mn} = -(2/k) S_{min(m,n)} C^{(+)}_{max(m,n)}``, symmetric by
    construction.  The caller is responsible for the branch of ``k`` (see
    :mod:`cqs.contour`).
    """
    size = spec.size
    s_vals = s_coefficient_array(spec, kin)
    c_vals = np.array([c_plus_coefficient(spec, n, kin) for n in range(size)])
    idx = np.arange(size)
    lo = np.minimum.outer(idx, idx)
    hi = np.maximum.outer(idx, idx)
    return -(2.0 / kin.k) * s_vals[lo] * c_vals[hi]

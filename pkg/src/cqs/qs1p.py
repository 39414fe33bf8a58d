"""One-particle quasi-Sturmian functions.

Three evaluation routes for the outgoing solution driven by a Laguerre basis
function:

* ``qs_eval_expansion`` sums the Laguerre expansion with Green's-matrix
  coefficients (accurate at radii covered by the basis);
* ``qs_eval_integral`` evaluates the closed-form integral over z in [0, 1],
  analytically continued onto the unphysical momentum sheet by repeated
  integration by parts of the endpoint factor ``(1-z)^(l + i beta)``;
* ``qs_asymptotic`` applies the outgoing Coulomb-wave asymptotic form.

The integration-by-parts route keeps every boundary term at ``z = 0`` and
drops the ``z = 1`` terms (their analytic continuation vanishes once the
exponent is raised).  Derivatives of the smooth factor are generated by
truncated-Taylor jets, so no hand-derived product-rule formulas enter.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from cqs.jmatrix import (
    Kinematics,
    LaguerreBasisSpec,
    kinematics,
    s_coefficient,
    sigma_phase_factor,
    green_matrix_1p,
)
from cqs.specfun import laguerre_poly, legendre_panel

__all__ = [
    "parts_count",
    "qs_eval_expansion",
    "qs_eval_integral",
    "qs_asymptotic",
]


class _Jet:
    """Truncated Taylor coefficients in one variable, batched over numpy axes.

    ``c[j]`` holds the j-th Taylor coefficient; arithmetic truncates at the
    construction order.  Only the operations required by the integrand
    factors are implemented.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = coeffs

    @classmethod
    def variable(cls, value, order: int):
        value = np.asarray(value, dtype=complex)
        c = np.zeros((order + 1,) + value.shape, dtype=complex)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    def _lift(self, other):
        if isinstance(other, _Jet):
            return other
        arr = np.zeros_like(self.c)
        arr[0] = other
        return _Jet(arr)

    def __add__(self, other):
        return _Jet(self.c + self._lift(other).c)

    __radd__ = __add__

    def __sub__(self, other):
        return _Jet(self.c - self._lift(other).c)

    def __rsub__(self, other):
        return _Jet(self._lift(other).c - self.c)

    def __neg__(self):
        return _Jet(-self.c)

    def __mul__(self, other):
        if not isinstance(other, _Jet):
            return _Jet(self.c * other)
        p = self.order
        out = np.zeros_like(self.c)
        for j in range(p + 1):
            for i in range(j + 1):
                out[j] = out[j] + self.c[i] * other.c[j - i]
        return _Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, _Jet):
            return _Jet(self.c / other)
        p = self.order
        out = np.zeros_like(self.c)
        out[0] = self.c[0] / other.c[0]
        for j in range(1, p + 1):
            acc = self.c[j]
            for i in range(j):
                acc = acc - out[i] * other.c[j - i]
            out[j] = acc / other.c[0]
        return _Jet(out)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise TypeError("integer jet powers only; use jpow for complex exponents")
        result = self._lift(1.0)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result


def _jexp(a: _Jet) -> _Jet:
    p = a.order
    out = np.zeros_like(a.c)
    out[0] = np.exp(a.c[0])
    for j in range(1, p + 1):
        acc = np.zeros_like(out[0])
        for i in range(1, j + 1):
            acc = acc + i * a.c[i] * out[j - i]
        out[j] = acc / j
    return _Jet(out)


def _jlog(a: _Jet) -> _Jet:
    p = a.order
    out = np.zeros_like(a.c)
    out[0] = np.log(a.c[0])
    for j in range(1, p + 1):
        acc = j * a.c[j]
        for i in range(1, j):
            acc = acc - i * out[i] * a.c[j - i]
        out[j] = acc / (j * a.c[0])
    return _Jet(out)


def _jpow(a: _Jet, exponent) -> _Jet:
    return _jexp(_jlog(a) * exponent)


def parts_count(ell: int, beta) -> int:
    """Smallest positive integer m with -m < Re(l + i beta)."""
    re = (ell + 1j * complex(beta)).real
    return max(1, math.floor(-re) + 1)


def _u_grid(decay: float, nodes_per_panel: int):
    # substitution z = 1 - exp(-u) removes the algebraic endpoint factor;
    # panel layout resolves the early oscillation of exp(-i u Im(l+i beta))
    u_max = max(40.0 / decay, 45.0)
    edges = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
    edges = [e for e in edges if e < u_max] + [u_max]
    us, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = legendre_panel(lo, hi, nodes_per_panel)
        us.append(x)
        ws.append(w)
    return np.concatenate(us), np.concatenate(ws)


def qs_eval_integral(
    spec: LaguerreBasisSpec,
    n: int,
    kin: Kinematics,
    r,
    parts: int | None = None,
    nodes_per_panel: int = 14,
):
    """Outgoing quasi-Sturmian function by the regularized z-integral.

    Vectorized over ``r``.  ``parts`` overrides the automatic
    integration-by-parts count (the automatic choice also raises the count
    until the regularized endpoint exponent stays away from zero, which the
    minimal rule alone does not guarantee).
    """
    r_in = np.asarray(r, dtype=float)
    r = np.atleast_1d(r_in)
    ell, b = spec.ell, spec.b
    k, omega, beta = kin.k, kin.omega, kin.beta
    c_exp = ell + 1j * beta

    if parts is None:
        m = parts_count(ell, beta)
        # keep the regularized exponent's real part >= 1/2 so the
        # u-substituted integrand decays on a bounded grid
        m = max(m, math.ceil(0.5 - c_exp.real))
    else:
        m = parts
        if m < parts_count(ell, beta):
            raise ValueError("requested fewer integration-by-parts steps than the exponent needs")
    order = m - 1

    # P_i = (c+1)(c+2)...(c+i)
    prods = np.cumprod([c_exp + i for i in range(1, m + 1)])

    def smooth_jet(z: _Jet) -> _Jet:
        t1 = _jpow(1.0 - z * omega, ell - 1j * beta)
        t2 = (1.0 - z * (1.0 + omega)) ** n
        t3 = _jexp(z * ((b + 1j * k) * r))
        arg = ((1.0 - z) * (1.0 - z * omega)) / (1.0 - z * (1.0 + omega)) * (2.0 * b * r)
        t4 = laguerre_poly(n, 2 * ell + 1, arg)
        return t1 * t2 * t3 * t4

    total = np.zeros(r.shape, dtype=complex)
    if m > 1:
        g0 = smooth_jet(_Jet.variable(np.zeros(r.shape), order))
        fact = 1.0
        for i in range(1, m):
            total += fact * g0.c[i - 1] / prods[i - 1]  # g^(i-1)(0) / P_i
            fact *= i

    # remaining integral: (1/P_{m-1}) int_0^1 (1-z)^(c+m-1) g^(m-1)(z) dz
    # with z = 1 - exp(-u)
    us, ws = _u_grid(c_exp.real + m, nodes_per_panel)
    zjet = _Jet.variable(np.broadcast_to(1.0 - np.exp(-us[:, None]), (us.size,) + r.shape), order)
    g = smooth_jet(zjet)
    deriv = math.factorial(order) * g.c[order]
    endpoint = np.exp(-us * (c_exp + m)).reshape((-1,) + (1,) * r.ndim)
    integral = np.tensordot(ws, endpoint * deriv, axes=(0, 0))
    total += integral / (prods[m - 2] if m >= 2 else 1.0)

    norm = 1.0 / math.sqrt(math.prod(range(n + 1, n + 2 * ell + 2)))
    pref = -norm * (2.0 * b * r) ** (ell + 1) * np.exp(-b * r) * 2.0 / (b - 1j * k)
    value = (pref * total).reshape(r_in.shape)
    return complex(value) if value.ndim == 0 else value


def qs_eval_expansion(spec: LaguerreBasisSpec, n: int, kin: Kinematics, r, terms: int):
    """Laguerre-expansion evaluation with ``terms`` basis functions."""
    if terms < n + 1:
        raise ValueError("expansion must include at least n + 1 terms")
    big = LaguerreBasisSpec(b=spec.b, ell=spec.ell, size=terms)
    g = green_matrix_1p(big, kin)[:, n]
    r = np.asarray(r, dtype=float)
    vals = np.zeros((terms,) + r.shape)
    for mdx in range(terms):
        vals[mdx] = _basis_value(big, mdx, r)
    out = np.tensordot(g, vals, axes=(0, 0))
    return complex(out) if out.ndim == 0 else out


def _basis_value(spec: LaguerreBasisSpec, n: int, r: np.ndarray) -> np.ndarray:
    ell, b = spec.ell, spec.b
    x = 2.0 * b * r
    norm = 1.0 / math.sqrt(math.prod(range(n + 1, n + 2 * ell + 2)) if ell else (n + 1))
    return norm * x ** (ell + 1) * np.exp(-b * r) * laguerre_poly(n, 2 * ell + 1, x)


def qs_asymptotic(spec: LaguerreBasisSpec, n: int, kin: Kinematics, r):
    """Large-distance outgoing form; caller judges the validity of k r >> 1."""
    r = np.asarray(r, dtype=float)
    ell = spec.ell
    k, beta = kin.k, kin.beta
    sigma = sigma_phase_factor(ell, kin)
    s_n = s_coefficient(spec, n, kin)
    phase = np.exp(1j * (k * r - beta * np.log(2.0 * k * r) - 0.5 * math.pi * ell))
    value = -(2.0 / k) * s_n * phase * sigma
    return complex(value) if value.ndim == 0 else value

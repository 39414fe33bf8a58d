"""Complex special functions and Gaussian quadrature primitives.

Everything here is a pure function; quadrature rules are immutable after
construction and can be shared freely between threads.

Branch conventions: all fractional powers and logarithms of complex
quantities use the principal branch.  ``abs`` of a gamma value along an
analytic family is realised as ``sqrt(gamma(z) * gamma(z~))`` by the callers
that need it (see :mod:`cqs.jmatrix`).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GammaPoleError",
    "HypergeometricError",
    "QuadratureRule",
    "digamma_complex",
    "gamma_complex",
    "hyp2f1",
    "hyp2f1_terminating",
    "laguerre_poly",
    "make_quadrature",
    "spherical_j0",
]


class GammaPoleError(ValueError):
    """Gamma function evaluated at a non-positive integer."""


class HypergeometricError(RuntimeError):
    """No convergent evaluation strategy for the requested 2F1 arguments."""


def _require_finite(*values):
    for v in values:
        c = complex(v)
        if not (math.isfinite(c.real) and math.isfinite(c.imag)):
            raise ValueError(f"non-finite argument {v!r}")


# Lanczos rational approximation, g = 607/128 with 15 coefficients
# (P. Godfrey's set; close to 15 significant digits for Re z >= 0.5).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    3.3994649984811888699e-5,
    4.6523628927048575665e-5,
    -9.8374475304879564677e-5,
    1.5808870322491248884e-4,
    -2.1026444172410488319e-4,
    2.1743961811521264320e-4,
    -1.6431810653676389022e-4,
    8.4418223983852743293e-5,
    -2.6190838401581408670e-5,
    3.6899182659531622704e-6,
)


def gamma_complex(z) -> complex:
    """Gamma function for complex argument.

    Accurate to at least 12 significant digits for ``|z| <= 50``,
    ``|Im z| <= 50``.  Raises :class:`GammaPoleError` at the poles
    (non-positive integers).
    """
    z = complex(z)
    _require_finite(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise GammaPoleError(f"gamma pole at z = {z}")
    if z.real < 0.5:
        # reflection into the half plane where Lanczos converges
        return math.pi / (cmath.sin(math.pi * z) * gamma_complex(1.0 - z))
    zm = z - 1.0
    acc = _LANCZOS_C[0]
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        acc += c / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (zm + 0.5) * cmath.exp(-t) * acc


_BERNOULLI_OVER_2K = (
    # B_{2k} / (2k) for k = 1..7, used in the digamma asymptotic series
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma_complex(z) -> complex:
    """Digamma (psi) function for complex argument, principal branch."""
    z = complex(z)
    _require_finite(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise GammaPoleError(f"digamma pole at z = {z}")
    if z.real < 0.5:
        # reflection: psi(1-z) - psi(z) = pi cot(pi z)
        return digamma_complex(1.0 - z) - math.pi / cmath.tan(math.pi * z)
    acc = 0.0 + 0.0j
    while z.real < 10.0:
        acc -= 1.0 / z
        z += 1.0
    inv2 = 1.0 / (z * z)
    s = cmath.log(z) - 0.5 / z
    p = inv2
    for b in _BERNOULLI_OVER_2K:
        s -= b * p
        p *= inv2
    return s + acc


def _pochhammer(x, j: int) -> complex:
    p = 1.0 + 0.0j
    for i in range(j):
        p *= x + i
    return p


def hyp2f1_terminating(n: int, b, c, z) -> complex:
    """2F1(-n, b; c; z) as an exact sum of n + 1 terms."""
    if n < 0:
        raise ValueError("terminating order must be >= 0")
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    for j in range(n):
        term *= (-(n - j)) * (b + j) * z / ((c + j) * (j + 1))
        total += term
    return total


def _gauss_series(a, b, c, z, tol, max_terms):
    term = 1.0 + 0.0j
    total = 1.0 + 0.0j
    peak = 1.0
    stagnant = 0
    for j in range(max_terms):
        term *= (a + j) * (b + j) * z / ((c + j) * (j + 1))
        mag = abs(term)
        if not math.isfinite(mag) or mag > 1e250:
            raise HypergeometricError("2F1 series overflow (divergent growth)")
        peak = max(peak, mag)
        total += term
        if mag <= tol * max(abs(total), 1e-280):
            stagnant += 1
            if stagnant >= 3:
                if peak > 1e10 * max(abs(total), 1e-280):
                    raise HypergeometricError(
                        "2F1 series cancelled catastrophically "
                        f"(peak term {peak:.3g} vs sum {abs(total):.3g})"
                    )
                return total
        else:
            stagnant = 0
    raise HypergeometricError(
        f"2F1 series failed to converge (|z|={abs(z):.4g}, "
        f"partial sum magnitude {abs(total):.4g})"
    )


def _as_nonpositive_int(x) -> int | None:
    x = complex(x)
    if abs(x.imag) > 1e-12:
        return None
    r = round(x.real)
    if r <= 0 and abs(x.real - r) < 1e-12:
        return -r
    return None


def _near_int(x) -> bool:
    x = complex(x)
    return abs(x.imag) < 1e-9 and abs(x.real - round(x.real)) < 1e-9


def _hyp_one_minus_z_integer(a, b, c, z, m: int, tol, max_terms):
    # c = a + b + m with integer m >= 1; expansion about z = 1 carrying
    # logarithmic terms (standard connection formula for the degenerate case).
    w = 1.0 - z
    lw = cmath.log(w)
    gc = gamma_complex(c)
    front = gc * gamma_complex(m) / (gamma_complex(a + m) * gamma_complex(b + m))
    s1 = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for j in range(m):
        if j:
            term *= (a + j - 1) * (b + j - 1) * w / (j * (j - m))
        s1 += term
    s2 = 0.0 + 0.0j
    pref = (-1) ** m * gc / (gamma_complex(a) * gamma_complex(b)) * w**m
    term = 1.0 / math.factorial(m)
    psi_j1 = digamma_complex(1.0)
    psi_jm1 = digamma_complex(m + 1.0)
    psi_a = digamma_complex(a + m)
    psi_b = digamma_complex(b + m)
    for j in range(max_terms):
        if j:
            term *= (a + m + j - 1) * (b + m + j - 1) * w / (j * (j + m))
            psi_j1 += 1.0 / j
            psi_jm1 += 1.0 / (m + j)
            psi_a += 1.0 / (a + m + j - 1)
            psi_b += 1.0 / (b + m + j - 1)
        piece = term * (lw - psi_j1 - psi_jm1 + psi_a + psi_b)
        s2 += piece
        if abs(piece) <= tol * max(abs(s1 * front - s2 * pref), 1e-280) and j > 2:
            break
    else:
        raise HypergeometricError("1-z log expansion failed to converge")
    return front * s1 - pref * s2


def _hyp_one_minus_z(a, b, c, z, tol, max_terms):
    s = c - a - b
    w = 1.0 - z
    g1 = (
        gamma_complex(c)
        * gamma_complex(s)
        / (gamma_complex(c - a) * gamma_complex(c - b))
        * _gauss_series(a, b, 1.0 - s, w, tol, max_terms)
    )
    g2 = (
        gamma_complex(c)
        * gamma_complex(-s)
        / (gamma_complex(a) * gamma_complex(b))
        * w**s
        * _gauss_series(c - a, c - b, 1.0 + s, w, tol, max_terms)
    )
    return g1 + g2


def _hyp_recip_z(a, b, c, z, tol, max_terms):
    # z -> 1/z connection; needs a - b away from the integers
    g1 = (
        gamma_complex(c)
        * gamma_complex(b - a)
        / (gamma_complex(b) * gamma_complex(c - a))
        * (-z) ** (-a)
        * _gauss_series(a, 1.0 - c + a, 1.0 - b + a, 1.0 / z, tol, max_terms)
    )
    g2 = (
        gamma_complex(c)
        * gamma_complex(a - b)
        / (gamma_complex(a) * gamma_complex(c - b))
        * (-z) ** (-b)
        * _gauss_series(b, 1.0 - c + b, 1.0 - a + b, 1.0 / z, tol, max_terms)
    )
    return g1 + g2


def _hyp_taylor_continue(a, b, c, z, tol, max_steps=64):
    # analytic continuation along the ray from the origin by Taylor steps of
    # the hypergeometric ODE; robust in the region where every linear
    # transformation argument sits near the unit circle
    z0 = 0.5 * z / abs(z)
    f = _gauss_series(a, b, c, z0, tol, 10000)
    fp = a * b / c * _gauss_series(a + 1.0, b + 1.0, c + 1.0, z0, tol, 10000)
    for _ in range(max_steps):
        gap = z - z0
        if abs(gap) == 0.0:
            return f
        radius = min(abs(z0), abs(z0 - 1.0))
        step = min(0.35 * radius, abs(gap))
        h = gap / abs(gap) * step
        p0 = z0 * (1.0 - z0)
        p1 = 1.0 - 2.0 * z0
        q0 = c - (a + b + 1.0) * z0
        cm1, cur = f, fp
        val = f + fp * h
        der = fp
        hj = h
        for j in range(0, 400):
            nxt = -((p1 * j + q0) * (j + 1.0) * cur + (-j * (j - 1.0) - (a + b + 1.0) * j - a * b) * cm1)
            nxt /= p0 * (j + 2.0) * (j + 1.0)
            der += (j + 2.0) * nxt * hj
            hj *= h
            piece = nxt * hj
            val += piece
            if abs(piece) <= tol * max(abs(val), 1e-280) and j > 4:
                break
            cm1, cur = cur, nxt
        else:
            raise HypergeometricError("Taylor continuation step failed to converge")
        z0 = z0 + h
        f, fp = val, der
    if abs(z - z0) > 0:
        raise HypergeometricError("Taylor continuation exceeded step budget")
    return f


def hyp2f1(a, b, c, z, tol: float = 1e-14, max_terms: int = 10000) -> complex:
    """Gauss hypergeometric function 2F1(a, b; c; z) for complex arguments.

    Terminating cases (``a`` or ``b`` a non-positive integer) are summed
    exactly.  Otherwise the defining series is used inside the unit disk and
    the standard linear transformations (Pfaff ``z/(z-1)``, ``1-z`` with its
    logarithmic degenerate form for integer ``c-a-b``, and ``1/z``) continue
    the function analytically off the cut ``[1, oo)``.  Raises
    :class:`HypergeometricError` with the partial-sum magnitude when no
    strategy converges.
    """
    a = complex(a)
    b = complex(b)
    c = complex(c)
    z = complex(z)
    _require_finite(a, b, c, z)

    na = _as_nonpositive_int(a)
    nb = _as_nonpositive_int(b)
    nc = _as_nonpositive_int(c)
    if na is not None or nb is not None:
        if na is not None and (nb is None or na <= nb):
            n, other = na, b
        else:
            n, other = nb, a
        if nc is not None and nc < n:
            raise GammaPoleError("2F1 parameter c at a non-positive integer")
        return hyp2f1_terminating(n, other, c, z)
    if nc is not None:
        raise GammaPoleError("2F1 parameter c at a non-positive integer")
    if z == 0.0:
        return 1.0 + 0.0j

    def _via_series(mt):
        return _gauss_series(a, b, c, z, tol, mt)

    def _via_pfaff(mt):
        # exponent goes on -a or -b, whichever leaves the smaller pair of
        # series parameters (large parameters in the series cancel badly)
        if max(abs(a), abs(c - b)) <= max(abs(b), abs(c - a)):
            return (1.0 - z) ** (-a) * _gauss_series(a, c - b, c, z / (z - 1.0), tol, mt)
        return (1.0 - z) ** (-b) * _gauss_series(b, c - a, c, z / (z - 1.0), tol, mt)

    def _via_one_minus_z(mt):
        # the expansion about z = 1 cancels internally once the series terms
        # grow; gate it to the regime where they stay bounded
        w = abs(1.0 - z)
        if w > 0.35 and (max(abs(a), abs(b)) + 1.0) * w > 5.0:
            raise HypergeometricError("1-z expansion numerically unstable here")
        s = c - a - b
        if _near_int(s):
            m = round(s.real)
            if m < 1:
                raise HypergeometricError("degenerate 1-z expansion needs c-a-b >= 1")
            return _hyp_one_minus_z_integer(a, b, c, z, m, tol, mt)
        return _hyp_one_minus_z(a, b, c, z, tol, mt)

    def _via_recip_z(mt):
        d = a - b
        dist = abs(d - round(d.real)) if abs(d.imag) < 0.5 else 1.0
        if dist < 1e-9:
            raise HypergeometricError("1/z connection degenerate for integer a-b")
        return _hyp_recip_z(a, b, c, z, tol, mt)

    # pick whichever mapped argument converges fastest; every map is a
    # principal-branch analytic continuation off the cut [1, oo)
    candidates = sorted(
        [
            (abs(z), _via_series),
            (abs(z / (z - 1.0)), _via_pfaff),
            (abs(1.0 - z), _via_one_minus_z),
            (abs(1.0 / z), _via_recip_z),
        ],
        key=lambda item: item[0],
    )
    last_error = None
    for modulus, route in candidates:
        if modulus > 0.92:
            break
        budget = max_terms if modulus <= 0.8 else max(max_terms, 50000)
        try:
            return route(budget)
        except HypergeometricError as exc:
            last_error = exc
    # remaining region: every mapped argument sits near the unit circle
    # (neighbourhood of z = exp(+-i pi/3)); step there along the ray
    if abs(1.0 - z) > 0.15 and (abs(z.imag) > 1e-3 * abs(z) or z.real < 0.95):
        try:
            return _hyp_taylor_continue(a, b, c, z, tol)
        except HypergeometricError as exc:
            last_error = exc
    raise HypergeometricError(
        f"no transformation applies for z = {z} (|z|={abs(z):.6g}, "
        f"|z/(z-1)|={abs(z / (z - 1.0)):.6g}, |1-z|={abs(1.0 - z):.6g})"
    ) from last_error


def laguerre_poly(n: int, alpha, x):
    """Generalized Laguerre polynomial L_n^alpha(x) by the three-term recurrence.

    Written against generic ``+ - * /`` so it accepts python scalars, numpy
    arrays, and the truncated-Taylor jets used for the integral
    representation of the quasi-Sturmian functions.
    """
    if n < 0:
        raise ValueError("polynomial degree must be >= 0")
    one = x * 0 + 1.0
    if n == 0:
        return one
    lm1 = one
    lcur = (1.0 + alpha) * one - x
    for k in range(2, n + 1):
        lm1, lcur = lcur, (((2.0 * k - 1.0 + alpha) * one - x) * lcur - (k - 1.0 + alpha) * lm1) / k
    return lcur


def spherical_j0(x):
    """sin(x)/x with the removable singularity handled by series for small x."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0)
    out = np.where(small, series, np.sin(safe) / safe)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of a Gaussian rule.

    ``legendre`` integrates over [-1, 1]; ``laguerre`` integrates against
    the weight ``exp(-x)`` over [0, oo).
    """

    kind: str
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        total = self.weights.sum()
        if self.kind == "legendre" and abs(total - 2.0) > 1e-13:
            raise ValueError(f"legendre weights sum to {total}, expected 2")
        if self.kind == "laguerre" and abs(total - 1.0) > 1e-12:
            raise ValueError(f"laguerre weights sum to {total}, expected 1")


def make_quadrature(kind: str, n: int) -> QuadratureRule:
    """Gauss-Legendre or Gauss-Laguerre rule with ``n`` nodes."""
    if n < 1:
        raise ValueError("node count must be >= 1")
    if kind == "legendre":
        x, w = np.polynomial.legendre.leggauss(n)
    elif kind == "laguerre":
        x, w = np.polynomial.laguerre.laggauss(n)
    else:
        raise ValueError(f"unknown quadrature kind {kind!r}")
    return QuadratureRule(kind=kind, nodes=x, weights=w)


def legendre_panel(a: float, b: float, n: int):
    """Nodes and weights of an n-point Gauss-Legendre rule mapped to [a, b]."""
    rule = make_quadrature("legendre", n)
    half = 0.5 * (b - a)
    return a + half * (rule.nodes + 1.0), half * rule.weights

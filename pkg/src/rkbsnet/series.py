"""Scalar helpers and truncated power-series tools for analytic activations.

This module collects the closed-form scalar maps used throughout the package
(the geometric-series helper ``theta`` and its relatives), derivative
coefficients of supported activation functions, the two-centre series

    sigma_{z,z'}(zeta) = sum_{l >= 1} (tau^(l)(z)/l!) (tau^(l)(z')/l!) zeta^l,

and its envelope ``sigma_bar(zeta) = max_{z >= 0} sigma_{z,z}(zeta)`` together
with the inverse maps needed by the convergence machinery.

Truncation is governed by :class:`TruncationPolicy`.  The policy's ``order``
is the starting (and reporting) truncation order; when ``adaptive`` is set,
series evaluations double the order until the last-term-ratio tail estimate
meets ``tail_tol`` (or ``max_order`` is reached, which raises
:class:`~rkbsnet.errors.DomainError`).  Feature-map construction always uses
``order`` literally; adaptivity applies to closed-form series evaluation only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "TANH_ROC",
    "TruncationPolicy",
    "SeriesCoeffs",
    "theta",
    "theta_inv",
    "theta_prime",
    "theta_prime_inv",
    "kappa",
    "kappa_inv",
    "act_deriv_coeffs",
    "tanh_coeff_closed_form",
    "sigma",
    "sigma_dzeta",
    "sigma_dz",
    "sigma_bar",
    "sigma_bar_inv",
    "bisect_root",
]

#: Radius of convergence of the tanh power series about any real centre: the
#: nearest singularities sit at z +- i pi/2, so the radius is exactly pi/2.
TANH_ROC = math.pi / 2.0


# ---------------------------------------------------------------------------
# Scalar geometric-series helpers
# ---------------------------------------------------------------------------

def theta(z: float) -> float:
    """Evaluate ``theta(z) = z / (1 - z)``, the tail sum ``sum_{l>=1} z^l``.

    Args:
        z: Argument, required to satisfy ``z < 1``.

    Returns:
        The value of the geometric tail sum.

    Raises:
        DomainError: If ``z >= 1``.
    """
    if z >= 1.0:
        raise DomainError(
            f"theta is defined for arguments < 1, got {float(z)!r}", quantity="theta")
    return z / (1.0 - z)


def theta_inv(y: float) -> float:
    """Invert :func:`theta`: return ``y / (1 + y)`` for ``y > -1``."""
    if y <= -1.0:
        raise DomainError(
            f"theta_inv is defined for arguments > -1, got {float(y)!r}",
            quantity="theta_inv")
    return y / (1.0 + y)


def theta_prime(z: float) -> float:
    """Evaluate ``theta'(z) = 1 / (1 - z)^2`` for ``z < 1``."""
    if z >= 1.0:
        raise DomainError(
            f"theta_prime is defined for arguments < 1, got {float(z)!r}",
            quantity="theta_prime")
    d = 1.0 - z
    return 1.0 / (d * d)


def theta_prime_inv(y: float) -> float:
    """Invert :func:`theta_prime` on its increasing branch: ``1 - 1/sqrt(y)``.

    Args:
        y: Slope value, required to satisfy ``y >= 1`` (the range of
            ``theta_prime`` on ``[0, 1)``).
    """
    if y < 1.0:
        raise DomainError(
            f"theta_prime_inv is defined for arguments >= 1, got {float(y)!r}",
            quantity="theta_prime_inv")
    return 1.0 - 1.0 / math.sqrt(y)


def kappa(z: float) -> float:
    """Evaluate ``kappa(z) = z / (1 - z)^2`` for ``z < 1``."""
    if z >= 1.0:
        raise DomainError(
            f"kappa is defined for arguments < 1, got {float(z)!r}", quantity="kappa")
    d = 1.0 - z
    return z / (d * d)


def kappa_inv(y: float) -> float:
    """Invert :func:`kappa` on ``[0, 1)``: the root of ``kappa(u) = y`` below one.

    The closed form ``u = (2y + 1 - sqrt(4y + 1)) / (2y)`` is evaluated in
    its rationalised guise ``u = 2y / (2y + 1 + sqrt(4y + 1))`` — the two
    are algebraically identical, but the difference form cancels
    catastrophically for small ``y``.  ``kappa_inv(0) = 0``.

    Args:
        y: Target value, required to be ``>= 0``.
    """
    if y < 0.0:
        raise DomainError(
            f"kappa_inv is defined for arguments >= 0, got {float(y)!r}",
            quantity="kappa_inv")
    return 2.0 * y / (2.0 * y + 1.0 + math.sqrt(4.0 * y + 1.0))


# ---------------------------------------------------------------------------
# Truncation policy and coefficient containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncationPolicy:
    """Controls how truncated power series are evaluated.

    Attributes:
        order: Starting (and reporting) truncation order ``L``.
        tail_tol: Tolerance for the geometric tail estimate of an adaptive
            evaluation, relative to ``max(1, |value|)``.
        guard: Domain guard factor in ``(0, 1)``; series arguments must stay
            strictly inside the guarded radius of convergence.
        adaptive: When true, closed-form series evaluations double the order
            until the tail estimate meets ``tail_tol``.  Feature-map blocks
            always use ``order`` exactly.
        max_order: Hard ceiling for adaptive extension.
        feature_budget: Maximum number of coefficients a materialised
            (flattened) feature vector may occupy.
    """

    order: int = 16
    tail_tol: float = 1e-12
    guard: float = 0.99
    adaptive: bool = True
    max_order: int = 512
    feature_budget: int = 2_000_000

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("truncation order must be at least 2")
        if not (0.0 < self.guard < 1.0):
            raise ValueError("domain guard must lie strictly inside (0, 1)")
        if self.tail_tol <= 0.0:
            raise ValueError("tail tolerance must be positive")
        if self.max_order < self.order:
            raise ValueError("max_order must be at least the starting order")
        if self.feature_budget < 1:
            raise ValueError("feature budget must be positive")


@dataclass(frozen=True)
class SeriesCoeffs:
    """Derivative coefficients ``c_l = tau^(l)(z) / l!`` of an activation.

    Attributes:
        activation: Activation family tag (currently ``"tanh"``).
        center: Expansion centre ``z``.
        order: Number of coefficients held.
        coeffs: Array of shape ``(order,)``; entry ``l-1`` is ``c_l``.
    """

    activation: str
    center: float
    order: int
    coeffs: np.ndarray


# ---------------------------------------------------------------------------
# tanh derivative coefficients
# ---------------------------------------------------------------------------

@lru_cache(maxsize=65536)
def _tanh_coeff_values(z: float, order: int) -> np.ndarray:
    """Cached ``c_1..c_order`` at centre ``z`` (treat the result as read-only).

    Uses the Cauchy-product recurrence obtained from ``tanh' = 1 - tanh^2``:
    with ``a_k = tanh^(k)(z)/k!``, ``a_1 = 1 - a_0^2`` and

        a_{k+1} = -(sum_{i=0}^{k} a_i a_{k-i}) / (k + 1)   for k >= 1.

    Expanding the derivative polynomials in ``t = tanh(z)`` instead loses all
    significant digits beyond order ~60 away from the origin (the polynomial
    evaluation cancels catastrophically); the product terms here decay along
    with the coefficients themselves, so every order stays stable.
    """
    a = np.zeros(order + 1)
    a[0] = math.tanh(z)
    a[1] = 1.0 - a[0] * a[0]
    for k in range(1, order):
        a[k + 1] = -float(np.dot(a[:k + 1], a[k::-1])) / (k + 1)
    vals = a[1:]
    vals.setflags(write=False)
    return vals


def _coeff_values(activation: str, z: float, order: int) -> np.ndarray:
    if activation != "tanh":
        raise DomainError(
            f"unsupported activation family: {activation!r}",
            quantity="activation")
    return _tanh_coeff_values(float(z), int(order))


def act_deriv_coeffs(activation: str, z: float, order: int) -> SeriesCoeffs:
    """Compute the first ``order`` derivative coefficients of an activation.

    For tanh the derivatives are generated by the Cauchy-product recurrence
    from ``tanh' = 1 - tanh^2`` on normalised coefficients, which stays
    numerically stable at every order and centre.

    Args:
        activation: Activation family tag; only ``"tanh"`` is supported.
        z: Expansion centre.
        order: Number of coefficients ``c_l = tau^(l)(z)/l!`` to return.

    Returns:
        A :class:`SeriesCoeffs` with ``coeffs[l-1] = c_l`` for ``l = 1..order``.

    Raises:
        DomainError: If the activation family is not supported.
    """
    if order < 1:
        raise ValueError("order must be at least 1")
    vals = _coeff_values(activation, z, order)
    return SeriesCoeffs(activation=activation, center=float(z),
                        order=int(order), coeffs=vals.copy())


# ---------------------------------------------------------------------------
# Closed-form tanh coefficients (independent route)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=512)
def _bernoulli(n: int) -> Fraction:
    """Exact Bernoulli number ``B_n`` (convention ``B_1 = -1/2``)."""
    if n == 0:
        return Fraction(1)
    acc = Fraction(0)
    for k in range(n):
        acc += math.comb(n + 1, k) * _bernoulli(k)
    return -acc / (n + 1)


def tanh_coeff_closed_form(z: float, m: int, n_terms: int = 200_000) -> float:
    """Taylor coefficient of ``tanh`` about ``z`` via its pole expansion.

    Evaluates the coefficient of ``xi^m`` in ``tanh(z + xi)`` from the partial
    fraction expansion over the poles ``i (n + 1/2) pi``:

        2 sgn(z) (-sgn(z))^m sum_{n>=0} (z^2 + w_n^2)^{-(m+1)/2}
                                        cos((m+1) atan(w_n / |z|)),

    with ``w_n = (n + 1/2) pi``.  At ``z = 0`` the odd coefficients follow the
    exact Bernoulli-number formula ``2^{m+1} (2^{m+1} - 1) B_{m+1} / (m+1)!``
    and the even ones vanish.  This route shares no code with
    :func:`act_deriv_coeffs` and serves as an independent cross-check.

    Args:
        z: Expansion centre.
        m: Coefficient index, ``m >= 1``.
        n_terms: Number of pole terms in the partial sum (ignored at ``z=0``).

    Returns:
        The coefficient of ``xi^m``.
    """
    if m < 1:
        raise ValueError("coefficient index m must be at least 1")
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    z = float(z)
    if z == 0.0:
        if m % 2 == 0:
            return 0.0
        scale = Fraction(2 ** (m + 1) * (2 ** (m + 1) - 1), math.factorial(m + 1))
        return float(scale * _bernoulli(m + 1))
    sign = 1.0 if z > 0.0 else -1.0
    w = (np.arange(n_terms) + 0.5) * math.pi
    r = np.hypot(z, w)
    amp = r ** (-(m + 1))
    ang = np.cos((m + 1) * np.arctan2(w, abs(z)))
    partial = math.fsum((amp * ang).tolist())
    # The summand is Re[(|z| + i w_n)^-(m+1)], which for m = 1 decays only
    # like 1/n^2; complete the tail with Euler-Maclaurin (integral, endpoint,
    # and slope terms), leaving a remainder of order n_terms^-(m+4).
    g = complex(abs(z), (n_terms + 0.5) * math.pi)
    tail = (g ** -m / (m * 1j * math.pi)).real
    tail += 0.5 * (g ** -(m + 1)).real
    tail += (math.pi * (m + 1) / 12.0) * (1j * g ** -(m + 2)).real
    return 2.0 * sign * (-sign) ** m * (partial + tail)


# ---------------------------------------------------------------------------
# Two-centre series sigma and its derivatives
# ---------------------------------------------------------------------------

def _guard_zeta(zeta: float, roc: float, policy: TruncationPolicy) -> None:
    limit = policy.guard * roc * roc
    if abs(zeta) > limit:
        raise DomainError(
            f"series argument {float(zeta)!r} outside the guarded convergence "
            f"region (|zeta| <= {float(limit)!r} for radius {float(roc)!r})", quantity="sigma")


def _term_ratio(z: float, z_prime: float, zeta: float, roc: float) -> float:
    """Asymptotic ratio of consecutive series terms (strictly below one)."""
    return abs(zeta) / (math.hypot(z, roc) * math.hypot(z_prime, roc))


def _adaptive_sum(term_fn, z: float, z_prime: float, zeta: float,
                  policy: TruncationPolicy, roc: float) -> float:
    """Shared adaptive evaluation loop for sigma-type series.

    ``term_fn(order)`` must return the array of series terms for that order.
    """
    if zeta == 0.0:
        return 0.0
    q = _term_ratio(z, z_prime, zeta, roc)
    order = policy.order
    while True:
        terms = term_fn(order)
        value = float(np.sum(terms))
        if not policy.adaptive:
            return value
        largest_last = max(abs(terms[-1]), abs(terms[-2]))
        tail = 2.0 * largest_last * q / (1.0 - q)
        if tail <= policy.tail_tol * max(1.0, abs(value)):
            return value
        if order >= policy.max_order:
            raise DomainError(
                f"series tail estimate {float(tail)!r} cannot meet tolerance "
                f"{policy.tail_tol!r} within max order {policy.max_order}",
                quantity="sigma")
        order = min(2 * order, policy.max_order)


def sigma(activation: str, z: float, z_prime: float, zeta: float,
          policy: TruncationPolicy | None = None, roc: float = TANH_ROC) -> float:
    """Evaluate the two-centre series ``sigma_{z,z'}(zeta)``.

    Computes the truncated sum ``sum_{l=1}^{L} c_l(z) c_l(z') zeta^l`` with
    ``c_l = tau^(l)/l!``, extending ``L`` adaptively per the policy.

    Args:
        activation: Activation family tag.
        z: First expansion centre.
        z_prime: Second expansion centre.
        zeta: Series argument; must satisfy ``|zeta| <= guard * roc**2``.
        policy: Truncation policy (defaults to :class:`TruncationPolicy`).
        roc: Radius of convergence of the activation's power series.

    Returns:
        The series value.

    Raises:
        DomainError: If the argument leaves the guarded region or the tail
            tolerance cannot be met within ``max_order``.
    """
    policy = policy or TruncationPolicy()
    _guard_zeta(zeta, roc, policy)

    def term_fn(order):
        cz = _coeff_values(activation, z, order)
        czp = cz if z_prime == z else _coeff_values(activation, z_prime, order)
        powers = float(zeta) ** np.arange(1, order + 1)
        return cz * czp * powers

    return _adaptive_sum(term_fn, z, z_prime, zeta, policy, roc)


def sigma_dzeta(activation: str, z: float, z_prime: float, zeta: float,
                policy: TruncationPolicy | None = None,
                roc: float = TANH_ROC) -> float:
    """Derivative of :func:`sigma` in its argument ``zeta``.

    Evaluates ``sum_{l>=1} l c_l(z) c_l(z') zeta^{l-1}`` under the same
    truncation policy as :func:`sigma`.
    """
    policy = policy or TruncationPolicy()
    _guard_zeta(zeta, roc, policy)
    if zeta == 0.0:
        # The l = 1 term survives at zero argument.
        cz = _coeff_values(activation, z, 1)
        czp = _coeff_values(activation, z_prime, 1)
        return float(cz[0] * czp[0])

    def term_fn(order):
        cz = _coeff_values(activation, z, order)
        czp = cz if z_prime == z else _coeff_values(activation, z_prime, order)
        ls = np.arange(1, order + 1)
        powers = float(zeta) ** (ls - 1)
        return ls * cz * czp * powers

    return _adaptive_sum(term_fn, z, z_prime, zeta, policy, roc)


def sigma_dz(activation: str, z: float, z_prime: float, zeta: float,
             policy: TruncationPolicy | None = None,
             roc: float = TANH_ROC) -> float:
    """Derivative of :func:`sigma` in its first centre ``z``.

    Uses ``d c_l / d z = (l+1) c_{l+1}``, so the sum is
    ``sum_{l>=1} (l+1) c_{l+1}(z) c_l(z') zeta^l``.
    """
    policy = policy or TruncationPolicy()
    _guard_zeta(zeta, roc, policy)

    def term_fn(order):
        cz = _coeff_values(activation, z, order + 1)
        czp = _coeff_values(activation, z_prime, order)
        ls = np.arange(1, order + 1)
        powers = float(zeta) ** ls
        return (ls + 1) * cz[1:] * czp * powers

    return _adaptive_sum(term_fn, z, z_prime, zeta, policy, roc)


# ---------------------------------------------------------------------------
# Envelope sigma_bar and inverses
# ---------------------------------------------------------------------------

def bisect_root(fn, lo: float, hi: float, *, xtol: float = 1e-12,
                max_iter: int = 200) -> float:
    """Find a root of ``fn`` on ``[lo, hi]`` by bisection.

    Requires ``fn(lo)`` and ``fn(hi)`` to have opposite (or zero) signs.

    Args:
        fn: Continuous scalar function.
        lo: Lower bracket endpoint.
        hi: Upper bracket endpoint.
        xtol: Absolute tolerance on the bracket width.
        max_iter: Iteration ceiling.

    Returns:
        The bracket midpoint once it is narrower than ``xtol``.

    Raises:
        DomainError: If the bracket does not straddle a sign change.
    """
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise DomainError(
            f"bisection bracket [{float(lo)!r}, {float(hi)!r}] does not straddle "
            f"a root (f(lo)={float(flo)!r}, f(hi)={float(fhi)!r})", quantity="bisect_root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (fhi > 0.0):
            hi, fhi = mid, fmid
        else:
            lo, flo = mid, fmid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def _golden_max(fn, lo: float, hi: float, iters: int = 80) -> tuple[float, float]:
    """Golden-section search for the maximum of ``fn`` on ``[lo, hi]``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    mid = 0.5 * (a + b)
    return mid, fn(mid)


@lru_cache(maxsize=16384)
def _sigma_bar_cached(activation: str, zeta: float,
                      policy: TruncationPolicy, roc: float) -> float:
    grid = np.linspace(0.0, 10.0, 256)
    vals = np.array([sigma(activation, zc, zc, zeta, policy, roc)
                     for zc in grid])
    k = int(np.argmax(vals))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, grid.size - 1)]
    _, refined = _golden_max(
        lambda zc: sigma(activation, zc, zc, zeta, policy, roc), lo, hi)
    return max(float(vals[k]), refined)


def sigma_bar(activation: str, zeta: float,
              policy: TruncationPolicy | None = None,
              roc: float = TANH_ROC) -> float:
    """Envelope ``sigma_bar(zeta) = max_{z >= 0} sigma_{z,z}(zeta)``.

    The maximiser is located numerically with a 256-point grid on
    ``z in [0, 10]`` followed by golden-section refinement.  The supported
    argument window is ``0 <= zeta <= guard * sqrt(roc)``, matching where the
    convergence machinery evaluates the envelope.

    Args:
        activation: Activation family tag.
        zeta: Envelope argument.
        policy: Truncation policy.
        roc: Radius of convergence of the activation's power series.

    Returns:
        The envelope value.

    Raises:
        DomainError: If ``zeta`` lies outside the supported window.
    """
    policy = policy or TruncationPolicy()
    hi = policy.guard * math.sqrt(roc)
    if not (0.0 <= zeta <= hi):
        raise DomainError(
            f"sigma_bar argument {float(zeta)!r} outside supported window "
            f"[0, {float(hi)!r}]",
            quantity="sigma_bar")
    if zeta == 0.0:
        return 0.0
    return _sigma_bar_cached(activation, float(zeta), policy, float(roc))


def sigma_bar_inv(activation: str, y: float,
                  policy: TruncationPolicy | None = None,
                  roc: float = TANH_ROC) -> float:
    """Invert :func:`sigma_bar` on its supported window by bisection.

    Args:
        activation: Activation family tag.
        y: Envelope value to invert; must lie in
            ``[0, sigma_bar(guard * sqrt(roc))]``.
        policy: Truncation policy.
        roc: Radius of convergence.

    Returns:
        The argument ``zeta`` with ``sigma_bar(zeta) = y`` to ``1e-12``.

    Raises:
        DomainError: If ``y`` lies outside the attainable range.
    """
    policy = policy or TruncationPolicy()
    if y < 0.0:
        raise DomainError(
            f"sigma_bar_inv is defined for values >= 0, got {float(y)!r}",
            quantity="sigma_bar_inv")
    if y == 0.0:
        return 0.0
    hi = policy.guard * math.sqrt(roc)
    ymax = sigma_bar(activation, hi, policy, roc)
    if y > ymax:
        raise DomainError(
            f"sigma_bar_inv target {float(y)!r} exceeds the attainable maximum "
            f"{float(ymax)!r} on the supported window", quantity="sigma_bar_inv")
    return bisect_root(
        lambda zc: sigma_bar(activation, zc, policy, roc) - y, 0.0, hi,
        xtol=1e-12)

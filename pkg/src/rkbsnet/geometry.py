"""Induced kernels and norms of the input-side and step-side feature maps.

The structural features of :mod:`rkbsnet.features` induce closed-form
kernels.  Pairing two input-side features gives a layer recursion in the
two-centre series ``sigma``; pairing two step-side features gives a geometric
series with the closed form ``theta(u) = u / (1 - u)``.  Only the diagonal
entries of a layer feed the next layer, because child feature copies pair at
matching positions.

Norms are the diagonal specialisations: the squared Frobenius norm of the
input-side feature block at an input ``x`` equals the trace of its kernel at
``(x, x)`` (computed by the same code path), while step-side norms are exact
rational functions of the step.

Gradients are provided for every kernel and norm — forward-mode in the input
``x``, reverse-mode in the step entries — so that each can be checked
independently against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .features import ScalingConfig
from .network import (NetworkSpec, WeightStep, Weights, forward,
                      network_delta)
from .series import TruncationPolicy, sigma, sigma_dz, sigma_dzeta

__all__ = [
    "KernelGradients",
    "kernel_xx",
    "kernel_ww",
    "banach_kernel",
    "phi_norm_profile",
    "phi_norm_sq",
    "psi_norm_profile",
    "psi_norm_sq",
    "psi_norm_sq_grad",
    "phi_norm_sq_grad_x",
    "kernel_grads",
]


# ---------------------------------------------------------------------------
# Input-side kernel
# ---------------------------------------------------------------------------

def _kernel_xx_layers(spec: NetworkSpec, weights: Weights,
                      scaling: ScalingConfig, x: np.ndarray,
                      x_prime: np.ndarray, policy: TruncationPolicy):
    """Layer-by-layer input-kernel matrices and their series arguments.

    Returns:
        ``(ks, zetas, run, runp)`` where ``ks[j][i, i']`` pairs neuron ``i``
        of the pass at ``x`` with neuron ``i'`` of the pass at ``x_prime``.
    """
    scaling.validate(spec)
    run = forward(spec, weights, x)
    runp = forward(spec, weights, x_prime)
    act = spec.activation
    ks: list[np.ndarray] = []
    zetas: list[np.ndarray] = []
    for j in range(spec.depth):
        h = spec.widths[j]
        mu = scaling.mu[j]
        if j == 0:
            base = 0.5 * spec.alphas[0] ** 2 \
                + float(run.inputs @ runp.inputs) / (2.0 * h)
            coupling = 0.0
        else:
            xo = run.activations[j - 1]
            xop = runp.activations[j - 1]
            base = 0.5 * spec.alphas[j] ** 2 + float(xo @ xop) / h
            kd = np.diag(ks[j - 1]).copy()
            a = weights.w[j] / scaling.omega_tilde[j]
            c = scaling.omega[j] ** 2 * kd / h
            coupling = a.T @ (c[:, None] * a) + float(np.sum(c))
        zeta = np.outer(mu, mu) * (base + coupling)
        z = run.preacts[j]
        zp = runp.preacts[j]
        k = np.empty((h, h))
        for i in range(h):
            for ip in range(h):
                k[i, ip] = sigma(act, z[i], zp[ip], zeta[i, ip], policy)
        ks.append(k)
        zetas.append(zeta)
    return ks, zetas, run, runp


def kernel_xx(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
              x: np.ndarray, x_prime: np.ndarray,
              policy: TruncationPolicy | None = None) -> np.ndarray:
    """Input-side kernel matrix at the output layer.

    Entry ``(i, i')`` is the inner product of the input-side features of
    output neurons ``i`` (at ``x``) and ``i'`` (at ``x_prime``).  The layer
    recursion evaluates the two-centre series at

        zeta^[0]_{i,i'} = mu_i mu_{i'} (alpha^2/2 + <x, x'> / (2 H^[0])),
        zeta^[j]_{i,i'} = mu_i mu_{i'} (alpha^2/2 + <x^[j], x'^[j]> / H^[j]
            + sum_p (W_{p,i} W_{p,i'} / (ot_{p,i} ot_{p,i'}) + 1)
                    (omega_p^2 / H^[j]) K^[j-1]_{p,p}),

    with only the previous layer's diagonal entering.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Positive scale factors.
        x: First input.
        x_prime: Second input.
        policy: Truncation policy for the series evaluations.

    Returns:
        Array of shape ``(H^[D-1], H^[D-1])``.
    """
    policy = policy or TruncationPolicy()
    ks, _, _, _ = _kernel_xx_layers(spec, weights, scaling,
                                    np.asarray(x, float),
                                    np.asarray(x_prime, float), policy)
    return ks[-1]


def phi_norm_profile(spec: NetworkSpec, weights: Weights,
                     scaling: ScalingConfig, x: np.ndarray,
                     policy: TruncationPolicy | None = None
                     ) -> list[np.ndarray]:
    """Per-neuron squared norms of the input-side features at ``x``.

    Returns:
        One array per layer; entry ``i`` of layer ``j`` is the squared norm
        of that neuron's feature (the kernel diagonal at ``(x, x)``).
    """
    policy = policy or TruncationPolicy()
    x = np.asarray(x, float)
    ks, _, _, _ = _kernel_xx_layers(spec, weights, scaling, x, x, policy)
    return [np.diag(k).copy() for k in ks]


def phi_norm_sq(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
                x: np.ndarray, policy: TruncationPolicy | None = None) -> float:
    """Squared Frobenius norm of the output layer's input-side feature block.

    Equals the trace of :func:`kernel_xx` at ``(x, x)`` exactly (the same
    code path computes both).
    """
    return float(np.sum(phi_norm_profile(spec, weights, scaling, x, policy)[-1]))


# ---------------------------------------------------------------------------
# Step-side kernel and norms
# ---------------------------------------------------------------------------

def _theta_arr(u: np.ndarray, layer: int, what: str) -> np.ndarray:
    flat = np.ravel(np.asarray(u, dtype=float))
    if np.any(np.abs(flat) >= 1.0):
        bad = int(np.argmax(np.abs(flat)))
        raise DomainError(
            f"{what} series argument {float(flat[bad])!r} has modulus >= 1 at layer "
            f"{layer}; the geometric pairing diverges for steps this large",
            layer=layer, index=bad, quantity=what)
    return u / (1.0 - u)


def _ww_args(spec: NetworkSpec, scaling: ScalingConfig, step_a: WeightStep,
             step_b: WeightStep):
    """Diagonal pairing arguments per layer plus the full top-layer argument.

    Returns:
        ``(diag_args, diag_vals, top_arg)`` where ``diag_args[j]`` has shape
        ``(H^[j],)`` for ``j < D-1`` and ``top_arg`` has shape ``(m, m)``.
    """
    scaling.validate(spec)
    diag_args: list[np.ndarray] = []
    diag_vals: list[np.ndarray] = []
    kd = None
    for j in range(spec.depth - 1):
        mu2 = scaling.mu[j] ** 2
        if j == 0:
            u = (2.0 * step_a.db[0] * step_b.db[0]
                 + 2.0 * np.sum(step_a.dw[0] * step_b.dw[0], axis=0)) / mu2
        else:
            w = kd / scaling.omega[j] ** 2
            couple = np.sum((scaling.omega_tilde[j] ** 2
                             + step_a.dw[j] * step_b.dw[j]) * w[:, None], axis=0)
            u = (2.0 * step_a.db[j] * step_b.db[j]
                 + np.sum(step_a.dw[j] * step_b.dw[j], axis=0) + couple) / mu2
        kd = _theta_arr(u, j, "kernel_ww")
        diag_args.append(u)
        diag_vals.append(kd)
    j = spec.depth - 1
    mu = scaling.mu[j]
    if j == 0:
        top = (2.0 * np.outer(step_a.db[0], step_b.db[0])
               + 2.0 * step_a.dw[0].T @ step_b.dw[0]) / np.outer(mu, mu)
    else:
        w = kd / scaling.omega[j] ** 2
        ot = scaling.omega_tilde[j]
        couple = ot.T @ (w[:, None] * ot) \
            + step_a.dw[j].T @ (w[:, None] * step_b.dw[j])
        top = (2.0 * np.outer(step_a.db[j], step_b.db[j])
               + step_a.dw[j].T @ step_b.dw[j] + couple) / np.outer(mu, mu)
    return diag_args, diag_vals, top


def kernel_ww(spec: NetworkSpec, scaling: ScalingConfig, step_a: WeightStep,
              step_b: WeightStep) -> np.ndarray:
    """Step-side kernel matrix at the output layer (closed form).

    Entry ``(i, i')`` pairs the step-side features of output neuron ``i``
    built from ``step_a`` with those of neuron ``i'`` built from ``step_b``
    under a shared scaling.  Because the series weights are all ones, the
    pairing sums a geometric series:

        K^[0]_{i,i'} = theta((2 db db' + 2 <dw_i, dw'_{i'}>) / (mu_i mu_{i'})),
        K^[j]_{i,i'} = theta((2 db db' + <dw_i, dw'_{i'}>
            + sum_p (ot_{p,i} ot_{p,i'} + dw_{p,i} dw'_{p,i'})
                    K^[j-1]_{p,p} / omega_p^2) / (mu_i mu_{i'})).

    Args:
        spec: Network architecture.
        scaling: Shared positive scale factors.
        step_a: First parameter step.
        step_b: Second parameter step.

    Returns:
        Array of shape ``(H^[D-1], H^[D-1])``.

    Raises:
        DomainError: If any pairing argument has modulus one or more (the
            geometric series diverges), reporting the offending layer.
    """
    _, _, top = _ww_args(spec, scaling, step_a, step_b)
    return _theta_arr(top, spec.depth - 1, "kernel_ww")


def psi_norm_profile(spec: NetworkSpec, scaling: ScalingConfig,
                     step: WeightStep) -> list[np.ndarray]:
    """Per-neuron squared norms of the step-side features (exact).

    The diagonal specialisation of :func:`kernel_ww` at ``step_a = step_b``:
    layer 0 gives ``theta((2 db_i^2 + 2 ||dw_{:,i}||^2) / mu_i^2)`` and deeper
    layers recurse through the previous layer's norms.

    Returns:
        One array per layer with the squared feature norms.

    Raises:
        DomainError: If a norm argument reaches one (divergent norm).
    """
    scaling.validate(spec)
    norms: list[np.ndarray] = []
    prev = None
    for j in range(spec.depth):
        mu2 = scaling.mu[j] ** 2
        col_sq = np.sum(step.dw[j] ** 2, axis=0)
        if j == 0:
            u = (2.0 * step.db[0] ** 2 + 2.0 * col_sq) / mu2
        else:
            w = prev / scaling.omega[j] ** 2
            couple = np.sum((scaling.omega_tilde[j] ** 2 + step.dw[j] ** 2)
                            * w[:, None], axis=0)
            u = (2.0 * step.db[j] ** 2 + col_sq + couple) / mu2
        prev = _theta_arr(u, j, "psi_norm")
        norms.append(prev)
    return norms


def psi_norm_sq(spec: NetworkSpec, scaling: ScalingConfig,
                step: WeightStep) -> float:
    """Squared Frobenius norm of the output layer's step-side feature block."""
    return float(np.sum(psi_norm_profile(spec, scaling, step)[-1]))


def banach_kernel(spec: NetworkSpec, weights: Weights, step: WeightStep,
                  x: np.ndarray) -> np.ndarray:
    """Asymmetric change-predictor pairing, evaluated exactly.

    The full (untruncated) pairing of the input-side and step-side features
    at the same output neuron telescopes into the network's exact output
    change, so this returns ``f_{W+step}(x) - f_W(x)`` per output neuron via
    two forward passes — no series truncation involved.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        step: Parameter step.
        x: Input vector.

    Returns:
        Vector of shape ``(H^[D-1],)``.
    """
    return network_delta(spec, weights, step, np.asarray(x, float))


# ---------------------------------------------------------------------------
# Gradient of the step-side norm in the step
# ---------------------------------------------------------------------------

def psi_norm_sq_grad(spec: NetworkSpec, scaling: ScalingConfig,
                     step: WeightStep) -> WeightStep:
    """Gradient of :func:`psi_norm_sq` in every step entry (reverse mode).

    Writing the output-layer squared Frobenius norm as
    ``sum_i theta(A^[D-1]_i)`` with the recursive arguments ``A^[j]_i`` of
    :func:`psi_norm_profile`, the adjoint ``lambda^[j]_i`` of each layer's
    norm is propagated downward through

        lambda^[j-1]_p = sum_i dA_i (ot_{p,i}^2 + dw_{p,i}^2)
                                 / (omega_p^2 mu_i^2),

    where ``dA_i = lambda^[j]_i theta'(A^[j]_i)``, and each layer contributes

        d/d db_i  = 4 db_i dA_i / mu_i^2,
        d/d dw_pi = 2 dw_pi (1 + N^[j-1]_p / omega_p^2) dA_i / mu_i^2

    (both factors doubled at the first layer, whose blocks enter twice).

    Args:
        spec: Network architecture.
        scaling: Positive scale factors.
        step: Parameter step at which to differentiate.

    Returns:
        The gradient arranged as a :class:`~rkbsnet.network.WeightStep`.
    """
    scaling.validate(spec)
    norms = psi_norm_profile(spec, scaling, step)

    gdw = [np.zeros_like(d) for d in step.dw]
    gdb = [np.zeros_like(d) for d in step.db]
    lam = np.ones(spec.widths[-1])
    for j in range(spec.depth - 1, -1, -1):
        mu2 = scaling.mu[j] ** 2
        # theta'(u) = 1 / (1 - u)^2 = (1 + theta(u))^2, exactly.
        d_arg = lam * (1.0 + norms[j]) ** 2
        if j == 0:
            gdb[0] = d_arg * 4.0 * step.db[0] / mu2
            gdw[0] = 4.0 * step.dw[0] * (d_arg / mu2)[None, :]
        else:
            om2 = scaling.omega[j] ** 2
            n_prev = norms[j - 1]
            gdb[j] = d_arg * 4.0 * step.db[j] / mu2
            gdw[j] = 2.0 * step.dw[j] * (1.0 + n_prev / om2)[:, None] \
                * (d_arg / mu2)[None, :]
            lam = np.sum((scaling.omega_tilde[j] ** 2 + step.dw[j] ** 2)
                         * (d_arg / mu2)[None, :], axis=1) / om2
    return WeightStep(gdw, gdb)


# ---------------------------------------------------------------------------
# Gradient of the input-side norm in the input
# ---------------------------------------------------------------------------

def _forward_jacobians(spec: NetworkSpec, weights: Weights,
                       run) -> list[np.ndarray]:
    """Jacobians ``J^[j][p, i] = d z^[j]_i / d x_p`` of all pre-activations."""
    act = spec.act
    jac: list[np.ndarray] = [weights.w[0] / math.sqrt(spec.widths[0])]
    for j in range(1, spec.depth):
        jac.append((jac[j - 1] * act.deriv(run.preacts[j - 1])[None, :])
                   @ weights.w[j] / math.sqrt(spec.widths[j]))
    return jac


def phi_norm_sq_grad_x(spec: NetworkSpec, weights: Weights,
                       scaling: ScalingConfig, x: np.ndarray,
                       policy: TruncationPolicy | None = None) -> np.ndarray:
    """Gradient of :func:`phi_norm_sq` in the input ``x`` (total derivative).

    The input enters each diagonal kernel entry twice — through both series
    centres ``z_i`` (giving twice the one-sided centre derivative at
    coincidence) and through the argument ``zeta_i`` — and the argument
    couples layers through the previous diagonal, handled by a reverse pass
    mirroring the forward recursion.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Positive scale factors.
        x: Input vector.
        policy: Truncation policy for the series derivatives.

    Returns:
        Vector of shape ``(n,)``.
    """
    policy = policy or TruncationPolicy()
    scaling.validate(spec)
    x = np.asarray(x, float)
    run = forward(spec, weights, x)
    act_name = spec.activation
    act = spec.act
    jac = _forward_jacobians(spec, weights, run)

    zeta_d: list[np.ndarray] = []
    dbase: list[np.ndarray] = []
    nd_prev = None
    for j in range(spec.depth):
        h = spec.widths[j]
        mu = scaling.mu[j]
        if j == 0:
            base = 0.5 * spec.alphas[0] ** 2 + float(x @ x) / (2.0 * h)
            dbase.append(x / h)
            s_diag = 0.0
        else:
            xo = run.activations[j - 1]
            tau_p = act.deriv(run.preacts[j - 1])
            base = 0.5 * spec.alphas[j] ** 2 + float(xo @ xo) / h
            dbase.append((2.0 / h) * (jac[j - 1] @ (xo * tau_p)))
            ratio = (weights.w[j] / scaling.omega_tilde[j]) ** 2 + 1.0
            c = scaling.omega[j] ** 2 * nd_prev / h
            s_diag = np.sum(ratio * c[:, None], axis=0)
        zeta = mu ** 2 * (base + s_diag)
        zeta_d.append(zeta)
        z = run.preacts[j]
        nd_prev = np.array([sigma(act_name, z[i], z[i], zeta[i], policy)
                            for i in range(h)])

    grad = np.zeros(spec.input_dim)
    lam = np.ones(spec.widths[-1])
    for j in range(spec.depth - 1, -1, -1):
        h = spec.widths[j]
        z = run.preacts[j]
        mu2 = scaling.mu[j] ** 2
        sdz = np.array([sigma_dz(act_name, z[i], z[i], zeta_d[j][i], policy)
                        for i in range(h)])
        sdzeta = np.array([sigma_dzeta(act_name, z[i], z[i], zeta_d[j][i],
                                       policy) for i in range(h)])
        grad += jac[j] @ (lam * 2.0 * sdz)
        grad += float(np.sum(lam * sdzeta * mu2)) * dbase[j]
        if j > 0:
            ratio = (weights.w[j] / scaling.omega_tilde[j]) ** 2 + 1.0
            c = scaling.omega[j] ** 2 / h
            lam = c * np.sum(ratio * (lam * sdzeta * mu2)[None, :], axis=1)
    return grad


# ---------------------------------------------------------------------------
# Kernel gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelGradients:
    """Derivatives of the output-layer kernels in their first argument.

    Attributes:
        xx_dx: Derivative of the input-side kernel in the first input;
            shape ``(n, m, m)`` with ``xx_dx[p, i, i']`` the derivative of
            entry ``(i, i')`` in ``x_p``.
        ww_dw: Derivative of the step-side kernel in the first step's weight
            entries; one array per layer of shape ``(fan_in_j, H^[j], m, m)``.
        ww_db: Same for the first step's bias entries; one array per layer of
            shape ``(H^[j], m, m)``.
    """

    xx_dx: np.ndarray
    ww_dw: list[np.ndarray]
    ww_db: list[np.ndarray]


def _kernel_xx_grad_x(spec: NetworkSpec, weights: Weights,
                      scaling: ScalingConfig, x: np.ndarray,
                      x_prime: np.ndarray,
                      policy: TruncationPolicy) -> np.ndarray:
    """Forward-mode derivative of the top input-kernel in the first input."""
    ks, zetas, run, runp = _kernel_xx_layers(spec, weights, scaling, x,
                                             x_prime, policy)
    act_name = spec.activation
    act = spec.act
    jac = _forward_jacobians(spec, weights, run)
    n = spec.input_dim

    g_diag = None  # (H_{j-1}, n): d K^[j-1]_{p,p} / d x
    for j in range(spec.depth):
        h = spec.widths[j]
        mu = scaling.mu[j]
        z = run.preacts[j]
        zp = runp.preacts[j]
        if j == 0:
            dbase = x_prime / (2.0 * h)
            s_term = np.zeros((h, h, n))
        else:
            xop = runp.activations[j - 1]
            tau_p = act.deriv(run.preacts[j - 1])
            dbase = (jac[j - 1] @ (xop * tau_p)) / h
            a = weights.w[j] / scaling.omega_tilde[j]
            c = scaling.omega[j] ** 2 / h
            s_term = np.einsum("pi,pk,p,pq->ikq", a, a, c, g_diag) \
                + (c @ g_diag)[None, None, :]
        top = j == spec.depth - 1
        rows = range(h)
        g = np.zeros((h, h, n))
        for i in rows:
            cols = range(h) if top else (i,)
            for ip in cols:
                zeta = zetas[j][i, ip]
                dz1 = sigma_dz(act_name, z[i], zp[ip], zeta, policy)
                dzeta = sigma_dzeta(act_name, z[i], zp[ip], zeta, policy)
                g[i, ip] = dz1 * jac[j][:, i] \
                    + dzeta * mu[i] * mu[ip] * (dbase + s_term[i, ip])
        if top:
            return np.transpose(g, (2, 0, 1))
        g_diag = np.array([g[i, i] for i in range(h)])
    raise AssertionError("unreachable")


def _kernel_ww_grads(spec: NetworkSpec, scaling: ScalingConfig,
                     step_a: WeightStep, step_b: WeightStep
                     ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Reverse-mode derivative of the top step-kernel in the first step."""
    diag_args, diag_vals, top = _ww_args(spec, scaling, step_a, step_b)
    _theta_arr(top, spec.depth - 1, "kernel_ww")  # domain check
    m = spec.output_dim
    gdw = [np.zeros(step_a.dw[j].shape + (m, m)) for j in range(spec.depth)]
    gdb = [np.zeros(step_a.db[j].shape + (m, m)) for j in range(spec.depth)]

    for i in range(m):
        for ip in range(m):
            jt = spec.depth - 1
            mu = scaling.mu[jt]
            d_top = 1.0 / (1.0 - top[i, ip]) ** 2
            denom = mu[i] * mu[ip]
            if jt == 0:
                gdb[0][i, i, ip] += d_top * 2.0 * step_b.db[0][ip] / denom
                gdw[0][:, i, i, ip] += d_top * 2.0 * step_b.dw[0][:, ip] / denom
                continue
            kd = diag_vals[jt - 1]
            om2 = scaling.omega[jt] ** 2
            gdb[jt][i, i, ip] += d_top * 2.0 * step_b.db[jt][ip] / denom
            gdw[jt][:, i, i, ip] += d_top * step_b.dw[jt][:, ip] \
                * (1.0 + kd / om2) / denom
            d_kd = d_top * (scaling.omega_tilde[jt][:, i]
                            * scaling.omega_tilde[jt][:, ip]
                            + step_a.dw[jt][:, i] * step_b.dw[jt][:, ip]) \
                / (om2 * denom)
            for j in range(jt - 1, -1, -1):
                mu2 = scaling.mu[j] ** 2
                d_arg = d_kd / (1.0 - diag_args[j]) ** 2
                if j == 0:
                    gdb[0][:, i, ip] += d_arg * 2.0 * step_b.db[0] / mu2
                    gdw[0][:, :, i, ip] += 2.0 * step_b.dw[0] \
                        * (d_arg / mu2)[None, :]
                else:
                    kd_prev = diag_vals[j - 1]
                    om2j = scaling.omega[j] ** 2
                    gdb[j][:, i, ip] += d_arg * 2.0 * step_b.db[j] / mu2
                    gdw[j][:, :, i, ip] += step_b.dw[j] \
                        * (1.0 + kd_prev / om2j)[:, None] \
                        * (d_arg / mu2)[None, :]
                    d_kd = np.sum(
                        (scaling.omega_tilde[j] ** 2
                         + step_a.dw[j] * step_b.dw[j])
                        * (d_arg / mu2)[None, :], axis=1) / om2j
    return gdw, gdb


def kernel_grads(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
                 x: np.ndarray, x_prime: np.ndarray, step_a: WeightStep,
                 step_b: WeightStep,
                 policy: TruncationPolicy | None = None) -> KernelGradients:
    """First-argument derivatives of both output-layer kernels.

    The input-side kernel is differentiated in the first input ``x`` (the
    second input's centres and activations are constants), forward-mode
    through the layer recursion.  The step-side kernel is differentiated in
    the first step's weight and bias entries, reverse-mode per output pair.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Positive scale factors.
        x: First input.
        x_prime: Second input.
        step_a: First step (differentiation target).
        step_b: Second step (held fixed).
        policy: Truncation policy for the series derivatives.

    Returns:
        A :class:`KernelGradients` bundle.
    """
    policy = policy or TruncationPolicy()
    xx_dx = _kernel_xx_grad_x(spec, weights, scaling, np.asarray(x, float),
                              np.asarray(x_prime, float), policy)
    ww_dw, ww_db = _kernel_ww_grads(spec, scaling, step_a, step_b)
    return KernelGradients(xx_dx=xx_dx, ww_dw=ww_dw, ww_db=ww_db)

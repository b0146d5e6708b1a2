"""Canonical scale factors, norm-cap certificates, and convergence checks.

Given a network, a gradient step, and margin parameters ``(eps, chi, delta)``,
this module constructs the scale factors under which the step-side feature
geometry becomes *canonical*: the gradient of the output layer's squared
step-side norm equals ``nu`` times the step itself, entrywise, for an
explicit constant ``nu``.  The construction is a single bottom-up pass:

* box-corrected step magnitudes and per-layer caps ``B^[j]`` gate
  applicability (:func:`corollary_constants`),
* per-neuron ``mu`` factors are solved in closed form layer by layer
  (:func:`canonical_construct`), with ``omega`` matching the step-side norms
  they induce and ``omega_tilde`` splitting each weight column's mass,
* the proportionality constant is ``nu = (4 / max_i t^[D-1]_i^2)
  kappa((1 - eps_psi) / (1 - chi))``.

Sound premise checkers (:func:`check_phi_cap`, :func:`check_psi_cap`) certify
norm caps for arbitrary scale factors, and :func:`joint_convergence` verifies
— or constructs — scale factors meeting the joint step/scale conditions under
which both feature families stay uniformly bounded.  The reported caps come
in two flavours where they disagree: the nominal (displayed) cap and the
slightly larger derived cap that the construction actually guarantees; see
the per-field documentation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import CapError, DomainError, FeasibilityError
from .features import ScalingConfig
from .geometry import psi_norm_profile, psi_norm_sq, psi_norm_sq_grad
from .network import (BackpropTrace, LossSpec, NetworkSpec, StepMagnitudes,
                      WeightStep, Weights, backprop_step, s_squared,
                      step_magnitudes)
from .series import (TruncationPolicy, bisect_root, kappa, kappa_inv,
                     sigma_bar, sigma_bar_inv, theta)

__all__ = [
    "ConditionRecord",
    "CapCheck",
    "CorollaryConstants",
    "CanonicalScaling",
    "CanonicalReport",
    "ConvergenceProfile",
    "JointReport",
    "AlphaSolveResult",
    "corollary_constants",
    "canonical_construct",
    "verify_canonical",
    "check_phi_cap",
    "check_psi_cap",
    "joint_convergence",
    "solve_alpha_for_chi",
    "coupled_synthetic_step",
]


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionRecord:
    """One checked condition with its margin.

    Attributes:
        kind: Condition family (e.g. ``"mu_interval"``, ``"step_condition"``).
        layer: Layer index the condition belongs to.
        index: Neuron/column index within the layer (``None`` if layer-wide).
        value: The checked quantity.
        bound: The bound — a float for one-sided conditions, a
            ``(lower, upper)`` pair for interval conditions.
        margin: Slack (non-negative means satisfied; boundary equality counts
            as satisfied with zero margin).
        ok: Whether the condition holds.
        note: Free-text qualifier (e.g. ``"nominal display"``, ``"clamped"``).
    """

    kind: str
    layer: int
    index: int | None
    value: float
    bound: float | tuple[float, float]
    margin: float
    ok: bool
    note: str = ""


@dataclass(frozen=True)
class CapCheck:
    """Outcome of a premise checker.

    Attributes:
        records: Per-neuron condition records.
        caps: The per-layer norm caps the premises certify.
        ok: True when every premise holds.
    """

    records: list[ConditionRecord]
    caps: np.ndarray
    ok: bool


def _binding(records: list[ConditionRecord]) -> ConditionRecord | None:
    """The record with the smallest margin (the binding condition)."""
    return min(records, key=lambda r: r.margin) if records else None


# ---------------------------------------------------------------------------
# Corollary constants: margins, caps, nu
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorollaryConstants:
    """Margin parameters, caps, and the proportionality constant.

    Attributes:
        eps: Output-layer expansion margin ``eps``.
        chi: Layer-coupling ratio ``chi``.
        delta: Box-correction parameter ``delta``.
        rho: Series radius of the activation.
        s_sq: Layer scale constants ``s^[j]^2``.
        t_box: Box-corrected step magnitudes per layer (squared, per neuron).
        t_box_max: ``max_i t^[j]_i^2`` per layer.
        eps_psi: Step-side margin at the output layer (from the equality
            ``eps_psi = 1 - (s^2 / ((1-eps) sqrt(rho))) max_i t_i^2 / (1-chi)``).
        eps_phi: Input-side margins per layer (output layer pinned to ``eps``,
            lower layers from the backward recursion).
        eps_phi_clamped: Per layer, True where the recursion's requirement was
            slack and the margin was clamped at ``1 - guard``.
        b_sq: Squared per-layer step caps ``B^[j]^2``.
        cap_margins: ``b_sq - t_box_max`` per layer (positive by construction).
        nu: Gradient proportionality constant.
        lam_prime: Step-shrink factor ``(1 - max_i t^2 / B^2)^2`` at the
            output layer.
        alpha_residuals: Diagnostic residuals of the layer-coupling condition
            ``||dW^[j+1]||_F^2 = (1 - delta) chi max_i t^[j]_i^2`` (one per
            adjacent layer pair; empty for depth one).
    """

    eps: float
    chi: float
    delta: float
    rho: float
    s_sq: np.ndarray
    t_box: StepMagnitudes
    t_box_max: np.ndarray
    eps_psi: float
    eps_phi: np.ndarray
    eps_phi_clamped: tuple[bool, ...]
    b_sq: np.ndarray
    cap_margins: np.ndarray
    nu: float
    lam_prime: float
    alpha_residuals: np.ndarray


def _validate_margins(eps: float, chi: float, delta: float) -> None:
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    if not (0.0 < chi < 1.0):
        raise ValueError("chi must lie in (0, 1)")
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")


def corollary_constants(spec: NetworkSpec, weights: Weights, step: WeightStep,
                        *, eps: float, chi: float, delta: float,
                        policy: TruncationPolicy | None = None
                        ) -> CorollaryConstants:
    """Compute margins, caps, and ``nu`` for a step, enforcing the caps.

    The output-layer step-side margin follows from the equality

        eps_psi = 1 - (1/(1-chi)) (s^[D-1]^2 / ((1-eps) sqrt(rho)))
                       max_i t^[D-1]_i^2,

    and the input-side margins of lower layers from a backward recursion in
    the layer data; where that recursion's requirement is slack (typical for
    small steps) the margin is clamped at ``1 - guard`` and flagged.  Every
    layer must satisfy ``max_i t^[j]_i^2 < B^[j]^2``.

    Args:
        spec: Network architecture.
        weights: Base parameters (enter the margin recursion).
        step: Parameter step.
        eps: Output-layer expansion margin in ``(0, 1)``.
        chi: Layer-coupling ratio in ``(0, 1)``.
        delta: Box-correction parameter in ``(0, 1)``.
        policy: Truncation policy for envelope evaluations.

    Returns:
        The assembled :class:`CorollaryConstants`.

    Raises:
        CapError: If any layer's step magnitude reaches its cap — the
            downstream constructions and bounds are not applicable then.
        FeasibilityError: If the margin recursion has no solution.
    """
    _validate_margins(eps, chi, delta)
    policy = policy or TruncationPolicy()
    depth = spec.depth
    rho = spec.act.roc
    root_rho = math.sqrt(rho)
    s_sq = s_squared(spec)
    t_box = step_magnitudes(spec, step, "boxast", delta)
    t_box_max = np.array([t_box.layer_max(j) for j in range(depth)])

    eps_psi = 1.0 - (s_sq[-1] / ((1.0 - eps) * root_rho)) \
        * t_box_max[-1] / (1.0 - chi)

    guard = policy.guard
    eps_phi = np.empty(depth)
    clamped = [False] * depth
    eps_phi[depth - 1] = eps
    y_max = sigma_bar(spec.activation, guard * root_rho, policy)
    for j in range(depth - 2, -1, -1):
        pw = chi ** (depth - 1 - j) * eps_psi
        t_next = t_box_max[j + 1]
        if t_next == 0.0:
            eps_phi[j] = 1.0 - guard
            clamped[j] = True
            continue
        num = (pw / (1.0 - chi)) * (1.0 - eps_phi[j + 1]) * root_rho / t_next \
            - (pw / (1.0 - pw)) * s_sq[j + 1]
        if num <= 0.0:
            raise FeasibilityError(
                f"input-side margin recursion infeasible below layer {j + 1}: "
                f"the coupling requirement leaves no expansion margin",
                kind="expansion_margin", layer=j,
                details={"numerator": float(num)})
        col_sq = np.sum(step.dw[j + 1] ** 2, axis=0)
        col_max = np.max(np.abs(step.dw[j + 1]), axis=0) ** 2 \
            if step.dw[j + 1].size else np.zeros(spec.widths[j + 1])
        gap = col_sq / (1.0 - delta) - col_max
        w_col_sq = np.sum(weights.w[j + 1] ** 2, axis=0)
        with np.errstate(divide="ignore"):
            den_cols = np.where(gap > 0.0, w_col_sq / gap, np.inf) \
                / spec.widths[j + 1] + spec.widths[j] / spec.widths[j + 1]
        den = float(np.max(den_cols))
        ratio = num / den
        if ratio >= y_max:
            eps_phi[j] = 1.0 - guard
            clamped[j] = True
        else:
            eps_phi[j] = 1.0 - sigma_bar_inv(spec.activation, ratio, policy) \
                / root_rho

    b_sq = np.empty(depth)
    for j in range(depth):
        shrink = 1.0 if j == depth - 1 else 1.0 - chi ** (depth - 1 - j) * eps_psi
        b_sq[j] = (1.0 - chi) ** 2 * shrink * (1.0 - eps_phi[j]) * root_rho \
            / s_sq[j]
    cap_margins = b_sq - t_box_max
    for j in range(depth):
        if not (t_box_max[j] < b_sq[j]):
            raise CapError(
                f"step magnitude cap violated at layer {j}: "
                f"max_i t_i^2 = {float(t_box_max[j])!r} >= B^2 = {float(b_sq[j])!r}; "
                f"the construction and bounds are not applicable",
                layer=j, value=float(t_box_max[j]), cap=float(b_sq[j]))

    if t_box_max[-1] == 0.0:
        raise FeasibilityError(
            "the step vanishes at the output layer; canonical factors are "
            "undefined for a zero step", kind="zero_step", layer=depth - 1)
    u_star = (1.0 - eps_psi) / (1.0 - chi)
    nu = (4.0 / t_box_max[-1]) * kappa(u_star)
    lam_prime = (1.0 - t_box_max[-1] / b_sq[-1]) ** 2

    alpha_residuals = np.array([
        float(np.sum(step.dw[j + 1] ** 2))
        - (1.0 - delta) * chi * t_box_max[j]
        for j in range(depth - 1)])

    return CorollaryConstants(
        eps=eps, chi=chi, delta=delta, rho=rho, s_sq=s_sq, t_box=t_box,
        t_box_max=t_box_max, eps_psi=float(eps_psi), eps_phi=eps_phi,
        eps_phi_clamped=tuple(clamped), b_sq=b_sq, cap_margins=cap_margins,
        nu=float(nu), lam_prime=float(lam_prime),
        alpha_residuals=alpha_residuals)


# ---------------------------------------------------------------------------
# Canonical construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalScaling:
    """Canonical scale factors and the certificates that come with them.

    Attributes:
        constants: The margins, caps, and ``nu`` used.
        scaling: The constructed scale factors.
        t_eff: Effective squared step magnitudes per layer (per neuron) —
            the quantities the ``mu`` formulas consume.  At the output layer
            they equal the box-corrected magnitudes; below it they include
            the full fan-in multiplicity of the weight-column term.
        eta: Learning rate behind the step (``None`` if not supplied).
        lam: Regularisation weight ``1 / (eta nu)`` (``None`` without
            ``eta``).
        phi_caps: Input-side Frobenius caps per layer,
            ``H^[j] sigma_bar((1 - eps_phi^[j]) sqrt(rho))``.
        psi_cap_claimed: Nominal output-layer step-side cap
            ``H^[D-1] (1 - eps_psi) / eps_psi``.
        psi_cap_derived: The cap the construction actually guarantees,
            ``H^[D-1] theta(max_i u_i)`` with ``u_i`` the per-neuron norm
            arguments (slightly larger than the nominal cap).
        psi_total: Exact output-layer squared Frobenius norm of the step-side
            features under the constructed factors.
    """

    constants: CorollaryConstants
    scaling: ScalingConfig
    t_eff: list[np.ndarray]
    eta: float | None
    lam: float | None
    phi_caps: np.ndarray
    psi_cap_claimed: float
    psi_cap_derived: float
    psi_total: float


def _effective_magnitudes(spec: NetworkSpec, step: WeightStep,
                          delta: float) -> list[np.ndarray]:
    """Per-neuron effective squared magnitudes ``T^[j]_i^2``.

    The first layer doubles both blocks; deeper layers carry the weight
    column once directly plus once per feeding neuron through the child
    copies: ``2 db^2 + ||dw col||^2 (1 + H^[j-1] / (1 - delta))``.
    """
    out: list[np.ndarray] = []
    for j in range(spec.depth):
        col_sq = np.sum(step.dw[j] ** 2, axis=0)
        bias_sq = step.db[j] ** 2
        if j == 0:
            out.append(2.0 * bias_sq + 2.0 * col_sq)
        else:
            out.append(2.0 * bias_sq + col_sq
                       + spec.fan_in(j) * col_sq / (1.0 - delta))
    return out


def canonical_construct(spec: NetworkSpec, weights: Weights, step: WeightStep,
                        *, eps: float, chi: float, delta: float,
                        eta: float | None = None,
                        policy: TruncationPolicy | None = None
                        ) -> CanonicalScaling:
    """Construct the scale factors that make the step geometry canonical.

    One bottom-up pass in closed form:

    * output layer: ``mu_i^2 = T_i^2 / kappa_inv(nu T_i^2 / 4)`` — this makes
      ``theta'(u_i) u_i / T_i^2 = nu / 4`` per neuron exactly;
    * lower layers: ``mu_i^2 = T_i^4 / (T_i^2 - E^[j+1])`` with
      ``E^[j+1] = ||dW^[j+1]||_F^2 / (1 - delta)``, which requires
      ``T_i^2 > E^[j+1]`` strictly;
    * ``omega^[j]_p^2 = theta(T_p^2 / mu_p^2)`` at layer ``j-1`` (the exact
      step-side norms the factors induce), and
      ``omega_tilde^[j]_{p,i}^2 = ||dW_{:,i}||^2 / (1 - delta) - dW_{p,i}^2``.

    Under these factors the gradient of the output layer's squared step-side
    Frobenius norm equals ``nu`` times the step, entrywise and exactly.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        step: Parameter step (a gradient step, typically).
        eps: Output-layer expansion margin.
        chi: Layer-coupling ratio.
        delta: Box-correction parameter.
        eta: Learning rate behind the step; enables the ``lam`` coupling.
        policy: Truncation policy for envelope evaluations.

    Returns:
        A :class:`CanonicalScaling` artifact.

    Raises:
        CapError: If a layer's step magnitude reaches its cap.
        FeasibilityError: If a layer's effective magnitude does not dominate
            the layer above's step mass, or a weight column of the step is
            zero (no scale split exists).
    """
    consts = corollary_constants(spec, weights, step, eps=eps, chi=chi,
                                 delta=delta, policy=policy)
    policy = policy or TruncationPolicy()
    depth = spec.depth
    t_eff = _effective_magnitudes(spec, step, delta)

    e_mass = [np.sum(step.dw[j] ** 2) / (1.0 - delta) for j in range(depth)]
    mu_sq: list[np.ndarray] = [np.empty(h) for h in spec.widths]
    u_args: list[np.ndarray] = [np.empty(h) for h in spec.widths]
    for j in range(depth - 1, -1, -1):
        t_sq = t_eff[j]
        if j == depth - 1:
            for i in range(spec.widths[j]):
                if t_sq[i] == 0.0:
                    mu_sq[j][i] = 1.0
                    u_args[j][i] = 0.0
                else:
                    u = kappa_inv(consts.nu * t_sq[i] / 4.0)
                    mu_sq[j][i] = t_sq[i] / u
                    u_args[j][i] = u
        else:
            e_next = e_mass[j + 1]
            if e_next == 0.0:
                raise FeasibilityError(
                    f"the step has no weight mass at layer {j + 1}; scale "
                    f"factors below it are undefined", kind="zero_step",
                    layer=j + 1)
            for i in range(spec.widths[j]):
                if not (t_sq[i] > e_next):
                    raise FeasibilityError(
                        f"effective step magnitude {float(t_sq[i])!r} at layer {j}, "
                        f"neuron {i} does not dominate the layer above's "
                        f"step mass {float(e_next)!r}", kind="step_balance", layer=j,
                        details={"neuron": i, "t_eff_sq": float(t_sq[i]),
                                 "e_next": float(e_next)})
                mu_sq[j][i] = t_sq[i] ** 2 / (t_sq[i] - e_next)
                u_args[j][i] = 1.0 - e_next / t_sq[i]

    omega: list[np.ndarray | None] = [None]
    omega_tilde: list[np.ndarray | None] = [None]
    for j in range(1, depth):
        omega.append(np.sqrt(np.array([theta(u) for u in u_args[j - 1]])))
        col_sq = np.sum(step.dw[j] ** 2, axis=0)
        zero_cols = np.flatnonzero(col_sq == 0.0)
        if zero_cols.size:
            raise FeasibilityError(
                f"step weight column {int(zero_cols[0])} at layer {j} is "
                f"zero; no scale split exists for it",
                kind="zero_step_column", layer=j,
                details={"column": int(zero_cols[0])})
        ot_sq = col_sq[None, :] / (1.0 - delta) - step.dw[j] ** 2
        omega_tilde.append(np.sqrt(ot_sq))

    scaling = ScalingConfig(mu=[np.sqrt(m) for m in mu_sq], omega=omega,
                            omega_tilde=omega_tilde)
    scaling.validate(spec)

    root_rho = math.sqrt(consts.rho)
    phi_caps = np.array([
        spec.widths[j] * sigma_bar(spec.activation,
                                   (1.0 - consts.eps_phi[j]) * root_rho,
                                   policy)
        for j in range(depth)])
    top_u = u_args[depth - 1]
    psi_total = float(sum(theta(u) for u in top_u))
    psi_cap_derived = spec.widths[-1] * theta(float(np.max(top_u)))
    psi_cap_claimed = spec.widths[-1] * (1.0 - consts.eps_psi) / consts.eps_psi
    lam = None if eta is None else 1.0 / (eta * consts.nu)

    return CanonicalScaling(
        constants=consts, scaling=scaling, t_eff=t_eff, eta=eta, lam=lam,
        phi_caps=phi_caps, psi_cap_claimed=float(psi_cap_claimed),
        psi_cap_derived=float(psi_cap_derived), psi_total=psi_total)


# ---------------------------------------------------------------------------
# Premise checkers
# ---------------------------------------------------------------------------

def check_phi_cap(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
                  eps_phi: np.ndarray,
                  policy: TruncationPolicy | None = None) -> CapCheck:
    """Certify input-side norm caps from per-neuron ``mu`` conditions.

    If every layer's factors satisfy

        mu_i^2 <= (1 - eps_phi^[0]) sqrt(rho) / s^[0]^2                (j = 0)
        mu_i^2 <= (1 - eps_phi^[j]) sqrt(rho) / (s^[j]^2
            + (1/H^[j]) sum_p omega_p^2 (W_{p,i}^2 / ot_{p,i}^2 + 1)
                         sigma_bar((1 - eps_phi^[j-1]) sqrt(rho)))     (j > 0)

    then ``||Phi^[j](x)||_F^2 <= H^[j] sigma_bar((1 - eps_phi^[j]) sqrt(rho))``
    for every input in the box, at every layer.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Scale factors to certify.
        eps_phi: Per-layer input-side margins.
        policy: Truncation policy for envelope evaluations.

    Returns:
        A :class:`CapCheck` with per-neuron records and the certified caps.
    """
    policy = policy or TruncationPolicy()
    scaling.validate(spec)
    rho = spec.act.roc
    root_rho = math.sqrt(rho)
    s_sq = s_squared(spec)
    records: list[ConditionRecord] = []
    caps = np.empty(spec.depth)
    prev_ratio = None
    for j in range(spec.depth):
        ratio = sigma_bar(spec.activation, (1.0 - eps_phi[j]) * root_rho,
                          policy)
        caps[j] = spec.widths[j] * ratio
        if j == 0:
            denom = np.full(spec.widths[0], s_sq[0])
        else:
            load = (weights.w[j] / scaling.omega_tilde[j]) ** 2 + 1.0
            per_neuron = np.sum(load * (scaling.omega[j] ** 2)[:, None],
                                axis=0) / spec.widths[j]
            denom = s_sq[j] + per_neuron * prev_ratio
        bound = (1.0 - eps_phi[j]) * root_rho / denom
        for i in range(spec.widths[j]):
            val = float(scaling.mu[j][i] ** 2)
            tol = 1e-12 * max(abs(val), abs(float(bound[i])))
            records.append(ConditionRecord(
                kind="phi_cap_premise", layer=j, index=i, value=val,
                bound=float(bound[i]), margin=float(bound[i] - val),
                ok=val <= bound[i] + tol))
        prev_ratio = ratio
    return CapCheck(records=records, caps=caps,
                    ok=all(r.ok for r in records))


def check_psi_cap(spec: NetworkSpec, scaling: ScalingConfig, step: WeightStep,
                  eps_psi: np.ndarray) -> CapCheck:
    """Certify step-side norm caps from per-neuron ``mu`` conditions.

    With the actual step-side norms ``N^[j-1]_p`` of the previous layer, if

        t^[0]_i^2 <= (1 - eps_psi^[0]) mu_i^2                          (j = 0)
        t^[j]_i^2 + sum_p (ot_{p,i}^2 + dw_{p,i}^2) N^[j-1]_p / omega_p^2
                  <= (1 - eps_psi^[j]) mu_i^2                          (j > 0)

    (plain magnitudes ``t^[j]_i^2 = 2 db_i^2 + ||dw_{:,i}||^2`` above the
    first layer), then
    ``||Psi^[j]||_F^2 <= H^[j] (1 - eps_psi^[j]) / eps_psi^[j]`` per layer.

    Args:
        spec: Network architecture.
        scaling: Scale factors to certify.
        step: Parameter step.
        eps_psi: Per-layer step-side margins.

    Returns:
        A :class:`CapCheck` with per-neuron records and the certified caps.
    """
    scaling.validate(spec)
    norms = psi_norm_profile(spec, scaling, step)
    t_plain = step_magnitudes(spec, step, "plain")
    records: list[ConditionRecord] = []
    caps = np.empty(spec.depth)
    for j in range(spec.depth):
        caps[j] = spec.widths[j] * (1.0 - eps_psi[j]) / eps_psi[j]
        if j == 0:
            lhs = t_plain.t_sq[0]
        else:
            w = norms[j - 1] / scaling.omega[j] ** 2
            lhs = t_plain.t_sq[j] + np.sum(
                (scaling.omega_tilde[j] ** 2 + step.dw[j] ** 2) * w[:, None],
                axis=0)
        bound = (1.0 - eps_psi[j]) * scaling.mu[j] ** 2
        for i in range(spec.widths[j]):
            tol = 1e-12 * max(abs(float(lhs[i])), abs(float(bound[i])))
            records.append(ConditionRecord(
                kind="psi_cap_premise", layer=j, index=i,
                value=float(lhs[i]), bound=float(bound[i]),
                margin=float(bound[i] - lhs[i]), ok=lhs[i] <= bound[i] + tol))
    return CapCheck(records=records, caps=caps,
                    ok=all(r.ok for r in records))


# ---------------------------------------------------------------------------
# Canonical verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CanonicalReport:
    """Certificates for a canonical construction.

    The canonical factors certify the *step side*: the gradient identity and
    the step-side norm caps.  Input-side caps also need the joint step/scale
    conditions — certify those separately with :func:`check_phi_cap` or
    :func:`joint_convergence`.

    Attributes:
        identity_max_rel: Worst entrywise relative error of the gradient
            identity ``grad ||Psi||_F^2 = nu * step``.
        identity_ok: Whether the identity holds within ``rel_tol``.
        psi_total: Recomputed output-layer squared step-side norm.
        psi_cap_derived: Derived cap (certified).
        psi_cap_claimed: Nominal cap (reported; can be exceeded).
        derived_ok: ``psi_total <= psi_cap_derived``.
        claimed_ok: ``psi_total <= psi_cap_claimed``.
        ok: Overall verdict (identity and derived cap).
    """

    identity_max_rel: float
    identity_ok: bool
    psi_total: float
    psi_cap_derived: float
    psi_cap_claimed: float
    derived_ok: bool
    claimed_ok: bool
    ok: bool


def verify_canonical(spec: NetworkSpec, weights: Weights, step: WeightStep,
                     canonical: CanonicalScaling, *,
                     policy: TruncationPolicy | None = None,
                     rel_tol: float = 1e-8) -> CanonicalReport:
    """Check the certificates a canonical construction promises.

    Verifies the gradient identity entrywise and recomputes the step-side
    norm, comparing it against the derived cap (the claimed nominal cap is
    reported alongside, without gating the verdict — it can genuinely be
    exceeded when the per-neuron norm arguments top out above the claimed
    margin level).

    Args:
        spec: Network architecture.
        weights: Base parameters (unused by the step-side certificates but
            kept for signature symmetry with the construction).
        step: The step the factors were built for.
        canonical: The construction to verify.
        policy: Truncation policy.
        rel_tol: Tolerance for the gradient identity.

    Returns:
        A :class:`CanonicalReport`.
    """
    policy = policy or TruncationPolicy()
    scaling = canonical.scaling
    nu = canonical.constants.nu

    grad = psi_norm_sq_grad(spec, scaling, step)
    worst = 0.0
    for j in range(spec.depth):
        for got, want in ((grad.dw[j], nu * step.dw[j]),
                          (grad.db[j], nu * step.db[j])):
            denom = np.maximum(np.abs(want), 1e-300)
            if got.size:
                worst = max(worst, float(np.max(np.abs(got - want) / denom)))
    identity_ok = worst <= rel_tol

    psi_total = psi_norm_sq(spec, scaling, step)
    derived_ok = psi_total <= canonical.psi_cap_derived * (1.0 + 1e-9)
    claimed_ok = psi_total <= canonical.psi_cap_claimed * (1.0 + 1e-9)

    ok = identity_ok and derived_ok
    return CanonicalReport(
        identity_max_rel=worst, identity_ok=identity_ok, psi_total=psi_total,
        psi_cap_derived=canonical.psi_cap_derived,
        psi_cap_claimed=canonical.psi_cap_claimed, derived_ok=derived_ok,
        claimed_ok=claimed_ok, ok=ok)


# ---------------------------------------------------------------------------
# Joint convergence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceProfile:
    """Margin profiles for the joint step/scale conditions.

    Attributes:
        eps_phi: Per-layer input-side margins in ``(0, 1)``.
        eps_psi: Per-layer step-side margins in ``(0, 1)``; in verification
            mode only the output layer's value is used (lower layers follow
            the backward recursion).
        eps_tilde: Scale-split parameter in ``(0, 1)`` (verification mode).
        delta: Box-correction parameter (construction mode).
    """

    eps_phi: tuple[float, ...]
    eps_psi: tuple[float, ...]
    eps_tilde: float = 0.5
    delta: float = 1e-3

    def validate(self, depth: int) -> None:
        if len(self.eps_phi) != depth or len(self.eps_psi) != depth:
            raise ValueError("profiles must have one margin per layer")
        for v in (*self.eps_phi, *self.eps_psi, self.eps_tilde, self.delta):
            if not (0.0 < v < 1.0):
                raise ValueError("all margins must lie strictly in (0, 1)")


@dataclass(frozen=True)
class JointReport:
    """Outcome of a joint step/scale convergence check.

    Attributes:
        mode: ``"construct"`` (factors built here) or ``"verify"`` (supplied
            factors checked).
        records: All condition records.
        ok: True when every condition holds.
        binding: The record with the least margin.
        scaling: The constructed factors (construction mode) or the supplied
            ones (verification mode).
        eps_psi_used: The per-layer step-side margins actually used.
    """

    mode: str
    records: list[ConditionRecord]
    ok: bool
    binding: ConditionRecord | None
    scaling: ScalingConfig | None
    eps_psi_used: tuple[float, ...]


def _joint_construct(spec: NetworkSpec, weights: Weights, step: WeightStep,
                     profile: ConvergenceProfile,
                     policy: TruncationPolicy) -> JointReport:
    """Construction mode: prescribed factors from per-neuron intervals."""
    rho = spec.act.roc
    root_rho = math.sqrt(rho)
    s_sq = s_squared(spec)
    delta = profile.delta
    t_plain = step_magnitudes(spec, step, "plain")
    records: list[ConditionRecord] = []
    mu: list[np.ndarray] = []
    omega: list[np.ndarray | None] = [None]
    omega_tilde: list[np.ndarray | None] = [None]
    n_prev: np.ndarray | None = None
    aborted = False

    for j in range(spec.depth):
        e_phi = profile.eps_phi[j]
        e_psi = profile.eps_psi[j]
        h = spec.widths[j]
        if j == 0:
            lhs = t_plain.t_sq[0]
            upper = np.full(h, (1.0 - e_phi) * root_rho / s_sq[0])
        else:
            col_sq = np.sum(step.dw[j] ** 2, axis=0)
            if np.any(col_sq == 0.0):
                raise FeasibilityError(
                    f"step weight column at layer {j} is zero; the "
                    f"prescribed scale split is undefined",
                    kind="zero_step_column", layer=j)
            ot_sq = col_sq[None, :] / (1.0 - delta) - step.dw[j] ** 2
            omega_tilde.append(np.sqrt(ot_sq))
            omega.append(np.sqrt(n_prev))
            lhs = t_plain.t_sq[j] + spec.fan_in(j) * col_sq / (1.0 - delta)
            lhs_nominal = t_plain.t_sq[j] + col_sq / (1.0 - delta)
            gap = col_sq / (1.0 - delta) - np.max(step.dw[j] ** 2, axis=0)
            w_col_sq = np.sum(weights.w[j] ** 2, axis=0)
            psi_ratio = (1.0 - profile.eps_psi[j - 1]) / profile.eps_psi[j - 1]
            phi_ratio = sigma_bar(spec.activation,
                                  (1.0 - profile.eps_phi[j - 1]) * root_rho,
                                  policy)
            denom = s_sq[j] / ((1.0 - e_phi) * root_rho) \
                + (w_col_sq / gap + spec.fan_in(j)) * psi_ratio * phi_ratio \
                / (spec.widths[j] * (1.0 - e_phi) * root_rho)
            upper = 1.0 / denom
            for i in range(h):
                records.append(ConditionRecord(
                    kind="step_condition", layer=j, index=i,
                    value=float(lhs_nominal[i]),
                    bound=float((1.0 - e_psi) * upper[i]),
                    margin=float((1.0 - e_psi) * upper[i] - lhs_nominal[i]),
                    ok=lhs_nominal[i] <= (1.0 - e_psi) * upper[i],
                    note="nominal display"))
        lower = lhs / (1.0 - e_psi)
        mu_sq = np.where(lower > 0.0, np.sqrt(lower * upper), upper)
        for i in range(h):
            records.append(ConditionRecord(
                kind="mu_interval", layer=j, index=i, value=float(mu_sq[i]),
                bound=(float(lower[i]), float(upper[i])),
                margin=float(upper[i] - lower[i]), ok=lower[i] <= upper[i]))
        if np.any(lower > upper):
            aborted = True
            break
        mu.append(np.sqrt(mu_sq))
        arg = lhs / mu_sq
        n_prev = arg / (1.0 - arg)

    ok = (not aborted) and all(r.ok for r in records)
    scaling = None
    if not aborted:
        scaling = ScalingConfig(mu=mu, omega=omega, omega_tilde=omega_tilde)
        scaling.validate(spec)
        psi_check = check_psi_cap(spec, scaling, step,
                                  np.asarray(profile.eps_psi))
        phi_check = check_phi_cap(spec, weights, scaling,
                                  np.asarray(profile.eps_phi), policy)
        records.extend(psi_check.records)
        records.extend(phi_check.records)
        ok = ok and psi_check.ok and phi_check.ok
    return JointReport(mode="construct", records=records, ok=ok,
                       binding=_binding(records), scaling=scaling,
                       eps_psi_used=tuple(profile.eps_psi))


def _joint_verify(spec: NetworkSpec, weights: Weights, step: WeightStep,
                  profile: ConvergenceProfile, scaling: ScalingConfig,
                  policy: TruncationPolicy) -> JointReport:
    """Verification mode: check supplied factors against the general
    conditions, with lower-layer step-side margins from the backward
    recursion."""
    scaling.validate(spec)
    rho = spec.act.roc
    root_rho = math.sqrt(rho)
    s_sq = s_squared(spec)
    e_tilde = profile.eps_tilde
    t_plain = step_magnitudes(spec, step, "plain")
    norms = psi_norm_profile(spec, scaling, step)
    records: list[ConditionRecord] = []

    # Backward recursion for the step-side margins below the output layer.
    eps_psi = np.empty(spec.depth)
    eps_psi[-1] = profile.eps_psi[-1]
    for j in range(spec.depth - 2, -1, -1):
        phi_ratio = sigma_bar(spec.activation,
                              (1.0 - profile.eps_phi[j]) * root_rho, policy)
        w_next = weights.w[j + 1]
        w2inf = float(np.max(np.sum(w_next ** 2, axis=0)))
        a_j = (spec.widths[j] / spec.widths[j + 1]) * phi_ratio * w2inf \
            / ((1.0 - profile.eps_phi[j + 1]) * root_rho)
        ot = scaling.omega_tilde[j + 1]
        col_ratios = np.min(ot ** 2, axis=0) / np.max(ot ** 2, axis=0)
        r = float(np.min(col_ratios))
        tail = (1.0 - e_tilde) * (1.0 - eps_psi[j + 1]) * r
        eps_psi[j] = tail / (a_j + tail)

    for j in range(spec.depth):
        h = spec.widths[j]
        e_phi = profile.eps_phi[j]
        e_psi = eps_psi[j]
        mu_sq = scaling.mu[j] ** 2
        if j == 0:
            lhs = t_plain.t_sq[0]
            upper = np.full(h, (1.0 - e_phi) * root_rho / s_sq[0])
        else:
            om_sq = scaling.omega[j] ** 2
            ot = scaling.omega_tilde[j]
            psi_prev_ratio = (1.0 - eps_psi[j - 1]) / eps_psi[j - 1]
            for p in range(spec.fan_in(j)):
                val = float(om_sq[p])
                lo = float(norms[j - 1][p])
                hi = float(psi_prev_ratio)
                records.append(ConditionRecord(
                    kind="omega_interval", layer=j, index=p, value=val,
                    bound=(lo, hi), margin=float(min(val - lo, hi - val)),
                    ok=lo <= val <= hi))
            w2inf = float(np.max(np.sum(weights.w[j] ** 2, axis=0)))
            ot_cap = e_tilde * (1.0 - e_psi) / (spec.fan_in(j) * (
                s_sq[j] / ((1.0 - e_phi) * root_rho)
                + (1.0 - e_tilde) * (1.0 - e_psi) / w2inf))
            for i in range(h):
                val = float(np.max(ot[:, i] ** 2))
                records.append(ConditionRecord(
                    kind="omega_tilde_cap", layer=j, index=i, value=val,
                    bound=float(ot_cap), margin=float(ot_cap - val),
                    ok=val <= ot_cap))
            w = norms[j - 1] / om_sq
            lhs = t_plain.t_sq[j] + np.sum(
                (ot ** 2 + step.dw[j] ** 2) * w[:, None], axis=0)
            w_col_sq = np.sum(weights.w[j] ** 2, axis=0)
            ot_min = np.min(ot ** 2, axis=0)
            denom = s_sq[j] / ((1.0 - e_phi) * root_rho) \
                + (w_col_sq / (spec.fan_in(j) * ot_min) + 1.0) \
                * (1.0 - e_tilde) * (1.0 - e_psi) / w2inf
            upper = 1.0 / denom
        for i in range(h):
            records.append(ConditionRecord(
                kind="step_condition", layer=j, index=i, value=float(lhs[i]),
                bound=float((1.0 - e_psi) * upper[i]),
                margin=float((1.0 - e_psi) * upper[i] - lhs[i]),
                ok=lhs[i] <= (1.0 - e_psi) * upper[i]))
            lo = float(lhs[i] / (1.0 - e_psi))
            hi = float(upper[i])
            val = float(mu_sq[i])
            records.append(ConditionRecord(
                kind="mu_interval", layer=j, index=i, value=val,
                bound=(lo, hi), margin=float(min(val - lo, hi - val)),
                ok=lo <= val <= hi))

    ok = all(r.ok for r in records)
    return JointReport(mode="verify", records=records, ok=ok,
                       binding=_binding(records), scaling=scaling,
                       eps_psi_used=tuple(float(v) for v in eps_psi))


def joint_convergence(spec: NetworkSpec, weights: Weights, step: WeightStep,
                      profile: ConvergenceProfile,
                      scaling: ScalingConfig | None = None,
                      policy: TruncationPolicy | None = None) -> JointReport:
    """Check — or construct — scale factors for joint norm convergence.

    Without ``scaling``, prescribed factors are built from per-neuron
    ``mu``-intervals (geometric-mean pick), with ``omega`` matched to the
    induced step-side norms and ``omega_tilde`` splitting each weight
    column's mass; the step conditions certifying both feature families'
    caps are recorded along the way.  Note the per-neuron conditions keep
    the full fan-in sum — the simplified single-column display is recorded
    separately as ``"nominal display"`` and the two coincide for fan-in one.

    With ``scaling`` supplied, the general conditions are verified instead:
    ``omega`` must bracket the actual step-side norms, ``omega_tilde``
    columns must respect the scale-split cap, steps must meet the per-neuron
    conditions, and each ``mu`` must lie in its interval; the lower layers'
    step-side margins follow a backward recursion from the output layer's.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        step: Parameter step.
        profile: Margin profiles.
        scaling: Factors to verify (omit to construct).
        policy: Truncation policy for envelope evaluations.

    Returns:
        A :class:`JointReport` with all condition records.
    """
    policy = policy or TruncationPolicy()
    profile.validate(spec.depth)
    if scaling is None:
        return _joint_construct(spec, weights, step, profile, policy)
    return _joint_verify(spec, weights, step, profile, scaling, policy)


# ---------------------------------------------------------------------------
# Bias-coupling solver
# ---------------------------------------------------------------------------

def coupled_synthetic_step(spec: NetworkSpec, rng: np.random.Generator,
                           scale: float, *, chi: float,
                           delta: float = 1e-3) -> WeightStep:
    """Draw a random weight step inside the canonical feasibility regime.

    Raw gradient steps are generically infeasible for the canonical scale
    construction: upper layers carry more step mass than the per-neuron
    magnitudes of the layers below them, and per-neuron magnitudes within a
    layer can be badly unbalanced.  This helper draws balanced entries
    (magnitudes uniform in ``[0.5, 1.5] * scale`` with random signs, bias
    entries at half that scale) and then rescales each layer ``j + 1``
    bottom-up so adjacent layers satisfy the coupling ratio
    ``||dW^[j+1]||_F^2 = (1 - delta) chi max_i t^[j]_i^2``, which is the
    regime the construction is designed for.

    Args:
        spec: Network architecture.
        rng: Source of randomness.
        scale: Entry magnitude scale for the bottom layer.
        chi: Adjacent-layer coupling ratio in ``(0, 1)``.
        delta: Box-correction parameter.

    Returns:
        A :class:`~rkbsnet.network.WeightStep` satisfying the coupling
        ratio exactly at every adjacent layer pair.
    """
    if not (0.0 < chi < 1.0):
        raise ValueError("chi must lie in (0, 1)")
    dw = []
    db = []
    for j in range(spec.depth):
        shape = (spec.fan_in(j), spec.widths[j])
        dw.append(scale * rng.uniform(0.5, 1.5, size=shape)
                  * rng.choice([-1.0, 1.0], size=shape))
        db.append(0.5 * scale * rng.uniform(0.5, 1.5, size=spec.widths[j])
                  * rng.choice([-1.0, 1.0], size=spec.widths[j]))
    step = WeightStep(dw=dw, db=db)
    for j in range(spec.depth - 1):
        t_box = step_magnitudes(spec, step, "boxast", delta)
        target = (1.0 - delta) * chi * t_box.layer_max(j)
        factor = math.sqrt(target / float(np.sum(step.dw[j + 1] ** 2)))
        dw[j + 1] = dw[j + 1] * factor
        db[j + 1] = db[j + 1] * factor
        step = WeightStep(dw=dw, db=db)
    return step


@dataclass(frozen=True)
class AlphaSolveResult:
    """Outcome of the bias-coupling solve.

    Attributes:
        spec: Architecture with the adjusted bias couplings.
        trace: The gradient step at the final couplings.
        residuals: Final residuals of the coupling condition per layer pair.
        iterations: Fixed-point iterations used.
    """

    spec: NetworkSpec
    trace: BackpropTrace
    residuals: np.ndarray
    iterations: int


def solve_alpha_for_chi(spec: NetworkSpec, weights: Weights, xs: np.ndarray,
                        ys: np.ndarray, eta: float, chi: float, *,
                        delta: float = 1e-3, loss: LossSpec | None = None,
                        max_iter: int = 300, tol: float = 1e-10
                        ) -> AlphaSolveResult:
    """Adjust bias couplings until adjacent step layers satisfy the ratio
    ``||dW^[j+1]||_F^2 = (1 - delta) chi max_i t^[j]_i^2``.

    Each bias coupling ``alpha^[j]`` scales its layer's bias step linearly,
    so for a frozen reverse pass the j-th condition is a piecewise-linear
    equation in ``alpha^[j]^2``, solved by bisection; because changing the
    couplings also moves the forward pass, the solve iterates to a fixed
    point.

    Args:
        spec: Starting architecture.
        weights: Network parameters (fixed).
        xs: Inputs of shape ``(N, n)``.
        ys: Targets of shape ``(N, H^[D-1])``.
        eta: Learning rate.
        chi: Target coupling ratio in ``(0, 1)``.
        delta: Box-correction parameter.
        loss: Per-sample loss (defaults to squared error).
        max_iter: Fixed-point iteration ceiling.
        tol: Relative residual tolerance.

    Returns:
        An :class:`AlphaSolveResult` with the adjusted architecture.

    Raises:
        FeasibilityError: If a layer's weight-only step magnitude already
            overshoots its target (no coupling can fix it), a bias step
            vanishes identically (couplings have no effect), or the fixed
            point does not converge.
    """
    if not (0.0 < chi < 1.0):
        raise ValueError("chi must lie in (0, 1)")
    depth = spec.depth
    cur = spec
    for it in range(1, max_iter + 1):
        trace = backprop_step(cur, weights, xs, ys, eta, loss)
        t_box = step_magnitudes(cur, trace.step, "boxast", delta)
        resid = np.array([
            float(np.sum(trace.step.dw[j + 1] ** 2))
            - (1.0 - delta) * chi * t_box.layer_max(j)
            for j in range(depth - 1)])
        scale = np.array([
            max(1e-300, (1.0 - delta) * chi * t_box.layer_max(j))
            for j in range(depth - 1)])
        if depth == 1 or np.all(np.abs(resid) <= tol * scale):
            return AlphaSolveResult(spec=cur, trace=trace, residuals=resid,
                                    iterations=it)
        alphas = list(cur.alphas)
        for j in range(depth - 1):
            target = float(np.sum(trace.step.dw[j + 1] ** 2)) \
                / ((1.0 - delta) * chi)
            # Bias step per unit coupling, from the reverse-pass adjoints.
            root_c = math.sqrt(np.prod(cur.widths[j + 1:], dtype=float))
            unit = -eta / root_c * np.sum(trace.gammas[j], axis=0)
            c_w = 2.0 if j == 0 else (2.0 - delta) / (1.0 - delta)
            col_sq = np.sum(trace.step.dw[j] ** 2, axis=0)

            def t_max(a_sq: float) -> float:
                return float(np.max(2.0 * a_sq * unit ** 2 + c_w * col_sq))

            if t_max(0.0) > target:
                raise FeasibilityError(
                    f"layer {j} weight step alone exceeds the coupling "
                    f"target; no bias coupling can satisfy the ratio",
                    kind="coupling_overshoot", layer=j,
                    details={"target": target, "floor": t_max(0.0)})
            if np.all(unit == 0.0):
                if it == 1:
                    raise FeasibilityError(
                        f"layer {j} bias step vanishes for all couplings; "
                        f"the coupling condition cannot be met",
                        kind="alpha_insensitive", layer=j)
                raise FeasibilityError(
                    f"layer {j} coupling solve diverged: growing couplings "
                    f"saturated the activations and the bias gradient "
                    f"collapsed to zero",
                    kind="alpha_unbounded", layer=j,
                    details={"iteration": it, "alpha": cur.alphas[j]})
            hi = 1.0
            while t_max(hi) < target:
                hi *= 2.0
                if hi > 1e30:
                    raise FeasibilityError(
                        f"layer {j} coupling solve diverged",
                        kind="alpha_unbounded", layer=j)
            a_sq = bisect_root(lambda a: t_max(a) - target, 0.0, hi,
                               xtol=1e-15 * max(1.0, hi))
            if a_sq > 1e8:
                raise FeasibilityError(
                    f"layer {j} coupling solve diverged: the required "
                    f"coupling ({math.sqrt(a_sq):.3e}) saturates the "
                    f"forward pass; try a larger chi",
                    kind="alpha_unbounded", layer=j,
                    details={"iteration": it, "alpha_sq": a_sq})
            alphas[j] = math.sqrt(a_sq)
        cur = replace(cur, alphas=tuple(alphas))
    raise FeasibilityError(
        f"bias-coupling fixed point did not converge in {max_iter} "
        f"iterations", kind="alpha_iteration",
        details={"residuals": [float(r) for r in resid]})

"""Explicit feature maps whose pairing reproduces network output changes.

Each hidden neuron carries two feature objects:

* an input-side feature ``Phi`` built from the base network's forward pass at
  an input ``x``, and
* a step-side feature ``Psi`` built from a parameter update.

Both are tensor-series objects ``rho(a, d) = [a_1 d; a_2 d (x) d; ...]`` over
a structured direction vector ``d``; for ``Phi`` the series weights are the
activation's derivative coefficients at the base pre-activation, for ``Psi``
they are all ones.  Directions concatenate a small scalar block with scaled
copies of the previous layer's features (two orthogonal copies per feeding
neuron), so the inner product of two such objects reduces to a scalar series
in the inner product of the directions — see :func:`feature_inner`.

Paired at the same output neuron, ``<Phi_i, Psi_i>`` telescopes layer by
layer into the exact output change of the network under the step, up to
series truncation.  The positive scale factors ``mu``, ``omega``,
``omega_tilde`` attached to the layers cancel in that pairing but reshape the
geometry (norms and kernels) of each factor.

Features truncate at exactly ``policy.order`` terms; the adaptive extension
used for closed-form series does not apply here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError
from .network import Forward, NetworkSpec, WeightStep, Weights, forward
from .series import TruncationPolicy, act_deriv_coeffs

__all__ = [
    "ScalingConfig",
    "TruncatedFeature",
    "phi_features",
    "psi_features",
    "feature_inner",
    "bilinear_delta",
    "flatten_feature",
    "flat_dims",
    "validity_margin",
]


# ---------------------------------------------------------------------------
# Scale factors
# ---------------------------------------------------------------------------

@dataclass
class ScalingConfig:
    """Positive per-layer scale factors shaping the feature geometry.

    Attributes:
        mu: ``mu[j]`` has shape ``(H^[j],)``; scales the whole direction of
            layer ``j`` features (``Phi`` by ``mu``, ``Psi`` by ``1/mu``).
        omega: ``omega[j]`` has shape ``(H^[j-1],)`` for ``j >= 1`` and is
            ``None`` for ``j = 0``; weights the previous layer's feature
            copies inside layer-``j`` directions.
        omega_tilde: ``omega_tilde[j]`` has shape ``(H^[j-1], H^[j])`` for
            ``j >= 1`` and is ``None`` for ``j = 0``; splits scale between
            the propagation and step copies per connection.
    """

    mu: list[np.ndarray]
    omega: list[np.ndarray | None]
    omega_tilde: list[np.ndarray | None]

    @staticmethod
    def ones(spec: NetworkSpec) -> "ScalingConfig":
        """The all-ones (neutral) scaling for an architecture."""
        mu = [np.ones(h) for h in spec.widths]
        omega: list[np.ndarray | None] = [None]
        omega_tilde: list[np.ndarray | None] = [None]
        for j in range(1, spec.depth):
            omega.append(np.ones(spec.widths[j - 1]))
            omega_tilde.append(np.ones((spec.widths[j - 1], spec.widths[j])))
        return ScalingConfig(mu=mu, omega=omega, omega_tilde=omega_tilde)

    def validate(self, spec: NetworkSpec) -> None:
        """Check shapes and strict positivity against an architecture."""
        if len(self.mu) != spec.depth:
            raise ValueError("mu must have one block per layer")
        if len(self.omega) != spec.depth or len(self.omega_tilde) != spec.depth:
            raise ValueError("omega and omega_tilde must have one slot per layer")
        for j in range(spec.depth):
            if self.mu[j].shape != (spec.widths[j],):
                raise ValueError(f"mu[{j}] has shape {self.mu[j].shape}, "
                                 f"expected {(spec.widths[j],)}")
            if not np.all(self.mu[j] > 0.0):
                raise ValueError(f"mu[{j}] must be strictly positive")
            if j == 0:
                continue
            om, ot = self.omega[j], self.omega_tilde[j]
            if om is None or ot is None:
                raise ValueError(f"omega[{j}] and omega_tilde[{j}] are required")
            if om.shape != (spec.widths[j - 1],):
                raise ValueError(f"omega[{j}] has shape {om.shape}, expected "
                                 f"{(spec.widths[j - 1],)}")
            if ot.shape != (spec.widths[j - 1], spec.widths[j]):
                raise ValueError(
                    f"omega_tilde[{j}] has shape {ot.shape}, expected "
                    f"{(spec.widths[j - 1], spec.widths[j])}")
            if not (np.all(om > 0.0) and np.all(ot > 0.0)):
                raise ValueError(
                    f"omega[{j}] and omega_tilde[{j}] must be strictly positive")

    def copy(self) -> "ScalingConfig":
        """Deep copy of all factor blocks."""
        return ScalingConfig(
            mu=[m.copy() for m in self.mu],
            omega=[None if o is None else o.copy() for o in self.omega],
            omega_tilde=[None if o is None else o.copy()
                         for o in self.omega_tilde])


# ---------------------------------------------------------------------------
# Structural truncated features
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedFeature:
    """A truncated tensor-series feature ``rho(a, d)`` in structural form.

    The direction ``d`` is represented as a flat scalar block plus scaled
    references to child features; the full vector ``[a_1 d; a_2 d (x) d; ...]``
    is never materialised unless :func:`flatten_feature` is called.

    Attributes:
        weights: Series weights ``a_1..a_L`` (shape ``(order,)``).
        scalars: Scalar block of the direction.
        children: Ordered ``(coefficient, child)`` pairs; each occupies its
            own orthogonal subspace of the direction.
        order: Truncation order ``L``.
    """

    weights: np.ndarray
    scalars: np.ndarray
    children: tuple[tuple[float, "TruncatedFeature"], ...]
    order: int


def phi_features(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
                 x: np.ndarray, policy: TruncationPolicy | None = None,
                 run: Forward | None = None) -> list[list[TruncatedFeature]]:
    """Build the input-side features of every neuron, layer by layer.

    Layer 0, neuron ``i``: series weights ``g(z_i)`` (derivative coefficients
    at the base pre-activation), direction
    ``mu_i [alpha^[0]/sqrt(2); x/sqrt(2 H^[0])]``, no children.

    Layer ``j > 0``, neuron ``i``: series weights ``g(z_i)``, direction

        mu_i [ alpha^[j]/sqrt(2); x^[j]/sqrt(H^[j]);
               { omega_p W^[j]_{p,i} / (omega_tilde_{p,i} sqrt(H^[j])) Phi^[j-1]_p }_p;
               { omega_p / sqrt(H^[j]) Phi^[j-1]_p }_p ],

    where ``x^[j]`` is the base activation vector feeding the layer and the
    two child groups are orthogonal copies of the previous layer's features.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Positive scale factors.
        x: Input vector.
        policy: Truncation policy (``order`` is used literally).
        run: Optional precomputed forward pass at ``x``.

    Returns:
        ``feats[j][i]`` is the feature of layer ``j``, neuron ``i``.
    """
    policy = policy or TruncationPolicy()
    scaling.validate(spec)
    run = run or forward(spec, weights, x)
    order = policy.order
    feats: list[list[TruncatedFeature]] = []
    for j in range(spec.depth):
        h = spec.widths[j]
        root_h = math.sqrt(h)
        layer: list[TruncatedFeature] = []
        for i in range(h):
            gw = act_deriv_coeffs(spec.activation, run.preacts[j][i], order).coeffs
            mu_i = scaling.mu[j][i]
            if j == 0:
                scal = mu_i * np.concatenate((
                    [spec.alphas[0] / math.sqrt(2.0)],
                    run.inputs / math.sqrt(2.0 * h)))
                children: tuple[tuple[float, TruncatedFeature], ...] = ()
            else:
                x_in = run.activations[j - 1]
                scal = mu_i * np.concatenate((
                    [spec.alphas[j] / math.sqrt(2.0)], x_in / root_h))
                om = scaling.omega[j]
                ot = scaling.omega_tilde[j]
                c_prop = mu_i * om * weights.w[j][:, i] / (ot[:, i] * root_h)
                c_plain = mu_i * om / root_h
                prev = feats[j - 1]
                children = tuple((float(c_prop[p]), prev[p])
                                 for p in range(spec.widths[j - 1])) \
                    + tuple((float(c_plain[p]), prev[p])
                            for p in range(spec.widths[j - 1]))
            layer.append(TruncatedFeature(weights=gw, scalars=scal,
                                          children=children, order=order))
        feats.append(layer)
    return feats


def psi_features(spec: NetworkSpec, scaling: ScalingConfig, step: WeightStep,
                 policy: TruncationPolicy | None = None
                 ) -> list[list[TruncatedFeature]]:
    """Build the step-side features of every neuron, layer by layer.

    Layer 0, neuron ``i``: series weights all ones, direction
    ``(1/mu_i) [sqrt(2) db_i; sqrt(2) dW_{:,i}]``, no children.

    Layer ``j > 0``, neuron ``i``: series weights all ones, direction

        (1/mu_i) [ sqrt(2) db_i; dW_{:,i};
                   { omega_tilde_{p,i} / omega_p Psi^[j-1]_p }_p;
                   { dW_{p,i} / omega_p Psi^[j-1]_p }_p ],

    with child groups aligned to the two groups of :func:`phi_features` —
    the step-side feature depends only on the step and the scale factors,
    not on any input.

    Args:
        spec: Network architecture.
        scaling: Positive scale factors.
        step: Parameter update.
        policy: Truncation policy (``order`` is used literally).

    Returns:
        ``feats[j][i]`` is the feature of layer ``j``, neuron ``i``.
    """
    policy = policy or TruncationPolicy()
    scaling.validate(spec)
    order = policy.order
    ones = np.ones(order)
    feats: list[list[TruncatedFeature]] = []
    for j in range(spec.depth):
        h = spec.widths[j]
        layer: list[TruncatedFeature] = []
        for i in range(h):
            inv_mu = 1.0 / scaling.mu[j][i]
            if j == 0:
                scal = inv_mu * np.concatenate((
                    [math.sqrt(2.0) * step.db[0][i]],
                    math.sqrt(2.0) * step.dw[0][:, i]))
                children: tuple[tuple[float, TruncatedFeature], ...] = ()
            else:
                scal = inv_mu * np.concatenate((
                    [math.sqrt(2.0) * step.db[j][i]], step.dw[j][:, i]))
                om = scaling.omega[j]
                ot = scaling.omega_tilde[j]
                c_prop = inv_mu * ot[:, i] / om
                c_step = inv_mu * step.dw[j][:, i] / om
                prev = feats[j - 1]
                children = tuple((float(c_prop[p]), prev[p])
                                 for p in range(spec.widths[j - 1])) \
                    + tuple((float(c_step[p]), prev[p])
                            for p in range(spec.widths[j - 1]))
            layer.append(TruncatedFeature(weights=ones, scalars=scal,
                                          children=children, order=order))
        feats.append(layer)
    return feats


# ---------------------------------------------------------------------------
# Pairing
# ---------------------------------------------------------------------------

def _pair(f: TruncatedFeature, g: TruncatedFeature, memo: dict) -> float:
    key = (id(f), id(g))
    hit = memo.get(key)
    if hit is not None:
        return hit
    if f.order != g.order:
        raise ValueError("features must share the truncation order")
    if f.scalars.shape != g.scalars.shape or len(f.children) != len(g.children):
        raise ValueError("features must share the same direction structure")
    u = float(f.scalars @ g.scalars)
    for (cf, fc), (cg, gc) in zip(f.children, g.children):
        u += cf * cg * _pair(fc, gc, memo)
    powers = u ** np.arange(1, f.order + 1)
    val = float(np.sum(f.weights * g.weights * powers))
    memo[key] = val
    return val


def feature_inner(f: TruncatedFeature, g: TruncatedFeature) -> float:
    """Inner product of two structurally aligned truncated features.

    Directions pair block-by-block (scalar block, then matched child copies),
    and the series weights contract against powers of that direction inner
    product: ``<rho(a, d), rho(a', d')> = sum_l a_l a'_l <d, d'>^l``.

    Args:
        f: First feature.
        g: Second feature (same architecture position and order).

    Returns:
        The truncated inner product.
    """
    return _pair(f, g, {})


def bilinear_delta(spec: NetworkSpec, weights: Weights, scaling: ScalingConfig,
                   step: WeightStep, x: np.ndarray,
                   policy: TruncationPolicy | None = None) -> np.ndarray:
    """Output change predicted by the feature pairing, per output neuron.

    Computes ``<Phi^[D-1]_i, Psi^[D-1]_i>`` for each output neuron ``i``; up
    to series truncation this telescopes into the exact output change of the
    network under the step, for any choice of positive scale factors.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        scaling: Positive scale factors (cancel in this pairing).
        step: Parameter update.
        x: Input vector.
        policy: Truncation policy.

    Returns:
        Vector of shape ``(H^[D-1],)``.
    """
    policy = policy or TruncationPolicy()
    phis = phi_features(spec, weights, scaling, x, policy)
    psis = psi_features(spec, scaling, step, policy)
    memo: dict = {}
    return np.array([_pair(phis[-1][i], psis[-1][i], memo)
                     for i in range(spec.output_dim)])


# ---------------------------------------------------------------------------
# Flattening (oracle route)
# ---------------------------------------------------------------------------

def flat_dims(feat: TruncatedFeature) -> tuple[int, int]:
    """Lengths of the materialised direction and feature vectors.

    Returns:
        ``(direction_len, feature_len)`` where ``feature_len`` is
        ``sum_{l=1}^{L} direction_len ** l``.
    """
    d_len = feat.scalars.size
    for _, child in feat.children:
        d_len += flat_dims(child)[1]
    f_len = sum(d_len ** l for l in range(1, feat.order + 1))
    return d_len, f_len


def _flatten_direction(feat: TruncatedFeature, budget: int) -> np.ndarray:
    parts = [feat.scalars]
    for c, child in feat.children:
        parts.append(c * _flatten_body(child, budget))
    return np.concatenate(parts)


def _flatten_body(feat: TruncatedFeature, budget: int) -> np.ndarray:
    d = _flatten_direction(feat, budget)
    blocks = []
    cur = np.array([1.0])
    for l in range(1, feat.order + 1):
        cur = np.kron(cur, d)
        blocks.append(feat.weights[l - 1] * cur)
    return np.concatenate(blocks)


def flatten_feature(feat: TruncatedFeature, budget: int | None = None
                    ) -> np.ndarray:
    """Materialise a feature as an explicit coefficient vector.

    The flat layout is ``[a_1 d; a_2 d (x) d; ...; a_L d^(x L)]`` with the
    direction ``d`` itself flattened recursively (children contribute their
    own flat feature vectors, scaled).  Dot products of aligned flat vectors
    equal :func:`feature_inner`; this route is exponential in the direction
    size and exists as a cross-check at small orders.

    Args:
        feat: Feature to materialise.
        budget: Maximum allowed coefficient count (defaults to the
            :class:`~rkbsnet.series.TruncationPolicy` default budget).

    Returns:
        The flat coefficient vector.

    Raises:
        BudgetError: If the materialised vector would exceed the budget.
    """
    budget = TruncationPolicy().feature_budget if budget is None else int(budget)
    _, f_len = flat_dims(feat)
    if f_len > budget:
        raise BudgetError(
            f"flattened feature needs {f_len} coefficients, budget is {budget}",
            required=f_len, budget=budget)
    return _flatten_body(feat, budget)


# ---------------------------------------------------------------------------
# Expansion validity
# ---------------------------------------------------------------------------

def validity_margin(spec: NetworkSpec, weights: Weights, step: WeightStep,
                    x: np.ndarray) -> float:
    """Largest pre-activation shift relative to the series radius.

    The feature expansions represent the network change faithfully while
    every layer's pre-activation shift stays inside the activation's radius
    of convergence; this returns ``max_j ||shift^[j]||_inf / roc`` (values
    below one mean the expansion is valid, with room to spare as the ratio
    shrinks).

    Args:
        spec: Network architecture.
        weights: Base parameters.
        step: Parameter update.
        x: Input vector.

    Returns:
        The worst layer's shift ratio.
    """
    base = forward(spec, weights, x)
    pert = forward(spec, Weights(
        [wj + dj for wj, dj in zip(weights.w, step.dw)],
        [bj + dj for bj, dj in zip(weights.b, step.db)]), x)
    worst = 0.0
    for p, q in zip(pert.preacts, base.preacts):
        worst = max(worst, float(np.max(np.abs(p - q))))
    return worst / spec.act.roc

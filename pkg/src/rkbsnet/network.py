"""Feedforward network core: architecture, forward pass, losses, training step.

The network computes ``f(x) = x^[D]`` through

    x^[0] = x,
    xtilde^[j] = (1 / sqrt(H^[j])) W^[j].T x^[j] + alpha^[j] b^[j],
    x^[j+1] = tau^[j](xtilde^[j]),

where ``W^[j]`` has shape ``(H^[j-1], H^[j])`` (with ``H^[-1] = n``), the
pre-activation normaliser uses the layer's *output* width ``H^[j]``, and the
final activation is applied (the output is ``tau`` of the last
pre-activation).  Inputs live in the box ``[-M, M]^n``.

A gradient step on the summed empirical risk is exposed as
:func:`backprop_step`; it also returns the scaled adjoint vectors

    gamma^[j] = delta^[j] * sqrt(prod_{q > j} H^[q])

per sample and layer, which the feature-map and scaling modules consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .series import TANH_ROC

__all__ = [
    "ActivationInfo",
    "ACTIVATIONS",
    "NetworkSpec",
    "Weights",
    "WeightStep",
    "Forward",
    "LossSpec",
    "BackpropTrace",
    "StepMagnitudes",
    "init_lecun",
    "sample_inputs",
    "forward",
    "apply_step",
    "network_delta",
    "preact_shifts",
    "loss_value",
    "loss_grad",
    "empirical_risk",
    "backprop_step",
    "cascade_width",
    "step_magnitudes",
    "s_squared",
]


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ActivationInfo:
    """Analytic activation family.

    Attributes:
        name: Family tag.
        fn: Vectorised activation ``tau``.
        deriv: Vectorised first derivative ``tau'``.
        roc: Radius of convergence of the power series about real centres.
        output_bound: Uniform bound ``M`` on ``|tau|`` over the reals.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    roc: float
    output_bound: float


ACTIVATIONS: dict[str, ActivationInfo] = {
    "tanh": ActivationInfo(
        name="tanh",
        fn=np.tanh,
        deriv=lambda z: 1.0 - np.tanh(z) ** 2,
        roc=TANH_ROC,
        output_bound=1.0,
    ),
}


# ---------------------------------------------------------------------------
# Architecture and parameter containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of a feedforward network.

    Attributes:
        input_dim: Input dimension ``n``.
        widths: Layer output widths ``(H^[0], ..., H^[D-1])``.
        alphas: Bias couplings ``alpha^[j]`` per layer (defaults to all ones).
        activation: Activation family tag applied at every layer.
        input_box: Half-width ``M`` of the input box ``[-M, M]^n``.
    """

    input_dim: int
    widths: tuple[int, ...]
    alphas: tuple[float, ...] = ()
    activation: str = "tanh"
    input_box: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(h) for h in self.widths))
        if not self.widths or any(h < 1 for h in self.widths):
            raise ValueError("widths must be a non-empty tuple of positive ints")
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        alphas = tuple(float(a) for a in self.alphas) or (1.0,) * len(self.widths)
        if len(alphas) != len(self.widths):
            raise ValueError("alphas must have one entry per layer")
        object.__setattr__(self, "alphas", alphas)
        if self.activation not in ACTIVATIONS:
            raise DomainError(
                f"unsupported activation family: {self.activation!r}",
                quantity="activation")
        if self.input_box <= 0.0:
            raise ValueError("input_box must be positive")

    @property
    def depth(self) -> int:
        """Number of layers ``D``."""
        return len(self.widths)

    @property
    def output_dim(self) -> int:
        """Output dimension ``H^[D-1]``."""
        return self.widths[-1]

    def fan_in(self, layer: int) -> int:
        """Input width of ``layer`` (``n`` for the first layer)."""
        return self.input_dim if layer == 0 else self.widths[layer - 1]

    @property
    def act(self) -> ActivationInfo:
        """The activation family of every layer."""
        return ACTIVATIONS[self.activation]


def _check_shapes(spec: NetworkSpec, ws: Sequence[np.ndarray],
                  bs: Sequence[np.ndarray], what: str) -> None:
    if len(ws) != spec.depth or len(bs) != spec.depth:
        raise ValueError(f"{what} must have one weight and bias block per layer")
    for j in range(spec.depth):
        want = (spec.fan_in(j), spec.widths[j])
        if ws[j].shape != want:
            raise ValueError(
                f"{what} weight block {j} has shape {ws[j].shape}, expected {want}")
        if bs[j].shape != (spec.widths[j],):
            raise ValueError(
                f"{what} bias block {j} has shape {bs[j].shape}, "
                f"expected {(spec.widths[j],)}")


@dataclass
class Weights:
    """Network parameters.

    Attributes:
        w: Weight matrices; ``w[j]`` has shape ``(fan_in_j, H^[j])``.
        b: Bias vectors; ``b[j]`` has shape ``(H^[j],)``.
    """

    w: list[np.ndarray]
    b: list[np.ndarray]

    def copy(self) -> "Weights":
        """Deep copy of all parameter blocks."""
        return Weights([wj.copy() for wj in self.w], [bj.copy() for bj in self.b])


@dataclass
class WeightStep:
    """Additive parameter update (one block per layer, same shapes as
    :class:`Weights`).

    Attributes:
        dw: Weight increments per layer.
        db: Bias increments per layer.
    """

    dw: list[np.ndarray]
    db: list[np.ndarray]

    def copy(self) -> "WeightStep":
        """Deep copy of all increment blocks."""
        return WeightStep([d.copy() for d in self.dw], [d.copy() for d in self.db])

    def scaled(self, factor: float) -> "WeightStep":
        """Return the step multiplied entrywise by ``factor``."""
        return WeightStep([factor * d for d in self.dw],
                          [factor * d for d in self.db])


@dataclass(frozen=True)
class Forward:
    """Record of one forward pass.

    Attributes:
        inputs: The input vector ``x^[0] = x``.
        preacts: Pre-activations ``xtilde^[j]`` for ``j = 0..D-1``.
        activations: Post-activations ``x^[j+1] = tau(xtilde^[j])``.
    """

    inputs: np.ndarray
    preacts: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def output(self) -> np.ndarray:
        """Network output ``f(x) = x^[D]``."""
        return self.activations[-1]

    def layer_input(self, layer: int) -> np.ndarray:
        """The vector ``x^[layer]`` feeding the given layer."""
        return self.inputs if layer == 0 else self.activations[layer - 1]


# ---------------------------------------------------------------------------
# Initialisation, sampling, forward evaluation
# ---------------------------------------------------------------------------

def init_lecun(spec: NetworkSpec, rng: np.random.Generator | int) -> Weights:
    """Draw all weights and biases as iid standard normals.

    The ``1/sqrt(H)`` forward normalisation is carried at the use site, so
    the raw parameters are unit-variance Gaussians.

    Args:
        spec: Network architecture.
        rng: Generator or integer seed.

    Returns:
        Freshly initialised :class:`Weights`.
    """
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    w = [gen.standard_normal((spec.fan_in(j), spec.widths[j]))
         for j in range(spec.depth)]
    b = [gen.standard_normal(spec.widths[j]) for j in range(spec.depth)]
    return Weights(w, b)


def sample_inputs(spec: NetworkSpec, count: int,
                  rng: np.random.Generator | int) -> np.ndarray:
    """Sample ``count`` inputs uniformly from the box ``[-M, M]^n``."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    m = spec.input_box
    return gen.uniform(-m, m, size=(count, spec.input_dim))


def forward(spec: NetworkSpec, weights: Weights, x: np.ndarray) -> Forward:
    """Run one forward pass on a single input.

    Args:
        spec: Network architecture.
        weights: Network parameters.
        x: Input vector of shape ``(n,)``.

    Returns:
        A :class:`Forward` record with all intermediate vectors.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.input_dim,):
        raise ValueError(
            f"input has shape {x.shape}, expected {(spec.input_dim,)}")
    _check_shapes(spec, weights.w, weights.b, "weights")
    act = spec.act
    preacts: list[np.ndarray] = []
    activations: list[np.ndarray] = []
    cur = x
    for j in range(spec.depth):
        pre = (weights.w[j].T @ cur) / math.sqrt(spec.widths[j]) \
            + spec.alphas[j] * weights.b[j]
        cur = act.fn(pre)
        preacts.append(pre)
        activations.append(cur)
    return Forward(inputs=x, preacts=preacts, activations=activations)


def apply_step(weights: Weights, step: WeightStep) -> Weights:
    """Return new parameters ``weights + step`` (inputs are not mutated)."""
    return Weights([wj + dj for wj, dj in zip(weights.w, step.dw)],
                   [bj + dj for bj, dj in zip(weights.b, step.db)])


def network_delta(spec: NetworkSpec, weights: Weights, step: WeightStep,
                  x: np.ndarray) -> np.ndarray:
    """Exact output change of the network under a parameter step.

    Args:
        spec: Network architecture.
        weights: Base parameters.
        step: Parameter update.
        x: Input vector.

    Returns:
        ``f_{W+step}(x) - f_W(x)`` as a vector of shape ``(H^[D-1],)``.
    """
    base = forward(spec, weights, x)
    pert = forward(spec, apply_step(weights, step), x)
    return pert.output - base.output


def preact_shifts(spec: NetworkSpec, weights: Weights, step: WeightStep,
                  x: np.ndarray) -> list[np.ndarray]:
    """Per-layer pre-activation changes induced by a parameter step.

    The expansions used elsewhere are valid while every layer's shift stays
    within the activation's radius of convergence, i.e.
    ``max_i |shift^[j]_i| <= roc`` for all ``j``.

    Returns:
        List of arrays ``xtilde_pert^[j] - xtilde_base^[j]``.
    """
    base = forward(spec, weights, x)
    pert = forward(spec, apply_step(weights, step), x)
    return [p - q for p, q in zip(pert.preacts, base.preacts)]


# ---------------------------------------------------------------------------
# Losses and empirical risk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LossSpec:
    """Per-sample loss ``E(f, y)``.

    Attributes:
        kind: ``"squared_error"`` for ``E = 0.5 ||f - y||^2``, or
            ``"lipschitz_custom"`` for a user-supplied loss with a known
            Lipschitz constant in ``f``.
        lipschitz: Bound ``L_E`` on ``||dE/df||`` (required for custom losses;
            optional documentation for squared error).
        value_fn: Custom loss value ``(f, y) -> float``.
        grad_fn: Custom loss gradient ``(f, y) -> array`` in ``f``.
    """

    kind: str = "squared_error"
    lipschitz: float | None = None
    value_fn: Callable[[np.ndarray, np.ndarray], float] | None = field(
        default=None, compare=False)
    grad_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = field(
        default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("squared_error", "lipschitz_custom"):
            raise ValueError(f"unknown loss kind: {self.kind!r}")
        if self.kind == "lipschitz_custom":
            if self.value_fn is None or self.grad_fn is None:
                raise ValueError(
                    "lipschitz_custom losses need value_fn and grad_fn")
            if self.lipschitz is None or self.lipschitz <= 0.0:
                raise ValueError(
                    "lipschitz_custom losses need a positive lipschitz bound")


def loss_value(loss: LossSpec, f: np.ndarray, y: np.ndarray) -> float:
    """Evaluate the per-sample loss at prediction ``f`` and target ``y``."""
    if loss.kind == "squared_error":
        d = np.asarray(f, dtype=float) - np.asarray(y, dtype=float)
        return 0.5 * float(d @ d)
    return float(loss.value_fn(np.asarray(f, float), np.asarray(y, float)))


def loss_grad(loss: LossSpec, f: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the per-sample loss in the prediction ``f``."""
    if loss.kind == "squared_error":
        return np.asarray(f, dtype=float) - np.asarray(y, dtype=float)
    return np.asarray(loss.grad_fn(np.asarray(f, float), np.asarray(y, float)),
                      dtype=float)


def empirical_risk(spec: NetworkSpec, weights: Weights, xs: np.ndarray,
                   ys: np.ndarray, loss: LossSpec | None = None) -> float:
    """Summed (not averaged) loss over a dataset.

    Args:
        spec: Network architecture.
        weights: Network parameters.
        xs: Inputs of shape ``(N, n)``.
        ys: Targets of shape ``(N, H^[D-1])``.
        loss: Per-sample loss (defaults to squared error).

    Returns:
        ``sum_k E(f(x_k), y_k)``.
    """
    loss = loss or LossSpec()
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    return float(sum(loss_value(loss, forward(spec, weights, xk).output, yk)
                     for xk, yk in zip(xs, ys)))


# ---------------------------------------------------------------------------
# Gradient step
# ---------------------------------------------------------------------------

def cascade_width(spec: NetworkSpec, layer: int) -> int:
    """Product of widths above ``layer``: ``prod_{q = layer+1}^{D-1} H^[q]``."""
    out = 1
    for q in range(layer + 1, spec.depth):
        out *= spec.widths[q]
    return out


@dataclass(frozen=True)
class BackpropTrace:
    """Result of one gradient step on the summed empirical risk.

    Attributes:
        step: The parameter update ``(-eta grad)`` in additive form.
        gammas: Scaled adjoints; ``gammas[j]`` has shape ``(N, H^[j])`` and
            equals ``delta^[j] * sqrt(prod_{q>j} H^[q])`` per sample.
        eta: Learning rate used.
    """

    step: WeightStep
    gammas: list[np.ndarray]
    eta: float


def backprop_step(spec: NetworkSpec, weights: Weights, xs: np.ndarray,
                  ys: np.ndarray, eta: float,
                  loss: LossSpec | None = None) -> BackpropTrace:
    """One gradient-descent step on ``sum_k E(f(x_k), y_k)``.

    The reverse pass propagates the scaled adjoint

        gamma^[D-1] = (dE/df) * tau'(xtilde^[D-1]),
        gamma^[j-1]_i = (sum_p gamma^[j]_p W^[j]_{i,p}) tau'(xtilde^[j-1]_i),

    and accumulates the update

        dW^[j]_{i,p} = -eta / (sqrt(c_j) sqrt(H^[j])) sum_k gamma^{k[j]}_p x^{k[j]}_i,
        db^[j]      = -eta alpha^[j] / sqrt(c_j)      sum_k gamma^{k[j]},

    where ``c_j = prod_{q>j} H^[q]`` and ``x^{k[j]}`` is the vector feeding
    layer ``j`` for sample ``k``.

    Args:
        spec: Network architecture.
        weights: Current parameters.
        xs: Inputs of shape ``(N, n)``.
        ys: Targets of shape ``(N, H^[D-1])``.
        eta: Learning rate.
        loss: Per-sample loss (defaults to squared error).

    Returns:
        A :class:`BackpropTrace` holding the additive step and the scaled
        adjoints per sample and layer.
    """
    loss = loss or LossSpec()
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.shape[0] != ys.shape[0]:
        raise ValueError("xs and ys must have the same number of samples")
    n_samples = xs.shape[0]
    act = spec.act

    gammas = [np.zeros((n_samples, h)) for h in spec.widths]
    dw = [np.zeros_like(wj) for wj in weights.w]
    db = [np.zeros_like(bj) for bj in weights.b]

    for k in range(n_samples):
        run = forward(spec, weights, xs[k])
        grad_out = loss_grad(loss, run.output, ys[k])
        gamma = grad_out * act.deriv(run.preacts[-1])
        gammas[spec.depth - 1][k] = gamma
        for j in range(spec.depth - 1, -1, -1):
            dw[j] += np.outer(run.layer_input(j), gamma)
            db[j] += gamma
            if j > 0:
                gamma = (weights.w[j] @ gamma) * act.deriv(run.preacts[j - 1])
                gammas[j - 1][k] = gamma

    for j in range(spec.depth):
        root_c = math.sqrt(cascade_width(spec, j))
        dw[j] *= -eta / (root_c * math.sqrt(spec.widths[j]))
        db[j] *= -eta * spec.alphas[j] / root_c

    return BackpropTrace(step=WeightStep(dw, db), gammas=gammas, eta=float(eta))


# ---------------------------------------------------------------------------
# Step magnitudes and layer scale constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepMagnitudes:
    """Per-neuron squared step magnitudes ``t^[j]_i``.

    Attributes:
        variant: ``"plain"`` or ``"boxast"`` (the box-corrected variant that
            inflates deep-layer weight columns by ``(2 - delta)/(1 - delta)``).
        t_sq: Per-layer arrays of shape ``(H^[j],)`` holding ``t^[j]_i ** 2``.
        delta: Box-correction parameter used (``None`` for plain).
    """

    variant: str
    t_sq: list[np.ndarray]
    delta: float | None

    def layer_max(self, layer: int) -> float:
        """Largest squared magnitude ``max_i t^[layer]_i ** 2``."""
        return float(np.max(self.t_sq[layer]))


def step_magnitudes(spec: NetworkSpec, step: WeightStep,
                    variant: str = "plain",
                    delta: float | None = None) -> StepMagnitudes:
    """Per-output-neuron squared magnitudes of a parameter step.

    For the first layer both variants give
    ``t^[0]_i^2 = 2 db_i^2 + 2 ||dW_{:,i}||^2``.  For deeper layers the plain
    variant is ``2 db_i^2 + ||dW_{:,i}||^2`` while the box-corrected variant
    multiplies the weight-column term by ``(2 - delta) / (1 - delta)``.

    Args:
        spec: Network architecture.
        step: Parameter step.
        variant: ``"plain"`` or ``"boxast"``.
        delta: Required for ``"boxast"``; must lie in ``(0, 1)``.

    Returns:
        A :class:`StepMagnitudes` with one array per layer.
    """
    if variant not in ("plain", "boxast"):
        raise ValueError(f"unknown magnitude variant: {variant!r}")
    if variant == "boxast":
        if delta is None or not (0.0 < delta < 1.0):
            raise ValueError("boxast magnitudes need delta in (0, 1)")
    t_sq: list[np.ndarray] = []
    for j in range(spec.depth):
        col_sq = np.sum(step.dw[j] ** 2, axis=0)
        bias_sq = step.db[j] ** 2
        if j == 0:
            t_sq.append(2.0 * bias_sq + 2.0 * col_sq)
        elif variant == "plain":
            t_sq.append(2.0 * bias_sq + col_sq)
        else:
            t_sq.append(2.0 * bias_sq + (2.0 - delta) / (1.0 - delta) * col_sq)
    return StepMagnitudes(variant=variant, t_sq=t_sq,
                          delta=None if variant == "plain" else float(delta))


def s_squared(spec: NetworkSpec) -> np.ndarray:
    """Layer scale constants ``s^[j]^2`` controlling pre-activation ranges.

    The first layer sees box-bounded inputs:
    ``s^[0]^2 = alpha^[0]^2 / 2 + n M_in^2 / (2 H^[0])``.  Deeper layers see
    activation outputs bounded by ``M``:
    ``s^[j]^2 = alpha^[j]^2 / 2 + (H^[j-1] / H^[j]) M^2``.

    Returns:
        Array of shape ``(D,)`` with the squared constants.
    """
    act = spec.act
    out = np.empty(spec.depth)
    out[0] = 0.5 * spec.alphas[0] ** 2 \
        + spec.input_dim * spec.input_box ** 2 / (2.0 * spec.widths[0])
    for j in range(1, spec.depth):
        out[j] = 0.5 * spec.alphas[j] ** 2 \
            + spec.widths[j - 1] * act.output_bound ** 2 / spec.widths[j]
    return out

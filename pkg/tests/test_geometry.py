"""Tests for kernels, induced norms, and their analytic gradients.

Oracles: explicit truncated-feature inner products (the kernels' series
definitions summed directly), two forward passes for the response-change
kernel, and central finite differences for every gradient routine.
"""

from __future__ import annotations

import numpy as np
import pytest

from rkbsnet import (
    NetworkSpec,
    ScalingConfig,
    TruncationPolicy,
    WeightStep,
    banach_kernel,
    feature_inner,
    init_lecun,
    kernel_grads,
    kernel_ww,
    kernel_xx,
    network_delta,
    phi_features,
    phi_norm_profile,
    phi_norm_sq,
    phi_norm_sq_grad_x,
    preact_shifts,
    psi_features,
    psi_norm_profile,
    psi_norm_sq,
    psi_norm_sq_grad,
    sample_inputs,
)
from rkbsnet.errors import DomainError

ROC = np.pi / 2.0
DEEP_POLICY = TruncationPolicy(order=48, adaptive=False)


def small_step(spec: NetworkSpec, rng: np.random.Generator,
               scale: float) -> WeightStep:
    """Gaussian weight step with entries of the given scale."""
    return WeightStep(
        dw=[scale * rng.standard_normal((spec.fan_in(j), spec.widths[j]))
            for j in range(spec.depth)],
        db=[scale * rng.standard_normal(spec.widths[j])
            for j in range(spec.depth)])


def tame_scaling(spec: NetworkSpec, rng: np.random.Generator
                 ) -> ScalingConfig:
    """Random positive scale factors in an input-kernel-friendly range."""
    sc = ScalingConfig.ones(spec)
    for j in range(spec.depth):
        sc.mu[j] = rng.uniform(0.5, 0.9, size=spec.widths[j])
        if j > 0:
            sc.omega[j] = rng.uniform(0.7, 1.3, size=spec.widths[j - 1])
            sc.omega_tilde[j] = rng.uniform(
                0.7, 1.3, size=(spec.widths[j - 1], spec.widths[j]))
    return sc


def psi_scaling(spec: NetworkSpec, rng: np.random.Generator
                ) -> ScalingConfig:
    """Scale factors keeping step-side geometric arguments well below one.

    The step multipliers enter the step kernel through
    ``omega_tilde^2 / omega^2`` couplings, so small ``omega_tilde`` and
    roomy ``mu`` keep the geometric series far from its pole.
    """
    sc = ScalingConfig.ones(spec)
    for j in range(spec.depth):
        sc.mu[j] = rng.uniform(0.9, 1.3, size=spec.widths[j])
        if j > 0:
            sc.omega[j] = rng.uniform(0.8, 1.2, size=spec.widths[j - 1])
            sc.omega_tilde[j] = rng.uniform(
                0.15, 0.35, size=(spec.widths[j - 1], spec.widths[j]))
    return sc


def test_input_kernel_matches_feature_inner_products():
    """Kernel entries equal inner products of the input-side features.

    The kernel recursion sums the same series the structural features
    represent, so at matching truncation order the two routes agree.
    """
    rng = np.random.default_rng(7)
    for trial in range(6):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = init_lecun(spec, rng)
        sc = tame_scaling(spec, rng)
        xa = sample_inputs(spec, 1, rng)[0]
        xb = sample_inputs(spec, 1, rng)[0]
        got = kernel_xx(spec, weights, sc, xa, xb, policy=DEEP_POLICY)
        pa = phi_features(spec, weights, sc, xa, policy=DEEP_POLICY)[-1]
        pb = phi_features(spec, weights, sc, xb, policy=DEEP_POLICY)[-1]
        top = spec.widths[-1]
        assert got.shape == (top, top)
        for i in range(top):
            for k in range(top):
                want = feature_inner(pa[i], pb[k])
                assert got[i, k] == pytest.approx(
                    want, rel=1e-9, abs=1e-12), (
                    f"trial {trial} entry ({i},{k})"
                )


def test_step_kernel_matches_feature_inner_products():
    """Step-kernel entries equal inner products of the step features.

    The closed geometric form must agree with the explicit truncated
    series once the truncation tail is negligible.
    """
    rng = np.random.default_rng(19)
    for trial in range(6):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        sc = psi_scaling(spec, rng)
        step_a = small_step(spec, rng, 0.03)
        step_b = small_step(spec, rng, 0.03)
        got = kernel_ww(spec, sc, step_a, step_b)
        fa = psi_features(spec, sc, step_a, policy=DEEP_POLICY)[-1]
        fb = psi_features(spec, sc, step_b, policy=DEEP_POLICY)[-1]
        top = spec.widths[-1]
        for i in range(top):
            for k in range(top):
                want = feature_inner(fa[i], fb[k])
                assert got[i, k] == pytest.approx(
                    want, rel=1e-9, abs=1e-12), (
                    f"trial {trial} entry ({i},{k})"
                )


def test_phi_norm_equals_kernel_trace():
    """The squared feature norm is the trace of the coincidence kernel."""
    rng = np.random.default_rng(23)
    for _ in range(10):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = init_lecun(spec, rng)
        sc = tame_scaling(spec, rng)
        x = sample_inputs(spec, 1, rng)[0]
        trace = float(np.trace(kernel_xx(spec, weights, sc, x, x)))
        assert phi_norm_sq(spec, weights, sc, x) == trace  # bit-identical


def test_psi_norm_matches_truncated_feature_norm():
    """The closed-form step norm agrees with the explicit series norm."""
    rng = np.random.default_rng(29)
    spec = NetworkSpec(input_dim=2, widths=(3, 2))
    sc = psi_scaling(spec, rng)
    step = small_step(spec, rng, 0.03)
    feats = psi_features(spec, sc, step, policy=DEEP_POLICY)[-1]
    explicit = sum(feature_inner(f, f) for f in feats)
    assert psi_norm_sq(spec, sc, step) == pytest.approx(explicit, rel=1e-9)
    profile = psi_norm_profile(spec, sc, step)
    assert sum(float(np.sum(p)) for p in profile[-1:]) == pytest.approx(
        explicit, rel=1e-9)


def test_norm_profiles_sum_per_layer():
    """Per-neuron norm profiles are consistent with the top-layer totals."""
    rng = np.random.default_rng(31)
    spec = NetworkSpec(input_dim=2, widths=(2, 3))
    weights = init_lecun(spec, rng)
    sc = tame_scaling(spec, rng)
    x = sample_inputs(spec, 1, rng)[0]
    step = small_step(spec, rng, 0.03)
    phi_prof = phi_norm_profile(spec, weights, sc, x)
    assert phi_norm_sq(spec, weights, sc, x) == pytest.approx(
        float(np.sum(phi_prof[-1])), rel=1e-14)
    psi_prof = psi_norm_profile(spec, sc, step)
    assert psi_norm_sq(spec, sc, step) == pytest.approx(
        float(np.sum(psi_prof[-1])), rel=1e-14)


def test_banach_kernel_is_exact_response_change():
    """The response-change kernel equals the two-forward-pass difference."""
    rng = np.random.default_rng(37)
    for _ in range(10):
        depth = int(rng.integers(1, 4))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = init_lecun(spec, rng)
        step = small_step(spec, rng, 0.2)
        x = sample_inputs(spec, 1, rng)[0]
        np.testing.assert_array_equal(
            banach_kernel(spec, weights, step, x),
            network_delta(spec, weights, step, x))


def test_step_kernel_domain_error_on_large_steps():
    """Arguments reaching the geometric-series pole fail loudly."""
    rng = np.random.default_rng(41)
    spec = NetworkSpec(input_dim=2, widths=(2,))
    sc = ScalingConfig.ones(spec)
    step = small_step(spec, rng, 1.0)  # far beyond theta's domain
    with pytest.raises(DomainError):
        kernel_ww(spec, sc, step, step)


def test_psi_norm_grad_matches_finite_differences():
    """Analytic step-norm gradients agree with central differences."""
    rng = np.random.default_rng(43)
    h = 1e-6
    for trial in range(8):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        sc = psi_scaling(spec, rng)
        step = small_step(spec, rng, 0.03)
        grad = psi_norm_sq_grad(spec, sc, step)
        for j in range(spec.depth):
            for arr, got in ((step.dw[j], grad.dw[j]),
                             (step.db[j], grad.db[j])):
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = psi_norm_sq(spec, sc, step)
                    arr[idx] = orig - h
                    dn = psi_norm_sq(spec, sc, step)
                    arr[idx] = orig
                    want = (up - dn) / (2.0 * h)
                    assert got[idx] == pytest.approx(
                        want, rel=1e-6, abs=1e-9), (
                        f"trial {trial} layer {j} index {idx}"
                    )


def test_phi_norm_grad_x_matches_finite_differences():
    """The input-gradient of the feature norm agrees with differences.

    This is the total derivative through every layer's dependence on x,
    not just the outermost series argument.
    """
    rng = np.random.default_rng(47)
    h = 1e-6
    for trial in range(8):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = init_lecun(spec, rng)
        sc = tame_scaling(spec, rng)
        x = sample_inputs(spec, 1, rng)[0] * 0.8
        got = phi_norm_sq_grad_x(spec, weights, sc, x)
        for d in range(spec.input_dim):
            xp, xm = x.copy(), x.copy()
            xp[d] += h
            xm[d] -= h
            want = (phi_norm_sq(spec, weights, sc, xp)
                    - phi_norm_sq(spec, weights, sc, xm)) / (2.0 * h)
            assert got[d] == pytest.approx(want, rel=1e-6, abs=1e-9), (
                f"trial {trial} coordinate {d}"
            )


def test_kernel_grads_match_finite_differences():
    """First-argument kernel derivatives agree with central differences."""
    rng = np.random.default_rng(53)
    h = 1e-6
    for trial in range(5):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = init_lecun(spec, rng)
        sc = tame_scaling(spec, rng)
        xa = sample_inputs(spec, 1, rng)[0] * 0.8
        xb = sample_inputs(spec, 1, rng)[0] * 0.8
        step_a = small_step(spec, rng, 0.08)
        step_b = small_step(spec, rng, 0.08)
        grads = kernel_grads(spec, weights, sc, xa, xb, step_a, step_b)
        top = spec.widths[-1]
        # input-side derivative d K_X(x, x') / d x
        for d in range(spec.input_dim):
            xp, xm = xa.copy(), xa.copy()
            xp[d] += h
            xm[d] -= h
            want = (kernel_xx(spec, weights, sc, xp, xb)
                    - kernel_xx(spec, weights, sc, xm, xb)) / (2.0 * h)
            np.testing.assert_allclose(
                grads.xx_dx[d], want, rtol=1e-6, atol=1e-9,
                err_msg=f"trial {trial} input coordinate {d}")
        # step-side derivative d K_W(step, step') / d step entries
        for j in range(spec.depth):
            for arr, got in ((step_a.dw[j], grads.ww_dw[j]),
                             (step_a.db[j], grads.ww_db[j])):
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = kernel_ww(spec, sc, step_a, step_b)
                    arr[idx] = orig - h
                    dn = kernel_ww(spec, sc, step_a, step_b)
                    arr[idx] = orig
                    want = (up - dn) / (2.0 * h)
                    np.testing.assert_allclose(
                        got[idx], want, rtol=1e-6, atol=1e-9,
                        err_msg=f"trial {trial} layer {j} index {idx}")
        assert grads.xx_dx.shape == (spec.input_dim, top, top)


def test_kernel_symmetry_and_psd_gram():
    """Coincident kernels are symmetric with nonnegative diagonal."""
    rng = np.random.default_rng(59)
    spec = NetworkSpec(input_dim=2, widths=(2, 2))
    weights = init_lecun(spec, rng)
    sc = tame_scaling(spec, rng)
    xs = sample_inputs(spec, 4, rng)
    # Gram over (point, neuron) pairs from the input-side kernel
    blocks = [[kernel_xx(spec, weights, sc, xs[a], xs[b])
               for b in range(4)] for a in range(4)]
    gram = np.block(blocks)
    np.testing.assert_allclose(gram, gram.T, atol=1e-10)
    eigs = np.linalg.eigvalsh(gram)
    assert eigs.min() >= -1e-9, f"input-kernel Gram not PSD: {eigs.min()}"
    # Same property for the step-side kernel over random small steps
    sc_w = psi_scaling(spec, rng)
    steps = [small_step(spec, rng, 0.03) for _ in range(4)]
    blocks = [[kernel_ww(spec, sc_w, sa, sb) for sb in steps]
              for sa in steps]
    gram = np.block(blocks)
    np.testing.assert_allclose(gram, gram.T, atol=1e-10)
    eigs = np.linalg.eigvalsh(gram)
    assert eigs.min() >= -1e-9, f"step-kernel Gram not PSD: {eigs.min()}"

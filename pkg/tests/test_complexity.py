"""Tests for the capacity bounds and the two-layer case study.

Oracles: the bound formulas recomputed inline from independently tested
primitives (margin constants, step magnitudes, the envelope series), exact
scaling laws that hold to the last bit (sample-count quartering, step-count
linearity, width independence), and hand-checked validation fixtures.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from rkbsnet import (
    NetworkSpec,
    apply_step,
    corollary_constants,
    coupled_synthetic_step,
    init_lecun,
    rademacher_asymptote,
    rademacher_step_bound,
    sigma_bar,
    training_rademacher_bound,
    two_layer_tanh_example,
)
from rkbsnet.errors import CapError, DomainError

ROC = math.pi / 2.0


def bound_fixture(seed: int = 8, scale: float = 1e-3):
    """A depth-two network with a cap-passing balanced step."""
    spec = NetworkSpec(input_dim=2, widths=(3, 2))
    rng = np.random.default_rng(seed)
    weights = init_lecun(spec, rng)
    step = coupled_synthetic_step(spec, rng, scale, chi=0.1)
    return spec, weights, step


def test_step_bound_matches_closed_form():
    """The per-step bound equals its closed form assembled from parts.

    The recomputation uses the margin constants and the envelope value
    directly: ``H sqrt((sigma_bar / N) t^2 / (B^2/(1-chi) - t^2))``.
    """
    spec, weights, step = bound_fixture()
    for n_samples in (10, 50, 400):
        got = rademacher_step_bound(spec, weights, step, n_samples)
        consts = corollary_constants(spec, weights, step, eps=0.1, chi=0.1,
                                     delta=1e-3)
        t_sq = consts.t_box_max[-1]
        b_sq = consts.b_sq[-1]
        envelope = sigma_bar("tanh", 0.9 * math.sqrt(ROC))
        want = spec.widths[-1] * math.sqrt(
            (envelope / n_samples) * t_sq / (b_sq / 0.9 - t_sq))
        assert got == pytest.approx(want, rel=1e-14), f"N={n_samples}"


def test_bound_halves_when_samples_quadruple():
    """Quadrupling the sample count exactly halves the bound."""
    spec, weights, step = bound_fixture()
    for n_samples in (10, 40):
        one = rademacher_step_bound(spec, weights, step, n_samples)
        four = rademacher_step_bound(spec, weights, step, 4 * n_samples)
        assert four == one / 2.0


def test_asymptote_close_for_tiny_steps():
    """The small-step limit is within one percent once t is far below B.

    The full bound exceeds the asymptote by the factor
    ``1 / sqrt(1 - (1-chi) t^2 / B^2)``, which the fixture's tiny step
    makes indistinguishable at the percent level.
    """
    spec, weights, step = bound_fixture()
    consts = corollary_constants(spec, weights, step, eps=0.1, chi=0.1,
                                 delta=1e-3)
    assert consts.t_box_max[-1] <= (0.01 ** 2) * consts.b_sq[-1]
    full = rademacher_step_bound(spec, weights, step, 50)
    asym = rademacher_asymptote(spec, weights, step, 50)
    assert abs(full - asym) / asym <= 1e-2
    envelope = sigma_bar("tanh", 0.9 * math.sqrt(ROC))
    want = spec.widths[-1] * math.sqrt(
        envelope * consts.t_box_max[-1] * 0.9 / (50 * consts.b_sq[-1]))
    assert asym == pytest.approx(want, rel=1e-14)
    assert full > asym  # the full bound's denominator is strictly smaller


def test_training_bound_sums_rebased_steps():
    """The trajectory bound is the sum of per-step bounds, applied in turn.

    Each per-step value must equal the single-step bound evaluated at the
    weights reached by applying all earlier steps.
    """
    spec, weights, _ = bound_fixture()
    steps = [coupled_synthetic_step(spec, np.random.default_rng(s), 1e-3,
                                    chi=0.1) for s in (1, 2, 3)]
    got = training_rademacher_bound(spec, weights, steps, 50)
    assert got.total == float(np.sum(got.per_step))
    current = weights
    for k, step in enumerate(steps):
        want = rademacher_step_bound(spec, current, step, 50)
        assert got.per_step[k] == pytest.approx(want, rel=1e-15), f"step {k}"
        current = apply_step(current, step)
    with pytest.raises(DomainError):
        training_rademacher_bound(spec, weights, [], 50)


def test_capped_step_rejects_the_bound():
    """Steps beyond their magnitude cap make the bound inapplicable."""
    spec, weights, _ = bound_fixture()
    big = coupled_synthetic_step(spec, np.random.default_rng(1), 0.5,
                                 chi=0.1)
    with pytest.raises(CapError):
        rademacher_step_bound(spec, weights, big, 50)


TWO_LAYER_ARGS = dict(width_hidden=8, n_samples=40, loss_lipschitz=1.0,
                      alpha0=1.0, alpha1=1.0, s=0.5, n_steps=3, w1_frob=1.5)


def test_two_layer_constants_match_closed_forms():
    """Every reported constant of the case study has its stated value.

    The learning rate is defined to land the output-layer step cap at the
    prescribed fraction of the norm cap, which ties the caps, the headline
    bound, and the exact total together in closed form.
    """
    r = two_layer_tanh_example(**TWO_LAYER_ARGS)
    h, n, lip = 8, 40, 1.0
    s = 0.5
    assert r.s0_sq == pytest.approx(1.0 / 2 + 1.0 / (2 * h), rel=1e-15)
    assert r.s1_sq == pytest.approx(1.0 / 2 + h, rel=1e-15)
    assert r.b1_sq == pytest.approx(
        (1.0 - 0.1) ** 2 * (1.0 - 0.1) * math.sqrt(ROC) / r.s1_sq, rel=1e-14)
    eta = (s * (1.0 - 0.1) / (n * lip * math.sqrt(2.0 * 2.0))) \
        * math.sqrt((1.0 - 0.1) * math.sqrt(ROC) / r.s1_sq)
    assert r.eta == pytest.approx(eta, rel=1e-14)
    assert r.t1_sq_cap == pytest.approx(
        2.0 * eta ** 2 * n ** 2 * lip ** 2 * 2.0, rel=1e-14)
    assert r.t1_sq_cap == pytest.approx(s ** 2 * r.b1_sq, rel=1e-14)
    assert r.t0_sq_cap == pytest.approx(
        2.0 * eta ** 2 * n ** 2 * lip ** 2 * 1.5 ** 2 * 2.0, rel=1e-14)
    envelope = sigma_bar("tanh", 0.9 * math.sqrt(ROC))
    assert r.headline == pytest.approx(
        s * 3 * math.sqrt(2.0 * envelope / n) * r.b1_sq, rel=1e-14)
    frac = s ** 2 * (1.0 - 0.1)
    assert r.exact_total == pytest.approx(
        3 * math.sqrt((envelope / n) * frac / (1.0 - frac)), rel=1e-14)


def test_two_layer_scaling_laws():
    """The case-study bounds obey their exact scaling laws.

    Both bounds are linear in the step count and scale as one over the
    square root of the sample count; the exact total is independent of the
    hidden width while the headline bound strictly decreases with it.
    """
    base = two_layer_tanh_example(**TWO_LAYER_ARGS)
    doubled = two_layer_tanh_example(**{**TWO_LAYER_ARGS, "n_steps": 6})
    assert doubled.exact_total == 2.0 * base.exact_total
    assert doubled.headline == 2.0 * base.headline
    previous = None
    for n in (10, 40, 160):
        r = two_layer_tanh_example(**{**TWO_LAYER_ARGS, "n_samples": n})
        if previous is not None:
            assert r.exact_total == previous.exact_total / 2.0
            assert r.headline == previous.headline / 2.0
        previous = r
    widths = [two_layer_tanh_example(**{**TWO_LAYER_ARGS, "width_hidden": h})
              for h in (4, 16, 64)]
    assert widths[0].exact_total == widths[1].exact_total \
        == widths[2].exact_total
    assert widths[0].headline > widths[1].headline > widths[2].headline


def test_two_layer_measured_run_is_deterministic():
    """Seeded synthetic diagnostics are reproducible and cap-consistent."""
    a = two_layer_tanh_example(**TWO_LAYER_ARGS, seed=7)
    b = two_layer_tanh_example(**TWO_LAYER_ARGS, seed=7)
    c = two_layer_tanh_example(**TWO_LAYER_ARGS, seed=8)
    assert a.measured is not None and a.measured.seed == 7
    np.testing.assert_array_equal(a.measured.t_box_max, b.measured.t_box_max)
    assert a.measured.w1_frob_measured == b.measured.w1_frob_measured
    assert not np.array_equal(a.measured.t_box_max, c.measured.t_box_max)
    assert a.measured.t1_cap_ratio == pytest.approx(
        a.t1_sq_cap / a.measured.t_box_max[-1], rel=1e-12)
    assert a.measured.t0_cap_ratio == pytest.approx(
        a.t0_sq_cap / a.measured.t_box_max[0], rel=1e-12)
    assert two_layer_tanh_example(**TWO_LAYER_ARGS).measured is None


def test_two_layer_validates_arguments():
    """Degenerate case-study parameters are rejected up front."""
    for bad in (dict(width_hidden=0), dict(n_samples=0), dict(s=0.0),
                dict(s=1.0), dict(loss_lipschitz=0.0), dict(n_steps=0),
                dict(w1_frob=-1.0)):
        with pytest.raises(ValueError):
            two_layer_tanh_example(**{**TWO_LAYER_ARGS, **bad})

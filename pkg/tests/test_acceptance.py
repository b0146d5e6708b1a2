"""Acceptance suite: one test per shipped guarantee, with pinned tolerances.

Each criterion prints exactly one PASS/FAIL line (visible under ``pytest -s``;
``pytest -v`` adds the per-test verdict) and then asserts it, so a red run
shows both the verdict line and the failing detail.  Tolerances and time
budgets are fixed here and must not be loosened to fit the implementation.
"""

from __future__ import annotations

import math
import time

import numpy as np

import rkbsnet as rk
from rkbsnet import (
    ConvergenceProfile,
    NetworkSpec,
    ScalingConfig,
    TruncationPolicy,
    WeightStep,
    Weights,
)

ROC = math.pi / 2.0
L12 = TruncationPolicy(order=12, adaptive=False)
DEEP = TruncationPolicy(order=48, adaptive=False)


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    """Print the one-line verdict for a criterion, then enforce it."""
    verdict = "PASS" if ok else "FAIL"
    print(f"[criterion {num}] {name}: {verdict} ({detail})")
    assert ok, f"criterion {num} ({name}): {detail}"


def _small_step(spec: NetworkSpec, rng: np.random.Generator,
                scale: float) -> WeightStep:
    return WeightStep(
        dw=[scale * rng.standard_normal((spec.fan_in(j), spec.widths[j]))
            for j in range(spec.depth)],
        db=[scale * rng.standard_normal(spec.widths[j])
            for j in range(spec.depth)])


def _tame_scaling(spec: NetworkSpec, rng: np.random.Generator
                  ) -> ScalingConfig:
    sc = ScalingConfig.ones(spec)
    for j in range(spec.depth):
        sc.mu[j] = rng.uniform(0.5, 0.9, size=spec.widths[j])
        if j > 0:
            sc.omega[j] = rng.uniform(0.7, 1.3, size=spec.widths[j - 1])
            sc.omega_tilde[j] = rng.uniform(
                0.7, 1.3, size=(spec.widths[j - 1], spec.widths[j]))
    return sc


def _psi_scaling(spec: NetworkSpec, rng: np.random.Generator
                 ) -> ScalingConfig:
    sc = ScalingConfig.ones(spec)
    for j in range(spec.depth):
        sc.mu[j] = rng.uniform(0.9, 1.3, size=spec.widths[j])
        if j > 0:
            sc.omega[j] = rng.uniform(0.8, 1.2, size=spec.widths[j - 1])
            sc.omega_tilde[j] = rng.uniform(
                0.15, 0.35, size=(spec.widths[j - 1], spec.widths[j]))
    return sc


def _grad_scaling(spec: NetworkSpec, rng: np.random.Generator
                  ) -> ScalingConfig:
    """Tame factors with extra headroom for 100-config gradient sweeps."""
    sc = _tame_scaling(spec, rng)
    for j in range(spec.depth):
        sc.mu[j] = rng.uniform(0.4, 0.75, size=spec.widths[j])
    return sc


def _normwise(got, want) -> float:
    """Max absolute deviation relative to the oracle's own scale."""
    got = np.asarray(got, float)
    want = np.asarray(want, float)
    scale = max(float(np.max(np.abs(want))), 1e-8)
    return float(np.max(np.abs(got - want))) / scale


def _equivalence_fixtures():
    """Deterministic tiny fixtures with preactivation shifts inside 0.1*ROC.

    Steps start large and are rescaled until every layer's preactivation
    shift has infinity norm at most one tenth of the convergence radius, so
    the constraint genuinely binds rather than holding by accident.
    """
    rng = np.random.default_rng(2024)
    target = 0.1 * ROC
    for _ in range(24):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = rk.init_lecun(spec, rng)
        x = rk.sample_inputs(spec, 1, rng)[0]
        step = _small_step(spec, rng, 0.3)
        for _ in range(80):
            shifts = rk.preact_shifts(spec, weights, step, x)
            worst = max(float(np.max(np.abs(s))) for s in shifts)
            if worst <= target:
                break
            factor = 0.8 * target / worst
            step = WeightStep(dw=[a * factor for a in step.dw],
                              db=[a * factor for a in step.db])
        sc = _tame_scaling(spec, rng)
        yield spec, weights, sc, x, step


def test_criterion_1_exact_representation_equivalence():
    """Feature-pairing output change equals the network's exact change."""
    start = time.monotonic()
    n_fixtures = 0
    worst = 0.0
    for spec, weights, sc, x, step in _equivalence_fixtures():
        shifts = rk.preact_shifts(spec, weights, step, x)
        shift_max = max(float(np.max(np.abs(s))) for s in shifts)
        assert shift_max <= 0.1 * ROC + 1e-15
        got = rk.bilinear_delta(spec, weights, sc, step, x, policy=L12)
        want = rk.network_delta(spec, weights, step, x)
        worst = max(worst, float(np.max(np.abs(got - want))))
        n_fixtures += 1
    elapsed = time.monotonic() - start
    ok = n_fixtures >= 20 and worst <= 1e-8 and elapsed <= 60.0
    _report(1, "exact representation equivalence", ok,
            f"{n_fixtures} fixtures, max |delta - pairing| = {worst:.3e} "
            f"(<= 1e-8), {elapsed:.1f}s (<= 60s)")


def test_criterion_2_kernel_recursion_matches_feature_oracle():
    """Kernel recursions agree with explicit feature-space dot products."""
    worst_trace = 0.0
    worst_xx = 0.0
    worst_ww = 0.0
    step_rng = np.random.default_rng(99)
    for spec, weights, sc, x, _ in _equivalence_fixtures():
        kx = rk.kernel_xx(spec, weights, sc, x, x, policy=DEEP)
        trace = float(np.trace(kx))
        norm = rk.phi_norm_sq(spec, weights, sc, x, policy=DEEP)
        worst_trace = max(
            worst_trace, abs(trace - norm) / max(1.0, abs(norm)))
        feats = rk.phi_features(spec, weights, sc, x, policy=DEEP)[-1]
        top = spec.widths[-1]
        for i in range(top):
            for k in range(top):
                want = rk.feature_inner(feats[i], feats[k])
                worst_xx = max(
                    worst_xx, abs(kx[i, k] - want) / max(1.0, abs(want)))
        step = _small_step(spec, step_rng, 0.02)
        kw = rk.kernel_ww(spec, sc, step, step)
        sfeats = rk.psi_features(spec, sc, step, policy=DEEP)[-1]
        for i in range(top):
            for k in range(top):
                want = rk.feature_inner(sfeats[i], sfeats[k])
                worst_ww = max(
                    worst_ww, abs(kw[i, k] - want) / max(1.0, abs(want)))
    ok = worst_trace <= 1e-12 and worst_xx <= 1e-9 and worst_ww <= 1e-9
    _report(2, "kernel recursion vs feature oracle", ok,
            f"trace vs norm {worst_trace:.3e} (<= 1e-12), "
            f"input kernel {worst_xx:.3e}, step kernel {worst_ww:.3e} "
            f"(<= 1e-9)")


def test_criterion_3_gradient_suite_matches_central_differences():
    """Every analytic gradient matches central differences at h = 1e-5."""
    start = time.monotonic()
    h = 1e-5
    worst = {"training step": 0.0, "step norm": 0.0, "input norm": 0.0,
             "input kernel": 0.0, "step kernel": 0.0}
    rng = np.random.default_rng(3571)
    n_configs = 100
    for _ in range(n_configs):
        depth = int(rng.integers(1, 3))
        widths = tuple(int(rng.integers(1, 4)) for _ in range(depth))
        spec = NetworkSpec(input_dim=int(rng.integers(1, 4)), widths=widths)
        weights = rk.init_lecun(spec, rng)
        n_samp = int(rng.integers(1, 4))
        xs = rk.sample_inputs(spec, n_samp, rng)
        ys = rng.uniform(-1.0, 1.0, size=(n_samp, widths[-1]))
        eta = 0.05
        trace = rk.backprop_step(spec, weights, xs, ys, eta)
        for j in range(spec.depth):
            for arr, got in (
                    (weights.w[j], -np.asarray(trace.step.dw[j]) / eta),
                    (weights.b[j], -np.asarray(trace.step.db[j]) / eta)):
                fd = np.empty_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = rk.empirical_risk(spec, weights, xs, ys)
                    arr[idx] = orig - h
                    dn = rk.empirical_risk(spec, weights, xs, ys)
                    arr[idx] = orig
                    fd[idx] = (up - dn) / (2.0 * h)
                worst["training step"] = max(worst["training step"],
                                             _normwise(got, fd))

        sc_psi = _psi_scaling(spec, rng)
        step = _small_step(spec, rng, 0.03)
        grad = rk.psi_norm_sq_grad(spec, sc_psi, step)
        for j in range(spec.depth):
            for arr, got in ((step.dw[j], grad.dw[j]),
                             (step.db[j], grad.db[j])):
                fd = np.empty_like(arr)
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = rk.psi_norm_sq(spec, sc_psi, step)
                    arr[idx] = orig - h
                    dn = rk.psi_norm_sq(spec, sc_psi, step)
                    arr[idx] = orig
                    fd[idx] = (up - dn) / (2.0 * h)
                worst["step norm"] = max(worst["step norm"],
                                         _normwise(got, fd))

        sc = _grad_scaling(spec, rng)
        x = rk.sample_inputs(spec, 1, rng)[0] * 0.7
        got_x = rk.phi_norm_sq_grad_x(spec, weights, sc, x)
        fd = np.empty(spec.input_dim)
        for d in range(spec.input_dim):
            xp, xm = x.copy(), x.copy()
            xp[d] += h
            xm[d] -= h
            fd[d] = (rk.phi_norm_sq(spec, weights, sc, xp)
                     - rk.phi_norm_sq(spec, weights, sc, xm)) / (2.0 * h)
        worst["input norm"] = max(worst["input norm"], _normwise(got_x, fd))

        xb = rk.sample_inputs(spec, 1, rng)[0] * 0.7
        step_a = _small_step(spec, rng, 0.02)
        step_b = _small_step(spec, rng, 0.02)
        grads = rk.kernel_grads(spec, weights, sc, x, xb, step_a, step_b)
        for d in range(spec.input_dim):
            xp, xm = x.copy(), x.copy()
            xp[d] += h
            xm[d] -= h
            fdm = (rk.kernel_xx(spec, weights, sc, xp, xb)
                   - rk.kernel_xx(spec, weights, sc, xm, xb)) / (2.0 * h)
            worst["input kernel"] = max(worst["input kernel"],
                                        _normwise(grads.xx_dx[d], fdm))
        for j in range(spec.depth):
            for arr, got in ((step_a.dw[j], grads.ww_dw[j]),
                             (step_a.db[j], grads.ww_db[j])):
                it = np.nditer(arr, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    orig = arr[idx]
                    arr[idx] = orig + h
                    up = rk.kernel_ww(spec, sc, step_a, step_b)
                    arr[idx] = orig - h
                    dn = rk.kernel_ww(spec, sc, step_a, step_b)
                    arr[idx] = orig
                    fdm = (up - dn) / (2.0 * h)
                    worst["step kernel"] = max(worst["step kernel"],
                                               _normwise(got[idx], fdm))
    elapsed = time.monotonic() - start
    worst_all = max(worst.values())
    ok = worst_all <= 1e-6 and elapsed <= 120.0
    parts = ", ".join(f"{k} {v:.2e}" for k, v in worst.items())
    _report(3, "gradient suite vs central differences", ok,
            f"{n_configs} configs, worst rel: {parts} (<= 1e-6), "
            f"{elapsed:.1f}s (<= 120s)")


def _feasible_backprop_fixtures():
    """Training-step fixtures whose steps pass the per-layer caps."""
    shapes = [(1, (1, 1)), (1, (2, 1)), (3, (1, 1)), (2, (1, 1)),
              (2, (2, 1)), (1, (1, 2))]
    out = []
    for n, widths in shapes:
        for seed in range(20):
            rng = np.random.default_rng(seed)
            spec = NetworkSpec(input_dim=n, widths=widths)
            weights = rk.init_lecun(spec, rng)
            xs = rk.sample_inputs(spec, 4, rng)
            ys = rng.uniform(-1.0, 1.0, size=(4, widths[-1]))
            trace = rk.backprop_step(spec, weights, xs, ys, eta=1e-3)
            try:
                canon = rk.canonical_construct(
                    spec, weights, trace.step,
                    eps=0.1, chi=0.1, delta=1e-3, eta=1e-3)
            except rk.RkbsnetError:
                continue
            out.append((spec, weights, trace.step, canon))
    return out


def test_criterion_4_canonical_scaling_identity():
    """The step-norm gradient is exactly proportional to the step itself.

    The proportionality constant is recomputed from its closed form, the
    identity is checked entrywise, and a one-percent shadow-weight
    perturbation must visibly break it (non-vacuity).
    """
    fixtures = _feasible_backprop_fixtures()
    worst_identity = 0.0
    worst_nu = 0.0
    min_break = math.inf
    for spec, weights, step, canon in fixtures:
        consts = canon.constants
        nu_closed = (4.0 / consts.t_box_max[-1]) * rk.kappa(
            (1.0 - consts.eps_psi) / (1.0 - consts.chi))
        worst_nu = max(worst_nu,
                       abs(consts.nu - nu_closed) / abs(nu_closed))
        grad = rk.psi_norm_sq_grad(spec, canon.scaling, step)
        for j in range(spec.depth):
            for got, want in ((grad.dw[j], consts.nu * step.dw[j]),
                              (grad.db[j], consts.nu * step.db[j])):
                denom = np.maximum(np.abs(want), 1e-300)
                worst_identity = max(worst_identity, float(
                    np.max(np.abs(np.asarray(got) - want) / denom)))
        perturbed = ScalingConfig(
            mu=[a.copy() for a in canon.scaling.mu],
            omega=[None if a is None else a * 1.01
                   for a in canon.scaling.omega],
            omega_tilde=[None if a is None else a * 1.01
                         for a in canon.scaling.omega_tilde])
        grad_p = rk.psi_norm_sq_grad(spec, perturbed, step)
        broke = 0.0
        for j in range(spec.depth):
            for got, want in ((grad_p.dw[j], consts.nu * step.dw[j]),
                              (grad_p.db[j], consts.nu * step.db[j])):
                denom = np.maximum(np.abs(want), 1e-300)
                broke = max(broke, float(
                    np.max(np.abs(np.asarray(got) - want) / denom)))
        min_break = min(min_break, broke)
    ok = (len(fixtures) >= 10 and worst_identity <= 1e-8
          and worst_nu <= 1e-12 and min_break >= 1e-4)
    _report(4, "canonical scaling identity", ok,
            f"{len(fixtures)} fixtures, identity rel {worst_identity:.3e} "
            f"(<= 1e-8), constant recompute {worst_nu:.3e} (<= 1e-12), "
            f"1% perturbation breaks by >= {min_break:.3e} (>= 1e-4)")


def _joint_fixture(n: int, widths: tuple[int, ...], seed: int):
    """A small network with a sign-patterned step sized for construction."""
    rng = np.random.default_rng(seed)
    spec = NetworkSpec(input_dim=n, widths=widths)
    raw = rk.init_lecun(spec, rng)
    weights = Weights(w=[a * 0.15 for a in raw.w],
                      b=[a * 0.15 for a in raw.b])
    dw, db = [], []
    for j in range(spec.depth):
        scale = 1e-2 if j == 0 else 0.5e-2
        signs = np.where(
            rng.uniform(size=(spec.fan_in(j), widths[j])) < 0.5, -1.0, 1.0)
        dw.append(scale * signs)
        db.append(scale * np.ones(widths[j]))
    step = WeightStep(dw=dw, db=db)
    profile = ConvergenceProfile(eps_phi=(0.3,) * spec.depth,
                                 eps_psi=(0.5,) * spec.depth,
                                 eps_tilde=0.9)
    return spec, weights, step, profile


def test_criterion_5_convergence_certificates_cap_sampled_norms():
    """Passing checker verdicts imply the promised norm caps everywhere.

    For each certified fixture, 100 inputs sampled from the box must respect
    the input-side caps and 100 entrywise-shrunk steps must respect the
    step-side caps, with zero violations.
    """
    cases = [(2, (2, 2), 3), (1, (2, 2), 7), (2, (3, 2), 11), (2, (2, 3), 7)]
    n_x = n_steps = 0
    violations = 0
    min_margin = math.inf
    for n, widths, seed in cases:
        spec, weights, step, profile = _joint_fixture(n, widths, seed)
        report = rk.joint_convergence(spec, weights, step, profile)
        assert report.ok, f"fixture {(n, widths, seed)} not certified"
        phi_check = rk.check_phi_cap(spec, weights, report.scaling,
                                     np.asarray(profile.eps_phi))
        psi_check = rk.check_psi_cap(spec, report.scaling, step,
                                     np.asarray(profile.eps_psi))
        assert phi_check.ok and psi_check.ok
        rng = np.random.default_rng(seed + 1000)
        for _ in range(100):
            x = rk.sample_inputs(spec, 1, rng)[0]
            prof = rk.phi_norm_profile(spec, weights, report.scaling, x)
            for j in range(spec.depth):
                total = float(np.sum(prof[j]))
                cap = phi_check.caps[j]
                if total > cap * (1.0 + 1e-12):
                    violations += 1
                min_margin = min(min_margin, cap - total)
            n_x += 1
        for _ in range(100):
            shrunk = WeightStep(
                dw=[a * rng.uniform(0.3, 1.0, size=a.shape)
                    * np.where(rng.uniform(size=a.shape) < 0.5, -1, 1)
                    for a in step.dw],
                db=[a * rng.uniform(0.3, 1.0, size=a.shape)
                    * np.where(rng.uniform(size=a.shape) < 0.5, -1, 1)
                    for a in step.db])
            again = rk.check_psi_cap(spec, report.scaling, shrunk,
                                     np.asarray(profile.eps_psi))
            assert again.ok, "entrywise shrinkage must preserve the premise"
            prof = rk.psi_norm_profile(spec, report.scaling, shrunk)
            for j in range(spec.depth):
                total = float(np.sum(prof[j]))
                cap = psi_check.caps[j]
                if total > cap * (1.0 + 1e-12):
                    violations += 1
                min_margin = min(min_margin, cap - total)
            n_steps += 1
    ok = violations == 0 and n_x >= 400 and n_steps >= 400
    _report(5, "convergence certificates cap sampled norms", ok,
            f"{n_x} inputs + {n_steps} steps across {len(cases)} certified "
            f"fixtures, {violations} violations, smallest cap margin "
            f"{min_margin:.3e}")


def test_criterion_6_activation_expansion_matches_closed_form():
    """Recurrence-built expansion coefficients match the closed form."""
    worst = 0.0
    for z in (0.0, 0.5, -0.5, 1.7, -1.7, 3.0):
        coeffs = rk.act_deriv_coeffs("tanh", z, 10).coeffs
        for m in range(1, 11):
            closed = rk.tanh_coeff_closed_form(z, m, n_terms=400_000)
            if abs(closed) > 1e-12:
                worst = max(worst, abs(coeffs[m - 1] - closed) / abs(closed))
            else:
                worst = max(worst, abs(coeffs[m - 1] - closed))
    at_zero = rk.act_deriv_coeffs("tanh", 0.0, 4).coeffs
    pinned_ok = (abs(at_zero[0] - 1.0) <= 1e-12
                 and abs(at_zero[2] - (-1.0 / 3.0)) <= 1e-12)
    ok = worst <= 1e-6 and pinned_ok
    _report(6, "activation expansion vs closed form", ok,
            f"worst rel {worst:.3e} (<= 1e-6) over six centers, "
            f"linear/cubic values at the odd center pinned to 1e-12: "
            f"{pinned_ok}")


def test_criterion_7_complexity_bound_scaling_laws():
    """The capacity bound follows its exact sample, step, and rate laws."""
    rng = np.random.default_rng(8)
    spec = NetworkSpec(input_dim=2, widths=(3, 2))
    weights = rk.init_lecun(spec, rng)
    step = rk.coupled_synthetic_step(spec, rng, 1e-3, chi=0.1)

    b_n = rk.rademacher_step_bound(spec, weights, step, 10)
    b_4n = rk.rademacher_step_bound(spec, weights, step, 40)
    quarter = abs(b_4n - b_n / 2.0) / b_n

    singles = rk.rademacher_step_bound(spec, weights, step, 25)
    linearity = 0.0
    for t in (1, 2, 4):
        total = rk.training_rademacher_bound(
            spec, weights, [step] * t, 25).total
        linearity = max(linearity, abs(total - t * singles) / (t * singles))

    lam_eta = []
    for eta in (1e-3, 2e-3, 4e-3):
        canon = rk.canonical_construct(spec, weights, step,
                                       eps=0.1, chi=0.1, delta=1e-3, eta=eta)
        lam_eta.append(canon.lam * eta)
    inverse = max(abs(v - lam_eta[0]) / lam_eta[0] for v in lam_eta)

    rng1 = np.random.default_rng(8)
    spec1 = NetworkSpec(input_dim=2, widths=(2,))
    weights1 = rk.init_lecun(spec1, rng1)
    base = rk.coupled_synthetic_step(spec1, rng1, 1e-2, chi=0.1)
    consts0 = rk.corollary_constants(spec1, weights1, base,
                                     eps=0.1, chi=0.1, delta=1e-3)
    r0 = consts0.t_box_max[-1] / consts0.b_sq[-1]
    sweep = 0.0
    for x in (0.2, 0.4, 0.6, 0.8, 0.95):
        factor = x / math.sqrt(r0)
        scaled = WeightStep(dw=[a * factor for a in base.dw],
                            db=[a * factor for a in base.db])
        consts = rk.corollary_constants(spec1, weights1, scaled,
                                        eps=0.1, chi=0.1, delta=1e-3)
        ratio = consts.t_box_max[-1] / consts.b_sq[-1]
        want = (1.0 - ratio) ** 2
        sweep = max(sweep, abs(consts.lam_prime - want) / want,
                    abs(ratio - x * x))
    ok = max(quarter, linearity, inverse, sweep) <= 1e-12
    _report(7, "complexity bound scaling laws", ok,
            f"quadrupled samples halve: {quarter:.3e}, step-count "
            f"linearity: {linearity:.3e}, trade-off inverse in rate: "
            f"{inverse:.3e}, squared-headroom sweep: {sweep:.3e} "
            f"(all <= 1e-12)")


def test_criterion_8_two_layer_example_scaling():
    """The worked example's bound follows the inverse-root sample law."""
    common = dict(width_hidden=8, loss_lipschitz=1.0, alpha0=1.0,
                  alpha1=1.0, s=0.5, n_steps=3, w1_frob=1.5)
    totals = [rk.two_layer_tanh_example(n_samples=n, **common).exact_total
              for n in (10, 40, 160)]
    heads = [rk.two_layer_tanh_example(n_samples=n, **common).headline
             for n in (10, 40, 160)]
    ratio_err = 0.0
    for series in (totals, heads):
        for a, b in zip(series, series[1:]):
            ratio_err = max(ratio_err, abs(a / b - 2.0) / 2.0)

    by_width = [rk.two_layer_tanh_example(
        width_hidden=h, n_samples=40, loss_lipschitz=1.0, alpha0=1.0,
        alpha1=1.0, s=0.5, n_steps=3, w1_frob=1.5).headline
        for h in (4, 16, 64)]
    decreasing = by_width[0] > by_width[1] > by_width[2]
    ok = ratio_err <= 1e-12 and decreasing
    _report(8, "worked example sample and width scaling", ok,
            f"inverse-root ratio error {ratio_err:.3e} (<= 1e-12), "
            f"headline strictly decreasing over widths 4/16/64: "
            f"{decreasing}")

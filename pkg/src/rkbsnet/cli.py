"""Command-line interface: analysis runs with delimited and JSON reports.

Subcommands
-----------

``train-step``
    One gradient step on synthetic data; reports the risk change and the
    per-layer step magnitudes.
``verify-equivalence``
    Checks the exact network increment against the bilinear feature pairing
    at sampled inputs.
``kernel``
    Builds the step-side kernel Gram matrix over bootstrap gradient steps
    and checks positive semidefiniteness.
``canonical``
    Constructs canonical scale factors (optionally solving the bias
    couplings first) and verifies their certificates.
``rademacher``
    Per-step complexity bounds along a short training trajectory.
``sweep``
    One-parameter sweeps (``eta``, ``n_samples``, ``width``,
    ``step_ratio``) emitting plot-ready tables.

Every command reads a JSON config (validated against
:data:`CONFIG_SCHEMA`), writes results as JSON (sorted keys) or delimited
CSV (comma separator, ``.`` decimals, header row), and — when ``--out`` is
given — renders one figure per curve table next to the tabular output
(suppressed by ``--no-figures``).  Reports carry no timestamps, so reruns
with the same config and seed are bit-identical.  The ``RKBSNET_LOG``
environment variable sets the log level.  Exit codes: 0 on success, 1 for
analysis failures (domain, cap, feasibility, budget), 2 for config errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from . import __version__
from .complexity import (rademacher_asymptote, rademacher_step_bound,
                         training_rademacher_bound, two_layer_tanh_example)
from .errors import (ConfigError, DomainError, FeasibilityError,
                     RkbsnetError)
from .features import ScalingConfig, bilinear_delta, validity_margin
from .geometry import kernel_ww
from .network import (NetworkSpec, Weights, apply_step, backprop_step,
                      empirical_risk, init_lecun, network_delta,
                      sample_inputs, step_magnitudes)
from .scaling import (canonical_construct, coupled_synthetic_step,
                      solve_alpha_for_chi, verify_canonical)
from .series import TruncationPolicy

__all__ = ["CONFIG_SCHEMA", "ReportBundle", "main"]

logger = logging.getLogger("rkbsnet")

_MARGIN = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}

CONFIG_SCHEMA: dict = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["network", "seed"],
    "properties": {
        "network": {
            "type": "object",
            "additionalProperties": False,
            "required": ["input_dim", "widths"],
            "properties": {
                "input_dim": {"type": "integer", "minimum": 1},
                "widths": {"type": "array", "minItems": 1,
                           "items": {"type": "integer", "minimum": 1}},
                "alphas": {"type": "array", "items": {"type": "number"}},
                "activation": {"type": "string", "enum": ["tanh"]},
                "input_box": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "data": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_samples": {"type": "integer", "minimum": 1},
            },
        },
        "train": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eta": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "margins": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "eps": _MARGIN, "chi": _MARGIN, "delta": _MARGIN,
            },
        },
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "order": {"type": "integer", "minimum": 1},
                "tail_tol": {"type": "number", "exclusiveMinimum": 0},
                "guard": {"type": "number", "exclusiveMinimum": 0,
                          "exclusiveMaximum": 1},
                "adaptive": {"type": "boolean"},
                "max_order": {"type": "integer", "minimum": 1},
            },
        },
        "equivalence": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_points": {"type": "integer", "minimum": 1},
                "step_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_steps": {"type": "integer", "minimum": 2},
            },
        },
        "canonical": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "solve_alpha": {"type": "boolean"},
                "step_mode": {"type": "string",
                              "enum": ["backprop", "synthetic"]},
                "step_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "rademacher": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_steps": {"type": "integer", "minimum": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"type": "string",
                              "enum": ["eta", "n_samples", "width",
                                       "step_ratio"]},
                "values": {"type": "array", "minItems": 1,
                           "items": {"type": "number"}},
                "s": _MARGIN,
                "loss_lipschitz": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 1},
                "w1_frob": {"type": "number", "exclusiveMinimum": 0},
                "step_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}


@dataclass
class ReportBundle:
    """A command's complete output.

    Attributes:
        command: The subcommand that produced the bundle.
        results: Scalar results (one key per quantity).
        curves: Plot-ready tables, name -> list of row dicts with identical
            keys per table.
        provenance: Reproducibility block: config digest, effective seed,
            package version, and command.
    """

    command: str
    results: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"command": self.command, "results": _native(self.results),
                "curves": _native(self.curves),
                "provenance": _native(self.provenance)}


def _native(obj):
    """Recursively convert numpy scalars/arrays for JSON serialization."""
    if isinstance(obj, dict):
        return {k: _native(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_native(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_native(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    """Load and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config {path!r} failed validation: {exc.message}") from exc
    return cfg


def _config_sha256(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class _Run:
    """Config-derived ingredients shared by the commands."""

    cfg: dict
    spec: NetworkSpec
    seed: int
    rng: np.random.Generator
    weights: Weights
    xs: np.ndarray
    ys: np.ndarray
    eta: float
    eps: float
    chi: float
    delta: float
    policy: TruncationPolicy


def _setup(cfg: dict, seed_override: int | None) -> _Run:
    net = cfg["network"]
    spec = NetworkSpec(
        input_dim=net["input_dim"], widths=tuple(net["widths"]),
        alphas=tuple(net.get("alphas", ())),
        activation=net.get("activation", "tanh"),
        input_box=net.get("input_box", 1.0))
    seed = seed_override if seed_override is not None else cfg["seed"]
    rng = np.random.default_rng(seed)
    weights = init_lecun(spec, rng)
    n_samples = cfg.get("data", {}).get("n_samples", 8)
    xs = sample_inputs(spec, n_samples, rng)
    ys = rng.uniform(-1.0, 1.0, size=(n_samples, spec.output_dim))
    margins = cfg.get("margins", {})
    trunc = cfg.get("truncation", {})
    policy = TruncationPolicy(**trunc) if trunc else TruncationPolicy()
    return _Run(
        cfg=cfg, spec=spec, seed=seed, rng=rng, weights=weights, xs=xs,
        ys=ys, eta=cfg.get("train", {}).get("eta", 0.05),
        eps=margins.get("eps", 0.1), chi=margins.get("chi", 0.1),
        delta=margins.get("delta", 1e-3), policy=policy)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_train_step(run: _Run) -> ReportBundle:
    """One gradient step: risk change and step magnitudes."""
    trace = backprop_step(run.spec, run.weights, run.xs, run.ys, run.eta)
    before = empirical_risk(run.spec, run.weights, run.xs, run.ys)
    after_w = apply_step(run.weights, trace.step)
    after = empirical_risk(run.spec, after_w, run.xs, run.ys)
    plain = step_magnitudes(run.spec, trace.step, "plain")
    box = step_magnitudes(run.spec, trace.step, "boxast", run.delta)
    rows = [{"layer": j, "t_plain_max": float(plain.layer_max(j)),
             "t_box_max": float(box.layer_max(j))}
            for j in range(run.spec.depth)]
    bundle = ReportBundle(command="train-step")
    bundle.results = {
        "eta": run.eta, "n_samples": len(run.xs),
        "risk_before": before, "risk_after": after,
        "risk_decrease": before - after,
    }
    bundle.curves = {"step_magnitudes": rows}
    return bundle


def cmd_verify_equivalence(run: _Run) -> ReportBundle:
    """Exact network increment vs. the bilinear feature pairing."""
    eq = run.cfg.get("equivalence", {})
    n_points = eq.get("n_points", 3)
    step = backprop_step(run.spec, run.weights, run.xs, run.ys,
                         run.eta).step.scaled(eq.get("step_scale", 1.0))
    scaling = ScalingConfig.ones(run.spec)
    points = sample_inputs(run.spec, n_points, run.rng)
    rows = []
    worst = 0.0
    worst_margin = 0.0
    for k, x in enumerate(points):
        margin = validity_margin(run.spec, run.weights, step, x)
        worst_margin = max(worst_margin, margin)
        if margin >= 1.0:
            raise DomainError(
                f"step leaves the series validity region at point {k} "
                f"(relative preactivation shift {margin:.3f} >= 1); "
                f"reduce step_scale or eta", quantity="validity_margin")
        exact = network_delta(run.spec, run.weights, step, x)
        paired = bilinear_delta(run.spec, run.weights, scaling, step, x,
                                run.policy)
        err = float(np.max(np.abs(exact - paired)))
        worst = max(worst, err)
        rows.append({"point": k, "validity_margin": float(margin),
                     "exact_delta_inf": float(np.max(np.abs(exact))),
                     "abs_error": err})
    bundle = ReportBundle(command="verify-equivalence")
    bundle.results = {"n_points": n_points, "max_abs_error": worst,
                      "max_validity_margin": worst_margin}
    bundle.curves = {"equivalence": rows}
    return bundle


def cmd_kernel(run: _Run) -> ReportBundle:
    """Step-side kernel Gram over bootstrap gradient steps; PSD check."""
    n_steps = run.cfg.get("kernel", {}).get("n_steps", 4)
    n = len(run.xs)
    size = max(1, (2 * n) // 3)
    steps = []
    for _ in range(n_steps):
        idx = run.rng.choice(n, size=size, replace=False)
        steps.append(backprop_step(run.spec, run.weights, run.xs[idx],
                                   run.ys[idx], run.eta).step)
    scaling = ScalingConfig.ones(run.spec)
    m = run.spec.output_dim
    gram = np.empty((n_steps * m, n_steps * m))
    for a in range(n_steps):
        for b in range(a, n_steps):
            block = kernel_ww(run.spec, scaling, steps[a], steps[b])
            gram[a * m:(a + 1) * m, b * m:(b + 1) * m] = block
            gram[b * m:(b + 1) * m, a * m:(a + 1) * m] = block.T
    eigs = np.linalg.eigvalsh(gram)
    rows = [{"row": i, "col": j, "value": float(gram[i, j])}
            for i in range(gram.shape[0]) for j in range(gram.shape[1])]
    bundle = ReportBundle(command="kernel")
    bundle.results = {
        "n_steps": n_steps, "matrix_size": int(gram.shape[0]),
        "min_eigenvalue": float(eigs[0]),
        "max_eigenvalue": float(eigs[-1]),
        "psd": bool(eigs[0] >= -1e-9),
    }
    bundle.curves = {"gram": rows}
    return bundle


def cmd_canonical(run: _Run) -> ReportBundle:
    """Canonical scale factors with certificates."""
    block = run.cfg.get("canonical", {})
    solve = block.get("solve_alpha", False)
    mode = block.get("step_mode", "backprop")
    spec = run.spec
    if mode == "synthetic":
        step = coupled_synthetic_step(
            spec, run.rng, block.get("step_scale", 1e-3), chi=run.chi,
            delta=run.delta)
        solve = False
    elif solve:
        solved = solve_alpha_for_chi(spec, run.weights, run.xs, run.ys,
                                     run.eta, run.chi, delta=run.delta)
        spec, step = solved.spec, solved.trace.step
    else:
        step = backprop_step(spec, run.weights, run.xs, run.ys, run.eta).step
    try:
        canonical = canonical_construct(
            spec, run.weights, step, eps=run.eps, chi=run.chi,
            delta=run.delta, eta=run.eta, policy=run.policy)
    except FeasibilityError as exc:
        bundle = ReportBundle(command="canonical")
        bundle.results = {
            "feasible": False, "reason": str(exc), "kind": exc.kind,
            "layer": exc.layer, "step_mode": mode, "solve_alpha": solve,
        }
        return bundle
    report = verify_canonical(spec, run.weights, step, canonical,
                              policy=run.policy)
    consts = canonical.constants
    rows = [{"layer": j, "t_box_max": float(consts.t_box_max[j]),
             "cap_b_sq": float(consts.b_sq[j]),
             "margin": float(consts.cap_margins[j])}
            for j in range(spec.depth)]
    bundle = ReportBundle(command="canonical")
    bundle.results = {
        "feasible": True, "step_mode": mode,
        "nu": consts.nu, "lam": canonical.lam, "lam_prime": consts.lam_prime,
        "eps_psi": consts.eps_psi, "eps_phi": list(consts.eps_phi),
        "alphas": list(spec.alphas), "solve_alpha": solve,
        "identity_max_rel": report.identity_max_rel,
        "psi_total": report.psi_total,
        "psi_cap_derived": report.psi_cap_derived,
        "psi_cap_claimed": report.psi_cap_claimed,
        "claimed_cap_holds": report.claimed_ok,
        "verified": report.ok,
    }
    bundle.curves = {"caps": rows}
    return bundle


def cmd_rademacher(run: _Run) -> ReportBundle:
    """Complexity bounds along a short training trajectory."""
    n_steps = run.cfg.get("rademacher", {}).get("n_steps", 1)
    steps = []
    cur = run.weights
    for _ in range(n_steps):
        trace = backprop_step(run.spec, cur, run.xs, run.ys, run.eta)
        steps.append(trace.step)
        cur = apply_step(cur, trace.step)
    bound = training_rademacher_bound(
        run.spec, run.weights, steps, len(run.xs), eps=run.eps, chi=run.chi,
        delta=run.delta, policy=run.policy)
    rows = []
    cur = run.weights
    for t, step in enumerate(steps):
        asym = rademacher_asymptote(run.spec, cur, step, len(run.xs),
                                    eps=run.eps, chi=run.chi,
                                    delta=run.delta, policy=run.policy)
        rows.append({"step": t, "bound": float(bound.per_step[t]),
                     "asymptote": float(asym)})
        cur = apply_step(cur, step)
    bundle = ReportBundle(command="rademacher")
    bundle.results = {"n_steps": n_steps, "n_samples": len(run.xs),
                      "total_bound": bound.total}
    bundle.curves = {"per_step": rows}
    return bundle


def cmd_sweep(run: _Run) -> ReportBundle:
    """One-parameter sweep emitting a plot-ready table."""
    sweep = run.cfg["sweep"] if "sweep" in run.cfg else None
    if sweep is None:
        raise ConfigError("the sweep command requires a 'sweep' config block")
    param = sweep["parameter"]
    values = sweep["values"]
    rows = []
    if param == "step_ratio":
        for x in values:
            if not (0.0 <= x <= 1.0):
                raise DomainError(
                    f"step ratio {x!r} outside [0, 1]", quantity="step_ratio")
            rows.append({"step_ratio": float(x),
                         "lam_prime": float((1.0 - x ** 2) ** 2)})
    elif param == "eta":
        step = coupled_synthetic_step(
            run.spec, run.rng, sweep.get("step_scale", 1e-3), chi=run.chi,
            delta=run.delta)
        for eta in values:
            canonical = canonical_construct(
                run.spec, run.weights, step, eps=run.eps, chi=run.chi,
                delta=run.delta, eta=eta, policy=run.policy)
            rows.append({"eta": float(eta), "nu": canonical.constants.nu,
                         "lam": canonical.lam})
    elif param == "n_samples":
        # One fixed step across all sample counts, so the table isolates
        # the 1/sqrt(N) dependence of the bound itself.
        step = backprop_step(run.spec, run.weights, run.xs, run.ys,
                             run.eta).step
        for v in values:
            n = int(v)
            bound = rademacher_step_bound(
                run.spec, run.weights, step, n, eps=run.eps, chi=run.chi,
                delta=run.delta, policy=run.policy)
            asym = rademacher_asymptote(
                run.spec, run.weights, step, n, eps=run.eps, chi=run.chi,
                delta=run.delta, policy=run.policy)
            rows.append({"n_samples": n, "bound": float(bound),
                         "asymptote": float(asym)})
    else:  # width
        alphas = run.spec.alphas
        a0 = alphas[0] if len(alphas) >= 2 else 1.0
        a1 = alphas[1] if len(alphas) >= 2 else 1.0
        for v in values:
            rep = two_layer_tanh_example(
                int(v), len(run.xs), sweep.get("loss_lipschitz", 1.0), a0,
                a1, sweep.get("s", 0.5), sweep.get("n_steps", 1),
                sweep.get("w1_frob", 1.0), eps=run.eps, chi=run.chi,
                delta=run.delta, policy=run.policy)
            rows.append({"width": int(v), "headline": rep.headline,
                         "exact_total": rep.exact_total,
                         "cap_b1_sq": rep.b1_sq, "eta": rep.eta})
    bundle = ReportBundle(command="sweep")
    bundle.results = {"parameter": param, "n_values": len(values)}
    bundle.curves = {param: rows}
    return bundle


_COMMANDS = {
    "train-step": cmd_train_step,
    "verify-equivalence": cmd_verify_equivalence,
    "kernel": cmd_kernel,
    "canonical": cmd_canonical,
    "rademacher": cmd_rademacher,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _csv_table(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if rows:
        header = list(rows[0].keys())
        writer.writerow(header)
        for row in rows:
            writer.writerow([row[k] for k in header])
    return buf.getvalue()


def _results_csv(results: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(results.keys())
    writer.writerow(keys)
    writer.writerow([results[k] for k in keys])
    return buf.getvalue()


def _base_path(out: str) -> str:
    root, ext = os.path.splitext(out)
    return root if ext.lower() in (".json", ".csv") else out


def _render_figures(base: str, curves: dict) -> list[str]:
    """Render one PNG per curve table next to the tabular output."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for name, rows in curves.items():
        if not rows:
            continue
        path = f"{base}_{name}.png"
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        if name == "gram":
            size = int(math.isqrt(len(rows)))
            mat = np.zeros((size, size))
            for row in rows:
                mat[int(row["row"]), int(row["col"])] = row["value"]
            im = ax.imshow(mat, cmap="viridis")
            fig.colorbar(im, ax=ax, label="kernel value")
            ax.set_xlabel("column")
            ax.set_ylabel("row")
        else:
            cols = [k for k in rows[0]
                    if isinstance(rows[0][k], (int, float))]
            x_key, y_keys = cols[0], cols[1:]
            xs = [row[x_key] for row in rows]
            for key in y_keys:
                ax.plot(xs, [row[key] for row in rows], marker="o",
                        label=key)
            ax.set_xlabel(x_key)
            ax.grid(True, alpha=0.3)
            if y_keys:
                ax.legend()
        ax.set_title(name)
        fig.tight_layout()
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written


def _emit(bundle: ReportBundle, out: str | None, fmt: str,
          figures: bool) -> None:
    payload = bundle.to_dict()
    if out is None:
        if fmt == "json":
            sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2))
            sys.stdout.write("\n")
        else:
            sys.stdout.write(_results_csv(payload["results"]))
            for name, rows in payload["curves"].items():
                sys.stdout.write(f"# curve {name}\n")
                sys.stdout.write(_csv_table(rows))
        return
    base = _base_path(out)
    os.makedirs(os.path.dirname(base) or ".", exist_ok=True)
    if fmt == "json":
        with open(f"{base}.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
        logger.info("wrote %s.json", base)
    else:
        with open(f"{base}.csv", "w", encoding="utf-8") as fh:
            fh.write(_results_csv(payload["results"]))
        logger.info("wrote %s.csv", base)
    for name, rows in payload["curves"].items():
        with open(f"{base}_{name}.csv", "w", encoding="utf-8") as fh:
            fh.write(_csv_table(rows))
        logger.info("wrote %s_%s.csv", base, name)
    if figures:
        for path in _render_figures(base, payload["curves"]):
            logger.info("wrote %s", path)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rkbsnet",
        description="Feature-geometry analyses for gradient steps on "
                    "scaled networks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="path to a JSON config file")
    common.add_argument("--out", default=None,
                        help="output base path (writes <base>.json or "
                             "<base>.csv plus per-curve tables and figures)")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="report format (default: json)")
    common.add_argument("--no-figures", action="store_true",
                        help="skip figure rendering")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "train-step": "run one gradient step and report magnitudes",
        "verify-equivalence": "check the increment/pairing identity",
        "kernel": "build the step-side kernel Gram and check PSD",
        "canonical": "construct and verify canonical scale factors",
        "rademacher": "complexity bounds along a trajectory",
        "sweep": "one-parameter sweep with plot-ready tables",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv: list[str] | None = None) -> int:
    """CLI entry point; returns the process exit code."""
    level = os.environ.get("RKBSNET_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        run = _setup(cfg, args.seed)
        bundle = _COMMANDS[args.command](run)
        bundle.provenance = {
            "command": args.command,
            "config_sha256": _config_sha256(cfg),
            "seed": run.seed,
            "package_version": __version__,
        }
        _emit(bundle, args.out, args.format, not args.no_figures
              and args.out is not None)
    except ConfigError as exc:
        logger.error("%s", exc)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RkbsnetError as exc:
        logger.error("%s", exc)
        print(f"analysis failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

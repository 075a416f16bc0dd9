"""Command-line front end: simulate, field, verify, compare.

Exit codes: 0 success, 1 verification failure, 2 bad input, 3 runtime
singularity (a partial trajectory is still written when one exists).
Numeric values are parsed as decimal doubles and angles are radians.
Identical configurations produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bloch import field_grid
from .errors import DiracflowError, DomainError
from .integrate import IntegratorConfig, compare_flows, integrate
from .models import ModelId, constraints_for
from .phase_space import EnergySpectrum, PhasePoint
from .verify import SELECTORS, run_checks


def _float_list(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise DomainError(f"cannot parse float list {text!r}") from exc


def _parse_fix(text: str) -> dict:
    fixed = {}
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise DomainError(f"bad fixed-angle spec {item!r}; use name=value")
        key, val = item.split("=", 1)
        key = key.strip()
        if key not in ("theta2", "phi2"):
            raise DomainError(f"unknown fixed angle {key!r}")
        fixed[key] = float(val)
    return fixed


def _parse_resolution(text: str):
    for sep in ("x", "X"):
        if sep in text:
            a, b = text.split(sep, 1)
            return int(a), int(b)
    raise DomainError(f"bad resolution {text!r}; use ROWSxCOLS, e.g. 32x64")


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--model", help="model name")
    sub.add_argument("--energies", help="comma-separated energy levels")
    sub.add_argument("--omega", help="comma-separated raw frequencies")
    sub.add_argument("--q0", help="initial angles, comma-separated")
    sub.add_argument("--p0", help="initial actions, comma-separated")
    sub.add_argument("--t-end", type=float, dest="t_end")
    sub.add_argument("--dt", type=float, help="step (rk4) or tolerance (rk45)")
    sub.add_argument("--scheme", choices=("rk4", "rk45"))
    sub.add_argument("--projection", choices=("off", "every_step", "threshold"))
    sub.add_argument("--projection-threshold", type=float, dest="projection_threshold")
    sub.add_argument("--drift-tol", type=float, dest="drift_tol")
    sub.add_argument("--out", help="output file path")
    sub.add_argument("--format", choices=("csv", "json"), dest="fmt")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracflow",
        description="Constrained unitary motion in action-angle coordinates",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="integrate the reduced flow")
    _add_common(sim)

    fld = subs.add_parser("field", help="export a spherical field snapshot")
    _add_common(fld)
    fld.add_argument("--fix", help="fixed angles, e.g. theta2=1.5707963")
    fld.add_argument("--resolution", help="grid ROWSxCOLS, e.g. 32x64")

    ver = subs.add_parser("verify", help="run the self-verification suites")
    ver.add_argument("selector", help="model name or 'all'")

    cmp_ = subs.add_parser("compare", help="constrained vs unitary divergence")
    _add_common(cmp_)

    return parser


def _resolve(args, keys) -> dict:
    """Merge JSON config (if any) with explicit flags; flags win."""
    resolved = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise DomainError("config file must hold a JSON object")
        for key, val in loaded.items():
            if key not in keys:
                raise DomainError(f"unknown config key {key!r}")
            resolved[key] = val
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            resolved[key] = val
    return resolved


_RUN_KEYS = ("model", "energies", "omega", "q0", "p0", "t_end", "dt", "scheme",
             "projection", "projection_threshold", "drift_tol", "out", "fmt",
             "fix", "resolution")


def _spectrum_from(resolved) -> EnergySpectrum:
    energies = resolved.get("energies")
    omega = resolved.get("omega")
    if (energies is None) == (omega is None):
        raise DomainError("provide exactly one of --energies or --omega")
    if energies is not None:
        vals = _float_list(energies) if isinstance(energies, str) else list(energies)
        return EnergySpectrum.from_levels(vals)
    vals = _float_list(omega) if isinstance(omega, str) else list(omega)
    return EnergySpectrum.from_frequencies(vals)


def _state_from(resolved, n: int) -> PhasePoint:
    if "q0" not in resolved or "p0" not in resolved:
        raise DomainError("initial state needs --q0 and --p0")
    q0 = _float_list(resolved["q0"]) if isinstance(resolved["q0"], str) \
        else list(resolved["q0"])
    p0 = _float_list(resolved["p0"]) if isinstance(resolved["p0"], str) \
        else list(resolved["p0"])
    if len(q0) != n - 1 or len(p0) != n - 1:
        raise DomainError(f"q0 and p0 must have length {n - 1}")
    return PhasePoint(np.asarray(q0), np.asarray(p0))


def _integrator_config(resolved) -> IntegratorConfig:
    kwargs = {}
    for key, default in (
        ("scheme", "rk4"), ("dt", 1e-3), ("t_end", 1.0), ("projection", "off"),
        ("projection_threshold", 1e-12), ("drift_tol", 1e-6),
    ):
        kwargs[key] = resolved.get(key, default)
    return IntegratorConfig(**kwargs)


def _model_from(resolved) -> ModelId:
    if "model" not in resolved:
        raise DomainError("--model is required")
    return ModelId.from_string(resolved["model"])


def _meta(resolved) -> dict:
    return {k: resolved[k] for k in sorted(resolved) if k != "out"}


def cmd_simulate(args) -> int:
    resolved = _resolve(args, _RUN_KEYS)
    model = _model_from(resolved)
    spec = _spectrum_from(resolved)
    if model.n_levels is not None and spec.n != model.n_levels:
        raise DomainError(
            f"model {model.value} needs n={model.n_levels}, spectrum has {spec.n}"
        )
    pt0 = _state_from(resolved, spec.n)
    cfg = _integrator_config(resolved)
    cs = constraints_for(model, n_levels=spec.n)
    res0 = cs.residual(pt0)
    if res0 > cfg.drift_tol:
        print(f"initial point off-surface: residual {res0:.6e} exceeds "
              f"drift tolerance {cfg.drift_tol:.1e}", file=sys.stderr)
        return 2

    traj = integrate(cs, spec, pt0, cfg)

    out = resolved.get("out")
    fmt = resolved.get("fmt", "csv")
    if out:
        if fmt == "csv":
            traj.write_csv(out, meta=_meta(resolved))
        else:
            traj.write_json(out, meta=_meta(resolved))

    p_drift = float(np.max(np.abs(traj.ps - traj.ps[0])))
    summary = {
        "status": traj.status,
        "t_final": float(traj.times[-1]),
        "final_residual": float(traj.residuals[-1]),
        "max_residual": float(traj.residuals.max()),
        "energy_drift": float(np.max(np.abs(traj.energies - traj.energies[0]))),
        "quasi_unitary": bool(p_drift < 1e-8),
    }
    print(json.dumps(summary, sort_keys=True))
    if traj.status != "completed":
        print(f"run truncated: {traj.status_detail}", file=sys.stderr)
        return 3
    return 0


def cmd_field(args) -> int:
    resolved = _resolve(args, _RUN_KEYS)
    model = _model_from(resolved)
    if model not in (ModelId.TWO_SPIN_PRODUCT, ModelId.TWO_SPIN_DISENTANGLED):
        raise DomainError("field snapshots exist for the two-spin models only")
    spec = _spectrum_from(resolved)
    fix = resolved.get("fix")
    if fix is None:
        raise DomainError("--fix is required, e.g. --fix theta2=1.5707963")
    fixed = _parse_fix(fix) if isinstance(fix, str) else dict(fix)
    resolution = resolved.get("resolution", "32x64")
    res = _parse_resolution(resolution) if isinstance(resolution, str) \
        else tuple(resolution)

    grid = field_grid(model, spec, fixed, res)

    out = resolved.get("out")
    fmt = resolved.get("fmt", "csv")
    if out:
        if fmt == "csv":
            grid.write_csv(out, meta=_meta(resolved))
        else:
            grid.write_json(out, meta=_meta(resolved))
    print(json.dumps({
        "model": model.value,
        "samples": int(np.prod(grid.flags.shape)),
        "flagged": int(grid.flags.sum()),
    }, sort_keys=True))
    return 0


def cmd_verify(args) -> int:
    if args.selector not in SELECTORS:
        print(f"unknown selector {args.selector!r}; choose from "
              + ", ".join(SELECTORS), file=sys.stderr)
        return 2
    results = run_checks(args.selector)
    for result in results:
        print(json.dumps(result.to_json_dict(), sort_keys=True))
    failed = [r for r in results if not r.passed]
    print(f"# {len(results) - len(failed)}/{len(results)} checks passed",
          file=sys.stderr)
    return 0 if not failed else 1


def cmd_compare(args) -> int:
    resolved = _resolve(args, _RUN_KEYS)
    model = _model_from(resolved)
    spec = _spectrum_from(resolved)
    if model.n_levels is not None and spec.n != model.n_levels:
        raise DomainError(
            f"model {model.value} needs n={model.n_levels}, spectrum has {spec.n}"
        )
    pt0 = _state_from(resolved, spec.n)
    cfg = _integrator_config(resolved)
    cs = constraints_for(model, n_levels=spec.n)
    res0 = cs.residual(pt0)
    if res0 > cfg.drift_tol:
        print(f"initial point off-surface: residual {res0:.6e}", file=sys.stderr)
        return 2

    report = compare_flows(model, spec, pt0, cfg)
    doc = report.to_json_dict()
    doc.pop("times")
    doc.pop("divergence")
    print(json.dumps(doc, sort_keys=True))
    out = resolved.get("out")
    if out:
        with open(out, "w", newline="\n") as fh:
            full = report.to_json_dict()
            full["config"] = _meta(resolved)
            json.dump(full, fh, sort_keys=True, indent=1)
            fh.write("\n")
    return 0 if report.status == "completed" else 3


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "field": cmd_field,
        "verify": cmd_verify,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except DiracflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

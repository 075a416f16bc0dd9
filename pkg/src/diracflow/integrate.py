"""Time integration of the reduced flow with drift monitoring and projection.

The integrator works on flattened coordinates, evaluates the constrained
velocity through the reduction engine, and records diagnostics (energy,
per-constraint residuals, multipliers) at every accepted step.  Mid-flight
singularities truncate the trajectory with a status instead of raising, so a
partial run can still be serialized; precondition violations at the initial
point raise immediately.

Fixed-step classic RK4 is the default: the shipped systems are small, smooth
and non-stiff.  An embedded 4(5) adaptive scheme is available for the
near-singular regions of the disentangled model, where ``dt`` is read as an
error tolerance instead of a step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .dirac import ConstraintSet, _reduction
from .errors import (
    ChartSingularity,
    DomainError,
    ProjectionFailed,
    SingularOmega,
)
from .models import ModelId, constraints_for, spectrum_condition
from .phase_space import EnergySpectrum, PhasePoint, unitary_flow

PROJECTION_MODES = ("off", "every_step", "threshold")
SCHEMES = ("rk4", "rk45")


@dataclass(frozen=True)
class IntegratorConfig:
    """Stepping, horizon, and constraint-maintenance policy.

    ``dt`` is the fixed step for rk4 and the local error tolerance for rk45.
    With ``projection == "off"`` residual growth is reported but never
    corrected, and the run truncates with status ``drift_exceeded`` once the
    residual passes 1000 * drift_tol.  ``threshold`` projects only when the
    residual exceeds ``projection_threshold``; ``every_step`` always does.
    """

    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    projection: str = "off"
    projection_threshold: float = 1e-12
    drift_tol: float = 1e-6
    singularity_floor: float = 1e-12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if self.projection not in PROJECTION_MODES:
            raise DomainError(f"unknown projection mode {self.projection!r}")
        if not (self.dt > 0.0):
            raise DomainError("dt must be positive")
        if self.t_end < 0.0:
            raise DomainError("t_end must be non-negative")
        if not (self.drift_tol > 0.0):
            raise DomainError("drift_tol must be positive")


@dataclass(frozen=True)
class Trajectory:
    """Time series of the reduced flow with per-step diagnostics."""

    times: np.ndarray             # (T,)
    qs: np.ndarray                # (T, n-1)
    ps: np.ndarray                # (T, n-1)
    energies: np.ndarray          # (T,)
    constraint_values: np.ndarray  # (T, N) wrapped residual values
    multipliers: np.ndarray       # (T, N)
    status: str = "completed"
    status_detail: str = ""
    labels: tuple = field(default=())

    def __post_init__(self):
        t = len(self.times)
        for name in ("qs", "ps", "energies", "constraint_values", "multipliers"):
            if len(getattr(self, name)) != t:
                raise DomainError(f"trajectory field {name} length mismatch")
        if t > 1 and not np.all(np.diff(self.times) > 0.0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def n_levels(self) -> int:
        return self.qs.shape[1] + 1

    @property
    def residuals(self) -> np.ndarray:
        """Max absolute constraint residual per step."""
        if self.constraint_values.shape[1] == 0:
            return np.zeros(len(self.times))
        return np.max(np.abs(self.constraint_values), axis=1)

    @property
    def points(self) -> list:
        return [PhasePoint(q, p, _validate=False) for q, p in zip(self.qs, self.ps)]

    def csv_header(self) -> str:
        m = self.qs.shape[1]
        cols = ["t"]
        cols += [f"q{i + 1}" for i in range(m)]
        cols += [f"p{i + 1}" for i in range(m)]
        cols.append("H")
        cols += [f"phi_{a + 1}" for a in range(self.constraint_values.shape[1])]
        return ",".join(cols)

    def write_csv(self, path, meta: dict | None = None) -> None:
        """Comma-separated, '.' decimals, LF endings; metadata as # comments."""
        lines = []
        if meta:
            lines.append("# config: " + json.dumps(meta, sort_keys=True))
        lines.append(f"# status: {self.status}")
        lines.append(self.csv_header())
        for k in range(len(self.times)):
            row = [self.times[k], *self.qs[k], *self.ps[k], self.energies[k],
                   *self.constraint_values[k]]
            lines.append(",".join(repr(float(v)) for v in row))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json_dict(self, meta: dict | None = None) -> dict:
        doc = {
            "status": self.status,
            "status_detail": self.status_detail,
            "labels": list(self.labels),
            "times": self.times.tolist(),
            "q": self.qs.tolist(),
            "p": self.ps.tolist(),
            "H": self.energies.tolist(),
            "phi": self.constraint_values.tolist(),
            "multipliers": self.multipliers.tolist(),
        }
        if meta is not None:
            doc["config"] = meta
        return doc

    def write_json(self, path, meta: dict | None = None) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(meta), fh, sort_keys=True, indent=1)
            fh.write("\n")


def _rk4_step(f, x, h):
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


# Dormand-Prince 5(4) coefficients.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
          -92097 / 339200, 187 / 2100, 1 / 40)


def _dp_step(f, x, h):
    """One Dormand-Prince step: returns (5th-order result, error estimate)."""
    ks = [f(x)]
    for row in _DP_A[1:]:
        xi = x + h * sum(a * k for a, k in zip(row, ks))
        ks.append(f(xi))
    x5 = x + h * sum(b * k for b, k in zip(_DP_B5, ks))
    x4 = x + h * sum(b * k for b, k in zip(_DP_B4, ks))
    return x5, float(np.max(np.abs(x5 - x4)))


def resolve_constraints(
    model: Union[ModelId, ConstraintSet], spec: EnergySpectrum
) -> ConstraintSet:
    """Accept either a model tag or an explicit constraint set."""
    if isinstance(model, ConstraintSet):
        cs = model
    else:
        cs = constraints_for(model, n_levels=spec.n)
    if cs.n_levels != spec.n:
        raise DomainError(
            f"constraints are for n={cs.n_levels}, spectrum has n={spec.n}"
        )
    return cs


def integrate(
    model: Union[ModelId, ConstraintSet],
    spec: EnergySpectrum,
    pt0: PhasePoint,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Integrate the reduced flow from ``pt0`` up to ``cfg.t_end``.

    The initial point must satisfy the constraints within ``cfg.drift_tol``
    (DomainError otherwise) and the reduction must be regular there.
    Mid-flight failures truncate: the returned trajectory carries status
    ``singular_omega``, ``chart_singularity``, ``projection_failed`` or
    ``drift_exceeded`` together with a human-readable detail.
    """
    cs = resolve_constraints(model, spec)
    if pt0.n != spec.n:
        raise DomainError("initial point dimension mismatch")
    res0 = cs.residual(pt0)
    if res0 > cfg.drift_tol:
        raise DomainError(
            f"initial point off-surface: residual {res0:.3e} > drift_tol "
            f"{cfg.drift_tol:.1e}"
        )

    freqs = spec.frequencies
    e_n = spec.e_n
    m = spec.n - 1

    def velocity(x):
        return _reduction(cs, x, freqs)[0]

    times = [0.0]
    states = [pt0.to_array()]
    lams = [_reduction(cs, pt0.to_array(), freqs)[1]]
    values = [cs.value_fn(pt0) if cs.size else np.zeros(0)]
    status, detail = "completed", ""

    def record(t, x):
        pt = PhasePoint.from_array(x, validate=False)
        times.append(t)
        states.append(x)
        lams.append(_reduction(cs, x, freqs)[1])
        values.append(cs.value_fn(pt) if cs.size else np.zeros(0))

    def maybe_project(x):
        if cs.size == 0 or cfg.projection == "off":
            return x
        pt = PhasePoint.from_array(x, validate=False)
        res = cs.residual(pt)
        if cfg.projection == "threshold" and res <= cfg.projection_threshold:
            return x
        tol = max(cfg.projection_threshold / 10.0, 1e-14)
        return project_onto_surface(cs, pt, tol).to_array()

    x = states[0]
    t = 0.0
    try:
        if cfg.scheme == "rk4":
            n_steps = int(round(cfg.t_end / cfg.dt))
            n_steps = max(n_steps, 0)
            for k in range(n_steps):
                x = maybe_project(_rk4_step(velocity, x, cfg.dt))
                t = (k + 1) * cfg.dt
                record(t, x)
                stop, status, detail = _post_step_checks(
                    cs, x, m, cfg, values[-1]
                )
                if stop:
                    break
        else:
            tol = cfg.dt
            h = min(cfg.t_end, 0.1) or 0.1
            while t < cfg.t_end - 1e-14:
                h = min(h, cfg.t_end - t)
                x_new, err = _dp_step(velocity, x, h)
                scale = tol * (1.0 + float(np.max(np.abs(x))))
                if err <= scale:
                    x = maybe_project(x_new)
                    t = t + h
                    record(t, x)
                    stop, status, detail = _post_step_checks(
                        cs, x, m, cfg, values[-1]
                    )
                    if stop:
                        break
                factor = 0.9 * (scale / err) ** 0.2 if err > 0.0 else 5.0
                h *= min(5.0, max(0.2, factor))
                if h < 1e-14:
                    raise DomainError("adaptive step size underflow")
    except (SingularOmega, ChartSingularity, ProjectionFailed) as exc:
        status = {
            SingularOmega: "singular_omega",
            ChartSingularity: "chart_singularity",
            ProjectionFailed: "projection_failed",
        }[type(exc)]
        detail = str(exc)

    return Trajectory(
        times=np.asarray(times),
        qs=np.asarray(states)[:, :m],
        ps=np.asarray(states)[:, m:],
        energies=e_n + np.asarray(states)[:, m:] @ freqs,
        constraint_values=np.asarray(values).reshape(len(times), cs.size),
        multipliers=np.asarray(lams).reshape(len(times), cs.size),
        status=status,
        status_detail=detail,
        labels=cs.labels,
    )


def _post_step_checks(cs, x, m, cfg, value_row):
    """Floor and drift policy after an accepted step."""
    p_last = 1.0 - float(np.sum(x[m:]))
    if p_last < cfg.singularity_floor:
        return True, "chart_singularity", f"p_n = {p_last!r} reached the floor"
    if cs.size and cfg.projection == "off":
        res = float(np.max(np.abs(value_row)))
        if res > 1000.0 * cfg.drift_tol:
            return True, "drift_exceeded", (
                f"residual {res:.3e} > 1000 * drift_tol"
            )
    return False, "completed", ""


def project_onto_surface(
    cs: ConstraintSet, pt: PhasePoint, tol: float, max_iter: int = 20
) -> PhasePoint:
    """Newton-project onto the constraint surface along the gradient span.

    Each step solves (J J^T) d = phi and moves by -J^T d, the minimal-norm
    correction in the coordinate metric.  An on-surface input is returned
    unchanged.

    Raises:
        ProjectionFailed: after ``max_iter`` iterations, or when the
            constraint Jacobian is rank-deficient along the way.
    """
    if cs.size == 0:
        return pt
    x = pt.to_array()
    for _ in range(max_iter):
        cur = PhasePoint.from_array(x, validate=False)
        phi = cs.value_fn(cur)
        if float(np.max(np.abs(phi))) < tol:
            return PhasePoint.from_array(x)
        J = cs.grad_fn(cur)
        JJt = J @ J.T
        cond = np.linalg.cond(JJt)
        if not np.isfinite(cond) or cond > 1e12:
            raise ProjectionFailed(
                f"rank-deficient constraint Jacobian (cond {cond:.3e})"
            )
        x = x - J.T @ np.linalg.solve(JJt, phi)
    raise ProjectionFailed(f"no convergence in {max_iter} Newton iterations")


@dataclass(frozen=True)
class FlowComparison:
    """Constrained-versus-unitary divergence report."""

    times: np.ndarray
    divergence: np.ndarray        # sup-norm distance at each time
    max_divergence: float
    condition_predicts_unitary: bool
    status: str

    @property
    def consistent(self) -> bool:
        """True when the observed divergence matches the prediction."""
        observed_zero = self.max_divergence < 1e-10
        return observed_zero == self.condition_predicts_unitary

    def to_json_dict(self) -> dict:
        return {
            "max_divergence": float(self.max_divergence),
            "condition_predicts_unitary": bool(self.condition_predicts_unitary),
            "consistent": bool(self.consistent),
            "status": self.status,
            "times": self.times.tolist(),
            "divergence": self.divergence.tolist(),
        }


def compare_flows(
    model: ModelId,
    spec: EnergySpectrum,
    pt0: PhasePoint,
    cfg: IntegratorConfig,
) -> FlowComparison:
    """Run constrained and unconstrained flows from the same start.

    Divergence is measured in raw (unwrapped) coordinates on the constrained
    run's time grid; the unconstrained flow is evaluated exactly.
    """
    traj = integrate(model, spec, pt0, cfg)
    div = np.empty(len(traj.times))
    for k, t in enumerate(traj.times):
        free = unitary_flow(pt0, spec, float(t))
        div[k] = max(
            float(np.max(np.abs(traj.qs[k] - free.q))),
            float(np.max(np.abs(traj.ps[k] - free.p))),
        )
    predicted = spectrum_condition(spec, model) if isinstance(model, ModelId) else False
    return FlowComparison(
        times=traj.times,
        divergence=div,
        max_divergence=float(div.max()) if len(div) else 0.0,
        condition_predicts_unitary=predicted,
        status=traj.status,
    )

"""Bloch-sphere coordinate maps and vector-field snapshots.

The two-spin models visualize as coupled trajectories on a pair of spheres.
This module maps phase-space points to sphere angles, evaluates the
spherical-form equations of motion, and samples them on rectangular
(theta_1, phi_1) grids suitable for regenerating the reference field plots.
The artifact emits grid data, not images.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ChartSingularity, DimensionError, DomainError, PoleSingularity
from .models import ModelId, two_spin_product_constraints
from .phase_space import EnergySpectrum, PhasePoint, wrap_angle

POLE_EPS = 1e-12
CLAMP_SLACK = 1e-12


@dataclass(frozen=True)
class BlochPoint:
    """Spherical angles of a pair of Bloch vectors.

    theta in [0, pi], phi in (-pi, pi]; at a pole (sin theta = 0) the
    azimuth is chart-degenerate.
    """

    theta1: float
    phi1: float
    theta2: float
    phi2: float

    def __post_init__(self):
        for name in ("theta1", "theta2"):
            th = getattr(self, name)
            if not (-1e-12 <= th <= np.pi + 1e-12):
                raise DomainError(f"{name} = {th!r} outside [0, pi]")
            object.__setattr__(self, name, float(np.clip(th, 0.0, np.pi)))
        for name in ("phi1", "phi2"):
            object.__setattr__(self, name, float(wrap_angle(getattr(self, name))))

    @property
    def at_pole(self) -> tuple:
        """(sphere-1, sphere-2) pole flags where phi is degenerate."""
        return (np.sin(self.theta1) < POLE_EPS, np.sin(self.theta2) < POLE_EPS)


def _clamp01(value: float, what: str) -> float:
    if value < -CLAMP_SLACK or value > 1.0 + CLAMP_SLACK:
        raise DomainError(f"{what} = {value!r} outside [0, 1] beyond round-off")
    return float(np.clip(value, 0.0, 1.0))


def _clamp_pm1(value: float, what: str) -> float:
    if abs(value) > 1.0 + CLAMP_SLACK:
        raise DomainError(f"{what} = {value!r} outside [-1, 1] beyond round-off")
    return float(np.clip(value, -1.0, 1.0))


def phase_to_bloch_ex1(pt: PhasePoint) -> BlochPoint:
    """Sphere angles of an on-surface two-spin product point.

    theta_{1,2} = asin sqrt(p2 + p3 - 2 sqrt(p1 p4))
                  +- acos sqrt(p1 + p4 - sqrt(p1 p4))
    phi_{1,2}   = -(q1 +- acos((p3 - p2) / (2 sqrt(p1 p4)))) / 2

    with the '+' branch feeding sphere 1.  A raw negative theta names the
    same sphere point as (-theta, phi + pi); outputs are canonicalized that
    way and phis wrapped to (-pi, pi].

    Raises:
        DomainError: point off the product surface (residual > 1e-8), or an
            inverse-trig argument out of range beyond 1e-12 round-off.
        ChartSingularity: p1 p4 < 1e-12, where the azimuthal split is
            undefined.
    """
    if pt.n != 4:
        raise DimensionError("two-spin map needs an n=4 point")
    cs = two_spin_product_constraints()
    res = cs.residual(pt)
    if res > 1e-8:
        raise DomainError(f"point off the product surface: residual {res:.3e}")
    p1, p2, p3 = pt.p
    p4 = pt.p_last
    if p1 * p4 < 1e-12:
        raise ChartSingularity(f"p1*p4 = {p1 * p4!r}: azimuthal split undefined")
    root = np.sqrt(p1 * p4)
    s_part = np.arcsin(np.sqrt(_clamp01(p2 + p3 - 2.0 * root, "asin argument")))
    c_part = np.arccos(np.sqrt(_clamp01(p1 + p4 - root, "acos argument")))
    split = np.arccos(_clamp_pm1((p3 - p2) / (2.0 * root), "azimuthal argument"))
    q1 = pt.q[0]
    theta1, phi1 = s_part + c_part, -0.5 * (q1 + split)
    theta2, phi2 = s_part - c_part, -0.5 * (q1 - split)
    if theta1 < 0.0:
        theta1, phi1 = -theta1, phi1 + np.pi
    if theta2 < 0.0:
        theta2, phi2 = -theta2, phi2 + np.pi
    return BlochPoint(theta1, phi1, theta2, phi2)


def spherical_velocity_ex1(bp: BlochPoint, spec: EnergySpectrum):
    """Spherical equations of motion on the two-spin product surface.

    theta rates vanish identically (trajectories are latitude circles) and
    both azimuths rotate at the common rate

        -(w1 - w2 - w3)(sin^2(th1/2) + sin^2(th2/2))/2 - (w2 + w3)/2,

    manifestly symmetric under swapping the two spheres.  Globally defined.
    """
    if spec.n != 4:
        raise DimensionError("two-spin field needs n=4")
    w1, w2, w3 = spec.frequencies
    phi_rate = (
        -0.5 * (w1 - w2 - w3)
        * (np.sin(bp.theta1 / 2) ** 2 + np.sin(bp.theta2 / 2) ** 2)
        - 0.5 * (w2 + w3)
    )
    return np.zeros(2), np.array([phi_rate, phi_rate])


def spherical_velocity_ex3(
    bp: BlochPoint, spec: EnergySpectrum, at_pole: str = "raise"
):
    """Spherical-form field on the disentangled surface (reference form).

    Implements the published spherical display verbatim; at the reference
    parameters w = (0, 1/2, -5/2), theta2 = phi2 = pi/2 it reduces exactly to
    the snapshot formulas

        th1' = cos(phi1) (cos(th1)/2 - 3)
        ph1' = (9 cos(th1) - sin(phi1) cos^2(th1)/sin(th1)) / 4.

    The azimuthal components divide by sin(th1) sin(th2).

    Args:
        at_pole: "raise" raises PoleSingularity when either sphere sits at a
            pole; "nan" returns NaN azimuthal rates there instead (theta
            rates are always returned).
    """
    if spec.n != 4:
        raise DimensionError("disentangled field needs n=4")
    if at_pole not in ("raise", "nan"):
        raise DomainError("at_pole must be 'raise' or 'nan'")
    w1, w2, w3 = spec.frequencies
    th1, ph1, th2, ph2 = bp.theta1, bp.phi1, bp.theta2, bp.phi2
    d = ph1 - ph2
    s1, s2 = np.sin(th1), np.sin(th2)
    c1, c2 = np.cos(th1), np.cos(th2)
    theta_dots = np.array([
        np.sin(d) * s2 * ((w1 - w2) * c1 + w2 - w3),
        np.sin(d) * s1 * ((w2 - w1) * c2 - w2 + w3),
    ])
    if s1 < POLE_EPS or s2 < POLE_EPS:
        if at_pole == "raise":
            raise PoleSingularity("azimuthal rate undefined at a Bloch pole")
        return theta_dots, np.array([np.nan, np.nan])
    cross = np.cos(d) / (s1 * s2)
    phi_dots = np.array([
        0.5 * (-w1 + (w2 - w1 / 2) * c2 + (1.5 * w1 - w2 - 2 * w3) * c1
               + cross * (2 * (w3 - w2) * s1 ** 2 * c2
                          + (w1 - w2) * (c1 ** 2 - c2 ** 2))),
        0.5 * (-w1 + (w2 - w1 / 2) * c1 + (1.5 * w1 - w2 - 2 * w3) * c2
               + cross * (2 * (w3 - w2) * c1 * s2 ** 2
                          - (w1 - w2) * (c1 ** 2 - c2 ** 2))),
    ])
    return theta_dots, phi_dots


@dataclass(frozen=True)
class FieldGrid:
    """Vector-field snapshot on a rectangular (theta1, phi1) grid.

    ``flags`` marks samples whose azimuthal rate is chart-degenerate (pole
    rows); there phi1_dot is NaN and theta1_dot is still finite.
    """

    model: ModelId
    fixed: dict
    theta1: np.ndarray       # (n_theta,)
    phi1: np.ndarray         # (n_phi,)
    theta1_dot: np.ndarray   # (n_theta, n_phi)
    phi1_dot: np.ndarray     # (n_theta, n_phi)
    flags: np.ndarray        # bool (n_theta, n_phi)

    def write_csv(self, path, meta: dict | None = None) -> None:
        lines = []
        if meta:
            lines.append("# config: " + json.dumps(meta, sort_keys=True))
        lines.append("theta1,phi1,theta1_dot,phi1_dot,flag")
        for i, th in enumerate(self.theta1):
            for j, ph in enumerate(self.phi1):
                lines.append(",".join([
                    repr(float(th)), repr(float(ph)),
                    repr(float(self.theta1_dot[i, j])),
                    repr(float(self.phi1_dot[i, j])),
                    str(int(self.flags[i, j])),
                ]))
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_json_dict(self, meta: dict | None = None) -> dict:
        doc = {
            "model": self.model.value,
            "fixed": self.fixed,
            "theta1": self.theta1.tolist(),
            "phi1": self.phi1.tolist(),
            "theta1_dot": self.theta1_dot.tolist(),
            "phi1_dot": np.where(self.flags, None, self.phi1_dot).tolist(),
            "flags": self.flags.astype(int).tolist(),
        }
        if meta is not None:
            doc["config"] = meta
        return doc

    def write_json(self, path, meta: dict | None = None) -> None:
        with open(path, "w", newline="\n") as fh:
            json.dump(self.to_json_dict(meta), fh, sort_keys=True, indent=1)
            fh.write("\n")


def field_grid(
    model: ModelId,
    spec: EnergySpectrum,
    fixed: dict,
    resolution: tuple,
) -> FieldGrid:
    """Sample a model's spherical field on a uniform (theta1, phi1) grid.

    theta1 spans [0, pi] inclusive; phi1 spans (-pi, pi].  ``fixed`` supplies
    the second sphere: ``theta2`` for the product model (its field does not
    depend on the azimuths), ``theta2`` and ``phi2`` for the disentangled
    model.  Per-sample pole degeneracies are flagged, never fatal.
    """
    n_theta, n_phi = (int(r) for r in resolution)
    if n_theta < 2 or n_phi < 2:
        raise DomainError("resolution must be at least 2x2")
    if "theta2" not in fixed:
        raise DomainError("fixed angles must include theta2")
    theta2 = float(fixed["theta2"])
    if not (0.0 <= theta2 <= np.pi):
        raise DomainError("theta2 outside [0, pi]")
    theta1 = np.linspace(0.0, np.pi, n_theta)
    phi1 = -np.pi + 2.0 * np.pi * np.arange(1, n_phi + 1) / n_phi

    if model is ModelId.TWO_SPIN_PRODUCT:
        if spec.n != 4:
            raise DimensionError("two-spin field needs n=4")
        w1, w2, w3 = spec.frequencies
        rate = (-0.5 * (w1 - w2 - w3)
                * (np.sin(theta1 / 2) ** 2 + np.sin(theta2 / 2) ** 2)
                - 0.5 * (w2 + w3))
        th_dot = np.zeros((n_theta, n_phi))
        ph_dot = np.tile(rate[:, None], (1, n_phi))
        flags = np.zeros((n_theta, n_phi), dtype=bool)
        return FieldGrid(model, dict(fixed), theta1, phi1, th_dot, ph_dot, flags)

    if model is ModelId.TWO_SPIN_DISENTANGLED:
        if spec.n != 4:
            raise DimensionError("disentangled field needs n=4")
        if "phi2" not in fixed:
            raise DomainError("disentangled snapshot needs phi2 as well")
        if np.sin(theta2) < POLE_EPS:
            raise DomainError("theta2 at a pole: the snapshot is undefined")
        phi2 = float(fixed["phi2"])
        w1, w2, w3 = spec.frequencies
        th = theta1[:, None]
        ph = phi1[None, :]
        d = ph - phi2
        s1, c1 = np.sin(th), np.cos(th)
        s2, c2 = np.sin(theta2), np.cos(theta2)
        th_dot = np.broadcast_to(
            np.sin(d) * s2 * ((w1 - w2) * c1 + w2 - w3), (n_theta, n_phi)
        ).copy()
        flags = np.broadcast_to(s1 < POLE_EPS, (n_theta, n_phi)).copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = np.cos(d) / (s1 * s2)
            ph_dot = 0.5 * (
                -w1 + (w2 - w1 / 2) * c2 + (1.5 * w1 - w2 - 2 * w3) * c1
                + cross * (2 * (w3 - w2) * s1 ** 2 * c2
                           + (w1 - w2) * (c1 ** 2 - c2 ** 2))
            )
        ph_dot = np.where(flags, np.nan, np.broadcast_to(ph_dot, (n_theta, n_phi)))
        flags |= ~np.isfinite(ph_dot)
        return FieldGrid(model, dict(fixed), theta1, phi1, th_dot, ph_dot, flags)

    raise DomainError(f"no spherical field for model {model.value!r}")

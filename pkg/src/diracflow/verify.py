"""Self-verification suites: the package checks its own identities per model.

Each check evaluates a structural identity of the reduction (antisymmetry,
tangency, annihilation, closed-form agreement, quasi-unitarity, figure
reductions) and reports a measured value against a fixed threshold.  These
run from the command line via ``verify`` and are intentionally quick; the
full test suite covers the same ground at higher point counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bloch, dirac, models
from .errors import DiracflowError
from .integrate import IntegratorConfig, integrate
from .models import ModelId
from .phase_space import EnergySpectrum, PhasePoint, canonical_omega, unitary_flow

SELECTORS = ("all",) + tuple(m.value for m in ModelId)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": float(self.value),
            "threshold": float(self.threshold),
        }


def _below(name, value, threshold) -> CheckResult:
    return CheckResult(name, bool(value < threshold), float(value), float(threshold))


def _flag(name, ok) -> CheckResult:
    return CheckResult(name, bool(ok), float(not ok), 1.0)


def _engine_identity_checks(tag, cs, spec, pts) -> list:
    """Antisymmetry, route equivalence, tangency and annihilation at points."""
    asym = equiv = tang = annih = 0.0
    omega = canonical_omega(cs.n_levels)
    for pt in pts:
        struct = dirac.modified_structure(cs, pt, spec)
        asym = max(asym, float(np.max(np.abs(struct.omega_small
                                             + struct.omega_small.T))))
        asym = max(asym, float(np.max(np.abs(struct.lam + struct.lam.T))))
        grad_h = np.zeros(2 * (cs.n_levels - 1))
        grad_h[cs.n_levels - 1:] = spec.frequencies
        v13 = struct.omega_tilde @ grad_h
        v7 = omega @ (grad_h + cs.grad_fn(pt).T @ struct.multipliers)
        equiv = max(equiv, float(np.max(np.abs(v13 - v7))))
        tang = max(tang, float(np.max(np.abs(cs.grad_fn(pt) @ v13))))
        annih = max(annih, dirac.annihilation_check(cs, pt, spec))
    return [
        _below(f"{tag}: commutator/correction antisymmetry", asym, 1e-12),
        _below(f"{tag}: multiplier route equals modified-structure route",
               equiv, 1e-12),
        _below(f"{tag}: velocity tangent to the surface", tang, 1e-10),
        _below(f"{tag}: modified structure annihilates gradients", annih, 1e-10),
    ]


def _quasi_unitarity_checks(tag, model, spec, pt0) -> list:
    cfg = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=2.0, projection="off")
    traj = integrate(model, spec, pt0, cfg)
    p_drift = float(np.max(np.abs(traj.ps - traj.ps[0])))
    q_resid = 0.0
    for i in range(traj.qs.shape[1]):
        coef = np.polyfit(traj.times, traj.qs[:, i], 1)
        q_resid = max(q_resid, float(np.max(np.abs(
            traj.qs[:, i] - np.polyval(coef, traj.times)))))
    return [
        _flag(f"{tag}: trajectory completed", traj.status == "completed"),
        _below(f"{tag}: actions constant along the flow", p_drift, 1e-8),
        _below(f"{tag}: angles linear in time", q_resid, 1e-6),
    ]


def two_spin_product_checks(rng) -> list:
    tag = ModelId.TWO_SPIN_PRODUCT.value
    cs = models.two_spin_product_constraints()
    spec = EnergySpectrum.from_frequencies((0.0, 0.5, -2.5))
    out = []

    pts = [models.sample_interior_point(4, rng) for _ in range(200)]
    out.append(_below(
        f"{tag}: analytic gradients match finite differences",
        dirac.validate_gradients(cs, pts[:30]).worst, 1e-6))

    wm_err = lam_err = 0.0
    target = np.array([[0.0, 1.0], [-1.0, 0.0]])
    for pt in pts:
        wm_err = max(wm_err, float(np.max(np.abs(
            dirac.omega_matrix(cs, pt) - target))))
        p1, p2, p3 = pt.p
        p4 = pt.p_last
        A = np.array([
            [p1 - p4, p4 - p1, p4 - p1],
            [p1 + p3, -p1 - p3, -p1 - p3],
            [p1 + p2, -p1 - p2, -p1 - p2],
        ])
        lam_err = max(lam_err, float(np.max(np.abs(
            dirac.lambda_tensor(cs, pt)[:3, 3:] - A))))
    out.append(_below(f"{tag}: commutator matrix is the canonical 2x2 block",
                      wm_err, 1e-12))
    out.append(_below(f"{tag}: correction tensor matches its closed form",
                      lam_err, 1e-12))

    surf = [models.sample_two_spin_surface(rng) for _ in range(100)]
    cf_err = pdot = 0.0
    for pt in surf:
        v = dirac.constrained_velocity(cs, pt, spec)
        cf_err = max(cf_err, float(np.max(np.abs(
            v - models.closed_form_velocity_ex1(pt, spec)))))
        pdot = max(pdot, float(np.max(np.abs(v[3:]))))
    out.append(_below(f"{tag}: engine equals the closed-form velocity",
                      cf_err, 1e-10))
    out.append(_below(f"{tag}: action rates vanish to round-off", pdot, 1e-15))

    out += _engine_identity_checks(tag, cs, spec, surf[:50])
    out += _quasi_unitarity_checks(tag, ModelId.TWO_SPIN_PRODUCT, spec, surf[0])

    grid = bloch.field_grid(ModelId.TWO_SPIN_PRODUCT, spec,
                            {"theta2": np.pi / 2}, (32, 64))
    cap = 0.5 - np.sin(grid.theta1 / 2) ** 2
    out.append(_below(f"{tag}: snapshot latitude rate vanishes",
                      float(np.max(np.abs(grid.theta1_dot))), 1e-12))
    out.append(_below(
        f"{tag}: snapshot azimuth rate matches the reference formula",
        float(np.max(np.abs(grid.phi1_dot - cap[:, None]))), 1e-10))

    cond_err = 0.0
    for _ in range(20):
        e1, e2 = sorted(rng.uniform(0.5, 3.0, size=2), reverse=True)
        sym = EnergySpectrum.from_levels((e1, e2, -e2, -e1))
        pt = surf[int(rng.integers(len(surf)))]
        dv = dirac.constrained_velocity(cs, pt, sym) - np.concatenate(
            [sym.frequencies, np.zeros(3)])
        cond_err = max(cond_err, float(np.max(np.abs(dv))))
    out.append(_below(
        f"{tag}: compatible spectra reproduce unitary motion", cond_err, 1e-12))
    return out


def three_spin_product_checks(rng) -> list:
    tag = ModelId.THREE_SPIN_PRODUCT.value
    cs = models.three_spin_product_constraints()
    spec = EnergySpectrum.from_frequencies(
        (2.2, 0.9, -0.4, 1.7, 0.3, -1.1, 0.8))
    out = []
    pts = [models.sample_interior_point(8, rng) for _ in range(20)]
    out.append(_below(
        f"{tag}: analytic gradients match finite differences",
        dirac.validate_gradients(cs, pts).worst, 1e-6))
    surf = [models.sample_three_spin_surface(rng) for _ in range(60)]
    out += _engine_identity_checks(tag, cs, spec, surf[:40])
    out += _quasi_unitarity_checks(tag, ModelId.THREE_SPIN_PRODUCT, spec, surf[0])
    cond_err = 0.0
    for _ in range(20):
        freqs = models.product_frequencies_three(*rng.uniform(0.3, 2.0, size=3))
        sym = EnergySpectrum.from_frequencies(tuple(freqs))
        pt = surf[int(rng.integers(len(surf)))]
        dv = dirac.constrained_velocity(cs, pt, sym) - np.concatenate(
            [sym.frequencies, np.zeros(7)])
        cond_err = max(cond_err, float(np.max(np.abs(dv))))
    out.append(_below(
        f"{tag}: compatible spectra reproduce unitary motion", cond_err, 1e-12))
    return out


def disentangled_checks(rng) -> list:
    tag = ModelId.TWO_SPIN_DISENTANGLED.value
    cs = models.disentangled_constraints()
    spec = EnergySpectrum.from_frequencies((0.0, 0.5, -2.5))
    out = []
    surf = [models.sample_disentangled_surface(rng) for _ in range(100)]
    out.append(_below(
        f"{tag}: analytic gradients match finite differences",
        dirac.validate_gradients(cs, surf[:25]).worst, 1e-6))
    cf_err = 0.0
    for pt in surf:
        dv = (dirac.constrained_velocity(cs, pt, spec)
              - models.closed_form_velocity_ex3(pt, spec))
        cf_err = max(cf_err, float(np.max(np.abs(dv))))
    out.append(_below(f"{tag}: engine equals the closed-form velocity",
                      cf_err, 1e-8))
    out += _engine_identity_checks(tag, cs, spec, surf[:40])

    cfg = IntegratorConfig(scheme="rk4", dt=1e-3, t_end=1.0, projection="off")
    traj = integrate(ModelId.TWO_SPIN_DISENTANGLED, spec, surf[0], cfg)
    out.append(_flag(f"{tag}: trajectory completed", traj.status == "completed"))
    out.append(_below(f"{tag}: energy conserved along the flow",
                      float(np.max(np.abs(traj.energies - traj.energies[0]))),
                      1e-8))
    out.append(_below(f"{tag}: constraint drift stays small",
                      float(traj.residuals.max()), 1e-6))

    grid = bloch.field_grid(
        ModelId.TWO_SPIN_DISENTANGLED, spec,
        {"theta2": np.pi / 2, "phi2": np.pi / 2}, (32, 64))
    mask = np.sin(grid.theta1) > 0.05
    th = grid.theta1[mask][:, None]
    ph = grid.phi1[None, :]
    cap_th = np.cos(ph) * (0.5 * np.cos(th) - 3.0)
    cap_ph = 0.25 * (9.0 * np.cos(th) - np.sin(ph) * np.cos(th) ** 2 / np.sin(th))
    out.append(_below(
        f"{tag}: snapshot matches the reference latitude formula",
        float(np.max(np.abs(grid.theta1_dot[mask] - cap_th))), 1e-10))
    out.append(_below(
        f"{tag}: snapshot matches the reference azimuth formula",
        float(np.max(np.abs(grid.phi1_dot[mask] - cap_ph))), 1e-10))
    return out


def unconstrained_checks(rng) -> list:
    tag = ModelId.UNCONSTRAINED.value
    spec = EnergySpectrum.from_levels((2.0, 1.0, -1.0, -2.0))
    pt0 = models.sample_interior_point(4, rng)
    cfg = IntegratorConfig(scheme="rk4", dt=1e-2, t_end=1.0)
    traj = integrate(ModelId.UNCONSTRAINED, spec, pt0, cfg)
    exact = unitary_flow(pt0, spec, 1.0)
    err = max(
        float(np.max(np.abs(traj.qs[-1] - exact.q))),
        float(np.max(np.abs(traj.ps[-1] - exact.p))),
    )
    return [
        _below(f"{tag}: integrated flow equals the exact unitary flow",
               err, 1e-12),
    ]


_SUITES = {
    ModelId.TWO_SPIN_PRODUCT.value: two_spin_product_checks,
    ModelId.THREE_SPIN_PRODUCT.value: three_spin_product_checks,
    ModelId.TWO_SPIN_DISENTANGLED.value: disentangled_checks,
    ModelId.UNCONSTRAINED.value: unconstrained_checks,
}


def run_checks(selector: str, seed: int = 20240801) -> list:
    """Run one model's suite, or all of them.  Deterministic for a seed."""
    if selector != "all" and selector not in _SUITES:
        raise DiracflowError(
            f"unknown verification selector {selector!r}; choose from "
            + ", ".join(SELECTORS)
        )
    rng = np.random.default_rng(seed)
    results = []
    if selector == "all":
        for fn in _SUITES.values():
            results += fn(rng)
    else:
        results += _SUITES[selector](rng)
    return results

"""Generic Dirac reduction for algebraic constraints on the quantum phase space.

Given N smooth constraint functions Phi^a (N even) with analytic gradients,
the reduction computes the constraint commutator matrix

    w^{ab} = (grad Phi^a)^T  Omega  (grad Phi^b),

its inverse w_{ab}, the Lagrange multipliers that keep the motion tangent to
the surface, the antisymmetric correction tensor

    Lam = (Omega G^T) w_inv (Omega G^T)^T,

and the modified structure Omega~ = Omega + Lam.  The constrained velocity is
Omega~ grad H, equivalently the multiplier form Omega (grad H + G^T lam); the
two routes agree to round-off and the second is what the hot paths use.

Omega~ annihilates every constraint gradient, so the reduced flow is tangent
to the surface and conserves H exactly in continuous time.

All contractions are explicit small dense products; the shipped models have
at most 14 coordinates and 8 constraints, so correctness and auditability
beat any sparsity machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, GradientMismatch, SingularOmega
from .phase_space import (
    EnergySpectrum,
    PhasePoint,
    canonical_omega,
    hamiltonian_gradient,
    wrap_angle,
)

COND_LIMIT = 1e12


@dataclass(frozen=True)
class ConstraintSet:
    """An even-sized family of constraints on an n-level phase space.

    value_fn returns the N residuals (angle-valued rows already wrapped to
    (-pi, pi] so that 2*pi-equivalent configurations register as on-surface);
    grad_fn returns the (N, 2n-2) matrix of analytic gradients in canonical
    coordinate order.  Evaluators must be pure and reentrant.
    """

    n_levels: int
    size: int
    value_fn: Callable[[PhasePoint], np.ndarray]
    grad_fn: Callable[[PhasePoint], np.ndarray]
    labels: tuple = ()

    def __post_init__(self):
        if self.size % 2 != 0 or self.size < 0:
            raise DomainError("algebraic constraint sets have even size")
        if self.n_levels < 2:
            raise DomainError("need n >= 2")
        labels = tuple(self.labels) if self.labels else tuple(
            f"phi_{i + 1}" for i in range(self.size)
        )
        if len(labels) != self.size:
            raise DomainError("one label per constraint")
        object.__setattr__(self, "labels", labels)

    def residual(self, pt: PhasePoint) -> float:
        """Max absolute constraint residual at ``pt`` (0.0 when empty)."""
        if self.size == 0:
            return 0.0
        return float(np.max(np.abs(self.value_fn(pt))))


def empty_constraints(n_levels: int) -> ConstraintSet:
    """The trivial constraint set; reduction falls back to unitary flow."""
    m = n_levels - 1
    return ConstraintSet(
        n_levels=n_levels,
        size=0,
        value_fn=lambda pt: np.zeros(0),
        grad_fn=lambda pt: np.zeros((0, 2 * m)),
    )


@dataclass(frozen=True)
class ModifiedStructure:
    """All reduction tensors evaluated at one phase point."""

    omega_small: np.ndarray      # w^{ab}, (N, N)
    omega_small_inv: np.ndarray  # w_{ab}
    lam: np.ndarray              # correction tensor, (2n-2, 2n-2)
    omega_tilde: np.ndarray      # canonical Omega + lam
    multipliers: np.ndarray      # lagrange multipliers, (N,)


def omega_matrix(cs: ConstraintSet, pt: PhasePoint) -> np.ndarray:
    """Constraint commutator matrix w^{ab}; antisymmetric by construction."""
    G = cs.grad_fn(pt)
    omega = canonical_omega(cs.n_levels)
    return G @ omega @ G.T


def invert_omega(m: np.ndarray, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Invert w^{ab} by dense solve with an explicit conditioning bound.

    Raises:
        SingularOmega: if the condition number exceeds ``cond_limit``; this
            signals a degenerate constraint configuration where the
            reduction fails.
    """
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return m.reshape(0, 0)
    if not np.all(np.isfinite(m)):
        raise SingularOmega("non-finite commutator matrix")
    if m.shape == (2, 2) and m[0, 0] == 0.0 and m[1, 1] == 0.0 \
            and m[0, 1] == -m[1, 0]:
        # exact antisymmetric 2x2: condition number is 1 whenever s != 0
        s = m[0, 1]
        if s == 0.0:
            raise SingularOmega("commutator matrix is zero")
        return np.array([[0.0, -1.0 / s], [1.0 / s, 0.0]])
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularOmega(f"commutator matrix condition number {cond:.3e}")
    try:
        return np.linalg.solve(m, np.eye(m.shape[0]))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - cond catches first
        raise SingularOmega(str(exc)) from exc


def _reduction(cs, x: np.ndarray, freqs: np.ndarray):
    """Velocity and multipliers at flat coordinates x (internal hot path).

    Exploits the block form of Omega: u^T Omega v = u_q . v_p - u_p . v_q
    and Omega (a_q, a_p) = (a_p, -a_q), avoiding full-size matrix products.
    """
    m = cs.n_levels - 1
    if cs.size == 0:
        v = np.concatenate([freqs, np.zeros(m)])
        return v, np.zeros(0)
    pt = PhasePoint.from_array(x, validate=False)
    G = cs.grad_fn(pt)
    Gq, Gp = G[:, :m], G[:, m:]
    w = Gq @ Gp.T - Gp @ Gq.T
    w_inv = invert_omega(w)
    c = Gq @ freqs
    lam = w_inv.T @ c
    forced = G.T @ lam
    v = np.empty(2 * m)
    v[:m] = freqs + forced[m:]
    v[m:] = -forced[:m]
    return v, lam


def lagrange_multipliers(
    cs: ConstraintSet, pt: PhasePoint, spec: EnergySpectrum
) -> np.ndarray:
    """Multipliers lam_a = w_{ba} (grad Phi^b)^T Omega grad H.

    Substituted into the multiplier form of the equations of motion they make
    the velocity tangent to the surface.
    """
    _, lam = _reduction(cs, pt.to_array(), spec.frequencies)
    return lam


def lambda_tensor(cs: ConstraintSet, pt: PhasePoint) -> np.ndarray:
    """Antisymmetric correction tensor Lam = B w_inv B^T with B = Omega G^T."""
    G = cs.grad_fn(pt)
    omega = canonical_omega(cs.n_levels)
    if cs.size == 0:
        return np.zeros_like(omega)
    w_inv = invert_omega(G @ omega @ G.T)
    B = omega @ G.T
    return B @ w_inv @ B.T


def modified_structure(
    cs: ConstraintSet, pt: PhasePoint, spec: EnergySpectrum
) -> ModifiedStructure:
    """Bundle w, w_inv, Lam, Omega~ and the multipliers at one point."""
    omega = canonical_omega(cs.n_levels)
    G = cs.grad_fn(pt)
    if cs.size == 0:
        zero = np.zeros_like(omega)
        return ModifiedStructure(
            omega_small=np.zeros((0, 0)),
            omega_small_inv=np.zeros((0, 0)),
            lam=zero,
            omega_tilde=omega.copy(),
            multipliers=np.zeros(0),
        )
    w = G @ omega @ G.T
    w_inv = invert_omega(w)
    B = omega @ G.T
    lam_tensor_ = B @ w_inv @ B.T
    grad_h = hamiltonian_gradient(pt, spec)
    c = G @ (omega @ grad_h)
    multipliers = w_inv.T @ c
    return ModifiedStructure(
        omega_small=w,
        omega_small_inv=w_inv,
        lam=lam_tensor_,
        omega_tilde=omega + lam_tensor_,
        multipliers=multipliers,
    )


def constrained_velocity(
    cs: ConstraintSet, pt: PhasePoint, spec: EnergySpectrum
) -> np.ndarray:
    """The reduced velocity Omega~ grad H at ``pt``.

    With no constraints this is exactly the unitary Hamiltonian velocity.

    Raises:
        SingularOmega: propagated from the commutator inversion.
    """
    if pt.n != cs.n_levels or spec.n != cs.n_levels:
        raise DomainError("dimension mismatch between point, spectrum and constraints")
    v, _ = _reduction(cs, pt.to_array(), spec.frequencies)
    return v


def annihilation_check(
    cs: ConstraintSet, pt: PhasePoint, spec: EnergySpectrum
) -> float:
    """Max over constraints of |Omega~ grad Phi^a|_inf.

    The induced-structure identity guarantees this vanishes up to round-off;
    returns 0.0 for an empty constraint set.
    """
    if cs.size == 0:
        return 0.0
    struct = modified_structure(cs, pt, spec)
    G = cs.grad_fn(pt)
    return float(np.max(np.abs(struct.omega_tilde @ G.T)))


@dataclass(frozen=True)
class GradientReport:
    """Outcome of validating analytic gradients against finite differences."""

    max_rel_error: np.ndarray  # per constraint
    n_points: int
    labels: tuple = field(default=())

    @property
    def worst(self) -> float:
        return float(self.max_rel_error.max()) if self.max_rel_error.size else 0.0


def validate_gradients(
    cs: ConstraintSet,
    pts: Sequence[PhasePoint],
    h: float = 1e-6,
    tol: float = 1e-5,
) -> GradientReport:
    """Compare grad_fn against central finite differences of value_fn.

    Value differences are wrapped to (-pi, pi] before dividing, which is the
    identity for smooth rows at this h and keeps angle-valued rows finite
    across the branch cut.

    Raises:
        GradientMismatch: if any constraint's relative error exceeds ``tol``
            at any supplied point (a miscoded analytic gradient).
    """
    if cs.size == 0:
        return GradientReport(np.zeros(0), len(pts), cs.labels)
    worst = np.zeros(cs.size)
    for pt in pts:
        x = pt.to_array()
        analytic = cs.grad_fn(pt)
        fd = np.zeros_like(analytic)
        for a in range(len(x)):
            step = np.zeros(len(x))
            step[a] = h
            plus = cs.value_fn(PhasePoint.from_array(x + step, validate=False))
            minus = cs.value_fn(PhasePoint.from_array(x - step, validate=False))
            fd[:, a] = wrap_angle(plus - minus) / (2.0 * h)
        scale = np.maximum(1.0, np.max(np.abs(analytic), axis=1))
        err = np.max(np.abs(fd - analytic), axis=1) / scale
        worst = np.maximum(worst, err)
    report = GradientReport(worst, len(pts), cs.labels)
    if report.worst > tol:
        bad = int(np.argmax(worst))
        raise GradientMismatch(
            f"constraint {cs.labels[bad]}: relative gradient error "
            f"{worst[bad]:.3e} exceeds {tol:.1e}"
        )
    return report

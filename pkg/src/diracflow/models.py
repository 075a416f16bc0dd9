"""The shipped constraint systems and their reference dynamics.

Three systems are provided:

* ``TWO_SPIN_PRODUCT`` (n=4): motion confined to the quadric surface
  psi_1 psi_4 = psi_2 psi_3 in the energy basis, the product space that
  contains all four eigenstates.  The constraints separate into one angle
  relation and one polynomial relation, and the reduced motion is
  quasi-unitary: constant actions, linearly evolving angles.

* ``THREE_SPIN_PRODUCT`` (n=8): the analogue for three two-level factors,
  with four angle and four polynomial constraints.

* ``TWO_SPIN_DISENTANGLED`` (n=4): motion confined to the physical product
  states of two spin-1/2 particles whose Hamiltonian is a Heisenberg
  exchange plus a z-field, expressed in the energy chart through the
  singlet/triplet basis change.  The reduced motion is genuinely nonlinear.

The energy-basis labelling for the product models indexes eigenstates by
excitation sets relative to the last basis state: for n=4 the order is
({12}, {1}, {2}, {}) and for n=8 it is
({123}, {12}, {13}, {23}, {1}, {2}, {3}, {}).  This is the labelling under
which the bilinear product relations and the frequency compatibility
conditions hold simultaneously.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dirac import ConstraintSet, empty_constraints
from .errors import ChartSingularity, DimensionError, DomainError, PoleSingularity
from .phase_space import (
    EnergySpectrum,
    HilbertVector,
    PhasePoint,
    build_state,
    hilbert_to_phase,
    wrap_angle,
)

SQRT2 = np.sqrt(2.0)


class ModelId(enum.Enum):
    """Selector for the shipped constraint systems."""

    TWO_SPIN_PRODUCT = "two-spin-product"
    THREE_SPIN_PRODUCT = "three-spin-product"
    TWO_SPIN_DISENTANGLED = "two-spin-disentangled"
    UNCONSTRAINED = "unconstrained"

    @classmethod
    def from_string(cls, name: str) -> "ModelId":
        for member in cls:
            if member.value == name:
                return member
        raise DomainError(
            f"unknown model {name!r}; choose from "
            + ", ".join(m.value for m in cls)
        )

    @property
    def n_levels(self):
        """Required Hilbert dimension, or None when any dimension works."""
        return {
            ModelId.TWO_SPIN_PRODUCT: 4,
            ModelId.THREE_SPIN_PRODUCT: 8,
            ModelId.TWO_SPIN_DISENTANGLED: 4,
            ModelId.UNCONSTRAINED: None,
        }[self]


# --------------------------------------------------------------------------
# Two-spin product surface (energy-basis quadric)
# --------------------------------------------------------------------------

def two_spin_product_constraints() -> ConstraintSet:
    """Separable constraints of the two-spin product surface.

    phi_1 = q1 - q2 - q3 (wrapped), phi_2 = p1 p4 - p2 p3 with
    p4 = 1 - p1 - p2 - p3.
    """

    def value(pt: PhasePoint) -> np.ndarray:
        q, p = pt.q, pt.p
        p4 = 1.0 - p.sum()
        return np.array([
            wrap_angle(q[0] - q[1] - q[2]),
            p[0] * p4 - p[1] * p[2],
        ])

    def grad(pt: PhasePoint) -> np.ndarray:
        p = pt.p
        p4 = 1.0 - p.sum()
        return np.array([
            [1.0, -1.0, -1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, p4 - p[0], -p[0] - p[2], -p[0] - p[1]],
        ])

    return ConstraintSet(4, 2, value, grad, labels=("angle_sum", "quadric"))


def raw_quadric_residual(pt: PhasePoint) -> np.ndarray:
    """Real and imaginary parts of psi_1 psi_4 - psi_2 psi_3, unseparated.

    Cross-validates the separable constraint pair: the Euclidean norm of this
    vector equals |psi_1 psi_4 - psi_2 psi_3| on amplitudes built from ``pt``.
    """
    if pt.n != 4:
        raise DimensionError("raw quadric residual needs an n=4 point")
    q, p = pt.q, pt.p
    p4 = 1.0 - p.sum()
    r14 = np.sqrt(max(p[0] * p4, 0.0))
    r23 = np.sqrt(max(p[1] * p[2], 0.0))
    return np.array([
        r14 * np.cos(q[0]) - r23 * np.cos(q[1] + q[2]),
        r14 * np.sin(q[0]) - r23 * np.sin(q[1] + q[2]),
    ])


def closed_form_velocity_ex1(pt: PhasePoint, spec: EnergySpectrum) -> np.ndarray:
    """Reduced velocity on the two-spin product surface, in closed form.

    qdot_1 = (w1-w2-w3)(2 p1 + p2 + p3) + w2 + w3
    qdot_2 = (w1-w2-w3)(p1 + p3) + w2
    qdot_3 = (w1-w2-w3)(p1 + p2) + w3
    pdot   = 0

    When w1 = w2 + w3 this reduces to the unitary flow.
    """
    if pt.n != 4 or spec.n != 4:
        raise DimensionError("closed form defined for n=4")
    w1, w2, w3 = spec.frequencies
    d = w1 - w2 - w3
    p1, p2, p3 = pt.p
    return np.array([
        d * (2.0 * p1 + p2 + p3) + (w2 + w3),
        d * (p1 + p3) + w2,
        d * (p1 + p2) + w3,
        0.0, 0.0, 0.0,
    ])


# --------------------------------------------------------------------------
# Three-spin product surface
# --------------------------------------------------------------------------

# Excitation set of each basis label (0-based factor indices).
_EX2_SETS = ((0, 1), (0,), (1,), ())
_EX3_SETS = ((0, 1, 2), (0, 1), (0, 2), (1, 2), (0,), (1,), (2,), ())


def three_spin_product_constraints() -> ConstraintSet:
    """Eight constraints of the three-spin product surface.

    Four wrapped angle relations and four bilinear action relations with
    p8 = 1 - sum(p1..p7); angle and action constraints decouple.
    """

    def value(pt: PhasePoint) -> np.ndarray:
        q, p = pt.q, pt.p
        p8 = 1.0 - p.sum()
        return np.array([
            wrap_angle(q[1] - q[4] - q[5]),
            wrap_angle(q[0] + q[6] - q[2] - q[3]),
            wrap_angle(q[0] - q[1] - q[6]),
            wrap_angle(q[2] + q[5] - q[3] - q[4]),
            p[1] * p8 - p[4] * p[5],
            p[0] * p[6] - p[2] * p[3],
            p[0] * p8 - p[1] * p[6],
            p[2] * p[5] - p[3] * p[4],
        ])

    def grad(pt: PhasePoint) -> np.ndarray:
        p = pt.p
        p8 = 1.0 - p.sum()
        G = np.zeros((8, 14))
        G[0, 1], G[0, 4], G[0, 5] = 1.0, -1.0, -1.0
        G[1, 0], G[1, 6], G[1, 2], G[1, 3] = 1.0, 1.0, -1.0, -1.0
        G[2, 0], G[2, 1], G[2, 6] = 1.0, -1.0, -1.0
        G[3, 2], G[3, 5], G[3, 3], G[3, 4] = 1.0, 1.0, -1.0, -1.0
        # p8 is eliminated, so rows containing p8 pick up -dPhi/dp8 everywhere
        G[4, 7:] = -p[1]
        G[4, 8] += p8
        G[4, 11] += -p[5]
        G[4, 12] += -p[4]
        G[5, 7], G[5, 13] = p[6], p[0]
        G[5, 9], G[5, 10] = -p[3], -p[2]
        G[6, 7:] = -p[0]
        G[6, 7] += p8
        G[6, 8] += -p[6]
        G[6, 13] += -p[1]
        G[7, 9], G[7, 12] = p[5], p[2]
        G[7, 10], G[7, 11] = -p[4], -p[3]
        return G

    labels = ("angle_256", "angle_1734", "angle_127", "angle_3645",
              "bilin_28_56", "bilin_17_34", "bilin_18_27", "bilin_36_45")
    return ConstraintSet(8, 8, value, grad, labels=labels)


def product_state_two(factor1, factor2) -> HilbertVector:
    """Energy-basis amplitudes of a two-factor product state.

    Each factor is a pair (ground, excited); output is normalized.
    """
    return _product_state(_EX2_SETS, (factor1, factor2))


def product_state_three(factor1, factor2, factor3) -> HilbertVector:
    """Energy-basis amplitudes of a three-factor product state."""
    return _product_state(_EX3_SETS, (factor1, factor2, factor3))


def _product_state(sets, factors) -> HilbertVector:
    factors = [np.asarray(f, dtype=complex) for f in factors]
    for f in factors:
        if f.shape != (2,):
            raise DomainError("each factor is a pair (ground, excited)")
    amps = np.array([
        np.prod([f[1] if k in s else f[0] for k, f in enumerate(factors)])
        for s in sets
    ])
    nrm = np.linalg.norm(amps)
    if nrm < 1e-300:
        raise DomainError("zero product state")
    return HilbertVector(amps / nrm)


def segre_membership(v: HilbertVector, model: ModelId) -> float:
    """Max modulus of the model's bilinear product relations.

    Zero exactly when the state is a product state in the basis relevant to
    the model: the energy basis for the product-surface models, the physical
    up/down basis (reached through the singlet/triplet change) for the
    disentangled model.
    """
    a = v.amps
    if model is ModelId.TWO_SPIN_PRODUCT:
        if v.n != 4:
            raise DimensionError("two-spin membership needs n=4")
        return float(abs(a[0] * a[3] - a[1] * a[2]))
    if model is ModelId.THREE_SPIN_PRODUCT:
        if v.n != 8:
            raise DimensionError("three-spin membership needs n=8")
        rels = (a[0] * a[6] - a[2] * a[3],
                a[1] * a[7] - a[4] * a[5],
                a[0] * a[7] - a[1] * a[6],
                a[2] * a[5] - a[3] * a[4])
        return float(max(abs(r) for r in rels))
    if model is ModelId.TWO_SPIN_DISENTANGLED:
        if v.n != 4:
            raise DimensionError("disentangled membership needs n=4")
        uu, ud, du, dd = _to_updown_basis(a)
        return float(abs(uu * dd - ud * du))
    raise DomainError("the unconstrained model has no membership relations")


# --------------------------------------------------------------------------
# Heisenberg exchange Hamiltonian and the singlet/triplet basis change
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HeisenbergParams:
    """Exchange strength J and z-field strength B (energy units)."""

    J: float
    B: float


def heisenberg_matrix(hp: HeisenbergParams) -> np.ndarray:
    """The 4x4 Hamiltonian -J s1.s2 - B (s1z + s2z), basis (uu, ud, du, dd)."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    spin_dot = sum(np.kron(s, s) for s in (sx, sy, sz))
    field = np.kron(sz, eye) + np.kron(eye, sz)
    return -hp.J * spin_dot - hp.B * field


def heisenberg_spectrum(hp: HeisenbergParams) -> EnergySpectrum:
    """Eigenvalues in the order fixed by the singlet/triplet chart.

    E1 (down-down triplet) = -J + 2B, E2 (triplet-0) = -J,
    E3 (singlet) = 3J, E4 (up-up triplet) = -J - 2B.

    Raises:
        DegenerateSpectrum: when parameters collide levels (for example B=0).
    """
    J, B = hp.J, hp.B
    return EnergySpectrum.from_levels((-J + 2 * B, -J, 3 * J, -J - 2 * B))


def ex3_basis_map(pt: PhasePoint) -> HilbertVector:
    """Map an energy-chart point to amplitudes in the (uu, ud, du, dd) basis.

    The energy eigenbasis is (down-down, triplet-0, singlet, up-up), so

        psi_uu = sqrt(p4)
        psi_ud = (c2 - c3) / sqrt(2)
        psi_du = (c2 + c3) / sqrt(2)
        psi_dd = c1

    with c_i = sqrt(p_i) exp(-i q_i).  Unit norm is preserved.
    """
    if pt.n != 4:
        raise DimensionError("basis map defined for n=4")
    c = build_state(pt, 4).amps
    return HilbertVector(np.array(_to_updown_basis(c)))


def _to_updown_basis(c):
    uu = c[3]
    ud = (c[1] - c[2]) / SQRT2
    du = (c[1] + c[2]) / SQRT2
    dd = c[0]
    return uu, ud, du, dd


def disentangled_point_from_bloch(
    theta1: float, phi1: float, theta2: float, phi2: float
) -> PhasePoint:
    """Energy-chart coordinates of the product state of two Bloch vectors.

    Each factor is cos(theta/2)|up> + sin(theta/2) e^{i phi}|down>; the
    resulting point satisfies the disentangled constraints exactly by
    construction, which is how on-surface samples are generated.
    """
    st1, ct1 = np.sin(theta1 / 2), np.cos(theta1 / 2)
    st2, ct2 = np.sin(theta2 / 2), np.cos(theta2 / 2)
    uu = ct1 * ct2
    ud = ct1 * st2 * np.exp(1j * phi2)
    du = st1 * ct2 * np.exp(1j * phi1)
    dd = st1 * st2 * np.exp(1j * (phi1 + phi2))
    c = np.array([dd, (ud + du) / SQRT2, (du - ud) / SQRT2, uu])
    return hilbert_to_phase(HilbertVector(c))


# --------------------------------------------------------------------------
# Disentangled (entanglement-free) surface for the Heisenberg eigenbasis
# --------------------------------------------------------------------------

def disentangled_constraints() -> ConstraintSet:
    """The two constraints confining motion to physical product states.

    phi_1 = 2 sqrt(p1 p4) - p2 cos(2 q2 - q1) + p3 cos(2 q3 - q1)
    phi_2 = p2 sin(2 q2 - q1) - p3 sin(2 q3 - q1)

    The gradient carries 1/sqrt(p1 p4) terms and reports ChartSingularity
    when p1 p4 < 1e-12.
    """

    def value(pt: PhasePoint) -> np.ndarray:
        q, p = pt.q, pt.p
        p4 = 1.0 - p.sum()
        u, w = 2 * q[1] - q[0], 2 * q[2] - q[0]
        return np.array([
            2.0 * np.sqrt(max(p[0] * p4, 0.0))
            - p[1] * np.cos(u) + p[2] * np.cos(w),
            p[1] * np.sin(u) - p[2] * np.sin(w),
        ])

    def grad(pt: PhasePoint) -> np.ndarray:
        q, p = pt.q, pt.p
        p1, p2, p3 = p
        p4 = 1.0 - p.sum()
        if p1 * p4 < 1e-12:
            raise ChartSingularity(
                f"gradient of sqrt(p1 p4) blows up: p1*p4 = {p1 * p4!r}"
            )
        r = np.sqrt(p1 * p4)
        su, cu = np.sin(2 * q[1] - q[0]), np.cos(2 * q[1] - q[0])
        sw, cw = np.sin(2 * q[2] - q[0]), np.cos(2 * q[2] - q[0])
        return np.array([
            [-p2 * su + p3 * sw, 2 * p2 * su, -2 * p3 * sw,
             (p4 - p1) / r, -p1 / r - cu, -p1 / r + cw],
            [-p2 * cu + p3 * cw, 2 * p2 * cu, -2 * p3 * cw,
             0.0, su, -sw],
        ])

    return ConstraintSet(4, 2, value, grad, labels=("quadric_re", "quadric_im"))


def disentangled_bloch_rates(
    theta1: float, phi1: float, theta2: float, phi2: float, spec: EnergySpectrum
) -> np.ndarray:
    """Reduced flow on the disentangled surface in Bloch coordinates.

    The surface is a product of two spheres carrying the induced symplectic
    structure (1/2) sin(theta_i) dtheta_i ^ dphi_i, so the constrained motion
    is the Hamiltonian flow of the restricted energy

        <H> = E4 + w1 s1 s2 + (w2+w3)/2 (c1 s2 + s1 c2)
                 + (w2-w3)/4 sin(th1) sin(th2) cos(phi1 - phi2)

    with s_i = sin^2(th_i/2), c_i = cos^2(th_i/2).  Explicitly, with
    K = (w2-w3)/2 and M = w2 + w3 - w1 and D = phi1 - phi2:

        th1' = -K sin(th2) sin(D)
        th2' = +K sin(th1) sin(D)
        ph1' = -(w1 + M cos(th2))/2 - K cot(th1) sin(th2) cos(D)
        ph2' = -(w1 + M cos(th1))/2 - K cot(th2) sin(th1) cos(D)

    Returns (th1', ph1', th2', ph2').

    Raises:
        PoleSingularity: at sin(theta_i) < 1e-12 where the azimuthal rates
            are undefined.
    """
    if spec.n != 4:
        raise DimensionError("disentangled flow defined for n=4")
    s1, s2 = np.sin(theta1), np.sin(theta2)
    if abs(s1) < 1e-12 or abs(s2) < 1e-12:
        raise PoleSingularity("azimuthal rate undefined at a Bloch pole")
    w1, w2, w3 = spec.frequencies
    k = 0.5 * (w2 - w3)
    m_ = w2 + w3 - w1
    c1, c2 = np.cos(theta1), np.cos(theta2)
    d = phi1 - phi2
    return np.array([
        -k * s2 * np.sin(d),
        -0.5 * (w1 + m_ * c2) - k * (c1 / s1) * s2 * np.cos(d),
        k * s1 * np.sin(d),
        -0.5 * (w1 + m_ * c1) - k * (c2 / s2) * s1 * np.cos(d),
    ])


def closed_form_velocity_ex3(pt: PhasePoint, spec: EnergySpectrum) -> np.ndarray:
    """Reduced velocity on the disentangled surface, independent of the engine.

    The point is factorized into its Bloch pair, each sphere is moved by
    :func:`disentangled_bloch_rates`, and the motion is pushed back through
    the chart by exact differentiation of the amplitude formulas.  The action
    rates collapse to

        pdot_1 =  p2 p3 (w2 - w3)  sin(2(q2 - q3))
        pdot_2 = -p2 p3 (w1 - 2 w3) sin(2(q2 - q3))
        pdot_3 =  p2 p3 (w1 - 2 w2) sin(2(q2 - q3))

    which conserve the energy w . pdot = 0 identically.

    Raises:
        ChartSingularity: when p1 p4 <= 1e-12, or when p2/p3 vanish and the
            corresponding angle rates are undefined.
    """
    if pt.n != 4 or spec.n != 4:
        raise DimensionError("closed form defined for n=4")
    p1, p2, p3 = pt.p
    p4 = pt.p_last
    if p1 * p4 <= 1e-12:
        raise ChartSingularity(f"p1*p4 = {p1 * p4!r} at the chart floor")
    if p2 < 1e-14 or p3 < 1e-14:
        raise ChartSingularity("angle rates q2', q3' undefined at p2 p3 -> 0")

    c = build_state(pt, 4).amps
    uu, ud, du, dd = _to_updown_basis(c)
    st1 = np.sqrt(abs(du) ** 2 + abs(dd) ** 2)
    ct1 = np.sqrt(abs(uu) ** 2 + abs(ud) ** 2)
    st2 = np.sqrt(abs(ud) ** 2 + abs(dd) ** 2)
    ct2 = np.sqrt(abs(uu) ** 2 + abs(du) ** 2)
    theta1, theta2 = 2 * np.arctan2(st1, ct1), 2 * np.arctan2(st2, ct2)
    phi1 = float(np.angle(du / uu))
    phi2 = float(np.angle(ud / uu))

    th1d, ph1d, th2d, ph2d = disentangled_bloch_rates(
        theta1, phi1, theta2, phi2, spec
    )

    dst1, dct1 = 0.5 * ct1 * th1d, -0.5 * st1 * th1d
    dst2, dct2 = 0.5 * ct2 * th2d, -0.5 * st2 * th2d
    e1, e2 = np.exp(1j * phi1), np.exp(1j * phi2)
    uu_v, ud_v = ct1 * ct2, ct1 * st2 * e2
    du_v, dd_v = st1 * ct2 * e1, st1 * st2 * e1 * e2
    d_uu = dct1 * ct2 + ct1 * dct2
    d_ud = (dct1 * st2 + ct1 * dst2 + 1j * ct1 * st2 * ph2d) * e2
    d_du = (dst1 * ct2 + st1 * dct2 + 1j * st1 * ct2 * ph1d) * e1
    d_dd = (dst1 * st2 + st1 * dst2 + 1j * st1 * st2 * (ph1d + ph2d)) * e1 * e2

    pairs = (
        (dd_v, d_dd),
        ((ud_v + du_v) / SQRT2, (d_ud + d_du) / SQRT2),
        ((du_v - ud_v) / SQRT2, (d_du - d_ud) / SQRT2),
    )
    qdot = np.array([-np.imag(dc / cv) for cv, dc in pairs])
    pdot = np.array([2.0 * np.real(dc * np.conj(cv)) for cv, dc in pairs])
    _ = d_uu  # p4 rate is implied by sum(p) + p4 = 1
    return np.concatenate([qdot, pdot])


# --------------------------------------------------------------------------
# Spectrum compatibility with unconstrained unitary motion
# --------------------------------------------------------------------------

def spectrum_condition(
    spec: EnergySpectrum, model: ModelId, tol: float = 1e-12
) -> bool:
    """Does unconstrained unitary motion already preserve the surface?

    TWO_SPIN_PRODUCT: w1 = w2 + w3, equivalently a trace-free spectrum of the
    form (e1, e2, -e2, -e1).  THREE_SPIN_PRODUCT: the four relations
    w2 = w5 + w6, w1 + w7 = w3 + w4, w1 = w2 + w7, w3 + w6 = w4 + w5 (the
    trace-free form (e1..e4, -e4..-e1) is necessary but not sufficient).
    The unconstrained model trivially satisfies the condition; the
    disentangled surface does not contain all eigenstates, so it never does.
    """
    if model is ModelId.UNCONSTRAINED:
        return True
    if model is ModelId.TWO_SPIN_DISENTANGLED:
        if spec.n != 4:
            raise DimensionError("disentangled model needs n=4")
        return False
    w = spec.frequencies
    if model is ModelId.TWO_SPIN_PRODUCT:
        if spec.n != 4:
            raise DimensionError("two-spin model needs n=4")
        return bool(abs(w[0] - w[1] - w[2]) <= tol)
    if spec.n != 8:
        raise DimensionError("three-spin model needs n=8")
    residuals = (
        w[1] - w[4] - w[5],
        w[0] + w[6] - w[2] - w[3],
        w[0] - w[1] - w[6],
        w[2] + w[5] - w[3] - w[4],
    )
    return bool(max(abs(r) for r in residuals) <= tol)


def product_frequencies_two(gap1: float, gap2: float) -> np.ndarray:
    """Frequencies (w1, w2, w3) satisfying w1 = w2 + w3 exactly."""
    return np.array([gap1 + gap2, gap1, gap2])


def product_frequencies_three(gap1: float, gap2: float, gap3: float) -> np.ndarray:
    """Frequencies (w1..w7) of three independent two-level factors.

    Built so the four compatibility relations hold to round-off.
    """
    w2 = gap1 + gap2
    return np.array([w2 + gap3, w2, gap1 + gap3, gap2 + gap3, gap1, gap2, gap3])


# --------------------------------------------------------------------------
# Constraint-set dispatch and samplers
# --------------------------------------------------------------------------

def constraints_for(model: ModelId, n_levels: int | None = None) -> ConstraintSet:
    """The constraint set of a model; unconstrained needs an explicit n."""
    if model is ModelId.TWO_SPIN_PRODUCT:
        return two_spin_product_constraints()
    if model is ModelId.THREE_SPIN_PRODUCT:
        return three_spin_product_constraints()
    if model is ModelId.TWO_SPIN_DISENTANGLED:
        return disentangled_constraints()
    if n_levels is None:
        raise DomainError("unconstrained model needs n_levels")
    return empty_constraints(n_levels)


def sample_interior_point(n: int, rng, margin: float = 0.02) -> PhasePoint:
    """A generic chart point with every action at least ``margin``."""
    raw = rng.gamma(1.0, size=n)
    p_full = margin + (1.0 - n * margin) * raw / raw.sum()
    q = rng.uniform(-np.pi, np.pi, size=n - 1)
    return PhasePoint(q, p_full[:-1])


def sample_two_spin_surface(rng, margin: float = 0.01) -> PhasePoint:
    """On-surface point via exact solve of the quadric for p1 given (p2, p3)."""
    while True:
        p2, p3 = rng.uniform(margin, 0.45, size=2)
        s = 1.0 - p2 - p3
        disc = s * s - 4.0 * p2 * p3
        if disc <= 0.0:
            continue
        root = np.sqrt(disc)
        p1 = 0.5 * (s - root) if rng.random() < 0.5 else 0.5 * (s + root)
        p4 = 1.0 - p1 - p2 - p3
        if p1 < margin or p4 < margin:
            continue
        q2, q3 = rng.uniform(-np.pi, np.pi, size=2)
        return PhasePoint(np.array([q2 + q3, q2, q3]), np.array([p1, p2, p3]))


def sample_three_spin_surface(rng, lo: float = 0.15, hi: float = 0.85) -> PhasePoint:
    """On-surface point built from three independent two-level factors."""
    probs = rng.uniform(lo, hi, size=3)
    phases = rng.uniform(-np.pi, np.pi, size=3)
    p = np.empty(7)
    q = np.empty(7)
    for i, s in enumerate(_EX3_SETS[:-1]):
        prob, phase = 1.0, 0.0
        for k in range(3):
            prob *= probs[k] if k in s else 1.0 - probs[k]
            phase += phases[k] if k in s else 0.0
        p[i], q[i] = prob, phase
    return PhasePoint(q, p)


def sample_disentangled_surface(
    rng, min_p1p4: float = 1e-3, min_p23: float = 1e-3
) -> PhasePoint:
    """On-surface point from a random Bloch pair, away from chart floors."""
    while True:
        theta1, theta2 = rng.uniform(0.15, np.pi - 0.15, size=2)
        phi1, phi2 = rng.uniform(-np.pi, np.pi, size=2)
        pt = disentangled_point_from_bloch(theta1, phi1, theta2, phi2)
        p1, p2, p3 = pt.p
        if p1 * pt.p_last > min_p1p4 and p2 > min_p23 and p3 > min_p23:
            return pt

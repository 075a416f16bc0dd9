"""Action-angle representation of n-level pure states.

A normalized state is written as a point (q, p) where p_i is the population
of the i-th energy eigenstate (i = 1..n-1) and q_i the relative phase against
the n-th eigenstate, whose amplitude is kept real and non-negative.  In these
coordinates the expectation of the Hamiltonian is linear in p, the canonical
symplectic matrix is the standard block form, and unitary evolution is the
trivial flow q_i(t) = q_i(0) + w_i t with constant p.

Flattened coordinate order is x = (q_1..q_{n-1}, p_1..p_{n-1}) everywhere;
every matrix in the package uses this order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DegenerateSpectrum, DomainError, PhaseUndefined

# Slack applied when checking simplex membership of the actions p.
SIMPLEX_TOL = 1e-12


def wrap_angle(x):
    """Wrap an angle (or array of angles) to the interval (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(x)) % (2.0 * np.pi)


@dataclass(frozen=True)
class EnergySpectrum:
    """Energy levels E_1..E_n with derived frequencies w_i = E_i - E_n.

    Use :meth:`from_levels` to validate non-degeneracy, or
    :meth:`from_frequencies` to build directly from raw frequencies when the
    level values themselves repeat (all dynamics depend on w only).
    """

    levels: tuple

    def __post_init__(self):
        levels = tuple(float(e) for e in self.levels)
        if len(levels) < 2:
            raise DomainError("spectrum needs at least two levels")
        if not all(np.isfinite(levels)):
            raise DomainError("spectrum levels must be finite")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_levels(cls, levels, gap_tol: float = 1e-12) -> "EnergySpectrum":
        """Build a spectrum, rejecting duplicate eigenvalues.

        Raises:
            DegenerateSpectrum: if any two levels are closer than ``gap_tol``.
        """
        levels = tuple(float(e) for e in levels)
        for i in range(len(levels)):
            for j in range(i + 1, len(levels)):
                if abs(levels[i] - levels[j]) < gap_tol:
                    raise DegenerateSpectrum(
                        f"levels {i + 1} and {j + 1} collide: "
                        f"{levels[i]!r} vs {levels[j]!r}"
                    )
        return cls(levels)

    @classmethod
    def from_frequencies(cls, frequencies, base: float = 0.0) -> "EnergySpectrum":
        """Build from raw frequencies w_i = E_i - E_n, bypassing level validation.

        This is the entry path for parameter sets whose level values repeat
        but whose frequencies are perfectly good (the dynamics never see the
        levels themselves, only w and the additive constant E_n = ``base``).
        """
        freqs = tuple(float(w) for w in frequencies)
        if len(freqs) < 1:
            raise DomainError("need at least one frequency")
        return cls(tuple(w + base for w in freqs) + (base,))

    @property
    def n(self) -> int:
        return len(self.levels)

    @property
    def e_n(self) -> float:
        return self.levels[-1]

    @property
    def frequencies(self) -> np.ndarray:
        """w_i = E_i - E_n, recomputed from the stored levels."""
        lv = np.asarray(self.levels)
        return lv[:-1] - lv[-1]


@dataclass(frozen=True)
class PhasePoint:
    """Canonical coordinates of a pure state: angles q and actions p.

    Angles are stored unwrapped on the real line so that linear-in-time
    evolution is well posed; wrapping happens only inside angle-valued
    constraint evaluation.
    """

    q: np.ndarray
    p: np.ndarray
    _validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if q.ndim != 1 or p.ndim != 1 or q.shape != p.shape:
            raise DomainError("q and p must be 1-d arrays of equal length")
        if self._validate:
            if np.any(p < -SIMPLEX_TOL):
                raise DomainError(f"negative action: p={p}")
            if p.sum() > 1.0 + SIMPLEX_TOL:
                raise DomainError(f"actions exceed the simplex: sum p = {p.sum()!r}")
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        """Hilbert-space dimension this point charts (len(q) + 1)."""
        return len(self.q) + 1

    @property
    def p_last(self) -> float:
        """The eliminated action p_n = 1 - sum(p)."""
        return 1.0 - float(self.p.sum())

    def to_array(self) -> np.ndarray:
        """Flatten to x = (q_1..q_{n-1}, p_1..p_{n-1})."""
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, x, validate: bool = True) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or len(x) % 2 != 0:
            raise DomainError("flat coordinates must have even length")
        m = len(x) // 2
        return cls(x[:m], x[m:], _validate=validate)


@dataclass(frozen=True)
class HilbertVector:
    """Complex amplitudes in the energy eigenbasis."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1 or len(amps) < 2:
            raise DomainError("amplitudes must be a 1-d array, n >= 2")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def n(self) -> int:
        return len(self.amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


def build_state(pt: PhasePoint, n: int) -> HilbertVector:
    """Amplitudes of the state charted by ``pt``: sqrt(p_i) e^{-i q_i}.

    The n-th amplitude is sqrt(1 - sum p), real and non-negative.

    Raises:
        DomainError: dimension mismatch, or p outside the simplex beyond 1e-12.
    """
    if pt.n != n:
        raise DomainError(f"point charts n={pt.n}, requested n={n}")
    p = pt.p
    p_n = 1.0 - p.sum()
    if np.any(p < -SIMPLEX_TOL) or p_n < -SIMPLEX_TOL:
        raise DomainError("actions outside the probability simplex")
    amps = np.empty(n, dtype=complex)
    amps[:-1] = np.sqrt(np.maximum(p, 0.0)) * np.exp(-1j * pt.q)
    amps[-1] = np.sqrt(max(p_n, 0.0))
    return HilbertVector(amps)


def hilbert_to_phase(v: HilbertVector) -> PhasePoint:
    """Invert the chart: p_i = |amp_i|^2, q_i = -arg(amp_i / amp_n).

    Raises:
        DomainError: if the vector is not normalized within 1e-10.
        PhaseUndefined: if |amp_n| <= 1e-12 (chart breaks down; no chart
            switching is attempted).
    """
    amps = v.amps
    nrm = np.linalg.norm(amps)
    if abs(nrm - 1.0) > 1e-10:
        raise DomainError(f"state not normalized: |psi| = {nrm!r}")
    ref = amps[-1]
    if abs(ref) <= 1e-12:
        raise PhaseUndefined("reference amplitude vanishes; chart undefined")
    rel = amps[:-1] / ref
    p = np.abs(amps[:-1]) ** 2
    q = -np.angle(rel)
    return PhasePoint(q, p)


def hamiltonian_value(pt: PhasePoint, spec: EnergySpectrum) -> float:
    """H(q, p) = E_n + sum_i w_i p_i.  Independent of q by construction."""
    _check_dims(pt, spec)
    return spec.e_n + float(spec.frequencies @ pt.p)


def hamiltonian_gradient(pt: PhasePoint, spec: EnergySpectrum) -> np.ndarray:
    """grad H = (0, ..., 0, w_1, ..., w_{n-1}) in canonical coordinate order."""
    _check_dims(pt, spec)
    m = pt.n - 1
    g = np.zeros(2 * m)
    g[m:] = spec.frequencies
    return g


@lru_cache(maxsize=None)
def _canonical_omega_cached(n: int) -> np.ndarray:
    m = n - 1
    omega = np.zeros((2 * m, 2 * m))
    omega[:m, m:] = np.eye(m)
    omega[m:, :m] = -np.eye(m)
    omega.setflags(write=False)
    return omega


def canonical_omega(n: int) -> np.ndarray:
    """The canonical symplectic matrix [[0, I], [-I, 0]] of size 2(n-1).

    Returns a cached read-only array; copy before mutating.
    """
    if n < 2:
        raise DomainError("need n >= 2")
    return _canonical_omega_cached(int(n))


def unitary_flow(pt0: PhasePoint, spec: EnergySpectrum, t: float) -> PhasePoint:
    """Exact unitary evolution: q(t) = q(0) + w t (unwrapped), p constant."""
    _check_dims(pt0, spec)
    return PhasePoint(pt0.q + spec.frequencies * t, pt0.p)


def _check_dims(pt: PhasePoint, spec: EnergySpectrum) -> None:
    if pt.n != spec.n:
        raise DomainError(f"dimension mismatch: point n={pt.n}, spectrum n={spec.n}")

"""Finite vibrating string on [0, 2*pi] with Dirichlet ends.

The displacement field decomposes over sine modes; each mode is an
independent unit-mass harmonic oscillator with frequency n, and the family
of mode energies

    f_n(q, p) = (p_n**2 + n**2 q_n**2) / 2,   q_n = a_n,  p_n = a'_n

is a complete involutive set of first integrals at any truncation, as long
as every p_n is nonzero at the evaluation point.  This module supplies the
sine-mode transform and its inverse, the mode/field energy functionals, the
exact rotation evolution, the separated Hamilton-Jacobi action and the
trajectory it generates, plus packaged observables for the completeness
machinery in :mod:`hamlab.canonical`.

Normalization notes (both quantities are exposed on purpose):
 - ``field_energy_integral`` evaluates
   n**2/2*(int u sin(nx) dx)**2 + 1/2*(int u_t sin(nx) dx)**2,
   which equals pi**2 times ``mode_energy`` because int sin(nx)**2 dx = pi
   on [0, 2*pi].
 - The field Hamiltonian int (u_t**2 + u_x**2)/2 dx equals pi times the
   mode-sum Hamiltonian for the same reason.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .canonical import CanonicalState, HamiltonianSystem, Observable, ObservableSet
from .errors import DomainExitError, ResolutionError

LENGTH = 2.0 * np.pi
DEFAULT_GRID_M = 256


def string_grid(M: int) -> np.ndarray:
    """Uniform grid of M+1 points covering [0, 2*pi] inclusive."""
    if M < 2:
        raise ValueError("grid needs M >= 2 intervals")
    return np.linspace(0.0, LENGTH, M + 1)


@dataclass(frozen=True)
class StringField:
    """Displacement/velocity samples on the closed uniform grid.

    Endpoint samples must vanish (Dirichlet); values within round-off of
    zero are snapped to exact zeros so the invariant is literal.
    """

    grid: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        u = np.array(self.u, dtype=float)
        v = np.array(self.v, dtype=float)
        if not (grid.shape == u.shape == v.shape) or grid.ndim != 1 or grid.size < 3:
            raise ValueError("grid, u, v must be 1-d arrays of equal length >= 3")
        M = grid.size - 1
        if not np.allclose(grid, string_grid(M), rtol=0.0, atol=1e-12):
            raise ValueError("grid must be uniform on [0, 2*pi] inclusive")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise ValueError("field samples must be finite")
        for name, w in (("u", u), ("v", v)):
            scale = max(1.0, float(np.max(np.abs(w))))
            if abs(w[0]) > 1e-9 * scale or abs(w[-1]) > 1e-9 * scale:
                raise ValueError(f"{name} violates the Dirichlet condition at the ends")
            w[0] = 0.0
            w[-1] = 0.0
        for arr in (grid, u, v):
            arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "t", float(self.t))

    @property
    def M(self) -> int:
        return self.grid.size - 1


def sample_field(
    u_fn: Callable[[np.ndarray], np.ndarray],
    v_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    M: int = DEFAULT_GRID_M,
    t: float = 0.0,
) -> StringField:
    """Sample callables on the uniform grid into a StringField."""
    x = string_grid(M)
    u = np.asarray(u_fn(x), dtype=float)
    v = np.zeros_like(x) if v_fn is None else np.asarray(v_fn(x), dtype=float)
    return StringField(x, u, v, t)


@dataclass(frozen=True)
class ModeState:
    """Sine-mode coefficients a_n and their velocities a'_n, n = 1..N."""

    a: np.ndarray
    adot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        adot = np.array(self.adot, dtype=float)
        if a.ndim != 1 or a.shape != adot.shape or a.size < 1:
            raise ValueError("a and adot must be equal-length 1-d vectors, N >= 1")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(adot))):
            raise ValueError("mode entries must be finite")
        a.setflags(write=False)
        adot.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "adot", adot)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_modes(self) -> int:
        return self.a.size

    def as_canonical(self) -> CanonicalState:
        """(q, p) = (a, a')."""
        return CanonicalState(self.a, self.adot, self.t)

    @staticmethod
    def from_canonical(s: CanonicalState) -> "ModeState":
        return ModeState(s.q, s.p, s.t)


@dataclass(frozen=True)
class SeparationData:
    """Separation constants of the mode-wise Hamilton-Jacobi split.

    E[n-1] is twice the energy of mode n; their sum is twice the total
    Hamiltonian E_total.
    """

    E: np.ndarray
    E_total: float

    def __post_init__(self):
        E = np.array(self.E, dtype=float)
        if E.ndim != 1 or E.size < 1:
            raise ValueError("E must be a nonempty vector")
        if np.any(E < 0):
            raise ValueError("separation constants must be nonnegative")
        if abs(E.sum() - 2.0 * self.E_total) > 1e-12 * max(1.0, abs(2.0 * self.E_total)):
            raise ValueError("sum(E) must equal 2*E_total")
        E.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "E_total", float(self.E_total))

    @property
    def n_modes(self) -> int:
        return self.E.size


def _sine_coefficients(samples: np.ndarray, grid: np.ndarray, N: int) -> np.ndarray:
    """(1/pi) * int w sin(n x) dx for n = 1..N by composite trapezoid.

    The integrand vanishes at both ends, so the trapezoid rule reduces to a
    plain interior sum; it is exact for fields band-limited below the grid
    Nyquist mode.
    """
    M = grid.size - 1
    h = LENGTH / M
    x = grid[1:-1]
    w = samples[1:-1]
    out = np.empty(N)
    for n in range(1, N + 1):
        out[n - 1] = (h / np.pi) * float(np.dot(w, np.sin(n * x)))
    return out


def sine_modes(f: StringField, N: int) -> ModeState:
    """Project a field onto its first N sine modes."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if f.M < 2 * N:
        raise ResolutionError(
            f"grid with M={f.M} intervals cannot resolve N={N} modes (need M >= 2N)"
        )
    a = _sine_coefficients(f.u, f.grid, N)
    adot = _sine_coefficients(f.v, f.grid, N)
    return ModeState(a, adot, f.t)


def reconstruct_field(m: ModeState, M: int = DEFAULT_GRID_M) -> StringField:
    """Synthesize u = sum a_n sin(nx), v = sum a'_n sin(nx) on an M-grid."""
    if M < 2 * m.n_modes:
        raise ResolutionError(
            f"grid with M={M} intervals cannot carry N={m.n_modes} modes (need M >= 2N)"
        )
    x = string_grid(M)
    u = np.zeros_like(x)
    v = np.zeros_like(x)
    for n in range(1, m.n_modes + 1):
        s = np.sin(n * x)
        u += m.a[n - 1] * s
        v += m.adot[n - 1] * s
    return StringField(x, u, v, m.t)


def mode_energy(n: int, a_n: float, adot_n: float) -> float:
    """Energy of mode n: (adot_n**2 + n**2 a_n**2) / 2."""
    if n < 1:
        raise ValueError("mode index must be >= 1")
    return 0.5 * (adot_n**2 + (n * a_n) ** 2)


def modes_hamiltonian(m: ModeState) -> float:
    """Total mode energy, summed in index order."""
    total = 0.0
    for n in range(1, m.n_modes + 1):
        total += mode_energy(n, m.a[n - 1], m.adot[n - 1])
    return total


def field_energy_integral(f: StringField, n: int) -> float:
    """First integral of the field as printed: uses bare sine integrals.

    Returns n**2/2 * (int u sin(nx) dx)**2 + 1/2 * (int v sin(nx) dx)**2,
    which is pi**2 times mode_energy(n, a_n, adot_n).
    """
    if n < 1:
        raise ValueError("mode index must be >= 1")
    if f.M < 2 * n:
        raise ResolutionError(f"grid with M={f.M} intervals cannot resolve mode n={n}")
    iu = np.pi * _sine_coefficients(f.u, f.grid, n)[-1]
    iv = np.pi * _sine_coefficients(f.v, f.grid, n)[-1]
    return 0.5 * (n * iu) ** 2 + 0.5 * iv**2


def field_derivative(f: StringField) -> np.ndarray:
    """du/dx on the grid via sine-series differentiation.

    Exact for fields band-limited below the grid Nyquist mode, which is the
    regime every consumer of this module works in.
    """
    N = f.M // 2
    a = _sine_coefficients(f.u, f.grid, N)
    du = np.zeros_like(f.grid)
    for n in range(1, N + 1):
        du += n * a[n - 1] * np.cos(n * f.grid)
    return du


def field_hamiltonian(f: StringField) -> float:
    """Field energy int (v**2 + u_x**2)/2 dx by trapezoid quadrature.

    Equals pi times modes_hamiltonian(sine_modes(f, N)) for fields
    band-limited to N modes.
    """
    ux = field_derivative(f)
    return float(np.trapezoid(0.5 * (f.v**2 + ux**2), f.grid))


def exact_mode_evolution(m: ModeState, t1: float) -> ModeState:
    """Rotate each mode by its own frequency: the exact flow.

    a_n(t1) = a_n cos(n dt) + (a'_n / n) sin(n dt), and the matching
    derivative; every mode energy is invariant exactly.
    """
    dt = t1 - m.t
    n = np.arange(1, m.n_modes + 1, dtype=float)
    c = np.cos(n * dt)
    s = np.sin(n * dt)
    a = m.a * c + (m.adot / n) * s
    adot = -n * m.a * s + m.adot * c
    return ModeState(a, adot, t1)


def hj_action(n: int, a: float, E_n: float) -> float:
    """Separated action S_n(a) with S_n(0) = 0.

    S_n(a) = (a/2) sqrt(E_n - n**2 a**2) + (E_n / 2n) arcsin(n a / sqrt(E_n));
    dS_n/da = sqrt(E_n - n**2 a**2).  Valid in the classically allowed
    region |a| <= sqrt(E_n)/n.
    """
    if n < 1:
        raise ValueError("mode index must be >= 1")
    if E_n < 0:
        raise ValueError("E_n must be nonnegative")
    if E_n == 0.0:
        if a != 0.0:
            raise DomainExitError(f"a={a} outside allowed region for E_n=0")
        return 0.0
    z = n * a / math.sqrt(E_n)
    if abs(z) > 1.0 + 1e-12:
        raise DomainExitError(
            f"a={a} beyond the turning point sqrt(E_n)/n={math.sqrt(E_n) / n:.6g}"
        )
    z = min(1.0, max(-1.0, z))
    discr = max(E_n - (n * a) ** 2, 0.0)
    return 0.5 * a * math.sqrt(discr) + (E_n / (2.0 * n)) * math.asin(z)


def separation_constants(m: ModeState) -> SeparationData:
    """E_n = 2 * f_n from a mode state; E_total is the Hamiltonian value."""
    E = np.array([2.0 * mode_energy(n, m.a[n - 1], m.adot[n - 1]) for n in range(1, m.n_modes + 1)])
    return SeparationData(E, modes_hamiltonian(m))


def hj_trajectory(sep: SeparationData, beta) -> Callable[[float], ModeState]:
    """Trajectory generated by the separated action via beta_n = dS/dE_n.

    Differentiating S = -E t + sum_n S_n with E = sum_n E_n / 2 gives
    beta_n = -t/2 + arcsin(n a_n / sqrt(E_n)) / (2n), which inverts to the
    amplitude-phase form

        a_n(t) = (sqrt(E_n)/n) sin(n t + 2 n beta_n).

    Zero-energy modes are stationary; requesting them only triggers a
    warning and they stay identically zero.
    """
    beta = np.array(beta, dtype=float)
    if beta.shape != (sep.n_modes,):
        raise ValueError(f"beta must have length {sep.n_modes}")
    n = np.arange(1, sep.n_modes + 1, dtype=float)
    amp = np.sqrt(sep.E) / n
    if np.any(sep.E == 0):
        dead = [int(k + 1) for k in np.flatnonzero(sep.E == 0)]
        warnings.warn(f"zero-energy modes {dead} are stationary and stay zero", stacklevel=2)
    phase0 = 2.0 * n * beta

    def at(t: float) -> ModeState:
        phi = n * t + phase0
        a = amp * np.sin(phi)
        adot = np.sqrt(sep.E) * np.cos(phi)
        return ModeState(a, adot, t)

    return at


def beta_for_state(m: ModeState) -> np.ndarray:
    """Phase constants beta that make hj_trajectory pass through m at m.t.

    Zero-energy modes get beta = 0 (any value works; they are stationary).
    """
    sep = separation_constants(m)
    n = np.arange(1, m.n_modes + 1, dtype=float)
    beta = np.zeros(m.n_modes)
    for k in range(m.n_modes):
        if sep.E[k] == 0:
            continue
        phi = math.atan2(n[k] * m.a[k], m.adot[k])
        beta[k] = (phi - n[k] * m.t) / (2.0 * n[k])
    return beta


def string_observable_set(N: int) -> ObservableSet:
    """Mode energies f_n as observables over (q, p) = (a, a').

    Analytic gradients are attached: grad_q f_n = n**2 q_n e_n and
    grad_p f_n = p_n e_n.
    """
    if N < 1:
        raise ValueError("N must be >= 1")

    def make(n):
        def fn(s: CanonicalState) -> float:
            return 0.5 * (s.p[n - 1] ** 2 + (n * s.q[n - 1]) ** 2)

        def gq(s: CanonicalState) -> np.ndarray:
            g = np.zeros(s.dim)
            g[n - 1] = n**2 * s.q[n - 1]
            return g

        def gp(s: CanonicalState) -> np.ndarray:
            g = np.zeros(s.dim)
            g[n - 1] = s.p[n - 1]
            return g

        return Observable(f"mode_energy_{n}", fn, grad_q=gq, grad_p=gp)

    return ObservableSet([make(n) for n in range(1, N + 1)])


def string_system(N: int) -> HamiltonianSystem:
    """Separable Hamiltonian system for the first N modes."""
    if N < 1:
        raise ValueError("N must be >= 1")
    n2 = np.arange(1, N + 1, dtype=float) ** 2

    return HamiltonianSystem(
        dim=N,
        hamiltonian=lambda s: 0.5 * float(np.dot(s.p, s.p) + np.dot(n2 * s.q, s.q)),
        grad_q=lambda s: n2 * s.q,
        grad_p=lambda s: s.p.copy(),
        separable=True,
    )

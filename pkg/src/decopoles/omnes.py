"""Truncated coherent-state superpositions and their collective decay.

A particle in a harmonic well, displaced by L0 and prepared in the
superposition a|alpha1> + b|alpha2| with alpha1 = 0 (gauge), decoheres
through a single resonance pole z0.  Working in the truncated Fock space
of dimension N+1:

* the two branches are quasi-orthogonal when Delta = alpha2 - alpha1 is
  large, with residual overlap exp(-Delta^2/2) plus a truncation
  correction bounded by (Delta^2/2)^(N+1)/(N+1)!;
* the surviving off-diagonal block decays through the exponential of an
  exponential exp(-Delta^2 (1 - exp(-i z0 t / hbar)));
* the small-t slope of log|rho_21| is the collective rate
  gamma_tilde = (m omega / 2 hbar^2) L0^2 gamma0 = Delta^2 gamma0,
  giving the separation-dependent decoherence time t_D = hbar/gamma_tilde
  with t_D L0^2 independent of L0.

All Fock amplitudes are evaluated in the log domain so truncations up to
N ~ 1e4 stay representable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .numerics import DensityMatrix
from .pole_models import CatalogueMatrix, Pole

_NORM_TOL = 1e-12


def _logsumexp(exponents: np.ndarray) -> float:
    m = float(np.max(exponents))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(exponents - m))))


def _log_fock_weights(alpha: float, N: int) -> np.ndarray:
    """log(alpha^n / sqrt(n!)) for n = 0..N; alpha = 0 gives only n = 0."""
    n = np.arange(N + 1)
    lg = np.array([math.lgamma(k + 1.0) for k in range(N + 1)])
    if alpha == 0.0:
        out = np.full(N + 1, -math.inf)
        out[0] = 0.0
        return out
    return n * math.log(alpha) - 0.5 * lg


@dataclass(frozen=True)
class QuasiCoherentState:
    """Coherent state truncated at Fock level N, renormalized to unit norm.

    alpha is real and nonnegative: zero momentum displacement makes the
    amplitude real, and the sign can always be absorbed by a coordinate
    flip.
    """

    alpha: float
    N: int

    def __post_init__(self):
        a = float(self.alpha)
        if not math.isfinite(a) or a < 0.0:
            raise ValidationError(f"alpha must be finite and >= 0, got {a!r}")
        n = int(self.N)
        if n < 1:
            raise ValidationError("truncation N must be at least 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "N", n)

    @property
    def log_norm(self) -> float:
        """log of the normalization constant (sum alpha^2k / k!)^(-1/2)."""
        return -0.5 * _logsumexp(2.0 * _log_fock_weights(self.alpha, self.N))

    def fock_vector(self) -> np.ndarray:
        """Unit-norm component vector in the Fock basis, length N+1."""
        v = np.exp(_log_fock_weights(self.alpha, self.N) + self.log_norm)
        nrm = float(np.linalg.norm(v))
        if abs(nrm - 1.0) > _NORM_TOL:
            raise ValidationError(f"truncated state norm {nrm} deviates from 1")
        return v


@dataclass(frozen=True)
class OmnesConfig:
    """Physical scales and superposition coefficients of the two-branch setup.

    The displacement maps to alpha2 = L0 sqrt(m omega / 2) / hbar with
    alpha1 = 0 by choice of origin, so Delta = alpha2.
    """

    m: float
    omega: float
    hbar: float
    gamma0: float
    L0: float
    a: complex
    b: complex
    N: int

    def __post_init__(self):
        for name in ("m", "omega", "hbar", "gamma0", "L0"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v <= 0.0:
                raise ValidationError(f"{name} must be a positive finite scale, got {v!r}")
            object.__setattr__(self, name, v)
        a = complex(self.a)
        b = complex(self.b)
        ssq = abs(a) ** 2 + abs(b) ** 2
        if abs(ssq - 1.0) > _NORM_TOL:
            raise ValidationError(f"|a|^2 + |b|^2 = {ssq} must be 1 within {_NORM_TOL}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        n = int(self.N)
        if n < 1:
            raise ValidationError("truncation N must be at least 1")
        object.__setattr__(self, "N", n)

    @property
    def alpha2(self) -> float:
        return self.L0 * math.sqrt(self.m * self.omega / 2.0) / self.hbar

    @property
    def delta(self) -> float:
        return self.alpha2

    def z0(self, omega_prime: float = 0.0) -> complex:
        """Resonance pole omega' - i gamma0 with the config's width."""
        return complex(float(omega_prime), -self.gamma0)

    def state2(self) -> QuasiCoherentState:
        return QuasiCoherentState(self.alpha2, self.N)


def overlap_truncated(s1: QuasiCoherentState, s2: QuasiCoherentState) -> float:
    """Truncated alternating overlap sum_{n<=N} (-(a1-a2)^2/2)^n / n!.

    Terms are accumulated in descending magnitude with exact (compensated)
    summation.  The result tracks exp(-Delta^2/2) within
    overlap_error_bound(Delta, N); its own floating-point accuracy is
    limited by cancellation to roughly one ulp of the largest term, which
    for Delta around 5 means absolute errors near 1e-11.
    """
    if s1.N != s2.N:
        raise ValidationError(f"truncations differ: {s1.N} != {s2.N}")
    x = 0.5 * (s1.alpha - s2.alpha) ** 2
    terms = []
    term = 1.0
    for n in range(s1.N + 1):
        terms.append(term)
        term *= -x / (n + 1.0)
    terms.sort(key=abs, reverse=True)
    return math.fsum(terms)


def fock_overlap(s1: QuasiCoherentState, s2: QuasiCoherentState) -> float:
    """Exact inner product of the two truncated, renormalized states.

    N1 N2 sum_{n<=N} (a1 a2)^n / n!, evaluated in the log domain.  All
    terms are nonnegative, so no cancellation occurs.  This differs from
    overlap_truncated at small N: the two agree only once both truncation
    corrections drop below the working precision.
    """
    if s1.N != s2.N:
        raise ValidationError(f"truncations differ: {s1.N} != {s2.N}")
    if s1.alpha == 0.0 or s2.alpha == 0.0:
        log_sum = 0.0  # only the n = 0 term survives
    else:
        n = np.arange(s1.N + 1)
        lg = np.array([math.lgamma(k + 1.0) for k in range(s1.N + 1)])
        log_sum = _logsumexp(n * math.log(s1.alpha * s2.alpha) - lg)
    return math.exp(s1.log_norm + s2.log_norm + log_sum)


def overlap_error_bound(delta: float, N: int) -> float:
    """Remainder ceiling (Delta^2/2)^(N+1) / (N+1)! for the truncated overlap."""
    delta = float(delta)
    if not math.isfinite(delta) or delta < 0.0:
        raise ValidationError("delta must be finite and >= 0")
    N = int(N)
    if N < 0:
        raise ValidationError("N must be >= 0")
    if delta == 0.0:
        return 0.0
    x = 0.5 * delta * delta
    return math.exp((N + 1) * math.log(x) - math.lgamma(N + 2.0))


@dataclass(frozen=True)
class MacroscopicityReport:
    """Margins of the two quasi-orthogonality conditions.

    Both margins are ratios normalized so that >= 1 means satisfied:
    lower_margin = Delta / min_delta, upper_margin = the truncation
    headroom factor * sqrt(2(N+1)) / Delta.
    """

    passed: bool
    delta: float
    lower_margin: float
    upper_margin: float
    min_delta: float
    truncation_factor: float


def macroscopicity_check(
    cfg: OmnesConfig,
    min_delta: float = 10.0,
    truncation_factor: float = 0.1,
) -> MacroscopicityReport:
    """Check Delta >> 1 and Delta << sqrt(2(N+1)) with factor-of-10 margins.

    The asymptotic conditions are read quantitatively as
    Delta >= min_delta and Delta <= truncation_factor * sqrt(2(N+1));
    the defaults demand an order of magnitude on each side.
    """
    delta = cfg.delta
    lower = delta / float(min_delta)
    upper = float(truncation_factor) * math.sqrt(2.0 * (cfg.N + 1)) / delta
    return MacroscopicityReport(
        passed=(lower >= 1.0 and upper >= 1.0),
        delta=delta,
        lower_margin=lower,
        upper_margin=upper,
        min_delta=float(min_delta),
        truncation_factor=float(truncation_factor),
    )


def _warn_if_not_macroscopic(cfg: OmnesConfig):
    report = macroscopicity_check(cfg)
    if not report.passed:
        warnings.warn(
            f"configuration is not macroscopic: Delta = {report.delta:.3g}, "
            f"margins ({report.lower_margin:.3g}, {report.upper_margin:.3g}); "
            "closed-form overlaps may be inaccurate",
            stacklevel=3,
        )


def _pole_width(z0: complex) -> float:
    z0 = complex(z0)
    if z0.imag > 0.0:
        raise ValidationError(f"Im z0 = {z0.imag} must be <= 0 (decaying pole)")
    return -z0.imag


def evolved_overlaps(cfg: OmnesConfig, z0: complex, t: float):
    """The four frame inner products at time t, closed form.

    Returns (<1(0)|1(t)>, <1(0)|2(t)>, <2(0)|1(t)>, <2(0)|2(t)>) in the
    vacuum gauge alpha1 = 0: the first is exactly 1, the cross terms carry
    the static residual exp(-Delta^2/2), and the last decays through
    exp(-Delta^2 (1 - exp(-i z0 t / hbar))).
    """
    _pole_width(z0)
    _warn_if_not_macroscopic(cfg)
    d2 = cfg.delta**2
    s = math.exp(-0.5 * d2)
    w = np.exp(-d2 * (1.0 - np.exp(-1j * complex(z0) * t / cfg.hbar)))
    return (complex(1.0), complex(s), complex(s), complex(w))


@dataclass(frozen=True)
class NDComponents:
    """Off-diagonal block in the {|alpha1(0)>, |alpha2(0)>} frame at one time.

    rho21 = conj(a) b exp(-Delta^2 (1 - exp(-i z0 t/hbar))) carries the
    decaying coherence; rho12 is its conjugate.  The diagonal residuals
    are exact frame projections of the cross outer products and stay below
    exp(-Delta^2/2) for any unit (a, b).  ``envelope`` is the closed-form
    magnitude exp(-Delta^2 (1 - exp(-gamma0 t/hbar))), which equals
    |rho21 / (conj(a) b)| exactly when the pole has no real part.
    """

    t: float
    rho11: complex
    rho12: complex
    rho21: complex
    rho22: complex
    envelope: float

    def __post_init__(self):
        if abs(self.rho12 - self.rho21.conjugate()) > 1e-12:
            raise ValidationError("rho12 must equal conj(rho21)")


def nd_block(cfg: OmnesConfig, z0: complex, t: float) -> NDComponents:
    """Evaluate the four frame components of the coherence block at time t."""
    gamma = _pole_width(z0)
    _warn_if_not_macroscopic(cfg)
    d2 = cfg.delta**2
    s = math.exp(-0.5 * d2)
    w = complex(np.exp(-d2 * (1.0 - np.exp(-1j * complex(z0) * t / cfg.hbar))))
    cross = cfg.a.conjugate() * cfg.b
    rho21 = cross * w
    return NDComponents(
        t=float(t),
        rho11=complex(2.0 * cross.real * s),
        rho12=rho21.conjugate(),
        rho21=rho21,
        rho22=complex(2.0 * s * (cross * w).real),
        envelope=math.exp(-d2 * (1.0 - math.exp(-gamma * t / cfg.hbar))),
    )


@dataclass(frozen=True)
class CollectiveRate:
    gamma_tilde: float
    t_D: float
    t_R: float


def collective_rate(cfg: OmnesConfig) -> CollectiveRate:
    """gamma_tilde = (m omega / 2 hbar^2) L0^2 gamma0 and its timescales.

    t_D = hbar / gamma_tilde shrinks as 1/L0^2 while t_R = hbar / gamma0
    is separation-independent, so t_D * L0^2 = 2 hbar^3 / (m omega gamma0)
    exactly.  In the macroscopic regime gamma_tilde / gamma0 = Delta^2 >> 1
    guarantees t_D << t_R.
    """
    _warn_if_not_macroscopic(cfg)
    gamma_tilde = (cfg.m * cfg.omega / (2.0 * cfg.hbar * cfg.hbar)) * cfg.L0 * cfg.L0 * cfg.gamma0
    return CollectiveRate(gamma_tilde, cfg.hbar / gamma_tilde, cfg.hbar / cfg.gamma0)


# --- full Fock-space construction -------------------------------------------


@dataclass(frozen=True)
class FockDensityParts:
    """Evolved superposition and its diagonal/off-diagonal split.

    ``state`` is the unnormalized evolved vector a|0> + b|alpha2(t)>;
    ``norm`` its length (the non-unitary evolution loses norm).  ``rho``
    is the trace-1 outer product of the normalized state; the D/ND parts
    are the raw (unnormalized) projector pieces, so
    rho_unnormalized = rho_d + rho_nd holds exactly.
    """

    state: np.ndarray
    norm: float
    rho: DensityMatrix
    rho_unnormalized: np.ndarray
    rho_d: np.ndarray
    rho_nd: np.ndarray


def density_components(cfg: OmnesConfig, z0: complex, t: float) -> FockDensityParts:
    _pole_width(z0)
    v2 = cfg.state2().fock_vector().astype(complex)
    phases = np.exp(-1j * np.arange(cfg.N + 1) * complex(z0) * t / cfg.hbar)
    v2t = v2 * phases
    e0 = np.zeros(cfg.N + 1, dtype=complex)
    e0[0] = 1.0

    state = cfg.a * e0 + cfg.b * v2t
    norm = float(np.linalg.norm(state))
    if norm <= 0.0:
        raise ValidationError("evolved state has zero norm")
    unit = state / norm
    rho = DensityMatrix(np.outer(unit, unit.conj()))

    rho_d = (abs(cfg.a) ** 2) * np.outer(e0, e0.conj()) + (abs(cfg.b) ** 2) * np.outer(
        v2t, v2t.conj()
    )
    rho_nd = cfg.a * cfg.b.conjugate() * np.outer(e0, v2t.conj()) + cfg.a.conjugate() * cfg.b * np.outer(v2t, e0.conj())
    return FockDensityParts(
        state=state,
        norm=norm,
        rho=rho,
        rho_unnormalized=np.outer(state, state.conj()),
        rho_d=rho_d,
        rho_nd=rho_nd,
    )


def build_density_matrix(cfg: OmnesConfig, z0: complex, t: float) -> DensityMatrix:
    """Trace-1 density matrix of the evolved superposition in Fock space.

    Componentwise evolution by exp(-i n z0 t / hbar) followed by
    renormalization; see FockDensityParts for the unnormalized pieces and
    the D/ND projections.
    """
    return density_components(cfg, z0, t).rho


# --- two-dimensional frame picture -------------------------------------------


def _truncated_w(cfg: OmnesConfig, z0: complex, t: float) -> complex:
    """<alpha2(0)|alpha2(t)> at finite N: N2^2 sum (Delta^2 e^{-i z0 t/hbar})^n / n!."""
    d2 = cfg.delta**2
    n = np.arange(cfg.N + 1)
    lg = np.array([math.lgamma(k + 1.0) for k in range(cfg.N + 1)])
    log_n2_sq = 2.0 * cfg.state2().log_norm
    decay = -1j * complex(z0) * t / cfg.hbar
    exponents = log_n2_sq + n * math.log(d2) + n * decay.real - lg
    return complex(np.sum(np.exp(exponents) * np.exp(1j * n * decay.imag)))


def frame_amplitudes(cfg: OmnesConfig, z0: complex, t: float, closed_form: bool = True):
    """Projections (f1, f2) of the evolved state on the initial branch pair.

    f1 = a + b s and f2 = a s + b w(t), with s the static branch overlap
    and w the self-overlap of the displaced branch.  ``closed_form`` picks
    the infinite-N expressions; otherwise both use the exact truncated
    sums, matching density_components to machine precision.
    """
    if closed_form:
        d2 = cfg.delta**2
        s = math.exp(-0.5 * d2)
        w = complex(np.exp(-d2 * (1.0 - np.exp(-1j * complex(z0) * t / cfg.hbar))))
    else:
        s = math.exp(cfg.state2().log_norm)
        w = _truncated_w(cfg, z0, t)
    f1 = cfg.a + cfg.b * s
    f2 = cfg.a * s + cfg.b * w
    return f1, f2


def frame_projection(
    cfg: OmnesConfig, z0: complex, t: float, closed_form: bool = True
) -> DensityMatrix:
    """2x2 density matrix of the state seen through the initial branch frame.

    Entry (i, j) is f_i conj(f_j), normalized to unit trace; the frame is
    treated as orthonormal, which the macroscopic regime justifies up to
    the exp(-Delta^2/2) cross-overlap.
    """
    _pole_width(z0)
    f1, f2 = frame_amplitudes(cfg, z0, t, closed_form)
    f = np.array([f1, f2], dtype=complex)
    mat = np.outer(f, f.conj())
    tr = float(mat[0, 0].real + mat[1, 1].real)
    if tr <= 0.0:
        raise ValidationError("frame projection has zero weight")
    return DensityMatrix(mat / tr)


def frame_catalogue_matrix(cfg: OmnesConfig) -> CatalogueMatrix:
    """Exact pole expansion of the (unnormalized) 2x2 frame matrix.

    Requires a real damping pole z0 = -i gamma0 (no oscillation), so every
    frame entry is a polynomial in x = exp(-gamma0 t / hbar): f2 carries
    powers 0..N from the truncated self-overlap and |f2|^2 powers 0..2N
    via the Cauchy product.  The constant (x^0) part forms the equilibrium
    matrix; powers k >= 1 become poles at k gamma0.  Feed the result to a
    partition rule to drop the fast collective cluster.
    """
    s = math.exp(cfg.state2().log_norm)
    f1 = cfg.a + cfg.b * s

    # w_N(t) = sum_k q_k x^k with q_k = N2^2 Delta^(2k) / k!
    d2 = cfg.delta**2
    k = np.arange(cfg.N + 1)
    lg = np.array([math.lgamma(i + 1.0) for i in range(cfg.N + 1)])
    log_n2_sq = 2.0 * cfg.state2().log_norm
    q = np.exp(log_n2_sq + k * math.log(d2) - lg)

    f2 = cfg.b * q.astype(complex)
    f2[0] += cfg.a * s
    c = np.convolve(f2, f2.conj()).real  # imaginary parts cancel pairwise

    top = f1 * f2.conj()
    equilibrium = np.array([[abs(f1) ** 2, top[0]], [top[0].conjugate(), c[0]]])
    poles = []
    amps = []
    for kk in range(1, 2 * cfg.N + 1):
        upper = top[kk] if kk <= cfg.N else 0.0
        amp = np.array([[0.0, upper], [np.conj(upper), c[kk]]])
        poles.append(Pole(0.0, kk * cfg.gamma0))
        amps.append(amp)
    return CatalogueMatrix(poles, equilibrium, amps, cfg.hbar)

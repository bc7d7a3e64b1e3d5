"""Dense complex linear algebra and quadrature kernels.

Three self-contained tools used throughout the package:

* ``eigh`` -- cyclic Jacobi eigensolver for Hermitian complex matrices,
  with a deterministic eigenvector phase convention so bases computed at
  nearby times can be compared directly.
* ``principal_value_integral`` -- Cauchy principal value of
  f(w)/(w0 - w) by symmetric-pair quadrature around the singularity.
* ``matrix_pencil_fit`` -- complex-exponential spectral estimation
  (Hankel shift pair + rank-revealing SVD + least-squares amplitudes).

All operations are pure functions of immutable inputs and are safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, RankDeficiencyError, ValidationError

HERMITICITY_TOL = 1e-12
JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def _as_square_complex(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        raise ValidationError("empty matrix")
    if not np.all(np.isfinite(a.view(float))):
        raise ValidationError("matrix contains NaN or Inf entries")
    return a


@dataclass(frozen=True)
class HermitianMatrix:
    """A dim x dim complex matrix with A = A^H enforced at construction.

    The check is relative: max |A - A^H| must not exceed 1e-12 * max|A|.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = _as_square_complex(self.entries)
        scale = np.max(np.abs(a))
        dev = np.max(np.abs(a - a.conj().T))
        if dev > HERMITICITY_TOL * max(scale, 1.0):
            raise ValidationError(
                f"matrix is not Hermitian: max deviation {dev:.3e} at scale {scale:.3e}"
            )
        # store the exactly-Hermitian average so downstream math sees A == A^H
        object.__setattr__(self, "entries", (a + a.conj().T) / 2.0)
        self.entries.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, trace-one complex matrix (positivity is the caller's task).

    Construction enforces Hermiticity and unit trace to 1e-12; positive
    semidefiniteness is a property of how the matrix was built (e.g. as a
    normalized outer product) and can be audited with ``min_eigenvalue``.
    """

    entries: np.ndarray

    def __post_init__(self):
        h = HermitianMatrix(self.entries)
        tr = np.trace(h.entries).real
        if abs(tr - 1.0) > 1e-12:
            raise ValidationError(f"trace is {tr!r}, expected 1 within 1e-12")
        object.__setattr__(self, "entries", h.entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def min_eigenvalue(self) -> float:
        return float(eigh(self.entries).eigenvalues[-1])


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted descending plus orthonormal, phase-fixed vectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.  Phase fix: the
    largest-magnitude component of each vector is real and nonnegative.
    Within a degenerate cluster (eigenvalue spacing < 1e-9 * ||A||) the
    vectors are an arbitrary orthonormal basis of the cluster subspace, so
    comparisons across decompositions must use subspace metrics there.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    off_diagonal_residual: float = field(default=0.0)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _phase_fix(vectors: np.ndarray) -> np.ndarray:
    out = np.array(vectors, dtype=complex)
    for k in range(out.shape[1]):
        j = int(np.argmax(np.abs(out[:, k])))
        piv = out[j, k]
        if abs(piv) > 0.0:
            out[:, k] *= np.conj(piv) / abs(piv)
            out[j, k] = abs(piv)  # kill the residual imaginary dust
    return out


def eigh(a) -> EigenDecomposition:
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Accepts a ``HermitianMatrix`` or anything convertible to one.  Sweeps
    annihilate every off-diagonal pivot in turn; iteration stops when the
    off-diagonal Frobenius mass drops below 1e-13 * ||A|| and fails with a
    ``ConvergenceError`` after 100 sweeps.

    Each pivot (p, q) is removed by the unitary that first rotates the
    pivot phase away (diag(1, e^{-i phi}) with phi = arg A[p,q]) and then
    applies the real Jacobi rotation with tan(2 theta) = 2|A[p,q]| /
    (A[p,p] - A[q,q]).
    """
    if not isinstance(a, HermitianMatrix):
        a = HermitianMatrix(a)
    n = a.dim
    work = np.array(a.entries, dtype=complex)
    vecs = np.eye(n, dtype=complex)
    norm_a = float(np.linalg.norm(work))

    def off_norm(m):
        total = float(np.sum(np.abs(m) ** 2))
        diag = float(np.sum(np.abs(np.diag(m)) ** 2))
        return math.sqrt(max(total - diag, 0.0))

    if norm_a > 0.0:
        converged = False
        for _ in range(JACOBI_MAX_SWEEPS):
            if off_norm(work) < JACOBI_OFF_TOL * norm_a:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = work[p, q]
                    if apq == 0.0:
                        continue
                    phi = np.angle(apq)
                    theta = 0.5 * math.atan2(2.0 * abs(apq), work[p, p].real - work[q, q].real)
                    c = math.cos(theta)
                    s = math.sin(theta)
                    ep = complex(math.cos(phi), math.sin(phi))
                    em = ep.conjugate()
                    rp = work[p, :].copy()
                    rq = work[q, :].copy()
                    work[p, :] = c * rp + (s * ep) * rq
                    work[q, :] = -s * rp + (c * ep) * rq
                    cp = work[:, p].copy()
                    cq = work[:, q].copy()
                    work[:, p] = c * cp + (s * em) * cq
                    work[:, q] = -s * cp + (c * em) * cq
                    work[p, q] = np.conj(work[q, p])
                    vp = vecs[:, p].copy()
                    vq = vecs[:, q].copy()
                    vecs[:, p] = c * vp + (s * em) * vq
                    vecs[:, q] = -s * vp + (c * em) * vq
        else:
            converged = off_norm(work) < JACOBI_OFF_TOL * norm_a
        if not converged:
            res = off_norm(work) / norm_a
            raise ConvergenceError(
                f"Jacobi sweep limit ({JACOBI_MAX_SWEEPS}) reached, "
                f"relative off-diagonal residual {res:.3e}",
                residual=res,
            )

    values = np.diag(work).real.copy()
    order = np.argsort(values)[::-1]
    values = values[order]
    vecs = _phase_fix(vecs[:, order])
    residual = off_norm(work) / norm_a if norm_a > 0.0 else 0.0
    return EigenDecomposition(values, vecs, residual)


def _adaptive_simpson(f, a: float, b: float, tol: float, fa, fm, fb, depth: int):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
    right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
    err = (left + right - whole) / 15.0
    if abs(err) <= tol:
        return left + right + err
    if depth <= 0:
        raise ConvergenceError(
            f"adaptive Simpson failed to converge, local error estimate {abs(err):.3e}",
            residual=abs(err),
        )
    return _adaptive_simpson(f, a, m, tol / 2.0, fa, flm, fm, depth - 1) + _adaptive_simpson(
        f, m, b, tol / 2.0, fm, frm, fb, depth - 1
    )


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 48) -> float:
    """Adaptive Simpson quadrature of a scalar callable on [a, b]."""
    if not (b > a):
        raise ValidationError(f"bad interval [{a}, {b}]")
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    return _adaptive_simpson(f, a, b, tol, fa, fm, fb, max_depth)


def principal_value_integral(f, omega0: float, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Cauchy principal value of integral f(w) / (omega0 - w) dw over [lo, hi].

    The singularity must lie strictly inside the domain and f must be
    continuous there.  Substituting u = w - omega0 pairs the points at
    omega0 +/- u, so the 1/u divergence cancels analytically:

        P.V. = integral_0^r [f(omega0 - u) - f(omega0 + u)] / u du  +  remainder

    with r = min(omega0 - lo, hi - omega0).  The symmetric part is done by
    adaptive Simpson (tolerance ``tol``, default 1e-9 absolute); the value
    at u = 0 is the limit -2 f'(omega0), estimated by a central difference
    with step r * 1e-7.  The leftover one-sided strip is regular and is
    integrated by plain adaptive Simpson.
    """
    if not (lo < omega0 < hi):
        raise ValidationError(f"singularity {omega0} not strictly inside [{lo}, {hi}]")
    r = min(omega0 - lo, hi - omega0)
    h = r * 1e-7

    def paired(u):
        if u < h:
            u = h
        return (f(omega0 - u) - f(omega0 + u)) / u

    value = adaptive_simpson(paired, 0.0, r, tol)
    if omega0 - lo > r:
        value += adaptive_simpson(lambda w: f(w) / (omega0 - w), lo, omega0 - r, tol)
    elif hi - omega0 > r:
        value += adaptive_simpson(lambda w: f(w) / (omega0 - w), omega0 + r, hi, tol)
    return value


def _check_uniform_grid(times: np.ndarray) -> float:
    if times.size < 2:
        raise ValidationError("need at least two samples")
    steps = np.diff(times)
    if np.any(steps <= 0.0):
        raise ValidationError("times must be strictly increasing")
    dt = float(steps[0])
    if np.max(np.abs(steps - dt)) > 1e-12 * max(abs(dt), 1.0):
        raise ValidationError("time grid is not uniform (relative tolerance 1e-12)")
    return dt


def matrix_pencil_fit(times, values, order: int, rank_rtol: float = 1e-10):
    """Fit s(t) ~ sum_k a_k exp(z_k t) by the matrix-pencil method.

    Needs a uniform time grid with at least 2 * order + 2 samples.  A
    Hankel matrix of the samples is split into a shifted pair (Y0, Y1);
    the pencil eigenvalues of (Y1, Y0), computed through a rank-``order``
    truncated SVD of Y0, give the per-step ratios exp(z_k dt).  Amplitudes
    come from one dense least-squares solve on the full series.

    Imaginary parts of the recovered exponents are only defined modulo the
    sampling Nyquist band (-pi/dt, pi/dt].

    Returns a list of (z_k, a_k) pairs sorted by |Im z_k| ascending, ties
    broken toward slower decay.  Raises ``RankDeficiencyError`` when the
    data's numerical rank (singular values above ``rank_rtol`` times the
    largest) is below ``order``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=complex)
    if t.shape != y.shape or t.ndim != 1:
        raise ValidationError("times and values must be 1-D arrays of equal length")
    if order < 1:
        raise ValidationError("order must be >= 1")
    if t.size < 2 * order + 2:
        raise ValidationError(f"need at least {2 * order + 2} samples for order {order}")
    dt = _check_uniform_grid(t)

    n = y.size
    window = min(max(n // 2, order), n - order)
    hankel = np.empty((n - window, window + 1), dtype=complex)
    for i in range(n - window):
        hankel[i, :] = y[i : i + window + 1]
    y0 = hankel[:, :-1]
    y1 = hankel[:, 1:]

    u, sig, vh = np.linalg.svd(y0, full_matrices=False)
    if sig[0] == 0.0:
        raise RankDeficiencyError("signal is identically zero", effective_rank=0)
    effective = int(np.sum(sig > rank_rtol * sig[0]))
    if effective < order:
        raise RankDeficiencyError(
            f"numerical rank {effective} is below the requested order {order}; "
            f"retry with order <= {effective}",
            effective_rank=effective,
        )

    pencil = np.diag(1.0 / sig[:order]) @ (u[:, :order].conj().T @ y1 @ vh[:order, :].conj().T)
    ratios = np.linalg.eigvals(pencil)
    if np.any(np.abs(ratios) == 0.0):
        raise ConvergenceError("pencil produced a zero ratio; data is not exponential")
    z = np.log(ratios) / dt

    basis = np.exp(np.outer(t, z))
    amps, *_ = np.linalg.lstsq(basis, y, rcond=None)
    idx = sorted(range(order), key=lambda k: (abs(z[k].imag), -z[k].real))
    return [(complex(z[k]), complex(amps[k])) for k in idx]


def fit_residual(times, values, modes) -> float:
    """RMS misfit of a recovered mode set against the samples."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=complex)
    model = np.zeros_like(y)
    for z, a in modes:
        model += a * np.exp(z * t)
    return float(np.sqrt(np.mean(np.abs(model - y) ** 2)))

"""Pole catalogues and the scalar decay models built on them.

An expectation-value trajectory is synthesized from a catalogue: a final
equilibrium value, a set of decaying modes (each a resonance pole with a
complex amplitude), and an optional slow power-law background tail.  The
module derives the characteristic times of the standard one- and two-pole
models, partitions catalogues into persistent and short-lived modes, and
builds the truncated signal used as the preferred (post-decoherence)
trajectory.

Width convention: a stored ``gamma`` is always the e-folding rate of the
mode's envelope, i.e. the mode decays as exp(-gamma t / hbar).  Catalogues
assembled from pole pairs map a pair (z_i, z_j) with z = omega - i gamma/2
onto a single mode with envelope rate (gamma_i + gamma_j) / 2 and beat
frequency omega_j - omega_i; see ``PoleCatalogue.from_pole_pairs``.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .numerics import HermitianMatrix

RULE_SECOND_SMALLEST = "second-smallest-gamma"
RULE_CUSTOM = "custom-f"
RULE_SLOWEST = "slowest-only"
RULE_BACKGROUND = "background-only"
_NAMED_RULES = (RULE_SECOND_SMALLEST, RULE_SLOWEST, RULE_BACKGROUND)

BOUNDARY_RELEVANT = "relevant"
BOUNDARY_IRRELEVANT = "irrelevant"

_REL_SLACK = 1e-12


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class Pole:
    """One resonance: frequency ``omega`` and strictly positive width ``gamma``.

    Represents the complex energy z = omega - i gamma / 2 in pair language;
    as a catalogue mode, ``gamma`` is the envelope e-folding rate directly.
    """

    omega: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "gamma", _require_positive("gamma", self.gamma))
        if not math.isfinite(self.omega):
            raise ValidationError("omega must be finite")

    @property
    def z(self) -> complex:
        return complex(self.omega, -0.5 * self.gamma)


@dataclass(frozen=True)
class KhalfinTail:
    """Slow background decay amplitude * (1 + t / tau) ** (-p).

    Finite at t = 0, power law for t >> tau.  The exponent defaults to 3
    elsewhere in the package but is free here; amplitude 0 means no tail.
    """

    amplitude: float
    tau: float
    p: float

    def __post_init__(self):
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "tau", _require_positive("tau", self.tau))
        object.__setattr__(self, "p", _require_positive("p", self.p))
        if not math.isfinite(self.amplitude):
            raise ValidationError("amplitude must be finite")

    def __call__(self, t):
        return self.amplitude * (1.0 + np.asarray(t, dtype=float) / self.tau) ** (-self.p)


@dataclass(frozen=True)
class Mode:
    """A catalogue entry: pole plus complex amplitude."""

    pole: Pole
    amplitude: complex

    def __post_init__(self):
        amp = complex(self.amplitude)
        if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise ValidationError("mode amplitude must be finite")
        object.__setattr__(self, "amplitude", amp)


def _canonical_modes(modes) -> tuple:
    out = []
    for entry in modes:
        if isinstance(entry, Mode):
            out.append(entry)
        else:
            pole, amp = entry
            if not isinstance(pole, Pole):
                pole = Pole(*pole)
            out.append(Mode(pole, amp))
    out.sort(
        key=lambda m: (m.pole.gamma, m.pole.omega, m.amplitude.real, m.amplitude.imag)
    )
    return tuple(out)


@dataclass(frozen=True)
class PoleCatalogue:
    """Equilibrium value, decaying modes, optional background tail.

    Modes are stored sorted ascending by gamma (canonical order, so any
    input permutation synthesizes identically).  At least one mode or a
    tail must be present.  ``pair_product`` marks catalogues whose modes
    came from pole pairs and therefore carry meaningful beat frequencies;
    only those may be rendered with oscillatory phases.
    """

    equilibrium: float
    modes: tuple
    khalfin: Optional[KhalfinTail] = None
    hbar: float = 1.0
    pair_product: bool = False

    def __post_init__(self):
        object.__setattr__(self, "equilibrium", float(self.equilibrium))
        if not math.isfinite(self.equilibrium):
            raise ValidationError("equilibrium must be finite")
        object.__setattr__(self, "hbar", _require_positive("hbar", self.hbar))
        object.__setattr__(self, "modes", _canonical_modes(self.modes))
        if not self.modes and self.khalfin is None:
            raise ValidationError("catalogue needs at least one mode or a Khalfin tail")
        if self.khalfin is not None and not isinstance(self.khalfin, KhalfinTail):
            raise ValidationError("khalfin must be a KhalfinTail")

    @classmethod
    def from_pole_pairs(cls, pairs, equilibrium=0.0, khalfin=None, hbar=1.0):
        """Build a catalogue from (pole_i, pole_j, amplitude) cross terms.

        Each pair contributes one mode decaying at (gamma_i + gamma_j) / 2
        whose phase rotates at the beat frequency omega_j - omega_i.
        """
        modes = []
        for pi, pj, amp in pairs:
            modes.append(
                Mode(
                    Pole(pj.omega - pi.omega, 0.5 * (pi.gamma + pj.gamma)),
                    amp,
                )
            )
        return cls(equilibrium, tuple(modes), khalfin, hbar, pair_product=True)

    @property
    def gammas(self) -> tuple:
        return tuple(m.pole.gamma for m in self.modes)


@dataclass(frozen=True)
class Signal:
    """Sampled trajectory on a strictly increasing uniform time grid."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        if t.ndim != 1 or t.size == 0:
            raise ValidationError("times must be a nonempty 1-D array")
        if v.shape != t.shape:
            raise ValidationError("values must match times in shape")
        if t.size > 1:
            steps = np.diff(t)
            if np.any(steps <= 0.0):
                raise ValidationError("times must be strictly increasing")
            dt = steps[0]
            if np.max(np.abs(steps - dt)) > 1e-12 * max(abs(dt), 1.0):
                raise ValidationError("time grid must be uniform to 1e-12 relative")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v.view(float)))):
            raise ValidationError("signal contains NaN or Inf")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.times.size


@dataclass(frozen=True)
class TimescaleReport:
    """Relaxation time, decoherence time and the mode partition behind them.

    ``p_relevant`` holds the indices (into the catalogue's sorted modes) of
    poles that survive past t_D, ``p_irrelevant`` the rest.  For threshold
    rules the split is gamma_i <= hbar / t_D (or strict <, recorded in
    ``boundary``); the background-only rule declares every pole irrelevant.
    t_D <= t_R always; a violation is a construction error.
    """

    t_R: float
    t_D: float
    p_relevant: tuple
    p_irrelevant: tuple
    rule: str
    boundary: str = BOUNDARY_RELEVANT
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "t_R", float(self.t_R))
        object.__setattr__(self, "t_D", float(self.t_D))
        object.__setattr__(self, "p_relevant", tuple(sorted(self.p_relevant)))
        object.__setattr__(self, "p_irrelevant", tuple(sorted(self.p_irrelevant)))
        if self.rule not in _NAMED_RULES + (RULE_CUSTOM,):
            raise ValidationError(f"unknown rule {self.rule!r}")
        if self.boundary not in (BOUNDARY_RELEVANT, BOUNDARY_IRRELEVANT):
            raise ValidationError(f"unknown boundary mode {self.boundary!r}")
        if not (self.t_D > 0.0 and self.t_R > 0.0):
            raise ValidationError("characteristic times must be positive")
        if self.t_D > self.t_R * (1.0 + _REL_SLACK):
            raise ValidationError(
                f"t_D = {self.t_D!r} exceeds t_R = {self.t_R!r}; "
                "decoherence cannot be slower than relaxation"
            )
        overlap = set(self.p_relevant) & set(self.p_irrelevant)
        if overlap:
            raise ValidationError(f"partition overlaps at indices {sorted(overlap)}")


def synthesize(cat: PoleCatalogue, grid, rendering: str = "envelope") -> Signal:
    """Evaluate S(t) = equilibrium + sum_i a_i exp(-gamma_i t / hbar) + tail(t).

    ``rendering='envelope'`` keeps only the real damping factors.
    ``rendering='full'`` additionally rotates each mode by
    exp(-i omega_i t / hbar) and requires a pair-product catalogue, since
    only there do the stored frequencies mean beat frequencies.
    """
    t = np.asarray(grid, dtype=float)
    if t.size == 0:
        raise ValidationError("empty time grid")
    if rendering not in ("envelope", "full"):
        raise ValidationError(f"unknown rendering {rendering!r}")
    if rendering == "full" and not cat.pair_product:
        raise ValidationError(
            "full rendering requires a pair-product catalogue; "
            "use PoleCatalogue.from_pole_pairs"
        )
    values = _mode_sum(cat, t, rendering, range(len(cat.modes)))
    return Signal(t, values)


def _mode_sum(cat: PoleCatalogue, t: np.ndarray, rendering: str, indices) -> np.ndarray:
    values = np.full(t.shape, complex(cat.equilibrium), dtype=complex)
    for i in indices:
        mode = cat.modes[i]
        term = mode.amplitude * np.exp(-mode.pole.gamma * t / cat.hbar)
        if rendering == "full":
            term = term * np.exp(-1j * mode.pole.omega * t / cat.hbar)
        values += term
    if cat.khalfin is not None:
        values += cat.khalfin(t)
    return values


def model1_times(gamma0: float, hbar: float = 1.0):
    """Characteristic times of the single-pole model with background tail.

    The four decaying contributions vanish on (hbar/gamma0, 2 hbar/gamma0,
    2 hbar/gamma0, inf): pole-pair term, two pole-background cross terms,
    and the power-law background whose decay has no exponential scale.
    """
    gamma0 = _require_positive("gamma0", gamma0)
    hbar = _require_positive("hbar", hbar)
    return (hbar / gamma0, 2.0 * hbar / gamma0, 2.0 * hbar / gamma0, math.inf)


@dataclass(frozen=True)
class Model2Times:
    t_R: float
    t_D: float
    intermediate: float


def model2_times(gamma0: float, gamma1: float, hbar: float = 1.0) -> Model2Times:
    """Two-pole characteristic times: t_R = hbar/gamma0, t_D = hbar/gamma1.

    The cross terms between the two poles decay on hbar / (gamma1 + gamma0).
    Warns when gamma0 is not well separated below gamma1 (ratio < 10), since
    the relaxation/decoherence split loses meaning there.
    """
    gamma0 = _require_positive("gamma0", gamma0)
    gamma1 = _require_positive("gamma1", gamma1)
    hbar = _require_positive("hbar", hbar)
    if gamma0 >= gamma1 / 10.0:
        warnings.warn(
            f"gamma0 = {gamma0} is not << gamma1 = {gamma1}; "
            "timescale separation is weak",
            stacklevel=2,
        )
    return Model2Times(hbar / gamma0, hbar / gamma1, hbar / (gamma1 + gamma0))


def collective_rate_rule(m: float, omega: float, L0: float, hbar: float = 1.0) -> Callable:
    """Threshold rule set by the collective rate (m omega / 2 hbar^2) L0^2 gamma0."""
    scale = _require_positive("m*omega*L0^2/(2 hbar^2)", m * omega * L0 * L0 / (2.0 * hbar * hbar))

    def rate(gammas: Sequence[float]) -> float:
        return scale * min(gammas)

    return rate


def partition_report(
    gammas: Sequence[float],
    hbar: float = 1.0,
    rule="second-smallest-gamma",
    boundary: str = BOUNDARY_RELEVANT,
) -> TimescaleReport:
    """Partition a sorted width list into persistent and short-lived modes.

    Rules:

    * ``'second-smallest-gamma'``: t_D = hbar / gamma_1 when two or more
      poles exist, else t_D = t_R.  The default when mode widths carry no
      known structure.
    * ``'slowest-only'``: threshold at gamma_0 itself, keeping only the
      slowest cluster; t_D = t_R.
    * ``'background-only'``: every pole is declared irrelevant and the
      preferred signal keeps just equilibrium plus tail; t_D = t_R.
    * a callable ``f(gammas) -> rate``: t_D = hbar / f(...).  The shipped
      example is :func:`collective_rate_rule`.

    ``boundary`` decides the fate of poles sitting exactly at the
    threshold: ``'relevant'`` uses gamma <= hbar/t_D, ``'irrelevant'``
    uses strict <.  Both readings appear in two-pole treatments, where the
    threshold pole itself is the one being dropped.
    """
    gammas = tuple(float(g) for g in gammas)
    if not gammas:
        raise ValidationError("no poles to partition")
    if any(g <= 0.0 or not math.isfinite(g) for g in gammas):
        raise ValidationError("widths must be positive and finite")
    if list(gammas) != sorted(gammas):
        raise ValidationError("widths must be sorted ascending")
    hbar = _require_positive("hbar", hbar)
    gamma0 = gammas[0]
    t_r = hbar / gamma0

    if callable(rule):
        threshold = float(rule(gammas))
        if not math.isfinite(threshold) or threshold <= 0.0:
            raise ValidationError(f"custom rule returned a nonpositive rate: {threshold!r}")
        rule_name = RULE_CUSTOM
    elif rule == RULE_SECOND_SMALLEST:
        threshold = gammas[1] if len(gammas) > 1 else gammas[0]
        rule_name = RULE_SECOND_SMALLEST
    elif rule == RULE_SLOWEST:
        threshold = gammas[0]
        rule_name = RULE_SLOWEST
    elif rule == RULE_BACKGROUND:
        return TimescaleReport(
            t_R=t_r,
            t_D=t_r,
            p_relevant=(),
            p_irrelevant=tuple(range(len(gammas))),
            rule=RULE_BACKGROUND,
            boundary=boundary,
            hbar=hbar,
        )
    else:
        raise ValidationError(f"unknown rule {rule!r}")

    t_d = hbar / threshold
    if boundary == BOUNDARY_RELEVANT:
        relevant = tuple(i for i, g in enumerate(gammas) if g <= threshold)
    elif boundary == BOUNDARY_IRRELEVANT:
        relevant = tuple(i for i, g in enumerate(gammas) if g < threshold)
    else:
        raise ValidationError(f"unknown boundary mode {boundary!r}")
    irrelevant = tuple(i for i in range(len(gammas)) if i not in set(relevant))
    return TimescaleReport(
        t_R=t_r,
        t_D=t_d,
        p_relevant=relevant,
        p_irrelevant=irrelevant,
        rule=rule_name,
        boundary=boundary,
        hbar=hbar,
    )


def decoherence_time(
    cat: PoleCatalogue,
    rule="second-smallest-gamma",
    boundary: str = BOUNDARY_RELEVANT,
) -> TimescaleReport:
    """Derive t_R, t_D and the mode partition for a catalogue.

    See :func:`partition_report` for the rule and boundary semantics; the
    catalogue's sorted widths and hbar are used.
    """
    if not cat.modes:
        raise ValidationError("catalogue has no poles to partition")
    return partition_report(cat.gammas, cat.hbar, rule, boundary)


def check_report_matches(cat, report: TimescaleReport):
    """Verify a report's partition against a catalogue's widths.

    ``cat`` is anything exposing sorted ``gammas`` and ``hbar`` (scalar or
    matrix catalogue).  Raises when the partition could not have been
    derived from these widths under the report's rule and boundary.
    """
    n = len(cat.gammas)
    indices = set(report.p_relevant) | set(report.p_irrelevant)
    if indices != set(range(n)):
        raise ValidationError(
            f"report partitions indices {sorted(indices)} but the catalogue has {n} modes"
        )
    if abs(report.hbar - cat.hbar) > _REL_SLACK * cat.hbar:
        raise ValidationError("report and catalogue disagree on hbar")
    if report.rule == RULE_BACKGROUND:
        if report.p_relevant:
            raise ValidationError("background-only report must drop every pole")
        return
    threshold = cat.hbar / report.t_D
    tol = _REL_SLACK * threshold
    if report.boundary == BOUNDARY_RELEVANT:
        expected = tuple(i for i, g in enumerate(cat.gammas) if g <= threshold + tol)
    else:
        expected = tuple(i for i, g in enumerate(cat.gammas) if g < threshold - tol)
    if expected != report.p_relevant:
        raise ValidationError(
            f"report partition {report.p_relevant} does not match the catalogue's "
            f"threshold split {expected}"
        )


def preferred_signal(
    cat: PoleCatalogue,
    report: TimescaleReport,
    grid,
    rendering: str = "envelope",
) -> Signal:
    """Synthesize the catalogue with every p-irrelevant mode removed.

    The truncation applies for all t: the returned trajectory is
    equilibrium + surviving modes + tail from t = 0 on, and is meaningful
    as the decohered trajectory only past the report's t_D.
    """
    check_report_matches(cat, report)
    t = np.asarray(grid, dtype=float)
    if t.size == 0:
        raise ValidationError("empty time grid")
    if rendering == "full" and not cat.pair_product:
        raise ValidationError("full rendering requires a pair-product catalogue")
    if rendering not in ("envelope", "full"):
        raise ValidationError(f"unknown rendering {rendering!r}")
    values = _mode_sum(cat, t, rendering, report.p_relevant)
    return Signal(t, values)


@dataclass(frozen=True)
class CoincidenceResult:
    max_deviation: float
    bound: float
    passed: bool
    t_D: float


def coincidence_check(
    signal: Signal,
    preferred: Signal,
    cat: PoleCatalogue,
    report: TimescaleReport,
) -> CoincidenceResult:
    """Compare full and truncated trajectories past t_D.

    Returns the maximum pointwise deviation for t >= t_D together with the
    analytic ceiling sum_{dropped} |a_i| exp(-gamma_i t_D / hbar); the
    check passes when the deviation stays within the ceiling (plus 1e-12
    relative slack for rounding).
    """
    if not np.array_equal(signal.times, preferred.times):
        raise ValidationError("signals live on different grids")
    check_report_matches(cat, report)
    mask = signal.times >= report.t_D
    if not np.any(mask):
        raise ValidationError(f"grid contains no samples at or past t_D = {report.t_D}")
    deviation = float(np.max(np.abs(signal.values[mask] - preferred.values[mask])))
    bound = 0.0
    for i in report.p_irrelevant:
        mode = cat.modes[i]
        bound += abs(mode.amplitude) * math.exp(-mode.pole.gamma * report.t_D / cat.hbar)
    passed = deviation <= bound * (1.0 + _REL_SLACK) or deviation == 0.0
    return CoincidenceResult(deviation, bound, passed, report.t_D)


class CatalogueMatrix:
    """Matrix-valued catalogue: rho(t) = EQ + sum_k A_k exp(-gamma_k t / hbar).

    Every entry shares one pole list; per-pole amplitudes are Hermitian
    matrices so the evaluated matrix is Hermitian at all times.  This is
    the per-mode tagging needed to drop poles entrywise when building a
    preferred state.  Only envelope (real damping) rendering is defined at
    the matrix level.
    """

    def __init__(self, poles, equilibrium, amplitudes, hbar: float = 1.0):
        poles = tuple(poles)
        if not all(isinstance(p, Pole) for p in poles):
            raise ValidationError("poles must be Pole instances")
        amplitudes = tuple(np.asarray(a, dtype=complex) for a in amplitudes)
        if len(amplitudes) != len(poles):
            raise ValidationError("need exactly one amplitude matrix per pole")
        eq = HermitianMatrix(equilibrium).entries
        dim = eq.shape[0]
        fixed = []
        for a in amplitudes:
            h = HermitianMatrix(a)
            if h.dim != dim:
                raise ValidationError("amplitude matrices must share the equilibrium's dim")
            fixed.append(h.entries)
        order = sorted(range(len(poles)), key=lambda k: (poles[k].gamma, poles[k].omega))
        self.poles = tuple(poles[k] for k in order)
        self.amplitudes = tuple(fixed[k] for k in order)
        self.equilibrium = eq
        self.hbar = _require_positive("hbar", hbar)
        self.dim = dim

    @property
    def gammas(self) -> tuple:
        return tuple(p.gamma for p in self.poles)

    def evaluate(self, t: float, keep=None) -> np.ndarray:
        """Hermitian matrix at time t, optionally restricted to ``keep`` modes."""
        indices = range(len(self.poles)) if keep is None else keep
        out = np.array(self.equilibrium, dtype=complex)
        for k in indices:
            out += self.amplitudes[k] * math.exp(-self.poles[k].gamma * t / self.hbar)
        return out

    def dropped_envelope(self, t: float, dropped) -> float:
        """Frobenius ceiling on the modes removed at time t."""
        total = 0.0
        for k in dropped:
            total += float(np.linalg.norm(self.amplitudes[k])) * math.exp(
                -self.poles[k].gamma * t / self.hbar
            )
        return total


# --- serialization ---------------------------------------------------------


def catalogue_to_json(cat: PoleCatalogue) -> str:
    """Serialize to the interchange schema.

    The pair-product flag is not part of the schema; a reloaded catalogue
    is a plain (envelope) catalogue.
    """
    doc = {
        "hbar": cat.hbar,
        "equilibrium": cat.equilibrium,
        "modes": [
            {
                "omega": m.pole.omega,
                "gamma": m.pole.gamma,
                "amp_re": m.amplitude.real,
                "amp_im": m.amplitude.imag,
            }
            for m in cat.modes
        ],
        "khalfin": None
        if cat.khalfin is None
        else {"amplitude": cat.khalfin.amplitude, "tau": cat.khalfin.tau, "p": cat.khalfin.p},
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def catalogue_from_json(text: str) -> PoleCatalogue:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"catalogue JSON is malformed: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("catalogue JSON must be an object")
    required = {"hbar", "equilibrium", "modes", "khalfin"}
    missing = required - doc.keys()
    if missing:
        raise ValidationError(f"catalogue JSON lacks keys {sorted(missing)}")
    extra = doc.keys() - required
    if extra:
        raise ValidationError(f"catalogue JSON has unknown keys {sorted(extra)}")
    modes = []
    for i, m in enumerate(doc["modes"]):
        try:
            modes.append(Mode(Pole(m["omega"], m["gamma"]), complex(m["amp_re"], m["amp_im"])))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"mode {i} is malformed: {exc}") from exc
    tail = doc["khalfin"]
    khalfin = None if tail is None else KhalfinTail(tail["amplitude"], tail["tau"], tail["p"])
    return PoleCatalogue(doc["equilibrium"], tuple(modes), khalfin, doc["hbar"])


def signal_to_csv(signal: Signal) -> str:
    """CSV text with header t,re,im at 17 significant digits (lossless)."""
    lines = ["t,re,im"]
    for t, v in zip(signal.times, signal.values):
        lines.append(f"{t:.17g},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"


def signal_from_csv(text: str) -> Signal:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "t,re,im":
        raise ValidationError("signal CSV must start with header 't,re,im'")
    times = []
    values = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise ValidationError(f"bad CSV row: {ln!r}")
        try:
            times.append(float(parts[0]))
            values.append(complex(float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ValidationError(f"bad CSV row {ln!r}: {exc}") from exc
    return Signal(np.asarray(times), np.asarray(values))

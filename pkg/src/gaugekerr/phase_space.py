"""Weighted coherent-state phase-space samples and their moment estimators.

An :class:`Ensemble` is a sample of the gauge distribution for one bosonic
mode.  Each trajectory carries ``log(alpha / sqrt(n_bar))``, the relative
number variable ``log(alpha*beta / n_bar)`` and ``log(Omega)``; ``log(beta)`` is
derived.  Keeping ``log n`` as its own coordinate matters at large ``n_bar``:
the amplitude noise on ``alpha`` and ``beta`` is huge and cancels almost
exactly in their product, so summing the two logs would lose every
significant digit of ``n - n_bar``.
"""

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .stats import BatchSpec, ratio_stderr

LAB = "lab"
ROTATING = "rotating"
FRAMES = (LAB, ROTATING)

# log-magnitude above which a component counts as overflowed
DIVERGENCE_LOG = 700.0
# |<Omega + Omega*>| below this fraction of <|Omega|> is treated as degenerate
NORM_TOLERANCE = 1e-12


class NormalizationError(ArithmeticError):
    """The weight normalisation <Omega + Omega*> is numerically zero."""


class PhasePoint(NamedTuple):
    log_alpha: complex
    log_beta: complex
    log_omega: complex
    diverged: bool = False

    @property
    def n(self):
        return complex(np.exp(self.log_alpha + self.log_beta))


@dataclass(frozen=True)
class Ensemble:
    """Trajectory ensemble plus clock and physical parameters.

    ``kt`` is the signed integral of ``kappa dt`` along the run, so that the
    rotating-frame phase is ``n_bar * kt`` even after the sign of ``kappa``
    has been flipped.  ``step`` is the global noise-step counter; it never
    goes backwards.
    """

    log_alpha_rel: np.ndarray
    log_n_rel: np.ndarray
    log_omega: np.ndarray
    n_bar: float
    kappa: float = 1.0
    t: float = 0.0
    kt: float = 0.0
    frame: str = LAB
    step: int = 0
    diverged: np.ndarray = field(default=None)

    def __post_init__(self):
        la = np.asarray(self.log_alpha_rel, dtype=complex).reshape(-1)
        if la.size == 0:
            raise ValueError("ensemble must contain at least one point")
        object.__setattr__(self, "log_alpha_rel", la)
        object.__setattr__(self, "log_n_rel", np.asarray(self.log_n_rel, dtype=complex).reshape(-1))
        object.__setattr__(self, "log_omega", np.asarray(self.log_omega, dtype=complex).reshape(-1))
        if not (self.log_n_rel.shape == la.shape == self.log_omega.shape):
            raise ValueError("trajectory arrays must have equal length")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if not self.n_bar > 0:
            raise ValueError("n_bar must be positive")
        div = np.zeros(la.shape, dtype=bool) if self.diverged is None else np.asarray(self.diverged, dtype=bool)
        object.__setattr__(self, "diverged", div | find_diverged(la, self.log_n_rel, self.log_omega, self.n_bar))

    @classmethod
    def from_amplitudes(cls, alpha, beta, omega=1.0, n_bar=1.0, **kw):
        """Build an ensemble from raw ``alpha``, ``beta``, ``Omega`` values."""
        alpha, beta, omega = np.broadcast_arrays(
            np.atleast_1d(np.asarray(alpha, dtype=complex)),
            np.atleast_1d(np.asarray(beta, dtype=complex)),
            np.atleast_1d(np.asarray(omega, dtype=complex)),
        )
        root = math.sqrt(n_bar)
        with np.errstate(divide="ignore"):
            la = np.log(alpha / root)
            ln = np.log((alpha / root) * (beta / root))
            lw = np.log(omega)
        return cls(la, ln, lw, n_bar=n_bar, **kw)

    def __len__(self):
        return self.log_alpha_rel.size

    @property
    def size(self):
        return len(self)

    @property
    def log_scale(self):
        """log sqrt(n_bar), the offset between relative and absolute amplitude logs."""
        return 0.5 * math.log(self.n_bar)

    @property
    def log_beta_rel(self):
        return self.log_n_rel - self.log_alpha_rel

    @property
    def log_alpha(self):
        return self.log_alpha_rel + self.log_scale

    @property
    def log_beta(self):
        return self.log_beta_rel + self.log_scale

    @property
    def alpha(self):
        return np.exp(self.log_alpha)

    @property
    def beta(self):
        return np.exp(self.log_beta)

    @property
    def omega(self):
        return np.exp(self.log_omega)

    @property
    def n(self):
        return self.n_bar * np.exp(self.log_n_rel)

    @property
    def tau(self):
        """Dimensionless time sqrt(n_bar) |kappa| t / 2 pi."""
        return math.sqrt(self.n_bar) * abs(self.kappa) * self.t / (2.0 * math.pi)

    @property
    def frame_phase(self):
        return self.n_bar * self.kt

    @property
    def points(self):
        lb = self.log_beta
        return [
            PhasePoint(complex(a), complex(b), complex(w), bool(d))
            for a, b, w, d in zip(self.log_alpha, lb, self.log_omega, self.diverged)
        ]

    def point(self, i):
        return PhasePoint(
            complex(self.log_alpha[i]),
            complex(self.log_beta[i]),
            complex(self.log_omega[i]),
            bool(self.diverged[i]),
        )

    def replace(self, **changes):
        return replace(self, **changes)


def find_diverged(log_alpha_rel, log_n_rel, log_omega, n_bar):
    """Mask of trajectories with a non-finite or overflowing component."""
    scale = 0.5 * math.log(n_bar)
    bad = ~(np.isfinite(log_alpha_rel) & np.isfinite(log_n_rel) & np.isfinite(log_omega))
    with np.errstate(invalid="ignore"):
        bad |= log_alpha_rel.real + scale > DIVERGENCE_LOG
        bad |= log_n_rel.real - log_alpha_rel.real + scale > DIVERGENCE_LOG
        bad |= log_omega.real > DIVERGENCE_LOG
    return bad


def init_coherent(n_bar, count, frame=LAB, kappa=1.0):
    """Delta-function sample of the coherent state |sqrt(n_bar)>.

    Every point has alpha = beta = sqrt(n_bar) and Omega = 1.
    """
    if not n_bar > 0:
        raise ValueError("n_bar must be positive")
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    count = int(count)
    zeros = np.zeros(count, dtype=complex)
    return Ensemble(zeros, zeros.copy(), zeros.copy(), n_bar=float(n_bar), kappa=kappa, frame=frame)


@dataclass(frozen=True)
class MomentEstimate:
    value: complex
    stderr_re: float
    stderr_im: float
    norm: float
    excluded: int = 0

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag


def moment_terms(ensemble, m, n):
    """Per-trajectory numerator and denominator terms of the moment ratio.

    Returns ``(num, den, num_shift, den_shift)``: the true terms are
    ``num * exp(num_shift)`` and ``den * exp(den_shift)``.  Only healthy
    trajectories are included.  Common powers of ``n = alpha beta`` are taken
    from the stored number coordinate and ``sqrt(n_bar)`` is folded into the
    shift, so the exponents stay O(1) even at enormous ``n_bar``.
    """
    ok = ~ensemble.diverged
    la = ensemble.log_alpha_rel[ok]
    ln = ensemble.log_n_rel[ok]
    lb = ln - la
    lw = ensemble.log_omega[ok]
    k = min(m, n)
    # grouping keeps (m, n) and (n, m) bitwise conjugate
    e_ab = lw + (k * ln + ((m - k) * lb + (n - k) * la))
    e_ba = lw + (k * ln + ((m - k) * la + (n - k) * lb))
    num_shift = float(max(e_ab.real.max(), e_ba.real.max()))
    den_shift = float(lw.real.max())
    num = np.exp(e_ab - num_shift) + np.conj(np.exp(e_ba - num_shift))
    w = np.exp(lw - den_shift)
    den = (w + np.conj(w)).real
    return num, den, num_shift, den_shift


def estimate_moment(ensemble, m, n, batches=BatchSpec()):
    """Estimate the normally ordered moment <(a^dagger)^m a^n>.

    Ratio of ensemble means ``<Omega beta^m alpha^n + (Omega alpha^m beta^n)^*>``
    over ``<Omega + Omega^*>``, evaluated from the log variables with a common
    scale removed so that weights far outside the float range still give a
    finite answer.  Diverged trajectories are left out and counted in
    ``excluded``.  Error bars are batch-mean standard errors.
    """
    if m < 0 or n < 0 or int(m) != m or int(n) != n:
        raise ValueError("moment orders must be non-negative integers")
    excluded = int(ensemble.diverged.sum())
    if excluded == len(ensemble):
        raise NormalizationError("every trajectory has diverged")
    num, den, num_shift, den_shift = moment_terms(ensemble, int(m), int(n))
    count = len(den)
    # reduce the parts as real arrays so the order matches den.sum()
    num_sum = complex(num.real.sum(), num.imag.sum())
    den_sum = den.sum()
    abs_w = np.exp(ensemble.log_omega[~ensemble.diverged].real - den_shift)
    norm_scaled = den_sum / count
    norm = math.exp(den_shift) * norm_scaled if den_shift < 709 else math.copysign(math.inf, norm_scaled)
    if not abs(norm_scaled) > NORM_TOLERANCE * abs_w.mean():
        raise NormalizationError(f"<Omega + Omega*> = {norm!r} is numerically zero")
    log_factor = num_shift - den_shift
    power = _amplitude_power(ensemble.n_bar, m + n)
    # real denominator: divide componentwise, complex division adds round-off
    ratio = complex(num_sum.real / den_sum, num_sum.imag / den_sum)
    err_re, err_im = ratio_stderr(num, den, batches)
    if log_factor == 0.0:
        value = ratio * power
        err_re, err_im = err_re * power, err_im * power
    else:
        log_factor += 0.5 * (m + n) * math.log(ensemble.n_bar)
        value = _scaled(ratio, log_factor)
        err_re, err_im = _scaled(err_re, log_factor).real, _scaled(err_im, log_factor).real
    return MomentEstimate(value, err_re, err_im, float(norm), excluded)


def _scaled(x, log_factor):
    """x * exp(log_factor) without intermediate overflow; +-inf if unrepresentable."""
    x = complex(x)
    return complex(_scaled_real(x.real, log_factor), _scaled_real(x.imag, log_factor))


def _scaled_real(x, log_factor):
    if x == 0 or math.isnan(x):
        return x
    lg = math.log(abs(x)) + log_factor
    if lg > 709.78:
        return math.copysign(math.inf, x)
    return math.copysign(math.exp(lg), x)


def _amplitude_power(n_bar, order):
    """sqrt(n_bar)**order, exact for perfect squares such as n_bar = 100."""
    try:
        return math.sqrt(n_bar) ** order
    except OverflowError:
        return math.inf


def mean_amplitude(ensemble, batches=BatchSpec()):
    """<a> in the frame the ensemble is stored in."""
    return estimate_moment(ensemble, 0, 1, batches)


def quadratures(ensemble, batches=BatchSpec()):
    """Lab-frame quadrature estimates ``(X, Y)`` with X = (a + a^dagger)/2, Y = (a - a^dagger)/2i.

    Both are real; a rotating-frame ensemble is first counter-rotated.
    """
    if ensemble.frame == ROTATING:
        ensemble = to_lab_frame(ensemble)
    a = mean_amplitude(ensemble, batches)
    x = MomentEstimate(complex(a.value.real), a.stderr_re, 0.0, a.norm, a.excluded)
    y = MomentEstimate(complex(a.value.imag), a.stderr_im, 0.0, a.norm, a.excluded)
    return x, y


def to_lab_frame(ensemble):
    """Undo the mean-field rotation: alpha -> alpha e^{-i phi}, beta -> beta e^{+i phi}.

    ``phi`` is ``n_bar`` times the accumulated signed ``kappa t``; ``n`` is unchanged.
    """
    if ensemble.frame != ROTATING:
        raise ValueError("ensemble is not in the rotating frame")
    phi = ensemble.frame_phase
    return ensemble.replace(log_alpha_rel=ensemble.log_alpha_rel - 1j * phi, frame=LAB)

"""Gauged stochastic equations for the Kerr oscillator, in log variables.

Ito equations (g the diffusion gauge, dW_j real Wiener increments)::

    d alpha = i alpha [-kappa n_x dt + dW_g1]
    d beta  = i beta  [ kappa n_x dt + dW_g2^*]
    d Omega = -Omega n_y e^{-g} sqrt(i kappa) (dW_1 - i s dW_2)
    dW_gj   = sqrt(i kappa) (dW_j cosh g + i s dW_{3-j} sinh g)

with ``n = alpha beta`` and ``s = sign(kappa)``.  For kappa > 0 this is the
usual drift-gauged form.  For kappa < 0 the orientation ``s`` flips: that is
the complex-conjugate image of the kappa > 0 equations, and the only choice
for which the weight noise still cancels the drift-gauge change in *both*
amplitude equations (see ``drift_gauge_residual``).

In Stratonovich form with ``x = (log alpha, log n, log Omega)``::

    d log alpha = [-i kappa n_x + i kappa / 2] dt + i sqrt(i kappa)(c dW_1 + i s sh dW_2)
    d log n     = i sqrt(i kappa) e^{-g} (dW_1 - i s dW_2)
    d log Omega = |kappa| e^{-2g} n^* / 2 dt - n_y e^{-g} sqrt(i kappa)(dW_1 - i s dW_2)

``log n`` has no drift and constant noise, so it is integrated exactly and
never suffers the cancellation between the large alpha and beta noises.
The gauge is evaluated once per step at the pre-step state, which keeps its
state dependence in the Ito sense.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .noise import wiener_increments
from .phase_space import LAB, ROTATING, Ensemble, NormalizationError, find_diverged, PhasePoint
from .phase_space import estimate_moment, mean_amplitude, quadratures
from .records import RunRecord

CONSTANT = "constant"
ADAPTIVE = "adaptive"

MIDPOINT = "midpoint"
HEUN = "heun"
ITO_EULER = "ito_euler"
SCHEMES = (MIDPOINT, HEUN, ITO_EULER)

MIDPOINT_ITERATIONS = 4
MIDPOINT_TOL = 1e-12
ABORT_FRACTION = 0.5
# slack on the adaptive gauge horizon for clock round-off
HORIZON_SLACK = 1e-9


class GaugeHorizonError(ValueError):
    """Adaptive gauge evaluated past twice the reversal time."""


class EnsembleDivergedError(RuntimeError):
    """More than half of the trajectories have diverged."""

    def __init__(self, message, record=None, ensemble=None):
        super().__init__(message)
        self.record = record
        self.ensemble = ensemble


@dataclass(frozen=True)
class GaugeConfig:
    mode: str = CONSTANT
    g0: float = 0.0
    tau_R: float = 0.5
    n_bar: float = 1.0

    def __post_init__(self):
        if self.mode not in (CONSTANT, ADAPTIVE):
            raise ValueError(f"unknown gauge mode {self.mode!r}")
        if self.mode == ADAPTIVE and not (self.tau_R > 0 and self.n_bar > 0):
            raise ValueError("adaptive gauge needs tau_R > 0 and n_bar > 0")


@dataclass(frozen=True)
class NoiseStream:
    master_seed: int
    trajectory_index: int
    step_counter: int


@dataclass(frozen=True)
class StepParams:
    dt: float
    kappa: float = 1.0
    frame: str = LAB
    gauge: GaugeConfig = GaugeConfig()
    scheme: str = MIDPOINT
    substeps: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.frame not in (LAB, ROTATING):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")


def reverse(params):
    """Same parameters with the sign of kappa (and so of H) flipped."""
    return replace(params, kappa=-params.kappa)


def sqrt_i_kappa(kappa):
    """Principal sqrt(i kappa): sqrt|kappa| e^{+i pi/4} for kappa > 0, e^{-i pi/4} for kappa < 0."""
    return math.sqrt(abs(kappa)) * complex(math.cos(math.pi / 4), math.copysign(math.sin(math.pi / 4), kappa))


def _orientation(kappa):
    return -1.0 if kappa < 0 else 1.0


def gauged_noises(xi1, xi2, g, kappa):
    """Transformed noises xi_gj = sqrt(i kappa) [xi_j cosh g + i s xi_{3-j} sinh g]."""
    root = sqrt_i_kappa(kappa)
    s = _orientation(kappa)
    c, sh = np.cosh(g), np.sinh(g)
    return root * (xi1 * c + 1j * s * xi2 * sh), root * (xi2 * c + 1j * s * xi1 * sh)


# -- gauge ---------------------------------------------------------------

def _adaptive_gauge(cfg, tau, log_n_rel):
    """Adaptive gauge for relative log-number ``log(n / n_bar)`` (array)."""
    horizon = 2.0 * cfg.tau_R
    if tau > horizon * (1.0 + HORIZON_SLACK) + 1e-300:
        raise GaugeHorizonError(f"tau={tau} beyond 2*tau_R={horizon}")
    ln_nbar = math.log(cfg.n_bar)
    remaining = max(horizon - tau, 0.0)
    re = log_n_rel.real + ln_nbar
    with np.errstate(divide="ignore"):
        log_a = math.log(8.0 * math.pi) - 0.5 * ln_nbar + 2.0 * re + (math.log(remaining) if remaining > 0 else -np.inf)
        log_ny = re + np.log(np.abs(np.sin(log_n_rel.imag)))
    log_b = 1.5 * np.logaddexp(0.0, math.log(4.0) + 2.0 * log_ny)
    return np.logaddexp(log_a, log_b) / 6.0


def gauge_value(cfg, tau, point):
    """Diffusion gauge for one phase-space point at dimensionless time ``tau``.

    Constant mode returns ``g0``.  Adaptive mode evaluates
    (1/6) ln{ (8 pi / sqrt(n_bar)) |n|^2 (2 tau_R - tau) + (1 + 4 n_y^2)^{3/2} }.
    """
    if cfg.mode == CONSTANT:
        return float(cfg.g0)
    log_n_rel = np.array([point.log_alpha + point.log_beta - math.log(cfg.n_bar)])
    return float(_adaptive_gauge(cfg, tau, log_n_rel)[0])


def _gauge_array(cfg, tau, log_n_rel):
    if cfg.mode == CONSTANT:
        return float(cfg.g0)
    return _adaptive_gauge(cfg, tau, log_n_rel)


# -- drift ----------------------------------------------------------------

def drift(point, kappa, frame=LAB, n_bar=None, g=0.0, calculus="stratonovich"):
    """Deterministic rates of change for one point.

    ``calculus="ito"`` gives the raw Ito drifts divided by the variable
    (alpha'/alpha, beta'/beta, Omega'/Omega).  The default gives the
    Stratonovich drifts of log alpha, log beta, log Omega used by the
    integrators; these carry the extra i kappa/2 and |kappa| e^{-2g} n^*/2
    terms from the change of variables and calculus.
    """
    n = complex(np.exp(point.log_alpha + point.log_beta))
    nx = n.real
    if frame == ROTATING:
        if n_bar is None:
            raise ValueError("rotating frame needs n_bar")
        nx = nx - n_bar
    da = -1j * kappa * nx
    db = 1j * kappa * nx
    if calculus == "ito":
        return da, db, 0j
    if calculus != "stratonovich":
        raise ValueError("calculus must be 'ito' or 'stratonovich'")
    corr = 0.5j * kappa
    dw = 0.5 * abs(kappa) * math.exp(-2.0 * g) * n.conjugate()
    return da + corr, db - corr, dw


def drift_gauge_residual(n, kappa, g):
    """How far the weight noise is from absorbing the drift-gauge change.

    Returns the two residuals ``B_alpha . G - (A_alpha - A'_alpha)`` and the
    same for beta, per unit amplitude, where ``A`` is the ungauged drift
    ``-/+ i kappa n`` and ``A'`` the gauged ``-/+ i kappa n_x``.  Both vanish
    for a consistent gauge.
    """
    root = sqrt_i_kappa(kappa)
    s = _orientation(kappa)
    c, sh = math.cosh(g), math.sinh(g)
    ny = n.imag
    G = -ny * math.exp(-g) * root * np.array([1.0, -1j * s])
    b_alpha = 1j * root * np.array([c, 1j * s * sh])
    b_beta = 1j * root.conjugate() * np.array([-1j * s * sh, c])
    need_alpha = -1j * kappa * (1j * ny)
    need_beta = 1j * kappa * (1j * ny)
    return complex(b_alpha @ G - need_alpha), complex(b_beta @ G - need_beta)


# -- integrator kernels ----------------------------------------------------

def _number_x(ln, n_bar, frame):
    """n_x, or n_x - n_bar in the rotating frame, from relative log n."""
    if frame == ROTATING:
        return n_bar * np.expm1(ln).real
    return n_bar * np.exp(ln).real


def _increments(ln, g, kappa, n_bar, frame, dt, dw1, dw2):
    """Stratonovich increments of (log alpha, log n, log Omega) with coefficients at ``ln``."""
    root = sqrt_i_kappa(kappa)
    s = _orientation(kappa)
    eg = np.exp(-g)
    c, sh = np.cosh(g), np.sinh(g)
    nx = _number_x(ln, n_bar, frame)
    n = n_bar * np.exp(ln)
    common = dw1 - 1j * s * dw2
    d_la = (-1j * kappa * nx + 0.5j * kappa) * dt + 1j * root * (c * dw1 + 1j * s * sh * dw2)
    d_ln = 1j * root * eg * common
    d_lw = 0.5 * abs(kappa) * eg * eg * np.conj(n) * dt - n.imag * eg * root * common
    return d_la, d_ln, d_lw


def _ito_euler_increments(ln, g, kappa, n_bar, frame, dt, dw1, dw2):
    """Raw-variable Euler-Maruyama, written as exact log updates of alpha, n, Omega."""
    root = sqrt_i_kappa(kappa)
    s = _orientation(kappa)
    eg = np.exp(-g)
    c, sh = np.cosh(g), np.sinh(g)
    nx = _number_x(ln, n_bar, frame)
    n = n_bar * np.exp(ln)
    dwg1 = root * (dw1 * c + 1j * s * dw2 * sh)
    dwg2_conj = np.conj(root) * (dw2 * c - 1j * s * dw1 * sh)
    u_a = 1j * (-kappa * nx * dt + dwg1)
    u_b = 1j * (kappa * nx * dt + dwg2_conj)
    u_w = -n.imag * eg * root * (dw1 - 1j * s * dw2)
    d_la = np.log1p(u_a)
    return d_la, d_la + np.log1p(u_b), np.log1p(u_w)


def _advance(state, params, n_bar, seed, step0, nsteps, t0, idx):
    """Advance arrays ``state = [la, ln, lw, diverged]`` in place by ``nsteps`` steps."""
    la, ln, lw, div = state
    dt, kappa, frame = params.dt, params.kappa, params.frame
    for k in range(nsteps):
        step = step0 + k
        tau = math.sqrt(n_bar) * abs(kappa) * (t0 + k * dt) / (2.0 * math.pi)
        g = _gauge_array(params.gauge, tau, ln)
        dw1, dw2 = wiener_increments(seed, idx, step, dt, params.substeps)
        args = (g, kappa, n_bar, frame, dt, dw1, dw2)
        failed = np.zeros(la.shape, dtype=bool)
        with np.errstate(all="ignore"):
            if params.scheme == MIDPOINT:
                inc = _increments(ln, *args)
                for it in range(MIDPOINT_ITERATIONS):
                    ln_mid = ln + 0.5 * inc[1]
                    new = _increments(ln_mid, *args)
                    change = max_rel_change(inc, new)
                    inc = new
                    if it and np.all(change <= MIDPOINT_TOL):
                        break
                failed = ~(change <= MIDPOINT_TOL)
            elif params.scheme == HEUN:
                f0 = _increments(ln, *args)
                f1 = _increments(ln + f0[1], *args)
                inc = tuple(0.5 * (a + b) for a, b in zip(f0, f1))
            else:
                inc = _ito_euler_increments(ln, *args)
            new_la = la + inc[0]
            new_ln = ln + inc[1]
            new_lw = lw + inc[2]
            bad = failed | find_diverged(new_la, new_ln, new_lw, n_bar)
        keep = div | bad
        la[:] = np.where(keep, la, new_la)
        ln[:] = np.where(keep, ln, new_ln)
        lw[:] = np.where(keep, lw, new_lw)
        div |= bad


def max_rel_change(old, new):
    """Per-trajectory largest relative change between two increment triples."""
    out = 0.0
    for a, b in zip(old, new):
        scale = np.maximum(np.abs(b), 1e-300)
        out = np.maximum(out, np.abs(b - a) / scale)
    return out


def step(point, params, stream, tau, n_bar, noise=None):
    """One integration step for a single point.

    ``noise`` optionally supplies ``(dW1, dW2)`` in place of the stream's
    draws (use ``(0, 0)`` for a noise-free step).  ``tau`` only enters
    through the adaptive gauge.
    """
    if point.diverged:
        raise ValueError("cannot step a diverged point")
    scale = 0.5 * math.log(n_bar)
    la = np.array([point.log_alpha - scale])
    ln = np.array([point.log_alpha + point.log_beta - 2.0 * scale])
    lw = np.array([point.log_omega])
    div = np.zeros(1, dtype=bool)
    t0 = 2.0 * math.pi * tau / (math.sqrt(n_bar) * abs(params.kappa)) if params.kappa else 0.0
    if noise is None:
        _advance([la, ln, lw, div], params, n_bar, stream.master_seed, stream.step_counter, 1,
                 t0, np.array([stream.trajectory_index]))
    else:
        _advance_with_noise([la, ln, lw, div], params, n_bar, tau, noise)
    return PhasePoint(complex(la[0] + scale), complex(ln[0] - la[0] + scale), complex(lw[0]), bool(div[0]))


def _advance_with_noise(state, params, n_bar, tau, noise):
    # single step with caller-supplied increments; shares the kernels above
    la, ln, lw, div = state
    g = _gauge_array(params.gauge, tau, ln)
    dw1, dw2 = (np.asarray(x, dtype=float) for x in noise)
    args = (g, params.kappa, n_bar, params.frame, params.dt, dw1, dw2)
    if params.scheme == ITO_EULER:
        inc = _ito_euler_increments(ln, *args)
    elif params.scheme == HEUN:
        f0 = _increments(ln, *args)
        f1 = _increments(ln + f0[1], *args)
        inc = tuple(0.5 * (a + b) for a, b in zip(f0, f1))
    else:
        inc = _increments(ln, *args)
        for _ in range(MIDPOINT_ITERATIONS):
            inc = _increments(ln + 0.5 * inc[1], *args)
    la += inc[0]
    ln += inc[1]
    lw += inc[2]


# -- ensemble evolution ----------------------------------------------------

def record_row(ensemble):
    """One RunRecord row of lab-frame observables for ``ensemble``."""
    row = {"tau": ensemble.tau, "diverged_count": int(ensemble.diverged.sum())}
    try:
        x, y = quadratures(ensemble)
        num = estimate_moment(ensemble, 1, 1)
        a = mean_amplitude(ensemble)
    except NormalizationError:
        nan = math.nan
        row.update(X_mean=nan, X_err=nan, Y_mean=nan, Y_err=nan, n_mean=nan, n_err=nan,
                   norm=0.0, env_mean=nan, env_err=nan)
        return row
    env = abs(a.value)
    if env > 0:
        env_err = math.hypot(a.value.real * a.stderr_re, a.value.imag * a.stderr_im) / env
    else:
        env_err = math.hypot(a.stderr_re, a.stderr_im)
    row.update(
        X_mean=x.value.real, X_err=x.stderr_re,
        Y_mean=y.value.real, Y_err=y.stderr_re,
        n_mean=num.value.real, n_err=num.stderr_re,
        norm=num.norm, env_mean=env, env_err=env_err,
    )
    return row


def _split(n, workers):
    edges = np.linspace(0, n, workers + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def evolve(ensemble, duration, params, record_every=1, seed=0, workers=1,
           include_initial=True, callback=None):
    """Integrate every trajectory for ``duration`` (physical time).

    Rows are recorded whenever the global step counter is a multiple of
    ``record_every`` (plus the starting state when ``include_initial``).
    Work is split into contiguous trajectory ranges over ``workers`` threads;
    noise is keyed by global trajectory index and step, and all reductions
    happen on the gathered arrays, so output does not depend on ``workers``.
    ``callback(ensemble)`` is called at every recorded step.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if params.frame != ensemble.frame:
        raise ValueError("params.frame differs from the ensemble frame")
    nsteps = max(1, int(round(duration / params.dt)))
    dt = duration / nsteps
    params = replace(params, dt=dt)
    kappa = params.kappa
    n_bar = ensemble.n_bar

    la = ensemble.log_alpha_rel.copy()
    ln = ensemble.log_n_rel.copy()
    lw = ensemble.log_omega.copy()
    div = ensemble.diverged.copy()
    ntraj = len(la)
    chunks = _split(ntraj, max(1, int(workers)))
    idx_all = np.arange(ntraj, dtype=np.uint64)

    def snapshot(k):
        return Ensemble(la.copy(), ln.copy(), lw.copy(), n_bar=n_bar, kappa=kappa,
                        t=ensemble.t + k * dt, kt=ensemble.kt + kappa * k * dt,
                        frame=ensemble.frame, step=ensemble.step + k, diverged=div.copy())

    record = RunRecord(metadata={"dt": dt, "steps": nsteps, "record_every": record_every,
                                 "scheme": params.scheme, "workers": workers})
    if include_initial:
        record.append(record_row(ensemble))
        if callback:
            callback(ensemble)
    start = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=len(chunks)) if len(chunks) > 1 else None
    try:
        k = 0
        while k < nsteps:
            gstep = ensemble.step + k
            to_next = record_every - (gstep % record_every)
            n_here = min(to_next, nsteps - k)
            t0 = ensemble.t + k * dt

            def work(chunk, k=k, n_here=n_here, t0=t0):
                a, b = chunk
                sub = [la[a:b], ln[a:b], lw[a:b], div[a:b]]
                _advance(sub, params, n_bar, seed, ensemble.step + k, n_here, t0, idx_all[a:b])

            if pool is None:
                for ch in chunks:
                    work(ch)
            else:
                list(pool.map(work, chunks))
            k += n_here
            if (ensemble.step + k) % record_every == 0:
                snap = snapshot(k)
                if div.mean() > ABORT_FRACTION:
                    raise EnsembleDivergedError(
                        f"{int(div.sum())} of {ntraj} trajectories diverged by tau={snap.tau:.4g}",
                        record, snap)
                record.append(record_row(snap))
                if callback:
                    callback(snap)
    finally:
        if pool is not None:
            pool.shutdown()
    final = snapshot(nsteps)
    if div.mean() > ABORT_FRACTION:
        raise EnsembleDivergedError(f"{int(div.sum())} of {ntraj} trajectories diverged", record, final)
    record.metadata["wall_time"] = time.perf_counter() - start
    return final, record

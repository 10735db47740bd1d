"""
Probe-free estimators of weak values.

The real part comes from the ratio of post-selection probabilities with and
without a small transformation; the imaginary part from the phase shift of
the interference fringe recorded when the transformation sits in one arm
of an interferometer. Both have a forward (O(theta) bias) and a symmetric
(O(theta^2) bias) variant.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import qcore
from .errors import EnvelopeWarning, NoFringe
from .weakval import WeakValue, weak_value

FORWARD = "forward"
SYMMETRIC = "symmetric"
DEFAULT_THETA = 1e-3
DEFAULT_FRINGE_POINTS = 16
MIN_BASELINE = 1e-24


@dataclass(frozen=True)
class ProbePoint:
    theta: float
    probability: float

    @property
    def exceeds_one(self):
        """Only possible for non-unitary bookkeeping (e.g. linear amplification)."""
        return self.probability > 1.0


def default_deltas(m=DEFAULT_FRINGE_POINTS):
    return 2 * np.pi * np.arange(m) / m


@dataclass(frozen=True)
class InterferometerConfig:
    arm_transform: object
    deltas: np.ndarray = field(default_factory=default_deltas)

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        if d.size < 3:
            raise ValueError("need at least 3 relative-phase samples")
        object.__setattr__(self, "deltas", d)


@dataclass(frozen=True)
class Estimate:
    value: complex
    theta_used: float
    method: str
    analytic_ref: Optional[WeakValue] = None
    stderr: Optional[float] = None
    trials: Optional[int] = None


def _check_theta(theta):
    if theta == 0:
        raise ValueError("theta must be non-zero")


def _check_method(method):
    if method not in (FORWARD, SYMMETRIC):
        raise ValueError(f"method must be {FORWARD!r} or {SYMMETRIC!r}")


def wrap_phase(x):
    """Map to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y == -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


def transformed_amplitude(sel, T, theta):
    """<f|N|i> for pure selections, tr(rho_f N rho_i) for mixed ones."""
    N = np.asarray(T.evaluate(theta))
    if sel.is_pure:
        return qcore.inner(sel.post, N @ sel.pre)
    return complex(np.trace(sel.rho_post @ N @ sel.rho_pre))


def amplitude_ratio(sel, T, theta):
    """r(theta): the transformed amplitude divided by its theta = 0 value."""
    return transformed_amplitude(sel, T, theta) / transformed_amplitude(sel, T, 0.0)


def post_selection_probability(sel, T, theta):
    N = np.asarray(T.evaluate(theta))
    if sel.is_pure:
        return abs(qcore.inner(sel.post, N @ sel.pre)) ** 2
    return float(np.trace(sel.rho_post @ N @ sel.rho_pre @ N.conj().T).real)


def probe_point(sel, T, theta):
    return ProbePoint(float(theta), post_selection_probability(sel, T, theta))


def probability_ratio(sel, T, theta):
    p0 = post_selection_probability(sel, T, 0.0)
    if p0 <= MIN_BASELINE:
        raise ValueError(f"baseline post-selection probability {p0:.3g} vanishes")
    return post_selection_probability(sel, T, theta) / p0


def _analytic(sel, T):
    return weak_value(T.generator, sel, label=T.label)


def estimate_re_forward(sel, T, theta=DEFAULT_THETA):
    _check_theta(theta)
    value = (probability_ratio(sel, T, theta) - 1.0) / (2 * theta)
    return Estimate(value, theta, FORWARD, _analytic(sel, T))


def estimate_re_symmetric(sel, T, theta=DEFAULT_THETA):
    _check_theta(theta)
    value = (probability_ratio(sel, T, theta) - probability_ratio(sel, T, -theta)) / (4 * theta)
    return Estimate(value, theta, SYMMETRIC, _analytic(sel, T))


def estimate_re(sel, T, theta=DEFAULT_THETA, method=SYMMETRIC):
    _check_method(method)
    if method == FORWARD:
        return estimate_re_forward(sel, T, theta)
    return estimate_re_symmetric(sel, T, theta)


def fringe_probability(sel, cfg, theta, delta):
    """
    Detection probability at the interferometer output when N(theta) sits
    in one arm and a phase exp(i delta) in the other.

    `cfg` may be an InterferometerConfig or a bare SmallTransform.
    """
    T = getattr(cfg, "arm_transform", cfg)
    base = sel.success_probability
    r = amplitude_ratio(sel, T, theta)
    if sel.is_pure:
        mod2 = abs(r) ** 2
    else:
        mod2 = post_selection_probability(sel, T, theta) / base
    return base / 4 * (mod2 + 1 + 2 * abs(r) * np.cos(np.asarray(delta) - np.angle(r)))


def fringe_samples(sel, cfg, theta):
    deltas = np.asarray(cfg.deltas)
    return deltas, np.asarray(fringe_probability(sel, cfg, theta, deltas), dtype=float)


def fit_fringe(deltas, probs):
    """
    Least-squares fit of p = offset + u cos(delta) + v sin(delta).

    On an equally spaced grid over [0, 2pi) this is the first DFT harmonic.
    Returns (phase, amplitude, offset) with phase = atan2(v, u) in (-pi, pi].
    """
    deltas = np.asarray(deltas, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if deltas.shape != probs.shape:
        raise ValueError("deltas and probabilities must have the same length")
    if np.unique(np.mod(deltas, 2 * np.pi)).size < 3:
        raise ValueError("need at least 3 distinct relative phases")
    X = np.column_stack([np.ones_like(deltas), np.cos(deltas), np.sin(deltas)])
    (offset, u, v), *_ = np.linalg.lstsq(X, probs, rcond=None)
    amp = np.hypot(u, v)
    scale = max(np.abs(probs).max(), np.finfo(float).tiny)
    if amp <= 1e-12 * scale:
        raise NoFringe("fringe amplitude is indistinguishable from zero")
    return wrap_phase(np.arctan2(v, u)), float(amp), float(offset)


def fit_fringe_phase(deltas, probs):
    return fit_fringe(deltas, probs)[0]


def fringe_phase(sel, cfg, theta):
    return fit_fringe_phase(*fringe_samples(sel, cfg, theta))


def estimate_im(sel, cfg, theta=DEFAULT_THETA, method=SYMMETRIC):
    """Im<C>_w from the fringe displacement; C is the arm transform's generator."""
    _check_theta(theta)
    _check_method(method)
    ref = _analytic(sel, cfg.arm_transform)
    span = abs(theta) if method == FORWARD else 2 * abs(theta)
    if abs(ref.imag) * span >= np.pi:
        warnings.warn("fringe displacement reaches the branch cut; phase difference is ambiguous", EnvelopeWarning)
    if method == FORWARD:
        shift = wrap_phase(fringe_phase(sel, cfg, theta) - fringe_phase(sel, cfg, 0.0))
        value = shift / theta
    else:
        shift = wrap_phase(fringe_phase(sel, cfg, theta) - fringe_phase(sel, cfg, -theta))
        value = shift / (2 * theta)
    return Estimate(value, theta, method, ref)


def estimate_weak_value(sel, cfg, theta=DEFAULT_THETA, method=SYMMETRIC):
    """Complex estimate combining the probability-ratio and fringe routes."""
    re = estimate_re(sel, cfg.arm_transform, theta, method)
    im = estimate_im(sel, cfg, theta, method)
    return Estimate(complex(re.value, im.value), theta, method, re.analytic_ref)


def estimate_expectation_pre_only(i, T, theta=DEFAULT_THETA, part="re", method=FORWARD):
    """
    <i|C|i> from a pre-selected state alone: the real part from the norm
    ratio ||N(theta)|i>||, the imaginary part from the relative phase
    arg <i|N(theta)|i>.
    """
    _check_theta(theta)
    _check_method(method)
    if not qcore.is_normalized(i):
        raise ValueError("pre-selected ket must be normalized")
    i = np.asarray(i)

    def observable(t):
        out = np.asarray(T.evaluate(t)) @ i
        if part == "re":
            return np.linalg.norm(out)
        if part == "im":
            return np.angle(np.vdot(i, out))
        raise ValueError("part must be 're' or 'im'")

    if method == FORWARD:
        base = 1.0 if part == "re" else 0.0
        value = (observable(theta) - base) / theta
    else:
        diff = observable(theta) - observable(-theta)
        value = (wrap_phase(diff) if part == "im" else diff) / (2 * theta)
    ref = WeakValue(qcore.expect(T.generator, i), T.label)
    return Estimate(value, theta, method, ref)

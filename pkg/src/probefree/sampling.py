"""
Finite-trial statistics for the probe-free estimators.

Random streams: the generator for replica ``r`` of experiment point ``j``
is ``PCG64(SeedSequence(seed, spawn_key=(j, r)))``, i.e. numpy's
splittable seed-sequence construction. Identical (seed, plan) therefore
gives bit-identical counts regardless of evaluation order.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import estimator as est
from . import qcore
from .transforms import SmallTransform, unitary_of
from .weakval import Selection, WeakValue, weak_value

PROB_SLACK = 1e-12


def rng_for(seed, *key):
    """Generator for sub-stream `key` of `seed` (empty key = root stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def _as_rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return rng_for(seed_or_rng)


def _clean_probability(p):
    p = float(p)
    if p < -PROB_SLACK or p > 1 + PROB_SLACK or not np.isfinite(p):
        raise ValueError(f"probability {p!r} outside [0, 1]")
    return min(max(p, 0.0), 1.0)


def simulate_detections(p, n, seed):
    """Binomial(n, p) detection count; `seed` is an int or a Generator."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return int(_as_rng(seed).binomial(int(n), _clean_probability(p)))


@dataclass(frozen=True)
class TrialPlan:
    n: int
    seed: int
    theta_points: Sequence[float] = (est.DEFAULT_THETA,)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        pts = tuple(float(t) for t in self.theta_points)
        if not all(np.isfinite(pts)):
            raise ValueError("theta points must be finite")
        object.__setattr__(self, "theta_points", pts)


# -- Fisher information -------------------------------------------------------


def fisher_re_leading_order(overlap_sq, theta):
    """4 |<f|i>|^2 theta^2 / (1 - |<f|i>|^2)."""
    return 4 * overlap_sq * theta**2 / (1 - overlap_sq)


def classical_fisher_re(sel, T, theta):
    """
    Fisher information about Re<C>_w carried by the binary outcome
    {P, 1 - P} at known theta, on the model P = P0 |1 + <C>_w theta|^2.
    """
    w = weak_value(T.generator, sel).value
    p0 = sel.success_probability
    p = p0 * abs(1 + w * theta) ** 2
    if p <= 0 or p >= 1:
        raise ValueError(f"degenerate post-selection probability {p:.6g}")
    dp = 2 * p0 * theta * (1 + w.real * theta)
    return dp**2 / (p * (1 - p))


def binary_fisher_theta(sel, T, theta):
    """Fisher information about theta of the outcome {P(f|i,theta), 1 - P}."""
    N = np.asarray(T.evaluate(theta))
    dN = np.asarray(T.derivative(theta))
    if sel.is_pure:
        a = qcore.inner(sel.post, N @ sel.pre)
        p = abs(a) ** 2
        dp = 2 * (np.conj(a) * qcore.inner(sel.post, dN @ sel.pre)).real
    else:
        rf, ri = sel.rho_post, sel.rho_pre
        p = np.trace(rf @ N @ ri @ N.conj().T).real
        dp = 2 * np.trace(rf @ dN @ ri @ N.conj().T).real
    if p <= 0 or p >= 1:
        raise ValueError(f"degenerate post-selection probability {p:.6g}")
    return float(dp**2 / (p * (1 - p)))


def quantum_fisher_theta(i, C):
    """4 (<C^dag C> - |<C>|^2) in |i>, the theta -> 0 quantum Fisher information."""
    if not qcore.is_normalized(i):
        raise ValueError("ket must be normalized")
    Ci = np.asarray(C) @ np.asarray(i)
    return float(4 * (np.vdot(Ci, Ci).real - abs(np.vdot(i, Ci)) ** 2))


@dataclass(frozen=True)
class FisherReport:
    classical_F: float
    quantum_FQ: float
    cr_bound: float
    leading_order_F: float
    classical_F_theta: Optional[float] = None
    n: int = 1


def fisher_report(sel, T, theta, n=1):
    """
    Collect the Re<C>_w Fisher information (exact model and leading order),
    the theta Fisher information of the binary outcome, the quantum Fisher
    information of N(theta)|i>, and the Cramer-Rao bound 1/sqrt(nF).
    """
    F = classical_fisher_re(sel, T, theta)
    pre = sel.pre if sel.pre.ndim == 1 else None
    FQ = quantum_fisher_theta(pre, T.generator) if pre is not None else float("nan")
    try:
        F_theta = binary_fisher_theta(sel, T, theta)
    except ValueError:
        F_theta = None
    bound = 1 / np.sqrt(n * F) if F > 0 else float("inf")
    return FisherReport(
        classical_F=F,
        quantum_FQ=FQ,
        cr_bound=float(bound),
        leading_order_F=fisher_re_leading_order(sel.success_probability, theta),
        classical_F_theta=F_theta,
        n=n,
    )


def optimal_postselection(i, C):
    """
    Post-selection that makes the binary outcome saturate the quantum
    Fisher information for theta at theta -> 0 (C anti-Hermitian).
    """
    if not qcore.is_hermitian(1j * np.asarray(C)):
        raise ValueError("optimal_postselection needs an anti-Hermitian generator")
    i = np.asarray(i, dtype=complex)
    Ci = np.asarray(C) @ i
    perp = Ci - np.vdot(i, Ci) * i
    norm = np.linalg.norm(perp)
    if norm <= 1e-12:
        raise ValueError("C|i> is parallel to |i>; optimal post-selection undefined")
    return qcore.ket((i + perp / norm) / np.sqrt(2), normalize=True)


# -- sampled estimators --------------------------------------------------------


def _binomial_var(p, n):
    return p * (1 - p) / n


def sampled_estimate_re(sel, T, theta, n, rng, method=est.SYMMETRIC):
    """
    Re<C>_w estimate from simulated detection counts: n trials at theta
    (and at -theta for the symmetric method) plus n at theta = 0.
    """
    est._check_theta(theta)
    est._check_method(method)
    rng = _as_rng(rng)
    p0 = est.post_selection_probability(sel, T, 0.0)
    pp = est.post_selection_probability(sel, T, theta)
    k0 = simulate_detections(p0, n, rng)
    kp = simulate_detections(pp, n, rng)
    if k0 == 0:
        raise ValueError("no detections at theta = 0")
    h0, hp = k0 / n, kp / n
    if method == est.FORWARD:
        ratio = hp / h0
        value = (ratio - 1) / (2 * theta)
        var = ratio**2 * (_binomial_var(hp, n) / max(hp, 1 / n) ** 2 + _binomial_var(h0, n) / h0**2)
        stderr = np.sqrt(var) / (2 * abs(theta))
    else:
        pm = est.post_selection_probability(sel, T, -theta)
        hm = simulate_detections(pm, n, rng) / n
        value = (hp - hm) / (4 * theta * h0)
        var = (_binomial_var(hp, n) + _binomial_var(hm, n)) / (4 * theta * h0) ** 2
        var += ((hp - hm) / (4 * theta * h0**2)) ** 2 * _binomial_var(h0, n)
        stderr = np.sqrt(var)
    return est.Estimate(value, theta, method, weak_value(T.generator, sel), float(stderr), n)


def sample_fringe(probs, n, rng):
    """Binomial fringe samples; returns estimated probabilities."""
    rng = _as_rng(rng)
    return np.array([simulate_detections(p, n, rng) / n for p in probs])


def fringe_phase_stderr(deltas, probs, n):
    """
    Delta-method standard error of the fitted fringe phase when each point
    is estimated from n binomial trials.
    """
    deltas = np.asarray(deltas, dtype=float)
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, 1.0)
    X = np.column_stack([np.ones_like(deltas), np.cos(deltas), np.sin(deltas)])
    pinv = np.linalg.pinv(X)
    _, u, v = pinv @ probs
    cov = pinv @ np.diag(probs * (1 - probs) / n) @ pinv.T
    grad = np.array([0.0, -v, u]) / (u * u + v * v)
    return float(np.sqrt(grad @ cov @ grad))


def sampled_estimate_im(sel, cfg, theta, n, rng, method=est.SYMMETRIC):
    """Im<C>_w from binomially sampled fringes (n trials per phase setting)."""
    est._check_theta(theta)
    est._check_method(method)
    rng = _as_rng(rng)
    other = 0.0 if method == est.FORWARD else -theta
    phases, ses = [], []
    for t in (theta, other):
        deltas, probs = est.fringe_samples(sel, cfg, t)
        phases.append(est.fit_fringe_phase(deltas, sample_fringe(probs, n, rng)))
        ses.append(fringe_phase_stderr(deltas, probs, n))
    span = theta if method == est.FORWARD else 2 * theta
    value = est.wrap_phase(phases[0] - phases[1]) / span
    stderr = np.hypot(*ses) / abs(span)
    return est.Estimate(value, theta, method, weak_value(cfg.arm_transform.generator, sel), float(stderr), n)


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator `empirical_mse` runs, on which selection and family."""

    selection: Selection
    transform: SmallTransform
    method: str = est.SYMMETRIC
    part: str = "re"
    replicas: int = 100
    deltas: np.ndarray = field(default_factory=est.default_deltas)

    @property
    def target(self):
        w = weak_value(self.transform.generator, self.selection).value
        return w.real if self.part == "re" else w.imag


def _exact_estimate(spec, theta):
    if spec.part == "re":
        return est.estimate_re(spec.selection, spec.transform, theta, spec.method).value
    cfg = est.InterferometerConfig(spec.transform, spec.deltas)
    return est.estimate_im(spec.selection, cfg, theta, spec.method).value


def replica_estimates(plan, spec, point):
    """Sampled estimates for every replica at plan.theta_points[point]."""
    theta = plan.theta_points[point]
    cfg = est.InterferometerConfig(spec.transform, spec.deltas)
    out = np.empty(spec.replicas)
    for r in range(spec.replicas):
        rng = rng_for(plan.seed, point, r)
        if spec.part == "re":
            e = sampled_estimate_re(spec.selection, spec.transform, theta, plan.n, rng, spec.method)
        else:
            e = sampled_estimate_im(spec.selection, cfg, theta, plan.n, rng, spec.method)
        out[r] = e.value
    return out


def empirical_mse(plan, spec, exact=False):
    """
    Mean squared error against the analytic weak value, one entry per
    theta point. With exact=True the probabilities are used as-is, so the
    result is the squared bias alone.
    """
    target = spec.target
    mse = []
    for j, theta in enumerate(plan.theta_points):
        if exact:
            mse.append((_exact_estimate(spec, theta) - target) ** 2)
        else:
            mse.append(np.mean((replica_estimates(plan, spec, j) - target) ** 2))
    return np.array(mse, dtype=float)


def cramer_rao_mse_bound(spec, theta, n):
    """
    1 / (n * sum F) over the transformed settings the estimator measures
    (theta, plus -theta for the symmetric method); the theta = 0 reference
    carries no information about Re<C>_w.
    """
    points = [theta] if spec.method == est.FORWARD else [theta, -theta]
    F = sum(classical_fisher_re(spec.selection, spec.transform, t) for t in points)
    return 1.0 / (n * F)


# -- weak-value amplification ----------------------------------------------------


def wva_amplification(sel1, sel2, A1, A2):
    """2 Re(i <A1>_w <A2>_w)."""
    w1 = weak_value(A1, sel1).value
    w2 = weak_value(A2, sel2).value
    return 2 * (1j * w1 * w2).real


def wva_probability(sel1, sel2, A1, A2, theta):
    """Composite post-selection probability under exp(i theta A1 x A2)."""
    pre = qcore.kron(sel1.pre, sel2.pre)
    post = qcore.kron(sel1.post, sel2.post)
    N = unitary_of(qcore.kron(A1, A2)).evaluate(theta)
    return abs(qcore.inner(post, np.asarray(N) @ pre)) ** 2


def wva_counts(sel1, sel2, A1, A2, theta, n, rng):
    """Simulated (detections at theta, detections at 0)."""
    rng = _as_rng(rng)
    k0 = simulate_detections(wva_probability(sel1, sel2, A1, A2, 0.0), n, rng)
    kt = simulate_detections(wva_probability(sel1, sel2, A1, A2, theta), n, rng)
    return kt, k0


def wva_estimate_theta(sel1, sel2, A1, A2, counts_theta, counts_0, n):
    """
    theta_hat = (counts_theta / counts_0 - 1) / (2 Re(i <A1>_w <A2>_w)),
    with a binomial standard error. Counts may be non-integer (n * P) for
    noiseless inversion.
    """
    g = wva_amplification(sel1, sel2, A1, A2)
    if abs(g) <= 1e-12:
        raise ValueError("amplification factor 2Re(i<A1>w<A2>w) vanishes")
    if counts_0 <= 0:
        raise ValueError("no detections at theta = 0")
    ratio = counts_theta / counts_0
    pt, p0 = counts_theta / n, counts_0 / n
    var_ratio = ratio**2 * ((1 - pt) / max(counts_theta, 1) + (1 - p0) / counts_0)
    return est.Estimate(
        (ratio - 1) / g,
        float("nan"),
        est.FORWARD,
        WeakValue(complex(g / 2), "Re(i<A1>w<A2>w)"),
        float(np.sqrt(var_ratio) / abs(g)),
        int(n),
    )

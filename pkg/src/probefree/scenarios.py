"""
Preset experiments: the three-box problem (classical shutter, pre-selected
quantum attenuator, pre/post-selected weak probabilities), the spin-1/2
huge weak value, and weak-value amplification on a composite system.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import estimator as est
from . import qcore
from .errors import OrthogonalSelection
from .sampling import wva_amplification, wva_probability
from .transforms import attenuation_of, unitary_of
from .weakval import Selection, weak_value

PATHS = {"A": 0, "B": 1, "C": 2}

THREE_BOX_PRE = qcore.ket(np.ones(3) / np.sqrt(3))
THREE_BOX_POST = qcore.ket(np.array([1, 1, -1]) / np.sqrt(3))


def path_index(k):
    if isinstance(k, str):
        try:
            return PATHS[k.upper()]
        except KeyError:
            raise ValueError(f"unknown path {k!r}; expected one of A, B, C") from None
    return int(k)


def path_projector(k, dim=3):
    return qcore.projector(qcore.basis(dim, path_index(k)))


def three_box_selection():
    return Selection(THREE_BOX_PRE, THREE_BOX_POST)


def path_attenuator(k, dim=3):
    """exp(-theta |k><k|): amplitude transmittance exp(-theta) on path k."""
    return attenuation_of(-np.asarray(path_projector(k, dim)), label=f"-|{k}><{k}|")


# -- classical three-box ----------------------------------------------------------


@dataclass(frozen=True)
class ClassicalThreeBox:
    """
    Classical particle prepared on path j with probability p_pre[j] and
    detected on path j with probability p_post[j]; a shutter on one path
    passes it with probability exp(-2 theta).

    p_post need not sum to one, in which case P(f|i) is a joint detection
    probability rather than a conditional one.
    """

    p_pre: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)
    p_post: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)
    shutter_path: object = "A"
    theta: float = 0.0

    def __post_init__(self):
        pre = np.asarray(self.p_pre, dtype=float)
        post = np.asarray(self.p_post, dtype=float)
        if pre.shape != (3,) or post.shape != (3,):
            raise ValueError("three paths expected")
        if np.any(pre < 0) or abs(pre.sum() - 1) > 1e-12:
            raise ValueError("p_pre must be a probability distribution")
        if np.any(post < 0) or np.any(post > 1):
            raise ValueError("p_post entries must lie in [0, 1]")
        if self.theta < 0:
            raise ValueError("shutter strength theta must be non-negative")
        object.__setattr__(self, "p_pre", tuple(pre))
        object.__setattr__(self, "p_post", tuple(post))

    @property
    def baseline(self):
        return float(np.dot(self.p_pre, self.p_post))


def classical_detection(sc, theta=None):
    theta = sc.theta if theta is None else theta
    k = path_index(sc.shutter_path)
    return sc.baseline - (1 - np.exp(-2 * theta)) * sc.p_pre[k] * sc.p_post[k]


def classical_slope(sc):
    """d/dtheta of the normalized detection probability at theta = 0."""
    if sc.baseline <= 0:
        raise ValueError("zero baseline detection probability")
    k = path_index(sc.shutter_path)
    return -2 * sc.p_pre[k] * sc.p_post[k] / sc.baseline


# -- quantum three-box -------------------------------------------------------------


def quantum_pre_only_slope(i, k):
    """-2 |<k|i>|^2."""
    if not qcore.is_normalized(i):
        raise ValueError("ket must be normalized")
    return -2 * abs(np.asarray(i)[path_index(k)]) ** 2


def weak_probability_slope(sel, k):
    """-2 Re of the weak probability on path k."""
    return -2 * weak_value(path_projector(k, sel.dim), sel).real


def pre_only_detection(i, k, theta):
    """||exp(-theta |k><k|) |i>||^2."""
    out = np.asarray(path_attenuator(k, len(i)).evaluate(theta)) @ np.asarray(i)
    return float(np.vdot(out, out).real)


def weak_detection(sel, k, theta):
    return est.post_selection_probability(sel, path_attenuator(k, sel.dim), theta)


# -- spin-1/2 -----------------------------------------------------------------------


def spin_states(chi):
    """cos(chi/2)|0> + sin(chi/2)|1> and cos(chi/2)|0> - sin(chi/2)|1>."""
    c, s = np.cos(chi / 2), np.sin(chi / 2)
    return qcore.ket([c, s]), qcore.ket([c, -s])


def spin_rotation():
    """exp(i theta S_z)."""
    return unitary_of(qcore.S_Z, label="iS_z")


@dataclass(frozen=True)
class SpinScenario:
    chi: float = 7 * np.pi / 16
    theta_sweep: Sequence[float] = field(default_factory=lambda: tuple(np.linspace(-0.5, 0.5, 51)))

    def __post_init__(self):
        if not 0 <= self.chi <= np.pi:
            raise ValueError("chi must lie in [0, pi]")

    @classmethod
    def from_detuning(cls, detuning, **kw):
        """chi = pi/2 - detuning; small detuning means nearly orthogonal i, f."""
        return cls(chi=np.pi / 2 - detuning, **kw)

    @property
    def detuning(self):
        return np.pi / 2 - self.chi

    def selection(self):
        i, f = spin_states(self.chi)
        return Selection(i, f)


def pre_only_phase(chi, theta):
    i, _ = spin_states(chi)
    U = np.asarray(spin_rotation().evaluate(theta))
    return float(np.angle(np.vdot(i, U @ i)))


def post_selected_phase(chi, theta):
    i, f = spin_states(chi)
    if abs(qcore.inner(f, i)) <= 1e-12:
        raise OrthogonalSelection("cos(chi) = 0: pre- and post-selection are orthogonal")
    return float(np.angle(est.amplitude_ratio(Selection(i, f), spin_rotation(), theta)))


def spin_phase_curves(sc):
    thetas = np.asarray(sc.theta_sweep, dtype=float)
    pre = np.array([pre_only_phase(sc.chi, t) for t in thetas])
    post = np.array([post_selected_phase(sc.chi, t) for t in thetas])
    return {"pre_only": np.column_stack([thetas, pre]), "post_selected": np.column_stack([thetas, post])}


def spin_slopes(chi):
    """Analytic (pre-only, post-selected) phase slopes at theta = 0."""
    return np.cos(chi) / 2, 1 / (2 * np.cos(chi))


# -- weak-value amplification -----------------------------------------------------


@dataclass(frozen=True)
class WVASetup:
    A1: np.ndarray
    A2: np.ndarray
    sel1: Selection
    sel2: Selection

    @property
    def amplification(self):
        return wva_amplification(self.sel1, self.sel2, self.A1, self.A2)

    @property
    def composite(self):
        return Selection(qcore.kron(self.sel1.pre, self.sel2.pre), qcore.kron(self.sel1.post, self.sel2.post))

    @property
    def generator(self):
        return qcore.kron(self.A1, self.A2)


def wva_preset(amplification=50.0):
    """
    sigma_z on both qubits. System: i = |+>, f = cos(a)|0> - sin(a)|1> with
    a = pi/4 - eps, so <sigma_z>_w = cot(eps). Probe:
    phi_i = |+>, phi_f = (|0> - i|1>)/sqrt(2), so <sigma_z>_w = -i. The
    amplification factor 2 Re(i <A1>w <A2>w) is then 2 cot(eps).
    """
    eps = np.arctan(2 / amplification)
    a = np.pi / 4 - eps
    plus = qcore.ket([1, 1], normalize=True)
    f1 = qcore.ket([np.cos(a), -np.sin(a)])
    phi_f = qcore.ket([1, -1j], normalize=True)
    return WVASetup(qcore.SIGMA_Z, qcore.SIGMA_Z, Selection(plus, f1), Selection(plus, phi_f))


def wva_scenario(A1, A2, i1, f1, phi_i, phi_f, theta):
    """Exact composite probability ratio and the analytic amplification factor."""
    sel1, sel2 = Selection(i1, f1), Selection(phi_i, phi_f)
    g = wva_amplification(sel1, sel2, A1, A2)  # raises on either orthogonal pair
    ratio = wva_probability(sel1, sel2, A1, A2, theta) / wva_probability(sel1, sel2, A1, A2, 0.0)
    return {"ratio": ratio, "amplification": g}

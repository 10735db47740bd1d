"""
Small transformation families N(theta) = 1 + theta*C + O(theta^2).

A family is exponential (exp(theta*C)), linear (1 + theta*C exactly) or
tabulated (any callable theta -> operator with N(0) = 1). The generator C
splits as C = iA + B with A, B Hermitian; `unitary_of` and
`attenuation_of` build the two pure cases.

Also provides two ways to realize attenuation/amplification with unitary
processes: an exact dilation onto extra ancilla levels, and an effective
transformation induced by a pre/post-selected ancilla.
"""

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import qcore
from .errors import EnvelopeWarning, OrthogonalSelection
from .weakval import OVERLAP_CUTOFF

EXPONENTIAL = "exponential"
LINEAR = "linear"
TABLE = "table"

FD_STEP = 1e-5
ENVELOPE = 1.0


@dataclass(frozen=True)
class SmallTransform:
    generator: np.ndarray
    family: str = EXPONENTIAL
    func: Optional[Callable[[float], np.ndarray]] = None
    label: str = ""

    def __post_init__(self):
        if self.family not in (EXPONENTIAL, LINEAR, TABLE):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == TABLE and self.func is None:
            raise ValueError("tabulated family needs a callable")
        object.__setattr__(self, "generator", qcore.operator(self.generator))

    @property
    def dim(self):
        return self.generator.shape[0]

    @property
    def is_unitary_family(self):
        """True when every N(theta) is unitary (exponential of anti-Hermitian C)."""
        C = self.generator
        return self.family == EXPONENTIAL and qcore.is_hermitian(1j * C)

    def evaluate(self, theta):
        theta = float(theta)
        if abs(theta) > ENVELOPE:
            warnings.warn(f"theta={theta:g} outside |theta| <= {ENVELOPE:g}", EnvelopeWarning, stacklevel=2)
        if self.family == EXPONENTIAL:
            return qcore.matexp(self.generator, theta)
        if self.family == LINEAR:
            return qcore.operator(np.eye(self.dim) + theta * self.generator)
        return qcore.operator(self.func(theta))

    def derivative(self, theta):
        """dN/dtheta; exact for exponential and linear families."""
        if self.family == EXPONENTIAL:
            return qcore.operator(self.generator @ qcore.matexp(self.generator, theta))
        if self.family == LINEAR:
            return self.generator
        h = FD_STEP
        return qcore.operator((np.asarray(self.func(theta + h)) - np.asarray(self.func(theta - h))) / (2 * h))


def evaluate(T, theta):
    return T.evaluate(theta)


def exponential_of(C, label=""):
    return SmallTransform(C, EXPONENTIAL, label=label)


def linear_of(C, label=""):
    """1 + theta*C; not unitary even for anti-Hermitian C."""
    return SmallTransform(C, LINEAR, label=label)


def table_of(func, generator=None, label=""):
    """
    Wrap an arbitrary family. The generator is taken from a central
    difference at 0 when not supplied.
    """
    N0 = np.asarray(func(0.0), dtype=complex)
    if np.max(np.abs(N0 - np.eye(N0.shape[0]))) > 1e-12:
        raise ValueError("family must satisfy N(0) = identity")
    if generator is None:
        generator = (np.asarray(func(FD_STEP)) - np.asarray(func(-FD_STEP))) / (2 * FD_STEP)
    return SmallTransform(generator, TABLE, func=func, label=label)


def numerical_generator(T, h=FD_STEP):
    return (np.asarray(T.evaluate(h)) - np.asarray(T.evaluate(-h))) / (2 * h)


def _family(C, exactness, label):
    if exactness == EXPONENTIAL:
        return exponential_of(C, label)
    if exactness == LINEAR:
        return linear_of(C, label)
    raise ValueError(f"exactness must be {EXPONENTIAL!r} or {LINEAR!r}")


def unitary_of(A, exactness=EXPONENTIAL, label=""):
    """Family with generator iA; the exponential variant is exactly unitary."""
    if not qcore.is_hermitian(A):
        raise ValueError("unitary_of needs a Hermitian operator")
    return _family(1j * np.asarray(A), exactness, label or "iA")


def attenuation_of(B, exactness=EXPONENTIAL, label=""):
    """Amplification/attenuation family with Hermitian generator B."""
    if not qcore.is_hermitian(B):
        raise ValueError("attenuation_of needs a Hermitian operator")
    return _family(B, exactness, label or "B")


@dataclass(frozen=True)
class DilationResult:
    unitary: np.ndarray
    dim: int

    @property
    def total_dim(self):
        return self.unitary.shape[0]

    @property
    def ancilla_dim(self):
        return self.total_dim - self.dim

    def embed(self, v):
        """Append zero ancilla amplitudes."""
        v = np.asarray(v, dtype=complex)
        return qcore.ket(np.concatenate([v, np.zeros(self.ancilla_dim)]))

    def project(self, w):
        return qcore.ket(np.asarray(w)[: self.dim])

    def effective(self):
        """project . U . embed as a d x d operator."""
        return qcore.operator(self.unitary[: self.dim, : self.dim])


def dilate_attenuation(B, theta):
    """
    Embed exp(theta*B) (B Hermitian, eigenvalues <= 0, theta >= 0) as the
    system block of a unitary on d + d' levels.

    Every eigenvector of B with eigenvalue -b < 0 gets its own ancilla level
    and a two-level rotation whose cosine is exp(-theta*b). Zero-eigenvalue
    eigenvectors are left alone.
    """
    if not qcore.is_hermitian(B):
        raise ValueError("dilate_attenuation needs a Hermitian operator")
    if theta < 0:
        raise ValueError("theta must be non-negative")
    lam, V = np.linalg.eigh(np.asarray(B))
    lam = np.where(np.abs(lam) <= qcore.TOL, 0.0, lam)
    if np.any(lam > 0):
        raise ValueError("positive eigenvalue present: amplification needs ancilla_coupling")
    d = lam.size
    neg = np.flatnonzero(lam < 0)
    total = d + neg.size
    R = np.eye(total, dtype=complex)
    for j, idx in enumerate(neg):
        c = np.exp(theta * lam[idx])
        s = np.sqrt(max(0.0, 1.0 - c * c))
        a = d + j
        R[idx, idx] = c
        R[a, a] = c
        R[a, idx] = s
        R[idx, a] = -s
    W = np.eye(total, dtype=complex)
    W[:d, :d] = V
    return DilationResult(qcore.operator(W @ R @ W.conj().T), d)


def ancilla_coupling(A1, A2, phi_i, phi_f, theta):
    """
    Effective transformation on system 1 from exp(i theta A1 x A2) with the
    ancilla pre/post-selected in phi_i, phi_f.

    Returns (<phi_f|phi_i>, effective) where
    effective = <phi_f|exp(i theta A1 x A2)|phi_i> / <phi_f|phi_i>, obtained
    exactly through the spectral decomposition of A2.
    """
    if not (qcore.is_hermitian(A1) and qcore.is_hermitian(A2)):
        raise ValueError("A1 and A2 must be Hermitian")
    prefactor = qcore.inner(phi_f, phi_i)
    if abs(prefactor) <= OVERLAP_CUTOFF:
        raise OrthogonalSelection("ancilla pre/post-selection are orthogonal")
    lam, V = np.linalg.eigh(np.asarray(A2))
    weights = (np.asarray(phi_f).conj() @ V) * (V.conj().T @ np.asarray(phi_i))
    d1 = np.asarray(A1).shape[0]
    eff = np.zeros((d1, d1), dtype=complex)
    for a, w in zip(lam, weights):
        eff += w * np.asarray(qcore.matexp(A1, 1j * theta * a))
    return prefactor, qcore.operator(eff / prefactor)


def ancilla_transform(A1, A2, phi_i, phi_f):
    """
    The ancilla-induced family as a SmallTransform with generator
    i <A2>_w A1.
    """
    prefactor, _ = ancilla_coupling(A1, A2, phi_i, phi_f, 0.0)
    w2 = qcore.inner(phi_f, np.asarray(A2) @ np.asarray(phi_i)) / prefactor

    def func(theta):
        return ancilla_coupling(A1, A2, phi_i, phi_f, theta)[1]

    return SmallTransform(1j * w2 * np.asarray(A1), TABLE, func=func, label="i<A2>w A1")

"""Analytic weak values, expectation values and weak probabilities."""

from dataclasses import dataclass

import numpy as np

from . import qcore
from .errors import OrthogonalSelection

OVERLAP_CUTOFF = 1e-12


@dataclass(frozen=True)
class Selection:
    """
    A pre/post-selection pair.

    Each side is a ket (1-D) or a density matrix (2-D). The selection is
    pure only when both sides are kets; a ket on one side of a mixed
    selection is promoted to its projector.
    """

    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        pre = np.asarray(self.pre, dtype=complex)
        post = np.asarray(self.post, dtype=complex)
        if pre.shape[0] != post.shape[0]:
            raise ValueError(f"dimension mismatch: {pre.shape[0]} vs {post.shape[0]}")
        for arr in (pre, post):
            if arr.ndim == 1:
                if not qcore.is_normalized(arr):
                    raise ValueError("selection kets must be normalized")
            else:
                qcore.density_matrix(arr)
        object.__setattr__(self, "pre", qcore._frozen(pre))
        object.__setattr__(self, "post", qcore._frozen(post))

    @property
    def dim(self):
        return self.pre.shape[0]

    @property
    def is_pure(self):
        return self.pre.ndim == 1 and self.post.ndim == 1

    @property
    def rho_pre(self):
        return self.pre if self.pre.ndim == 2 else qcore.projector(self.pre)

    @property
    def rho_post(self):
        return self.post if self.post.ndim == 2 else qcore.projector(self.post)

    @property
    def overlap(self):
        """<f|i> for pure selections, tr(rho_f rho_i) otherwise."""
        if self.is_pure:
            return qcore.inner(self.post, self.pre)
        return complex(np.trace(self.rho_post @ self.rho_pre).real)

    @property
    def success_probability(self):
        """Post-selection probability without any transformation."""
        if self.is_pure:
            return abs(self.overlap) ** 2
        return self.overlap.real

    def as_mixed(self):
        return Selection(self.rho_pre, self.rho_post)


@dataclass(frozen=True)
class WeakValue:
    value: complex
    generator_label: str = ""

    @property
    def real(self):
        return self.value.real

    @property
    def imag(self):
        return self.value.imag

    def __complex__(self):
        return complex(self.value)


def _require_overlap(overlap):
    if abs(overlap) <= OVERLAP_CUTOFF:
        raise OrthogonalSelection(f"|overlap| = {abs(overlap):.3g} is below {OVERLAP_CUTOFF}")


def weak_value(C, sel, label=""):
    """
    <f|C|i> / <f|i> for a pure selection.

    Mixed selections are forwarded to `weak_value_mixed`. Any finite square
    `C` is accepted, normal or not.
    """
    if not sel.is_pure:
        return weak_value_mixed(C, sel, label)
    C = np.asarray(C)
    ov = sel.overlap
    _require_overlap(ov)
    return WeakValue(qcore.inner(sel.post, C @ sel.pre) / ov, label)


def weak_value_mixed(C, sel, label=""):
    """tr(rho_f C rho_i) / tr(rho_f rho_i)."""
    rf, ri = sel.rho_post, sel.rho_pre
    denom = np.trace(rf @ ri).real
    _require_overlap(denom)
    return WeakValue(complex(np.trace(rf @ np.asarray(C) @ ri)) / denom, label)


def expectation(C, i):
    if not qcore.is_normalized(i):
        raise ValueError("pre-selected ket must be normalized")
    return qcore.expect(C, i)


def weak_probability_profile(basis, sel):
    """Weak values of the projectors onto each vector of an orthonormal basis."""
    B = np.array([np.asarray(b, dtype=complex) for b in basis])
    if B.shape[0] != sel.dim or B.shape[1] != sel.dim:
        raise ValueError("basis must contain dim vectors of length dim")
    if np.max(np.abs(B.conj() @ B.T - np.eye(sel.dim))) > qcore.TOL:
        raise ValueError("basis is not orthonormal")
    return [weak_value(qcore.projector(b), sel, label=f"|{k}><{k}|") for k, b in enumerate(B)]

"""
Dense finite-dimensional linear algebra for states and operators.

Kets are 1-D complex arrays, operators and density matrices are 2-D
complex arrays. Constructors validate and return read-only copies so that
values can be shared freely. hbar = 1 throughout.
"""

import numpy as np
import scipy.linalg

TOL = 1e-10
"""Tolerance for structural predicates (Hermitian, normal, unitary, density)."""

NORM_TOL = 1e-10


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    if not np.all(np.isfinite(arr)):
        raise ValueError("non-finite entries")
    arr.setflags(write=False)
    return arr


def ket(amplitudes, normalize=False):
    """Return a read-only complex ket; optionally rescale to unit norm."""
    v = np.array(amplitudes, dtype=complex).reshape(-1)
    if v.size == 0:
        raise ValueError("ket needs dim >= 1")
    if normalize:
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        v = v / n
    return _frozen(v)


def operator(entries):
    M = np.array(entries, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValueError(f"operator must be square, got shape {M.shape}")
    return _frozen(M)


def identity(dim):
    return _frozen(np.eye(dim))


def basis(dim, k):
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return _frozen(v)


def projector(v):
    v = np.asarray(v, dtype=complex)
    return _frozen(np.outer(v, v.conj()))


def is_normalized(v, tol=NORM_TOL):
    return abs(np.linalg.norm(v) - 1.0) <= tol


def is_hermitian(M, tol=TOL):
    M = np.asarray(M)
    return bool(np.max(np.abs(M - M.conj().T), initial=0.0) <= tol)


def is_normal(M, tol=TOL):
    M = np.asarray(M)
    Mh = M.conj().T
    return bool(np.max(np.abs(M @ Mh - Mh @ M), initial=0.0) <= tol)


def is_unitary(M, tol=TOL):
    M = np.asarray(M)
    return bool(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))) <= tol)


def density_matrix(entries, tol=TOL):
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    rho = operator(entries)
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix must be Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix has negative eigenvalues")
    return rho


def is_density_matrix(rho, tol=TOL):
    try:
        density_matrix(rho, tol)
    except ValueError:
        return False
    return True


def _check_dims(a, b):
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")


def inner(a, b):
    """<a|b>, conjugate-linear in the first argument."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_dims(a, b)
    return complex(np.vdot(a, b))


def apply(M, v):
    M = np.asarray(M)
    v = np.asarray(v)
    if M.shape[1] != v.shape[0]:
        raise ValueError(f"dimension mismatch: {M.shape[1]} vs {v.shape[0]}")
    return _frozen(M @ v)


def matexp(M, s=1.0):
    """
    Return exp(s * M).

    Normal matrices are exponentiated through their complex Schur form,
    which is diagonal with a unitary similarity. Anything else, or a Schur
    form that fails the diagonality check, goes through scipy's
    scaling-and-squaring Pade routine.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matexp needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite entries")
    A = complex(s) * M
    if is_normal(A, TOL * max(1.0, np.linalg.norm(A) ** 2)):
        try:
            T, Z = scipy.linalg.schur(A, output="complex")
        except (np.linalg.LinAlgError, ValueError):
            T = None
        if T is not None:
            off = T - np.diag(np.diag(T))
            if np.max(np.abs(off), initial=0.0) <= 1e-12 * max(1.0, np.abs(T).max()):
                return _frozen((Z * np.exp(np.diag(T))) @ Z.conj().T)
    return _frozen(scipy.linalg.expm(A))


def kron(A, B):
    """Tensor product; composite index is i1 * d2 + i2."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != B.ndim:
        raise ValueError("kron operands must both be kets or both operators")
    return _frozen(np.kron(A, B))


def density_from_ket(v):
    v = np.asarray(v, dtype=complex)
    if not is_normalized(v):
        raise ValueError(f"ket is not normalized (norm {np.linalg.norm(v):.6g})")
    return density_matrix(np.outer(v, v.conj()))


def expect(M, v):
    """<v|M|v> without normalization checks."""
    v = np.asarray(v)
    return complex(np.vdot(v, np.asarray(M) @ v))


# Spin-1/2 operators (hbar = 1); |0> is the +1/2 eigenstate of S_z.
SIGMA_X = operator([[0, 1], [1, 0]])
SIGMA_Y = operator([[0, -1j], [1j, 0]])
SIGMA_Z = operator([[1, 0], [0, -1]])
S_Z = operator(np.asarray(SIGMA_Z) / 2)


def random_ket(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return ket(v, normalize=True)


def random_hermitian(dim, rng, scale=1.0):
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = (X + X.conj().T) / 2
    return operator(scale * H / np.linalg.norm(H, 2))


def random_unitary(dim, rng):
    X = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(X)
    d = np.diag(R)
    return operator(Q * (d / np.abs(d)))


def random_normal(dim, rng, scale=1.0):
    """Random normal operator with complex spectrum of spectral radius `scale`."""
    U = np.asarray(random_unitary(dim, rng))
    lam = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    lam = scale * lam / np.abs(lam).max()
    return operator((U * lam) @ U.conj().T)


def random_density(dim, rng, rank=None):
    rank = dim if rank is None else rank
    X = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = X @ X.conj().T
    return density_matrix(rho / np.trace(rho).real)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probefree import qcore
from probefree.errors import OrthogonalSelection
from probefree.weakval import Selection, expectation, weak_probability_profile, weak_value, weak_value_mixed

seeds = st.integers(0, 2**32 - 1)

I3 = qcore.ket(np.ones(3) / np.sqrt(3))
F3 = qcore.ket(np.array([1, 1, -1]) / np.sqrt(3))


def spin_pair(chi):
    c, s = np.cos(chi / 2), np.sin(chi / 2)
    return qcore.ket([c, s]), qcore.ket([c, -s])


def trace_by_loops(rf, C, ri):
    # tr(rf C ri) and tr(rf ri) with explicit index sums
    d = len(rf)
    num = 0j
    den = 0j
    for a in range(d):
        for b in range(d):
            den += rf[a][b] * ri[b][a]
            for c in range(d):
                num += rf[a][b] * C[b][c] * ri[c][a]
    return num / den


def test_three_box_weak_values():
    sel = Selection(I3, F3)
    assert weak_value(qcore.projector(qcore.basis(3, 0)), sel).value == pytest.approx(1, abs=1e-12)
    assert weak_value(qcore.projector(qcore.basis(3, 1)), sel).value == pytest.approx(1, abs=1e-12)
    assert weak_value(qcore.projector(qcore.basis(3, 2)), sel).value == pytest.approx(-1, abs=1e-12)


def test_identical_selection_gives_expectation():
    rng = np.random.default_rng(1)
    i = qcore.random_ket(4, rng)
    C = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert weak_value(C, Selection(i, i)).value == pytest.approx(qcore.expect(C, i), abs=1e-12)


@pytest.mark.parametrize("chi", [0.3, 1.0, 7 * np.pi / 16, 2.5])
def test_spin_weak_value(chi):
    i, f = spin_pair(chi)
    w = weak_value(qcore.S_Z, Selection(i, f)).value
    assert w == pytest.approx(1 / (2 * np.cos(chi)), rel=1e-12)


def test_orthogonal_selection_raises():
    with pytest.raises(OrthogonalSelection):
        weak_value(qcore.SIGMA_Z, Selection(qcore.ket([1, 0]), qcore.ket([0, 1])))
    with pytest.raises(OrthogonalSelection):
        weak_value_mixed(qcore.SIGMA_Z, Selection(np.diag([1.0, 0]), np.diag([0, 1.0])))


def test_selection_checks():
    with pytest.raises(ValueError):
        Selection(qcore.ket([1, 0]), qcore.ket([1, 0, 0]))
    with pytest.raises(ValueError):
        Selection(np.array([1.0, 1.0]), qcore.ket([1, 0]))
    # orthogonal selections are legal to build; weak values fail at use
    sel = Selection(qcore.ket([1, 0]), qcore.ket([0, 1]))
    assert sel.overlap == 0


def test_mixed_rank_one_matches_pure():
    rng = np.random.default_rng(5)
    i, f = qcore.random_ket(3, rng), qcore.random_ket(3, rng)
    C = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    pure = weak_value(C, Selection(i, f)).value
    mixed = weak_value_mixed(C, Selection(qcore.density_from_ket(i), qcore.density_from_ket(f))).value
    assert mixed == pytest.approx(pure, abs=1e-12)


def test_mixed_post_selection_identity_gives_expectation():
    rng = np.random.default_rng(6)
    i = qcore.random_ket(3, rng)
    C = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    w = weak_value_mixed(C, Selection(i, np.eye(3) / 3)).value
    assert w == pytest.approx(qcore.expect(C, i), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_mixed_matches_explicit_loops(seed):
    rng = np.random.default_rng(seed)
    ri, rf = qcore.random_density(3, rng), qcore.random_density(3, rng)
    C = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    w = weak_value_mixed(C, Selection(ri, rf)).value
    ref = trace_by_loops(np.asarray(rf).tolist(), C.tolist(), np.asarray(ri).tolist())
    assert w == pytest.approx(ref, rel=1e-10)


def test_weak_value_dispatches_mixed():
    rng = np.random.default_rng(7)
    sel = Selection(qcore.random_density(2, rng), qcore.random_density(2, rng))
    assert weak_value(qcore.SIGMA_X, sel).value == weak_value_mixed(qcore.SIGMA_X, sel).value


def test_expectation_examples():
    chi = 0.8
    i, _ = spin_pair(chi)
    assert expectation(qcore.S_Z, i) == pytest.approx(np.cos(chi) / 2, abs=1e-15)
    assert expectation(qcore.identity(3), I3) == pytest.approx(1)
    assert expectation(qcore.projector(qcore.basis(3, 0)), I3) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        expectation(qcore.SIGMA_Z, np.array([1.0, 1.0]))


def test_weak_probability_profile_examples():
    basis = [qcore.basis(3, k) for k in range(3)]
    prof = [w.value for w in weak_probability_profile(basis, Selection(I3, F3))]
    np.testing.assert_allclose(prof, [1, 1, -1], atol=1e-12)
    e0 = qcore.basis(3, 0)
    prof = [w.value for w in weak_probability_profile(basis, Selection(e0, e0))]
    np.testing.assert_allclose(prof, [1, 0, 0], atol=1e-15)


def test_weak_probability_profile_rejects_non_orthonormal():
    bad = [qcore.basis(2, 0), qcore.ket([1, 1], normalize=True)]
    with pytest.raises(ValueError):
        weak_probability_profile(bad, Selection(qcore.ket([1, 0]), qcore.ket([1, 0])))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(2, 6))
def test_sum_rule_any_basis(seed, d):
    rng = np.random.default_rng(seed)
    sel = Selection(qcore.random_ket(d, rng), qcore.random_ket(d, rng))
    if abs(sel.overlap) < 1e-3:
        return
    U = np.asarray(qcore.random_unitary(d, rng))
    total = sum(w.value for w in weak_probability_profile(list(U.T), sel))
    assert abs(total - 1) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(seeds, st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
def test_linearity(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    sel = Selection(qcore.random_ket(3, rng), qcore.random_ket(3, rng))
    if abs(sel.overlap) < 1e-2:
        return
    C1 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    C2 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    lhs = weak_value(alpha * C1 + beta * C2, sel).value
    rhs = alpha * weak_value(C1, sel).value + beta * weak_value(C2, sel).value
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 5))
def test_expectation_within_spectrum(seed, d):
    rng = np.random.default_rng(seed)
    A = qcore.random_hermitian(d, rng, scale=3.0)
    e = expectation(A, qcore.random_ket(d, rng))
    lam = np.linalg.eigvalsh(A)
    assert abs(e.imag) <= 1e-12
    assert lam[0] - 1e-10 <= e.real <= lam[-1] + 1e-10


def test_weak_value_can_leave_spectrum():
    i, f = spin_pair(np.pi / 2 - 0.01)
    w = weak_value(qcore.S_Z, Selection(i, f)).value
    assert w.real > 10

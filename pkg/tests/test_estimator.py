import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probefree import estimator as est
from probefree import qcore
from probefree.errors import EnvelopeWarning, NoFringe
from probefree.transforms import SmallTransform, attenuation_of, exponential_of, linear_of, unitary_of
from probefree.weakval import Selection, weak_value

seeds = st.integers(0, 2**32 - 1)

I3 = qcore.ket(np.ones(3) / np.sqrt(3))
F3 = qcore.ket(np.array([1, 1, -1]) / np.sqrt(3))
THREE_BOX = Selection(I3, F3)
PI = [qcore.projector(qcore.basis(3, k)) for k in range(3)]
CHI = 7 * np.pi / 16


def spin_selection(chi=CHI):
    c, s = np.cos(chi / 2), np.sin(chi / 2)
    return Selection(qcore.ket([c, s]), qcore.ket([c, -s]))


def random_selection(d, rng, min_overlap=0.5):
    while True:
        i, f = qcore.random_ket(d, rng), qcore.random_ket(d, rng)
        if abs(qcore.inner(f, i)) >= min_overlap:
            return Selection(i, f)


def circuit_fringe(sel, T, theta, delta):
    """
    Explicit interferometer: path qubit through a 50/50 splitter, N(theta)
    on arm 0, exp(i delta) on arm 1, recombination, then post-selection on
    f and output port 0.
    """
    d = sel.dim
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    BS = np.kron(H, np.eye(d))
    arms = np.zeros((2 * d, 2 * d), dtype=complex)
    arms[:d, :d] = T.evaluate(theta)
    arms[d:, d:] = np.exp(1j * delta) * np.eye(d)
    M = BS @ arms @ BS
    port0 = np.zeros((2, 2))
    port0[0, 0] = 1
    rho_in = np.kron(port0, sel.rho_pre)
    proj = np.kron(port0, sel.rho_post)
    return float(np.trace(proj @ M @ rho_in @ M.conj().T).real)


def test_post_selection_probability_examples():
    T = attenuation_of(-PI[2])
    assert est.post_selection_probability(THREE_BOX, T, 0.0) == pytest.approx(1 / 9)
    theta = 0.37
    w = -1.0
    g = 1 - np.exp(-theta)
    expected = (1 / 9) * (1 - g * 2 * w + g**2 * w**2)
    assert est.post_selection_probability(THREE_BOX, T, theta) == pytest.approx(expected, rel=1e-13)
    mixed = Selection(qcore.ket([1, 0, 0]), np.eye(3) / 3)
    U = unitary_of(qcore.random_hermitian(3, np.random.default_rng(0)))
    for theta in (0.0, 0.4, -0.9):
        assert est.post_selection_probability(mixed, U, theta) == pytest.approx(1 / 3, abs=1e-14)


def test_probability_ratio_slopes():
    h = 1e-6
    for k, slope in ((0, -2.0), (2, 2.0)):
        T = attenuation_of(-PI[k])
        assert est.probability_ratio(THREE_BOX, T, 0.0) == 1
        fd = (est.probability_ratio(THREE_BOX, T, h) - est.probability_ratio(THREE_BOX, T, -h)) / (2 * h)
        assert fd == pytest.approx(slope, abs=1e-6)


def test_probability_ratio_vanishing_baseline():
    sel = Selection(qcore.ket([1, 0]), qcore.ket([0, 1]))
    with pytest.raises(ValueError):
        est.probability_ratio(sel, unitary_of(qcore.SIGMA_X), 0.1)


def test_forward_estimator_examples():
    T = attenuation_of(-PI[2])
    e = est.estimate_re_forward(THREE_BOX, T, 1e-4)
    assert e.value == pytest.approx(1.0, abs=5e-4)
    assert e.analytic_ref.value == pytest.approx(1.0)
    zero = attenuation_of(np.zeros((3, 3)))
    assert est.estimate_re_forward(THREE_BOX, zero, 1e-3).value == 0
    sel = spin_selection()
    e = est.estimate_re_forward(sel, unitary_of(qcore.S_Z), 1e-5)
    assert e.value == pytest.approx(-weak_value(qcore.S_Z, sel).imag, abs=1e-4)
    with pytest.raises(ValueError):
        est.estimate_re_forward(THREE_BOX, T, 0.0)


def test_symmetric_estimator_examples():
    T = attenuation_of(-PI[2])
    assert est.estimate_re_symmetric(THREE_BOX, T, 1e-2).value == pytest.approx(1.0, abs=2e-4)
    assert est.estimate_re_symmetric(THREE_BOX, attenuation_of(np.zeros((3, 3))), 1e-2).value == 0
    err = [abs(est.estimate_re_symmetric(THREE_BOX, T, t).value - 1) for t in (1e-1, 1e-2)]
    assert err[0] / err[1] == pytest.approx(100, rel=0.05)
    with pytest.raises(ValueError):
        est.estimate_re(THREE_BOX, T, 1e-3, method="central")


def test_fringe_probability_examples():
    sel = spin_selection()
    T = unitary_of(qcore.S_Z)
    deltas = np.linspace(0, 2 * np.pi, 7)
    p0 = sel.success_probability
    np.testing.assert_allclose(est.fringe_probability(sel, T, 0.0, deltas), p0 / 4 * (2 + 2 * np.cos(deltas)), atol=1e-15)
    theta = 0.01
    peak = np.angle(est.amplitude_ratio(sel, T, theta))
    grid = peak + np.linspace(-0.5, 0.5, 101)
    vals = est.fringe_probability(sel, T, theta, grid)
    assert np.argmax(vals) == 50
    assert peak == pytest.approx(theta / (2 * np.cos(CHI)), rel=1e-3)


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 4), st.floats(-0.5, 0.5), st.floats(0, 2 * np.pi), st.booleans())
def test_fringe_matches_explicit_circuit(seed, d, theta, delta, mixed):
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    T = exponential_of(0.5 * C)
    if mixed:
        sel = Selection(qcore.random_density(d, rng), qcore.random_density(d, rng))
    else:
        sel = random_selection(d, rng, 0.2)
    assert est.fringe_probability(sel, T, theta, delta) == pytest.approx(circuit_fringe(sel, T, theta, delta), rel=1e-10, abs=1e-14)


def test_fit_fringe_phase_examples():
    deltas = est.default_deltas()
    assert est.fit_fringe_phase(deltas, 2 + 2 * np.cos(deltas)) == pytest.approx(0, abs=1e-14)
    assert est.fit_fringe_phase(deltas, 2 + 2 * np.cos(deltas - 0.3)) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(NoFringe):
        est.fit_fringe_phase(deltas, np.full(16, 0.25))
    with pytest.raises(ValueError):
        est.fit_fringe_phase([0.0, 1.0], [1.0, 2.0])


def test_fit_fringe_matches_dft_on_uniform_grid():
    rng = np.random.default_rng(2)
    deltas = est.default_deltas(16)
    probs = rng.uniform(0.2, 0.8, 16)
    c1 = np.sum(probs * np.exp(1j * deltas))
    assert est.fit_fringe_phase(deltas, probs) == pytest.approx(np.angle(c1), abs=1e-12)


def test_fit_fringe_non_uniform_grid():
    deltas = np.array([0.1, 0.9, 2.2, 3.0, 4.4, 5.9])
    assert est.fit_fringe_phase(deltas, 1 + 0.7 * np.cos(deltas + 2.0)) == pytest.approx(-2.0, abs=1e-12)


def test_interferometer_config_needs_three_samples():
    with pytest.raises(ValueError):
        est.InterferometerConfig(unitary_of(qcore.SIGMA_Z), deltas=[0.0, 1.0])
    assert est.InterferometerConfig(unitary_of(qcore.SIGMA_Z)).deltas.size == 16


def test_wrap_phase():
    assert est.wrap_phase(np.pi) == np.pi
    assert est.wrap_phase(-np.pi) == np.pi
    assert est.wrap_phase(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
    np.testing.assert_allclose(est.wrap_phase([0.1, 2 * np.pi + 0.1]), [0.1, 0.1])


def test_estimate_im_table1_columns():
    rng = np.random.default_rng(11)
    sel = random_selection(3, rng)
    A = qcore.random_hermitian(3, rng)
    e = est.estimate_im(sel, est.InterferometerConfig(unitary_of(A)), 1e-4)
    assert e.value == pytest.approx(weak_value(A, sel).real, abs=1e-6)
    e = est.estimate_im(sel, est.InterferometerConfig(attenuation_of(A)), 1e-4)
    assert e.value == pytest.approx(weak_value(A, sel).imag, abs=1e-6)


def test_estimate_im_three_box_is_zero():
    for k in range(3):
        e = est.estimate_im(THREE_BOX, est.InterferometerConfig(attenuation_of(-PI[k])), 1e-3)
        assert abs(e.value) <= 1e-12


def test_estimate_im_spin():
    e = est.estimate_im(spin_selection(), est.InterferometerConfig(unitary_of(qcore.S_Z)), 1e-4)
    assert e.value == pytest.approx(1 / (2 * np.cos(CHI)), abs=1e-6)
    with pytest.raises(ValueError):
        est.estimate_im(spin_selection(), est.InterferometerConfig(unitary_of(qcore.S_Z)), 0.0)


def test_estimate_im_branch_warning():
    # <sigma_y>_w = -i tan(chi) is huge near orthogonal selection
    sel = spin_selection(np.pi / 2 - 1e-3)
    cfg = est.InterferometerConfig(attenuation_of(qcore.SIGMA_Y))
    with pytest.warns(EnvelopeWarning):
        est.estimate_im(sel, cfg, 0.5)


def test_estimate_weak_value_combines_parts():
    rng = np.random.default_rng(4)
    sel = random_selection(2, rng)
    C = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    e = est.estimate_weak_value(sel, est.InterferometerConfig(exponential_of(C)), 1e-4)
    assert e.value == pytest.approx(weak_value(C, sel).value, abs=1e-6)


def test_pre_only_examples():
    T = attenuation_of(-PI[0])
    assert est.estimate_expectation_pre_only(I3, T, 1e-5).value == pytest.approx(-1 / 3, abs=1e-5)
    assert est.estimate_expectation_pre_only(qcore.basis(3, 0), T, 1e-5).value == pytest.approx(-1, abs=1e-5)
    c, s = np.cos(CHI / 2), np.sin(CHI / 2)
    i = qcore.ket([c, s])
    e = est.estimate_expectation_pre_only(i, unitary_of(qcore.S_Z), 1e-4, part="im", method=est.SYMMETRIC)
    assert e.value == pytest.approx(np.cos(CHI) / 2, abs=1e-9)
    assert e.analytic_ref.value == pytest.approx(1j * np.cos(CHI) / 2)
    with pytest.raises(ValueError):
        est.estimate_expectation_pre_only(i, T, 1e-3, part="abs")
    with pytest.raises(ValueError):
        est.estimate_expectation_pre_only(np.array([1.0, 1.0]), unitary_of(qcore.S_Z), 1e-3)


def test_pre_only_matches_mixed_post_selection():
    rng = np.random.default_rng(8)
    i = qcore.random_ket(3, rng)
    C = 0.5 * (rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
    T = exponential_of(C)
    mixed = Selection(i, np.eye(3) / 3)
    target = qcore.expect(C, i)
    re = est.estimate_re_symmetric(mixed, T, 1e-4).value
    assert re == pytest.approx(target.real, abs=1e-6)
    assert est.estimate_expectation_pre_only(i, T, 1e-4, "re", est.SYMMETRIC).value == pytest.approx(target.real, abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_rank_one_mixed_agrees_with_pure(seed, d):
    rng = np.random.default_rng(seed)
    sel = random_selection(d, rng, 0.3)
    mixed = sel.as_mixed()
    C = 0.5 * (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    T = exponential_of(C)
    cfg = est.InterferometerConfig(T)
    for method in (est.FORWARD, est.SYMMETRIC):
        for theta in (1e-3, 0.05):
            assert abs(est.estimate_re(sel, T, theta, method).value - est.estimate_re(mixed, T, theta, method).value) <= 1e-10
            assert abs(est.estimate_im(sel, cfg, theta, method).value - est.estimate_im(mixed, cfg, theta, method).value) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_modulus_argument_decomposition(seed, d):
    rng = np.random.default_rng(seed)
    sel = random_selection(d, rng)
    C = qcore.random_normal(d, rng)
    T = exponential_of(C)
    w = weak_value(C, sel).value
    thetas = np.geomspace(1e-4, 1e-1, 10)
    r = np.array([est.amplitude_ratio(sel, T, t) for t in thetas])
    mod_res = np.abs(np.abs(r) - 1 - w.real * thetas)
    arg_res = np.abs(np.angle(r) - w.imag * thetas)
    assert np.all(mod_res <= 10 * thetas**2)
    assert np.all(arg_res <= 10 * thetas**2)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_symmetric_convergence_normal_generators(seed, d):
    rng = np.random.default_rng(seed)
    sel = random_selection(d, rng)
    C = qcore.random_normal(d, rng)
    T = exponential_of(C)
    w = weak_value(C, sel).value
    thetas = np.geomspace(1e-4, 1e-1, 10)
    err = [abs(est.estimate_re_symmetric(sel, T, t).value - w.real) for t in thetas]
    slope = np.polyfit(np.log(thetas), np.log(np.maximum(err, 1e-300)), 1)[0]
    assert slope >= 1.9 or max(err) <= 1e-12


def test_linear_family_probability_can_exceed_one():
    T = linear_of(np.eye(2))
    p = est.probe_point(Selection(qcore.ket([1, 0]), qcore.ket([1, 0])), T, 0.5)
    assert p.exceeds_one
    assert p.probability == pytest.approx(2.25)

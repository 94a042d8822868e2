import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvdvsim import operators as ops
from cvdvsim.errors import InsufficientCutoffError, LeakageWarning, OperatorError
from oracles import annihilation_ref, coherent_state_ref, expm_gate, hermite_position_density

UT = 1e-10


def vac(d):
    v = np.zeros(d, dtype=complex)
    v[0] = 1.0
    return v


def test_annihilation_matrix():
    np.testing.assert_array_equal(ops.annihilation(2).matrix, [[0, 1], [0, 0]])
    a = ops.annihilation(4).matrix
    assert a[2, 3] == pytest.approx(math.sqrt(3))
    np.testing.assert_allclose(a, annihilation_ref(4))
    n = a.conj().T @ a
    np.testing.assert_allclose(np.diag(n).real, [0, 1, 2, 3], atol=1e-14)


def test_quadratures():
    x, p = ops.quadratures(6)
    assert x.hermitian and p.hermitian
    # <0|x^2|0> = 1/2
    assert (x.matrix @ x.matrix)[0, 0].real == pytest.approx(0.5)
    assert x.matrix[1, 0] == pytest.approx(1 / math.sqrt(2))
    # [x, p] = i I except the last Fock level
    comm = x.matrix @ p.matrix - p.matrix @ x.matrix
    np.testing.assert_allclose(comm[:-1, :-1], 1j * np.eye(5), atol=1e-14)
    assert abs(comm[-1, -1] - 1j) > 1  # truncation edge


def test_displacement_identity_and_inverse():
    d = 12
    np.testing.assert_allclose(ops.displacement(0.0, d).matrix, np.eye(d), atol=1e-14)
    dm = ops.displacement(0.8 + 0.3j, d)
    inv = ops.displacement(-0.8 - 0.3j, d)
    np.testing.assert_allclose(dm.matrix @ inv.matrix, np.eye(d), atol=UT)


def test_displacement_mean_photon_number():
    d = 20
    st_ = ops.displacement(1.0, d).matrix @ vac(d)
    mean_n = float(np.abs(st_) ** 2 @ np.arange(d))
    assert mean_n == pytest.approx(1.0, abs=1e-6)


def test_displacement_vs_expm_oracle():
    d, alpha = 14, 0.6 - 0.2j
    a = annihilation_ref(d)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    np.testing.assert_allclose(ops.displacement(alpha, d).matrix, expm_gate(gen), atol=UT)


def test_displacement_approximates_coherent_state():
    d = 25
    st_ = ops.displacement(1.2, d).matrix @ vac(d)
    np.testing.assert_allclose(st_, coherent_state_ref(1.2, d), atol=1e-6)


def test_displacement_leakage_warning():
    with pytest.warns(LeakageWarning):
        ops.displacement(3.0, 8)  # |alpha|^2 = 9 > 8/4
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ops.displacement(0.5, 8)


def test_squeeze():
    d = 40
    np.testing.assert_allclose(ops.squeeze(0.0, d).matrix, np.eye(d), atol=1e-14)
    st_ = ops.squeeze(0.5, d).matrix @ vac(d)
    mean_n = float(np.abs(st_) ** 2 @ np.arange(d))
    assert mean_n == pytest.approx(math.sinh(0.5) ** 2, abs=1e-5)
    assert np.max(np.abs(st_[1::2])) < 1e-14  # even generator parity
    a = annihilation_ref(d)
    gen = (0.5 * a @ a - 0.5 * a.conj().T @ a.conj().T) / 2
    np.testing.assert_allclose(ops.squeeze(0.5, d).matrix, expm_gate(gen), atol=UT)


def test_squeeze_leakage_warning():
    with pytest.warns(LeakageWarning):
        ops.squeeze(2.0, 8)


def test_beamsplitter():
    d1, d2 = 3, 3
    np.testing.assert_allclose(ops.beamsplitter(0.0, 0.3, d1, d2).matrix,
                               np.eye(d1 * d2), atol=1e-14)
    b = ops.beamsplitter(math.pi / 4, 0.0, d1, d2).matrix
    out = (b @ np.eye(9)[:, 3]).reshape(3, 3)  # |1,0>
    assert out[1, 0] == pytest.approx(math.cos(math.pi / 4))
    assert out[0, 1] == pytest.approx(-math.sin(math.pi / 4))
    # photon number conservation
    a = annihilation_ref(3)
    n_tot = np.kron(a.conj().T @ a, np.eye(3)) + np.kron(np.eye(3), a.conj().T @ a)
    np.testing.assert_allclose(b @ n_tot - n_tot @ b, 0, atol=UT)
    # expm oracle
    ad_b = np.kron(a.conj().T, a)
    gen = (math.pi / 4) * (ad_b - ad_b.conj().T)
    np.testing.assert_allclose(b, expm_gate(gen), atol=UT)


def test_kerr_and_cross_kerr():
    d = 5
    np.testing.assert_allclose(ops.kerr(0.0, d).matrix, np.eye(d), atol=1e-15)
    k = ops.kerr(0.7, d).matrix
    st_ = k @ coherent_state_ref(1.0, d)
    np.testing.assert_allclose(np.abs(st_) ** 2,
                               np.abs(coherent_state_ref(1.0, d)) ** 2, atol=1e-14)
    xk = ops.cross_kerr(math.pi, 2, 2).matrix
    v11 = np.zeros(4); v11[3] = 1.0
    assert (xk @ v11)[3] == pytest.approx(-1.0)


def test_fock_dft():
    f2 = ops.fock_dft(2).matrix
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    phase = f2[0, 0] / h[0, 0]
    np.testing.assert_allclose(f2, phase * h, atol=1e-12)
    for d in (2, 3, 5, 8):
        f = ops.fock_dft(d).matrix
        np.testing.assert_allclose(np.linalg.matrix_power(f, 4), np.eye(d), atol=UT)
        np.testing.assert_allclose(f @ vac(d), np.full(d, 1 / math.sqrt(d)), atol=1e-12)


def test_modular_add():
    for d in range(2, 9):
        m = ops.modular_add(d).matrix
        perm = np.zeros((d * d, d * d))
        for j in range(d):
            for k in range(d):
                perm[j * d + (j + k) % d, j * d + k] = 1.0
        np.testing.assert_allclose(m, perm, atol=UT)
    m3 = ops.modular_add(3).matrix
    for k in range(3):
        assert abs(m3[0 * 3 + k, 0 * 3 + k] - 1) < UT  # adding zero
    assert abs(m3[2 * 3 + 1, 2 * 3 + 2] - 1) < UT  # |2,2> -> |2,1>


def test_modular_add_composed_d_times_is_identity():
    for d in (2, 3, 5):
        m = ops.modular_add(d).matrix
        np.testing.assert_allclose(np.linalg.matrix_power(m, d), np.eye(d * d), atol=1e-9)


def test_conditional_displacement_variants():
    d = 16
    for axis, quad in (("z", "x"), ("x", "x"), ("z", "p")):
        cd = ops.conditional_displacement(axis, 0.0, quad, d)
        np.testing.assert_allclose(cd.matrix, np.eye(2 * d), atol=1e-14)
    # Z(x)X: qubit |0> branch is a pure exp(-i a x) kick
    alpha = 0.7
    cd = ops.conditional_displacement("z", alpha, "x", d).matrix
    x = (annihilation_ref(d) + annihilation_ref(d).conj().T) / math.sqrt(2)
    np.testing.assert_allclose(cd[:d, :d], expm_gate(-1j * alpha * x), atol=UT)


def test_conditional_displacement_branch_fidelity():
    d, alpha = 30, 1.0
    cd = ops.conditional_displacement("z", alpha, "x", d).matrix
    plus = np.array([1, 1]) / math.sqrt(2)
    out = (cd @ np.kron(plus, vac(d))).reshape(2, d)
    # each branch is a coherent state at -+ i alpha/sqrt(2)
    for row, sign in ((0, -1), (1, +1)):
        branch = out[row] / np.linalg.norm(out[row])
        target = coherent_state_ref(sign * 1j * alpha / math.sqrt(2), d)
        assert abs(np.vdot(target, branch)) ** 2 >= 1 - 1e-4


def test_jaynes_cummings():
    g, d = 0.7, 5
    h = ops.jaynes_cummings(g, d)
    assert h.hermitian
    # <e,0|H|g,1> = g  (qubit excited = |1>, most significant)
    assert h.matrix[1 * d + 0, 0 * d + 1] == pytest.approx(g)
    # excitation number conservation
    n_exc = np.kron(np.diag([0.0, 1.0]), np.eye(d)) + np.kron(np.eye(2), np.diag(np.arange(d)))
    np.testing.assert_allclose(h.matrix @ n_exc - n_exc @ h.matrix, 0, atol=1e-14)
    # vacuum Rabi: full return of |e,0> at t = pi/g
    u = expm_gate(-1j * h.matrix * math.pi / g)
    e0 = np.zeros(2 * d); e0[d] = 1.0
    assert abs(np.vdot(e0, u @ e0)) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_rotor_ops():
    lop, phase = ops.rotor_ops(3)
    vals = np.diag(lop.matrix).real
    np.testing.assert_array_equal(vals, np.arange(-3, 4))
    np.testing.assert_array_equal(sorted(vals), sorted(-vals))
    np.testing.assert_allclose(phase(0.0).matrix, np.eye(7), atol=1e-15)
    np.testing.assert_allclose(phase(2 * math.pi).matrix, np.eye(7), atol=1e-12)


def test_gkp_comb_single_peak_limit():
    # huge delta kills every s != 0 peak; delta >= 1 leaves the peak unsqueezed
    comb = ops.gkp_comb(30, spacing=2.0, delta=6.0)
    np.testing.assert_allclose(np.abs(comb), np.abs(vac(30)), atol=1e-12)


def test_gkp_comb_even_and_peaked():
    d, spacing, delta = 60, math.sqrt(2 * math.pi), 0.35
    comb = ops.gkp_comb(d, spacing, delta)
    assert np.linalg.norm(comb) == pytest.approx(1.0)
    assert np.max(np.abs(comb[1::2])) < 1e-12  # even in x
    x = np.linspace(-8, 8, 3201)
    density = hermite_position_density(comb, x)
    # local maxima of the position density sit at multiples of the spacing
    peaks = [x[i] for i in range(1, len(x) - 1)
             if density[i] > density[i - 1] and density[i] > density[i + 1]
             and density[i] > 0.05 * density.max()]
    for p in peaks:
        nearest = round(p / spacing) * spacing
        assert abs(p - nearest) < 0.05


def test_gkp_comb_insufficient_cutoff():
    with pytest.raises(InsufficientCutoffError):
        ops.gkp_comb(8, spacing=4.0, delta=0.2)


def test_qubit_gates():
    h = ops.qubit_gate("h").matrix
    np.testing.assert_allclose(h @ h, np.eye(2), atol=1e-14)
    cx = ops.qubit_gate("cx").matrix
    assert cx[3, 2] == 1 and cx[2, 3] == 1
    rz = ops.qubit_gate("rz", math.pi).matrix
    np.testing.assert_allclose(rz, np.diag([np.exp(-1j * math.pi / 2),
                                            np.exp(1j * math.pi / 2)]), atol=1e-12)


@st.composite
def gate_draws(draw):
    kind = draw(st.sampled_from(["dgate", "sq", "bs", "kerr", "xkerr", "cd", "jc", "dft", "rot"]))
    re = draw(st.floats(-1.5, 1.5))
    im = draw(st.floats(-1.5, 1.5))
    d = draw(st.sampled_from([2, 3, 5, 8, 16]))
    d2 = draw(st.sampled_from([2, 3, 8]))
    axis = draw(st.sampled_from(["z", "x"]))
    quad = draw(st.sampled_from(["x", "p"]))
    return kind, re, im, d, d2, axis, quad


@given(gate_draws())
@settings(max_examples=120, deadline=None)
def test_property_unitarity(draw):
    kind, re, im, d, d2, axis, quad = draw
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LeakageWarning)
        if kind == "dgate":
            op = ops.displacement(re + 1j * im, d)
        elif kind == "sq":
            op = ops.squeeze((re + 1j * im) / 2, d)
        elif kind == "bs":
            op = ops.beamsplitter(re, im, d, d2)
        elif kind == "kerr":
            op = ops.kerr(re, d)
        elif kind == "xkerr":
            op = ops.cross_kerr(re, d, d2)
        elif kind == "cd":
            op = ops.conditional_displacement(axis, re, quad, d)
        elif kind == "jc":
            op = ops.jc_gate(re, d)
        elif kind == "dft":
            op = ops.fock_dft(d)
        else:
            op = ops.phase_rotation(re, d)
    assert op.unitary
    assert ops.unitarity_residual(op.matrix) <= UT


def test_local_operator_flag_validation():
    with pytest.raises(OperatorError):
        ops.LocalOperator(np.array([[1.0, 1.0], [0.0, 1.0]]), (2,), unitary=True)
    with pytest.raises(OperatorError):
        ops.LocalOperator(np.array([[0, 1.0], [0, 0]]), (2,), hermitian=True)

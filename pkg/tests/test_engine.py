import math
import warnings

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.stats import chisquare

import cvdvsim as cs
from cvdvsim import engine as eng
from cvdvsim import operators as ops
from cvdvsim.errors import (
    HermiticityError,
    LayoutMismatchError,
    LeakageWarning,
    MeasurementError,
    UnsupportedTermError,
)
from cvdvsim.hamiltonians import HamiltonianExpr, Term, _op, build_bose_hubbard, build_qhd
from cvdvsim.operators import annihilation, number, quadratures
from cvdvsim.registers import Qubit, Qumode, basis_state, init_vacuum, make_layout
from oracles import coherent_state_ref, dense_embed, expm_gate, haar_unitary


def expr_of(*factors):
    return HamiltonianExpr([Term(1.0 + 0j, tuple(factors))])


# ---------------------------------------------------------------------------
# apply_gate


def test_identity_leaves_state_bitwise():
    lay = make_layout([cs.Qubit(), cs.Qumode(3)])
    st = basis_state(lay, (1, 2))
    before = st.amplitudes.copy()
    eng.apply_gate(st, ops.LocalOperator(np.eye(3), (3,)), (1,))
    np.testing.assert_array_equal(st.amplitudes, before)


def test_apply_gate_kind_and_dim_checks():
    lay = make_layout([cs.Qubit(), cs.Qumode(3)])
    st = init_vacuum(lay)
    with pytest.raises(LayoutMismatchError):
        eng.apply_gate(st, ops.displacement(0.1, 4), (1,))  # dim mismatch
    with pytest.raises(LayoutMismatchError):
        eng.apply_gate(st, ops.displacement(0.1, 3), (0,))  # kind mismatch
    with pytest.raises(LayoutMismatchError):
        eng.apply_gate(st, ops.qubit_gate("cx"), (0, 0))  # repeated target


def test_apply_gate_matches_dense_kron_oracle():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n_modes = rng.integers(1, 5)
        dims = [int(rng.integers(2, 6)) for _ in range(n_modes)]
        if math.prod(dims) > 4096:
            continue
        lay = make_layout([cs.Qumode(d) for d in dims])
        amps = rng.normal(size=lay.total_dim) + 1j * rng.normal(size=lay.total_dim)
        amps /= np.linalg.norm(amps)
        arity = int(rng.integers(1, min(n_modes, 2) + 1))
        targets = tuple(rng.choice(n_modes, size=arity, replace=False).tolist())
        block = haar_unitary(math.prod(dims[t] for t in targets), rng)
        op = ops.LocalOperator(block, tuple(dims[t] for t in targets))

        st = cs.HybridState(lay, amps.copy())
        eng.apply_gate(st, op, targets)
        full = dense_embed(dims, block, targets)
        np.testing.assert_allclose(st.amplitudes, full @ amps, atol=1e-12)


def test_apply_then_inverse_returns_input():
    lay = make_layout([cs.Qumode(6), cs.Qubit()])
    rng = np.random.default_rng(0)
    amps = rng.normal(size=12) + 1j * rng.normal(size=12)
    amps /= np.linalg.norm(amps)
    st = cs.HybridState(lay, amps.copy())
    u = ops.displacement(0.4 + 0.2j, 6)
    eng.apply_gate(st, u, (0,))
    eng.apply_gate(st, u.dagger(), (0,))
    np.testing.assert_allclose(st.amplitudes, amps, atol=1e-10)


def test_norm_drift_over_10k_random_gates():
    lay = make_layout([cs.Qubit(), cs.Qumode(6), cs.Qumode(4)])
    st = init_vacuum(lay)
    rng = np.random.default_rng(42)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LeakageWarning)
        gates = [
            lambda: (ops.displacement(rng.uniform(-0.8, 0.8), 6), (1,)),
            lambda: (ops.squeeze(rng.uniform(-0.3, 0.3), 4), (2,)),
            lambda: (ops.beamsplitter(rng.uniform(0, 2), rng.uniform(0, 2), 6, 4), (1, 2)),
            lambda: (ops.qubit_gate("h"), (0,)),
            lambda: (ops.conditional_displacement("z", rng.uniform(-1, 1), "x", 6), (0, 1)),
            lambda: (ops.kerr(rng.uniform(0, 3), 4), (2,)),
        ]
        for i in range(10_000):
            op, tg = gates[int(rng.integers(len(gates)))]()
            eng.apply_gate(st, op, tg)
    assert abs(st.refresh_norm() - 1.0) < 1e-6


# ---------------------------------------------------------------------------
# run / measurement


def test_run_gates_only_returns_statevector():
    c = cs.parse("qubit q; h q;")
    res = cs.run(c, seed=0, shots=1)
    assert res.final_state is not None
    np.testing.assert_allclose(np.abs(res.final_state.amplitudes) ** 2, [0.5, 0.5])
    assert res.norm == pytest.approx(1.0, abs=1e-12)
    assert res.to_json_dict()["measurements"] == []


def test_run_deterministic_given_seed():
    c = cs.parse("qubit q; qumode[6] m; h q; cdx q m 0.8; measure q z; measure m fock;")
    a = cs.run(c, seed=9, shots=20)
    b = cs.run(c, seed=9, shots=20)
    assert [(m.instr, m.mode, m.value) for m in a.measurements] == \
        [(m.instr, m.mode, m.value) for m in b.measurements]


def test_hadamard_frequency_binomial_bound():
    c = cs.parse("qubit q; h q; measure q z;")
    res = cs.run(c, seed=1, shots=10_000)
    freq0 = sum(1 for m in res.measurements if m.value == 0) / 10_000
    assert 0.485 <= freq0 <= 0.515


def test_coherent_fock_sampling_poisson_mean():
    alpha = 1.2
    c = cs.parse(f"qumode[24] m; dgate m {alpha} 0.0; measure m fock;")
    res = cs.run(c, seed=2, shots=10_000)
    vals = np.array([m.value for m in res.measurements], dtype=float)
    mean = vals.mean()
    sigma = math.sqrt(alpha**2 / 10_000)
    assert abs(mean - alpha**2) <= 3 * sigma


def test_fock_statistics_chi_square():
    # uniform phase state: F|0> has equal probabilities on all 5 levels
    c = cs.parse("qumode[5] m; dft m; measure m fock;")
    res = cs.run(c, seed=3, shots=10_000)
    counts = np.bincount([m.value for m in res.measurements], minlength=5)
    _, p = chisquare(counts)
    assert p > 0.001


def test_mid_circuit_measurement_collapses():
    # measure the qubit of a Bell-like pair, then measure again: same value
    c = cs.parse("qubit a; qubit b; h a; cx a b; measure a z; measure b z;")
    res = cs.run(c, seed=4, shots=200)
    pairs = {}
    for m in res.measurements:
        pairs.setdefault(m.shot, {})[m.mode] = m.value
    assert all(v[0] == v[1] for v in pairs.values())


def test_reset_returns_mode_to_ground():
    c = cs.parse("qubit q; h q; reset q; measure q z;")
    res = cs.run(c, seed=5, shots=50)
    assert all(m.value == 0 for m in res.measurements)


def test_rotor_fock_measurement_reports_l():
    c = cs.parse("rotor[2] r; measure r fock;")
    res = cs.run(c, seed=0, shots=3)
    assert all(m.value == -2 for m in res.measurements)  # vacuum = |l=-l_max>


def test_measure_zero_norm_branch_raises():
    lay = make_layout([cs.Qubit()])
    st = cs.HybridState(lay, np.zeros(2, dtype=complex), squared_norm=0.0)
    with pytest.raises(MeasurementError):
        eng.sample_level(st, 0, eng.shot_rng(0, 0))


# ---------------------------------------------------------------------------
# homodyne


def test_homodyne_vacuum_variance():
    st = init_vacuum(make_layout([cs.Qumode(8)]))
    samples = eng.homodyne_samples(st, 0, 0.0, 10_000, seed=7)
    assert abs(np.var(samples) - 0.5) <= 0.02


def test_homodyne_displaced_mean():
    alpha = 0.8
    st = init_vacuum(make_layout([cs.Qumode(24)]))
    eng.apply_gate(st, ops.displacement(alpha, 24), (0,))
    samples = eng.homodyne_samples(st, 0, 0.0, 10_000, seed=8)
    sigma = math.sqrt(0.5 / 10_000)
    assert abs(samples.mean() - math.sqrt(2) * alpha) <= 3 * sigma + 0.01


def test_homodyne_squeezed_variances():
    # S(r) with r > 0 squeezes x (angle 0) and antisqueezes p (angle pi/2)
    r, d = 0.5, 40
    st = init_vacuum(make_layout([cs.Qumode(d)]))
    eng.apply_gate(st, ops.squeeze(r, d), (0,))
    v0 = np.var(eng.homodyne_samples(st, 0, 0.0, 20_000, seed=9))
    v1 = np.var(eng.homodyne_samples(st, 0, math.pi / 2, 20_000, seed=10))
    assert abs(v0 - math.exp(-2 * r) / 2) <= 0.01
    assert abs(v1 - math.exp(2 * r) / 2) <= 0.05


def test_homodyne_collapse_renormalizes():
    st = init_vacuum(make_layout([cs.Qumode(10)]))
    value = eng.measure_homodyne(st, 0, 0.0, eng.shot_rng(1, 0))
    assert st.squared_norm == pytest.approx(1.0)
    assert -8 < value < 8
    # post-measurement state is the grid eigenvector: immediate re-measurement
    # of the same quadrature concentrates near the first outcome
    again = eng.measure_homodyne(st.copy(), 0, 0.0, eng.shot_rng(2, 0))
    assert abs(again - value) < 1.5


def test_homodyne_requires_qumode():
    st = init_vacuum(make_layout([cs.Qubit()]))
    with pytest.raises(LayoutMismatchError):
        eng.quadrature_density(st, 0, 0.0)


# ---------------------------------------------------------------------------
# expectation


def test_expectation_examples():
    lay = make_layout([cs.Qumode(6)])
    nop = expr_of((0, number(6)))
    assert eng.expectation(init_vacuum(lay), nop) == pytest.approx(0.0)
    assert eng.expectation(basis_state(lay, (3,)), nop) == pytest.approx(3.0)


def test_expectation_bose_hubbard_matches_dense():
    expr, lay = build_bose_hubbard(3, 0.7, 1.3, 0.2, "repulsive", 3, "open")
    st = basis_state(lay, (2, 0, 1))
    dense = expr.to_dense(lay)
    want = float(np.real(st.amplitudes.conj() @ dense @ st.amplitudes))
    assert eng.expectation(st, expr) == pytest.approx(want, abs=1e-12)


def test_expectation_rejects_non_hermitian():
    lay = make_layout([cs.Qumode(4)])
    bad = expr_of((0, annihilation(4)))
    with pytest.raises(HermiticityError):
        eng.expectation(init_vacuum(lay), bad)


# ---------------------------------------------------------------------------
# trotter evolution


def test_trotter_t0_is_identity():
    expr, lay = build_bose_hubbard(2, 1.0, 1.0, 0.0, "repulsive", 3, "open")
    st = basis_state(lay, (1, 1))
    before = st.amplitudes.copy()
    eng.evolve_trotter(st, expr, 0.0, 5)
    np.testing.assert_array_equal(st.amplitudes, before)


def test_trotter_commuting_terms_exact_single_step():
    d = 4
    lay = make_layout([cs.Qumode(d), cs.Qumode(d)])
    expr = expr_of((0, number(d))) + 0.7 * expr_of((1, number(d)))
    amps = np.random.default_rng(3).normal(size=16) + 0j
    amps /= np.linalg.norm(amps)
    st = cs.HybridState(lay, amps.copy())
    eng.evolve_trotter(st, expr, 1.3, 1)
    ref = expm_gate(-1j * 1.3 * expr.to_dense(lay)) @ amps
    np.testing.assert_allclose(st.amplitudes, ref, atol=1e-10)


def test_trotter_second_order_convergence():
    expr, lay = build_bose_hubbard(3, 1.0, 1.0, 0.0, "repulsive", 4, "open")
    psi0 = basis_state(lay, (1, 1, 1))
    t = 0.6
    ref = expm_gate(-1j * t * expr.to_dense(lay)) @ psi0.amplitudes
    errs = []
    for steps in (4, 8, 16):
        st = psi0.copy()
        eng.evolve_trotter(st, expr, t, steps)
        errs.append(np.linalg.norm(st.amplitudes - ref))
    for a, b in zip(errs, errs[1:]):
        assert 3.5 <= a / b <= 4.5


def test_trotter_rejects_wide_terms():
    d = 2
    lay = make_layout([cs.Qumode(d)] * 4)
    xs = [(m, quadratures(d)[0]) for m in range(4)]
    wide = HamiltonianExpr([Term(1.0 + 0j, tuple(xs))])
    st = init_vacuum(lay)
    with pytest.raises(UnsupportedTermError):
        eng.evolve_trotter(st, wide, 0.1, 1)
    with pytest.raises(UnsupportedTermError):
        eng.evolve_trotter(st, expr_of((0, number(d))), 0.1, 0)


def test_three_mode_term_matches_dense():
    d = 3
    lay = make_layout([cs.Qumode(d)] * 3)
    x = quadratures(d)[0]
    expr = expr_of((0, x), (1, x), (2, x)) * 0.4
    rng = np.random.default_rng(1)
    amps = rng.normal(size=27) + 1j * rng.normal(size=27)
    amps /= np.linalg.norm(amps)
    st = cs.HybridState(lay, amps.copy())
    eng.evolve_trotter(st, expr, 0.9, 1)  # single Hermitian block: exact
    ref = expm_gate(-1j * 0.9 * expr.to_dense(lay)) @ amps
    np.testing.assert_allclose(st.amplitudes, ref, atol=1e-10)


# ---------------------------------------------------------------------------
# time-dependent evolution


def test_time_dependent_constant_builder_matches_trotter():
    expr, lay = build_bose_hubbard(2, 1.0, 0.5, 0.1, "repulsive", 3, "open")
    s1 = basis_state(lay, (1, 0))
    s2 = basis_state(lay, (1, 0))
    eng.evolve_trotter(s1, expr, 0.7, 13)
    eng.evolve_time_dependent(s2, lambda t: expr, 0.7, 13)
    np.testing.assert_allclose(s1.amplitudes, s2.amplitudes, atol=1e-12)


def test_time_dependent_matches_ode_oracle():
    d = 20
    builder = build_qhd(None, None, 1, d)  # kinetic-only, mass 1 + t^2
    lay = make_layout([Qumode(d)])
    st = init_vacuum(lay)
    eng.apply_gate(st, ops.displacement(1.0, d), (0,))
    p2 = quadratures(d)[1].matrix @ quadratures(d)[1].matrix

    def rhs(t, y):
        psi = y[:d] + 1j * y[d:]
        dpsi = -1j * (p2 @ psi) / (2 * (1 + t * t))
        return np.concatenate([dpsi.real, dpsi.imag])

    y0 = np.concatenate([st.amplitudes.real, st.amplitudes.imag])
    sol = solve_ivp(rhs, (0, 2.0), y0, rtol=1e-10, atol=1e-12)
    ref = sol.y[:d, -1] + 1j * sol.y[d:, -1]

    errs = []
    for steps in (100, 200):
        trial = st.copy()
        eng.evolve_time_dependent(trial, builder, 2.0, steps)
        errs.append(np.linalg.norm(trial.amplitudes - ref))
    assert errs[1] <= 1e-4
    assert 3.0 <= errs[0] / errs[1] <= 5.0  # halving dt cuts error ~4x


# ---------------------------------------------------------------------------
# correlations, spectra, survival


def test_two_time_correlation_oscillator():
    d = 12
    lay = make_layout([cs.Qumode(d)])
    h = expr_of((0, number(d)))
    x = expr_of((0, quadratures(d)[0]))
    vac = init_vacuum(lay)
    for t in (0.0, 0.7, 2.1):
        c = eng.two_time_correlation(vac, h, x, x, t, steps=64)
        assert c == pytest.approx(0.5 * np.exp(-1j * t), abs=1e-8)


def test_two_time_correlation_positivity_and_identity():
    d = 6
    lay = make_layout([cs.Qumode(d)])
    h = expr_of((0, number(d)))
    a = annihilation(d)
    b_expr = HamiltonianExpr([Term(1.0 + 0j, ((0, a),))])
    bdag_expr = b_expr.dagger()
    amps = coherent_state_ref(0.7, d)
    st = cs.HybridState(lay, amps / np.linalg.norm(amps))
    c0 = eng.two_time_correlation(st, h, bdag_expr, b_expr, 0.0)
    assert c0.real >= 0 and abs(c0.imag) < 1e-12  # C(0) = <B†B> >= 0
    ident = HamiltonianExpr([Term(1.0 + 0j, ())])
    for t in (0.0, 1.1):
        c = eng.two_time_correlation(st, h, ident, ident, t, steps=32)
        assert c == pytest.approx(1.0, abs=1e-10)


def test_correlation_spectrum_peak_and_symmetry():
    dt, w0 = 0.1, 2.0
    ts = np.arange(256) * dt
    om, spec = eng.correlation_spectrum(np.exp(-1j * w0 * ts), dt, eta=0.2)
    assert om[np.argmax(spec)] == pytest.approx(w0, abs=2 * np.pi / (256 * dt) + 1e-9)
    # eta damping flattens the peak monotonically
    peaks = [eng.correlation_spectrum(np.exp(-1j * w0 * ts), dt, eta=e)[1].max()
             for e in (0.2, 0.5, 1.0)]
    assert peaks[0] > peaks[1] > peaks[2]
    # real C implies even spectrum (Nyquist bin has no mirror partner)
    om, spec = eng.correlation_spectrum(np.cos(w0 * ts), dt, eta=0.3)
    for i, w in enumerate(om):
        j = np.argmin(np.abs(om + w))
        if abs(om[j] + w) < 1e-12:
            assert spec[i] == pytest.approx(spec[j], abs=1e-9)


def test_correlation_spectrum_input_validation():
    with pytest.raises(MeasurementError):
        eng.correlation_spectrum(np.ones(3), 0.1, 0.1)
    with pytest.raises(MeasurementError):
        eng.correlation_spectrum(np.ones(8), 0.1, 0.0)


def test_survival_probability_t0_and_eigenstate():
    d = 6
    lay = make_layout([cs.Qumode(d)])
    h = expr_of((0, number(d)))
    fock2 = basis_state(lay, (2,))
    assert eng.survival_probability(fock2, h, 0.0) == pytest.approx(1.0)
    for t in (0.5, 2.0):
        assert eng.survival_probability(fock2, h, t, steps=32) == pytest.approx(1.0, abs=1e-10)


def test_survival_probability_rabi():
    g, d = 0.8, 5
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    jc = HamiltonianExpr([Term(complex(g), ((0, _op(sp, "qubit")), (1, annihilation(d))))])
    jc = jc + jc.dagger()
    lay = make_layout([Qubit(), Qumode(d)])
    psi0 = basis_state(lay, (1, 0))
    for t in (0.3, 0.9, 1.7):
        s = eng.survival_probability(psi0, jc, t, steps=128)
        assert s == pytest.approx(math.cos(g * t) ** 2, abs=1e-6)


# ---------------------------------------------------------------------------
# postselection bookkeeping


def test_postselect_records_branch_probability():
    lay = make_layout([cs.Qubit(), cs.Qumode(2)])
    st = init_vacuum(lay)
    eng.apply_gate(st, ops.qubit_gate("h"), (0,))
    prob = eng.collapse_level(st, 0, 0, renormalize=False)
    assert prob == pytest.approx(0.5)
    assert st.squared_norm == pytest.approx(0.5)
    st.normalize()
    assert st.squared_norm == 1.0

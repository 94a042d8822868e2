import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cvdvsim as cs
from cvdvsim.errors import CapacityError, LayoutMismatchError, ModeIndexError
from oracles import decode_mixed_radix, encode_mixed_radix


def test_mode_dimensions():
    assert cs.Qubit().dim == 2
    assert cs.Qumode(5).dim == 5
    assert cs.Rotor(3).dim == 7


def test_mode_validation():
    with pytest.raises(ModeIndexError):
        cs.Qumode(1)
    with pytest.raises(ModeIndexError):
        cs.Rotor(0)


def test_make_layout_dims():
    assert cs.make_layout([cs.Qubit()]).total_dim == 2
    assert cs.make_layout([cs.Qubit(), cs.Qumode(3), cs.Qumode(4)]).total_dim == 24
    # 2 qubits + 3 qumodes at cutoff 8: 2^n * f^m
    lay = cs.make_layout([cs.Qubit(), cs.Qubit()] + [cs.Qumode(8)] * 3)
    assert lay.total_dim == 2**2 * 8**3 == 2048


def test_empty_layout_rejected():
    with pytest.raises(ModeIndexError):
        cs.make_layout([])


def test_capacity_error_names_limit(monkeypatch):
    monkeypatch.setenv("HCIR_MEM_CEILING_BYTES", "1000")
    with pytest.raises(CapacityError) as exc:
        cs.make_layout([cs.Qumode(32), cs.Qumode(32)])
    assert exc.value.required_bytes == 32 * 32 * 16
    assert exc.value.allowed_bytes == 1000


def test_index_of_examples():
    lay = cs.make_layout([cs.Qubit(), cs.Qumode(3), cs.Qumode(4)])
    assert cs.index_of(lay, (1, 2, 3)) == 1 * 12 + 2 * 4 + 3 == 23
    assert cs.index_of(lay, (0, 0, 0)) == 0


def test_rotor_offset_convention():
    lay = cs.make_layout([cs.Rotor(1)])
    assert cs.index_of(lay, (-1,)) == 0
    assert cs.index_of(lay, (0,)) == 1
    assert cs.index_of(lay, (1,)) == 2
    assert cs.coords_of(lay, 0) == (-1,)


def test_index_out_of_range_names_mode():
    lay = cs.make_layout([cs.Qubit(), cs.Qumode(3)])
    with pytest.raises(ModeIndexError, match="mode 1"):
        cs.index_of(lay, (0, 3))


@given(st.lists(st.sampled_from(["q", "m3", "m5", "r1", "r2"]), min_size=1, max_size=4))
@settings(max_examples=60, deadline=None)
def test_index_bijection(spec):
    kinds = {"q": cs.Qubit(), "m3": cs.Qumode(3), "m5": cs.Qumode(5),
             "r1": cs.Rotor(1), "r2": cs.Rotor(2)}
    lay = cs.make_layout([kinds[s] for s in spec])
    if lay.total_dim > 10_000:
        return
    for idx in range(lay.total_dim):
        assert cs.index_of(lay, cs.coords_of(lay, idx)) == idx
        # agreement with the brute-force radix oracle (up to rotor offsets)
        raw = decode_mixed_radix(idx, lay.dims)
        assert encode_mixed_radix(raw, lay.dims) == idx


def test_total_dim_permutation_invariant():
    modes = [cs.Qubit(), cs.Qumode(3), cs.Rotor(2), cs.Qumode(4)]
    base = cs.make_layout(modes).total_dim
    assert cs.make_layout(modes[::-1]).total_dim == base
    assert cs.make_layout([modes[2], modes[0], modes[3], modes[1]]).total_dim == base


def test_init_vacuum_examples():
    np.testing.assert_array_equal(
        cs.init_vacuum(cs.make_layout([cs.Qubit()])).amplitudes, [1, 0])
    np.testing.assert_array_equal(
        cs.init_vacuum(cs.make_layout([cs.Qumode(4)])).amplitudes, [1, 0, 0, 0])
    np.testing.assert_array_equal(
        cs.init_vacuum(cs.make_layout([cs.Qubit(), cs.Qumode(2)])).amplitudes,
        [1, 0, 0, 0])


def test_inner_product():
    lay = cs.make_layout([cs.Qumode(4)])
    vac = cs.init_vacuum(lay)
    assert cs.inner_product(vac, vac) == 1
    one = cs.basis_state(lay, (1,))
    assert cs.inner_product(vac, one) == 0
    with pytest.raises(LayoutMismatchError):
        cs.inner_product(vac, cs.init_vacuum(cs.make_layout([cs.Qumode(5)])))


def test_inner_product_conjugates_left():
    lay = cs.make_layout([cs.Qubit()])
    a = cs.HybridState(lay, np.array([1j, 0.0]))
    b = cs.HybridState(lay, np.array([1.0, 0.0]))
    assert cs.inner_product(a, b) == pytest.approx(-1j)


def test_memory_estimate():
    lay = cs.make_layout([cs.Qubit(), cs.Qubit()] + [cs.Qumode(8)] * 3)
    assert cs.memory_estimate(lay, 16) == 32768
    assert cs.memory_estimate(cs.make_layout([cs.Qubit()]), 16) == 32
    # cutoff 12 keeps 12 levels, not the next power of two
    assert cs.memory_estimate(cs.make_layout([cs.Qumode(12)]), 16) == 192


def test_memory_estimate_monotone_in_cutoff():
    prev = 0
    for cutoff in (2, 3, 4, 8, 13, 21):
        est = cs.memory_estimate(cs.make_layout([cs.Qubit(), cs.Qumode(cutoff)]), 16)
        assert est > prev
        prev = est


def test_normalize_and_norm_tracking():
    lay = cs.make_layout([cs.Qubit()])
    st_ = cs.HybridState(lay, np.array([0.5, 0.0]))
    assert st_.squared_norm == pytest.approx(0.25)
    st_.normalize()
    assert st_.squared_norm == 1.0
    np.testing.assert_allclose(st_.amplitudes, [1, 0])

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffcool import (
    PauliString,
    State,
    apply_pauli,
    build_fredkin,
    build_heisenberg_chain,
    energy,
    fidelity,
    measure_term,
    term_expectation,
)
from ffcool.errors import BasisMismatchError, SectorEscapeError
from ffcool.statevec import TermKernel, kernels_for


@pytest.fixture(scope="module")
def heis4():
    return build_heisenberg_chain(4, True, 2)


def random_state(basis, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=basis.size) + 1j * rng.normal(size=basis.size)
    return State(v / np.linalg.norm(v), basis)


def test_singlet_expectations(heis4):
    st = State(heis4.initial_state.astype(complex), heis4.basis)  # Neel 0101
    for term in heis4.terms:
        assert term_expectation(st, term) == pytest.approx(0.5, abs=1e-12)
    # local singlet on bond (0,1): outcome-1 collapse of term 0
    kern = kernels_for(heis4)[0]
    amps = st.amps.copy()
    kern.collapse(amps, 1)
    sing = State(amps, heis4.basis)
    assert term_expectation(sing, heis4.terms[0]) == pytest.approx(1.0, abs=1e-12)


def window_expectation(m, cfg, term):
    amps = np.zeros(m.basis.size, dtype=complex)
    amps[m.basis.ordinal(cfg)] = 1.0
    st = State(amps, m.basis)
    P = term.matrix  # dense 16x16 oracle
    lc = 0
    for s in term.support:
        lc = (lc << 1) | ((cfg >> (8 - 1 - s)) & 1)
    expected = float(P[lc, lc].real)
    assert term_expectation(st, term) == pytest.approx(expected, abs=1e-12)
    return expected


def test_fredkin_window_expectation_against_dense_oracle():
    m = build_fredkin(8)
    term = m.terms[2]  # bulk support (1,2,3,4)
    # window 0101: singlet pair in |10>, conditioning (0,1) allowed -> 1/2
    assert window_expectation(m, int("00101101", 2), term) == pytest.approx(0.5)
    # window 1100: conditioning pair is exactly |10>, so the term annihilates
    assert window_expectation(m, int("01100101", 2), term) == pytest.approx(0.0)


def test_measure_term_branches(heis4):
    st = State(heis4.ground_state.astype(complex), heis4.basis)
    rng = np.random.default_rng(0)
    out, post = measure_term(st, heis4.terms[1], rng)
    assert out.outcome == 0 and out.pre_probability_of_1 < 1e-14
    assert fidelity(post, st) == pytest.approx(1.0, abs=1e-12)

    neel = State(heis4.initial_state.astype(complex), heis4.basis)
    # outcome-1 branch is the local singlet tensor rest: oracle via dense algebra
    kern = TermKernel(heis4.basis, heis4.terms[0])
    amps = neel.amps.copy()
    _, p1 = kern.collapse(amps, 1)
    assert p1 == pytest.approx(0.5)
    # resulting state: (|01> - |10>)/sqrt2 on sites (0,1), rest fixed at 01
    a = np.zeros(heis4.basis.size, dtype=complex)
    a[heis4.basis.ordinal(int("0101", 2))] = 1 / np.sqrt(2)
    a[heis4.basis.ordinal(int("1001", 2))] = -1 / np.sqrt(2)
    assert abs(np.vdot(a, amps)) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_measure_probabilities_sum_to_one(heis4):
    st = random_state(heis4.basis, seed=5)
    for term in heis4.terms:
        kern = TermKernel(heis4.basis, term)
        p1 = kern.expectation(st.amps)
        a0 = st.amps.copy()
        kern.apply_one_minus_p(a0)
        assert p1 + np.linalg.norm(a0) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_apply_pauli_involution_and_phases(heis4):
    st = random_state(heis4.basis, seed=1)
    z = PauliString.from_factors(4, {2: "Z"})
    twice = apply_pauli(apply_pauli(st, z), z)
    assert np.allclose(twice.amps, st.amps)
    # X flip within the magnetization sector escapes
    x = PauliString.from_factors(4, {2: "X"})
    with pytest.raises(SectorEscapeError):
        apply_pauli(st, x)


def test_x_on_plus_state_is_identity():
    from ffcool import build_cluster_ising

    m = build_cluster_ising(9)
    st = State(m.initial_state.astype(complex), m.basis)
    x = PauliString.from_factors(9, {4: "X"})
    out = apply_pauli(st, x)
    assert np.allclose(out.amps, st.amps)


def test_z_correction_detunes_singlet(heis4):
    # collapse onto singlet at bond (0,1), apply the Z correction: the bond
    # becomes a triplet, so re-measuring the same term gives 0 deterministically
    neel = State(heis4.initial_state.astype(complex), heis4.basis)
    kern = TermKernel(heis4.basis, heis4.terms[0])
    amps = neel.amps.copy()
    kern.collapse(amps, 1)
    st = apply_pauli(State(amps, heis4.basis), heis4.terms[0].correction)
    assert term_expectation(st, heis4.terms[0]) == pytest.approx(0.0, abs=1e-12)


def test_energy_and_fidelity_examples():
    m = build_heisenberg_chain(8, True, 4)
    gs = State(m.ground_state.astype(complex), m.basis)
    assert energy(gs, m) == pytest.approx(0.0, abs=1e-10)
    neel = State(m.initial_state.astype(complex), m.basis)
    assert energy(neel, m) == pytest.approx(4.0, abs=1e-12)
    assert fidelity(neel, gs) == pytest.approx(1 / 70, rel=1e-12)
    assert fidelity(gs, gs) == pytest.approx(1.0)
    # orthogonal basis states
    a = np.zeros(m.basis.size, dtype=complex)
    a[0] = 1
    b = np.zeros(m.basis.size, dtype=complex)
    b[1] = 1
    assert fidelity(State(a, m.basis), State(b, m.basis)) == 0.0


def test_energy_matches_sparse_quadratic_form(heis4):
    from ffcool.spectra import hamiltonian

    H = hamiltonian(heis4)
    for seed in range(5):
        st = random_state(heis4.basis, seed)
        assert energy(st, heis4) == pytest.approx(
            float(np.real(np.vdot(st.amps, H @ st.amps))), abs=1e-10
        )


def test_within_layer_order_independence():
    """Joint outcome distribution of a layer is order-independent: exhaustive
    branch enumeration over the even layer of the N=8 chain."""
    m = build_heisenberg_chain(8, True, 4)
    kerns = kernels_for(m)
    layer = m.layers[0]
    st0 = random_state(m.basis, seed=9)

    def branch_table(order):
        table = {}

        def recurse(amps, prob, outcomes):
            if len(outcomes) == len(order):
                table[outcomes] = prob
                return
            kern = kerns[order[len(outcomes)]]
            p1 = kern.expectation(amps)
            for oc in (0, 1):
                p = p1 if oc == 1 else 1 - p1
                if p * prob < 1e-16:
                    continue
                a = amps.copy()
                kern.collapse(a, oc)
                recurse(a, prob * p, outcomes + (oc,))

        recurse(st0.amps.copy(), 1.0, ())
        return table

    t_fwd = branch_table(tuple(layer))
    t_rev = branch_table(tuple(reversed(layer)))
    for outcomes, p in t_fwd.items():
        assert t_rev[tuple(reversed(outcomes))] == pytest.approx(p, abs=1e-12)


def test_basis_mismatch():
    a = build_heisenberg_chain(4, True, 2)
    b = build_heisenberg_chain(6, True, 3)
    st = State(a.ground_state.astype(complex), a.basis)
    with pytest.raises(BasisMismatchError):
        energy(st, b)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_measure_preserves_norm(seed):
    m = build_heisenberg_chain(6, True, 3)
    rng = np.random.default_rng(seed)
    v = rng.normal(size=m.basis.size) + 1j * rng.normal(size=m.basis.size)
    state = State(v / np.linalg.norm(v), m.basis)
    _, post = measure_term(state, m.terms[seed % len(m.terms)], rng)
    assert abs(post.norm() - 1.0) < 1e-10

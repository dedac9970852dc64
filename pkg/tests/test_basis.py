import io
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ffcool.basis import (
    LocalMove,
    config_to_string,
    dfs_closure,
    enumerate_full_space,
    enumerate_magnetization_sector,
    enumerate_reachable_sector,
    site_mask,
    string_to_config,
)
from ffcool.errors import CapacityError, MalformedMoveError
from ffcool.models import build_fredkin, build_model, build_qdm, fredkin_moves


def test_magnetization_trivial_cases():
    b = enumerate_magnetization_sector(4, 0)
    assert b.size == 1 and int(b.configs[0]) == 0
    b = enumerate_magnetization_sector(4, 2)
    assert b.size == 6
    strings = [config_to_string(int(c), 4) for c in b.configs]
    assert strings == ["0011", "0101", "0110", "1001", "1010", "1100"]


def test_magnetization_16_8_against_bitcount_filter():
    # independent oracle: exhaustive popcount filter over 2^16
    expected = sorted(c for c in range(1 << 16) if bin(c).count("1") == 8)
    b = enumerate_magnetization_sector(16, 8)
    assert b.size == 12870 == comb(16, 8)
    assert np.array_equal(b.configs, np.array(expected, dtype=np.uint64))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.data())
def test_magnetization_size_and_index(n, data):
    k = data.draw(st.integers(0, n))
    b = enumerate_magnetization_sector(n, k)
    assert b.size == comb(n, k)
    i = data.draw(st.integers(0, b.size - 1))
    assert b.ordinal(int(b.configs[i])) == i


def test_capacity_error():
    with pytest.raises(CapacityError):
        enumerate_magnetization_sector(30, 15, budget=1000)


def test_malformed_move():
    with pytest.raises(MalformedMoveError):
        LocalMove(mask=0b11, pattern_a=0b100, pattern_b=0b01)
    with pytest.raises(MalformedMoveError):
        LocalMove(mask=0b11, pattern_a=0b01, pattern_b=0b01)


def test_reachable_singleton_without_moves():
    mv = LocalMove(mask=0b11, pattern_a=0b01, pattern_b=0b10)
    # seed 0b00 matches neither pattern: closure is the singleton
    b = enumerate_reachable_sector(0b00, [mv], 2)
    assert b.size == 1


def test_fredkin_n4_matches_prefix_sum_oracle():
    # oracle: all length-4 patterns with balanced charge and non-negative
    # cumulative charge including the fixed left boundary Z_0 = +1
    def dyck_ok(c, n):
        cum = 1
        for i in range(n):
            cum += 1 if ((c >> (n - 1 - i)) & 1) == 0 else -1
            if cum < 0:
                return False
        return True

    expected = sorted(
        c for c in range(16) if bin(c).count("1") == 2 and dyck_ok(c, 4)
    )
    b = enumerate_reachable_sector(0b0101, fredkin_moves(4), 4)
    assert list(b.configs) == expected
    assert b.size == 5


def test_bfs_dfs_closures_agree():
    moves = fredkin_moves(8)
    bfs = enumerate_reachable_sector(0b01010101, moves, 8)
    dfs = dfs_closure(0b01010101, moves)
    assert set(int(c) for c in bfs.configs) == dfs


def test_qdm_2x2_sector_is_the_two_matchings():
    # oracle: enumerate all 2^4 link patterns, keep perfect matchings
    m = build_qdm(2, 2)
    def covers(c):
        # links: h(0,0), h(0,1), v(0,0), v(1,0) in the documented order
        h0, h1, v0, v1 = ((c >> (3 - i)) & 1 for i in range(4))
        deg = {
            (0, 0): h0 + v0,
            (1, 0): h0 + v1,
            (0, 1): h1 + v0,
            (1, 1): h1 + v1,
        }
        return all(d == 1 for d in deg.values())

    expected = sorted(c for c in range(16) if covers(c))
    assert list(m.basis.configs) == expected
    assert m.basis.size == 2


def test_qdm_sector_members_are_perfect_matchings():
    m = build_qdm(4, 3)
    from ffcool.models import qdm_link_index

    n_links, h_index, v_index = qdm_link_index(4, 3)
    for c in m.basis.configs:
        c = int(c)
        for y in range(3):
            for x in range(4):
                deg = 0
                if x < 3 and (c >> (n_links - 1 - h_index(x, y))) & 1:
                    deg += 1
                if x > 0 and (c >> (n_links - 1 - h_index(x - 1, y))) & 1:
                    deg += 1
                if y < 2 and (c >> (n_links - 1 - v_index(x, y))) & 1:
                    deg += 1
                if y > 0 and (c >> (n_links - 1 - v_index(x, y - 1))) & 1:
                    deg += 1
                assert deg == 1


@pytest.mark.parametrize(
    "name,params",
    [
        ("heisenberg_chain", {"n_sites": 6, "n_up": 3}),
        ("heisenberg_single_particle", {"dim": 1, "length": 6}),
        ("fredkin", {"n_sites": 8}),
        ("qdm", {"lx_sites": 3, "ly_sites": 4}),
        ("cluster_ising", {"n_sites": 9}),
    ],
)
def test_sector_closed_under_terms_and_corrections(name, params):
    model = build_model(name, **params)
    basis = model.basis
    n = basis.n_sites
    for term in model.terms:
        M = term.matrix
        mloc = term.local_dim()
        for c in basis.configs:
            c = int(c)
            lc = 0
            for s in term.support:
                lc = (lc << 1) | ((c >> (n - 1 - s)) & 1)
            for lout in range(mloc):
                if abs(M[lout, lc]) < 1e-14:
                    continue
                out = c
                for bitpos, s in enumerate(term.support):
                    want = (lout >> (mloc.bit_length() - 2 - bitpos)) & 1
                    m_ = site_mask(s, n)
                    out = (out | m_) if want else (out & ~m_)
                assert out in basis
        flip = term.correction.flip_mask
        if flip:
            for c in basis.configs:
                assert (int(c) ^ flip) in basis


def test_dump_round_trip():
    b = enumerate_magnetization_sector(5, 2)
    buf = io.StringIO()
    b.dump(buf)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == b.size
    assert [string_to_config(s) for s in lines] == [int(c) for c in b.configs]
    assert lines == sorted(lines)


def test_full_space():
    b = enumerate_full_space(3)
    assert b.size == 8
    assert list(b.configs) == list(range(8))

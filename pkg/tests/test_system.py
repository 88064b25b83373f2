import itertools
import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spinstar.system import (DomainError, SpinStarSystem, dicke_decomposition, load_system,
                             lopsidedness_multiplicity, peak_frequency, system_from_dict, tmp, tms)


def enumerate_lopsidedness(n):
    """Count peripheral configurations by U - D by listing all 2^n of them."""
    counts = {}
    for bits in itertools.product((1, -1), repeat=n):
        counts[sum(bits)] = counts.get(sum(bits), 0) + 1
    return counts


def coupling_oracle(n):
    """Sector multiplicities by coupling spin-1/2 one at a time (Clebsch-Gordan)."""
    sectors = {Fraction(1, 2): 1}
    for _ in range(n - 1):
        nxt = {}
        for j, d in sectors.items():
            for jj in (j + Fraction(1, 2), j - Fraction(1, 2)):
                if jj >= 0:
                    nxt[jj] = nxt.get(jj, 0) + d
        sectors = nxt
    return sorted(sectors.items(), reverse=True)


def test_tms_constants():
    s = tms()
    assert s.n_peripheral == 12
    assert s.gamma_center == -8.465 and s.gamma_peripheral == 42.577
    assert s.j_coupling == 6.63
    assert s.gamma_ratio == pytest.approx(-5.03, abs=5e-3)
    assert s.n_peaks == 13


def test_multiplicity_examples():
    assert lopsidedness_multiplicity(12, 12) == 1
    assert lopsidedness_multiplicity(12, 0) == enumerate_lopsidedness(12)[0] == 924
    with pytest.raises(DomainError):
        lopsidedness_multiplicity(12, 1)
    with pytest.raises(DomainError):
        lopsidedness_multiplicity(12, 14)


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_multiplicity_matches_enumeration(n):
    counts = enumerate_lopsidedness(n)
    for ell in range(-n, n + 1, 2):
        assert lopsidedness_multiplicity(n, ell) == counts[ell]


def test_dicke_examples():
    as_pairs = lambda n: [(Fraction(s.two_j, 2), s.multiplicity) for s in dicke_decomposition(n)]
    assert as_pairs(2) == [(1, 1), (0, 1)]
    assert as_pairs(3) == [(Fraction(3, 2), 1), (Fraction(1, 2), 2)]
    assert as_pairs(12) == [(6, 1), (5, 11), (4, 54), (3, 154), (2, 275), (1, 297), (0, 132)]
    with pytest.raises(DomainError):
        dicke_decomposition(0)


@pytest.mark.parametrize("n", [2, 3, 7, 12])
def test_dicke_matches_coupling_oracle(n):
    got = [(s.j_total, s.multiplicity) for s in dicke_decomposition(n)]
    assert got == coupling_oracle(n)


@given(st.integers(1, 16))
def test_sum_invariants(n):
    assert sum(lopsidedness_multiplicity(n, ell) for ell in range(-n, n + 1, 2)) == 2 ** n
    sectors = dicke_decomposition(n)
    assert all(s.multiplicity >= 0 for s in sectors)
    assert sum(s.dim * s.multiplicity for s in sectors) == 2 ** n
    assert len(SpinStarSystem(n, -8.465).lopsidedness_values()) == n + 1


def test_peak_frequency_examples():
    assert peak_frequency(0, 5.0, 6.63) == 5.0
    assert peak_frequency(12, 0, 6.63) == pytest.approx(39.78, abs=1e-12)
    assert peak_frequency(-12, 0, 6.63) == pytest.approx(-39.78, abs=1e-12)


@given(st.integers(-16, 16), st.floats(0.1, 50))
def test_peak_frequency_odd(ell, j):
    assert peak_frequency(-ell, 0.0, j) == -peak_frequency(ell, 0.0, j)


@pytest.mark.parametrize("bad", [dict(n_peripheral=0), dict(j_coupling=0.0), dict(t2_center=-1.0),
                                 dict(gamma_center=0.0), dict(n_peripheral=2.5)])
def test_system_validation(bad):
    kw = dict(n_peripheral=3, gamma_center=-8.465) | bad
    with pytest.raises(DomainError):
        SpinStarSystem(**kw)


def test_tmp_requires_inputs(tmp_path):
    s = tmp(17.235, 11.0)
    assert s.n_peripheral == 9 and s.j_coupling == 11.0
    with pytest.raises(KeyError):
        system_from_dict({"preset": "tmp", "j_coupling": 11.0})
    path = tmp_path / "sys.json"
    path.write_text(json.dumps({"preset": "tms", "j_coupling": 7.0}))
    assert load_system(path) == tms().with_updates(j_coupling=7.0)
    with pytest.raises(KeyError):
        system_from_dict({"preset": "tms", "colour": "red"})


def test_system_round_trip():
    s = tms()
    assert system_from_dict(s.to_dict()) == s
    assert math.isclose(s.gamma_peripheral / s.gamma_center, s.gamma_ratio)

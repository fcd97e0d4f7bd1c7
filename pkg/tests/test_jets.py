import pytest
from hypothesis import given
from hypothesis import strategies as st

from ckvlab import jets
from ckvlab.errors import ValidationError


@pytest.mark.parametrize("n, k, expected", [(3, 4, 210), (3, 0, 6), (2, 3, 30)])
def test_dim_metric_jets(n, k, expected):
    assert jets.dim_metric_jets(n, k) == expected


@pytest.mark.parametrize("n, k, expected", [(3, 1, 9), (3, 0, 0), (2, 2, 10)])
def test_dim_diffeo_jets(n, k, expected):
    assert jets.dim_diffeo_jets(n, k) == expected


@pytest.mark.parametrize("n, k, expected", [(3, 4, 203), (3, 3, 125), (2, 4, 57)])
def test_dim_domain(n, k, expected):
    assert jets.dim_domain(n, k) == expected


def test_sard_examples():
    assert jets.sard_inequality_holds(3, 4)
    assert not jets.sard_inequality_holds(3, 3)
    assert jets.dim_metric_jets(3, 3) == 120
    assert not any(jets.sard_inequality_holds(2, k) for k in range(65))


@pytest.mark.parametrize("k", range(65))
def test_plane_domain_exceeds_target_by_closed_form(k):
    assert jets.dim_domain(2, k) - jets.dim_metric_jets(2, k) == 2 * (k + 2)


def test_scan_frontier_and_order():
    result = jets.scan(range(3, 7), range(0, 11))
    assert [(r.n, r.k) for r in result.rows] == [(n, k) for n in range(3, 7) for k in range(11)]
    assert result.frontier[3] == 4
    assert result.frontier[4] <= 4 and result.frontier[6] <= 4
    assert 2 not in jets.scan(range(2, 4), range(11)).frontier


def test_sufficiency_and_monotonicity():
    result = jets.scan(range(2, 13), range(0, 31))
    for n in range(3, 13):
        assert jets.sard_inequality_holds(n, 4)
    assert all(result.monotone_after_frontier().values())
    assert not any(r.holds for r in result.rows if r.n == 2)


@given(n=st.integers(2, 40), k=st.integers(0, 40))
def test_consistency_identity_and_pascal(n, k):
    assert jets.dim_domain(n, k) == jets.dim_factor_jets(n, k) + jets.dim_diffeo_jets(n, k + 1) + n
    assert jets.binom_pascal(n + k, k) == jets.dim_factor_jets(n, k)
    r = jets.jet_record(n, k)
    assert r.holds == (r.dim_domain < r.dim_metric_jets)


def test_big_values_are_exact():
    v = jets.dim_metric_jets(60, 60)
    assert v > 2 ** 64
    assert v == 60 * 61 // 2 * jets.binom_pascal(120, 60)


def test_invalid_arguments():
    with pytest.raises(ValidationError):
        jets.dim_metric_jets(3, -1)
    with pytest.raises(ValidationError):
        jets.sard_inequality_holds(1, 4)
    with pytest.raises(ValidationError):
        jets.scan([], [1])


def test_scan_serialization():
    d = jets.scan(range(2, 5), range(0, 6)).to_dict()
    assert d["frontier"] == {"3": 4, "4": 3}
    assert d["frontier_within_scan_bounds"] is True
    row = next(r for r in jets.scan([3], [4]).csv_rows())
    assert row == {"n": 3, "k": 4, "dim_metric_jets": 210, "dim_factor_jets": 35,
                   "dim_diffeo_jets_k_plus_1": 165, "dim_domain": 203, "holds": True}

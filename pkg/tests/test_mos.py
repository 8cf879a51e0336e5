import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from favor.errors import DegenerateSubject, InsufficientRatings, SchemaError
from favor.mos import (
    RatingsMatrix,
    compute_mos,
    load_ratings_csv,
    mos,
    rescale,
    write_mos_csv,
    zscore,
)


def _matrix(rows):
    return RatingsMatrix([(s, v, float(r)) for s, v, r in rows])


def test_zscore_centered_rating():
    matrix = _matrix([("s1", f"v{k}", k) for k in range(1, 6)])  # ratings 1..5
    z = zscore(matrix)
    assert z[("s1", "v3")] == pytest.approx(0.0, abs=1e-15)
    spread = np.std([1, 2, 3, 4, 5], ddof=1)
    assert z[("s1", "v5")] == pytest.approx(2.0 / spread, abs=1e-12)


def test_zscore_degenerate_subject():
    with pytest.raises(DegenerateSubject):
        zscore(_matrix([("s1", "v1", 3), ("s1", "v2", 3), ("s1", "v3", 3)]))
    with pytest.raises(DegenerateSubject):
        zscore(_matrix([("s1", "v1", 3)]))


def test_zscore_matches_definitional_oracle():
    rng = np.random.default_rng(0)
    rows = []
    for s in ("a", "b", "c"):
        for v in range(6):
            rows.append((s, f"v{v}", float(rng.integers(1, 6))))
    matrix = _matrix(rows)
    try:
        z = zscore(matrix)
    except DegenerateSubject:
        pytest.skip("degenerate draw")
    for s in ("a", "b", "c"):
        mine = [r for subj, _, r in rows if subj == s]
        mu = sum(mine) / len(mine)
        sd = math.sqrt(sum((r - mu) ** 2 for r in mine) / (len(mine) - 1))
        for subj, v, r in rows:
            if subj == s:
                assert z[(s, v)] == pytest.approx((r - mu) / sd, abs=1e-12)


def test_rescale_values():
    assert rescale(0.0) == pytest.approx(50.0, abs=1e-12)
    assert rescale(3.0) == pytest.approx(100.0, abs=1e-12)
    assert rescale(-3.0) == pytest.approx(0.0, abs=1e-12)
    # no clamping outside the nominal range
    assert rescale(4.0) == pytest.approx(100.0 * 7.0 / 6.0, abs=1e-10)


def test_mos_all_zero_z():
    z = {(f"s{i}", "v1"): 0.0 for i in range(4)}
    result = mos(z)
    assert result.omega["v1"] == pytest.approx(50.0, abs=1e-12)
    assert result.sigma["v1"] == pytest.approx(0.0, abs=1e-12)
    assert result.counts["v1"] == 4


def test_mos_two_scores_hand_computed():
    # rescaled scores 40 and 60: mean 50, sample std sqrt(200)
    z = {("s1", "v1"): (40.0 * 6.0 / 100.0) - 3.0, ("s2", "v1"): (60.0 * 6.0 / 100.0) - 3.0}
    result = mos(z)
    assert result.omega["v1"] == pytest.approx(50.0, abs=1e-10)
    assert result.sigma["v1"] == pytest.approx(math.sqrt(200.0), abs=1e-10)


def test_mos_single_rating_has_nan_std():
    result = mos({("s1", "v1"): 0.5})
    assert math.isnan(result.sigma["v1"])
    with pytest.raises(InsufficientRatings):
        mos({})


def test_subject_affine_invariance():
    rng = np.random.default_rng(1)
    rows = [("s1", f"v{k}", float(rng.integers(1, 6))) for k in range(8)]
    rows += [("s2", f"v{k}", float(rng.integers(1, 6))) for k in range(8)]
    base = compute_mos(_matrix(rows))
    scaled = [
        (s, v, 1.7 * r + 0.4 if s == "s1" else r) for s, v, r in rows
    ]
    moved = compute_mos(_matrix(scaled))
    for v in base.omega:
        assert moved.omega[v] == pytest.approx(base.omega[v], abs=1e-10)
        if not math.isnan(base.sigma[v]):
            assert moved.sigma[v] == pytest.approx(base.sigma[v], abs=1e-10)


def test_prenormalized_subjects_reproduce_linear_map():
    # Every subject's ratings already zero-mean unit-(sample)-std: Z == S,
    # so the MOS is the per-video mean of 100(S+3)/6 exactly.
    base = np.array([-1.0, 0.0, 1.0])
    scale = base / base.std(ddof=1)
    rows = []
    for s in ("a", "b"):
        for k, val in enumerate(scale):
            rows.append((s, f"v{k}", float(val)))
    result = compute_mos(_matrix(rows))
    for k, val in enumerate(scale):
        assert result.omega[f"v{k}"] == pytest.approx(100.0 * (val + 3.0) / 6.0, abs=1e-10)


def test_permutation_invariance_over_subjects():
    rows = [
        ("s1", "v1", 2.0), ("s1", "v2", 4.0),
        ("s2", "v1", 1.0), ("s2", "v2", 5.0),
        ("s3", "v1", 3.0), ("s3", "v2", 4.0),
    ]
    base = compute_mos(_matrix(rows))
    shuffled = compute_mos(_matrix(rows[::-1]))
    for v in base.omega:
        assert shuffled.omega[v] == pytest.approx(base.omega[v], abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(
    ratings=st.lists(
        st.tuples(st.integers(0, 3), st.integers(0, 5), st.integers(1, 5)),
        min_size=8,
        max_size=40,
    ),
    a=st.floats(0.5, 3.0),
    b=st.floats(-2.0, 2.0),
)
def test_affine_invariance_property(ratings, a, b):
    rows = [(f"s{s}", f"v{v}", float(r)) for s, v, r in ratings]
    try:
        base = compute_mos(_matrix(rows))
    except DegenerateSubject:
        return
    moved_rows = [(s, v, a * r + b if s == "s0" else r) for s, v, r in rows]
    moved = compute_mos(_matrix(moved_rows))
    for v in base.omega:
        assert moved.omega[v] == pytest.approx(base.omega[v], abs=1e-8)


def test_csv_roundtrip(tmp_path):
    src = tmp_path / "ratings.csv"
    src.write_text(
        "subject_id,video_id,score\n"
        "s1,v1,1\ns1,v2,5\ns2,v1,2\ns2,v2,4\nreject,v1,1\nreject,v2,2\n"
    )
    matrix = load_ratings_csv(src, subjects={"s1", "s2"})
    assert {s for s, _, _ in matrix.rows} == {"s1", "s2"}
    result = compute_mos(matrix)
    out = tmp_path / "mos.csv"
    write_mos_csv(result, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "video_id,mos,std,n"
    assert len(lines) == 3
    assert lines[1].startswith("v1,")
    assert all(len(line.split(",")) == 4 for line in lines[1:])


def test_csv_schema_errors(tmp_path):
    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("user,clip,rating\na,b,3\n")
    with pytest.raises(SchemaError):
        load_ratings_csv(bad_header)
    bad_row = tmp_path / "badrow.csv"
    bad_row.write_text("subject_id,video_id,score\ns1,v1,notanumber\n")
    with pytest.raises(SchemaError) as err:
        load_ratings_csv(bad_row)
    assert err.value.row == 2

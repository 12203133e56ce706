import pytest
from hypothesis import given
from hypothesis import strategies as st

from nptp.cost import DeviceProfile
from nptp.partition import (CutStep, EmptyRemaining, PartitionScheme, Rect,
                            TooManyDevices, guillotine_apply,
                            guillotine_scheme, largest_remainder, load_scheme,
                            strip_partition, tile_at_layer, validate_tiling)


def devs(*fs):
    return [DeviceProfile(f"d{i}", f, 1e9, 1e6) for i, f in enumerate(fs)]


def test_validate_whole_and_split():
    assert validate_tiling(PartitionScheme(6, 9, (("a", Rect(0, 0, 9, 6)),))).ok
    split = PartitionScheme(8, 8, (("a", Rect(0, 0, 8, 4)), ("b", Rect(0, 4, 8, 4))))
    assert validate_tiling(split).ok


def test_validate_reports_overlap_and_gap():
    bad = PartitionScheme(8, 8, (("a", Rect(0, 0, 8, 5)), ("b", Rect(0, 4, 8, 4))))
    report = validate_tiling(bad)
    assert not report.ok
    assert report.overlaps == [("a", "b")]
    gap = PartitionScheme(8, 8, (("a", Rect(0, 0, 8, 3)), ("b", Rect(0, 4, 8, 4))))
    report = validate_tiling(gap)
    assert report.uncovered_area == 8
    assert "uncovered" in str(report)
    outside = PartitionScheme(8, 8, (("a", Rect(0, 0, 9, 8)),))
    assert validate_tiling(outside).out_of_bounds == ["a"]


def test_duplicate_device_rejected():
    with pytest.raises(ValueError):
        PartitionScheme(2, 2, (("a", Rect(0, 0, 2, 1)), ("a", Rect(0, 1, 2, 1))))


def test_guillotine_apply_examples():
    tile, rest = guillotine_apply(Rect(0, 0, 8, 8), CutStep("h", 0.5))
    assert (tile, rest) == (Rect(0, 0, 8, 4), Rect(0, 4, 8, 4))
    tile, rest = guillotine_apply(Rect(0, 4, 8, 4), CutStep("v", 0.5))
    assert (tile, rest) == (Rect(0, 4, 4, 4), Rect(4, 4, 4, 4))
    tile, rest = guillotine_apply(Rect(0, 0, 8, 8), CutStep("h", 1.0))
    assert tile == Rect(0, 0, 8, 8) and rest.area == 0
    with pytest.raises(EmptyRemaining):
        guillotine_apply(Rect(0, 0, 0, 8), CutStep("h", 0.5))


def test_cut_offset_rounding():
    assert CutStep("h", 0.5).offset(5) == 3       # 2.5 rounds up
    assert CutStep("h", 0.01).offset(10) == 1     # clamp low
    assert CutStep("h", 1 / 3).offset(9) == 3
    with pytest.raises(ValueError):
        CutStep("h", 0.0)
    with pytest.raises(ValueError):
        CutStep("x", 0.5)


@pytest.mark.parametrize("fs, heights", [
    ((1, 1, 1), [3, 3, 2]),
    ((2, 1, 1), [4, 2, 2]),
    ((5,), [8]),
])
def test_strip_partition(fs, heights):
    s = strip_partition(8, 5, devs(*fs))
    assert [r.h for _, r in s.assignments] == heights
    assert [r.y for _, r in s.assignments] == [0] + [sum(heights[:i + 1]) for i in range(len(fs) - 1)]
    assert all(r.w == 5 for _, r in s.assignments)
    assert validate_tiling(s).ok


def test_strip_partition_errors_and_minimum():
    with pytest.raises(TooManyDevices):
        strip_partition(2, 4, devs(1, 1, 1))
    s = strip_partition(3, 4, devs(100, 1, 1))
    assert [r.h for _, r in s.assignments] == [1, 1, 1]


@given(st.integers(1, 500), st.lists(st.floats(0.01, 100), min_size=1, max_size=6))
def test_largest_remainder_sums(total, weights):
    if total < len(weights):
        return
    parts = largest_remainder(total, weights)
    assert sum(parts) == total
    assert min(parts) >= 1


def test_tile_at_layer_examples():
    assert tile_at_layer(Rect(0, 0, 8, 4), 2, 8, 8) == Rect(0, 0, 4, 2)
    # cut at row 5 lands on row 2
    assert tile_at_layer(Rect(0, 0, 8, 5), 2, 8, 8).h == 2
    assert tile_at_layer(Rect(0, 4, 8, 4), 4, 8, 8) == Rect(0, 1, 2, 1)
    # far edge pinned to the map edge even when the map is larger than H//ds
    assert tile_at_layer(Rect(0, 4, 7, 3), 2, 7, 7, 4, 4) == Rect(0, 2, 4, 2)


@st.composite
def guillotine_cases(draw):
    h = draw(st.integers(1, 40))
    w = draw(st.integers(1, 40))
    n = draw(st.integers(1, 5))
    cuts = [CutStep(draw(st.sampled_from("hv")),
                    draw(st.floats(0.01, 0.99))) for _ in range(n - 1)]
    return h, w, n, cuts


@given(guillotine_cases(), st.integers(1, 16))
def test_guillotine_schemes_tile_at_every_depth(case, ds):
    h, w, n, cuts = case
    try:
        scheme = guillotine_scheme(h, w, [f"d{i}" for i in range(n)], cuts)
    except EmptyRemaining:
        return
    assert validate_tiling(scheme).ok
    mh, mw = h // ds, w // ds
    mapped = PartitionScheme(mh, mw, tuple(
        (d, tile_at_layer(r, ds, h, w, mh, mw)) for d, r in scheme.assignments))
    assert validate_tiling(mapped).ok


def test_guillotine_deterministic():
    cuts = [CutStep("h", 0.37), CutStep("v", 0.61)]
    assert guillotine_scheme(50, 70, "abc", cuts) == guillotine_scheme(50, 70, "abc", cuts)


def test_scheme_json_roundtrip(tmp_path):
    s = guillotine_scheme(9, 9, "abc", [CutStep("h", 1 / 3), CutStep("v", 0.5)])
    path = tmp_path / "s.json"
    path.write_text(s.dumps())
    assert load_scheme(path) == s
    d = s.to_dict()
    assert d["image"] == [9, 9]
    assert d["tiles"][0] == {"device": "a", "rect": [0, 0, 9, 3]}
    assert d["cuts"][1]["dim"] == "v"

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutremain.errors import EmptyMaskError, EmptyRegionError, InvalidParameterError
from cutremain.geometry import (
    AspectRatioSet,
    BinaryMask,
    BoundingBox,
    clip_to_image,
    expand_box,
    rasterize_mask,
    variant_boxes,
)

from oracles import brute_force_mask

finite_coord = st.floats(min_value=-100, max_value=200, allow_nan=False, allow_infinity=False)
positive_size = st.floats(min_value=0.1, max_value=150, allow_nan=False, allow_infinity=False)


def boxes_strategy():
    return st.builds(BoundingBox, cx=finite_coord, cy=finite_coord, w=positive_size, h=positive_size)


class TestBoundingBox:
    def test_rejects_non_positive_dims(self):
        with pytest.raises(InvalidParameterError):
            BoundingBox(1, 1, 0, 5)
        with pytest.raises(InvalidParameterError):
            BoundingBox(1, 1, 5, -2)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidParameterError):
            BoundingBox(float("nan"), 1, 1, 1)
        with pytest.raises(InvalidParameterError):
            BoundingBox(1, float("inf"), 1, 1)


class TestExpandBox:
    @pytest.mark.parametrize(
        "factors,expected",
        [
            ((1.0, 1.0), (50, 50, 20, 10)),
            ((2.0, 2.0), (50, 50, 40, 20)),
            ((1.5, 2.0), (50, 50, 30, 20)),
        ],
    )
    def test_worked_examples(self, factors, expected):
        box = BoundingBox(50, 50, 20, 10)
        assert expand_box(box, *factors).as_tuple() == expected

    def test_non_positive_factor_rejected(self):
        with pytest.raises(InvalidParameterError):
            expand_box(BoundingBox(1, 1, 1, 1), 0.0, 1.0)
        with pytest.raises(InvalidParameterError):
            expand_box(BoundingBox(1, 1, 1, 1), 1.0, -1.0)

    @given(boxes_strategy())
    def test_identity_factors(self, box):
        assert expand_box(box, 1.0, 1.0) == box

    @given(boxes_strategy(), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_center_preserved_and_area_scales(self, box, rw, rh):
        out = expand_box(box, rw, rh)
        assert (out.cx, out.cy) == (box.cx, box.cy)
        assert out.area == pytest.approx(box.area * rw * rh, rel=1e-12)


class TestVariantBoxes:
    def test_default_set_yields_nine(self):
        assert len(variant_boxes(BoundingBox(10, 10, 4, 4))) == 9

    def test_singleton_identity(self):
        box = BoundingBox(10, 10, 4, 4)
        assert variant_boxes(box, (1.0,)) == [box]

    def test_two_factor_product(self):
        out = variant_boxes(BoundingBox(10, 10, 4, 4), (1.0, 2.0))
        assert [(b.w, b.h) for b in out] == [(4, 4), (4, 8), (8, 4), (8, 8)]

    @given(boxes_strategy(), st.lists(st.sampled_from([0.5, 1.0, 1.5, 2.0, 3.0]), min_size=1, max_size=4, unique=True))
    def test_count_is_square_of_set_size(self, box, ratios):
        out = variant_boxes(box, tuple(ratios))
        assert len(out) == len(ratios) ** 2
        if 1.0 in ratios:
            assert box in out

    def test_duplicate_ratios_rejected(self):
        with pytest.raises(InvalidParameterError):
            AspectRatioSet((1.0, 1.0))

    def test_empty_ratios_rejected(self):
        with pytest.raises(InvalidParameterError):
            AspectRatioSet(())


class TestClipToImage:
    def test_interior_box(self):
        region = clip_to_image(BoundingBox(2, 2, 2, 2), 4, 4)
        assert (region.x0, region.y0, region.x1, region.y1) == (1, 1, 3, 3)
        assert set(region.pixels()) == {(1, 1), (1, 2), (2, 1), (2, 2)}

    def test_partially_outside(self):
        region = clip_to_image(BoundingBox(5, 5, 20, 10), 100, 100)
        assert (region.x0, region.x1) == (0, 15)
        assert (region.y0, region.y1) == (0, 10)

    def test_fully_outside_is_an_error(self):
        with pytest.raises(EmptyRegionError):
            clip_to_image(BoundingBox(200, 200, 10, 10), 100, 100)

    def test_matches_brute_force_membership(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            w = int(rng.integers(1, 33))
            h = int(rng.integers(1, 33))
            box = BoundingBox(rng.uniform(-5, w + 5), rng.uniform(-5, h + 5), rng.uniform(0.2, w + 4), rng.uniform(0.2, h + 4))
            expected = brute_force_mask([box], w, h)
            if expected.sum() == 0:
                with pytest.raises(EmptyRegionError):
                    clip_to_image(box, w, h)
                continue
            region = clip_to_image(box, w, h)
            actual = np.zeros((h, w), dtype=np.uint8)
            actual[region.y0 : region.y1, region.x0 : region.x1] = 1
            assert np.array_equal(actual, expected)


class TestRasterizeMask:
    def test_full_coverage_is_all_ones(self):
        mask = rasterize_mask([BoundingBox(8, 8, 16, 16)], 16, 16)
        assert mask.is_all_ones

    def test_disjoint_boxes_sum_their_areas(self):
        boxes = [BoundingBox(2, 2, 2, 2), BoundingBox(10, 10, 4, 4)]
        mask = rasterize_mask(boxes, 16, 16)
        assert mask.popcount == 4 + 16

    def test_interior_box_popcount(self):
        assert rasterize_mask([BoundingBox(2, 2, 2, 2)], 4, 4).popcount == 4

    def test_all_outside_raises(self):
        with pytest.raises(EmptyMaskError):
            rasterize_mask([BoundingBox(50, 50, 2, 2)], 8, 8)

    def test_no_boxes_raises(self):
        with pytest.raises(EmptyMaskError):
            rasterize_mask([], 8, 8)

    def test_partial_outside_boxes_are_skipped(self):
        boxes = [BoundingBox(50, 50, 2, 2), BoundingBox(2, 2, 2, 2)]
        assert rasterize_mask(boxes, 8, 8).popcount == 4

    def test_matches_brute_force_on_random_boxes(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            w = int(rng.integers(1, 65))
            h = int(rng.integers(1, 65))
            boxes = [
                BoundingBox(rng.uniform(0, w), rng.uniform(0, h), rng.uniform(0.3, w), rng.uniform(0.3, h))
                for _ in range(int(rng.integers(1, 4)))
            ]
            expected = brute_force_mask(boxes, w, h)
            if expected.sum() == 0:
                with pytest.raises(EmptyMaskError):
                    rasterize_mask(boxes, w, h)
                continue
            assert np.array_equal(rasterize_mask(boxes, w, h).values, expected)

    @given(
        st.integers(1, 32), st.integers(1, 32),
        st.floats(0, 32), st.floats(0, 32),
        st.floats(0.5, 16), st.floats(0.5, 16),
        st.sampled_from([(1.0, 1.5), (1.0, 2.0), (1.5, 2.0)]),
    )
    @settings(max_examples=60, deadline=None)
    def test_larger_uniform_ratio_is_superset(self, w, h, cx, cy, bw, bh, pair):
        small, large = pair
        box = BoundingBox(cx, cy, bw, bh)
        try:
            lo = rasterize_mask([expand_box(box, small, small)], w, h).values
        except EmptyMaskError:
            lo = np.zeros((h, w), dtype=np.uint8)
        try:
            hi = rasterize_mask([expand_box(box, large, large)], w, h).values
        except EmptyMaskError:
            hi = np.zeros((h, w), dtype=np.uint8)
        assert ((lo == 1) <= (hi == 1)).all()


class TestBinaryMask:
    def test_all_ones_constructor(self):
        mask = BinaryMask.all_ones(3, 2)
        assert mask.width == 3 and mask.height == 2
        assert mask.popcount == 6

    def test_values_are_read_only(self):
        mask = BinaryMask.all_ones(2, 2)
        with pytest.raises(ValueError):
            mask.values[0, 0] = 0

    def test_rejects_non_binary(self):
        with pytest.raises(InvalidParameterError):
            BinaryMask(np.full((2, 2), 3, dtype=np.uint8))

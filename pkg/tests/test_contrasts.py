import numpy as np
import pytest

from mcvtests.contrasts import (
    DesignSpec,
    build_contrast,
    centering,
    one_way_contrast,
    two_way_contrast,
    validate_contrast,
)
from mcvtests.errors import BadDesign, DimensionMismatch, NotAContrast


class TestOneWay:
    def test_k2(self):
        spec = one_way_contrast(2)
        assert np.allclose(spec.projection, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-12)
        assert spec.rank == 1

    def test_k3(self):
        spec = one_way_contrast(3)
        t = spec.projection
        assert np.abs(t.sum(axis=1)).max() < 1e-12
        assert np.allclose(np.diag(t), 2.0 / 3.0, atol=1e-12)
        off = t[~np.eye(3, dtype=bool)]
        assert np.allclose(off, -1.0 / 3.0, atol=1e-12)
        assert spec.rank == 2

    def test_equal_estimates_give_null_vector(self):
        spec = one_way_contrast(2)
        assert np.abs(spec.projection @ np.array([0.7, 0.7])).max() < 1e-14

    def test_rejects_single_group(self):
        with pytest.raises(BadDesign):
            one_way_contrast(1)


class TestTwoWay:
    def test_2x2_main_a(self):
        spec = two_way_contrast(2, 2, "main-A")
        expected = np.array([[0.25, 0.25, -0.25, -0.25], [-0.25, -0.25, 0.25, 0.25]])
        assert np.allclose(spec.hypothesis, expected, atol=1e-12)
        assert spec.rank == 1

    def test_2x4_interaction_rank(self):
        assert two_way_contrast(2, 4, "interaction").rank == 3

    def test_main_ranks(self):
        assert two_way_contrast(3, 4, "main-A").rank == 2
        assert two_way_contrast(3, 4, "main-B").rank == 3

    def test_main_a_detects_row_mean_difference_only(self):
        # first-factor effect only: row means differ, column means equal
        values = np.array([0.237] * 4 + [0.300] * 4)
        h_a = two_way_contrast(2, 4, "main-A").hypothesis
        h_b = two_way_contrast(2, 4, "main-B").hypothesis
        h_ab = two_way_contrast(2, 4, "interaction").hypothesis
        assert np.abs(h_a @ values).max() > 1e-3
        assert np.abs(h_b @ values).max() < 1e-12
        assert np.abs(h_ab @ values).max() < 1e-12

    def test_orthogonal_decomposition(self):
        for a in range(2, 5):
            for b in range(2, 5):
                t_a = two_way_contrast(a, b, "main-A").projection
                t_b = two_way_contrast(a, b, "main-B").projection
                t_ab = two_way_contrast(a, b, "interaction").projection
                k = a * b
                total = t_a + t_b + t_ab + np.full((k, k), 1.0 / k)
                assert np.abs(total - np.eye(k)).max() < 1e-10
                assert np.abs(t_a @ t_b).max() < 1e-10
                assert np.abs(t_a @ t_ab).max() < 1e-10
                assert np.abs(t_b @ t_ab).max() < 1e-10

    def test_rejects_degenerate_layout(self):
        with pytest.raises(BadDesign):
            two_way_contrast(1, 4, "main-A")


class TestValidateContrast:
    def test_accepts_centering(self):
        spec = validate_contrast(centering(3), 3)
        assert spec.rank == 2

    def test_accepts_pairwise_contrast(self):
        spec = validate_contrast(np.array([[1.0, -1.0, 0.0]]), 3)
        assert spec.rank == 1

    def test_rejects_nonzero_row_sum(self):
        with pytest.raises(NotAContrast):
            validate_contrast(np.array([[1.0, 0.0, 0.0]]), 3)

    def test_rejects_wrong_width(self):
        with pytest.raises(DimensionMismatch):
            validate_contrast(np.array([[1.0, -1.0]]), 3)


class TestDesignSpec:
    def test_one_way_pairs_with_group_only(self):
        with pytest.raises(BadDesign):
            DesignSpec(layout="one-way", effect="main-A", k=3)

    def test_two_way_rejects_group_effect(self):
        with pytest.raises(BadDesign):
            DesignSpec(layout="two-way", effect="group", a=2, b=2)

    def test_build(self):
        spec = build_contrast(DesignSpec(layout="two-way", effect="interaction", a=2, b=4))
        assert spec.rank == 3
        assert build_contrast(DesignSpec(layout="one-way", effect="group", k=4)).rank == 3

    def test_cells(self):
        assert DesignSpec(layout="two-way", effect="main-B", a=2, b=4).cells == 8

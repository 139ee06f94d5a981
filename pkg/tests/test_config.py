import numpy as np
import pytest

from capddp.config import Dataset, ModelConfig, Variant, validate_config


class TestValidateConfig:
    def test_paper_style_configuration_passes(self):
        cfg = ModelConfig(m=3, c=1.0, s=0.001, eps=0.001, dirichlet_hyper=np.ones((3, 3)))
        assert validate_config(cfg) is cfg

    def test_zero_concentration_rejected(self):
        with pytest.raises(ValueError, match="c must be positive"):
            validate_config(ModelConfig(m=2, c=0.0))

    def test_single_group_rejected(self):
        with pytest.raises(ValueError, match="m must be >= 2"):
            validate_config(ModelConfig(m=1))

    def test_nonpositive_hyper_entry_named(self):
        a = np.ones((2, 2))
        a[1, 0] = 0.0
        with pytest.raises(ValueError, match=r"dirichlet_hyper\[1, 0\]"):
            validate_config(ModelConfig(m=2, dirichlet_hyper=a))

    def test_wrong_hyper_shape_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            validate_config(ModelConfig(m=3, dirichlet_hyper=np.ones((2, 2))))

    def test_negative_s_and_eps_rejected(self):
        with pytest.raises(ValueError, match="s must be positive"):
            validate_config(ModelConfig(m=2, s=-1.0))
        with pytest.raises(ValueError, match="eps must be positive"):
            validate_config(ModelConfig(m=2, eps=0.0))

    def test_variant_coerced_from_string(self):
        cfg = ModelConfig(m=2, variant="pddp")
        assert cfg.variant is Variant.PDDP


class TestDataset:
    def test_sizes_and_concatenation(self):
        data = Dataset(groups=[[1.0, 2.0], [3.0], [4.0, 5.0, 6.0]])
        assert data.m == 3
        assert data.sizes == (2, 1, 3)
        x, labels = data.concatenated()
        np.testing.assert_array_equal(x, [1, 2, 3, 4, 5, 6])
        np.testing.assert_array_equal(labels, [0, 0, 1, 2, 2, 2])

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError, match="group 1 is empty"):
            Dataset(groups=[[1.0], [], [2.0]])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(groups=[[1.0], [np.inf]])

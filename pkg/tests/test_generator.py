import numpy as np
import pytest
import torch

from voice2face.config import GeneratorConfig
from voice2face.errors import InvalidInputError
from voice2face.nets.generator import Generator, adain

from helpers import tiny_generator_config


class TestAdain:
    def test_identity_affine_normalizes(self, rng):
        x = torch.from_numpy(rng.standard_normal((2, 5, 16, 16)).astype(np.float32) * 3 + 1)
        out = adain(x, torch.ones(2, 5), torch.zeros(2, 5))
        mean = out.mean(dim=(2, 3))
        std = out.std(dim=(2, 3), unbiased=False)
        assert float(mean.abs().max()) < 1e-5
        assert float((std - 1).abs().max()) < 1e-3

    def test_affine_sets_mean_and_std(self, rng):
        x = torch.from_numpy(rng.standard_normal((3, 4, 12, 12)).astype(np.float32))
        scale = torch.from_numpy(rng.uniform(-2, 2, size=(3, 4)).astype(np.float32))
        bias = torch.from_numpy(rng.uniform(-1, 1, size=(3, 4)).astype(np.float32))
        out = adain(x, scale, bias)
        mean = out.mean(dim=(2, 3))
        std = out.std(dim=(2, 3), unbiased=False)
        assert float((mean - bias).abs().max()) < 1e-4
        assert float((std - scale.abs()).abs().max()) < 1e-2

    def test_constant_channel_maps_to_bias(self):
        x = torch.full((1, 2, 8, 8), 7.0)
        out = adain(x, torch.tensor([[3.0, 0.5]]), torch.tensor([[1.0, -2.0]]))
        np.testing.assert_allclose(out[0, 0].numpy(), 1.0, atol=1e-6)
        np.testing.assert_allclose(out[0, 1].numpy(), -2.0, atol=1e-6)

    def test_shape_validation(self):
        with pytest.raises(InvalidInputError):
            adain(torch.zeros(1, 2, 4, 4), torch.zeros(1, 3), torch.zeros(1, 2))
        with pytest.raises(InvalidInputError):
            adain(torch.zeros(2, 4), torch.zeros(2, 4), torch.zeros(2, 4))


class TestGenerator:
    @pytest.fixture(scope="class")
    def gen(self) -> Generator:
        torch.manual_seed(11)
        g = Generator(tiny_generator_config())
        g.eval()
        return g

    def test_deterministic_given_latents(self, gen, rng):
        z = rng.standard_normal((2, 128)).astype(np.float32)
        c = rng.standard_normal((2, 128)).astype(np.float32)
        a = gen.generate_numpy(z, c)
        b = gen.generate_numpy(z, c)
        np.testing.assert_array_equal(a, b)

    def test_output_bounded(self, gen, rng):
        z = rng.standard_normal((64, 128)).astype(np.float32) * 3
        c = rng.standard_normal((64, 128)).astype(np.float32) * 3
        out = gen.generate_numpy(z, c)
        assert out.min() >= -1.0 and out.max() <= 1.0

    def test_tiny_output_shape(self, gen, rng):
        out = gen.generate_numpy(rng.standard_normal(128), rng.standard_normal(128))
        assert out.shape == (1, 3, 8, 8)

    def test_paper_preset_output_shape(self):
        torch.manual_seed(12)
        gen = Generator(GeneratorConfig())
        z = torch.zeros(1, 128)
        with torch.no_grad():
            out = gen(z, torch.zeros(1, 128))
        assert out.shape == (1, 3, 128, 128)

    def test_condition_changes_output(self, gen, rng):
        z = rng.standard_normal((1, 128)).astype(np.float32)
        c1 = rng.standard_normal((1, 128)).astype(np.float32)
        c2 = rng.standard_normal((1, 128)).astype(np.float32)
        assert not np.array_equal(gen.generate_numpy(z, c1), gen.generate_numpy(z, c2))

    def test_dimension_validation(self, gen):
        with pytest.raises(InvalidInputError):
            gen(torch.zeros(1, 64), torch.zeros(1, 128))
        with pytest.raises(InvalidInputError):
            gen(torch.zeros(1, 128), torch.zeros(2, 128))

    def test_config_resolution_validation(self):
        with pytest.raises(InvalidInputError):
            Generator(GeneratorConfig(resolution=64, channels=(8,), seed_channels=8))

import math

import numpy as np
import pytest
import torch

from voice2face.gan.scores import (
    Discriminator,
    d_loss_from_scores,
    discriminator_score,
    g_loss_from_scores,
    r1_penalty,
    relativistic_identity_scores,
    relativistic_scores,
)

from helpers import random_images, tiny_face_config


@pytest.fixture(scope="module")
def disc() -> Discriminator:
    torch.manual_seed(7)
    d = Discriminator(tiny_face_config())
    d.eval()
    return d


@pytest.fixture(scope="module")
def images() -> torch.Tensor:
    rng = np.random.default_rng(3)
    return torch.from_numpy(random_images(rng, 4, 8))


@pytest.fixture(scope="module")
def conds() -> tuple[torch.Tensor, torch.Tensor]:
    rng = np.random.default_rng(4)
    return (
        torch.from_numpy(rng.standard_normal((4, 128)).astype(np.float32)),
        torch.from_numpy(rng.standard_normal((4, 128)).astype(np.float32)),
    )


class TestScoreAlgebra:
    def test_zero_condition_leaves_psi_only(self, disc, images):
        with torch.no_grad():
            phi = disc.features(images)
            expected = disc.psi(phi).squeeze(1)
            got = discriminator_score(disc, images, torch.zeros(4, 128))
        torch.testing.assert_close(got, expected)

    def test_projection_term_linear_in_condition(self, disc, images, conds):
        c1, c2 = conds
        with torch.no_grad():
            s_sum = discriminator_score(disc, images, c1 + c2)
            s1 = discriminator_score(disc, images, c1)
            s2 = discriminator_score(disc, images, c2)
            psi_only = discriminator_score(disc, images, torch.zeros(4, 128))
        torch.testing.assert_close(s_sum - s1 - s2, -psi_only, rtol=1e-4, atol=1e-4)

    def test_score_decomposition_recovers_projection(self, disc, images, conds):
        c, _ = conds
        with torch.no_grad():
            full = discriminator_score(disc, images, c)
            uncond = discriminator_score(disc, images, torch.zeros(4, 128))
            proj = (c * disc.features(images)).sum(dim=1)
        assert float((full - uncond - proj).abs().max()) < 1e-5

    def test_relativistic_antisymmetry_exact(self, disc, conds):
        rng = np.random.default_rng(5)
        f_a = torch.from_numpy(random_images(rng, 4, 8))
        f_b = torch.from_numpy(random_images(rng, 4, 8))
        c, _ = conds
        with torch.no_grad():
            ab = relativistic_scores(disc, f_a, f_b, c)
            ba = relativistic_scores(disc, f_b, f_a, c)
        assert torch.equal(ab, -ba)

    def test_identity_scores_reduce_bitwise_when_conditions_match(self, disc, images, conds):
        rng = np.random.default_rng(6)
        f_fake = torch.from_numpy(random_images(rng, 4, 8))
        c, _ = conds
        with torch.no_grad():
            d_score, g_score = relativistic_identity_scores(disc, images, f_fake, c, c)
            plain_d = relativistic_scores(disc, images, f_fake, c)
            plain_g = relativistic_scores(disc, f_fake, images, c)
        assert torch.equal(d_score, plain_d)
        assert torch.equal(g_score, plain_g)

    def test_identical_faces_leave_identity_terms(self, disc, images, conds):
        c_pos, c_neg = conds
        with torch.no_grad():
            d_score, g_score = relativistic_identity_scores(disc, images, images, c_pos, c_neg)
            phi = disc.features(images)
            expected = (c_pos * phi).sum(1) - (c_neg * phi).sum(1)
        torch.testing.assert_close(d_score, expected)
        torch.testing.assert_close(g_score, expected)


class TestHandBuiltOracle:
    """Duck-typed 2-dim discriminator with explicit matrices, evaluated
    by hand arithmetic."""

    class Flat2Disc:
        def __init__(self):
            self.W = torch.tensor([[2.0, -1.0], [0.5, 3.0]], dtype=torch.float64)
            self.w_psi = torch.tensor([1.5, -2.0], dtype=torch.float64)
            self.b_psi = 0.25

        def features(self, f):
            return f @ self.W.T

        def score_from_features(self, phi, c):
            return (c * phi).sum(dim=1) + phi @ self.w_psi + self.b_psi

        def __call__(self, f, c):
            return self.score_from_features(self.features(f), c)

    def test_score_matches_hand_computation(self):
        d = self.Flat2Disc()
        f = torch.tensor([[1.0, 2.0]], dtype=torch.float64)
        c = torch.tensor([[0.5, -1.0]], dtype=torch.float64)
        # phi = W f = (2*1 - 1*2, 0.5*1 + 3*2) = (0, 6.5)
        # c.phi = 0.5*0 + (-1)*6.5 = -6.5 ; psi = 1.5*0 - 2*6.5 + 0.25 = -12.75
        assert float(d(f, c)) == pytest.approx(-19.25, abs=1e-12)

    def test_relid_scores_match_symbolic_expansion(self):
        d = self.Flat2Disc()
        f_real = torch.tensor([[1.0, 2.0]], dtype=torch.float64)
        f_fake = torch.tensor([[-1.0, 0.5]], dtype=torch.float64)
        c_pos = torch.tensor([[0.5, -1.0]], dtype=torch.float64)
        c_neg = torch.tensor([[2.0, 0.0]], dtype=torch.float64)

        def g(f, c):
            phi = (d.W @ f.T).T
            return float((c * phi).sum() + phi @ d.w_psi + d.b_psi)

        def phi(f):
            return (d.W @ f.T).T

        expected_d = (
            g(f_real, c_pos) - g(f_fake, c_pos)
            + float((c_pos * phi(f_real)).sum()) - float((c_neg * phi(f_real)).sum())
        )
        expected_g = (
            g(f_fake, c_pos) - g(f_real, c_pos)
            + float((c_pos * phi(f_fake)).sum()) - float((c_neg * phi(f_fake)).sum())
        )
        d_score, g_score = relativistic_identity_scores(d, f_real, f_fake, c_pos, c_neg)
        assert float(d_score) == pytest.approx(expected_d, abs=1e-10)
        assert float(g_score) == pytest.approx(expected_g, abs=1e-10)


class TestLosses:
    def test_zero_score_gives_ln_two(self):
        loss = d_loss_from_scores(torch.zeros(5, dtype=torch.float64))
        assert abs(float(loss) - math.log(2.0)) < 1e-9
        loss_g = g_loss_from_scores(torch.zeros(3, dtype=torch.float64))
        assert abs(float(loss_g) - math.log(2.0)) < 1e-9

    def test_asymptotics_stable(self):
        big = torch.tensor([1e4], dtype=torch.float64)
        assert float(d_loss_from_scores(big)) == pytest.approx(0.0, abs=1e-12)
        low = float(d_loss_from_scores(-big))
        assert np.isfinite(low) and low == pytest.approx(1e4, rel=1e-6)

    def test_loss_decreasing_in_score(self):
        scores = torch.linspace(-5, 5, 50, dtype=torch.float64)
        losses = [float(d_loss_from_scores(s[None])) for s in scores]
        assert all(a > b for a, b in zip(losses, losses[1:]))


class TestR1Penalty:
    def test_constant_function_zero_penalty(self, images):
        penalty = r1_penalty(lambda x: torch.full((x.shape[0],), 3.0), images, gamma=10.0)
        assert float(penalty) == 0.0

    def test_linear_function_analytic_value(self):
        rng = np.random.default_rng(8)
        w = torch.from_numpy(rng.standard_normal(3 * 8 * 8).astype(np.float64))
        x = torch.from_numpy(rng.standard_normal((5, 3, 8, 8)))

        def score(imgs):
            return imgs.reshape(imgs.shape[0], -1) @ w

        gamma = 10.0
        penalty = float(r1_penalty(score, x, gamma))
        expected = 0.5 * gamma * float(w.pow(2).sum())
        assert penalty == pytest.approx(expected, rel=1e-10)

    def test_linear_in_gamma(self, disc, images, conds):
        c, _ = conds
        p1 = float(r1_penalty(lambda x: disc(x, c), images, gamma=5.0))
        p2 = float(r1_penalty(lambda x: disc(x, c), images, gamma=10.0))
        assert p2 == pytest.approx(2.0 * p1, rel=1e-6)

    def test_penalty_differentiable_wrt_parameters(self, conds):
        torch.manual_seed(9)
        d = Discriminator(tiny_face_config())
        rng = np.random.default_rng(10)
        imgs = torch.from_numpy(random_images(rng, 3, 8))
        c, _ = conds
        penalty = r1_penalty(lambda x: d(x, c[:3]), imgs, gamma=10.0)
        penalty.backward()
        grads = [p.grad for p in d.parameters() if p.grad is not None]
        assert grads and all(torch.isfinite(g).all() for g in grads)

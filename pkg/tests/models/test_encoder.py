# Third-party imports
import numpy as np
import pytest
import torch

# Local application imports
from src.models.encoder import Encoder, EncoderSpec, SpatialSoftmax, images_to_tensor
from src.models.film import FiLMBlockSpec, FilmConditioning
from src.models.losses import bc_nll_loss
from src.models.policy import FilmPolicy, GaussianHead, LangPredictorSpec, PolicyHeadSpec, make_lang_predictor


def test_encoder_output_dimension(tiny_encoder_spec):
    encoder = Encoder(tiny_encoder_spec)
    images = np.zeros((2, 32, 32, 3), dtype=np.uint8)

    features = encoder.encode(images)

    assert features.shape == (2, tiny_encoder_spec.d_cnn)
    assert tiny_encoder_spec.d_cnn == 8
    # Soft-argmax coordinates lie in [-1, 1]
    assert np.all(np.abs(features) <= 1.0 + 1e-6)


def test_encoder_rejects_wrong_image_shape(tiny_encoder_spec):
    encoder = Encoder(tiny_encoder_spec)
    with pytest.raises(ValueError):
        encoder.encode(np.zeros((1, 16, 16, 3), dtype=np.uint8))


def test_spec_validation():
    with pytest.raises(ValueError):
        EncoderSpec(input_shape=(32, 32, 1))
    with pytest.raises(ValueError):
        EncoderSpec(kernel_sizes=(7, 3))


def test_spec_json_round_trip(tiny_encoder_spec):
    assert EncoderSpec.from_json(tiny_encoder_spec.to_json()) == tiny_encoder_spec


def test_spatial_softmax_peaks_at_the_hot_pixel():
    layer = SpatialSoftmax(5, 5, temperature=0.01)
    features = torch.zeros(1, 1, 5, 5)
    features[0, 0, 0, 4] = 10.0

    x, y = layer(features)[0].tolist()

    assert x == pytest.approx(1.0, abs=1e-3)
    assert y == pytest.approx(-1.0, abs=1e-3)


def test_film_block_is_identity_at_init():
    block = FilmConditioning(num_channels=4, cond_dim=6)
    maps = torch.randn(2, 4, 3, 3)
    assert torch.equal(block(maps, torch.randn(2, 6)), maps)


def test_attached_film_leaves_features_unchanged(tiny_encoder_spec):
    """A freshly attached FiLM stack does not change the encoder's features"""
    torch.manual_seed(0)
    encoder = Encoder(tiny_encoder_spec).eval()
    images = images_to_tensor(np.random.default_rng(0).integers(0, 255, (2, 32, 32, 3), dtype=np.uint8))
    before = encoder(images)

    encoder.attach_film(FiLMBlockSpec(cond_dim=16))
    after = encoder(images, torch.randn(2, 16))

    torch.testing.assert_close(after, before)


def test_film_spec_validation():
    with pytest.raises(ValueError):
        FiLMBlockSpec(hidden_layers=1)
    with pytest.raises(ValueError):
        FiLMBlockSpec(cond_dim=0)


def test_policy_needs_film(tiny_encoder_spec):
    with pytest.raises(ValueError):
        FilmPolicy(Encoder(tiny_encoder_spec), proprio_dim=4)


def test_policy_act_returns_action(tiny_encoder_spec):
    encoder = Encoder(tiny_encoder_spec)
    encoder.attach_film(FiLMBlockSpec(cond_dim=16))
    policy = FilmPolicy(encoder, proprio_dim=4, head_spec=PolicyHeadSpec(hidden=(8,)))

    action = policy.act(np.zeros((32, 32, 3), dtype=np.uint8), np.zeros(4), np.ones(16))
    mu, sigma = policy(images_to_tensor(np.zeros((3, 32, 32, 3), dtype=np.uint8)), torch.zeros(3, 4), torch.ones(3, 16))

    assert action.shape == (4,)
    assert mu.shape == sigma.shape == (3, 4)
    assert torch.all(sigma >= np.exp(-5.0) - 1e-6)


def test_gaussian_head_shares_one_sigma_across_dimensions():
    """The action distribution is isotropic: one scale for all four dimensions"""
    torch.manual_seed(0)
    head = GaussianHead(12, PolicyHeadSpec(hidden=(8,)))
    mu, sigma = head(torch.randn(6, 12))

    assert sigma.shape == (6, 4)
    torch.testing.assert_close(sigma, sigma[:, :1].expand(6, 4))
    assert head.log_std.out_features == 1
    # sigma broadcasts through the loss and trains the single log-scale
    bc_nll_loss(mu, sigma, torch.zeros(6, 4)).backward()
    assert head.log_std.weight.grad is not None


def test_lang_predictor_shape():
    predictor = make_lang_predictor(LangPredictorSpec(d_cnn=8, d_lang=32))
    assert predictor(torch.zeros(5, 8)).shape == (5, 32)

import numpy as np
import pytest
import torch

from vsrgan.feature_extractor import (
    ConvFeatureExtractor,
    IdentityExtractor,
    load_extractor,
    make_extractor,
    tiny_extractor,
)

from .oracles import tiny_features_oracle


def _tiny_weights(seed: int = 0, channels=(8, 8)) -> dict:
    # mirror of the tiny extractor's weight construction, kept separate so a
    # drift in either copy fails the comparison test below
    import math

    rng = np.random.Generator(np.random.PCG64(seed))
    weights = {}
    cin = 3
    for ci, cout in enumerate(channels, start=1):
        bound = math.sqrt(6.0 / (cin * 9))
        weights[f"conv1_{ci}.weight"] = rng.uniform(-bound, bound, size=(cout, cin, 3, 3))
        weights[f"conv1_{ci}.bias"] = rng.uniform(-0.1, 0.1, size=(cout,))
        cin = cout
    return weights


def test_identity_extractor_passthrough():
    x = torch.rand(3, 5, 5, dtype=torch.float64)
    assert torch.equal(IdentityExtractor()(x), x)


def test_tiny_extractor_deterministic_from_seed():
    a = tiny_extractor(seed=3)
    b = tiny_extractor(seed=3)
    x = torch.rand(3, 8, 8, dtype=torch.float64)
    assert torch.equal(a(x), b(x))


def test_tiny_extractor_seed_changes_weights():
    x = torch.rand(3, 8, 8, dtype=torch.float64)
    assert not torch.equal(tiny_extractor(seed=0)(x), tiny_extractor(seed=1)(x))


def test_tiny_extractor_matches_loop_oracle():
    fx = tiny_extractor(seed=0)
    rng = np.random.default_rng(1)
    x = rng.random((3, 6, 6))
    got = fx(torch.as_tensor(x)).numpy()
    want = tiny_features_oracle(x, _tiny_weights(seed=0), n_layers=2)
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_parameters_are_frozen():
    fx = tiny_extractor()
    assert list(fx.parameters()) == []
    assert len(list(fx.buffers())) == 4


def test_gradient_flows_through_inputs_not_weights():
    fx = tiny_extractor()
    x = torch.rand(3, 6, 6, dtype=torch.float64, requires_grad=True)
    fx(x).sum().backward()
    assert x.grad is not None and torch.isfinite(x.grad).all()


def test_layer_selector_validation():
    with pytest.raises(ValueError):
        ConvFeatureExtractor(((8,),), (2, 1), _tiny_weights(channels=(8,)))
    with pytest.raises(ValueError):
        ConvFeatureExtractor(((8, 8),), (1, 3), _tiny_weights())


def test_selector_stops_early():
    # selecting conv1_1 must not require conv1_2 weights
    weights = _tiny_weights()
    del weights["conv1_2.weight"], weights["conv1_2.bias"]
    fx = ConvFeatureExtractor(((8, 8),), (1, 1), weights)
    out = fx(torch.rand(3, 6, 6, dtype=torch.float64))
    assert out.shape == (8, 6, 6)


def test_batched_and_single_agree():
    fx = tiny_extractor()
    x = torch.rand(3, 8, 8, dtype=torch.float64)
    single = fx(x)
    batched = fx(x.unsqueeze(0))
    assert torch.equal(single, batched.squeeze(0))


def test_pooling_between_blocks():
    # two blocks of one conv each: selector in block 2 sees pooled dims
    weights = {}
    rng = np.random.default_rng(2)
    weights["conv1_1.weight"] = rng.standard_normal((4, 3, 3, 3)) * 0.1
    weights["conv1_1.bias"] = np.zeros(4)
    weights["conv2_1.weight"] = rng.standard_normal((4, 4, 3, 3)) * 0.1
    weights["conv2_1.bias"] = np.zeros(4)
    fx = ConvFeatureExtractor(((4,), (4,)), (2, 1), weights)
    out = fx(torch.rand(3, 16, 16, dtype=torch.float64))
    assert out.shape == (4, 8, 8)


def test_make_extractor_specs(tmp_path):
    assert isinstance(make_extractor("identity"), IdentityExtractor)
    assert isinstance(make_extractor("tiny"), ConvFeatureExtractor)
    npz = tmp_path / "weights.npz"
    np.savez(npz, **_tiny_weights())
    fx = load_extractor(str(npz), layer_selector=(1, 2), blocks=((8, 8),))
    x = torch.rand(3, 6, 6, dtype=torch.float64)
    assert torch.equal(fx(x), tiny_extractor(seed=0)(x))

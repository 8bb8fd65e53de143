"""Tests for appearance features, the harmonizer networks, the objective and training."""

import json

import numpy as np
import pytest

from conftest import gradient_image, random_image
from lut_harmony.augment import gen_triplet, generate_batch
from lut_harmony.exceptions import DatasetError, DimensionMismatchError, NumericError
from lut_harmony.harmonizer import (
    FEATURE_DIM,
    PARAM_COUNT,
    Adam,
    ColorTransform,
    HarmonizerModel,
    batch_loss_and_grad,
    extract_features,
    grad,
    harmonize,
    load_checkpoint,
    loss_total,
    mean_disentanglement,
    predict_transform,
    ref_encode,
    save_checkpoint,
    train,
)
from lut_harmony.harmonizer.network import OFFSETS, REF_PARAM_COUNT, layer_view
from lut_harmony.harmonizer.training import history_csv
from lut_harmony.models import ImageF32, LossReport, LossWeights, TrainConfig, TripletSample
from lut_harmony.utils import mix_seed


def _random_model(seed: int, scale: float = 0.1) -> HarmonizerModel:
    rng = np.random.default_rng(seed)
    return HarmonizerModel(params=rng.normal(0.0, scale, size=PARAM_COUNT))


def _random_triplet(seed: int, side: int = 8) -> TripletSample:
    return TripletSample(
        content_a=random_image(side, side, seed=seed),
        content_b=random_image(side, side, seed=seed + 1),
        ref_a=random_image(side, side, seed=seed + 2),
        ref_b=random_image(side, side, seed=seed + 3),
    )


def _same_triplet(image: ImageF32) -> TripletSample:
    return TripletSample(content_a=image, content_b=image, ref_a=image, ref_b=image)


# ---------------------------------------------------------------------------
# Features
# ---------------------------------------------------------------------------

def test_features_of_constant_image():
    """Test 1: A constant 0.5 image has zero std and a one-hot histogram at bin 4."""
    features = extract_features(ImageF32.constant(5, 4, (0.5, 0.5, 0.5)))
    assert features.vector.shape == (FEATURE_DIM,)
    assert np.allclose(features.mean, 0.5)
    assert np.all(features.std == 0.0)
    expected = np.zeros((3, 8))
    expected[:, 4] = 1.0
    assert np.array_equal(features.histograms, expected)


def test_features_match_direct_computation():
    """Test 2: Means, population stds and histograms match a per-pixel loop."""
    image = random_image(7, 5, seed=3)
    pixels = [image.pixel(x, y) for y in range(5) for x in range(7)]
    features = extract_features(image)
    for c in range(3):
        values = [p[c] for p in pixels]
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        assert features.mean[c] == pytest.approx(mean, abs=1e-12)
        assert features.std[c] == pytest.approx(var ** 0.5, abs=1e-12)
        counts = [0] * 8
        for v in values:
            counts[min(int(v * 8), 7)] += 1
        assert features.histograms[c] == pytest.approx([k / len(values) for k in counts])


def test_features_ignore_pixel_order():
    """Test 3: Shuffling pixels leaves the features unchanged."""
    image = random_image(9, 6, seed=4)
    shuffled = np.random.default_rng(0).permutation(image.data.reshape(-1, 3))
    other = ImageF32(data=shuffled.reshape(image.data.shape))
    assert np.allclose(extract_features(image).vector, extract_features(other).vector, atol=1e-12)


def test_histogram_closes_last_bin():
    """Test 4: Value 1.0 lands in the last bin."""
    features = extract_features(ImageF32.constant(2, 2, (1.0, 0.0, 0.125)))
    assert features.histograms[0, 7] == 1.0
    assert features.histograms[1, 0] == 1.0
    assert features.histograms[2, 1] == 1.0


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------

def test_parameter_layout():
    """Test 5: Layers tile the flat vector without gaps."""
    assert PARAM_COUNT == 3519
    assert REF_PARAM_COUNT == 1520
    starts = sorted(start for start, _, _ in OFFSETS.values())
    stops = sorted(stop for _, stop, _ in OFFSETS.values())
    assert starts[0] == 0 and stops[-1] == PARAM_COUNT
    assert starts[1:] == stops[:-1]


def test_zero_params_give_zero_code():
    """Test 6: With every parameter zero the appearance code is zero."""
    code = ref_encode(HarmonizerModel.zeros(), extract_features(random_image(8, 8, seed=1)))
    assert code.shape == (16,)
    assert np.all(code == 0.0)


def test_initialized_model_is_identity():
    """Test 7: A freshly initialized model returns its content unchanged."""
    model = HarmonizerModel.initialize(5)
    assert np.any(model.layer("ref.w1") != 0.0)
    assert np.all(model.layer("fuse.w2") == 0.0)
    content = random_image(12, 10, seed=2)
    out = harmonize(model, content, gradient_image(20, 16, seed=3))
    assert np.array_equal(out.data, content.data)


def test_initialized_model_predicts_the_identity_transform():
    """Test 7b: At init the predicted transform is exactly ColorTransform.identity()."""
    identity = ColorTransform.identity()
    content = random_image(12, 10, seed=4)
    assert np.array_equal(identity.apply(content).data, content.data)

    transform = predict_transform(
        HarmonizerModel.initialize(6),
        extract_features(content),
        extract_features(gradient_image(20, 16, seed=5)),
    )
    for field in ("matrix", "bias", "quad"):
        assert np.array_equal(getattr(transform, field), getattr(identity, field))


def test_initialize_is_deterministic():
    """Test 8: The same seed gives the same parameters."""
    assert np.array_equal(HarmonizerModel.initialize(1).params, HarmonizerModel.initialize(1).params)
    assert not np.array_equal(HarmonizerModel.initialize(1).params, HarmonizerModel.initialize(2).params)


def test_fusion_bias_shifts_red():
    """Test 9: A fusion output bias of (0.1, 0, 0) on b raises red by 0.1."""
    params = np.zeros(PARAM_COUNT)
    layer_view(params, "fuse.b2")[9] = 0.1
    content = ImageF32.constant(4, 4, (0.2, 0.3, 0.4))
    out = harmonize(HarmonizerModel(params=params), content, content, clamp=False)
    assert out.pixel(0, 0) == pytest.approx((0.3, 0.3, 0.4), abs=1e-6)


def test_color_transform_clamps():
    """Test 10: Clamped output stays in [0, 1]; unclamped keeps the overshoot."""
    transform = ColorTransform.from_raw(np.r_[np.zeros(9), [0.5, 0.0, 0.0], np.zeros(3)])
    content = ImageF32.constant(2, 2, (0.8, 0.1, 0.1))
    assert transform.apply(content).pixel(0, 0)[0] == 1.0
    assert transform.apply(content, clamp=False).pixel(0, 0)[0] == pytest.approx(1.3, abs=1e-6)


def test_non_finite_parameters_raise():
    """Test 11: NaN parameters raise NumericError naming the network part."""
    params = np.zeros(PARAM_COUNT)
    params[0] = np.nan
    image = random_image(4, 4, seed=0)
    with pytest.raises(NumericError) as excinfo:
        harmonize(HarmonizerModel(params=params), image, image)
    assert excinfo.value.tensor == "ref_encoder parameters"

    params = np.zeros(PARAM_COUNT)
    params[-1] = np.inf
    with pytest.raises(NumericError) as excinfo:
        loss_total(HarmonizerModel(params=params), _same_triplet(image), LossWeights())
    assert excinfo.value.tensor == "fusion parameters"


# ---------------------------------------------------------------------------
# Objective
# ---------------------------------------------------------------------------

def test_loss_report_compose():
    """Test 12: total = l_harm + w1 * l_recon + w2 * l_dis."""
    report = LossReport.compose(1.0, 1.0, 1.0, 0.0, w1=0.4, w2=0.05)
    assert report.total == pytest.approx(1.45, abs=1e-12)


def test_loss_total_decomposes():
    """Test 13: The reported total matches its weighted terms."""
    weights = LossWeights(w1=0.4, w2=0.05)
    report = loss_total(_random_model(1), _random_triplet(10), weights)
    expected = report.l_harm + 0.4 * report.l_recon + 0.05 * report.l_dis
    assert abs(report.total - expected) <= 1e-12
    assert report.l_dis > 0.0


def test_all_equal_triplet_is_free():
    """Test 14: At initialization a triplet of one image has zero loss and zero gradient."""
    image = random_image(8, 8, seed=5)
    report, g = grad(HarmonizerModel.initialize(0), _same_triplet(image), LossWeights())
    assert report.total == 0.0
    assert report.l_dis_content == 0.0
    assert np.all(g == 0.0)


def test_same_appearance_gives_equal_harm_and_recon(small_bank, tiny_augment):
    """Test 15: With alpha equal to beta the harmonization and reconstruction terms coincide."""
    triplet = gen_triplet(gradient_image(96, 80, seed=6), small_bank[0], small_bank[0], seed=2,
                          cfg=tiny_augment, allow_same=True)
    report = loss_total(_random_model(2), triplet, LossWeights())
    assert report.l_harm == report.l_recon


def test_l_dis_content_is_pixel_distance():
    """Test 16: l_dis_content is mean((C_a - C_b)^2) and does not depend on the model."""
    triplet = _random_triplet(20)
    expected = np.mean((triplet.content_a.pixels() - triplet.content_b.pixels()) ** 2)
    for model in (HarmonizerModel.zeros(), _random_model(3)):
        assert loss_total(model, triplet, LossWeights()).l_dis_content == pytest.approx(expected, abs=1e-12)


GRADIENT_WEIGHTS = [
    LossWeights(w1=0.4, w2=0.05),
    LossWeights(w1=0.0, w2=0.3),
    LossWeights(w1=1.0, w2=0.0),
]


@pytest.mark.parametrize("seed", range(20))
def test_gradient_matches_finite_differences(seed):
    """Test 17: Analytic gradient agrees with central differences for sampled models, triplets and weights."""
    weights = GRADIENT_WEIGHTS[seed % len(GRADIENT_WEIGHTS)]
    model = _random_model(100 + seed, scale=0.2)
    triplet = _random_triplet(1000 + 10 * seed, side=6)
    _, analytic = grad(model, triplet, weights)

    rng = np.random.default_rng(seed)
    coords = [int(rng.integers(start, stop)) for start, stop, _ in OFFSETS.values()]
    coords += [int(i) for i in rng.choice(PARAM_COUNT, size=24, replace=False)]
    h = 1e-6
    for i in coords:
        plus = np.array(model.params)
        minus = np.array(model.params)
        plus[i] += h
        minus[i] -= h
        numeric = (
            loss_total(HarmonizerModel(params=plus), triplet, weights).total
            - loss_total(HarmonizerModel(params=minus), triplet, weights).total
        ) / (2 * h)
        assert abs(numeric - analytic[i]) <= 1e-6 + 1e-4 * abs(analytic[i]), \
            f"coordinate {i}: numeric {numeric} vs analytic {analytic[i]}"


def test_duplicated_triplet_doubles_gradient():
    """Test 18: Batch sums are additive and independent of the worker count."""
    model = _random_model(8)
    triplet = _random_triplet(40)
    single_report, single = grad(model, triplet, LossWeights())
    report, summed = batch_loss_and_grad(model, [triplet, triplet], LossWeights())
    assert np.array_equal(summed, 2.0 * single)
    assert report.total == pytest.approx(2.0 * single_report.total, rel=1e-12)

    batch = [_random_triplet(s) for s in range(50, 55)]
    _, serial = batch_loss_and_grad(model, batch, LossWeights(), workers=1)
    _, parallel = batch_loss_and_grad(model, batch, LossWeights(), workers=3)
    wider = [_random_triplet(s) for s in range(50, 66)]
    _, narrow = batch_loss_and_grad(model, wider, LossWeights(), workers=1)
    _, wide = batch_loss_and_grad(model, wider, LossWeights(), workers=8)
    assert np.array_equal(serial, parallel)
    assert np.array_equal(wide, narrow)


def test_mismatched_contents_raise():
    """Test 19: C_a and C_b of different sizes are rejected."""
    triplet = TripletSample.model_construct(
        content_a=random_image(4, 4, seed=0),
        content_b=random_image(5, 4, seed=1),
        ref_a=random_image(4, 4, seed=2),
        ref_b=random_image(4, 4, seed=3),
    )
    with pytest.raises(DimensionMismatchError):
        loss_total(HarmonizerModel.zeros(), triplet, LossWeights())


def test_mean_disentanglement():
    """Test 20: Zero parameters give zero code distance; random ones do not."""
    batch = [_random_triplet(60), _random_triplet(70)]
    assert mean_disentanglement(HarmonizerModel.zeros(), batch) == 0.0
    assert mean_disentanglement(_random_model(9), batch) > 0.0
    assert mean_disentanglement(_random_model(9), []) == 0.0


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def test_adam_first_step_moves_by_learning_rate():
    """Test 21: Bias correction makes the first step lr * sign(grad)."""
    optimizer = Adam(3)
    updated = optimizer.step(np.zeros(3), np.array([2.0, -0.5, 0.0]), lr=0.01)
    assert updated == pytest.approx([-0.01, 0.01, 0.0], abs=1e-9)
    assert optimizer.t == 1


def test_train_zero_epochs_returns_identity(small_corpus, small_bank, tiny_augment):
    """Test 22: Without epochs training returns the initialized, identity model."""
    cfg = TrainConfig(epochs_const=0, epochs_decay=0, seed=3)
    model, history = train(small_corpus, small_bank, cfg, tiny_augment)
    assert np.array_equal(model.params, HarmonizerModel.initialize(mix_seed(3, 0)).params)
    assert history.epochs == []
    content = random_image(8, 8, seed=1)
    assert np.array_equal(harmonize(model, content, random_image(8, 8, seed=2)).data, content.data)


def test_train_is_deterministic(small_corpus, small_bank, tiny_augment):
    """Test 23: Identical inputs give bit-identical parameters for any worker count."""
    cfg = TrainConfig(learning_rate=5e-3, epochs_const=1, epochs_decay=1, batch_size=8,
                      steps_per_epoch=2, seed=4)
    first, history = train(small_corpus, small_bank, cfg, tiny_augment, workers=1)
    second, _ = train(small_corpus, small_bank, cfg, tiny_augment, workers=2)
    eighth, _ = train(small_corpus, small_bank, cfg, tiny_augment, workers=8)
    assert np.array_equal(first.params, second.params)
    assert np.array_equal(first.params, eighth.params)
    assert not np.array_equal(first.params, HarmonizerModel.initialize(mix_seed(4, 0)).params)

    assert [record.epoch for record in history.epochs] == [0, 1]
    assert [record.lr for record in history.epochs] == [5e-3, 5e-3]
    assert len(history.step_totals) == 4
    lines = history_csv(history).splitlines()
    assert lines[0] == "epoch,l_harm,l_recon,l_dis,l_dis_content,total,lr"
    assert len(lines) == 3


def test_checkpoint_roundtrip(tmp_path):
    """Test 24: Parameters and the training config survive a save/load cycle exactly."""
    model = _random_model(11)
    cfg = TrainConfig(learning_rate=1e-3, seed=9)
    path = save_checkpoint(tmp_path / "model.json", model, cfg)
    loaded, loaded_cfg = load_checkpoint(path)
    assert np.array_equal(loaded.params, model.params)
    assert loaded_cfg == cfg


def test_checkpoint_rejects_bad_files(tmp_path):
    """Test 25: Unknown versions, wrong shapes and garbage raise DatasetError."""
    path = save_checkpoint(tmp_path / "model.json", HarmonizerModel.zeros())
    payload = json.loads(path.read_text())

    payload["version"] = 99
    (tmp_path / "version.json").write_text(json.dumps(payload))
    with pytest.raises(DatasetError):
        load_checkpoint(tmp_path / "version.json")

    payload["version"] = 1
    payload["shapes"]["ref.w1"] = [16, 30]
    (tmp_path / "shapes.json").write_text(json.dumps(payload))
    with pytest.raises(DatasetError):
        load_checkpoint(tmp_path / "shapes.json")

    (tmp_path / "garbage.json").write_text("{not json")
    with pytest.raises(DatasetError):
        load_checkpoint(tmp_path / "garbage.json")


@pytest.mark.slow
def test_desk_training_lowers_harmonization_loss(small_corpus, small_bank, tiny_augment):
    """Test 26: A desk-preset run beats the identity on fresh triplets of the same stream."""
    cfg = TrainConfig.desk(seed=1)
    model, history = train(small_corpus, small_bank, cfg, tiny_augment)
    assert len(history.step_totals) == 200

    heldout = generate_batch(small_corpus, small_bank, 0, 32, 999, tiny_augment)
    before, _ = batch_loss_and_grad(HarmonizerModel.initialize(mix_seed(1, 0)), heldout, LossWeights())
    after, _ = batch_loss_and_grad(model, heldout, LossWeights())
    assert after.l_harm < before.l_harm

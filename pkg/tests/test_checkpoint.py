import numpy as np
import pytest
import torch

from vlm6d.checkpoint import load_checkpoint, save_checkpoint
from vlm6d.errors import IncompatibleWeightsError, IngestionError
from vlm6d.model import ModelConfig, PoseNet, load_model, save_model
from vlm6d.rgb_encoder import RgbEncoderConfig


def sample_tensors():
    rng = np.random.default_rng(0)
    return {
        "a.weight": rng.normal(size=(4, 3)),
        "a.bias": rng.normal(size=4).astype(np.float32),
        "count": np.array(7, dtype=np.int64),  # 0-d tensor
        "z.flag": np.array([1], dtype=np.uint8),
    }


class TestCheckpointFile:
    def test_roundtrip_exact(self, tmp_path):
        path = tmp_path / "x.ckpt"
        tensors = sample_tensors()
        save_checkpoint(path, tensors, {"note": "hello", "n": 3})
        loaded, manifest = load_checkpoint(path)
        assert manifest == {"note": "hello", "n": 3}
        assert set(loaded) == set(tensors)
        for k in tensors:
            assert loaded[k].dtype == np.asarray(tensors[k]).dtype
            assert loaded[k].shape == np.asarray(tensors[k]).shape
            assert np.array_equal(loaded[k], tensors[k])

    def test_save_load_save_is_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(p1, sample_tensors(), {"k": [1, 2]})
        tensors, manifest = load_checkpoint(p1)
        save_checkpoint(p2, tensors, manifest)
        assert p1.read_bytes() == p2.read_bytes()

    def test_insertion_order_does_not_matter(self, tmp_path):
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        t = sample_tensors()
        save_checkpoint(p1, t, {})
        save_checkpoint(p2, dict(reversed(list(t.items()))), {})
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"not a checkpoint at all")
        with pytest.raises(IncompatibleWeightsError, match="not a checkpoint"):
            load_checkpoint(path)

    def test_truncation_names_first_bad_tensor(self, tmp_path):
        path = tmp_path / "x.ckpt"
        save_checkpoint(path, sample_tensors(), {})
        data = path.read_bytes()
        path.write_bytes(data[:-3])
        with pytest.raises(IncompatibleWeightsError, match="count"):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            load_checkpoint(tmp_path / "absent.ckpt")


class TestModelSaveLoad:
    @pytest.fixture(scope="class")
    @staticmethod
    def model():
        config = ModelConfig(n_classes=3, rgb=RgbEncoderConfig(depth=1))
        torch.manual_seed(0)
        return PoseNet(config)

    def test_roundtrip_preserves_all_weights(self, tmp_path, model):
        path = tmp_path / "m.ckpt"
        save_model(model, path, extra_manifest={"epoch": 5})
        loaded, extras, manifest = load_model(path)
        assert manifest["epoch"] == 5
        assert extras == {}
        for (na, a), (nb, b) in zip(
            sorted(model.state_dict().items()), sorted(loaded.state_dict().items())
        ):
            assert na == nb
            assert torch.equal(a, b), na

    def test_forward_identical_after_reload(self, tmp_path, model):
        path = tmp_path / "m.ckpt"
        save_model(model, path)
        loaded, _, _ = load_model(path)
        rng = np.random.default_rng(1)
        image = torch.as_tensor(rng.normal(size=(224, 224, 3)), dtype=torch.float64)
        cloud = torch.as_tensor(rng.normal(scale=0.05, size=(2048, 3)), dtype=torch.float64)
        with torch.no_grad():
            a, _ = model(image, cloud)
            b, _ = loaded(image, cloud)
        assert torch.equal(a.rotation_6d, b.rotation_6d)
        assert torch.equal(a.translation_offset, b.translation_offset)
        assert torch.equal(a.class_logits, b.class_logits)

    def test_extra_tensors_roundtrip(self, tmp_path, model):
        path = tmp_path / "m.ckpt"
        extra = {"optim.0.step": np.array(42.0)}
        save_model(model, path, extra_tensors=extra)
        _, extras, _ = load_model(path)
        assert np.array_equal(extras["optim.0.step"], extra["optim.0.step"])

    def test_wrong_shape_rejected(self, tmp_path, model):
        path = tmp_path / "m.ckpt"
        save_model(model, path)
        tensors, manifest = load_checkpoint(path)
        key = next(k for k in tensors if k.startswith("model."))
        tensors[key] = tensors[key].reshape(-1)[:-1] if tensors[key].size > 1 else tensors[key]
        save_checkpoint(path, tensors, manifest)
        with pytest.raises(IncompatibleWeightsError):
            load_model(path)

import copy
import json

import numpy as np
import pytest
import torch

from voice2face.errors import ConfigurationError, InsufficientDataError
from voice2face.matching_train import (
    PlateauSchedule,
    evaluate_matching,
    load_inference_encoders,
    train_inference,
)
from voice2face.nets.face import FaceEncoder
from voice2face.nets.speech import SpeechEncoder
from voice2face.schemas import REPORT_SCHEMAS


class TestPlateauSchedule:
    def test_decay_after_one_stale_epoch(self):
        s = PlateauSchedule(0.001, 10.0, patience_epochs=1, max_decays=3)
        assert s.update(1.0) == (False, False)
        assert s.update(0.9) == (False, False)
        assert s.update(0.95) == (True, False)  # not improved for 1 epoch
        assert s.lr == pytest.approx(0.0001)

    def test_lr_after_two_decays_is_init_over_hundred(self):
        s = PlateauSchedule(0.001, 10.0, 1, 3)
        s.update(1.0)
        s.update(1.1)  # decay 1
        s.update(0.9)
        s.update(0.95)  # decay 2
        assert s.lr == pytest.approx(0.001 / 100)

    def test_stops_exactly_on_third_decay(self):
        s = PlateauSchedule(0.001, 10.0, 1, 3)
        s.update(1.0)
        assert s.update(2.0) == (True, False)
        assert s.update(2.0) == (True, False)
        assert s.update(2.0) == (True, True)
        assert s.decays == 3

    def test_improvement_resets_patience(self):
        s = PlateauSchedule(0.001, 10.0, patience_epochs=2, max_decays=3)
        s.update(1.0)
        s.update(1.1)
        s.update(0.9)  # improvement before patience ran out
        s.update(1.0)
        assert s.decays == 0
        s.update(1.0)
        assert s.decays == 1

    def test_state_round_trip(self):
        s = PlateauSchedule(0.001, 10.0, 1, 3)
        s.update(1.0)
        s.update(2.0)
        clone = PlateauSchedule(0.001, 10.0, 1, 3)
        clone.load_state(s.state())
        assert clone.state() == s.state()


@pytest.fixture(scope="module")
def tiny_train(tiny_run_config, tiny_dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny_inference")
    cfg = copy.deepcopy(tiny_run_config)
    result = train_inference(cfg, tiny_dataset, str(out))
    return cfg, result


class TestTrainInference:
    def test_runs_and_writes_artifacts(self, tiny_train):
        _, result = tiny_train
        assert len(result.history) == 2
        assert result.checkpoint_path.endswith("checkpoint.pt")
        speech, face = load_inference_encoders(result.checkpoint_path)
        assert isinstance(speech, SpeechEncoder) and isinstance(face, FaceEncoder)

    def test_log_lines_schema_valid(self, tiny_train):
        import jsonschema

        _, result = tiny_train
        lines = [json.loads(l) for l in open(result.log_path)]
        assert len(lines) == 2
        for line in lines:
            jsonschema.validate(line, REPORT_SCHEMAS["train_log_line"])

    def test_deterministic_under_seed(self, tiny_run_config, tiny_dataset, tmp_path):
        cfg = copy.deepcopy(tiny_run_config)
        cfg.inference.max_epochs = 1
        r1 = train_inference(cfg, tiny_dataset, str(tmp_path / "a"))
        r2 = train_inference(cfg, tiny_dataset, str(tmp_path / "b"))
        assert [h.to_json() for h in r1.history] == [h.to_json() for h in r2.history]

    def test_resume_matches_straight_run(self, tiny_run_config, tiny_dataset, tmp_path):
        cfg = copy.deepcopy(tiny_run_config)
        cfg.inference.max_epochs = 3
        straight = train_inference(cfg, tiny_dataset, str(tmp_path / "straight"))

        cfg2 = copy.deepcopy(tiny_run_config)
        cfg2.inference.max_epochs = 2
        train_inference(cfg2, tiny_dataset, str(tmp_path / "resumed"))
        cfg2.inference.max_epochs = 3
        resumed = train_inference(cfg2, tiny_dataset, str(tmp_path / "resumed"), resume=True)

        assert straight.history[-1].to_json() == resumed.history[-1].to_json()

    def test_empty_split_rejected(self, tiny_run_config, tiny_dataset, tmp_path):
        cfg = copy.deepcopy(tiny_run_config)
        cfg.inference.val_fraction = 0.0
        with pytest.raises(ConfigurationError):
            train_inference(cfg, tiny_dataset, str(tmp_path / "x"))


class TestEvaluateMatching:
    @pytest.fixture(scope="class")
    def encoders(self, tiny_run_config):
        torch.manual_seed(21)
        speech = SpeechEncoder(tiny_run_config.speech_encoder, tiny_run_config.audio.sample_rate)
        face = FaceEncoder(tiny_run_config.face_encoder)
        return speech.eval(), face.eval()

    def test_report_fields_and_schema(self, encoders, tiny_dataset):
        import jsonschema

        speech, face = encoders
        report = evaluate_matching(
            speech, face, tiny_dataset, k=3, mode="vf",
            rng=np.random.default_rng(0), n_repeats=3, n_examples=10,
        )
        jsonschema.validate(report.to_dict(), REPORT_SCHEMAS["matching_eval"])
        assert report.n_repeats == 3
        assert 0.0 <= report.mean_acc <= 1.0

    def test_fixed_seed_reproducible(self, encoders, tiny_dataset):
        speech, face = encoders
        a = evaluate_matching(speech, face, tiny_dataset, 2, "fv",
                              np.random.default_rng(9), n_repeats=2, n_examples=8)
        b = evaluate_matching(speech, face, tiny_dataset, 2, "fv",
                              np.random.default_rng(9), n_repeats=2, n_examples=8)
        assert a.to_dict() == b.to_dict()

    def test_mode_and_k_can_differ_from_training(self, encoders, tiny_dataset):
        speech, face = encoders
        for mode in ("vf", "fv"):
            for k in (2, 5):
                rep = evaluate_matching(speech, face, tiny_dataset, k, mode,
                                        np.random.default_rng(1), n_repeats=1, n_examples=5)
                assert rep.k == k and rep.mode == mode

    def test_insufficient_clips_rejected(self, encoders, tiny_dataset):
        speech, face = encoders
        small = tiny_dataset.subset(tiny_dataset.records[:3])
        with pytest.raises(InsufficientDataError):
            evaluate_matching(speech, face, small, k=5, mode="vf",
                              rng=np.random.default_rng(0))

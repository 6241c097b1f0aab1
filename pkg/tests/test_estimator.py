"""Feature extraction, calibration, bin estimation, and the external hook."""

import sys

import numpy as np
import pytest

from helpers import natural_image

from promptdeg import ops
from promptdeg.degradation import DegradationConfig, sample_spec, apply
from promptdeg.estimator import (
    Calibration,
    CalibrationError,
    HookError,
    calibrate,
    calibrate_from_features,
    dominant_component,
    estimate_blockiness,
    estimate_blur_metric,
    estimate_bins,
    estimate_noise_sigma,
    estimate_prompt,
    evaluate_calibration,
    external_prompter_hook,
    single_degradation_config,
)
from promptdeg.prompts import Direction, Level, parse


class TestNoiseSigma:
    def test_constant_is_zero(self):
        assert estimate_noise_sigma(np.full((32, 32, 3), 0.7)) == 0.0

    def test_flat_plus_noise_recovers_sigma(self):
        rng = np.random.default_rng(5)
        img = ops.add_gaussian_noise(np.full((512, 512, 1), 0.5), 20.0, False, rng)
        assert estimate_noise_sigma(img) == pytest.approx(20.0 / 255.0, rel=0.15)

    def test_monotone_in_level(self):
        base = natural_image(192, 192, 6)
        wins = 0
        for trial in range(20):
            rng_lo = np.random.default_rng(1000 + trial)
            rng_hi = np.random.default_rng(2000 + trial)
            lo = estimate_noise_sigma(ops.add_gaussian_noise(base, 5.0, True, rng_lo))
            hi = estimate_noise_sigma(ops.add_gaussian_noise(base, 25.0, True, rng_hi))
            wins += hi > lo
        assert wins == 20

    def test_small_image_rejected(self):
        with pytest.raises(ValueError):
            estimate_noise_sigma(np.zeros((8, 8, 1)))


class TestBlurMetric:
    def test_blurred_scores_higher(self, natural_img):
        blurred = ops.convolve(natural_img, ops.gaussian_kernel_iso(21, 2.5))
        assert estimate_blur_metric(blurred) > estimate_blur_metric(natural_img)

    def test_offset_invariant(self, natural_img):
        assert estimate_blur_metric(natural_img + 0.1) == pytest.approx(
            estimate_blur_metric(natural_img), rel=1e-6
        )

    def test_monotone_over_sigmas(self):
        wins = 0
        for trial in range(20):
            base = natural_image(128, 128, 50 + trial)
            scores = [
                estimate_blur_metric(ops.convolve(base, ops.gaussian_kernel_iso(21, s)))
                for s in (0.5, 1.5, 2.9)
            ]
            wins += scores[0] < scores[1] < scores[2]
        assert wins > 10


class TestBlockiness:
    def test_white_noise_near_one(self):
        img = np.random.default_rng(8).random((128, 128, 3))
        assert 0.9 <= estimate_blockiness(img) <= 1.1

    def test_jpeg_increases_ratio(self, natural_img):
        q30 = estimate_blockiness(ops.jpeg_roundtrip(natural_img, 30))
        q95 = estimate_blockiness(ops.jpeg_roundtrip(natural_img, 95))
        assert q30 > q95

    def test_constant_image_guard(self):
        assert estimate_blockiness(np.full((32, 32, 1), 0.3)) == 1.0


class TestCalibrationCore:
    def _clusters(self, centers, n=120, spread=0.01):
        rng = np.random.default_rng(0)
        pairs = []
        for center, level in zip(centers, (Level.LIGHT, Level.MEDIUM, Level.HEAVY)):
            pairs += [(center + spread * rng.standard_normal(), level) for _ in range(n)]
        rng.shuffle(pairs)
        return pairs

    def test_separable_clusters_perfect_accuracy(self):
        pairs = {c: self._clusters((0.1, 0.5, 0.9)) for c in ("noise", "blur", "compression")}
        calib = calibrate_from_features(pairs)
        for comp in ("noise", "blur", "compression"):
            assert calib.metadata["components"][comp]["held_out_accuracy"] == 1.0
            lo, hi = calib.cuts[comp]
            assert lo < hi

    def test_insufficient_class_named(self):
        pairs = {c: self._clusters((0.1, 0.5, 0.9)) for c in ("noise", "blur", "compression")}
        pairs["blur"] = [p for p in pairs["blur"] if p[1] is not Level.MEDIUM][:250] + [
            (0.5, Level.MEDIUM)
        ] * 10
        with pytest.raises(CalibrationError, match="medium"):
            calibrate_from_features(pairs)

    def test_empty_data_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_from_features({})
        with pytest.raises(CalibrationError):
            calibrate([])

    def test_non_monotone_medians_rejected(self):
        good = self._clusters((0.1, 0.5, 0.9))
        bad = [(1.0 - f, lab) if lab is Level.HEAVY else (f, lab) for f, lab in good]
        pairs = {"noise": good, "blur": good, "compression": bad}
        with pytest.raises(CalibrationError, match="increasing"):
            calibrate_from_features(pairs)

    def test_cut_points_must_increase(self):
        with pytest.raises(CalibrationError):
            Calibration(cuts={"noise": (0.5, 0.1), "blur": (0, 1), "compression": (0, 1)})

    def test_json_roundtrip(self, tmp_path):
        calib = calibrate_from_features(
            {c: self._clusters((0.1, 0.5, 0.9)) for c in ("noise", "blur", "compression")}
        )
        path = tmp_path / "cal.json"
        calib.save(path)
        loaded = Calibration.load(path)
        assert loaded.cuts == calib.cuts
        assert loaded.metadata["components"].keys() == calib.metadata["components"].keys()


class TestDominantComponent:
    @pytest.mark.parametrize("comp", ["noise", "blur", "compression"])
    def test_factory_configs_classified(self, comp):
        assert dominant_component(single_degradation_config(comp)) == comp

    def test_default_config_ambiguous(self):
        with pytest.raises(CalibrationError):
            dominant_component(DegradationConfig())


class TestPipelineCalibration:
    def test_metadata_records_accuracy(self, default_calibration):
        for comp in ("noise", "blur", "compression"):
            meta = default_calibration.metadata["components"][comp]
            assert meta["held_out_accuracy"] > 1 / 3
            lo, hi = default_calibration.cuts[comp]
            assert lo < hi

    def test_generalizes_across_seeds(self, default_calibration, eval_manifests):
        accuracies = evaluate_calibration(default_calibration, eval_manifests)
        for comp, acc in accuracies.items():
            held = default_calibration.metadata["components"][comp]["held_out_accuracy"]
            assert abs(acc - held) <= 0.05

    def test_heavy_noise_image_labeled_heavy(self, default_calibration):
        cfg = single_degradation_config("noise")
        rng = np.random.default_rng(3)
        hr = natural_image(128, 128, 77)
        found = None
        while found is None:
            spec = sample_spec(cfg, rng)
            if spec.noise_level > 25.0:
                found = spec
        lr = apply(found, hr, rng, config=cfg)
        assert estimate_bins(lr, default_calibration).noise is Level.HEAVY

    def test_pristine_image_lowest_bins(self, default_calibration, natural_img):
        bins = estimate_bins(natural_img, default_calibration)
        assert bins.noise is Level.LIGHT
        assert bins.compression is Level.LIGHT
        assert bins.resize1 is Direction.UNSPECIFIED
        assert bins.resize2 is True

    def test_estimated_prompt_parses(self, default_calibration, natural_img):
        text = estimate_prompt(natural_img, default_calibration)
        parsed = parse(text)  # must never error
        bins = estimate_bins(natural_img, default_calibration)
        # resize1 is unspecified in estimator bins, so the bare final
        # "downsample" re-binds on parse; level components round-trip.
        assert (parsed.blur, parsed.noise, parsed.compression) == (
            bins.blur, bins.noise, bins.compression
        )
        no_sr = estimate_prompt(natural_img, default_calibration, sr_context=False)
        assert "downsample" not in no_sr


class TestExternalHook:
    def test_echo_command(self, tmp_path):
        img = tmp_path / "x.png"
        img.touch()
        prompt = external_prompter_hook(img, "echo 'medium noise'")
        assert parse(prompt).noise is Level.MEDIUM

    def test_placeholder_substitution(self, tmp_path):
        img = tmp_path / "with space.png"
        img.touch()
        out = external_prompter_hook(img, "test -f {image} && echo 'light blur'")
        assert out == "light blur"

    def test_bad_grammar_rejected(self, tmp_path):
        with pytest.raises(HookError, match="foo"):
            external_prompter_hook(tmp_path / "x.png", "echo 'foo bar'")

    def test_nonzero_exit_reported(self, tmp_path):
        with pytest.raises(HookError, match="status 3"):
            external_prompter_hook(tmp_path / "x.png", "exit 3")

    def test_timeout(self, tmp_path):
        with pytest.raises(HookError, match="timed out"):
            external_prompter_hook(tmp_path / "x.png", f"{sys.executable} -c 'import time; time.sleep(5)'", timeout=0.3)

"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with -s to see them inline).

Heavy builds (the 1,000-record determinism check and the estimator
calibration sets) are shared session/module fixtures.
"""

import hashlib
import math
import time

import numpy as np
import numpy.testing as npt
import pytest

from promptdeg import ops
from promptdeg.dataset import BuilderConfig, build, read_manifest, verify
from promptdeg.degradation import DegradationConfig, sample_spec
from promptdeg.estimator import estimate_blockiness, evaluate_calibration
from promptdeg.image import psnr
from promptdeg.prompts import (
    Direction,
    Level,
    PromptBins,
    PromptFormat,
    parse,
    render,
)


def report(name: str, detail: str = "") -> None:
    print(f"ACCEPTANCE PASS: {name}" + (f"  [{detail}]" if detail else ""), flush=True)


@pytest.fixture(scope="module")
def determinism_builds(source_dir, tmp_path_factory):
    root = tmp_path_factory.mktemp("determinism")
    manifests = {}
    elapsed = {}
    for workers in (1, 8):
        cfg = BuilderConfig(
            hr_source_dir=str(source_dir),
            output_dir=str(root / f"w{workers}"),
            record_count=1000,
            global_seed=424242,
            hr_patch=256,
            worker_count=workers,
        )
        t0 = time.time()
        manifests[workers] = build(cfg)
        elapsed[workers] = time.time() - t0
    return manifests, elapsed


class TestDistributionConformance:
    def test_sampling_matches_configured_distributions(self):
        n = 10_000
        t0 = time.time()
        cfg = DegradationConfig()
        rng = np.random.default_rng(20240501)
        specs = [sample_spec(cfg, rng) for _ in range(n)]

        def freq(pred):
            return sum(1 for s in specs if pred(s)) / n

        for method, target in zip(ops.RESIZE_METHODS, (0.30, 0.40, 0.30)):
            assert abs(freq(lambda s, m=method: s.resize1_method == m) - target) <= 0.02
            assert abs(freq(lambda s, m=method: s.resize2_method == m) - target) <= 0.02
        assert abs(freq(lambda s: s.blur_kind == "iso") - 0.5) <= 0.02
        assert abs(freq(lambda s: s.noise_kind == "gaussian") - 0.5) <= 0.02
        assert abs(freq(lambda s: s.gray_noise) - 0.5) <= 0.02

        populations = {
            "sigma_x": ([s.sigma_x for s in specs], cfg.sigma_range),
            "sigma_y_aniso": ([s.sigma_y for s in specs if s.blur_kind == "aniso"], cfg.sigma_range),
            "theta_aniso": ([s.theta for s in specs if s.blur_kind == "aniso"], cfg.theta_range),
            "gamma1": ([s.gamma1 for s in specs], cfg.gamma1_range),
            "phi1": ([s.noise_level for s in specs if s.noise_kind == "gaussian"], cfg.phi1_range),
            "phi2": ([s.noise_level for s in specs if s.noise_kind == "poisson"], cfg.phi2_range),
            "jpeg_q": ([s.jpeg_q for s in specs], cfg.q_range),
        }
        for name, (values, rng_) in populations.items():
            counts, _ = np.histogram(values, bins=10, range=rng_)
            m = len(values)
            sigma = math.sqrt(m * 0.1 * 0.9)
            assert np.abs(counts - m / 10).max() <= 3 * sigma, name
        elapsed = time.time() - t0
        assert elapsed < 60.0
        report("distribution conformance", f"10k specs in {elapsed:.1f}s")


class TestPromptRoundTrip:
    def test_thousand_random_bin_sets(self):
        rng = np.random.default_rng(99)
        levels = [Level.LIGHT, Level.MEDIUM, Level.HEAVY, Level.UNSPECIFIED]
        directions = [Direction.UPSAMPLE, Direction.DOWNSAMPLE, Direction.UNCHANGE,
                      Direction.UNSPECIFIED]
        failures = 0
        n = 0
        while n < 1000:
            bins = PromptBins(
                blur=levels[rng.integers(4)],
                resize1=directions[rng.integers(4)],
                noise=levels[rng.integers(4)],
                compression=levels[rng.integers(4)],
                resize2=bool(rng.integers(2)),
            )
            if bins.resize1 is Direction.UNSPECIFIED and bins.resize2:
                continue  # outside the grammar's representable domain
            n += 1
            if parse(render(bins)) != bins:
                failures += 1
            shuffled = render(bins, PromptFormat(order="shuffled"), rng)
            if parse(shuffled) != parse(render(bins)):
                failures += 1
        assert failures == 0
        report("prompt round-trip", "1000 bin sets, 0 failures")


class TestKernelConvolutionOracles:
    def test_kernel_and_resampling_oracles(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            eta = int(rng.choice([3, 5, 7, 9, 11, 13, 15, 17, 19, 21]))
            if rng.random() < 0.5:
                k = ops.gaussian_kernel_iso(eta, rng.uniform(0.1, 4.0))
            else:
                k = ops.gaussian_kernel_aniso(
                    eta, rng.uniform(0.1, 4.0), rng.uniform(0.1, 4.0),
                    rng.uniform(0.0, math.pi),
                )
            assert abs(k.sum() - 1.0) <= 1e-6
            assert k.min() >= 0.0

        img = np.zeros((64, 64, 1))
        img[32, 32, 0] = 1.0
        k = ops.gaussian_kernel_iso(9, 1.7)
        out = ops.convolve(img, k)
        npt.assert_allclose(out[28:37, 28:37, 0], k, atol=1e-6)

        for theta in np.linspace(0.0, math.pi, 7, endpoint=False):
            ka = ops.gaussian_kernel_aniso(13, 1.8, 1.8, float(theta))
            ki = ops.gaussian_kernel_iso(13, 1.8)
            npt.assert_allclose(ka, ki, atol=1e-9)

        img = rng.random((32, 24, 3))
        out = ops.resize(img, 8, 6, "area")
        blocks = img.reshape(8, 4, 6, 4, 3).mean(axis=(1, 3))
        npt.assert_allclose(out, blocks, atol=1e-6)
        report("kernel/convolution oracles")


class TestNoiseOracles:
    def test_noise_statistics(self):
        flat = np.full((512, 512, 3), 0.5)
        for phi1 in (5.0, 15.0, 30.0):
            rng = np.random.default_rng(int(phi1))
            out = ops.add_gaussian_noise(flat, phi1, False, rng)
            measured = (out - flat).std()
            assert abs(measured - phi1 / 255.0) <= 0.05 * phi1 / 255.0

        rng = np.random.default_rng(55)
        out = ops.add_poisson_noise(flat, 2.0, False, rng)
        expected = 0.5 * 2.0 / 255.0
        assert abs((out - flat).var() - expected) <= 0.10 * expected

        out = ops.add_gaussian_noise(flat, 30.0, True, np.random.default_rng(4))
        res = out - flat
        assert np.array_equal(res[:, :, 0], res[:, :, 1])
        assert np.array_equal(res[:, :, 0], res[:, :, 2])
        report("noise oracles")


class TestJpegMonotonicity:
    def test_quality_ladder(self, natural_img):
        ref = np.clip(natural_img, 0, 1)
        psnrs = [psnr(ops.jpeg_roundtrip(natural_img, q), ref) for q in (95, 60, 30)]
        blocks = [estimate_blockiness(ops.jpeg_roundtrip(natural_img, q)) for q in (95, 60, 30)]
        assert psnrs[0] > psnrs[1] > psnrs[2]
        assert blocks[0] < blocks[1] < blocks[2]
        report("JPEG monotonicity",
               f"PSNR {psnrs[0]:.1f}>{psnrs[1]:.1f}>{psnrs[2]:.1f}")


class TestEndToEndDeterminism:
    def test_worker_counts_and_regeneration(self, determinism_builds):
        manifests, elapsed = determinism_builds
        m1, m8 = manifests[1], manifests[8]
        assert m1.read_bytes() == m8.read_bytes()

        def image_digest(manifest):
            h = hashlib.sha256()
            root = manifest.parent
            for p in sorted(root.rglob("*.png")):
                h.update(p.relative_to(root).as_posix().encode())
                h.update(p.read_bytes())
            return h.hexdigest()

        assert image_digest(m1) == image_digest(m8)

        t0 = time.time()
        rep = verify(m1, mode="regenerate")
        regen_s = time.time() - t0
        assert rep["checked"] == 1000
        assert rep["mismatched"] == [] and rep["missing"] == []
        total = elapsed[1] + elapsed[8] + regen_s
        assert total < 600.0
        report("end-to-end determinism",
               f"build w1 {elapsed[1]:.0f}s, w8 {elapsed[8]:.0f}s, regenerate {regen_s:.0f}s")


class TestOutputShapeContract:
    def test_lr_dims_quarter_of_patch(self, determinism_builds):
        manifests, _ = determinism_builds
        from promptdeg.image import load_image_u8

        manifest = manifests[1]
        header, records = read_manifest(manifest)
        patch = header["config"]["hr_patch"]
        for rec in records[::97] + records[-1:]:
            lr = load_image_u8(manifest.parent / rec["lr_path"])
            assert lr.shape[:2] == (patch // 4, patch // 4)
        report("output shape contract", f"LR = {patch // 4}x{patch // 4}")

    def test_one_resize_configuration_reachable(self, source_dir, tmp_path):
        cfg = BuilderConfig(
            hr_source_dir=str(source_dir),
            output_dir=str(tmp_path / "oner"),
            record_count=20,
            global_seed=5,
            hr_patch=128,
            degradation=DegradationConfig(two_stage_resize=False),
        )
        _, records = read_manifest(build(cfg))
        assert all(r["spec"]["gamma1"] == 1.0 for r in records)
        report("one-resize configuration", "all gamma1 == 1")


class TestEstimatorFloors:
    def test_floors_on_disjoint_seed_sets(self, default_calibration, eval_manifests):
        accuracies = evaluate_calibration(default_calibration, eval_manifests)
        floors = {"noise": 0.80, "blur": 0.60, "compression": 0.60}
        for comp, floor in floors.items():
            assert accuracies[comp] >= floor, (comp, accuracies[comp])
            assert accuracies[comp] > 1 / 3
            meta = default_calibration.metadata["components"][comp]
            assert 0.0 < meta["held_out_accuracy"] <= 1.0
        report(
            "estimator floors",
            " ".join(f"{c}={accuracies[c]:.3f}" for c in floors),
        )


class TestPromptDropoutStatistics:
    def test_half_dropout_presence_rates(self):
        n = 1000
        cfg = DegradationConfig()
        rng = np.random.default_rng(321)
        fmt = PromptFormat(dropout=0.5)
        counts = {"blur": 0, "noise": 0, "compression": 0}
        resize1_subset = 0
        resize1_present = 0
        down_slots = 0
        down_tokens = 0
        for _ in range(n):
            spec = sample_spec(cfg, rng)
            from promptdeg.prompts import bins_from_spec

            bins = bins_from_spec(spec, cfg)
            parts = [p.strip() for p in render(bins, fmt, rng).split(",") if p.strip()]
            for comp in counts:
                counts[comp] += any(p.endswith(comp) for p in parts)
            if bins.resize1 in (Direction.UPSAMPLE, Direction.UNCHANGE):
                resize1_subset += 1
                resize1_present += str(bins.resize1) in parts
                down_slots += 1
                down_tokens += parts.count("downsample")
            else:
                # resize1 and resize2 both render "downsample"; count tokens
                # against the two slots jointly.
                down_slots += 2
                down_tokens += parts.count("downsample")

        for comp, count in counts.items():
            assert abs(count / n - 0.5) <= 0.05, comp
        assert abs(resize1_present / resize1_subset - 0.5) <= 0.05
        assert abs(down_tokens / down_slots - 0.5) <= 0.05
        report(
            "prompt dropout statistics",
            f"blur {counts['blur'] / n:.3f} noise {counts['noise'] / n:.3f} "
            f"compression {counts['compression'] / n:.3f} "
            f"resize1 {resize1_present / resize1_subset:.3f} "
            f"downsample {down_tokens / down_slots:.3f}",
        )

import numpy as np
import pytest

from helpers import natural_image

from promptdeg.dataset import BuilderConfig, build
from promptdeg.estimator import calibrate, single_degradation_config
from promptdeg.image import to_uint8, write_png
from promptdeg.prompts import PromptFormat

CAL_SEED = 1001
EVAL_SEED = 2002
CAL_N = 600  # >= 100 records per class with comfortable margin
EVAL_N = 300


@pytest.fixture(scope="session")
def natural_img():
    return natural_image(256, 256, 42)


@pytest.fixture(scope="session")
def source_dir(tmp_path_factory):
    """Three photo-like 512x512 source PNGs."""
    root = tmp_path_factory.mktemp("sources")
    for i in range(3):
        write_png(root / f"src_{i}.png", to_uint8(natural_image(512, 512, 100 + i)))
    return root


def build_single_degradation_set(component, seed, count, out_dir, source_dir, workers=8):
    config = BuilderConfig(
        hr_source_dir=str(source_dir),
        output_dir=str(out_dir),
        record_count=count,
        global_seed=seed,
        hr_patch=128,
        degradation=single_degradation_config(component),
        prompt_format=PromptFormat(),
        worker_count=workers,
    )
    return build(config)


@pytest.fixture(scope="session")
def calibration_manifests(tmp_path_factory, source_dir):
    root = tmp_path_factory.mktemp("calsets")
    return [
        build_single_degradation_set(comp, CAL_SEED, CAL_N, root / comp, source_dir)
        for comp in ("noise", "blur", "compression")
    ]


@pytest.fixture(scope="session")
def eval_manifests(tmp_path_factory, source_dir):
    root = tmp_path_factory.mktemp("evalsets")
    return [
        build_single_degradation_set(comp, EVAL_SEED, EVAL_N, root / comp, source_dir)
        for comp in ("noise", "blur", "compression")
    ]


@pytest.fixture(scope="session")
def default_calibration(calibration_manifests):
    return calibrate(calibration_manifests, min_per_class=100)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

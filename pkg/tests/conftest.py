import pytest

from floodcast import synth


@pytest.fixture(scope="session")
def small_bundle(tmp_path_factory):
    """10 gauges x 6 months, positive rate lifted so every split has floods."""
    out = tmp_path_factory.mktemp("bundle_small")
    return synth.generate_bundle(10, 6, seed=2024, target_positive_rate=0.15,
                                 out_dir=str(out))


@pytest.fixture(scope="session")
def planted_bundle(tmp_path_factory):
    """Mid-size planted bundle shared by synth/pipeline tests."""
    out = tmp_path_factory.mktemp("bundle_planted")
    return synth.generate_bundle(15, 12, seed=77, target_positive_rate=0.12,
                                 out_dir=str(out), signal_strength=0.9)

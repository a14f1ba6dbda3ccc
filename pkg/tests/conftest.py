import pytest

from nodesal.dataio import generate_synthetic
from nodesal.trainer import TrainConfig, train


@pytest.fixture(scope="session")
def synthetic_ds():
    """The reference synthetic dataset: 200 per class, 50 features, 5 informative, shift 4."""
    return generate_synthetic(200, 50, 5, 4.0, seed=1)


@pytest.fixture(scope="session")
def trained(synthetic_ds):
    model, history = train(synthetic_ds, TrainConfig(seed=0))
    return model, history


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results):
        verdict, detail = results[name]
        terminalreporter.write_line(f"{name} {verdict}  {detail}")

import gzip
import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from rfim import data as rdata

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def _mlxtend_mnist_csv():
    try:
        import mlxtend
    except ImportError:
        return None
    path = Path(mlxtend.__file__).parent / "data" / "data" / "mnist_5k.csv.gz"
    return path if path.exists() else None


@pytest.fixture(scope="session")
def mnist_idx(tmp_path_factory):
    """``(images_path, labels_path, size)`` of real MNIST digits in IDX format.

    Uses the training files under ``$RFIM_DATA_DIR`` when present; otherwise
    the 5000-digit sample that ships with mlxtend is written out as IDX.
    """
    found = rdata.find_mnist("train")
    if found is not None:
        return str(found[0]), str(found[1]), 60000
    csv = _mlxtend_mnist_csv()
    if csv is None:
        pytest.skip(f"no MNIST files: set ${rdata.DATA_DIR_ENV} or install mlxtend")
    raw = np.loadtxt(gzip.open(csv), delimiter=",")
    ds = rdata.Dataset(raw[:, :-1] / 255.0, raw[:, -1].astype(np.int64))
    out = tmp_path_factory.mktemp("mnist")
    img, lab = out / "images-idx3-ubyte", out / "labels-idx1-ubyte"
    rdata.write_idx(ds, img, lab, (28, 28))
    return str(img), str(lab), len(ds)


@pytest.fixture(scope="session")
def mnist_env():
    return os.environ.get(rdata.DATA_DIR_ENV)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in list(sys.modules.items()) if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

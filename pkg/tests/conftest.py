import math

import numpy as np
import pytest

from dmdmatch.binarize import pack_grid
from dmdmatch.core import Flavor, Template

ACCEPTANCE_LINES = []


def random_float_template(rng, n, channels=12, soft_masks=True, f32_exact=True):
    mnt = np.column_stack([rng.uniform(0, 512, size=(n, 2)), rng.uniform(0, 2 * math.pi, n)])
    if f32_exact:
        mnt = mnt.astype(np.float32).astype(np.float64)
    desc = rng.standard_normal((n, channels, 8, 8)).astype(np.float32)
    if soft_masks:
        masks = rng.uniform(0, 1, size=(n, 8, 8)).astype(np.float32)
        masks[masks < 0.3] = 0.0
    else:
        masks = np.ones((n, 8, 8), dtype=np.float32)
    desc *= masks[:, None]
    return Template(mnt, desc, masks, Flavor.FLOAT32, channels, source_tag="random")


def random_binary_template(rng, n, channels=12):
    mnt = np.column_stack([rng.uniform(0, 512, size=(n, 2)), rng.uniform(0, 2 * math.pi, n)])
    mnt = mnt.astype(np.float32).astype(np.float64)
    desc = pack_grid(rng.random((n, channels, 8, 8)) < 0.5)
    masks = pack_grid(rng.random((n, 8, 8)) < 0.7)
    return Template(mnt, desc, masks, Flavor.PACKED_BINARY, channels, source_tag="random-bin")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

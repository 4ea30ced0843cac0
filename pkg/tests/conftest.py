import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from cnnpreimage import LayerMap

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def random_layer(rng, d, max_cond=50.0, bias_scale=0.5):
    while True:
        W = rng.normal(size=(d, d))
        if np.linalg.cond(W) < max_cond:
            return LayerMap(W, rng.normal(0.0, bias_scale, d))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@st.composite
def layers(draw, min_d=2, max_d=5):
    d = draw(st.integers(min_d, max_d))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_layer(np.random.default_rng(seed), d)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")

import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cascade_qed import SystemParams

settings.register_profile(
    "default", max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# room-temperature emitter: gamma* / gamma = 400 GHz / 160 MHz
SIV_GAMMA_STAR = 2500.0


def _params(g1, k1, g2, k2, gs, d):
    return SystemParams(g1, k1, g2, k2, gamma=1.0, gamma_star=gs, delta=d)


rate = st.floats(0.1, 3000.0)
coupling = st.floats(0.0, 1000.0)

params_strategy = st.builds(
    _params, coupling, rate, coupling, rate, st.floats(0.0, 1e4), st.floats(-500.0, 500.0)
)
# cheap to integrate with RK4
mild_params_strategy = st.builds(
    _params, st.floats(0.0, 20.0), st.floats(0.5, 50.0), st.floats(0.0, 20.0), st.floats(0.5, 50.0),
    st.floats(0.0, 100.0), st.floats(-10.0, 10.0),
)


@pytest.fixture
def reg1():
    return SystemParams(500.0, 50.0, 10.0, 1.0)


@pytest.fixture
def reg2():
    return SystemParams(500.0, 50.0, 150.0, 300.0)

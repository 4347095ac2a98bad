import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

coord = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord)


@st.composite
def convex_polygons(draw, min_points=3, max_points=10, min_area=1e-3):
    """Hull of a random cloud, rejected when (nearly) degenerate."""
    from icpbalance.geom import ConvexPolygon

    pts = draw(st.lists(point, min_size=min_points, max_size=max_points))
    poly = ConvexPolygon(pts)
    from hypothesis import assume

    assume(poly.area > min_area)
    return poly


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, one line per criterion."""
    import sys

    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(verdicts):
        ok, detail = verdicts[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")

import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from sepclt.solver import ModelParams
from sepclt.spectra import SpectralMeasure

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], max_examples=25
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def point(v=1.0):
    return SpectralMeasure.point_mass(v)


MP = {c: ModelParams(c, point(), point()) for c in (0.25, 0.5, 1.0, 2.0)}
SEPARABLE = ModelParams(
    0.5,
    SpectralMeasure.from_atoms([(1.0, 0.5), (2.0, 0.5)]),
    SpectralMeasure.from_atoms([(1.0, 0.5), (3.0, 0.5)]),
)
NEGATIVE = ModelParams(0.25, SpectralMeasure.from_atoms([(-1.0, 0.25), (1.0, 0.75)]), point())


@pytest.fixture(params=[0.25, 1.0, 2.0, "separable"], ids=lambda p: f"mp{p}" if p != "separable" else p)
def model(request):
    return SEPARABLE if request.param == "separable" else MP[request.param]


def measures(min_value=0.0, max_value=4.0, max_atoms=3, positive_max=True):
    """Small discrete measures with well separated atoms."""

    @st.composite
    def build(draw):
        k = draw(st.integers(1, max_atoms))
        vals = draw(
            st.lists(st.floats(min_value, max_value), min_size=k, max_size=k, unique=True).filter(
                lambda v: min(np.diff(sorted(v)), default=1.0) > 0.05
            )
        )
        if positive_max and max(vals) <= 0.1:
            vals = [*vals[:-1], 1.0] if 1.0 not in vals[:-1] else vals[:-1] + [2.0]
        wts = draw(st.lists(st.floats(0.1, 1.0), min_size=len(vals), max_size=len(vals)))
        return SpectralMeasure.from_atoms(zip(vals, wts))

    return build()


@st.composite
def models(draw, negative=False):
    c = draw(st.sampled_from([0.2, 0.5, 1.0, 1.7, 3.0]))
    h1 = draw(measures(-1.0 if negative else 0.2, 3.0))
    h2 = draw(measures(0.2, 3.0))
    return ModelParams(c, h1, h2)

"""공통 fixture: 작은 체와 ξ-형 생성자 쌍"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings as hyp_settings

from app.algebra.gf import make_field
from app.algebra.sl2 import Matrix
from app.algebra.words import GeneratorPair

hyp_settings.register_profile(
    "sl2c", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
hyp_settings.load_profile("sl2c")


def xi_pair(F, xi0, xi1) -> GeneratorPair:
    return GeneratorPair(
        Matrix.from_rows(F, [[xi0, -1], [1, 0]]),
        Matrix.from_rows(F, [[xi1, -1], [1, 0]]),
    )


@pytest.fixture
def F7():
    return make_field(7)


@pytest.fixture
def F8():
    return make_field(2, 3)


@pytest.fixture
def F256():
    return make_field(2, 8)


@pytest.fixture
def xi01(F7) -> GeneratorPair:
    """F₇ 위 ξ₀ = 0, ξ₁ = 1"""
    return xi_pair(F7, 0, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)

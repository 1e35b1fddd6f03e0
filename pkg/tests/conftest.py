import random
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from edsbench.coeffalg import Poly
from edsbench.extcalc import Form

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


small_fracs = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 4))


@st.composite
def polys(draw, nvars=3, max_degree=2, max_terms=4):
    exps = st.tuples(*[st.integers(0, max_degree)] * nvars).filter(lambda e: sum(e) <= max_degree)
    terms = draw(st.dictionaries(exps, small_fracs, max_size=max_terms))
    return Poly(nvars, terms)


@st.composite
def forms(draw, D=3, degree=1, max_degree=2):
    idxs = list(combinations(range(D), degree))
    chosen = draw(st.lists(st.sampled_from(idxs), unique=True, max_size=len(idxs))) if idxs else []
    return Form(D, degree, {i: draw(polys(D, max_degree, 3)) for i in chosen})


points = st.lists(small_fracs, min_size=3, max_size=3)


def random_poly(rng: random.Random, nvars: int, max_degree: int = 2, max_terms: int = 3) -> Poly:
    terms = {}
    for _ in range(rng.randint(0, max_terms)):
        exp = [0] * nvars
        for _ in range(rng.randint(0, max_degree)):
            exp[rng.randrange(nvars)] += 1
        terms[tuple(exp)] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
    return Poly(nvars, terms)


def random_form(rng: random.Random, D: int, degree: int, max_degree: int = 2) -> Form:
    return Form(D, degree, {idx: random_poly(rng, D, max_degree) for idx in combinations(range(D), degree)
                            if rng.random() < 0.7})


@pytest.fixture
def rng():
    return random.Random(1234)

import random

import pytest

from branchgroups.presets import ggs_preset, grigorchuk_preset, gupta_sidki_preset


@pytest.fixture(scope="session")
def grig():
    return grigorchuk_preset()


@pytest.fixture(scope="session")
def gs():
    return gupta_sidki_preset()


@pytest.fixture(scope="session")
def ggs5():
    return ggs_preset(5, (1, 0, 0, 1))


@pytest.fixture
def rng():
    return random.Random(20240817)


def random_word(preset, rng, max_len=20):
    names = list(preset.gen_names)
    from branchgroups.words import Word

    letters = [(g, 1) for g in names]
    factors = tuple(rng.choice(letters) for _ in range(rng.randrange(max_len + 1)))
    return Word(preset, factors)

import random

import pytest

from xlayer.wire_codec import RssReading, RssVector


def make_random_vector(rng: random.Random, max_aps: int = 12) -> RssVector:
    n = rng.randint(1, max_aps)
    ap_ids = sorted(rng.sample(range(1, 10_000), n))
    return RssVector(
        RssReading(ap, rng.randint(-15000, 0), rng.randint(1, 2**40))
        for ap in ap_ids
    )


@pytest.fixture
def rng():
    return random.Random(0xC0FFEE)

import numpy as np
from hypothesis import strategies as st

from privagg import VoteHistogram


@st.composite
def histograms(draw, max_classes=5, max_total=50):
    """Random small vote histograms (m >= 2, at least one vote)."""
    m = draw(st.integers(min_value=2, max_value=max_classes))
    counts = draw(
        st.lists(st.integers(min_value=0, max_value=max_total), min_size=m, max_size=m)
        .filter(lambda c: 0 < sum(c) <= max_total)
    )
    return VoteHistogram(tuple(counts))


def rng(seed=0):
    return np.random.default_rng(seed)

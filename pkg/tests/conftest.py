from __future__ import annotations

import random

from hypothesis import settings, strategies as st

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def corpora(draw, max_alphabet=8, max_trajs=8, max_len=30, min_len=1):
    """(alphabet_size, list of action tuples) with every symbol below alphabet_size."""
    k = draw(st.integers(2, max_alphabet))
    n = draw(st.integers(1, max_trajs))
    trajs = [
        tuple(draw(st.lists(st.integers(0, k - 1), min_size=min_len, max_size=max_len)))
        for _ in range(n)
    ]
    return k, trajs


def random_corpus(rng: random.Random, max_alphabet=8, max_trajs=50, max_len=60):
    k = rng.randint(2, max_alphabet)
    trajs = []
    for _ in range(rng.randint(1, max_trajs)):
        trajs.append(tuple(rng.randrange(k) for _ in range(rng.randint(1, max_len))))
    return k, trajs


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

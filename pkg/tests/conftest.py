"""Shared fixtures. The paper-shape corpus is expensive, so it is built once
per session and shared between the corpus, evaluation and acceptance tests."""

from __future__ import annotations

import pytest

from mailtriage.synth import SynthCorpus, synth_corpus


@pytest.fixture(scope="session")
def paper_corpus() -> SynthCorpus:
    return synth_corpus("paper-shape", seed=1)


@pytest.fixture(scope="session")
def mini_corpus() -> SynthCorpus:
    return synth_corpus("mini", seed=3)

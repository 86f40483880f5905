"""Shared fixtures: a session-scoped corpus plus trained models.

The corpus build and both trainings are deterministic, so every test run
sees identical artifacts.
"""

import re

import numpy as np
import pytest

from foldplan import dataset
from foldplan.actions import Vocabulary
from foldplan.policy import train_mle


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus") / "main"
    dataset.build_corpus(out, seed=0)
    return out


@pytest.fixture(scope="session")
def corpus_programs(corpus_dir):
    return dataset.load_corpus(corpus_dir)


@pytest.fixture(scope="session")
def train_records(corpus_dir):
    return dataset.load_transitions(corpus_dir, split="train")


@pytest.fixture(scope="session")
def test_records(corpus_dir):
    return dataset.load_transitions(corpus_dir, split="test")


@pytest.fixture(scope="session")
def shared_vocab(corpus_programs):
    nv = max(p["pattern"].pattern.n_vertices for p in corpus_programs)
    ne = max(p["pattern"].pattern.n_edges for p in corpus_programs)
    return Vocabulary(nv, ne)


def _expert_of(doc):
    return dataset.ExpertProgram(
        pattern=doc["pattern"], goal=doc["goal"], actions=tuple(doc["actions"]),
        category=doc["category"], tier=doc["tier"])


@pytest.fixture(scope="session")
def trained_policy(corpus_programs, shared_vocab):
    pairs = [dataset.training_pairs(_expert_of(doc))
             for doc in corpus_programs if doc["split"] == "train"]
    return train_mle(pairs, shared_vocab)


@pytest.fixture(scope="session")
def trained_wm(train_records):
    from foldplan.world_model import train

    model, history = train(train_records[:5000], epochs=300, seed=0)
    assert history[-1] <= history[0]
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Print one pass/fail line per acceptance criterion."""
    found = {}
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            m = re.search(r"test_criterion_(\d+)", rep.nodeid)
            if m:
                found[int(m.group(1))] = outcome == "passed"
    if not found:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(found):
        terminalreporter.write_line(
            f"criterion {n:2d}: {'PASS' if found[n] else 'FAIL'}")

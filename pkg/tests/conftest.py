"""Shared fixtures and the acceptance verdict summary.

Training is the slow part of this suite, so trained models and generated
splits are session-scoped. Tests must not mutate them.
"""

import pytest

from mixrank.gbdt import GbdtTrainConfig, train_gbdt
from mixrank.synthgen import GeneratorSpec, generate

ACCEPTANCE_VERDICTS: list = []


def record_verdict(line: str) -> None:
    ACCEPTANCE_VERDICTS.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    # keep the acceptance verdicts visible even though capture eats them
    if ACCEPTANCE_VERDICTS:
        terminalreporter.write_sep("-", "acceptance checks")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_spec():
    return GeneratorSpec(
        num_recruiters=12,
        num_contracts=5,
        queries_per_recruiter=8,
        candidates_per_query=20,
        num_ltr_features=6,
        interaction_spec=((("ltr", "f0"), ("ltr", "f1"), 1.5),),
        seed=7,
    )


@pytest.fixture(scope="session")
def small_split(small_spec):
    """(train, validation, test, truth) from one deterministic draw."""
    return generate(small_spec)


@pytest.fixture(scope="session")
def train_set(small_split):
    return small_split[0]


@pytest.fixture(scope="session")
def gbdt_model(train_set):
    cfg = GbdtTrainConfig(num_trees=25, max_depth=3, learning_rate=0.2, seed=3)
    return train_gbdt(train_set, cfg)

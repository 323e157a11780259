import pytest

from strataflow.strata import StratumSpec, StructureConstantTable, derive_relations
from strataflow.cohomology import linearize


@pytest.fixture(scope="session")
def rs13():
    """Window-13 relation sets for the three genera under test."""
    return {g: derive_relations(StratumSpec(g, window=13)) for g in (0, 1, 2)}


@pytest.fixture(scope="session")
def spec13():
    return {g: StratumSpec(g, window=13) for g in (0, 1, 2)}


@pytest.fixture(scope="session")
def table13(spec13, rs13):
    return {g: StructureConstantTable(spec13[g], rs13[g]) for g in (0, 1, 2)}


@pytest.fixture(scope="session")
def trs13(rs13):
    return {g: linearize(rs13[g]) for g in (0, 1, 2)}

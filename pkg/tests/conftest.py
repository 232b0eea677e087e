import numpy as np
import pytest

from svydiff.ingest import MicrodataTable, Occupancy, UnitRecord


def unit(geoid="01001", status="O", persons=None, weight=1.0, reps=(1.0, 1.0)):
    """One UnitRecord with sensible defaults for hand-built fixtures."""
    if persons is None:
        persons = 0 if status == "V" else 2
    return UnitRecord(
        geoid=geoid,
        status=Occupancy(status),
        persons=persons,
        weight=weight,
        rep_weights=tuple(float(r) for r in reps),
    )


def table_of(*records):
    return MicrodataTable.from_records(records)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)

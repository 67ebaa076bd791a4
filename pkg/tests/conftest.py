import sys
from pathlib import Path

import pytest

from fedrank.core import Document, QueryGroup

sys.path.insert(0, str(Path(__file__).parent))

DATA = Path(__file__).parent / "data"

# records r1..r4: label, binary features f1..f4
TOY_ROWS = [
    ("r1", 1, (1, 0, 1, 0)),
    ("r2", 1, (1, 0, 1, 1)),
    ("r3", 0, (0, 1, 1, 1)),
    ("r4", 0, (0, 0, 0, 0)),
]

DIVERSITY_LISTS = {
    "list1": "AABBBCCC",
    "list2": "ABCDABCD",
    "list3": "AABBCCDD",
}
DIVERSITY_LABELS = (1, 0, 0, 1, 1, 0, 1, 0)


def toy_query() -> QueryGroup:
    docs = tuple(
        Document(rid, None, {i: float(v) for i, v in enumerate(feats) if v}, label)
        for rid, label, feats in TOY_ROWS
    )
    return QueryGroup("toy", docs)


@pytest.fixture
def toy():
    return toy_query()


@pytest.fixture
def data_dir():
    return DATA

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expected_corpus import CORPUS_ROOT  # noqa: E402


@pytest.fixture(scope="session")
def corpus_root() -> Path:
    return CORPUS_ROOT


@pytest.fixture(scope="session")
def corpus_occurrences(corpus_root):
    """Every occurrence extracted from the fixture corpus, path-sorted."""
    from promptset.extractors import extract_all

    occurrences = []
    for path in sorted(corpus_root.rglob("*.py")):
        rel = path.relative_to(corpus_root).as_posix()
        occurrences.extend(extract_all(rel, path.read_bytes(), corpus_root))
    return occurrences

import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"
if str(SCRIPTS) not in sys.path:
    sys.path.insert(0, str(SCRIPTS))


@pytest.fixture(scope="session")
def pipeline_fixture(tmp_path_factory):
    """Synthetic facts/corpus/predictions/embeddings built once per session."""
    import make_fixtures

    dest = tmp_path_factory.mktemp("fixture")
    make_fixtures.build(dest, seed=7)
    return dest

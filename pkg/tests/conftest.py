from __future__ import annotations

import pytest

from promptsplit import synthetic


@pytest.fixture(scope="session")
def facsimile():
    return synthetic.build_facsimile_manifest()

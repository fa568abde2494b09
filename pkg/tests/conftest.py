import pytest

from diracmul.algebra import build_table_from_generators
from diracmul.fastmult import assemble_pipeline, verify_pipeline


@pytest.fixture(scope="session")
def table():
    return build_table_from_generators()


@pytest.fixture(scope="session")
def verified_pipelines():
    """All three levels, assembled once and symbolically verified."""
    pipelines = {}
    for level in (1, 2, 3):
        pipe = assemble_pipeline(level)
        report = verify_pipeline(pipe)
        assert report.ok, report.summary()
        pipelines[level] = pipe
    return pipelines

import pytest

from suspshift.generator import GeneratorModel
from suspshift.instances import (
    build_marked_binary_instance,
    build_two_valued_instance,
    sturmian_root2_flow,
)


@pytest.fixture(scope="session")
def root2_flow():
    return sturmian_root2_flow()


@pytest.fixture(scope="session")
def two_valued_model(root2_flow):
    return build_two_valued_instance(flow=root2_flow)


@pytest.fixture(scope="session")
def marked_model(root2_flow):
    return build_marked_binary_instance(flow=root2_flow)


@pytest.fixture(scope="session")
def gen_model(marked_model):
    return GeneratorModel(marked_model)

import pytest

import edgeofchaos as eoc


@pytest.fixture(scope="session")
def tanh_act():
    return eoc.tanh_activation()


@pytest.fixture(scope="session")
def mnist12k():
    """The bundled 12k-example MNIST training slice."""
    return eoc.load_mnist(*eoc.bundled_mnist_paths())

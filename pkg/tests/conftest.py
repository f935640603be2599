import pytest

from minilang.engine import Engine
from minilang.kernel import Kernel
from minilang.theoryfile import builtin_registry


@pytest.fixture(scope="session")
def registry():
    return builtin_registry()


@pytest.fixture()
def engine(registry):
    return Engine(registry)


@pytest.fixture()
def arith(registry):
    return registry.get("arith")


@pytest.fixture()
def prop_demo(registry):
    return registry.get("prop_demo")


@pytest.fixture()
def sqrt2(registry):
    return registry.get("sqrt2_axioms")


@pytest.fixture()
def order_demo(registry):
    return registry.get("order_demo")


@pytest.fixture()
def kernel_arith(arith):
    return Kernel(arith)


@pytest.fixture()
def kernel_prop(prop_demo):
    return Kernel(prop_demo)


import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import threading

import pytest

from anchor_edit.helper.utilities import *


def test_run_once():
    calls = []

    @run_once
    def setup(value):
        calls.append(value)
        return value * 2

    assert setup(3) == 6
    assert setup(5) == 6
    assert calls == [3]


def test_lazy_importer():
    math = LazyImporter('math')
    assert math._module is None
    assert math.sqrt(9.0) == 3.0
    assert math._module is not None
    with pytest.raises(ModuleNotFoundError):
        LazyImporter('no_such_module_here').anything


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_ordered_map_keeps_input_order(threads):
    barrier = threading.Barrier(min(threads, 4)) if threads > 1 else None

    def slow_square(x):
        if barrier is not None and x < 4:
            barrier.wait(timeout=5)
        return x * x

    assert ordered_map(slow_square, range(10), threads) == [x * x for x in range(10)]


def test_ordered_map_propagates_errors():
    def fail_on_three(x):
        if x == 3:
            raise ValueError(x)
        return x

    with pytest.raises(ValueError):
        ordered_map(fail_on_three, range(5), threads=3)

import pytest
from testtools import ExpectedException
from testtools.assertions import assert_that
from testtools.matchers import Equals

from posepick._workers import ordered_map


def square(x):
    return x * x


class TestOrderedMap(object):
    @pytest.mark.parametrize('workers', [1, 4])
    def test_keeps_order(self, workers):
        items = list(range(37))
        assert_that(ordered_map(square, items, workers),
                    Equals([x * x for x in items]))

    def test_single_item(self):
        assert_that(ordered_map(square, [3], 8), Equals([9]))

    def test_empty(self):
        assert_that(ordered_map(square, [], 4), Equals([]))

    def test_bad_workers(self):
        with ExpectedException(ValueError, r'workers must be >= 1, got 0'):
            ordered_map(square, [1], 0)

import numpy as np
import pytest

import roast


class SessionCaches:
    """Memoized heavy objects shared across the whole test session."""

    def __init__(self):
        self._store = {}

    def op(self, n, w):
        return self._get(("op", n, w), lambda: roast.build_prolate(n, w))

    def dpss(self, n, w, k=None):
        key = ("dpss", n, w)
        full = self._get(key, lambda: roast.build_dpss(n, w, n))
        return full if k is None else full

    def spectrum(self, n, w):
        return self._get(("spec", n, w),
                         lambda: roast.singular_decay_report(n, w))

    def cross(self, n, w):
        def make():
            return roast.cross_operator_dense(self.op(n, w),
                                              roast.build_band_split(n, w))
        return self._get(("cross", n, w), make)

    def roast(self, n, w, r, method="svd_fb"):
        return self._get(("roast", n, w, r, method),
                         lambda: roast.build_roast(n, w, r, method))

    def _get(self, key, make):
        if key not in self._store:
            self._store[key] = make()
        return self._store[key]


@pytest.fixture(scope="session")
def caches():
    return SessionCaches()


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)

import pytest

from zigzag_engine.lemma_verify import REGIMES, scan_ap

_cache = {}


def regime_instance(p, r, regime):
    """First digit-scanned a_p for (p, r) landing in the named regime (cached)."""
    key = (p, r, regime)
    if key not in _cache:
        _cache[key] = scan_ap(p, r, REGIMES[regime])
    return _cache[key]


@pytest.fixture
def inst_for():
    return regime_instance

import logging
import os

from mirm import config


def test_thread_count_from_the_environment():
    assert config._threads("3") == 3
    assert config._threads("0") == 1
    assert config._threads(None) == (os.cpu_count() or 1)


def test_malformed_thread_count_falls_back(caplog):
    with caplog.at_level(logging.WARNING, logger="mirm.config"):
        assert config._threads("many") == (os.cpu_count() or 1)
    assert "MIRM_THREADS" in caplog.text

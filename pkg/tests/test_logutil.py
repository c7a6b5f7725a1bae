import logging

from gpboard.logutil import LOGGER_NAME, get_logger, set_verbosity


def test_verbosity_flags_raise_the_level():
    log = get_logger()
    assert log is get_logger()
    assert log.name == LOGGER_NAME
    try:
        log.setLevel(logging.WARNING)
        set_verbosity(0)
        assert log.level == logging.WARNING
        set_verbosity(1)
        assert log.level == logging.INFO
        set_verbosity(3)
        assert log.level == logging.DEBUG
    finally:
        log.setLevel(logging.WARNING)

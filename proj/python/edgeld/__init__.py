"""Edge statistics and large deviations of high-temperature gases and tridiagonal matrices."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401


def run(source, workers=1):
    """Parse a JSON configuration string and run it in memory."""
    return run_experiment(parse_config(source), workers)  # noqa: F405

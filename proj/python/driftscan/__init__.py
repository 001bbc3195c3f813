from ._driftscan import *  # noqa: F401,F403
from ._driftscan import __doc__  # noqa: F401

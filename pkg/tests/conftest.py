import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "helpers"))

from state_builders import *  # noqa: F401,F403  (shared fixtures)

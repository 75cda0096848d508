"""
Includes definitions of the data paths.
"""

from os.path import join, dirname
from pathlib import Path

from ._version import __version__

# Define paths
PATH = join(dirname(__file__), '..', 'data')
SYNTHETIC_PATH = join(PATH, 'synthetic')
RUNS_PATH = join(PATH, 'runs')

# Create paths
for path in (PATH, SYNTHETIC_PATH, RUNS_PATH):
    Path(path).mkdir(exist_ok=True)

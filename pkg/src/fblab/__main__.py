"""``python -m fblab``."""

import sys

from .cli import main

sys.exit(main())

"""Allow `python -m pgl` to behave like the `pgl` console script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())

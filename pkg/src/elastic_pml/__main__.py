"""Allow ``python -m elastic_pml``."""

import sys

from .cli import main

sys.exit(main())

"""Allow ``python -m eedi_lab``."""

import sys

from eedi_lab.cli import main

sys.exit(main())

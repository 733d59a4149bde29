import sys

from csmkit.cli import main

sys.exit(main())

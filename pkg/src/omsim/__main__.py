import sys

from omsim.cli import main

sys.exit(main())

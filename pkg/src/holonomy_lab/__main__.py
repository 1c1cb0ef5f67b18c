import sys

from holonomy_lab.cli import main

sys.exit(main())

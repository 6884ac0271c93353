import sys

from kbv.cli import main

sys.exit(main())

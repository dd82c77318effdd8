import sys

from stick.cli import main

sys.exit(main())

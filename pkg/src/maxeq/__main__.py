import sys

from maxeq.cli import main

sys.exit(main())

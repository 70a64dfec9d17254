import sys

from qrsearch.cli import main

sys.exit(main())

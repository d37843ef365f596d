import sys

from mopelab.cli import main

sys.exit(main())

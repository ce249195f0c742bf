import sys

from pottscolor.cli import main

sys.exit(main())

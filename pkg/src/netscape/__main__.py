import sys

from netscape.cli import main

sys.exit(main())

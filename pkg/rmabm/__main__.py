import sys

from rmabm.cli import main


sys.exit(main())

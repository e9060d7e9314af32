import sys

from twinnav.cli import main

sys.exit(main())

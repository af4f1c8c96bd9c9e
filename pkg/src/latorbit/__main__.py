import sys

from latorbit.cli import main

sys.exit(main())

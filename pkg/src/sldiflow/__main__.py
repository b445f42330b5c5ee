import sys

from sldiflow.cli import main

sys.exit(main())

import sys

from jointee.cli import main

sys.exit(main())

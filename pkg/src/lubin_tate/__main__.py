import sys

from lubin_tate.cli import main

sys.exit(main())

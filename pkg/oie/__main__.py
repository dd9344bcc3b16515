import sys

from oie.main import main

sys.exit(main())

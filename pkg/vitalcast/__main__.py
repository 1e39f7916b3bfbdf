import sys

from vitalcast.main import main

sys.exit(main())

""" ``python -m cfamc`` """

import sys

from cfamc.cli.commands import main

if __name__ == '__main__':
    sys.exit(main())

import sys

from bevtrack.cli.main import main

if __name__ == "__main__":
    sys.exit(main())

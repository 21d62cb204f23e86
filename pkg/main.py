"""CLI entrypoint for the horizon forecasting tool."""

import sys

from app.cli import main

if __name__ == "__main__":
    # Exit code: 0 ok, 2 input error, 3 fit failure, 4 theorem violation.
    sys.exit(main())

"""
Main entry point for the clustering toolkit (same as the ``bench`` console script).
"""
import sys

from app.cli.bench import main as cli_main


if __name__ == "__main__":
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        sys.exit(130)

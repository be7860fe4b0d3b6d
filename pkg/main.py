"""
Main entry point for the typoline command line.
"""
import sys

from typoline.cli import main

if __name__ == "__main__":
    sys.exit(main())

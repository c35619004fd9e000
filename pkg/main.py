#!/usr/bin/env python3
"""
Main entry point for dlglm
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from cli.main import main as cli_main


def main() -> None:
    """Entry point for the command line - wrapper that exits with the stage code"""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""
Annulus Extremal Engine - Command-Line Entry Point
"""

import sys

from app.cli import main

if __name__ == "__main__":
    sys.exit(main())

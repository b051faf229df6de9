#!/usr/bin/env python3
"""
Run the signlab command line from a checkout.
Usage: python run_signlab.py <command> [options]
"""

import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

if __name__ == "__main__":
    import warnings

    # matplotlib font cache notices
    warnings.filterwarnings("ignore", category=UserWarning, module="matplotlib")

    from src.main import main

    sys.exit(main())

#!/usr/bin/env python3
import os
import sys

import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Fast suite by default; pass --all to include the slow acceptance checks
args = ["tests"]
if "--all" not in sys.argv[1:]:
    args += ["-m", "not slow"]

sys.exit(pytest.main(args))

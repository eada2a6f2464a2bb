#!/usr/bin/env python3
"""
Run all wdrc tests.
"""

import sys
import os

import pytest

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

SUITES = [
    ("Model", "test_model.py"),
    ("Finite horizon", "test_finite_horizon.py"),
    ("Steady state", "test_steady_state.py"),
    ("Lambda* and H-infinity", "test_hinf.py"),
    ("Simulation", "test_simulate.py"),
    ("Power grid", "test_powergrid.py"),
    ("Configuration", "test_config.py"),
    ("Command line", "test_cli.py"),
]


def main():
    print("=" * 70)
    print("WDRC - FULL TEST SUITE")
    print("=" * 70)

    here = os.path.dirname(os.path.abspath(__file__))
    failed = []
    for title, filename in SUITES:
        print(f"\n\n--- Running {title} Tests ---\n")
        if pytest.main(["-q", os.path.join(here, filename)]) != 0:
            failed.append(title)

    print("\n" + "=" * 70)
    print("FULL TEST SUITE SUMMARY")
    print("=" * 70)
    print(f"\nTest groups passed: {len(SUITES) - len(failed)}/{len(SUITES)}")

    if not failed:
        print("\nAll test suites passed!")
        return 0
    print(f"\n{len(failed)} test suite(s) had failures: {', '.join(failed)}")
    return 1


if __name__ == "__main__":
    sys.exit(main())

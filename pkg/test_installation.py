#!/usr/bin/env python3
"""
Test script to verify the Complex-Action Lab installation
"""

import importlib
import sys

REQUIRED_MODULES = ["numpy", "scipy", "dotenv"]

LOCAL_MODULES = [
    "errors",
    "parallel",
    "config",
    "action_core",
    "propagator",
    "classical",
    "selection",
    "tape",
    "scenarios",
    "scenario_runner",
    "result_writer",
    "sweep_processor",
    "main",
]


def find_failed_imports(modules):
    """Import every module and return the names that failed."""
    failed_imports = []
    for module in modules:
        try:
            importlib.import_module(module)
            print(f"✓ {module}")
        except ImportError as e:
            print(f"✗ {module}: {e}")
            failed_imports.append(module)
    return failed_imports


def check_numerics():
    """Run a tiny propagator so a broken BLAS or scipy build shows up early."""
    from action_core import ComplexPotential, LatticeConfig
    from propagator import ENGINE_SPLIT_STEP, total_probability

    lattice = LatticeConfig(n_t=4, dt=0.1, x_min=-1.0, dx=0.5, n_x=5)
    totals = total_probability(lattice, ComplexPotential.harmonic(), engine=ENGINE_SPLIT_STEP)
    return bool(abs(totals - 1.0).max() <= 1e-10)


def test_imports():
    assert find_failed_imports(REQUIRED_MODULES) == []


def test_local_modules():
    assert find_failed_imports(LOCAL_MODULES) == []


def test_numerics():
    assert check_numerics()


def main():
    """Run all checks."""
    print("Complex-Action Lab - Installation Test")
    print("=" * 50)
    print(f"Python version: {sys.version}")
    if sys.version_info < (3, 9):
        print("⚠ Warning: Python 3.9 or higher is required")

    print("\nTesting module imports...")
    failed_required = find_failed_imports(REQUIRED_MODULES)
    print("\nTesting local module imports...")
    failed_local = find_failed_imports(LOCAL_MODULES)
    numerics_ok = not failed_required and not failed_local and check_numerics()

    print("\n" + "=" * 50)
    print("Test Summary:")
    if numerics_ok:
        print("✓ All tests passed! Installation is complete.")
        print("\nYou can now run the lab:")
        print("python main.py run --config configs/propagator_check.json")
        return True

    print("✗ Some tests failed. Please fix the issues below:")
    if failed_required:
        print(f"\nMissing required modules: {', '.join(failed_required)}")
        print("Install them with: pip install -r requirements.txt")
    if failed_local:
        print(f"\nMissing local modules: {', '.join(failed_local)}")
        print("Make sure all Python files are in the same directory")
    if not failed_required and not failed_local:
        print("\nThe unitary propagator check failed; check the numpy/scipy installation")
    return False


if __name__ == "__main__":
    success = main()
    sys.exit(0 if success else 1)

#!/usr/bin/env python3
"""
Installation check
Run this before the test suite to confirm dependencies and module imports
"""

import sys


def check_imports():
    """Check that every required package can be imported"""
    print("Checking package imports...")

    packages = [
        ('numpy', 'NumPy'),
        ('scipy', 'SciPy'),
        ('pandas', 'Pandas'),
        ('networkx', 'NetworkX'),
        ('pytest', 'pytest'),
        ('hypothesis', 'Hypothesis'),
    ]

    failed = []

    for package, name in packages:
        try:
            __import__(package)
            print(f"  ✓ {name}")
        except ImportError as e:
            print(f"  ✗ {name} - FAILED")
            failed.append((name, str(e)))

    return failed


def check_modules():
    """Check that the project modules import cleanly"""
    print("\nChecking project modules...")

    modules = [
        'errors',
        'graph_core',
        'instances',
        'dangling_net',
        'ca_general',
        'ca_tree',
        'ca_pathwidth',
        'ca_doubling',
        'hierarchy',
        'ust_eval',
        'verify',
        'cli',
    ]

    failed = []

    for module in modules:
        try:
            __import__(module)
            print(f"  ✓ {module}.py")
        except ImportError as e:
            print(f"  ✗ {module}.py - FAILED")
            failed.append((module, str(e)))

    return failed


def run_quick_check():
    """Solve the tight tree fixture and compare against its known detour"""
    print("\nRunning quick solver check...")

    try:
        from instances import fixture_tree_tight
        from ca_general import detour
        from ca_tree import solve_tree
        from verify import check_assignment

        delta, eps = 100.0, 1.0
        inst, witness = fixture_tree_tight(10.0, delta, eps)
        asg, _ = solve_tree(inst)
        check = check_assignment(inst, asg)
        value = detour(inst, asg, witness)

        print(f"  ✓ Tree solver assigned {inst.num_clusters} clusters (valid: {check.valid})")
        print(f"    Witness detour: {value:g} (expected {4 * delta - 2 * eps:g})")

        if abs(value - (4 * delta - 2 * eps)) > 1e-9 or not check.valid:
            return [('Quick check', f'unexpected detour {value}')]
        return []

    except Exception as e:
        print(f"  ✗ Quick check failed: {str(e)}")
        import traceback
        traceback.print_exc()
        return [('Quick check', str(e))]


def main():
    """Run all checks"""
    print("=" * 60)
    print("UST Toolkit Installation Check")
    print("=" * 60)

    all_failures = []
    all_failures.extend(check_imports())
    all_failures.extend(check_modules())
    all_failures.extend(run_quick_check())

    print("\n" + "=" * 60)
    if not all_failures:
        print("✓ ALL CHECKS PASSED!")
        print("\nRun the test suite with:")
        print("  pytest")
        print("or the acceptance battery with:")
        print("  python cli.py suite")
    else:
        print("✗ SOME CHECKS FAILED")
        print("\nFailed components:")
        for name, error in all_failures:
            print(f"  - {name}: {error}")
        print("\nInstall the dependencies with: pip install -r requirements.txt")
    print("=" * 60)

    return 0 if not all_failures else 1


if __name__ == "__main__":
    sys.exit(main())

"""
Setup Verification Script
Run this to check if your environment is properly configured
"""

import sys
import os


def check_python_version():
    """Check if Python version is 3.9+"""
    version = sys.version_info
    if version.major >= 3 and version.minor >= 9:
        print("✅ Python version: {}.{}.{} (Compatible)".format(
            version.major, version.minor, version.micro
        ))
        return True
    else:
        print("❌ Python version: {}.{}.{} (Requires 3.9+)".format(
            version.major, version.minor, version.micro
        ))
        return False


def check_dependencies():
    """Check if required packages are installed"""
    required_packages = {
        'numpy': 'numpy',
        'scipy': 'scipy',
        'networkx': 'networkx',
        'pandas': 'pandas',
        'dotenv': 'python-dotenv',
        'pydantic': 'pydantic'
    }

    all_installed = True

    for module, package in required_packages.items():
        try:
            __import__(module)
            print(f"✅ {package} is installed")
        except ImportError:
            print(f"❌ {package} is NOT installed")
            all_installed = False

    return all_installed


def check_env_file():
    """Report the .env overrides; every setting has a default"""
    if not os.path.exists('.env'):
        print("⚠️  .env file not found (optional - defaults apply)")
    else:
        print("✅ .env file exists")

    from dotenv import load_dotenv
    load_dotenv()

    for name, default in [("MARCHON_OUTPUT_DIR", "runs"), ("MARCHON_DATA_DIR", "data_cache"),
                          ("MARCHON_JOBS", "1"), ("MARCHON_SEEDS", "20")]:
        value = os.getenv(name)
        if value is None:
            print(f"   {name} = {default} (default)")
        else:
            print(f"   {name} = {value}")

    jobs = os.getenv("MARCHON_JOBS", "1")
    if not jobs.isdigit() or int(jobs) < 1:
        print("❌ MARCHON_JOBS must be a positive integer")
        return False
    return True


def check_project_structure():
    """Check if all required files exist"""
    required_files = [
        'config.py',
        'main.py',
        'requirements.txt',
        'network/__init__.py',
        'network/topology.py',
        'network/spectral.py',
        'network/walker.py',
        'optim/__init__.py',
        'optim/mirror.py',
        'optim/losses.py',
        'optim/schedules.py',
        'optim/engine.py',
        'dataio/__init__.py',
        'dataio/libsvm.py',
        'dataio/manifest.json',
        'experiments/__init__.py',
        'experiments/orchestrator.py'
    ]

    all_exist = True

    for file in required_files:
        if os.path.exists(file):
            print(f"✅ {file}")
        else:
            print(f"❌ {file} is missing")
            all_exist = False

    return all_exist


def check_local_datasets():
    """Compare locally fetched datasets with the published statistics"""
    try:
        from dataio import check_statistics, load_dataset, load_manifest, local_path
    except ImportError as e:
        print(f"⏭️  Skipping dataset check ({str(e)})")
        return None

    found = False
    ok = True
    for name in sorted(load_manifest()):
        path = local_path(name)
        if not path.exists():
            print(f"⏭️  {name} not fetched (python main.py fetch {name})")
            continue
        found = True
        stats = check_statistics(name, load_dataset(path, normalized=False))
        if stats["ok"]:
            print(f"✅ {name}: {stats['rows']} rows, {stats['features']} features")
        else:
            print(f"❌ {name}: {stats['rows']} rows, {stats['features']} features "
                  f"(expected {stats['expected_rows']}, {stats['expected_features']})")
            ok = False
    return ok if found else None


def main():
    """Run all verification checks"""
    print("\n" + "="*70)
    print("🔍 MARKOV-CHAIN MIRROR DESCENT - SETUP VERIFICATION")
    print("="*70 + "\n")

    checks = {
        "Python Version": check_python_version(),
        "Dependencies": check_dependencies(),
        "Environment File": check_env_file(),
        "Project Structure": check_project_structure()
    }

    print("\n" + "-"*70)
    print("📊 VERIFICATION SUMMARY")
    print("-"*70)

    all_passed = all(checks.values())

    for check_name, passed in checks.items():
        status = "✅ PASSED" if passed else "❌ FAILED"
        print(f"{check_name}: {status}")

    # Dataset statistics only if the package imports
    if checks["Dependencies"] and checks["Project Structure"]:
        print("\n" + "-"*70)
        datasets = check_local_datasets()
        if datasets is not None:
            checks["Local Datasets"] = datasets
            all_passed = all_passed and datasets

    print("\n" + "="*70)

    if all_passed:
        print("✅ ALL CHECKS PASSED - Ready to run experiments!")
        print("="*70)
        print("\nTry: python main.py spectrum --topology complete --n 3 --weighting simple")
    else:
        print("❌ SOME CHECKS FAILED - Please fix the issues above")
        print("="*70)
        print("\nSetup instructions:")
        print("1. Install dependencies: pip install -r requirements.txt")
        print("2. Optionally create .env to override MARCHON_* settings")
        print("3. Run verification again: python verify_setup.py")

    print()

    return 0 if all_passed else 1


if __name__ == "__main__":
    sys.exit(main())

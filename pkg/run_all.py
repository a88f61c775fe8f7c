#!/usr/bin/env python3
# Quick script to run the full pipeline on the default configuration

import subprocess
import sys

CONFIG = "data/config/default_config.json"

print("🚀 Running the full pipeline...")

for command in ("solve", "poly", "figures", "verify"):
    print(f"\n▶ {command}")
    result = subprocess.run([sys.executable, "-m", "src.cli", command, "--config", CONFIG])
    if result.returncode != 0:
        print(f"❌ {command} exited with code {result.returncode}")
        sys.exit(result.returncode)

print("\n✅ All stages finished. Outputs are under output/")

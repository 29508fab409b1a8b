"""Box model against the Picard mild solution at T = 1.1 for k0 in {1, 3}."""
import sys

from maxagg.cli import main

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results/verify"
    codes = [main(["verify", "--k0", k0, "--T", "1.1", "--out", f"{out}/k0_{k0}"]) for k0 in ("1", "3")]
    sys.exit(max(codes))

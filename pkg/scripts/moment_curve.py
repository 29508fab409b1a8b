"""Run the 'moment-curve' recipe. Extra arguments are passed through, e.g. --out results --workers 3."""
import sys

from maxagg.cli import main

if __name__ == "__main__":
    sys.exit(main(["experiment", "--name", "moment-curve", *sys.argv[1:]]))

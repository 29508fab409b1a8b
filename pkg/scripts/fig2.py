"""Run the 'fig2' recipe. Extra arguments are passed through, e.g. --out results --workers 3."""
import sys

from maxagg.cli import main

if __name__ == "__main__":
    sys.exit(main(["experiment", "--name", "fig2", *sys.argv[1:]]))

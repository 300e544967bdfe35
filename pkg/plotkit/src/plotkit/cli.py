"""Render a figure from simulator run directories.

    plotkit --recipe fig2a --inputs runs/fig2a_width02 runs/fig2a_width04 \
            runs/fig2a_step --out fig2a.png

Exit codes: 0 success, 2 usage, 1 bad inputs.
"""

from __future__ import annotations

import argparse
import sys

from .recipes import RECIPES, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__.splitlines()[0])
    parser.add_argument("--recipe", required=True, choices=sorted(RECIPES))
    parser.add_argument("--inputs", required=True, nargs="+", help="run directories (with manifest.txt)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        out = render(args.recipe, args.inputs, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

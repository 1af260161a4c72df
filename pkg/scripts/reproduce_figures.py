"""Run the figure presets and write one CSV per curve plus an SVG per figure."""

import argparse
import logging
import time
from pathlib import Path

from wlmp.experiments import figure_recipes, run_recipe
from wlmp.plotting import sweep_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("figures", nargs="*", help="preset names (default: all)")
    ap.add_argument("--out", default="results")
    ap.add_argument("--realizations", type=int, help="override the preset's count")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    recipes = figure_recipes()
    names = args.figures or list(recipes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        t0 = time.perf_counter()
        results = run_recipe(recipes[name], args.seed, args.realizations, jobs=args.jobs)
        for res in results:
            (out / f"{name}_{res.label}.csv").write_text(res.to_csv(), encoding="utf-8")
        (out / f"{name}.svg").write_text(sweep_svg(results, name), encoding="utf-8")
        logging.info("%s: %d curves in %.0fs", name, len(results), time.perf_counter() - t0)


if __name__ == "__main__":
    main()

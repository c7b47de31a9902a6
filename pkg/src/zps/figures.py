"""Figure-reproduction recipes.

Each recipe is a JSON file in ``zps/recipes`` holding a CLI argument vector
and the name of its golden output.  ``run_recipe`` executes the argv into a
directory; ``compare_csv`` checks a produced CSV against a frozen golden.

Regenerate goldens with ``python3 -m zps.figures <outdir>``.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path

from . import cli

__all__ = ["compare_csv", "list_recipes", "load_recipe", "run_recipe"]


def list_recipes() -> list[str]:
    files = resources.files("zps").joinpath("recipes").iterdir()
    return sorted(f.name[:-5] for f in files if f.name.endswith(".json"))


def load_recipe(name: str) -> dict:
    path = resources.files("zps").joinpath("recipes", f"{name}.json")
    if not path.is_file():
        raise KeyError(f"no recipe named {name!r}")
    return json.loads(path.read_text())


def run_recipe(name: str, outdir: str | Path) -> Path:
    """Run a recipe, writing ``<outdir>/<golden>`` plus any sidecar; return the output path."""
    recipe = load_recipe(name)
    out = Path(outdir) / recipe["golden"]
    code = cli.run([*recipe["argv"], "--out", str(out)])
    if code != cli.EXIT_OK:
        raise RuntimeError(f"recipe {name} exited with status {code}")
    return out


def _cells(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def compare_csv(produced: str | Path, golden: str | Path, rtol: float = 1e-9,
                atol: float = 1e-12) -> list[str]:
    """Differences between two CSV files; numeric cells compare with tolerances."""
    a, b = _cells(Path(produced)), _cells(Path(golden))
    if len(a) != len(b):
        return [f"row count {len(a)} != {len(b)}"]
    problems = []
    for i, (ra, rb) in enumerate(zip(a, b)):
        if len(ra) != len(rb):
            problems.append(f"row {i}: width {len(ra)} != {len(rb)}")
            continue
        for j, (x, y) in enumerate(zip(ra, rb)):
            if x == y:
                continue
            try:
                fx, fy = float(x), float(y)
            except ValueError:
                problems.append(f"row {i} col {j}: {x!r} != {y!r}")
                continue
            if not math.isclose(fx, fy, rel_tol=rtol, abs_tol=atol):
                problems.append(f"row {i} col {j}: {fx!r} != {fy!r}")
    return problems


def main(argv: list[str] | None = None) -> None:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        sys.exit("usage: python3 -m zps.figures <outdir>")
    outdir = Path(argv[0])
    outdir.mkdir(parents=True, exist_ok=True)
    for name in list_recipes():
        print(run_recipe(name, outdir))


if __name__ == "__main__":
    main()

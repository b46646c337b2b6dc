"""Regenerate the bundled synthetic benchmark maps.

They share size and obstacle count with the public random-* benchmark maps but are
drawn here with a fixed seed, so the layout differs.
"""

import sys
from importlib.resources import files

from mapf_ir.graph import format_map, random_grid

MAPS = {
    "random-32-32-10": (32, 32, 102, 10),
    "random-32-32-20": (32, 32, 205, 20),
    "random-64-64-20": (64, 64, 826, 20),
}


def main(check: bool = False) -> int:
    root = files("mapf_ir").joinpath("maps")
    stale = 0
    for name, (w, h, obstacles, seed) in MAPS.items():
        text = format_map(random_grid(w, h, obstacles, seed))
        path = root.joinpath(f"{name}.map")
        if check:
            same = path.read_text() == text
            stale += not same
            print(f"{name}: {'ok' if same else 'differs'}")
        else:
            with open(str(path), "w") as fh:
                fh.write(text)
    return 1 if stale else 0


if __name__ == "__main__":
    sys.exit(main(check="--check" in sys.argv))

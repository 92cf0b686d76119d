#!/usr/bin/env python3
"""Regenerate the checked-in canonical topology file from its seed.

Usage: python scripts/make_canonical_dataset.py [out_path]
"""

import sys
from pathlib import Path

from malctrl.graphs import canonical_graph, save_graph

DEFAULT = Path(__file__).resolve().parent.parent / "src/malctrl/data/canonical_smart_home.json"


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else DEFAULT
    graph = canonical_graph()
    save_graph(graph, out)
    print(f"wrote {graph.node_count}-node canonical graph to {out}")


if __name__ == "__main__":
    main()

"""`plots render <figure_spec.json>`: pipeline artifacts to figure files.

A figure spec is a JSON object:

    {
      "kind": "image_grid" | "gather_triptych" | "medium_layout" | "sweep_grid",
      "inputs": ["run/image_norm.wrm", ...],     # artifact files (or run dirs
                                                 # for sweep_grid)
      "manifest": "run/manifest.json",           # reflector overlay source
      "out": "figures/comparison.png",
      "cmap": "viridis", "ncols": 2,             # optional
      "titles": [...], "source": 25, "method": "norm"
    }

Exit codes: 0 success, 2 bad spec or missing/mismatched inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import figures
from .reader import ArtifactError, read_manifest


def render(spec: dict) -> Path:
    kind = spec.get("kind")
    out = spec.get("out")
    if not kind or not out:
        raise ArtifactError("figure spec needs 'kind' and 'out'")
    manifest = (read_manifest(spec["manifest"])
                if spec.get("manifest") else None)
    if kind == "image_grid":
        return figures.render_image_grid(
            spec.get("inputs", []), out, manifest=manifest,
            cmap=spec.get("cmap", "viridis"), ncols=spec.get("ncols", 2),
            titles=spec.get("titles"))
    if kind == "gather_triptych":
        inputs = spec.get("inputs", [])
        if len(inputs) != 2:
            raise ArtifactError(
                "gather_triptych needs [data_true, data_ref] inputs")
        return figures.render_gather_triptych(
            inputs[0], inputs[1], out, source=spec.get("source"))
    if kind == "medium_layout":
        if manifest is None:
            raise ArtifactError("medium_layout needs a manifest")
        return figures.render_medium_layout(manifest, out)
    if kind == "sweep_grid":
        return figures.render_sweep_grid(
            spec.get("inputs", []), spec.get("method", "norm"), out,
            manifest=manifest, titles=spec.get("titles"))
    raise ArtifactError(f"unknown figure kind {kind!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plots")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("render", help="render a figure spec")
    sp.add_argument("spec", help="figure spec JSON file")
    args = parser.parse_args(argv)

    try:
        spec = json.loads(Path(args.spec).read_text())
        out = render(spec)
    except (ArtifactError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Figure construction from pipeline artifacts.

Every renderer is read-only and deterministic: a fixed Agg backend, fixed
panel geometry, and the config hash of every input stamped into the PNG
metadata.  Reflector outlines are drawn from the geometry recorded in the
run manifest, never recomputed.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import ArtifactError, config_hash, image_extent, read_artifact

DPI = 130


def _overlay_reflectors(ax, manifest):
    for refl in manifest.get("medium", {}).get("reflectors", []):
        x = [refl["x0"], refl["x1"]]
        z = [refl["z0"], refl["z1"]]
        if refl.get("kind") == "segment":
            ax.plot(x, z, color="w", lw=1.0, alpha=0.9)
        else:
            ax.plot([x[0], x[1], x[1], x[0], x[0]],
                    [z[0], z[0], z[1], z[1], z[0]],
                    color="w", lw=0.8, alpha=0.9)


def _overlay_array(ax, manifest):
    cfg = manifest.get("config", {})
    arr = cfg.get("array", {})
    m = arr.get("m", 49)
    aperture = arr.get("aperture", 30.0)
    width = manifest.get("medium", {}).get("width")
    if width is None:
        return
    xs = width / 2 + (np.arange(m) - (m - 1) / 2) * (aperture / max(m - 1, 1))
    ax.plot(xs, np.zeros_like(xs), marker="v", ms=2.5, lw=0,
            color="tab:blue", clip_on=False)


def _finish(fig, out_path, hashes):
    meta = {"waverom-inputs": ",".join(hashes)}
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=DPI, metadata=meta)
    plt.close(fig)
    return out_path


def render_image_grid(inputs, out_path, manifest=None, cmap="viridis",
                      ncols=2, titles=None):
    """Grid of image panels with reflector overlays; the comparison figure."""
    if not inputs:
        raise ArtifactError("no input images")
    panels = []
    hashes = []
    for path in inputs:
        values, header = read_artifact(path)
        if header.get("kind") in (None, "data_tensor", "block_matrix"):
            raise ArtifactError(f"{path} is not an image artifact")
        if np.all(np.isnan(values)):
            raise ArtifactError(f"{path} holds no evaluated pixels")
        panels.append((values, header))
        hashes.append(config_hash(header))
    if len(set(h for h in hashes if h)) > 1:
        raise ArtifactError("input images come from different runs")
    ncols = min(ncols, len(panels))
    nrows = -(-len(panels) // ncols)
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(4.2 * ncols, 3.2 * nrows),
                             squeeze=False, constrained_layout=True)
    for ax in axes.ravel()[len(panels):]:
        ax.set_axis_off()
    for i, (values, header) in enumerate(panels):
        ax = axes.ravel()[i]
        vals = np.ma.masked_invalid(values.T)
        kind = header.get("kind", "image")
        sym = kind != "norm"
        peak = float(np.max(np.abs(np.nan_to_num(values))))
        kw = {"vmin": -peak, "vmax": peak, "cmap": "RdBu_r"} if sym else \
             {"vmin": 0.0, "vmax": peak, "cmap": cmap}
        im = ax.imshow(vals, origin="upper", extent=image_extent(header),
                       aspect="equal", interpolation="nearest", **kw)
        if manifest is not None:
            _overlay_reflectors(ax, manifest)
        title = (titles[i] if titles and i < len(titles)
                 else _panel_title(header))
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("cross-range")
        ax.set_ylabel("range")
        fig.colorbar(im, ax=ax, shrink=0.85)
    return _finish(fig, out_path, hashes)


def _panel_title(header):
    kind = header.get("kind", "image")
    p = header.get("params", {})
    bits = [kind]
    if "tau" in p:
        bits.append(f"tau={p['tau']:.3g}")
    if "m" in p:
        bits.append(f"m={p['m']}")
    if "aperture" in p:
        bits.append(f"a={p['aperture']:g}")
    if p.get("noise"):
        bits.append(f"noise={p['noise']:g}")
    return "  ".join(bits)


def render_gather_triptych(data_true_path, data_ref_path, out_path,
                           source=None):
    """True / reference / difference trace gathers for one source."""
    D, head = read_artifact(data_true_path)
    D_ref, head_ref = read_artifact(data_ref_path)
    for h in (head, head_ref):
        if h.get("kind") != "data_tensor":
            raise ArtifactError("gather inputs must be data tensors")
    if D.shape != D_ref.shape:
        raise ArtifactError("data tensors have mismatched shapes")
    h1, h2 = config_hash(head), config_hash(head_ref)
    if h1 and h2 and h1 != h2:
        raise ArtifactError("data tensors come from different runs")
    m = head["m"]
    s = (m // 2) if source is None else source
    panels = [("true medium", D[:, s, :]),
              ("reference", D_ref[:, s, :]),
              ("difference", D[:, s, :] - D_ref[:, s, :])]
    fig, axes = plt.subplots(1, 3, figsize=(10.5, 3.6),
                             constrained_layout=True)
    peak = float(np.max(np.abs(panels[0][1])))
    tau = head.get("tau", 1.0)
    extent = (0.5, m + 0.5, D.shape[0] * tau, 0.0)
    for ax, (title, gather) in zip(axes, panels):
        ax.imshow(gather, origin="upper", aspect="auto", cmap="gray_r",
                  vmin=-0.35 * peak, vmax=0.35 * peak, extent=extent,
                  interpolation="nearest")
        ax.set_title(f"{title} (source {s + 1})", fontsize=9)
        ax.set_xlabel("receiver")
        ax.set_ylabel("time")
    return _finish(fig, out_path, [h1, h2])


def render_medium_layout(manifest, out_path):
    """Domain, reflectors and the sensor array from the run manifest."""
    med = manifest.get("medium")
    if not med:
        raise ArtifactError("manifest carries no medium description")
    fig, ax = plt.subplots(figsize=(5.2, 3.4), constrained_layout=True)
    ax.set_xlim(0, med["width"])
    ax.set_ylim(med["depth"], 0)
    ax.set_xlabel("cross-range")
    ax.set_ylabel("range")
    ax.set_title("medium and array layout", fontsize=10)
    for refl in med.get("reflectors", []):
        if refl.get("kind") == "segment":
            ax.plot([refl["x0"], refl["x1"]], [refl["z0"], refl["z1"]],
                    color="tab:red", lw=2.5)
        else:
            ax.fill([refl["x0"], refl["x1"], refl["x1"], refl["x0"]],
                    [refl["z0"], refl["z0"], refl["z1"], refl["z1"]],
                    color="tab:red")
    _overlay_array(ax, manifest)
    return _finish(fig, out_path, [manifest.get("config_hash", "")])


def render_sweep_grid(run_dirs, method, out_path, manifest=None,
                      titles=None):
    """One panel per sweep run for a single imaging method."""
    inputs = []
    for d in run_dirs:
        p = Path(d) / f"image_{method}.wrm"
        if not p.exists():
            raise ArtifactError(f"sweep run {d} lacks image_{method}.wrm")
        inputs.append(p)
    # panels from different runs on purpose: bypass the same-run check
    panels = [read_artifact(p) for p in inputs]
    hashes = [config_hash(h) for _, h in panels]
    ncols = min(3, len(panels))
    nrows = -(-len(panels) // ncols)
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(4.2 * ncols, 3.2 * nrows),
                             squeeze=False, constrained_layout=True)
    for ax in axes.ravel()[len(panels):]:
        ax.set_axis_off()
    for i, (values, header) in enumerate(panels):
        ax = axes.ravel()[i]
        peak = float(np.max(np.abs(np.nan_to_num(values))))
        ax.imshow(np.ma.masked_invalid(values.T), origin="upper",
                  extent=image_extent(header), aspect="equal",
                  cmap="RdBu_r", vmin=-peak, vmax=peak,
                  interpolation="nearest")
        ax.set_title(titles[i] if titles and i < len(titles)
                     else _panel_title(header), fontsize=9)
    return _finish(fig, out_path, hashes)

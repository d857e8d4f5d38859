"""Deterministic command-line pipelines over catalogs and images.

Subcommands: ``estimate`` (field values on a grid), ``modes``, ``ridges``,
``cluster``, ``connectivity`` and ``simulate`` (rate experiments against
built-in ground truths).  Every run writes its artifacts plus a
``manifest.json`` recording the resolved configuration, seed, library
version and input checksums, so any output can be regenerated from the
manifest alone.  Reruns with identical inputs and seed produce byte-identical
artifacts (the manifest's timestamp aside).

Set ``GDFKIT_THREADS`` to pin the numeric thread count before any heavy
import happens; trajectories are independent, so parallel BLAS is safe.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

__all__ = ["RunConfig", "run", "run_from_manifest", "main"]

_INPUT_COMMANDS = ("estimate", "modes", "ridges", "cluster", "connectivity")
_COMMANDS = _INPUT_COMMANDS + ("simulate",)


@dataclass
class RunConfig:
    """Fully resolved description of one command-line run."""

    command: str
    out: str
    input: str | None = None
    bandwidth: float | None = None
    step_tol: float = 1e-7
    ridge_tol: float | None = None
    merge_radius: float = 0.5
    max_iters: int = 500
    density_floor: float = 0.0
    grid: str = "64"
    seed: int = 0
    coords: str = "0,1"
    weight_col: str = "2"
    header: bool = False
    threshold: float = 0.15
    flip_y: bool = False
    max_chain_points: int = 10_000
    model: str | None = None
    target: str | None = None
    schedule: str | None = None
    replicates: int = 10
    floor_frac: float = 0.65

    def to_dict(self) -> dict:
        return asdict(self)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gdfkit",
        description="Weighted kernel intensity estimation: fields, modes, "
        "ridges, clusters, connectivity, and validation experiments.",
    )
    from . import __version__

    parser.add_argument("--version", action="version", version=f"gdfkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_input=True):
        if with_input:
            p.add_argument("input", help="catalog (.csv) or image (.pgm) path")
            p.add_argument("--bandwidth", type=float, required=True, help="kernel bandwidth h > 0")
            p.add_argument("--coords", default="0,1", help="coordinate columns (indices or names), comma separated")
            p.add_argument("--weight-col", dest="weight_col", default="2", help="weight column (index or name)")
            p.add_argument("--header", action="store_true", help="catalog has a header row")
            p.add_argument("--threshold", type=float, default=0.15, help="image intensity threshold after max-normalization")
            p.add_argument("--flip-y", dest="flip_y", action="store_true", help="use mathematical (y up) image orientation")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed recorded in the manifest and used by stochastic commands")
        p.add_argument("--step-tol", dest="step_tol", type=float, default=1e-7)
        p.add_argument("--merge-radius", dest="merge_radius", type=float, default=0.5)
        p.add_argument("--max-iters", dest="max_iters", type=int, default=500)
        p.add_argument("--density-floor", dest="density_floor", type=float, default=0.0)

    p = sub.add_parser("estimate", help="evaluate value/gradient/curvature on a grid")
    add_common(p)
    p.add_argument("--grid", default="64", help="cells per axis, or lo:hi:count per axis comma separated")

    p = sub.add_parser("modes", help="find intensity modes by weighted mean shift")
    add_common(p)

    p = sub.add_parser("ridges", help="trace density ridges by constrained mean shift")
    add_common(p)
    p.add_argument("--ridge-tol", dest="ridge_tol", type=float, default=None,
                   help="projected-gradient acceptance (default: 1e-6 of the top seed gradient)")

    p = sub.add_parser("cluster", help="label points by their ascent destination")
    add_common(p)

    p = sub.add_parser("connectivity", help="absorbing-walk connectivity between clusters")
    add_common(p)
    p.add_argument("--max-chain-points", dest="max_chain_points", type=int, default=10_000)

    p = sub.add_parser("simulate", help="rate experiment against a built-in ground truth")
    add_common(p, with_input=False)
    p.add_argument("--model", required=True, choices=("gauss1d", "mix2d", "circle"))
    p.add_argument("--target", required=True,
                   choices=("mise_0", "mise_1", "mise_2", "mode_hausdorff", "ridge_hausdorff"))
    p.add_argument("--schedule", default=None,
                   help="comma-separated n:h cells, e.g. 250:0.33,1000:0.25 (default: per-target schedule)")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--floor-frac", dest="floor_frac", type=float, default=0.65,
                   help="ridge target: drop ridge points below this fraction of each replicate's peak value")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    fields = {f for f in RunConfig.__dataclass_fields__}
    picked = {k: v for k, v in vars(args).items() if k in fields and v is not None}
    return RunConfig(**picked)


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _atomic_write_bytes(path, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path, header, rows) -> None:
    lines = []
    if header:
        lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def _write_matrix(path, mat) -> None:
    _write_csv(path, None, ([float(v) for v in row] for row in mat))


def _parse_column(token: str):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        return token


def _load_input(cfg: RunConfig):
    from . import ingest

    if cfg.input.lower().endswith(".pgm"):
        img = ingest.read_pgm(cfg.input)
        return ingest.image_to_sample(img, threshold=cfg.threshold, flip_y=cfg.flip_y)
    coords = tuple(_parse_column(t) for t in cfg.coords.split(","))
    sample, issues = ingest.load_catalog(
        cfg.input,
        coord_cols=coords,
        weight_col=_parse_column(cfg.weight_col),
        has_header=cfg.header,
    )
    for issue in issues:
        print(f"gdfkit: note: {cfg.input}:{issue.line}: {issue.reason}", file=sys.stderr)
    return sample


def _parse_grid(spec: str, sample, bandwidth: float):
    import numpy as np

    from .errors import InvalidInputError

    d = sample.dim
    if ":" in spec:
        parts = spec.split(",")
        if len(parts) != d:
            raise InvalidInputError(
                f"grid spec has {len(parts)} axes but the data has {d}"
            )
        lows, highs, counts = [], [], []
        for part in parts:
            bits = part.split(":")
            if len(bits) != 3:
                raise InvalidInputError(f"bad grid axis '{part}', want lo:hi:count")
            lo, hi, cnt = float(bits[0]), float(bits[1]), int(bits[2])
            if not (hi > lo and cnt >= 1):
                raise InvalidInputError(f"bad grid axis '{part}'")
            lows.append(lo)
            highs.append(hi)
            counts.append(cnt)
        return np.asarray(lows), np.asarray(highs), counts
    cnt = int(spec)
    if cnt < 1:
        raise InvalidInputError("grid cell count must be >= 1")
    pad = 3.0 * bandwidth
    lows = sample.points.min(axis=0) - pad
    highs = sample.points.max(axis=0) + pad
    return lows, highs, [cnt] * d


def _make_ascent_config(cfg: RunConfig):
    from .modes import AscentConfig

    return AscentConfig(
        step_tol=cfg.step_tol, max_iters=cfg.max_iters, merge_radius=cfg.merge_radius
    )


def _default_schedule(model_name: str, target: str, dim: int):
    from .harness import power_schedule

    table = {
        ("gauss1d", "mise_0"): ((250, 1000, 4000, 16000), 1.0, 1.0 / 5.0),
        ("mix2d", "mode_hausdorff"): ((500, 2000, 8000), 0.9, 1.0 / 8.0),
        ("circle", "ridge_hausdorff"): ((500, 1000, 4000), 1.0, 1.0 / 10.0),
    }
    ns, c, gamma = table.get(
        (model_name, target), ((250, 1000, 4000), 1.0, 1.0 / (dim + 4.0))
    )
    return power_schedule(ns, c, gamma)


def _parse_schedule(spec: str):
    from .errors import InvalidInputError

    cells = []
    for token in spec.split(","):
        bits = token.split(":")
        if len(bits) != 2:
            raise InvalidInputError(f"bad schedule cell '{token}', want n:h")
        cells.append((int(bits[0]), float(bits[1])))
    return tuple(cells)


def _cmd_estimate(cfg, sample, outputs):
    import numpy as np

    from . import core

    model = core.GdfModel(sample, cfg.bandwidth)
    lows, highs, counts = _parse_grid(cfg.grid, sample, cfg.bandwidth)
    axes = [np.linspace(lo, hi, c) for lo, hi, c in zip(lows, highs, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    values, grads, hessians = core.gdf_all_many(model, pts)
    gnorm = np.linalg.norm(grads, axis=1)
    eigs = np.linalg.eigvalsh(hessians)
    d = sample.dim
    header = [f"x{i}" for i in range(d)] + ["value", "grad_norm", "lambda1"]
    cols = [pts[:, i] for i in range(d)] + [values, gnorm, eigs[:, -1]]
    if d >= 2:
        header.append("lambda2")
        cols.append(eigs[:, -2])
    rows = zip(*[np.asarray(c, dtype=float) for c in cols])
    _write_csv(outputs["grid.csv"], header, rows)


def _cmd_modes(cfg, sample, outputs):
    from . import core, modes

    model = core.GdfModel(sample, cfg.bandwidth)
    found = modes.collect_modes(model, cfg=_make_ascent_config(cfg))
    _write_modes_csv(outputs["modes.csv"], found, sample.dim)
    return found


def _write_modes_csv(path, found, d):
    header = [f"x{i}" for i in range(d)] + ["value", "top_eigenvalue", "basin_count"]
    rows = (
        [float(v) for v in found.modes[i]]
        + [float(found.values[i]), float(found.top_eigenvalues[i]), int(found.basin_counts[i])]
        for i in range(len(found))
    )
    _write_csv(path, header, rows)


def _cmd_ridges(cfg, sample, outputs):
    from . import core, ridges

    model = core.GdfModel(sample, cfg.bandwidth)
    ridge = ridges.trace_ridge(
        model,
        sample.points,
        cfg=_make_ascent_config(cfg),
        density_floor=cfg.density_floor,
        ridge_tol=cfg.ridge_tol,
    )
    d = sample.dim
    header = [f"x{i}" for i in range(d)] + ["value", "projected_grad_norm", "second_eigenvalue"]
    rows = (
        [float(v) for v in ridge.points[i]]
        + [
            float(ridge.values[i]),
            float(ridge.projected_grad_norms[i]),
            float(ridge.second_eigenvalues[i]),
        ]
        for i in range(len(ridge))
    )
    _write_csv(outputs["ridges.csv"], header, rows)


def _cluster_result(cfg, sample):
    from . import clustering, core

    model = core.GdfModel(sample, cfg.bandwidth)
    return model, clustering.cluster(model, cfg=_make_ascent_config(cfg))


def _write_labels_csv(path, assignment):
    rows = ((i, int(lab)) for i, lab in enumerate(assignment.labels))
    _write_csv(path, ["index", "label"], rows)


def _cmd_cluster(cfg, sample, outputs):
    _, assignment = _cluster_result(cfg, sample)
    _write_modes_csv(outputs["modes.csv"], assignment.modes, sample.dim)
    _write_labels_csv(outputs["labels.csv"], assignment)


def _cmd_connectivity(cfg, sample, outputs):
    from . import connectivity

    model, assignment = _cluster_result(cfg, sample)
    blocks, result = connectivity.connectivity_pipeline(
        model, assignment, max_points=cfg.max_chain_points
    )
    _write_modes_csv(outputs["modes.csv"], assignment.modes, sample.dim)
    _write_labels_csv(outputs["labels.csv"], assignment)
    _write_matrix(outputs["S.csv"], blocks.S)
    _write_matrix(outputs["T.csv"], blocks.T)
    _write_matrix(outputs["A.csv"], result.A)
    _write_matrix(outputs["omega.csv"], result.omega)


def _cmd_simulate(cfg, outputs):
    from . import harness

    model = harness.builtin_model(cfg.model)
    if cfg.schedule:
        schedule = _parse_schedule(cfg.schedule)
    else:
        schedule = _default_schedule(cfg.model, cfg.target, model.dim)
    report = harness.rate_experiment(
        model,
        cfg.target,
        schedule,
        replicates=cfg.replicates,
        seed=cfg.seed,
        cfg=_make_ascent_config(cfg),
        floor_frac=cfg.floor_frac,
    )
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(outputs["report.json"], payload.encode("utf-8"))
    lines = [",".join(_fmt(v) for v in row) for row in report.csv_rows()]
    _atomic_write_bytes(outputs["report.csv"], ("\n".join(lines) + "\n").encode("utf-8"))


_OUTPUT_FILES = {
    "estimate": ("grid.csv",),
    "modes": ("modes.csv",),
    "ridges": ("ridges.csv",),
    "cluster": ("modes.csv", "labels.csv"),
    "connectivity": ("modes.csv", "labels.csv", "S.csv", "T.csv", "A.csv", "omega.csv"),
    "simulate": ("report.json", "report.csv"),
}


def run(cfg: RunConfig) -> dict:
    """Execute one configured run; returns the manifest dictionary."""
    from .errors import InvalidInputError

    if cfg.command not in _COMMANDS:
        raise InvalidInputError(f"unknown command '{cfg.command}'")
    os.makedirs(cfg.out, exist_ok=True)
    names = _OUTPUT_FILES[cfg.command]
    outputs = {name: os.path.join(cfg.out, name) for name in names}

    if cfg.command == "simulate":
        _cmd_simulate(cfg, outputs)
        input_records = []
    else:
        if not cfg.input:
            raise InvalidInputError(f"command '{cfg.command}' needs an input file")
        if cfg.bandwidth is None:
            raise InvalidInputError("bandwidth is required")
        sample = _load_input(cfg)
        handler = {
            "estimate": _cmd_estimate,
            "modes": _cmd_modes,
            "ridges": _cmd_ridges,
            "cluster": _cmd_cluster,
            "connectivity": _cmd_connectivity,
        }[cfg.command]
        handler(cfg, sample, outputs)
        input_records = [{"path": cfg.input, "sha256": _sha256(cfg.input)}]

    from . import __version__

    # The manifest lives inside the output directory, so the directory itself
    # is not part of the recorded configuration; replay supplies its own.
    cfg_record = cfg.to_dict()
    cfg_record["out"] = None
    manifest = {
        "command": cfg.command,
        "config": cfg_record,
        "seed": cfg.seed,
        "version": __version__,
        "inputs": input_records,
        "outputs": sorted(names),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    payload = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(os.path.join(cfg.out, "manifest.json"), payload.encode("utf-8"))
    return manifest


def run_from_manifest(manifest_path, out_dir) -> dict:
    """Re-execute the run a manifest describes, writing into ``out_dir``."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    cfg = RunConfig(**manifest["config"])
    cfg.out = str(out_dir)
    return run(cfg)


def main(argv=None) -> int:
    threads = os.environ.get("GDFKIT_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)

    from .errors import GdfKitError

    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config_from_args(args)
    try:
        run(cfg)
    except GdfKitError as e:
        print(f"gdfkit: error: {e.code}: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # pragma: no cover - defensive
        print(f"gdfkit: error: internal: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``simulate``, ``deconvolve``, ``evaluate``, ``benchmark``.

Exit codes: 0 success, 1 usage or config error, 2 I/O error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .convolve import BoundaryPolicy
from .core import Image, MultiChannelImage
from .deconv import Method, NumericalError, deconvolve_multichannel
from .imageio import read_image, write_image
from .metrics import (LineSegment, MetricReport, Rect, background_snr, contrast, line_profile,
                      psnr, write_profile_csv, write_report_csv)
from .psf import PsfModel, load_psf, render_psf, save_psf
from .simcep import make_pair

log = logging.getLogger("mapdeconv")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# (flag dest, section, key)
_OVERRIDES = [
    ("seed", "run", "seed"),
    ("threads", "run", "threads"),
    ("out", "run", "out"),
    ("method", "deconvolve", "method"),
    ("lam", "deconvolve", "lambda"),
    ("beta", "deconvolve", "beta"),
    ("window_radius", "deconvolve", "window_radius"),
    ("iterations", "deconvolve", "iterations"),
    ("epsilon", "deconvolve", "epsilon"),
    ("input", "deconvolve", "input"),
    ("ground_truth", "deconvolve", "ground_truth"),
    ("psf", "psf", "path"),
    ("psf_model", "psf", "model"),
    ("psf_sigma", "psf", "sigma"),
    ("psf_support_radius", "psf", "support_radius"),
    ("cell_count", "phantom", "cell_count"),
    ("structures", "phantom", "subcellular_structures_per_cell"),
    ("width", "phantom", "width"),
    ("height", "phantom", "height"),
    ("photon_scale", "phantom", "photon_scale"),
    ("reference", "evaluate", "reference"),
    ("test", "evaluate", "tests"),
    ("background", "evaluate", "background"),
    ("signal", "evaluate", "signal"),
    ("contrast_region", "evaluate", "contrast_region"),
    ("segment", "evaluate", "segments"),
    ("bench_size", "benchmark", None),
    ("bench_channels", "benchmark", "channels"),
    ("bench_methods", "benchmark", "methods"),
]


def _shared(p):
    p.add_argument("--config", metavar="PATH", help="INI config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="channels processed concurrently")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override any config field (repeatable)")


def _deconv_flags(p):
    p.add_argument("--method", choices=["lr", "map-hunt", "map-d"])
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--window-radius", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--epsilon", type=float)


def _psf_flags(p):
    p.add_argument("--psf", metavar="PATH", help="PSF text matrix or grayscale image")
    p.add_argument("--psf-model", choices=["gaussian", "airy", "disk"])
    p.add_argument("--psf-sigma", type=float, help="width parameter of the PSF model (px)")
    p.add_argument("--psf-support-radius", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mapdeconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mapdeconv {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a ground-truth / degraded phantom pair")
    _shared(p)
    _psf_flags(p)
    p.add_argument("--cell-count", type=int)
    p.add_argument("--structures", type=int, help="subcellular structures per cell")
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--photon-scale", type=float)

    p = sub.add_parser("deconvolve", help="deconvolve an image")
    _shared(p)
    _deconv_flags(p)
    _psf_flags(p)
    p.add_argument("--input", metavar="PATH")
    p.add_argument("--ground-truth", metavar="PATH", help="adds PSNR to the iteration trace")

    p = sub.add_parser("evaluate", help="compute quality metrics")
    _shared(p)
    p.add_argument("--reference", metavar="PATH")
    p.add_argument("--test", action="append", metavar="LABEL=PATH")
    p.add_argument("--background", metavar="X,Y,W,H")
    p.add_argument("--signal", metavar="X,Y,W,H")
    p.add_argument("--contrast-region", metavar="X,Y,W,H")
    p.add_argument("--segment", action="append", metavar="X0,Y0,X1,Y1")

    p = sub.add_parser("benchmark", help="time each method on a synthetic image")
    _shared(p)
    _deconv_flags(p)
    _psf_flags(p)
    p.add_argument("--bench-size", metavar="WxH")
    p.add_argument("--bench-channels", type=int)
    p.add_argument("--bench-methods", metavar="M1;M2")
    return parser


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    for dest, sec, key in _OVERRIDES:
        val = getattr(args, dest, None)
        if val is None:
            continue
        if dest == "bench_size":
            try:
                w, h = (int(v) for v in val.lower().split("x"))
            except ValueError:
                raise ConfigError(f"--bench-size: expected WxH, got {val!r}") from None
            cfg.set("benchmark", "width", w)
            cfg.set("benchmark", "height", h)
        elif dest == "test" or dest == "segment":
            cfg.set(sec, key, list(val))
        elif dest == "bench_methods":
            cfg.set(sec, key, val)  # parsed as list
        else:
            cfg.set(sec, key, val)
    for item in getattr(args, "set", None) or []:
        name, sep, value = item.partition("=")
        section, dot, key = name.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(f"--set: expected SECTION.KEY=VALUE, got {item!r}")
        cfg.set(section, key, value.strip(), source="--set")
    return cfg


def _psf_from(cfg: RunConfig):
    p = cfg["psf"]
    if p["path"]:
        return load_psf(p["path"])
    return render_psf(PsfModel(p["model"], p["sigma"], p["support_radius"]))


def _write_manifest(cfg: RunConfig, out: str, command: str, sections, **extra) -> str:
    cfg.set("manifest", "command", command)
    cfg.set("manifest", "version", __version__)
    for k, v in extra.items():
        cfg.set("manifest", k, str(v))
    path = os.path.join(out, "manifest.ini")
    with open(path, "w") as fh:
        fh.write(f"# mapdeconv {__version__} {command}; rerun with --config {os.path.basename(path)}\n")
        fh.write(cfg.to_ini(list(sections) + ["manifest"]))
    return path


def _load_any(path):
    """Image file or ``.npy`` array -> (MultiChannelImage, scale)."""
    if str(path).lower().endswith(".npy"):
        arr = np.load(path)
        return MultiChannelImage.from_array(arr), 1.0
    img, scale = read_image(path)
    if isinstance(img, Image):
        img = MultiChannelImage([img], ["gray"])
    return img, scale


def cmd_simulate(cfg: RunConfig) -> dict:
    out = cfg["run"]["out"]
    os.makedirs(out, exist_ok=True)
    psf = _psf_from(cfg)
    pair = make_pair(cfg.phantom_config(), psf)
    files = {
        "ground_truth": os.path.join(out, "ground_truth.png"),
        "degraded": os.path.join(out, "degraded.png"),
        "psf": os.path.join(out, "psf.txt"),
    }
    write_image(files["ground_truth"], pair.ground_truth, 16)
    write_image(files["degraded"], pair.degraded, 16)
    save_psf(psf, files["psf"])
    with open(os.path.join(out, "cells.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["cell", "cx", "cy", "kind", "x", "y"])
        for i, c in enumerate(pair.cells):
            w.writerow([i, repr(c.center[0]), repr(c.center[1]), "nucleus",
                        repr(c.nucleus_center[0]), repr(c.nucleus_center[1])])
            for sx, sy in c.spots:
                w.writerow([i, repr(c.center[0]), repr(c.center[1]), "structure", repr(sx), repr(sy)])
    files["manifest"] = _write_manifest(cfg, out, "simulate", ["run", "phantom", "psf"])
    log.info("wrote phantom pair to %s", out)
    return files


def cmd_deconvolve(cfg: RunConfig) -> dict:
    d = cfg["deconvolve"]
    if not d["input"]:
        raise UsageError("deconvolve needs an input image (--input or [deconvolve] input)")
    out = cfg["run"]["out"]
    os.makedirs(out, exist_ok=True)
    measured, scale = _load_any(d["input"])
    truth = _load_any(d["ground_truth"])[0] if d["ground_truth"] else None
    psf = _psf_from(cfg)
    method = Method.coerce(d["method"])
    params = cfg.deconv_params()
    result, traces = deconvolve_multichannel(
        measured, psf, method, params, ground_truth=truth,
        boundary=BoundaryPolicy.coerce(d["boundary"]), threads=max(1, cfg["run"]["threads"]))
    arr = result.to_array()
    files = {"npy": os.path.join(out, "deconvolved.npy"), "image": os.path.join(out, "deconvolved.png")}
    np.save(files["npy"], arr)
    write_image(files["image"], result, 16)
    for name, tr in zip(result.channel_names, traces):
        path = os.path.join(out, f"trace_{name}.csv")
        tr.to_csv(path)
        files[f"trace_{name}"] = path
    files["manifest"] = _write_manifest(
        cfg, out, "deconvolve", ["run", "psf", "deconvolve"],
        input_scale=scale, clipped_pixels=int(np.sum(arr > 1.0)))
    return files


def _labelled(spec: str):
    if "=" not in spec:
        return os.path.splitext(os.path.basename(spec))[0], spec
    label, path = spec.split("=", 1)
    return label.strip(), path.strip()


def cmd_evaluate(cfg: RunConfig) -> dict:
    e = cfg["evaluate"]
    if not e["tests"]:
        raise UsageError("evaluate needs at least one --test LABEL=PATH")
    out = cfg["run"]["out"]
    os.makedirs(out, exist_ok=True)
    ref = _load_any(e["reference"])[0] if e["reference"] else None
    bg = Rect.parse(e["background"]) if e["background"] else None
    sig = Rect.parse(e["signal"]) if e["signal"] else None
    creg = Rect.parse(e["contrast_region"]) if e["contrast_region"] else None
    segments = [LineSegment.parse(s) for s in e["segments"]]
    reports = []
    files = {}
    for spec in e["tests"]:
        label, path = _labelled(spec)
        test = _load_any(path)[0]
        if ref is not None and len(ref) != len(test):
            raise UsageError(f"{label}: {len(test)} channels vs {len(ref)} in reference")
        multi = len(test) > 1
        if multi and ref is not None:
            reports.append(MetricReport(label, None, None, psnr(
                np.vstack(test.to_array()), np.vstack(ref.to_array()))))
        for c, name in enumerate(test.channel_names):
            ch = test[c]
            rlabel = f"{label}/{name}" if multi else label
            rep = MetricReport(
                rlabel,
                background_snr(ch, bg, sig) if bg and sig else None,
                contrast(ch, creg),
                psnr(ch, ref[c]) if ref is not None else None,
            )
            for k, seg in enumerate(segments):
                prof = line_profile(ch, seg, e["normalize_profiles"])
                rep.profiles[f"segment{k}"] = prof
                safe = rlabel.replace("/", "_")
                ppath = os.path.join(out, f"profile_{safe}_segment{k}.csv")
                write_profile_csv(prof, ppath)
                files[f"profile_{safe}_{k}"] = ppath
            reports.append(rep)
    files["report"] = os.path.join(out, "report.csv")
    write_report_csv(reports, files["report"])
    files["manifest"] = _write_manifest(cfg, out, "evaluate", ["run", "evaluate"])
    return files


def cmd_benchmark(cfg: RunConfig) -> dict:
    b = cfg["benchmark"]
    out = cfg["run"]["out"]
    os.makedirs(out, exist_ok=True)
    psf = _psf_from(cfg)
    pc = cfg.phantom_config()
    from dataclasses import replace

    radius = min(pc.cell_radius_max, (min(b["width"], b["height"]) - 4) / 2)
    pc = replace(pc, width=b["width"], height=b["height"],
                 cell_radius_max=radius, cell_radius_min=min(pc.cell_radius_min, radius))
    pair = make_pair(pc, psf)
    arr = pair.degraded.to_array()
    chans = [arr[i % len(arr)] for i in range(b["channels"])]
    measured = MultiChannelImage(chans, [f"ch{i}" for i in range(len(chans))])
    params = cfg.deconv_params()
    rows = []
    for m in b["methods"]:
        method = Method.coerce(m)
        t0 = time.perf_counter()
        deconvolve_multichannel(measured, psf, method, params, threads=max(1, cfg["run"]["threads"]))
        dt = time.perf_counter() - t0
        rows.append((method.value, b["width"], b["height"], b["channels"], params.iterations, dt))
        log.info("%s: %.2f s", method.value, dt)
    path = os.path.join(out, "benchmark.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "width", "height", "channels", "iterations", "seconds"])
        for r in rows:
            w.writerow([*r[:5], f"{r[5]:.4f}"])
    manifest = _write_manifest(cfg, out, "benchmark", ["run", "phantom", "psf", "deconvolve", "benchmark"])
    return {"benchmark": path, "manifest": manifest, "timings": {r[0]: r[5] for r in rows}}


COMMANDS = {
    "simulate": cmd_simulate,
    "deconvolve": cmd_deconvolve,
    "evaluate": cmd_evaluate,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        COMMANDS[args.command](cfg)
    except (ConfigError, UsageError) as exc:
        print(f"mapdeconv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"mapdeconv: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"mapdeconv: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mapdeconv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

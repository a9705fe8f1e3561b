"""Command line: simulate a scan, build a mask, estimate maps, compare
against ground truth, and dump the transmit-scale lookup table.

All commands read one JSON config document with optional sections
``phantom``, ``timing``, ``noise``, ``pulses``, ``mask``, ``b1``, ``t2``,
``wf``, ``t1``; command-line flags override matching config keys.  Exit
codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import b1map, formats, maskgen, phantom, pipeline, seqsim


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to the validation exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path) -> dict:
    if path is None:
        return {}
    cfg = json.loads(Path(path).read_text())
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _timing_from_config(cfg: dict, t_sat=None, tr=None) -> seqsim.SequenceTiming:
    section = dict(cfg.get("timing", {}))
    if t_sat is not None:
        section["t_sat"] = t_sat
    if tr is not None:
        section["tr"] = tr
    base = dataclasses.asdict(seqsim.default_timing(
        t_sat=float(section.pop("t_sat", 1.2)),
        tr=float(section.pop("tr", 2.4))))
    for key, value in section.items():
        if key not in base:
            raise ValueError(f"unknown timing key {key!r}")
        base[key] = value
    for key in ("fid_times", "probe_times", "inversion_offsets",
                "echo_offsets", "imaging_flips"):
        base[key] = tuple(base[key])
    return seqsim.SequenceTiming(**base)


def _pulse_params_from_config(cfg: dict) -> seqsim.PulseParams:
    section = dict(cfg.get("pulses", {}))
    known = {f.name for f in dataclasses.fields(seqsim.PulseParams)}
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown pulse keys {sorted(unknown)}")
    return seqsim.PulseParams(**section)


def _options_from_config(cfg: dict) -> pipeline.EstimateOptions:
    kw = {}
    b1 = cfg.get("b1", {})
    for src, dst in (("k_min", "b1_k_min"), ("k_max", "b1_k_max"),
                     ("step", "b1_step")):
        if src in b1:
            kw[dst] = float(b1[src])
    t2 = cfg.get("t2", {})
    if t2:
        kw["t2_bounds"] = (float(t2.get("min", 0.005)),
                           float(t2.get("max", 3.0)))
    wf = cfg.get("wf", {})
    for key in ("t2s_min", "t2s_max", "d_omega_step", "omega_bound"):
        if key in wf:
            kw[key] = float(wf[key])
    if "t2s_points" in wf:
        kw["t2s_points"] = int(wf["t2s_points"])
    t1 = cfg.get("t1", {})
    if "starts" in t1:
        kw["t1_starts"] = tuple(float(v) for v in t1["starts"])
    if "min" in t1 or "max" in t1:
        kw["t1_bounds"] = (float(t1.get("min", 0.05)),
                           float(t1.get("max", 5.0)))
    return pipeline.EstimateOptions(**kw)


def _mask_kwargs(cfg: dict, args) -> dict:
    section = dict(cfg.get("mask", {}))
    out = {
        "threshold": float(section.get("threshold", 0.1)),
        "close_radius": int(section.get("close_radius", 2)),
        "erode_radius": int(section.get("erode_radius", 1)),
    }
    for key in out:
        flag = getattr(args, key, None)
        if flag is not None:
            out[key] = flag
    return out


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    pm = phantom.phantom_from_config(cfg.get("phantom", {}))
    timing = _timing_from_config(cfg, t_sat=args.t_sat, tr=args.tr)
    params = _pulse_params_from_config(cfg)
    noise = cfg.get("noise", {})
    sigma = args.noise_sigma if args.noise_sigma is not None \
        else float(noise.get("sigma", 0.0))
    seed = args.seed if args.seed is not None else int(noise.get("seed", 0))
    images = seqsim.simulate_scan(
        pm, timing, pulses=seqsim.build_pulses(params, timing),
        noise_sigma=sigma, seed=seed)
    formats.write_imageset(images, args.out)
    print(f"wrote {images.data.shape[0] * images.data.shape[1]} images "
          f"({images.width}x{images.height}) to {args.out}")
    return 0


def cmd_mask(args) -> int:
    cfg = _load_config(args.config)
    images = formats.read_imageset(args.images)
    mask = maskgen.make_mask(maskgen.mean_image(images),
                             **_mask_kwargs(cfg, args))
    formats.write_mask(mask, args.out)
    print(f"mask {mask.width}x{mask.height}, {mask.count} pixels in mask "
          f"-> {args.out}")
    return 0


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    images = formats.read_imageset(args.images)
    mask = formats.read_mask(args.mask) if args.mask else \
        maskgen.make_mask(maskgen.mean_image(images),
                          **_mask_kwargs(cfg, args))
    maps = pipeline.estimate_all(images, mask, _options_from_config(cfg))
    formats.write_maps(maps, args.out)
    done = int(maps.valid["t1"].sum())
    print(f"estimated {done} pixels -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    maps = formats.read_maps(args.maps)
    pm = phantom.phantom_from_config(cfg.get("phantom", {}))
    truth = phantom.phantom_truth_arrays(pm)
    mask = formats.read_mask(args.mask) if args.mask else None
    report = formats.compare_maps(maps, truth, mask)
    print(formats.format_report(report))
    if args.json:
        Path(args.json).write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_lut(args) -> int:
    cfg = _load_config(args.config)
    timing = _timing_from_config(cfg)
    pulses = seqsim.build_pulses(_pulse_params_from_config(cfg), timing)
    b1_cfg = cfg.get("b1", {})
    table = b1map.build_ratio_table(
        pulses,
        k_min=float(b1_cfg.get("k_min", 0.2)),
        k_max=float(b1_cfg.get("k_max", 1.8)),
        step=float(b1_cfg.get("step", 0.002)))
    doc = {"k_values": [float(v) for v in table.k_values],
           "ratios": [float(v) for v in table.ratios]}
    if args.out:
        Path(args.out).write_text(
            json.dumps(doc, sort_keys=True, indent=2) + "\n")
        print(f"wrote {table.k_values.size}-entry table to {args.out}")
    else:
        print(json.dumps(doc, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qmapkit",
                     description="two-segment saturation-recovery MRI "
                                 "simulation and map estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a scan into a directory")
    sim.add_argument("--config", help="JSON config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--t-sat", dest="t_sat", type=float)
    sim.add_argument("--tr", type=float)
    sim.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    sim.add_argument("--seed", type=int)
    sim.set_defaults(func=cmd_simulate)

    msk = sub.add_parser("mask", help="build the processing mask")
    msk.add_argument("--config", help="JSON config file")
    msk.add_argument("--images", required=True, help="image-set directory")
    msk.add_argument("--out", required=True, help="output PBM path")
    msk.add_argument("--threshold", type=float)
    msk.add_argument("--close-radius", dest="close_radius", type=int)
    msk.add_argument("--erode-radius", dest="erode_radius", type=int)
    msk.set_defaults(func=cmd_mask)

    est = sub.add_parser("estimate", help="estimate parameter maps")
    est.add_argument("--config", help="JSON config file")
    est.add_argument("--images", required=True, help="image-set directory")
    est.add_argument("--out", required=True, help="output directory")
    est.add_argument("--mask", help="PBM mask (default: derive from images)")
    est.add_argument("--threshold", type=float)
    est.add_argument("--close-radius", dest="close_radius", type=int)
    est.add_argument("--erode-radius", dest="erode_radius", type=int)
    est.set_defaults(func=cmd_estimate)

    cmp_ = sub.add_parser("compare", help="compare maps to phantom truth")
    cmp_.add_argument("--config", help="JSON config with the phantom section")
    cmp_.add_argument("--maps", required=True, help="QuantMaps directory")
    cmp_.add_argument("--mask", help="PBM mask (default: the maps' own)")
    cmp_.add_argument("--json", help="also write the report as JSON here")
    cmp_.set_defaults(func=cmd_compare)

    lut = sub.add_parser("lut", help="emit the transmit-scale ratio table")
    lut.add_argument("--config", help="JSON config file")
    lut.add_argument("--out", help="output JSON path (default: stdout)")
    lut.set_defaults(func=cmd_lut)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except formats.FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

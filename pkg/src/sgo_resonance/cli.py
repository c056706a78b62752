"""Command-line front end.

Every run resolves its configuration (defaults, profile, config file, flags),
writes ``manifest.json`` with that resolved configuration and then the
subcommand outputs into one run directory.  Exit codes: 0 success, 2 bad
configuration, 3 numerical failure (with ``error.json``).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import time
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__, beats, card, resonance
from .config import (
    ConfigError,
    PROFILES,
    canonical_json,
    complement_from_config,
    config_hash,
    geometry_from_config,
    load_toml,
    plate_from_config,
    resolve,
)
from .errors import NumericalError
from .plate import ThetaParam, dispersion_residual_active
from .specfun import bessel_i, bessel_j

OUTPUT_ROOT_ENV = "SGO_RESONANCE_OUTPUT"
SUBCOMMANDS = ("dispersion", "tune", "scan", "beats", "transfer", "card", "synth", "dump-specfun")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Comma-separated, LF line ends, one header row, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(canonical_json(obj))


# --- subcommands ------------------------------------------------------------------


def run_dispersion(cfg: dict, out: Path, threads: int) -> None:
    spec = plate_from_config(cfg)
    geom = geometry_from_config(cfg)
    d = cfg["dispersion"]
    if not 0 < d["nu_min"] < d["nu_max"] or d["count"] < 2:
        raise ConfigError("dispersion: need 0 < nu_min < nu_max and count >= 2")
    nus = np.geomspace(d["nu_min"], d["nu_max"], d["count"])
    rows = []
    for nu in nus:
        # without compression Theta is 0 and both wavenumbers coincide
        theta = ThetaParam.from_nu(spec, float(nu)) if spec.tension_q1 > 0 else ThetaParam(0.0, 2 * math.pi * float(nu))
        try:
            res = dispersion_residual_active(spec, geom, theta, d["order"])
        except NumericalError:
            res = math.nan
        rows.append((nu, theta.theta, res))
    write_csv(out / "dispersion.csv", ("nu_hz", "theta", "residual"), rows)
    modes = resonance.active_eigenfrequencies(spec, geom, d["modes"])
    write_json(
        out / "roots.json",
        {
            "compression_number": resonance.compression_number(spec, geom),
            "buckling_q1": resonance.buckling_tension(spec, geom),
            "modes": [{"index": i, "nu_hz": w / (2 * math.pi), "omega": w} for i, w in modes],
        },
    )


def _discrepancies(cfg: dict) -> list[dict]:
    return resonance.paper_discrepancies(
        plate_from_config(cfg),
        complement_from_config(cfg),
        geometry_from_config(cfg),
        cfg["plate"]["resonance_nu"],
        cfg["tune"]["mode_l"],
    )


def run_tune(cfg: dict, out: Path, threads: int) -> None:
    t = cfg["tune"]
    if t["mode"] == "radius":
        ref = resonance.PAPER_OUTER_RADIUS if cfg.get("profile") == "paper-2015" else None
        report = resonance.tune_outer_radius(complement_from_config(cfg), t["target_nu"], t["mode_l"], ref)
    elif t["mode"] == "tension":
        report = resonance.tune_tension(plate_from_config(cfg), geometry_from_config(cfg), t["target_nu"], t["q1_max"])
    else:
        raise ConfigError("tune.mode must be 'radius' or 'tension'")
    body = report.to_dict()
    body["discrepancies"] = _discrepancies(cfg)
    write_json(out / "report.json", body)


def run_scan(cfg: dict, out: Path, threads: int) -> None:
    s = cfg["scan"]
    if "q1" in s:
        grid = s["q1"]
    else:
        if s["q1_count"] < 1:
            raise ConfigError("scan.q1_count must be >= 1")
        grid = np.linspace(s["q1_min"], s["q1_max"], s["q1_count"]).tolist()
    if not grid:
        raise ConfigError("scan grid is empty")
    rows = resonance.resonance_scan(
        plate_from_config(cfg), complement_from_config(cfg), geometry_from_config(cfg), grid, workers=threads
    )
    write_csv(
        out / "scan.csv",
        ("q1", "nu_eps_hz", "nu_c_hz", "mismatch", "flagged"),
        ((r.q1, r.nu_eps_hz, r.nu_c_hz, r.mismatch, r.flagged) for r in rows),
    )
    write_json(
        out / "report.json",
        {
            "rows": len(rows),
            "flagged_q1": [r.q1 for r in rows if r.flagged],
            "errors": [{"q1": r.q1, "error": r.error} for r in rows if r.error],
            "discrepancies": _discrepancies(cfg),
        },
    )


def _system(cfg: dict) -> beats.OscillatorSystem:
    b = cfg["beats"]
    try:
        return beats.OscillatorSystem(
            b["mass_small"], b["stiffness_small"], b["masses_large"], b["stiffnesses_large"], b["coupling"]
        )
    except ValueError as exc:
        raise ConfigError(f"beats: {exc}") from None


def _transfer_rows(cfg: dict, sys_: beats.OscillatorSystem, threads: int):
    if sys_.mu != 1:
        raise ConfigError("transfer sweep needs a single large oscillator (mu = 1)")
    return beats.transfer_sweep(sys_, cfg["transfer"]["detunings"], workers=threads)


def run_beats(cfg: dict, out: Path, threads: int) -> None:
    sys_ = _system(cfg)
    try:
        spec = beats.perturbed_spectrum(sys_)
    except ValueError as exc:
        raise ConfigError(f"beats: {exc}") from None
    sol = beats.small_oscillator_excitation(spec)
    body = {"system": sys_.to_dict()}
    body.update(spec.to_dict())
    body["amplitudes"] = sol.amplitudes.tolist()
    body["phases"] = sol.phases.tolist()
    period = beats.beat_period(spec, sol)
    body["beat_period"] = period
    write_json(out / "spectrum.json", body)
    b = cfg["beats"]
    if b["samples"] < 2:
        raise ConfigError("beats.samples must be >= 2")
    horizon = b["beat_periods"] * (period if math.isfinite(period) else 2 * math.pi / spec.frequencies.min())
    t = np.linspace(0.0, horizon, b["samples"])
    e = beats.energy_series(sol, t, workers=threads)
    write_csv(
        out / "energy.csv",
        ("t", "e_small", "e_large", "e_total", "xi_re", "xi_im"),
        zip(t, e.e_small, e.e_large, e.e_total, e.xi.real, e.xi.imag),
    )
    if sys_.mu == 1:
        write_csv(out / "transfer.csv", ("detuning", "k"), _transfer_rows(cfg, sys_, threads))


def run_transfer(cfg: dict, out: Path, threads: int) -> None:
    write_csv(out / "transfer.csv", ("detuning", "k"), _transfer_rows(cfg, _system(cfg), threads))


def _synth_signal(cfg: dict) -> card.SignalSeries:
    s = cfg["synth"]
    try:
        return card.synth_sgo(
            s["duration_hours"],
            s["modes"],
            sample_interval=s["sample_interval"],
            beat_pairs=s["beat_pairs"],
            noise_std=s["noise_std"],
            seed=cfg["seed"],
        )
    except ValueError as exc:
        raise ConfigError(f"synth: {exc}") from None


def _card_input(cfg: dict, base: Path | None) -> card.SignalSeries:
    path = cfg["card"]["input"]
    if not path:
        return _synth_signal(cfg)
    p = Path(path)
    if not p.is_absolute() and base is not None:
        p = base / p
    try:
        return card.SignalSeries.from_csv(p)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"card input {p}: {exc}") from None


def run_card(cfg: dict, out: Path, threads: int, base: Path | None = None, signal=None) -> None:
    c = cfg["card"]
    sig = signal if signal is not None else _card_input(cfg, base)
    try:
        grid = card.build_card(
            sig,
            c["bin_width_uhz"] or None,
            f_min=c["f_min_uhz"],
            f_max=c["f_max_uhz"] or None,
            window_h=c["window_hours"],
            stride_min=c["stride_minutes"],
            workers=threads,
        )
    except card.EmptyBandError:
        raise
    except ValueError as exc:
        raise ConfigError(f"card: {exc}") from None
    header = ["freq_uhz"] + [f"w{i}" for i in range(grid.shape[0])]
    data = np.ma.filled(grid.a2.astype(float), np.nan)
    write_csv(out / "card.csv", header, ([f] + list(data[:, j]) for j, f in enumerate(grid.freqs_uhz)))
    write_json(out / "card_meta.json", grid.meta())
    if c["svg"]:
        (out / "card.svg").write_text(card.card_svg(grid), encoding="utf-8")


def run_synth(cfg: dict, out: Path, threads: int) -> None:
    sig = _synth_signal(cfg)
    write_csv(out / "signal.csv", ("t_seconds", "displacement_m"), zip(sig.t, sig.x))


def run_dump_specfun(cfg: dict, out: Path, threads: int) -> None:
    rows = []
    for p in cfg["specfun"]["orders"]:
        for z in cfg["specfun"]["z"]:
            try:
                j = bessel_j(p, z)
                i = bessel_i(p, z)
            except (ValueError, OverflowError) as exc:
                raise ConfigError(f"specfun: {exc}") from None
            rows.append((p, z, j.value, j.derivative, i.value, i.derivative))
    write_csv(out / "specfun.csv", ("p", "z", "Jp", "Jp'", "Ip", "Ip'"), rows)


RUNNERS: dict[str, Callable] = {
    "dispersion": run_dispersion,
    "tune": run_tune,
    "scan": run_scan,
    "beats": run_beats,
    "transfer": run_transfer,
    "card": run_card,
    "synth": run_synth,
    "dump-specfun": run_dump_specfun,
}


# --- argument handling ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgo-resonance", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest", help="replay the run recorded in this manifest.json")
    parser.add_argument("--out-dir", help="write outputs here instead of a fresh run directory")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: available CPUs)")
    sub = parser.add_subparsers(dest="command")
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML configuration file")
        p.add_argument("--profile", choices=sorted(PROFILES), help="named parameter profile")
        p.add_argument("--seed", type=int, help="seed for synthetic noise")
        if name == "tune":
            p.add_argument("--tune", dest="tune_mode", choices=("radius", "tension"))
            p.add_argument("--target-nu", type=float)
            p.add_argument("--mode-l", type=int)
            p.add_argument("--q1-max", type=float)
        if name == "card":
            p.add_argument("--input", help="CSV signal (t_seconds, displacement_m)")
            p.add_argument("--svg", action="store_true", help="also write card.svg")
    return parser


def _flag_layer(args) -> dict:
    layer: dict = {}
    if getattr(args, "profile", None):
        layer["profile"] = args.profile
    if getattr(args, "seed", None) is not None:
        layer["seed"] = args.seed
    tune = {}
    for attr, key in (("tune_mode", "mode"), ("target_nu", "target_nu"), ("mode_l", "mode_l"), ("q1_max", "q1_max")):
        val = getattr(args, attr, None)
        if val is not None:
            tune[key] = val
    if tune:
        layer["tune"] = tune
    c = {}
    if getattr(args, "input", None):
        c["input"] = str(Path(args.input).resolve())
    if getattr(args, "svg", False):
        c["svg"] = True
    if c:
        layer["card"] = c
    return layer


def _run_dir(cfg: dict, command: str, out_dir: str | None) -> Path:
    if out_dir:
        return Path(out_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    return root / f"{stamp}-{command}-{config_hash({'command': command, 'config': cfg})}"


def _error_body(exc: BaseException) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    base = None
    try:
        if args.manifest:
            try:
                with open(args.manifest, encoding="utf-8") as fh:
                    manifest = json.load(fh)
                command = manifest["command"]
                layers = [manifest["config"]]
            except (OSError, ValueError, KeyError, TypeError) as exc:
                raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from None
            if command not in RUNNERS:
                raise ConfigError(f"manifest names unknown command {command!r}")
        else:
            if args.command is None:
                parser.print_usage(sys.stderr)
                return EXIT_CONFIG
            command = args.command
            layers = []
            if args.config:
                layers.append(load_toml(args.config))
                base = Path(args.config).resolve().parent
            layers.append(_flag_layer(args))
        cfg = resolve(*layers)
        if cfg["card"]["input"] and base is not None and not Path(cfg["card"]["input"]).is_absolute():
            cfg["card"]["input"] = str((base / cfg["card"]["input"]).resolve())
        signal = _card_input(cfg, None) if command == "card" else None
    except ConfigError as exc:
        print(canonical_json(_error_body(exc), indent=None), end="", file=sys.stderr)
        return EXIT_CONFIG

    threads = args.threads if args.threads and args.threads > 0 else (os.cpu_count() or 1)
    out = _run_dir(cfg, command, args.out_dir)
    fresh = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "manifest.json", {"command": command, "version": __version__, "config": cfg})
    try:
        if command == "card":
            run_card(cfg, out, threads, signal=signal)
        else:
            RUNNERS[command](cfg, out, threads)
    except ConfigError as exc:
        if fresh:
            shutil.rmtree(out)
        print(canonical_json(_error_body(exc), indent=None), end="", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, OverflowError) as exc:
        body = _error_body(exc)
        write_json(out / "error.json", body)
        print(canonical_json(body, indent=None), end="", file=sys.stderr)
        return EXIT_NUMERIC
    print(str(out))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

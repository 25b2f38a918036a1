"""Command line front end: batch analysis, synthetic series and the oracle suite.

Machine output goes to files; progress and diagnostics go to stderr. The
one exception is ``validate``, whose pass/fail table is its result and is
printed to stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import sys
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .emd import EemdConfig
from .errors import FractsectError
from .mfdfa import AnalysisParams, Eemd, EemdGlobal, Poly, Regime, analyze, scale_grid
from .reference import sector_meta
from .series import Kind, load_series, log_returns, read_tsv, write_tsv
from .spectrum import report_for
from .synth import CascadeSpec, FgnSpec, binomial_cascade, fgn, shuffle

log = logging.getLogger("fractsect")

ENV_SEED = "FRACTSECT_SEED"
EMIT_CHOICES = ("table", "json", "plotdata")
EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


class BadConfig(FractsectError):
    pass


def _default_seed() -> int:
    raw = os.environ.get(ENV_SEED)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise BadConfig(f"{ENV_SEED}={raw!r} is not an integer") from None


@dataclass(frozen=True)
class RunConfig:
    inputs: tuple = ()
    labels: tuple = ()
    date_column: str = "Date"
    value_column: str = "Close"
    s_min: int = 10
    crossover: int = 200
    s_max: int = 1000
    per_regime: int = 20
    q_max: float = 10.0
    q_step: float = 0.5
    detrend: str = "eemd-window"
    ensemble_size: int | None = None     # 16 per window, 100 globally
    noise_ratio: float = 0.2
    seed: int = 0
    band: float = 0.02
    min_windows: int = 16
    output_dir: str = "fractsect-out"
    emit: tuple = EMIT_CHOICES
    workers: int | None = None
    jobs: int = 1

    def sector_labels(self) -> tuple:
        return self.labels if self.labels else tuple(Path(p).stem for p in self.inputs)

    def qs(self) -> np.ndarray:
        n = int(round(self.q_max / self.q_step))
        return np.arange(-n, n + 1) * self.q_step

    def members(self) -> int:
        if self.ensemble_size is not None:
            return self.ensemble_size
        return 100 if self.detrend == "eemd-global" else 16

    def detrender(self):
        if self.detrend.startswith("poly:"):
            return Poly(int(self.detrend[5:]))
        cfg = EemdConfig(self.members(), self.noise_ratio, self.seed)
        return EemdGlobal(cfg) if self.detrend == "eemd-global" else Eemd(cfg)

    def params(self) -> AnalysisParams:
        return AnalysisParams(self.s_min, self.crossover, self.s_max, self.per_regime,
                              tuple(self.qs()), self.detrender(), self.min_windows,
                              self.workers)

    def validate(self) -> None:
        """Check everything that can be checked before any compute."""
        if not self.inputs:
            raise BadConfig("no inputs")
        labels = self.sector_labels()
        if len(labels) != len(self.inputs):
            raise BadConfig(f"{len(labels)} labels for {len(self.inputs)} inputs")
        dup = [k for k, n in Counter(labels).items() if n > 1]
        if dup:
            raise BadConfig(f"duplicate sector labels: {', '.join(sorted(dup))}")
        if any(not lab or "/" in lab or lab.startswith(".") for lab in labels):
            raise BadConfig("sector labels must be nonempty file-name-safe strings")
        try:
            scale_grid(self.s_min, self.crossover, self.s_max, self.per_regime)
        except FractsectError as exc:
            raise BadConfig(str(exc)) from None
        if not (self.q_max > 0 and self.q_step > 0):
            raise BadConfig("q_max and q_step must be positive")
        ratio = self.q_max / self.q_step
        if abs(ratio - round(ratio)) > 1e-9 or abs(2.0 / self.q_step - round(2.0 / self.q_step)) > 1e-9:
            raise BadConfig("q_step must divide both q_max and 2")
        if self.q_max < 2:
            raise BadConfig("q grid must reach q=2")
        mode = self.detrend
        if mode.startswith("poly:"):
            try:
                order = int(mode[5:])
            except ValueError:
                raise BadConfig(f"bad polynomial order in {mode!r}") from None
            if not 0 <= order <= 5:
                raise BadConfig("polynomial order must lie in [0, 5]")
        elif mode not in ("eemd-window", "eemd-global"):
            raise BadConfig(f"unknown detrend mode {mode!r}")
        if self.ensemble_size is not None and self.ensemble_size < 1:
            raise BadConfig("ensemble_size must be >= 1")
        if not 0 < self.noise_ratio < 1:
            raise BadConfig("noise_ratio must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise BadConfig("seed must be a 64-bit unsigned integer")
        if not (self.band >= 0 and math.isfinite(self.band)):
            raise BadConfig("band must be >= 0")
        if self.min_windows < 1:
            raise BadConfig("min_windows must be >= 1")
        bad = set(self.emit) - set(EMIT_CHOICES)
        if bad or not self.emit:
            raise BadConfig(f"emit must be a nonempty subset of {', '.join(EMIT_CHOICES)}")
        if self.workers is not None and self.workers < 1:
            raise BadConfig("workers must be >= 1")
        if self.jobs < 1:
            raise BadConfig("jobs must be >= 1")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        d["labels"] = list(self.sector_labels())
        return d

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.as_dict()).encode()).hexdigest()


def _parse_tuple(raw: str) -> tuple:
    return tuple(p.strip() for p in raw.split(",") if p.strip())


def _parse_optional_int(raw: str):
    return None if raw.strip().lower() in ("", "none", "auto") else int(raw)


_FIELD_PARSERS = {
    "inputs": _parse_tuple, "labels": _parse_tuple, "emit": _parse_tuple,
    "date_column": str, "value_column": str, "detrend": str, "output_dir": str,
    "s_min": int, "crossover": int, "s_max": int, "per_regime": int,
    "min_windows": int, "seed": int, "jobs": int,
    "q_max": float, "q_step": float, "noise_ratio": float, "band": float,
    "ensemble_size": _parse_optional_int, "workers": _parse_optional_int,
}


def parse_config_text(text: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadConfig(f"config line {n}: expected key=value")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_PARSERS:
            raise BadConfig(f"config line {n}: unknown key {key!r}")
        try:
            out[key] = _FIELD_PARSERS[key](raw)
        except ValueError:
            raise BadConfig(f"config line {n}: bad value {raw!r} for {key}") from None
    return out


def canonical_json(obj) -> str:
    return json.dumps(_finite(obj), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _finite(obj.item())
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_finite(v) for v in obj.tolist()]
    return obj


# analysis ------------------------------------------------------------------

@dataclass
class SectorReport:
    label: str
    source: str
    n_values: int = 0
    input_kind: str = ""
    reports: dict = field(default_factory=dict)      # regime -> SpectrumReport | None
    curves: dict = field(default_factory=dict)       # regime -> HurstCurve | None
    surface: object = None
    warnings: list = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def to_dict(self) -> dict:
        meta = sector_meta(self.label)
        regimes = {}
        for regime in Regime:
            rep = self.reports.get(regime.value)
            curve = self.curves.get(regime.value)
            if rep is None and curve is None:
                regimes[regime.value] = None
                continue
            d = rep.to_dict() if rep is not None else {"regime": regime.value}
            if curve is not None:
                d["hurst"] = [[f.q, f.h, f.stderr, f.r2, f.n_scales] for f in curve.fits]
            regimes[regime.value] = d
        return {
            "label": self.label,
            "source": self.source,
            "symbol": meta.symbol if meta else None,
            "name": meta.name if meta else None,
            "stock_count": meta.stock_count if meta else None,
            "n_values": self.n_values,
            "input_kind": self.input_kind,
            "regimes": regimes,
            "warnings": list(self.warnings),
        }


def _load(path: str, label: str, cfg: RunConfig):
    if path.lower().endswith(".tsv"):
        return read_tsv(path, Kind.SYNTHETIC, label)
    return log_returns(load_series(path, cfg.date_column, cfg.value_column, label))


def run_sector(path: str, label: str, cfg: RunConfig) -> SectorReport:
    rep = SectorReport(label, path)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            series = _load(path, label, cfg)
            rep.n_values = len(series)
            rep.input_kind = series.kind.value
            result = analyze(series, cfg.params())
        counts = Counter(f"{w.category.__name__}: {w.message}" for w in caught)
        rep.warnings.extend(f"{msg} (x{n})" if n > 1 else msg for msg, n in sorted(counts.items()))
        rep.warnings.extend(result.warnings)
        rep.surface = result.surface
        for regime in Regime:
            curve = result.curve(regime)
            rep.curves[regime.value] = curve
            rep.reports[regime.value] = None
            if curve is None:
                rep.warnings.append(f"{regime.value} regime: no H(q) fit")
                continue
            try:
                rep.reports[regime.value] = report_for(curve, cfg.band)
            except (FractsectError, ValueError) as exc:
                rep.warnings.append(f"{regime.value} regime: {exc}")
    except (FractsectError, OSError, UnicodeDecodeError) as exc:
        rep.error = f"{type(exc).__name__}: {exc}"
    return rep


TABLE_COLUMNS = ("sector", "delta_alpha", "alpha_max", "alpha_0", "alpha_min", "H2", "dH", "B")


def _fmt2(x) -> str:
    return f"{x:.2f}" if x is not None and math.isfinite(x) else "nan"


def format_table(sectors, digest: str, regime: str = "long") -> str:
    lines = [f"# config_sha256={digest}",
             f"# regime={regime}; values rounded to 2 decimals"]
    width = max([len(TABLE_COLUMNS[0])] + [len(s.label) for s in sectors if s.ok])
    lines.append(f"{TABLE_COLUMNS[0]:<{width}}" + "".join(f"  {c:>11}" for c in TABLE_COLUMNS[1:]))
    for s in sectors:
        if not s.ok:
            continue
        r = s.reports.get(regime)
        vals = ((r.delta_alpha, r.alpha_max, r.alpha_0, r.alpha_min, r.H2, r.dH, r.B)
                if r is not None else (None,) * 7)
        lines.append(f"{s.label:<{width}}" + "".join(f"  {_fmt2(v):>11}" for v in vals))
    for s in sectors:
        if not s.ok:
            lines.append(f"# failed {s.label}: {s.error}")
    n_warn = sum(len(s.warnings) for s in sectors if s.ok)
    if n_warn:
        lines.append(f"# {n_warn} warning(s); see report.json")
    return "\n".join(lines) + "\n"


def report_document(sectors, cfg: RunConfig) -> dict:
    return {
        "version": __version__,
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "sectors": [s.to_dict() for s in sectors if s.ok],
        "failures": [{"label": s.label, "source": s.source, "error": s.error}
                     for s in sectors if not s.ok],
    }


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_plot_data(sector: SectorReport, outdir: Path, digest: str) -> None:
    d = outdir / sector.label
    d.mkdir(parents=True, exist_ok=True)
    comment = f"config_sha256={digest}"
    with open(d / "fq.tsv", "w", encoding="utf-8", newline="\n") as fh:
        sector.surface.write_tsv(fh, header_comment=comment)
    with open(d / "hq.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {comment}\n")
        fh.write("q\tH\tstderr\tr2\tregime\n")
        for regime in Regime:
            curve = sector.curves.get(regime.value)
            if curve is not None:
                curve.write_tsv(fh, header=False)
    tau_rows = [f"# {comment}\n", "q\ttau\tregime\n"]
    fa_rows = [f"# {comment}\n", "alpha\tf\tq\tedge\tregime\n"]
    for regime in Regime:
        rep = sector.reports.get(regime.value)
        if rep is None:
            continue
        tau_rows += [f"{q:g}\t{t:.17g}\t{regime.value}\n" for q, t in zip(rep.q, rep.tau)]
        sp = rep.spectrum
        fa_rows += [f"{a:.17g}\t{f:.17g}\t{q:g}\t{int(e)}\t{regime.value}\n"
                    for a, f, q, e in zip(sp.alpha, sp.f, sp.q, sp.edge)]
    _write(d / "tau.tsv", "".join(tau_rows))
    _write(d / "falpha.tsv", "".join(fa_rows))


def cmd_analyze(cfg: RunConfig) -> int:
    cfg.validate()
    labels = cfg.sector_labels()
    total = len(cfg.inputs)
    log.info("analyzing %d input(s) with %s detrending", total, cfg.detrend)

    def task(item):
        i, (path, label) = item
        rep = run_sector(path, label, cfg)
        if rep.ok:
            long = rep.reports.get("long")
            h2 = f"H2={long.H2:.3f}" if long is not None else "no long regime"
            log.info("[%d/%d] %s: %s, %d warning(s)", i + 1, total, label, h2, len(rep.warnings))
        else:
            log.warning("[%d/%d] %s failed: %s", i + 1, total, label, rep.error)
        return rep

    items = list(enumerate(zip(cfg.inputs, labels)))
    if cfg.jobs > 1:
        with ThreadPoolExecutor(cfg.jobs) as pool:
            sectors = list(pool.map(task, items))
    else:
        sectors = [task(it) for it in items]

    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    if "table" in cfg.emit:
        _write(outdir / "report.txt", format_table(sectors, digest))
    if "json" in cfg.emit:
        _write(outdir / "report.json", canonical_json(report_document(sectors, cfg)))
    if "plotdata" in cfg.emit:
        for s in sectors:
            if s.ok:
                write_plot_data(s, outdir, digest)
    n_ok = sum(s.ok for s in sectors)
    log.info("%d/%d sector(s) succeeded; output in %s", n_ok, total, outdir)
    return EXIT_OK if n_ok else EXIT_FAILED


# synth ---------------------------------------------------------------------

def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.kind == "cascade":
        series = binomial_cascade(CascadeSpec(args.levels, args.a, seed))
        default = f"cascade-n{args.levels}-a{args.a:g}.tsv"
    elif args.kind == "fgn":
        series = fgn(FgnSpec(args.n, args.hurst, seed))
        default = f"fgn-n{args.n}-h{args.hurst:g}-seed{seed}.tsv"
    else:
        src = read_tsv(args.input, Kind.SYNTHETIC, Path(args.input).stem)
        series = shuffle(src, seed)
        default = f"{Path(args.input).stem}-shuffle-seed{seed}.tsv"
    out = Path(args.out or default)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        write_tsv(series, fh)
    log.info("wrote %d values to %s", len(series), out)
    return EXIT_OK


# validate ------------------------------------------------------------------

def cmd_validate(args) -> int:
    from .validation import Suite, all_passed, format_table as validation_table

    seed = args.seed if args.seed is not None else _default_seed()
    suite = Suite(quick=args.quick, seed=seed, workers=args.workers)
    outcomes = suite.run(progress=lambda name: log.info("running %s", name))
    table = validation_table(outcomes)
    sys.stdout.write(table)
    sys.stdout.flush()
    if args.out:
        _write(Path(args.out), table)
    for key, secs in suite.timings.items():
        log.info("time %-22s %8.1f s", key, secs)
    return EXIT_OK if all_passed(outcomes) else EXIT_FAILED


# argument parsing ----------------------------------------------------------

def _add_analyze_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("inputs", nargs="*", help="price CSV files (or .tsv synthetic increments)")
    p.add_argument("--config", help="flat key=value file; flags given here override it")
    p.add_argument("--labels", help="comma-separated sector labels (default: file stems)")
    p.add_argument("--date-column")
    p.add_argument("--value-column")
    p.add_argument("--s-min", type=int)
    p.add_argument("--crossover", type=int)
    p.add_argument("--s-max", type=int)
    p.add_argument("--per-regime", type=int, help="scales per regime")
    p.add_argument("--q-max", type=float)
    p.add_argument("--q-step", type=float)
    p.add_argument("--detrend", help="eemd-window, eemd-global or poly:k")
    p.add_argument("-M", "--ensemble-size", type=int)
    p.add_argument("--noise-ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--band", type=float, help="persistence boundary band around H2=0.5")
    p.add_argument("--min-windows", type=int)
    p.add_argument("-o", "--output-dir")
    p.add_argument("--emit", help="comma-separated subset of table,json,plotdata")
    p.add_argument("--workers", type=int, help="threads per sector for window work")
    p.add_argument("--jobs", type=int, help="sectors analysed concurrently")


def build_config(args) -> RunConfig:
    values = {"seed": _default_seed()}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise BadConfig(f"cannot read config: {exc}") from None
        values.update(parse_config_text(text))
    for name in _FIELD_PARSERS:
        if name == "inputs":
            continue
        v = getattr(args, name, None)
        if v is None:
            continue
        values[name] = _parse_tuple(v) if name in ("labels", "emit") else v
    if args.inputs:
        values["inputs"] = tuple(args.inputs)
    return RunConfig(**values)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractsect",
        description="Overlapping-window EEMD-MFDFA for sector price series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_an = sub.add_parser("analyze", help="analyse price files and write reports")
    _add_analyze_flags(p_an)

    p_syn = sub.add_parser("synth", help="write a synthetic series as TSV")
    kinds = p_syn.add_subparsers(dest="kind", required=True)
    p_c = kinds.add_parser("cascade", help="deterministic binomial cascade")
    p_c.add_argument("--levels", type=int, required=True)
    p_c.add_argument("--a", type=float, default=0.6)
    p_f = kinds.add_parser("fgn", help="fractional Gaussian noise")
    p_f.add_argument("--n", type=int, required=True)
    p_f.add_argument("--hurst", type=float, required=True)
    p_s = kinds.add_parser("shuffle", help="random permutation of a TSV series")
    p_s.add_argument("--in", dest="input", required=True)
    for p in (p_c, p_f, p_s):
        p.add_argument("--seed", type=int)
        p.add_argument("-o", "--out", help="output TSV path")

    p_val = sub.add_parser("validate", help="run the built-in oracle suite")
    p_val.add_argument("--quick", action="store_true",
                       help="smaller inputs, bands widened 1.5x")
    p_val.add_argument("--seed", type=int)
    p_val.add_argument("--workers", type=int)
    p_val.add_argument("--out", help="also write the table to this file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose else logging.INFO)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root = logging.getLogger("fractsect")
    root.handlers[:] = [handler]
    root.setLevel(level)
    root.propagate = False
    try:
        if args.command == "analyze":
            return cmd_analyze(build_config(args))
        if args.command == "synth":
            return cmd_synth(args)
        return cmd_validate(args)
    except BadConfig as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except FractsectError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())

"""Config-driven sweeps: theoretical rates, simulated rates, CSV and SVG output.

Config grammar (INI, ``#`` or ``;`` comments)::

    [sweep]
    variable = snr_db            # snr_db | bec_nonerasure | grid
    start = 0
    stop = 14
    step = 1
    # grid only: the second axis (Relay-1 SNR in dB); the first is Relay-2
    start2 = 0
    stop2 = 14
    step2 = 0.5
    protocols = PCF, CF, DF, AF, cutset
    mode = theory                # theory | simulate | both

    [simulation]                 # ProtocolConfig fields, all optional
    k = 4000
    trials = 200
    base_seed = 0
    backoffs = 1.0, 1.1, 1.2

    [protocol.DF]                # per-protocol overrides of [simulation]
    trials = 100

    [output]
    csv = results.csv
    plot = results.svg

For ``snr_db`` and ``bec_nonerasure`` all four links share one channel. For
``grid`` the sweep column reads ``<relay2_db>:<relay1_db>`` and each relay's two
links share one BI-AWGN channel.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from pcf_relay.channels import ChannelModel
from pcf_relay.info import correlation_model, entropies
from pcf_relay.optimizer import (
    NetworkCapacities,
    af_rate,
    best_relay_df_rate,
    cutset_rate,
    optimize_pcf,
    pure_cf_rate,
)
from pcf_relay.simulator import ProtocolConfig, run_protocol_batch

CSV_HEADER = ["sweep", "protocol", "theory_rate", "sim_rate", "reliability", "trials", "seed", "error"]
PROTOCOLS = ("PCF", "CF", "DF", "AF", "cutset")
VARIABLES = ("snr_db", "bec_nonerasure", "grid")
MODES = ("theory", "simulate", "both")

# ProtocolConfig fields settable from [simulation] / [protocol.X]
_SIM_KEYS = {
    "k": int,
    "trials": int,
    "base_seed": int,
    "lt_c": float,
    "lt_delta": float,
    "precode_seed": int,
    "overhead_margin": float,
    "margins": "floats",
    "backoffs": "floats",
    "df_granularity": int,
    "df_cap_factor": int,
    "reliability_target": float,
    "max_joint_iter": int,
    "inner_iter": int,
    "schedule": str,
    "fusion": str,
    "raptor_max_iter": int,
    "jobs": int,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Range:
    start: float
    stop: float
    step: float

    def values(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [round(self.start + i * self.step, 10) for i in range(n + 1)]


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    range: Range
    range2: Range | None = None
    protocols: tuple[str, ...] = ("PCF", "CF", "DF", "AF", "cutset")
    mode: str = "theory"
    simulation: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)  # protocol -> dict
    csv_path: str | None = None
    plot_path: str | None = None

    def sim_config(self, protocol: str, channels) -> ProtocolConfig:
        kw = {"k": 4000, "trials": 200, "max_joint_iter": 40, "df_granularity": 100}
        kw.update(self.simulation)
        kw.update(self.overrides.get(protocol, {}))
        return ProtocolConfig(protocol, tuple(channels), **kw)

    @property
    def base_seed(self) -> int:
        return int(self.simulation.get("base_seed", 0))


# -- parsing ------------------------------------------------------------------------


def _line_of(text: str, section: str, key: str | None) -> int:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return 0


def _convert(kind, raw: str):
    if kind == "floats":
        vals = tuple(float(x) for x in re.split(r"[,\s]+", raw.strip()) if x)
        if not vals:
            raise ValueError("empty list")
        return vals
    return kind(raw)


def parse_config(text: str) -> SweepConfig:
    """Parse and validate an INI sweep config; errors carry line numbers."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None

    def fail(section, key, msg):
        raise ConfigError(f"line {_line_of(text, section, key)}: [{section}] {key}: {msg}")

    if not cp.has_section("sweep"):
        raise ConfigError("line 0: missing [sweep] section")
    sw = cp["sweep"]
    known = {"variable", "start", "stop", "step", "start2", "stop2", "step2", "protocols", "mode"}
    for key in sw:
        if key not in known:
            fail("sweep", key, "unknown key")
    variable = sw.get("variable", "snr_db").strip()
    if variable not in VARIABLES:
        fail("sweep", "variable", f"must be one of {', '.join(VARIABLES)}")

    def rng(suffix):
        vals = []
        for name in ("start", "stop", "step"):
            key = name + suffix
            if key not in sw:
                fail("sweep", key, "required")
            try:
                vals.append(float(sw[key]))
            except ValueError:
                fail("sweep", key, f"not a number: {sw[key]!r}")
        r = Range(*vals)
        if r.step <= 0:
            fail("sweep", "step" + suffix, "step must be positive")
        if r.stop < r.start:
            fail("sweep", "stop" + suffix, "empty range (stop < start)")
        if variable == "bec_nonerasure" and not (0.0 <= r.start and r.stop <= 1.0):
            fail("sweep", "start" + suffix, "non-erasure probability must lie in [0, 1]")
        return r

    r1 = rng("")
    r2 = rng("2") if variable == "grid" else None
    protocols = tuple(p.strip() for p in sw.get("protocols", ", ".join(PROTOCOLS)).split(",") if p.strip())
    for p in protocols:
        if p not in PROTOCOLS:
            fail("sweep", "protocols", f"unknown protocol {p!r}")
    if not protocols:
        fail("sweep", "protocols", "no protocols")
    mode = sw.get("mode", "theory").strip()
    if mode not in MODES:
        fail("sweep", "mode", f"must be one of {', '.join(MODES)}")

    def sim_section(name):
        out = {}
        for key, raw in cp[name].items():
            if key not in _SIM_KEYS:
                fail(name, key, "unknown key")
            try:
                out[key] = _convert(_SIM_KEYS[key], raw)
            except ValueError as exc:
                fail(name, key, f"bad value {raw!r} ({exc})")
        return out

    simulation = sim_section("simulation") if cp.has_section("simulation") else {}
    overrides = {}
    for name in cp.sections():
        if name.startswith("protocol."):
            p = name.split(".", 1)[1]
            if p not in PROTOCOLS:
                fail(name, None, f"unknown protocol {p!r}")
            overrides[p] = sim_section(name)
        elif name not in ("sweep", "simulation", "output"):
            fail(name, None, "unknown section")
    out = cp["output"] if cp.has_section("output") else {}
    cfg = SweepConfig(variable, r1, r2, protocols, mode, simulation, overrides,
                      out.get("csv"), out.get("plot"))
    try:  # surface ProtocolConfig validation early
        cfg.sim_config("PCF", (ChannelModel.bec(0.0),) * 4)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"line {_line_of(text, 'simulation', None)}: [simulation] {exc}") from None
    return cfg


def _fmt_list(vals) -> str:
    return ", ".join(repr(float(v)) for v in vals)


def serialize_config(cfg: SweepConfig) -> str:
    lines = ["[sweep]", f"variable = {cfg.variable}"]
    for suffix, r in (("", cfg.range), ("2", cfg.range2)):
        if r is not None:
            lines += [f"start{suffix} = {r.start!r}", f"stop{suffix} = {r.stop!r}", f"step{suffix} = {r.step!r}"]
    lines += [f"protocols = {', '.join(cfg.protocols)}", f"mode = {cfg.mode}"]

    def section(name, d):
        if not d:
            return
        lines.extend(["", f"[{name}]"])
        for key, val in d.items():
            lines.append(f"{key} = {_fmt_list(val) if isinstance(val, tuple) else val!r}".replace("'", ""))

    section("simulation", cfg.simulation)
    for p, d in cfg.overrides.items():
        section(f"protocol.{p}", d)
    out = {k: v for k, v in (("csv", cfg.csv_path), ("plot", cfg.plot_path)) if v}
    if out:
        lines.extend(["", "[output]"] + [f"{k} = {v}" for k, v in out.items()])
    return "\n".join(lines) + "\n"


def load_config(path) -> SweepConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


# -- sweeping -----------------------------------------------------------------------


@dataclass
class ResultRow:
    sweep: str
    protocol: str
    theory_rate: float | None = None
    sim_rate: float | None = None
    reliability: float | None = None
    trials: int | None = None
    seed: int | None = None
    error: str = ""

    def cells(self) -> list[str]:
        def f(x):
            return "" if x is None else f"{x:.6f}"

        return [self.sweep, self.protocol, f(self.theory_rate), f(self.sim_rate), f(self.reliability),
                "" if self.trials is None else str(self.trials), "" if self.seed is None else str(self.seed),
                self.error]


def sweep_points(cfg: SweepConfig) -> list[tuple[str, tuple]]:
    """``(label, channels)`` for every sweep point, in sweep order."""
    pts = []
    if cfg.variable == "grid":
        for r2 in cfg.range.values():
            for r1 in cfg.range2.values():
                a, b = ChannelModel.biawgn_db(r1), ChannelModel.biawgn_db(r2)
                pts.append((f"{r2:g}:{r1:g}", (a, b, a, b)))
        return pts
    for v in cfg.range.values():
        ch = ChannelModel.bec(1.0 - v) if cfg.variable == "bec_nonerasure" else ChannelModel.biawgn_db(v)
        pts.append((f"{v:g}", (ch, ch, ch, ch)))
    return pts


def theory_rates(channels, protocols=PROTOCOLS) -> dict[str, float]:
    caps = NetworkCapacities.from_channels(*channels)
    e = entropies(correlation_model(channels[0], channels[1]))
    rate = {
        "PCF": lambda: optimize_pcf(caps, e).rate,
        "CF": lambda: pure_cf_rate(caps, e),
        "DF": lambda: best_relay_df_rate(caps),
        "AF": lambda: af_rate(caps),
        "cutset": lambda: cutset_rate(caps),
    }
    return {p: float(rate[p]()) for p in protocols}


def _theory_row(label, channels, protocols, seed):
    try:
        rates = theory_rates(channels, protocols)
        return [ResultRow(label, p, theory_rate=rates[p], seed=seed) for p in protocols]
    except Exception as exc:  # recorded per row, the sweep goes on
        return [ResultRow(label, p, seed=seed, error=f"{type(exc).__name__}: {exc}") for p in protocols]


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> list[ResultRow]:
    """Rows ordered by sweep point, then by protocol in canonical order."""
    order = {p: i for i, p in enumerate(PROTOCOLS)}
    protocols = sorted(cfg.protocols, key=order.__getitem__)
    points = sweep_points(cfg)
    seed = cfg.base_seed
    if cfg.mode in ("theory", "both"):
        if jobs > 1:
            with ProcessPoolExecutor(jobs) as ex:
                theory = list(ex.map(_theory_row, *zip(*[(l, c, protocols, seed) for l, c in points])))
        else:
            theory = [_theory_row(l, c, protocols, seed) for l, c in points]
    else:
        theory = [[ResultRow(l, p, seed=seed) for p in protocols] for l, _ in points]
    rows = []
    for (label, channels), trow in zip(points, theory):
        for row in trow:
            if cfg.mode != "theory" and row.protocol != "cutset":
                try:
                    sim = cfg.sim_config(row.protocol, channels)
                    if jobs > 1 and "jobs" not in cfg.simulation:
                        sim = replace(sim, jobs=jobs)
                    stats = run_protocol_batch(sim)
                    row.sim_rate, row.reliability, row.trials = stats.rate, stats.reliability, stats.trials
                    row.seed = sim.base_seed
                except Exception as exc:
                    row.error = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return rows


# -- output -------------------------------------------------------------------------


def csv_text(table: list[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in table:
        w.writerow(row.cells())
    return buf.getvalue()


def emit_csv(table: list[ResultRow], path) -> None:
    if not table:
        raise ValueError("refusing to write an empty table")
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(csv_text(table))
    except OSError as exc:
        raise OSError(f"cannot write CSV to {p}: {exc}") from exc


def read_csv(path) -> list[ResultRow]:
    def f(x):
        return float(x) if x != "" else None

    rows = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.append(ResultRow(r["sweep"], r["protocol"], f(r["theory_rate"]), f(r["sim_rate"]),
                                  f(r["reliability"]), int(r["trials"]) if r["trials"] else None,
                                  int(r["seed"]) if r["seed"] else None, r["error"]))
    return rows


def gain_grid(table: list[ResultRow], use_sim: bool = False):
    """``(relay2_axis, relay1_axis, gain[i2, i1])`` of PCF minus DF for grid sweeps."""
    val = {}
    for row in table:
        v = row.sim_rate if use_sim else row.theory_rate
        val[(row.sweep, row.protocol)] = np.nan if v is None else v
    labels = sorted({row.sweep for row in table}, key=lambda s: tuple(float(x) for x in s.split(":")))
    r2 = sorted({float(s.split(":")[0]) for s in labels})
    r1 = sorted({float(s.split(":")[1]) for s in labels})
    g = np.full((len(r2), len(r1)), np.nan)
    for s in labels:
        a, b = (float(x) for x in s.split(":"))
        g[r2.index(a), r1.index(b)] = val.get((s, "PCF"), np.nan) - val.get((s, "DF"), np.nan)
    return np.array(r2), np.array(r1), g


XLABELS = {"snr_db": "SNR (dB)", "bec_nonerasure": "non-erasure probability"}


def emit_plot(table: list[ResultRow], path, title: str | None = None, xlabel: str = "sweep value") -> None:
    """Write an SVG: one curve per protocol, or a PCF-DF gain map for grid sweeps."""
    if not table:
        raise ValueError("refusing to plot an empty table")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "pcf-relay"
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    is_grid = ":" in table[0].sweep
    has_sim = any(r.sim_rate is not None for r in table)
    if is_grid:
        r2, r1, g = gain_grid(table, use_sim=has_sim and all(r.theory_rate is None for r in table))
        im = ax.imshow(g, origin="lower", aspect="auto", cmap="viridis",
                       extent=(r1[0], r1[-1], r2[0], r2[-1]) if len(r1) > 1 and len(r2) > 1 else None)
        fig.colorbar(im, ax=ax, label="rate gain (bits/use)")
        ax.set_xlabel("Relay-1 SNR (dB)")
        ax.set_ylabel("Relay-2 SNR (dB)")
    else:
        order = []
        for r in table:
            if r.protocol not in order:
                order.append(r.protocol)
        for i, p in enumerate(order):
            rows = [r for r in table if r.protocol == p]
            x = np.array([float(r.sweep) for r in rows])
            color = f"C{i}"
            th = np.array([np.nan if r.theory_rate is None else r.theory_rate for r in rows])
            sim = np.array([np.nan if r.sim_rate is None else r.sim_rate for r in rows])
            if np.isfinite(th).any():
                ax.plot(x, th, "-", color=color, label=p)
                if np.isfinite(sim).any():
                    ax.plot(x, sim, "o", color=color, mfc="none")
            else:
                ax.plot(x, sim, "o--", color=color, label=p)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("rate (bits/use)")
        ax.grid(alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    if title:
        ax.set_title(title)
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(p, format="svg", metadata={"Date": None, "Creator": None})
    except OSError as exc:
        raise OSError(f"cannot write plot to {p}: {exc}") from exc
    finally:
        plt.close(fig)


# -- CLI --------------------------------------------------------------------------------


def parse_channel(spec: str) -> ChannelModel:
    """``bec:0.1``, ``bsc:0.05``, ``awgn:8db`` or ``awgn:6.3`` (linear)."""
    try:
        kind, val = spec.split(":", 1)
        kind = kind.strip().lower()
        val = val.strip().lower()
        if kind == "bec":
            return ChannelModel.bec(float(val))
        if kind == "bsc":
            return ChannelModel.bsc(float(val))
        if kind in ("awgn", "biawgn"):
            if val.endswith("db"):
                return ChannelModel.biawgn_db(float(val[:-2]))
            return ChannelModel.biawgn(float(val))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad channel {spec!r}: {exc}") from None
    raise argparse.ArgumentTypeError(f"bad channel {spec!r}: expected bec:/bsc:/awgn:")


def _apply_flags(cfg: SweepConfig, args, mode: str | None) -> SweepConfig:
    sim = dict(cfg.simulation)
    if args.seed is not None:
        sim["base_seed"] = args.seed
    if args.trials is not None:
        sim["trials"] = args.trials
    if getattr(args, "k", None) is not None:
        sim["k"] = args.k
    return replace(
        cfg,
        simulation=sim,
        mode=mode or args.mode or cfg.mode,
        csv_path=args.out_csv or cfg.csv_path,
        plot_path=args.out_plot or cfg.plot_path,
    )


def _add_common(p: argparse.ArgumentParser, with_mode: bool):
    p.add_argument("--config", required=True, help="sweep config (INI)")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--trials", type=int, help="trials per simulated point")
    p.add_argument("--k", type=int, help="information bits per frame")
    p.add_argument("--out-csv", help="CSV output path")
    p.add_argument("--out-plot", help="SVG output path")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    if with_mode:
        p.add_argument("--mode", choices=MODES)
    else:
        p.set_defaults(mode=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcf-relay", description="PCF diamond-relay rates and simulations")
    sub = ap.add_subparsers(dest="verb", required=True)
    _add_common(sub.add_parser("theory", help="theoretical rates over a sweep"), False)
    _add_common(sub.add_parser("simulate", help="simulated rates over a sweep"), False)
    _add_common(sub.add_parser("sweep", help="run a sweep in the configured mode"), True)
    pp = sub.add_parser("plan", help="print the optimal PCF plan for given channels")
    pp.add_argument("--all", type=parse_channel, help="one channel for all four links")
    for name in ("s1", "s2", "d1", "d2"):
        pp.add_argument(f"--{name}", type=parse_channel)
    pp.add_argument("--rates", action="store_true", help="also print every protocol's rate")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "plan":
            chans = [getattr(args, n) or args.all for n in ("s1", "s2", "d1", "d2")]
            if any(c is None for c in chans):
                raise ConfigError("give --all or each of --s1 --s2 --d1 --d2")
            caps = NetworkCapacities.from_channels(*chans)
            plan = optimize_pcf(caps, correlation_model(chans[0], chans[1]))
            sys.stdout.write(plan.to_record())
            if args.rates:
                for p, r in theory_rates(chans).items():
                    sys.stdout.write(f"# {p} {r:.6f}\n")
            return 0
        mode = {"theory": "theory", "simulate": "simulate"}.get(args.verb)
        cfg = _apply_flags(load_config(args.config), args, mode)
        table = run_sweep(cfg, jobs=args.jobs)
        if cfg.csv_path:
            emit_csv(table, cfg.csv_path)
        else:
            sys.stdout.write(csv_text(table))
        if cfg.plot_path:
            emit_plot(table, cfg.plot_path, xlabel=XLABELS.get(cfg.variable, "sweep value"))
        return 1 if any(r.error for r in table) else 0
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

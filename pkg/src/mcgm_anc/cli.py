"""Command-line entry point.

Exit codes: 0 success, 1 validation/usage error, 2 divergence. Failures
print one ``status=... reason=...`` line on stderr.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .config import RunConfig
from .errors import DivergenceError, FormatError, InvalidArgumentError, NumericError
from .fileio import (emit_csv, emit_rows, read_impulse_response, read_key_values, read_wav,
                     write_impulse_response, write_key_values, write_wav)
from .fxlms import Fixed, Normalized, StepSizeStrategy, Theoretical, run_fxlms
from .harness import broadband_dataset, compare_strategies, robustness_sweep, split_dataset
from .plant import Plant, disturbance, synthetic_plant
from .signals import Signal, rng_from_seed
from .trainer import (TrainerConfig, TrainerResult, is_unimodal, loss_scan, sample_task,
                      train)

log = logging.getLogger("mcgm_anc")

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# building blocks shared by subcommands
# ---------------------------------------------------------------------------


def _provenance(cfg: RunConfig, command: str) -> dict:
    echo = {"command": command, "version": __version__}
    echo.update({k: v for k, v in cfg.echo().items() if k != "output_dir"})
    return echo


def build_plant(cfg: RunConfig) -> Plant:
    plant = synthetic_plant(
        cfg.sample_rate_hz,
        primary_length=cfg.primary_length_samples, primary_delay=cfg.primary_delay_samples,
        primary_decay=cfg.primary_decay,
        secondary_length=cfg.secondary_length_samples,
        secondary_delay=cfg.secondary_delay_samples, secondary_decay=cfg.secondary_decay,
        gain=cfg.path_gain, seed=cfg.path_seed,
    )
    primary = read_impulse_response(cfg.primary_path_file) if cfg.primary_path_file else plant.primary
    secondary = (read_impulse_response(cfg.secondary_path_file)
                 if cfg.secondary_path_file else plant.secondary)
    estimate = (read_impulse_response(cfg.secondary_estimate_file)
                if cfg.secondary_estimate_file else None)
    return Plant(primary, secondary, estimate, cfg.sample_rate_hz,
                 allow_estimate_length_mismatch=estimate is not None)


def load_references(cfg: RunConfig) -> list[Signal]:
    """Reference signals: WAV files when configured, else synthetic bands."""
    files = cfg.noise_file_list
    if files:
        out = []
        for path in files:
            sig = read_wav(path)
            if sig.sample_rate_hz != cfg.sample_rate_hz:
                raise InvalidArgumentError(
                    f"{path}: sample rate {sig.sample_rate_hz:g} Hz != {cfg.sample_rate_hz:g} Hz"
                )
            rms = float(np.sqrt(np.mean(sig.samples ** 2))) if len(sig) else 0.0
            if rms == 0.0:
                raise InvalidArgumentError(f"{path}: silent recording")
            out.append(sig.with_samples(sig.samples / rms))
        return out
    return broadband_dataset(cfg.sample_rate_hz, cfg.band_list, cfg.duration_seconds,
                             cfg.seed, cfg.bandpass_taps)


def split_references(cfg: RunConfig):
    return split_dataset(load_references(cfg), cfg.train_fraction)


def trainer_config(cfg: RunConfig) -> TrainerConfig:
    return TrainerConfig(K=cfg.epochs, lam=cfg.forgetting_factor, alpha=cfg.learning_rate,
                         mu_init=cfg.mu_init, mu_min=cfg.mu_min, mu_max=cfg.mu_max,
                         N=cfg.filter_length, seed=cfg.seed, gradient=cfg.gradient_mode)


def run_training(cfg: RunConfig, plant: Plant, train_refs: Sequence[Signal]) -> TrainerResult:
    dataset = [(x, disturbance(plant, x)) for x in train_refs]
    return train(dataset, plant, trainer_config(cfg))


def learned_mu(cfg: RunConfig, plant: Plant, train_refs: Sequence[Signal]) -> float:
    if cfg.mu_file:
        values = read_key_values(cfg.mu_file)
        if "mu" not in values:
            raise FormatError(f"{cfg.mu_file}: no 'mu' entry", "mu")
        return float(values["mu"])
    return run_training(cfg, plant, train_refs).mu_final


def parse_strategy(name: str, cfg: RunConfig, mcgm_mu) -> tuple[str, StepSizeStrategy]:
    """``mcgm``, ``theoretical[:L]``, ``normalized[:mu_bar]`` or ``fixed:<mu>``."""
    kind, _, arg = name.partition(":")
    try:
        if kind == "mcgm":
            return name, Fixed(mcgm_mu())
        if kind == "theoretical":
            L = int(arg) if arg else (cfg.theoretical_delay_samples or None)
            return name, Theoretical(L)
        if kind == "normalized":
            mu_bar = float(arg) if arg else cfg.normalized_mu_bar
            return name, Normalized(mu_bar, cfg.normalized_epsilon)
        if kind == "fixed" and arg:
            return name, Fixed(float(arg))
    except ValueError:
        pass
    raise InvalidArgumentError(f"unknown strategy {name!r}")


def _strategies(cfg: RunConfig, names: Sequence[str], plant: Plant,
                train_refs: Sequence[Signal]) -> list[tuple[str, StepSizeStrategy]]:
    cache: dict[str, float] = {}

    def mcgm_mu():
        if "mu" not in cache:
            cache["mu"] = learned_mu(cfg, plant, train_refs)
        return cache["mu"]

    return [parse_strategy(n, cfg, mcgm_mu) for n in names]


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_paths(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    write_impulse_response(plant.primary, _out(cfg, "primary.csv"))
    write_impulse_response(plant.secondary, _out(cfg, "secondary.csv"))
    write_impulse_response(plant.secondary_estimate, _out(cfg, "secondary_estimate.csv"))
    print(f"wrote primary ({len(plant.primary)} taps), secondary ({len(plant.secondary)} taps)")
    return EXIT_OK


def cmd_gen_noise(cfg: RunConfig) -> int:
    signals = broadband_dataset(cfg.sample_rate_hz, cfg.band_list, cfg.duration_seconds,
                                cfg.seed, cfg.bandpass_taps)
    comment = _kv_comment(_provenance(cfg, "gen-noise"))
    for (lo, hi), sig in zip(cfg.band_list, signals):
        path = _out(cfg, f"noise_{lo:g}-{hi:g}hz.wav")
        write_wav(sig.with_samples(sig.samples * cfg.wav_scale), path, comment)
        print(path)
    return EXIT_OK


def _kv_comment(echo: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in echo.items())


def cmd_train(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    train_refs, _ = split_references(cfg)
    result = run_training(cfg, plant, train_refs)
    echo = _provenance(cfg, "train")
    artifact = {"mu": result.mu_final, "K": cfg.epochs, "lambda": cfg.forgetting_factor,
                "alpha": cfg.learning_rate, "seed": cfg.seed,
                "dataset_digest": result.dataset_digest}
    artifact.update({f"config.{k}": v for k, v in echo.items()})
    write_key_values(artifact, _out(cfg, "mu.txt"))
    K = cfg.epochs
    emit_csv({"epoch": np.arange(K), "mu": result.mu_curve[:K], "loss": result.loss_curve,
              "mu_next": result.mu_curve[1:]}, _out(cfg, "mu_curve.csv"), echo)
    print(f"mu={result.mu_final:.17g}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    train_refs, test_refs = split_references(cfg)
    (label, strategy), = _strategies(cfg, [cfg.strategy], plant, train_refs)
    echo = _provenance(cfg, "simulate")
    echo["strategy_resolved"] = strategy.describe()
    status = EXIT_OK
    for i, x in enumerate(test_refs):
        try:
            trace = run_fxlms(plant, x, strategy, cfg.filter_length)
        except DivergenceError as exc:
            trace = exc.partial
            status = EXIT_DIVERGED
            print(f"status=diverged signal={i} sample={exc.index}", file=sys.stderr)
        n = len(trace.error)
        emit_csv({"time_s": np.arange(n) / cfg.sample_rate_hz,
                  "disturbance": trace.disturbance.samples, "error": trace.error.samples,
                  "control": trace.control_output.samples},
                 _out(cfg, f"simulate_{i}.csv"), echo)
        if n:
            write_wav(trace.error.with_samples(trace.error.samples * cfg.wav_scale),
                      _out(cfg, f"simulate_{i}_error.wav"), _kv_comment(echo))
    return status


def _report_rows(reports, signal_index, extra=()):
    rows = []
    for report in reports:
        for o in report.outcomes:
            for w, value in enumerate(o.nr.values_db):
                rows.append([signal_index, *[report.metadata.get(k) for k in extra], o.label, w,
                             float(w * o.nr.window_seconds), float(value), int(o.diverged)])
    return rows


def _summary_lines(reports, signal_index):
    lines = []
    for report in reports:
        prefix = f"signal={signal_index}"
        if "perturbation" in report.metadata:
            prefix += f" perturbation={report.metadata['perturbation']:g}"
        for o in report.outcomes:
            status = f"diverged@{o.diverged_at}" if o.diverged else "stable"
            lines.append(f"{prefix} strategy={o.label} desc={o.description} "
                         f"first_db={o.first_db:.3f} final_db={o.final_db:.3f} {status}")
    return lines


def cmd_compare(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    train_refs, test_refs = split_references(cfg)
    strategies = _strategies(cfg, cfg.strategy_list, plant, train_refs)
    echo = _provenance(cfg, "compare")
    rows, summary, diverged = [], [], False
    for i, x in enumerate(test_refs):
        report = compare_strategies(plant, x, strategies, cfg.filter_length, cfg.window_seconds)
        rows += _report_rows([report], i)
        summary += _summary_lines([report], i)
        diverged |= report.any_diverged
    header = ["signal", "strategy", "window", "start_s", "nr_db", "diverged"]
    emit_rows(header, rows, _out(cfg, "compare.csv"), echo)
    _write_summary(_out(cfg, "compare_summary.txt"), echo, summary)
    print("\n".join(summary))
    if diverged:
        print("status=diverged reason=one_or_more_strategies_diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_perturb(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    train_refs, test_refs = split_references(cfg)
    strategy = _strategies(cfg, [cfg.strategy], plant, train_refs)[0]
    echo = _provenance(cfg, "perturb")
    rows, summary, diverged = [], [], False
    for i, x in enumerate(test_refs):
        reports = robustness_sweep(plant, x, strategy, cfg.amount_list, cfg.perturb_seed,
                                   cfg.filter_length, cfg.window_seconds)
        rows += _report_rows(reports, i, extra=("perturbation",))
        summary += _summary_lines(reports, i)
        diverged |= any(r.any_diverged for r in reports)
    header = ["signal", "perturbation", "strategy", "window", "start_s", "nr_db", "diverged"]
    emit_rows(header, rows, _out(cfg, "perturb.csv"), echo)
    _write_summary(_out(cfg, "perturb_summary.txt"), echo, summary)
    print("\n".join(summary))
    if diverged:
        print("status=diverged reason=perturbed_run_diverged", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_loss_scan(cfg: RunConfig) -> int:
    plant = build_plant(cfg)
    train_refs, _ = split_references(cfg)
    dataset = [(x, disturbance(plant, x)) for x in train_refs]
    rng = rng_from_seed(cfg.seed)
    tasks = [sample_task(dataset, plant.secondary_estimate, cfg.filter_length, rng)
             for _ in range(cfg.scan_tasks)]
    mus = np.linspace(cfg.scan_mu_min, cfg.scan_mu_max, cfg.scan_points)
    losses = loss_scan(tasks, mus, cfg.forgetting_factor)
    echo = _provenance(cfg, "loss-scan")
    unimodal = is_unimodal(losses)
    echo["unimodal"] = str(unimodal).lower()
    emit_csv({"mu": mus, "loss": losses}, _out(cfg, "loss_scan.csv"), echo)
    best = int(np.argmin(losses))
    print(f"unimodal={str(unimodal).lower()} best_mu={mus[best]:.17g} best_loss={losses[best]:.17g}")
    return EXIT_OK


def _write_summary(path, echo, lines):
    with open(path, "w", newline="") as fh:
        fh.write("".join(f"# {k}={v}\n" for k, v in echo.items()))
        fh.write("\n".join(lines) + "\n")


COMMANDS = {
    "gen-paths": (cmd_gen_paths, "synthesize impulse responses and save them as CSV"),
    "gen-noise": (cmd_gen_noise, "write the broadband noise dataset as WAV files"),
    "train": (cmd_train, "learn mu by Monte Carlo gradient meta-learning"),
    "simulate": (cmd_simulate, "run one strategy and write error traces"),
    "compare": (cmd_compare, "compare step-size strategies by windowed noise reduction"),
    "perturb": (cmd_perturb, "secondary-path robustness sweep"),
    "loss-scan": (cmd_loss_scan, "evaluate the meta-loss on a grid of mu"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcgm-anc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="key=value config file")
        p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("-o", "--output-dir", help="output directory (overrides output_dir)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = list(args.set)
        if args.output_dir:
            overrides.append(f"output_dir={args.output_dir}")
        cfg = RunConfig.load(args.config, overrides)
        func = COMMANDS[args.command][0]
        return func(cfg)
    except UsageError as exc:
        print(f"status=invalid reason=usage detail={exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidArgumentError, FormatError, OSError) as exc:
        print(f"status=invalid reason={type(exc).__name__} detail={exc}", file=sys.stderr)
        return EXIT_INVALID
    except DivergenceError as exc:
        print(f"status=diverged reason=divergence sample={exc.index} detail={exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NumericError as exc:
        print(f"status=diverged reason=numeric detail={exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())

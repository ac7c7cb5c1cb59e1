"""Command-line entry point ``phasespace``.

Subcommands::

    phasespace run CONFIG.toml
    phasespace figures {fig1,...,fig6,all}
    phasespace moments STATE          # fock:3, coherent:1+1j, thermal:0.5, squeezed:0.3, vacuum

Common flags: ``--seed``, ``--out-dir``, ``--threads`` and ``--assert``
(exit status 1 when any acceptance check of the run fails).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import __version__
from .experiments import (
    ConfigError,
    RunConfig,
    figure_config,
    load_config,
    parse_state_spec,
    run_experiment,
)

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="root RNG seed (overrides the config)")
    p.add_argument("--out-dir", default="results", help="directory for CSV and metadata files")
    p.add_argument("--threads", type=int, default=None, help="worker threads for ensemble runs")
    p.add_argument("--assert", dest="assertions", action="store_true",
                   help="exit with status 1 if any acceptance check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasespace", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment described by a TOML file")
    p_run.add_argument("config")
    _common(p_run)

    p_fig = sub.add_parser("figures", help="reproduce the diffraction figures")
    p_fig.add_argument("which", choices=FIGURES + ("all",))
    _common(p_fig)

    p_mom = sub.add_parser("moments", help="tabulate <a^dag a> for a state in P, W and Q")
    p_mom.add_argument("state", help="fock:N[,N...], coherent:Z, thermal:NBAR, squeezed:R or vacuum")
    p_mom.add_argument("--samples", type=int, default=100_000)
    _common(p_mom)
    return parser


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.assertions:
        changes["assertions"] = True
    cfg = dataclasses.replace(cfg, **changes)
    cfg.validate()
    return cfg


def _report(result, cfg: RunConfig, out) -> bool:
    for key, path in result.files.items():
        print(f"{cfg.label}: wrote {key} {path}", file=out)
    for name, ok, detail in result.assertions:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    return result.passed


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            configs = [load_config(args.config)]
        elif args.command == "figures":
            names = FIGURES if args.which == "all" else (args.which,)
            configs = [figure_config(n) for n in names]
        else:
            state = parse_state_spec(args.state)
            configs = [RunConfig(experiment="sample-moments", ensemble_size=args.samples, state=state,
                                 name=f"moments-{args.state.replace(':', '-').replace(',', '_')}")]
        configs = [_apply_flags(c, args) for c in configs]
    except (ConfigError, ValueError, OSError) as exc:
        print(f"phasespace: {exc}", file=sys.stderr)
        return 2
    ok = True
    for cfg in configs:
        result = run_experiment(cfg, args.out_dir)
        ok &= _report(result, cfg, sys.stdout)
    if cfg.assertions and not ok:
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

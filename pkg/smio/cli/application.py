from __future__ import annotations

import logging
import sys

from plumbum import cli, colors

from smio import __version__
from smio.cli.config import STABILITY_MODES, load_config
from smio.cli.harness import TARGETS, learn_model, run_abstract, run_experiment, run_stability
from smio.errors import ConfigError, SMIOError
from smio.formats import parse_vector
from smio.intervals import IntervalVector
from smio.stability import CERTIFIED, NOT_CERTIFIED

logger = logging.getLogger("smio.cli")

LOG_FORMAT = "%(asctime)s %(name)s %(levelname)s: %(message)s"
_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


class SMIO(cli.Application):
    """Interval observer for systems driven by unknown inputs"""

    PROGNAME = colors.green | "smio"
    VERSION = __version__
    COLOR_GROUPS = {"Switches": colors.cyan, "Subcommands": colors.yellow}

    verbose = cli.CountOf(["v", "verbose"], help="Increase logging (repeat for debug output)")
    log_file = cli.SwitchAttr(
        ["--log-file"],
        str,
        argname="PATH",
        envname="SMIO_LOG_FILE",
        help="Also write the log to PATH",
    )

    def main(self, *args):
        self.configure_logging()
        if args:
            print(colors.red | f"Unknown sub-command {args[0]!r}")
            return EXIT_ERROR
        if not self.nested_command:
            self.help()
            return EXIT_ERROR
        return EXIT_OK

    def configure_logging(self):
        root = logging.getLogger("smio")
        root.setLevel(_LEVELS[min(self.verbose, len(_LEVELS) - 1)])
        for handler in [h for h in root.handlers if getattr(h, "smio_cli", False)]:
            root.removeHandler(handler)
            handler.close()
        handlers = [logging.StreamHandler(sys.stderr)]
        if self.log_file:
            handlers.append(logging.FileHandler(self.log_file, encoding="utf-8"))
        for handler in handlers:
            handler.setFormatter(logging.Formatter(LOG_FORMAT))
            handler.smio_cli = True
            root.addHandler(handler)


class ExperimentCommand(cli.Application):
    """Switches shared by every subcommand"""

    config_path = cli.SwitchAttr(
        ["--config"],
        cli.ExistingFile,
        argname="PATH",
        envname="SMIO_CONFIG",
        help="Experiment configuration (INI)",
    )
    seeds = cli.SwitchAttr(["--seed"], int, list=True, argname="N", help="Seed; may be repeated")
    out = cli.SwitchAttr(["--out"], str, argname="DIR", help="Output directory")
    stability_mode = cli.SwitchAttr(
        ["--stability-mode"],
        cli.Set(*STABILITY_MODES),
        help="Abstract the true unknown input map (oracle) or the observer's own bound (learned)",
    )
    horizon = cli.SwitchAttr(["--horizon"], int, argname="K", help="Number of time steps")

    def load(self):
        return load_config(
            self.config_path,
            seeds=tuple(self.seeds or ()) or None,
            out=self.out,
            stability_mode=self.stability_mode,
            horizon=self.horizon,
        )

    def main(self):
        try:
            return self.execute(self.load())
        except SMIOError as ex:
            kind = "configuration error" if isinstance(ex, ConfigError) else type(ex).__name__
            print(colors.red | f"Error ({kind}): {ex}")
            logger.debug("command failed", exc_info=True)
            return EXIT_ERROR

    def execute(self, config):
        raise NotImplementedError()


@SMIO.subcommand("run")
class RunCommand(ExperimentCommand):
    """Simulates, observes and writes a trace per seed; fails on any containment violation"""

    def execute(self, config):
        results = run_experiment(config)
        for res in results:
            if res.ok:
                print(colors.green | f"seed {res.seed}: ok ({res.steps} steps) -> {res.trace_path}")
            else:
                detail = res.fault or f"{res.violations} containment violations"
                print(colors.red | f"seed {res.seed}: {detail} -> {res.trace_path}")
        return EXIT_OK if all(res.ok for res in results) else EXIT_VIOLATION


@SMIO.subcommand("stability")
class StabilityCommand(ExperimentCommand):
    """Computes the stability certificate and the width bounds"""

    def execute(self, config):
        report = run_stability(config)
        color = {CERTIFIED: colors.green, NOT_CERTIFIED: colors.red}.get(
            report.verdict, colors.yellow
        )
        print(f"L* = {report.l_star:.6g}")
        print(color | report.verdict)
        print(f"report written to {config.out / 'stability.ini'}")
        return EXIT_OK


@SMIO.subcommand("abstract")
class AbstractCommand(ExperimentCommand):
    """Samples local and global abstraction bands along one coordinate"""

    target = cli.SwitchAttr(["--target"], cli.Set(*TARGETS), default="f", help="Function to abstract")
    axis = cli.SwitchAttr(["--axis"], int, default=0, help="Argument coordinate to sweep")
    samples = cli.SwitchAttr(
        ["--samples"], cli.Range(2, 100_000), default=101, help="Points along the sweep"
    )
    zero_slope = cli.Flag(["--zero-slope"], help="Pin the slopes to zero (horizontal bounds)")
    steps = cli.SwitchAttr(
        ["--steps"], int, default=0, help="Observer steps to run first, to learn the model"
    )
    box_lo = cli.SwitchAttr(["--box-lo"], str, help="Lower corner of the state framer, comma separated")
    box_hi = cli.SwitchAttr(["--box-hi"], str, help="Upper corner of the state framer, comma separated")

    def execute(self, config):
        box = None
        if self.box_lo is not None or self.box_hi is not None:
            if self.box_lo is None or self.box_hi is None:
                raise ConfigError("--box-lo and --box-hi go together")
            box = IntervalVector(parse_vector(self.box_lo), parse_vector(self.box_hi))
        path, _ = run_abstract(
            config,
            self.target,
            box,
            axis=self.axis,
            samples=self.samples,
            zero_slope=self.zero_slope,
            steps=self.steps,
            seed=config.seeds[0],
        )
        print(f"abstraction samples written to {path}")
        return EXIT_OK


@SMIO.subcommand("dump-model")
class DumpModelCommand(ExperimentCommand):
    """Runs the observer for one seed and prints the learned model table"""

    prune = cli.Flag(["--prune"], help="Drop dominated data before printing")

    def execute(self, config):
        state = learn_model(config, config.seeds[0], config.horizon)
        if self.prune:
            state.model.prune()
        print(state.model.dump(), end="")
        return EXIT_OK


def main():
    SMIO.run()

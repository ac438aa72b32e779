from __future__ import annotations

import importlib
import json
import logging
import sys
from argparse import ArgumentParser, Namespace
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Sequence

from mirm import __version__, config, consts, utils
from mirm.errors import AcceptanceError, ConfigError, MirmError

logger = logging.getLogger(__name__)

MODULES = [
    "mirm.commands.finite",
    "mirm.commands.binomial",
    "mirm.commands.pde",
    "mirm.commands.forward",
    "mirm.commands.axioms",
]

CONVENTIONS = {
    "entropic_normalization": consts.ENTROPIC_NORMALIZATION,
    "entropy_form": consts.ENTROPY_FORMS[0],
    "fk_sign": consts.DEFAULT_FK_SIGN,
    "ferm_sign_reading": consts.FERM_SIGN_READING,
    "h_t_sign": consts.H_T_SIGN,
}


@dataclass(frozen=True)
class RunReport:
    subcommand: str
    header: list[str]
    rows: list[list[Any]]
    seeds: tuple[int, ...] = ()
    passed: bool | None = None
    conventions: dict[str, str] = field(default_factory=lambda: dict(CONVENTIONS))
    version: str = __version__
    elapsed: float | None = None

    def to_json(self) -> str:
        doc = asdict(self)
        doc["rows"] = [[utils.format_value(value) for value in row] for row in self.rows]
        return json.dumps(doc, indent=2, sort_keys=True)


def arg(*flags: str, **kwargs: Any) -> tuple[tuple[str, ...], dict[str, Any]]:
    return flags, kwargs


Handler = Callable[[Namespace], RunReport]


@dataclass
class Command:
    """A subcommand group; each action becomes `mirm <name> <action>`."""

    name: str
    description: str
    actions: dict[str, tuple[str, Handler, tuple]] = field(default_factory=dict)
    handler: Handler | None = None
    arguments: tuple = ()

    def action(self, name: str, help: str, *arguments):
        def register(fn: Handler) -> Handler:
            self.actions[name] = (help, fn, arguments)
            return fn

        return register

    def register(self, subparsers, parent: ArgumentParser) -> None:
        if self.handler is not None:
            parser = subparsers.add_parser(self.name, help=self.description, parents=[parent])
            _add_arguments(parser, self.arguments)
            parser.set_defaults(handler=self.handler, subcommand=self.name)
            return
        group = subparsers.add_parser(self.name, help=self.description)
        actions = group.add_subparsers(dest="action", metavar="ACTION", required=True)
        for name, (help, fn, arguments) in self.actions.items():
            parser = actions.add_parser(name, help=help, parents=[parent])
            _add_arguments(parser, arguments)
            parser.set_defaults(handler=fn, subcommand=f"{self.name} {name}")


def _add_arguments(parser: ArgumentParser, arguments) -> None:
    for flags, kwargs in arguments:
        parser.add_argument(*flags, **kwargs)


def _common_flags() -> ArgumentParser:
    parent = ArgumentParser(add_help=False)
    parent.add_argument("--config", type=Path, help="model description (JSON)")
    parent.add_argument("--claim", type=Path, help="claim description (JSON)")
    parent.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    parent.add_argument("--report", type=Path, help="also write a JSON run report here")
    parent.add_argument("--seed", type=int, default=0)
    parent.add_argument("--paths", type=int, default=100_000)
    parent.add_argument("--gamma", type=float, default=1.0)
    parent.add_argument("--assert", dest="check", action="store_true", help="exit 4 unless the run's acceptance check holds")
    parent.add_argument("--fk-sign", choices=consts.FK_SIGNS, help="override the model's fk_sign")
    return parent


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="mirm", description="Maturity-independent risk measures")
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    parent = _common_flags()
    for module_name in MODULES:
        module = importlib.import_module(module_name)
        module.command.register(subparsers, parent)
    return parser


def _validate(options: Namespace) -> None:
    if options.gamma <= 0:
        raise ConfigError(f"--gamma must be positive, got {options.gamma}")
    if options.paths < 1:
        raise ConfigError(f"--paths must be >= 1, got {options.paths}")
    if options.seed < 0:
        raise ConfigError(f"--seed must be >= 0, got {options.seed}")
    for name in ("config", "claim"):
        path = getattr(options, name, None)
        if path is not None and not path.is_file():
            raise ConfigError(f"--{name} {path} does not exist")


def run(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=config.MIRM_LOG_LEVEL, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        options = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed usage
        return 0 if e.code in (0, None) else 2

    try:
        _validate(options)
        with utils.Timed() as timer:
            report = options.handler(options)
        report = replace(report, elapsed=timer.elapsed)
        logger.info("%s:\n%s", report.subcommand, utils.format_rows(report.rows))
        utils.emit_csv(report.header, report.rows, options.out)
        if options.report is not None:
            try:
                options.report.write_text(report.to_json())
            except OSError as e:
                raise ConfigError(f"cannot write {options.report}: {e}") from e
        print(
            f"{report.subcommand}: {len(report.rows)} row(s) in {timer.elapsed:.3f}s, "
            f"seeds={list(report.seeds)}, passed={report.passed}",
            file=sys.stderr,
        )
        if options.check and report.passed is False:
            raise AcceptanceError(f"{report.subcommand}: acceptance check failed")
    except MirmError as e:
        logger.debug("run failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    return 0


def main() -> None:
    sys.exit(run())

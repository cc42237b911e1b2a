"""
cli.py
Command-line front end.

    python -m app.cli car-check 4
    python -m app.cli reduce --input state.txt --modes-keep 1
    python -m app.cli demo three-mode-ssr --jobs 4
    python -m app.cli measure --input - --modes-keep 1 --ssr-eof < state.txt
    python -m app.cli serve

Exit codes: 0 ok, 1 input error, 2 invariant violation, 3 regression mismatch.
Reports go to stdout (or --out), logs to stderr.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import CarViolation, FermiModesError, InputSemanticError, InputSyntaxError, RegressionMismatch
from app.core.logger import get_logger
from app.models.request import RunConfig
from app.services.experiments import DEMOS, run_car_check, run_demo, run_measure, run_reduce
from app.services.textio import emit_report

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors: exit 1, not argparse's 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _mode_list(text: str) -> list[int]:
    try:
        modes = [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated mode labels, got {text!r}")
    if not modes:
        raise argparse.ArgumentTypeError("no modes listed")
    return modes


def build_parser() -> argparse.ArgumentParser:
    output = _ArgumentParser(add_help=False)
    output.add_argument("--out", type=str, default=None, help="Write the report here instead of stdout")

    search = _ArgumentParser(add_help=False)
    search.add_argument("--jobs", type=int, default=settings.JOBS, help="Worker processes for the mapping search")

    state = _ArgumentParser(add_help=False)
    source = state.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", help="State document path, or '-' for stdin")
    source.add_argument("--text", help="State document given inline")
    state.add_argument("--modes-keep", type=_mode_list, default=None, help="Kept modes, e.g. 1 or 1,3 (default 1)")

    ap = _ArgumentParser(prog="fermimodes", description="Fermionic mode entanglement toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    car = sub.add_parser("car-check", parents=[output], help="Verify the anticommutation relations")
    car.add_argument("n_modes", type=int)
    car.add_argument("--tol", type=float, default=None, help=f"CAR residual tolerance (default {settings.EXACT_TOL})")

    reduce = sub.add_parser("reduce", parents=[output, state], help="Fermionic partial trace with oracle check")
    reduce.add_argument("--tol", type=float, default=None, help=f"Oracle agreement tolerance (default {settings.MATCH_TOL})")

    demo = sub.add_parser("demo", parents=[output, search], help="Run a named mapping-search experiment")
    demo.add_argument("demo", choices=sorted(DEMOS))

    measure = sub.add_parser("measure", parents=[output, search, state], help="Entanglement report")
    measure.add_argument("--seed", type=int, default=None, help=f"Optimizer seed (default {settings.DEFAULT_SEED})")
    measure.add_argument("--ssr-eof", action="store_true", help="Also estimate the SSR-restricted EoF")
    measure.add_argument("--restarts", type=int, default=None)
    measure.add_argument("--iterations", type=int, default=None)

    sub.add_parser("serve", help="Start the HTTP API")
    return ap


def _decode(data: bytes, source: str) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        column = e.start - data.rfind(b"\n", 0, e.start)
        raise InputSyntaxError(f"{source} is not UTF-8: undecodable byte at offset {e.start}", line, column) from e


def _read_input(source: str) -> str:
    if source == "-":
        stream = getattr(sys.stdin, "buffer", None)
        return sys.stdin.read() if stream is None else _decode(stream.read(), "stdin")
    path = Path(source)
    if not path.is_file():
        raise InputSemanticError(f"no such state document: {source}")
    try:
        data = path.read_bytes()
    except OSError as e:
        raise InputSemanticError(f"cannot read {source}: {e.strerror}") from e
    return _decode(data, source)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _serve() -> int:
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=settings.DEBUG,
        log_level="debug" if settings.DEBUG else "info",
        workers=1,
        access_log=False,  # handled by our middleware
    )
    return EXIT_OK


def run(cfg: RunConfig) -> int:
    if cfg.command == "serve":
        return _serve()

    if cfg.command == "car-check":
        report = run_car_check(cfg.n_modes, cfg.tol)
        _write(emit_report(report), cfg.out)
        if not report.ok:
            raise CarViolation(f"CAR residual {report.max_residual:.3e} exceeds {report.tolerance:.1e}")
        return EXIT_OK

    if cfg.command == "demo":
        report = run_demo(cfg.demo, cfg.jobs)
        _write(emit_report(report), cfg.out)
        if not report.matches:
            raise RegressionMismatch(f"demo {cfg.demo}: exists={report.verdict.exists}, expected {report.expected_exists}")
        return EXIT_OK

    text = cfg.text if cfg.text is not None else _read_input(cfg.input)
    if cfg.command == "reduce":
        report = run_reduce(text, cfg.modes_keep, cfg.tol)
    else:
        report = run_measure(
            text, cfg.modes_keep,
            ssr_eof=cfg.ssr_eof,
            restarts=cfg.restarts,
            iterations=cfg.iterations,
            seed=cfg.seed,
            jobs=cfg.jobs,
        )
    _write(emit_report(report), cfg.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.model_fields})
    except ValidationError as e:
        print(f"fermimodes: error: {e.errors()[0]['loc'][0]}: {e.errors()[0]['msg']}", file=sys.stderr)
        return EXIT_INPUT

    try:
        return run(cfg)
    except FermiModesError as e:
        logger.error(f"{cfg.command} failed | {type(e).__name__}: {e}")
        print(f"fermimodes: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())

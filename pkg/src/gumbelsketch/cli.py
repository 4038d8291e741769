"""Command-line front end: build, estimate, and merge sketch files, and run
the validation experiments.

Items are the raw bytes of each input line (trailing newline stripped, no
other normalization), so the tool counts distinct byte strings.  All
randomness is seeded: identical flags and input bytes give identical output
bytes.

Exit codes: 0 ok, 1 validation-check failure, 2 usage error, 3 I/O or
format error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import codec, gumbel, validation
from .sketch import (
    EmptySketchError,
    Estimator,
    IncompatibleSketchError,
    SketchConfig,
    Variant,
    merge,
    new,
)

_VARIANTS = {
    "full": Variant.FULL_REPLICATION,
    "sa": Variant.STOCHASTIC_AVERAGING,
    "discrete": Variant.DISCRETIZED,
}
_VARIANT_NAMES = {v: name for name, v in _VARIANTS.items()}
_ESTIMATORS = {"geometric": Estimator.GEOMETRIC, "harmonic": Estimator.HARMONIC}

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path: str, data: bytes) -> None:
    if path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w") as fh:
        fh.write(text)


def _iter_lines(stream, chunk_size: int = 1 << 20):
    """Newline-delimited items from a binary stream in O(chunk) memory."""
    carry = b""
    while True:
        chunk = stream.read(chunk_size)
        if not chunk:
            break
        carry += chunk
        lines = carry.split(b"\n")
        carry = lines.pop()
        yield from lines
    if carry:
        yield carry


def _open_input(path: str):
    return sys.stdin.buffer if path == "-" else open(path, "rb")


def _config_from_args(args) -> SketchConfig:
    return SketchConfig(k=args.k, seed=args.seed, variant=_VARIANTS[args.variant])


def _sketch_stream(args) -> tuple:
    sketch = new(_config_from_args(args))
    count = 0
    stream = _open_input(args.input)
    try:
        for line in _iter_lines(stream):
            sketch.update(line)
            count += 1
    finally:
        if stream is not sys.stdin.buffer:
            stream.close()
    return sketch, count


def cmd_sketch(args) -> int:
    sketch, count = _sketch_stream(args)
    _write_bytes(args.output, codec.serialize(sketch))
    print(f"{count} items consumed", file=sys.stderr)
    return EXIT_OK


def _estimate_record(sketch, estimator: Estimator) -> dict:
    if estimator is Estimator.GEOMETRIC:
        est = sketch.geometric_estimate()
    else:
        est = sketch.harmonic_estimate()
    return {
        "estimate": est.value,
        "k": sketch.config.k,
        "variant": _VARIANT_NAMES[sketch.config.variant],
        "estimator": estimator.value,
        "predicted_rse": est.predicted_rse,
    }


def _render_record(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, sort_keys=True) + "\n"
    if fmt == "csv":
        keys = sorted(record)
        head = ",".join(keys)
        row = ",".join(str(record[key]) for key in keys)
        return f"{head}\n{row}\n"
    return "".join(f"{key}: {record[key]}\n" for key in sorted(record))


def cmd_estimate(args) -> int:
    if args.stream:
        sketch, _ = _sketch_stream(args)
    else:
        sketch = codec.deserialize(_read_bytes(args.input))
    record = _estimate_record(sketch, _ESTIMATORS[args.estimator])
    _write_text(args.output, _render_record(record, args.format))
    return EXIT_OK


def cmd_merge(args) -> int:
    sketches = [(path, codec.deserialize(_read_bytes(path))) for path in args.inputs]
    path, merged = sketches[0]
    for other_path, other in sketches[1:]:
        try:
            merged = merge(merged, other)
        except IncompatibleSketchError:
            raise IncompatibleSketchError(
                f"{path!r} and {other_path!r} have incompatible configs"
            ) from None
    _write_bytes(args.output, codec.serialize(merged))
    return EXIT_OK


def _rows_to_csv(rows) -> str:
    lines = ["experiment,parameter,observed,target,pass"]
    for row in rows:
        lines.append(
            f"{row.experiment},{row.parameter},{row.observed:.10g},"
            f"{row.target:.10g},{'true' if row.passed else 'false'}"
        )
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> int:
    rows = validation.acceptance_checks(
        mc_trials=args.mc_trials,
        ks_samples=args.ks_samples,
        sa_n=args.n,
        sa_k=args.k,
        trials=args.trials,
        full_n=args.full_n,
        full_k=args.full_k,
        twin_n=min(args.n, 10**5),
        twin_k=args.k,
        stepwise_items=args.stepwise_items,
        rounding_sketches=args.pairs,
        merge_pairs=args.pairs,
        seed=args.seed,
    )
    _write_text(args.output, _rows_to_csv(rows))
    failed = [row for row in rows if not row.passed]
    for row in failed:
        print(
            f"FAILED {row.experiment}/{row.parameter}: "
            f"observed {row.observed:.6g} not {row.comparator} {row.target:.6g}",
            file=sys.stderr,
        )
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _histogram_csv(n: int, samples: int, seed: int, bins: int = 80) -> str:
    rng = np.random.default_rng(seed)
    u = rng.random((samples, n))
    u = np.where(u == 0.0, 2.0**-54, u)
    maxima = np.asarray(gumbel.sample_from_uniform(u, 0.0)).max(axis=1)
    counts, edges = np.histogram(maxima, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    reference = gumbel.pdf(centers, math.log(n))
    lines = ["x,empirical_density,reference_density"]
    for x, emp, ref in zip(centers, counts, reference):
        lines.append(f"{x:.8g},{emp:.8g},{ref:.8g}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    if args.emit_histogram:
        _write_text(args.output, _histogram_csv(args.max_of, args.samples, args.seed))
        return EXIT_OK
    report = validation.run_estimator_experiment(
        _VARIANTS[args.variant],
        _ESTIMATORS[args.estimator],
        n=args.n,
        k=args.k,
        trials=args.trials,
        seed=args.seed,
    )
    _write_text(args.output, _render_record(report.as_dict(), args.format))
    return EXIT_OK


def _add_config_flags(parser, default_k=1024):
    parser.add_argument("--k", type=int, default=default_k, help="register count")
    parser.add_argument("--seed", type=int, default=0, help="64-bit sketch seed")
    parser.add_argument(
        "--variant",
        choices=sorted(_VARIANTS),
        default="discrete",
        help="sketch variant",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gumbelsketch",
        description="Distinct-count sketching over newline-delimited items.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sketch", help="build a sketch file from a stream of lines")
    _add_config_flags(p)
    p.add_argument("--input", default="-", help="newline-delimited items ('-' = stdin)")
    p.add_argument("--output", default="-", help="sketch file path ('-' = stdout)")
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("estimate", help="estimate distinct count from a sketch file")
    _add_config_flags(p)
    p.add_argument("--input", default="-", help="sketch file, or items with --stream")
    p.add_argument("--output", default="-")
    p.add_argument("--estimator", choices=sorted(_ESTIMATORS), default="harmonic")
    p.add_argument("--format", choices=["json", "csv", "text"], default="text")
    p.add_argument(
        "--stream",
        action="store_true",
        help="treat input as newline-delimited items and sketch them in one pass",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("merge", help="merge >= 2 compatible sketch files")
    p.add_argument("inputs", nargs="+", help="sketch files")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("validate", help="run the full statistical check battery")
    p.add_argument("--n", type=int, default=10**6)
    p.add_argument("--k", type=int, default=1024)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--mc-trials", type=int, default=10**6)
    p.add_argument("--ks-samples", type=int, default=10**5)
    p.add_argument("--full-n", type=int, default=10**3)
    p.add_argument("--full-k", type=int, default=256)
    p.add_argument("--stepwise-items", type=int, default=10**5)
    p.add_argument(
        "--pairs", type=int, default=100, help="merge stream pairs / rounding sketches"
    )
    p.add_argument("--seed", type=int, default=validation.DEFAULT_SEED)
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run one estimator experiment")
    p.add_argument("--variant", choices=sorted(_VARIANTS), default="discrete")
    p.add_argument("--estimator", choices=sorted(_ESTIMATORS), default="harmonic")
    p.add_argument("--n", type=int, default=10**5)
    p.add_argument("--k", type=int, default=1024)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=validation.DEFAULT_SEED)
    p.add_argument("--format", choices=["json", "csv", "text"], default="text")
    p.add_argument("--output", default="-")
    p.add_argument(
        "--emit-histogram",
        action="store_true",
        help="emit a max-of-n histogram CSV with its analytic reference column",
    )
    p.add_argument("--max-of", type=int, default=64, help="n for --emit-histogram")
    p.add_argument("--samples", type=int, default=10**5, help="samples for --emit-histogram")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not args.emit_histogram and args.trials < 30:
        parser.error("simulate needs --trials >= 30")
    if args.command == "validate" and args.trials < 30:
        parser.error("validate needs --trials >= 30")
    if args.command == "merge" and len(args.inputs) < 2:
        parser.error("merge needs at least two sketch files")
    try:
        return args.func(args)
    except (codec.CodecError, IncompatibleSketchError, EmptySketchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # bad parameter values (k = 0, out-of-range seed, ...)
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

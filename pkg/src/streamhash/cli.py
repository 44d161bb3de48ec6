"""Command-line front end: ``streamhash {encode,eval,bench}``.

Data goes to files or stdout; progress and throughput go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .baselines import KINDS, RotationStrategy
from .errors import StreamHashError
from .evaluation import (
    EvalReport,
    build_ground_truth,
    log_checkpoints,
    power_of_two_checkpoints,
    split_queries,
    stream_map_curve,
    write_curve,
    write_per_query_ap,
)
from .hashing import CodeFileWriter, RefreshPolicy, StreamingEncoder
from .io import SyntheticSource, SyntheticSpec, generate_synthetic, load_fvecs, open_vectors

_SPEC_KEYS = {"clusters": "n_clusters", "share": "cluster_share"}


def parse_synthetic(text: str) -> SyntheticSpec:
    """``"d=128,rank=64,n=20000,decay=0.8,noise=0.01,clusters=10,seed=0"`` -> SyntheticSpec."""
    names = {f.name: f.type for f in fields(SyntheticSpec)}
    kwargs = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        key, sep, value = item.partition("=")
        key = _SPEC_KEYS.get(key.strip(), key.strip())
        if not sep or key not in names:
            raise argparse.ArgumentTypeError(f"bad synthetic spec entry {item!r}")
        kwargs[key] = int(value) if names[key] in ("int", int) else float(value)
    for required in ("d", "rank", "n"):
        if required not in kwargs:
            raise argparse.ArgumentTypeError(f"synthetic spec needs {required}=")
    return SyntheticSpec(**kwargs)


def parse_refresh(text: str) -> RefreshPolicy:
    """``"WARMUP:EVERY"``, e.g. ``1000:10``."""
    warmup, _, every = text.partition(":")
    try:
        return RefreshPolicy(int(warmup), int(every or 1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"refresh policy must look like WARMUP:EVERY, got {text!r}")


def parse_checkpoints(text: str, n: int) -> list[int]:
    if text == "pow2":
        return power_of_two_checkpoints(n)
    if text.startswith("log"):
        _, _, count = text.partition(":")
        return log_checkpoints(n, int(count or 12))
    if text == "end":
        return [n]
    return sorted({min(int(t), n) for t in text.split(",") if t.strip()})


@dataclass
class RunConfig:
    command: str
    input: Path | None = None
    synthetic: SyntheticSpec | None = None
    code_bits: int = 32
    strategies: list[str] = field(default_factory=lambda: ["unifdiag"])
    beta: float = 1.0
    tol: float | None = None
    refresh: RefreshPolicy = field(default_factory=RefreshPolicy)
    seed: int = 0
    queries: int = 1000
    partitions: int = 1
    k: int = 50
    checkpoints: str | None = None
    out: Path | None = None
    per_query: Path | None = None
    snapshot: Path | None = None

    def validate(self) -> None:
        if self.code_bits < 1:
            raise SystemExit("error: --bits must be >= 1")
        for s in self.strategies:
            if s not in KINDS:
                raise SystemExit(f"error: unknown strategy {s!r}; choose from {', '.join(KINDS)}")

    def encoder(self, d: int, strategy: str, seed: int) -> StreamingEncoder:
        return StreamingEncoder(d, self.code_bits, RotationStrategy(strategy, seed=seed), beta=self.beta,
                                tol=self.tol, refresh=self.refresh, seed=seed)


def _stream(cfg: RunConfig):
    if cfg.synthetic is not None:
        return generate_synthetic(cfg.synthetic)
    return open_vectors(cfg.input)


def _dataset(cfg: RunConfig) -> np.ndarray:
    if cfg.synthetic is not None:
        return SyntheticSource(cfg.synthetic).array()
    if cfg.input.suffix.lower() == ".csv":
        return open_vectors(cfg.input).take()
    # float32 as stored; consumers promote per chunk
    return load_fvecs(cfg.input)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def save_snapshot(path, enc: StreamingEncoder) -> None:
    np.savez(path, mean=enc.mean, W=enc.opast.W, Z=enc.opast.Z, sigma_v=enc.cov.sigma_v,
             rotation=enc.rotation, count=enc.count, strategy=enc.strategy.kind)


def cmd_encode(cfg: RunConfig) -> int:
    stream = _stream(cfg)
    if cfg.out is None:
        raise SystemExit("error: encode needs --out for the code file")
    marks = set()
    if cfg.checkpoints is not None:
        if cfg.snapshot is None:
            raise SystemExit("error: --checkpoints with encode needs --snapshot")
        length = stream.length if stream.length is not None else 1 << 40
        marks = set(parse_checkpoints(cfg.checkpoints, length))
    enc = None
    t0 = time.perf_counter()
    with CodeFileWriter(cfg.out, cfg.code_bits) as writer:
        for x in stream:
            if enc is None:
                enc = cfg.encoder(x.shape[0], cfg.strategies[0], cfg.seed)
            writer.write(enc.update_and_hash(x))
            if enc.count in marks:
                save_snapshot(cfg.snapshot.with_name(f"{cfg.snapshot.stem}_t{enc.count}.npz"), enc)
        n = writer.count
    elapsed = time.perf_counter() - t0
    if cfg.snapshot is not None and enc is not None:
        save_snapshot(cfg.snapshot, enc)
    rate = n / elapsed if elapsed > 0 else float("inf")
    _log(f"encoded {n} vectors in {elapsed:.2f}s ({rate:.0f} vectors/s)")
    return 0


def run_eval(cfg: RunConfig) -> list[tuple[int, EvalReport]]:
    """Checkpointed mAP for each strategy, averaged over ``cfg.partitions`` query splits."""
    data = _dataset(cfg)
    n = data.shape[0]
    rows: dict[tuple[int, str], list[EvalReport]] = {}
    for part in range(cfg.partitions):
        seed = cfg.seed + part
        qi, ti = split_queries(n, cfg.queries, seed)
        train, queries = data[ti], data[qi]
        _log(f"partition {part}: {len(ti)} training / {len(qi)} queries, building ground truth")
        gt = build_ground_truth(train, queries, k=cfg.k)
        checkpoints = parse_checkpoints(cfg.checkpoints or "pow2", len(train))
        for strategy in cfg.strategies:
            enc = cfg.encoder(data.shape[1], strategy, seed)
            for t, rep in stream_map_curve(enc, train, queries, gt, checkpoints, method=strategy):
                rows.setdefault((t, strategy), []).append(rep)
            _log(f"partition {part}: {strategy} final mAP {rows[(checkpoints[-1], strategy)][-1].map:.4f}")

    out = []
    for (t, strategy), reps in rows.items():
        merged = EvalReport(
            map=float(np.mean([r.map for r in reps])),
            per_query_ap=np.concatenate([r.per_query_ap for r in reps]),
            n_queries=int(sum(r.n_queries for r in reps)),
            code_bits=cfg.code_bits,
            method=strategy,
            n_excluded=int(sum(r.n_excluded for r in reps)),
        )
        out.append((t, merged))
    out.sort(key=lambda row: (cfg.strategies.index(row[1].method), row[0]))
    return out


def cmd_eval(cfg: RunConfig) -> int:
    rows = run_eval(cfg)
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        write_curve(fh, rows)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if cfg.per_query is not None:
        last = {}
        for t, rep in rows:
            last[rep.method] = rep
        for method, rep in last.items():
            target = cfg.per_query.with_name(f"{cfg.per_query.stem}_{method}{cfg.per_query.suffix or '.csv'}")
            write_per_query_ap(target, rep.per_query_ap)
    return 0


def time_updates(d: int, c: int, strategy: str = "unifdiag", n: int = 400, repeats: int = 5,
                 seed: int = 0, refresh: RefreshPolicy | None = None) -> float:
    """Steady-state seconds per encoder update: best of ``repeats`` blocks of ``n`` updates."""
    refresh = refresh or RefreshPolicy()
    enc = StreamingEncoder(d, c, RotationStrategy(strategy, seed=seed), refresh=refresh, seed=seed)
    rng = np.random.default_rng(seed)
    # past the warmup phase, so the refresh cadence is the steady-state one
    for x in rng.standard_normal((refresh.warmup + 10, d)):
        enc.update_and_hash(x)
    best = float("inf")
    for _ in range(repeats):
        block = rng.standard_normal((n, d))
        t0 = time.perf_counter()
        for x in block:
            enc.update_and_hash(x)
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def cmd_bench(cfg: RunConfig, dims: list[int], bits: list[int], n: int, repeats: int) -> int:
    from threadpoolctl import threadpool_limits

    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["d", "c", "ns_per_update"])
        with threadpool_limits(limits=1):
            for c in bits:
                for d in dims:
                    if c >= d:
                        _log(f"skipping d={d}, c={c}: need c < d")
                        continue
                    sec = time_updates(d, c, cfg.strategies[0], n=n, repeats=repeats, seed=cfg.seed,
                                       refresh=cfg.refresh)
                    w.writerow([d, c, int(round(sec * 1e9))])
                    fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamhash",
                                     description="Streaming binary sketches with variance-balancing rotations.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, help="fvecs or headerless CSV file")
    src.add_argument("--synthetic", type=parse_synthetic,
                     help="synthetic data, e.g. d=128,rank=64,n=20000,decay=0.8,noise=0.01,clusters=10")
    common.add_argument("--bits", type=int, default=32, help="code length c (default 32)")
    common.add_argument("--strategy", default="unifdiag",
                        help=f"rotation strategy, comma-separated for eval ({'|'.join(KINDS)})")
    common.add_argument("--beta", type=float, default=1.0, help="forgetting factor in (0, 1]")
    common.add_argument("--tol", type=float, default=None, help="uniformization tolerance (default 1e-8*max(tau,1))")
    common.add_argument("--refresh", type=parse_refresh, default=RefreshPolicy(), metavar="WARMUP:EVERY",
                        help="rotation refresh policy (default 1000:10)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=None)
    common.add_argument("--checkpoints", default=None,
                        help="pow2 | log[:N] | end | comma list of stream positions (eval default: pow2)")

    p = sub.add_parser("encode", parents=[common], help="stream vectors once and write packed codes")
    p.add_argument("--snapshot", type=Path, default=None,
                   help="write the final encoder state (.npz); with --checkpoints also STEM_tN.npz")

    p = sub.add_parser("eval", parents=[common], help="mAP of Hamming ranking vs Euclidean ground truth")
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--partitions", type=int, default=1, help="random query/train splits to average")
    p.add_argument("--k", type=int, default=50, help="neighbor rank defining the distance threshold")
    p.add_argument("--per-query", type=Path, default=None, help="also write per-query AP files")

    p = sub.add_parser("bench", parents=[common], help="per-update encoder time over d and c")
    p.add_argument("--dims", type=_int_list, default=[256, 1024, 4096])
    p.add_argument("--bits-list", type=_int_list, default=[8, 32])
    p.add_argument("--updates", type=int, default=400, help="updates per timed block")
    p.add_argument("--repeats", type=int, default=5)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=args.command,
        input=args.input,
        synthetic=args.synthetic,
        code_bits=args.bits,
        strategies=[s.strip() for s in args.strategy.split(",") if s.strip()],
        beta=args.beta,
        tol=args.tol,
        refresh=args.refresh,
        seed=args.seed,
        out=args.out,
        checkpoints=args.checkpoints,
    )
    if args.command == "eval":
        cfg.queries, cfg.partitions, cfg.k = args.queries, args.partitions, args.k
        cfg.per_query = args.per_query
    if args.command == "encode":
        cfg.snapshot = args.snapshot
    cfg.validate()
    if args.command != "bench" and cfg.input is None and cfg.synthetic is None:
        _log("error: give --input or --synthetic")
        return 2
    try:
        if args.command == "encode":
            return cmd_encode(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        return cmd_bench(cfg, args.dims, args.bits_list, args.updates, args.repeats)
    except (StreamHashError, OSError, ValueError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())

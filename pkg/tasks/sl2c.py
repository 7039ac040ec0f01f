"""tasks/sl2c.py
sl2c 실험 하네스 CLI.

예)
$ python -m tasks.sl2c run --p-min 32768 --p-max 65535 --N 16 --gen xi_random --alg linear --trials 1000
$ python -m tasks.sl2c preset appendixB --p 7
$ python -m tasks.sl2c verify collision.json
$ python -m tasks.sl2c table6
$ python -m tasks.sl2c mixing --q 3
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

# 스탠드얼론 실행 대비: 프로젝트 루트를 import 경로에 추가
ROOT = Path(__file__).resolve().parent.parent
sys.path.append(str(ROOT))

import numpy as np
from pydantic import ValidationError

from app.algebra.gf import make_field
from app.core.constants import ALGORITHMS, GENERATOR_MODES, MIXING_Q, PRESET_NAMES, TABLE6_N
from app.core.exceptions import Sl2cError
from app.core.logging_config import configure_logging
from app.schemas import ExperimentConfig, load_collision_record
from app.service.analysis_service import format_table6, subexp_table, walk_distance
from app.service.experiment_service import (
    cost_frame,
    emit,
    mixing_frame,
    presets,
    run_experiment,
    verify_record,
)

# CLI 옵션 → ExperimentConfig 키
_RUN_KEYS = {
    "p": "p", "p_min": "p-min", "p_max": "p-max", "N": "N", "gen": "gen", "alg": "alg",
    "trials": "trials", "seed": "seed", "out": "out", "budget": "budget",
    "segment_len": "segment-len", "dp_bits": "dp-bits", "source": "source",
    "xi0": "xi0", "xi1": "xi1", "A0": "A0", "A1": "A1", "n_jobs": "n-jobs",
    "mitm_jobs": "mitm-jobs",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sl2c", description="Collision search for SL2(F_q) hashes.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="DEBUG logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    parser.add_argument("--log-format", dest="log_format", choices=["text", "json"], default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of attack trials")
    run.add_argument("--config", type=Path, default=None, help="JSON file with the same keys as the options")
    run.add_argument("--p", type=int)
    run.add_argument("--p-min", dest="p_min", type=int)
    run.add_argument("--p-max", dest="p_max", type=int)
    run.add_argument("--N", type=int)
    run.add_argument("--gen", choices=GENERATOR_MODES)
    run.add_argument("--alg", choices=ALGORITHMS)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--out", choices=["csv", "json", "table"])
    run.add_argument("--budget", type=int)
    run.add_argument("--segment-len", dest="segment_len", type=int)
    run.add_argument("--dp-bits", dest="dp_bits", type=int)
    run.add_argument("--source", choices=["tree", "walk"])
    run.add_argument("--xi0")
    run.add_argument("--xi1")
    run.add_argument("--A0")
    run.add_argument("--A1")
    run.add_argument("--n-jobs", dest="n_jobs", type=int)
    run.add_argument("--mitm-jobs", dest="mitm_jobs", type=int, help="joblib shards inside one mitm search")
    run.add_argument("--log", type=Path, default=None, help="write the per-trial log CSV here")

    pre = sub.add_parser("preset", help="print a named generator pair")
    pre.add_argument("name", choices=PRESET_NAMES)
    pre.add_argument("--p", type=int, required=True)
    pre.add_argument("--n", type=int, default=1)
    pre.add_argument("--seed", type=int, default=0)

    ver = sub.add_parser("verify", help="re-check a collision JSON record")
    ver.add_argument("path", type=Path)

    t6 = sub.add_parser("table6", help="cost comparison for q = 2^n")
    t6.add_argument("--out", choices=["csv", "table"], default="table")

    mix = sub.add_parser("mixing", help="exact walk distances on SL2(F_q), q ≤ 5")
    mix.add_argument("--q", type=int, choices=[2, 3, 4, 5], required=True)
    mix.add_argument("--m-max", dest="m_max", type=int, default=50)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        data.update(json.loads(args.config.read_text(encoding="utf-8")))
    for attr, key in _RUN_KEYS.items():
        value = getattr(args, attr)
        if value is not None:
            data[key] = value
    return ExperimentConfig.model_validate(data)


# ────────────────────────────────────────────────────────────
# 명령
# ────────────────────────────────────────────────────────────
def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = config_from_args(args)
    except ValidationError as exc:
        print(f"❌ invalid configuration:\n{exc}", file=sys.stderr)
        return 2
    if config.alg == "table6":
        print(format_table6(subexp_table(TABLE6_N)))
        return 0
    if config.alg == "mixing":
        # q 는 --p 하나로만 받는다 (범위·N 은 이 표에 쓰이지 않음)
        if config.p not in MIXING_Q or config.p_min is not None or config.p_max is not None:
            print(f"❌ --alg mixing needs a single --p in {list(MIXING_Q)}; "
                  "for other options use `sl2c mixing --q`", file=sys.stderr)
            return 2
        report = walk_distance(config.p)
        print(mixing_frame(report).to_csv(index=False), end="")
        return 0 if report.bound_holds() else 1

    rows, log = run_experiment(config)
    if args.log is not None:
        log.to_csv(args.log, index=False)
        print(f"💾 trial log → {args.log}", file=sys.stderr)
    print(emit(rows, config.out))
    failures = sum(r.failures for r in rows)
    if failures:
        print(f"❌ {failures} trial(s) did not verify", file=sys.stderr)
        return 1
    print("✅ all trials verified ✔", file=sys.stderr)
    return 0


def cmd_preset(args: argparse.Namespace) -> int:
    F = make_field(args.p, args.n)
    A = presets(args.name, F, np.random.default_rng(args.seed))
    print(json.dumps({"p": F.p, "n": F.n, "modulus": list(F.modulus), "A0": str(A.A0), "A1": str(A.A1)},
                     ensure_ascii=False))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    record = load_collision_record(args.path)
    ok = verify_record(record)
    print(("✅ collision verified ✔" if ok else "❌ collision does NOT verify") + f" | method={record.method}")
    return 0 if ok else 1


def cmd_table6(args: argparse.Namespace) -> int:
    points = subexp_table(TABLE6_N)
    if args.out == "csv":
        print(cost_frame(points).to_csv(index=False), end="")
    else:
        print(format_table6(points))
    return 0


def cmd_mixing(args: argparse.Namespace) -> int:
    report = walk_distance(args.q, walk_lengths=range(args.m_max + 1))
    print(mixing_frame(report).to_csv(index=False), end="")
    status = "✅ bound holds" if report.bound_holds() else "❌ bound violated"
    print(f"{status} | |G|={report.group_order} λ/d={report.lambda_ratio:.4f} σ₂={report.sigma_ratio:.4f}",
          file=sys.stderr)
    return 0 if report.bound_holds() else 1


COMMANDS = {
    "run": cmd_run,
    "preset": cmd_preset,
    "verify": cmd_verify,
    "table6": cmd_table6,
    "mixing": cmd_mixing,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose or args.quiet or args.log_format:
        configure_logging(level="DEBUG" if args.verbose else "WARNING" if args.quiet else None, fmt=args.log_format)
    try:
        return COMMANDS[args.command](args)
    except Sl2cError as exc:
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

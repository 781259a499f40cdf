"""Experiment runner CLI.

Subcommands: matmul, plan, entropy-sweep, train, verify. Every run is
deterministic given its seed flags; artifacts are CSV/JSON files written
under --out. Exit codes: 0 ok, 2 usage error, 3 data error, 4 verification
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import matio, nn, stacking
from .entropy import (
    StateFamily,
    SweepPairing,
    correlation_summary,
    crossing_point,
    entropy as entropy_report,
    generate_state,
    variance_sweep,
    write_correlation_json,
    write_sweep_csv,
)
from .matmul import (
    MatMulConfig,
    matmul as run_matmul,
    summary_dict,
    write_result_csv,
    write_summary_json,
)
from .errors import (
    BudgetTooSmall,
    InvalidEpsilon,
    InvalidSupport,
    ParseError,
    QStackerError,
)
from .hadamard import HadamardJob, analytic_overlap, circuit_verify, sample_hadamard
from .seeding import derive_seed
from .vectors import encode

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_VERIFY = 4

_USAGE_ERRORS = (BudgetTooSmall, InvalidEpsilon, InvalidSupport, ValueError)


def _default_seed() -> int:
    return int(os.environ.get("AQ_SEED", "0"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="master seed (default: $AQ_SEED or 0)")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--threads", type=int, default=1, help="worker cap, 0 = auto")


def _threads(value: int) -> int:
    return (os.cpu_count() or 1) if value == 0 else max(1, value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qstacker")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("matmul", help="multiply two matrix files through the engine")
    p.add_argument("--a", required=True, type=Path)
    p.add_argument("--b", required=True, type=Path)
    p.add_argument("--shots", type=int, default=16384)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--pattern", choices=[m.value for m in stacking.StackingPattern], default="batch")
    p.add_argument("--budget", type=int, default=None, help="qubit budget")
    p.add_argument("--exact", action="store_true", help="skip sampling, analytic overlaps")
    p.add_argument("--check-classical", action="store_true", help="report error vs the classical product")
    _add_common(p)

    p = sub.add_parser("plan", help="print a stacking plan as JSON")
    p.add_argument("--n", required=True, type=int, help="matrix size (N^2 jobs)")
    p.add_argument("--dim", required=True, type=int, help="vector dimension per test")
    p.add_argument("--pattern", choices=[m.value for m in stacking.StackingPattern], default="vertical")
    p.add_argument("--budget", required=True, type=int)
    p.add_argument("--out", type=Path, default=None, help="also write plan.json here")

    p = sub.add_parser("entropy-sweep", help="variance-vs-entropy sweeps per state family")
    p.add_argument("--families", default="uniform,normal",
                   help="comma list of: " + ",".join(f.value for f in StateFamily))
    p.add_argument("--levels", type=int, default=16)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--shots", type=int, default=8192)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--pairing", choices=[m.value for m in SweepPairing], default="resigned")
    _add_common(p)

    p = sub.add_parser("train", help="train the classifier from a key=value config file")
    p.add_argument("--config", required=True, type=Path)
    _add_common(p)

    p = sub.add_parser("verify", help="run the built-in verification suite")
    _add_common(p)
    return parser


def _sweep_levels(family: StateFamily, count: int, dim: int):
    if family is StateFamily.INTERPOLATED:
        return list(np.linspace(0.0, 1.0, count))
    if family in (StateFamily.UNIFORM, StateFamily.EXPONENTIAL, StateFamily.CHI_SQUARE):
        return [max(1, int(round(v))) for v in np.geomspace(1, dim, count)]
    return [dim] * count  # normal: fixed full support, entropy varies by draw


def cmd_matmul(args) -> int:
    a = matio.read_matrix(args.a)
    b = matio.read_matrix(args.b)
    cfg = MatMulConfig(
        shots=args.shots,
        epsilon=args.epsilon,
        pattern=stacking.StackingPattern(args.pattern),
        seed=args.seed if args.seed is not None else _default_seed(),
        exact=args.exact,
        qubit_budget=args.budget,
        max_workers=_threads(args.threads),
    )
    result = run_matmul(a, b, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    write_result_csv(result, args.out / "matmul.csv")
    classical = a @ b if (args.check_classical or args.exact) else None
    write_summary_json(result, args.out / "matmul_summary.json", classical=classical)
    matio.write_matrix_csv(args.out / "product.csv", result.c)
    print(json.dumps(summary_dict(result, classical)))
    return EXIT_OK


def cmd_plan(args) -> int:
    p = stacking.plan(args.n, args.dim, stacking.StackingPattern(args.pattern), args.budget)
    text = stacking.plan_to_json(p)
    print(text)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "plan.json").write_text(text + "\n")
    return EXIT_OK


def cmd_entropy_sweep(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    families = [StateFamily(tok.strip()) for tok in args.families.split(",") if tok.strip()]
    args.out.mkdir(parents=True, exist_ok=True)
    sweeps = {}
    all_records = []
    for k, family in enumerate(families):
        levels = _sweep_levels(family, args.levels, args.dim)
        records = variance_sweep(
            family,
            levels,
            dim=args.dim,
            shots=args.shots,
            repetitions=args.reps,
            seed=derive_seed(seed, k),
            pairing=SweepPairing(args.pairing),
        )
        sweeps[family.value] = records
        all_records.extend(records)
    write_sweep_csv(all_records, args.out / "sweep.csv")
    crossings = []
    names = list(sweeps)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            try:
                cp = crossing_point(sweeps[names[i]], sweeps[names[j]])
            except QStackerError:
                continue
            crossings.append(((names[i], names[j]), cp))
    summary = correlation_summary(sweeps, crossings)
    write_correlation_json(summary, args.out / "correlation.json")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_train(args) -> int:
    raw = nn.parse_train_config(args.config)
    cfg = nn.train_config_from_dict(raw)
    if args.seed is not None:
        cfg = nn.TrainConfig(
            shape=cfg.shape, batch_size=cfg.batch_size, learning_rate=cfg.learning_rate,
            epochs=cfg.epochs, shots=cfg.shots, seed=args.seed,
            forward_mode=cfg.forward_mode, exact=cfg.exact,
        )
    if "dataset" in raw:
        data = nn.ingest_iris(raw["dataset"], split_seed=int(raw.get("split_seed", 1234)))
    elif "mnist_images" in raw and "mnist_labels" in raw:
        features, labels = nn.ingest_mnist_idx(
            raw["mnist_images"],
            raw["mnist_labels"],
            downsample=int(raw.get("downsample", 1)),
            limit=int(raw["limit"]) if "limit" in raw else None,
        )
        if "train_count" in raw and "test_count" in raw:
            data = nn.split_dataset(
                features, labels, int(raw.get("split_seed", 1234)),
                counts=(int(raw["train_count"]), int(raw["test_count"])),
            )
        else:
            data = nn.split_dataset(features, labels, int(raw.get("split_seed", 1234)))
    else:
        raise ParseError("config needs dataset=<iris csv> or mnist_images=/mnist_labels=")
    model, report = nn.train(data, cfg)
    args.out.mkdir(parents=True, exist_ok=True)
    nn.write_train_report_json(report, args.out / "train_report.json")
    nn.write_epoch_csv(report, args.out / "train_epochs.csv")
    print(json.dumps({
        "final_accuracy": report.final_accuracy,
        "quantum_jobs": report.quantum_jobs,
        "mode": report.mode,
    }))
    return EXIT_OK


def _verify_checks(seed: int):
    rng = np.random.default_rng(seed)

    def random_state(dim):
        return encode(rng.normal(size=dim))

    # explicit circuit agrees with the analytic interference probability
    worst = 0.0
    for n in range(1, 7):
        for _ in range(10):
            psi, phi = random_state(1 << n), random_state(1 << n)
            p0 = circuit_verify(psi, phi)
            worst = max(worst, abs(p0 - (1.0 + analytic_overlap(psi, phi)) / 2.0))
    yield "circuit-vs-analytic", worst <= 1e-10, f"max |dP0| = {worst:.3e}"

    # seeded sampling is reproducible
    psi, phi = random_state(8), random_state(8)
    job = HadamardJob(psi=psi, phi=phi, shots=4096, seed=derive_seed(seed, 1))
    deterministic = sample_hadamard(job) == sample_hadamard(job)
    yield "sampling-determinism", deterministic, "identical job, identical counts"

    # estimator variance tracks (1 - mu^2)/S
    mu = analytic_overlap(psi, phi)
    zs = []
    for k in range(400):
        res = sample_hadamard(HadamardJob(psi=psi, phi=phi, shots=1024, seed=derive_seed(seed, 2, k)))
        zs.append((res.count0 - res.count1) / res.shots)
    var = float(np.var(zs, ddof=1))
    expect = (1.0 - mu * mu) / 1024
    ok = abs(var - expect) <= 0.35 * expect
    yield "estimator-variance", ok, f"empirical {var:.3e} vs {expect:.3e}"

    # purity and collision-entropy inequalities over random distributions
    bad = 0
    for fam in StateFamily:
        for k in range(2000):
            _, dist = generate_state(fam, 32, derive_seed(seed, 3, ord(fam.value[0]), k))
            rep = entropy_report(dist)
            if rep.purity < np.exp(-rep.shannon_nats) - 1e-12:
                bad += 1
            if rep.collision_entropy > rep.shannon_nats + 1e-12:
                bad += 1
    yield "entropy-inequalities", bad == 0, f"{bad} violations in 10000 states"

    # exact engine equals the classical product
    worst = 0.0
    for k in range(10):
        a = rng.normal(size=(6, 5))
        b = rng.normal(size=(5, 7))
        res = run_matmul(a, b, MatMulConfig(exact=True, seed=derive_seed(seed, 4, k)))
        worst = max(worst, float(np.abs(res.c - a @ b).max()))
    yield "exact-matmul", worst <= 1e-10, f"max error {worst:.3e}"

    # layout does not change results
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4))
    buffers = []
    for pattern in stacking.StackingPattern:
        cfg = MatMulConfig(shots=2048, seed=derive_seed(seed, 5), pattern=pattern)
        buffers.append(run_matmul(a, b, cfg).c)
    same = all(np.array_equal(buffers[0], c) for c in buffers[1:])
    yield "pattern-invariance", same, "identical products across layouts"


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    failures = 0
    for name, ok, detail in _verify_checks(seed):
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} verification check(s) failed")
        return EXIT_VERIFY
    print("all verification checks passed")
    return EXIT_OK


_COMMANDS = {
    "matmul": cmd_matmul,
    "plan": cmd_plan,
    "entropy-sweep": cmd_entropy_sweep,
    "train": cmd_train,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, QStackerError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

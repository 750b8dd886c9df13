"""Experiment runner: JSON config in, deterministic CSV artifacts out.

Subcommands: qpca (poisoning sweep + eigenvalue-sampling report), boost
(attack sweep), kmeans (protocol trajectory + privacy report), verify
(invariant suite)."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import boosting, embedding, kmeans, qpca, verify
from .util import fmt_float, stream

CSV_SCHEMA_VERSION = "aqml-csv-1"


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA_VERSION}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                [fmt_float(v) if isinstance(v, float) else v for v in row]
            )


_SCHEMAS = {
    "qpca": {
        "n_vectors": 16,
        "dim": 4,
        "norm_bound": 1.0,
        "alphas": [0.05, 0.1, 0.2],
        "lipschitz": 2.0,
        "seeds": 5,
        "median_epsilon": 0.05,
        "median_epsilon_prime": 0.01,
        "sample_bits": 10,
        "sample_shots": 10000,
    },
    "boost": {
        "n_classifiers": 10,
        "dim": 4,
        "n_points": 60,
        "alphas": [0.1, 0.2],
        "seeds": 5,
        "bits": 10,
    },
    "kmeans": {
        "k": 2,
        "d": 2,
        "n_participants": 10000,
        "epsilon": 0.05,
        "rounds": 5,
        "blob_centers": [[0.6, 0.6], [-0.6, -0.6]],
        "blob_sigma": 0.05,
        "privacy_check_qubits": 10,
    },
    "verify": {},
}


def parse_config(subcommand: str, path: str | None) -> dict:
    if subcommand not in _SCHEMAS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    defaults = dict(_SCHEMAS[subcommand])
    if path is None:
        cfg = defaults
    else:
        with open(path) as fh:
            user = json.load(fh)
        if not isinstance(user, dict):
            raise ValueError("config file must hold a JSON object")
        unknown = sorted(set(user) - set(defaults))
        if unknown:
            raise ValueError(
                f"unknown config keys for {subcommand!r}: {', '.join(unknown)}"
            )
        cfg = {**defaults, **user}
    _validate(subcommand, cfg)
    return cfg


def _validate(subcommand: str, cfg: dict) -> None:
    if subcommand == "qpca":
        if not (0.0 < cfg["median_epsilon"] < 0.25):
            raise ValueError("median_epsilon: epsilon < 1/4 required")
        if not (0.0 <= cfg["median_epsilon_prime"] < cfg["median_epsilon"] / 4):
            raise ValueError("median_epsilon_prime must be < median_epsilon / 4")
        if any(not (0.0 <= a < 0.5) for a in cfg["alphas"]):
            raise ValueError("contamination fractions must lie in [0, 1/2)")
    elif subcommand == "boost":
        if any(not (0.0 <= a < 1.0) for a in cfg["alphas"]):
            raise ValueError("attack fractions must lie in [0, 1)")
    elif subcommand == "kmeans":
        pc = kmeans.ProtocolConfig(
            k=cfg["k"], d=cfg["d"], n_participants=cfg["n_participants"],
            epsilon=cfg["epsilon"], rounds=cfg["rounds"],
        )
        budget = kmeans.rotation_budget(pc, min_p=max(2 * pc.epsilon, 1.0 / pc.k))
        budget.check_privacy_precondition(pc.n_participants)


def run_qpca(cfg: dict, seed: int, out_dir: str) -> int:
    rows = []
    status = 0
    for s in range(cfg["seeds"]):
        rng = stream(seed, "qpca", str(s))
        raw_vecs = rng.uniform(-1, 1, (cfg["n_vectors"], cfg["dim"]))
        raw_vecs *= 0.9 * cfg["norm_bound"] / np.max(np.linalg.norm(raw_vecs, axis=1))
        raw = embedding.RawDataset(raw_vecs, norm_bound=cfg["norm_bound"])
        for alpha in cfg["alphas"]:
            spec = embedding.ContaminationSpec(
                alpha=alpha, strategy="spike-direction",
                spike_direction=np.eye(cfg["dim"])[0], seed=s,
            )
            rep = qpca.poisoning_experiment(raw, spec, L=cfg["lipschitz"])
            M = qpca.build_matrix(raw)
            x = np.zeros(M.shape[0])
            x[0] = 1.0
            samp = qpca.qpca_sample(
                M, x, bits=cfg["sample_bits"], shots=cfg["sample_shots"],
                rng=stream(seed, "qpca-sample", str(s), str(alpha)),
            )
            if not rep["ok"]:
                status = 1
            rows.append(
                [s, alpha, cfg["lipschitz"], rep["d"], rep["norm"], rep["bound"],
                 samp.lambda_measured, samp.queries.total]
            )
    _write_csv(
        os.path.join(out_dir, "qpca.csv"),
        ["seed", "alpha", "L", "d", "norm", "bound", "lambda_measured", "queries"],
        rows,
    )
    return status


def run_boost(cfg: dict, seed: int, out_dir: str) -> int:
    rows = []
    status = 0
    for s in range(cfg["seeds"]):
        rng = stream(seed, "boost", str(s))
        n = cfg["n_points"]
        X = np.vstack(
            [rng.normal(1.5, 0.4, (n // 2, cfg["dim"])),
             rng.normal(-1.5, 0.4, (n - n // 2, cfg["dim"]))]
        )
        y = np.array([1] * (n // 2) + [-1] * (n - n // 2))
        spec = boosting.train_bootstrap_ensemble(X, y, cfg["n_classifiers"], rng)
        v = np.concatenate([X[0], [1.0]])
        psi = v / np.linalg.norm(v)
        for alpha in cfg["alphas"]:
            clean = boosting.classify_by_eigenspace(psi, spec, bits=cfg["bits"])
            mean = boosting.classify_by_mean(psi, spec)
            rep = boosting.attack_ensemble(spec, boosting.AttackSpec(alpha=alpha))
            attacked = boosting.classify_operator_by_eigenspace(
                psi, rep.operator, bits=cfg["bits"]
            )
            if rep.eig_shift_max > 2 * rep.alpha_used + 1e-10:
                status = 1
            rows.append(
                [s, alpha, spec.gap_gamma, "eigenspace", clean.label,
                 clean.confidence, rep.norm_shift, rep.eig_shift_max]
            )
            rows.append(
                [s, alpha, spec.gap_gamma, "eigenspace-attacked", attacked.label,
                 attacked.confidence, rep.norm_shift, rep.eig_shift_max]
            )
            rows.append(
                [s, alpha, spec.gap_gamma, "mean", mean.label, mean.confidence,
                 rep.norm_shift, rep.eig_shift_max]
            )
    _write_csv(
        os.path.join(out_dir, "boost.csv"),
        ["seed", "alpha", "gamma", "method", "class", "confidence",
         "norm_shift", "eig_shift_max"],
        rows,
    )
    return status


def run_kmeans(cfg: dict, seed: int, out_dir: str) -> int:
    rng = stream(seed, "kmeans")
    centers = np.asarray(cfg["blob_centers"], dtype=np.float64)
    k, d = cfg["k"], cfg["d"]
    if centers.shape != (k, d):
        raise ValueError("blob_centers shape must be (k, d)")
    N = cfg["n_participants"]
    sizes = [N // k + (1 if i < N % k else 0) for i in range(k)]
    X = np.vstack(
        [np.clip(rng.normal(c, cfg["blob_sigma"], (m, d)), -1, 1)
         for c, m in zip(centers, sizes)]
    )
    X = X[rng.permutation(N)]
    participants = [kmeans.Participant(x) for x in X]
    pc = kmeans.ProtocolConfig(
        k=k, d=d, n_participants=N, epsilon=cfg["epsilon"], rounds=cfg["rounds"],
    )
    init = np.clip(centers * 1.5, -1, 1)
    result = kmeans.run_protocol(participants, pc, init, rng)

    traj_rows = []
    status = 0
    ref = np.asarray(init, dtype=np.float64)
    for r in range(1, len(result.trajectory)):
        ref, _, _ = kmeans.classical_iteration(X, ref)
        est = result.trajectory[r]
        for p in range(k):
            for q in range(d):
                err = abs(est[p, q] - ref[p, q])
                traj_rows.append([r, p, q, float(est[p, q]), float(ref[p, q]), err])
                if err > pc.epsilon:
                    status = 1
    _write_csv(
        os.path.join(out_dir, "kmeans_trajectory.csv"),
        ["round", "cluster", "component", "estimate", "exact", "error"],
        traj_rows,
    )
    priv_rows = []
    if result.budget.total < N:
        rep = kmeans.privacy_analysis(
            result.budget, N,
            check_qubits=(cfg["privacy_check_qubits"]
                          if result.budget.total <= 2**cfg["privacy_check_qubits"]
                          else None),
        )
        priv_rows.append(
            [rep.q_total - result.budget.q2, result.budget.q2, N,
             rep.p_opt_exact, rep.p_opt_closed_form, rep.bound]
        )
    _write_csv(
        os.path.join(out_dir, "kmeans_privacy.csv"),
        ["q1", "q2", "N", "p_opt_exact", "p_opt_closed", "bound"],
        priv_rows,
    )
    return status


def run_verify(cfg: dict, seed: int, out_dir: str) -> int:
    results = verify.run_all(seed)
    print(verify.format_table(results))
    _write_csv(
        os.path.join(out_dir, "verify.csv"),
        ["check", "status", "detail"],
        [[name, "PASS" if ok else "FAIL", detail] for name, ok, detail in results],
    )
    return 0 if all(ok for _, ok, _ in results) else 1


_RUNNERS = {
    "qpca": run_qpca,
    "boost": run_boost,
    "kmeans": run_kmeans,
    "verify": run_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="aqml",
        description="adversarially robust quantum ML experiment runner",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _RUNNERS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.subcommand, args.config)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    header = {"subcommand": args.subcommand, "seed": args.seed, "config": cfg}
    print(json.dumps(header, sort_keys=True))
    status = _RUNNERS[args.subcommand](cfg, args.seed, args.out)
    if status != 0:
        print("bound violation or failed check; see artifacts", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

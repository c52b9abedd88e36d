"""Monte Carlo orchestration: single trials, phase-plane sweeps, persistence.

A TrialSpec pins everything needed to reproduce one replication: the
calibration, the noise model, the methods to run (with their options),
and a seed. run_trial never aborts on a per-method failure (for
example an enumeration budget): the failure is recorded under that
method and the rest of the trial continues.

Sweeps lay cells out on a (beta, strength) grid. Per-trial seeds are
derived as SeedSequence(master_seed, spawn_key=(cell_index, rep)), so
adding cells or reps never perturbs existing trials, and parallel
execution cannot change any result. Sweep JSON output is canonical
(sorted keys); everything time-dependent lives in a separate "meta"
block so reruns are byte-identical outside it.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cluster, hyptest, recover
from .metrics import cos_angle, hamming_clustering, hamming_recovery, hamming_recovery_signed, wilson_interval
from .model import ArwParams, Dataset, NoiseSpec, gen_dataset
from .phase import BOUND_KINDS, PROBLEMS, classify, rho_star_theta
from .spectral import q_star

__all__ = [
    "TrialSpec",
    "TrialRecord",
    "SweepSpec",
    "run_trial",
    "run_sweep",
    "trial_seed",
    "save_records",
    "load_records",
    "save_sweep",
    "sweep_csv_rows",
]

CLUSTER_METHODS = (
    "simple_agg",
    "sparse_agg_exact",
    "sparse_agg_greedy",
    "classical_pca",
    "if_pca",
    "signed_sparse_agg",
)
RECOVERY_METHODS = ("recover_sa_star", "recover_if_star", "recover_sa_n", "recover_if_q", "recover_signed_pca")
TEST_METHODS = ("agg_chi2", "sparse_agg_l1", "higher_criticism")

# Preset bundles for the two natural pipeline orders: estimate labels first
# and read the support off the label-weighted means (works in the denser
# regimes), or estimate the support first and cluster on the selected
# columns (works in the sparser regimes).
METHOD_PRESETS = {
    "cluster-then-recover": {
        "simple_agg": {},
        "classical_pca": {},
        "recover_sa_star": {},
        "recover_if_star": {},
    },
    "recover-then-cluster": {
        "sparse_agg_greedy": {},
        "if_pca": {},
        "recover_sa_n": {},
        "recover_if_q": {},
    },
}


@dataclass(frozen=True)
class TrialSpec:
    params: ArwParams
    methods: dict
    seed: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec.white)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("at least one method is required")
        known = set(CLUSTER_METHODS) | set(RECOVERY_METHODS) | set(TEST_METHODS)
        unknown = set(self.methods) - known
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")

    def to_dict(self) -> dict:
        noise = {"kind": self.noise.kind}
        if self.noise.A is not None:
            noise["A"] = self.noise.A.tolist()
        if self.noise.B is not None:
            noise["B"] = self.noise.B.tolist()
        return {
            "params": self.params.to_dict(),
            "methods": self.methods,
            "seed": self.seed,
            "noise": noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialSpec":
        noise_d = d.get("noise", {"kind": "white"})
        noise = NoiseSpec(
            kind=noise_d["kind"],
            A=None if noise_d.get("A") is None else np.asarray(noise_d["A"], dtype=float),
            B=None if noise_d.get("B") is None else np.asarray(noise_d["B"], dtype=float),
        )
        return cls(
            params=ArwParams.from_dict(d["params"]),
            methods=d["methods"],
            seed=int(d["seed"]),
            noise=noise,
        )

    def spec_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class TrialRecord:
    spec_hash: str
    seed: int
    clustering: dict
    recovery: dict
    tests: dict
    wall_time: float
    spec: dict

    def to_dict(self) -> dict:
        return {
            "spec_hash": self.spec_hash,
            "seed": self.seed,
            "clustering": self.clustering,
            "recovery": self.recovery,
            "tests": self.tests,
            "wall_time": self.wall_time,
            "spec": self.spec,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(**{k: d[k] for k in ("spec_hash", "seed", "clustering", "recovery", "tests", "wall_time", "spec")})

    @property
    def has_errors(self) -> bool:
        return any(
            "error" in entry
            for group in (self.clustering, self.recovery, self.tests)
            for entry in group.values()
        )


def _default_N(opts: dict, params: ArwParams) -> int:
    return int(opts.get("N") or cluster.default_sparsity(params.expected_signals))


def _default_q(opts: dict, params: ArwParams) -> float:
    q = opts.get("q")
    if q is not None:
        return float(q)
    if params.r is not None and 0.5 < params.beta < 1 - params.theta / 2:
        return q_star(params.theta, params.beta, params.r)
    return 3.0


def _signed_auto_greedy(opts: dict, params: ArwParams, N: int) -> bool:
    if "greedy" in opts:
        return bool(opts["greedy"])
    budget = int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET))
    return (2**min(N, 64)) * math.comb(params.p, N) > budget


def _run_cluster_method(name: str, opts: dict, ds: Dataset, params: ArwParams, seed: int):
    X = ds.X
    if name == "simple_agg":
        res = cluster.simple_aggregation(X)
        score = X.sum(axis=1)
    elif name == "sparse_agg_exact":
        res = cluster.sparse_aggregation_exact(
            X, _default_N(opts, params), budget=int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET))
        )
        score = X[:, res.selected].sum(axis=1)
    elif name == "sparse_agg_greedy":
        res = cluster.sparse_aggregation_greedy(
            X, _default_N(opts, params), restarts=int(opts.get("restarts", 8)), seed=seed
        )
        score = X[:, res.selected].sum(axis=1)
    elif name == "classical_pca":
        res = cluster.classical_pca(X)
        score = res.singular.vector
    elif name == "if_pca":
        res = cluster.if_pca(X, q=_default_q(opts, params))
        score = res.singular.vector
    elif name == "signed_sparse_agg":
        N = _default_N(opts, params)
        res = cluster.signed_sparse_aggregation(
            X,
            N,
            budget=int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET)),
            greedy=_signed_auto_greedy(opts, params, N),
            restarts=int(opts.get("restarts", 8)),
            seed=seed,
        )
        score = X @ res.mu_hat
    else:  # pragma: no cover - guarded by TrialSpec validation
        raise ValueError(name)
    entry = {
        "hamming": hamming_clustering(res.labels, ds.labels),
        "cosine": cos_angle(score, ds.labels.astype(float)) if np.any(score) else 0.0,
        "fallback": bool(res.fallback_used),
    }
    if res.selected is not None:
        entry["n_selected"] = int(res.selected.size)
    if res.objective is not None:
        entry["objective"] = float(res.objective)
    return entry


def _run_recovery_method(name: str, opts: dict, ds: Dataset, params: ArwParams, seed: int):
    X = ds.X
    if name == "recover_sa_star":
        res = recover.recover_sa_star(X)
    elif name == "recover_if_star":
        res = recover.recover_if_star(X)
    elif name == "recover_sa_n":
        res = recover.recover_sa_N(
            X,
            _default_N(opts, params),
            method=opts.get("solver", "auto"),
            budget=int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET)),
            restarts=int(opts.get("restarts", 8)),
            seed=seed,
        )
    elif name == "recover_if_q":
        res = recover.recover_if_q(X, q=_default_q(opts, params))
    elif name == "recover_signed_pca":
        res = recover.recover_signed_pca(X)
    else:  # pragma: no cover
        raise ValueError(name)
    entry = {
        "hamming": hamming_recovery(res.support, ds.support, params.expected_signals),
        "support_size": int(res.support.size),
    }
    if res.signs is not None:
        entry["signed_hamming"] = hamming_recovery_signed(res.signs, ds.mu, params.expected_signals)
    return entry


def _run_test_method(name: str, opts: dict, ds: Dataset, params: ArwParams, seed: int):
    X = ds.X
    if name == "agg_chi2":
        out = hyptest.simple_agg_test(X)
    elif name == "sparse_agg_l1":
        N = _default_N(opts, params)
        greedy = opts.get("greedy")
        if greedy is None:
            greedy = math.comb(params.p, N) > int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET))
        out = hyptest.sparse_agg_test(
            X,
            N,
            greedy=bool(greedy),
            budget=int(opts.get("budget", cluster.DEFAULT_ENUM_BUDGET)),
            restarts=int(opts.get("restarts", 8)),
            seed=seed,
        )
    elif name == "higher_criticism":
        out = hyptest.higher_criticism_test(X)
    else:  # pragma: no cover
        raise ValueError(name)
    return {"statistic": out.statistic, "threshold": out.threshold, "reject": bool(out.reject)}


def run_trial(spec: TrialSpec) -> TrialRecord:
    """Generate one dataset and run every requested method on it.

    Per-method failures become {"error": message} entries; the other
    methods still run.
    """
    t0 = time.perf_counter()
    ds = gen_dataset(spec.params, spec.noise, spec.seed)
    clustering, recovery_out, tests = {}, {}, {}
    for name, opts in spec.methods.items():
        opts = opts or {}
        try:
            if name in CLUSTER_METHODS:
                clustering[name] = _run_cluster_method(name, opts, ds, spec.params, spec.seed)
            elif name in RECOVERY_METHODS:
                recovery_out[name] = _run_recovery_method(name, opts, ds, spec.params, spec.seed)
            else:
                tests[name] = _run_test_method(name, opts, ds, spec.params, spec.seed)
        except (ValueError, cluster.EnumerationBudgetError) as exc:
            target = (
                clustering if name in CLUSTER_METHODS else recovery_out if name in RECOVERY_METHODS else tests
            )
            target[name] = {"error": str(exc)}
    return TrialRecord(
        spec_hash=spec.spec_hash(),
        seed=spec.seed,
        clustering=clustering,
        recovery=recovery_out,
        tests=tests,
        wall_time=time.perf_counter() - t0,
        spec=spec.to_dict(),
    )


def trial_seed(master_seed: int, cell_index: int, rep: int) -> int:
    """Stable per-trial seed; new cells/reps never disturb existing ones."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(cell_index, rep))
    return int(ss.generate_state(1, np.uint64)[0])


def paired_test_error(params_alt: ArwParams, test_name: str, opts: dict | None, seeds) -> dict:
    """Type I + type II estimate from paired null/alternative batches.

    Both batches reuse the same seed list (common random numbers), which
    removes the shared generation noise from the error-sum estimate.
    The null batch is the alternative calibration with tau forced to 0.
    """
    if test_name not in TEST_METHODS:
        raise ValueError(f"unknown test {test_name!r}")
    params_null = ArwParams(
        p=params_alt.p,
        theta=params_alt.theta,
        beta=params_alt.beta,
        alpha=math.inf,
        sign_mix_a=params_alt.sign_mix_a,
    )
    methods = {test_name: opts or {}}
    null_d, alt_d = [], []
    for seed in seeds:
        rec = run_trial(TrialSpec(params=params_null, methods=methods, seed=int(seed)))
        null_d.append(rec.tests[test_name]["reject"])
        rec = run_trial(TrialSpec(params=params_alt, methods=methods, seed=int(seed)))
        alt_d.append(rec.tests[test_name]["reject"])
    from .metrics import empirical_test_error

    return empirical_test_error(null_d, alt_d)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of (beta, strength) cells, each replicated ``reps`` times.

    ``strength_kind`` is "alpha" (plain exponents), "r" (log-adjusted
    calibration), or "alpha_ratio" (values are multiples of a reference
    phase boundary, resolved per beta; the reference defaults to the
    statistical clustering curve).
    """

    p: int
    theta: float
    betas: tuple
    strength_kind: str
    strengths: tuple
    reps: int = 20
    methods: dict = field(default_factory=lambda: {"simple_agg": {}})
    master_seed: int = 0
    sign_mix_a: float = 0.0
    ratio_reference: tuple = ("clustering", "statistical")

    def __post_init__(self):
        if not self.betas or not self.strengths:
            raise ValueError("grids must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.strength_kind not in ("alpha", "r", "alpha_ratio"):
            raise ValueError(f"bad strength_kind {self.strength_kind!r}")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "theta": self.theta,
            "betas": list(self.betas),
            "strength_kind": self.strength_kind,
            "strengths": list(self.strengths),
            "reps": self.reps,
            "methods": self.methods,
            "master_seed": self.master_seed,
            "sign_mix_a": self.sign_mix_a,
            "ratio_reference": list(self.ratio_reference),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(
            p=int(d["p"]),
            theta=float(d["theta"]),
            betas=tuple(d["betas"]),
            strength_kind=d["strength_kind"],
            strengths=tuple(d["strengths"]),
            reps=int(d.get("reps", 20)),
            methods=d.get("methods", {"simple_agg": {}}),
            master_seed=int(d.get("master_seed", 0)),
            sign_mix_a=float(d.get("sign_mix_a", 0.0)),
            ratio_reference=tuple(d.get("ratio_reference", ("clustering", "statistical"))),
        )

    def cell_params(self, beta: float, strength: float) -> ArwParams:
        if self.strength_kind == "r":
            return ArwParams(p=self.p, theta=self.theta, beta=beta, r=strength, sign_mix_a=self.sign_mix_a)
        if self.strength_kind == "alpha_ratio":
            from .phase import PhaseQuery, boundary

            problem, kind = self.ratio_reference
            variant = "signed" if self.sign_mix_a == 0.5 else "one_sided"
            ref = boundary(PhaseQuery(problem, kind, variant, self.theta, beta)).alpha_boundary
            strength = strength * ref
        return ArwParams(p=self.p, theta=self.theta, beta=beta, alpha=strength, sign_mix_a=self.sign_mix_a)


def _mean_ci(values: list[float]) -> dict:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return {
        "mean": mean,
        "median": float(np.median(arr)),
        "ci_low": mean - 1.959964 * se,
        "ci_high": mean + 1.959964 * se,
        "n": int(arr.size),
    }


def _aggregate_cell(records: list[TrialRecord]) -> dict:
    out = {"clustering": {}, "recovery": {}, "tests": {}, "n_errors": 0}
    names = {
        "clustering": sorted({k for r in records for k in r.clustering}),
        "recovery": sorted({k for r in records for k in r.recovery}),
        "tests": sorted({k for r in records for k in r.tests}),
    }
    for group in ("clustering", "recovery"):
        for name in names[group]:
            entries = [getattr(r, group).get(name, {}) for r in records]
            errors = [e for e in entries if "error" in e]
            out["n_errors"] += len(errors)
            good = [e for e in entries if "hamming" in e]
            if not good:
                out[group][name] = {"error": errors[0]["error"] if errors else "no data"}
                continue
            agg = {"hamming": _mean_ci([e["hamming"] for e in good])}
            if group == "clustering":
                agg["cosine"] = _mean_ci([e["cosine"] for e in good])
                agg["fallback_rate"] = float(np.mean([e["fallback"] for e in good]))
                if all("n_selected" in e for e in good):
                    agg["n_selected"] = _mean_ci([float(e["n_selected"]) for e in good])
            else:
                agg["support_size"] = _mean_ci([float(e["support_size"]) for e in good])
                if all("signed_hamming" in e for e in good):
                    agg["signed_hamming"] = _mean_ci([e["signed_hamming"] for e in good])
            out[group][name] = agg
    for name in names["tests"]:
        entries = [r.tests.get(name, {}) for r in records]
        errors = [e for e in entries if "error" in e]
        out["n_errors"] += len(errors)
        good = [e for e in entries if "reject" in e]
        if not good:
            out["tests"][name] = {"error": errors[0]["error"] if errors else "no data"}
            continue
        k = int(np.sum([e["reject"] for e in good]))
        lo, hi = wilson_interval(k, len(good))
        out["tests"][name] = {
            "rejection_rate": k / len(good),
            "ci_low": lo,
            "ci_high": hi,
            "statistic": _mean_ci([e["statistic"] for e in good]),
            "n": len(good),
        }
    return out


def _classify_cell(sweep: SweepSpec, beta: float, params: ArwParams) -> dict:
    variant = "signed" if sweep.sign_mix_a == 0.5 else "one_sided"
    regions = {}
    if params.alpha is not None and not math.isinf(params.alpha):
        for problem in PROBLEMS:
            for kind in BOUND_KINDS:
                regions[f"{problem}:{kind}"] = classify(problem, kind, variant, sweep.theta, beta, params.alpha)
    elif params.r is not None and 0.5 < beta < 1 - sweep.theta / 2:
        rho = rho_star_theta(sweep.theta, beta)
        if abs(params.r - rho) <= 1e-12:
            regions["ifpca_cosine"] = "on_boundary"
        else:
            regions["ifpca_cosine"] = "possible" if params.r > rho else "impossible"
    return regions


def run_sweep(sweep: SweepSpec, workers: int = 1) -> dict:
    """Run every cell of the sweep and aggregate per-cell statistics.

    Returns {"spec", "cells", "meta"}; everything outside "meta" is a
    pure function of the spec. Failed cells are recorded and do not
    stop the sweep.
    """
    t0 = time.perf_counter()
    jobs = []
    for i, beta in enumerate(sweep.betas):
        for j, strength in enumerate(sweep.strengths):
            cell_index = i * len(sweep.strengths) + j
            jobs.append((cell_index, beta, strength))

    def run_cell(job):
        cell_index, beta, strength = job
        try:
            params = sweep.cell_params(beta, strength)
        except ValueError as exc:
            return cell_index, {"cell": cell_index, "beta": beta, "strength": strength, "error": str(exc)}
        records = []
        for rep in range(sweep.reps):
            spec = TrialSpec(params=params, methods=sweep.methods, seed=trial_seed(sweep.master_seed, cell_index, rep))
            records.append(run_trial(spec))
        cell = {
            "cell": cell_index,
            "beta": beta,
            "strength": strength,
            "alpha": None if params.alpha is None or math.isinf(params.alpha) else params.alpha,
            "r": params.r,
            "n": params.n,
            "expected_signals": params.expected_signals,
            "regions": _classify_cell(sweep, beta, params),
            "results": _aggregate_cell(records),
        }
        return cell_index, cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            done = dict(pool.map(run_cell, jobs))
    else:
        done = dict(map(run_cell, jobs))
    cells = [done[k] for k in sorted(done)]
    return {
        "spec": sweep.to_dict(),
        "cells": cells,
        "meta": {"wall_time": time.perf_counter() - t0, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")},
    }


def canonical_json(payload: dict, drop_meta: bool = False) -> str:
    body = {k: v for k, v in payload.items() if not (drop_meta and k == "meta")}
    return json.dumps(body, sort_keys=True, indent=1)


def save_sweep(result: dict, path: str | Path) -> None:
    Path(path).write_text(canonical_json(result))


def sweep_csv_rows(result: dict) -> list[dict]:
    """One flat summary row per cell, ready for a CSV writer."""
    rows = []
    for cell in result["cells"]:
        row = {
            "cell": cell["cell"],
            "beta": cell.get("beta"),
            "strength": cell.get("strength"),
            "alpha": cell.get("alpha"),
            "r": cell.get("r"),
        }
        if "error" in cell:
            row["error"] = cell["error"]
            rows.append(row)
            continue
        for problem_kind, region in cell["regions"].items():
            row[f"region:{problem_kind}"] = region
        for name, agg in cell["results"]["clustering"].items():
            if "hamming" in agg:
                row[f"clustering_hamming:{name}"] = agg["hamming"]["mean"]
                row[f"cosine:{name}"] = agg["cosine"]["mean"]
        for name, agg in cell["results"]["recovery"].items():
            if "hamming" in agg:
                row[f"recovery_hamming:{name}"] = agg["hamming"]["mean"]
        for name, agg in cell["results"]["tests"].items():
            if "rejection_rate" in agg:
                row[f"rejection_rate:{name}"] = agg["rejection_rate"]
        rows.append(row)
    return rows


def save_records(records: list[TrialRecord], path: str | Path) -> None:
    payload = {"records": [r.to_dict() for r in records]}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1))


def load_records(path: str | Path) -> list[TrialRecord]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed record file {path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if "records" not in payload:
        raise ValueError(f"malformed record file {path}: missing 'records' field")
    return [TrialRecord.from_dict(d) for d in payload["records"]]

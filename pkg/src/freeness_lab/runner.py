"""Batch driver: dispatch a config to its experiment, persist and summarize.

Each run directory holds

* ``results.csv``  one row per replicate record (schema per kind below),
* ``summary.json`` per-n statistics, decay slopes and acceptance gates,
* ``plot_<figure>.tsv`` two-column plot data,
* ``manifest.json`` config hash, stream ids, timings and the file list.

Everything except ``manifest.json`` (which records wall-clock timings) is a
pure function of the config: replicate ``r`` at dimension ``n`` always draws
from ``RngStream(seed, (n << 32) | r)`` and rows are merged in key order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .band import BandPattern, band_project, commutant_bound, circular_distance_matrix
from .concentration import binomial_ci_radius, empirical_tail, get_statistic
from .config import ExperimentConfig
from .coupling import couple, reference_diagonal, residual_certificate
from .freeness import loglog_slope, run_freeness_experiment, stream_id, summarize_moments
from .haar import RngStream, esd, in_neighborhood, sample_ginibre, sample_haar_unitary, write_esd_csv
from .linalg import NumericalFailure, commutator, operator_norm, two_norm
from .parallel import map_ordered

__all__ = ["RunManifest", "SCHEMAS", "run", "summarize", "read_results", "format_value"]

SCHEMAS = {
    "couple": [
        ("n", int), ("replicate", int), ("j", int), ("k", int),
        ("residual_two_norm", float), ("o_k_member", bool), ("diag_distance_op_norm", float),
        ("residual_diag_two_norm", float), ("identity_error", float), ("error", str),
    ],
    "band": [
        ("n", int), ("replicate", int), ("input", str), ("lhs_two_norm", float),
        ("rhs_bound", float), ("op_norm_ratio", float), ("member_ok", bool),
        ("bounds_ok", bool), ("error", str),
    ],
    "esd": [
        ("n", int), ("replicate", int), ("k", int), ("ks_distance", float),
        ("o_k_member", bool), ("error", str),
    ],
    "concentration": [
        ("n", int), ("delta", float), ("freq", float), ("bound", float), ("ci_radius", float),
        ("reps", int), ("raw_bound", float), ("shifted_freq", float), ("stat", str),
        ("lip", float), ("error", str),
    ],
    "freeness": [
        ("n", int), ("replicate", int), ("word", str), ("moment_re", float), ("moment_im", float),
        ("abs_moment", float), ("commutator_max", float), ("declared_budget_max", float),
        ("freeness_budget", float), ("error", str),
    ],
}


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _parse_value(text: str, kind):
    if kind is bool:
        if text not in ("true", "false"):
            raise ValueError(f"bad boolean {text!r}")
        return text == "true"
    return kind(text)


def write_rows(path: Path, kind: str, rows: list[dict]) -> None:
    columns = [c for c, _ in SCHEMAS[kind]]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])


def read_results(path: str | Path, kind: str) -> list[dict]:
    schema = SCHEMAS[kind]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != [c for c, _ in schema]:
            raise ValueError(f"{path}: columns {header} do not match the {kind!r} schema")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(schema):
                raise ValueError(f"{path}:{lineno}: expected {len(schema)} fields")
            try:
                rows.append({c: _parse_value(v, t) for (c, t), v in zip(schema, record)})
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return rows


def _write_tsv(path: Path, xs, ys) -> None:
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{format_value(x)}\t{format_value(y)}\n")


def _nan_row(kind: str, **known) -> dict:
    row = {c: (float("nan") if t is float else False if t is bool else "" if t is str else 0)
           for c, t in SCHEMAS[kind]}
    row.update(known)
    return row


# -- couple -------------------------------------------------------------------


def couple_rows(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]

    def job(key):
        n, r = key
        try:
            family = couple(n, config.m, RngStream(config.seed, stream_id(n, r)), config.eig_tol)
        except NumericalFailure as exc:
            return [_nan_row("couple", n=n, replicate=r, j=j + 1, k=k, error=str(exc))
                    for j in range(config.m) for k in config.k]
        diag_res = family.residuals_diag()
        rows = []
        for k in config.k:
            for j, (member, dist) in enumerate(residual_certificate(family, k)):
                rows.append({
                    "n": n, "replicate": r, "j": j + 1, "k": k,
                    "residual_two_norm": family.residuals[j], "o_k_member": member,
                    "diag_distance_op_norm": dist, "residual_diag_two_norm": diag_res[j],
                    "identity_error": family.identity_errors[j], "error": "",
                })
        return rows

    return [row for chunk in map_ordered(job, jobs, threads) for row in chunk]


def couple_summary(rows: list[dict], identity_tol: float = 1e-8) -> tuple[dict, dict, dict]:
    good = [r for r in rows if not r["error"]]
    k0 = min(r["k"] for r in good) if good else None
    base = [r for r in good if r["k"] == k0]  # one row per (n, replicate, j)
    per_n = {}
    for n in sorted({r["n"] for r in base}):
        res = [r["residual_two_norm"] for r in base if r["n"] == n]
        ops = [r["diag_distance_op_norm"] for r in base if r["n"] == n]
        per_n[n] = {
            "samples": len(res),
            "median_residual_two_norm": float(np.median(res)),
            "max_residual_two_norm": float(np.max(res)),
            "median_diag_distance_op_norm": float(np.median(ops)),
            "o_k_frequency": {
                str(k): float(np.mean([r["o_k_member"] for r in good if r["n"] == n and r["k"] == k]))
                for k in sorted({r["k"] for r in good})
            },
        }
    ns = sorted(per_n)
    medians = [per_n[n]["median_residual_two_norm"] for n in ns]
    implication_failures = [
        r for r in good if r["o_k_member"] and r["diag_distance_op_norm"] > 4 * math.pi / r["k"]
    ]
    identity_ok = all(
        r["identity_error"] <= identity_tol
        and abs(r["residual_two_norm"] - r["residual_diag_two_norm"]) <= identity_tol
        for r in good
    )
    summary = {
        "per_n": per_n,
        "decay_slope": loglog_slope(ns, medians),
        "implication_failures": len(implication_failures),
        "errors": len(rows) - len(good),
    }
    gates = {
        "C2-identity": identity_ok and bool(good),
        "C2-decay": len(ns) < 2 or all(b < a for a, b in zip(medians, medians[1:])),
        "C3-implication": not implication_failures,
    }
    plots = {"residual_vs_n": (ns, medians)}
    return summary, gates, plots


# -- band ---------------------------------------------------------------------


def band_instance(n: int, epsilon: float, kind: str, gen: np.random.Generator) -> np.ndarray:
    """Test matrix for the projection bound.

    ``gaussian``: Ginibre.  ``structured``: Ginibre entries damped by a
    Gaussian profile of random width in circular distance (a near-commutant
    of the reference diagonal), with probability 1/2 replaced by a matrix
    supported only on the entries the projection drops that sit closest to
    the diagonal (the hardest case for the bound).
    """
    G = sample_ginibre(n, gen)
    if kind == "gaussian":
        return G
    if gen.random() < 0.5:
        d = circular_distance_matrix(n)
        kept = band_project(np.ones((n, n)), epsilon) != 0
        dropped = ~kept
        if dropped.any():
            closest = dropped & (d == d[dropped].min())
            return np.where(closest, G, 0)
    width = gen.uniform(0.5, max(1.0, n / 4))
    return G * np.exp(-((circular_distance_matrix(n) / width) ** 2))


def band_check(B: np.ndarray, epsilon: float) -> dict:
    """Evaluate both sides of the projection bounds and band membership."""
    n = B.shape[0]
    P = band_project(B, epsilon)
    A = reference_diagonal(n)
    lhs = two_norm(B - P)
    rhs = commutant_bound(two_norm(commutator(A, B)), epsilon)
    op_B = operator_norm(B)
    ratio = operator_norm(P) / op_B if op_B > 0 else 0.0
    # relative rounding allowance on both inequalities
    tol = 1e-12
    return {
        "lhs_two_norm": lhs,
        "rhs_bound": rhs,
        "op_norm_ratio": ratio,
        "member_ok": BandPattern(n, epsilon).contains(P),
        "bounds_ok": lhs <= rhs * (1 + tol) + tol and ratio <= 3 * (1 + tol),
    }


def band_rows(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]

    def job(key):
        n, r = key
        kind = config.band_input
        if kind == "mixed":
            kind = "gaussian" if r % 2 == 0 else "structured"
        gen = RngStream(config.seed, stream_id(n, r)).generator()
        B = band_instance(n, config.epsilon, kind, gen)
        return {"n": n, "replicate": r, "input": kind, **band_check(B, config.epsilon), "error": ""}

    return map_ordered(job, jobs, threads)


def band_summary(rows: list[dict]) -> tuple[dict, dict, dict]:
    per_n = {}
    for n in sorted({r["n"] for r in rows}):
        sub = [r for r in rows if r["n"] == n]
        ratios = [r["lhs_two_norm"] / r["rhs_bound"] for r in sub if r["rhs_bound"] > 0]
        per_n[n] = {
            "instances": len(sub),
            "max_lhs_over_rhs": float(max(ratios)) if ratios else 0.0,
            "max_op_norm_ratio": float(max(r["op_norm_ratio"] for r in sub)),
            "membership_failures": sum(not r["member_ok"] for r in sub),
            "bound_violations": sum(not r["bounds_ok"] for r in sub),
        }
    gates = {"C1-band": bool(rows) and all(r["member_ok"] and r["bounds_ok"] for r in rows)}
    xs = list(range(len(rows)))
    ys = [r["lhs_two_norm"] / r["rhs_bound"] if r["rhs_bound"] > 0 else 0.0 for r in rows]
    return {"per_n": per_n}, gates, {"lhs_over_rhs": (xs, ys)}


# -- esd ----------------------------------------------------------------------


def esd_rows(config: ExperimentConfig, threads: int = 1, out_dir: Path | None = None) -> list[dict]:
    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]

    def job(key):
        n, r = key
        try:
            U = sample_haar_unitary(n, RngStream(config.seed, stream_id(n, r)))
            mu = esd(U, config.eig_tol, config.unitarity_tol)
        except NumericalFailure as exc:
            return [_nan_row("esd", n=n, replicate=r, k=k, error=str(exc)) for k in config.k]
        if out_dir is not None and r == 0:
            write_esd_csv(out_dir / f"esd_n{n}.csv", mu)
        ks = mu.ks_uniform()
        return [{"n": n, "replicate": r, "k": k, "ks_distance": ks,
                 "o_k_member": in_neighborhood(mu, k), "error": ""} for k in config.k]

    return [row for chunk in map_ordered(job, jobs, threads) for row in chunk]


def esd_summary(rows: list[dict]) -> tuple[dict, dict, dict]:
    good = [r for r in rows if not r["error"]]
    per_n = {}
    for n in sorted({r["n"] for r in good}):
        k0 = min(r["k"] for r in good if r["n"] == n)
        ks = [r["ks_distance"] for r in good if r["n"] == n and r["k"] == k0]
        per_n[n] = {
            "samples": len(ks),
            "median_ks": float(np.median(ks)),
            "max_ks": float(np.max(ks)),
            "o_k_frequency": {
                str(k): float(np.mean([r["o_k_member"] for r in good if r["n"] == n and r["k"] == k]))
                for k in sorted({r["k"] for r in good if r["n"] == n})
            },
        }
    ns = sorted(per_n)
    gates = {"ESD-ks": all(per_n[n]["max_ks"] < 0.1 for n in ns if n >= 512)}
    return {"per_n": per_n}, gates, {"ks_vs_n": (ns, [per_n[n]["median_ks"] for n in ns])}


# -- concentration --------------------------------------------------------------


def concentration_rows(config: ExperimentConfig, threads: int = 1) -> list[dict]:
    stat = get_statistic(config.stat)
    rows = []
    for n in config.n_grid:
        report = empirical_tail(stat, n, config.reps, config.deltas, config.seed, threads)
        for r in report.rows:
            rows.append({
                "n": n, "delta": r["delta"], "freq": r["freq"], "bound": r["bound"],
                "ci_radius": r["ci_radius"], "reps": config.reps, "raw_bound": r["raw_bound"],
                "shifted_freq": r["shifted_freq"], "stat": stat.name, "lip": stat.lip, "error": "",
            })
    return rows


def concentration_summary(rows: list[dict]) -> tuple[dict, dict, dict]:
    pooled = {}
    for r in rows:
        key = (r["stat"], r["n"], r["delta"])
        p = pooled.setdefault(key, {"count": 0, "reps": 0, "bound": r["bound"], "raw_bound": r["raw_bound"],
                                    "shifted": 0.0})
        p["count"] += round(r["freq"] * r["reps"])
        p["shifted"] += r["shifted_freq"] * r["reps"]
        p["reps"] += r["reps"]
    table = []
    for (stat, n, delta), p in sorted(pooled.items()):
        freq = p["count"] / p["reps"]
        radius = binomial_ci_radius(p["count"], p["reps"])
        table.append({
            "stat": stat, "n": n, "delta": delta, "reps": p["reps"], "freq": freq,
            "shifted_freq": p["shifted"] / p["reps"], "bound": p["bound"], "raw_bound": p["raw_bound"],
            "ci_radius": radius, "vacuous": p["raw_bound"] >= 1.0, "sound": freq <= p["bound"] + radius,
        })
    gates = {"C6-soundness": bool(table) and all(t["sound"] for t in table)}
    plots = {
        "freq_vs_delta": ([t["delta"] for t in table], [t["freq"] for t in table]),
        "bound_vs_delta": ([t["delta"] for t in table], [t["bound"] for t in table]),
    }
    return {"table": table}, gates, plots


# -- freeness -------------------------------------------------------------------


def freeness_summary(rows: list[dict]) -> tuple[dict, dict, dict]:
    summary = summarize_moments(rows)
    gates, plots = {}, {}
    for word, s in summary.items():
        ns = sorted(s["per_n"])
        top = s["per_n"][ns[-1]]
        budget = top["budget"]
        gates[f"C5a-budget[{word}]"] = bool(
            not math.isnan(budget) and top["max_abs_moment"] <= budget + 3 * top["se_abs_moment"]
        )
        gates[f"C5b-monotone[{word}]"] = s["median_nonincreasing"]
        plots[f"median_moment_vs_n_{word.replace(',', '-')}"] = (
            ns, [s["per_n"][n]["median_abs_moment"] for n in ns]
        )
    summary = {"words": summary, "errors": sum(1 for r in rows if r["error"])}
    # flat convenience columns
    summary["max_abs_moment"] = max((s["per_n"][n]["max_abs_moment"]
                                     for s in summary["words"].values() for n in s["per_n"]), default=0.0)
    summary["budget"] = max((s["per_n"][n]["budget"] for s in summary["words"].values() for n in s["per_n"]),
                            default=float("nan"))
    return summary, gates, plots


SUMMARIES = {
    "couple": couple_summary,
    "band": band_summary,
    "esd": esd_summary,
    "concentration": concentration_summary,
    "freeness": freeness_summary,
}


# -- driver ---------------------------------------------------------------------


@dataclass
class RunManifest:
    kind: str
    config_hash: str
    version: str
    config: dict
    streams: list
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    gates: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.gates.values())


def config_hash(config: ExperimentConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(_json_safe(data), indent=2, sort_keys=True) + "\n")


def _emit(out: Path, kind: str, rows: list[dict]) -> tuple[dict, list[str]]:
    summary, gates, plots = SUMMARIES[kind](rows)
    write_rows(out / "results.csv", kind, rows)
    _dump_json(out / "summary.json", {"kind": kind, "summary": summary, "gates": gates})
    files = ["results.csv", "summary.json"]
    for name, (xs, ys) in plots.items():
        _write_tsv(out / f"plot_{name}.tsv", xs, ys)
        files.append(f"plot_{name}.tsv")
    return gates, files


def run(config: ExperimentConfig, out_dir: str | Path | None = None, threads: int = 1) -> RunManifest:
    """Run ``config`` and write its result files into ``out_dir`` (default ``config.out``)."""
    out = Path(out_dir if out_dir is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if config.kind == "couple":
        rows = couple_rows(config, threads)
    elif config.kind == "band":
        rows = band_rows(config, threads)
    elif config.kind == "esd":
        rows = esd_rows(config, threads, out)
    elif config.kind == "concentration":
        rows = concentration_rows(config, threads)
    elif config.kind == "freeness":
        rows = run_freeness_experiment(config, threads).rows
    else:
        raise ValueError(f"unknown kind {config.kind!r}")
    compute = time.perf_counter() - started

    gates, files = _emit(out, config.kind, rows)
    if config.kind == "esd":
        files += sorted(p.name for p in out.glob("esd_n*.csv"))
    streams = [
        {"n": n, "replicate": r, "stream_id": stream_id(n, r)}
        for n in config.n_grid for r in range(config.reps)
    ]
    manifest = RunManifest(
        kind=config.kind,
        config_hash=config_hash(config),
        version=__version__,
        config=config.to_dict(),
        streams=streams,
        timings={"compute_seconds": compute, "total_seconds": time.perf_counter() - started,
                 "threads": threads},
        outputs=files + ["manifest.json"],
        gates=gates,
    )
    _dump_json(out / "manifest.json", asdict(manifest))
    return manifest


def summarize(run_dirs, out_dir: str | Path | None = None) -> dict:
    """Pool the replicate rows of several run directories of the same kind.

    Returns the pooled summary with one pass/fail entry per acceptance gate,
    and writes it (plus plot data) into ``out_dir`` when given.
    """
    run_dirs = [Path(p) for p in run_dirs]
    if not run_dirs:
        raise ValueError("no run directories given")
    kinds, rows, hashes = set(), [], []
    for d in run_dirs:
        manifest = json.loads((d / "manifest.json").read_text())
        kinds.add(manifest["kind"])
        hashes.append(manifest["config_hash"])
        rows.extend(read_results(d / "results.csv", manifest["kind"]))
    if len(kinds) != 1:
        raise ValueError(f"cannot pool runs of different kinds: {sorted(kinds)}")
    kind = kinds.pop()
    summary, gates, plots = SUMMARIES[kind](rows)
    result = {"kind": kind, "runs": [str(d) for d in run_dirs], "config_hashes": hashes,
              "summary": summary, "gates": gates}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(out / "summary.json", result)
        for name, (xs, ys) in plots.items():
            _write_tsv(out / f"plot_{name}.tsv", xs, ys)
    return result

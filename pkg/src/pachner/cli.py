"""Command-line experiment runner.

Subcommands: ``sample``, ``estimate``, ``degrees``, ``enumerate``,
``validate`` and ``isosig``.  Exit status is 0 on success, 1 on usage errors
and 2 on data errors.
"""

from __future__ import annotations

import argparse
import csv
import glob
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

from .errors import ConfigError, InsufficientSupport, PachnerError

log = logging.getLogger("pachner")

EXPERIMENT_FILE = "experiment.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# experiment description


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce a batch of chains.

    ``gammas`` wins over ``k`` (which means ``gamma = 1/k``).
    """

    dim: int = 2
    manifold: str = "sphere2"
    simplicial_only: bool = False
    one_vertex_mode: bool = False
    k: list = field(default_factory=lambda: list(range(1, 26)))
    gammas: Optional[list] = None
    runs: int = 20
    steps: int = 10_000_000
    sample_interval: int = 100
    burn_in: Optional[int] = None
    seed: int = 0
    mode: str = "accept_all"
    beta: Optional[float] = None
    r: Optional[float] = None
    max_n: Optional[int] = None
    record_isosig: bool = True
    output: str = "runs"

    def grid(self) -> list:
        g = self.gammas if self.gammas else [1.0 / k for k in self.k]
        return [float(x) for x in g]

    def check(self):
        grid = self.grid()
        if not grid or any(not x > 0 for x in grid):
            raise ConfigError("the gamma grid must be non-empty and positive")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        for cfg, _ in self.chains():
            cfg.resolved()
        return self

    def chains(self):
        from .sampler import SamplerConfig

        grid = self.grid()
        for run in range(self.runs):
            for gi, g in enumerate(grid):
                cfg = SamplerConfig(
                    dim=self.dim, gamma=g, r=self.r, mode=self.mode, beta=self.beta,
                    steps=self.steps, sample_interval=self.sample_interval, burn_in=self.burn_in,
                    seed=self.seed, simplicial_only=self.simplicial_only,
                    one_vertex_mode=self.one_vertex_mode, chain_id=run * len(grid) + gi,
                    max_n=self.max_n, record_isosig=self.record_isosig, run=run,
                )
                yield cfg, f"run{run:02d}_g{gi:02d}"


def parse_k(text: str) -> list:
    """``"1-25"`` or ``"5,7,9"`` or a mix like ``"1-3,10"``."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def load_spec(path: Optional[str], overrides: dict) -> ExperimentSpec:
    data = {}
    if path:
        with open(path) as fh:
            data = json.load(fh)
        unknown = set(data) - {f.name for f in fields(ExperimentSpec)}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    if isinstance(data.get("k"), str):
        data["k"] = parse_k(data["k"])
    return ExperimentSpec(**data)


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PACHNER_WORKERS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# sample


def _run_one(args):
    from .sampler import NDJSONSink, run_chain
    from .triangulation import seed_triangulation

    manifold, cfg, base = args
    summary = run_chain(seed_triangulation(manifold), cfg, NDJSONSink(base + ".ndjson"))
    tmp = base + ".summary.json.tmp"
    with open(tmp, "w") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
    os.replace(tmp, base + ".summary.json")
    return os.path.basename(base), summary


def cmd_sample(a) -> int:
    overrides = {
        "dim": a.dim, "manifold": a.manifold, "simplicial_only": a.simplicial or None,
        "one_vertex_mode": a.one_vertex or None, "k": a.k, "runs": a.runs, "steps": a.steps,
        "sample_interval": a.interval, "burn_in": a.burn_in, "seed": a.seed, "mode": a.mode,
        "beta": a.beta, "r": a.r, "max_n": a.max_n, "output": a.out,
    }
    if a.gammas:
        overrides["gammas"] = [float(x) for x in a.gammas.split(",")]
    if a.no_isosig:
        overrides["record_isosig"] = False
    spec = load_spec(a.config, overrides).check()
    out = spec.output
    os.makedirs(os.path.join(out, "chains"), exist_ok=True)
    with open(os.path.join(out, EXPERIMENT_FILE), "w") as fh:
        json.dump(asdict(spec), fh, indent=1)
    jobs = [(spec.manifold, cfg, os.path.join(out, "chains", name)) for cfg, name in spec.chains()]
    workers = _workers()
    log.info("%d chains on %d worker(s)", len(jobs), workers)
    started = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    cols = ["chain", "run", "gamma", "steps", "moved", "self_loop_fraction", "mean_n", "min_n", "max_n", "records", "seconds"]
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for name, s in results:
            w.writerow([name, s["config"]["run"], s["config"]["gamma"]] + [s[c] for c in cols[3:]])
    print(f"{len(results)} chains written to {out} in {time.perf_counter() - started:.1f}s")
    return 0


# ---------------------------------------------------------------------------
# estimate / degrees


def _log_files(paths) -> list:
    files = []
    for p in paths:
        if os.path.isdir(p):
            files.extend(sorted(glob.glob(os.path.join(p, "**", "*.ndjson"), recursive=True)))
        else:
            files.append(p)
    return files


def _experiment_of(paths):
    for p in paths:
        cand = os.path.join(p if os.path.isdir(p) else os.path.dirname(os.path.dirname(p)), EXPERIMENT_FILE)
        if os.path.exists(cand):
            with open(cand) as fh:
                return json.load(fh)
    return None


def _records(paths):
    from .errors import FormatError
    from .sampler import read_records

    files = _log_files(paths)
    if not files:
        raise FormatError("no sample logs found")
    records = []
    for f in files:
        try:
            records.extend(read_records(f))
        except (ValueError, KeyError, TypeError) as exc:
            raise FormatError(f"{f}: {exc}") from exc
    if not records:
        raise FormatError("the sample logs are empty")
    return records


def _exact_ratios(census_files, delta):
    from .census import read_census

    counts = {}
    for f in census_files or ():
        c = read_census(f)
        counts[c.n] = len(c)
    return {n: counts[n + delta] / counts[n] for n in counts if n + delta in counts and counts[n]}


def cmd_estimate(a) -> int:
    from .estimators import growth_constants, ratio_curve
    from .errors import NoPlateau
    from .sampler import default_r

    records = _records(a.logs)
    exp = _experiment_of(a.logs) or {}
    dim = a.dim or exp.get("dim", 2)
    r = a.r or exp.get("r") or default_r(dim)
    delta = a.delta or (2 if dim == 2 else 1)
    curve = ratio_curve(records, r, delta, threshold=a.threshold)
    seen = sorted({rec.n for rec in records})
    for n in seen:
        if n + delta in seen and n not in curve:
            log.warning("n=%d: insufficient support, skipped", n)
    if not curve:
        raise InsufficientSupport("no size has an admissible estimate")
    exact = _exact_ratios(a.census, delta)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "R_hat", "stderr", "support", "runs", "exact"])
        for n in sorted(curve):
            e = curve[n]
            w.writerow([n, repr(e.mean), repr(e.stderr), sum(e.support.values()), e.runs, exact.get(n, "")])
    try:
        gc = growth_constants(curve, tuple(a.n_range) if a.n_range else None, delta)
        consts = asdict(gc)
        print(f"C = {gc.C:.4f} +- {gc.C_err:.4f}, c_tilde = {gc.c_tilde:.5f} +- {gc.c_tilde_err:.5f} over n in {gc.n_range}")
    except NoPlateau as exc:
        log.warning("%s", exc)
        consts = None
    if a.constants:
        with open(a.constants, "w") as fh:
            json.dump(consts, fh, indent=1)
    if a.plot:
        from .plotting import plot_ratio_curve

        plot_ratio_curve(curve, a.plot, exact=exact, reference=a.reference)
    print(f"{len(curve)} sizes written to {a.out}")
    return 0


def cmd_degrees(a) -> int:
    from .errors import WrongDimension
    from .estimators import degree_identities, degree_stats, local_maxima, tail_rate

    records = _records(a.logs)
    if any(rec.degrees is None for rec in records):
        raise WrongDimension("degree statistics need 3-dimensional logs with edge histograms")
    stats = degree_stats(records, check=False)
    bad = 0
    for rec in records:
        ok_sum, ok_mean = degree_identities(rec.n, rec.degrees, rec.f0 if rec.f0 is not None else 1)
        bad += not (ok_sum and ok_mean)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "kappa", "mean", "sigma", "count"])
        for row in stats.rows():
            w.writerow(row)
    if a.samples_out:
        with open(a.samples_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["run", "chain_id", "t", "n", "edges", "sum_kappa_N", "mean_degree", "expected_mean"])
            for rec in records:
                edges = sum(rec.degrees.values())
                total = sum(k * c for k, c in rec.degrees.items())
                f0 = rec.f0 if rec.f0 is not None else 1
                w.writerow([rec.run, rec.chain_id, rec.t, rec.n, edges, total, total / edges, 6 * rec.n / (rec.n + f0)])
    n = a.n if a.n is not None else max(stats.count, key=lambda m: (stats.count[m], m))
    if n not in stats.count:
        raise InsufficientSupport(f"no samples at n={n}")
    dist = stats.distribution(n)
    try:
        rate, err = tail_rate(dist, tuple(a.kappa_range))
        print(f"n={n}: {stats.count[n]} samples, tail decay rate {rate:.4f} +- {err:.4f}")
    except InsufficientSupport as exc:
        log.warning("%s", exc)
    print(f"local maxima at kappa = {local_maxima(dist)}; identity violations: {bad}")
    if a.plot:
        from .plotting import plot_degrees

        plot_degrees(stats, a.plot, n=n)
    return 2 if bad else 0


# ---------------------------------------------------------------------------
# enumerate / validate / isosig


def cmd_enumerate(a) -> int:
    from .census import bfs_census, brute_force_census, write_census
    from .triangulation import seed_triangulation

    if a.method == "bfs":
        if a.dim != 2:
            raise UsageError("the flip-graph method is for surfaces (--dim 2)")
        c = bfs_census(seed_triangulation(f"genus({a.genus})"), a.n)
    else:
        pred = a.predicate or (f"genus({a.genus})" if a.dim == 2 else "sphere3_candidate")
        c = brute_force_census(a.dim, a.n, pred, method=a.method, max_slots=a.max_slots)
    if a.out:
        write_census(c, a.out)
    print(len(c))
    return 0


def cmd_validate(a) -> int:
    from .errors import TriangulationError
    from .triangulation import read_gluing_list

    try:
        T = read_gluing_list(a.file)
    except TriangulationError as exc:
        print(f"invalid: {exc}")
        return 2
    fv = T.f_vector()
    print(f"valid: dim={T.dim} n={T.n} f={tuple(fv)} euler={fv.euler_characteristic}")
    return 0


def cmd_isosig(a) -> int:
    from .triangulation import read_gluing_list

    for f in a.files:
        print(read_gluing_list(f).isosig())
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pachner", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="run chains over a gamma grid")
    s.add_argument("--config", help="JSON file with experiment keys; flags override it")
    s.add_argument("--dim", type=int)
    s.add_argument("--manifold", help="seed kind: sphere2, genus(g), tetrahedron, sphere3_seed, ...")
    s.add_argument("--simplicial", action="store_true")
    s.add_argument("--one-vertex", action="store_true")
    s.add_argument("--k", help="gamma = 1/k for k in a list like 1-25 or 5,7,9")
    s.add_argument("--gammas", help="explicit comma-separated gamma values")
    s.add_argument("--runs", type=int)
    s.add_argument("--steps", type=int)
    s.add_argument("--interval", type=int)
    s.add_argument("--burn-in", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--mode", choices=["accept_all", "metropolis"])
    s.add_argument("--beta", type=float)
    s.add_argument("--r", type=float)
    s.add_argument("--max-n", type=int)
    s.add_argument("--no-isosig", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("estimate", help="growth ratios and constants from sample logs")
    e.add_argument("logs", nargs="+")
    e.add_argument("--dim", type=int)
    e.add_argument("--r", type=float)
    e.add_argument("--delta", type=int)
    e.add_argument("--threshold", type=float, default=0.01)
    e.add_argument("--n-range", type=int, nargs=2, metavar=("LO", "HI"))
    e.add_argument("--census", nargs="*", help="census files used for exact ratios")
    e.add_argument("--reference", type=float)
    e.add_argument("--out", default="ratios.csv")
    e.add_argument("--constants")
    e.add_argument("--plot")
    e.set_defaults(func=cmd_estimate)

    d = sub.add_parser("degrees", help="edge-degree statistics from 3-dimensional logs")
    d.add_argument("logs", nargs="+")
    d.add_argument("--n", type=int)
    d.add_argument("--kappa-range", type=int, nargs=2, default=[8, 20], metavar=("LO", "HI"))
    d.add_argument("--out", default="degrees.csv")
    d.add_argument("--samples-out")
    d.add_argument("--plot")
    d.set_defaults(func=cmd_degrees)

    n = sub.add_parser("enumerate", help="exact census at fixed size")
    n.add_argument("--dim", type=int, default=2)
    n.add_argument("--genus", type=int, default=0)
    n.add_argument("--predicate")
    n.add_argument("--n", type=int, required=True)
    n.add_argument("--method", choices=["bfs", "orderly", "exhaustive"], default="bfs")
    n.add_argument("--max-slots", type=int, default=16)
    n.add_argument("--out")
    n.set_defaults(func=cmd_enumerate)

    v = sub.add_parser("validate", help="check a gluing-list file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("isosig", help="print isomorphism signatures of gluing-list files")
    i.add_argument("files", nargs="+")
    i.set_defaults(func=cmd_isosig)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except UsageError as exc:
        print(f"pachner: error: {exc}", file=sys.stderr)
        return 1
    except (PachnerError, OSError, json.JSONDecodeError) as exc:
        print(f"pachner: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

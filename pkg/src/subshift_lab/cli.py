"""Batch experiment driver.

    subshift-lab <subcommand> [--config cfg.json] [--out DIR] [--seed N]

Each run writes ``verdict.json`` (one entry per assertion) plus
subcommand-specific CSV/JSON/raw artifacts into ``--out``.  The exit code is
0 iff every assertion passed.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import complexity as cx
from . import ekm, iet, measures, sturmian, tower
from .word_core import FixedWordSource, PeriodicSource, fibonacci_source


class ConfigError(ValueError):
    pass


FREE = object()  # marks a sub-document validated by the module that consumes it

DEFAULTS: dict[str, dict] = {
    "complexity": {
        "source": {"kind": "fibonacci", "cf": "0;2,1x40", "rho": "0", "period": "01", "path": None,
                   "alphabet": 2, "length": None},
        "n_max": 1000, "factor": 50, "n_min": 1,
    },
    "sturmian": {"cf": "0;2,1x40", "rho": "0", "n_max": 500, "factor": 50, "prefix_length": 10000},
    "union": {"cf": "0;2,1x40", "rho": "0", "d": 2, "n_max": 200, "factor": 50},
    "iet": {
        "spec": FREE, "random_k": 3, "bits": 40, "n_max": 200, "orbit_budget": 16,
        "code_start": "0", "code_length": 1000, "measure_length": 100000, "measure_m": 3, "measure_tol": "1/1000",
    },
    "tower": {
        "d": 2, "J": 2, "kappa": None, "delta": None, "budget": 10**8, "prefix_length": 10**6,
        "profile_n_max": 5 * 10**5, "probe_limit": 5 * 10**5, "peak_threshold": "5/2", "syndetic": True,
    },
    "ekm": {"instances": 100, "cf_depth": 30, "max_partial": 5, "N_min": 5, "N_max": 40, "M_max": 3,
            "cap": 200000, "max_tries": 10000},
    "measures": {
        "d": 2, "J": 2, "level": 2, "window": 20000, "m": 3, "tau": "1/10", "ratio_n_max": 20000,
        "probe": True, "delta": "1/2", "N": 3000, "horizon": 40000, "ekm_cap": 1 << 25,
    },
}


_MISSING = object()


def _merge(doc: Any, defaults: Any, path: str) -> Any:
    if defaults is FREE:
        return None if doc is _MISSING else doc
    if isinstance(defaults, dict):
        if doc is _MISSING or doc is None:
            return copy.deepcopy(defaults)
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected an object")
        unknown = sorted(set(doc) - set(defaults))
        if unknown:
            raise ConfigError(f"{path}.{unknown[0]}: unknown key")
        return {k: _merge(doc.get(k, _MISSING), v, f"{path}.{k}") for k, v in defaults.items()}
    if doc is _MISSING:
        return copy.deepcopy(defaults)
    if defaults is not None and doc is not None:
        want = type(defaults)
        if not isinstance(doc, want) or (want is int and isinstance(doc, bool)):
            raise ConfigError(f"{path}: expected {want.__name__}, got {type(doc).__name__}")
    return doc


def validate(subcommand: str, doc: dict | None) -> dict:
    if subcommand not in DEFAULTS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    return _merge(doc if doc is not None else {}, DEFAULTS[subcommand], "config")


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


class Run:
    def __init__(self, name: str, cfg: dict, out: Path, seed: int):
        self.name, self.cfg, self.out, self.seed = name, cfg, out, seed
        self.checks: list[dict] = []
        self.info: dict = {}
        out.mkdir(parents=True, exist_ok=True)

    def check(self, name: str, passed: bool, detail: Any = None) -> None:
        entry = {"name": name, "passed": bool(passed)}
        if detail is not None:
            entry["detail"] = detail
        self.checks.append(entry)

    def write(self, fname: str, data: str | bytes) -> None:
        path = self.out / fname
        if isinstance(data, bytes):
            path.write_bytes(data)
        else:
            path.write_text(data)

    def write_json(self, fname: str, doc: Any) -> None:
        self.write(fname, json.dumps(doc, sort_keys=True, indent=2) + "\n")

    def finish(self) -> bool:
        passed = all(c["passed"] for c in self.checks)
        self.write_json("verdict.json", {"subcommand": self.name, "seed": self.seed, "config": self.cfg,
                                         "checks": self.checks, "info": self.info, "passed": passed})
        return passed


# --------------------------------------------------------------------------
# subcommands


def _source(cfg: dict, seed: int):
    kind = cfg["kind"]
    if kind == "fibonacci":
        return fibonacci_source()
    if kind == "sturmian":
        return sturmian.SturmianSource(sturmian.RotationParams.from_text(cfg["cf"], Fraction(cfg["rho"])))
    if kind == "periodic":
        return PeriodicSource(cfg["period"])
    if kind == "file":
        if not cfg["path"]:
            raise ConfigError("config.source.path: required for kind 'file'")
        return FixedWordSource(Path(cfg["path"]).read_bytes(), name=cfg["path"])
    if kind == "random":
        if not cfg["length"]:
            raise ConfigError("config.source.length: required for kind 'random'")
        rng = np.random.default_rng(seed)
        data = rng.integers(0, cfg["alphabet"], size=cfg["length"], dtype=np.uint8).tobytes()
        return FixedWordSource(data, name="random")
    raise ConfigError(f"config.source.kind: unknown kind {kind!r}")


def run_complexity(r: Run) -> None:
    c = r.cfg
    src = _source(c["source"], r.seed)
    if c["source"]["kind"] in ("file", "random"):
        prof = cx.profile(cx.build_index(src.prefix(len(src._cache))), c["n_max"])
        r.check("guard: 2 n_max <= prefix length", True, prof.source_length)
    else:
        try:
            prof = cx.stable_profile(src, c["n_max"], c["factor"])
            r.check("profile stable between L/2 and L", True, prof.source_length)
        except cx.ComplexityError as e:
            r.check("profile stable between L/2 and L", False, str(e))
            return
    ext = cx.ratio_extrema(prof, c["n_min"])
    r.info["extrema"] = {"min_ratio": _q(ext.min_ratio), "argmin": ext.argmin,
                         "max_ratio": _q(ext.max_ratio), "argmax": ext.argmax}
    r.write("profile.csv", cx.profile_csv(prof))
    r.write("extrema.csv", "quantity,n,ratio\n"
            f"min,{ext.argmin},{cx.format_ratio(ext.min_ratio)}\n"
            f"max,{ext.argmax},{cx.format_ratio(ext.max_ratio)}\n")


def run_sturmian(r: Run) -> None:
    c = r.cfg
    params = sturmian.RotationParams.from_text(c["cf"], Fraction(c["rho"]))
    src = sturmian.SturmianSource(params)
    r.write("prefix.bin", src.prefix(c["prefix_length"]))
    try:
        prof = cx.stable_profile(src, c["n_max"], c["factor"])
    except (cx.ComplexityError, sturmian.CertificationError) as e:
        r.check("P(n) = n + 1", False, str(e))
        return
    bad = next((n for n in range(1, prof.n_max + 1) if prof[n] != n + 1), None)
    r.check("P(n) = n + 1", bad is None, {"n_max": prof.n_max, "first_mismatch": bad})
    r.write("profile.csv", cx.profile_csv(prof))
    r.info["certified_length"] = sturmian.certified_length(params)


def run_union(r: Run) -> None:
    c = r.cfg
    spec = sturmian.UnionShiftSpec(c["d"], sturmian.RotationParams.from_text(c["cf"], Fraction(c["rho"])))
    res = sturmian.union_complexity(spec, c["n_max"], c["factor"])
    r.check("P(n) = d n + d", res.matches, {"d": spec.d, "n_max": c["n_max"], "first_mismatch": res.first_mismatch})
    r.write("profile.csv", cx.profile_csv(res.profile))


def run_iet(r: Run) -> None:
    c = r.cfg
    if c["spec"] is not None:
        try:
            spec = iet.IETSpec.from_json(c["spec"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"config.spec: {e}") from None
    else:
        spec = iet.random_iet(c["random_k"], np.random.default_rng(r.seed), bits=c["bits"])
    r.write_json("spec.json", spec.to_json())
    coding = iet.code_orbit(spec, Fraction(c["code_start"]), c["code_length"])
    r.write("coding.bin", coding.symbols)
    exp = iet.complexity_experiment(spec, c["n_max"], c["orbit_budget"], r.seed)
    r.write_json("idoc.json", {"ok": exp.idoc.ok, "depth": exp.idoc.depth,
                               "witness": list(exp.idoc.witness) if exp.idoc.witness else None})
    r.write("profile.csv", cx.profile_csv(exp.profile))
    label = "P(n) = (k-1) n + 1" if exp.mode == "exact" else "P(n) <= (k-1) n + 1"
    r.check(label, exp.passed, {"k": spec.k, "mode": exp.mode, "first_failure": exp.first_failure,
                                "starts": exp.n_starts})
    lift = iet.empirical_measure_lift(spec, Fraction(c["code_start"]), c["measure_length"], c["measure_m"],
                                      Fraction(c["measure_tol"]))
    r.info["lift"] = {"max_deviation": _q(lift.max_deviation), "two_m_over_L": _q(lift.bound),
                      "within_two_m_over_L": lift.within_bound}
    r.check("cylinder frequencies within measure_tol of interval lengths", lift.within_tol,
            {"max_deviation": _q(lift.max_deviation), "tol": _q(lift.tol)})


def _tower_params(c: dict) -> tower.ConstructionParams:
    base = tower.ConstructionParams.default(c["d"], c["J"])
    kappa = tuple(Fraction(v) for v in c["kappa"]) if c["kappa"] is not None else base.kappa
    delta = tuple(Fraction(v) for v in c["delta"]) if c["delta"] is not None else base.delta
    return tower.ConstructionParams(c["d"], c["J"], kappa, delta)


def run_tower(r: Run) -> None:
    c = r.cfg
    t = tower.build_tower(_tower_params(c), c["budget"])
    r.write_json("tower.json", t.to_json())
    for chk in tower.verify_constraints(t):
        r.check(chk.name, chk.ok, chk.detail or None)
    for e in tower.verify_letter_frequency(t):
        r.check(f"freq of {e.i} in w_{e.i}^{e.j} >= prod kappa", e.ok,
                {"frequency": _q(e.frequency), "bound": _q(e.bound)})
    if c["syndetic"]:
        for j in range(1, t.J):
            for g in tower.verify_syndetic(t, j, c["budget"]):
                r.check(f"gap of w_{g.i1}^{g.j} in w_{g.i2}^{g.j_outer} <= g_{g.j}", g.ok,
                        {"gap": g.gap, "bound": g.bound})
    L = c["prefix_length"]
    deep = t
    while deep.length(1, deep.J) < L:
        deep = tower.deepen(deep, deep.J + 1)
    with open(r.out / "prefix.bin", "wb") as fh:
        written = tower.write_prefix(deep, L, fh)
    r.check("prefix emitted", written == L, {"length": written, "levels_used": deep.J})
    n_max = c["profile_n_max"]
    prof = tower.language_profile(t, n_max)
    r.write("profile.csv", cx.profile_csv(prof))
    for j in range(1, t.J + 1):
        for i in range(1, t.d + 1):
            try:
                p = tower.probe_complexity_dip(t, j, i, prof, min(c["probe_limit"], n_max))
            except tower.TowerError as e:
                r.info.setdefault("skipped_probes", []).append({"i": i, "j": j, "reason": str(e)})
                continue
            r.check(f"P(n*)/n* <= d + d delta_{j} at n* = |w_{i}^{j}|/delta_{j}", p.ok,
                    {"n_star": p.n_star, "P": p.count, "ratio": _q(p.ratio), "bound": _q(p.bound)})
    n_peak, peak = tower.ratio_peak(prof)
    thr = Fraction(c["peak_threshold"])
    r.check(f"ratio peak >= {thr}", peak >= thr, {"n": n_peak, "ratio": _q(peak)})


def run_ekm(r: Run) -> None:
    c = r.cfg
    rng = np.random.default_rng(r.seed)
    certs, fallback, tries = [], 0, 0
    while len(certs) < c["instances"]:
        tries += 1
        if tries > c["max_tries"]:
            r.check("enough instances sampled", False, {"found": len(certs), "tries": tries})
            break
        cf = tuple(int(a) for a in rng.integers(1, c["max_partial"] + 1, c["cf_depth"]))
        src = sturmian.SturmianSource(sturmian.RotationParams(cf))
        N = int(rng.integers(c["N_min"], c["N_max"] + 1))
        N0 = int(rng.integers(2, N))
        M = int(rng.integers(0, c["M_max"] + 1))
        rep = ekm.find_repeat(src, N, M, N)
        if rep is None:
            continue
        cert = ekm.locate_K(ekm.EkmInstance(src, N, N0, M, *rep), c["cap"])
        again = ekm.verify_conditions(src, cert.K, N, N0, M)
        fallback += cert.fallback_used
        certs.append({"cf": list(cf), "N": N, "N0": N0, "M": M, "m1": rep[0], "m2": rep[1],
                      **cert.to_json(), "reverified": list(again)})
        r.check(f"instance {len(certs)}: certificate passes brute force", again == (True, True))
    r.write_json("certificates.json", certs)
    r.info["constructive_candidate_rate"] = _q(Fraction(len(certs) - fallback, max(1, len(certs))))
    r.info["tries"] = tries


def run_measures(r: Run) -> None:
    c = r.cfg
    t = tower.build_tower(tower.ConstructionParams.default(c["d"], c["J"]))
    srcs = [tower.block_source(t, i, c["level"]) for i in range(1, c["d"] + 1)]
    wins = [measures.empirical_measure(s, 0, c["window"], c["m"]) for s in srcs]
    probe = None
    if c["probe"]:
        probe = measures.theorem_probe(srcs, Fraction(c["delta"]), c["N"], c["horizon"], ekm_cap=c["ekm_cap"])
        r.write_json("probe.json", probe.to_json())
        r.check("W classes pairwise disjoint", probe.disjoint)
        r.check("frequency control within epsilon/2", probe.frequency_control)
        for e in probe.dichotomy:
            r.check(f"{e.kind}_{e.i} has >= {e.required} words", e.ok, {"size": e.size, "K": e.K})
        r.check("S/T sets pairwise disjoint", probe.sets_disjoint)
    tau = Fraction(c["tau"]) if c["tau"] is not None else probe.epsilon / 2
    cl = measures.generic_candidate_count(wins, 1, tau)
    r.write("clusters.csv", measures.clusters_csv(cl, wins))
    prof = tower.language_profile(t, c["ratio_n_max"])
    ext = cx.ratio_extrema(prof, 1)
    k = c["d"] + 1
    r.check(f"{cl.count} candidates at tau={tau}", cl.count == c["d"], {"count": cl.count})
    r.check(f"min ratio < {k} implies at most {k - 1} candidates",
            measures.generic_bound_consistent(cl.count, ext.min_ratio, k),
            {"min_ratio": _q(ext.min_ratio), "argmin": ext.argmin, "count": cl.count})


COMMANDS: dict[str, Callable[[Run], None]] = {
    "complexity": run_complexity, "sturmian": run_sturmian, "union": run_union, "iet": run_iet,
    "tower": run_tower, "ekm": run_ekm, "measures": run_measures,
}


def run(subcommand: str, config: dict | None, out: Path, seed: int = 0) -> bool:
    cfg = validate(subcommand, config)
    r = Run(subcommand, cfg, Path(out), seed)
    COMMANDS[subcommand](r)
    return r.finish()


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="subshift-lab", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("--config", type=Path, help="JSON document with subcommand parameters")
    ap.add_argument("--out", type=Path, default=Path("out"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not 0 <= args.seed < 2**64:
        ap.error("--seed must be an unsigned 64-bit integer")
    doc = None
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"error: cannot read config: {e}", file=sys.stderr)
            return 2
    try:
        ok = run(args.subcommand, doc, args.out, args.seed)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    status = "PASS" if ok else "FAIL"
    print(f"{args.subcommand}: {status} ({args.out / 'verdict.json'})")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment runner.

Every command is seeded, writes deterministic JSON or CSV, and exits with
status 0 exactly when all of its verdicts pass.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .bits import BinaryCode, BitVec, block_repetition_code, load_code, repetition_code
from .protocol import (
    ProtocolParams,
    bell_attack,
    bqsm_bound,
    breidbart_strategy,
    dishonest_user_rate,
    honest_run,
    server_security_bound,
    sqom_run,
    strategy_catalog,
    user_security_sd,
)
from .qsim import max_overlap_exhaustive, quantized
from .uncertainty import BasisFamily, construct_jprime, random_epsilon, random_pj, random_state

SCHEMA = 1
PASS, FAIL, VACUOUS, SKIPPED = "pass", "fail", "vacuous", "skipped"
CSV_FIELDS = ["experiment", "strategy", "params", "estimate", "stderr", "trials", "seed", "bound", "verdict", "paper_ref"]


@dataclass
class ExperimentConfig:
    command: str
    params: dict
    out: str | None = None
    fmt: str = "json"

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "ExperimentConfig":
        skip = {"command", "out", "format", "func"}
        params = {k: v for k, v in vars(args).items() if k not in skip}
        return cls(args.command, params, args.out, args.format)


@dataclass
class Report:
    command: str
    params: dict
    rows: list = field(default_factory=list)
    payload: dict = field(default_factory=dict)

    def failures(self) -> list:
        return [r for r in self.rows if r.get("verdict") == FAIL]

    def to_json(self) -> str:
        doc = {"schema": SCHEMA, "command": self.command, "params": self.params, "rows": self.rows}
        doc.update(self.payload)
        return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: _csv_value(row.get(k, "")) for k in CSV_FIELDS})
        return buf.getvalue()


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not serialisable: {type(obj).__name__}")


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return v


def _row(experiment, estimate, verdict, paper_ref, *, strategy="", params="", stderr="", trials="", seed="", bound=""):
    return {
        "experiment": experiment,
        "strategy": strategy,
        "params": params,
        "estimate": estimate,
        "stderr": stderr,
        "trials": trials,
        "seed": seed,
        "bound": bound,
        "verdict": verdict,
        "paper_ref": paper_ref,
    }


# ----------------------------------------------------------- code choice


def default_code(n: int, m: int, seed: int) -> BinaryCode:
    """Repetition code for m=2, block repetition for m=4 and even n, else random distinct words."""
    if m == 2:
        return repetition_code(n)
    if m == 4 and n % 2 == 0:
        return block_repetition_code(n)
    if m > 2**n:
        raise ValueError("more codewords than strings")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(2**n, size=m, replace=False) if n < 63 else None
    return BinaryCode(tuple(BitVec(int(v), n) for v in chosen))


def _code_from_args(args) -> BinaryCode:
    if args.code:
        try:
            return load_code(args.code)
        except (OSError, ValueError) as exc:
            raise SystemExit(f"error: cannot use code file {args.code!r}: {exc}")
    return default_code(args.n, args.m, args.seed)


# -------------------------------------------------------------- commands


def run_overlap(config: ExperimentConfig, code: BinaryCode) -> Report:
    family = BasisFamily.from_code(code)
    rep = Report(config.command, config.params)
    c = family.c
    exhaustive = None
    if code.n <= 8:
        exhaustive = max_overlap_exhaustive(family.bases)
    verdict = PASS if exhaustive is None or abs(exhaustive - c) <= 1e-10 else FAIL
    rep.payload = {
        "n": code.n,
        "m": code.m,
        "d": code.d,
        "c": c,
        "delta": family.delta,
        "d_over_n": code.d / code.n,
        "exhaustive_c": exhaustive,
        "exhaustive_checked": exhaustive is not None,
    }
    rep.rows.append(_row("overlap", c, verdict, "maximum overlap of code-derived bases",
                         params=f"n={code.n} m={code.m} d={code.d}", bound=exhaustive if exhaustive is not None else ""))
    return rep


def _jprime_instance(family: BasisFamily, seed: int, mixed: bool, eps: float | None):
    rng = np.random.default_rng(seed)
    if mixed:
        rho, kind = random_state(family, rng, kind="mixed")
    else:
        rho, kind = random_state(family, rng)
    pj = random_pj(family.m, rng)
    epsilon = eps if eps is not None else random_epsilon(family, rng)
    return rho, kind, pj, epsilon


def _jprime_verdict(result) -> str:
    if any(v is False for v in result.checks.values()):
        return FAIL
    return VACUOUS if result.vacuous else PASS


def run_jprime(config: ExperimentConfig, code: BinaryCode) -> Report:
    p = config.params
    family = BasisFamily.from_code(code)
    if p["eps"] is not None and not 0 < p["eps"] < family.delta / 4:
        raise SystemExit(f"error: --eps must lie in (0, delta/4) = (0, {family.delta / 4})")
    if family.n > 8:
        raise SystemExit("error: the exact J' construction is limited to n <= 8")
    rep = Report(config.command, p)
    if p["sweep"]:
        counts = {PASS: 0, FAIL: 0, VACUOUS: 0}
        cases = {"zero": 0, "inflate": 0, "deflate": 0}
        for i in range(p["sweep"]):
            seed = p["seed"] + i
            rho, kind, pj, eps = _jprime_instance(family, seed, p["mixed"], p["eps"])
            res = construct_jprime(rho, family, pj, eps)
            v = _jprime_verdict(res)
            counts[v] += 1
            cases[res.case_tag] += 1
            rep.rows.append(_row("jprime", float(res.pr_psi), v, "all-but-one uncertainty relation",
                                 strategy=res.case_tag, params=f"kind={kind} eps={eps!r}", seed=seed,
                                 bound=res.psi_bound))
        rep.payload = {"summary": {"instances": p["sweep"], "verdicts": counts, "cases": cases,
                                   "passes": counts[PASS] + counts[VACUOUS],
                                   "nonvacuous_passes": counts[PASS]}}
        return rep
    rho, kind, pj, eps = _jprime_instance(family, p["seed"], p["mixed"], p["eps"])
    res = construct_jprime(rho, family, pj, eps)
    rep.payload = {"result": res.to_json(), "state_kind": kind,
                   "p_j": [str(v) for v in pj.probs]}
    for name, ok in res.checks.items():
        v = VACUOUS if ok == "vacuous" else (PASS if ok else FAIL)
        rep.rows.append(_row(f"jprime.{name}", str(ok), v, "all-but-one uncertainty relation",
                             strategy=res.case_tag, seed=p["seed"]))
    return rep


def run_protocol_suite(config: ExperimentConfig, code: BinaryCode) -> Report:
    p = config.params
    seed, trials, ell, beta, kappa = p["seed"], p["trials"], p["ell"], p["beta"], p["kappa"]
    params = ProtocolParams(code.n, ell, code, seed)
    tag = f"n={code.n} m={code.m} d={code.d} ell={ell}"
    rep = Report(config.command, p)
    rng = np.random.default_rng(seed)

    # correctness
    acc = sum(honest_run(params, int(rng.integers(code.m)), rng).accept for _ in range(trials))
    rate = acc / trials
    rep.rows.append(_row("correctness", rate, PASS if acc == trials else FAIL, "Q-ID perfect correctness",
                         params=tag, stderr=0.0, trials=trials, seed=seed, bound=1.0))

    # dishonest user
    w_guess = 1 % code.m
    mc_trials = max(trials, 10)
    est, _ = dishonest_user_rate(params, 0, w_guess, mc_trials, rng)
    target = 2.0**-ell
    sigma = math.sqrt(target * (1 - target) / mc_trials)
    ok = abs(est - target) <= 3 * sigma and est <= server_security_bound(code.m, ell)
    rep.rows.append(_row("server_security", est, PASS if ok else FAIL, "server security bound",
                         params=tag, stderr=sigma, trials=mc_trials, seed=seed,
                         bound=server_security_bound(code.m, ell)))

    # SQOM bias of Delta under Breidbart
    strat = breidbart_strategy(code.n)
    sq_trials = max(trials // 10, 10)
    flips = np.zeros(code.n)
    counted = np.zeros(code.n)
    for _ in range(sq_trials):
        w = int(rng.integers(code.m))
        view = sqom_run(params, w, strat, rng)
        c = code.encode(w)
        mism = np.array((c ^ quantized(view.theta)).bits, dtype=bool)
        delta = np.array((view.y ^ view.transcript.x).bits)
        flips[mism] += delta[mism]
        counted[mism] += 1
    worst, worst_se = 0.0, 0.0
    for i in range(code.n):
        if counted[i]:
            q = flips[i] / counted[i]
            b = abs(1 - 2 * q)
            se = 2 * math.sqrt(max(q * (1 - q), 1e-12) / counted[i])
            if b - 3 * se > worst - 3 * worst_se or worst == 0:
                worst, worst_se = b, se
    ok = worst <= 1 / math.sqrt(2) + 3 * worst_se
    rep.rows.append(_row("sqom_delta_bias", worst, PASS if ok else FAIL, "single-qubit bias bound",
                         strategy=strat.name, params=tag, stderr=worst_se, trials=sq_trials, seed=seed,
                         bound=1 / math.sqrt(2)))

    # exact user-security statistical distance
    if code.n <= 20:
        for s in strategy_catalog(code, seed):
            e = user_security_sd(params, s, p["usec_samples"], rng, beta=beta, seed=seed)
            v = PASS if e.estimate <= e.bound else FAIL
            if e.bound >= 1:
                v = VACUOUS if v == PASS else v
            rep.rows.append(_row("user_security_sd", e.estimate, v, "SQOM user security",
                                 strategy=s.name, params=tag + f" beta={beta}", stderr=e.stderr,
                                 trials=e.trials, seed=seed, bound=e.bound))
    else:
        rep.rows.append(_row("user_security_sd", "", SKIPPED, "SQOM user security", params=tag, seed=seed))

    # Bell attack
    if code.m >= 3:
        bell_trials = max(trials, 10)
        double = sum(len(bell_attack(params, 0, 1, 2, rng).discards) == 2 for _ in range(bell_trials))
        freq = double / bell_trials
        sigma = math.sqrt(0.25 * 0.75 / bell_trials)
        ok = abs(freq - 0.25) <= 3 * sigma
        rep.rows.append(_row("bell_attack_double_discard", freq, PASS if ok else FAIL, "pairwise Bell attack",
                             params=tag, stderr=sigma, trials=bell_trials, seed=seed, bound=0.25))
    else:
        rep.rows.append(_row("bell_attack_double_discard", "", SKIPPED, "pairwise Bell attack", params=tag, seed=seed))

    # BQSM bound arithmetic
    for q in sorted({0, p["q"], code.n}):
        if 0 < kappa < params.delta / 4:
            eps, vac = bqsm_bound(params, q, kappa)
            rep.rows.append(_row("bqsm_bound", eps, VACUOUS if vac else PASS, "bounded-storage user security",
                                 params=tag + f" q={q} kappa={kappa}", seed=seed))
        else:
            rep.rows.append(_row("bqsm_bound", "", SKIPPED, "bounded-storage user security",
                                 params=tag + f" q={q} kappa={kappa} (kappa outside (0, delta/4))", seed=seed))
    return rep


COMMANDS = {
    "overlap": run_overlap,
    "jprime": run_jprime,
    "protocol-suite": run_protocol_suite,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qidlab", description="Uncertainty-relation and Q-ID verification experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, n, m):
        p.add_argument("--n", type=int, default=n, help="number of qubits")
        p.add_argument("--m", type=int, default=m, help="number of passwords or bases")
        p.add_argument("--code", help="code file (one codeword per line, optional 'n=.. m=..' header)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("overlap", help="maximum overlap and delta of a code-derived basis family")
    common(p, 4, 2)
    p = sub.add_parser("jprime", help="construct J' and check the all-but-one relation")
    common(p, 4, 4)
    p.add_argument("--eps", type=float, default=None, help="epsilon in (0, delta/4); random if omitted")
    p.add_argument("--mixed", action="store_true", help="use the maximally mixed state")
    p.add_argument("--sweep", type=int, default=0, metavar="K", help="run K consecutive seeds and summarise")
    p = sub.add_parser("protocol-suite", help="Q-ID correctness, security estimators and attack")
    common(p, 16, 4)
    p.add_argument("--ell", type=int, default=4)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--kappa", type=float, default=0.02)
    p.add_argument("--q", type=int, default=4, help="stored qubits for the bounded-storage bound")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--usec-samples", type=int, default=4, help="(F, g) samples per user-security estimate")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ExperimentConfig.from_args(args)
    code = _code_from_args(args)
    config.params["code_words"] = [str(c) for c in code.codewords]
    report = COMMANDS[args.command](config, code)
    text = report.to_csv() if config.fmt == "csv" else report.to_json()
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    failures = report.failures()
    if failures:
        for r in failures:
            print(f"FAILED: {r['experiment']} {r['strategy']} {r['params']}".rstrip(), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

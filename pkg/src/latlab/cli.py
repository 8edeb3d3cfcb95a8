"""``latlab``: cost tables, fixtures and seeded experiment runs.

Exit status: 0 ok, 2 a paper-preset run was refused by the compute budget,
3 a fixture failed its promise/stamp re-verification.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict
from fractions import Fraction

import click
import numpy as np

from latlab import fixtures as FX
from latlab import params as P
from latlab.geometry import ball_intersection_lb, body_intersection_lb
from latlab.protocols import GGConfig, run_protocol
from latlab.report import ExperimentReport
from latlab.verifiers import (DEFAULT_BUDGET, FAR, ComaParams, ConpParams, adversarial_witness_suite,
                              coma_verify, conp_verify, conp_witness_gen)

EXIT_BUDGET = 2
EXIT_PROMISE = 3


def parse_ints(spec: str) -> list[int]:
    """``"0..9"``, ``"0..20:5"`` or ``"1,2,5"``."""
    out = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, rest = part.split("..")
            hi, _, step = rest.partition(":")
            out.extend(range(int(lo), int(hi) + 1, int(step or 1)))
        elif part:
            out.append(int(part))
    return out


def parse_floats(spec: str) -> list[float]:
    return [float(x) for x in spec.split(",") if x.strip()]


def parse_fraction(text: str | None) -> Fraction | None:
    if text is None:
        return None
    return Fraction(text) if "/" in text else Fraction(text).limit_denominator(10 ** 9)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _load_fixture(path: str) -> FX.Fixture:
    try:
        return FX.load(path)
    except FX.PromiseViolation as e:
        click.echo(f"promise violation in {path}: {e}", err=True)
        sys.exit(EXIT_PROMISE)


def _refuse(e: P.BudgetExceeded) -> None:
    click.echo(f"refused: {e}", err=True)
    sys.exit(EXIT_BUDGET)


def _write_report(rep: ExperimentReport, fmt: str, out: str | None) -> None:
    rep.finish()
    _emit(rep.to_jsonl() if fmt == "jsonl" else rep.to_json() + "\n", out)


@click.group()
def main():
    """Lattice proof-system experiments."""


# -- tradeoff ----------------------------------------------------------------


@main.command("tradeoff")
@click.option("--n", "n_spec", default="2,4,8,16,32,64,100", show_default=True, help="dimensions, e.g. 2..100:2")
@click.option("--gamma", "g_spec", default="1.5,2,4,8,16", show_default=True, help="comma-separated gammas")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--out", default=None)
def cmd_tradeoff(n_spec, g_spec, fmt, out):
    """log2 of every cost formula per (n, gamma)."""
    ns, gs = parse_ints(n_spec), parse_floats(g_spec)
    if not ns or min(ns) < 2 or not gs or min(gs) < 1:
        raise click.BadParameter("need n >= 2 and gamma >= 1")
    rows = [asdict(P.tradeoff_row(n, g)) for n in ns for g in gs]
    if fmt == "json":
        _emit(json.dumps(rows, indent=1) + "\n", out)
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    _emit(buf.getvalue(), out)


# -- fixtures ----------------------------------------------------------------


@main.command("fixture")
@click.argument("kind", type=click.Choice(FX.KINDS))
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--radius", default=None, help="close threshold d (rational), default depends on n")
@click.option("--margin", type=float, default=FX.FAR_MARGIN, show_default=True,
              help="separation factor above sqrt(n) for promise fixtures")
@click.option("--out", default=None)
def cmd_fixture(kind, n, seed, radius, margin, out):
    """Generate a lattice/target fixture with exact promise stamps."""
    fx = FX.generate(kind, n, seed, parse_fraction(radius), margin)
    _emit(fx.dumps() + "\n", out)


# -- run ---------------------------------------------------------------------


@main.group("run")
def run():
    """Seeded experiment runs."""


def common(f):
    f = click.option("--fixture", "fixture_path", required=True, help=f"fixture JSON (relative paths also tried under ${FX.FIXTURE_DIR_ENV})")(f)
    f = click.option("--preset", type=click.Choice(["desk", "paper"]), default="desk", show_default=True)(f)
    f = click.option("--seeds", default=None, help="seed list, e.g. 0..99")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--budget", type=float, default=DEFAULT_BUDGET, show_default=True)(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "jsonl"]), default="json", show_default=True)(f)
    f = click.option("--out", default=None)(f)
    return f


def _seeds(seed, seeds) -> list[int]:
    return parse_ints(seeds) if seeds else [seed]


def _config(ctx: click.Context, **extra) -> dict:
    cfg = {k: v for k, v in ctx.params.items() if k not in ("out",)}
    cfg.update(extra)
    cfg["command"] = ctx.command_path
    return cfg


@run.command("gg")
@common
@click.option("--merlin", type=click.Choice(["honest", "cheat"]), default="honest", show_default=True)
@click.option("--rounds", type=int, default=None, help="override the round count")
@click.option("--body", type=click.Choice(["ball", "cube"]), default="ball", show_default=True)
@click.option("--transcript", default=None, help="write the first seed's transcript as JSONL")
@click.pass_context
def run_gg(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, merlin, rounds, body, transcript):
    """Private-coin protocol on a promise fixture."""
    fx = _load_fixture(fixture_path)
    n, gamma, d = fx.n, float(fx.gamma), float(fx.d)
    if preset == "paper":
        cfg = GGConfig.paper(n, gamma, d, body)
        if cfg.N > budget:
            _refuse(P.BudgetExceeded(f"gg protocol (paper preset, n={n})", cfg.N, budget))
    else:
        x = 2 / gamma
        p_hat = ball_intersection_lb(n, x) if body == "ball" else body_intersection_lb(n, x)
        cfg = GGConfig.desk(gamma, d, p_hat, body)
    if rounds is not None:
        cfg = GGConfig(gamma, d, rounds, body, cfg.preset)
    rep = ExperimentReport("run gg", _config(ctx))
    rep.parameters = {"gamma": gamma, "d": d, "r": cfg.r, "N": cfg.N, "preset": cfg.preset, "body": body}
    acc = good = total = 0
    for i, sd in enumerate(_seeds(seed, seeds)):
        verdict, tr = run_protocol(fx.basis, fx.target, cfg, merlin, np.random.default_rng(sd))
        if i == 0 and transcript:
            with open(transcript, "w") as fh:
                fh.write(tr.to_jsonl())
        rep.add(sd, verdict=verdict, rounds_correct=tr.success_count, rounds=tr.n_rounds)
        acc += verdict == "accept"
        good += tr.success_count
        total += tr.n_rounds
    k = len(rep.outcomes)
    rep.rate("acceptance", acc, k)
    rep.rate("round_success", good, total)
    _write_report(rep, fmt, out)


def _witness_loop(ctx, fx, seeds, verify, witness, kind_name, params, suite_params=None):
    rep = ExperimentReport(f"run {kind_name}", _config(ctx))
    rep.parameters = params
    far = total = 0
    for sd in seeds:
        rng = np.random.default_rng(sd)
        if witness == "honest":
            named = {"honest": conp_witness_gen(fx.basis, int(params["N"]), rng)}
        else:
            named = dict(adversarial_witness_suite(fx.basis, fx.target, rng, int(params["N"]), suite_params))
        res = {}
        for name, W in named.items():
            v = verify(W, rng)
            res[name] = {"outcome": v.outcome, "failed_check": v.failed_check}
            far += v.outcome == FAR
            total += 1
        rep.add(sd, witnesses=res)
    rep.rate("far", far, total)
    return rep


@run.command("conp")
@common
@click.option("--witness", type=click.Choice(["honest", "adversarial"]), default="honest", show_default=True)
@click.option("--k", type=int, default=1, show_default=True)
@click.option("--N", "N", type=int, default=2000, show_default=True, help="desk witness size")
@click.option("--eps", type=float, default=0.03, show_default=True, help="desk moment tolerance")
@click.option("--threshold", type=float, default=0.5, show_default=True, help="desk f_W threshold")
@click.pass_context
def run_conp(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, witness, k, N, eps, threshold):
    """Moment-checking verifier on honest or adversarial witnesses."""
    fx = _load_fixture(fixture_path)
    if preset == "paper":
        params = ConpParams.paper(fx.n, k)
    else:
        params = ConpParams.desk(k, N, eps, threshold)
    try:
        params.check_budget(fx.n, budget)
    except P.BudgetExceeded as e:
        _refuse(e)
    rep = _witness_loop(ctx, fx, _seeds(seed, seeds), lambda W, rng: conp_verify(fx.basis, fx.target, params, W),
                        witness, "conp", asdict(params), params)
    _write_report(rep, fmt, out)


@run.command("coma")
@common
@click.option("--witness", type=click.Choice(["honest", "adversarial"]), default="honest", show_default=True)
@click.option("--alpha", type=float, default=0.3, show_default=True)
@click.option("--beta", type=float, default=0.3, show_default=True)
@click.option("--N", "N", type=int, default=2000, show_default=True)
@click.option("--trials", type=int, default=200, show_default=True)
@click.pass_context
def run_coma(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, witness, alpha, beta, N, trials):
    """Randomized verifier on honest or adversarial witnesses."""
    fx = _load_fixture(fixture_path)
    try:
        params = ComaParams.paper(fx.n, alpha, beta) if preset == "paper" else ComaParams.desk(fx.n, alpha, beta, N, trials)
        params.check_budget(budget)
    except P.BudgetExceeded as e:
        _refuse(e)
    rep = _witness_loop(ctx, fx, _seeds(seed, seeds), lambda W, rng: coma_verify(fx.basis, fx.target, params, W, rng),
                        witness, "coma", asdict(params))
    _write_report(rep, fmt, out)


@run.command("bdd")
@common
@click.option("--d", "d_text", required=True, help="SVP threshold d (rational)")
@click.option("--gamma", type=float, required=True)
@click.option("--alpha", type=float, default=0.45, show_default=True)
@click.option("--trials", type=int, default=None, help="override N")
@click.option("--mode", type=click.Choice(["closest", "garbage", "abstain"]), default="closest", show_default=True)
@click.pass_context
def run_bdd(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, d_text, gamma, alpha, trials, mode):
    """SVP decision through an exact BDD oracle."""
    from latlab.reductions import desk_trials, exact_bdd_oracle, paper_trials, svp_label, svp_to_bdd

    fx = _load_fixture(fixture_path)
    d = parse_fraction(d_text)
    if trials is None:
        trials = paper_trials(fx.n, alpha, gamma) if preset == "paper" else desk_trials(fx.n, alpha, gamma)
    if preset == "paper" and trials > budget:
        _refuse(P.BudgetExceeded(f"svp->bdd (paper preset, n={fx.n})", trials, budget))
    rep = ExperimentReport("run bdd", _config(ctx))
    rep.parameters = {"N": trials, "r": float(alpha * gamma * d), "label": svp_label(fx.basis, d, gamma)}
    yes = 0
    for sd in _seeds(seed, seeds):
        res = svp_to_bdd(fx.basis, d, gamma, alpha, exact_bdd_oracle(alpha, mode), trials, np.random.default_rng(sd))
        rep.add(sd, answer=res.answer, trials=res.trials, first_mismatch=res.first_mismatch)
        yes += res.answer == "YES"
    rep.rate("yes", yes, len(rep.outcomes))
    _write_report(rep, fmt, out)


@run.command("gmss")
@common
@click.option("--d", "d_text", required=True)
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.pass_context
def run_gmss(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, d_text, gamma):
    """GMSS instances with exact labels (deterministic)."""
    from latlab.reductions import YES, gmss_reduce, svp_label

    fx = _load_fixture(fixture_path)
    d = parse_fraction(d_text)
    insts = gmss_reduce(fx.basis, d, Fraction(gamma).limit_denominator(10 ** 6))
    labels = [i.label() for i in insts]
    rep = ExperimentReport("run gmss", _config(ctx))
    rep.parameters = {"scale": insts[0].scale, "svp_label": svp_label(fx.basis, d, gamma)}
    for i, lab in zip(insts, labels):
        rep.add(i.index, label=lab, dist_sq=i.dist_sq())
    rep.rate("yes_instances", labels.count(YES), len(labels))
    _write_report(rep, fmt, out)


def _dgs_command(ctx, which, fixture_path, preset, seeds, seed, budget, fmt, out, d_text, gamma, gamma_p, bias):
    from latlab.reductions import biased_dgs_oracle, exact_dgs_oracle, svp_label, svp_to_dgs_ma, svp_to_dgs_np

    fx = _load_fixture(fixture_path)
    d = parse_fraction(d_text)
    oracle = biased_dgs_oracle(bias) if bias else exact_dgs_oracle()
    fn = svp_to_dgs_np if which == "np" else svp_to_dgs_ma
    rep = ExperimentReport(f"run dgs-{which}", _config(ctx))
    yes = 0
    for sd in _seeds(seed, seeds):
        try:
            res = fn(fx.basis, d, gamma, gamma_p, oracle, preset, np.random.default_rng(sd), budget=budget)
        except P.BudgetExceeded as e:
            _refuse(e)
        rep.parameters = {"verifier": asdict(res.params), "label": svp_label(fx.basis, d, gamma)}
        rep.add(sd, answer=res.answer, verdicts=[v.outcome for v in res.verdicts])
        yes += res.answer == "YES"
    rep.rate("yes", yes, len(rep.outcomes))
    _write_report(rep, fmt, out)


for _which in ("np", "ma"):
    def _make(which):
        verifier = "moment" if which == "np" else "randomized"

        @run.command(f"dgs-{which}", help=f"SVP decision from a DGS oracle ({verifier} verifier).")
        @common
        @click.option("--d", "d_text", required=True)
        @click.option("--gamma", type=float, required=True)
        @click.option("--gamma-p", type=float, default=1.0, show_default=True)
        @click.option("--bias", type=float, default=0.0, show_default=True, help="biased-oracle delta")
        @click.pass_context
        def cmd(ctx, **kw):
            _dgs_command(ctx, which, **kw)
        return cmd
    _make(_which)


@run.command("sis")
@common
@click.option("--m", type=int, default=8, show_default=True)
@click.option("--q", type=int, default=9, show_default=True)
@click.option("--s-target", type=float, required=True)
@click.option("--count", type=int, default=100, show_default=True)
@click.option("--no-lll", is_flag=True, default=False)
@click.option("--samples-out", default=None, help="JSONL of emitted coordinate vectors (first seed)")
@click.pass_context
def run_sis(ctx, fixture_path, preset, seeds, seed, budget, fmt, out, m, q, s_target, count, no_lll, samples_out):
    """Discrete Gaussian samples from a brute-force SIS oracle."""
    from latlab.reductions import dgs_to_sis_full, sis_oracle_bruteforce

    fx = _load_fixture(fixture_path)
    if not m > fx.n * math.log2(q):
        raise click.BadParameter(f"need m > n log2 q (n={fx.n}, q={q})", param_hint="--m")
    if preset == "paper" and m ** 3 > budget:
        _refuse(P.BudgetExceeded("sis calibration (paper preset)", m ** 3, budget))
    rep = ExperimentReport("run sis", _config(ctx))
    for i, sd in enumerate(_seeds(seed, seeds)):
        res = dgs_to_sis_full(fx.basis, s_target, sis_oracle_bruteforce, q, m, preset, np.random.default_rng(sd),
                              count=count, lll=not no_lll)
        if i == 0 and samples_out:
            with open(samples_out, "w") as fh:
                for row in res.samples:
                    fh.write(json.dumps([int(x) for x in row]) + "\n")
        rep.add(sd, r_sq=res.calibration.r2, c=res.c, phases=res.phases, shortcut=res.shortcut,
                steps=res.stats.steps, fallbacks=res.stats.fallbacks, calibration_calls=res.calibration.calls,
                gs_history=res.gs_history)
    rep.parameters = {"m": m, "q": q, "s_target": s_target, "count": count}
    rep.rate("no_fallback_runs", sum(o["fallbacks"] == 0 for o in rep.outcomes), len(rep.outcomes))
    _write_report(rep, fmt, out)


if __name__ == "__main__":
    main()

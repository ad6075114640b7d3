"""Command-line driver.

One executable, seven commands (solve, spectrum, kernels, rearrange,
evolve, sweep, report), all configured through an INI file; flags can
override the command, seed, worker count, and output directory.  Exit
codes separate failure kinds so batch scripts can tell them apart:

    0  success
    2  validation problem (bad config, parameter window, malformed INI)
    3  numerical non-convergence (solver, step size, blowup)
    4  a mathematical property that should hold numerically does not

Results go to stdout as deterministic key=value lines; with --out they
are also persisted as report.json + CSV tables + the config echo.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .config import COMMANDS, RunConfig, parse_config
from .dynamics import (evolve as evolve_state, initial_state,
                       n_preserving_perturbation, orbital_distance,
                       stability_experiment)
from .errors import (ConvergenceError, PropertyViolation, ValidationError)
from .fields import GridSamples, random_field, real_part, to_grid
from .functionals import charge, kinetic, momentum, potential, x_norm
from .kernels import kernel_ka, kernel_kp, positivity_report
from .profiles import continue_in, gauge_fix, solve_defocusing, solve_focusing
from .rearrange import polya_szego_check, potential_ordering_check
from .reports import ResultBundle, emit
from .spectrum import nondegeneracy_check, sector_spectra


def _solve_profile(config: RunConfig):
    prob = config.problem
    s = config.solver
    if prob.gamma == -1:
        return solve_defocusing(prob, c=s["c"], mu=s["mu"],
                                n_modes=s["n_modes"], tol=s["tol"])
    if s["omega"] is None:
        raise ValidationError(
            "solver.omega is required for the focusing branch")
    return solve_focusing(prob, omega=s["omega"], p0=s["p0"],
                          n_modes=s["n_modes"], tol=s["tol"])


def _profile_scalars(prof, config: RunConfig) -> dict:
    prob = config.problem
    f = prof.field
    return {
        "omega": prof.omega, "c": prof.c, "mu": prof.mu, "p0": prof.p0,
        "residual": prof.residual, "iterations": prof.iterations,
        "objective": prof.objective,
        "charge": charge(f), "momentum": momentum(f),
        "kinetic": kinetic(f, prob.alpha),
        "potential": potential(f, prob.sigma),
        "x_norm": x_norm(f, prob.alpha),
    }


def _profile_tables(prof, config: RunConfig) -> dict:
    f = prof.field
    modes = [(int(k), float(np.real(c)), float(np.imag(c)))
             for k, c in zip(f.wavenumbers, f.coeff)]
    g = to_grid(f, config.grid["n_grid"])
    grid = [(float(x), float(v.real), float(v.imag))
            for x, v in zip(g.x, g.values)]
    return {
        "profile_modes": (("k", "re", "im"), modes),
        "profile_grid": (("x", "re", "im"), grid),
    }


def _cmd_solve(config: RunConfig) -> ResultBundle:
    # canonical gauge so emitted tables are comparable across runs
    prof = gauge_fix(_solve_profile(config))
    return ResultBundle(config=config, command="solve",
                        results={"profile": _profile_scalars(prof, config)},
                        tables=_profile_tables(prof, config))


def _cmd_spectrum(config: RunConfig) -> ResultBundle:
    prof = _solve_profile(config)
    size = config.grid["sector_size"]
    rep = nondegeneracy_check(prof, size=size, workers=config.workers,
                              include_jordan=config.problem.gamma == -1)
    spectra = sector_spectra(prof, size, workers=config.workers)
    eig_rows, fun_rows = [], []
    grounds = {}
    for (which, sector), spec in sorted(spectra.items()):
        grounds[f"{which}_{sector}_ground"] = float(spec.eigenvalues[0])
        for idx, lam in enumerate(spec.eigenvalues):
            eig_rows.append((which, sector, idx, float(lam)))
        for rank in (0, 1):
            vec = spec.eigenvectors[:, rank]
            fun_rows.extend((which, sector, rank, j, float(v))
                            for j, v in enumerate(vec))
    results = {
        "morse_plus": rep.morse_plus,
        "morse_minus": rep.morse_minus,
        "ker_plus_residual": rep.ker_plus_residual,
        "ker_minus_residual": rep.ker_minus_residual,
        "ker_alignments": rep.ker_alignments,
        "second_eigenfunction_sign_changes":
            rep.second_eigenfunction_sign_changes,
        "gs_ordering": rep.gs_ordering,
        "sector_grounds": grounds,
    }
    if rep.jordan is not None:
        results["jordan"] = rep.jordan
    results["profile"] = _profile_scalars(prof, config)
    return ResultBundle(
        config=config, command="spectrum", results=results,
        tables={
            "eigenvalues": (("operator", "sector", "index", "value"),
                            eig_rows),
            "eigenfunctions": (("operator", "sector", "rank", "j", "coord"),
                               fun_rows),
        })


def _cmd_kernels(config: RunConfig) -> ResultBundle:
    prob = config.problem
    alpha = config.kernels["alpha"]
    if alpha is None:
        alpha = prob.alpha
    T = prob.half_period
    n = config.kernels["n"]
    unit = (T / np.pi) ** alpha
    per_time = []
    rows = []
    for t_rel in config.kernels["times"]:
        t = float(t_rel) * unit
        kp = kernel_kp(alpha, T, t, n)
        ka = kernel_ka(alpha, T, t, n)
        margins = positivity_report(ka)
        margins["t_relative"] = float(t_rel)
        per_time.append(margins)
        rows.extend((float(t), float(x), float(p), float(a))
                    for x, p, a in zip(kp.x, kp.grid, ka.grid))
    results = {"alpha": alpha, "time_unit": unit, "positivity": per_time}
    return ResultBundle(
        config=config, command="kernels", results=results,
        tables={"kernel_samples": (("t", "x", "kp", "ka"), rows)})


def _cmd_rearrange(config: RunConfig) -> ResultBundle:
    prob = config.problem
    rc = config.rearrange
    rng = np.random.default_rng(config.seed)
    rows = []
    violations = 0
    worst = 0.0
    for trial in range(rc["trials"]):
        f = real_part(random_field(prob.half_period, rc["n_modes"], rng))
        chk = polya_szego_check(f, prob.alpha, n=rc["n_grid"])
        violations += 0 if chk["satisfied"] else 1
        worst = max(worst, chk["violation"])
        rows.append((trial, chk["kinetic_original"], chk["kinetic_star"],
                     chk["violation"], chk["eps_rearr"]))
    xs = 2.0 * prob.half_period * np.arange(rc["n_grid"]) / rc["n_grid"]
    vpot = GridSamples(prob.half_period,
                       np.cos(2.0 * np.pi * xs / prob.half_period))
    ordering = potential_ordering_check(vpot, trials=rc["trials"],
                                        n_modes=rc["n_modes"],
                                        seed=config.seed)
    results = {
        "polya_szego": {"trials": rc["trials"], "violations": violations,
                        "max_violation": worst, "n": rc["n_grid"]},
        "potential_ordering": ordering,
    }
    return ResultBundle(
        config=config, command="rearrange", results=results,
        tables={"polya_trials": (("trial", "kinetic_original",
                                  "kinetic_star", "violation", "budget"),
                                 rows)})


def _cmd_evolve(config: RunConfig) -> ResultBundle:
    prof = _solve_profile(config)
    ev = config.evolve
    out = evolve_state(initial_state(prof.field, ev["dt"]), config.problem,
                       prof.omega, steps=ev["steps"],
                       log_interval=ev["log_interval"])
    rho = orbital_distance(out.field, prof)
    results = {
        "dt": ev["dt"], "steps": ev["steps"], "time": out.time,
        "rho_final": rho, "flagged": out.flagged, "drift": out.drift(),
        "profile": _profile_scalars(prof, config),
    }
    rows = [tuple(float(v) for v in row) for row in out.conserved_log]
    return ResultBundle(
        config=config, command="evolve", results=results,
        tables={"conserved": (("t", "hamiltonian", "charge", "momentum"),
                              rows)})


def _cmd_sweep(config: RunConfig) -> ResultBundle:
    prof = _solve_profile(config)
    sw = config.sweep
    if sw["target"] is None:
        raise ValidationError("sweep.target is required for the sweep command")
    result = continue_in(prof, sw["parameter"], sw["target"], sw["steps"],
                         tol=config.solver["tol"])
    rows = []
    for p in result.profiles:
        value = {"c": p.c, "mu": p.mu, "omega": p.omega}[sw["parameter"]]
        rows.append((float(value), p.omega, p.c, p.mu, charge(p.field),
                     momentum(p.field), p.residual))
    results = {
        "parameter": sw["parameter"],
        "target": sw["target"],
        "points": len(result.profiles),
        "failed_at": result.failed_at,
    }
    return ResultBundle(
        config=config, command="sweep", results=results,
        tables={"sweep": (("value", "omega", "c", "mu", "charge",
                           "momentum", "residual"), rows)})


def _cmd_report(config: RunConfig) -> ResultBundle:
    prof = _solve_profile(config)
    st = config.stability
    rng = np.random.default_rng(config.seed)
    perturbations = [n_preserving_perturbation(prof, eps, rng)
                     for eps in st["epsilons"]]
    horizon = st["horizon_periods"] * config.problem.half_period
    rep = stability_experiment(prof, perturbations, horizon=horizon,
                               dt=st["dt"],
                               log_interval=st["log_interval"],
                               workers=config.workers,
                               spectrum_size=config.grid["sector_size"])
    runs = []
    rows = []
    for i, run in enumerate(rep.orbital_distance_series):
        runs.append({
            "epsilon": float(st["epsilons"][i]),
            "perturbation_norm": run["perturbation_norm"],
            "c_emp": run["c_emp"],
            "drift": run["drift"],
            "secular_fraction": run["secular_fraction"],
            "quadratic_form": run["quadratic_form"],
        })
        rows.extend((i, float(st["epsilons"][i]), float(t), float(r))
                    for t, r in zip(run["times"], run["rho"]))
    results = {
        "indices": {"dNdc": rep.dNdc, "dQdomega": rep.dQdomega,
                    "dQdmu": rep.dQdmu},
        "runs": runs,
        "c_emp": rep.c_emp,
        "horizon": horizon,
        "coercivity": rep.verdict_inputs["coercivity"],
        "profile": _profile_scalars(prof, config),
    }
    return ResultBundle(
        config=config, command="report", results=results,
        tables={"rho_series": (("run", "epsilon", "t", "rho"), rows)})


_DISPATCH = {
    "solve": _cmd_solve,
    "spectrum": _cmd_spectrum,
    "kernels": _cmd_kernels,
    "rearrange": _cmd_rearrange,
    "evolve": _cmd_evolve,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def run(config: RunConfig) -> ResultBundle:
    """Dispatch a validated config to its command implementation."""
    if config.command is None:
        raise ValidationError(
            "no command selected: set run.command in the config or pass "
            "--command")
    return _DISPATCH[config.command](config)


def _flatten(prefix: str, obj, into: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}{k}." if prefix else f"{k}.", obj[k], into)
        return
    key = prefix[:-1]
    if isinstance(obj, (bool, np.bool_)):
        into.append(f"{key} = {bool(obj)}")
    elif isinstance(obj, (float, np.floating)):
        into.append(f"{key} = {float(obj)!r}")
    elif isinstance(obj, (int, np.integer)):
        into.append(f"{key} = {int(obj)}")
    elif isinstance(obj, str):
        into.append(f"{key} = {obj}")
    elif obj is None:
        into.append(f"{key} = none")
    # lists (tables in disguise) stay in the persisted report only


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fnlslab",
        description="Standing waves, spectra, kernels, rearrangements, and "
                    "evolution for antiperiodic fractional NLS.")
    parser.add_argument("--config", required=True,
                        help="path to an INI run configuration")
    parser.add_argument("--out", default=None,
                        help="directory for report.json, CSV tables, and "
                             "the config echo")
    parser.add_argument("--seed", type=int, default=None,
                        help="override run.seed")
    parser.add_argument("--workers", type=int, default=None,
                        help="override run.workers")
    parser.add_argument("--command", choices=COMMANDS, default=None,
                        help="override run.command")
    args = parser.parse_args(argv)

    try:
        try:
            text = open(args.config, encoding="utf-8").read()
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc}") from exc
        config = parse_config(text).with_overrides(
            command=args.command, seed=args.seed, workers=args.workers,
            out=args.out)
        bundle = run(config)
        lines = []
        _flatten("", bundle.results, lines)
        for line in lines:
            print(line)
        if config.out is not None:
            for path in emit(bundle, config.out):
                print(f"wrote {path}")
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except PropertyViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())

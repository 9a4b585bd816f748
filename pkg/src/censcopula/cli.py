"""Command-line interface: two-stage fitting, the constancy test, and the
Monte Carlo study driver.

Every output file embeds the configuration hash and seed; rerunning with
the same pair reproduces the numeric payload byte for byte.
"""

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
from scipy import stats as sstats

from . import bandwidth as bw
from . import glr, margins as margins_mod, simulate
from . import _backend, copula
from .copula import Family
from .data import load_dataset
from .errors import CensCopulaError, DataError, EmptyNeighborhoodError, FitError
from .likelihood import fit_constant
from .local_fit import KernelSpec, LocalFitConfig, fit_curve
from .rng import derive_rng, derive_seed

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

_FAMILIES = {f.value: f for f in Family}


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def fmt(v):
    """Canonical float formatting for output payloads."""
    return repr(float(v))


def read_config_file(path):
    """Flat key=value file; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def config_hash(ns, keys):
    blob = "\n".join(f"{k}={getattr(ns, k)}" for k in sorted(keys))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _provenance_lines(ns, keys):
    return [f"config_hash={config_hash(ns, keys)}", f"seed={ns.seed}"]


# ---------------------------------------------------------------------------
# svg rendering (minimal line + band plot, fixed axes policy)
# ---------------------------------------------------------------------------

def render_curve_svg(x, tau, lo, hi, title, provenance):
    width, height = 640, 420
    left, right, top, bottom = 60, 20, 30, 50
    x = np.asarray(x, dtype=float)
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = 0.0, 1.0  # Kendall's tau axis is fixed

    def sx(v):
        return left + (v - x0) / (x1 - x0) * (width - left - right)

    def sy(v):
        return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f"<!-- {' '.join(provenance)} -->",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    if lo is not None and hi is not None:
        pts_band = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, hi)]
        pts_band += [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[::-1], np.asarray(lo)[::-1])]
        parts.append(f'<polygon points="{" ".join(pts_band)}" fill="#9ecae1" opacity="0.5"/>')
    finite = np.isfinite(np.asarray(tau, dtype=float))
    pts = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[finite], np.asarray(tau)[finite])]
    parts.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#08519c" stroke-width="2"/>')
    # axes
    parts.append(f'<line x1="{left}" y1="{height-bottom}" x2="{width-right}" y2="{height-bottom}" stroke="black"/>')
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height-bottom}" stroke="black"/>')
    for frac in np.linspace(0.0, 1.0, 6):
        xv = x0 + frac * (x1 - x0)
        parts.append(f'<line x1="{sx(xv):.2f}" y1="{height-bottom}" x2="{sx(xv):.2f}" y2="{height-bottom+5}" stroke="black"/>')
        parts.append(f'<text x="{sx(xv):.2f}" y="{height-bottom+20}" text-anchor="middle" font-size="11">{xv:.2f}</text>')
        yv = y0 + frac * (y1 - y0)
        parts.append(f'<line x1="{left-5}" y1="{sy(yv):.2f}" x2="{left}" y2="{sy(yv):.2f}" stroke="black"/>')
        parts.append(f'<text x="{left-8}" y="{sy(yv)+4:.2f}" text-anchor="end" font-size="11">{yv:.1f}</text>')
    parts.append(f'<text x="{(left+width-right)/2:.0f}" y="{height-12}" text-anchor="middle" font-size="12">covariate</text>')
    parts.append(f'<text x="16" y="{(top+height-bottom)/2:.0f}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {(top+height-bottom)/2:.0f})">Kendall tau</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# companion parametric calibration fits (constant vs linear)
# ---------------------------------------------------------------------------

def fit_linear_calibration(pseudo, x, family):
    """Global ML fit of eta(x) = a + b (x - mean(x)); unweighted."""
    from ._optim import nelder_mead_2d
    from .likelihood import maximize_eta

    x = np.asarray(x, dtype=float)
    dx = np.ascontiguousarray(x - x.mean())
    w = np.ones_like(dx)

    def neg(a, b):
        return -_backend.local_objective(
            family.code, a, b, pseudo.u1, pseudo.u2, pseudo.d1, pseudo.d2, dx, w
        )

    eta0, _ = maximize_eta(lambda e: neg(e, 0.0), family, 0.0, xatol=1e-3)
    a, b, fval, _, converged = nelder_mead_2d(neg, eta0, 0.0, fatol=1e-9, maxfev=2000)
    return a, b, -fval, converged


def likelihood_ratio_test(pseudo, x, family):
    """Constant vs linear calibration, chi-square(1) approximation."""
    const = fit_constant(family, pseudo)
    _, slope, ll_lin, _ = fit_linear_calibration(pseudo, x, family)
    stat = max(2.0 * (ll_lin - const.loglik), 0.0)
    return {"stat": stat, "p_value": float(sstats.chi2.sf(stat, df=1)), "slope": slope}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _select_bandwidths(data, family, ns):
    copula_grid = np.asarray(ns.copula_grid, dtype=float)
    if ns.margins == margins_mod.WEIBULL:
        margins = margins_mod.fit_margins(data, margins_mod.WEIBULL)
        choice = bw.cv_parametric(
            data, margins.weibull_fits, family,
            bw.BandwidthGrid(copula_grid=copula_grid),
            min_effective_n=ns.min_effective_n,
        )
        return margins, choice
    span = float(data.x.max() - data.x.min())
    margin_grid = (
        np.asarray(ns.margin_grid, dtype=float)
        if ns.margin_grid is not None
        else bw.default_margin_grid(span)
    )
    grid = bw.BandwidthGrid(copula_grid=copula_grid, margin_grids=(margin_grid, margin_grid))
    choice = bw.cv_joint(data, family, grid, min_effective_n=ns.min_effective_n)
    margins = margins_mod.fit_margins(
        data, margins_mod.BERAN, bandwidths=(choice.h_margin1, choice.h_margin2)
    )
    return margins, choice


def cmd_fit(ns, keys):
    data = load_dataset(ns.data)
    family = _FAMILIES[ns.family]
    margins, choice = _select_bandwidths(data, family, ns)
    pseudo = margins.pseudo(data)
    grid = np.linspace(float(data.x.min()), float(data.x.max()), ns.grid_points)
    cfg = LocalFitConfig(
        family=family, kernel=KernelSpec(choice.h_copula), grid=grid,
        min_effective_n=ns.min_effective_n,
    )
    curve = fit_curve(pseudo, data.x, cfg)

    lo = hi = None
    if ns.ci_bootstrap > 0:
        lo, hi = _bootstrap_bands(data, family, margins, cfg, ns)

    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    prov = _provenance_lines(ns, keys)
    path = outdir / "curve.csv"
    with open(path, "w", encoding="utf-8") as fh:
        for p in prov:
            fh.write(f"# {p}\n")
        fh.write(f"# h_copula={fmt(choice.h_copula)}")
        if choice.h_margin1 is not None:
            fh.write(f" h_margin1={fmt(choice.h_margin1)} h_margin2={fmt(choice.h_margin2)}")
        fh.write("\n")
        cols = "x,eta_hat,theta_hat,tau_hat" + (",ci_lo,ci_hi" if lo is not None else "")
        fh.write(cols + "\n")
        for i in range(len(grid)):
            row = [fmt(grid[i]), fmt(curve.eta_hat[i]), fmt(curve.theta_hat[i]), fmt(curve.tau_hat[i])]
            if lo is not None:
                row += [fmt(lo[i]), fmt(hi[i])]
            fh.write(",".join(row) + "\n")
    svg = render_curve_svg(
        grid, curve.tau_hat, lo, hi,
        f"{ns.family} calibration ({ns.margins} margins, h={choice.h_copula:.3g})", prov,
    )
    (outdir / "curve.svg").write_text(svg, encoding="utf-8")
    print(f"selected h_copula={choice.h_copula:.6g}", end="")
    if choice.h_margin1 is not None:
        print(f" (h1={choice.h_margin1:.6g}, h2={choice.h_margin2:.6g})", end="")
    print(f"; wrote {path} and curve.svg")
    return EXIT_OK


def _bootstrap_bands(data, family, margins, cfg, ns):
    """Pointwise 90% percentile bands from cluster resampling."""
    curves = []
    failures = 0
    for b in range(ns.ci_bootstrap):
        rng = derive_rng(ns.seed, 2000, b)
        idx = rng.integers(0, data.n, data.n)
        sample = data.subset(idx)
        try:
            margins_b = margins.refit(sample)
            pseudo_b = margins_b.pseudo(sample)
            curve_b = fit_curve(pseudo_b, sample.x, cfg)
            curves.append(curve_b.tau_hat)
        except CensCopulaError as exc:
            failures += 1
            log.warning("CI bootstrap replicate %d failed: %s", b, exc)
    if failures > 0.1 * ns.ci_bootstrap:
        raise CensCopulaError(f"{failures} of {ns.ci_bootstrap} CI replicates failed")
    stack = np.vstack(curves)
    return (
        np.nanpercentile(stack, 5.0, axis=0),
        np.nanpercentile(stack, 95.0, axis=0),
    )


def cmd_test(ns, keys):
    data = load_dataset(ns.data)
    family = _FAMILIES[ns.family]
    margins, choice = _select_bandwidths(data, family, ns)
    result = glr.bootstrap_pvalue(
        data, family, ns.scheme, ns.margins, ns.bootstrap, choice,
        seed=derive_seed(ns.seed, 1), margins=margins,
        min_effective_n=ns.min_effective_n, workers=ns.workers,
    )
    lrt = likelihood_ratio_test(margins.pseudo(data), data.x, family)

    payload = {
        "config_hash": config_hash(ns, keys),
        "seed": ns.seed,
        "family": ns.family,
        "margins": ns.margins,
        "scheme": result.scheme,
        "lambda_n": result.lambda_n,
        "p_value": result.p_value,
        "B": result.B,
        "n_failed": result.n_failed,
        "theta0": result.theta0,
        "bandwidths": {
            "h_copula": choice.h_copula,
            "h_margin1": choice.h_margin1,
            "h_margin2": choice.h_margin2,
        },
        "lrt": lrt,
        "boot_stats": [float(v) for v in result.boot_stats],
    }
    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "glr.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"GLR constancy test ({ns.family}, {ns.margins} margins, {result.scheme} censoring)")
    print(f"  lambda_n = {result.lambda_n:.6g}")
    print(f"  bootstrap p-value = {result.p_value:.4g}  (B = {result.B})")
    print(f"  parametric LRT (constant vs linear): stat = {lrt['stat']:.6g}, p = {lrt['p_value']:.4g}")
    print(f"  wrote {path}")
    return EXIT_OK


def cmd_simulate(ns, keys):
    outdir = Path(ns.out)
    outdir.mkdir(parents=True, exist_ok=True)
    prov = _provenance_lines(ns, keys)
    rows = []
    combo_seed = 0
    for family in ns.families:
        for shape in ns.shapes:
            for cens in ns.censoring:
                for kind in ns.margin_kinds:
                    scenario = simulate.Scenario(
                        tau_shape=shape, family=_FAMILIES[family], n=ns.n,
                        censoring=cens, margin_kind=kind,
                        seed=derive_seed(ns.seed, 100, combo_seed),
                    )
                    combo_seed += 1
                    if ns.mode == "estimation":
                        row = simulate.estimation_study(
                            scenario, M=ns.replicates, workers=ns.workers,
                            copula_grid=np.asarray(ns.copula_grid, dtype=float),
                        )
                        rows.append((family, shape, cens, kind, row))
                        print(
                            f"{family:8s} {shape:8s} {cens:9s} {kind:8s} "
                            f"IBIAS2x100={100*row.ibias2:.3f} IVARx100={100*row.ivar:.3f} "
                            f"IMSEx100={100*row.imse:.3f}"
                        )
                    else:
                        row = simulate.power_study(
                            scenario, M=ns.replicates, B=ns.bootstrap, alpha=ns.alpha,
                            workers=ns.workers,
                            copula_grid=np.asarray(ns.copula_grid, dtype=float),
                        )
                        rows.append((family, shape, cens, kind, row))
                        print(
                            f"{family:8s} {shape:8s} {cens:9s} {kind:8s} "
                            f"rejection_rate={row.rejection_rate:.3f} (M={row.M}, B={row.B})"
                        )
    name = "estimation.csv" if ns.mode == "estimation" else "power.csv"
    path = outdir / name
    with open(path, "w", encoding="utf-8") as fh:
        for p in prov:
            fh.write(f"# {p}\n")
        if ns.mode == "estimation":
            fh.write("family,shape,censoring,margins,n,M,ibias2_x100,ivar_x100,imse_x100,n_failed\n")
            for family, shape, cens, kind, row in rows:
                fh.write(
                    f"{family},{shape},{cens},{kind},{ns.n},{row.M},"
                    f"{fmt(100*row.ibias2)},{fmt(100*row.ivar)},{fmt(100*row.imse)},{row.n_failed}\n"
                )
        else:
            fh.write("family,shape,censoring,margins,n,M,B,alpha,rejection_rate,n_failed\n")
            for family, shape, cens, kind, row in rows:
                fh.write(
                    f"{family},{shape},{cens},{kind},{ns.n},{row.M},{row.B},"
                    f"{fmt(row.alpha)},{fmt(row.rejection_rate)},{row.n_failed}\n"
                )
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="censcopula",
        description="Conditional copula modelling of right-censored bivariate event times",
    )
    parser.add_argument("--config", help="flat key=value config file (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="censcopula-out")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--copula-grid", type=_float_list,
                       default=list(bw.default_copula_grid()),
                       help="comma-separated copula bandwidth candidates")
        p.add_argument("--min-effective-n", type=int, default=5)

    fit = sub.add_parser("fit", help="two-stage conditional copula fit")
    common(fit)
    fit.add_argument("--data", required=True)
    fit.add_argument("--family", choices=sorted(_FAMILIES), default="clayton")
    fit.add_argument("--margins", choices=[margins_mod.WEIBULL, margins_mod.BERAN],
                     default=margins_mod.WEIBULL)
    fit.add_argument("--margin-grid", type=_float_list, default=None,
                     help="margin bandwidth candidates (Beran margins)")
    fit.add_argument("--grid-points", type=int, default=50)
    fit.add_argument("--ci-bootstrap", type=int, default=0,
                     help="resampling replicates for pointwise 90%% bands (0 = off)")

    test = sub.add_parser("test", help="bootstrap GLR constancy test")
    common(test)
    test.add_argument("--data", required=True)
    test.add_argument("--family", choices=sorted(_FAMILIES), default="clayton")
    test.add_argument("--margins", choices=[margins_mod.WEIBULL, margins_mod.BERAN],
                      default=margins_mod.WEIBULL)
    test.add_argument("--margin-grid", type=_float_list, default=None)
    test.add_argument("--scheme", choices=[glr.UNIVARIATE, glr.NONUNIVARIATE],
                      default=glr.UNIVARIATE)
    test.add_argument("--bootstrap", type=int, default=100)

    sim = sub.add_parser("simulate", help="Monte Carlo estimation/power studies")
    common(sim)
    sim.add_argument("--mode", choices=["estimation", "power"], default="estimation")
    sim.add_argument("--families", type=_str_list, default=["clayton"])
    sim.add_argument("--shapes", type=_str_list, default=[simulate.CONSTANT])
    sim.add_argument("--censoring", type=_str_list, default=[simulate.CENS_NONE])
    sim.add_argument("--margin-kinds", type=_str_list, default=[margins_mod.WEIBULL])
    sim.add_argument("--n", type=int, default=250)
    sim.add_argument("--replicates", type=int, default=50)
    sim.add_argument("--bootstrap", type=int, default=100)
    sim.add_argument("--alpha", type=float, default=0.05)
    return parser


def _apply_config_file(parser, argv):
    """Inject config-file values as defaults, keeping flag precedence."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    values = read_config_file(path)
    head = argv[: at + 2]
    rest = argv[at + 2 :]
    injected = []
    for key, val in values.items():
        flag = "--" + key.replace("_", "-")
        if flag in rest or key == "command":
            continue
        injected.extend([flag, val])
    # command word must come before its options
    if rest:
        return head + [rest[0]] + injected + rest[1:]
    if "command" in values:
        return head + [values["command"]] + injected
    raise ValueError("config file must name a command or one must be given")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        argv = _apply_config_file(parser, argv)
        ns = parser.parse_args(argv)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    keys = [k for k in vars(ns) if k not in ("command", "config", "out", "workers")]
    try:
        if ns.command == "fit":
            return cmd_fit(ns, keys)
        if ns.command == "test":
            return cmd_test(ns, keys)
        return cmd_simulate(ns, keys)
    except (EmptyNeighborhoodError, FitError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CensCopulaError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

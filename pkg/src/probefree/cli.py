"""
Command-line driver: scenario sweeps, oracle comparisons and Fisher tables.

    probefree run --scenario three-box-weak --path C --theta-max 3 --steps 60
    probefree compare-oracles --scenario three-box-weak --path C
    probefree fisher --scenario spin --chi 1.374 --trials 100000
    probefree list-scenarios

Settings may also come from a JSON file (--config); flags override it.
"""

import argparse
import csv
import io
import json
import math
import sys
import warnings
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from . import estimator as est
from . import probeoracle, qcore, sampling, scenarios
from .errors import EnvelopeWarning
from .transforms import attenuation_of, unitary_of
from .weakval import Selection, weak_value

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SCENARIOS = {
    "three-box-classical": "classical particle, probabilistic shutter on one path",
    "three-box-pre": "pre-selected quantum particle, attenuator on one path",
    "three-box-weak": "pre/post-selected three-box problem, attenuator on one path",
    "spin": "spin-1/2 under exp(i theta S_z), pre-only and post-selected phases",
    "wva": "weak-value amplification on two qubits, sigma_z x sigma_z coupling",
}

COLUMNS = (
    "theta",
    "probability",
    "ratio",
    "re_estimate",
    "im_estimate",
    "analytic_re",
    "analytic_im",
    "stderr",
    "theta_hat",
    "pre_phase",
    "post_phase",
)

DEFAULTS = {
    "scenario": None,
    "theta_min": 0.0,
    "theta_max": 1.0,
    "steps": 21,
    "log_spacing": False,
    "trials": None,
    "seed": 0,
    "chi": 7 * math.pi / 16,
    "path": "A",
    "pre_path": None,
    "amplification": 50.0,
    "sigma": 1.0,
    "output": None,
    "format": "csv",
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    theta_min: float = 0.0
    theta_max: float = 1.0
    steps: int = 21
    log_spacing: bool = False
    trials: Optional[int] = None
    seed: int = 0
    chi: float = 7 * math.pi / 16
    path: str = "A"
    pre_path: Optional[str] = None
    amplification: float = 50.0
    sigma: float = 1.0
    output: Optional[str] = None
    format: str = "csv"

    def thetas(self):
        if self.steps < 1:
            raise UsageError("steps must be >= 1")
        if self.steps == 1:
            return np.array([self.theta_min])
        if not self.theta_min < self.theta_max:
            raise UsageError("theta-min must be below theta-max for a sweep")
        if self.log_spacing:
            if self.theta_min <= 0:
                raise UsageError("log spacing needs theta-min > 0")
            return np.geomspace(self.theta_min, self.theta_max, self.steps)
        return np.linspace(self.theta_min, self.theta_max, self.steps)

    @property
    def sampled(self):
        return self.trials is not None


def _flatten_config(data):
    """Accept {"theta": {"min", "max", "steps", "spacing"}} nesting."""
    out = {}
    for key, value in data.items():
        key = key.replace("-", "_")
        if key == "theta" and isinstance(value, dict):
            for sub, v in value.items():
                if sub == "spacing":
                    out["log_spacing"] = v == "log"
                elif sub in ("min", "max"):
                    out[f"theta_{sub}"] = v
                else:
                    out[sub] = v
        else:
            out[key] = value
    return out


def build_config(args):
    settings = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                settings.update(_flatten_config(json.load(fh)))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    known = {f.name for f in fields(RunConfig)}
    unknown = set(settings) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if settings["scenario"] not in SCENARIOS:
        raise UsageError(f"unknown scenario {settings['scenario']!r}; see list-scenarios")
    if settings["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if settings["trials"] is not None and int(settings["trials"]) < 1:
        raise UsageError("trials must be >= 1")
    try:
        scenarios.path_index(settings["path"])
        if settings["pre_path"] is not None:
            scenarios.path_index(settings["pre_path"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return RunConfig(**settings)


# -- scenario records ------------------------------------------------------------


def _theta_used(theta):
    return theta if theta != 0 else est.DEFAULT_THETA


def _pre_state(cfg):
    if cfg.pre_path is None:
        return scenarios.THREE_BOX_PRE
    return qcore.basis(3, scenarios.path_index(cfg.pre_path))


def _selection_records(cfg, sel, T, extra=None):
    """Probability, ratio and both estimators for a pre/post-selected run."""
    w = weak_value(T.generator, sel).value
    icfg = est.InterferometerConfig(T)
    rows = []
    for j, theta in enumerate(cfg.thetas()):
        t = _theta_used(theta)
        row = {
            "theta": theta,
            "probability": est.post_selection_probability(sel, T, theta),
            "ratio": est.probability_ratio(sel, T, theta),
            "im_estimate": est.estimate_im(sel, icfg, t).value,
            "analytic_re": w.real,
            "analytic_im": w.imag,
        }
        if cfg.sampled:
            e = sampling.sampled_estimate_re(sel, T, t, cfg.trials, sampling.rng_for(cfg.seed, j))
            row["re_estimate"], row["stderr"] = e.value, e.stderr
        else:
            row["re_estimate"] = est.estimate_re_symmetric(sel, T, t).value
        if extra is not None:
            row.update(extra(j, theta))
        rows.append(row)
    return rows


def _records_three_box_weak(cfg):
    return _selection_records(cfg, scenarios.three_box_selection(), scenarios.path_attenuator(cfg.path))


def _records_three_box_pre(cfg):
    i = _pre_state(cfg)
    T = scenarios.path_attenuator(cfg.path)
    mean = qcore.expect(T.generator, i)
    rows = []
    for j, theta in enumerate(cfg.thetas()):
        t = _theta_used(theta)
        p = scenarios.pre_only_detection(i, cfg.path, theta)
        row = {
            "theta": theta,
            "probability": p,
            "ratio": p,
            "im_estimate": est.estimate_expectation_pre_only(i, T, t, "im", est.SYMMETRIC).value,
            "analytic_re": mean.real,
            "analytic_im": mean.imag,
        }
        if cfg.sampled:
            # survivors of the attenuator alone: k ~ Bin(n, ||N i||^2)
            if theta < 0:
                raise UsageError("sampled attenuator needs theta >= 0")
            pt = scenarios.pre_only_detection(i, cfg.path, t)
            k = sampling.simulate_detections(pt, cfg.trials, sampling.rng_for(cfg.seed, j))
            row["re_estimate"] = (math.sqrt(k / cfg.trials) - 1) / t
            row["stderr"] = math.sqrt(pt * (1 - pt) / cfg.trials) / (2 * math.sqrt(pt) * t)
        else:
            row["re_estimate"] = est.estimate_expectation_pre_only(i, T, t, "re", est.SYMMETRIC).value
        rows.append(row)
    return rows


def _records_three_box_classical(cfg):
    if cfg.pre_path is None:
        p_pre = (1 / 3, 1 / 3, 1 / 3)
    else:
        p_pre = tuple(np.eye(3)[scenarios.path_index(cfg.pre_path)])
    sc = scenarios.ClassicalThreeBox(p_pre=p_pre, shutter_path=cfg.path)
    base = sc.baseline
    slope = scenarios.classical_slope(sc)
    rng_seed = cfg.seed
    rows = []
    for j, theta in enumerate(cfg.thetas()):
        if theta < 0:
            raise UsageError("classical shutter needs theta >= 0")
        t = _theta_used(theta)
        p = scenarios.classical_detection(sc, theta)
        row = {"theta": theta, "probability": p, "ratio": p / base, "analytic_re": slope / 2}
        pt = scenarios.classical_detection(sc, t)
        if cfg.sampled:
            rng = sampling.rng_for(rng_seed, j)
            h0 = sampling.simulate_detections(base, cfg.trials, rng) / cfg.trials
            ht = sampling.simulate_detections(pt, cfg.trials, rng) / cfg.trials
            ratio = ht / h0
            row["re_estimate"] = (ratio - 1) / (2 * t)
            var = ratio**2 * ((1 - ht) / (cfg.trials * ht) + (1 - h0) / (cfg.trials * h0))
            row["stderr"] = math.sqrt(var) / (2 * t)
        else:
            row["re_estimate"] = (pt / base - 1) / (2 * t)
        rows.append(row)
    return rows


def _records_spin(cfg):
    sc = scenarios.SpinScenario(chi=cfg.chi)
    sel = sc.selection()

    def phases(j, theta):
        return {
            "pre_phase": scenarios.pre_only_phase(cfg.chi, theta),
            "post_phase": scenarios.post_selected_phase(cfg.chi, theta),
        }

    return _selection_records(cfg, sel, scenarios.spin_rotation(), extra=phases)


def _records_wva(cfg):
    setup = scenarios.wva_preset(cfg.amplification)
    T = unitary_of(setup.generator, label="iA1xA2")
    n = cfg.trials

    def theta_hat(j, theta):
        p0 = sampling.wva_probability(setup.sel1, setup.sel2, setup.A1, setup.A2, 0.0)
        if n is None:
            pt = sampling.wva_probability(setup.sel1, setup.sel2, setup.A1, setup.A2, theta)
            e = sampling.wva_estimate_theta(setup.sel1, setup.sel2, setup.A1, setup.A2, pt, p0, 1)
            return {"theta_hat": e.value}
        rng = sampling.rng_for(cfg.seed, 1_000_000 + j)
        kt, k0 = sampling.wva_counts(setup.sel1, setup.sel2, setup.A1, setup.A2, theta, n, rng)
        e = sampling.wva_estimate_theta(setup.sel1, setup.sel2, setup.A1, setup.A2, kt, k0, n)
        return {"theta_hat": e.value}

    return _selection_records(cfg, setup.composite, T, extra=theta_hat)


RECORDERS = {
    "three-box-classical": _records_three_box_classical,
    "three-box-pre": _records_three_box_pre,
    "three-box-weak": _records_three_box_weak,
    "spin": _records_spin,
    "wva": _records_wva,
}


def run(cfg):
    """Sweep records for a scenario; each record is a dict keyed by column name."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnvelopeWarning)
        return RECORDERS[cfg.scenario](cfg)


def _observable(cfg):
    if cfg.scenario == "spin":
        sc = scenarios.SpinScenario(chi=cfg.chi)
        return sc.selection(), qcore.S_Z
    if cfg.scenario in ("three-box-weak", "three-box-pre"):
        sel = scenarios.three_box_selection()
        if cfg.scenario == "three-box-pre":
            i = _pre_state(cfg)
            sel = Selection(i, i)
        return sel, scenarios.path_projector(cfg.path)
    raise UsageError(f"compare-oracles supports spin, three-box-weak and three-box-pre, not {cfg.scenario}")


def _safe(fn):
    try:
        return fn()
    except ValueError:
        return None


def compare_oracles(cfg):
    """
    Probe-free Re<A>_w (fringe phase under exp(i theta A)) against the
    Gaussian-pointer mean shift / theta and the analytic value, with the
    Fisher ratio F/J of the two readouts.
    """
    sel, A = _observable(cfg)
    w = weak_value(A, sel).value
    icfg = est.InterferometerConfig(unitary_of(A))
    att = attenuation_of(A)
    probe = probeoracle.GaussianProbe(sigma=cfg.sigma)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EnvelopeWarning)
        for theta in cfg.thetas():
            t = _theta_used(theta)
            pf = est.estimate_im(sel, icfg, t).value
            gauss = probeoracle.mean_pointer_shift(probeoracle.pointer_distribution_exact(sel.pre, sel.post, A, t, probe)) / t

            def ratio():
                F = sampling.classical_fisher_re(sel, att, t)
                J = probeoracle.fisher_gaussian(sel.pre, sel.post, A, t, probe).J
                return F / J

            rows.append(
                {
                    "theta": theta,
                    "probe_free_re": pf,
                    "gaussian_re": gauss,
                    "analytic_re": w.real,
                    "probe_free_gap": pf - w.real,
                    "gaussian_gap": gauss - w.real,
                    "fisher_ratio": _safe(ratio),
                }
            )
    return rows


def fisher_table(cfg):
    """
    Fisher quantities for theta-estimation under the unitary exp(i theta A):
    F about Re<iA>_w, the binary-outcome theta information, F_Q, and the
    Gaussian-pointer J for the same observable.
    """
    if cfg.scenario == "wva":
        setup = scenarios.wva_preset(cfg.amplification)
        sel, T, A = setup.composite, unitary_of(setup.generator), None
    elif cfg.scenario == "three-box-classical":
        raise UsageError("fisher is defined for quantum scenarios only")
    else:
        sel, A = _observable(cfg)
        T = unitary_of(A)
    n = cfg.trials or 1
    probe = probeoracle.GaussianProbe(sigma=cfg.sigma)
    rows = []
    for theta in cfg.thetas():
        t = _theta_used(theta)
        rep = sampling.fisher_report(sel, T, t, n)
        row = {
            "theta": theta,
            "classical_F": rep.classical_F,
            "leading_order_F": rep.leading_order_F,
            "classical_F_theta": rep.classical_F_theta,
            "quantum_FQ": rep.quantum_FQ,
            "cr_bound": rep.cr_bound,
            "gaussian_J": None,
            "gaussian_J_leading": None,
        }
        if A is not None:
            g = _safe(lambda: probeoracle.fisher_gaussian(sel.pre, sel.post, A, t, probe))
            if g is not None:
                row["gaussian_J"], row["gaussian_J_leading"] = g.J, g.leading_order
        rows.append(row)
    return rows


# -- output ------------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def _ordered_columns(rows):
    present = set().union(*(r.keys() for r in rows)) if rows else set()
    if present <= set(COLUMNS):
        return [c for c in COLUMNS if c in present]
    return list(rows[0])


def _jsonable(value):
    if value is None:
        return None
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value) + 0.0
    return value if math.isfinite(value) else None


def render(rows, fmt, seed=None):
    cols = _ordered_columns(rows)
    if fmt == "json":
        out = []
        for r in rows:
            rec = {c: _jsonable(r.get(c)) for c in cols}
            if seed is not None:
                rec["seed"] = seed
            out.append(rec)
        return json.dumps(out, indent=2) + "\n"
    buf = io.StringIO()
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    writer = csv.writer(buf)
    writer.writerow(cols)
    for r in rows:
        writer.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def emit(text, output):
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", newline="") as fh:
            fh.write(text)


# -- argument parsing ---------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON settings file; flags override it")
    p.add_argument("--scenario", help="scenario name (see list-scenarios)")
    p.add_argument("--theta-min", type=float)
    p.add_argument("--theta-max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--log-spacing", action="store_const", const=True)
    p.add_argument("--trials", type=int, help="simulate n detection trials per setting")
    p.add_argument("--seed", type=int)
    p.add_argument("--chi", type=float, help="spin Bloch polar angle")
    p.add_argument("--path", help="attenuated path A, B or C")
    p.add_argument("--pre-path", help="pre-select a single path instead of the uniform state")
    p.add_argument("--amplification", type=float, help="WVA factor 2Re(i<A1>w<A2>w)")
    p.add_argument("--sigma", type=float, help="Gaussian pointer width")
    p.add_argument("--output", "-o", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def make_parser():
    parser = argparse.ArgumentParser(prog="probefree", description="Probe-free weak-value laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("run", "sweep a scenario over theta"),
        ("compare-oracles", "probe-free vs Gaussian-probe vs analytic Re<A>w"),
        ("fisher", "Fisher information and Cramer-Rao bounds over theta"),
    ):
        _add_common(sub.add_parser(name, help=help_))
    sub.add_parser("list-scenarios", help="list scenario presets")
    return parser


COMMANDS = {"run": run, "compare-oracles": compare_oracles, "fisher": fisher_table}


def main(argv=None):
    args = make_parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, desc in SCENARIOS.items():
            print(f"{name:22s} {desc}")
        return EXIT_OK
    try:
        cfg = build_config(args)
        cfg.thetas()
        rows = COMMANDS[args.command](cfg)
        text = render(rows, cfg.format, seed=cfg.seed if cfg.sampled else None)
    except UsageError as exc:
        print(f"probefree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"probefree: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    emit(text, cfg.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

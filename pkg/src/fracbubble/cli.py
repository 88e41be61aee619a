"""Command-line front end.

Every subcommand writes one CSV table (to ``--out`` or standard output) and
echoes the resolved run configuration on standard error.  Exit codes: 0 on
success, 1 when a check fails, 2 for usage errors, 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import csv
from dataclasses import asdict, dataclass, fields
import io
import math
import sys

import numpy as np

from ._common import FracBubbleError, NumericError, ParameterError, QuadratureSpec
from .bubble import SpectralParams

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("constants", "config", "sums", "energy", "critical", "pohozaev", "norms", "verify")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Resolved settings of one run (defaults < config file < flags)."""

    n: int = 3
    s: float = 0.3
    m: float | None = None
    c0: float = 1.0
    r0: float = 1.0
    cutoff: float = 0.5
    theta_box: float = 0.1
    k: int | None = None
    h: float | None = None
    tau: float | None = None
    tol: float = 1e-10
    delta: float = 3.0
    which: str = "translation"
    density: int = 1
    trace: bool = False
    out: str | None = None

    def describe(self) -> str:
        return " ".join(f"{k}={v!r}" for k, v in asdict(self).items())


_CASTS = {f.name: f.type for f in fields(RunConfig)}


def _cast(key, raw):
    kind = _CASTS[key]
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if kind in ("int", "int | None"):
            return int(raw)
        if kind in ("float", "float | None"):
            return float(raw)
        if kind == "bool":
            if isinstance(raw, bool):
                return raw
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise UsageError(f"invalid value for {key}: {raw!r}") from None
    return raw


def read_config_file(path: str) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    for no, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_").lower()
        if key not in _CASTS:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        out[key] = _cast(key, value)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--n", type=int, help="dimension N (default 3)")
    g.add_argument("--s", type=float, help="fractional order s (default 0.3)")
    g.add_argument("--m", type=float, help="flatness exponent of K (default 3(N-2s)/4)")
    g.add_argument("--c0", type=float, help="coefficient of the flatness term (default 1)")
    g.add_argument("--r0", type=float, help="radius of the critical sphere of K (default 1)")
    g.add_argument("--cutoff", type=float, help="width of the region where K is flat-expanded (default 0.5)")
    g.add_argument("--theta-box", dest="theta_box", type=float, help="box exponent theta (default 0.1)")
    g.add_argument("--k", type=int, help="number of bubbles per circle")
    g.add_argument("--h", type=float, help="height parameter h")
    g.add_argument("--tau", type=float, help="lattice-sum or norm exponent")
    g.add_argument("--tol", type=float, help="quadrature tolerance (default 1e-10)")
    g.add_argument("--delta", type=float, help="half-ball radius for the pohozaev command (default 3)")
    g.add_argument("--which", choices=("translation", "dilation"), help="identity for the pohozaev command")
    g.add_argument("--density", type=int, help="sample density level for the norms command (default 1)")
    g.add_argument("--trace", action="store_const", const=True, help="include the solver trajectory")
    g.add_argument("--out", help="write the CSV here instead of standard output")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")

    parser = argparse.ArgumentParser(prog="fracbubble", description="Multi-bubble reduction toolkit.")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    helps = {
        "constants": "expansion constants with provenance",
        "config": "point coordinates of a configuration",
        "sums": "lattice sums: exact, asymptotic and their ratio",
        "energy": "truncated and direct energies at a reduced point",
        "critical": "stationary point of the truncated energy and boundary signs",
        "pohozaev": "residuals of the local Pohozaev identities",
        "norms": "weighted sup norms of W and of the error terms",
        "verify": "run the acceptance checks",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    values = {}
    if ns.config:
        values.update(read_config_file(ns.config))
    for key in _CASTS:
        v = getattr(ns, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    try:
        params = SpectralParams(cfg.n, cfg.s)
        QuadratureSpec(tol=cfg.tol)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if cfg.m is not None and not (params.tau / 2 < cfg.m < params.tau):
        raise UsageError(f"--m must lie in ({params.tau / 2:g}, {params.tau:g}) for N={cfg.n}, s={cfg.s}")
    if cfg.k is not None and cfg.k < 1:
        raise UsageError("--k must be a positive integer")
    if cfg.h is not None and not 0 <= cfg.h < 1:
        raise UsageError("--h must lie in [0, 1)")
    if cfg.tau is not None and not cfg.tau > 0:
        raise UsageError("--tau must be positive")
    if not cfg.delta > 0:
        raise UsageError("--delta must be positive")
    if not cfg.theta_box > 0:
        raise UsageError("--theta-box must be positive")
    if cfg.density < 1:
        raise UsageError("--density must be at least 1")
    if not (cfg.c0 > 0 and cfg.r0 > 0 and cfg.cutoff > 0):
        raise UsageError("--c0, --r0 and --cutoff must be positive")


# ---------------------------------------------------------------------------
# helpers


def _f(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _table(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _f(v) for v in row])
    return buf.getvalue()


def _setup(cfg: RunConfig):
    from .energy import PotentialModel

    params = SpectralParams(cfg.n, cfg.s)
    kw = {"c0": cfg.c0, "r0": cfg.r0, "delta": cfg.cutoff}
    if cfg.m is not None:
        kw["m"] = cfg.m
    try:
        pot = PotentialModel.default(params, **kw)
        pot.validate(params)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    return params, pot, QuadratureSpec(tol=cfg.tol)


def _constants(cfg, params, pot, quad, k):
    from .energy import compute_constants

    try:
        return compute_constants(params, pot, quad, k=k)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(cfg: RunConfig):
    params, pot, quad = _setup(cfg)
    k = cfg.k or 50
    C = _constants(cfg, params, pot, quad, k)
    rows = [(n, v, p) for n, v, p in C.rows()]
    rows += [("k", k, "input"), ("mu", C.mu, "derived"), ("h0", C.h0, "closed-form"), ("m", C.m, "input")]
    rows += [(f"exponent_{n}", v, "closed-form") for n, v in sorted(C.exponents.items())]
    return _table(["name", "value", "provenance"], rows), EXIT_OK


def _reference(cfg, params, pot, quad, k):
    from .energy import reference_point

    C = _constants(cfg, params, pot, quad, k)
    ref = reference_point(params, C, k)
    return C, ref


def cmd_config(cfg: RunConfig):
    from .configuration import build_cylinder_config

    params, pot, quad = _setup(cfg)
    k = cfg.k or 16
    C, ref = _reference(cfg, params, pot, quad, k)
    h = ref.h if cfg.h is None else cfg.h
    conf = build_cylinder_config(params, k, ref.r, h, ref.lam, m=C.m)
    return conf.to_csv(), EXIT_OK


def cmd_sums(cfg: RunConfig):
    from .configuration import build_cylinder_config
    from .interactions import CROSS_CIRCLE, SAME_CIRCLE, SumSpec, lattice_sum_asymptotic, lattice_sum_exact

    params = SpectralParams(cfg.n, cfg.s)
    k = cfg.k or 64
    tau = params.tau if cfg.tau is None else cfg.tau
    h = 0.1 if cfg.h is None else cfg.h
    conf = build_cylinder_config(params, k, 1.0, h)
    rows = []
    kinds = [SAME_CIRCLE] + ([CROSS_CIRCLE] if h > 0 and tau > 1 else [])
    for kind in kinds:
        spec = SumSpec(tau, kind)
        ex = lattice_sum_exact(conf, spec)
        asy = lattice_sum_asymptotic(conf, spec)
        rows.append((k, tau, kind, h, ex, float(asy), ex / float(asy), bool(asy.in_regime)))
    return _table(["k", "tau", "kind", "h", "exact", "asymptotic", "ratio", "in_regime"], rows), EXIT_OK


def cmd_energy(cfg: RunConfig):
    from .configuration import build_cylinder_config
    from .energy import ReducedPoint, energy_direct, energy_expansion, landscape

    params, pot, quad = _setup(cfg)
    k = cfg.k or 16
    C, ref = _reference(cfg, params, pot, quad, k)
    h = ref.h if cfg.h is None else cfg.h
    pt = ReducedPoint(ref.r, h, ref.lam, k)
    F = energy_expansion(pt, C, params)
    excess = k * landscape(pt, C, params) / C.mu ** C.m
    conf = build_cylinder_config(params, k, pt.r, h, pt.lam, m=C.m)
    direct = energy_direct(conf, pot, params, quad)
    rows = [(k, pt.r, h, pt.lam, F, float(direct), excess, direct.excess)]
    header = ["k", "r", "h", "lambda", "F_expansion", "F_direct", "excess_expansion", "excess_direct"]
    return _table(header, rows), EXIT_OK


def cmd_critical(cfg: RunConfig):
    from .critical import boundary_sign_report, find_critical_point

    params, pot, quad = _setup(cfg)
    k = cfg.k or 32
    C, _ = _reference(cfg, params, pot, quad, k)
    state = find_critical_point(params, C, pot, k, theta_box=cfg.theta_box, trace=cfg.trace, return_state=True)
    rep = boundary_sign_report(params, C, k, theta_box=cfg.theta_box)
    p = state.point
    rows = [("critical", "point", p.r, p.h, p.lam, None, None),
            ("critical", "grad_max", None, None, None, float(np.max(np.abs(state.grad))), state.converged),
            ("critical", "iterations", None, None, None, state.iterations, None)]
    for face in rep.faces:
        rows.append(("boundary", face.name, None, None, None, face.min_margin, face.passed))
    if cfg.trace:
        for i, q in enumerate(state.trajectory):
            rows.append(("trace", str(i), q.r, q.h, q.lam, None, None))
    header = ["section", "name", "r", "h", "lambda", "value", "passed"]
    return _table(header, rows), EXIT_OK


def cmd_pohozaev(cfg: RunConfig):
    from .pohozaev import FieldPair, HalfBallDomain, dilation_identity_residual, translation_identity_residual

    params = SpectralParams(cfg.n, cfg.s)
    quad = QuadratureSpec(tol=cfg.tol)
    dom = HalfBallDomain(np.zeros(params.N), cfg.delta)
    if cfg.which == "translation":
        rep = translation_identity_residual(FieldPair.bubble_and_kernel(params, 1), dom, None, 1, quad)
    else:
        rep = dilation_identity_residual(FieldPair.bubble_with_itself(params), dom, None, np.zeros(params.N), quad)
    names = sorted(rep.terms)
    header = ["label", "delta", "lhs", "rhs", "abs_residual", "rel_residual", "scale", "passed"] + \
        [f"term_{n}" for n in names]
    row = [rep.label, cfg.delta, rep.lhs, rep.rhs, rep.abs_residual, rep.rel_residual, rep.scale, bool(rep.passed)]
    row += [float(rep.terms[n]) for n in names]
    return _table(header, [row]), EXIT_OK if rep.passed else EXIT_CHECK


def cmd_norms(cfg: RunConfig):
    from .configuration import build_cylinder_config
    from .norms import (NormSpec, SampledField, configuration_field, dstar_norm, error_terms, sample_design,
                        star_norm)

    params, pot, quad = _setup(cfg)
    k = cfg.k or 16
    C, ref = _reference(cfg, params, pot, quad, k)
    h = ref.h if cfg.h is None else cfg.h
    conf = build_cylinder_config(params, k, ref.r, h, ref.lam, m=C.m)
    try:
        spec = NormSpec(params, conf, tau=cfg.tau, m=C.m)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    Y = sample_design(conf, cfg.density)
    J1, J2 = error_terms(params, conf, pot, Y)
    fields_ = [
        ("W", "star", star_norm(SampledField(Y, configuration_field(params, conf, Y)), spec)),
        ("W^(p-1)", "dstar", dstar_norm(SampledField(Y, configuration_field(params, conf, Y, params.p_crit - 1)), spec)),
        ("J1", "dstar", dstar_norm(SampledField(Y, J1), spec)),
        ("J2", "dstar", dstar_norm(SampledField(Y, J2), spec)),
        ("J1+J2", "dstar", dstar_norm(SampledField(Y, J1 + J2), spec)),
    ]
    rows = [(name, norm, val, spec.tau, len(Y), k) for name, norm, val in fields_]
    return _table(["field", "norm", "value", "tau", "samples", "k"], rows), EXIT_OK


def cmd_verify(cfg: RunConfig):
    from .checks import results_to_csv, run_checks

    params = SpectralParams(cfg.n, cfg.s)
    results = run_checks(params, QuadratureSpec(tol=cfg.tol))
    for r in results:
        print(f"criterion {r.criterion:2d} {r.name:28s} {'pass' if r.passed else 'FAIL'}", file=sys.stderr)
    return results_to_csv(results), EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = resolve_config(ns)
        print(f"# run-config: command={ns.command} {cfg.describe()}", file=sys.stderr)
        text, status = HANDLERS[ns.command](cfg)
        _emit(text, cfg.out)
        return status
    except UsageError as exc:
        print(f"fracbubble: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"fracbubble: numeric failure in {ns.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FracBubbleError, ValueError) as exc:
        print(f"fracbubble: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

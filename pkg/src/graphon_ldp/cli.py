"""graphon-ldp command line.

Exit codes: 0 success, 1 usage error or unknown subcommand, 2 domain or
input-format error, 3 capacity error.  Reports go to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .cutnorm import cut_norm_distance, delta_cut_bounds
from .entropy import analyze_psi, limit_entropy_ratio, on_minorant, p_zero
from .errors import CapacityError, DomainError, GraphonError, InsufficientConditioningError, WitnessNotFoundError
from .graphon import hom_density, in_omega, relative_entropy
from .graphs import format_graph, load_graph
from .io import dumps, format_float, load_graphon
from .linalg import operator_norm
from .sampler import conditional_concentration, exact_tail, sample_graph, tail_estimate
from .variational import ConstraintKind, bipartite_phase, phase_scan, phi_bracket, symmetric_min
from .witnesses import witness_clique, witness_geps, witness_planted

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_CAPACITY = 0, 1, 2, 3
SCAN_HEADER = ["r", "t_target", "on_minorant", "symmetric_I", "witness_I"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"
    seed: int = rngmod.DEFAULT_SEED


# --- validation --------------------------------------------------------------------

def _open01(name, x):
    if x is not None and not 0.0 < x < 1.0:
        raise DomainError(f"--{name} must lie in (0, 1), got {x!r}")


def _closed01(name, x):
    if x is not None and not 0.0 <= x <= 1.0:
        raise DomainError(f"--{name} must lie in [0, 1], got {x!r}")


def _positive_int(name, x):
    if x is not None and x < 1:
        raise DomainError(f"--{name} must be a positive integer, got {x!r}")


def validate(cfg: RunConfig) -> None:
    p = cfg.params
    _open01("p", p.get("p"))
    _open01("gamma", p.get("gamma"))
    _open01("alpha", p.get("alpha"))
    _closed01("r", p.get("r"))
    for name in ("d", "kn", "n", "samples", "restarts", "points"):
        _positive_int(name, p.get(name))
    t = p.get("t")
    if t is not None and not 0.0 <= t <= 1.0 and cfg.command != "solve":
        raise DomainError(f"--t must lie in [0, 1], got {t!r}")
    if t is not None and t < 0:
        raise DomainError(f"--t must be non-negative, got {t!r}")
    if cfg.seed < 0:
        raise DomainError(f"--seed must be non-negative, got {cfg.seed!r}")


def _r_grid(spec: str) -> list[float]:
    """``lo:hi:n`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in spec:
            lo, hi, n = spec.split(":")
            return np.linspace(float(lo), float(hi), int(n)).tolist()
        return [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise DomainError(f"bad grid spec {spec!r}; use lo:hi:n or a comma list") from None


# --- commands -----------------------------------------------------------------------

def _density(p, cfg):
    f, H = load_graphon(p["graphon"]), load_graph(p["graph"])
    return {"t": hom_density(H, f), "graph": str(H)}


def _entropy(p, cfg):
    W0, f = load_graphon(p["base"]), load_graphon(p["graphon"])
    out = {"I": relative_entropy(W0, f), "in_omega": in_omega(W0, f)}
    if p.get("limit"):
        out["limit_ratio"] = limit_entropy_ratio(W0, f)
    return out


def _cutdist(p, cfg):
    f, g = load_graphon(p["graphon"]), load_graphon(p["other"])
    out = {"d_cut": cut_norm_distance(f, g, mode=p["mode"]), "mode": p["mode"]}
    if p.get("delta"):
        b = delta_cut_bounds(f, g, seed=cfg.seed)
        out.update({"delta_lower": b.lower, "delta_upper": b.upper, "delta_method": b.method})
    return out


def _opnorm(p, cfg):
    return {"op_norm": operator_norm(load_graphon(p["graphon"]))}


def _psi(p, cfg):
    out = analyze_psi(p["p"], p["d"]).to_dict()
    out["p0"] = p_zero(p["d"])
    return out


def _phase(p, cfg):
    kind = ConstraintKind(p["constraint"])
    d = 2 if kind is ConstraintKind.OPERATOR_NORM else p["d"]
    if d is None:
        raise DomainError("--d is required for the HomDensity constraint")
    prof = analyze_psi(p["p"], d)
    return {
        "p": p["p"], "gamma": p["gamma"], "d": d, "r": p["r"], "constraint": kind.value,
        "on_minorant": on_minorant(p["p"], d, p["r"], prof),
        "phase": bipartite_phase(p["p"], p["gamma"], kind, p["r"], d=d).value,
        "window": list(prof.window) if prof.window else None,
        "inflection": list(prof.inflection) if prof.inflection else None,
        "convexity": prof.convexity.value,
        "p0": p_zero(d),
    }


def _solve(p, cfg):
    W0, H = load_graphon(p["graphon"]), load_graph(p["graph"])
    if p.get("points", 1) > 1:
        return phi_bracket(W0, H, p["t"], seed=cfg.seed, restarts=p["restarts"], monotone_points=p["points"])
    if p.get("symmetric_only"):
        return symmetric_min(W0, H, p["t"], restarts=p["restarts"], seed=cfg.seed)
    return phi_bracket(W0, H, p["t"], seed=cfg.seed, restarts=p["restarts"])


def _witness(p, cfg):
    kind = p["kind"]
    H = load_graph(p["graph"]) if p.get("graph") else None
    if kind == "geps":
        for name in ("p", "gamma", "r"):
            if p.get(name) is None:
                raise DomainError(f"--{name} is required for the g^eps witness")
        return witness_geps(p["p"], p["gamma"], H, p["r"], constraint=p["constraint"])
    if H is None:
        raise DomainError("--graph is required")
    if kind == "clique":
        if p.get("t") is None or p.get("gamma") is None:
            raise DomainError("--t and --gamma are required for the clique witness")
        return witness_clique(p["case"], p["gamma"], p["t"], H, p.get("p"))
    if p.get("alpha") is None or p.get("gamma") is None:
        raise DomainError("--alpha and --gamma are required for the planted witness")
    return witness_planted(p["gamma"], p["alpha"], H, p.get("p"))


def _scan(p, cfg):
    H = load_graph(p["graph"]) if p.get("graph") else None
    kind = ConstraintKind(p["constraint"])
    if kind is ConstraintKind.HOM_DENSITY and H is None:
        from .graphs import cycle

        if p.get("d") not in (None, 2):
            raise DomainError("give --graph for d != 2")
        H = cycle(4)
    rows = phase_scan(p["p"], p["gamma"], kind, _r_grid(p["r_grid"]), H=H, with_witness=not p["no_witness"])
    return [
        {"r": row.r, "t_target": row.t_target, "on_minorant": row.on_minorant,
         "symmetric_I": row.symmetric_I, "witness_I": row.witness_I}
        for row in rows
    ]


def _sample(p, cfg):
    G = sample_graph(load_graphon(p["graphon"]), p["n"], seed=cfg.seed)
    if p.get("edges_out"):
        with open(p["edges_out"], "w") as fh:
            fh.write(format_graph(G.to_graph()))
    return G


def _tail(p, cfg):
    W0, H = load_graphon(p["graphon"]), load_graph(p["graph"])
    return tail_estimate(W0, H, p["t"], p["kn"], p["samples"], seed=cfg.seed)


def _enumerate(p, cfg):
    W0, H = load_graphon(p["graphon"]), load_graph(p["graph"])
    return exact_tail(W0, H, p["t"], p["kn"])


def _concentrate(p, cfg):
    W0, H = load_graphon(p["graphon"]), load_graph(p["graph"])
    if p.get("optimizer"):
        opt = load_graphon(p["optimizer"])
    else:
        opt = symmetric_min(W0, H, p["t"], seed=cfg.seed).optimizer
    return conditional_concentration(W0, H, p["t"], p["kn"], p["samples"], opt, seed=cfg.seed)


COMMANDS = {
    "density": _density, "entropy": _entropy, "cutdist": _cutdist, "opnorm": _opnorm,
    "psi": _psi, "phase": _phase, "solve": _solve, "witness": _witness, "scan": _scan,
    "sample": _sample, "tail": _tail, "enumerate": _enumerate, "concentrate": _concentrate,
}


# --- parsing and output -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="graphon-ldp", description="Upper-tail large deviations for block graphons.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", help="write the report here instead of stdout")
        sp.add_argument("--format", dest="fmt", choices=["json", "csv"], default="json")
        sp.add_argument("--seed", type=int, default=rngmod.DEFAULT_SEED)
        return sp

    sp = cmd("density", "homomorphism density t(H, W)")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--graph", required=True, help="edge-list file or builtin name (C4, cube, ...)")

    sp = cmd("entropy", "relative entropy I_W0(f)")
    sp.add_argument("--base", required=True)
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--limit", action="store_true", help="also report the p -> 0 ratio I / log(1/p)")

    sp = cmd("cutdist", "cut distance between two graphons")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--other", required=True)
    sp.add_argument("--mode", choices=["exact", "heuristic"], default="exact")
    sp.add_argument("--delta", action="store_true", help="also bracket the relabeling-invariant distance")

    sp = cmd("opnorm", "operator norm of a graphon")
    sp.add_argument("--graphon", required=True)

    sp = cmd("psi", "convexity profile of psi_p(x) = h_p(x^(1/d))")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--d", type=int, required=True)

    sp = cmd("phase", "symmetric or broken at a bipartite point")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--d", type=int)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--constraint", choices=[k.value for k in ConstraintKind], default="HomDensity")

    sp = cmd("solve", "symmetric variational problem with a certified bracket")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--points", type=int, default=1, help="t-grid size for the monotonicity check")
    sp.add_argument("--symmetric-only", action="store_true")

    sp = cmd("witness", "explicit symmetry-breaking graphon")
    sp.add_argument("--kind", choices=["geps", "clique", "planted"], required=True)
    sp.add_argument("--graph")
    sp.add_argument("--p", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--r", type=float)
    sp.add_argument("--t", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--case", choices=["PlantedIndependent", "PlantedClique"], default="PlantedIndependent")
    sp.add_argument("--constraint", choices=[k.value for k in ConstraintKind], default="HomDensity")

    sp = cmd("scan", "phase scan over r for the bipartite base")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--d", type=int)
    sp.add_argument("--graph")
    sp.add_argument("--r-grid", required=True, help="lo:hi:n or a comma list")
    sp.add_argument("--constraint", choices=[k.value for k in ConstraintKind], default="HomDensity")
    sp.add_argument("--no-witness", action="store_true")

    sp = cmd("sample", "draw one graph from a block model")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--n", type=int, required=True, help="vertices per equal block")
    sp.add_argument("--edges-out", help="also write the edge list here")

    for name, help_ in (("tail", "Monte Carlo upper-tail probability"), ("enumerate", "exact upper-tail probability")):
        sp = cmd(name, help_)
        sp.add_argument("--graphon", required=True)
        sp.add_argument("--graph", required=True)
        sp.add_argument("--t", type=float, required=True)
        sp.add_argument("--kn", type=int, required=True)
        if name == "tail":
            sp.add_argument("--samples", type=int, default=10**5)

    sp = cmd("concentrate", "distance of conditioned samples to the optimizer")
    sp.add_argument("--graphon", required=True)
    sp.add_argument("--graph", required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--kn", type=int, required=True)
    sp.add_argument("--samples", type=int, default=20000)
    sp.add_argument("--optimizer", help="graphon file; defaults to the symmetric optimizer")
    return ap


def parse_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    if command is None:
        raise UsageError("graphon-ldp: error: a subcommand is required\n" + build_parser().format_usage())
    out, fmt, seed = ns.pop("out"), ns.pop("fmt"), ns.pop("seed")
    return RunConfig(command, ns, out, fmt, seed)


def _csv(result) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")

    def cell(x):
        if x is None:
            return ""
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, float):
            return format_float(x).strip('"')
        return str(x)

    if isinstance(result, list):
        header = SCAN_HEADER if result and list(result[0]) == SCAN_HEADER else list(result[0]) if result else SCAN_HEADER
        w.writerow(header)
        for row in result:
            w.writerow([cell(row[k]) for k in header])
    else:
        d = result.to_dict() if hasattr(result, "to_dict") else result
        w.writerow(["key", "value"])
        for k, v in d.items():
            if isinstance(v, (int, float, str, bool)) or v is None:
                w.writerow([k, cell(v)])
    return buf.getvalue()


def dispatch(cfg: RunConfig) -> tuple[int, str]:
    """Run one subcommand; returns (exit status, report text)."""
    if cfg.command not in COMMANDS:
        return EXIT_USAGE, f"unknown subcommand {cfg.command!r}\n"
    validate(cfg)
    result = COMMANDS[cfg.command](cfg.params, cfg)
    text = _csv(result) if cfg.fmt == "csv" else dumps(result) + "\n"
    return EXIT_OK, text


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        status, text = dispatch(cfg)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return EXIT_USAGE
    except CapacityError as exc:
        sys.stderr.write(f"capacity error: {exc}\n")
        return EXIT_CAPACITY
    except (DomainError, WitnessNotFoundError, InsufficientConditioningError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except GraphonError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    if status != EXIT_OK:
        sys.stderr.write(text)
        return status
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

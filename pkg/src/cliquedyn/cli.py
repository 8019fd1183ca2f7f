"""Experiment runner: configuration, seeding, CSV/manifest output.

Configs are flat key=value text files; command-line flags override file
values.  Every output CSV is listed in a JSON manifest with a content hash,
and identical config+seed reproduces byte-identical outputs.

Exit codes: 0 ok, 2 config error, 3 numeric-tolerance failure,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .chains import (
    adjacency_spec,
    frequency_spec,
    moran_spec,
    poach_spec,
    simulate,
)
from .coupling import coupled_paths, generate_noise, verify_coupling_invariant
from .diffusion import martingale_residual
from .duality import fk_exact_check, fk_monte_carlo_check
from .equilibrium import med_pmf, med_to_gem_experiment, sample_gem
from .exact import (
    StateSpaceCapError,
    build_rate_matrix,
    complete_component_graphs,
    graph_stationary_check,
    stationary_distribution,
)
from .graphons import (
    BlockGraphon,
    ConstantGraphon,
    TargetGraph,
    complete_component_targets,
    entropy_bound,
    entropy_diagnostic,
    graphon_from_record,
    graphon_to_record,
    sample_graph,
    subgraphon_density,
)
from .graphs import (
    AdjacencyMatrix,
    FrequencySpectrum,
    LabeledGraph,
    ModelParams,
    TypeVector,
    spectrum_of_graph,
    spectrum_of_types,
)
from .partitions import spectra
from .rng import stream

__all__ = ["main", "validate_config", "ConfigError"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TOLERANCE = 3
EXIT_RESOURCE = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _parse_int_list(text: str) -> list:
    return [int(tok) for tok in str(text).split(",") if tok != ""]


def _parse_float_list(text: str) -> list:
    return [float(tok) for tok in str(text).split(",") if tok != ""]


_KEY_TYPES = {
    "chain": str,
    "n": int,
    "n_grid": _parse_int_list,
    "mu": float,
    "k": int,
    "t": float,
    "t_end": float,
    "t_grid": _parse_float_list,
    "replicates": int,
    "samples": int,
    "seed": int,
    "out": str,
    "densities_out": str,
    "fixtures": str,
    "pattern": str,
    "quick": lambda v: str(v).lower() in ("1", "true", "yes"),
}

_RANGES = {
    "mu": (lambda v: v >= 0, "must be >= 0"),
    "n": (lambda v: v >= 1, "must be >= 1"),
    "k": (lambda v: v >= 1, "must be >= 1"),
    "t": (lambda v: v >= 0, "must be >= 0"),
    "t_end": (lambda v: v >= 0, "must be >= 0"),
    "replicates": (lambda v: v >= 1, "must be >= 1"),
    "samples": (lambda v: v >= 1, "must be >= 1"),
    "seed": (lambda v: v >= 0, "must be >= 0"),
    "n_grid": (lambda v: len(v) >= 1 and all(x >= 1 for x in v), "entries must be >= 1"),
    "t_grid": (lambda v: len(v) >= 1 and all(x >= 0 for x in v), "entries must be >= 0"),
    "chain": (
        lambda v: v in ("poach", "adjacency", "moran", "frequency"),
        "must be one of poach|adjacency|moran|frequency",
    ),
}

_STOCHASTIC = {"simulate", "duality", "coupling", "equilibrium", "graphon", "limit", "suite"}


def validate_config(raw: str) -> dict:
    """Parse flat key=value text; unknown keys and out-of-range values fail."""
    out: dict = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key=value, got {body!r}")
        key, _, value = body.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in _KEY_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            parsed = _KEY_TYPES[key](value)
        except Exception:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
        out[key] = parsed
    _check_ranges(out)
    return out


def _check_ranges(cfg: dict):
    for key, value in cfg.items():
        rule = _RANGES.get(key)
        if rule and not rule[0](value):
            raise ConfigError(f"key {key!r} {rule[1]} (got {value!r})")


def _merge_config(args: argparse.Namespace, required: tuple, command: str) -> dict:
    cfg: dict = {}
    if getattr(args, "config", None):
        cfg.update(validate_config(Path(args.config).read_text()))
    for key in _KEY_TYPES:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    _check_ranges(cfg)
    if command in _STOCHASTIC and cfg.get("seed") is None:
        raise ConfigError("missing required key 'seed' for a stochastic command")
    for key in required:
        if cfg.get(key) is None:
            raise ConfigError(f"missing required key {key!r}")
    return cfg


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(path: str, header: list, rows: list):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def _write_manifest(command: str, cfg: dict, outputs: list, wall_ms: float):
    if not outputs:
        return
    entries = []
    for path in outputs:
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        entries.append({"path": str(path), "sha256": digest})
    manifest = {
        "command": command,
        "params": {k: v for k, v in sorted(cfg.items()) if k != "seed"},
        "seed": cfg.get("seed"),
        "outputs": entries,
        "wall_ms": round(wall_ms, 3),
    }
    Path(str(outputs[0]) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _state_label(state) -> str:
    if isinstance(state, LabeledGraph):
        return "E:" + ";".join(f"{u}-{v}" for (u, v) in sorted(state.edges))
    if isinstance(state, AdjacencyMatrix):
        bits = "".join(
            str(int(state.entries[p, q]))
            for p in range(state.size)
            for q in range(p + 1, state.size)
        )
        return f"A:{bits}"
    if isinstance(state, FrequencySpectrum):
        return "S:" + "+".join(f"{k}x{m}" for (k, m) in state.counts)
    if isinstance(state, TypeVector):
        return "T:" + ";".join(format(v, ".6f") for v in state.values)
    return str(state)


def _spectrum_label(state) -> str:
    if isinstance(state, LabeledGraph):
        nu = spectrum_of_graph(state)
    elif isinstance(state, TypeVector):
        nu = spectrum_of_types(state)
    elif isinstance(state, FrequencySpectrum):
        nu = state
    else:
        return ""
    return "+".join(f"{k}x{m}" for (k, m) in nu.counts)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _cmd_simulate(cfg: dict) -> tuple:
    params = ModelParams(mu=cfg["mu"], n=cfg["n"])
    chain = cfg["chain"]
    if chain == "poach":
        spec, init = poach_spec(params), LabeledGraph(cfg["n"])
    elif chain == "adjacency":
        spec, init = adjacency_spec(params), AdjacencyMatrix.zero(range(1, cfg["n"] + 1))
    elif chain == "frequency":
        spec, init = frequency_spec(params), FrequencySpectrum.from_dict({1: cfg["n"]})
    else:
        spec, init = moran_spec(params), TypeVector(
            tuple(stream(cfg["seed"], 9).random(cfg["n"]))
        )
    rows = []
    for rep in range(cfg["replicates"]):
        path = simulate(spec, init, cfg["t_end"], stream(cfg["seed"], rep))
        times = [0.0] + list(path.jump_times)
        for t, state in zip(times, path.states):
            rows.append((rep, t, _state_label(state), _spectrum_label(state)))
    write_csv(cfg["out"], ["replicate", "time", "state_key", "spectrum_key"], rows)
    return EXIT_OK, [cfg["out"]]


def _cmd_exact(cfg: dict) -> tuple:
    n, mu = cfg["n"], cfg["mu"]
    chain = cfg["chain"]
    if chain == "frequency":
        rm = build_rate_matrix(frequency_spec(ModelParams(mu=mu, n=n)), spectra(n))
        pi = stationary_distribution(rm)
        rows = []
        for nu in spectra(n):
            exact = pi[nu.key()]
            formula = med_pmf(nu, mu)
            rows.append(
                (
                    "S:" + "+".join(f"{k}x{m}" for (k, m) in nu.counts),
                    exact,
                    formula,
                    abs(exact - formula),
                )
            )
        write_csv(cfg["out"], ["state_key", "exact_pi", "ewens_pi", "abs_diff"], rows)
    elif chain == "poach":
        rows = [
            (
                _state_label(LabeledGraph(n, frozenset(r.state_key[1]))),
                "+".join(f"{k}x{m}" for (k, m) in r.spectrum),
                r.exact_pi,
                r.pi_product_rule,
                r.pi_corrected,
                r.abs_diff_product_rule,
                r.abs_diff_corrected,
            )
            for r in graph_stationary_check(n, mu)
        ]
        write_csv(
            cfg["out"],
            [
                "state_key",
                "spectrum",
                "exact_pi",
                "pi_product_rule",
                "pi_corrected",
                "abs_diff_product_rule",
                "abs_diff_corrected",
            ],
            rows,
        )
    elif chain == "adjacency":
        from .duality import forward_rate_matrix

        rm = forward_rate_matrix(n, mu)
        pi = stationary_distribution(rm)
        rows = [
            (_state_label(obj), pi[key]) for key, obj in zip(rm.states, rm.objects)
        ]
        write_csv(cfg["out"], ["state_key", "exact_pi"], rows)
    else:
        raise ConfigError("exact supports chain in {frequency, poach, adjacency}")
    return EXIT_OK, [cfg["out"]]


def _adj_key_label(key: tuple) -> str:
    idx, raw = key
    m = len(idx)
    a = np.frombuffer(raw, dtype=np.int8).reshape(m, m)
    bits = "".join(str(int(a[p, q])) for p in range(m) for q in range(p + 1, m))
    return f"A:{bits}"


def _cmd_duality(cfg: dict) -> tuple:
    n, mu, t = cfg["n"], cfg["mu"], cfg["t"]
    residual = fk_exact_check(n, mu, t)
    rows = fk_monte_carlo_check(n, mu, t, cfg.get("replicates", 10_000), cfg["seed"])
    out_rows = [
        (
            _adj_key_label(r.a_key),
            _adj_key_label(r.atilde_key),
            r.lhs,
            r.rhs_exact,
            r.rhs_mc,
            r.stderr,
        )
        for r in rows
    ]
    write_csv(
        cfg["out"],
        ["a_key", "atilde_key", "lhs", "rhs_exact", "rhs_mc", "stderr"],
        out_rows,
    )
    print(f"duality exact residual = {residual:.3e} (tolerance 1e-8)")
    code = EXIT_OK if residual <= 1e-8 and all(abs(r.z_score) <= 5 for r in rows) else EXIT_TOLERANCE
    return code, [cfg["out"]]


def _cmd_coupling(cfg: dict) -> tuple:
    n, mu, t_end = cfg["n"], cfg["mu"], cfg["t_end"]
    g0 = LabeledGraph(n)
    y0 = TypeVector(tuple((i + 1) / (n + 1) for i in range(n)))
    rows = []
    violations = 0
    for rep in range(cfg["replicates"]):
        noise = generate_noise(n, mu, t_end, seed=cfg["seed"] + rep)
        g_path, y_path = coupled_paths(g0, y0, noise)
        ok, t_bad = verify_coupling_invariant(g_path, y_path)
        violations += 0 if ok else 1
        marks = noise.marks()
        for idx, mark in enumerate(marks):
            g_state = g_path.states[idx + 1]
            y_state = y_path.states[idx + 1]
            rows.append(
                (
                    rep,
                    mark.time,
                    mark.kind,
                    mark.i,
                    mark.j if mark.j is not None else "",
                    _spectrum_label(g_state),
                    _spectrum_label(y_state),
                    int(_spectrum_label(g_state) == _spectrum_label(y_state)),
                )
            )
    write_csv(
        cfg["out"],
        [
            "replicate",
            "time",
            "event_kind",
            "i",
            "j",
            "graph_spectrum_key",
            "type_spectrum_key",
            "invariant_ok",
        ],
        rows,
    )
    print(f"coupling invariant violations: {violations}/{cfg['replicates']}")
    return (EXIT_OK if violations == 0 else EXIT_TOLERANCE), [cfg["out"]]


def _cmd_equilibrium(cfg: dict) -> tuple:
    n_grid = cfg.get("n_grid") or [cfg["n"]]
    rows = med_to_gem_experiment(
        cfg["mu"], n_grid, cfg["k"], cfg["replicates"], cfg["seed"]
    )
    out_rows = [
        (r.n, r.target_key, r.estimate, r.stderr, r.exact_limit, r.gap,
         r.estimate_iid, r.stderr_iid)
        for r in rows
    ]
    write_csv(
        cfg["out"],
        ["n", "target_key", "estimate", "stderr", "exact_limit", "gap",
         "estimate_iid", "stderr_iid"],
        out_rows,
    )
    return EXIT_OK, [cfg["out"]]


def _default_fixtures(seed: int) -> list:
    fixtures = [
        ("one-block", BlockGraphon((1.0,))),
        ("three-blocks", BlockGraphon((0.5, 0.3, 0.2))),
        ("half-dust", BlockGraphon((0.5,))),
        ("constant-half", ConstantGraphon(0.5)),
    ]
    for i, mu in enumerate((0.5, 1.0, 4.0)):
        gem = sample_gem(mu, 1e-10, stream(seed, 100 + i))
        fixtures.append((f"gem-mu-{mu}", BlockGraphon(gem.ranked())))
    return fixtures


def _cmd_graphon(cfg: dict) -> tuple:
    if cfg.get("fixtures"):
        recs = json.loads(Path(cfg["fixtures"]).read_text())
        fixtures = [
            (rec.get("name", f"fixture-{i}"), graphon_from_record(rec))
            for i, rec in enumerate(recs)
        ]
    else:
        fixtures = _default_fixtures(cfg["seed"])
    k_max = cfg.get("k") or 7
    rows = []
    for name, w in fixtures:
        for k in range(3, k_max + 1):
            rep = entropy_diagnostic(w, k)
            rows.append(
                (
                    name,
                    graphon_to_record(w)["kind"],
                    k,
                    rep.entropy,
                    rep.normalized,
                    entropy_bound(k),
                )
            )
    write_csv(
        cfg["out"], ["fixture", "kind", "k", "entropy", "normalized", "bound"], rows
    )
    outputs = [cfg["out"]]
    if cfg.get("densities_out"):
        k = 3
        samples = cfg.get("samples", 20_000)
        d_rows = []
        for fx, (name, w) in enumerate(fixtures):
            for idx, target in enumerate(complete_component_targets(k)):
                exact = subgraphon_density(w, target)
                rng = stream(cfg["seed"], 500 + 100 * fx + idx)
                want = target.graph().key()
                hits = sum(
                    1
                    for _ in range(samples)
                    if sample_graph(w, k, rng).key() == want
                )
                est = hits / samples
                se = (max(est * (1 - est), 1e-300) / samples) ** 0.5
                d_rows.append((name, target.key(), exact, est, se))
        write_csv(
            cfg["densities_out"],
            ["fixture", "target_key", "exact", "mc_estimate", "stderr"],
            d_rows,
        )
        outputs.append(cfg["densities_out"])
    return EXIT_OK, outputs


def _cmd_limit(cfg: dict) -> tuple:
    k = cfg["k"]
    bits = cfg.get("pattern") or "1" * (k * (k - 1) // 2)
    pairs = [
        (i, j) for i in range(1, k + 1) for j in range(i + 1, k + 1)
    ]
    if len(bits) != len(pairs):
        raise ConfigError(f"pattern needs {len(pairs)} bits for k={k}")
    edges = [pairs[i] for i, b in enumerate(bits) if b == "1"]
    poly = TargetGraph.from_edges(k, edges)
    report = martingale_residual(
        cfg["n"], cfg["mu"], poly, cfg["t_grid"], cfg["replicates"], cfg["seed"]
    )
    rows = [
        (t, m, se, th, pm, pse)
        for t, m, se, th, pm, pse in zip(
            report.t_grid,
            report.residual_means,
            report.residual_stderrs,
            report.theory_phi,
            report.phi_means,
            report.phi_stderrs,
        )
    ]
    write_csv(
        cfg["out"],
        ["t", "residual_mean", "stderr", "theory_mean_phi", "phi_mean", "phi_stderr"],
        rows,
    )
    return EXIT_OK, [cfg["out"]]


def _cmd_suite(cfg: dict) -> tuple:
    results = acceptance.run_suite(quick=bool(cfg.get("quick")))
    all_ok = True
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail} [{res.wall_s:.1f}s]")
        all_ok &= res.passed
    outputs = []
    if cfg.get("out"):
        write_csv(
            cfg["out"],
            ["criterion", "passed", "detail", "wall_s"],
            [(r.name, int(r.passed), '"' + r.detail.replace('"', "'") + '"', r.wall_s) for r in results],
        )
        outputs.append(cfg["out"])
    return (EXIT_OK if all_ok else EXIT_TOLERANCE), outputs


_COMMANDS = {
    "simulate": (_cmd_simulate, ("chain", "n", "mu", "t_end", "replicates", "seed", "out")),
    "exact": (_cmd_exact, ("chain", "n", "mu", "out")),
    "duality": (_cmd_duality, ("n", "mu", "t", "seed", "out")),
    "coupling": (_cmd_coupling, ("n", "mu", "t_end", "replicates", "seed", "out")),
    "equilibrium": (_cmd_equilibrium, ("mu", "k", "replicates", "seed", "out")),
    "graphon": (_cmd_graphon, ("seed", "out")),
    "limit": (_cmd_limit, ("n", "mu", "k", "t_grid", "replicates", "seed", "out")),
    "suite": (_cmd_suite, ("seed",)),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cliquedyn",
        description="Simulate and exactly verify clique-component graph dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--chain", choices=("poach", "adjacency", "moran", "frequency"))
        p.add_argument("--n", type=int)
        p.add_argument("--n-grid", dest="n_grid", type=_parse_int_list)
        p.add_argument("--mu", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--t", type=float)
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--t-grid", dest="t_grid", type=_parse_float_list)
        p.add_argument("--replicates", type=int)
        p.add_argument("--samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--densities-out", dest="densities_out", type=str)
        p.add_argument("--fixtures", type=str)
        p.add_argument("--pattern", type=str)
        p.add_argument("--quick", action="store_const", const=True, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler, required = _COMMANDS[args.command]
    t0 = time.perf_counter()
    try:
        cfg = _merge_config(args, required, args.command)
        code, outputs = handler(cfg)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StateSpaceCapError as exc:
        print(f"resource-cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    _write_manifest(args.command, cfg, outputs, (time.perf_counter() - t0) * 1e3)
    return code


if __name__ == "__main__":
    sys.exit(main())

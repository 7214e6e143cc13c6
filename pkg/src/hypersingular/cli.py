"""Command-line experiment runner.

Every subcommand validates its parameters first, computes, and then writes
one CSV or JSON artifact (to stdout or atomically to ``--output``).  CSV
artifacts start with ``#`` lines recording the full configuration and the
library version; JSON artifacts are a single object with ``config``,
``results`` and ``metadata`` keys.

Parameters can come from flags or from ``--config FILE`` (flat ``key=value``
lines or a JSON object); flags given explicitly win over the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from datetime import datetime, timezone
from fractions import Fraction
from typing import Callable

import numpy as np

from . import __version__

EXIT_INVALID = 2


class ConfigError(ValueError):
    """A parameter violates a precondition."""


# parameter parsing

def _number(text) -> Fraction | float:
    """Exact Fraction for decimal/rational literals, float otherwise."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, (int, float)):
        return Fraction(text).limit_denominator(10**12) if isinstance(text, int) else float(text)
    s = str(text).strip()
    if s.lower() in ("inf", "infinity", "∞"):
        return math.inf
    try:
        return Fraction(s)
    except ValueError:
        return float(s)


def _int(text) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def _str(text) -> str:
    return str(text)


def _int_list(text) -> list:
    if isinstance(text, list):
        return [_int(v) for v in text]
    return [_int(v) for v in str(text).split(",") if v.strip()]


def _float_list(text) -> list:
    if isinstance(text, list):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


# name -> (parser, default, help)
COMMON_GRID = {
    "n_r": (_int, 256, "radial nodes"),
    "n_theta": (_int, 256, "angular nodes"),
    "r_max": (float, 1 - 2**-10, "outer radius of the grid (< 1)"),
    "spacing": (_str, "geometric", "radial spacing: uniform or geometric"),
}

SUBCOMMANDS: dict[str, dict] = {
    "region": {
        "help": "classify the (1/p, 1/q) square against the critical line",
        "params": {
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            "kind": (_str, "singular", "maximal or singular"),
            "resolution": (_int, 11, "lattice points per axis"),
            "n": (_int, 2, "dimension of the family"),
            "eta": (_number, Fraction(1, 2), "sparseness"),
            "K": (_number, 1, "degree"),
        },
    },
    "layer-norms": {
        "help": "exact corner norms of sparse layers and fitted growth exponents",
        "params": {
            "family": (_str, "carleson", "carleson or full-tree"),
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            "jmin": (_int, 2, "first layer in the fit"),
            "jmax": (_int, 12, "last layer"),
            "n": (_int, 1, "dimension for full-tree families"),
        },
    },
    "bourgain": {
        "help": "combine two layer-norm growth rates into an interpolation endpoint",
        "params": {
            "beta1": (_number, Fraction(1, 2), "growth rate at (p1, q1)"),
            "beta2": (_number, Fraction(1, 2), "decay rate at (p2, q2)"),
            "M1": (float, 1.0, "constant at (p1, q1)"),
            "M2": (float, 1.0, "constant at (p2, q2)"),
            "p1": (_number, 1, "first corner p"),
            "q1": (_number, 1, "first corner q"),
            "p2": (_number, math.inf, "second corner p"),
            "q2": (_number, 1, "second corner q"),
        },
    },
    "maximal": {
        "help": "dyadic maximal function of 1 (or a random f) on a polar grid",
        "params": {
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            **COMMON_GRID,
            "system": (_str, "standard", "standard or shifted"),
            "function": (_str, "one", "one or random"),
            "max_level": (_int, None, "deepest box level (default: deepest resolved)"),
        },
    },
    "bergman": {
        "help": "Bergman-type integrals of 1 against their exact values",
        "params": {
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            **COMMON_GRID,
            "r_max": (float, 1 - 2**-14, "outer radius of the grid (< 1)"),
            "n_r": (_int, 128, "radial nodes"),
            "n_theta": (_int, 1024, "angular nodes"),
            "radii": (_float_list, [0.0, 0.5, 0.9, 0.95, 0.99], "evaluation radii"),
        },
    },
    "dominate": {
        "help": "sup ratio of the positive Bergman operator over the two-system sparse bound",
        "params": {
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            **COMMON_GRID,
            "n_r": (_int, 64, "radial nodes"),
            "n_theta": (_int, 128, "angular nodes"),
            "r_max": (float, 1 - 2**-8, "outer radius of the grid (< 1)"),
            "samples": (_int, 0, "random nonnegative f to test besides f = 1"),
            "columns": (_int, 8, "angular columns of evaluation nodes"),
        },
    },
    "weights": {
        "help": "weighted endpoint conditions and the Bekolle-Bonami constant",
        "params": {
            "weight": (_str, "power:0", "power:<gamma> or table:<path>"),
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            "K_max": (_int, 40, "last annulus"),
        },
    },
    "blowup": {
        "help": "sparse operator of the two-layer blow-up family applied to 1",
        "params": {
            "m": (_int, 12, "largest scale drop parameter"),
            "m_min": (_int, None, "smallest m (default: m)"),
            "t": (_number, Fraction(5, 4), "hypersingular index"),
        },
    },
    "decompose": {
        "help": "maximal dyadic boxes above a threshold and the matching level set",
        "params": {
            "t": (_number, Fraction(5, 4), "hypersingular index"),
            **COMMON_GRID,
            "n_r": (_int, 64, "radial nodes"),
            "n_theta": (_int, 256, "angular nodes"),
            "r_max": (float, 1 - 2**-8, "outer radius of the grid (< 1)"),
            "alpha": (float, 2.0, "threshold"),
            "system": (_str, "standard", "standard or shifted"),
            "function": (_str, "random", "one or random"),
        },
    },
}

GLOBAL_KEYS = ("seed",)


def _load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return data
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _resolve(command: str, ns: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags, parsing every value."""
    spec = SUBCOMMANDS[command]["params"]
    file_cfg = _load_config(ns.config) if ns.config else {}
    file_cfg.pop("experiment", None)
    unknown = set(file_cfg) - set(spec) - set(GLOBAL_KEYS) - {"format", "output"}
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg = {}
    for name, (parse, default, _) in spec.items():
        raw = getattr(ns, name, None)
        if raw is None:
            raw = file_cfg.get(name, default)
        try:
            cfg[name] = parse(raw) if raw is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"parameter {name}: cannot parse {raw!r} ({exc})") from None
    seed = ns.seed if ns.seed is not None else file_cfg.get("seed")
    cfg["seed"] = _int(seed) if seed is not None else None
    return cfg


# validation helpers

def _need(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _check_t(t, upper=Fraction(3, 2)):
    _need(1 < t < upper, f"t must satisfy 1 < t < {upper} (got {t})")


def _check_grid(cfg):
    _need(cfg["n_r"] >= 1 and cfg["n_theta"] >= 1, "n_r and n_theta must be >= 1")
    _need(0 < cfg["r_max"] < 1, f"r_max must satisfy 0 < r_max < 1 (got {cfg['r_max']})")
    _need(cfg["spacing"] in ("uniform", "geometric"), "spacing must be uniform or geometric")
    _need(cfg["n_r"] * cfg["n_theta"] <= 2**23, "grid exceeds 2^23 nodes")


def _check_seed(cfg, needed: bool):
    _need(not needed or cfg["seed"] is not None, "this configuration samples random functions: --seed is required")


def _grid(cfg):
    from .grids import make_polar_grid
    return make_polar_grid(cfg["n_r"], cfg["n_theta"], cfg["r_max"], cfg["spacing"])


def random_smooth_function(rng: np.random.Generator, terms: int = 4) -> Callable:
    """A positive smooth function ``exp(sum a_k Re(c_k z^k)) (1 + b |z|^2)`` drawn from ``rng``."""
    a = rng.normal(size=terms) * 0.8
    c = rng.normal(size=terms) + 1j * rng.normal(size=terms)
    b = rng.uniform(0, 3)

    def f(z):
        z = np.asarray(z)
        s = sum(a[k] * np.real(c[k] * z ** (k + 1)) for k in range(terms))
        return np.exp(s) * (1 + b * np.abs(z) ** 2)

    return f


# subcommands: each returns (rows, metadata)

def run_region(cfg, dry=False):
    from .regions import classify, critical_slope, graded_endpoint, line_endpoints, region_samples
    _need(cfg["kind"] in ("maximal", "singular"), "kind must be maximal or singular")
    _need(cfg["resolution"] >= 2, "resolution must be >= 2")
    _need(cfg["n"] >= 1, "n must be >= 1")
    _need(0 < cfg["eta"] < 1, "eta must lie in (0, 1)")
    _need(cfg["K"] >= 1, "K must be >= 1")
    try:
        sigma = critical_slope(cfg["n"], cfg["t"], cfg["eta"], cfg["K"])
        endpoint = graded_endpoint(cfg["n"], cfg["t"], cfg["eta"], cfg["K"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if dry:
        return None
    rows = [{"ip": float(p.ip), "iq": float(p.iq), "class": str(c)}
            for p, c in region_samples(sigma, cfg["kind"], cfg["resolution"])]
    ends = [{"ip": str(p.ip), "iq": str(p.iq), "class": str(classify(p, sigma, cfg["kind"]))}
            for p in line_endpoints(sigma)]
    return rows, {"sigma": str(sigma), "endpoints": ends,
                  "graded_endpoint": [str(endpoint.ip), str(endpoint.iq)]}


def layer_norm_table(family, t, jmin, jmax, convention="exact"):
    """Rows of exact corner norms per layer plus fitted slopes and the combined endpoint."""
    from .norms import op_norm_corner
    from .regions import LayerNormSeries, bourgain_combine, fit_layer_exponent
    rows = []
    for j in range(jmin, jmax + 1):
        rows.append({
            "j": j,
            "L1_L1": op_norm_corner(family, t, (1, 1), layer=j, convention=convention),
            "Linf_L1": op_norm_corner(family, t, (math.inf, 1), layer=j, convention=convention),
            "L1_Linf": op_norm_corner(family, t, (1, math.inf), layer=j, convention=convention),
        })
    js = [r["j"] for r in rows]
    fit1 = fit_layer_exponent(LayerNormSeries(js, [r["L1_L1"] for r in rows], "(1,1)"))
    fit2 = fit_layer_exponent(LayerNormSeries(js, [r["Linf_L1"] for r in rows], "(inf,1)"))
    meta = {"slope_L1_L1": fit1.slope, "slope_Linf_L1": fit2.slope,
            "residual_L1_L1": fit1.residual, "residual_Linf_L1": fit2.residual}
    if fit1.slope > 0 and fit2.slope < 0:
        res = bourgain_combine(fit1.slope, 2**fit1.intercept, 1, 1, -fit2.slope, 2**fit2.intercept, math.inf, 1)
        meta.update({"theta": float(res.theta), "endpoint": [float(res.point.ip), float(res.point.iq)]})
    return rows, meta


def run_layer_norms(cfg, dry=False):
    from .sparse import family_carleson, family_full_tree
    _check_t(cfg["t"])
    _need(cfg["family"] in ("carleson", "full-tree"), "family must be carleson or full-tree")
    _need(0 <= cfg["jmin"] and cfg["jmax"] - cfg["jmin"] >= 2, "need jmin >= 0 and at least 3 layers")
    _need(cfg["jmax"] <= 20, "jmax must be <= 20")
    if dry:
        return None
    t = float(cfg["t"])
    fam = family_carleson(cfg["jmax"]) if cfg["family"] == "carleson" else family_full_tree(cfg["jmax"], cfg["n"])
    rows, meta = layer_norm_table(fam, t, cfg["jmin"], cfg["jmax"])
    meta["expected_slopes"] = [2 * (t - 1), -(3 - 2 * t)] if cfg["family"] == "carleson" else None
    return rows, meta


def run_bourgain(cfg, dry=False):
    from .regions import bourgain_combine
    _need(cfg["beta1"] > 0 and cfg["beta2"] > 0, "beta1 and beta2 must be positive")
    for k in ("p1", "q1", "p2", "q2"):
        _need(cfg[k] >= 1, f"{k} must be >= 1")
    if dry:
        return None
    r = bourgain_combine(cfg["beta1"], cfg["M1"], cfg["p1"], cfg["q1"],
                         cfg["beta2"], cfg["M2"], cfg["p2"], cfg["q2"])
    return [{"theta": str(r.theta), "ip": str(r.point.ip), "iq": str(r.point.iq), "constant": r.constant}], \
        {"bound": "restricted weak type"}


def run_maximal(cfg, dry=False):
    from .grids import GridFunction
    from .norms import weak_norm
    from .operators import ResolutionError, apply_maximal, resolvable_level
    _check_t(cfg["t"])
    _check_grid(cfg)
    _need(cfg["system"] in ("standard", "shifted"), "system must be standard or shifted")
    _need(cfg["function"] in ("one", "random"), "function must be one or random")
    _check_seed(cfg, cfg["function"] == "random")
    grid = _grid(cfg)
    try:
        deepest = resolvable_level(grid, cfg["system"])
    except ResolutionError as exc:
        raise ConfigError(str(exc)) from None
    _need(cfg["max_level"] is None or 0 <= cfg["max_level"] <= deepest,
          f"max_level must lie in 0..{deepest} for this grid")
    if dry:
        return None
    t = float(cfg["t"])
    if cfg["function"] == "one":
        f = GridFunction.constant(grid)
    else:
        f = GridFunction(grid, random_smooth_function(np.random.default_rng(cfg["seed"]))(grid.points))
    M = apply_maximal(cfg["system"], t, f, cfg["max_level"])
    vals = M.values.reshape(grid.shape)
    rows = []
    for i, r in enumerate(grid.r):
        ref = (1 - r * r) ** (-2 * (t - 1))
        rows.append({"r": float(r), "min": float(vals[i].min()), "max": float(vals[i].max()),
                     "ratio_min": float(vals[i].min() / ref), "ratio_max": float(vals[i].max() / ref)})
    q = 1 / (2 * t - 2)
    return rows, {"max_level": M.meta["max_level"], "truncated_nodes": M.meta["truncated_nodes"],
                  "weak_norm_q": q, "weak_norm": weak_norm(M, q)}


def run_bergman(cfg, dry=False):
    from scipy.special import hyp2f1
    from .grids import GridFunction
    from .operators import bergman_at
    _check_t(cfg["t"])
    _check_grid(cfg)
    radii = cfg["radii"]
    _need(len(radii) > 0 and all(0 <= r < 1 for r in radii), "radii must lie in [0, 1)")
    if dry:
        return None
    t = float(cfg["t"])
    grid = _grid(cfg)
    f = GridFunction.constant(grid)
    z = np.asarray(radii) * np.exp(2j * np.pi * 0.0371)
    K = bergman_at(t, f, z, check=False)
    Kp = bergman_at(t, f, z, positive=True, check=False)
    rho = grid.r_max
    rows = []
    for r, a, b in zip(radii, K, Kp):
        exact_p = rho**2 * hyp2f1(t, t, 2, (r * rho) ** 2)
        rows.append({"r": r, "K1_re": float(a.real), "K1_im": float(a.imag), "K1_exact": rho**2,
                     "Kpos1": float(b), "Kpos1_exact": float(exact_p),
                     "Kpos1_scaled": float(b * (1 - r * r) ** (2 * (t - 1)))})
    return rows, {"max_K1_error": float(np.max(np.abs(K - 1)))}


def run_dominate(cfg, dry=False):
    from .grids import GridFunction
    from .operators import bergman_matrix, sparse_domination_check
    from .dyadic import COMMON_BOX_CONSTANT
    _check_t(cfg["t"])
    _check_grid(cfg)
    _need(cfg["samples"] >= 0, "samples must be >= 0")
    _need(1 <= cfg["columns"] <= cfg["n_theta"], "columns must lie in 1..n_theta")
    _need(cfg["n_r"] * cfg["columns"] * cfg["n_r"] * cfg["n_theta"] <= 2**28, "evaluation too large; lower columns or grid")
    _check_seed(cfg, cfg["samples"] > 0)
    if dry:
        return None
    t = float(cfg["t"])
    grid = _grid(cfg)
    js = (np.arange(cfg["columns"]) * grid.n_theta) // cfg["columns"]
    nodes = (np.arange(grid.n_r)[:, None] * grid.n_theta + js[None, :]).ravel()
    K = bergman_matrix(t, grid.points[nodes], grid, positive=True)
    rows = [{"sample": "one", "sup_ratio": sparse_domination_check(t, GridFunction.constant(grid),
                                                                   nodes=nodes, kernel=K).sup_ratio}]
    rng = np.random.default_rng(cfg["seed"])
    for s in range(cfg["samples"]):
        f = GridFunction(grid, random_smooth_function(rng)(grid.points))
        rows.append({"sample": s, "sup_ratio": sparse_domination_check(t, f, nodes=nodes, kernel=K).sup_ratio})
    return rows, {"max_sup_ratio": max(r["sup_ratio"] for r in rows),
                  "bound": COMMON_BOX_CONSTANT ** t}


def run_weights(cfg, dry=False):
    from .weights import RadialWeight, endpoint_strong_condition, endpoint_weak_condition
    _check_t(cfg["t"])
    _need(cfg["K_max"] >= 4, "K_max must be >= 4")
    try:
        w = RadialWeight.parse(cfg["weight"])
    except (ValueError, OSError) as exc:
        raise ConfigError(f"weight: {exc}") from None
    if dry:
        return None
    t = float(cfg["t"])
    weak = endpoint_weak_condition(w, t, cfg["K_max"])
    strong = endpoint_strong_condition(w, t, cfg["K_max"])
    rows = [{"k": k, "a_k": float(a), "partial_sum": float(s)}
            for k, (a, s) in enumerate(zip(weak.terms, strong.partial_sums))]
    bb = strong.bekolle_bonami
    return rows, {"s": weak.s, "weak_verdict": str(weak.verdict), "weak_sup": weak.sup,
                  "strong_verdict": str(strong.verdict), "bekolle_bonami_l": bb.l,
                  "bekolle_bonami_constant": bb.constant, "bekolle_bonami_member": bb.member}


def blowup_row(m: int, t: float) -> dict:
    from .grids import CubeGrid, GridFunction
    from .norms import op_norm_corner
    from .operators import apply_sparse
    from .sparse import family_counterexample, to_native_normalization
    fam = family_counterexample(m)
    grid = CubeGrid(1, m + 1)
    out = apply_sparse(fam, t, GridFunction.constant(grid))
    region = grid.points[:, 0] < 0.5
    value = to_native_normalization(float(out.values[region].max()), fam, t)
    spread = float(np.ptp(out.values[region]))
    # L^inf -> L^1 mass scales like d^{n (2 - t)} under dilation by d
    mass = op_norm_corner(fam, t, (math.inf, 1)) * 2.0 ** (2 - t)
    return {"m": m, "value": value, "expected": 2 ** (m * (t - 1)) + 2 ** (1 - t),
            "lower_bound": 2 ** (m * (t - 1)), "spread": spread, "Linf_L1_mass": mass,
            "mass_lower_bound": 2 ** (m * (t - 1)) * 1.0}


def run_blowup(cfg, dry=False):
    _check_t(cfg["t"], upper=math.inf)
    m_min = cfg["m"] if cfg["m_min"] is None else cfg["m_min"]
    _need(1 <= m_min <= cfg["m"] <= 22, "need 1 <= m_min <= m <= 22")
    if dry:
        return None
    t = float(cfg["t"])
    rows = [blowup_row(m, t) for m in range(m_min, cfg["m"] + 1)]
    return rows, {"normalization": "root [0, 2)"}


def run_decompose(cfg, dry=False):
    from .grids import GridFunction
    from .operators import apply_maximal, boxes_node_mask, level_set_decomposition, resolvable_level
    _check_t(cfg["t"])
    _check_grid(cfg)
    _need(cfg["alpha"] > 0, "alpha must be positive")
    _need(cfg["system"] in ("standard", "shifted"), "system must be standard or shifted")
    _need(cfg["function"] in ("one", "random"), "function must be one or random")
    _check_seed(cfg, cfg["function"] == "random")
    if dry:
        return None
    t = float(cfg["t"])
    grid = _grid(cfg)
    if cfg["function"] == "one":
        f = GridFunction.constant(grid)
    else:
        f = GridFunction(grid, random_smooth_function(np.random.default_rng(cfg["seed"]))(grid.points))
    level = resolvable_level(grid, cfg["system"])
    boxes = level_set_decomposition(cfg["system"], t, f, cfg["alpha"], max_level=level)
    M = apply_maximal(cfg["system"], t, f, max_level=level)
    union = boxes_node_mask(boxes, grid)
    rows = [{"level": b.arc.level, "index": b.arc.index, "start": str(b.arc.start),
             "length": str(b.arc.length), "area": str(b.area)} for b in boxes]
    return rows, {"boxes": len(boxes), "max_level": level,
                  "matches_level_set": bool(np.array_equal(union, M.values > cfg["alpha"]))}


RUNNERS = {
    "region": run_region,
    "layer-norms": run_layer_norms,
    "bourgain": run_bourgain,
    "maximal": run_maximal,
    "bergman": run_bergman,
    "dominate": run_dominate,
    "weights": run_weights,
    "blowup": run_blowup,
    "decompose": run_decompose,
}


# output

def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def render(command: str, cfg: dict, rows: list, meta: dict, fmt: str, timestamp: bool = False) -> str:
    config = {"experiment": command, **_jsonable(cfg)}
    header = {"version": __version__}
    if timestamp:
        header["timestamp"] = datetime.now(timezone.utc).isoformat()
    if fmt == "json":
        doc = {"config": config, "results": _jsonable(rows), "metadata": {**header, **_jsonable(meta)}}
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    for k, v in sorted(header.items()):
        buf.write(f"# {k}={v}\n")
    for k, v in config.items():
        buf.write(f"# config.{k}={json.dumps(v)}\n")
    for k, v in sorted(_jsonable(meta).items()):
        buf.write(f"# meta.{k}={json.dumps(v, sort_keys=True)}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _csv_value(v) for k, v in r.items()})
    return buf.getvalue()


def _csv_value(v):
    if isinstance(v, float):
        return repr(v)
    return _jsonable(v)


def write_atomic(path: str, text: str):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypersingular", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, spec in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=spec["help"], description=spec["help"])
        p.add_argument("--config", help="key=value or JSON configuration file")
        p.add_argument("--format", choices=("csv", "json"), default=None, help="output format (default csv)")
        p.add_argument("--output", "-o", help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=None, help="seed for random sampling")
        p.add_argument("--dry-run", action="store_true", help="validate parameters and exit")
        p.add_argument("--timestamp", action="store_true", help="record a timestamp in the header")
        for key, (_, default, help_text) in spec["params"].items():
            flag = "--" + key.replace("_", "-")
            shown = "" if default is None else f" (default {default})"
            p.add_argument(flag, dest=key, default=None, help=help_text + shown)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _resolve(ns.command, ns)
        file_cfg = _load_config(ns.config) if ns.config else {}
        fmt = ns.format or file_cfg.get("format", "csv")
        _need(fmt in ("csv", "json"), "format must be csv or json")
        output = ns.output or file_cfg.get("output")
        if output:
            _need(os.path.isdir(os.path.dirname(os.path.abspath(output))),
                  f"output directory for {output} does not exist")
        runner = RUNNERS[ns.command]
        if ns.dry_run:
            runner(cfg, dry=True)
            print(f"{ns.command}: parameters valid", file=sys.stderr)
            return 0
        rows, meta = runner(cfg)
    except ConfigError as exc:
        print(f"hypersingular {ns.command}: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = render(ns.command, cfg, rows, meta, fmt, ns.timestamp)
    if output:
        write_atomic(output, text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end for predictions, optimizations, and experiments.

Subcommands wrap the library layers: ``tau``, ``predict``, ``law``,
``truncation-opt``, and ``shrink`` are thin JSON-emitting wrappers;
``simulate`` runs a Monte Carlo experiment described by a strict TOML
spec; ``binomial`` is a flag-driven shortcut for the binomial model;
``reproduce`` regenerates the bundled desk-scale figures.  Every output
file carries a provenance header (library version, spec hash, seed) and
is a pure function of the spec, so reruns are byte-identical.

Exit codes: 0 on success, 2 on validation errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError
from .measures import Gaussian, NoiseMeasure, cauchy, gaussian, gaussian_mixture
from .orthopoly import optimal_series_preprocessor
from .orthopoly import tau as series_tau
from .rmt import (
    mp_atom,
    mp_cdf,
    mp_cos_sq,
    mp_density,
    mp_edges,
    predict,
    predict_ell_star,
    semicircle_cdf,
    semicircle_density,
)
from .shrinkage import eta_star, rank_one_loss, t_squared
from .sim import ReplicateSpec, SpikeConfig, gen_signal, monte_carlo, observe, rng_for, svd_top
from .transforms import (
    Transform,
    heaviside_centered,
    identity,
    optimize_truncation,
    polynomial,
    relu_centered,
    score_transform,
    tau_trunc,
    truncate,
)

__all__ = ["main", "ExperimentSpec", "load_experiment", "run_experiment"]

_BIMODAL = dict(weights=(0.5, 0.5), means=(1.0, -1.0), scales=(0.5, 0.5))

_MODES = ("standard", "ell_star", "binomial", "truncation_sweep", "shrinkage")

_PALETTE = ("#1f6feb", "#d29922", "#2da44e", "#cf222e", "#8250df", "#57606a")


# ---------------------------------------------------------------------------
# measure / transform resolution

def resolve_measure(spec) -> NoiseMeasure:
    """Build a noise measure from a spec table or compact string.

    Accepted kinds: ``gaussian`` (mean, std), ``cauchy``, ``bimodal``
    (the two-component mixture at +-1 with scale 1/2), and
    ``gaussian_mixture`` (weights, means, scales).
    """
    if isinstance(spec, str):
        spec = _measure_from_string(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("measure spec must name a kind")
    kind = spec["kind"]
    extra = set(spec) - {"kind"}
    if kind == "gaussian":
        _reject_unknown(extra, {"mean", "std"}, "measure gaussian")
        return Gaussian(float(spec.get("mean", 0.0)), float(spec.get("std", 1.0)))
    if kind == "cauchy":
        _reject_unknown(extra, set(), "measure cauchy")
        return cauchy()
    if kind == "bimodal":
        _reject_unknown(extra, set(), "measure bimodal")
        return gaussian_mixture(**_BIMODAL)
    if kind == "gaussian_mixture":
        _reject_unknown(extra, {"weights", "means", "scales"}, "measure gaussian_mixture")
        try:
            return gaussian_mixture(spec["weights"], spec["means"], spec["scales"])
        except KeyError as missing:
            raise ValidationError(f"gaussian_mixture needs {missing.args[0]}") from None
    raise ValidationError(f"unknown measure kind {kind!r}")


def resolve_transform(spec, measure: NoiseMeasure) -> Transform:
    """Build a transform from a spec table or compact string.

    Accepted kinds: ``identity``, ``relu``, ``heaviside``,
    ``truncation`` (c), ``polynomial`` (coeffs), ``score`` (of the
    measure), ``optimal_series`` (degree).
    """
    if isinstance(spec, str):
        spec = _transform_from_string(spec)
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError("transform spec must name a kind")
    kind = spec["kind"]
    extra = set(spec) - {"kind"}
    if kind == "identity":
        _reject_unknown(extra, set(), "transform identity")
        return identity()
    if kind == "relu":
        _reject_unknown(extra, set(), "transform relu")
        return relu_centered()
    if kind == "heaviside":
        _reject_unknown(extra, set(), "transform heaviside")
        return heaviside_centered()
    if kind == "truncation":
        _reject_unknown(extra, {"c"}, "transform truncation")
        if "c" not in spec:
            raise ValidationError("transform truncation needs a level c")
        return truncate(float(spec["c"]))
    if kind == "polynomial":
        _reject_unknown(extra, {"coeffs"}, "transform polynomial")
        if "coeffs" not in spec:
            raise ValidationError("transform polynomial needs coeffs")
        return polynomial([float(c) for c in spec["coeffs"]])
    if kind == "score":
        _reject_unknown(extra, set(), "transform score")
        return score_transform(measure)
    if kind == "optimal_series":
        _reject_unknown(extra, {"degree"}, "transform optimal_series")
        return optimal_series_preprocessor(measure, int(spec.get("degree", 24)))
    raise ValidationError(f"unknown transform kind {kind!r}")


def _reject_unknown(extra: set, allowed: set, where: str) -> None:
    unknown = extra - allowed
    if unknown:
        raise ValidationError(f"{where}: unknown keys {sorted(unknown)}")


def _measure_from_string(text: str) -> dict:
    name, _, args = text.partition(":")
    if name == "gaussian" and args:
        parts = [float(v) for v in args.split(",")]
        if len(parts) != 2:
            raise ValidationError("gaussian:MEAN,STD takes exactly two numbers")
        return {"kind": "gaussian", "mean": parts[0], "std": parts[1]}
    if args:
        raise ValidationError(f"measure {name!r} takes no arguments")
    return {"kind": name}


def _transform_from_string(text: str) -> dict:
    name, _, args = text.partition(":")
    aliases = {"trunc": "truncation", "poly": "polynomial", "series": "optimal_series"}
    name = aliases.get(name, name)
    if name == "truncation":
        if not args:
            raise ValidationError("truncation transform needs a level, e.g. trunc:2.0")
        return {"kind": "truncation", "c": float(args)}
    if name == "polynomial":
        if not args:
            raise ValidationError("polynomial transform needs coefficients, e.g. poly:0,1,2")
        return {"kind": "polynomial", "coeffs": [float(v) for v in args.split(",")]}
    if name == "optimal_series":
        return {"kind": "optimal_series", "degree": int(args) if args else 24}
    if args:
        raise ValidationError(f"transform {name!r} takes no arguments")
    return {"kind": name}


# ---------------------------------------------------------------------------
# experiment specs

@dataclass(frozen=True)
class ExperimentSpec:
    """Validated description of one Monte Carlo experiment.

    ``mode`` selects the pipeline: "standard" (transform + theory
    overlay), "ell_star" (critical scaling, Hadamard alignment),
    "binomial" (m-trial counts), "truncation_sweep" (one variant per
    level in ``c_grid``), or "shrinkage" (loss of eta* against fixed
    alternatives).  Grids are seeds are explicit; nothing defaults to
    wall-clock state.
    """

    name: str
    mode: str
    setting: str
    gamma: float
    n_grid: tuple
    sigma_grid: tuple
    reps: int
    seed: int
    measure: dict
    transform: Optional[dict] = None
    m: Optional[int] = None
    c_grid: Optional[tuple] = None
    vector_scheme: str = "haar"
    degree: int = 24
    outputs: Optional[dict] = None

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ValidationError("experiment needs a nonempty name")
        if self.mode not in _MODES:
            raise ValidationError(f"mode must be one of {', '.join(_MODES)}")
        if self.setting not in ("asymmetric", "symmetric"):
            raise ValidationError("setting must be asymmetric or symmetric")
        if self.mode in ("binomial", "ell_star", "shrinkage") and self.setting != "asymmetric":
            raise ValidationError(f"mode {self.mode} is defined in the asymmetric setting")
        if not (0 < float(self.gamma) < math.inf):
            raise ValidationError("gamma must be a positive real")
        if self.setting == "symmetric" and abs(self.gamma - 1.0) > 1e-12:
            raise ValidationError("symmetric setting requires gamma = 1")
        n_grid = tuple(int(n) for n in self.n_grid)
        sigma_grid = tuple(float(s) for s in self.sigma_grid)
        object.__setattr__(self, "n_grid", n_grid)
        object.__setattr__(self, "sigma_grid", sigma_grid)
        if not (1 <= len(n_grid) <= 64) or any(n < 4 for n in n_grid):
            raise ValidationError("n_grid must hold 1..64 sizes, each >= 4")
        if not (1 <= len(sigma_grid) <= 1024) or any(s <= 0 for s in sigma_grid):
            raise ValidationError("sigma_grid must hold 1..1024 positive strengths")
        if not (isinstance(self.reps, int) and self.reps >= 1):
            raise ValidationError("reps must be an integer >= 1")
        if not (isinstance(self.seed, int) and self.seed >= 0):
            raise ValidationError("seed must be a nonnegative integer (no clock defaults)")
        if self.mode == "binomial":
            if self.transform is not None:
                raise ValidationError("binomial mode fixes its own transform; remove [transform]")
            if not (isinstance(self.m, int) and self.m >= 1):
                raise ValidationError("binomial mode needs integer m >= 1")
        elif self.m is not None:
            raise ValidationError("m is only meaningful in binomial mode")
        if self.mode == "truncation_sweep":
            if self.transform is not None:
                raise ValidationError("truncation_sweep builds its transforms; remove [transform]")
            if self.c_grid is None:
                raise ValidationError("truncation_sweep needs c_grid")
            c_grid = tuple(float(c) for c in self.c_grid)
            object.__setattr__(self, "c_grid", c_grid)
            if not (1 <= len(c_grid) <= 16) or any(c <= 0 for c in c_grid):
                raise ValidationError("c_grid must hold 1..16 positive levels")
        elif self.c_grid is not None:
            raise ValidationError("c_grid is only meaningful in truncation_sweep mode")
        if self.mode in ("standard", "ell_star", "shrinkage") and self.transform is None:
            raise ValidationError(f"mode {self.mode} needs a [transform] table")
        if self.vector_scheme not in ("haar", "iid_normal_normalized"):
            raise ValidationError("vector_scheme must be haar or iid_normal_normalized")
        if self.mode == "ell_star" and self.vector_scheme != "iid_normal_normalized":
            raise ValidationError(
                "ell_star mode needs vector_scheme iid_normal_normalized "
                "(Hadamard moments of haar frames are not controlled)"
            )
        if not (2 <= int(self.degree) <= 256):
            raise ValidationError("degree must lie in [2, 256]")
        outs = dict(self.outputs or {})
        _reject_unknown(set(outs), {"csv", "json", "svg"}, "outputs")
        outs.setdefault("csv", f"{self.name}.csv")
        outs.setdefault("json", f"{self.name}.json")
        object.__setattr__(self, "outputs", outs)

    def canonical(self) -> dict:
        """Hash-stable dict of everything that determines the numbers."""
        return {
            "name": self.name,
            "mode": self.mode,
            "setting": self.setting,
            "gamma": float(self.gamma),
            "n_grid": list(self.n_grid),
            "sigma_grid": list(self.sigma_grid),
            "reps": self.reps,
            "seed": self.seed,
            "measure": self.measure,
            "transform": self.transform,
            "m": self.m,
            "c_grid": list(self.c_grid) if self.c_grid is not None else None,
            "vector_scheme": self.vector_scheme,
            "degree": self.degree,
        }

    def sha256(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


_TOP_KEYS = {
    "name",
    "mode",
    "setting",
    "gamma",
    "n_grid",
    "sigma_grid",
    "reps",
    "seed",
    "degree",
    "vector_scheme",
    "m",
    "c_grid",
    "measure",
    "transform",
    "outputs",
}


def load_experiment(path: str) -> ExperimentSpec:
    """Parse and validate a TOML experiment spec; unknown keys are errors."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"spec file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"malformed TOML in {path}: {exc}") from None
    _reject_unknown(set(raw), _TOP_KEYS, "experiment spec")
    missing = {"name", "mode", "gamma", "sigma_grid", "reps", "seed", "measure"} - set(raw)
    if missing:
        raise ValidationError(f"experiment spec is missing {sorted(missing)}")
    return ExperimentSpec(
        name=raw["name"],
        mode=raw["mode"],
        setting=raw.get("setting", "asymmetric"),
        gamma=raw["gamma"],
        n_grid=raw.get("n_grid", [2000]),
        sigma_grid=raw["sigma_grid"],
        reps=raw["reps"],
        seed=raw["seed"],
        measure=raw["measure"],
        transform=raw.get("transform"),
        m=raw.get("m"),
        c_grid=raw.get("c_grid"),
        vector_scheme=raw.get(
            "vector_scheme",
            "iid_normal_normalized" if raw["mode"] == "ell_star" else "haar",
        ),
        degree=raw.get("degree", 24),
        outputs=raw.get("outputs"),
    )


# ---------------------------------------------------------------------------
# experiment engine

def _gaussian_even_moment(ell: int) -> float:
    """(2*ell)-th standard normal moment, the iid-scheme Hadamard limit."""
    return float(math.factorial(2 * ell) // (2**ell * math.factorial(ell)))


def _point_seed(base: int, vi: int, ni: int, si: int) -> int:
    # injective for vi < 16, ni < 64, si < 1024 (enforced by spec caps)
    return (base << 20) | (vi << 16) | (ni << 10) | si


@dataclass(frozen=True)
class _Variant:
    label: str
    transform: Optional[Transform]
    tau: float
    noise_norm: float
    c: Optional[float] = None
    ell_star: Optional[int] = None
    tau_report: Optional[object] = None


def _variants_for(exp: ExperimentSpec, measure: NoiseMeasure) -> list:
    if exp.mode == "binomial":
        return [_Variant(label=f"binomial(m={exp.m})", transform=None, tau=0.5, noise_norm=1.0)]
    if exp.mode == "truncation_sweep":
        out = []
        for c in exp.c_grid:
            rep = tau_trunc(measure, c)
            out.append(
                _Variant(
                    label=f"c={c:g}",
                    transform=truncate(c),
                    tau=rep.tau_c,
                    noise_norm=math.sqrt(rep.var_fc),
                    c=c,
                )
            )
        return out
    spec = exp.transform
    if isinstance(spec, str):
        spec = _transform_from_string(spec)
    transform = resolve_transform(spec, measure)
    label = spec["kind"]
    if spec.get("kind") == "truncation":
        rep = tau_trunc(measure, float(spec["c"]))
        return [
            _Variant(
                label=label,
                transform=transform,
                tau=rep.tau_c,
                noise_norm=math.sqrt(rep.var_fc),
            )
        ]
    rep = series_tau(transform, measure, K=exp.degree)
    if exp.mode == "ell_star":
        if rep.ell_star is None or rep.ell_star < 2:
            raise ValidationError(
                "ell_star mode needs a transform whose first nonvanishing "
                "order is >= 2; use standard mode instead"
            )
        return [
            _Variant(
                label=label,
                transform=transform,
                tau=rep.tau,
                noise_norm=rep.f_norm,
                ell_star=rep.ell_star,
                tau_report=rep,
            )
        ]
    return [_Variant(label=label, transform=transform, tau=rep.tau, noise_norm=rep.f_norm)]


def _theory_point(exp: ExperimentSpec, var: _Variant, sigma: float) -> dict:
    if var.ell_star is not None:
        moment = _gaussian_even_moment(var.ell_star)
        pred = predict_ell_star(var.tau_report, exp.gamma, sigma, moment, moment)
        spike = pred.spikes[0]
        return {
            "outlier": math.sqrt(spike.location),
            "hadamard_left_sq": spike.cos_left_sq,
            "hadamard_right_sq": spike.cos_right_sq,
        }
    pred = predict(var.tau, exp.gamma, [sigma], setting=exp.setting)
    spike = pred.spikes[0]
    outlier = spike.location if exp.setting == "symmetric" else math.sqrt(spike.location)
    return {
        "outlier": outlier,
        "cos_left_sq": spike.cos_left_sq,
        "cos_right_sq": spike.cos_right_sq,
    }


_FIELDS = {
    "standard": (
        "variant",
        "n",
        "sigma",
        "mean_outlier",
        "se_outlier",
        "mean_cos_left_sq",
        "se_cos_left_sq",
        "mean_cos_right_sq",
        "se_cos_right_sq",
        "theory_outlier",
        "theory_cos_left_sq",
        "theory_cos_right_sq",
    ),
    "binomial": (
        "variant",
        "n",
        "sigma",
        "mean_outlier",
        "se_outlier",
        "mean_cos_left_sq",
        "se_cos_left_sq",
        "mean_cos_right_sq",
        "se_cos_right_sq",
        "mean_esd_ks",
        "max_esd_ks",
        "theory_outlier",
        "theory_cos_left_sq",
        "theory_cos_right_sq",
    ),
    "ell_star": (
        "variant",
        "n",
        "sigma",
        "mean_outlier",
        "se_outlier",
        "mean_hadamard_left_sq",
        "se_hadamard_left_sq",
        "mean_hadamard_right_sq",
        "se_hadamard_right_sq",
        "theory_outlier",
        "theory_hadamard_left_sq",
        "theory_hadamard_right_sq",
    ),
    "shrinkage": (
        "variant",
        "n",
        "sigma",
        "theta",
        "mean_loss_eta_star",
        "se_loss_eta_star",
        "mean_loss_raw",
        "se_loss_raw",
        "mean_loss_hard",
        "se_loss_hard",
    ),
}
_FIELDS["truncation_sweep"] = ("c", "tau_c") + _FIELDS["standard"]


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size < 2:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def _shrinkage_point(
    exp: ExperimentSpec, var: _Variant, n: int, p: int, sigma: float, seed: int
) -> dict:
    theta = abs(var.tau) * sigma
    edge = 1.0 + math.sqrt(exp.gamma)
    losses = {"eta_star": [], "raw": [], "hard": []}
    for rep_idx in range(exp.reps):
        rng = rng_for(seed, rep_idx)
        config = SpikeConfig(
            n=n, p=p, sigmas=(sigma,), setting="asymmetric",
            vector_scheme=exp.vector_scheme, seed=seed,
        )
        signal = gen_signal(config, rng)
        Y = observe(signal, resolve_measure(exp.measure), var.transform, config, rng)
        Yn = np.asarray(Y, dtype=float) / var.noise_norm
        s, U, V = svd_top(Yn, 1)
        u, v = U[:, 0], V[:, 0]
        us, vs = signal.U[:, 0], signal.V[:, 0]
        alphas = {
            "eta_star": eta_star(s[0], exp.gamma),
            "raw": float(s[0]),
            "hard": float(s[0]) if s[0] > edge else 0.0,
        }
        for key, alpha in alphas.items():
            losses[key].append(rank_one_loss(alpha, u, v, theta, us, vs))
    row = {"theta": theta}
    for key in ("eta_star", "raw", "hard"):
        mean, se = _mean_se(np.array(losses[key]))
        row[f"mean_loss_{key}"] = mean
        row[f"se_loss_{key}"] = se
    return row


def run_experiment(exp: ExperimentSpec, jobs: int = 1, log: Optional[Callable] = None) -> dict:
    """Run every grid point of ``exp`` and return the summary document.

    The summary carries provenance (version, spec hash, seed), one
    per-variant theory record, and one flat row per
    (variant, n, sigma) grid point; ``_FIELDS[exp.mode]`` fixes the CSV
    column order.  A replicate failure aborts the whole run, naming the
    grid point and its config seed.
    """
    measure = resolve_measure(exp.measure)
    variants = _variants_for(exp, measure)
    say = log or (lambda msg: None)
    rows = []
    curves = []
    for vi, var in enumerate(variants):
        for ni, n in enumerate(exp.n_grid):
            p = n if exp.setting == "symmetric" else max(2, int(round(exp.gamma * n)))
            for si, sigma in enumerate(exp.sigma_grid):
                seed_point = _point_seed(exp.seed, vi, ni, si)
                row = {"variant": var.label, "n": n, "sigma": sigma}
                if exp.mode == "truncation_sweep":
                    row["c"] = var.c
                    row["tau_c"] = var.tau
                if exp.mode == "shrinkage":
                    try:
                        row.update(_shrinkage_point(exp, var, n, p, sigma, seed_point))
                    except (ValidationError, NumericalError) as exc:
                        raise type(exc)(
                            f"replicate failed at {var.label}, n={n}, sigma={sigma:g} "
                            f"(config seed {seed_point}): {exc}"
                        ) from exc
                else:
                    row.update(
                        _simulation_point(exp, var, measure, n, p, sigma, seed_point, jobs)
                    )
                    for key, val in _theory_point(exp, var, sigma).items():
                        row[f"theory_{key}"] = val
                rows.append(row)
                say(f"{exp.name}: {var.label} n={n} sigma={sigma:g} done")
        if exp.mode != "shrinkage":
            lo, hi = min(exp.sigma_grid), max(exp.sigma_grid)
            xs = np.linspace(lo, hi, 200)
            ys = [_theory_point(exp, var, float(x)) for x in xs]
            curves.append({"variant": var.label, "sigma": xs.tolist(), "theory": ys})
    summary = {
        "version": __version__,
        "spec_sha256": exp.sha256(),
        "spec": exp.canonical(),
        "name": exp.name,
        "mode": exp.mode,
        "setting": exp.setting,
        "gamma": float(exp.gamma),
        "seed": exp.seed,
        "reps": exp.reps,
        "variants": [
            {
                "label": v.label,
                "tau": v.tau,
                "noise_norm": v.noise_norm,
                "ell_star": v.ell_star,
                "threshold_sigma": _threshold_sigma(exp, v),
            }
            for v in variants
        ],
        "fieldnames": list(_FIELDS[exp.mode]),
        "rows": rows,
    }
    summary["_curves"] = curves  # stripped before serialization
    return summary


def _threshold_sigma(exp: ExperimentSpec, var: _Variant) -> float:
    crit = exp.gamma**0.25 if exp.setting == "asymmetric" else 1.0
    if var.ell_star is not None:
        moment = _gaussian_even_moment(var.ell_star)
        tau_ell = abs(var.tau_report.tau_ell[var.ell_star - 1])
        tt = tau_ell * moment / (
            math.factorial(var.ell_star) * exp.gamma ** ((var.ell_star - 1) / 2.0)
        )
        return (crit / tt) ** (1.0 / var.ell_star) if tt > 0 else math.inf
    return crit / abs(var.tau) if var.tau != 0 else math.inf


def _simulation_point(
    exp: ExperimentSpec,
    var: _Variant,
    measure: NoiseMeasure,
    n: int,
    p: int,
    sigma: float,
    seed_point: int,
    jobs: int,
) -> dict:
    if var.ell_star is not None:
        scaling = 1.0 - 1.0 / (2.0 * var.ell_star)
    else:
        scaling = 0.5
    config = SpikeConfig(
        n=n,
        p=p,
        sigmas=(sigma,),
        setting=exp.setting,
        vector_scheme=exp.vector_scheme,
        scaling_exponent=scaling,
        seed=seed_point,
    )
    spec = ReplicateSpec(
        config=config,
        measure=measure,
        transform=var.transform,
        mode="binomial" if exp.mode == "binomial" else "transform",
        m=exp.m if exp.mode == "binomial" else 1,
        noise_norm=var.noise_norm,
        tau_sign=-1 if var.tau < 0 else 1,
        want_esd=exp.mode == "binomial",
        hadamard_ell=var.ell_star,
    )
    try:
        mc = monte_carlo(spec, exp.reps, jobs=jobs)
    except (ValidationError, NumericalError) as exc:
        raise type(exc)(
            f"replicate failed at {var.label}, n={n}, sigma={sigma:g} "
            f"(config seed {seed_point}): {exc}"
        ) from exc
    out = {}
    sv = mc.stack("top_singular_values")[:, 0]
    out["mean_outlier"], out["se_outlier"] = _mean_se(sv)
    if var.ell_star is not None:
        for side in ("left", "right"):
            mean, se = _mean_se(mc.stack(f"hadamard_{side}_sq"))
            out[f"mean_hadamard_{side}_sq"] = mean
            out[f"se_hadamard_{side}_sq"] = se
        return out
    for side in ("left", "right"):
        mean, se = _mean_se(mc.stack(f"cos_{side}_sq")[:, 0, 0])
        out[f"mean_cos_{side}_sq"] = mean
        out[f"se_cos_{side}_sq"] = se
    if exp.mode == "binomial":
        ks = mc.stack("esd_ks")
        out["mean_esd_ks"] = float(ks.mean())
        out["max_esd_ks"] = float(ks.max())
    return out


# ---------------------------------------------------------------------------
# output writers

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        # labels are plain identifiers; keep rows trivially comma-splittable
        return value.replace(",", ";")
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.10g}"


def _out_path(name: str, out_dir: Optional[str]) -> str:
    if os.path.isabs(name):
        return name
    base = out_dir or os.environ.get("SPIKETX_OUTPUT_DIR") or "."
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, name)


def write_csv(path: str, meta: dict, fieldnames: list, rows: list) -> None:
    """CSV with a deterministic provenance comment header."""
    lines = [
        f"# spiketx {meta['version']}",
        f"# spec-sha256: {meta['spec_sha256']}",
        f"# seed: {meta['seed']}",
        ",".join(fieldnames),
    ]
    for row in rows:
        lines.append(",".join(_fmt(row.get(k)) for k in fieldnames))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path: str, document: dict) -> None:
    document = {k: v for k, v in document.items() if not k.startswith("_")}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _svg_series_for(summary: dict) -> tuple[str, list, list]:
    """Pick the plotted metric and assemble (ylabel, curves, points)."""
    mode = summary["mode"]
    if mode == "shrinkage":
        metrics = [("mean_loss_eta_star", "se_loss_eta_star", "eta*"),
                   ("mean_loss_raw", "se_loss_raw", "raw"),
                   ("mean_loss_hard", "se_loss_hard", "hard")]
        points = []
        for mean_key, se_key, label in metrics:
            for variant in {r["variant"] for r in summary["rows"]}:
                rows = [r for r in summary["rows"] if r["variant"] == variant]
                points.append(
                    {
                        "label": f"{label}" if len(summary["variants"]) == 1 else f"{variant} {label}",
                        "x": [r["sigma"] for r in rows],
                        "y": [r[mean_key] for r in rows],
                        "se": [r[se_key] for r in rows],
                    }
                )
        return "operator-norm loss", [], points
    if mode == "ell_star":
        mean_keys = ("mean_hadamard_left_sq", "mean_hadamard_right_sq")
        se_keys = ("se_hadamard_left_sq", "se_hadamard_right_sq")
        theory_keys = ("hadamard_left_sq", "hadamard_right_sq")
        ylabel = "squared Hadamard alignment"
    else:
        mean_keys = ("mean_cos_left_sq", "mean_cos_right_sq")
        se_keys = ("se_cos_left_sq", "se_cos_right_sq")
        theory_keys = ("cos_left_sq", "cos_right_sq")
        ylabel = "squared cosine"
    sides = ("left", "right")
    multi = len(summary["variants"]) > 1
    curves, points = [], []
    for curve in summary.get("_curves", ()):
        for theory_key, side in zip(theory_keys, sides):
            label = f"{curve['variant']} {side}" if multi else f"theory {side}"
            curves.append(
                {
                    "label": label,
                    "x": curve["sigma"],
                    "y": [t[theory_key] for t in curve["theory"]],
                }
            )
    for variant in [v["label"] for v in summary["variants"]]:
        rows = [r for r in summary["rows"] if r["variant"] == variant]
        for mean_key, se_key, side in zip(mean_keys, se_keys, sides):
            points.append(
                {
                    "label": f"{variant} {side}" if multi else f"simulated {side}",
                    "x": [r["sigma"] for r in rows],
                    "y": [r[mean_key] for r in rows],
                    "se": [r[se_key] for r in rows],
                }
            )
    return ylabel, curves, points


def write_svg(
    path: str,
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    curves: list,
    points: list,
) -> None:
    """Minimal deterministic SVG: theory polylines plus mean +- se points."""
    width, height = 640, 440
    left, right, top, bottom = 64.0, 16.0, 40.0, 52.0
    xs_all = [x for s in curves + points for x in s["x"]]
    ys_all = [y for s in curves + points for y in s["y"]]
    for s in points:
        ys_all.extend(y + e for y, e in zip(s["y"], s["se"]))
        ys_all.extend(y - e for y, e in zip(s["y"], s["se"]))
    if not xs_all or not ys_all:
        raise ValidationError("write_svg: nothing to plot")
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi - x_lo < 1e-12:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad_y = 0.06 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad_y, y_hi + pad_y

    def px(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y: float) -> float:
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    def num(v: float) -> str:
        return f"{v:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{num(left)}" y="{num(top)}" width="{num(width - left - right)}" '
        f'height="{num(height - top - bottom)}" fill="none" stroke="#444"/>',
        f'<text x="{num(width / 2)}" y="22" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{num(width / 2)}" y="{num(height - 12)}" text-anchor="middle">{xlabel}</text>',
        f'<text x="16" y="{num(height / 2)}" text-anchor="middle" '
        f'transform="rotate(-90 16 {num(height / 2)})">{ylabel}</text>',
    ]
    for i in range(5):
        fx = x_lo + i * (x_hi - x_lo) / 4
        fy = y_lo + i * (y_hi - y_lo) / 4
        parts.append(
            f'<line x1="{num(px(fx))}" y1="{num(height - bottom)}" x2="{num(px(fx))}" '
            f'y2="{num(height - bottom + 4)}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{num(px(fx))}" y="{num(height - bottom + 18)}" '
            f'text-anchor="middle">{fx:.3g}</text>'
        )
        parts.append(
            f'<line x1="{num(left - 4)}" y1="{num(py(fy))}" x2="{num(left)}" '
            f'y2="{num(py(fy))}" stroke="#444"/>'
        )
        parts.append(
            f'<text x="{num(left - 8)}" y="{num(py(fy) + 4)}" text-anchor="end">{fy:.3g}</text>'
        )
    legend_y = top + 14
    for idx, series in enumerate(curves):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{num(px(x))},{num(py(y))}" for x, y in zip(series["x"], series["y"]))
        parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<line x1="{num(width - 190)}" y1="{num(legend_y)}" x2="{num(width - 170)}" '
            f'y2="{num(legend_y)}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{num(width - 164)}" y="{num(legend_y + 4)}">{series["label"]}</text>')
        legend_y += 16
    for idx, series in enumerate(points):
        color = _PALETTE[idx % len(_PALETTE)]
        for x, y, se in zip(series["x"], series["y"], series["se"]):
            if se > 0:
                parts.append(
                    f'<line x1="{num(px(x))}" y1="{num(py(y - se))}" x2="{num(px(x))}" '
                    f'y2="{num(py(y + se))}" stroke="{color}"/>'
                )
            parts.append(f'<circle cx="{num(px(x))}" cy="{num(py(y))}" r="3" fill="{color}"/>')
        parts.append(
            f'<circle cx="{num(width - 185)}" cy="{num(legend_y)}" r="3" fill="{color}"/>'
        )
        parts.append(f'<text x="{num(width - 164)}" y="{num(legend_y + 4)}">{series["label"]}</text>')
        legend_y += 16
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def _emit_experiment(summary: dict, out_dir: Optional[str], outputs: dict) -> list:
    written = []
    meta = {
        "version": summary["version"],
        "spec_sha256": summary["spec_sha256"],
        "seed": summary["seed"],
    }
    csv_path = _out_path(outputs["csv"], out_dir)
    write_csv(csv_path, meta, summary["fieldnames"], summary["rows"])
    written.append(csv_path)
    json_path = _out_path(outputs["json"], out_dir)
    write_json(json_path, summary)
    written.append(json_path)
    if outputs.get("svg"):
        ylabel, curves, points = _svg_series_for(summary)
        svg_path = _out_path(outputs["svg"], out_dir)
        write_svg(
            svg_path,
            title=summary["name"],
            xlabel="spike strength sigma",
            ylabel=ylabel,
            curves=curves,
            points=points,
        )
        written.append(svg_path)
    return written


# ---------------------------------------------------------------------------
# figure registry (desk-scale reproductions)

def _merge_summaries(name: str, seed: int, parts: list) -> dict:
    merged = dict(parts[0])
    merged["name"] = name
    merged["seed"] = seed
    merged["spec"] = [p["spec"] for p in parts]
    blob = json.dumps(merged["spec"], sort_keys=True).encode()
    merged["spec_sha256"] = hashlib.sha256(blob).hexdigest()
    merged["variants"] = [v for p in parts for v in p["variants"]]
    merged["rows"] = [r for p in parts for r in p["rows"]]
    merged["_curves"] = [c for p in parts for c in p.get("_curves", ())]
    return merged


def _fig1(side: str, n: int, reps: int, seed: int) -> ExperimentSpec:
    m = 2 if side == "left" else max(1, int(math.isqrt(n)))
    return ExperimentSpec(
        name=f"fig1-{side}",
        mode="binomial",
        setting="asymmetric",
        gamma=0.5,
        n_grid=[n],
        sigma_grid=[0.5, 0.9, 1.3, 1.7, 2.1, 2.5, 2.9, 3.3],
        reps=reps,
        seed=seed,
        measure={"kind": "gaussian"},
        m=m,
        outputs={"csv": f"fig1-{side}.csv", "json": f"fig1-{side}.json", "svg": f"fig1-{side}.svg"},
    )


def _fig2_left_parts(n: int, reps: int, seed: int) -> list:
    shared = dict(
        mode="standard",
        setting="symmetric",
        gamma=1.0,
        n_grid=[n],
        sigma_grid=[0.3, 0.55, 0.8, 1.05, 1.3, 1.55, 1.8, 2.1],
        reps=reps,
        seed=seed,
        measure={"kind": "bimodal"},
        degree=60,
    )
    return [
        ExperimentSpec(name="fig2-left-raw", transform={"kind": "identity"}, **shared),
        ExperimentSpec(name="fig2-left-score", transform={"kind": "score"}, **shared),
    ]


def _fig2_right(n: int, reps: int, seed: int) -> ExperimentSpec:
    return ExperimentSpec(
        name="fig2-right",
        mode="standard",
        setting="asymmetric",
        gamma=0.5,
        n_grid=[n],
        sigma_grid=[0.4, 0.65, 0.9, 1.15, 1.4, 1.75, 2.1, 2.4],
        reps=reps,
        seed=seed,
        measure={"kind": "gaussian"},
        transform={"kind": "relu"},
        outputs={"csv": "fig2-right.csv", "json": "fig2-right.json", "svg": "fig2-right.svg"},
    )


def _fig3_left(n: int, reps: int, seed: int) -> ExperimentSpec:
    c_star = optimize_truncation(cauchy(), (0.1, 20.0)).c_star
    return ExperimentSpec(
        name="fig3-left",
        mode="truncation_sweep",
        setting="asymmetric",
        gamma=0.5,
        n_grid=[n],
        sigma_grid=[0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
        reps=reps,
        seed=seed,
        measure={"kind": "cauchy"},
        c_grid=[round(c_star, 6), 1.0],
        outputs={"csv": "fig3-left.csv", "json": "fig3-left.json", "svg": "fig3-left.svg"},
    )


def _reproduce_fig3_right(out_dir: Optional[str], seed: int) -> list:
    cs = np.geomspace(0.1, 20.0, 241)
    measure = cauchy()
    rows = [{"c": float(c), "tau_c": tau_trunc(measure, float(c)).tau_c} for c in cs]
    best = optimize_truncation(measure, (0.1, 20.0))
    document = {
        "version": __version__,
        "name": "fig3-right",
        "seed": seed,
        "c_star": best.c_star,
        "tau_at_c_star": best.tau_at_c_star,
        "fieldnames": ["c", "tau_c"],
        "rows": rows,
    }
    blob = json.dumps({"figure": "fig3-right", "c_grid": [r["c"] for r in rows]},
                      sort_keys=True).encode()
    document["spec_sha256"] = hashlib.sha256(blob).hexdigest()
    meta = {"version": __version__, "spec_sha256": document["spec_sha256"], "seed": seed}
    written = []
    csv_path = _out_path("fig3-right.csv", out_dir)
    write_csv(csv_path, meta, ["c", "tau_c"], rows)
    written.append(csv_path)
    json_path = _out_path("fig3-right.json", out_dir)
    write_json(json_path, document)
    written.append(json_path)
    svg_path = _out_path("fig3-right.svg", out_dir)
    write_svg(
        svg_path,
        title="fig3-right",
        xlabel="truncation level c",
        ylabel="effective SNR tau(f_c)",
        curves=[{"label": "tau(f_c)", "x": [r["c"] for r in rows], "y": [r["tau_c"] for r in rows]}],
        points=[{"label": "c*", "x": [best.c_star], "y": [best.tau_at_c_star], "se": [0.0]}],
    )
    written.append(svg_path)
    return written


_FIGURES = {
    "fig1-left": "binomial counts, m = 2, gamma = 1/2: cosines against c(sigma/2) theory",
    "fig1-right": "binomial counts, m = floor(sqrt(n)): same theory curves as m = 2",
    "fig2-left": "symmetric bimodal noise: raw PCA vs score-transformed PCA",
    "fig2-right": "centered ReLU under Gaussian noise, gamma = 1/2: lifted threshold",
    "fig3-left": "Cauchy noise truncated at c* and at 1: truncation rescues PCA",
    "fig3-right": "effective SNR of truncation under Cauchy noise, maximized at c*",
}

_FIG_DEFAULT_N = {
    "fig1-left": 2000,
    "fig1-right": 2000,
    "fig2-left": 1200,
    "fig2-right": 2000,
    "fig3-left": 2000,
    "fig3-right": 0,
}


# ---------------------------------------------------------------------------
# subcommands

def _print(document: dict) -> None:
    sys.stdout.write(json.dumps(document, sort_keys=True, indent=2) + "\n")


def cmd_tau(args: argparse.Namespace) -> int:
    measure = resolve_measure(args.measure)
    transform = resolve_transform(args.transform, measure)
    report = series_tau(
        transform, measure, K=args.degree, L=args.orders, auto_center=args.auto_center
    )
    document = {
        "version": __version__,
        "measure": args.measure,
        "transform": args.transform,
        "tau": report.tau,
        "tau_ell": list(report.tau_ell),
        "ell_star": report.ell_star,
        "K_used": report.K_used,
        "tail_bound": report.tail_bound,
        "f_norm": report.f_norm,
        "a0": report.a0,
        "warnings": list(report.warnings),
    }
    _print(document)
    if args.json:
        write_json(_out_path(args.json, args.out_dir), document)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    sigmas = _parse_floats(args.sigma, "sigma")
    pred = predict(args.tau, args.gamma, sigmas, setting=args.setting)
    document = {
        "version": __version__,
        "gamma": pred.gamma,
        "setting": pred.setting,
        "tau_effective": pred.tau_effective,
        "threshold_sigma": pred.threshold_sigma,
        "bulk_edge": pred.bulk_edge,
        "ell_star": pred.ell_star,
        "note": pred.note,
        "spikes": [
            {
                "sigma": s.sigma,
                "effective_snr": s.effective_snr,
                "supercritical": s.supercritical,
                "location": s.location,
                "cos_left_sq": s.cos_left_sq,
                "cos_right_sq": s.cos_right_sq,
            }
            for s in pred.spikes
        ],
    }
    _print(document)
    if args.json:
        write_json(_out_path(args.json, args.out_dir), document)
    return 0


def cmd_law(args: argparse.Namespace) -> int:
    if args.law == "marchenko-pastur":
        lower, upper = mp_edges(args.gamma)
        xs = np.linspace(lower, upper, args.points)
        rows = [
            {
                "x": float(x),
                "density": float(mp_density(x, args.gamma)),
                "cdf": float(mp_cdf(x, args.gamma)),
            }
            for x in xs
        ]
        atom = mp_atom(args.gamma)
    else:
        xs = np.linspace(-2.0, 2.0, args.points)
        rows = [
            {
                "x": float(x),
                "density": float(semicircle_density(x)),
                "cdf": float(semicircle_cdf(x)),
            }
            for x in xs
        ]
        atom = 0.0
    blob = json.dumps(
        {"law": args.law, "gamma": args.gamma, "points": args.points}, sort_keys=True
    ).encode()
    sha = hashlib.sha256(blob).hexdigest()
    document = {
        "version": __version__,
        "law": args.law,
        "gamma": args.gamma,
        "points": args.points,
        "atom_at_zero": atom,
        "support": [rows[0]["x"], rows[-1]["x"]],
        "spec_sha256": sha,
    }
    _print(document)
    if args.csv:
        meta = {"version": __version__, "spec_sha256": sha, "seed": 0}
        write_csv(_out_path(args.csv, args.out_dir), meta, ["x", "density", "cdf"], rows)
    return 0


def cmd_truncation_opt(args: argparse.Namespace) -> int:
    measure = resolve_measure(args.measure)
    report = optimize_truncation(
        measure, (args.lo, args.hi), grid_points=args.grid_points, tol=args.tol
    )
    document = {
        "version": __version__,
        "measure": args.measure,
        "bracket": [args.lo, args.hi],
        "c": report.c,
        "tau_c": report.tau_c,
        "var_fc": report.var_fc,
        "c_star": report.c_star,
        "tau_at_c_star": report.tau_at_c_star,
        "warnings": list(report.warnings),
    }
    _print(document)
    if args.json:
        write_json(_out_path(args.json, args.out_dir), document)
    return 0


def cmd_shrink(args: argparse.Namespace) -> int:
    values = _parse_floats(args.values, "values")
    arr = np.asarray(values, dtype=float)
    if args.rule == "eta_star":
        shrunk = np.atleast_1d(eta_star(arr, args.gamma))
    elif args.rule == "hard":
        level = args.level if args.level is not None else 1.0 + math.sqrt(args.gamma)
        shrunk = np.where(arr > level, arr, 0.0)
    else:
        shrunk = arr.copy()
    document = {
        "version": __version__,
        "gamma": args.gamma,
        "rule": args.rule,
        "level": args.level,
        "bulk_edge": 1.0 + math.sqrt(args.gamma),
        "input": values,
        "t_squared": list(np.atleast_1d(t_squared(arr, args.gamma))),
        "output": [float(v) for v in shrunk],
    }
    _print(document)
    if args.json:
        write_json(_out_path(args.json, args.out_dir), document)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    exp = load_experiment(args.spec)
    summary = run_experiment(exp, jobs=args.jobs, log=_stderr)
    for path in _emit_experiment(summary, args.out_dir, exp.outputs):
        sys.stdout.write(f"wrote {path}\n")
    return 0


def cmd_binomial(args: argparse.Namespace) -> int:
    exp = ExperimentSpec(
        name=args.name,
        mode="binomial",
        setting="asymmetric",
        gamma=args.gamma,
        n_grid=[args.n],
        sigma_grid=_parse_floats(args.sigma_grid, "sigma-grid"),
        reps=args.reps,
        seed=args.seed,
        measure={"kind": "gaussian"},
        m=args.m,
        outputs={
            "csv": f"{args.name}.csv",
            "json": f"{args.name}.json",
            "svg": f"{args.name}.svg",
        },
    )
    summary = run_experiment(exp, jobs=args.jobs, log=_stderr)
    for path in _emit_experiment(summary, args.out_dir, exp.outputs):
        sys.stdout.write(f"wrote {path}\n")
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    if args.figure is None or args.figure == "list":
        for fig, description in sorted(_FIGURES.items()):
            sys.stdout.write(f"{fig}: {description}\n")
        return 0
    if args.figure not in _FIGURES:
        raise ValidationError(
            f"unknown figure {args.figure!r}; run `spiketx reproduce list`"
        )
    n = args.n if args.n is not None else _FIG_DEFAULT_N[args.figure]
    if args.figure == "fig3-right":
        written = _reproduce_fig3_right(args.out_dir, args.seed)
    elif args.figure == "fig2-left":
        parts = [
            run_experiment(spec, jobs=args.jobs, log=_stderr)
            for spec in _fig2_left_parts(n, args.reps, args.seed)
        ]
        summary = _merge_summaries("fig2-left", args.seed, parts)
        outputs = {"csv": "fig2-left.csv", "json": "fig2-left.json", "svg": "fig2-left.svg"}
        written = _emit_experiment(summary, args.out_dir, outputs)
    else:
        if args.figure == "fig1-left" or args.figure == "fig1-right":
            exp = _fig1(args.figure.split("-")[1], n, args.reps, args.seed)
        elif args.figure == "fig2-right":
            exp = _fig2_right(n, args.reps, args.seed)
        else:
            exp = _fig3_left(n, args.reps, args.seed)
        summary = run_experiment(exp, jobs=args.jobs, log=_stderr)
        written = _emit_experiment(summary, args.out_dir, exp.outputs)
    for path in written:
        sys.stdout.write(f"wrote {path}\n")
    return 0


def _stderr(message: str) -> None:
    sys.stderr.write(message + "\n")
    sys.stderr.flush()


def _parse_floats(text, what: str) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        values = [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise ValidationError(f"{what} must be a comma-separated list of numbers") from None
    if not values:
        raise ValidationError(f"{what} must not be empty")
    return values


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spiketx",
        description="spectral predictions and experiments for elementwise-transformed spiked matrices",
    )
    parser.add_argument("--version", action="version", version=f"spiketx {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out-dir", default=None, help="output directory (default: $SPIKETX_OUTPUT_DIR or .)")

    p = sub.add_parser("tau", help="effective SNR of a transform under a noise measure")
    p.add_argument("--measure", required=True, help="gaussian | gaussian:MEAN,STD | cauchy | bimodal")
    p.add_argument("--transform", required=True,
                   help="identity | relu | heaviside | score | trunc:C | poly:C0,C1,... | series:K")
    p.add_argument("--degree", type=int, default=24, help="series truncation degree K")
    p.add_argument("--orders", type=int, default=4, help="derivative orders L for tau_ell")
    p.add_argument("--auto-center", action="store_true", help="subtract the transform mean")
    p.add_argument("--json", default=None, help="also write the report to this JSON file")
    add_common(p)
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("predict", help="outlier locations and cosines for given tau, gamma, sigmas")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--sigma", required=True, help="comma-separated spike strengths")
    p.add_argument("--setting", choices=("asymmetric", "symmetric"), default="asymmetric")
    p.add_argument("--json", default=None)
    add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("law", help="tabulate a limiting spectral law")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--law", choices=("marchenko-pastur", "semicircle"), default="marchenko-pastur")
    p.add_argument("--points", type=int, default=4001)
    p.add_argument("--csv", default=None, help="write (x, density, cdf) rows to this CSV file")
    add_common(p)
    p.set_defaults(func=cmd_law)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment from a TOML spec")
    p.add_argument("--spec", required=True, help="path to the experiment TOML file")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("binomial", help="binomial-count experiment without a spec file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--m", type=int, required=True, help="number of binomial trials")
    p.add_argument("--sigma-grid", required=True, help="comma-separated spike strengths")
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--name", default="binomial", help="basename for output files")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    add_common(p)
    p.set_defaults(func=cmd_binomial)

    p = sub.add_parser("truncation-opt", help="optimal truncation level for a noise measure")
    p.add_argument("--measure", required=True)
    p.add_argument("--lo", type=float, default=0.1)
    p.add_argument("--hi", type=float, default=20.0)
    p.add_argument("--grid-points", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--json", default=None)
    add_common(p)
    p.set_defaults(func=cmd_truncation_opt)

    p = sub.add_parser("shrink", help="apply singular-value shrinkage to observed values")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--values", required=True, help="comma-separated observed singular values")
    p.add_argument("--rule", choices=("eta_star", "hard", "none"), default="eta_star")
    p.add_argument("--level", type=float, default=None, help="hard-threshold level")
    p.add_argument("--json", default=None)
    add_common(p)
    p.set_defaults(func=cmd_shrink)

    p = sub.add_parser("reproduce", help="regenerate a bundled figure at desk scale")
    p.add_argument("figure", nargs="?", default=None,
                   help="figure id (run `spiketx reproduce list` to enumerate)")
    p.add_argument("--n", type=int, default=None, help="override the desk-scale dimension")
    p.add_argument("--reps", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    add_common(p)
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: config loading, file plumbing, and run manifests.

Subcommands map one-to-one onto library operations:

    simulate       sample a random field (and optionally a mask) to CSV
    krige          ordinary kriging from field+mask CSVs
    train          single-field network training from field+mask CSVs
    evaluate       score a prediction CSV against a truth CSV
    reproduce      run an experiment plan, emit results.csv and table.md
    ingest         rasterize a scattered-points CSV and split train/test
    replay         re-run a previous command from its manifest and verify

Configuration comes from TOML files with a fixed key schema; unknown keys
are hard errors so misspellings cannot silently fall back to defaults. All
randomness derives from one --seed value. Every command writes a
``<command>_manifest.json`` beside its outputs recording the resolved
config, seed, library versions, jitter events, and output hashes;
``replay`` re-executes a manifest and verifies the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .covariance import ALL_FAMILIES, CovarianceModel, StationaryParams
from .errors import ConfigError, FieldLabError, ReplayError, ShapeError
from .grid import (GridField, ObservationMask, read_grid_csv, read_mask_csv,
                   read_points_csv, rasterize_points, sample_mask, split_mask,
                   write_grid_csv, write_mask_csv)
from .harness import (ExperimentPlan, aggregate, aggregate_table_md,
                      results_csv, run_plan)
from .kriging import DEFAULT_MAX_GLOBAL, DEFAULT_NEIGHBORHOOD, ok_predict
from .metrics import SpatialWeights, mae, mi_discrepancy, rmse
from .network import TrainConfig, UNetConfig, train_single_field
from .seeding import stable_seed
from .simulate import ParamFieldSpec, SimulationSpec, sample_composite, sample_grf

__all__ = ["main"]

# ---------------------------------------------------------------------------
# Config schema. Leaves are (type, default); None default means "required
# when the section is used". Nested dicts are subsections.

_NS_SCHEMA = {
    "phi_lo": (float, None),
    "phi_hi": (float, None),
    "ratio_lo": (float, 1.0),
    "ratio_hi": (float, 1.0),
    "tilt_lo": (float, 0.0),
    "tilt_hi": (float, 0.0),
    "mean_amplitude": (float, 0.0),
    "generator": (str, "bilinear"),
}

_SCHEMAS: dict[str, dict] = {
    "grid": {"h": (int, None), "w": (int, None)},
    "cov": {
        "family": (str, "exponential"),
        "phi_fraction": (float, 0.1),
        "sigma2": (float, 1.0),
        "tau2": (float, 0.0),
        "nu": (float, 0.5),
        "wave_phi_fraction": (float, -1.0),  # -1 means "same as phi_fraction"
        "composite_mode": (str, "product"),
        "ns": _NS_SCHEMA,
    },
    "sim": {"mean": (float, 0.0)},
    "mask": {"fraction": (float, 0.5)},
    "krige": {
        "max_global": (int, DEFAULT_MAX_GLOBAL),
        "neighborhood": (int, DEFAULT_NEIGHBORHOOD),
    },
    "unet": {
        "depth": (int, 3),
        "base_channels": (int, 32),
        "kernel_size": (int, 3),
        "partial_conv": (bool, True),
        "in_channels": (int, -1),  # -1 means "1 if partial_conv else 2"
        "downsample": (str, "pool"),
        "pad_inputs": (bool, True),
    },
    "train": {
        "T": (int, 2000),
        "learning_rate": (float, 1e-3),
        "omega0": (float, 1.0),
        "lambda_L": (float, 0.1),
        "gauss_k": (int, 5),
        "gauss_sigma": (float, 1.0),
        "blur_k": (int, 7),
        "beta1": (float, 0.9),
        "beta2": (float, 0.999),
        "eps": (float, 1e-8),
        "gauss_form": (str, "wide"),
    },
    "metrics": {"weights": (str, "rook"), "normalization": (str, "binary")},
    "ingest": {
        "bbox": (("list", float), []),
        "train_fraction": (float, 0.8),
    },
    "plan": {
        "family": (str, "exponential"),
        "phi_fractions": (("list", float), [0.1]),
        "observed_fractions": (("list", float), [0.2, 0.5, 0.8]),
        "models": (("list", str), ["kriging"]),
        "runs": (int, 1),
        "base_seed": (int, 0),
        "eval_mode": (str, "unobserved"),
        "heldout_train_fraction": (float, 0.8),
    },
}

_COMMAND_SECTIONS = {
    "simulate": ("grid", "cov", "sim", "mask"),
    "krige": ("cov", "krige"),
    "train": ("unet", "train"),
    "evaluate": ("metrics",),
    "reproduce": ("plan", "grid", "cov", "unet", "train", "metrics", "krige"),
    "ingest": ("grid", "ingest"),
}


def _type_name(expected) -> str:
    if isinstance(expected, tuple) and expected[0] == "list":
        return f"list of {expected[1].__name__}"
    return expected.__name__


def _coerce(path: str, value, expected):
    if isinstance(expected, tuple) and expected[0] == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a {_type_name(expected)}")
        return [_coerce(f"{path}[{i}]", v, expected[1]) for i, v in enumerate(value)]
    if expected is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if expected is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    raise ConfigError(f"{path}: unsupported schema type")  # pragma: no cover


def _resolve_section(name: str, schema: dict, given: dict, path: str) -> dict:
    unknown = set(given) - set(schema)
    if unknown:
        known = ", ".join(sorted(schema))
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in [{path}]; known keys: {known}")
    out = {}
    for key, spec in schema.items():
        if isinstance(spec, dict):  # subsection
            sub = given.get(key)
            if sub is None:
                continue
            if not isinstance(sub, dict):
                raise ConfigError(f"[{path}.{key}] must be a table")
            out[key] = _resolve_section(key, spec, sub, f"{path}.{key}")
            continue
        expected, default = spec
        if key in given:
            out[key] = _coerce(f"{path}.{key}", given[key], expected)
        elif default is not None:
            out[key] = default
        else:
            raise ConfigError(f"missing required key {path}.{key}")
    return out


def load_config(path: str | Path | None, command: str) -> dict:
    """Parse and validate a TOML config for one command; fill defaults.

    Sections a command does not use are rejected, as are unknown keys, so a
    typo can never silently fall back to a default.
    """
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path} is not valid TOML: {exc}") from exc
    allowed = _COMMAND_SECTIONS[command]
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(
            f"section(s) {sorted(unknown)} are not used by '{command}'; "
            f"allowed sections: {sorted(allowed)}")
    resolved = {}
    for section in allowed:
        schema = _SCHEMAS[section]
        given = raw.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"[{section}] must be a table")
        try:
            resolved[section] = _resolve_section(section, schema, given, section)
        except ConfigError:
            if section not in raw and _has_required(schema):
                raise ConfigError(
                    f"config for '{command}' needs a [{section}] section") from None
            raise
    return resolved


def _has_required(schema: dict) -> bool:
    return any(not isinstance(spec, dict) and spec[1] is None
               for spec in schema.values())


def _schema_help() -> str:
    lines = ["config file keys (TOML):"]
    for section, schema in _SCHEMAS.items():
        used_by = [c for c, secs in _COMMAND_SECTIONS.items() if section in secs]
        lines.append(f"  [{section}]  (used by: {', '.join(used_by)})")
        for key, spec in schema.items():
            if isinstance(spec, dict):
                lines.append(f"    [{section}.{key}]")
                for k2, s2 in spec.items():
                    d = "required" if s2[1] is None else f"default {s2[1]!r}"
                    lines.append(f"      {k2}: {_type_name(s2[0])} ({d})")
                continue
            expected, default = spec
            d = "required" if default is None else f"default {default!r}"
            lines.append(f"    {key}: {_type_name(expected)} ({d})")
    lines.append("")
    lines.append("notes: cov.family is one of " + ", ".join(ALL_FAMILIES)
                 + "; cov.phi_fraction is the range as a fraction of the longer"
                   " grid side; train.T is the iteration count;"
                 " metrics.weights is rook|queen, metrics.normalization"
                 " binary|row; unet.in_channels -1 picks 1 (partial) or 2;"
                 " cov.wave_phi_fraction -1 reuses cov.phi_fraction;"
                 " ingest.bbox is [xmin, ymin, xmax, ymax] (empty = data hull).")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Shared construction helpers


def _cov_from_config(cov: dict, grid_hw: tuple[int, int]) -> CovarianceModel:
    family = cov["family"]
    if family not in ALL_FAMILIES:
        raise ConfigError(f"cov.family must be one of {ALL_FAMILIES}, got '{family}'")
    side = max(grid_hw)
    phi = cov["phi_fraction"] * side
    if family == "exponential":
        return CovarianceModel.exponential(cov["sigma2"], phi, cov["tau2"])
    if family == "exponential_nugget":
        return CovarianceModel.exponential_nugget(cov["sigma2"], phi, cov["tau2"])
    if family == "matern":
        return CovarianceModel.matern(cov["sigma2"], phi, cov["nu"], cov["tau2"])
    if family == "wave":
        return CovarianceModel.wave(cov["sigma2"], phi, cov["tau2"])
    if family == "product_exp_wave":
        wave_f = cov["wave_phi_fraction"]
        wave_phi = (wave_f if wave_f > 0 else cov["phi_fraction"]) * side
        return CovarianceModel.product_exp_wave(
            StationaryParams(cov["sigma2"], phi),
            StationaryParams(1.0, wave_phi))
    ns = cov.get("ns")
    if ns is None:
        raise ConfigError("nonstationary family needs a [cov.ns] table")
    from .simulate import make_param_fields
    nsf = make_param_fields(_ns_spec_from_config(ns), grid_hw)
    return CovarianceModel.nonstationary(nsf, cov["tau2"])


def _ns_spec_from_config(ns: dict) -> ParamFieldSpec:
    return ParamFieldSpec(
        phi_range=(ns["phi_lo"], ns["phi_hi"]),
        anis_ratio_range=(ns["ratio_lo"], ns["ratio_hi"]),
        tilt_range=(ns["tilt_lo"], ns["tilt_hi"]),
        mean_amplitude=ns["mean_amplitude"],
        generator=ns["generator"],
    )


def _unet_from_config(unet: dict) -> UNetConfig:
    in_ch = unet["in_channels"]
    if in_ch == -1:
        in_ch = 1 if unet["partial_conv"] else 2
    return UNetConfig(
        depth=unet["depth"], base_channels=unet["base_channels"],
        kernel_size=unet["kernel_size"], partial_conv=unet["partial_conv"],
        in_channels=in_ch, downsample=unet["downsample"],
        pad_inputs=unet["pad_inputs"])


def _train_from_config(train: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        iterations=train["T"], learning_rate=train["learning_rate"],
        omega0=train["omega0"], lambda_l=train["lambda_L"],
        gauss_k=train["gauss_k"], gauss_sigma=train["gauss_sigma"],
        blur_k=train["blur_k"], seed=seed, beta1=train["beta1"],
        beta2=train["beta2"], eps=train["eps"], gauss_form=train["gauss_form"])


def _weights_from_config(metrics_cfg: dict) -> SpatialWeights:
    return SpatialWeights(scheme=metrics_cfg["weights"],
                          normalization=metrics_cfg["normalization"])


def _read_field_and_mask(field_path: str, mask_path: str) -> tuple[GridField, ObservationMask]:
    field = read_grid_csv(field_path)
    mask = read_mask_csv(mask_path)
    if field.values.shape != mask.bits.shape:
        raise ShapeError(
            f"{field_path} is {field.values.shape[0]}x{field.values.shape[1]} "
            f"but {mask_path} is {mask.bits.shape[0]}x{mask.bits.shape[1]}")
    return field, mask


# ---------------------------------------------------------------------------
# Manifest


def _sha256(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, seed: int,
                    inputs: dict, outputs: list[Path], jitter: list,
                    wall_time_s: float, jobs: int = 1) -> Path:
    manifest = {
        "command": command,
        "seed": seed,
        "jobs": jobs,
        "config": config,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {p.name: _sha256(p) for p in outputs},
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "fieldlab": __version__,
        },
        "jitter_events": [e.as_dict() for e in jitter],
        "wall_time_s": wall_time_s,
    }
    path = out_dir / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Commands. Each takes (config, seed, inputs, out_dir, jobs) and returns the
# list of output files it wrote, so replay can drive them uniformly.


def _cmd_simulate(config: dict, seed: int, inputs: dict, out_dir: Path,
                  jobs: int) -> tuple[list[Path], list]:
    h, w = config["grid"]["h"], config["grid"]["w"]
    cov = config["cov"]
    jitter: list = []
    if cov["family"] == "product_exp_wave" and cov["composite_mode"] == "join":
        side = max(h, w)
        wave_f = cov["wave_phi_fraction"]
        field = sample_composite(
            StationaryParams(cov["sigma2"], cov["phi_fraction"] * side),
            StationaryParams(1.0, (wave_f if wave_f > 0 else cov["phi_fraction"]) * side),
            (h, w), stable_seed(seed, "field"), mode="join", record=jitter)
    else:
        model = _cov_from_config(cov, (h, w))
        mean = config["sim"]["mean"]
        if model.ns_field is not None and model.ns_field.mean_field is not None:
            mean = GridField(model.ns_field.mean_values())
        field = sample_grf(SimulationSpec(h, w, model, mean,
                                          stable_seed(seed, "field")), jitter)
    outputs = []
    field_path = out_dir / "field.csv"
    write_grid_csv(field, field_path)
    outputs.append(field_path)
    if "mask" in config and config["mask"]:
        mask = sample_mask(h, w, config["mask"]["fraction"],
                           stable_seed(seed, "mask"))
        mask_path = out_dir / "mask.csv"
        write_mask_csv(mask, mask_path)
        outputs.append(mask_path)
    return outputs, jitter


def _cmd_krige(config: dict, seed: int, inputs: dict, out_dir: Path,
               jobs: int) -> tuple[list[Path], list]:
    field, mask = _read_field_and_mask(inputs["field"], inputs["mask"])
    model = _cov_from_config(config["cov"], field.values.shape)
    jitter: list = []
    pred = ok_predict(field, mask, model,
                      max_global=config["krige"]["max_global"],
                      neighborhood=config["krige"]["neighborhood"],
                      record=jitter)
    pred_path = out_dir / "prediction.csv"
    write_grid_csv(pred.field, pred_path)
    return [pred_path], jitter


def _cmd_train(config: dict, seed: int, inputs: dict, out_dir: Path,
               jobs: int) -> tuple[list[Path], list]:
    field, mask = _read_field_and_mask(inputs["field"], inputs["mask"])
    unet = _unet_from_config(config["unet"])
    train = _train_from_config(config["train"], stable_seed(seed, "train"))
    report = train_single_field(field, mask, unet, train)
    pred_path = out_dir / "prediction.csv"
    write_grid_csv(report.prediction, pred_path)
    report_path = out_dir / "report.csv"
    lines = ["iteration,masked,gauss,laplace,omega_s,d_bar,total"]
    for r in report.records:
        lines.append(f"{r.iteration},{r.masked:.17g},{r.gauss:.17g},"
                     f"{r.laplace:.17g},{r.omega_s:.17g},{r.d_bar:.17g},"
                     f"{r.total:.17g}")
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [pred_path, report_path], []


def _cmd_evaluate(config: dict, seed: int, inputs: dict, out_dir: Path,
                  jobs: int) -> tuple[list[Path], list]:
    pred = read_grid_csv(inputs["pred"])
    truth = read_grid_csv(inputs["truth"])
    if pred.values.shape != truth.values.shape:
        raise ShapeError(
            f"{inputs['pred']} is {pred.values.shape[0]}x{pred.values.shape[1]} "
            f"but {inputs['truth']} is {truth.values.shape[0]}x{truth.values.shape[1]}")
    eval_mask = read_mask_csv(inputs["eval_mask"])
    if eval_mask.bits.shape != truth.values.shape:
        raise ShapeError(
            f"{inputs['eval_mask']} is {eval_mask.bits.shape[0]}x"
            f"{eval_mask.bits.shape[1]} but {inputs['truth']} is "
            f"{truth.values.shape[0]}x{truth.values.shape[1]}")
    weights = _weights_from_config(config["metrics"])
    scores = {
        "rmse": rmse(pred, truth, eval_mask),
        "mae": mae(pred, truth, eval_mask),
        "mi_rmse": mi_discrepancy(pred, truth, weights),
    }
    for name in ("rmse", "mae", "mi_rmse"):
        print(f"{name} {scores[name]:.17g}")
    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(scores, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    return [metrics_path], []


def _plan_from_config(config: dict, seed: int | None) -> ExperimentPlan:
    plan_cfg = config["plan"]
    cov = config["cov"]
    ns = cov.get("ns")
    wave_f = cov["wave_phi_fraction"]
    return ExperimentPlan(
        family=plan_cfg["family"],
        phi_fractions=tuple(plan_cfg["phi_fractions"]),
        observed_fractions=tuple(plan_cfg["observed_fractions"]),
        models=tuple(plan_cfg["models"]),
        runs=plan_cfg["runs"],
        grid=(config["grid"]["h"], config["grid"]["w"]),
        base_seed=plan_cfg["base_seed"] if seed is None else seed,
        sigma2=cov["sigma2"], tau2=cov["tau2"], nu=cov["nu"],
        mean=config["sim"]["mean"] if "sim" in config else 0.0,
        wave_phi_fraction=wave_f if wave_f > 0 else None,
        composite_mode=cov["composite_mode"],
        ns_spec=_ns_spec_from_config(ns) if ns is not None else None,
        ns_tau2=cov["tau2"] if plan_cfg["family"] == "nonstationary_matern" else 0.0,
        unet_vsl=_unet_from_config({**config["unet"], "partial_conv": True,
                                    "in_channels": 1}),
        unet_base=_unet_from_config({**config["unet"], "partial_conv": False,
                                     "in_channels": 2}),
        train=_train_from_config(config["train"], 0),
        weights=_weights_from_config(config["metrics"]),
        eval_mode=plan_cfg["eval_mode"],
        heldout_train_fraction=plan_cfg["heldout_train_fraction"],
        kriging_max_global=config["krige"]["max_global"],
        kriging_neighborhood=config["krige"]["neighborhood"],
    )


def _cmd_reproduce(config: dict, seed: int, inputs: dict, out_dir: Path,
                   jobs: int) -> tuple[list[Path], list]:
    plan = _plan_from_config(config, seed)
    rows = run_plan(plan, jobs=jobs)
    results_path = out_dir / "results.csv"
    results_path.write_text(results_csv(rows), encoding="utf-8")
    table_path = out_dir / "table.md"
    table_path.write_text(aggregate_table_md(aggregate(rows)), encoding="utf-8")
    return [results_path, table_path], []


def _cmd_ingest(config: dict, seed: int, inputs: dict, out_dir: Path,
                jobs: int) -> tuple[list[Path], list]:
    points = read_points_csv(inputs["points"])
    h, w = config["grid"]["h"], config["grid"]["w"]
    bbox_list = config["ingest"]["bbox"]
    if bbox_list:
        if len(bbox_list) != 4:
            raise ConfigError(
                "ingest.bbox needs exactly 4 numbers [xmin, ymin, xmax, ymax]")
        bbox = tuple(bbox_list)
    else:
        if not points:
            raise ConfigError("empty points file and no ingest.bbox given")
        xs = [p.x for p in points]
        ys = [p.y for p in points]
        # Degenerate hulls (all points collinear on an axis) get padded so
        # the bbox always has positive extent.
        pad_x = 0.5 if min(xs) == max(xs) else 0.0
        pad_y = 0.5 if min(ys) == max(ys) else 0.0
        bbox = (min(xs) - pad_x, min(ys) - pad_y,
                max(xs) + pad_x, max(ys) + pad_y)
    result = rasterize_points(points, h, w, bbox)
    train_mask, test_mask = split_mask(result.mask,
                                       config["ingest"]["train_fraction"],
                                       stable_seed(seed, "split"))
    field_path = out_dir / "field.csv"
    write_grid_csv(result.field, field_path)
    train_path = out_dir / "mask_train.csv"
    write_mask_csv(train_mask, train_path)
    test_path = out_dir / "mask_test.csv"
    write_mask_csv(test_mask, test_path)
    if result.n_ignored:
        print(f"ignored {result.n_ignored} point(s) outside the bounding box")
    return [field_path, train_path, test_path], []


_COMMANDS = {
    "simulate": _cmd_simulate,
    "krige": _cmd_krige,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "reproduce": _cmd_reproduce,
    "ingest": _cmd_ingest,
}

_COMMAND_INPUTS = {
    "simulate": (),
    "krige": ("field", "mask"),
    "train": ("field", "mask"),
    "evaluate": ("pred", "truth", "eval_mask"),
    "reproduce": (),
    "ingest": ("points",),
}


def _run_command(command: str, config: dict, seed: int, inputs: dict,
                 out_dir: Path, jobs: int) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    outputs, jitter = _COMMANDS[command](config, seed, inputs, out_dir, jobs)
    wall = time.perf_counter() - t0
    manifest = _write_manifest(out_dir, command, config, seed, inputs, outputs,
                               jitter, wall, jobs)
    for p in outputs + [manifest]:
        print(f"wrote {p}")
    return outputs


def _cmd_replay(manifest_path: str, out_dir: Path) -> None:
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    if command not in _COMMANDS:
        raise ConfigError(f"manifest names unknown command '{command}'")
    outputs = _run_command(command, manifest["config"], manifest["seed"],
                           manifest["inputs"], out_dir, jobs=1)
    mismatches = []
    for p in outputs:
        want = manifest["outputs"].get(p.name)
        got = _sha256(p)
        status = "match" if want == got else "MISMATCH"
        if want is None:
            status = "not in manifest"
        print(f"{p.name}: {status}")
        if want is not None and want != got:
            mismatches.append(p.name)
    if mismatches:
        raise ReplayError(
            f"replay produced different bytes for: {', '.join(mismatches)}")
    print("replay verified")


# ---------------------------------------------------------------------------
# Argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fieldlab",
        description="Spatial-field interpolation toolkit: simulation, kriging, "
                    "network training, metrics, and benchmark reproduction.",
        epilog=_schema_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, *flags):
        p = sub.add_parser(name, help=help_,
                           epilog=_schema_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        for flag, required, fhelp in flags:
            p.add_argument(flag, required=required, help=fhelp)
        if name != "replay":
            p.add_argument("--config", help="TOML config file")
            p.add_argument("--seed", type=int, default=None,
                           help="master seed (default 0; reproduce: plan.base_seed)")
        p.add_argument("--out-dir", default=".", help="output directory")
        if name in ("reproduce",):
            p.add_argument("--jobs", type=int, default=1,
                           help="worker processes (1 = byte-stable reference)")
        return p

    add("simulate", "sample a random field (and optional mask) to CSV")
    add("krige", "ordinary kriging from field+mask CSVs",
        ("--field", True, "truth/observation field CSV"),
        ("--mask", True, "observation mask CSV"))
    add("train", "train the interpolation network on one masked field",
        ("--field", True, "truth/observation field CSV"),
        ("--mask", True, "observation mask CSV"))
    add("evaluate", "score a prediction against a truth field",
        ("--pred", True, "prediction CSV"),
        ("--truth", True, "truth field CSV"),
        ("--eval-mask", True, "mask CSV of cells to score"))
    add("reproduce", "run an experiment plan and emit results.csv + table.md")
    add("ingest", "rasterize scattered points and split train/test masks",
        ("--points", True, "points CSV with header x,y,value"))
    add("replay", "re-run a previous command from its manifest and verify",
        ("--manifest", True, "path to a *_manifest.json"))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            _cmd_replay(args.manifest, Path(args.out_dir))
            return 0
        config = load_config(args.config, args.command)
        seed = args.seed
        if seed is None:
            seed = config["plan"]["base_seed"] if args.command == "reproduce" else 0
        inputs = {name: getattr(args, name if name != "eval_mask" else "eval_mask")
                  for name in _COMMAND_INPUTS[args.command]}
        jobs = getattr(args, "jobs", 1)
        _run_command(args.command, config, seed, inputs, Path(args.out_dir), jobs)
        return 0
    except FieldLabError as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

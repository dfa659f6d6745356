"""Batch command-line front door: expansion reports, kernel studies, bound tables.

Subcommands
    expand        matrix fixture + index set -> three expansion reports (JSON)
    kernel-study  kernel fixture + study kind -> per-trial CSV + JSON summary
    bounds        concentration constants, radius, bilinear bound, minimal n

Every output embeds the SHA-256 of the canonical config JSON and the seed, so
reruns are verifiable. Exit codes: 0 success, 1 input or config error,
2 expansion condition violated (reports are still written).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .errors import SpectraError
from .expansions import (
    eigval_expansion_clustered,
    eigval_expansion_separated,
    projection_expansion,
)
from .kernels import (
    KernelModel,
    bernstein_constants,
    bernstein_radius,
    bilinear_residual_bound,
    constants_from_values,
    minimal_n_for_gap,
)
from .linalg import eigh, load_matrix, matrix_from_json
from .montecarlo import (
    McConfig,
    run_eigenvalue_study,
    run_limit_study,
    run_opnorm_study,
    run_projection_study,
)
from .spectral import build_index_set

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_CONDITION = 2

STUDIES = {
    "eigenvalue": run_eigenvalue_study,
    "projection": run_projection_study,
    "opnorm": run_opnorm_study,
    "limit": run_limit_study,
}


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    return obj


def _read_matrix(spec, base_dir: Path):
    if isinstance(spec, str):
        return load_matrix(base_dir / spec if not Path(spec).is_absolute() else spec)
    if isinstance(spec, dict):
        return matrix_from_json(spec)
    raise ValueError("matrix must be an inline object or a path string")


def _write_json(path: Path, payload: dict, provenance: dict) -> None:
    payload = dict(payload)
    payload["provenance"] = provenance
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_expand(args) -> int:
    config = _load_config(args.config)
    for key, val in (("seed", args.seed), ("tau", args.tau)):
        if val is not None:
            config[key] = val
    base_dir = Path(args.config).parent
    if "j_set" not in config:
        raise ValueError("config is missing j_set")
    if "matrix" not in config or "delta" not in config:
        raise ValueError("config needs both a matrix and a delta perturbation")

    base = _read_matrix(config["matrix"], base_dir)
    delta = _read_matrix(config["delta"], base_dir)
    epsilon = float(config.get("epsilon", 1.0))
    h_hat = base + epsilon * delta
    spec = eigh(base)
    info = build_index_set(spec, config["j_set"])

    provenance = {"config_sha256": _config_hash(config), "seed": int(config.get("seed", 0))}
    out = _out_dir(args)
    reports = {
        "projection": projection_expansion(spec, h_hat, info),
        "separated": eigval_expansion_separated(spec, h_hat, info),
        "clustered": eigval_expansion_clustered(spec, h_hat, info),
    }
    for name, report in reports.items():
        _write_json(out / f"report_{name}.json", report.to_dict(), provenance)
    if all(r.condition_ok for r in reports.values()):
        return EXIT_OK
    return EXIT_CONDITION


def _study_config(config: dict, args) -> tuple[McConfig, str]:
    study = config.get("study")
    if study not in STUDIES:
        raise ValueError(f"study must be one of {sorted(STUDIES)}, got {study!r}")
    kernel = KernelModel.from_dict(config.get("kernel", {}))
    overrides = {"n": args.n, "trials": args.trials, "tau": args.tau, "seed": args.seed}
    for key, val in overrides.items():
        if val is not None:
            config[key] = val
    cfg = McConfig(
        kernel=kernel,
        j_set=tuple(config.get("j_set", ())),
        n=int(config.get("n", 0)),
        trials=int(config.get("trials", 0)),
        seed=int(config.get("seed", 0)),
        tau=float(config.get("tau", 0.1)),
        r_trunc=config.get("r_trunc"),
        f_class=tuple(tuple(f) for f in config.get("f_class", ())),
        gap_tol=config.get("gap_tol"),
        limit_draws=int(config.get("limit_draws", 10_000)),
    )
    return cfg, study


def cmd_kernel_study(args) -> int:
    config = _load_config(args.config)
    cfg, study = _study_config(config, args)
    report = STUDIES[study](cfg)

    provenance = {"config_sha256": _config_hash(report.config), "seed": cfg.seed}
    out = _out_dir(args)
    report.write_csv(
        out / f"study_{study}.csv",
        header_lines=[f"config_sha256={provenance['config_sha256']}", f"seed={cfg.seed}"],
    )
    _write_json(
        out / f"study_{study}_summary.json",
        {"study": study, "config": report.config, "summary": report.summary},
        provenance,
    )
    return EXIT_OK


def cmd_bounds(args) -> int:
    config = _load_config(args.config)
    for key, val in (("n", args.n), ("tau", args.tau)):
        if val is not None:
            config[key] = val
    n = int(config.get("n", 0))
    tau = float(config.get("tau", 0.1))
    if n < 1:
        raise ValueError("bounds need a positive sample size n")

    model = None
    if "kernel" in config:
        model = KernelModel.from_dict(config["kernel"])
        consts = bernstein_constants(model)
    elif "kappa" in config and "lambda_max" in config:
        consts = constants_from_values(float(config["kappa"]), float(config["lambda_max"]))
    else:
        raise ValueError("config needs a kernel or explicit kappa and lambda_max")

    payload = {
        "kappa": consts.kappa,
        "r": consts.r,
        "sigma": consts.sigma,
        "d": consts.d,
        "lambda_max": consts.lambda_max,
        "n": n,
        "tau": tau,
        "radius": bernstein_radius(consts, n, tau),
    }
    gamma = config.get("gamma_j")
    if model is not None and config.get("j_set"):
        info = model.index_info(tuple(config["j_set"]))
        gamma = info.gamma_j
        payload["gamma_j"] = gamma
        payload["xi"] = bilinear_residual_bound(
            info, float(config.get("m_f", 1.0)), consts, n, tau
        )
    elif gamma is not None:
        payload["gamma_j"] = float(gamma)
    if gamma is not None and np.isfinite(float(gamma)):
        payload["minimal_n"] = minimal_n_for_gap(consts, float(gamma))

    provenance = {"config_sha256": _config_hash(config), "seed": int(config.get("seed", 0))}
    _write_json(_out_dir(args) / "bounds.json", payload, provenance)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectra",
        description="Spectral perturbation expansions and kernel Gram matrix studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, handler in (
        ("expand", cmd_expand),
        ("kernel-study", cmd_kernel_study),
        ("bounds", cmd_bounds),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the JSON config")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--tau", type=float, default=None)
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (SpectraError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"spectra: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


def entrypoint() -> None:  # console script
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

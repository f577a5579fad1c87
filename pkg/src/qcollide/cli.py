"""Scenario runner: ``qcollide run <config.json>`` and ``qcollide validate``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import ctime, dynamics, qmat, witness
from .correlations import XStateParams, mutual_information_continuous, mutual_information_discrete
from .correlations import mutual_information_two_qubits_discrete, x_state
from .ctime import ContinuousModel
from .dynamics import CollisionModel
from .env import ChainConstraintError, ChainParams, random_chain_params

SCENARIOS = ("divisibility-scan", "discrete-trace", "ctime-trace", "witness", "separable-demo", "validate")


class ConfigError(ValueError):
    pass


# -- output ------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def emit_csv(rows, header, path) -> Path:
    """UTF-8, comma separated, header row, 17 significant digits, LF line endings."""
    path = Path(path)
    header = list(header)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            row = list(row)
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            w.writerow([_fmt(x) for x in row])
    return path


# -- config parsing ------------------------------------------------------------


def _get(cfg: dict, key: str, default=None, required: bool = False):
    if key not in cfg:
        if required:
            raise ConfigError(f"missing required field {key!r}")
        return default
    return cfg[key]


def _number(cfg: dict, key: str, default=None, required: bool = False) -> float:
    v = _get(cfg, key, default, required)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
        raise ConfigError(f"field {key!r} must be a finite number, got {v!r}")
    return float(v)


def _grid(cfg: dict, key: str) -> np.ndarray:
    v = _get(cfg, key, required=True)
    if isinstance(v, list):
        return np.array([float(x) for x in v])
    if isinstance(v, dict):
        try:
            return np.linspace(float(v["start"]), float(v["stop"]), int(v["num"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"grid {key!r} needs start, stop, num: {e}") from None
    raise ConfigError(f"grid {key!r} must be a list or {{start, stop, num}}")


def _complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ConfigError(f"complex numbers are given as a number or [re, im], got {v!r}")


def parse_state(desc) -> np.ndarray:
    """Presets: ``P2plus``, ``MaxMixed1``, ``MaxMixed2``, ``ket:<bits>``, ``{"XState": {...}}``."""
    if isinstance(desc, str):
        if desc == "P2plus":
            return qmat.P2_PLUS.copy()
        if desc == "MaxMixed1":
            return np.eye(2, dtype=complex) / 2
        if desc == "MaxMixed2":
            return np.eye(4, dtype=complex) / 4
        if desc.startswith("ket:"):
            try:
                return qmat.ket(desc[4:])
            except ValueError as e:
                raise ConfigError(str(e)) from None
    if isinstance(desc, dict) and set(desc) == {"XState"}:
        x = dict(desc["XState"])
        basis = x.pop("basis", "sigma1")
        try:
            prm = XStateParams(
                float(x["mu1"]), float(x["mu2"]), float(x["nu"]),
                _complex(x.get("u", 0.0)), _complex(x.get("v", 0.0)),
            )
            return x_state(prm, basis)
        except KeyError as e:
            raise ConfigError(f"XState needs field {e}") from None
        except ValueError as e:
            raise ConfigError(str(e)) from None
    raise ConfigError(f"unknown state specification {desc!r}")


def _chain(cfg: dict) -> ChainParams:
    p = _number(cfg, "p", required=True)
    r = _number(cfg, "r", 0.0)
    delta = _number(cfg, "delta", required=True)
    p0 = _number(cfg, "p0", 1 - 2 * p - r)
    return ChainParams(p0, p, r, delta)


def _varphi(cfg: dict) -> float:
    v = _number(cfg, "varphi", -1.0)
    if abs(v) > 1:
        raise ConfigError(f"constraint |varphi| <= 1 violated (varphi={v})")
    return v


def _horizon(cfg: dict, key: str) -> int:
    n = _get(cfg, key, required=True)
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ConfigError(f"{key!r} must be a non-negative integer, got {n!r}")
    return n


def _times(cfg: dict) -> np.ndarray:
    t_max = _number(cfg, "t_max", required=True)
    step = _number(cfg, "step", required=True)
    if step <= 0 or t_max < 0:
        raise ConfigError("constraint t_max >= 0 and step > 0 violated")
    n = int(round(t_max / step))
    return np.round(np.arange(n + 1) * step, 12)


# -- scenarios -------------------------------------------------------------------


def _prepare(cfg: dict):
    """Validate every parameter before computing; returns a zero-argument job."""
    kind = _get(cfg, "scenario", required=True)
    if kind not in SCENARIOS:
        raise ConfigError(f"unknown scenario {kind!r}; expected one of {', '.join(SCENARIOS)}")
    return kind, _PREPARERS[kind](cfg)


def _prep_divisibility(cfg):
    r = _number(cfg, "r", 0.0)
    ps = _grid(cfg, "p")
    if "q" in cfg:
        qs = _grid(cfg, "q")
        pts = [(p, q * p) for p in ps for q in qs]
    else:
        ds = _grid(cfg, "delta")
        pts = [(p, d) for p in ps for d in ds]
    params = [ChainParams.from_p_r_delta(p, r, d) for p, d in pts]
    n_max = _get(cfg, "n_max", dynamics.DEFAULT_SCAN_DEPTH)

    def job(threads):
        def one(prm):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", dynamics.OutsideAnalyticRegime)
                    rep = dynamics.classify_divisibility(prm, n_max)
            except ValueError:
                # singular reduced maps (p = 1/4): only the analytic margins exist
                return (prm.p, prm.delta, dynamics.p_divisibility_margin(prm) >= 0,
                        dynamics.cp_divisibility_margin(prm) >= 0,
                        dynamics.tensor_p_divisibility_margin(prm) >= 0)
            pick = lambda a, b: b if a is None else a  # noqa: E731
            return (prm.p, prm.delta, pick(rep.P, rep.numeric_P), pick(rep.CP, rep.numeric_CP),
                    pick(rep.tensorP, rep.numeric_tensorP))

        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(one, params))
        return {"divisibility_scan.csv": (["p", "delta", "P", "CP", "tensorP"], rows)}

    return job


def _prep_discrete(cfg):
    prm = _chain(cfg)
    varphi = _varphi(cfg)
    n_max = _horizon(cfg, "n_max")
    state = parse_state(_get(cfg, "state", "MaxMixed1"))
    model = CollisionModel.from_params(prm, varphi)

    def job(threads):
        traj = dynamics.eigenvalues_recurrence(model, n_max)
        if state.shape == (2, 2):
            mi = lambda n: mutual_information_discrete(model, state, n)  # noqa: E731
        else:
            mi = lambda n: mutual_information_two_qubits_discrete(model, state, n)  # noqa: E731
        rows = [(n, traj.lam[n], traj.lam3[n], mi(n)) for n in range(n_max + 1)]
        return {"discrete_trace.csv": (["n", "lam", "lam3", "qmi"], rows)}

    return job


def _prep_ctime(cfg):
    model = ContinuousModel(_number(cfg, "gamma", 1.0), _number(cfg, "kappa", 0.0))
    times = _times(cfg)
    states = _get(cfg, "states", {})
    if not isinstance(states, dict):
        raise ConfigError("'states' must map labels to state specifications")
    states = {str(k): parse_state(v) for k, v in states.items()}
    if states and model.kappa != 0:
        raise ConfigError("constraint kappa = 0 required for the continuous mutual information")
    for k, s in states.items():
        if s.shape != (4, 4):
            raise ConfigError(f"state {k!r} must be a two-qubit state")
    hel = _get(cfg, "helstrom")
    ens = None
    if hel is not None:
        ens = witness.HelstromEnsemble(
            _number(hel, "mu", required=True), parse_state(hel.get("rho")), parse_state(hel.get("sigma"))
        )
        if ens.rho.shape != (4, 4):
            raise ConfigError("helstrom states must be two-qubit states")

    def job(threads):
        lam, lam3 = ctime.lambda_t(model, times)
        cols = [times, lam, lam3]
        header = ["t", "lam", "lam3"]
        for label, s in states.items():
            with ThreadPoolExecutor(max_workers=threads) as ex:
                cols.append(list(ex.map(lambda t: mutual_information_continuous(s, t, model.gamma), times)))
            header.append("qmi" if len(states) == 1 else f"qmi_{label}")
        if ens is not None:
            cols.append(witness.helstrom_trajectory(model, ens, 2, times).norms)
            header.append("helstrom")
        return {"ctime_trace.csv": (header, list(zip(*cols)))}

    return job


def _prep_witness(cfg):
    prm = _chain(cfg)
    if prm.r != 0:
        raise ConfigError("constraint r = 0 required by the symmetric projector witness")
    n_max = _horizon(cfg, "n_max")

    def job(threads):
        rows = []
        for n in range(2, n_max + 1):
            w = witness.symmetric_projector_witness(prm, n)
            rows.append((n, w.exact, w.leading_order))
        return {"witness.csv": (["n", "exact", "leading_order"], rows)}

    return job


def _prep_separable(cfg):
    a = _number(cfg, "a", required=True)
    s = _number(cfg, "s", math.atanh(0.5))
    if not 0 < a <= math.exp(-4 * s):
        raise ConfigError(f"constraint 0 < a <= exp(-4 s) = {math.exp(-4 * s):.6g} violated (a={a})")
    bias = _get(cfg, "bias")
    t_max = _number(cfg, "t_max", 3.0)
    step = _number(cfg, "step", 0.01)

    def job(threads):
        c = witness.separable_sbfi_construction(a, s, bias, t_max, step)
        traj = list(zip(c.trajectory.times, c.trajectory.norms))
        summary = [
            ("a", c.a), ("s", c.s), ("mu", c.ensemble.mu), ("min_pt_eigenvalue", c.min_pt_eigenvalue),
            ("ppt", c.ppt), ("triggered", c.triggered), ("quantumness", c.quantumness),
        ]
        return {
            "separable_trajectory.csv": (["t", "helstrom"], traj),
            "separable_summary.csv": (["key", "value"], summary),
        }

    return job


def validation_checks(seed: int = 0, draws: int = 20) -> list[tuple[str, float, float, bool]]:
    """Oracle cross-checks; each row is ``(name, max_error, tolerance, passed)``."""
    rng = np.random.default_rng(seed)
    out = []
    err_rec = err_cf = 0.0
    for _ in range(draws):
        prm = random_chain_params(rng)
        varphi = float(rng.uniform(-1, 1))
        m = CollisionModel.from_params(prm, varphi)
        bf = dynamics.bruteforce_eigenvalue_table(m, 10)
        rec = dynamics.eigenvalues_recurrence(m, 10)
        err_rec = max(err_rec, np.abs(bf[:, 1] - rec.lam).max(), np.abs(bf[:, 3] - rec.lam3).max())
        mu = CollisionModel.from_params(prm, -1.0)
        bf = dynamics.bruteforce_eigenvalue_table(mu, 10)
        rec = dynamics.eigenvalues_recurrence(mu, 10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", dynamics.OutsideAnalyticRegime)
            cf = dynamics.closed_form_trajectory(prm, 10)
        err_cf = max(err_cf, np.abs(cf.lam - rec.lam).max(), np.abs(cf.lam - bf[:, 1]).max(),
                     np.abs(cf.lam3 - bf[:, 3]).max())
    out.append(("recurrence_vs_bruteforce", err_rec, 1e-11, err_rec <= 1e-11))
    out.append(("closed_form_vs_recurrence_vs_bruteforce", err_cf, 1e-11, err_cf <= 1e-11))
    err_v = 0.0
    for kappa in (0.0, 0.5, 2.0):
        model = ContinuousModel(1.0, kappa)
        sol = ctime.volterra_oracle(model, 5.0, 0.01)
        err_v = max(err_v, float(np.abs(ctime.lambda_t(model, sol.times)[0] - sol.lam).max()))
    out.append(("volterra_vs_closed_form", err_v, 1e-6, err_v <= 1e-6))
    mismatches = 0
    for r in (0.0, 0.1):
        for p in np.linspace(0.01, 0.49 - r, 12):
            for q in np.linspace(0.0, 1.0, 12):
                prm = ChainParams.from_p_r_delta(p, r, q * p)
                try:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", dynamics.OutsideAnalyticRegime)
                        dynamics.classify_divisibility(prm)
                except dynamics.DivisibilityMismatch:
                    mismatches += 1
                except ValueError:
                    pass  # singular reduced maps: intertwiners undefined
    out.append(("choi_vs_analytic_divisibility", float(mismatches), 0.0, mismatches == 0))
    return out


def _prep_validate(cfg, seed=0):
    draws = _get(cfg, "draws", 20)
    if not isinstance(draws, int) or draws < 1:
        raise ConfigError("'draws' must be a positive integer")
    seed = _get(cfg, "seed", seed)

    def job(threads):
        rows = validation_checks(seed, draws)
        return {"validate.csv": (["check", "max_error", "tolerance", "passed"], rows)}

    return job


_PREPARERS = {
    "divisibility-scan": _prep_divisibility,
    "discrete-trace": _prep_discrete,
    "ctime-trace": _prep_ctime,
    "witness": _prep_witness,
    "separable-demo": _prep_separable,
    "validate": _prep_validate,
}


def run(cfg: dict, out_dir, threads: int = 1, seed: int | None = None) -> int:
    try:
        if seed is not None and cfg.get("scenario") == "validate":
            cfg = {**cfg, "seed": cfg.get("seed", seed)}
        kind, job = _prepare(cfg)
    except (ConfigError, ChainConstraintError, ValueError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    outputs = job(max(1, threads))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in outputs.items():
        emit_csv(rows, header, out_dir / name)
    if kind == "validate":
        failed = [r[0] for r in outputs["validate.csv"][1] if not r[3]]
        for name in failed:
            print(f"validation failed: {name}", file=sys.stderr)
        return 1 if failed else 0
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qcollide", description=__doc__)
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None, help="seed for randomised checks")
    sub = ap.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the scenario described by a JSON config")
    p_run.add_argument("config")
    sub.add_parser("validate", help="run the oracle cross-check suite")
    args = ap.parse_args(argv)
    if args.command == "validate":
        return run({"scenario": "validate"}, args.out, args.threads, args.seed)
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    if not isinstance(cfg, dict):
        print("config error: top-level JSON value must be an object", file=sys.stderr)
        return 2
    return run(cfg, args.out, args.threads, args.seed)


if __name__ == "__main__":
    sys.exit(main())

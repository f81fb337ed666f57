"""``monocert`` command line: certify, build Lyapunov functions, simulate, entrain, report.

Every invocation writes into its own directory under ``--out`` named after a
hash of the configuration, so reruns overwrite identical files with
identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import enum
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import certify as cz
from .core import SystemModel
from .lyapunov import LyapunovError, LyapunovForm, build, decrease_along, write_series_csv
from .measures import mu1, mu_inf, spectral_abscissa
from .models import ModelError, ModelSpec
from .simulate import (IntegrationError, check_entrainment, check_flow_decay, check_monotonicity,
                       check_pair_contraction, integrate_batch)

EXIT_OK, EXIT_INVALID, EXIT_FAILED_CERT, EXIT_BLOWUP = 0, 1, 2, 3
DEFAULT_STARTS = {"lyapunov": 20, "simulate": 20, "entrain": 5}
ENTRAIN_ITERATIONS = 60


class Command(enum.Enum):
    MEASURE = "measure"
    CERTIFY = "certify"
    LYAPUNOV = "lyapunov"
    SIMULATE = "simulate"
    ENTRAIN = "entrain"
    REPORT = "report"


class ConfigError(ValueError):
    pass


class CertificationRefused(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: Command
    model: Path
    samples: int = cz.DEFAULT_SAMPLES
    seed: int = 42
    margin: float = cz.DEFAULT_MARGIN
    step: float = 1e-2
    horizon: float = 100.0
    norm: Optional[str] = None
    out: Path = Path("runs")
    starts: Optional[int] = None

    def validate(self):
        for name in ("samples", "margin", "step", "horizon"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"--{name} must be positive")
        if self.starts is not None and self.starts < 1:
            raise ConfigError("--starts must be positive")
        if self.norm not in (None, "l1", "linf"):
            raise ConfigError("--norm must be l1 or linf")

    @property
    def n_starts(self) -> int:
        return self.starts if self.starts is not None else DEFAULT_STARTS.get(self.command.value, 1)

    def key(self, spec: ModelSpec) -> dict:
        return {"command": self.command.value, "model": spec.to_dict(), "samples": self.samples,
                "seed": self.seed, "margin": self.margin, "step": self.step,
                "horizon": self.horizon, "norm": self.norm, "starts": self.n_starts}

    def run_dir(self, spec: ModelSpec) -> Path:
        digest = hashlib.sha256(_dumps(self.key(spec)).encode()).hexdigest()[:12]
        return self.out / f"{self.command.value}-{spec.name.value}-{digest}"


# ------------------------------------------------------------------ output

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


def _write_json(path: Path, obj) -> Path:
    path.write_text(_dumps(obj))
    return path


def _write_trajectory(path: Path, times, states):
    n = states.shape[1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(n)])
        for t, x in zip(times, states):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in x])


# ---------------------------------------------------------------- helpers

def _starts(model: SystemModel, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    return lo + (hi - lo) * rng.random((count, model.dim))


def _ordered_pairs(model: SystemModel, count: int, seed: int):
    rng = np.random.default_rng(seed)
    lo, hi = model.domain.trunc_lower, model.domain.trunc_upper
    a = lo + (hi - lo) * rng.random((count, model.dim))
    b = lo + (hi - lo) * rng.random((count, model.dim))
    return np.minimum(a, b), np.maximum(a, b)


def _kinds(cfg: RunConfig) -> List[cz.CertKind]:
    if cfg.norm is None:
        return [cz.CertKind.SUM_L1, cz.CertKind.MAX_LINF]
    return [cz.CertKind.for_norm(cfg.norm)]


def _certificates(cfg: RunConfig, model: SystemModel, run_dir: Path) -> dict:
    samples = cz.sample_jacobians(model, cfg.samples, cz.SampleStrategy.MIXED, cfg.seed)
    certs = {}
    for kind in _kinds(cfg):
        cert = cz.certify_model(model, kind, margin=cfg.margin, samples=samples)
        certs[kind] = cert
        _write_json(run_dir / f"certificate_{kind.value}.json", cert.to_dict())
    return certs


def _usable(certs: dict) -> dict:
    return {k: c for k, c in certs.items() if c.usable}


# ---------------------------------------------------------------- commands

def _measure(cfg, model, run_dir) -> int:
    samples = cz.sample_jacobians(model, cfg.samples, cz.SampleStrategy.MIXED, cfg.seed)
    rows = []
    for t, x, J in zip(samples.times, samples.states, samples.matrices):
        rows.append({"t": t, "x": x, "mu1": mu1(J).to_dict(), "mu_inf": mu_inf(J).to_dict(),
                     "spectral_abscissa": spectral_abscissa(J)})
    summary = {
        "sample_count": len(rows),
        "max_mu1": max(r["mu1"]["value"] for r in rows),
        "max_mu_inf": max(r["mu_inf"]["value"] for r in rows),
        "max_spectral_abscissa": max(r["spectral_abscissa"] for r in rows),
        "all_metzler": all(r["mu1"]["metzler"] for r in rows),
    }
    _write_json(run_dir / "measures.json", {"summary": summary, "samples": rows})
    print(f"mu1 = {summary['max_mu1']:.12g}  mu_inf = {summary['max_mu_inf']:.12g}  "
          f"(max over {len(rows)} sampled Jacobians)")
    return EXIT_OK


def _certify(cfg, model, run_dir) -> int:
    certs = _certificates(cfg, model, run_dir)
    for kind, cert in certs.items():
        print(f"{kind.value}: {cert.status.value}  c = {cert.rate_c:.6g}  weights = {cert.weights.tolist()}")
    if all(c.status is cz.CertStatus.FAILED for c in certs.values()):
        return EXIT_FAILED_CERT
    return EXIT_OK


def _require_certificates(cfg, model, run_dir) -> dict:
    certs = _certificates(cfg, model, run_dir)
    usable = _usable(certs)
    if not usable:
        raise CertificationRefused("no usable certificate: " +
                                   ", ".join(f"{k.value}={c.status.value}" for k, c in certs.items()))
    return usable


def _lyapunov(cfg, model, run_dir) -> int:
    certs = _require_certificates(cfg, model, run_dir)
    starts = _starts(model, cfg.n_starts, cfg.seed)
    results = []
    for kind, cert in certs.items():
        forms = ([LyapunovForm.STATE_SUM, LyapunovForm.FLOW_SUM] if kind is cz.CertKind.SUM_L1
                 else [LyapunovForm.STATE_MAX, LyapunovForm.FLOW_MAX])
        for form in forms:
            try:
                V = build(cert, form, model=model)
            except LyapunovError as exc:
                results.append({"form": form.value, "certificate": kind.value, "skipped": str(exc)})
                continue
            for k, x0 in enumerate(starts):
                rep = decrease_along(V, model, x0, cfg.horizon, cfg.step)
                if rep.error:
                    raise IntegrationError(rep.error, 0.0)
                write_series_csv(run_dir / f"lyapunov_{form.value}_{k:03d}.csv", rep)
                results.append({"form": form.value, "certificate": kind.value, "start": x0, **rep.to_dict()})
    _write_json(run_dir / "lyapunov.json", {"results": results})
    checked = [r for r in results if "passed" in r]
    print(f"{sum(r['passed'] for r in checked)}/{len(checked)} decrease checks passed")
    return EXIT_OK


def _simulate(cfg, model, run_dir) -> int:
    certs = _require_certificates(cfg, model, run_dir)
    lo, hi = _ordered_pairs(model, cfg.n_starts, cfg.seed)
    mono = [check_monotonicity(model, a, b, cfg.horizon, cfg.step).passed for a, b in zip(lo, hi)]
    out = {"monotonicity": {"pairs": len(mono), "passed": sum(mono)}}
    times, states = integrate_batch(model, lo[0], 0.0, cfg.horizon, cfg.step)
    _write_trajectory(run_dir / "trajectory.csv", times, states)
    for kind, cert in certs.items():
        if cert.status is not cz.CertStatus.CONTRACTIVE:
            continue
        norm = cert.norm
        pair = [check_pair_contraction(model, a, b, norm, cert.rate_c, cfg.horizon, cfg.step)
                for a, b in zip(lo, hi)]
        flow = [check_flow_decay(model, a, norm, cert.rate_c, cfg.horizon, cfg.step) for a in lo]
        out[kind.value] = {
            "rate_c": cert.rate_c,
            "pair_contraction": {"passed": sum(r.passed for r in pair), "total": len(pair),
                                 "worst_excess": max(r.worst_excess for r in pair)},
            "flow_decay": {"passed": sum(r.passed for r in flow), "total": len(flow),
                           "worst_excess": max(r.worst_excess for r in flow)},
        }
    _write_json(run_dir / "simulate.json", out)
    print(_dumps(out), end="")
    return EXIT_OK


def _entrain(cfg, model, run_dir) -> int:
    if model.autonomous:
        raise ConfigError("entrain needs a periodically forced model")
    certs = _require_certificates(cfg, model, run_dir)
    kind = cz.CertKind.MAX_LINF if cz.CertKind.MAX_LINF in certs else next(iter(certs))
    norm = certs[kind].norm
    records = []
    for xi in _starts(model, cfg.n_starts, cfg.seed):
        rec = check_entrainment(model, xi, ENTRAIN_ITERATIONS, norm, cfg.step)
        records.append(rec.to_dict() | {"first_within_1e-8": rec.first_within(1e-8)})
    spread = float(np.max([np.max(np.abs(np.subtract(r["fixed_point"], records[0]["fixed_point"])))
                           for r in records]))
    _write_json(run_dir / "entrain.json", {"certificate": kind.value, "records": records,
                                           "fixed_point_spread": spread})
    for r in records:
        print(f"distance after {ENTRAIN_ITERATIONS} periods: {r['distances'][-1]:.3e}  "
              f"structure {'ok' if r['passed'] else 'violated'}")
    return EXIT_OK


JUSTIFICATION = {
    (cz.CertKind.SUM_L1, cz.CertStatus.CONTRACTIVE):
        "weighted column-sum contraction theorem (state and flow sum-separable Lyapunov functions)",
    (cz.CertKind.MAX_LINF, cz.CertStatus.CONTRACTIVE):
        "weighted row-sum contraction theorem (state and flow max-separable Lyapunov functions)",
    (cz.CertKind.SUM_L1, cz.CertStatus.NONEXPANSIVE_STRICT_AT_EQ):
        "nonexpansive-with-strict-equilibrium corollary (sum-separable)",
    (cz.CertKind.MAX_LINF, cz.CertStatus.NONEXPANSIVE_STRICT_AT_EQ):
        "nonexpansive-with-strict-equilibrium corollary (max-separable)",
}
LIMIT_JUSTIFICATION = "limit-of-contractive-weights corollary"
ENTRAIN_JUSTIFICATION = "periodic entrainment theorem"


def _report(cfg, spec, run_dir) -> int:
    lines = [f"model: {spec.name.value} {json.dumps(spec.params, sort_keys=True)}", ""]
    found = 0
    for sub in sorted(p for p in cfg.out.iterdir() if p.is_dir() and p != run_dir):
        conf = sub / "config.json"
        if not conf.exists() or json.loads(conf.read_text()).get("model") != _clean(spec.to_dict()):
            continue
        found += 1
        lines.append(f"[{sub.name}]")
        for path in sorted(sub.glob("certificate_*.json")):
            cert = cz.WeightCertificate.from_dict(json.loads(path.read_text()))
            if cert.limit_of_valid_sequence:
                why = LIMIT_JUSTIFICATION
            else:
                why = JUSTIFICATION.get((cert.kind, cert.status))
            verdict = f"justified by the {why}" if why else "no conclusion"
            lines.append(f"  {cert.kind.value}: {cert.status.value}, c = {cert.rate_c:.6g}, "
                         f"weights = {cert.weights.tolist()} -> {verdict} [{path.name}]")
        if (sub / "lyapunov.json").exists():
            res = [r for r in json.loads((sub / "lyapunov.json").read_text())["results"] if "passed" in r]
            lines.append(f"  Lyapunov decrease: {sum(r['passed'] for r in res)}/{len(res)} trajectories "
                         f"non-increasing, using the certificates above")
        if (sub / "simulate.json").exists():
            sim = json.loads((sub / "simulate.json").read_text())
            m = sim["monotonicity"]
            lines.append(f"  order preservation: {m['passed']}/{m['pairs']} pairs")
            for key in ("sum_l1", "max_linf"):
                if key in sim:
                    p, f = sim[key]["pair_contraction"], sim[key]["flow_decay"]
                    lines.append(f"  {key} envelopes (c = {sim[key]['rate_c']:.6g}): pairs {p['passed']}/"
                                 f"{p['total']}, flow {f['passed']}/{f['total']} -> justified by the "
                                 f"{JUSTIFICATION[(cz.CertKind(key), cz.CertStatus.CONTRACTIVE)]} "
                                 f"[certificate_{key}.json]")
        if (sub / "entrain.json").exists():
            ent = json.loads((sub / "entrain.json").read_text())
            recs = ent["records"]
            hit = [r["first_within_1e-8"] for r in recs]
            lines.append(f"  entrainment: {sum(h is not None for h in hit)}/{len(recs)} starts within 1e-8 of "
                         f"the periodic orbit, fixed-point spread {ent['fixed_point_spread']:.3e} -> "
                         f"{ENTRAIN_JUSTIFICATION} [certificate_{ent['certificate']}.json]")
        lines.append("")
    if not found:
        lines.append("no prior runs for this model under the output directory")
    text = "\n".join(lines).rstrip() + "\n"
    (run_dir / "report.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


HANDLERS = {
    Command.MEASURE: _measure,
    Command.CERTIFY: _certify,
    Command.LYAPUNOV: _lyapunov,
    Command.SIMULATE: _simulate,
    Command.ENTRAIN: _entrain,
}


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    cfg.out.mkdir(parents=True, exist_ok=True)
    run_dir = cfg.out
    try:
        cfg.validate()
        spec = ModelSpec.from_json(cfg.model)
        model = spec.build()
        run_dir = cfg.run_dir(spec)
        run_dir.mkdir(parents=True, exist_ok=True)
        _write_json(run_dir / "config.json", cfg.key(spec))
        if cfg.command is Command.REPORT:
            return _report(cfg, spec, run_dir)
        return HANDLERS[cfg.command](cfg, model, run_dir)
    except (ConfigError, ModelError, OSError, json.JSONDecodeError, ValueError) as exc:
        code, kind = EXIT_INVALID, "validation"
        err = exc
    except CertificationRefused as exc:
        code, kind, err = EXIT_FAILED_CERT, "certification", exc
    except IntegrationError as exc:
        code, kind, err = EXIT_BLOWUP, "integration", exc
    _write_json(run_dir / "error.json", {"error": kind, "message": str(err), "exit_code": code})
    print(f"error ({kind}): {err}", file=sys.stderr)
    return code


def parse_args(argv=None) -> RunConfig:
    p = argparse.ArgumentParser(prog="monocert", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=[c.value for c in Command])
    p.add_argument("--model", required=True, type=Path, help="model spec JSON")
    p.add_argument("--samples", type=int, default=cz.DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--margin", type=float, default=cz.DEFAULT_MARGIN)
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--norm", choices=["l1", "linf"], default=None,
                   help="restrict to one certificate kind (default: both)")
    p.add_argument("--starts", type=int, default=None, help="random initial conditions per check")
    p.add_argument("--out", type=Path, default=Path("runs"))
    a = p.parse_args(argv)
    return RunConfig(Command(a.command), a.model, a.samples, a.seed, a.margin, a.step,
                     a.horizon, a.norm, a.out, a.starts)


def main(argv=None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())

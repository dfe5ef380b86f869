"""Command-line front end: run the certificates and write a JSON verification report.

Every check carries a one-line statement of the claim it tests, the worst and
mean residual as full-precision strings, its tolerance and a pass flag.  Wall
times and the timestamp live in the ``envelope`` field, which is excluded from
the stable hash so that reports are byte-stable under a fixed seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import asd4, conic_space, jets, legendre_flat, projective, radon, tensorlab
from .quantics import BinaryForm, DomainError

SCHEMA_VERSION = "1.0"

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

DEFAULTS: dict = {
    "seed": 7,
    "base.points": 20,
    "base.tol": 1e-8,
    "base.bracket_tol": 1e-10,
    "radon.points": 20,
    "radon.tol": 1e-7,
    "radon.closed_form_tol": 1e-9,
    "radon.f1_draws": 5,
    "radon.harmonic_draws": 2,
    "jet.points": 10,
    "jet.tol": 1e-6,
    "jet.delta_tol": 1e-9,
    "asd.points": 10,
    "asd.weyl_tol": 1e-6,
    "asd.identity_tol": 1e-7,
    "asd.closed_tol": 1e-7,
    "asd.frobenius_tol": 1e-6,
    "asd.control_margin": 1e-3,
    "asd.kahler_tol": 1e-6,
    "asd.kahler_points": 5,
    "examples.points": 10,
    "examples.einstein_tol": 1e-7,
    "examples.kappa_tol": 1e-6,
    "examples.ricci_tol": 1e-7,
    "examples.monopole_tol": 1e-8,
    "examples.toda_tol": 1e-9,
    "poncelet.lines": 50,
    "poncelet.starts": 5,
    "poncelet.invariant_tol": 1e-10,
    "poncelet.closure_tol": 1e-8,
    "poncelet.control_conics": 50,
    "poncelet.control_floor": 1e-4,
    "poncelet.gergonne_triples": 100,
    "poncelet.gergonne_tol": 1e-9,
    "poncelet.cayley_tol": 1e-12,
    "poncelet.moment_points": 20,
    "poncelet.moment_tol": 1e-9,
    "legendre.points": 10,
    "legendre.curvature_points": 3,
    "legendre.pde_tol": 1e-7,
    "legendre.ma_tol": 1e-6,
    "legendre.ricci_tol": 1e-6,
}


class CliError(Exception):
    """Failure reported as a structured error object with a nonzero exit code."""

    def __init__(self, kind: str, message: str, code: int = 2):
        super().__init__(message)
        self.kind = kind
        self.code = code

    def as_dict(self) -> dict:
        return {"error": {"type": self.kind, "message": str(self)}}


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Values are cast to the default's type."""
    out = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise CliError("config", f"line {n}: expected 'key = value'")
        if key not in DEFAULTS:
            raise CliError("config", f"line {n}: unknown key {key!r}")
        kind = type(DEFAULTS[key])
        try:
            out[key] = kind(value)
        except ValueError:
            raise CliError("config", f"line {n}: cannot read {value!r} as {kind.__name__}") from None
    return out


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]!r}\n" for k in sorted(cfg))


# ---------------------------------------------------------------------------
# Checks and reports
# ---------------------------------------------------------------------------

# Each check name maps to exactly one claim.
ANCHORS: dict = {
    "base.scalar_curvature": "the SO(3)-invariant metric on conics has scalar curvature -15/16",
    "base.einstein": "the metric on the space of conics is Einstein",
    "base.killing": "the eight sl(3) generators are Killing vector fields",
    "base.brackets": "three of the Killing fields close into so(3)",
    "base.nabla_G": "the symmetric cubic G is parallel",
    "base.trace_free": "G is trace-free",
    "base.quadratic_identity": "6 G^a_(bc G_de)a = g_(bc g_de)",
    "base.GG_trace": "G_acd G_b^cd = 7/12 g_ab",
    "base.GG_full_trace": "G_abc G^abc = 35/12",
    "radon.f1.laplace": "the closed-form family satisfies Delta F = -F/12",
    "radon.f1.box": "the closed-form family satisfies box F = dF/24",
    "radon.harmonic.laplace": "the harmonic family satisfies Delta F = -F/12",
    "radon.harmonic.box": "the harmonic family satisfies box F = dF/24",
    "radon.residue.closed_form": "residue transforms of monomial sections match their closed forms",
    "radon.residue.laplace": "residue transforms satisfy Delta F = -F/12",
    "radon.residue.box": "residue transforms satisfy box F = dF/24",
    "radon.mu_kappa.base": "box F = kappa dF forces Delta F = (6 kappa^2 + R/10) F; kappa=1/24, R=-15/16",
    "radon.mu_kappa.jet": "kappa=1/3 and R=-60 give Delta F = -16/3 F on the jet metric",
    "jet.einstein": "the metric on 4-jets of conics is Einstein",
    "jet.scalar_curvature": "the jet-space metric has scalar curvature -60",
    "jet.ode": "conics solve the fifth-order ODE",
    "jet.q_power": "along a conic (q^(-2/3))''' = 0",
    "base.conic_delta": "Z'' . (Z x Z') = 8i along the parametrised conic",
    "asd.weyl_plus": "the conformal structure on F=0 is anti-self-dual",
    "asd.identity": "the two-form identity relating Sigma and dF holds on M",
    "asd.closedness": "the three Kahler forms are closed on F=0",
    "asd.frobenius": "the alpha-surface distribution is integrable",
    "asd.control_closedness": "a function outside the range fails closedness",
    "asd.tri_kahler.scalar_flat": "each metric |Omega_i| gamma is scalar-flat",
    "asd.tri_kahler.parallel": "each Omega_i is parallel for |Omega_i| gamma",
    "asd.tri_kahler.J2": "each Omega_i defines a complex structure, J^2 = -1",
    "asd.tri_kahler.cky": "barycenter forms are conformal Killing-Yano",
    "examples.einstein.scalar": "the Einstein example has scalar curvature -24",
    "examples.einstein.einstein": "the Einstein example is Einstein",
    "examples.einstein.weyl_plus": "the Einstein example is anti-self-dual",
    "examples.kappa.scalar": "the kappa family has scalar curvature -24(kappa^2+1)",
    "examples.kappa.einstein": "the kappa family is Einstein",
    "examples.ricci_flat.ricci": "the Gibbons-Hawking example is Ricci-flat",
    "examples.ricci_flat.gibbons_hawking": "the Ricci-flat example has Gibbons-Hawking form",
    "examples.ricci_flat.monopole": "V = -ln(X^2+Y^2) - 1 solves the monopole equation",
    "examples.scalar_flat.scalar": "the Toda example is scalar-flat",
    "examples.scalar_flat.kahler": "the Toda example is Kahler",
    "examples.scalar_flat.toda": "e^u = 2z(r^2+y^2) solves the SU(infinity) Toda equation",
    "examples.scalar_flat.linearized": "P = r/(r^2+y^2) solves the linearised Toda equation",
    "poncelet.image_invariant": "conics from lines in CP3 have vanishing invariant I",
    "poncelet.invariant_routes": "I from the matrix and from transvectants agree",
    "poncelet.bryant": "Q(tp+sq) lies on the conic of the line",
    "poncelet.closure": "conics from lines admit closing Poncelet triangles",
    "poncelet.control_invariant": "generic conics have nonzero invariant I",
    "poncelet.control_closure": "generic conics do not close Poncelet triangles",
    "poncelet.gergonne": "the Gergonne point of a triangle equals Q(p)",
    "poncelet.cayley": "Cayley's a2 equals -3/2 I",
    "poncelet.moment_map": "the quadratic map is a moment map for SL(2)",
    "legendre.flat_structure": "the flat model carries a flat SO(3) structure",
    "legendre.system_equivalence": "the six PDEs equal the flat range equations",
    "legendre.pde": "residue transforms solve the six flat PDEs",
    "legendre.sigma_closed": "the flat Sigma forms are closed",
    "legendre.sigma_algebra": "the flat Sigma forms satisfy the spinor algebra on F=0",
    "legendre.monge_ampere": "the Legendre transform potential solves Monge-Ampere",
    "legendre.ricci": "the Legendre transform metric is Ricci-flat",
}


@dataclass
class Check:
    name: str
    values: list
    tol: float
    lower_bound: bool = False
    extra: dict = field(default_factory=dict)
    wall: float = 0.0

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def maximum(self) -> float:
        return max(self.values)

    @property
    def minimum(self) -> float:
        return min(self.values)

    @property
    def passed(self) -> bool:
        if not self.values:
            return False
        if self.lower_bound:
            return bool(min(self.values) >= self.tol)
        return bool(max(self.values) <= self.tol)

    def as_dict(self) -> dict:
        v = [float(x) for x in self.values]
        d = {
            "name": self.name,
            "anchor": ANCHORS[self.name],
            "kind": "lower_bound" if self.lower_bound else "upper_bound",
            "n": len(v),
            "max": repr(max(v)) if v else None,
            "mean": repr(float(np.mean(v))) if v else None,
            "min": repr(min(v)) if v else None,
            "tol": repr(float(self.tol)),
            "pass": self.passed,
        }
        if self.extra:
            d["extra"] = self.extra
        return d


class Recorder:
    """Collects checks and the sample description of one command."""

    def __init__(self):
        self.checks: list = []
        self.sample: dict = {}
        self._t = time.perf_counter()

    def add(self, name: str, values, tol: float, lower_bound: bool = False, **extra) -> Check:
        if name not in ANCHORS:
            raise KeyError(f"check {name!r} has no anchor")
        now = time.perf_counter()
        vals = [float(v) for v in np.ravel(np.asarray(values, dtype=float))]
        c = Check(name, vals, tol, lower_bound, _plain(extra), now - self._t)
        self._t = now
        self.checks.append(c)
        return c


def _plain(obj):
    """JSON-ready copy with floats as full-precision strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return repr(float(obj))
    return obj


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def build_report(command: str, seed: int, rec: Recorder, started: float) -> dict:
    body = {
        "schema_version": SCHEMA_VERSION,
        "artifact_version": __version__,
        "command": command,
        "seed": seed,
        "sample_spec": _plain(rec.sample),
        "checks": [c.as_dict() for c in rec.checks],
        "pass": bool(rec.checks) and all(c.passed for c in rec.checks),
    }
    body["stable_hash"] = hashlib.sha256(canonical_json(body).encode()).hexdigest()
    body["envelope"] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": {c.name: round(c.wall, 6) for c in rec.checks},
        "total_wall_seconds": round(time.perf_counter() - started, 6),
    }
    return body


def stable_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in ("envelope", "stable_hash")}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Solutions and spec files
# ---------------------------------------------------------------------------

# name -> (F1 parameters, hypersurface coordinate to solve for)
NAMED_SOLUTIONS = {
    "einstein": ([0, 1, 0, 0, 0, 1, 0, 0], 2),
    "kappa-0.5": ([0, 1, 0.5, 0, 0, 1, 0, 0], 2),
    "kappa-1": ([0, 1, 1, 0, 0, 1, 0, 0], 2),
    "kappa-2": ([0, 1, 2, 0, 0, 1, 0, 0], 2),
    "scalar-flat": ([0, 1, 0, 0, 0, 0, 0, 1], 2),
    "generic": ([0.3, 0.5, -1, 0.2, 0.7, 1, 0.4, -0.6], None),
}
CONTROL_SOLUTION = "control-trace"


def _control_function(x):
    return radon.trace_conic(x) - 4.0


def named_solution(name: str):
    if name == CONTROL_SOLUTION:
        return _control_function, None
    if name not in NAMED_SOLUTIONS:
        known = ", ".join(sorted([*NAMED_SOLUTIONS, CONTROL_SOLUTION]))
        raise CliError("unknown_solution", f"unknown solution {name!r}; known: {known}")
    gam, dropped = NAMED_SOLUTIONS[name]
    return radon.family_F1(gam), dropped


def load_spec(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("spec", f"cannot read spec file {path}: {exc.strerror}") from None
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError("spec", f"unparsable spec file {path}: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(spec, dict):
        raise CliError("spec", "spec file must hold a JSON object")
    return spec


def _gammas_from(spec: dict) -> list:
    gam = spec.get("gammas")
    if not isinstance(gam, list) or len(gam) != 8:
        raise CliError("spec", "'gammas' must be a list of eight numbers")
    try:
        return [float(v) for v in gam]
    except (TypeError, ValueError):
        raise CliError("spec", "'gammas' must be numbers") from None


def _f1(gam):
    try:
        return radon.family_F1(gam)
    except radon.ZeroFunctionError as exc:
        raise CliError("zero_function", str(exc)) from None


# Harmonic functions of (u, q) available to the harmonic family.
HARMONIC_BASIS = {
    "u": lambda u, q: u,
    "q": lambda u, q: q + 0.0 * u,
    "u2-q2": lambda u, q: u * u - q * q,
    "uq": lambda u, q: u * q,
    "u3-3uq2": lambda u, q: u * u * u - 3 * u * q * q,
    "exp_u_cos_q": lambda u, q: jets.exp(u) * jets.cos(q),
    "exp_u_sin_q": lambda u, q: jets.exp(u) * jets.sin(q),
}


def harmonic_from_terms(terms: dict):
    unknown = [k for k in terms if k not in HARMONIC_BASIS]
    if unknown:
        raise CliError("spec", f"unknown harmonic basis functions {unknown}; known: {sorted(HARMONIC_BASIS)}")
    items = [(float(c), HARMONIC_BASIS[k]) for k, c in sorted(terms.items())]

    def K(u, q):
        out = 0.0 * u
        for c, h in items:
            out = out + c * h(u, q)
        return out

    return K


def _section_from(entry):
    """A section from ``"Z2/(Z1*Z3)"`` or ``{"numerator": {"i,j,k": c}, "denominator": {...}}``."""
    try:
        if isinstance(entry, str):
            return radon.section(entry), entry
        if isinstance(entry, dict):
            def mono(d):
                return {tuple(int(e) for e in k.split(",")): float(v) for k, v in d.items()}
            f = radon.RationalSection(mono(entry["numerator"]), mono(entry["denominator"]))
            return f, entry.get("name", canonical_json(entry))
    except (KeyError, ValueError, IndexError, AttributeError) as exc:
        raise CliError("spec", f"bad section {entry!r}: {exc}") from None
    raise CliError("spec", f"bad section {entry!r}")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def run_base(cfg: dict, rec: Recorder) -> None:
    n, seed = cfg["base.points"], cfg["seed"]
    rec.sample["base"] = {"points": n, "seed": seed, "box_half_width": 1.0}
    rows: dict = {}
    for x in conic_space.sample_box(n, seed):
        for k, v in conic_space.so3_residuals(x).items():
            rows.setdefault(k, []).append(v)
    tol = cfg["base.tol"]
    rec.add("base.scalar_curvature", rows["scalar_curvature"], tol)
    rec.add("base.einstein", rows["einstein"], tol)
    rec.add("base.killing", np.max([rows[f"killing_X{i}"] for i in range(1, 9)], axis=0), tol)
    rec.add("base.brackets", np.max([v for k, v in rows.items() if k.startswith("bracket")], axis=0),
            cfg["base.bracket_tol"])
    rec.add("base.nabla_G", rows["nabla_G"], tol)
    rec.add("base.trace_free", rows["trace_free"], tol)
    rec.add("base.quadratic_identity", rows["quadratic_identity"], tol)
    rec.add("base.GG_trace", rows["GG_seven_twelfths"], tol)
    rec.add("base.GG_full_trace", rows["GG_full_trace"], tol)


def _range_rows(F, points):
    lap, box = [], []
    for x in points:
        r = radon.range_residuals(F, x)
        lap.append(r.laplace)
        box.append(r.box)
    return lap, box


def _harmonic_draw(rng):
    names = sorted(HARMONIC_BASIS)
    chosen = rng.choice(len(names), size=3, replace=False)
    terms = {names[i]: float(rng.normal()) for i in sorted(chosen)}
    gam = rng.normal(size=8)
    gam[[2, 6, 7]] = 0.0
    return terms, [float(v) for v in gam]


def run_radon(cfg: dict, rec: Recorder, family: str | None = None, spec: dict | None = None) -> None:
    seed = cfg["seed"]
    rng = np.random.default_rng(seed)
    points = conic_space.sample_box(cfg["radon.points"], seed + 1, half_width=0.8)
    tol = cfg["radon.tol"]
    info: dict = {"points": len(points), "point_seed": seed + 1, "box_half_width": 0.8}
    fams = [family] if family else ["f1", "harmonic", "residue"]
    if spec is not None and family is None:
        raise CliError("usage", "--spec needs --family")

    if "f1" in fams:
        if spec is not None:
            draws = [_gammas_from(spec)]
        else:
            draws = [[float(v) for v in rng.normal(size=8)] for _ in range(cfg["radon.f1_draws"])]
        lap, box = [], []
        for gam in draws:
            l_, b_ = _range_rows(_f1(gam), points)
            lap += l_
            box += b_
        info["f1_gammas"] = draws
        rec.add("radon.f1.laplace", lap, tol)
        rec.add("radon.f1.box", box, tol)

    if "harmonic" in fams:
        if spec is not None:
            terms = spec.get("harmonic")
            if not isinstance(terms, dict) or not terms:
                raise CliError("spec", "'harmonic' must map basis names to coefficients")
            draws = [(terms, _gammas_from(spec) if "gammas" in spec else [0.0] * 8)]
        else:
            draws = [_harmonic_draw(rng) for _ in range(cfg["radon.harmonic_draws"])]
        lap, box = [], []
        for terms, gam in draws:
            try:
                F = radon.family_harmonic(harmonic_from_terms(terms), gam, seed=seed)
            except ValueError as exc:
                raise CliError("spec", str(exc)) from None
            l_, b_ = _range_rows(F, points)
            lap += l_
            box += b_
        info["harmonic_draws"] = [{"K": t, "gammas": g} for t, g in draws]
        rec.add("radon.harmonic.laplace", lap, tol)
        rec.add("radon.harmonic.box", box, tol)

    if "residue" in fams:
        closed = radon.closed_form_residues()
        if spec is not None:
            entries = spec.get("sections")
            if not isinstance(entries, list) or not entries:
                raise CliError("spec", "'sections' must be a non-empty list")
            lam0 = complex(spec.get("lam0", 1.0))
        else:
            entries = ["Z2/(Z1*Z3)", "1/Z1", "Z2/(Z1^2)"]
            lam0 = 1.0
        cf, lap, box, names = [], [], [], []
        for entry in entries:
            f, label = _section_from(entry)
            F = radon.residue_transform(f, radon.PoleSpec(lam0))
            try:
                l_, b_ = _range_rows(F, points)
            except radon.BranchTrackingError as exc:
                raise CliError("degenerate", f"section {label}: {exc}", code=3) from None
            lap += l_
            box += b_
            names.append(label)
            if label in closed and lam0 == 1.0:
                ref = closed[label]
                cf += [abs(F(x) - ref(x)) / (1 + abs(ref(x))) for x in points]
        info["residue_sections"] = names
        if cf:
            rec.add("radon.residue.closed_form", cf, cfg["radon.closed_form_tol"])
        rec.add("radon.residue.laplace", lap, tol)
        rec.add("radon.residue.box", box, tol)

    if spec is None:
        F = _f1([float(v) for v in rng.normal(size=8)])
        mk = radon.mu_kappa_check(F, radon.EIGEN_BOX, points, tol=tol)
        rec.add("radon.mu_kappa.base",
                [mk["premise_residual"], mk["laplace_residual"], abs(mk["mu"] - radon.EIGEN_LAPLACE)],
                tol, mu=mk["mu"])
        run_jet(cfg, rec)
    rec.sample["radon"] = info


def run_jet(cfg: dict, rec: Recorder) -> None:
    seed, n = cfg["seed"], cfg["jet.points"]
    tol = cfg["jet.tol"]
    ein, scal, lap = [], [], []
    F = radon.jet_range_function(0.3)
    for X in radon.sample_jet_points(n, seed):
        c = tensorlab.curvature(radon.jet_metric, X)
        ein.append(float(np.abs(c.ricci - c.scalar / 5 * c.metric).max() / (1 + np.abs(c.ricci).max())))
        scal.append(abs(c.scalar + 60.0) / 60.0)
        lap.append(abs(radon.laplacian_generic(F, X, radon.jet_metric) + 16.0 / 3.0 * F(X)) / (1 + abs(F(X))))
    mu = radon.predicted_mu(1.0 / 3.0, -60.0)
    rec.add("radon.mu_kappa.jet", [abs(mu + 16.0 / 3.0)] + lap, tol, mu=mu)
    rec.add("jet.einstein", ein, tol)
    rec.add("jet.scalar_curvature", scal, tol)
    rng = np.random.default_rng(seed)
    ode, qp = [], []
    for _ in range(n):
        coeffs = rng.uniform(-1, 1, 6)
        coeffs[0] = 1.0 + abs(coeffs[0])
        coeffs[3] = -1.0 - abs(coeffs[3])
        branch = radon.conic_branch(coeffs)
        ode.append(radon.ode_residual(branch, 0.0))
        qp.append(radon.q_power_third_derivative(branch, 0.0))
    rec.add("jet.ode", ode, tol)
    rec.add("jet.q_power", qp, tol)
    delta = [abs(conic_space.conic_delta(x, complex(rng.normal(), rng.normal())) - 8j) / 8
             for x in conic_space.sample_box(n, seed)]
    rec.add("base.conic_delta", delta, cfg["jet.delta_tol"])
    rec.sample["jet"] = {"points": n, "seed": seed, "pole": 0.3}


def _sample_X(F, n, seed, dropped):
    try:
        return asd4.sample_hypersurface(F, n, seed, dropped=dropped)
    except RuntimeError as exc:
        raise CliError("degenerate", str(exc), code=3) from None


def run_build_asd(cfg: dict, rec: Recorder, solution: str | None, spec: dict | None) -> None:
    seed, n = cfg["seed"], cfg["asd.points"]
    if spec is not None:
        F, dropped = _f1(_gammas_from(spec)), spec.get("dropped")
        label = {"spec": spec}
    else:
        F, dropped = named_solution(solution or "einstein")
        label = {"solution": solution or "einstein"}
    points = _sample_X(F, n, seed, dropped)
    _add_asd(cfg, rec, F, points, seed)
    rec.sample["asd"] = {**label, "points": n, "seed": seed}


def _add_asd(cfg, rec, F, points, seed):
    rows = {"weyl_plus": [], "identity": [], "closedness": [], "frobenius": []}
    rng = np.random.default_rng(seed)
    for hp in points:
        pkg = asd4.build_conformal(F, hp)
        rows["weyl_plus"].append(asd4.weyl_plus_ratio(pkg)["ratio"])
        rows["identity"].append(asd4.identity_residual(F, hp.m.x))
        rows["closedness"].append(max(asd4.closedness_residuals(F, hp.m.x)))
        lam = float(rng.uniform(-1.5, 1.5))
        rows["frobenius"].append(asd4.frobenius_residual(F, hp.m.x, lam)["residual"])
    rec.add("asd.weyl_plus", rows["weyl_plus"], cfg["asd.weyl_tol"])
    rec.add("asd.identity", rows["identity"], cfg["asd.identity_tol"])
    rec.add("asd.closedness", rows["closedness"], cfg["asd.closed_tol"])
    rec.add("asd.frobenius", rows["frobenius"], cfg["asd.frobenius_tol"])


def run_verify_asd(cfg: dict, rec: Recorder) -> None:
    seed, n = cfg["seed"], cfg["asd.points"]
    F, dropped = named_solution("einstein")
    _add_asd(cfg, rec, F, _sample_X(F, n, seed, dropped), seed)
    # the control is Tr A - 4, which is SO(3)-invariant but not in the range
    ctrl_pts = _sample_X(_control_function, n, seed, None)
    margins = [max(asd4.closedness_residuals(_control_function, hp.m.x)) for hp in ctrl_pts]
    rec.add("asd.control_closedness", margins, cfg["asd.control_margin"], lower_bound=True)
    tk = {"scalar_flat": [], "parallel": [], "J2": [], "cky": []}
    used = []
    for name in ("einstein", "generic"):
        G, d = named_solution(name)
        rows = asd4.tri_kahler_certificate(G, _sample_X(G, cfg["asd.kahler_points"], seed, d))
        for k in tk:
            tk[k] += rows[k]
        used.append(name)
    ktol = cfg["asd.kahler_tol"]
    rec.add("asd.tri_kahler.scalar_flat", tk["scalar_flat"], ktol)
    rec.add("asd.tri_kahler.parallel", tk["parallel"], ktol)
    rec.add("asd.tri_kahler.J2", tk["J2"], ktol)
    rec.add("asd.tri_kahler.cky", tk["cky"], ktol)
    rec.sample["asd"] = {"solution": "einstein", "control": CONTROL_SOLUTION, "points": n, "seed": seed,
                         "tri_kahler_solutions": used, "tri_kahler_points": cfg["asd.kahler_points"]}


EXAMPLE_NAMES = ("einstein", "kappa", "ricci-flat", "scalar-flat")


def run_example(cfg: dict, rec: Recorder, name: str) -> None:
    n, seed = cfg["examples.points"], cfg["seed"]
    if name not in EXAMPLE_NAMES:
        raise CliError("unknown_example", f"unknown example {name!r}; known: {', '.join(EXAMPLE_NAMES)}")
    key = {"einstein": "einstein", "kappa": "kappa_family", "ricci-flat": "ricci_flat",
           "scalar-flat": "scalar_flat_kahler"}[name]
    try:
        out = asd4.certify_example(key, n, seed)
    except RuntimeError as exc:
        raise CliError("degenerate", str(exc), code=3) from None
    mean = out.get("mean", {})

    def add(check, k, tol, src=out, msrc=mean):
        rec.add(check, [src[k]], tol, mean=msrc[k])

    if name == "einstein":
        t = cfg["examples.einstein_tol"]
        # scalar curvature is compared relative to its value
        rec.add("examples.einstein.scalar", [out["scalar_err"] / 24.0], t)
        add("examples.einstein.einstein", "einstein", t)
        add("examples.einstein.weyl_plus", "weyl_plus", t)
    elif name == "kappa":
        t = cfg["examples.kappa_tol"]
        rows = out["kappas"]
        rec.add("examples.kappa.scalar",
                [rows[k]["scalar_err"] / (24 * (float(k) ** 2 + 1)) for k in sorted(rows)], t,
                kappas=sorted(rows), excluded=out["excluded"])
        rec.add("examples.kappa.einstein", [rows[k]["einstein"] for k in sorted(rows)], t)
    elif name == "ricci-flat":
        add("examples.ricci_flat.ricci", "ricci", cfg["examples.ricci_tol"])
        add("examples.ricci_flat.gibbons_hawking", "gibbons_hawking_match", cfg["examples.ricci_tol"])
        add("examples.ricci_flat.monopole", "monopole_log", cfg["examples.monopole_tol"])
    else:
        t = cfg["examples.toda_tol"]
        add("examples.scalar_flat.scalar", "scalar", t)
        add("examples.scalar_flat.kahler", "kahler_parallel", t)
        add("examples.scalar_flat.toda", "toda", t)
        add("examples.scalar_flat.linearized", "linearized", t)
    rec.sample.setdefault("examples", {})[name] = {"points": n, "seed": seed}


def _random_cubic(rng):
    return BinaryForm(rng.normal(size=4) + 1j * rng.normal(size=4))


def run_poncelet(cfg: dict, rec: Recorder) -> None:
    seed, n_lines, starts = cfg["seed"], cfg["poncelet.lines"], cfg["poncelet.starts"]
    rng = np.random.default_rng(seed)
    inv, routes, bry, close = [], [], [], []
    for _ in range(n_lines):
        L = projective.LineCP3(_random_cubic(rng), _random_cubic(rng))
        c = projective.conic_of_line(L)
        inv.append(projective.normalized_invariant(c))
        psi, G = c.forms()
        I_m = projective.invariant_I(c)
        routes.append(abs(projective.invariant_I_forms(psi, G) - I_m) / np.linalg.norm(c.A) ** 2)
        t, s = rng.normal(size=2) + 1j * rng.normal(size=2)
        bry.append(projective.bryant_residual(L, t, s))
        for k in range(starts):
            close.append(projective.poncelet_close(c.A, rng=rng, token=k))
    tol = cfg["poncelet.invariant_tol"]
    rec.add("poncelet.image_invariant", inv, tol)
    rec.add("poncelet.invariant_routes", routes, tol)
    rec.add("poncelet.bryant", bry, tol)
    rec.add("poncelet.closure", close, cfg["poncelet.closure_tol"])

    ctrl, gaps, cay = [], [], []
    for _ in range(cfg["poncelet.control_conics"]):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        A = A + A.T
        ctrl.append(projective.normalized_invariant(projective.ConicPair(A)))
        gaps.append(projective.poncelet_close(A, rng=rng))
        a2 = projective.cayley_a2(A)
        I1 = projective.invariant_I(projective.ConicPair(projective.unit_det(A)))
        cay.append(abs(a2 + projective.CAYLEY_TO_I * I1) / (1 + abs(a2)))
    q = np.quantile(ctrl, [0.0, 0.1, 0.5, 0.9, 1.0])
    rec.add("poncelet.control_invariant", ctrl, cfg["poncelet.control_floor"], lower_bound=True,
            quantiles={"0": q[0], "0.1": q[1], "0.5": q[2], "0.9": q[3], "1": q[4]})
    rec.add("poncelet.control_closure", gaps, cfg["poncelet.control_floor"], lower_bound=True)
    rec.add("poncelet.cayley", cay, cfg["poncelet.cayley_tol"])

    ger = []
    for _ in range(cfg["poncelet.gergonne_triples"]):
        a = rng.normal(size=3) + 1j * rng.normal(size=3)
        roots_q = projective.z_roots(projective.q_map(projective.cubic_from_roots(*a)))
        ger.append(projective.root_set_distance(list(projective.gergonne_point(*a)), roots_q))
    rec.add("poncelet.gergonne", ger, cfg["poncelet.gergonne_tol"])

    mm = [projective.moment_map_residual(rng.normal(size=4) + 1j * rng.normal(size=4))
          for _ in range(cfg["poncelet.moment_points"])]
    rec.add("poncelet.moment_map", mm, cfg["poncelet.moment_tol"])
    rec.sample["poncelet"] = {"lines": n_lines, "starts_per_line": starts, "seed": seed,
                              "control_conics": cfg["poncelet.control_conics"],
                              "gergonne_triples": cfg["poncelet.gergonne_triples"],
                              "moment_points": cfg["poncelet.moment_points"]}


def run_legendre(cfg: dict, rec: Recorder) -> None:
    seed, n = cfg["seed"], cfg["legendre.points"]
    fs = legendre_flat.flat_structure_residuals()
    rec.add("legendre.flat_structure", list(fs.values()), cfg["legendre.pde_tol"])
    se = legendre_flat.system_equivalence(seed=seed)
    rec.add("legendre.system_equivalence", [se["fit_residual"]], cfg["legendre.pde_tol"],
            transfer_condition=se["transfer_condition"])
    try:
        out = legendre_flat.certify_legendre(n, seed, curvature_points=cfg["legendre.curvature_points"])
    except DomainError as exc:
        raise CliError("degenerate", str(exc), code=3) from None
    m = out["mean"]
    tol = cfg["legendre.pde_tol"]
    rec.add("legendre.pde", [out["flat_system"]], tol, mean=m["flat_system"])
    rec.add("legendre.sigma_closed", [out["sigma_closed"]], tol, mean=m["sigma_closed"])
    rec.add("legendre.sigma_algebra", [out["sigma_algebra"]], tol, mean=m["sigma_algebra"])
    rec.add("legendre.monge_ampere", [out["monge_ampere"]], cfg["legendre.ma_tol"], mean=m["monge_ampere"])
    rec.add("legendre.ricci", [out["ricci"]], cfg["legendre.ricci_tol"], mean=m["ricci"])
    rec.sample["legendre"] = {"points": n, "seed": seed, "curvature_points": cfg["legendre.curvature_points"],
                              "folds_skipped": out["folds_skipped"]}


def run_all(cfg: dict, rec: Recorder) -> None:
    run_base(cfg, rec)
    run_radon(cfg, rec)
    run_verify_asd(cfg, rec)
    for name in EXAMPLE_NAMES:
        run_example(cfg, rec, name)
    run_poncelet(cfg, rec)
    run_legendre(cfg, rec)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser
    quiet = argparse.SUPPRESS
    common.add_argument("--seed", type=int, default=quiet, help="sampling seed (default 7)")
    common.add_argument("--config", type=Path, default=quiet, help="file of 'key = value' lines")
    common.add_argument("--print-config", action="store_true", default=quiet,
                        help="print the effective configuration and exit")
    common.add_argument("--out", type=Path, default=quiet, help="report path (default report-<command>.json)")
    common.add_argument("--quiet", action="store_true", default=quiet, help="do not print the check table")

    p = argparse.ArgumentParser(prog="conicgeom", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command")

    verify = sub.add_parser("verify", help="run a certificate", parents=[common])
    vsub = verify.add_subparsers(dest="target", required=True)
    vb = vsub.add_parser("base", parents=[common], help="Einstein metric and SO(3) structure on conics")
    vb.add_argument("--points", type=int)
    vr = vsub.add_parser("radon", parents=[common], help="range equations of the Radon transform")
    vr.add_argument("--family", choices=["f1", "harmonic", "residue"])
    vr.add_argument("--spec", type=Path)
    vr.add_argument("--points", type=int)
    va = vsub.add_parser("asd", parents=[common], help="ASD pipeline, negative control and tri-Kahler")
    va.add_argument("--points", type=int)

    build = sub.add_parser("build", help="build a geometric structure", parents=[common])
    bsub = build.add_subparsers(dest="target", required=True)
    ba = bsub.add_parser("asd", parents=[common], help="ASD structure from a range solution")
    g = ba.add_mutually_exclusive_group()
    g.add_argument("--solution", help=f"one of {', '.join([*NAMED_SOLUTIONS, CONTROL_SOLUTION])}")
    g.add_argument("--spec", type=Path, help='JSON file {"gammas": [8 numbers], "dropped": index}')
    ba.add_argument("--points", type=int)

    ex = sub.add_parser("examples", help="worked metrics", parents=[common])
    esub = ex.add_subparsers(dest="target", required=True)
    er = esub.add_parser("run", parents=[common])
    er.add_argument("--name", required=True, help=", ".join(EXAMPLE_NAMES))
    er.add_argument("--points", type=int)

    po = sub.add_parser("poncelet", parents=[common], help="conics from lines and Poncelet closure")
    po.add_argument("--lines", type=int)
    sub.add_parser("legendre", parents=[common], help="flat model and generalised Legendre transform")
    sub.add_parser("all", parents=[common], help="every certificate")
    return p


def _command_label(args) -> str:
    parts = [args.command]
    if getattr(args, "target", None):
        parts.append(args.target)
    return " ".join(parts)


def effective_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError("config", f"cannot read config {args.config}: {exc.strerror}") from None
        cfg.update(parse_config_text(text))
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    pts = getattr(args, "points", None)
    if pts is not None:
        key = {"verify base": "base.points", "verify radon": "radon.points", "verify asd": "asd.points",
               "build asd": "asd.points", "examples run": "examples.points"}[_command_label(args)]
        cfg[key] = pts
    if getattr(args, "lines", None) is not None:
        cfg["poncelet.lines"] = args.lines
    return cfg


def dispatch(args, cfg: dict, rec: Recorder) -> None:
    label = _command_label(args)
    if label == "verify base":
        run_base(cfg, rec)
    elif label == "verify radon":
        spec = load_spec(args.spec) if args.spec else None
        run_radon(cfg, rec, args.family, spec)
    elif label == "verify asd":
        run_verify_asd(cfg, rec)
    elif label == "build asd":
        spec = load_spec(args.spec) if args.spec else None
        run_build_asd(cfg, rec, args.solution, spec)
    elif label == "examples run":
        run_example(cfg, rec, args.name)
    elif label == "poncelet":
        run_poncelet(cfg, rec)
    elif label == "legendre":
        run_legendre(cfg, rec)
    elif label == "all":
        run_all(cfg, rec)
    else:  # pragma: no cover - argparse restricts the choices
        raise CliError("usage", f"unknown command {label!r}")


def _print_table(report: dict, stream) -> None:
    for c in report["checks"]:
        flag = "PASS" if c["pass"] else "FAIL"
        bound = ">=" if c["kind"] == "lower_bound" else "<="
        worst = c["min"] if c["kind"] == "lower_bound" else c["max"]
        print(f"{flag}  {c['name']:<34} {float(worst):.3e} {bound} {float(c['tol']):.0e}  {c['anchor']}",
              file=stream)
    print(f"{'PASS' if report['pass'] else 'FAIL'}  {report['command']}  hash {report['stable_hash'][:16]}",
          file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        if getattr(args, "print_config", False):
            sys.stdout.write(format_config(effective_config(args)))
            return 0
        parser.error("a command is required")
    label = _command_label(args)
    out = getattr(args, "out", None) or Path(f"report-{label.replace(' ', '-')}.json")
    started = time.perf_counter()
    try:
        cfg = effective_config(args)
        if getattr(args, "print_config", False):
            sys.stdout.write(format_config(cfg))
            return 0
        rec = Recorder()
        try:
            dispatch(args, cfg, rec)
        except DomainError as exc:
            raise CliError("degenerate", str(exc), code=3) from None
    except CliError as exc:
        err = {"schema_version": SCHEMA_VERSION, "artifact_version": __version__, "command": label,
               **exc.as_dict()}
        text = json.dumps(err, indent=2, sort_keys=True) + "\n"
        write_atomic(out, text)
        sys.stderr.write(text)
        return exc.code
    report = build_report(label, cfg["seed"], rec, started)
    write_atomic(out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    if not getattr(args, "quiet", False):
        _print_table(report, sys.stdout)
    return 0 if report["pass"] else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

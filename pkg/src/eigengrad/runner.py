"""Config-driven experiment pipeline: mesh, eigensolve, reports, tables, plots."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import analysis, analytic, geometry, plots
from .eigensolve import Spectrum, check_spectrum, load_spectrum, save_spectrum, solve_lowest
from .fem import SparsePencil, assemble, export_matrix_market, gradient

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "EIGENGRAD_OUTPUT_ROOT"
CHECKS = ("ratios", "nodal", "certificate", "decompose", "weyl", "cluster_grad", "boundary")
CSV_COLUMNS = ("family", "lambda", "sup_e", "sup_grad", "ratio", "r_max_normalized", "certificate_normalized")
MANIFOLD_FIELDS = {
    "icosphere": {"s": int},
    "flat_torus": {"n": int, "side": float},
    "embedded_torus": {"R": float, "r": float, "nu": int, "nv": int},
    "disk": {"refinement": int},
}
EIGEN_DEFAULTS = {"count": 40, "tol": 1e-10, "dense_threshold": 0, "cluster_tol": 1e-2, "seed": 0}


class ConfigError(ValueError):
    """Invalid or incompatible experiment configuration."""


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0.0.0"


@dataclass
class ExperimentConfig:
    """One experiment.

    ``manifold`` is ``{"kind": ..., <parameters>}`` with ``icosphere: s``,
    ``flat_torus: n, side``, ``embedded_torus: R, r, nu, nv`` or
    ``disk: refinement``.  ``eigen`` holds ``count, tol, dense_threshold,
    cluster_tol, seed``.
    """

    manifold: dict
    eigen: dict = field(default_factory=dict)
    checks: list = field(default_factory=lambda: ["ratios"])
    kappa: float = 1.0
    output_dir: str | None = None
    probe_vertex: int = 0
    lambda_grid: list | None = None
    boundary_max: int = 8
    samples: int = 2048
    export_pencil: bool = False

    def __post_init__(self):
        self.eigen = {**EIGEN_DEFAULTS, **(self.eigen or {})}
        self.checks = list(self.checks)
        self.validate()
        self.checks = sorted(set(self.checks), key=CHECKS.index)

    def validate(self) -> None:
        kind = self.manifold.get("kind")
        if kind not in MANIFOLD_FIELDS:
            raise ConfigError(f"unknown manifold kind {kind!r}; expected one of {sorted(MANIFOLD_FIELDS)}")
        if kind == "flat_torus":
            self.manifold.setdefault("side", 2 * math.pi)
        for name, typ in MANIFOLD_FIELDS[kind].items():
            if name not in self.manifold:
                raise ConfigError(f"manifold {kind} needs field {name!r}")
            value = self.manifold[name]
            if typ is int and (not isinstance(value, int) or isinstance(value, bool)):
                raise ConfigError(f"manifold field {name!r} must be an integer")
            if not value > 0:
                raise ConfigError(f"manifold field {name!r} must be positive")
        unknown = set(self.checks) - set(CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}; expected a subset of {list(CHECKS)}")
        if "boundary" in self.checks and kind != "disk":
            raise ConfigError("the boundary check needs manifold kind 'disk'")
        if "weyl" in self.checks and kind == "disk":
            raise ConfigError("the weyl check needs a closed mesh")
        e = self.eigen
        unknown = set(e) - set(EIGEN_DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown eigen fields {sorted(unknown)}")
        if not (isinstance(e["count"], int) and e["count"] > 0):
            raise ConfigError("eigen.count must be a positive integer")
        for name in ("tol", "cluster_tol"):
            if not e[name] > 0:
                raise ConfigError(f"eigen.{name} must be positive")
        if not self.kappa > 0:
            raise ConfigError("kappa must be positive")
        if self.samples < 1000:
            raise ConfigError("samples must be at least 1000")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = set(cls.__dataclass_fields__)
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "manifold" not in d:
            raise ConfigError("config needs a 'manifold' field")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def resolve_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ROOT_ENV, "eigengrad_output"))


@dataclass
class StageRecord:
    name: str
    status: str = "ok"
    wall_seconds: float = 0.0
    files: list = field(default_factory=list)
    error: str | None = None
    failures: list = field(default_factory=list)


@dataclass
class RunManifest:
    config: dict
    version: str
    stages: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(s.status == "ok" for s in self.stages)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def files(self) -> list[str]:
        return [f for s in self.stages for f in s.files]

    def to_dict(self) -> dict:
        return {"config": self.config, "version": self.version, "status": "ok" if self.ok else "failed",
                "seeds": self.seeds, "stages": [asdict(s) for s in self.stages]}


# ---------------------------------------------------------------- io helpers


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def write_json(path, obj) -> Path:
    """JSON with shortest round-trip float repr (17 significant digits at most)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n")
    os.replace(tmp, path)
    return path


def _fmt_cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, rows, columns=CSV_COLUMNS) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt_cell(r.get(c)) for c in columns])
    Path(path).write_text(buf.getvalue())
    return Path(path)


def read_csv(path) -> list[dict]:
    """Rows of a report CSV with numeric cells parsed as float."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if v == "":
                    parsed[k] = None
                else:
                    try:
                        parsed[k] = float(v)
                    except ValueError:
                        parsed[k] = v
            out.append(parsed)
    return out


# ---------------------------------------------------------------- stages


def build_mesh(manifold: dict) -> geometry.TriangleMesh:
    kind = manifold["kind"]
    if kind == "icosphere":
        return geometry.make_icosphere(manifold["s"])
    if kind == "flat_torus":
        return geometry.make_flat_torus(manifold["n"], manifold.get("side", 2 * math.pi))
    if kind == "embedded_torus":
        return geometry.make_embedded_torus(manifold["R"], manifold["r"], manifold["nu"], manifold["nv"])
    if kind == "disk":
        return geometry.make_disk(manifold["refinement"])
    raise ConfigError(f"unknown manifold kind {kind!r}")


def lambda_cap(mesh: geometry.TriangleMesh) -> float:
    """Largest eigenfrequency treated as resolved: ``0.5 pi / h``."""
    return 0.5 * math.pi / mesh.max_edge_length()


def solve(pencil: SparsePencil, eigen: dict) -> Spectrum:
    count = min(eigen["count"], pencil.dimension - 1)
    return solve_lowest(pencil, count, tol=eigen["tol"], seed=eigen["seed"],
                        dense_threshold=eigen["dense_threshold"])


def _probe_rng(seed):
    return np.random.default_rng([int(seed), 1])


def analyze(mesh, pencil, spectrum, config: ExperimentConfig, out_dir: Path, records: list) -> dict:
    """Run the spectrum-based checks; append one StageRecord per check."""
    checks = config.checks
    floor = 1.0 - config.eigen["cluster_tol"]
    cap = lambda_cap(mesh)
    family = config.manifold["kind"]
    lam = spectrum.lambdas
    indices = [j for j in range(len(lam)) if lam[j] >= floor]
    reports: dict = {}

    def stage(name, fn):
        rec = StageRecord(name)
        t0 = time.perf_counter()
        try:
            fn(rec)
        except Exception as exc:  # recorded, never swallowed silently
            logger.exception("stage %s failed", name)
            rec.status, rec.error = "error", f"{type(exc).__name__}: {exc}"
        else:
            if rec.failures:
                rec.status = "failed"
        rec.wall_seconds = time.perf_counter() - t0
        records.append(rec)

    table = {"ratios", "nodal", "certificate"} & set(checks)
    rows = []

    def do_table(rec):
        ratios, nodal, certs = [], [], []
        for j in indices:
            v = spectrum.vectors[:, j]
            r = analysis.discrete_ratio(mesh, v, lam[j], f"index:{j}", lambda_floor=floor, lambda_cap=cap)
            d = r.to_dict()
            d["index"] = j
            ratios.append(d)
            row = {"family": family, "lambda": r.lam, "sup_e": r.sup_e, "sup_grad": r.sup_grad, "ratio": r.ratio}
            if "nodal" in checks or "certificate" in checks:
                ns = analysis.extract_nodal(mesh, v)
            if "nodal" in checks:
                nd = analysis.nodal_density(mesh, ns, lam[j])
                dd = nd.to_dict()
                dd["index"] = j
                dd["degenerate_triangles"] = len(ns.degenerate_triangles)
                dd["courant_bound_holds"] = nd.nodal_domain_count <= j + 1
                nodal.append(dd)
                row["r_max_normalized"] = nd.normalized
            if "certificate" in checks:
                c = analysis.lower_bound_certificate(mesh, v, lam[j], nodal=ns)
                cd = c.to_dict()
                cd["index"] = j
                certs.append(cd)
                row["certificate_normalized"] = c.normalized
                if not c.mean_value_holds:
                    rec.failures.append(f"certificate mean-value inequality violated at index {j}")
            rows.append(row)
        rec.files.append(write_csv(out_dir / "ratios.csv", rows).name)
        rec.files.append(write_json(out_dir / "ratios.json", ratios).name)
        reports["ratios"] = ratios
        if "nodal" in checks:
            rec.files.append(write_json(out_dir / "nodal.json", nodal).name)
            reports["nodal"] = nodal
        if "certificate" in checks:
            rec.files.append(write_json(out_dir / "certificate.json", certs).name)
            reports["certificate"] = certs

    if table:
        stage("ratios", do_table)

    if "decompose" in checks:
        def do_decompose(rec):
            rng = _probe_rng(config.eigen["seed"])
            out = []
            for j in indices:
                if lam[j] > cap:
                    continue
                v = spectrum.vectors[:, j]
                centers = [int(np.argmax(np.abs(v))), int(rng.integers(mesh.n_vertices))]
                for which, p in zip(("argmax", "random"), centers):
                    entry = {"index": j, "probe": which, "center": p}
                    try:
                        rep = analysis.decomposition_probe(mesh, pencil, v, lam[j], center=p, kappa=config.kappa)
                    except geometry.MeshError as exc:
                        entry["skipped"] = str(exc)
                        out.append(entry)
                        continue
                    entry.update(rep.to_dict())
                    out.append(entry)
                    if rep.reconstruction_error > 1e-8 * rep.sup_e:
                        rec.failures.append(f"reconstruction error {rep.reconstruction_error:.3e} at index {j}")
                    if rep.grad_e_at_p > rep.grad_u_at_p + rep.grad_v_at_p + 1e-8:
                        rec.failures.append(f"gradient split triangle inequality violated at index {j}")
            rec.files.append(write_json(out_dir / "decompose.json", out).name)
            reports["decompose"] = out
        stage("decompose", do_decompose)

    top = float(lam[-1])
    if "weyl" in checks:
        def do_weyl(rec):
            grid = config.lambda_grid or [float(x) for x in np.arange(1.0, top, 0.5)]
            w = analysis.weyl_check(spectrum, config.probe_vertex, grid)
            if np.any(np.diff(w.e_diag) < -1e-14):
                rec.failures.append("e_diag not monotone")
            rec.files.append(write_json(out_dir / "weyl.json", w.to_dict()).name)
            reports["weyl"] = w.to_dict()
        stage("weyl", do_weyl)

    if "cluster_grad" in checks:
        def do_cluster(rec):
            grid = config.lambda_grid or [float(x) for x in range(1, int(math.ceil(top - 1.0)))]
            c = analysis.cluster_grad_sum(mesh, spectrum, config.probe_vertex, grid)
            rec.files.append(write_json(out_dir / "cluster_grad.json", c.to_dict()).name)
            reports["cluster_grad"] = c.to_dict()
        stage("cluster_grad", do_cluster)
    return reports


def _interior_ratio(mesh, values, lam, dist_to_boundary, kappa):
    """``sup |grad e|`` over triangles farther than ``kappa/lam`` from the boundary, over ``lam sup|e|``."""
    far = dist_to_boundary > kappa / lam
    tris = far[mesh.triangles].all(axis=1)
    if not tris.any():
        return None
    g = np.linalg.norm(gradient(mesh, values)[tris], axis=1).max()
    return float(g / (lam * np.abs(values).max()))


def boundary_conjecture_probe(config: ExperimentConfig, mesh=None, pencil=None) -> list[dict]:
    """Whole-disk and boundary-layer-free gradient ratios for disk eigenfunctions.

    Rows come from analytic Dirichlet and Neumann modes (``m, k <= boundary_max``)
    and from FEM eigenpairs of the disk mesh (Dirichlet via the interior
    sub-pencil, Neumann via the full pencil).  ``ratio_interior`` uses the
    region ``d(x, boundary) > kappa / lambda``; it is ``None`` when empty.
    """
    if config.manifold["kind"] != "disk":
        raise ConfigError("the boundary probe needs manifold kind 'disk'")
    kappa, nmax, samples = config.kappa, config.boundary_max, config.samples
    rows = []
    for kind in ("dirichlet", "neumann"):
        for m in range(nmax + 1):
            for k in range(1, nmax + 1):
                mode = analytic.DiskMode(m, k, kind=kind)
                se, sg = analytic.sup_norms(mode, samples=samples)
                inner = 1.0 - kappa / mode.lam
                ri = None
                if inner > 0:
                    _, sgi = analytic.sup_norms(mode, samples=samples, max_radius=inner)
                    # both estimate sups from below; the whole-disk sup dominates either
                    sg = max(sg, sgi)
                    ri = sgi / (mode.lam * se)
                rows.append({"family": f"analytic_{kind}", "m": m, "k": k, "lambda": mode.lam, "sup_e": se,
                             "sup_grad": sg, "ratio": sg / (mode.lam * se), "ratio_interior": ri})
    if mesh is None:
        mesh = build_mesh(config.manifold)
    if pencil is None:
        pencil = assemble(mesh)
    dist = geometry.graph_distance(mesh, mesh.boundary_vertices).distance
    interior = np.setdiff1d(np.arange(mesh.n_vertices), mesh.boundary_vertices)
    for kind in ("dirichlet", "neumann"):
        sub = pencil.restrict(interior) if kind == "dirichlet" else pencil
        spec = solve(sub, config.eigen)
        for j, lam in enumerate(spec.lambdas):
            if lam < 1.0:
                continue
            v = np.zeros(mesh.n_vertices)
            if kind == "dirichlet":
                v[interior] = spec.vectors[:, j]
            else:
                v = spec.vectors[:, j]
            r = analysis.discrete_ratio(mesh, v, lam, f"fem_{kind}:{j}", lambda_cap=lambda_cap(mesh))
            rows.append({"family": f"fem_{kind}", "m": None, "k": j, "lambda": r.lam, "sup_e": r.sup_e,
                         "sup_grad": r.sup_grad, "ratio": r.ratio,
                         "ratio_interior": _interior_ratio(mesh, v, lam, dist, kappa)})
    return rows


def boundary_envelopes(rows) -> dict:
    """Per-family ``[min, max]`` of whole and interior ratios."""
    out = {}
    for fam in sorted({r["family"] for r in rows}):
        sel = [r for r in rows if r["family"] == fam]
        whole = [r["ratio"] for r in sel]
        inner = [r["ratio_interior"] for r in sel if r["ratio_interior"] is not None]
        out[fam] = {"whole": [min(whole), max(whole)], "interior": [min(inner), max(inner)] if inner else None}
    return out


def run(config: ExperimentConfig) -> RunManifest:
    """Execute every stage; the manifest is written last.

    A stage that raises is recorded with its error and the remaining
    stages still run; any error or hard-invariant failure makes the
    manifest status ``failed`` and the exit code nonzero.
    """
    out_dir = config.resolve_output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    if manifest_path.exists():
        manifest_path.unlink()
    manifest = RunManifest(config.to_dict(), _version(),
                           seeds={"eigen": config.eigen["seed"], "probe": [config.eigen["seed"], 1]})
    records = manifest.stages
    ctx = {}

    def timed(name, fn):
        rec = StageRecord(name)
        t0 = time.perf_counter()
        try:
            fn(rec)
        except Exception as exc:
            logger.exception("stage %s failed", name)
            rec.status, rec.error = "error", f"{type(exc).__name__}: {exc}"
        rec.wall_seconds = time.perf_counter() - t0
        records.append(rec)
        return rec.status == "ok"

    def do_mesh(rec):
        mesh = build_mesh(config.manifold)
        mesh.validate()
        ctx["mesh"] = mesh
        ctx["pencil"] = assemble(mesh)
        path = geometry.write_off(mesh, out_dir / "mesh.off")
        rec.files += [path.name, path.name + ".json"]
        if config.export_pencil:
            rec.files += [p.name for p in export_matrix_market(ctx["pencil"], out_dir / "pencil")]

    def do_solve(rec):
        spec = solve(ctx["pencil"], config.eigen)
        check_spectrum(spec, ctx["pencil"])
        ctx["spectrum"] = spec
        rec.files += [p.name for p in save_spectrum(spec, out_dir / "spectrum.json")]

    reports = {}
    spectral = set(config.checks) - {"boundary"}
    if timed("mesh", do_mesh) and spectral:
        if timed("solve", do_solve):
            reports.update(analyze(ctx["mesh"], ctx["pencil"], ctx["spectrum"], config, out_dir, records))

    if "boundary" in config.checks and "mesh" in ctx:
        def do_boundary(rec):
            rows = boundary_conjecture_probe(config, ctx["mesh"], ctx["pencil"])
            for r in rows:
                ri = r["ratio_interior"]
                if ri is not None and ri > r["ratio"] * (1 + 1e-12):
                    rec.failures.append(f"interior ratio exceeds whole ratio for {r['family']} {r['m']},{r['k']}")
            rec.files.append(write_json(out_dir / "boundary.json",
                                        {"rows": rows, "envelopes": boundary_envelopes(rows)}).name)
            rec.files.append(write_csv(out_dir / "boundary.csv", rows,
                                       ("family", "m", "k", "lambda", "sup_e", "sup_grad", "ratio",
                                        "ratio_interior")).name)
            reports["boundary"] = rows
            if rec.failures:
                rec.status = "failed"
        timed("boundary", do_boundary)

    def do_plots(rec):
        rec.files += [p.name for p in emit_all_plots(reports, out_dir)]
    timed("plots", do_plots)

    write_json(manifest_path, manifest.to_dict())
    return manifest


def emit_all_plots(reports: dict, out_dir) -> list[Path]:
    paths = plots.emit_plots(reports, out_dir)
    if reports.get("boundary"):
        rows = reports["boundary"]
        svg = plots.scatter_svg([r["lambda"] for r in rows], [r["ratio"] for r in rows],
                                "disk gradient ratio", "lambda", "ratio", hlines=[(0.1, "0.1"), (3.0, "3.0")])
        path = Path(out_dir) / "boundary.svg"
        path.write_text(svg)
        paths.append(path)
    return paths


def load_reports(out_dir) -> dict:
    """Reports previously written by :func:`run` (whatever is present)."""
    out_dir = Path(out_dir)
    reports = {}
    for name in ("ratios", "nodal", "certificate", "decompose", "weyl", "cluster_grad"):
        p = out_dir / f"{name}.json"
        if p.exists():
            reports[name] = json.loads(p.read_text())
    p = out_dir / "boundary.json"
    if p.exists():
        reports["boundary"] = json.loads(p.read_text())["rows"]
    return reports


def load_stage_inputs(out_dir, pencil_check: bool = True):
    """Mesh, pencil and spectrum written by earlier ``mesh``/``solve`` stages."""
    out_dir = Path(out_dir)
    mesh = geometry.read_off(out_dir / "mesh.off")
    pencil = assemble(mesh)
    spectrum = load_spectrum(out_dir / "spectrum.json", pencil if pencil_check else None)
    return mesh, pencil, spectrum

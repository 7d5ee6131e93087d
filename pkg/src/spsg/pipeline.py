"""End-to-end orchestration shared by the CLI commands.

A :class:`RunConfig` holds every knob of a run. It is written next to the
outputs as flat ``key = value`` text so a run can be replayed exactly.
"""

import dataclasses
import json
import logging
import os
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from spsg import features as F
from spsg import io
from spsg import model as M
from spsg import segment as G
from spsg import solver as S
from spsg import superpixels as SP

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    image: str = ""
    superpixels: str = ""
    slic: int = 0
    compactness: float = 10.0
    boundary: str = ""
    feature_cache: str = ""
    dict_cache: str = ""
    dict_size: int = 20
    dict_iters: int = 200
    gamma: float = M.DEFAULT_GAMMA
    sigma_x: str = "auto"
    seed: int = 0
    mu: float = S.SolverParams.mu
    tol: float = S.SolverParams.tol
    max_iters: int = S.SolverParams.max_iters
    alpha: str = ""
    alpha_grid: str = ""
    warm_start: bool = True
    trace: str = ""
    out: str = "out"

    def validate(self):
        if not self.image:
            raise ValueError("an input image is required")
        if bool(self.superpixels) == bool(self.slic):
            raise ValueError("give exactly one superpixel source: --superpixels PATH or --slic N")
        if self.alpha and self.alpha_grid:
            raise ValueError("--alpha and --alpha-grid are mutually exclusive")
        if self.dict_size < 1:
            raise ValueError("--dict-size must be >= 1")
        if self.gamma < 0:
            raise ValueError("--gamma must be nonnegative")
        if self.sigma_x != "auto" and not float(self.sigma_x) > 0:
            raise ValueError("--sigma-x must be 'auto' or a positive number")
        self.solver_params()
        self.alphas()
        return self

    def solver_params(self):
        return S.SolverParams(mu=float(self.mu), tol=float(self.tol), max_iters=int(self.max_iters))

    def alphas(self):
        if self.alpha:
            grid = [float(self.alpha)]
        elif self.alpha_grid:
            grid = [float(a) for a in self.alpha_grid.split(",") if a.strip()]
        else:
            grid = list(M.default_alpha_grid())
        if not grid or min(grid) < 0:
            raise ValueError("alpha values must be nonnegative")
        return sorted(grid)

    def sigma(self):
        return "auto" if self.sigma_x == "auto" else float(self.sigma_x)

    def dumps(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {str(v).lower() if isinstance(v, bool) else v}")
        return "\n".join(lines) + "\n"


_BOOL = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(field, text):
    if field.type in (bool, "bool"):
        try:
            return _BOOL[text.lower()]
        except KeyError:
            raise ValueError(f"{field.name}: expected a boolean, got {text!r}") from None
    if field.type in (int, "int"):
        return int(text)
    if field.type in (float, "float"):
        return float(text)
    return text


def parse_config_text(text):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    known = {f.name: f for f in fields(RunConfig)}
    values = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {num}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"config line {num}: unknown key {key!r}")
        values[key] = _coerce(known[key], val)
    return values


def load_config(path, overrides=None):
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update(overrides or {})
    return RunConfig(**values)


def _superpixel_map(cfg, image):
    if cfg.superpixels:
        return SP.import_labels(cfg.superpixels, shape=image.shape[:2])
    return SP.grid_slic(image, int(cfg.slic), compactness=cfg.compactness, seed=cfg.seed)


def _features(cfg, image, spmap):
    if cfg.feature_cache and os.path.exists(cfg.feature_cache):
        X = io.read_matrix(cfg.feature_cache)
        if X.shape[1] != spmap.n:
            raise ValueError(f"feature cache has {X.shape[1]} columns, expected {spmap.n}")
        return X
    X = F.image_features(image, spmap.labels, F.LshParams())
    if cfg.feature_cache:
        io.write_matrix(cfg.feature_cache, X)
    return X


def _dictionary(cfg, X):
    if cfg.dict_cache and os.path.exists(cfg.dict_cache):
        D = io.read_matrix(cfg.dict_cache)
        if D.shape != (X.shape[0], cfg.dict_size):
            raise ValueError(f"dictionary cache has shape {D.shape}, "
                             f"expected {(X.shape[0], cfg.dict_size)}")
        return D
    D = M.learn_dictionary(X, cfg.dict_size, iterations=cfg.dict_iters, seed=cfg.seed).D
    if cfg.dict_cache:
        io.write_matrix(cfg.dict_cache, D)
    return D


@dataclass
class Prepared:
    image: np.ndarray
    spmap: SP.SuperpixelMap
    graph: SP.AdjacencyGraph
    X: np.ndarray
    D: np.ndarray
    instance: M.ModelInstance
    timings: dict


def prepare(cfg):
    """Everything up to the model instance, with per-stage wall times."""
    timings = {}
    image = io.read_image(cfg.image)
    t = time.perf_counter()
    spmap = _superpixel_map(cfg, image)
    boundary = io.read_boundary_png(cfg.boundary) if cfg.boundary else None
    graph = SP.build_adjacency(spmap, image, boundary=boundary)
    timings["superpixels"] = time.perf_counter() - t
    t = time.perf_counter()
    X = _features(cfg, image, spmap)
    timings["features"] = time.perf_counter() - t
    t = time.perf_counter()
    D = _dictionary(cfg, X)
    timings["dictionary"] = time.perf_counter() - t
    inst = M.build_instance(X, D, graph, SP.sizes(spmap), gamma=cfg.gamma, sigma_x=cfg.sigma())
    return Prepared(image, spmap, graph, X, D, inst, timings)


def label_filename(index, alpha):
    return f"alpha_{index:03d}_{alpha:.4f}.png"


def run_segment(cfg):
    """Run the pipeline and write label maps, ``index.json`` and ``config.txt``."""
    cfg.validate()
    prep = prepare(cfg)
    family = G.sweep(prep.instance, prep.spmap, prep.graph, cfg.alphas(), cfg.solver_params(),
                     warm_start=cfg.warm_start, trace=bool(cfg.trace))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for k, e in enumerate(family.entries):
        name = label_filename(k, e.alpha)
        io.write_label_png(out / name, e.labels)
        entries.append({"alpha": e.alpha, "K": e.K, "segments": e.segments,
                        "objective": e.objective, "converged": bool(e.converged), "file": name})
        if not e.converged:
            log.warning("alpha=%.4f: solver stopped at max_iters without converging", e.alpha)
    index = {"lambda_max": family.lambda_max, "n_superpixels": prep.spmap.n, "entries": entries}
    (out / "index.json").write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    (out / "config.txt").write_text(cfg.dumps(), encoding="utf-8")
    if cfg.trace:
        with open(cfg.trace, "w", encoding="utf-8") as fh:
            fh.write("alpha,iteration,residual,objective\n")
            for e in family.entries:
                for it, eps, obj in e.trace or ():
                    fh.write(f"{e.alpha!r},{it},{eps!r},{obj!r}\n")
    return index


def run_features(cfg, out_path):
    if not cfg.image:
        raise ValueError("an input image is required")
    image = io.read_image(cfg.image)
    spmap = _superpixel_map(cfg, image)
    X = F.image_features(image, spmap.labels, F.LshParams())
    io.write_matrix(out_path, X)
    return X


def run_bench(cfg, repeats=3, alpha=0.5):
    """Median wall time per stage over ``repeats`` runs (caches disabled)."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    cfg = dataclasses.replace(cfg, feature_cache="", dict_cache="")
    params = cfg.solver_params()
    samples = {}
    for _ in range(repeats):
        prep = prepare(cfg)
        t = time.perf_counter()
        lam_max = S.lambda_max(prep.instance, params)
        prep.timings["lambda_max"] = time.perf_counter() - t
        t = time.perf_counter()
        S.solve(prep.instance.with_lambda(alpha * lam_max), params)
        prep.timings["solver"] = time.perf_counter() - t
        for stage, v in prep.timings.items():
            samples.setdefault(stage, []).append(v)
    meta = {"n": prep.spmap.n, "l": prep.D.shape[1], "d": prep.X.shape[0]}
    return {stage: float(np.median(v)) for stage, v in samples.items()}, samples, meta

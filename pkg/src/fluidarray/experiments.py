"""Batch experiments writing CSV/JSON data files.

Every runner takes a resolved :class:`ExperimentConfig` and an output
directory. Outputs are byte-identical for a fixed config regardless of the
``threads`` setting: work units carry their own derived seeds and results are
assembled in canonical order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import beam, placement, spacing
from .crb import ObservationSpec, SourceDirection, fim_closed_form
from .errors import InfeasiblePlacementError
from .geometry import Aperture, PortLayout, inertia_matrix


class ConfigError(ValueError):
    """The experiment configuration is malformed or inconsistent."""


@dataclass
class ExperimentConfig:
    """Experiment parameters; every field defaults to the reference setup."""

    wx: float = 2.0
    wy: float = 2.0
    m: int = 25
    d_min: float = 0.2
    delta: float = 0.1
    theta0_deg: float = 45.0
    phi0_deg: float = 30.0
    snapshots: int = 100
    snr_db: float = 10.0
    seed: int = 0
    beta0: float = 0.8
    beta0_list: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 100.0])
    beta0_sweep_min: float = 0.0
    beta0_sweep_max: float = 5.0
    beta0_sweep_points: int = 50
    snr_db_min: float = -10.0
    snr_db_max: float = 30.0
    snr_db_step: float = 2.0
    mc_trials: int = 100_000
    hist_bins: int = 60
    random_trials: int = 500
    sweep_random_trials: int = 200
    configurations: list = field(
        default_factory=lambda: [[1.0, 5], [2.0, 25], [4.0, 55], [6.0, 85]]
    )
    n_uv: int = 301
    db_floor: float = -30.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.wx <= 0 or self.wy <= 0:
            raise ConfigError("aperture widths must be positive")
        if self.delta <= 0 or self.delta > self.d_min + 1e-12:
            raise ConfigError(f"need 0 < delta <= d_min, got delta={self.delta}, d_min={self.d_min}")
        if self.m < 4:
            raise ConfigError("m must be at least 4")
        if self.snapshots < 1:
            raise ConfigError("snapshots must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.mc_trials < 1 or self.hist_bins < 1 or self.n_uv < 3:
            raise ConfigError("mc_trials, hist_bins must be positive and n_uv >= 3")
        if self.beta0_sweep_points < 1 or self.snr_db_step <= 0:
            raise ConfigError("sweep sizes must be positive")
        if any(b < 0 for b in self.beta0_list) or self.beta0 < 0:
            raise ConfigError("beta0 values must be non-negative")
        for pair in self.configurations:
            if len(pair) != 2 or pair[0] <= 0 or int(pair[1]) < 4:
                raise ConfigError(f"bad (W, M) configuration {pair!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name: f for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        defaults = cls()
        kwargs = {}
        for key, value in data.items():
            default = getattr(defaults, key)
            try:
                if isinstance(default, int):
                    if float(value) != int(value):
                        raise ValueError
                    kwargs[key] = int(value)
                elif isinstance(default, float):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = list(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"field {key!r}: cannot use {value!r}") from exc
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def aperture(self) -> Aperture:
        return Aperture(self.wx, self.wy)

    @property
    def direction(self) -> SourceDirection:
        return SourceDirection.from_degrees(self.theta0_deg, self.phi0_deg)

    def observation(self, snr_db: float | None = None) -> ObservationSpec:
        return ObservationSpec.from_db(self.snapshots, self.snr_db if snr_db is None else snr_db)

    def placement_config(self, beta0: float, wx=None, wy=None, m=None) -> placement.PlacementConfig:
        return placement.PlacementConfig(
            m=self.m if m is None else int(m),
            aperture=Aperture(self.wx if wx is None else wx, self.wy if wy is None else wy),
            grid_spacing=self.delta,
            d_min=self.d_min,
            beta0=beta0,
        )

    def snr_grid(self) -> np.ndarray:
        n = int(round((self.snr_db_max - self.snr_db_min) / self.snr_db_step))
        return self.snr_db_min + self.snr_db_step * np.arange(n + 1)

    def beta0_sweep(self) -> np.ndarray:
        return np.linspace(self.beta0_sweep_min, self.beta0_sweep_max, self.beta0_sweep_points)


def load_config(path=None, seed=None) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if seed is not None:
        data = {**data, "seed": seed}
    return ExperimentConfig.from_dict(data)


def trial_seed(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def _pmap(fn, items, threads: int):
    items = list(items)
    if threads == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, items))


def fmt(x) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(x), ".17g")


def write_csv(path: Path, columns, rows, cfg: ExperimentConfig):
    lines = [f"# config_sha256={cfg.digest()} seed={cfg.seed}", ",".join(columns)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _label(x: float) -> str:
    return format(float(x), "g")


def layout_metrics(layout: PortLayout, cfg: ExperimentConfig, obs=None) -> dict:
    res = fim_closed_form(layout, cfg.direction, obs or cfg.observation())
    return {
        "det": res.det_inertia,
        "crb_theta": res.crb_theta,
        "crb_phi": res.crb_phi,
        "n_interior": placement.count_interior_ports(layout, layout.aperture, cfg.d_min / 2),
    }


def run_mc_spacing(cfg: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    """Minimum-distance Monte Carlo against the Rayleigh law."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    ap = cfg.aperture
    law = spacing.SpacingLaw(cfg.m, ap.area())
    sample = spacing.sample_min_distances(cfg.m, ap, cfg.mc_trials, cfg.seed, "planar", threads)
    density, edges = np.histogram(
        sample.values, bins=cfg.hist_bins, range=(0.0, float(sample.values.max())), density=True
    )
    centers = 0.5 * (edges[:-1] + edges[1:])
    rows = zip(centers, spacing.pdf(law, centers), density)
    write_csv(out / "mc_spacing.csv", ["r", "pdf_theory", "hist_density"], rows, cfg)
    summary = {
        "mean_mc": sample.mean(),
        "mean_theory": spacing.mean_min_distance(law),
        "var_mc": sample.var(),
        "var_theory": spacing.var_min_distance(law),
        "ks": spacing.ks_distance(sample, law),
        "trials": cfg.mc_trials,
        "m": cfg.m,
        "area": ap.area(),
    }
    write_json(out / "mc_spacing_summary.json", summary)
    return summary


def random_layouts(cfg: ExperimentConfig, m: int, aperture: Aperture, trials: int,
                   threads: int = 1, stream: int = 0) -> list[PortLayout]:
    def draw(i):
        return placement.random_baseline(m, aperture, cfg.d_min, trial_seed(cfg.seed, stream, i))

    return _pmap(draw, range(trials), threads)


def run_crb_sweep(cfg: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    """CRB(theta) vs SNR for greedy, uniform and random layouts per (W, M) pair."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    direction = cfg.direction
    snrs = cfg.snr_grid()
    columns = [
        "snr_db", "crb_theta_greedy", "crb_theta_uniform", "crb_theta_random_mean",
        "det_greedy", "det_uniform", "det_random_mean",
        "crb_theta_random_p10", "crb_theta_random_p90", "det_random_p10", "det_random_p90",
    ]
    report = {}
    for k, (w, m) in enumerate(cfg.configurations):
        w, m = float(w), int(m)
        ap = Aperture(w, w)
        try:
            greedy = placement.greedy_select(cfg.placement_config(cfg.beta0, w, w, m))
            randoms = random_layouts(cfg, m, ap, cfg.sweep_random_trials, threads, stream=k + 1)
        except InfeasiblePlacementError as exc:
            raise InfeasiblePlacementError(
                f"(W={w:g}, M={m}): {exc}", exc.stage, exc.placed
            ) from exc
        uniform = placement.uniform_grid_baseline(m, ap)
        det_g = inertia_matrix(greedy).det
        det_u = inertia_matrix(uniform).det
        det_r = np.array([inertia_matrix(r).det for r in randoms])
        rows = []
        for snr in snrs:
            obs = ObservationSpec.from_db(cfg.snapshots, float(snr))
            crb_r = np.array([fim_closed_form(r, direction, obs).crb_theta for r in randoms])
            rows.append([
                snr,
                fim_closed_form(greedy, direction, obs).crb_theta,
                fim_closed_form(uniform, direction, obs).crb_theta,
                crb_r.mean(),
                det_g, det_u, det_r.mean(),
                np.percentile(crb_r, 10), np.percentile(crb_r, 90),
                np.percentile(det_r, 10), np.percentile(det_r, 90),
            ])
        name = f"crb_sweep_W{_label(w)}_M{m}.csv"
        write_csv(out / name, columns, rows, cfg)
        report[name] = {"det_greedy": det_g, "det_uniform": det_u, "det_random_mean": float(det_r.mean())}
    return report


def run_tradeoff(cfg: ExperimentConfig, out: Path, threads: int = 1) -> list[dict]:
    """det, CRB(theta) and interior-port count across the beta0 sweep."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    def one(b):
        layout = placement.greedy_select(cfg.placement_config(float(b)))
        return {"beta0": float(b), **layout_metrics(layout, cfg)}

    records = _pmap(one, cfg.beta0_sweep(), threads)
    rows = [[r["beta0"], r["det"], r["crb_theta"], r["n_interior"]] for r in records]
    write_csv(out / "tradeoff.csv", ["beta0", "det", "crb_theta", "n_interior"], rows, cfg)
    return records


def run_place(cfg: ExperimentConfig, out: Path, threads: int = 1) -> dict:
    """Greedy layout at ``cfg.beta0`` plus a comparison against both baselines."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    pc = cfg.placement_config(cfg.beta0)
    result = placement.greedy_trace(pc)
    layout = result.layout
    (out / "layout.json").write_text(layout.to_json() + "\n")
    report = {**layout_metrics(layout, cfg), "beta": result.beta, "beta0": cfg.beta0}
    write_json(out / "place_report.json", report)
    if cfg.random_trials:
        uniform = placement.uniform_grid_baseline(cfg.m, cfg.aperture)
        randoms = random_layouts(cfg, cfg.m, cfg.aperture, cfg.random_trials, threads)
        det_r = np.array([inertia_matrix(r).det for r in randoms])
        write_json(out / "place_baselines.json", {
            "det_greedy": report["det"],
            "det_uniform": inertia_matrix(uniform).det,
            "det_random_mean": float(det_r.mean()),
            "det_random_max": float(det_r.max()),
            "det_random_p10": float(np.percentile(det_r, 10)),
            "det_random_p90": float(np.percentile(det_r, 90)),
            "random_trials": cfg.random_trials,
        })
    return report


def _write_beam(layout: PortLayout, cfg: ExperimentConfig, out: Path, prefix: str,
                threads: int) -> dict:
    bmap = beam.beam_map(layout, cfg.direction, cfg.n_uv, threads)
    mask = beam.mainlobe_mask(bmap)
    db = bmap.db(cfg.db_floor)
    iu, iv = np.nonzero(bmap.valid)
    rows = zip(bmap.u_values[iu], bmap.v_values[iv], db[iu, iv])
    write_csv(out / f"{prefix}beam.csv", ["u", "v", "db"], rows, cfg)
    try:
        psl = beam.psl_db(bmap)
    except beam.NoSidelobeError:
        psl = None
    return {"psl_db": psl, "mainlobe_cells": int(mask.sum())}


def run_beam(cfg: ExperimentConfig, out: Path, layout: PortLayout | None = None,
             threads: int = 1) -> dict:
    """Beam map and PSL for a given layout (greedy at ``cfg.beta0`` if none)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if layout is None:
        layout = placement.greedy_select(cfg.placement_config(cfg.beta0))
    (out / "beam_layout.json").write_text(layout.to_json() + "\n")
    result = _write_beam(layout, cfg, out, "", threads)
    write_json(out / "beam_psl.json", result)
    return result


def run_place_and_beam(cfg: ExperimentConfig, out: Path, threads: int = 1) -> list[dict]:
    """Layouts, beam maps and PSL for each beta0 in ``cfg.beta0_list``."""
    out = Path(out)
    records = []
    for b in cfg.beta0_list:
        sub = out / f"beta0_{_label(b)}"
        sub.mkdir(parents=True, exist_ok=True)
        layout = placement.greedy_select(cfg.placement_config(float(b)))
        (sub / "layout.json").write_text(layout.to_json() + "\n")
        result = {"beta0": float(b), **layout_metrics(layout, cfg),
                  **_write_beam(layout, cfg, sub, "", threads)}
        write_json(sub / "psl.json", result)
        records.append(result)
    return records

"""Pipeline orchestration with reproducible configuration and file contracts.

Every subcommand reads its declared inputs, writes its declared outputs into
the output directory, and drops a JSON run manifest recording input digests,
the resolved configuration, library versions, and wall time. Exit codes:
0 ok, 2 usage or config error, 3 data error, 4 internal invariant violation.
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import click
import numpy as np
import scipy

from . import __version__, backbone as bb, community as cm, corpus as cp
from . import dynamics as dy, proximity as px, scalefit as sf
from . import specialization as sp, synthkit as sk
from .corpus import ConfigError, DataError


@dataclass
class PipelineConfig:
    records: str = "records.csv"
    aliases: Optional[str] = None
    taxonomy: Optional[str] = None
    outdir: str = "out"
    year_start: int = 2004
    year_end: int = 2021
    percentile: float = 0.90
    threshold: float = 1.0
    inclusive: bool = False
    level: str = "division"
    alpha: float = 0.05
    no_mst: bool = False
    window_length: int = 5
    step: int = 1
    seed: int = 0
    restarts: int = 1
    sweeps: int = 10
    weighted_multiplicity: int = 0     # 0 = binarize edges for the blockmodel
    graphml: bool = False
    x_min: int = 0                     # 0 = scan for the KS-optimal cutoff

    def save(self, path: Path) -> None:
        with open(path, "w") as fh:
            for f in fields(self):
                fh.write(f"{f.name} = {json.dumps(getattr(self, f.name))}\n")

    @classmethod
    def load(cls, path: Path) -> "PipelineConfig":
        kwargs = {}
        names = {f.name for f in fields(cls)}
        for ln, line in enumerate(path.read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip()
            if key not in names:
                raise ConfigError(f"{path}:{ln}: unknown config key {key!r}")
            try:
                kwargs[key] = json.loads(val.strip())
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}:{ln}: bad value: {e}") from e
        c = cls(**kwargs)
        if isinstance(c.year_start, float) or isinstance(c.year_end, float):
            raise ConfigError("years must be integers")
        return c

    @property
    def year_range(self) -> tuple[int, int]:
        return (self.year_start, self.year_end)

    def stage_seed(self, stage: str) -> int:
        # stable sub-seed per stage, independent of platform hash randomization
        return (self.seed * 2654435761 + zlib.crc32(stage.encode())) % (2 ** 31)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class StageRun:
    """Tracks a stage's inputs/outputs, writes the manifest, cleans up on failure."""

    def __init__(self, stage: str, cfg: PipelineConfig):
        self.stage = stage
        self.cfg = cfg
        self.outdir = Path(cfg.outdir)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []
        self.t0 = time.monotonic()

    def input(self, path) -> Path:
        p = Path(path)
        if not p.exists():
            raise DataError(f"missing input: {p}")
        self.inputs.append(p)
        return p

    def output(self, name: str) -> Path:
        self.outdir.mkdir(parents=True, exist_ok=True)
        p = self.outdir / name
        self.outputs.append(p)
        return p

    def fail_cleanup(self) -> None:
        for p in self.outputs:
            p.unlink(missing_ok=True)

    def finish(self) -> None:
        manifest = {
            "stage": self.stage,
            "config": asdict(self.cfg),
            "config_digest": self.cfg.digest(),
            "inputs": {str(p): _sha256(p) for p in self.inputs},
            "outputs": {p.name: _sha256(p) for p in self.outputs if p.exists()},
            "versions": {"softspace": __version__, "python": sys.version.split()[0],
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "wall_time_s": round(time.monotonic() - self.t0, 3),
        }
        self.outdir.mkdir(parents=True, exist_ok=True)
        with open(self.outdir / f"manifest_{self.stage}.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self.cfg.save(self.outdir / f"config_{self.stage}.txt")


def _load_config(config_path: Optional[str], **overrides) -> PipelineConfig:
    cfg = PipelineConfig.load(Path(config_path)) if config_path else PipelineConfig()
    for k, v in overrides.items():
        if v is not None:
            setattr(cfg, k, v)
    if cfg.threshold <= 0:
        raise click.UsageError("--threshold must be > 0")
    if not (0.0 < cfg.percentile < 1.0):
        raise click.UsageError("--percentile must be in (0,1)")
    if not (0.0 < cfg.alpha < 1.0):
        raise click.UsageError("--alpha must be in (0,1)")
    return cfg


def _taxonomy(cfg: PipelineConfig) -> cp.DisciplineTaxonomy:
    if cfg.taxonomy:
        with open(cfg.taxonomy) as fh:
            return cp.load_taxonomy(fh)
    return cp.DisciplineTaxonomy.default()


def _aliases(cfg: PipelineConfig) -> cp.AliasTable:
    if cfg.aliases:
        with open(cfg.aliases) as fh:
            return cp.load_alias_table(fh)
    return cp.AliasTable.empty()


def _prepared_records(run: StageRun, cfg: PipelineConfig,
                      diag: cp.IngestDiagnostics) -> list[cp.MentionRecord]:
    """Shared front half of the pipeline: curate, disambiguate, filter."""
    path = run.input(cfg.records)
    with open(path, newline="") as fh:
        raw = list(cp.parse_records(fh))
    known = cp.known_software_names(raw)
    curated = list(cp.curate(raw, known))
    disamb = cp.disambiguate(curated, _aliases(cfg))
    return list(cp.filter_records(disamb, cfg.year_range, diag))


def _ingest(cfg: PipelineConfig) -> None:
    run = StageRun("ingest", cfg)
    try:
        diag = cp.IngestDiagnostics()
        records = _prepared_records(run, cfg, diag)
        taxonomy = _taxonomy(cfg)
        m = cp.build_count_matrix(records, taxonomy, cfg.level, cfg.year_range, diag)
        if m.cols:
            m = cp.percentile_filter(m, cfg.percentile, diag)
        with open(run.output("counts.csv"), "w") as fh:
            cp.write_count_matrix(m, fh)
        with open(run.output("counts_meta.json"), "w") as fh:
            cp.write_sidecar(diag, cfg.year_range, fh)
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _read_counts(run: StageRun, cfg: PipelineConfig) -> cp.CountMatrix:
    path = run.input(Path(cfg.outdir) / "counts.csv")
    with open(path, newline="") as fh:
        return cp.read_count_matrix(fh, cfg.year_range)


def _rca(cfg: PipelineConfig) -> None:
    run = StageRun("rca", cfg)
    try:
        m = _read_counts(run, cfg)
        r = sp.rca(m)
        with open(run.output("rca.csv"), "w") as fh:
            sp.write_rca(r, fh)
        with open(run.output("rca_heatmap.json"), "w") as fh:
            sp.write_heatmap(r, fh)
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _proximity(cfg: PipelineConfig) -> None:
    run = StageRun("proximity", cfg)
    try:
        m = _read_counts(run, cfg)
        spec = sp.specialize(sp.rca(m), cfg.threshold,
                             "inclusive" if cfg.inclusive else "strict")
        pm = px.proximity(spec, m.cols)
        attrs = {name: {"mentions": int(m.counts[:, j].sum())}
                 for j, name in enumerate(m.cols)}
        net = px.to_network(pm, attrs)
        with open(run.output("proximity_edges.csv"), "w") as fh:
            px.write_edge_list(net, fh)
        if cfg.graphml:
            px.to_graphml(net, str(run.output("proximity.graphml")))
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _read_network(run: StageRun, cfg: PipelineConfig) -> px.ProximityNetwork:
    path = run.input(Path(cfg.outdir) / "proximity_edges.csv")
    with open(path, newline="") as fh:
        return px.read_edge_list(fh)


def _backbone(cfg: PipelineConfig) -> None:
    run = StageRun("backbone", cfg)
    try:
        net = _read_network(run, cfg)
        edges = bb.backbone(net, cfg.alpha, with_mst=not cfg.no_mst)
        with open(run.output("backbone_edges.csv"), "w") as fh:
            bb.write_backbone(edges, fh)
        if cfg.graphml:
            bb.backbone_graphml(net, edges, str(run.output("backbone.graphml")))
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _communities(cfg: PipelineConfig) -> None:
    run = StageRun("communities", cfg)
    try:
        net = _read_network(run, cfg)
        m = _read_counts(run, cfg)
        a = cm.fit_sbm(net, seed=cfg.stage_seed("communities"),
                       binarize=cfg.weighted_multiplicity == 0,
                       sweeps=cfg.sweeps,
                       multiplicity_q=max(cfg.weighted_multiplicity, 1),
                       restarts=cfg.restarts)
        with open(run.output("communities.csv"), "w") as fh:
            cm.write_assignment(a, fh)
        report = cm.describe_communities(a, m)
        report["model"] = "flat degree-corrected blockmodel (MDL)"
        with open(run.output("communities_report.json"), "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _portfolio(cfg: PipelineConfig, aggregate: bool) -> None:
    run = StageRun("dynamics" if aggregate else "portfolio", cfg)
    try:
        diag = cp.IngestDiagnostics()
        records = _prepared_records(run, cfg, diag)
        m = _read_counts(run, cfg)
        path = run.input(Path(cfg.outdir) / "communities.csv")
        with open(path, newline="") as fh:
            a = cm.read_assignment(fh)
        taxonomy = _taxonomy(cfg)
        series = dy.portfolio_series(records, a, taxonomy, entities=set(m.cols),
                                     year_range=cfg.year_range,
                                     length=cfg.window_length, step=cfg.step,
                                     level=cfg.level)
        with open(run.output("portfolio.csv"), "w") as fh:
            dy.write_portfolio(series, fh)
        if aggregate:
            rows = dy.category_aggregate(series, taxonomy)
            with open(run.output("category_aggregates.csv"), "w") as fh:
                dy.write_category_aggregates(rows, fh)
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _powerlaw(cfg: PipelineConfig) -> None:
    run = StageRun("powerlaw", cfg)
    try:
        m = _read_counts(run, cfg)
        totals = [int(t) for t in m.column_totals() if t > 0]
        fit = sf.fit_power_law(totals, cfg.x_min or None)
        with open(run.output("powerlaw.json"), "w") as fh:
            sf.write_fit(fit, fh)
        with open(run.output("ccdf.csv"), "w") as fh:
            sf.write_ccdf(sf.ccdf_points(totals), fh)
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


def _synth(cfg: PipelineConfig, n_disciplines: int, n_tools: int, n_papers: int,
           n_blocks: int, tail_exponent: Optional[float]) -> None:
    run = StageRun("synth", cfg)
    try:
        sc = sk.SynthConfig(n_disciplines=n_disciplines, n_tools=n_tools,
                            n_papers=n_papers, n_blocks=n_blocks,
                            tail_exponent=tail_exponent,
                            year_range=cfg.year_range,
                            seed=cfg.stage_seed("synth"))
        out = run.output("synth_records.csv")
        with open(out, "w") as fh:
            cp.write_records(sk.generate_corpus(sc), fh)
        run.finish()
    except Exception:
        run.fail_cleanup()
        raise


# ---------------------------------------------------------------------------
# click wiring

_common = [
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="Config file (key = value, JSON-encoded values); flags win."),
    click.option("--records", type=str, default=None),
    click.option("--aliases", type=str, default=None),
    click.option("--taxonomy", type=str, default=None),
    click.option("--outdir", type=str, default=None),
    click.option("--year-start", "year_start", type=int, default=None),
    click.option("--year-end", "year_end", type=int, default=None),
    click.option("--percentile", type=float, default=None),
    click.option("--threshold", type=float, default=None),
    click.option("--inclusive", is_flag=True, default=None),
    click.option("--level", type=click.Choice(["division", "group"]), default=None),
    click.option("--alpha", type=float, default=None),
    click.option("--no-mst", "no_mst", is_flag=True, default=None),
    click.option("--window-length", "window_length", type=int, default=None),
    click.option("--step", type=int, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--restarts", type=int, default=None),
    click.option("--sweeps", type=int, default=None),
    click.option("--weighted-multiplicity", "weighted_multiplicity", type=int, default=None),
    click.option("--graphml", is_flag=True, default=None),
    click.option("--x-min", "x_min", type=int, default=None),
]


def common_options(f):
    for opt in reversed(_common):
        f = opt(f)
    return f


def _run_stage(fn, config_path, **overrides):
    try:
        cfg = _load_config(config_path, **overrides)
        fn(cfg)
    except click.UsageError:
        raise
    except ConfigError as e:
        click.echo(f"error: config: {e}", err=True)
        sys.exit(2)
    except DataError as e:
        click.echo(f"error: data: {e}", err=True)
        sys.exit(3)
    except AssertionError as e:
        click.echo(f"error: internal invariant violated: {e}", err=True)
        sys.exit(4)


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Software-space analytics pipeline."""


def _register(name: str, fn, help_text: str):
    @main.command(name=name, help=help_text)
    @common_options
    def _cmd(config_path, **overrides):
        _run_stage(fn, config_path, **overrides)
    return _cmd


_register("ingest", _ingest, "Curate, disambiguate, filter, and count mentions.")
_register("rca", _rca, "Compute the discipline x software RCA matrix.")
_register("proximity", _proximity, "Build the tool-tool proximity network.")
_register("backbone", _backbone, "Disparity-filter backbone with MST overlay.")
_register("communities", _communities, "Fit blockmodel communities (MDL).")
_register("portfolio", lambda cfg: _portfolio(cfg, aggregate=False),
          "Per-division rolling HHI and Jaccard series.")
_register("dynamics", lambda cfg: _portfolio(cfg, aggregate=True),
          "Portfolio series plus category-level aggregates.")
_register("powerlaw", _powerlaw, "Fit a discrete power law to mention totals.")


@main.command(name="synth", help="Generate a synthetic corpus in the input format.")
@common_options
@click.option("--n-disciplines", type=int, default=6)
@click.option("--n-tools", type=int, default=40)
@click.option("--n-papers", type=int, default=200)
@click.option("--n-blocks", type=int, default=2)
@click.option("--tail-exponent", type=float, default=None)
def _synth_cmd(config_path, n_disciplines, n_tools, n_papers, n_blocks,
               tail_exponent, **overrides):
    _run_stage(lambda cfg: _synth(cfg, n_disciplines, n_tools, n_papers,
                                  n_blocks, tail_exponent),
               config_path, **overrides)


@main.command(name="all", help="Run the full pipeline: ingest through dynamics.")
@common_options
def _all_cmd(config_path, **overrides):
    def chain(cfg: PipelineConfig) -> None:
        _ingest(cfg)
        _rca(cfg)
        _proximity(cfg)
        _backbone(cfg)
        _communities(cfg)
        _portfolio(cfg, aggregate=True)
        _powerlaw(cfg)
    _run_stage(chain, config_path, **overrides)


if __name__ == "__main__":
    main()

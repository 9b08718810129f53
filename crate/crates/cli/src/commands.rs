//! Run orchestration: config → cached products → report files.

use std::fs;
use std::path::{Path, PathBuf};

use guidespec_core::spectra::{
    bands_from_samples, build_report, sample_band_functions, sigma_sharp, sweep_dispersion, BandFunction,
    DispersionSweep, SampleClass, Setup, SpectrumReport,
};
use guidespec_core::weyl::{bloch_harness, floquet_harness, WeylKind, WeylRun};
use log::info;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::cache::{bands_inputs, digest, dispersion_inputs, Cache};
use crate::config::{load, ConfigError, Format, RunConfig, Validation};
use crate::svg::Plot;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Bands,
    Dispersion,
    Spectrum,
    Weyl,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    pub workers: usize,
    pub no_cache: bool,
    /// Restricts a Weyl run to one target kind.
    pub target: Option<WeylKind>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid configuration:\n{}", render_issues(.0))]
    Invalid(Validation),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("union check failed at emit time")]
    Union,
    #[error("{0}")]
    SlopeOutside(String),
}

fn render_issues(v: &Validation) -> String {
    v.issues.iter().map(|i| format!("  {}: {}", i.key, i.message)).collect::<Vec<_>>().join("\n")
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Invalid(_) => 1,
            RunError::Config(_) => 2,
            RunError::Solver(_) | RunError::Io { .. } | RunError::Union => 3,
            RunError::SlopeOutside(_) => 4,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub written: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub cache_hits: Vec<&'static str>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    setup: Setup,
    opts: &'a RunOptions,
    cache: Option<Cache>,
    summary: Summary,
}

pub fn run(command: Command, opts: &RunOptions) -> Result<Summary, RunError> {
    let cfg = load(&opts.config)?;
    let validation = cfg.validate();
    if !validation.is_valid() {
        return Err(RunError::Invalid(validation));
    }
    let setup = cfg.setup().map_err(|e| RunError::Invalid(single_issue("operator", e)))?;
    let cache = (!opts.no_cache).then(|| Cache::from_env(&opts.out.join(".cache")));
    let mut ctx = Context { cfg: &cfg, setup, opts, cache, summary: Summary::default() };
    match command {
        Command::Validate => ctx.summary.lines.push(format!("{}: valid", opts.config.display())),
        Command::Bands => {
            let bf = ctx.bands()?;
            ctx.emit_bands(&bf)?;
        }
        Command::Dispersion => {
            require_waveguide(&cfg)?;
            let bf = ctx.bands()?;
            let sweep = ctx.dispersion(&bf)?;
            ctx.emit_dispersion(&sweep)?;
        }
        Command::Spectrum => {
            require_waveguide(&cfg)?;
            let bf = ctx.bands()?;
            let sweep = ctx.dispersion(&bf)?;
            let report = build_report(&bf, &sweep, cfg.discretization.m_grid, &cfg.sweep(), &cfg.tolerances);
            ctx.emit_bands(&bf)?;
            ctx.emit_dispersion(&sweep)?;
            ctx.emit_spectrum(&report)?;
        }
        Command::Weyl => ctx.weyl()?,
    }
    Ok(ctx.summary)
}

fn single_issue(key: &str, message: String) -> Validation {
    let mut v = Validation::default();
    v.issues.push(crate::config::Issue { key: key.into(), message });
    v
}

fn require_waveguide(cfg: &RunConfig) -> Result<(), RunError> {
    if cfg.has_waveguide() {
        Ok(())
    } else {
        Err(RunError::Invalid(single_issue("geometry.waveguide", "required by this command".into())))
    }
}

impl Context<'_> {
    fn workers(&self) -> usize {
        self.opts.workers.max(1)
    }

    fn bands(&mut self) -> Result<BandFunction, RunError> {
        let key = digest(&bands_inputs(self.cfg));
        if let Some(bf) = self.cache.as_ref().and_then(|c| c.get::<BandFunction>(&key)) {
            info!("band functions: cache hit {key}");
            self.summary.cache_hits.push("bands");
            return Ok(bf);
        }
        let d = &self.cfg.discretization;
        info!("sampling {}x{} band grid at n = {}", d.m_grid, d.m_grid, d.n);
        let bf = sample_band_functions(&self.setup, d.n, d.m_grid, d.band_count, &self.cfg.eigen(), self.workers())
            .map_err(|e| RunError::Solver(e.to_string()))?;
        self.store(&key, &bf)?;
        Ok(bf)
    }

    fn dispersion(&mut self, bf: &BandFunction) -> Result<DispersionSweep, RunError> {
        let key = digest(&dispersion_inputs(self.cfg));
        if let Some(s) = self.cache.as_ref().and_then(|c| c.get::<DispersionSweep>(&key)) {
            info!("dispersion sweep: cache hit {key}");
            self.summary.cache_hits.push("dispersion");
            return Ok(s);
        }
        let ceiling = bands_from_samples(bf).trust_ceiling;
        info!("sweeping {} ζ samples", self.cfg.discretization.zeta_points);
        let sweep = sweep_dispersion(&self.setup, &self.cfg.sweep(), &self.cfg.tolerances, ceiling, &self.cfg.eigen(), self.workers())
            .map_err(|e| RunError::Solver(e.to_string()))?;
        self.store(&key, &sweep)?;
        Ok(sweep)
    }

    fn store<T: Serialize>(&self, key: &str, value: &T) -> Result<(), RunError> {
        if let Some(c) = &self.cache {
            c.put(key, value).map_err(|source| RunError::Io { path: c.dir().display().to_string(), source })?;
        }
        Ok(())
    }

    fn write(&mut self, name: &str, format: Format, contents: String) -> Result<(), RunError> {
        if !self.cfg.outputs.wants(format) {
            return Ok(());
        }
        let path = self.opts.out.join(name);
        let io = |source| RunError::Io { path: path.display().to_string(), source };
        fs::create_dir_all(&self.opts.out).map_err(io)?;
        fs::write(&path, contents).map_err(io)?;
        self.summary.written.push(path);
        Ok(())
    }

    fn emit_bands(&mut self, bf: &BandFunction) -> Result<(), RunError> {
        let s = bands_from_samples(bf);
        let doc = json!({
            "provenance": {
                "n": bf.n,
                "m_grid": bf.grid.len(),
                "band_count": bf.count,
                "continuity_modulus": bf.continuity_modulus,
                "ordered": bf.ordered,
                "conjugation_defect": bf.conjugation_defect(),
            },
            "bands": s.bands,
            "union": s.union,
            "gaps": s.gaps,
            "trust_ceiling": s.trust_ceiling,
            "grid": bf.grid,
            "values": bf.values,
        });
        self.write("bands.json", Format::Json, pretty(&doc))?;
        self.write("bands.csv", Format::Csv, bands_csv(bf))?;
        self.write("bands.svg", Format::Svg, bands_svg(bf))?;
        for b in &s.bands {
            self.summary.lines.push(format!("B{} = [{}, {}]", b.index, b.lo, b.hi));
        }
        self.summary.lines.push(format!("gaps below {}: {}", s.trust_ceiling, s.gaps));
        Ok(())
    }

    fn emit_dispersion(&mut self, sweep: &DispersionSweep) -> Result<(), RunError> {
        let sharp = sigma_sharp(&sweep.segments);
        let partial: Vec<_> = sweep
            .partial
            .iter()
            .map(|p| json!({"zeta": p.zeta, "bands": p.bands, "ceiling": p.ceiling}))
            .collect();
        let doc = json!({
            "ceiling": sweep.ceiling,
            "zeta_grid": sweep.zeta_grid,
            "sigma_sharp": sharp,
            "segments": sweep.segments,
            "trapped_modes": sweep.trapped,
            "rejected_candidates": sweep.rejected,
            "branch_splits": sweep.splits,
            "partial_bands": partial,
        });
        self.write("dispersion.json", Format::Json, pretty(&doc))?;
        self.write("dispersion.csv", Format::Csv, levels_csv(sweep))?;
        self.write("segments.csv", Format::Csv, segments_csv(sweep))?;
        self.write("dispersion.svg", Format::Svg, dispersion_svg(sweep))?;
        self.summary.lines.push(format!(
            "{} segments ({} in gaps), {} trapped modes, {} rejected candidates",
            sweep.segments.len(),
            sweep.in_gap_segments().count(),
            sweep.trapped.len(),
            sweep.rejected.len()
        ));
        self.summary.lines.push(format!("sigma_sharp = {sharp}"));
        Ok(())
    }

    fn emit_spectrum(&mut self, report: &SpectrumReport) -> Result<(), RunError> {
        if !report.union().verify() {
            return Err(RunError::Union);
        }
        let doc = json!({ "report": report, "union_verified": true });
        self.write("spectrum.json", Format::Json, pretty(&doc))?;
        self.write("spectrum.csv", Format::Csv, spectrum_csv(report))?;
        self.write("spectrum.svg", Format::Svg, spectrum_svg(report))?;
        self.summary.lines.push(format!("sigma_es = {}", report.sigma_es));
        self.summary.lines.push(format!("sigma_ad = {}", report.sigma_ad));
        if report.ceiling_mismatch {
            self.summary.lines.push(format!("trust ceilings differ; clipped at {}", report.trust_ceiling));
        }
        Ok(())
    }

    fn weyl(&mut self) -> Result<(), RunError> {
        let Some(w) = self.cfg.weyl.clone() else {
            return Err(RunError::Invalid(single_issue("weyl", "section required by this command".into())));
        };
        let params = w.harness();
        let eig = self.cfg.eigen();
        let tol = &self.cfg.tolerances;
        let mut runs: Vec<WeylRun> = Vec::new();
        let wants = |k: WeylKind| self.opts.target.is_none_or(|t| t == k);
        if let Some(b) = w.bloch.as_ref().filter(|_| wants(WeylKind::Bloch)) {
            info!("Bloch harness at η = ({}, {})", b.eta[0], b.eta[1]);
            let run = bloch_harness(&self.setup, &params, b.eta, b.band, b.detune, &eig, self.workers())
                .map_err(|e| RunError::Solver(e.to_string()))?;
            runs.push(run);
        }
        if let Some(f) = w.floquet.as_ref().filter(|_| wants(WeylKind::Floquet)) {
            if !self.cfg.has_waveguide() {
                return Err(RunError::Invalid(single_issue("weyl.floquet", "requires a waveguide".into())));
            }
            info!("Floquet harness at ζ = {}", f.zeta);
            let run = floquet_harness(
                &self.setup,
                &params,
                f.zeta,
                f.truncation_t,
                f.strip_count,
                f.lambda_hint,
                tol.beta_min,
                tol.fit_residual_max,
                &eig,
                self.workers(),
            )
            .map_err(|e| RunError::Solver(e.to_string()))?;
            runs.push(run);
        }
        if runs.is_empty() {
            return Err(RunError::Invalid(single_issue("weyl", "no target matches the requested kind".into())));
        }
        let [lo, hi] = w.slope_window;
        let inside: Vec<bool> = runs.iter().map(|r| (lo..=hi).contains(&r.residual_slope.slope)).collect();
        let doc = json!({ "slope_window": w.slope_window, "runs": runs, "within_window": inside });
        self.write("weyl.json", Format::Json, pretty(&doc))?;
        self.write("weyl.csv", Format::Csv, weyl_csv(&runs))?;
        self.write("weyl.svg", Format::Svg, weyl_svg(&runs))?;
        let mut outside = Vec::new();
        for (r, ok) in runs.iter().zip(&inside) {
            let line = format!(
                "{:?} λ = {}: residual slope {:.4} [{:.4}, {:.4}], norm growth {:.4}",
                r.kind, r.lambda, r.residual_slope.slope, r.residual_slope.ci_low, r.residual_slope.ci_high, r.norm_growth.slope
            );
            if !ok {
                outside.push(line.clone());
            }
            self.summary.lines.push(line);
        }
        if !outside.is_empty() {
            return Err(RunError::SlopeOutside(format!(
                "residual slope outside [{lo}, {hi}]:\n  {}",
                outside.join("\n  ")
            )));
        }
        Ok(())
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn class_name(c: SampleClass) -> &'static str {
    match c {
        SampleClass::InBand => "in_band",
        SampleClass::InGap => "in_gap",
        SampleClass::AboveCeiling => "above_ceiling",
    }
}

fn bands_csv(bf: &BandFunction) -> String {
    let mut s = String::from("band,i1,i2,eta1,eta2,lambda\n");
    for (k, band) in bf.values.iter().enumerate() {
        for (i1, row) in band.iter().enumerate() {
            for (i2, v) in row.iter().enumerate() {
                s.push_str(&format!("{},{i1},{i2},{},{},{v}\n", k + 1, bf.grid[i1], bf.grid[i2]));
            }
        }
    }
    s
}

/// Grid indices along Γ → X → M → Γ.
fn symmetry_path(m: usize) -> Vec<(usize, usize)> {
    if m == 1 {
        return vec![(0, 0)];
    }
    let half = (m - 1) / 2;
    let mut path: Vec<(usize, usize)> = (0..=half).map(|i| (i, 0)).collect();
    path.extend((1..=half).map(|i| (half, i)));
    path.extend((0..half).rev().map(|i| (i, i)));
    path
}

fn bands_svg(bf: &BandFunction) -> String {
    let path = symmetry_path(bf.grid.len());
    let top = bf.values.last().map_or(1.0, |b| b.iter().flatten().cloned().fold(0.0, f64::max));
    let mut plot = Plot::new("Band functions along Γ-X-M-Γ", "path sample", "λ", (0.0, (path.len() - 1) as f64), (0.0, top));
    for band in &bf.values {
        let pts: Vec<(f64, f64)> = path.iter().enumerate().map(|(t, &(i, j))| (t as f64, band[i][j])).collect();
        plot.polyline(&pts, "#1f4e9c", 1.5);
    }
    plot.render()
}

fn levels_csv(sweep: &DispersionSweep) -> String {
    let mut s = String::from("zeta,index,lambda,class\n");
    for (i, (levels, classes)) in sweep.levels.iter().zip(&sweep.classes).enumerate() {
        for (a, (l, c)) in levels.iter().zip(classes).enumerate() {
            s.push_str(&format!("{},{a},{l},{}\n", sweep.zeta_grid[i], class_name(*c)));
        }
    }
    s
}

fn endpoint(e: guidespec_core::spectra::EndpointKind) -> &'static str {
    use guidespec_core::spectra::EndpointKind::*;
    match e {
        BandEdge => "band_edge",
        Interior => "interior",
        Periodic => "periodic",
    }
}

fn segments_csv(sweep: &DispersionSweep) -> String {
    let mut s = String::from("segment,branch,zeta,lambda,class,start,end\n");
    for (k, seg) in sweep.segments.iter().enumerate() {
        for x in &seg.samples {
            s.push_str(&format!(
                "{k},{},{},{},{},{},{}\n",
                seg.branch,
                x.zeta,
                x.lambda,
                class_name(x.class),
                endpoint(seg.start),
                endpoint(seg.end)
            ));
        }
    }
    s
}

fn dispersion_svg(sweep: &DispersionSweep) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let top = sweep.ceiling * 1.05;
    let mut plot = Plot::new("Strip spectrum and guided branches", "ζ", "λ", (0.0, two_pi), (0.0, top));
    let step = if sweep.zeta_grid.len() > 1 { sweep.zeta_grid[1] - sweep.zeta_grid[0] } else { two_pi };
    for p in &sweep.partial {
        for b in &p.bands {
            let (x0, x1) = ((p.zeta - step / 2.0).max(0.0), (p.zeta + step / 2.0).min(two_pi));
            plot.rect(x0, x1, b.lo, b.hi.min(top), "#d9d9d9");
        }
    }
    for (i, (levels, classes)) in sweep.levels.iter().zip(&sweep.classes).enumerate() {
        let z = sweep.zeta_grid[i];
        for (l, c) in levels.iter().zip(classes) {
            if *l <= top {
                let color = if *c == SampleClass::InGap { "#c0392b" } else { "#777777" };
                plot.markers(&[(z, *l)], color, 1.8);
            }
        }
    }
    for seg in &sweep.segments {
        let pts: Vec<(f64, f64)> = seg.samples.iter().map(|x| (x.zeta, x.lambda)).collect();
        plot.polyline(&pts, "#1f4e9c", 1.5);
    }
    plot.render()
}

fn spectrum_rows(r: &SpectrumReport) -> [(&'static str, &guidespec_core::intervals::IntervalSet); 4] {
    [("sigma_es0", &r.sigma_es0), ("sigma_sharp", &r.sigma_sharp), ("sigma_es", &r.sigma_es), ("sigma_ad", &r.sigma_ad)]
}

fn spectrum_csv(r: &SpectrumReport) -> String {
    let mut s = String::from("set,lo,hi,lo_closed,hi_closed\n");
    for (name, set) in spectrum_rows(r) {
        for iv in set.intervals() {
            s.push_str(&format!("{name},{},{},{},{}\n", iv.lo, iv.hi, iv.lo_closed, iv.hi_closed));
        }
    }
    s
}

fn spectrum_svg(r: &SpectrumReport) -> String {
    let mut plot = Plot::new("Essential spectrum", "λ", "", (0.0, r.trust_ceiling), (0.0, 4.0));
    for (row, (name, set)) in spectrum_rows(r).iter().enumerate() {
        let y = 3.0 - row as f64;
        plot.label(0.0, y + 0.6, name);
        for iv in set.intervals() {
            plot.rect(iv.lo, iv.hi, y + 0.15, y + 0.45, "#1f4e9c");
        }
    }
    plot.render()
}

fn kind_name(k: WeylKind) -> &'static str {
    match k {
        WeylKind::Bloch => "bloch",
        WeylKind::Floquet => "floquet",
    }
}

fn weyl_csv(runs: &[WeylRun]) -> String {
    let mut s = String::from("kind,lambda,j,box_x1_lo,box_x2_lo,box_x1_hi,box_x2_hi,norm_sq,residual,vertical_frame,horizontal_frame,off_frame\n");
    for r in runs {
        for x in &r.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                kind_name(r.kind),
                r.lambda,
                x.j,
                x.support_lo[0],
                x.support_lo[1],
                x.support_hi[0],
                x.support_hi[1],
                x.norm_sq,
                x.residual,
                x.vertical_frame,
                x.horizontal_frame,
                x.off_frame
            ));
        }
    }
    s
}

fn weyl_svg(runs: &[WeylRun]) -> String {
    let js = runs.iter().flat_map(|r| r.records.iter().map(|x| x.j as f64));
    let (jlo, jhi) = js.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), j| (a.min(j), b.max(j)));
    let ys = runs.iter().flat_map(|r| r.records.iter().map(|x| x.residual.log2()));
    let (ylo, yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let mut plot = Plot::new("Residual decay", "j", "log2 r_j", (jlo, jhi), (ylo - 0.5, yhi + 0.5));
    for (r, color) in runs.iter().zip(["#1f4e9c", "#c0392b"].iter().cycle()) {
        let pts: Vec<(f64, f64)> = r.records.iter().map(|x| (x.j as f64, x.residual.log2())).collect();
        plot.polyline(&pts, color, 1.5);
        plot.markers(&pts, color, 3.0);
    }
    plot.render()
}

/// Output directory for a config when `--out` is not given.
pub fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map_or_else(|| "run".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("out").join(stem)
}

//! End-to-end acceptance run. Prints one PASS/FAIL line per check and exits
//! non-zero if any check fails.
//!
//! `ACCEPTANCE_ONLY=1,5` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use guidespec_cli::{run, Command, RunOptions};
use guidespec_core::assembly::{assemble_cell_pair, BlochMomentum};
use guidespec_core::eigensolve::{lowest_eigenpairs, EigenConfig};
use guidespec_core::geometry::{rasterize_cell, validate_cell, CapBc, Shape, UnitCellGeometry, WaveguideSpec};
use guidespec_core::operator::{elasticity_symbol, scalar_symbol, CoefficientField, HermitianMatrix, HoleBc};
use guidespec_core::spectra::{
    partial_bands, sample_band_functions, strip_spectrum, BandFunction, Setup, SpectrumReport, TrappedMode,
};
use guidespec_core::weyl::{bloch_harness, floquet_harness, HarnessParams, WeylRun};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use validation_suite::{relative_error, timed, Ledger};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../cli/configs")
}

fn free_setup() -> Setup {
    Setup {
        geometry: UnitCellGeometry::default(),
        waveguide: WaveguideSpec::filled(1),
        symbol: scalar_symbol(),
        field: CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Neumann),
    }
}

fn disk_setup(waveguide: impl FnOnce(&UnitCellGeometry) -> WaveguideSpec) -> Setup {
    let geometry = UnitCellGeometry::new(vec![Shape::disk([0.5, 0.5], 0.3)], 0.05);
    Setup {
        waveguide: waveguide(&geometry),
        geometry,
        symbol: scalar_symbol(),
        field: CoefficientField::homogeneous(2, 1.0, 1.0, HoleBc::Dirichlet),
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1} s", d.as_secs_f64())
}

// ---------------------------------------------------------------------------
// 1. Free Laplacian against the Fourier oracle

fn fourier_levels(eta: [f64; 2], count: usize) -> Vec<f64> {
    let mut all: Vec<f64> = (-3i32..=3)
        .flat_map(|a| (-3i32..=3).map(move |b| (a, b)))
        .map(|(a, b)| (eta[0] + 2.0 * PI * a as f64).powi(2) + (eta[1] + 2.0 * PI * b as f64).powi(2))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

/// Worst relative error over all samples and bands, with the location.
fn oracle_error(bf: &BandFunction) -> (f64, usize, [f64; 2]) {
    let mut worst = (0.0, 0, [0.0, 0.0]);
    for (i1, &e1) in bf.grid.iter().enumerate() {
        for (i2, &e2) in bf.grid.iter().enumerate() {
            let exact = fourier_levels([e1, e2], bf.count);
            for (k, &ex) in exact.iter().enumerate() {
                let err = relative_error(bf.value(k, i1, i2), ex, 1.0);
                if err > worst.0 {
                    worst = (err, k + 1, [e1, e2]);
                }
            }
        }
    }
    worst
}

fn criterion_1(ledger: &mut Ledger) {
    let setup = free_setup();
    let cfg = EigenConfig::default();
    let (fine, elapsed) = timed(|| sample_band_functions(&setup, 16, 9, 5, &cfg, 1));
    let fine = match fine {
        Ok(bf) => bf,
        Err(e) => return ledger.broken("1", e),
    };
    let (err16, k, eta) = oracle_error(&fine);
    ledger.check(
        "1a",
        err16 <= 0.02,
        format!("n=16 bands match the Fourier oracle within 2%: worst {:.3}% (band {k}, η = ({:.3}, {:.3}))", 100.0 * err16, eta[0], eta[1]),
    );

    let (lo, hi) = (0..fine.grid.len())
        .flat_map(|i1| (0..fine.grid.len()).map(move |i2| (i1, i2)))
        .map(|(i1, i2)| fine.value(0, i1, i2))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    let top = 2.0 * PI * PI;
    let hi_err = relative_error(hi, top, 1.0);
    ledger.check(
        "1b",
        hi_err <= 0.02 && lo.abs() <= 0.02 * top,
        format!("first band [{lo:.3e}, {hi:.4}] against [0, 2π²]: upper edge off by {:.3}%", 100.0 * hi_err),
    );

    match sample_band_functions(&setup, 8, 9, 5, &cfg, 1) {
        Ok(coarse) => {
            let (err8, _, _) = oracle_error(&coarse);
            let ratio = err8 / err16;
            ledger.check(
                "1c",
                (2.0..=6.0).contains(&ratio),
                format!("error contraction n=8 → n=16 is {ratio:.2} (want 4 ± 50%; {:.3}% → {:.3}%)", 100.0 * err8, 100.0 * err16),
            );
        }
        Err(e) => ledger.broken("1c", e),
    }
    ledger.check("1d", elapsed.as_secs_f64() < 60.0, format!("n=16 sweep on one worker took {} (limit 60 s)", secs(elapsed)));
}

// ---------------------------------------------------------------------------
// 2. Structural invariants over fuzzed configurations

fn random_hermitian_pd(rng: &mut ChaCha8Rng, dim: usize) -> HermitianMatrix {
    let complex = rng.random_bool(0.5);
    let b: Vec<Complex64> = (0..dim * dim)
        .map(|_| {
            let im = if complex { rng.random_range(-1.0..1.0) } else { 0.0 };
            Complex64::new(rng.random_range(-1.0..1.0), im)
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            a[i * dim + j] = (0..dim).map(|r| b[r * dim + i].conj() * b[r * dim + j]).sum();
        }
        a[i * dim + i] += 0.5;
    }
    HermitianMatrix::symmetrized(dim, a).expect("square").0
}

fn random_geometry(rng: &mut ChaCha8Rng) -> UnitCellGeometry {
    loop {
        let holes: Vec<Shape> = (0..rng.random_range(0..=2))
            .map(|_| {
                if rng.random_bool(0.7) {
                    let r = rng.random_range(0.05..0.25);
                    let c = [rng.random_range(0.1 + r..0.9 - r), rng.random_range(0.1 + r..0.9 - r)];
                    Shape::disk(c, r)
                } else {
                    let lo = [rng.random_range(0.1..0.5), rng.random_range(0.1..0.5)];
                    let hi = [lo[0] + rng.random_range(0.1..0.35), lo[1] + rng.random_range(0.1..0.35)];
                    Shape::rect(lo, hi)
                }
            })
            .collect();
        let geom = UnitCellGeometry::new(holes, 0.05);
        if validate_cell(&geom).is_valid() {
            return geom;
        }
    }
}

struct Fuzzed {
    geometry: UnitCellGeometry,
    elastic: bool,
    field: CoefficientField,
    n: usize,
    eta: [f64; 2],
    shift: [i32; 2],
}

fn fuzzed(rng: &mut ChaCha8Rng) -> Fuzzed {
    let geometry = random_geometry(rng);
    let elastic = rng.random_bool(0.4);
    let m = if elastic { 3 } else { 2 };
    let hole_bc = if rng.random_bool(0.5) { HoleBc::Neumann } else { HoleBc::Dirichlet };
    let mut field = CoefficientField::homogeneous(m, 1.0, rng.random_range(0.5..2.0), hole_bc);
    field.background.a = random_hermitian_pd(rng, m);
    Fuzzed {
        geometry,
        elastic,
        field,
        n: [4, 6, 8][rng.random_range(0..3)],
        eta: [rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)],
        shift: [rng.random_range(-2..=2), rng.random_range(-2..=2)],
    }
}

fn criterion_2(ledger: &mut Ledger) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0acc_e971);
    let cfg = EigenConfig::default();
    let cases = 100;
    let (mut hermitian, mut ordered, mut shifted) = (0, 0, 0);
    let (mut zero_mode, mut zero_cases, mut kernel, mut kernel_cases) = (0, 0, 0, 0);
    let mut worst_zero: f64 = 0.0;
    let mut kernel_dims = BTreeMap::new();
    for _ in 0..cases {
        let f = fuzzed(&mut rng);
        let symbol = if f.elastic { elasticity_symbol() } else { scalar_symbol() };
        let mesh = match rasterize_cell(&f.geometry, f.n) {
            Ok(m) => m,
            Err(e) => return ledger.broken("2", e),
        };
        let at = |field: &CoefficientField, eta: [f64; 2]| assemble_cell_pair(&mesh, &symbol, field, BlochMomentum::new(eta[0], eta[1]));
        let (pair, moved) = match (
            at(&f.field, f.eta),
            at(&f.field, [f.eta[0] + 2.0 * PI * f.shift[0] as f64, f.eta[1] + 2.0 * PI * f.shift[1] as f64]),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return ledger.broken("2", e),
        };
        hermitian += usize::from(pair.k.is_hermitian() && pair.m.is_hermitian());
        shifted += usize::from(pair.k == moved.k && pair.m == moved.m);
        match lowest_eigenpairs(&pair, 6, &cfg) {
            Ok(r) => ordered += usize::from(r.eigenvalues.windows(2).all(|w| w[0] <= w[1])),
            Err(e) => return ledger.broken("2", e),
        }

        // Zero modes need free hole boundaries.
        let mut free = f.field.clone();
        free.hole_bc = HoleBc::Neumann;
        let Ok(origin) = at(&free, [0.0, 0.0]) else { return ledger.broken("2", "assembly at η = 0") };
        let lams = match lowest_eigenpairs(&origin, 4, &cfg) {
            Ok(r) => r.eigenvalues,
            Err(e) => return ledger.broken("2", e),
        };
        if f.elastic {
            kernel_cases += 1;
            let dim = lams.iter().filter(|&&l| l <= 1e-10).count();
            *kernel_dims.entry(dim).or_insert(0) += 1;
            kernel += usize::from(dim == 2);
        } else {
            zero_cases += 1;
            worst_zero = worst_zero.max(lams[0].abs());
            zero_mode += usize::from(lams[0] <= 1e-10);
        }
    }
    ledger.check("2a", hermitian == cases, format!("K = K* and M = M* entry by entry in {hermitian}/{cases} configs"));
    ledger.check("2b", ordered == cases, format!("eigenvalues returned in nondecreasing order in {ordered}/{cases} configs"));
    ledger.check("2c", shifted == cases, format!("η and η + 2πk give bit-identical K, M in {shifted}/{cases} configs"));
    ledger.check(
        "2d",
        zero_mode == zero_cases,
        format!("scalar Neumann λ₁(0) ≤ 1e-10 in {zero_mode}/{zero_cases} configs (worst {worst_zero:.2e})"),
    );
    ledger.check(
        "2e",
        kernel == kernel_cases,
        format!("elasticity kernel at η = 0 has dimension 2 in {kernel}/{kernel_cases} configs (dimensions seen {kernel_dims:?})"),
    );
}

// ---------------------------------------------------------------------------
// 3. Strip spectrum of the unperturbed plane sits in the partial bands

/// Distance below which an eigenvalue counts as inside a partial band.
const CONTAINMENT_FLOOR: f64 = 1e-6;

fn criterion_3(ledger: &mut Ledger) {
    let setup = disk_setup(|g| WaveguideSpec::unperturbed(g, 1));
    let cfg = EigenConfig::default();
    let n = 8;
    let mut worst_ratio_ok = true;
    let mut lines = Vec::new();
    let mut complete = true;
    for zeta in [0.0, PI / 2.0, PI] {
        let partial = match partial_bands(&setup, n, zeta, 17, 4, &cfg, 1) {
            Ok(p) => p,
            Err(e) => return ledger.broken("3", e),
        };
        let mut delta = BTreeMap::new();
        for t in [4usize, 8] {
            let strip = match strip_spectrum(&setup, zeta, t, n, 8 * t + 8, CapBc::Dirichlet, &cfg) {
                Ok(s) => s,
                Err(e) => return ledger.broken("3", e),
            };
            complete &= strip.eigenvalues.last().is_some_and(|&l| l >= partial.ceiling);
            let d = strip
                .eigenvalues
                .iter()
                .filter(|&&l| l < partial.ceiling)
                .map(|&l| partial.distance(l))
                .fold(0.0, f64::max);
            delta.insert(t, d);
        }
        let (d4, d8) = (delta[&4], delta[&8]);
        let floor = CONTAINMENT_FLOOR * partial.ceiling;
        worst_ratio_ok &= d8 <= 0.5 * d4 || d8 <= floor;
        lines.push(format!("ζ={zeta:.3}: δ(4)={d4:.2e}, δ(8)={d8:.2e}"));
    }
    ledger.check("3a", complete, "strip solves reach past the partial-band ceiling at every ζ and T");
    ledger.check(
        "3b",
        worst_ratio_ok,
        format!("δ(8) ≤ δ(4)/2 or below {CONTAINMENT_FLOOR:.0e}·ceiling: {}", lines.join("; ")),
    );
}

// ---------------------------------------------------------------------------
// 4 and 6. Full run on the disk waveguide

fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn spectrum_run(config: &Path, out: &Path, workers: usize) -> Result<(), String> {
    let opts = RunOptions { config: config.to_path_buf(), out: out.to_path_buf(), workers, no_cache: true, target: None };
    run(Command::Spectrum, &opts).map(|_| ()).map_err(|e| e.to_string())
}

/// Union formula as emitted; one line per emitted run.
fn union_emitted(ledger: &mut Ledger, id: &str, out: &Path) {
    let doc = match read_json(&out.join("spectrum.json")) {
        Ok(d) => d,
        Err(e) => return ledger.broken(id, e),
    };
    let report: SpectrumReport = match serde_json::from_value(doc["report"].clone()) {
        Ok(r) => r,
        Err(e) => return ledger.broken(id, e),
    };
    let u = report.union();
    let rebuilt = report.sigma_es0.union(&report.sigma_sharp);
    let ok = doc["union_verified"] == Value::Bool(true)
        && report.sigma_es == rebuilt
        && report.sigma_ad.is_disjoint(&report.sigma_es0)
        && u.verify();
    ledger.check(
        id,
        ok,
        format!("{}: emitted σ_es = σ_es0 ∪ σ♯ and σ_ad ∩ σ_es0 = ∅ exactly", out.file_name().unwrap_or_default().to_string_lossy()),
    );
}

fn criterion_4(ledger: &mut Ledger, scratch: &Path) {
    let out = scratch.join("disk_waveguide");
    let (res, elapsed) = timed(|| spectrum_run(&configs().join("disk_waveguide.json"), &out, 1));
    if let Err(e) = res {
        return ledger.broken("4", e);
    }
    let (dispersion, spectrum) = match (read_json(&out.join("dispersion.json")), read_json(&out.join("spectrum.json"))) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return ledger.broken("4", e),
    };
    let in_gap = dispersion["segments"]
        .as_array()
        .map_or(0, |s| s.iter().filter(|seg| seg["samples"].as_array().is_some_and(|xs| xs.iter().any(|x| x["class"] == "in_gap"))).count());
    ledger.check("4a", in_gap >= 1, format!("{in_gap} certified in-gap dispersion segments"));

    let trapped: Vec<TrappedMode> = match serde_json::from_value(dispersion["trapped_modes"].clone()) {
        Ok(t) => t,
        Err(e) => return ledger.broken("4", e),
    };
    let min_beta = trapped.iter().map(|m| m.decay.beta).fold(f64::INFINITY, f64::min);
    ledger.check(
        "4b",
        !trapped.is_empty() && min_beta > 0.0,
        format!("{} trapped modes, smallest fitted decay rate {min_beta:.3}", trapped.len()),
    );
    let (mut worst_t, mut worst_cap): (f64, f64) = (0.0, 0.0);
    for m in &trapped {
        let vals = &m.stability.values;
        for a in vals {
            for b in vals {
                let rel = (a.lambda - b.lambda).abs() / m.lambda.abs();
                if a.cap_bc == b.cap_bc && a.truncation_t == 6 && b.truncation_t == 10 {
                    worst_t = worst_t.max(rel);
                }
                if a.truncation_t == b.truncation_t && a.cap_bc != b.cap_bc {
                    worst_cap = worst_cap.max(rel);
                }
            }
        }
    }
    let both_t = trapped.iter().all(|m| {
        [6, 10].iter().all(|t| m.stability.values.iter().any(|v| v.truncation_t == *t))
    });
    ledger.check("4c", both_t && worst_t <= 1e-3, format!("|λ(T=6) − λ(T=10)|/λ ≤ 1e-3: worst {worst_t:.2e}"));
    ledger.check("4d", worst_cap <= 1e-3, format!("Dirichlet/Neumann cap agreement ≤ 1e-3: worst {worst_cap:.2e}"));

    match serde_json::from_value::<SpectrumReport>(spectrum["report"].clone()) {
        Ok(r) => ledger.check(
            "4e",
            !r.sigma_ad.is_empty() && r.sigma_ad.is_disjoint(&r.sigma_es0),
            format!("σ_ad = {} nonempty and disjoint from σ_es0 = {}", r.sigma_ad, r.sigma_es0),
        ),
        Err(e) => {
            ledger.broken("4e", e);
            false
        }
    };
    ledger.check("4f", elapsed.as_secs_f64() < 900.0, format!("full run took {} (limit 15 min)", secs(elapsed)));
    union_emitted(ledger, "6a", &out);
}

// ---------------------------------------------------------------------------
// 5. Weyl sequences

fn describe(run: &WeylRun) -> String {
    let r: Vec<String> = run.records.iter().map(|x| format!("{:.3}", x.residual)).collect();
    format!(
        "slope {:.3} [{:.3}, {:.3}], residuals {}",
        run.residual_slope.slope,
        run.residual_slope.ci_low,
        run.residual_slope.ci_high,
        r.join(" ")
    )
}

fn criterion_5(ledger: &mut Ledger) {
    let params = HarnessParams { n: 4, j_min: 2, j_max: 5, ramp: 0.5 };
    let cfg = EigenConfig::default();
    let (runs, elapsed) = timed(|| {
        let free = free_setup();
        let disk = disk_setup(|_| WaveguideSpec::filled(1));
        (
            bloch_harness(&free, &params, [PI, PI], 0, 0.0, &cfg, 1),
            bloch_harness(&free, &params, [PI, PI], 0, 1.0, &cfg, 1),
            floquet_harness(&disk, &params, 0.0, 6, 6, None, 0.05, 0.25, &cfg, 1),
        )
    });
    match runs.0 {
        Ok(b) => {
            let s = b.residual_slope.slope;
            ledger.check("5a", (-0.8..=-0.2).contains(&s), format!("Bloch residual law at (π,π), λ = {:.4}: {}", b.lambda, describe(&b)));
            let g = b.norm_growth.slope;
            ledger.check("5b", (g - 2.0).abs() <= 0.3, format!("Bloch norm growth slope {g:.3} (want 2 ± 0.3)"));
        }
        Err(e) => ledger.broken("5a", e),
    }
    match runs.1 {
        Ok(d) => {
            let s = d.residual_slope.slope;
            ledger.check("5c", s > -0.1, format!("detuned control (λ + 1) shows no decay: {}", describe(&d)));
        }
        Err(e) => ledger.broken("5c", e),
    }
    match runs.2 {
        Ok(f) => {
            let g = f.norm_growth.slope;
            ledger.check(
                "5d",
                (g - 1.0).abs() <= 0.3,
                format!("Floquet norm growth slope {g:.3} (want 1 ± 0.3) at λ = {:.4}; {}", f.lambda, describe(&f)),
            );
        }
        Err(e) => ledger.broken("5d", e),
    }
    ledger.check("5e", elapsed.as_secs_f64() < 300.0, format!("three harness runs took {} (limit 5 min)", secs(elapsed)));
}

// ---------------------------------------------------------------------------
// 7. Determinism across worker counts

fn file_map(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        if entry.file_type().map_err(|e| e.to_string())?.is_file() {
            let name = entry.file_name().to_string_lossy().into_owned();
            files.insert(name, fs::read(entry.path()).map_err(|e| e.to_string())?);
        }
    }
    Ok(files)
}

fn criterion_7(ledger: &mut Ledger, scratch: &Path) {
    let config = configs().join("disk_waveguide_small.json");
    let one = scratch.join("workers_1");
    let eight = scratch.join("workers_8");
    for (dir, w) in [(&one, 1), (&eight, 8)] {
        if let Err(e) = spectrum_run(&config, dir, w) {
            return ledger.broken("7", e);
        }
    }
    match (file_map(&one), file_map(&eight)) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
            ledger.check(
                "7a",
                a.len() >= 9 && a.keys().eq(b.keys()) && differing.is_empty(),
                format!("spectrum outputs with 1 and 8 workers are byte-identical ({} files, {} differ)", a.len(), differing.len()),
            );
        }
        (Err(e), _) | (_, Err(e)) => ledger.broken("7a", e),
    }
    union_emitted(ledger, "6b", &one);
}

fn main() {
    let only: Option<Vec<String>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').map(|x| x.trim().to_string()).collect());
    let wanted = |id: &str| only.as_ref().is_none_or(|o| o.iter().any(|x| x == id));
    let scratch = tempfile::tempdir().expect("scratch directory");
    let mut ledger = Ledger::default();
    let (_, total) = timed(|| {
        if wanted("1") {
            criterion_1(&mut ledger);
        }
        if wanted("2") {
            criterion_2(&mut ledger);
        }
        if wanted("3") {
            criterion_3(&mut ledger);
        }
        if wanted("4") || wanted("6") {
            criterion_4(&mut ledger, scratch.path());
        }
        if wanted("5") {
            criterion_5(&mut ledger);
        }
        if wanted("7") || wanted("6") {
            criterion_7(&mut ledger, scratch.path());
        }
    });
    println!("acceptance: {} in {}", ledger.summary(), secs(total));
    if ledger.failures() > 0 {
        std::process::exit(1);
    }
}

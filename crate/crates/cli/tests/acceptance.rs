//! Acceptance criteria 1-8. Each test prints one PASS/FAIL line to stderr,
//! bypassing the harness's output capture, then asserts.
//!
//! Reference values below are the published Monte Carlo table, the
//! discussion's σ_f = 10 MHz cross-checks and the extrapolated window widths.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

use crowding::collision::{count_collisions, CollisionRuleSet, RoleAssignment};
use crowding::mc::{run_trials, sample_frequencies, sigma_grid, sweep_sigma, McConfig, SweepConfig, SweepResult, TrialsPolicy};
use crowding::tunesim::{run_campaign, spread_campaign, two_group_campaign, ScenarioParams};
use crowding::{AnnealResponseModel, TunePolicy};
use crowding::window::{fit_trend, fit_window, required_sigma};
use crowding::{build_lattice, LatticeFamily};

const SEED: u64 = 0;
const TRIALS: usize = 1000;
const AS_FABRICATED_SIGMA: f64 = 132.3;
const TUNED_SIGMA: f64 = 14.0;

/// Criterion 1: mean within max(25 % relative, 0.3 absolute); yield within 6 pp.
const MEAN_REL_TOL: f64 = 0.25;
const MEAN_ABS_TOL: f64 = 0.3;
const YIELD_TOL: f64 = 0.06;
/// Criterion 2.
const DELTA_F_TOL_MHZ: f64 = 2.0;
/// Criterion 3.
const EXTRAPOLATION_TOL_MHZ: f64 = 0.7;
/// Criterion 5: yield ceiling, and heavy-hexagon d=3 band around 0.1 %.
const AS_FAB_YIELD_MAX: f64 = 0.001;
const HH3_AS_FAB_YIELD: (f64, f64) = (0.001, 0.001);
/// Criterion 6.
const CONVERGENCE_MIN: f64 = 0.99;
const POOLED_SIGMA_RANGE_MHZ: (f64, f64) = (14.0, 18.5);
const CAMPAIGN_REPLICATES: u64 = 100;

struct Row {
    family: LatticeFamily,
    distance: usize,
    qubits: usize,
    mean_132: f64,
    mean_14: f64,
    /// `None` where the table gives only an upper bound below 0.1 %.
    yield_14: Option<f64>,
    delta_f_mhz: f64,
}

const fn row(
    family: LatticeFamily,
    distance: usize,
    qubits: usize,
    mean_132: f64,
    mean_14: f64,
    yield_14: Option<f64>,
    delta_f_mhz: f64,
) -> Row {
    Row {
        family,
        distance,
        qubits,
        mean_132,
        mean_14,
        yield_14,
        delta_f_mhz,
    }
}

use LatticeFamily::{HeavyHexagon as HH, HeavySquare as HS, Square as SQ};

const TABLE: [Row; 9] = [
    row(SQ, 3, 17, 9.0, 3.0, Some(0.06), 13.96),
    row(SQ, 5, 49, 35.0, 10.0, None, 13.23),
    row(SQ, 7, 97, 78.0, 23.0, None, 12.12),
    row(HS, 3, 25, 10.0, 0.4, Some(0.67), 30.89),
    row(HS, 5, 73, 33.0, 1.5, Some(0.27), 29.49),
    row(HS, 7, 145, 70.0, 3.5, Some(0.06), 29.06),
    row(HH, 3, 23, 8.0, 0.4, Some(0.70), 31.61),
    row(HH, 5, 65, 25.0, 1.2, Some(0.33), 29.91),
    row(HH, 7, 127, 51.0, 2.7, Some(0.08), 29.29),
];

fn report(criterion: u8, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {criterion}: {verdict} - {detail}");
}

fn note(text: &str) {
    let _ = writeln!(std::io::stderr(), "    {text}");
}

struct LatticeSweep {
    results: Vec<SweepResult<f64>>,
}

impl LatticeSweep {
    fn at(&self, sigma: f64) -> &SweepResult<f64> {
        self.results
            .iter()
            .find(|r| r.sigma_f_mhz == sigma)
            .expect("σ on the sweep grid")
    }

    fn curve(&self) -> Vec<(f64, f64)> {
        self.results.iter().map(|r| (r.sigma_f_mhz, r.yield_fraction)).collect()
    }
}

/// One spacing-optimised sweep per table row: σ_f = 0..60 MHz in 1 MHz steps
/// plus the as-fabricated point, 1000 trials each.
fn sweeps() -> &'static [LatticeSweep] {
    static CELL: OnceLock<Vec<LatticeSweep>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut grid = sigma_grid(0.0, 60.0, 1.0).unwrap();
        grid.push(AS_FABRICATED_SIGMA);
        let mut cfg = SweepConfig::<f64>::new(SEED);
        cfg.trials = TrialsPolicy::fixed(TRIALS);
        TABLE
            .iter()
            .map(|r| {
                let l = build_lattice(r.family, r.distance).unwrap();
                assert_eq!(l.len(), r.qubits);
                LatticeSweep {
                    results: sweep_sigma(&l, &grid, &cfg).unwrap(),
                }
            })
            .collect()
    })
}

fn window_fits() -> Vec<f64> {
    sweeps()
        .iter()
        .zip(&TABLE)
        .map(|(s, r)| fit_window(&s.curve(), r.qubits).unwrap().delta_f_mhz)
        .collect()
}

#[test]
fn criterion_1_tuned_table() {
    let mut pass = true;
    for (s, r) in sweeps().iter().zip(&TABLE) {
        let got = s.at(TUNED_SIGMA);
        let mean_tol = (MEAN_REL_TOL * r.mean_14).max(MEAN_ABS_TOL);
        let mean_ok = (got.mean_collisions - r.mean_14).abs() <= mean_tol;
        let yield_ok = (got.yield_fraction - r.yield_14.unwrap_or(0.0)).abs() <= YIELD_TOL;
        pass &= mean_ok && yield_ok;
        note(&format!(
            "{} d={}: mean {:.3} (ref {}, ±{:.2}) yield {:.1}% (ref {}) spacing {} MHz {}",
            r.family,
            r.distance,
            got.mean_collisions,
            r.mean_14,
            mean_tol,
            100.0 * got.yield_fraction,
            r.yield_14.map_or("<0.1%".to_string(), |y| format!("{:.0}%", 100.0 * y)),
            got.spacing_mhz,
            if mean_ok && yield_ok { "ok" } else { "OUT" }
        ));
    }
    report(1, pass, "σ_f = 14 MHz mean collisions and yields over nine lattices, 1000 trials");
    assert!(pass);
}

#[test]
fn criterion_2_window_fits() {
    let fits = window_fits();
    let mut pass = true;
    for (df, r) in fits.iter().zip(&TABLE) {
        let ok = (df - r.delta_f_mhz).abs() <= DELTA_F_TOL_MHZ;
        pass &= ok;
        note(&format!(
            "{} d={}: Δf {:.2} MHz (ref {}) {}",
            r.family,
            r.distance,
            df,
            r.delta_f_mhz,
            if ok { "ok" } else { "OUT" }
        ));
    }
    report(2, pass, "fixed-window Δf within ±2 MHz for all nine lattices");
    assert!(pass);
}

#[test]
fn criterion_3_extrapolation() {
    let hh: Vec<(usize, f64)> = TABLE
        .iter()
        .filter(|r| r.family == HH)
        .map(|r| (r.qubits, r.delta_f_mhz))
        .collect();
    let t = fit_trend(&hh).unwrap();
    let (d300, d1000) = (t.delta_f(300), t.delta_f(1000));
    let pass = (d300 - 27.99).abs() <= EXTRAPOLATION_TOL_MHZ
        && (d1000 - 26.32).abs() <= EXTRAPOLATION_TOL_MHZ
        && t.residuals().iter().all(|r| r.abs() < 0.5);
    note(&format!(
        "table Δf: A = {:.3}, B = {:.3} (log10 {:.3}); Δf(300) = {d300:.2}, Δf(1000) = {d1000:.2}",
        t.coeff_a, t.coeff_b, t.coeff_b_log10
    ));

    // The same trend through this crate's own simulated window widths.
    let fits = window_fits();
    let sim: Vec<(usize, f64)> = TABLE
        .iter()
        .zip(&fits)
        .filter(|(r, _)| r.family == HH)
        .map(|(r, &df)| (r.qubits, df))
        .collect();
    let ts = fit_trend(&sim).unwrap();
    note(&format!(
        "simulated Δf (informational): Δf(300) = {:.2}, Δf(1000) = {:.2}",
        ts.delta_f(300),
        ts.delta_f(1000)
    ));
    report(3, pass, "heavy-hexagon A + B·ln N trend at 300 and 1000 qubits within ±0.7 MHz");
    assert!(pass);
}

#[test]
fn criterion_4_discussion_cross_checks() {
    // (reference yield, tolerance) at σ_f = 10 MHz, d = 5
    let yields = [(SQ, 0.008, 0.007), (HS, 0.90, 0.05), (HH, 0.92, 0.05)];
    let fits = window_fits();
    let mut pass = true;
    for (family, want, tol) in yields {
        let i = TABLE.iter().position(|r| r.family == family && r.distance == 5).unwrap();
        let y = sweeps()[i].at(10.0).yield_fraction;
        let ok = (y - want).abs() <= tol;
        pass &= ok;
        let needed = required_sigma(fits[i], TABLE[i].qubits, 0.10).unwrap();
        let sigma_ok = match family {
            SQ => needed < 8.0,
            HS => (needed - 16.0).abs() <= 1.5,
            HH => (needed - 17.0).abs() <= 1.5,
        };
        pass &= sigma_ok;
        note(&format!(
            "{family} d=5: yield at 10 MHz {:.1}% (ref {:.1}% ± {:.1}) {}; σ_f for 10% yield {needed:.2} MHz {}",
            100.0 * y,
            100.0 * want,
            100.0 * tol,
            if ok { "ok" } else { "OUT" },
            if sigma_ok { "ok" } else { "OUT" }
        ));
    }
    report(4, pass, "σ_f = 10 MHz yields and σ_f required for 10 % yield at d = 5");
    assert!(pass);
}

#[test]
fn criterion_5_as_fabricated() {
    let mut pass = true;
    for (s, r) in sweeps().iter().zip(&TABLE) {
        let got = s.at(AS_FABRICATED_SIGMA);
        let yield_ok = if r.family == HH && r.distance == 3 {
            (got.yield_fraction - HH3_AS_FAB_YIELD.0).abs() <= HH3_AS_FAB_YIELD.1 + 1e-12
        } else {
            got.yield_fraction <= AS_FAB_YIELD_MAX
        };
        let mean_ok = (got.mean_collisions - r.mean_132).abs() <= MEAN_REL_TOL * r.mean_132;
        pass &= yield_ok && mean_ok;
        note(&format!(
            "{} d={}: mean {:.2} (ref {}) yield {:.1}% {}",
            r.family,
            r.distance,
            got.mean_collisions,
            r.mean_132,
            100.0 * got.yield_fraction,
            if yield_ok && mean_ok { "ok" } else { "OUT" }
        ));
    }
    report(5, pass, "σ_f = 132.3 MHz yields and mean collisions");
    assert!(pass);
}

#[test]
fn criterion_6_tuning_loop() {
    let params = ScenarioParams::<f64>::default();
    let model = AnnealResponseModel::default();
    let policy = TunePolicy::default();

    let spread = spread_campaign(300, 0.004, 0.145, &params, SEED).unwrap();
    let out = run_campaign(spread, &model, &policy, SEED).unwrap();
    let converged = out.summary.convergence_fraction;
    let within_band = out
        .campaign
        .junctions
        .iter()
        .filter(|j| (j.current_resistance_ohm / j.target_resistance_ohm - 1.0).abs() <= policy.tolerance)
        .count();

    let mut monotone = true;
    let mut histories = 0;
    let mut check = |js: &[crowding::JunctionRecord]| {
        for j in js {
            let mut prev = j.initial_resistance_ohm;
            for step in &j.history {
                monotone &= step.resistance_ohm > prev;
                prev = step.resistance_ohm;
            }
            histories += 1;
        }
    };
    check(&out.campaign.junctions);
    let mut pooled = Vec::new();
    for seed in 0..CAMPAIGN_REPLICATES {
        let c = two_group_campaign(31, 16, 5.7046, 5.430, &params, seed).unwrap();
        let o = run_campaign(c, &model, &policy, seed).unwrap();
        check(&o.campaign.junctions);
        pooled.push(o.summary.pooled_sigma_f_mhz);
    }
    let mean_pooled = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let (lo, hi) = pooled.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));

    // Independent quadrature estimate: residual scatter plus the frequency
    // error of a resistance anywhere in the band, |df/f| = |p|·|dR/R|.
    let mean_f_ghz = (16.0 * 5.7046 + 15.0 * 5.430) / 31.0;
    let tuning_mhz = 0.5 * policy.tolerance * mean_f_ghz * 1000.0;
    let quadrature = (14.5f64.powi(2) + tuning_mhz.powi(2)).sqrt();

    let conv_ok = converged >= CONVERGENCE_MIN && within_band as f64 / 300.0 >= CONVERGENCE_MIN;
    let pooled_ok = (POOLED_SIGMA_RANGE_MHZ.0..=POOLED_SIGMA_RANGE_MHZ.1).contains(&mean_pooled);
    note(&format!(
        "spread campaign: {:.1}% converged, {within_band}/300 inside ±0.3 %, mean {:.2} steps",
        100.0 * converged,
        out.summary.mean_steps
    ));
    note(&format!("resistance strictly increasing over {histories} histories: {monotone}"));
    note(&format!(
        "two-group pooled σ_f over {CAMPAIGN_REPLICATES} campaigns: mean {mean_pooled:.2} MHz (range {lo:.2}..{hi:.2}); quadrature {quadrature:.2} MHz"
    ));
    let pass = conv_ok && monotone && pooled_ok && (quadrature - 16.8).abs() < 0.3;
    report(6, pass, "tuning convergence, monotonic histories and pooled σ_f in [14.0, 18.5] MHz");
    assert!(pass);
}

#[test]
fn criterion_7_oracle_equivalence() {
    let rules = CollisionRuleSet::<f64>::default();
    let draws = 200;
    let mut pass = true;
    let mut compared = 0;
    for family in LatticeFamily::ALL {
        let l = build_lattice(family, 3).unwrap();
        for (roles, sampled) in [(RoleAssignment::Sampled, true), (RoleAssignment::Pattern, false)] {
            let mut cfg = McConfig::new(25.0, draws, 7, 60.0).unwrap();
            cfg.roles = roles;
            let mut totals = [0u64; 8];
            for t in 0..draws {
                // sweep σ_f across draws so both sparse and crowded samples appear
                cfg.sigma_f_mhz = 5.0 + 55.0 * t as f64 / draws as f64;
                let f = sample_frequencies(&l, &cfg, t).unwrap();
                let fast = count_collisions(&l, &f, &rules, roles).unwrap();
                let slow = oracle::brute_force_counts(&l, &f, &oracle::Bounds::default(), sampled);
                for ty in 1..=7u8 {
                    pass &= fast.count(ty) == slow[ty as usize];
                }
                compared += 1;
            }
            // the batched engine against the oracle at one fixed σ_f
            cfg.sigma_f_mhz = 25.0;
            for t in 0..draws {
                let f = sample_frequencies(&l, &cfg, t).unwrap();
                let slow = oracle::brute_force_counts(&l, &f, &oracle::Bounds::default(), sampled);
                for ty in 1..8 {
                    totals[ty] += slow[ty];
                }
            }
            let batch = run_trials(&l, &cfg).unwrap();
            for ty in 1..=7u8 {
                let engine = (batch.per_type_means[&ty] * draws as f64).round() as u64;
                pass &= engine == totals[ty as usize];
            }
        }
    }
    report(
        7,
        pass,
        &format!("{compared} single draws and 6 batched runs over d = 3 lattices match the brute-force oracle exactly"),
    );
    assert!(pass);
}

fn crowding_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crowding"))
}

fn run_ok(args: &[&str], out: &Path) -> PathBuf {
    let name = args[0].to_string() + "-" + &args.len().to_string();
    let status = crowding_bin()
        .args(args)
        .args(["--out", out.to_str().unwrap(), "--name", &name, "--seed", "11"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    out.join(args[0]).join(name)
}

#[test]
fn criterion_8_rerun_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let rn = tmp.path().join("rn.csv");
    std::fs::write(
        &rn,
        "resistance_ohm,frequency_ghz\n7500,5.88\n7800,5.77\n8100,5.66\n8400,5.56\n8700,5.47\n",
    )
    .unwrap();

    let sweep = run_ok(
        &["sweep", "--family", "heavy-hexagon", "-d", "3", "--sigma", "0:40:4", "--trials", "200"],
        &out,
    );
    let sweep5 = run_ok(
        &["sweep", "--family", "heavy-hexagon", "-d", "5", "--sigma", "0:40:4", "--trials", "100", "--roles", "pattern"],
        &out,
    );
    let (csv3, csv5) = (sweep.join("results.csv"), sweep5.join("results.csv"));
    let fw = run_ok(
        &["fit-window", "--input", csv3.to_str().unwrap(), "--input", csv5.to_str().unwrap()],
        &out,
    );
    let runs = vec![
        run_ok(&["lattice", "--family", "heavy-square", "-d", "5"], &out),
        run_ok(&["check", "--family", "square", "-d", "3", "--sigma", "20"], &out),
        sweep,
        sweep5,
        fw.clone(),
        run_ok(&["extrapolate", "--input", fw.join("results.json").to_str().unwrap()], &out),
        run_ok(&["tune", "--replicates", "3"], &out),
        run_ok(&["tune", "--junctions", "60", "--target-spread", "0.4:14.5"], &out),
        run_ok(&["fit-rn", "--input", rn.to_str().unwrap()], &out),
    ];

    let mut pass = true;
    let mut files = 0;
    for dir in &runs {
        let manifest = dir.join("manifest.json");
        let name = format!("{}-again", dir.file_name().unwrap().to_string_lossy());
        let st = crowding_bin()
            .args(["rerun", manifest.to_str().unwrap(), "--out", out.to_str().unwrap(), "--name", &name])
            .output()
            .unwrap();
        pass &= st.status.success();
        let again = dir.parent().unwrap().join(&name);
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            let ext = p.extension().and_then(|e| e.to_str()).unwrap_or("");
            if p.file_name().unwrap() == "manifest.json" || !matches!(ext, "csv" | "json") {
                continue;
            }
            let same = std::fs::read(&p).unwrap() == std::fs::read(again.join(p.file_name().unwrap())).unwrap_or_default();
            if !same {
                note(&format!("differs: {}", p.display()));
            }
            pass &= same;
            files += 1;
        }
    }
    report(
        8,
        pass,
        &format!("{} commands re-run from their manifests; {files} CSV/JSON files byte-identical", runs.len()),
    );
    assert!(pass);
}

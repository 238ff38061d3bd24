use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use crowding::collision::collision_instances;
use crowding::io::{read_resistance_csv, read_sweep_csv, write_sweep_csv};
use crowding::lattice::{assign_pattern, FrequencyPattern};
use crowding::mc::{sample_frequencies, sweep_sigma, McConfig, SweepConfig, SweepResult, TrialsPolicy};
use crowding::physics::{critical_current_from_resistance, fit_power_law, predict_frequency, ExponentMode, PowerLawFit};
use crowding::tunesim::{
    median_steps, run_campaign, spread_campaign, two_group_campaign, write_history_csv, AnnealResponseModel,
    CampaignOutcome, CampaignSummary,
};
use crowding::window::{fit_trend, fit_window, required_sigma, window_yield, WindowFit, WindowTrend};
use crowding::{build_lattice, next_nearest_triples, Lattice, LatticeFamily, RoleAssignment};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::config::Config;
use crate::manifest::{Artifact, Invocation};
use crate::svg::{render_lattice, render_panels, Panel, Series, Style};

/// σ_f points tabulated by `sweep --reproduce-table2`.
pub const TABLE_SIGMAS_MHZ: [f64; 2] = [132.3, 14.0];
pub const TABLE_DISTANCES: [usize; 3] = [3, 5, 7];

/// What a command produced.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Files read, for the manifest.
    pub inputs: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub report: String,
}

pub fn execute(inv: &Invocation) -> anyhow::Result<Outcome> {
    let (seed, cfg) = (inv.master_seed, &inv.config);
    match &inv.command {
        Command::Lattice(a) => lattice(a),
        Command::Check(a) => check(a, seed, cfg),
        Command::Sweep(a) if a.reproduce_table2 => table(a, seed, cfg, sweep_metadata(inv)),
        Command::Sweep(a) => sweep(a, seed, cfg, sweep_metadata(inv)),
        Command::FitWindow(a) => fit_windows(a),
        Command::Extrapolate(a) => extrapolate(a),
        Command::Tune(a) => tune(a, seed, cfg),
        Command::FitRn(a) => fit_rn(a, cfg),
        Command::Rerun(_) => bail!("rerun cannot be recorded"),
    }
}

/// Rewrites input paths as absolute so a recorded run can be repeated from anywhere.
pub fn absolutize_inputs(cmd: &mut Command) -> anyhow::Result<()> {
    let abs = |p: &mut PathBuf| -> anyhow::Result<()> {
        *p = std::path::absolute(&*p).with_context(|| format!("resolving {}", p.display()))?;
        Ok(())
    };
    match cmd {
        Command::FitWindow(a) => a.inputs.iter_mut().try_for_each(abs)?,
        Command::Extrapolate(a) => a.input.iter_mut().try_for_each(abs)?,
        Command::FitRn(a) => abs(&mut a.input)?,
        _ => {}
    }
    Ok(())
}

/// `Δf(N) = A ± B·ln N (± B'·log10 N)`
fn trend_formula(t: &WindowTrend<f64>) -> String {
    let sign = if t.coeff_b < 0.0 { '-' } else { '+' };
    format!(
        "Δf(N) = {:.3} {sign} {:.3}·ln N  ({sign} {:.3}·log10 N)",
        t.coeff_a,
        t.coeff_b.abs(),
        t.coeff_b_log10.abs()
    )
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner()?)
}

fn label<S: Serialize>(v: &S) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

fn sweep_config(seed: u64, cfg: &Config, a: &SweepArgs) -> anyhow::Result<SweepConfig<f64>> {
    let s = &cfg.sweep;
    let sc = SweepConfig {
        master_seed: seed,
        spacing_grid_mhz: a.spacing.as_ref().map_or_else(|| s.spacing_grid_mhz.clone(), |g| g.0.clone()),
        base_frequency_mhz: s.base_frequency_mhz,
        roles: a.roles.map_or(s.roles, RoleAssignment::from),
        rules: cfg.collision,
        trials: a.trials.map_or_else(|| s.trials.clone(), TrialsPolicy::fixed),
    };
    sc.validate()?;
    Ok(sc)
}

// ---------------------------------------------------------------- lattice

#[derive(Serialize)]
struct LatticeSummary<'a> {
    family: LatticeFamily,
    distance: usize,
    qubits: usize,
    edges: usize,
    max_degree: usize,
    next_nearest_triples: usize,
    lattice: &'a Lattice,
}

fn lattice(a: &LatticeArgs) -> anyhow::Result<Outcome> {
    let l = build_lattice(a.lattice.family, a.lattice.distance)?;
    let triples = next_nearest_triples(&l).len();
    let degrees = l.degrees();
    let rows = l.nodes.iter().map(|n| {
        vec![
            n.id.to_string(),
            n.position[0].to_string(),
            n.position[1].to_string(),
            label(&n.code_role),
            label(&n.gate_role),
            n.pattern_index.to_string(),
            degrees[n.id].to_string(),
        ]
    });
    let csv = csv_bytes(&["id", "x", "y", "code_role", "gate_role", "pattern_index", "degree"], rows)?;
    let summary = LatticeSummary {
        family: l.family,
        distance: l.distance,
        qubits: l.len(),
        edges: l.edges.len(),
        max_degree: l.max_degree(),
        next_nearest_triples: triples,
        lattice: &l,
    };
    let report = format!(
        "{} d={}: {} qubits, {} couplings, max degree {}, {} next-nearest triples",
        l.family,
        l.distance,
        l.len(),
        l.edges.len(),
        l.max_degree(),
        triples
    );
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &summary)?,
            Artifact::new("lattice.dot", l.to_dot()),
            Artifact::new("plot.svg", render_lattice(&l)),
        ],
        inputs: vec![],
        report,
    })
}

// ---------------------------------------------------------------- check

#[derive(Serialize)]
struct CheckResult {
    family: LatticeFamily,
    distance: usize,
    sigma_f_mhz: f64,
    spacing_mhz: f64,
    trial: usize,
    roles: RoleAssignment,
    frequencies_mhz: Vec<f64>,
    collisions: crowding::CollisionReport,
}

fn check(a: &CheckArgs, seed: u64, cfg: &Config) -> anyhow::Result<Outcome> {
    let l = build_lattice(a.lattice.family, a.lattice.distance)?;
    let mut mc = McConfig::new(a.sigma, a.trial + 1, seed, a.spacing)?;
    mc.base_frequency_mhz = cfg.sweep.base_frequency_mhz;
    mc.roles = a.roles.map_or(cfg.sweep.roles, RoleAssignment::from);
    mc.rules = cfg.collision;
    let f = sample_frequencies(&l, &mc, a.trial)?;
    let patterned = assign_pattern(&l, FrequencyPattern::for_family(l.family, mc.base_frequency_mhz, a.spacing)?)?;
    let collisions = collision_instances(&l, &f, &mc.rules, mc.roles)?;

    let rows = l.nodes.iter().map(|n| {
        vec![
            n.id.to_string(),
            n.pattern_index.to_string(),
            patterned.set_points[n.id].to_string(),
            f[n.id].to_string(),
        ]
    });
    let csv = csv_bytes(&["id", "pattern_index", "design_mhz", "sampled_mhz"], rows)?;

    let mut report = format!(
        "{} d={} σ_f={} MHz spacing={} MHz trial {}: {} collisions\n",
        l.family, l.distance, a.sigma, a.spacing, a.trial, collisions.total
    );
    for (ty, count) in &collisions.per_type_counts {
        if *count > 0 {
            let _ = writeln!(report, "  type {ty}: {count}");
        }
    }
    for c in collisions.instances.iter().flatten() {
        let _ = writeln!(report, "  type {} on qubits {:?}", c.collision_type, c.qubits);
    }
    let result = CheckResult {
        family: l.family,
        distance: l.distance,
        sigma_f_mhz: a.sigma,
        spacing_mhz: a.spacing,
        trial: a.trial,
        roles: mc.roles,
        frequencies_mhz: f,
        collisions,
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &result)?,
            Artifact::new("plot.svg", render_lattice(&l)),
        ],
        inputs: vec![],
        report: report.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- sweep

/// Run identity carried inside sweep JSON. The creation time lives only in
/// the manifest so that re-runs stay byte-identical.
#[derive(Serialize)]
struct SweepMetadata {
    master_seed: u64,
    config_hash: String,
    spacing_optimized_per_sigma: bool,
    trials: TrialsPolicy,
    roles: RoleAssignment,
}

fn sweep_metadata(inv: &Invocation) -> SweepMetadata {
    let s = &inv.config.sweep;
    let (trials, roles) = match &inv.command {
        Command::Sweep(a) => (
            a.trials.map_or_else(|| s.trials.clone(), TrialsPolicy::fixed),
            a.roles.map_or(s.roles, RoleAssignment::from),
        ),
        _ => (s.trials.clone(), s.roles),
    };
    SweepMetadata {
        master_seed: inv.master_seed,
        config_hash: inv.hash(),
        spacing_optimized_per_sigma: true,
        trials,
        roles,
    }
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    metadata: SweepMetadata,
    family: LatticeFamily,
    distance: usize,
    qubits: usize,
    window_fit: Option<WindowFit<f64>>,
    results: &'a [SweepResult<f64>],
}

fn yield_curve(results: &[SweepResult<f64>]) -> Vec<(f64, f64)> {
    results.iter().map(|r| (r.sigma_f_mhz, r.yield_fraction)).collect()
}

fn sweep_panels(curves: &[(String, &[SweepResult<f64>])]) -> String {
    let mut mean = Panel::new("Mean collisions", "σ_f (MHz)", "collisions per device");
    let mut yld = Panel::new("Collision-free yield", "σ_f (MHz)", "yield");
    for (i, (name, rs)) in curves.iter().enumerate() {
        mean.series.push(Series::new(
            name.clone(),
            rs.iter().map(|r| (r.sigma_f_mhz, r.mean_collisions)).collect(),
            Style::Line,
            i,
        ));
        yld.series.push(Series::new(name.clone(), yield_curve(rs), Style::Line, i));
    }
    render_panels(&[mean, yld])
}

fn sweep(a: &SweepArgs, seed: u64, cfg: &Config, metadata: SweepMetadata) -> anyhow::Result<Outcome> {
    let (Some(family), Some(distance)) = (a.family, a.distance) else {
        bail!(crowding::Error::InvalidParameter("sweep needs --family and --distance".into()));
    };
    let sc = sweep_config(seed, cfg, a)?;
    let l = build_lattice(family, distance)?;
    let results = sweep_sigma(&l, &a.sigma.0, &sc)?;
    let fit = fit_window(&yield_curve(&results), l.len()).ok();

    let mut csv = Vec::new();
    write_sweep_csv(&results, &mut csv)?;
    let mut report = format!("{family} d={distance} ({} qubits): {} σ_f points\n", l.len(), results.len());
    let _ = writeln!(report, "{:>10} {:>10} {:>10} {:>8} {:>8}", "σ_f", "spacing", "mean", "yield", "trials");
    let step = (results.len() / 12).max(1);
    for r in results.iter().step_by(step) {
        let _ = writeln!(
            report,
            "{:>10.2} {:>10.1} {:>10.4} {:>8.4} {:>8}",
            r.sigma_f_mhz, r.spacing_mhz, r.mean_collisions, r.yield_fraction, r.trials
        );
    }
    match &fit {
        Some(w) => {
            let _ = write!(report, "window fit: Δf = {:.2} MHz (rms {:.4})", w.delta_f_mhz, w.residual);
        }
        None => report.push_str("window fit: not enough yield points strictly between 0 and 1"),
    }
    let out = SweepOutput {
        metadata,
        family,
        distance,
        qubits: l.len(),
        window_fit: fit,
        results: &results,
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &out)?,
            Artifact::new("plot.svg", sweep_panels(&[(format!("{family} d={distance}"), &results)])),
        ],
        inputs: vec![],
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
struct TableRow {
    family: LatticeFamily,
    distance: usize,
    qubits: usize,
    /// `(σ_f, optimal spacing, mean collisions, yield)` at each tabulated σ_f.
    points: Vec<TablePoint>,
    delta_f_mhz: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct TablePoint {
    sigma_f_mhz: f64,
    spacing_mhz: f64,
    mean_collisions: f64,
    #[serde(rename = "yield")]
    yield_fraction: f64,
    trials: usize,
}

fn table(a: &SweepArgs, seed: u64, cfg: &Config, metadata: SweepMetadata) -> anyhow::Result<Outcome> {
    let sc = sweep_config(seed, cfg, a)?;
    let mut grid = a.sigma.0.clone();
    grid.extend(TABLE_SIGMAS_MHZ);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut all = Vec::new();
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    for family in LatticeFamily::ALL {
        for d in TABLE_DISTANCES {
            eprintln!("sweeping {family} d={d}");
            let l = build_lattice(family, d)?;
            let results = sweep_sigma(&l, &grid, &sc)?;
            let points = TABLE_SIGMAS_MHZ
                .iter()
                .map(|&s| {
                    let r = results.iter().find(|r| r.sigma_f_mhz == s).expect("tabulated σ is on the grid");
                    TablePoint {
                        sigma_f_mhz: s,
                        spacing_mhz: r.spacing_mhz,
                        mean_collisions: r.mean_collisions,
                        yield_fraction: r.yield_fraction,
                        trials: r.trials,
                    }
                })
                .collect();
            rows.push(TableRow {
                family,
                distance: d,
                qubits: l.len(),
                points,
                delta_f_mhz: fit_window(&yield_curve(&results), l.len()).ok().map(|w| w.delta_f_mhz),
            });
            curves.push((format!("{family} d={d}"), results.clone()));
            all.extend(results);
        }
    }

    let mut header = vec!["family".to_string(), "distance".into(), "qubits".into()];
    for s in TABLE_SIGMAS_MHZ {
        let tag = s.to_string().replace('.', "_");
        for col in ["spacing_mhz", "mean_collisions", "yield"] {
            header.push(format!("{col}_sigma_{tag}"));
        }
    }
    header.push("delta_f_mhz".into());
    let table_rows = rows.iter().map(|r| {
        let mut v = vec![r.family.to_string(), r.distance.to_string(), r.qubits.to_string()];
        for p in &r.points {
            v.extend([p.spacing_mhz.to_string(), p.mean_collisions.to_string(), p.yield_fraction.to_string()]);
        }
        v.push(r.delta_f_mhz.map_or_else(String::new, |x| x.to_string()));
        v
    });
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let table_csv = csv_bytes(&header_refs, table_rows)?;

    let mut report = format!(
        "{:<14} {:>2} {:>4} | {:>9} {:>7} | {:>9} {:>7} | {:>8}\n",
        "family", "d", "N", "mean@132", "yield", "mean@14", "yield", "Δf (MHz)"
    );
    for r in &rows {
        let _ = writeln!(
            report,
            "{:<14} {:>2} {:>4} | {:>9.3} {:>6.1}% | {:>9.3} {:>6.1}% | {:>8}",
            r.family.as_str(),
            r.distance,
            r.qubits,
            r.points[0].mean_collisions,
            100.0 * r.points[0].yield_fraction,
            r.points[1].mean_collisions,
            100.0 * r.points[1].yield_fraction,
            r.delta_f_mhz.map_or_else(|| "n/a".into(), |x| format!("{x:.2}")),
        );
    }

    let mut csv = Vec::new();
    write_sweep_csv(&all, &mut csv)?;
    let curve_refs: Vec<(String, &[SweepResult<f64>])> =
        curves.iter().map(|(n, r)| (n.clone(), r.as_slice())).collect();
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::new("table.csv", table_csv),
            Artifact::json("results.json", &serde_json::json!({ "metadata": metadata, "table": rows, "sigma_grid_mhz": grid }))?,
            Artifact::new("plot.svg", sweep_panels(&curve_refs)),
        ],
        inputs: vec![],
        report: report.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- fit-window

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRow {
    pub family: LatticeFamily,
    pub distance: usize,
    #[serde(flatten)]
    pub fit: WindowFit<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitWindowOutput {
    pub fits: Vec<FitRow>,
    /// `Δf(N)` per family, where at least two distances fitted.
    pub trends: BTreeMap<LatticeFamily, WindowTrend<f64>>,
}

fn fit_windows(a: &FitWindowArgs) -> anyhow::Result<Outcome> {
    let mut groups: BTreeMap<(LatticeFamily, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for path in &a.inputs {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        for r in read_sweep_csv(file, &path.display().to_string())? {
            groups
                .entry((r.family, r.distance))
                .or_default()
                .push((r.sigma_f_mhz, r.yield_fraction));
        }
    }
    if groups.is_empty() {
        bail!("no sweep rows in the inputs");
    }

    let mut fits = Vec::new();
    let mut report = String::new();
    let mut panel = Panel::new("Yield and window model", "σ_f (MHz)", "yield");
    for (i, (&(family, distance), curve)) in groups.iter().enumerate() {
        let mut curve = curve.clone();
        curve.sort_by(|x, y| x.0.total_cmp(&y.0));
        let n = family.qubit_count(distance);
        match fit_window(&curve, n) {
            Ok(fit) => {
                let _ = writeln!(
                    report,
                    "{family} d={distance} N={n}: Δf = {:.2} MHz (rms {:.4}, {} points)",
                    fit.delta_f_mhz, fit.residual, fit.points_used
                );
                let smax = curve.last().map_or(1.0, |c| c.0);
                let model = (0..=200)
                    .map(|k| {
                        let s = smax * k as f64 / 200.0;
                        (s, window_yield(fit.delta_f_mhz, s, n))
                    })
                    .collect();
                panel.series.push(Series::new(format!("{family} d={distance}"), curve.clone(), Style::Markers, i));
                panel.series.push(Series::new("", model, Style::Line, i));
                fits.push(FitRow { family, distance, fit });
            }
            Err(e) => {
                let _ = writeln!(report, "{family} d={distance}: skipped ({e})");
            }
        }
    }
    if fits.is_empty() {
        bail!("no group could be fitted:\n{}", report.trim_end());
    }

    let mut trends = BTreeMap::new();
    for family in LatticeFamily::ALL {
        let pts: Vec<(usize, f64)> = fits
            .iter()
            .filter(|f| f.family == family)
            .map(|f| (f.fit.n_qubits, f.fit.delta_f_mhz))
            .collect();
        if pts.len() >= 2 {
            let t = fit_trend(&pts)?;
            let _ = writeln!(report, "{family}: {}", trend_formula(&t));
            trends.insert(family, t);
        }
    }

    let rows = fits.iter().map(|f| {
        vec![
            f.family.to_string(),
            f.distance.to_string(),
            f.fit.n_qubits.to_string(),
            f.fit.delta_f_mhz.to_string(),
            f.fit.residual.to_string(),
            f.fit.points_used.to_string(),
        ]
    });
    let csv = csv_bytes(
        &["family", "distance", "n_qubits", "delta_f_mhz", "residual", "points_used"],
        rows,
    )?;
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &FitWindowOutput { fits, trends })?,
            Artifact::new("plot.svg", render_panels(&[panel])),
        ],
        inputs: a.inputs.clone(),
        report: report.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- extrapolate

#[derive(Serialize)]
struct ExtrapolationRow {
    n_qubits: usize,
    delta_f_mhz: f64,
    yields: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    required_sigma_mhz: Option<f64>,
}

fn load_points(path: &Path, family: LatticeFamily) -> anyhow::Result<Vec<(usize, f64)>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let parsed: FitWindowOutput =
        serde_json::from_reader(file).with_context(|| format!("{} is not fit-window output", path.display()))?;
    Ok(parsed
        .fits
        .iter()
        .filter(|f| f.family == family)
        .map(|f| (f.fit.n_qubits, f.fit.delta_f_mhz))
        .collect())
}

fn extrapolate(a: &ExtrapolateArgs) -> anyhow::Result<Outcome> {
    if a.n_step == 0 || a.n_min == 0 || a.n_min > a.n_max {
        bail!(crowding::Error::InvalidParameter("need 0 < n-min <= n-max and n-step > 0".into()));
    }
    if let Some(y) = a.target_yield {
        if y >= 1.0 {
            bail!(crowding::Error::InvalidParameter("target yield must lie in (0, 1)".into()));
        }
    }
    let (points, inputs) = match &a.input {
        Some(p) => (load_points(p, a.family)?, vec![p.clone()]),
        None => (a.points.clone(), vec![]),
    };
    let trend = fit_trend(&points)?;

    let rows: Vec<ExtrapolationRow> = (a.n_min..=a.n_max)
        .step_by(a.n_step)
        .map(|n| {
            let df = trend.delta_f(n);
            Ok(ExtrapolationRow {
                n_qubits: n,
                delta_f_mhz: df,
                yields: a.sigma.iter().map(|&s| window_yield(df, s, n)).collect(),
                required_sigma_mhz: a.target_yield.map(|y| required_sigma(df, n, y)).transpose()?,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let mut header = vec!["n_qubits".to_string(), "delta_f_mhz".into()];
    header.extend(a.sigma.iter().map(|s| format!("yield_sigma_{s}")));
    if a.target_yield.is_some() {
        header.push("required_sigma_mhz".into());
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv = csv_bytes(
        &header_refs,
        rows.iter().map(|r| {
            let mut v = vec![r.n_qubits.to_string(), r.delta_f_mhz.to_string()];
            v.extend(r.yields.iter().map(f64::to_string));
            v.extend(r.required_sigma_mhz.map(|s| s.to_string()));
            v
        }),
    )?;

    let mut report = format!("{} from {} points\n", trend_formula(&trend), points.len());
    let _ = write!(report, "{:>6} {:>8}", "N", "Δf");
    for s in &a.sigma {
        let _ = write!(report, " {:>9}", format!("σ={s}"));
    }
    report.push('\n');
    let pick: Vec<&ExtrapolationRow> = rows
        .iter()
        .filter(|r| [a.n_min, 100, 300, 500, a.n_max].contains(&r.n_qubits) || r.n_qubits == rows[0].n_qubits)
        .collect();
    for r in pick {
        let _ = write!(report, "{:>6} {:>8.2}", r.n_qubits, r.delta_f_mhz);
        for y in &r.yields {
            let _ = write!(report, " {:>8.2}%", 100.0 * y);
        }
        if let Some(s) = r.required_sigma_mhz {
            let _ = write!(report, "  needs σ_f ≤ {s:.2} MHz");
        }
        report.push('\n');
    }

    let mut df_panel = Panel::new("Window width", "qubits N", "Δf (MHz)");
    df_panel.series.push(Series::new(
        "fit",
        rows.iter().map(|r| (r.n_qubits as f64, r.delta_f_mhz)).collect(),
        Style::Line,
        0,
    ));
    df_panel.series.push(Series::new(
        "input",
        points.iter().map(|&(n, d)| (n as f64, d)).collect(),
        Style::Markers,
        1,
    ));
    let mut y_panel = Panel::new("Extrapolated yield", "qubits N", "yield");
    for (i, s) in a.sigma.iter().enumerate() {
        y_panel.series.push(Series::new(
            format!("σ_f = {s} MHz"),
            rows.iter().map(|r| (r.n_qubits as f64, r.yields[i])).collect(),
            Style::Line,
            i,
        ));
    }

    let json = serde_json::json!({
        "family": a.input.as_ref().map(|_| a.family),
        "points": points,
        "trend": trend,
        "sigma_mhz": a.sigma,
        "target_yield": a.target_yield,
        "rows": rows,
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &json)?,
            Artifact::new("plot.svg", render_panels(&[df_panel, y_panel])),
        ],
        inputs,
        report: report.trim_end().to_string(),
    })
}

// ---------------------------------------------------------------- tune

#[derive(Serialize)]
struct TuneOutput<'a> {
    scenario: &'static str,
    junctions: usize,
    replicates: usize,
    summary: &'a CampaignSummary<f64>,
    median_steps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replicate_means: Option<ReplicateMeans>,
    final_frequencies_ghz: &'a [f64],
}

#[derive(Serialize)]
struct ReplicateMeans {
    pooled_sigma_f_mhz: f64,
    convergence_fraction: f64,
    mean_steps: f64,
    exhausted: f64,
    pooled_sigma_f_mhz_each: Vec<f64>,
}

pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

fn tune(a: &TuneArgs, seed: u64, cfg: &Config) -> anyhow::Result<Outcome> {
    let t = &cfg.tune;
    let model = AnnealResponseModel::from_law(&t.anneal)?;
    let n = a.junctions.unwrap_or(if a.target_spread.is_some() { 300 } else { 31 });
    let run = |r: usize| -> anyhow::Result<CampaignOutcome<f64>> {
        let s = replicate_seed(seed, r);
        let campaign = match a.target_spread {
            Some((lo, hi)) => spread_campaign(n, lo / 100.0, hi / 100.0, &t.population, s)?,
            None => two_group_campaign(
                n,
                t.high_count.unwrap_or(n.div_ceil(2)),
                t.high_frequency_ghz,
                t.low_frequency_ghz,
                &t.population,
                s,
            )?,
        };
        Ok(run_campaign(campaign, &model, &t.policy, s)?)
    };
    let outcomes = (0..a.replicates).map(run).collect::<anyhow::Result<Vec<_>>>()?;
    let first = &outcomes[0];
    let s = &first.summary;
    let scenario = if a.target_spread.is_some() { "spread" } else { "two-group" };

    let mean = |f: &dyn Fn(&CampaignSummary<f64>) -> f64| {
        outcomes.iter().map(|o| f(&o.summary)).sum::<f64>() / outcomes.len() as f64
    };
    let replicate_means = (a.replicates > 1).then(|| ReplicateMeans {
        pooled_sigma_f_mhz: mean(&|s| s.pooled_sigma_f_mhz),
        convergence_fraction: mean(&|s| s.convergence_fraction),
        mean_steps: mean(&|s| s.mean_steps),
        exhausted: mean(&|s| s.exhausted as f64),
        pooled_sigma_f_mhz_each: outcomes.iter().map(|o| o.summary.pooled_sigma_f_mhz).collect(),
    });

    let js = &first.campaign.junctions;
    let med = median_steps(js);
    let mut report = format!(
        "{scenario} campaign, {n} junctions: {} converged, {} overshot, {} exhausted\n\
         steps: mean {:.2}, median {}, max {}\n\
         σ_R = {:.2} Ω",
        s.converged,
        s.overshot,
        s.exhausted,
        s.mean_steps,
        med.map_or_else(|| "n/a".into(), |m| format!("{m:.1}")),
        s.max_steps,
        s.sigma_r_ohm,
    );
    if a.target_spread.is_none() {
        let medians: Vec<String> = s.group_median_frequencies_ghz.iter().map(|g| format!("{g:.4}")).collect();
        let _ = write!(
            report,
            "\npooled σ_f = {:.2} MHz (quadrature estimate {:.2} MHz)\ngroup medians (GHz): {}",
            s.pooled_sigma_f_mhz,
            s.quadrature_sigma_f_mhz,
            medians.join(", ")
        );
    } else {
        let c = &first.campaign;
        let rms = (first
            .final_frequencies_ghz
            .iter()
            .zip(&c.target_frequencies_ghz)
            .map(|(f, t)| (1000.0 * (f - t)).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        let _ = write!(report, "\nRMS final-frequency error against per-junction targets: {rms:.2} MHz");
    }
    if let Some(m) = &replicate_means {
        let _ = write!(
            report,
            "\nover {} replicates: pooled σ_f {:.2} MHz, convergence {:.1}%, {:.2} exhausted per campaign",
            a.replicates,
            m.pooled_sigma_f_mhz,
            100.0 * m.convergence_fraction,
            m.exhausted
        );
    }

    let rows = js.iter().zip(&first.final_frequencies_ghz).map(|(j, f)| {
        vec![
            j.id.to_string(),
            j.group.to_string(),
            j.initial_resistance_ohm.to_string(),
            j.target_resistance_ohm.to_string(),
            j.current_resistance_ohm.to_string(),
            f.to_string(),
            j.history.len().to_string(),
            j.status.as_str().to_string(),
        ]
    });
    let csv = csv_bytes(
        &[
            "id",
            "group",
            "initial_resistance_ohm",
            "target_resistance_ohm",
            "final_resistance_ohm",
            "final_frequency_ghz",
            "steps",
            "status",
        ],
        rows,
    )?;
    let mut history = Vec::new();
    write_history_csv(js, &mut history)?;

    let mut traj = Panel::new("Tuning trajectories", "anneal step", "R / R_target − 1 (%)");
    for j in js {
        let pts = std::iter::once(j.initial_resistance_ohm)
            .chain(j.history.iter().map(|h| h.resistance_ohm))
            .enumerate()
            .map(|(k, r)| (k as f64, 100.0 * (r / j.target_resistance_ohm - 1.0)))
            .collect();
        traj.series.push(Series::new("", pts, Style::Line, j.group));
    }
    let mut freq = Panel::new("Final frequencies", "initial resistance (Ω)", "frequency (GHz)");
    let groups = js.iter().map(|j| j.group).max().map_or(0, |g| g + 1);
    for g in 0..groups {
        freq.series.push(Series::new(
            format!("group {g}"),
            js.iter()
                .zip(&first.final_frequencies_ghz)
                .filter(|(j, _)| j.group == g)
                .map(|(j, &f)| (j.initial_resistance_ohm, f))
                .collect(),
            Style::Markers,
            g,
        ));
    }

    let out = TuneOutput {
        scenario,
        junctions: n,
        replicates: a.replicates,
        summary: s,
        median_steps: med,
        replicate_means,
        final_frequencies_ghz: &first.final_frequencies_ghz,
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::new("history.csv", history),
            Artifact::json("results.json", &out)?,
            Artifact::new("plot.svg", render_panels(&[traj, freq])),
        ],
        inputs: vec![],
        report,
    })
}

// ---------------------------------------------------------------- fit-rn

fn fit_rn(a: &FitRnArgs, cfg: &Config) -> anyhow::Result<Outcome> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let pts = read_resistance_csv(file, &a.input.display().to_string())?;
    let mode = a.fixed_exponent.map_or(ExponentMode::Free, ExponentMode::Fixed);
    let fit: PowerLawFit<f64> = fit_power_law(&pts, mode)?;

    let rows = pts
        .iter()
        .map(|&(r, f)| {
            let p = predict_frequency(&fit, r)?;
            Ok(vec![r.to_string(), f.to_string(), p.to_string(), ((f - p) * 1000.0).to_string()])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let csv = csv_bytes(&["resistance_ohm", "frequency_ghz", "predicted_ghz", "residual_mhz"], rows)?;

    let mut rs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    rs.sort_by(f64::total_cmp);
    let median_r = rs[rs.len() / 2];
    let ic = critical_current_from_resistance(median_r, cfg.physics.gap_uev)?;
    let report = format!(
        "f = {:.4} GHz · R^{:.4} from {} samples; residual σ = {:.2} MHz\n\
         I_c at R = {median_r} Ω: {ic:.2} nA (Δ = {} µeV)",
        fit.prefactor, fit.exponent, fit.sample_count, fit.residual_std_mhz, cfg.physics.gap_uev
    );

    let (lo, hi) = (rs[0], rs[rs.len() - 1]);
    let line = (0..=50)
        .map(|k| {
            let r = lo * (hi / lo).powf(k as f64 / 50.0);
            (r, fit.prefactor * r.powf(fit.exponent))
        })
        .collect();
    let mut panel = Panel::new("Frequency vs normal resistance", "R_n (Ω)", "f01 (GHz)");
    panel.log_x = true;
    panel.log_y = true;
    panel.series.push(Series::new("samples", pts.clone(), Style::Markers, 0));
    panel.series.push(Series::new("fit", line, Style::Line, 1));

    Ok(Outcome {
        artifacts: vec![
            Artifact::new("results.csv", csv),
            Artifact::json("results.json", &fit)?,
            Artifact::new("plot.svg", render_panels(&[panel])),
        ],
        inputs: vec![a.input.clone()],
        report,
    })
}

//! The four subcommands: run the planar experiment, run the sequence-space
//! experiment, verify the check suite, export operator definitions.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use cosmiclab::engine::{ball_map, cosmic_report, iterate, CosmicReport};
use cosmiclab::prox2d::{MaxSeparable2D, PaperParams, Prox2dOperator};
use cosmiclab::seqspace::{sandwich_bounds, TruncatedGradientOperator};
use cosmiclab::theorems::{
    check_cone_inclusion_2d, check_firmly_nonexpansive, check_monotone_inner, check_nonexpansive,
    check_pairwise_nonneg, check_separating_hyperplane, CheckReport, SampleBox,
};
use cosmiclab::{Operator, Translation};

use crate::config::{parse_schedule, Config, OperatorKind};

/// Every artifact carries its schema identifier and the full resolved
/// configuration; identical configs produce byte-identical JSON.
#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema: &'static str,
    config: &'a Config,
    data: T,
}

fn write_json<T: Serialize>(
    path: &Path,
    schema: &'static str,
    cfg: &Config,
    data: T,
) -> Result<()> {
    let doc = Document {
        schema,
        config: cfg,
        data,
    };
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn csv_file(path: &Path, schema: &str, cfg: &Config) -> Result<BufWriter<File>> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(w, "# schema={schema}")?;
    writeln!(w, "# config={}", serde_json::to_string(cfg)?)?;
    Ok(w)
}

fn build_paper_operator(cfg: &Config) -> Result<Prox2dOperator> {
    let n_max = cfg
        .n_max
        .ok_or_else(|| anyhow::anyhow!("n_max is required for the paper2d operator"))?;
    let params = PaperParams::new(n_max)?;
    let op = MaxSeparable2D::from_paper_params(params);
    Ok(Prox2dOperator::new(op, cfg.tol.prox)?)
}

fn print_cluster_summary(report: &CosmicReport) {
    println!(
        "directions retained: {} (min_norm {}), clusters (eps_angle {}):",
        report.directions.len(),
        report.min_norm,
        report.eps_angle
    );
    for c in &report.clusters {
        let coords: Vec<String> = c.center.iter().map(|v| format!("{v:.6}")).collect();
        println!("  center ({})  members {}", coords.join(", "), c.count);
    }
    println!(
        "v_hat_pazy norm {:.6e}, v_hat_baillon norm {:.6e}",
        norm(&report.v_hat_pazy),
        norm(&report.v_hat_baillon)
    );
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Runs the planar prox iteration and writes the trajectory, level trace,
/// cosmic report, and ball-mapped snapshots.
pub fn run2d(cfg: &Config) -> Result<()> {
    if cfg.operator != OperatorKind::Paper2d {
        bail!("run2d drives the paper2d operator (got {})", cfg.operator);
    }
    let op = build_paper_operator(cfg)?;
    let x0 = match &cfg.x0 {
        Some(v) if v.len() == 2 => v.clone(),
        Some(v) => bail!("x0 must have 2 coordinates, got {}", v.len()),
        None => vec![0.0, 0.0],
    };
    let schedule = parse_schedule(&cfg.schedule)?;
    let traj = iterate(&op, &x0, cfg.k_max, &schedule)?;
    let report = cosmic_report(&traj, cfg.min_norm, cfg.eps_angle);

    std::fs::create_dir_all(&cfg.out)?;
    let mut w = csv_file(
        &cfg.out.join("trajectory.csv"),
        "cosmiclab/trajectory-v1",
        cfg,
    )?;
    traj.write_csv(&mut w)?;

    let mut w = csv_file(&cfg.out.join("levels.csv"), "cosmiclab/levels-v1", cfg)?;
    writeln!(w, "k,level")?;
    for c in &traj.checkpoints {
        writeln!(w, "{},{}", c.k, c.level.expect("paper2d records levels"))?;
    }

    let mut w = csv_file(&cfg.out.join("ball_map.csv"), "cosmiclab/ball-map-v1", cfg)?;
    writeln!(w, "k,ball_1,ball_2")?;
    for c in &traj.checkpoints {
        let b = ball_map(&c.state);
        writeln!(w, "{},{},{}", c.k, b[0], b[1])?;
    }

    write_json(
        &cfg.out.join("trajectory.json"),
        "cosmiclab/trajectory-v1",
        cfg,
        &traj,
    )?;
    write_json(
        &cfg.out.join("cosmic_report.json"),
        "cosmiclab/cosmic-report-v1",
        cfg,
        &report,
    )?;

    let final_level = op.inner().level([traj.final_state[0], traj.final_state[1]]);
    println!(
        "run2d: {} steps from ({}, {}), final level {:.6}{}",
        traj.final_k,
        x0[0],
        x0[1],
        final_level,
        match traj.guard_stop {
            Some(k) => format!(" (stopped at the truncation guard, step {k})"),
            None => String::new(),
        }
    );
    print_cluster_summary(&report);
    println!(
        "wrote trajectory.csv/json, levels.csv, ball_map.csv, cosmic_report.json to {}",
        cfg.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrendRow {
    k: u64,
    norm: f64,
    normalized_first_coordinate: f64,
}

/// Runs the truncated gradient iteration from the origin and writes the
/// snapshots, the normalized-coordinate trend, and the sandwich-bound audit.
pub fn runseq(cfg: &Config) -> Result<()> {
    if cfg.operator != OperatorKind::Seqspace {
        bail!("runseq drives the seqspace operator (got {})", cfg.operator);
    }
    if cfg.x0.is_some() {
        bail!("runseq always starts at the origin; the bound audit assumes it");
    }
    let op = TruncatedGradientOperator::new(cfg.n_coords)?;
    let schedule = parse_schedule(&cfg.schedule)?;
    let x0 = vec![0.0; cfg.n_coords];
    let traj = iterate(&op, &x0, cfg.k_max, &schedule)?;

    std::fs::create_dir_all(&cfg.out)?;
    let mut w = csv_file(
        &cfg.out.join("snapshots.csv"),
        "cosmiclab/snapshots-v1",
        cfg,
    )?;
    writeln!(w, "k,i,x_i")?;
    for c in &traj.checkpoints {
        for (i, v) in c.state.iter().enumerate() {
            writeln!(w, "{},{},{}", c.k, i + 1, v)?;
        }
    }

    write_json(
        &cfg.out.join("trajectory.json"),
        "cosmiclab/trajectory-v1",
        cfg,
        &traj,
    )?;
    let trend: Vec<TrendRow> = traj
        .checkpoints
        .iter()
        .map(|c| TrendRow {
            k: c.k,
            norm: c.norm,
            normalized_first_coordinate: c.state[0] / c.norm,
        })
        .collect();
    write_json(
        &cfg.out.join("trend.json"),
        "cosmiclab/trend-v1",
        cfg,
        &trend,
    )?;

    let mut violations = 0u64;
    let mut rows = 0u64;
    let mut w = csv_file(
        &cfg.out.join("bounds_audit.csv"),
        "cosmiclab/bounds-audit-v1",
        cfg,
    )?;
    writeln!(w, "k,i,x_i,lower,upper,in_bounds")?;
    for c in &traj.checkpoints {
        for (i, (&x, &alpha)) in c.state.iter().zip(op.step_sizes()).enumerate() {
            let (lo, hi) = sandwich_bounds(c.k, alpha);
            let ok = x >= lo - 1e-12 && x <= hi + 1e-12;
            rows += 1;
            if !ok {
                violations += 1;
            }
            writeln!(w, "{},{},{},{},{},{}", c.k, i + 1, x, lo, hi, ok)?;
        }
    }

    println!(
        "runseq: {} steps, {} coordinates, final norm {:.6}",
        traj.final_k,
        cfg.n_coords,
        traj.checkpoints.last().map(|c| c.norm).unwrap_or(f64::NAN)
    );
    println!("bound audit: {violations} violations across {rows} rows");
    println!(
        "wrote snapshots.csv, trajectory.json, trend.json, bounds_audit.csv to {}",
        cfg.out.display()
    );
    Ok(())
}

fn normalized(q: &[f64]) -> Result<Vec<f64>> {
    let n = norm(q);
    if n == 0.0 {
        bail!("q must be nonzero");
    }
    Ok(q.iter().map(|v| v / n).collect())
}

fn print_check_table(checks: &[CheckReport]) {
    println!(
        "{:<28} {:>8} {:>14} {:>10} {:>7}",
        "check", "samples", "worst", "tol", "result"
    );
    for c in checks {
        println!(
            "{:<28} {:>8} {:>14.3e} {:>10.1e} {:>7}",
            c.name,
            c.samples,
            c.worst_violation,
            c.tol,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
}

/// Runs the verification suite for the configured operator. Returns whether
/// every check passed.
pub fn verify(cfg: &Config) -> Result<bool> {
    let mut checks: Vec<CheckReport> = Vec::new();
    match cfg.operator {
        OperatorKind::Paper2d => {
            let op = build_paper_operator(cfg)?;
            let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0, 0.0]);
            let schedule = parse_schedule(&cfg.schedule)?;
            let traj = iterate(&op, &x0, cfg.k_max, &schedule)?;
            let report = cosmic_report(&traj, cfg.min_norm, cfg.eps_angle);
            let qs: Vec<Vec<f64>> = match &cfg.q {
                Some(q) => vec![normalized(q)?],
                None => report.clusters.iter().map(|c| c.center.clone()).collect(),
            };
            if qs.is_empty() {
                bail!("no direction clusters extracted; run longer or pass --q");
            }
            let bx = SampleBox::symmetric(2, cfg.box_half_width)?;
            let firm_bx = SampleBox::symmetric(2, cfg.firm_box_half_width)?;
            checks.push(check_nonexpansive(
                &op,
                cfg.n_samples,
                &bx,
                cfg.tol.nonexpansive,
                cfg.seed,
            )?);
            checks.push(check_firmly_nonexpansive(
                &op,
                cfg.n_samples,
                &firm_bx,
                cfg.tol.firm,
                cfg.seed,
            )?);
            for q in &qs {
                checks.push(check_separating_hyperplane(
                    &op,
                    q,
                    cfg.n_samples,
                    &bx,
                    cfg.tol.hyperplane,
                    cfg.seed,
                )?);
                checks.push(check_monotone_inner(&traj, q, cfg.tol.monotone)?);
                checks.push(check_cone_inclusion_2d(
                    q,
                    &op,
                    cfg.n_samples,
                    &bx,
                    cfg.tol.cone,
                    cfg.seed,
                )?);
            }
            checks.push(check_pairwise_nonneg(&qs, cfg.tol.pairwise)?);
        }
        OperatorKind::Seqspace => {
            let op = TruncatedGradientOperator::new(cfg.n_coords)?;
            let bx = SampleBox::symmetric(cfg.n_coords, cfg.box_half_width)?;
            let firm_bx = SampleBox::symmetric(cfg.n_coords, cfg.firm_box_half_width)?;
            checks.push(check_nonexpansive(
                &op,
                cfg.n_samples,
                &bx,
                cfg.tol.nonexpansive,
                cfg.seed,
            )?);
            checks.push(check_firmly_nonexpansive(
                &op,
                cfg.n_samples,
                &firm_bx,
                cfg.tol.firm,
                cfg.seed,
            )?);
        }
        OperatorKind::Translation => {
            let op = Translation::new(cfg.v.clone());
            let dim = op.dimension();
            let q = normalized(&cfg.v.iter().map(|c| -c).collect::<Vec<f64>>())?;
            let x0 = cfg.x0.clone().unwrap_or_else(|| vec![0.0; dim]);
            let schedule = parse_schedule(&cfg.schedule)?;
            let traj = iterate(&op, &x0, cfg.k_max, &schedule)?;
            let report = cosmic_report(&traj, cfg.min_norm, cfg.eps_angle);
            let bx = SampleBox::symmetric(dim, cfg.box_half_width)?;
            let firm_bx = SampleBox::symmetric(dim, cfg.firm_box_half_width)?;
            checks.push(check_nonexpansive(
                &op,
                cfg.n_samples,
                &bx,
                cfg.tol.nonexpansive,
                cfg.seed,
            )?);
            checks.push(check_firmly_nonexpansive(
                &op,
                cfg.n_samples,
                &firm_bx,
                cfg.tol.firm,
                cfg.seed,
            )?);
            checks.push(check_separating_hyperplane(
                &op,
                &q,
                cfg.n_samples,
                &bx,
                cfg.tol.hyperplane,
                cfg.seed,
            )?);
            checks.push(check_monotone_inner(&traj, &q, cfg.tol.monotone)?);
            if dim == 2 {
                checks.push(check_cone_inclusion_2d(
                    &q,
                    &op,
                    cfg.n_samples,
                    &bx,
                    cfg.tol.cone,
                    cfg.seed,
                )?);
            }
            let dir: Vec<f64> = report
                .directions
                .last()
                .map(|d| d.direction.clone())
                .unwrap_or_default();
            println!(
                "translation direction report: normalized tail iterate {:?} (expected {:?})",
                dir, q
            );
            println!("v_hat_baillon: {:?}", report.v_hat_baillon);
        }
    }

    print_check_table(&checks);
    std::fs::create_dir_all(&cfg.out)?;
    write_json(
        &cfg.out.join("checks.json"),
        "cosmiclab/checks-v1",
        cfg,
        &checks,
    )?;
    let all_pass = checks.iter().all(|c| c.pass);
    println!(
        "verify: {} of {} checks passed",
        checks.iter().filter(|c| c.pass).count(),
        checks.len()
    );
    Ok(all_pass)
}

#[derive(Serialize)]
struct TranslationDef<'a> {
    v: &'a [f64],
}

/// Writes the configured operator definition as JSON.
pub fn export(cfg: &Config) -> Result<()> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("operator.json");
    match cfg.operator {
        OperatorKind::Paper2d => {
            let op = build_paper_operator(cfg)?;
            write_json(&path, "cosmiclab/operator-paper2d-v1", cfg, op.inner())?;
        }
        OperatorKind::Seqspace => {
            let op = TruncatedGradientOperator::new(cfg.n_coords)?;
            write_json(&path, "cosmiclab/operator-seqspace-v1", cfg, &op)?;
        }
        OperatorKind::Translation => {
            write_json(
                &path,
                "cosmiclab/operator-translation-v1",
                cfg,
                TranslationDef { v: &cfg.v },
            )?;
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

use std::fmt::Display;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};

use catmap::experiments::{self, ExperimentError};
use catmap::{export, spectral};
use catmap::{
    bdb_sequence, build_propagator_with, quantum_period, validate_catmap, BuildOptions, CatMatrix, ClusterMode,
    Mat2, ScanOptions,
};

use crate::config::{Format, RunConfig};
use crate::{svg, Cli, CliError, Command, Outcome};

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::Classify => classify(&cfg),
        Command::Sequence { .. } => sequence(&cfg),
        Command::Period { .. } => period(&cfg),
        Command::Propagator { .. } => propagator(&cfg),
        Command::Spectrum { .. } => spectrum(&cfg),
        Command::Scan { .. } => scan(&cfg),
        Command::Profile { .. } => profile(&cfg),
        Command::Dispersive { .. } => dispersive(&cfg),
        Command::Verify { .. } => verify(&cfg),
    }
}

fn domain(e: impl Display) -> CliError {
    CliError::Domain(e.to_string())
}

fn experiment(e: ExperimentError) -> CliError {
    match e {
        ExperimentError::EmptyRange(..)
        | ExperimentError::TooLarge(..)
        | ExperimentError::BadEpsilon(_)
        | ExperimentError::NoRecords => CliError::Usage(e.to_string()),
        other => domain(other),
    }
}

fn cat_matrix(cfg: &RunConfig) -> Result<CatMatrix, CliError> {
    CatMatrix::from_i64(cfg.entries()).map_err(domain)
}

fn single_n(cfg: &RunConfig) -> Result<usize, CliError> {
    match cfg.n.as_slice() {
        [n] => Ok(*n),
        [] => Err(CliError::Usage("--n is required".into())),
        _ => Err(CliError::Usage("exactly one --n expected".into())),
    }
}

fn build_options(cfg: &RunConfig) -> BuildOptions {
    BuildOptions { allow_even_n: cfg.allow_even_n, unitarity_scale: cfg.tol_unitarity, ..Default::default() }
}

fn scan_options(cfg: &RunConfig) -> ScanOptions {
    ScanOptions {
        odd_only: !cfg.all_n,
        jobs: cfg.jobs,
        cluster_tol: cfg.tol_cluster,
        cluster_mode: if cfg.unmerged { ClusterMode::Unmerged } else { ClusterMode::Merged },
        build: build_options(cfg),
        max_dim: cfg.max_dim,
    }
}

fn sink(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.output {
        Some(path) => {
            let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(cfg: &RunConfig, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), CliError> {
    let mut out = sink(cfg)?;
    body(&mut out)?;
    out.flush()?;
    Ok(())
}

fn emit_svg(cfg: &RunConfig, render: impl FnOnce() -> String) -> Result<(), CliError> {
    if let Some(path) = &cfg.svg {
        fs::write(path, render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn serde_name<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn classify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = validate_catmap(&Mat2::from_i64(cfg.entries()));
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &report),
        Format::Csv => {
            let reasons: Vec<&str> = report.failure_reasons.iter().map(|r| r.describe()).collect();
            let ineligible: Vec<&str> = report.eligibility_failures.iter().map(|r| r.describe()).collect();
            writeln!(w, "field,value")?;
            writeln!(w, "is_quantizable,{}", report.is_quantizable)?;
            writeln!(w, "thm1_eligible,{}", report.thm1_eligible)?;
            writeln!(w, "trace,{}", report.trace)?;
            writeln!(w, "lambda,{}", report.lambda.map(|l| l.to_string()).unwrap_or_default())?;
            writeln!(w, "failure_reasons,\"{}\"", reasons.join("; "))?;
            writeln!(w, "eligibility_failures,\"{}\"", ineligible.join("; "))
        }
    })?;
    Ok(Outcome { exit_code: if report.is_quantizable { 0 } else { 1 }, failed_rows: 0 })
}

fn sequence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let report = a.report();
    if !report.thm1_eligible {
        let why: Vec<&str> = report.eligibility_failures.iter().map(|r| r.describe()).collect();
        return Err(CliError::Domain(format!("matrix is not eligible: {}", why.join("; "))));
    }
    let points = bdb_sequence(&a, cfg.count).map_err(domain)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &points),
        Format::Csv => {
            writeln!(w, "k,N_k,t_k")?;
            points.iter().try_for_each(|p| writeln!(w, "{},{},{}", p.k, p.modulus, p.t_k))
        }
    })?;
    Ok(Outcome::default())
}

fn period(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    if cfg.n.is_empty() {
        return Err(CliError::Usage("--n is required".into()));
    }
    let records = cfg
        .n
        .iter()
        .map(|&n| quantum_period(&a, n as u64))
        .collect::<Result<Vec<_>, _>>()
        .map_err(domain)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &records),
        Format::Csv => {
            writeln!(w, "N,T_N,n_N,parity_rule_used")?;
            records.iter().try_for_each(|r| {
                writeln!(w, "{},{},{},{}", r.modulus, r.order, r.period, serde_name(&r.parity_rule_used))
            })
        }
    })?;
    Ok(Outcome::default())
}

fn propagator(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let n = single_n(cfg)?;
    let m = build_propagator_with(&a, n, &build_options(cfg)).map_err(domain)?;
    emit(cfg, |w| {
        if cfg.binary {
            return export::write_matrix_binary(w, m.entries());
        }
        match cfg.format {
            Format::Csv => export::write_matrix_csv(w, m.entries()),
            Format::Json => {
                let e = m.entries();
                let rows: Vec<Vec<[f64; 2]>> =
                    (0..n).map(|i| (0..n).map(|j| [e[(i, j)].re, e[(i, j)].im]).collect()).collect();
                export::write_json(w, &serde_json::json!({ "N": n, "entries": rows }))
            }
        }
    })?;
    Ok(Outcome::default())
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let n = single_n(cfg)?;
    let period = quantum_period(&a, n as u64).map_err(domain)?.period;
    let m = build_propagator_with(&a, n, &build_options(cfg)).map_err(domain)?;
    let report = if cfg.unmerged {
        spectral::unmerged_clusters(spectral::eigendecompose(&m).map_err(domain)?)
    } else {
        spectral::clustered_spectrum(&m, period, cfg.tol_cluster)
    }
    .map_err(domain)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &report.to_json()),
        Format::Csv => {
            let mut cluster_of = vec![0usize; report.eigenvalues.len()];
            for (c, cl) in report.clusters.iter().enumerate() {
                for &i in &cl.indices {
                    cluster_of[i] = c;
                }
            }
            writeln!(w, "index,re,im,phase,cluster,cluster_dim,cluster_supnorm,residual")?;
            report.eigenvalues.iter().enumerate().try_for_each(|(i, z)| {
                let cl = &report.clusters[cluster_of[i]];
                writeln!(
                    w,
                    "{i},{},{},{},{},{},{},{}",
                    z.re,
                    z.im,
                    spectral::phase_of(*z),
                    cluster_of[i],
                    cl.dim,
                    cl.supnorm,
                    report.residuals[i]
                )
            })
        }
    })?;
    Ok(Outcome::default())
}

fn scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let rows = experiments::scan_supnorms(&a, cfg.n_min, cfg.n_max, &scan_options(cfg)).map_err(experiment)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &rows),
        Format::Csv => export::write_scan_csv(w, &rows),
    })?;
    emit_svg(cfg, || svg::scan_plot(&experiments::records(&rows)))?;
    Ok(Outcome { exit_code: 0, failed_rows: experiments::failures(&rows).len() })
}

fn profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let n = single_n(cfg)?;
    let profile = experiments::eigenfunction_profile(&a, n, &scan_options(cfg)).map_err(experiment)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &profile),
        Format::Csv => export::write_profile_csv(w, &profile),
    })?;
    emit_svg(cfg, || svg::profile_plot(&profile))?;
    Ok(Outcome::default())
}

fn dispersive(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    if cfg.n.is_empty() {
        return Err(CliError::Usage("--n is required".into()));
    }
    let rows = experiments::dispersive_scan(&a, &cfg.n, cfg.j_max, &scan_options(cfg)).map_err(experiment)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &rows),
        Format::Csv => export::write_dispersive_csv(w, &rows),
    })?;
    emit_svg(cfg, || svg::dispersive_plot(&experiments::records(&rows)))?;
    Ok(Outcome { exit_code: 0, failed_rows: experiments::failures(&rows).len() })
}

fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let a = cat_matrix(cfg)?;
    let (records, failed_rows) = match &cfg.input {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            (export::read_scan_csv(f).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?, 0)
        }
        None => {
            let rows =
                experiments::scan_supnorms(&a, cfg.n_min, cfg.n_max, &scan_options(cfg)).map_err(experiment)?;
            (experiments::records(&rows), experiments::failures(&rows).len())
        }
    };
    let report = experiments::verify_bounds(&records, a.lambda(), cfg.epsilon).map_err(experiment)?;
    emit(cfg, |w| match cfg.format {
        Format::Json => export::write_json(w, &report),
        Format::Csv => {
            writeln!(w, "inequality,N,value,bound,holds")?;
            for (name, checks) in [("lower", &report.lower), ("upper", &report.upper)] {
                for c in checks.iter() {
                    writeln!(w, "{name},{},{},{},{}", c.N, c.value, c.bound, c.holds)?;
                }
            }
            Ok(())
        }
    })?;
    let onset = |o: Option<usize>| o.map_or("none".to_string(), |n| n.to_string());
    if report.lower_testable {
        eprintln!("lower bound: onset N = {}", onset(report.lower_onset));
    } else {
        eprintln!("lower bound: not testable in range (no short-period N)");
    }
    eprintln!(
        "upper bound: onset N = {}, pass fraction {:.4}, {} violation(s)",
        onset(report.upper_onset),
        report.upper_pass_fraction,
        report.upper_violations.len()
    );
    Ok(Outcome { exit_code: 0, failed_rows })
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use hardy_flow::flow::{run, NormSeries, SolverConfig};
use hardy_flow::grid::GridSpec;
use hardy_flow::inviscid::{
    f0_series, iterate_intervals, member_majorization, run_sweep, verify_rate, ExperimentConfig, GapSeries,
    InitialCondition,
};
use hardy_flow::io::{read_field_file, read_table, write_field_file, write_table, write_table_file};
use hardy_flow::logineq::{scan_corpus, standard_corpus, CorpusTrial};
use hardy_flow::norms::NormReport;
use hardy_flow::osgood::{gronwall_bound, integrate_majorant, OsgoodProblem, MAJORIZATION_TOL, TRAJECTORY_CSV_HEADER};
use hardy_flow::splitting::{sweep, threshold_sweep, SplitConfig, SplitRecord, GRID_SLACK};
use hardy_flow::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hardy-flow",
    version,
    about = "Norm estimates, majorants and inviscid-limit experiments on the 2D torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print L1, L2, L∞, L_{2+σ}, BMO, Hardy and L ln L norms of a field.
    Norms {
        field: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Scan the test-function corpus for the BMO–L1 logarithmic inequality.
    VerifyIneq {
        #[arg(long, value_delimiter = ',', default_values_t = [32, 64, 128])]
        sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate the logarithmic majorant with constant coefficients.
    Osgood {
        #[arg(long = "f-const")]
        f_const: f64,
        #[arg(long = "g-const", default_value_t = 0.0)]
        g_const: f64,
        #[arg(long = "g0-const", default_value_t = 0.0)]
        g0_const: f64,
        #[arg(long)]
        nu: f64,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chebyshev and Hölder checks of the truncation split of a field.
    Split {
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        field: PathBuf,
        /// Sweep this many thresholds instead of a single one.
        #[arg(long)]
        sweep: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the flow solver described by a config file.
    Simulate { config: PathBuf },
    /// Paired Euler and Navier–Stokes runs over a viscosity list.
    Sweep { config: PathBuf },
    /// Fit the convergence rate of a gaps table.
    RateFit { gaps: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    grid: usize,
    #[serde(default)]
    nu: f64,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(default = "default_cfl")]
    cfl: f64,
    seed: Option<u64>,
    #[serde(default = "default_stride")]
    stride: usize,
    ic: Option<String>,
    nu_list: Option<Vec<f64>>,
    #[serde(default = "default_sigma")]
    sigma: f64,
    min_samples: Option<usize>,
    out: Option<PathBuf>,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_stride() -> usize {
    1
}

fn default_sigma() -> f64 {
    1.0
}

impl RunConfig {
    fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    fn solver(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(GridSpec::new(self.grid)?, self.nu, self.horizon)?
            .with_cfl(self.cfl)?
            .with_stride(self.stride)?
            .with_sigma(self.sigma)?;
        if let Some(m) = self.min_samples {
            cfg = cfg.with_min_samples(m)?;
        }
        Ok(cfg)
    }

    fn initial_condition(&self) -> Result<InitialCondition> {
        match (&self.ic, self.seed) {
            (Some(id), _) => id.parse(),
            (None, Some(seed)) => Ok(InitialCondition::RandomBandLimited { seed }),
            (None, None) => Ok(InitialCondition::TaylorGreen),
        }
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Whether every asserted inequality held.
type Verdict = bool;

fn write_rows(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    match out {
        Some(path) => write_table_file(path, header, rows),
        None => write_table(std::io::stdout().lock(), header, rows),
    }
}

fn norms(field: &Path, sigma: f64) -> Result<Verdict> {
    let f = read_field_file(field)?;
    let r = NormReport::compute(&f, sigma)?;
    write_rows(None, &NormReport::CSV_HEADER, &[r.csv_row()])?;
    Ok(true)
}

fn verify_ineq(sizes: &[usize], out: Option<&Path>) -> Result<Verdict> {
    let scan = scan_corpus(&standard_corpus(), sizes)?;
    write_rows(out, &CorpusTrial::CSV_HEADER, &scan.csv_rows())?;
    for family in scan.families() {
        let maxima: Vec<String> =
            sizes.iter().map(|&s| scan.family_max_ratio(family, s).map_or("-".into(), |r| format!("{r:.4}"))).collect();
        eprintln!("{family:>18}: max ratio per size [{}]", maxima.join(", "));
    }
    let slope = scan.refinement_slope();
    let finite = sizes.iter().all(|&s| scan.max_ratio(s).is_some_and(f64::is_finite));
    eprintln!("overall refinement slope {slope:?}, empirical constant {:?}", scan.empirical_constant());
    Ok(finite && slope.is_none_or(|s| s <= 0.05))
}

fn osgood(f: f64, g: f64, g0: f64, nu: f64, horizon: f64, out: Option<&Path>) -> Result<Verdict> {
    let p = OsgoodProblem::constant(f, g, g0, nu, horizon)?;
    let tr = integrate_majorant(&p)?;
    let rows = if nu < 1.0 {
        tr.csv_rows(&p)?
    } else {
        // the closed-form bound needs nu < 1
        tr.times.iter().zip(&tr.y).map(|(t, y)| vec![t.to_string(), y.to_string(), String::new()]).collect()
    };
    write_rows(out, &TRAJECTORY_CSV_HEADER, &rows)?;
    match tr.blow_up {
        Some(t) => eprintln!("majorant overflowed at t = {t}"),
        None => {
            eprint!("y(T) = {:.10e}", tr.final_value());
            if nu < 1.0 {
                eprint!(", bound(T) = {:.10e}", gronwall_bound(&p, horizon, 1.0)?);
            }
            eprintln!(", converged: {}", tr.converged);
        }
    }
    Ok(true)
}

fn split(
    threshold: Option<f64>,
    sigma: f64,
    field: &Path,
    count: Option<usize>,
    out: Option<&Path>,
) -> Result<Verdict> {
    let f = read_field_file(field)?;
    let records = match (count, threshold) {
        (Some(n), _) => sweep(&f, sigma, &threshold_sweep(&f, n))?,
        (None, Some(m)) => vec![SplitRecord::evaluate(&f, SplitConfig::new(m, sigma)?)],
        (None, None) => return Err(Error::InvalidArgument("pass --threshold or --sweep".into())),
    };
    let rows: Vec<Vec<String>> = records.iter().map(SplitRecord::csv_row).collect();
    write_rows(out, &SplitRecord::CSV_HEADER, &rows)?;
    Ok(records.iter().all(|r| r.holds(GRID_SLACK)))
}

fn write_series(dir: &Path, series: &NormSeries) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_table_file(&dir.join("series.csv"), &NormSeries::CSV_HEADER, &series.csv_rows())
}

fn simulate(config: &Path) -> Result<Verdict> {
    let rc = RunConfig::load(config)?;
    let cfg = rc.solver()?;
    let u0 = rc.initial_condition()?.velocity(cfg.grid)?;
    let r = run(&u0, cfg)?;
    let out = rc.out_dir();
    write_series(&out, &r.series)?;
    write_field_file(&r.samples[0].vorticity(), &out.join("vorticity_initial.csv"))?;
    write_field_file(&r.final_state().vorticity(), &out.join("vorticity_final.csv"))?;
    let e = &r.series.energy;
    let dissipative = cfg.nu == 0.0 || e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    eprintln!("{} steps of dt = {:.3e}, {} samples, max Courant {:.3}", r.steps, r.dt, r.samples.len(), r.max_courant);
    if let Some(t) = r.blow_up {
        eprintln!("blow-up at t = {t}");
    }
    Ok(r.completed() && dissipative)
}

fn sweep_cmd(config: &Path) -> Result<Verdict> {
    let rc = RunConfig::load(config)?;
    let nus = rc.nu_list.clone().ok_or_else(|| Error::InvalidArgument("sweep config needs nu_list".into()))?;
    let cfg = ExperimentConfig::new(rc.solver()?, nus, rc.sigma, rc.initial_condition()?)?;
    let s = run_sweep(&cfg)?;
    let out = rc.out_dir();
    write_series(&out.join("euler"), &s.euler.series)?;
    for m in &s.members {
        let dir = out.join(format!("nu_{}", m.nu));
        write_series(&dir, &m.run.series)?;
        let rows: Vec<Vec<String>> = m
            .run
            .samples
            .iter()
            .zip(&m.gaps)
            .map(|(st, g)| vec![hardy_flow::io::fmt17(st.time), hardy_flow::io::fmt17(*g)])
            .collect();
        write_table_file(&dir.join("gap.csv"), &["t", "gap"], &rows)?;
    }
    write_table_file(&out.join("gaps.csv"), &GapSeries::CSV_HEADER, &s.series.csv_rows())?;
    let mut ok = s.aborted_at.is_none();
    if let Some(nu) = s.aborted_at {
        eprintln!("run at nu = {nu} blew up; partial results written");
    }
    if s.series.nus.len() >= 3 {
        let r = verify_rate(&s.series, true)?;
        eprintln!(
            "M = {:.4}, theory exponent {:.4e}, fitted rho {:?}, C_fit {:.4e}, violations {:?}",
            s.series.m, r.theory_exponent, r.rho, r.constant, r.violations
        );
        ok &= r.holds();
    }
    let intervals = iterate_intervals(&s, &f0_series(&s.euler)?, cfg.sigma)?;
    eprintln!(
        "interval partition: {} intervals, stalled at {:?}, violations {}",
        intervals.partition.interval_count(),
        intervals.partition.stalled_at,
        intervals.violations.len()
    );
    ok &= intervals.holds(cfg.base.horizon);
    let c0 = scan_corpus(&standard_corpus(), &[32, 64, 128])?
        .empirical_constant()
        .ok_or_else(|| Error::Degenerate("corpus gave no defined ratio".into()))?;
    for m in &s.members {
        let r = member_majorization(&s, m, c0, MAJORIZATION_TOL)?;
        eprintln!("nu = {}: majorized {}, max x/y {:.3e}", m.nu, r.holds, r.max_ratio);
        ok &= r.holds;
    }
    Ok(ok)
}

fn rate_fit(gaps: &Path) -> Result<Verdict> {
    let (header, rows) = read_table(fs::File::open(gaps)?)?;
    let series = GapSeries::from_table(&header, &rows)?;
    let r = verify_rate(&series, true)?;
    println!("rho,C_fit,theory_exponent,violations");
    println!(
        "{},{},{},{}",
        r.rho.map_or(String::new(), |v| v.to_string()),
        r.constant,
        r.theory_exponent,
        r.violations.len()
    );
    Ok(r.holds())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verdict = match cli.command {
        Command::Norms { field, sigma } => norms(&field, sigma),
        Command::VerifyIneq { sizes, out } => verify_ineq(&sizes, out.as_deref()),
        Command::Osgood { f_const, g_const, g0_const, nu, horizon, out } => {
            osgood(f_const, g_const, g0_const, nu, horizon, out.as_deref())
        }
        Command::Split { threshold, sigma, field, sweep, out } => {
            split(threshold, sigma, &field, sweep, out.as_deref())
        }
        Command::Simulate { config } => simulate(&config),
        Command::Sweep { config } => sweep_cmd(&config),
        Command::RateFit { gaps } => rate_fit(&gaps),
    };
    match verdict {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("an asserted inequality did not hold");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

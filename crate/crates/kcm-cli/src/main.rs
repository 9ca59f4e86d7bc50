//! kcm — experiment runner for the constrained-spin library.
//!
//! Five subcommands map onto the library's experiment groups: `front`
//! (half-line front tracing: velocity, variance rate, normality), `nu`
//! (zero-density profile behind the front), `cutoff` (finite-chain
//! mixing window bracketed by hitting times), `exact` (small-chain
//! spectral gaps, mixing times, TV curves), and `tree` (hitting times on
//! k-ary trees plus critical densities). Curves go to CSV, scalar
//! reports to JSON, plots to self-contained SVG, and every run writes a
//! `manifest.json` with the resolved configuration, master seed, and
//! tool version — reruns with the same manifest reproduce every file
//! byte for byte.
//!
//! Exit codes: 0 success; 2 usage error; 3 resource cap exceeded;
//! 4 internal check failed (an asserted inequality violated beyond its
//! confidence slack — a bug signal, never ignored); 1 other failures.

mod svg;

use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kcm::error::{Error, Result};
use kcm::exact::{
    build_generator, gap::DENSE_L_MAX, mc_cutoff_experiment, spectral_gap, t_mix, tv_curve,
    uniform::TMIX_L_MAX, uniform::WORST_CASE_L_MAX, StartSpec,
};
use kcm::front::{
    clt_report_from_samples, estimate_nu, estimate_sigma_star, estimate_velocity, trace_front,
};
use kcm::report::{write_json, CsvWriter, Manifest};
use kcm::trees::{concentration_scan, critical_density, dekking_host_check, simulate_tau, TreeModel};
use kcm::Params;
use serde_json::json;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Largest number of grid points per replica written to the trace CSV;
/// longer traces are strided down (the plot and estimators always use
/// the full grid).
const TRACE_CSV_POINTS: usize = 2000;

#[derive(Parser)]
#[command(
    name = "kcm",
    version,
    about = "Simulators and exact solvers for kinetically constrained spin models",
    arg_required_else_help = true
)]
struct Cli {
    /// Output directory, created if missing (env: KCM_OUT_DIR).
    #[arg(long, global = true, env = "KCM_OUT_DIR", default_value = "kcm-out")]
    out_dir: PathBuf,

    /// Worker threads for replica ensembles; 0 uses all available cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Trace the half-line front: velocity, variance rate, normality.
    Front(FrontArgs),
    /// Zero-density profile behind the front, one curve per density.
    Nu(NuArgs),
    /// Finite-chain mixing window: hitting-time bounds vs the Gaussian profile.
    Cutoff(CutoffArgs),
    /// Exact small-chain analysis: spectral gaps, mixing times, TV curves.
    Exact(ExactArgs),
    /// Tree hitting times: concentration scan, depth comparisons, critical densities.
    Tree(TreeArgs),
}

#[derive(Args)]
struct FrontArgs {
    /// Refresh density p in (0,1); zeros appear with probability q = 1 - p.
    #[arg(long)]
    p: f64,
    /// Simulated time per replica.
    #[arg(long, default_value_t = 1e4)]
    horizon: f64,
    /// Front sampling interval.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 200)]
    replicas: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest lag in the increment-autocovariance sum.
    #[arg(long, default_value_t = 40)]
    max_lag: usize,
}

#[derive(Args)]
struct NuArgs {
    /// Density; repeat the flag (or comma-separate) for a sweep.
    #[arg(long = "p", required = true, num_args = 1.., value_delimiter = ',')]
    p: Vec<f64>,
    /// Offsets 1..=window behind the front are tabulated.
    #[arg(long, default_value_t = 60)]
    window: usize,
    /// Snapshot times (strictly increasing).
    #[arg(long, num_args = 1.., value_delimiter = ',',
          default_values_t = vec![100.0, 200.0, 300.0, 400.0])]
    times: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    replicas: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct CutoffArgs {
    /// Interval length. >= 100 runs the Monte Carlo window experiment;
    /// <= 14 falls back to the exact TV curve; between is rejected.
    #[arg(long)]
    l: usize,
    #[arg(long)]
    p: f64,
    /// Window offsets s; observation times are L/v + s*sqrt(L).
    #[arg(long, num_args = 1.., value_delimiter = ',', allow_negative_numbers = true,
          default_values_t = vec![-2.0, -1.0, 0.0, 1.0, 2.0])]
    s: Vec<f64>,
    #[arg(long, default_value_t = 5000)]
    replicas: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Front speed estimate; measured from a calibration ensemble when absent.
    #[arg(long)]
    v_hat: Option<f64>,
    /// Front dispersion estimate sigma*; measured when absent.
    #[arg(long)]
    sigma_star: Option<f64>,
    /// Horizon of the calibration ensemble.
    #[arg(long, default_value_t = 2000.0)]
    cal_horizon: f64,
    /// Replicas in the calibration ensemble.
    #[arg(long, default_value_t = 64)]
    cal_replicas: u64,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Table covers L = 1..=l_max (hard cap 20; mixing times stop at 14).
    #[arg(long, default_value_t = 12)]
    l_max: usize,
    /// Total-variation threshold for mixing times.
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Bisection bracket width for mixing times.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Also emit the full TV curve for this interval length.
    #[arg(long)]
    tv_l: Option<usize>,
    /// Times for the TV curve.
    #[arg(long, num_args = 1.., value_delimiter = ',',
          default_values_t = vec![0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0])]
    tv_times: Vec<f64>,
}

#[derive(Args)]
struct TreeArgs {
    /// Arity of the tree.
    #[arg(long, default_value_t = 2)]
    k: u32,
    /// Constraint count: a node needs j of its k children at zero
    /// (only j = 1 and j = k are supported).
    #[arg(long, default_value_t = 2)]
    j: u32,
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    /// Depths of the concentration scan.
    #[arg(long, num_args = 1.., value_delimiter = ',',
          default_values_t = vec![0, 1, 2, 3, 4, 5])]
    depths: Vec<u32>,
    #[arg(long, default_value_t = 800)]
    replicas: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Shallower depth of a two-depth domination check (needs --dh-hi).
    #[arg(long)]
    dh_lo: Option<u32>,
    /// Deeper depth of the domination check.
    #[arg(long)]
    dh_hi: Option<u32>,
    /// Replicas per depth in the domination check.
    #[arg(long, default_value_t = 2000)]
    dh_replicas: u64,
    /// Also solve the critical-density grid over small (k, j).
    #[arg(long, default_value_t = false)]
    pc_grid: bool,
}

fn main() {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let out = match run(cli) {
        Ok(()) => return,
        Err(err) => err,
    };
    eprintln!("error: {out}");
    std::process::exit(out.exit_code());
}

#[cfg(feature = "parallel")]
fn init_threads(threads: usize) {
    if threads > 0 {
        // A duplicate initialization (only possible in tests) is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn init_threads(threads: usize) {
    if threads > 1 {
        eprintln!("note: built without the parallel feature; --threads {threads} is ignored");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Front(a) => cmd_front(&cli.out_dir, a),
        Cmd::Nu(a) => cmd_nu(&cli.out_dir, a),
        Cmd::Cutoff(a) => cmd_cutoff(&cli.out_dir, a),
        Cmd::Exact(a) => cmd_exact(&cli.out_dir, a),
        Cmd::Tree(a) => cmd_tree(&cli.out_dir, a),
    }
}

/// Collects the file names a run emits and writes the closing manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn finish(self, tool: &str, seed: u64, config: serde_json::Value) -> Result<()> {
        let mut manifest = Manifest::new(tool, seed, config);
        manifest.outputs = self.files.clone();
        write_json(&self.dir.join("manifest.json"), &manifest)?;
        println!(
            "wrote {}, manifest.json -> {}",
            self.files.join(", "),
            self.dir.display()
        );
        Ok(())
    }
}

fn csv_row(w: &mut CsvWriter, fields: &[&dyn Display]) -> Result<()> {
    w.row(fields)
}

// ---------------------------------------------------------------- front

fn cmd_front(dir: &Path, a: FrontArgs) -> Result<()> {
    let params = Params::new(a.p)?;
    let mut out = Outputs::create(dir)?;

    println!(
        "front: p = {}, horizon = {}, delta = {}, {} replicas, seed {}",
        a.p, a.horizon, a.delta, a.replicas, a.seed
    );
    let traces = trace_front(params, a.horizon, a.delta, a.replicas, a.seed)?;
    let velocity = estimate_velocity(&traces, None, params)?;
    let sigma = estimate_sigma_star(&traces, None, a.max_lag)?;
    let endpoints: Vec<f64> =
        traces.iter().map(|tr| tr.positions[tr.len() - 1] as f64).collect();
    let clt = clt_report_from_samples(&endpoints);

    // Trace CSV, strided down to at most TRACE_CSV_POINTS rows per replica.
    let len = traces[0].len();
    let stride = len.div_ceil(TRACE_CSV_POINTS).max(1);
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if *idx.last().unwrap() != len - 1 {
        idx.push(len - 1);
    }
    let mut w = CsvWriter::create(&out.path("front_trace.csv"), &["replica", "time", "position"])?;
    for tr in &traces {
        for &i in &idx {
            csv_row(&mut w, &[&tr.replica, &tr.time(i), &tr.positions[i]])?;
        }
    }
    w.finish()?;

    // Mean trajectory with a +/- SD band, plus the first replica's path.
    let xs: Vec<f64> = idx.iter().map(|&i| traces[0].time(i)).collect();
    let mut mean_pts = Vec::with_capacity(idx.len());
    let mut lo = Vec::with_capacity(idx.len());
    let mut hi = Vec::with_capacity(idx.len());
    for &i in &idx {
        let vals: Vec<f64> = traces.iter().map(|tr| tr.positions[i] as f64).collect();
        let m = kcm::stats::mean(&vals);
        let sd = kcm::stats::variance(&vals).sqrt();
        mean_pts.push((traces[0].time(i), m));
        lo.push(m - sd);
        hi.push(m + sd);
    }
    let sample: Vec<(f64, f64)> =
        idx.iter().map(|&i| (traces[0].time(i), traces[0].positions[i] as f64)).collect();
    let mut plot = svg::Plot::new(
        &format!("Front trajectory, p = {}", a.p),
        "time",
        "front position",
    );
    plot.band(&xs, &lo, &hi, PALETTE[0]);
    plot.line(&mean_pts, PALETTE[0], "mean");
    plot.line(&sample, "#888888", "replica 0");
    plot.save(&out.path("front_traj.svg"))?;

    write_json(
        &out.path("front_report.json"),
        &json!({ "velocity": velocity, "sigma_star": sigma, "clt": clt }),
    )?;

    println!(
        "v_hat = {:.6} +/- {:.6}, admissible window [{:.6}, {:.6}]{}",
        velocity.v_hat,
        velocity.ci_half,
        velocity.window_lo,
        velocity.window_hi,
        if velocity.in_window { "" } else { "  ** outside window **" }
    );
    println!(
        "sigma*^2: replica {:.5} +/- {:.5}, covariance-sum {:.5} +/- {:.5} ({} lags, {})",
        sigma.replica_based.value,
        sigma.replica_based.ci_half,
        sigma.covariance_sum.value,
        sigma.covariance_sum.ci_half,
        sigma.lags_summed,
        if sigma.agree { "agree" } else { "DISAGREE" }
    );
    println!(
        "CLT: KS = {:.4} (95% null {:.4}), skewness = {:.3} +/- {:.3}",
        clt.ks, clt.ks_null_95, clt.skewness, clt.skew_ci_half
    );

    out.finish(
        "front",
        a.seed,
        json!({
            "p": a.p, "horizon": a.horizon, "delta": a.delta, "replicas": a.replicas,
            "seed": a.seed, "max_lag": a.max_lag, "trace_stride": stride,
        }),
    )
}

// ------------------------------------------------------------------- nu

fn cmd_nu(dir: &Path, a: NuArgs) -> Result<()> {
    let mut out = Outputs::create(dir)?;
    let mut w = CsvWriter::create(&out.path("nu_curves.csv"), &["p", "offset", "freq", "ci_half"])?;
    let mut plot = svg::Plot::new(
        "Zero density behind the front",
        "offset behind front",
        "P(zero at offset)",
    );
    let mut report_rows = Vec::new();

    for (pi, &p) in a.p.iter().enumerate() {
        let params = Params::new(p)?;
        let nu = estimate_nu(params, &a.times, a.window, a.replicas, a.seed)?;
        for f in &nu.pooled.freqs {
            csv_row(&mut w, &[&p, &f.offset, &f.freq, &f.ci_half])?;
        }
        let curve: Vec<(f64, f64)> =
            nu.pooled.freqs.iter().map(|f| (f.offset as f64, f.freq)).collect();
        plot.line(&curve, PALETTE[pi % PALETTE.len()], &format!("p = {p}"));
        println!(
            "p = {p}: q*_hat = {:.4} +/- {:.4}, implied v = {:.4} +/- {:.4} (q = {:.4})",
            nu.q_star_hat, nu.q_star_ci_half, nu.v_check, nu.v_check_ci_half, params.q
        );
        report_rows.push(json!({
            "p": p,
            "q_star_hat": nu.q_star_hat,
            "q_star_ci_half": nu.q_star_ci_half,
            "v_check": nu.v_check,
            "v_check_ci_half": nu.v_check_ci_half,
            "n_snapshots": nu.pooled.n_snapshots,
        }));
    }
    w.finish()?;
    plot.save(&out.path("nu_profile.svg"))?;
    write_json(&out.path("nu_report.json"), &json!({ "curves": report_rows }))?;

    out.finish(
        "nu",
        a.seed,
        json!({
            "p": a.p, "window": a.window, "times": a.times,
            "replicas": a.replicas, "seed": a.seed,
        }),
    )
}

// --------------------------------------------------------------- cutoff

fn cmd_cutoff(dir: &Path, a: CutoffArgs) -> Result<()> {
    let params = Params::new(a.p)?;
    if a.l >= 100 {
        return cutoff_monte_carlo(dir, a, params);
    }
    if a.l <= TMIX_L_MAX {
        eprintln!(
            "note: L = {} is small enough for exact analysis; computing the exact TV curve \
             instead of the Monte Carlo window experiment",
            a.l
        );
        return cutoff_exact(dir, a, params);
    }
    Err(Error::usage(format!(
        "L = {} is too small for the Monte Carlo window experiment (needs >= 100) and too \
         large for exact analysis (needs <= {TMIX_L_MAX})",
        a.l
    )))
}

fn cutoff_monte_carlo(dir: &Path, a: CutoffArgs, params: Params) -> Result<()> {
    let mut out = Outputs::create(dir)?;

    let (v_hat, sigma_star) = match (a.v_hat, a.sigma_star) {
        (Some(v), Some(s)) => (v, s),
        _ => {
            println!(
                "calibrating v and sigma* from {} replicas over horizon {}",
                a.cal_replicas, a.cal_horizon
            );
            let traces = trace_front(
                params,
                a.cal_horizon,
                1.0,
                a.cal_replicas,
                a.seed.wrapping_add(0xCA11_B007),
            )?;
            let vel = estimate_velocity(&traces, None, params)?;
            let sig = estimate_sigma_star(&traces, None, 40)?;
            let v = a.v_hat.unwrap_or(vel.v_hat);
            let s = a.sigma_star.unwrap_or_else(|| sig.sigma_star());
            println!("calibrated v_hat = {v:.6}, sigma* = {s:.6}");
            (v, s)
        }
    };

    println!(
        "cutoff: L = {}, p = {}, {} replicas, times L/v + s*sqrt(L) at s = {:?}",
        a.l, a.p, a.replicas, a.s
    );
    let cmp = mc_cutoff_experiment(
        params,
        a.l as i64,
        &a.s,
        v_hat,
        sigma_star,
        a.replicas,
        a.seed,
    )?;

    let mut w = CsvWriter::create(
        &out.path("cutoff_profile.csv"),
        &["s", "t", "d_upper", "d_upper_lo", "d_upper_hi", "d_lower", "d_lower_lo",
          "d_lower_hi", "profile"],
    )?;
    for pt in &cmp.points {
        csv_row(
            &mut w,
            &[&pt.s, &pt.t, &pt.d_upper, &pt.d_upper_ci.0, &pt.d_upper_ci.1, &pt.d_lower,
              &pt.d_lower_ci.0, &pt.d_lower_ci.1, &pt.profile],
        )?;
    }
    w.finish()?;

    let upper: Vec<(f64, f64)> = cmp.points.iter().map(|pt| (pt.s, pt.d_upper)).collect();
    let lower: Vec<(f64, f64)> = cmp.points.iter().map(|pt| (pt.s, pt.d_lower)).collect();
    let profile: Vec<(f64, f64)> = cmp.points.iter().map(|pt| (pt.s, pt.profile)).collect();
    let ss: Vec<f64> = cmp.points.iter().map(|pt| pt.s).collect();
    let mut plot = svg::Plot::new(
        &format!("Mixing window, L = {}, p = {}", a.l, a.p),
        "s  (t = L/v + s*sqrt(L))",
        "distance bound",
    );
    plot.band(
        &ss,
        &cmp.points.iter().map(|pt| pt.d_upper_ci.0).collect::<Vec<_>>(),
        &cmp.points.iter().map(|pt| pt.d_upper_ci.1).collect::<Vec<_>>(),
        PALETTE[0],
    );
    plot.band(
        &ss,
        &cmp.points.iter().map(|pt| pt.d_lower_ci.0).collect::<Vec<_>>(),
        &cmp.points.iter().map(|pt| pt.d_lower_ci.1).collect::<Vec<_>>(),
        PALETTE[1],
    );
    plot.line(&upper, PALETTE[0], "upper bound P(tau > t)");
    plot.line(&lower, PALETTE[1], "lower bound");
    plot.line(&profile, PALETTE[2], "Gaussian profile");
    plot.scatter(&upper, PALETTE[0], "");
    plot.scatter(&lower, PALETTE[1], "");
    plot.save(&out.path("cutoff_overlay.svg"))?;

    write_json(&out.path("cutoff_report.json"), &cmp)?;

    println!(
        "worst |upper - profile| = {:.4}, order violation = {:.4}",
        cmp.worst_profile_gap(),
        cmp.order_violation()
    );
    // The lower bound sitting above the upper bound beyond both CIs is an
    // ordering failure of bracketed quantities — a bug, not noise.
    for pt in &cmp.points {
        if pt.d_lower_ci.0 > pt.d_upper_ci.1 {
            return Err(Error::check_failed(format!(
                "distance bounds inverted at s = {}: lower CI [{:.4}, {:.4}] above upper CI \
                 [{:.4}, {:.4}]",
                pt.s, pt.d_lower_ci.0, pt.d_lower_ci.1, pt.d_upper_ci.0, pt.d_upper_ci.1
            )));
        }
    }

    out.finish(
        "cutoff",
        a.seed,
        json!({
            "l": a.l, "p": a.p, "s": a.s, "replicas": a.replicas, "seed": a.seed,
            "v_hat": v_hat, "sigma_star": sigma_star,
            "calibrated": a.v_hat.is_none() || a.sigma_star.is_none(),
        }),
    )
}

fn cutoff_exact(dir: &Path, a: CutoffArgs, params: Params) -> Result<()> {
    let mut out = Outputs::create(dir)?;
    let g = build_generator(params, a.l)?;
    let report = t_mix(&g, 0.25, 1e-6)?;
    let t_end = if report.t_mix > 0.0 { 2.0 * report.t_mix } else { 1.0 };
    let times: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0 * t_end).collect();
    let start =
        if a.l <= WORST_CASE_L_MAX { StartSpec::WorstCase } else { StartSpec::AllOnes };
    let curve = tv_curve(&g, &start, &times)?;

    let mut w = CsvWriter::create(&out.path("cutoff_exact.csv"), &["t", "d"])?;
    for (t, d) in curve.times.iter().zip(&curve.d) {
        csv_row(&mut w, &[t, d])?;
    }
    w.finish()?;

    let pts: Vec<(f64, f64)> =
        curve.times.iter().zip(&curve.d).map(|(&t, &d)| (t, d)).collect();
    let mut plot = svg::Plot::new(
        &format!("Exact TV distance, L = {}, p = {}", a.l, a.p),
        "time",
        "d(t)",
    );
    plot.line(&pts, PALETTE[0], "worst-start d(t)");
    plot.line(&[(0.0, report.eps), (t_end, report.eps)], PALETTE[1], "threshold");
    plot.save(&out.path("cutoff_exact.svg"))?;

    write_json(
        &out.path("cutoff_report.json"),
        &json!({ "l": a.l, "p": a.p, "t_mix": report, "curve": curve }),
    )?;
    println!(
        "exact route: t_mix({}) = {:.6} ({}), spectral bound {:.6}",
        report.eps,
        report.t_mix,
        if report.certified_max { "certified worst start" } else { "all-ones lower bound" },
        report.gap_bound
    );

    out.finish(
        "cutoff",
        a.seed,
        json!({ "l": a.l, "p": a.p, "mode": "exact", "eps": report.eps }),
    )
}

// ---------------------------------------------------------------- exact

fn cmd_exact(dir: &Path, a: ExactArgs) -> Result<()> {
    let params = Params::new(a.p)?;
    if a.l_max == 0 {
        return Err(Error::usage("l_max must be >= 1"));
    }
    if a.l_max > kcm::exact::L_MAX {
        return Err(Error::resource(format!(
            "l_max = {} exceeds the exact-analysis cap of {} (2^L states)",
            a.l_max,
            kcm::exact::L_MAX
        )));
    }
    let mut out = Outputs::create(dir)?;

    let mut w = CsvWriter::create(
        &out.path("gap_table.csv"),
        &["l", "gap", "t_mix", "gap_bound", "certified"],
    )?;
    let mut gap_pts = Vec::new();
    let mut tmix_pts = Vec::new();
    let mut rows = Vec::new();
    for l in 1..=a.l_max {
        let g = build_generator(params, l)?;
        // Past the mixing-time cap only the gap is tabulated; a residual
        // of 5e-8 is far below table precision and converges where the
        // default budget can stall on the weakly separated top pair.
        let gap = if l <= TMIX_L_MAX {
            spectral_gap(&g)?
        } else {
            kcm::exact::spectral_gap_lanczos(&g, 5e-8, 1000)?
        };
        gap_pts.push((l as f64, gap));
        if l <= TMIX_L_MAX {
            let tm = t_mix(&g, a.eps, a.tol)?;
            csv_row(&mut w, &[&l, &gap, &tm.t_mix, &tm.gap_bound, &tm.certified_max])?;
            tmix_pts.push((l as f64, tm.t_mix));
            if l == 1 {
                check_single_site(params, a.eps, gap, &tm)?;
            }
            rows.push(json!({
                "l": l, "gap": gap, "t_mix": tm.t_mix, "gap_bound": tm.gap_bound,
                "certified": tm.certified_max,
            }));
        } else {
            let blank = "";
            csv_row(&mut w, &[&l, &gap, &blank, &blank, &blank])?;
            rows.push(json!({ "l": l, "gap": gap }));
        }
    }
    w.finish()?;

    let mut plot = svg::Plot::new(
        &format!("Spectral gap and mixing time, p = {}", a.p),
        "L",
        "value",
    );
    plot.line(&gap_pts, PALETTE[0], "spectral gap");
    plot.line(&tmix_pts, PALETTE[1], &format!("t_mix(eps = {})", a.eps));
    plot.save(&out.path("gap_table.svg"))?;

    let mut files_cfg = json!({
        "p": a.p, "l_max": a.l_max, "eps": a.eps, "tol": a.tol,
        "dense_l_max": DENSE_L_MAX,
    });

    if let Some(tv_l) = a.tv_l {
        let g = build_generator(params, tv_l)?;
        let start =
            if tv_l <= WORST_CASE_L_MAX { StartSpec::WorstCase } else { StartSpec::AllOnes };
        let curve = tv_curve(&g, &start, &a.tv_times)?;
        let mut w = CsvWriter::create(&out.path("tv_curve.csv"), &["t", "d"])?;
        for (t, d) in curve.times.iter().zip(&curve.d) {
            csv_row(&mut w, &[t, d])?;
        }
        w.finish()?;
        files_cfg["tv_l"] = json!(tv_l);
        files_cfg["tv_times"] = json!(a.tv_times);
    }

    write_json(&out.path("exact_report.json"), &json!({ "rows": rows }))?;
    out.finish("exact", 0, files_cfg)
}

/// The one-site chain has gap exactly 1 and a closed-form distance curve
/// d(t) = max(p, q)·e^{-t}, so T_mix = ln(max(p,q)/eps) when positive.
fn check_single_site(params: Params, eps: f64, gap: f64, tm: &kcm::exact::TmixReport) -> Result<()> {
    let closed = (params.p.max(params.q) / eps).ln().max(0.0);
    println!(
        "L = 1 closed forms: gap = {gap:.12} (expect 1), t_mix = {:.9} (expect {closed:.9})",
        tm.t_mix
    );
    if (gap - 1.0).abs() > 1e-9 {
        return Err(Error::check_failed(format!("single-site gap {gap} != 1")));
    }
    let tol = tm.tol.max(1e-9);
    if (tm.t_mix - closed).abs() > tol + 1e-9 {
        return Err(Error::check_failed(format!(
            "single-site t_mix {} differs from closed form {closed} by more than {tol}",
            tm.t_mix
        )));
    }
    Ok(())
}

// ----------------------------------------------------------------- tree

fn cmd_tree(dir: &Path, a: TreeArgs) -> Result<()> {
    let params = Params::new(a.p)?;
    // Surface an unsupported (k, j) before any simulation.
    TreeModel::new(a.k, a.j, 0, params)?;
    let mut out = Outputs::create(dir)?;

    println!(
        "tree scan: k = {}, j = {}, p = {}, depths {:?}, {} replicas",
        a.k, a.j, a.p, a.depths, a.replicas
    );
    let table = concentration_scan(a.k, a.j, params, &a.depths, a.replicas, a.seed)?;
    let mut w = CsvWriter::create(
        &out.path("tree_scan.csv"),
        &["depth", "nodes", "t_hit_mean", "t_hit_ci_half", "abs_dev_mean", "abs_dev_ci_half",
          "window_min_abs_dev"],
    )?;
    let mut thit_pts = Vec::new();
    let mut mad_pts = Vec::new();
    let (mut lo_band, mut hi_band, mut xs) = (Vec::new(), Vec::new(), Vec::new());
    for (row, wm) in table.rows.iter().zip(&table.window_minima) {
        let nodes = TreeModel::new(a.k, a.j, row.depth, params)?.node_count();
        csv_row(
            &mut w,
            &[&row.depth, &nodes, &row.t_hit.mean, &row.t_hit.ci_half, &row.abs_dev.mean,
              &row.abs_dev.ci_half, &wm.min_abs_dev],
        )?;
        xs.push(row.depth as f64);
        thit_pts.push((row.depth as f64, row.t_hit.mean));
        mad_pts.push((row.depth as f64, row.abs_dev.mean));
        lo_band.push(row.t_hit.mean - row.t_hit.ci_half);
        hi_band.push(row.t_hit.mean + row.t_hit.ci_half);
    }
    w.finish()?;

    let mut plot = svg::Plot::new(
        &format!("Tree hitting times, k = {}, j = {}, p = {}", a.k, a.j, a.p),
        "depth",
        "time",
    );
    plot.band(&xs, &lo_band, &hi_band, PALETTE[0]);
    plot.line(&thit_pts, PALETTE[0], "mean hitting time");
    plot.line(&mad_pts, PALETTE[1], "mean |deviation|");
    plot.save(&out.path("tree_scan.svg"))?;

    if let Ok(fit) = table.loglog_slope() {
        println!("log-log slope of T_hit over depth: {:.3}", fit.slope);
    }

    let mut config = json!({
        "k": a.k, "j": a.j, "p": a.p, "depths": a.depths,
        "replicas": a.replicas, "seed": a.seed,
    });

    match (a.dh_lo, a.dh_hi) {
        (Some(lo), Some(hi)) => {
            println!("domination check: depth {lo} vs {hi}, {} replicas", a.dh_replicas);
            let lo_model = TreeModel::new(a.k, a.j, lo, params)?;
            let hi_model = TreeModel::new(a.k, a.j, hi, params)?;
            let lo_sample =
                simulate_tau(lo_model, a.dh_replicas, a.seed.wrapping_add(0x10_0000))?;
            let hi_sample =
                simulate_tau(hi_model, a.dh_replicas, a.seed.wrapping_add(0x20_0000))?;
            let report = dekking_host_check(&lo_sample, &hi_sample)?;
            write_json(&out.path("dekking_host.json"), &report)?;
            println!(
                "max-of-k vs next depth: {} (margin {:.3}); deviation vs gap: {} (margin {:.3}); \
                 dominance: {} (worst gap {:.4} vs band {:.4})",
                pass(report.max_vs_next),
                report.max_margin,
                pass(report.mad_vs_gap),
                report.mad_margin,
                pass(report.dominance.pass),
                report.dominance.worst_gap,
                report.dominance.band
            );
            config["dh"] = json!({ "lo": lo, "hi": hi, "replicas": a.dh_replicas });
            if !report.all_pass() {
                return Err(Error::check_failed(
                    "a depth-domination inequality failed beyond its confidence slack",
                ));
            }
        }
        (None, None) => {}
        _ => return Err(Error::usage("--dh-lo and --dh-hi must be given together")),
    }

    if a.pc_grid {
        let mut rows = Vec::new();
        for (k, j) in [(2, 2), (3, 3), (4, 4), (5, 5), (2, 1), (3, 1)] {
            let pc = critical_density(k, j, 1e-9)?;
            let reference = if j == k { 1.0 / k as f64 } else { 1.0 };
            println!("p_c(k = {k}, j = {j}) = {pc:.9} (reference {reference:.9})");
            if (pc - reference).abs() > 1e-6 {
                return Err(Error::check_failed(format!(
                    "critical density for k = {k}, j = {j} is {pc}, expected {reference}"
                )));
            }
            rows.push(json!({ "k": k, "j": j, "p_c": pc, "reference": reference }));
        }
        write_json(&out.path("pc_grid.json"), &json!({ "rows": rows }))?;
        config["pc_grid"] = json!(true);
    }

    out.finish("tree", a.seed, config)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wasscont::discrete_ic::{discrete_corner, eta_kl_two_input, eta_tv_two_input, fc_envelope};
use wasscont::gic::{corner_report, monotonicity_violations, region_curves, Constraint, GicParams};
use wasscont::infomeasures::{diff_entropy_1d, kl_discrete, mutual_info_discrete, shannon_entropy};
use wasscont::io::{fmt_sig12, load_channel, load_mixture, load_pmf, load_two_input, region_csv};
use wasscont::quadrature::QuadratureSpec;
use wasscont::regularity::{
    best_bound, delta_ppr, gaussian_smoothing_regularity, shift_regularity, symmetric_kl_bound,
    w2lip_delta,
};
use wasscont::transport::{dbar, tv, wp_default_spec, wp_quantile_1d_with};
use wasscont::verify::{run_family, Family, TrialConfig};
use wasscont::{Error, LogBase, Pmf};

#[derive(Parser, Debug)]
#[command(
    name = "wasscont",
    version,
    about = "Wasserstein continuity of entropy: bounds, regions and verification"
)]
struct Cli {
    /// Unit of information quantities in the output.
    #[arg(long, global = true, value_enum, default_value_t = Base::Bits)]
    base: Base,

    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress notes on standard error.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Base {
    Nats,
    Bits,
}

impl From<Base> for LogBase {
    fn from(b: Base) -> Self {
        match b {
            Base::Nats => LogBase::Nats,
            Base::Bits => LogBase::Bits,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PowerConstraint {
    /// Almost-sure power constraint.
    #[value(name = "as")]
    AlmostSure,
    /// Average power constraint.
    #[value(name = "avg")]
    Average,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate-region curves as CSV.
    #[command(subcommand)]
    Region(RegionCommand),
    /// Corner points of the Gaussian interference channel as JSON.
    Corners(GainArgs),
    /// Concave envelope F_c of a degraded chain X → A → B as CSV.
    Fc {
        #[arg(long)]
        channel_a: PathBuf,
        #[arg(long)]
        channel_b: PathBuf,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
    /// Corner point of the additive mod-3 interference channel.
    DiscreteCorner {
        #[arg(long)]
        p2: PathBuf,
    },
    /// Run a randomized verification family and write its report.
    Verify {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// W_p distance between two 1-D mixtures (p = 1 or 2).
    W2 {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: u32,
    },
    /// Ornstein distance between two pmfs on X^n.
    Dbar {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Total variation between two pmfs.
    Tv {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Shannon entropy of a pmf.
    Entropy {
        #[arg(long)]
        p: PathBuf,
    },
    /// Relative entropy D(P‖Q).
    Kl {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
    /// Mutual information of an input pmf and a channel.
    Mi {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        channel: PathBuf,
    },
    /// Differential entropy of a smooth 1-D mixture.
    Dentropy {
        #[arg(long)]
        mixture: PathBuf,
    },
    /// Contraction coefficients of a two-input channel.
    Eta {
        #[arg(long)]
        two_input: PathBuf,
        /// Reference law on A; uniform when omitted.
        #[arg(long)]
        p0: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Evaluate bound formulas.
    #[command(subcommand)]
    Bounds(BoundsCommand),
}

#[derive(Subcommand, Debug)]
enum RegionCommand {
    /// Outer bound and Han-Kobayashi inner curve.
    Gic {
        #[command(flatten)]
        gains: GainArgs,
        #[arg(long, value_enum, default_value_t = PowerConstraint::AlmostSure)]
        constraint: PowerConstraint,
        #[arg(long, default_value_t = 200)]
        grid: usize,
    },
}

#[derive(Args, Debug)]
struct GainArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    p2: f64,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Regularity constants and Δ bounds for a 1-D instance.
    Regularity(RegularityArgs),
}

#[derive(Args, Debug)]
struct RegularityArgs {
    /// Gaussian smoothing variance σ².
    #[arg(long, default_value_t = 1.0)]
    sigma_sq: f64,
    /// E‖B‖ of the smoothed variable.
    #[arg(long, default_value_t = 0.0)]
    norm1_b: f64,
    /// Almost-sure bound on ‖B‖.
    #[arg(long, default_value_t = 0.0)]
    sup_norm_b: f64,
    #[arg(long, default_value_t = 0.0)]
    m2_u: f64,
    #[arg(long, default_value_t = 0.0)]
    m2_v: f64,
    #[arg(long, default_value_t = 0.0)]
    w2: f64,
    #[arg(long, default_value_t = 0.0)]
    w1: f64,
    /// Power P of the inputs, per coordinate.
    #[arg(long, default_value_t = 0.0)]
    power: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Print JSON instead of key/value lines.
    #[arg(long)]
    json: bool,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotCertified { .. } | Error::Solver(_) => 2,
            Error::Invalid { .. }
            | Error::DimensionMismatch(_)
            | Error::Json(_)
            | Error::Csv(_) => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

struct Ctx {
    base: LogBase,
    out: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn info(&self, nats: f64) -> f64 {
        self.base.from_nats(nats)
    }

    fn emit(&self, text: &str) -> Result<(), Failure> {
        match &self.out {
            Some(path) => fs::write(path, text)
                .map_err(|e| fail(1, format!("cannot write {}: {e}", path.display()))),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| fail(1, format!("cannot write output: {e}")))
            }
        }
    }

    fn emit_json(&self, v: &Value) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.emit(&s)
    }

    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("note: {msg}");
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx {
        base: cli.base.into(),
        out: cli.out,
        quiet: cli.quiet,
    };
    let base_name = ctx.base.name();
    match cli.command {
        Command::Region(RegionCommand::Gic {
            gains,
            constraint,
            grid,
        }) => {
            let constraint = match constraint {
                PowerConstraint::AlmostSure => Constraint::AlmostSure,
                PowerConstraint::Average => Constraint::Average,
            };
            let params = GicParams::new(gains.a, gains.b, gains.p1, gains.p2, constraint)?;
            let curves = region_curves(&params, grid)?;
            let bad = monotonicity_violations(&curves[0], 1e-12);
            if !bad.is_empty() {
                ctx.note(&format!(
                    "outer curve is not monotone at {} grid points",
                    bad.len()
                ));
            }
            ctx.emit(&region_csv(&curves, ctx.base)?)
        }
        Command::Corners(g) => {
            let params = GicParams::new(g.a, g.b, g.p1, g.p2, Constraint::AlmostSure)?;
            let r = corner_report(&params)?;
            ctx.emit_json(&json!({
                "c1": ctx.info(r.c1),
                "c2": ctx.info(r.c2),
                "c2_tilde": ctx.info(r.c2_tilde),
                "c1_prime": ctx.info(r.c1_prime),
                "c2_prime": ctx.info(r.c2_prime),
                "case_label": r.case_label,
                "base": base_name,
            }))
        }
        Command::Fc {
            channel_a,
            channel_b,
            grid,
        } => {
            let a = load_channel(&channel_a)?;
            let b = load_channel(&channel_b)?;
            let curve = fc_envelope(&a, &b, grid)?;
            let app = curve.applicability;
            if !(app.strict1 && app.strict2) {
                ctx.note(&format!(
                    "strictness conditions: strict1={} (overlap {:e}), strict2={} (row TV {:e})",
                    app.strict1, app.min_overlap, app.strict2, app.min_row_tv
                ));
            }
            let err = fmt_sig12(ctx.info(curve.grid_err()));
            let mut s = String::from("t,Fc,grid_err\n");
            for &(t, f) in &curve.knots {
                s.push_str(&format!(
                    "{},{},{}\n",
                    fmt_sig12(ctx.info(t)),
                    fmt_sig12(ctx.info(f)),
                    err
                ));
            }
            ctx.emit(&s)
        }
        Command::DiscreteCorner { p2 } => {
            let p2 = load_pmf(&p2)?;
            let v = match discrete_corner(&p2) {
                Ok(r) => json!({
                    "c2": ctx.info(r.c2),
                    "c1_prime": ctx.info(r.c1_prime),
                    "q_star": r.q_star,
                    "p3": r.p3.probs(),
                    "fallback": r.fallback,
                    "special_case": Value::Null,
                    "base": base_name,
                }),
                Err(Error::UniformNoise { c2, c1_prime }) => json!({
                    "c2": ctx.info(c2),
                    "c1_prime": ctx.info(c1_prime),
                    "q_star": Value::Null,
                    "p3": Value::Null,
                    "fallback": false,
                    "special_case": "uniform_noise",
                    "base": base_name,
                }),
                Err(e) => return Err(e.into()),
            };
            ctx.emit_json(&v)
        }
        Command::Verify { family, trials } => {
            let config = TrialConfig::new(family, trials, cli.seed)?;
            let report = run_family(&config)?;
            ctx.emit(&report.to_json()?)?;
            if !report.failures.is_empty() {
                return Err(fail(
                    2,
                    format!(
                        "{} check(s) failed; min slack {:e}",
                        report.failures.len(),
                        report.min_slack
                    ),
                ));
            }
            if !report.certified {
                return Err(fail(
                    2,
                    format!("report not certified (error sum {:e})", report.error_sum),
                ));
            }
            Ok(())
        }
        Command::W2 { p, q, order } => {
            let p = load_mixture(&p)?;
            let q = load_mixture(&q)?;
            let r = wp_quantile_1d_with(&p, &q, order, &wp_default_spec())?;
            ctx.emit_json(&json!({
                "order": order,
                "value": r.value,
                "error_estimate": r.error_estimate,
                "converged": r.converged,
            }))?;
            if !r.converged {
                return Err(fail(2, format!("W_{order} quadrature did not converge")));
            }
            Ok(())
        }
        Command::Dbar { p, q } => {
            let (p, q) = (load_pmf(&p)?, load_pmf(&q)?);
            ctx.emit_json(&json!({ "dbar": dbar(&p, &q)? }))
        }
        Command::Tv { p, q } => {
            let (p, q) = (load_pmf(&p)?, load_pmf(&q)?);
            ctx.emit_json(&json!({ "tv": tv(&p, &q)? }))
        }
        Command::Entropy { p } => {
            let p = load_pmf(&p)?;
            ctx.emit_json(&json!({ "entropy": ctx.info(shannon_entropy(&p)), "base": base_name }))
        }
        Command::Kl { p, q } => {
            let (p, q) = (load_pmf(&p)?, load_pmf(&q)?);
            let d = kl_discrete(&p, &q)?;
            // JSON has no infinity.
            let v = if d.is_finite() {
                json!(ctx.info(d))
            } else {
                json!("inf")
            };
            ctx.emit_json(&json!({ "kl": v, "base": base_name }))
        }
        Command::Mi { input, channel } => {
            let input: Pmf = load_pmf(&input)?;
            let ch = load_channel(&channel)?;
            ctx.emit_json(
                &json!({ "mi": ctx.info(mutual_info_discrete(&input, &ch)?), "base": base_name }),
            )
        }
        Command::Dentropy { mixture } => {
            let m = load_mixture(&mixture)?;
            let r = diff_entropy_1d(&m, &QuadratureSpec::default())?;
            ctx.emit_json(&json!({
                "dentropy": ctx.info(r.value),
                "error_estimate": ctx.info(r.error_estimate),
                "converged": r.converged,
                "base": base_name,
            }))?;
            if !r.converged {
                return Err(fail(2, "entropy quadrature did not converge"));
            }
            Ok(())
        }
        Command::Eta {
            two_input,
            p0,
            grid,
        } => {
            let w = load_two_input(&two_input)?;
            let p0 = match p0 {
                Some(path) => load_pmf(&path)?,
                None => Pmf::uniform(w.a_size(), 1)?,
            };
            let kl = eta_kl_two_input(&w, &p0, grid)?;
            ctx.emit_json(&json!({
                "eta_tv": eta_tv_two_input(&w),
                "eta_kl_grid": kl.value,
                "eta_kl_qualifier": kl.qualifier,
                "eta_kl_x": kl.x,
                "eta_kl_q0": kl.q0,
            }))
        }
        Command::Bounds(BoundsCommand::Regularity(r)) => {
            let smooth = gaussian_smoothing_regularity(r.sigma_sq, r.norm1_b)?;
            let shifted = shift_regularity(&smooth, r.sup_norm_b)?;
            let rows: Vec<(&str, f64)> = vec![
                ("smoothing_c1", smooth.c1),
                ("smoothing_c2", smooth.c2),
                ("shifted_c1", shifted.c1),
                ("shifted_c2", shifted.c2),
                ("delta_ppr", delta_ppr(&smooth, r.m2_u, r.m2_v, r.w2)?),
                (
                    "symmetric_kl_bound",
                    symmetric_kl_bound(&smooth, r.m2_u, r.m2_v, r.w2)?,
                ),
                ("w2lip_delta", w2lip_delta(r.sigma_sq, r.power, r.n, r.w2)?),
                (
                    "best_bound",
                    best_bound(r.sigma_sq, r.sup_norm_b, r.m2_u, r.m2_v, r.w1)?,
                ),
            ];
            if r.json {
                let mut map = serde_json::Map::new();
                for (k, v) in rows {
                    map.insert(k.to_string(), json!(ctx.info(v)));
                }
                map.insert("base".into(), json!(base_name));
                ctx.emit_json(&Value::Object(map))
            } else {
                let mut s = String::new();
                for (k, v) in rows {
                    s.push_str(&format!("{k} {} {base_name}\n", fmt_sig12(ctx.info(v))));
                }
                ctx.emit(&s)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            eprintln!("E1: {}", first.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("E{}: {}", f.code, f.message);
            ExitCode::from(f.code)
        }
    }
}

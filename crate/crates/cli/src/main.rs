mod output;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use symstri_core::farey::{
    cells_at_level, farey_arcs, farey_sequence, indicator_bound, indicator_coefficients,
};
use symstri_core::kernel::{kernel_bound_scan, kernel_parseval, BumpSpec};
use symstri_core::quad_count::{
    joint_pair_count, joint_pair_histogram, rep_counts_upto, rep_exponent_fit,
    theta_major_arc_check, Cube, QuadForm,
};
use symstri_core::quadrature::sample_point;
use symstri_core::rational::{format_rational, parse_rational, to_f64, Rational};
use symstri_core::space::{
    resolve_space, DominantWeight, Factor, SpaceDescriptor, CATALOG_EXAMPLES,
};
use symstri_core::spherical::{
    legendre, phi_laplace_integral, phi_zonal, support_check, ZonalPoint,
};
use symstri_core::strichartz::{
    bilinear_scan, eigenfunction_lp_scan, stream_rng, strichartz_scan, BilinearConfig, EigenConfig,
    Ensemble, ScanTable, StriConfig,
};
use symstri_core::{Error, Result};

use output::{emit, metadata_line, Table};

/// Numerical experiments for Schrödinger evolution on compact symmetric spaces.
#[derive(Parser, Serialize)]
#[command(name = "symstri", version)]
struct Cli {
    /// Worker threads for parallel scans.
    #[arg(long, global = true, env = "SYMSTRI_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Catalog of spaces.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Spherical functions.
    #[command(subcommand)]
    Spherical(SphericalCmd),
    /// Fourier support of products of spherical functions.
    #[command(subcommand)]
    Support(SupportCmd),
    /// Schrödinger kernel scans.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Farey dissection of the time circle.
    #[command(subcommand)]
    Farey(FareyCmd),
    /// Lattice point counts for quadratic forms.
    #[command(subcommand)]
    Count(CountCmd),
    /// Strichartz norm scans.
    #[command(subcommand)]
    Stri(StriCmd),
    /// Eigenfunction norm scans.
    #[command(subcommand)]
    Eigen(EigenCmd),
}

#[derive(Args, Serialize)]
struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SummaryArgs {
    /// Summary document path; standard error when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum SpaceCmd {
    List(OutArgs),
    Info {
        #[arg(long)]
        space: String,
        /// `csv` or `toml` (the descriptor document).
        #[arg(long, default_value = "csv")]
        format: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum SphericalCmd {
    /// φ_λ along the diagonal `(θ, …, θ)` of the torus of angles.
    Eval {
        #[arg(long)]
        space: String,
        #[arg(long)]
        lambda: String,
        /// Explicit angles, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<String>,
        /// Number of equispaced angles in `[0, π]` when `--theta` is absent.
        #[arg(long, default_value_t = 9)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Laplace integral against the Legendre recurrence.
    Check {
        #[arg(long, default_value_t = 40)]
        n_max: usize,
        #[arg(long, default_value_t = 256)]
        thetas: usize,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum SupportCmd {
    Check {
        #[arg(long)]
        space: String,
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        mu: String,
        #[arg(long, default_value_t = 8)]
        nu_max: i64,
        /// Seed for the two random centers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum KernelCmd {
    Scan {
        #[arg(long)]
        space: String,
        #[arg(long = "N")]
        n: i64,
        /// Uniform time grid size; default is the floor rounded up to a power of two.
        #[arg(long)]
        t_samples: Option<usize>,
        #[arg(long)]
        x_samples: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        summary: SummaryArgs,
    },
    /// Space-time L² of the kernel against the weight sum.
    Parseval {
        #[arg(long)]
        space: String,
        #[arg(long = "N")]
        n: String,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum FareyCmd {
    Dissect {
        #[arg(long)]
        order: i64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fourier coefficients of the indicator of the level-(Q, L) cells.
    Spectrum {
        #[arg(long = "N")]
        n: i64,
        #[arg(long = "Q")]
        q: i64,
        #[arg(long = "L")]
        l: i64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum CountCmd {
    Reps {
        /// Form file, `I<r>` for the identity, or a rational torus.
        #[arg(long)]
        form: String,
        #[arg(long)]
        max_n: i64,
        #[command(flatten)]
        out: OutArgs,
    },
    Fit {
        #[arg(long)]
        form: String,
        #[arg(long)]
        max_n: i64,
        #[command(flatten)]
        out: OutArgs,
    },
    Theta {
        #[arg(long)]
        form: String,
        #[arg(long = "N")]
        n: i64,
        /// Time fraction `a/q`.
        #[arg(long)]
        t: String,
        #[command(flatten)]
        out: OutArgs,
    },
    Pairs {
        #[arg(long)]
        space: String,
        #[arg(long = "N2")]
        n2: String,
        #[arg(long, allow_hyphen_values = true)]
        cube_center: String,
        #[arg(long)]
        cube_side: String,
        /// Single shell; every attained shell when absent.
        #[arg(long)]
        n: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Spatial grid resolution; default is the floor.
    #[arg(long)]
    res: Option<usize>,
    #[arg(long, default_value_t = 20000)]
    mc_points: usize,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum StriCmd {
    Scan {
        #[arg(long)]
        space: String,
        #[arg(long)]
        p: String,
        #[arg(long = "N-list", value_delimiter = ',', required = true)]
        n_list: Vec<String>,
        #[arg(long, default_value = "coherent")]
        ensemble: String,
        #[arg(long)]
        atoms: Option<usize>,
        #[arg(long)]
        t_samples: Option<usize>,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        summary: SummaryArgs,
    },
    Bilinear {
        #[arg(long)]
        space: String,
        #[arg(long = "N1")]
        n1: String,
        #[arg(long = "N2-list", value_delimiter = ',', required = true)]
        n2_list: Vec<String>,
        #[arg(long, default_value = "coherent")]
        ensemble: String,
        #[arg(long)]
        atoms: Option<usize>,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        summary: SummaryArgs,
    },
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum EigenCmd {
    Scan {
        #[arg(long)]
        space: String,
        #[arg(long)]
        p: String,
        /// Shell values `|λ|²_ρ`, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        shells: Vec<String>,
        #[command(flatten)]
        sample: SampleArgs,
        #[command(flatten)]
        out: OutArgs,
        #[command(flatten)]
        summary: SummaryArgs,
    },
}

fn real(s: &str) -> Result<f64> {
    if s.contains('/') {
        return Ok(to_f64(&parse_rational(s)?));
    }
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse(format!("bad number `{s}`")))
}

fn reals(v: &[String]) -> Result<Vec<f64>> {
    v.iter().map(|s| real(s)).collect()
}

fn ints(s: &str) -> Result<Vec<i64>> {
    s.split([',', ';', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad integer `{t}`")))
        })
        .collect()
}

fn load_form(spec: &str) -> Result<QuadForm> {
    if let Some(r) = spec.strip_prefix('I').and_then(|r| r.parse::<usize>().ok()) {
        if r == 0 {
            return Err(Error::Parse("I0 is not a form".into()));
        }
        return Ok(QuadForm::identity(r));
    }
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        if let Ok(q) = QuadForm::parse_toml(&text) {
            return Ok(q);
        }
        return QuadForm::from_space(&SpaceDescriptor::from_toml(&text)?);
    }
    QuadForm::from_space(&resolve_space(spec)?)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Artifact {
    body: String,
    out: Option<PathBuf>,
    summary: Option<(String, Option<PathBuf>)>,
}

fn csv_artifact(body: String, out: &OutArgs) -> Artifact {
    Artifact {
        body,
        out: out.out.clone(),
        summary: None,
    }
}

fn scan_artifact(table: &ScanTable, out: &OutArgs, summary: &SummaryArgs) -> Artifact {
    for w in &table.summary.warnings {
        eprintln!("warning: {w}");
    }
    Artifact {
        body: table.csv_body(),
        out: out.out.clone(),
        summary: Some((table.summary_json(), summary.summary.clone())),
    }
}

fn run(cmd: &Command) -> Result<Artifact> {
    match cmd {
        Command::Space(SpaceCmd::List(out)) => {
            let mut t = Table::new(&["name", "rank", "dim", "period", "volume"]);
            for name in CATALOG_EXAMPLES {
                let s = resolve_space(name)?.summary();
                t.row(["name", "rank", "dim", "period", "volume"].map(|k| s[k].clone()));
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Space(SpaceCmd::Info { space, format, out }) => {
            let s = resolve_space(space)?;
            match format.as_str() {
                "toml" => Ok(Artifact {
                    body: s.to_toml(),
                    out: out.out.clone(),
                    summary: None,
                }),
                "csv" => {
                    let mut t = Table::new(&["key", "value"]);
                    for (k, v) in s.summary() {
                        t.row([k.to_string(), v]);
                    }
                    Ok(csv_artifact(t.finish(), out))
                }
                f => Err(Error::Parse(format!("unknown format `{f}`"))),
            }
        }
        Command::Spherical(SphericalCmd::Eval {
            space,
            lambda,
            theta,
            samples,
            out,
        }) => {
            let s = resolve_space(space)?;
            let lam = DominantWeight::parse(lambda)?;
            s.check_weight(&lam)?;
            let thetas = if theta.is_empty() {
                let k = (*samples).max(2);
                (0..k).map(|j| PI * j as f64 / (k - 1) as f64).collect()
            } else {
                reals(theta)?
            };
            let mut t = Table::new(&[
                "lambda",
                "theta",
                "value_real",
                "value_imag",
                "reference_real",
                "reference_imag",
                "abs_error",
            ]);
            for th in thetas {
                let v = phi_zonal(&s, &lam, &ZonalPoint::new(vec![th; s.rank]))?;
                let (rr, ri, err) = match reference_phi(&s, &lam, th) {
                    Some(r) => (num(r.re), num(r.im), num((v - r).norm())),
                    None => (String::new(), String::new(), String::new()),
                };
                t.row([lam.to_string(), num(th), num(v.re), num(v.im), rr, ri, err]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Spherical(SphericalCmd::Check { n_max, thetas, out }) => {
            let mut t = Table::new(&["n", "max_abs_error", "quad_points"]);
            let k = (*thetas).max(1);
            for n in 0..=*n_max {
                let qp = 4 * (n + 1);
                let err = (0..k)
                    .map(|j| {
                        let th = PI * j as f64 / k as f64;
                        let v = phi_laplace_integral(n, th, qp).value;
                        (v - Complex64::new(legendre(n, (2.0 * th).cos()), 0.0)).norm()
                    })
                    .fold(0.0, f64::max);
                t.row([n.to_string(), num(err), qp.to_string()]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Support(SupportCmd::Check {
            space,
            lambda,
            mu,
            nu_max,
            seed,
            out,
        }) => {
            let s = resolve_space(space)?;
            let lam = DominantWeight::parse(lambda)?;
            let mu_w = DominantWeight::parse(mu)?;
            let mut rng = stream_rng(*seed, &[0x5u64]);
            let c1 = sample_point(&s, &mut rng);
            let c2 = sample_point(&s, &mut rng);
            let rows = support_check(&s, &lam, &mu_w, &c1, &c2, *nu_max)?;
            let mut t = Table::new(&["lambda", "mu", "nu", "projection_norm", "in_predicted"]);
            for r in rows {
                t.row([
                    lam.to_string(),
                    mu_w.to_string(),
                    r.nu.to_string(),
                    num(r.projection_norm),
                    r.in_predicted.to_string(),
                ]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Kernel(KernelCmd::Scan {
            space,
            n,
            t_samples,
            x_samples,
            out,
            summary,
        }) => {
            let s = resolve_space(space)?;
            let period = s.period().to_integer().max(1) as usize;
            let nn = (*n).max(1) as usize;
            let ts = t_samples.unwrap_or((8 * nn * nn * period).next_power_of_two());
            let xs = x_samples.unwrap_or(8 * nn);
            let scan = kernel_bound_scan(&s, *n, &BumpSpec::default(), ts, xs)?;
            let mut t = Table::new(&["t", "a", "q", "L", "sup_mod", "rhs", "ratio"]);
            for r in &scan.rows {
                t.row([
                    num(r.t),
                    r.tag.a.to_string(),
                    r.tag.q.to_string(),
                    r.tag.l.to_string(),
                    num(r.sup_mod),
                    num(r.rhs),
                    num(r.ratio),
                ]);
            }
            let doc = serde_json::json!({
                "space": scan.space,
                "N": scan.n,
                "t_samples": scan.t_samples,
                "x_samples": scan.x_samples,
                "rows": scan.rows.len(),
                "C_of_N": scan.c_of_n,
                "argmax_t": scan.argmax_t,
            });
            Ok(Artifact {
                body: t.finish(),
                out: out.out.clone(),
                summary: Some((
                    serde_json::to_string_pretty(&doc).unwrap(),
                    summary.summary.clone(),
                )),
            })
        }
        Command::Kernel(KernelCmd::Parseval { space, n, out }) => {
            let s = resolve_space(space)?;
            let c = kernel_parseval(&s, real(n)?, &BumpSpec::default())?;
            let mut t = Table::new(&["quadrature", "exact", "rel_error"]);
            t.row([num(c.quadrature), num(c.exact), num(c.rel_error)]);
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Farey(FareyCmd::Dissect { order, out }) => {
            if *order < 1 {
                return Err(Error::Domain(format!(
                    "Farey order must be ≥ 1, got {order}"
                )));
            }
            let seq = farey_sequence(*order);
            let arcs = farey_arcs(*order);
            let mut t = Table::new(&["a", "q", "left_num", "left_den", "right_num", "right_den"]);
            let one = Rational::from_integer(1);
            for f in &seq {
                // the arc around 1/1 is the one around 0/1 shifted by one period
                let (key, shift) = if f.value() == one {
                    (farey_sequence(1)[0], one)
                } else {
                    (*f, Rational::from_integer(0))
                };
                let arc = arcs
                    .iter()
                    .find(|a| a.center == key)
                    .ok_or_else(|| Error::Precision(format!("no arc around {}/{}", f.a, f.q)))?;
                let (l, r) = clip_arc(f.value(), arc.left + shift, arc.right + shift);
                t.row([
                    f.a.to_string(),
                    f.q.to_string(),
                    l.numer().to_string(),
                    l.denom().to_string(),
                    r.numer().to_string(),
                    r.denom().to_string(),
                ]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Farey(FareyCmd::Spectrum { n, q, l, out }) => {
            if !(1 <= *q && q <= l && l <= n) {
                return Err(Error::Domain(format!(
                    "need 1 ≤ Q ≤ L ≤ N, got Q={q}, L={l}, N={n}"
                )));
            }
            let intervals: Vec<(Rational, Rational)> = cells_at_level(*n, *q, *l)
                .into_iter()
                .flat_map(|c| c.intervals)
                .collect();
            let coeffs = indicator_coefficients(&intervals, (64 * n * n) as usize);
            let bound = num(indicator_bound(*n, *q, *l));
            let mut t = Table::new(&["n", "coeff_mod", "bound"]);
            for (k, c) in coeffs.iter().enumerate() {
                t.row([k.to_string(), num(c.norm()), bound.clone()]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Count(CountCmd::Reps { form, max_n, out }) => {
            if *max_n < 0 {
                return Err(Error::Domain("max-n must be ≥ 0".into()));
            }
            let q = load_form(form)?;
            let mut t = Table::new(&["n", "count"]);
            for (n, c) in rep_counts_upto(&q, *max_n).iter().enumerate() {
                t.row([n.to_string(), c.to_string()]);
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Count(CountCmd::Fit { form, max_n, out }) => {
            let q = load_form(form)?;
            let fit = rep_exponent_fit(&q, *max_n)?;
            let mut t = Table::new(&["n", "count"]);
            for (n, c) in &fit.checkpoints {
                t.row([n.to_string(), c.to_string()]);
            }
            let doc = serde_json::json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "residual": fit.residual,
                "theory_exponent": fit.theory_exponent,
            });
            Ok(Artifact {
                body: t.finish(),
                out: out.out.clone(),
                summary: Some((serde_json::to_string_pretty(&doc).unwrap(), None)),
            })
        }
        Command::Count(CountCmd::Theta { form, n, t, out }) => {
            let q = load_form(form)?;
            let c = theta_major_arc_check(&q, *n, parse_rational(t)?)?;
            let mut tab = Table::new(&[
                "t",
                "a",
                "q",
                "L",
                "value_real",
                "value_imag",
                "bound",
                "ratio",
            ]);
            tab.row([
                t.clone(),
                c.tag.a.to_string(),
                c.tag.q.to_string(),
                c.tag.l.to_string(),
                num(c.value.re),
                num(c.value.im),
                num(c.bound),
                num(c.ratio),
            ]);
            Ok(csv_artifact(tab.finish(), out))
        }
        Command::Count(CountCmd::Pairs {
            space,
            n2,
            cube_center,
            cube_side,
            n,
            out,
        }) => {
            let s = resolve_space(space)?;
            let cube = Cube {
                center: ints(cube_center)?,
                side: real(cube_side)?,
            };
            let n2 = real(n2)?;
            let mut t = Table::new(&["n", "count"]);
            match n {
                Some(v) => {
                    let v = parse_rational(v)?;
                    t.row([
                        format_rational(&v),
                        joint_pair_count(&s, &cube, n2, v)?.to_string(),
                    ]);
                }
                None => {
                    let hist: BTreeMap<Rational, u64> = joint_pair_histogram(&s, &cube, n2)?;
                    for (v, c) in hist {
                        t.row([format_rational(&v), c.to_string()]);
                    }
                }
            }
            Ok(csv_artifact(t.finish(), out))
        }
        Command::Stri(StriCmd::Scan {
            space,
            p,
            n_list,
            ensemble,
            atoms,
            t_samples,
            sample,
            out,
            summary,
        }) => {
            let s = resolve_space(space)?;
            let cfg = StriConfig {
                p: real(p)?,
                n_list: reals(n_list)?,
                trials: sample.trials,
                seed: sample.seed,
                ensemble: ensemble.parse::<Ensemble>()?,
                n_atoms: *atoms,
                res: sample.res,
                t_samples: *t_samples,
                mc_points: sample.mc_points,
            };
            Ok(scan_artifact(&strichartz_scan(&s, &cfg)?, out, summary))
        }
        Command::Stri(StriCmd::Bilinear {
            space,
            n1,
            n2_list,
            ensemble,
            atoms,
            sample,
            out,
            summary,
        }) => {
            let s = resolve_space(space)?;
            let cfg = BilinearConfig {
                n1: real(n1)?,
                n2_list: reals(n2_list)?,
                trials: sample.trials,
                seed: sample.seed,
                ensemble: ensemble.parse::<Ensemble>()?,
                n_atoms: *atoms,
                res: sample.res,
                mc_points: sample.mc_points,
            };
            Ok(scan_artifact(&bilinear_scan(&s, &cfg)?, out, summary))
        }
        Command::Eigen(EigenCmd::Scan {
            space,
            p,
            shells,
            sample,
            out,
            summary,
        }) => {
            let s = resolve_space(space)?;
            let cfg = EigenConfig {
                p: real(p)?,
                shells: shells
                    .iter()
                    .map(|v| parse_rational(v))
                    .collect::<Result<_>>()?,
                trials: sample.trials,
                seed: sample.seed,
                mc_points: sample.mc_points,
                res: sample.res,
            };
            Ok(scan_artifact(
                &eigenfunction_lp_scan(&s, &cfg)?,
                out,
                summary,
            ))
        }
    }
}

/// The arc around `c` restricted to `[0, 1]`.
fn clip_arc(c: Rational, left: Rational, right: Rational) -> (Rational, Rational) {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    if c == zero {
        (zero, right.min(one))
    } else if c == one {
        (left.max(zero), one)
    } else {
        (left, right)
    }
}

/// Closed forms per factor: Laplace integral on `S²`, the character quotient
/// on `S³`, exponentials on tori.
fn reference_phi(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    theta: f64,
) -> Option<Complex64> {
    let mut v = Complex64::new(1.0, 0.0);
    for slot in &space.factors {
        let o = slot.offset;
        match &slot.factor {
            Factor::Torus { gram } => {
                for i in 0..gram.len() {
                    let k = lambda.coords[o + i] as f64;
                    v *= Complex64::new((k * theta).cos(), (k * theta).sin());
                }
            }
            Factor::Sphere { d: 2 } => {
                let n = lambda.coords[o] as usize;
                v *= phi_laplace_integral(n, theta / 2.0, 4 * (n + 1)).value;
            }
            Factor::Sphere { d: 3 } => {
                let k = lambda.coords[o] as f64 + 1.0;
                let sn = theta.sin();
                v *= if sn.abs() < 1e-12 {
                    if theta.cos() < 0.0 && (k as i64) % 2 == 0 {
                        -1.0
                    } else {
                        1.0
                    }
                } else {
                    (k * theta).sin() / (k * sn)
                };
            }
            Factor::Sphere { .. } => return None,
        }
    }
    Some(v)
}

fn command_path(cmd: &Command) -> &'static str {
    match cmd {
        Command::Space(SpaceCmd::List(_)) => "space list",
        Command::Space(SpaceCmd::Info { .. }) => "space info",
        Command::Spherical(SphericalCmd::Eval { .. }) => "spherical eval",
        Command::Spherical(SphericalCmd::Check { .. }) => "spherical check",
        Command::Support(SupportCmd::Check { .. }) => "support check",
        Command::Kernel(KernelCmd::Scan { .. }) => "kernel scan",
        Command::Kernel(KernelCmd::Parseval { .. }) => "kernel parseval",
        Command::Farey(FareyCmd::Dissect { .. }) => "farey dissect",
        Command::Farey(FareyCmd::Spectrum { .. }) => "farey spectrum",
        Command::Count(CountCmd::Reps { .. }) => "count reps",
        Command::Count(CountCmd::Fit { .. }) => "count fit",
        Command::Count(CountCmd::Theta { .. }) => "count theta",
        Command::Count(CountCmd::Pairs { .. }) => "count pairs",
        Command::Stri(StriCmd::Scan { .. }) => "stri scan",
        Command::Stri(StriCmd::Bilinear { .. }) => "stri bilinear",
        Command::Eigen(EigenCmd::Scan { .. }) => "eigen scan",
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Resolution { .. } => 3,
        Error::Parse(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let path = command_path(&cli.command);
    let artifact = match run(&cli.command) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            if let Error::Resolution { required, .. } = &e {
                eprintln!("required: {required}");
            }
            return ExitCode::from(exit_code(&e));
        }
    };
    let mut text = String::new();
    let toml_doc =
        matches!(&cli.command, Command::Space(SpaceCmd::Info { format, .. }) if format == "toml");
    if !toml_doc {
        text.push_str(&metadata_line(path, &cli));
    }
    let _ = write!(text, "{}", artifact.body);
    if let Err(e) = emit(artifact.out.as_deref(), &text) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if let Some((doc, dest)) = artifact.summary {
        match dest {
            Some(p) => {
                if let Err(e) = emit(Some(&p), &(doc + "\n")) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            None => eprintln!("{doc}"),
        }
    }
    ExitCode::SUCCESS
}

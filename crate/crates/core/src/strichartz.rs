//! Band-limited data, the Schrödinger flow `e^{itΔ}`, space-time Lebesgue
//! norms and the scaling scans built on them.
//!
//! States are finite sums of zonal translates
//! `f(x) = Σ coef · d_λ · φ_λ(x; c)`; the flow multiplies each coefficient by
//! `e^{-it|λ|²_ρ}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Integral, Term};
use crate::kernel::phase;
use crate::quad_count::loglog_fit;
use crate::quadrature::{base_point, monte_carlo, product_rule, sample_point, Rule};
use crate::rational::{format_rational, Rational};
use crate::space::{band_contains, DominantWeight, Factor, SpaceDescriptor};
use crate::spherical::atom_profile;

/// Random generator for the stream `tags` of a run seeded by `seed`.
pub fn stream_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &t in tags {
        // splitmix64 step over the tag sequence
        h = h.wrapping_add(t).wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    rng.set_stream(h);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub enum Band {
    /// `N ≤ |λ|_ρ < 2N`.
    Sharp(f64),
    /// `|λ|²_ρ = n`.
    Shell(Rational),
    /// No constraint; used for hand-built states.
    Free,
}

impl Band {
    pub fn contains(&self, space: &SpaceDescriptor, w: &DominantWeight) -> bool {
        match self {
            Band::Sharp(n) => band_contains(&space.spec_norm_sq_unchecked(w), *n),
            Band::Shell(n) => space.spec_norm_sq_unchecked(w) == *n,
            Band::Free => true,
        }
    }

    /// The frequency scale `N` used for reference powers and resolution floors.
    pub fn scale(&self) -> f64 {
        match self {
            Band::Sharp(n) => *n,
            Band::Shell(n) => crate::rational::to_f64(n).sqrt().max(1.0),
            Band::Free => 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub weight: DominantWeight,
    pub center: usize,
    pub coef: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Weights uniform from the band, uniform centers, complex gaussian
    /// coefficients.
    Gaussian,
    /// Every band weight once, one shared center, positive Rayleigh
    /// coefficients: data focused at a point.
    Coherent,
}

impl std::str::FromStr for Ensemble {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Ensemble::Gaussian),
            "coherent" => Ok(Ensemble::Coherent),
            _ => Err(Error::Parse(format!("unknown ensemble `{s}`"))),
        }
    }
}

impl std::fmt::Display for Ensemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Coherent => "coherent",
        })
    }
}

#[derive(Clone, Debug)]
pub struct BandState {
    pub space: SpaceDescriptor,
    pub band: Band,
    pub centers: Vec<Vec<f64>>,
    pub atoms: Vec<Atom>,
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl BandState {
    pub fn new(
        space: &SpaceDescriptor,
        band: Band,
        centers: Vec<Vec<f64>>,
        atoms: Vec<Atom>,
    ) -> Result<Self> {
        for a in &atoms {
            space.check_weight(&a.weight)?;
            if !band.contains(space, &a.weight) {
                return Err(Error::domain(format!(
                    "weight {} is outside the band",
                    a.weight
                )));
            }
            if a.center >= centers.len() {
                return Err(Error::domain("atom center index out of range"));
            }
        }
        Ok(Self {
            space: space.clone(),
            band,
            centers,
            atoms,
        })
    }

    /// `⟨f, f⟩ = vol · Σ_λ d_λ Σ_{a,b} c_a c̄_b φ_λ(c_b; c_a)`.
    pub fn l2_norm(&self) -> f64 {
        let mut groups: BTreeMap<&DominantWeight, Vec<&Atom>> = BTreeMap::new();
        for a in &self.atoms {
            groups.entry(&a.weight).or_default().push(a);
        }
        let mut acc = 0.0;
        for (w, atoms) in groups {
            let d = self.space.dim_weight(w).expect("checked weight") as f64;
            let mut s = Complex64::zero();
            for a in &atoms {
                for b in &atoms {
                    let g = atom_profile(
                        &self.space,
                        w,
                        &self.centers[b.center],
                        &self.centers[a.center],
                    );
                    s += a.coef * b.coef.conj() * g;
                }
            }
            acc += d * s.re;
        }
        (acc * self.space.volume()).max(0.0).sqrt()
    }

    pub fn scaled(mut self, k: f64) -> Self {
        for a in &mut self.atoms {
            a.coef *= k;
        }
        self
    }

    pub fn normalized(self) -> Result<Self> {
        let n = self.l2_norm();
        if n == 0.0 {
            return Err(Error::domain("state has zero norm"));
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| {
                let d = self.space.dim_weight(&a.weight).expect("checked weight") as f64;
                a.coef * d * atom_profile(&self.space, &a.weight, x, &self.centers[a.center])
            })
            .sum()
    }

    /// `e^{itΔ}f` at real time `t`.
    pub fn evolve(&self, t: f64) -> Self {
        let s = t / self.space.time_period();
        let mut out = self.clone();
        for a in &mut out.atoms {
            let m = self.space.spectral_index(&a.weight);
            a.coef *= Complex64::from_polar(1.0, -2.0 * PI * (s * m as f64).rem_euclid(1.0));
        }
        out
    }

    /// `e^{itΔ}f` at `t = s·𝒯`, with the phase reduced exactly.
    pub fn evolve_frac(&self, s: &Rational) -> Self {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.coef *= phase(s, self.space.spectral_index(&a.weight));
        }
        out
    }

    /// Sharp projection onto `N ≤ |λ|_ρ < 2N`, computed exactly on atoms.
    pub fn project_band(&self, n: f64) -> Self {
        let mut out = self.clone();
        out.atoms
            .retain(|a| band_contains(&self.space.spec_norm_sq_unchecked(&a.weight), n));
        out.band = Band::Sharp(n);
        out
    }

    /// Highest `|λ|_ρ` among the atoms.
    pub fn frequency_limit(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| crate::rational::to_f64(&self.space.spec_norm_sq_unchecked(&a.weight)).sqrt())
            .fold(0.0, f64::max)
    }

    /// The space-time field. On tori translates are plane waves, so atoms
    /// merge into one coefficient per weight about the base point.
    pub fn field(&self) -> Field {
        let base = base_point(&self.space);
        if self.space.is_pure_torus() {
            let mut merged: BTreeMap<DominantWeight, Complex64> = BTreeMap::new();
            for a in &self.atoms {
                let shift = atom_profile(&self.space, &a.weight, &base, &self.centers[a.center]);
                *merged
                    .entry(a.weight.clone())
                    .or_insert_with(Complex64::zero) += a.coef * shift;
            }
            let terms = merged
                .into_iter()
                .map(|(w, c)| Term {
                    m: self.space.spectral_index(&w),
                    weight: w,
                    coef: c,
                    center: 0,
                })
                .collect();
            return Field::new(&self.space, vec![base], terms);
        }
        let terms = self
            .atoms
            .iter()
            .map(|a| Term {
                m: self.space.spectral_index(&a.weight),
                coef: a.coef * self.space.dim_weight(&a.weight).expect("checked weight") as f64,
                weight: a.weight.clone(),
                center: a.center,
            })
            .collect();
        Field::new(&self.space, self.centers.clone(), terms)
    }
}

/// Number of atoms a gaussian state draws by default: three per band weight.
pub fn default_atoms(space: &SpaceDescriptor, n: f64) -> usize {
    3 * space.weights_in_band(n).len()
}

/// An L²-normalized random state in the band `N ≤ |λ|_ρ < 2N`.
pub fn random_band_state(
    space: &SpaceDescriptor,
    n: f64,
    n_atoms: usize,
    ensemble: Ensemble,
    rng: &mut impl Rng,
) -> Result<BandState> {
    let band = space.weights_in_band(n);
    if band.is_empty() {
        return Err(Error::domain(format!(
            "band N={n} of {} is empty",
            space.name
        )));
    }
    let (centers, atoms) = match ensemble {
        Ensemble::Gaussian => {
            if n_atoms == 0 {
                return Err(Error::domain("n_atoms must be positive"));
            }
            let mut centers = Vec::with_capacity(n_atoms);
            let mut atoms = Vec::with_capacity(n_atoms);
            for i in 0..n_atoms {
                let w = band[rng.random_range(0..band.len())].clone();
                centers.push(sample_point(space, rng));
                atoms.push(Atom {
                    weight: w,
                    center: i,
                    coef: complex_gaussian(rng),
                });
            }
            (centers, atoms)
        }
        Ensemble::Coherent => {
            let c = sample_point(space, rng);
            let atoms = band
                .iter()
                .map(|w| Atom {
                    weight: w.clone(),
                    center: 0,
                    coef: Complex64::new(complex_gaussian(rng).norm(), 0.0),
                })
                .collect();
            (vec![c], atoms)
        }
    };
    BandState::new(space, Band::Sharp(n), centers, atoms)?.normalized()
}

/// A random eigenfunction on the shell `|λ|²_ρ = n`: every shell weight with a
/// complex gaussian coefficient about the base point, L²-normalized.
pub fn random_shell_state(
    space: &SpaceDescriptor,
    n: Rational,
    rng: &mut impl Rng,
) -> Result<BandState> {
    shell_state_from(space, n, &space.weights_on_shell(&n), rng)
}

fn shell_state_from(
    space: &SpaceDescriptor,
    n: Rational,
    shell: &[DominantWeight],
    rng: &mut impl Rng,
) -> Result<BandState> {
    if shell.is_empty() {
        return Err(Error::domain(format!(
            "shell {} of {} is empty",
            format_rational(&n),
            space.name
        )));
    }
    let atoms = shell
        .iter()
        .map(|w| Atom {
            weight: w.clone(),
            center: 0,
            coef: complex_gaussian(rng),
        })
        .collect();
    BandState::new(space, Band::Shell(n), vec![base_point(space)], atoms)?.normalized()
}

/// How space is integrated: an exact product rule of the given resolution
/// when the space admits one and has dimension ≤ 4, uniform sampling
/// otherwise.
#[derive(Clone, Debug, Serialize)]
pub struct SpatialSpec {
    pub res: usize,
    pub mc_points: usize,
    pub seed: u64,
}

impl SpatialSpec {
    pub fn rule(&self, space: &SpaceDescriptor, tags: &[u64]) -> Rule {
        if space.dim <= 4 {
            if let Some(r) = product_rule(space, self.res) {
                return r;
            }
        }
        let mut rng = stream_rng(self.seed, tags);
        monte_carlo(space, self.mc_points, &mut rng)
    }

    pub fn uses_sampling(&self, space: &SpaceDescriptor) -> bool {
        space.dim > 4 || product_rule(space, 2).is_none()
    }
}

/// Resolution floors for a state limited by `|λ|_ρ < 2N`: spatial grid
/// `8N` and time nodes `8(2N)²·period`.
pub fn resolution_floor(space: &SpaceDescriptor, n: f64) -> (usize, usize) {
    let res = (8.0 * n).ceil() as usize;
    let t = (8.0 * (2.0 * n).powi(2)).ceil() as usize * space.period().to_integer() as usize;
    (res, t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpNorm {
    pub value: f64,
    pub stderr: f64,
    /// Set when `p` is not an even integer, so time quadrature is inexact.
    pub approximate: bool,
}

/// `(∫₀^𝒯 ∫_M |e^{itΔ}f|^p)^{1/p}` on `t_samples` equispaced times.
pub fn spacetime_lp_norm(
    state: &BandState,
    p: f64,
    spatial: &SpatialSpec,
    t_samples: usize,
    tags: &[u64],
) -> Result<LpNorm> {
    if p < 2.0 {
        return Err(Error::domain("p must be at least 2"));
    }
    let (res_min, t_min) = resolution_floor(
        &state.space,
        state.band.scale().max(state.frequency_limit() / 2.0),
    );
    let grid = !spatial.uses_sampling(&state.space);
    if (grid && spatial.res < res_min) || t_samples < t_min {
        return Err(Error::resolution(
            format!(
                "space-time norm with res={} t_samples={t_samples}",
                spatial.res
            ),
            if grid {
                format!("res={res_min} t_samples={t_min}")
            } else {
                format!("t_samples={t_min}")
            },
        ));
    }
    let field = state.field();
    let rule = spatial.rule(&state.space, tags);
    let integral = field.time_power_integral(&rule, t_samples, p);
    let tp = state.space.time_period();
    let value = (tp * integral.value).max(0.0).powf(1.0 / p);
    // delta method for the p-th root
    let stderr = if integral.value > 0.0 {
        value * integral.stderr / (p * integral.value)
    } else {
        0.0
    };
    Ok(LpNorm {
        value,
        stderr,
        approximate: !(p.fract() == 0.0 && (p as i64) % 2 == 0),
    })
}

/// `‖e^{itΔ}f₁ · e^{itΔ}f₂‖_{L²(𝕋×M)}` by grouping products by total
/// frequency: `𝒯 ∫_M Σ_n |Σ_{m₁+m₂=n} A¹_{m₁} A²_{m₂}|²`.
pub fn bilinear_l2_norm(
    s1: &BandState,
    s2: &BandState,
    spatial: &SpatialSpec,
    tags: &[u64],
) -> Result<LpNorm> {
    if s1.space != s2.space {
        return Err(Error::domain(format!(
            "states live on {} and {}",
            s1.space.name, s2.space.name
        )));
    }
    let space = &s1.space;
    let top = s1.frequency_limit().max(s2.frequency_limit());
    let res_min = (4.0 * top).ceil() as usize;
    let grid = !spatial.uses_sampling(space);
    if grid && spatial.res < res_min {
        return Err(Error::resolution(
            format!("bilinear norm with res={}", spatial.res),
            format!("res={res_min}"),
        ));
    }
    let (f1, f2) = (s1.field(), s2.field());
    let rule = spatial.rule(space, tags);
    let len = (f1.m_span() + f2.m_span() + 1).next_power_of_two();
    let fft = FftPlanner::new().plan_fft_forward(len);
    let (b1, b2) = (f1.m_span() + 1, f2.m_span() + 1);
    // f2's buckets per node, in node order
    let second: Vec<Vec<Complex64>> = f2.map_nodes(&rule, 64, |_, b, _| b.to_vec());
    let per_node = f1.map_nodes(&rule, 64, |i, a, _| {
        let mut x = vec![Complex64::zero(); len];
        let mut y = vec![Complex64::zero(); len];
        x[..b1].copy_from_slice(&a[..b1]);
        y[..b2].copy_from_slice(&second[i][..b2]);
        fft.process(&mut x);
        fft.process(&mut y);
        x.iter()
            .zip(&y)
            .map(|(u, v)| (u * v).norm_sqr())
            .sum::<f64>()
            / len as f64
    });
    let integral = Integral::from_nodes(&rule, &per_node);
    let tp = space.time_period();
    let value = (tp * integral.value).max(0.0).sqrt();
    let stderr = if value > 0.0 {
        tp * integral.stderr / (2.0 * value)
    } else {
        0.0
    };
    Ok(LpNorm {
        value,
        stderr,
        approximate: false,
    })
}

/// `(∫_M |f|^p)^{1/p}` of a time-independent state.
pub fn spatial_lp_norm(state: &BandState, p: f64, rule: &Rule) -> LpNorm {
    let field = state.field();
    let g: Vec<f64> = field.map_nodes(rule, 64, |_, b, _| {
        b.iter().sum::<Complex64>().norm().powf(p)
    });
    let integral = Integral::from_nodes(rule, &g);
    let value = integral.value.max(0.0).powf(1.0 / p);
    let stderr = if integral.value > 0.0 {
        value * integral.stderr / (p * integral.value)
    } else {
        0.0
    };
    LpNorm {
        value,
        stderr,
        approximate: !rule.exact,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    /// Scan parameter: `N`, `N₂` or `√n`.
    pub n: f64,
    /// `N₁` for bilinear scans, shell index for eigenfunction scans.
    pub aux: Option<String>,
    pub trial: usize,
    pub norm: f64,
    pub ref_power: f64,
    pub ratio: f64,
    pub stderr: Option<f64>,
    pub atoms: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanSummary {
    pub exponent: f64,
    /// Slope of `log max ratio` against `log N`.
    pub slope: f64,
    pub residual: f64,
    /// Slope of `log max norm` against `log N`.
    pub norm_slope: f64,
    pub max_over_min: f64,
    pub max_ratio: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanKind {
    Strichartz,
    Bilinear,
    Eigen,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTable {
    pub kind: ScanKind,
    pub space: String,
    pub seed: u64,
    pub resolution: String,
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

impl ScanTable {
    fn from_rows(
        kind: ScanKind,
        space: &SpaceDescriptor,
        seed: u64,
        resolution: String,
        rows: Vec<ScanRow>,
        exponent: f64,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let mut max_ratio: BTreeMap<u64, (f64, f64, f64)> = BTreeMap::new();
        for r in &rows {
            let e = max_ratio.entry(r.n.to_bits()).or_insert((r.n, 0.0, 0.0));
            e.1 = e.1.max(r.ratio);
            e.2 = e.2.max(r.norm);
        }
        let mut per_n: Vec<(f64, f64, f64)> = max_ratio.into_values().collect();
        per_n.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ratios: Vec<(f64, f64)> = per_n.iter().map(|&(n, r, _)| (n, r)).collect();
        let (slope, _, residual) = loglog_fit(&ratios)?;
        let (norm_slope, _, _) =
            loglog_fit(&per_n.iter().map(|&(n, _, v)| (n, v)).collect::<Vec<_>>())?;
        let hi = ratios.iter().map(|r| r.1).fold(f64::MIN, f64::max);
        let lo = ratios.iter().map(|r| r.1).fold(f64::MAX, f64::min);
        Ok(Self {
            kind,
            space: space.name.clone(),
            seed,
            resolution,
            rows,
            summary: ScanSummary {
                exponent,
                slope,
                residual,
                norm_slope,
                max_over_min: hi / lo,
                max_ratio: ratios,
                warnings,
            },
        })
    }

    pub fn header(&self) -> &'static str {
        match self.kind {
            ScanKind::Strichartz => "N,trial,norm,ref_power,ratio,stderr,atoms",
            ScanKind::Bilinear => "N1,N2,trial,norm,ref_power,ratio,stderr,atoms",
            ScanKind::Eigen => "n,N,trial,norm,ref_power,ratio,stderr,atoms",
        }
    }

    /// CSV body: header line and one line per row.
    pub fn csv_body(&self) -> String {
        let mut out = String::new();
        out.push_str(self.header());
        out.push('\n');
        for r in &self.rows {
            let se = r.stderr.map(|v| v.to_string()).unwrap_or_default();
            let lead = match (self.kind, &r.aux) {
                (ScanKind::Strichartz, _) => r.n.to_string(),
                (_, Some(a)) => format!("{a},{}", r.n),
                (_, None) => format!(",{}", r.n),
            };
            let _ = writeln!(
                out,
                "{lead},{},{},{},{},{se},{}",
                r.trial, r.norm, r.ref_power, r.ratio, r.atoms
            );
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StriConfig {
    pub p: f64,
    pub n_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Gaussian atoms per state; `None` means three per band weight.
    pub n_atoms: Option<usize>,
    /// Spatial grid and time nodes; `None` uses the floors (time rounded up
    /// to a power of two).
    pub res: Option<usize>,
    pub t_samples: Option<usize>,
    pub mc_points: usize,
}

fn n_tag(n: f64) -> u64 {
    n.to_bits()
}

/// Ratio `‖e^{itΔ}f‖_{L^p(𝕋×M)} / N^{d/2-(d+2)/p}` over `N` and trials.
pub fn strichartz_scan(space: &SpaceDescriptor, cfg: &StriConfig) -> Result<ScanTable> {
    let d = space.dim as f64;
    let exponent = d / 2.0 - (d + 2.0) / cfg.p;
    let mut warnings = Vec::new();
    let critical = 2.0 + 8.0 / space.rank as f64;
    if cfg.p < critical {
        warnings.push(format!("sub-admissible: p={} < 2+8/r={critical}", cfg.p));
    }
    let mut rows = Vec::new();
    let mut res_note = Vec::new();
    for &n in &cfg.n_list {
        let (res_min, t_min) = resolution_floor(space, n);
        let res = cfg.res.unwrap_or(res_min);
        let t_samples = cfg.t_samples.unwrap_or(t_min.next_power_of_two());
        res_note.push(format!("N={n}:res={res}:t={t_samples}"));
        let spatial = SpatialSpec {
            res,
            mc_points: cfg.mc_points,
            seed: cfg.seed,
        };
        let atoms = cfg.n_atoms.unwrap_or_else(|| default_atoms(space, n));
        let trial_rows: Vec<Result<ScanRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(cfg.seed, &[0, n_tag(n), trial as u64]);
                let state = random_band_state(space, n, atoms, cfg.ensemble, &mut rng)?;
                let norm = spacetime_lp_norm(
                    &state,
                    cfg.p,
                    &spatial,
                    t_samples,
                    &[1, n_tag(n), trial as u64],
                )?;
                let ref_power = n.powf(exponent);
                Ok(ScanRow {
                    n,
                    aux: None,
                    trial,
                    norm: norm.value,
                    ref_power,
                    ratio: norm.value / ref_power,
                    stderr: spatial.uses_sampling(space).then_some(norm.stderr),
                    atoms: state.atoms.len(),
                })
            })
            .collect();
        for r in trial_rows {
            rows.push(r?);
        }
    }
    ScanTable::from_rows(
        ScanKind::Strichartz,
        space,
        cfg.seed,
        res_note.join(";"),
        rows,
        exponent,
        warnings,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearConfig {
    pub n1: f64,
    pub n2_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub n_atoms: Option<usize>,
    pub res: Option<usize>,
    pub mc_points: usize,
}

/// Product of rank-one factors each of dimension at least three.
pub fn bilinear_shape_ok(space: &SpaceDescriptor) -> bool {
    space.factors.iter().all(|s| match &s.factor {
        Factor::Sphere { d } => *d >= 3,
        Factor::Torus { .. } => false,
    })
}

/// `‖e^{itΔ}f₁ e^{itΔ}f₂‖_{L²}` for `f₁` in band `N₁` and `f₂` in band `N₂`,
/// against `N₂^{d/2-1}`. Coherent pairs share their center.
pub fn bilinear_scan(space: &SpaceDescriptor, cfg: &BilinearConfig) -> Result<ScanTable> {
    let d = space.dim as f64;
    let exponent = d / 2.0 - 1.0;
    let mut warnings = Vec::new();
    if !bilinear_shape_ok(space) {
        warnings.push(format!(
            "{} is not a product of rank-one factors of dimension ≥ 3",
            space.name
        ));
    }
    let mut rows = Vec::new();
    let mut res_note = Vec::new();
    for &n2 in &cfg.n2_list {
        let res = cfg.res.unwrap_or((8.0 * cfg.n1.max(n2)).ceil() as usize);
        res_note.push(format!("N2={n2}:res={res}:mc={}", cfg.mc_points));
        let spatial = SpatialSpec {
            res,
            mc_points: cfg.mc_points,
            seed: cfg.seed,
        };
        let trial_rows: Vec<Result<ScanRow>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(cfg.seed, &[2, n_tag(n2), trial as u64]);
                let a1 = cfg.n_atoms.unwrap_or_else(|| default_atoms(space, cfg.n1));
                let a2 = cfg.n_atoms.unwrap_or_else(|| default_atoms(space, n2));
                let s1 = random_band_state(space, cfg.n1, a1, cfg.ensemble, &mut rng)?;
                let mut s2 = random_band_state(space, n2, a2, cfg.ensemble, &mut rng)?;
                if cfg.ensemble == Ensemble::Coherent {
                    s2.centers = s1.centers.clone();
                }
                let norm = bilinear_l2_norm(&s1, &s2, &spatial, &[3, n_tag(n2), trial as u64])?;
                let ref_power = n2.powf(exponent);
                Ok(ScanRow {
                    n: n2,
                    aux: Some(cfg.n1.to_string()),
                    trial,
                    norm: norm.value,
                    ref_power,
                    ratio: norm.value / ref_power,
                    stderr: spatial.uses_sampling(space).then_some(norm.stderr),
                    atoms: s1.atoms.len() + s2.atoms.len(),
                })
            })
            .collect();
        for r in trial_rows {
            rows.push(r?);
        }
    }
    ScanTable::from_rows(
        ScanKind::Bilinear,
        space,
        cfg.seed,
        res_note.join(";"),
        rows,
        exponent,
        warnings,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenConfig {
    pub p: f64,
    #[serde(serialize_with = "crate::rational::serialize_rationals")]
    pub shells: Vec<Rational>,
    pub trials: usize,
    pub seed: u64,
    pub mc_points: usize,
    pub res: Option<usize>,
}

/// `‖f‖_{L^p(M)}` of random eigenfunctions on the shells `|λ|²_ρ = n`,
/// against `N^{(d-2)/2-d/p}` with `N = max(√n, 1)`.
pub fn eigenfunction_lp_scan(space: &SpaceDescriptor, cfg: &EigenConfig) -> Result<ScanTable> {
    let d = space.dim as f64;
    let exponent = (d - 2.0) / 2.0 - d / cfg.p;
    let mut warnings = Vec::new();
    if space.rank < 5 {
        warnings.push(format!("rank {} < 5", space.rank));
    } else if cfg.p <= 2.0 + 8.0 / (space.rank as f64 - 4.0) {
        warnings.push(format!("p={} is not above 2+8/(r-4)", cfg.p));
    }
    let mut rows = Vec::new();
    let mut res_note = Vec::new();
    for shell in &cfg.shells {
        let n = *shell;
        let tag = [*shell.numer() as u64, *shell.denom() as u64];
        let label = format_rational(shell);
        let big_n = crate::rational::to_f64(&n).sqrt().max(1.0);
        let res = cfg.res.unwrap_or((8.0 * big_n).ceil() as usize);
        let spatial = SpatialSpec {
            res,
            mc_points: cfg.mc_points,
            seed: cfg.seed,
        };
        let rule = spatial.rule(space, &[4, tag[0], tag[1]]);
        res_note.push(format!("n={label}:{}", rule.label));
        let weights = space.weights_on_shell(&n);
        let trial_rows: Vec<Result<Option<ScanRow>>> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(cfg.seed, &[5, tag[0], tag[1], trial as u64]);
                let state = match shell_state_from(space, n, &weights, &mut rng) {
                    Ok(s) => s,
                    Err(Error::Domain(_)) => return Ok(None),
                    Err(e) => return Err(e),
                };
                let norm = spatial_lp_norm(&state, cfg.p, &rule);
                let ref_power = big_n.powf(exponent);
                Ok(Some(ScanRow {
                    n: big_n,
                    aux: Some(label.clone()),
                    trial,
                    norm: norm.value,
                    ref_power,
                    ratio: norm.value / ref_power,
                    stderr: (!rule.exact).then_some(norm.stderr),
                    atoms: state.atoms.len(),
                }))
            })
            .collect();
        let mut any = false;
        for r in trial_rows {
            if let Some(row) = r? {
                rows.push(row);
                any = true;
            }
        }
        if !any {
            warnings.push(format!("shell n={label} is empty; skipped"));
        }
    }
    ScanTable::from_rows(
        ScanKind::Eigen,
        space,
        cfg.seed,
        res_note.join(";"),
        rows,
        exponent,
        warnings,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use crate::space::catalog_get;

    fn rng(seed: u64) -> ChaCha8Rng {
        stream_rng(seed, &[])
    }

    #[test]
    fn t1_band_one_is_two_frequencies() {
        let t1 = catalog_get("T1").unwrap();
        let s = random_band_state(&t1, 1.0, 6, Ensemble::Gaussian, &mut rng(3)).unwrap();
        assert!(s.atoms.iter().all(|a| a.weight.coords[0].abs() == 1));
        assert!((s.l2_norm() - 1.0).abs() < 1e-12);
        let rule = product_rule(&t1, 16).unwrap();
        let q = rule.integrate(|x| s.eval(x).norm_sqr());
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stored_norm_matches_quadrature() {
        for (name, n) in [("S2", 2.0), ("T2", 3.0), ("SU2", 2.0), ("T1×S2", 2.0)] {
            let sp = catalog_get(name).unwrap();
            for ens in [Ensemble::Gaussian, Ensemble::Coherent] {
                let s = random_band_state(&sp, n, 7, ens, &mut rng(11)).unwrap();
                let rule = product_rule(&sp, 24).unwrap();
                let q = rule.integrate(|x| s.eval(x).norm_sqr()).sqrt();
                assert!((q - 1.0).abs() < 1e-6, "{name} {ens}: {q}");
            }
        }
    }

    #[test]
    fn s2_band_two_degrees() {
        let s2 = catalog_get("S2").unwrap();
        let s = random_band_state(&s2, 2.0, 20, Ensemble::Gaussian, &mut rng(1)).unwrap();
        assert!(s.atoms.iter().all(|a| [2, 3].contains(&a.weight.coords[0])));
    }

    #[test]
    fn seeds_reproduce() {
        let t2 = catalog_get("T2").unwrap();
        let a = random_band_state(&t2, 4.0, 30, Ensemble::Gaussian, &mut rng(9)).unwrap();
        let b = random_band_state(&t2, 4.0, 30, Ensemble::Gaussian, &mut rng(9)).unwrap();
        assert_eq!(format!("{:?}", a.atoms), format!("{:?}", b.atoms));
        assert_eq!(a.centers, b.centers);
    }

    #[test]
    fn empty_band_is_an_error() {
        let s2 = catalog_get("S2").unwrap();
        assert!(random_band_state(&s2, 0.1, 4, Ensemble::Gaussian, &mut rng(0)).is_err());
    }

    #[test]
    fn evolution_is_periodic_and_unitary() {
        for name in ["T2", "S2", "SU2"] {
            let sp = catalog_get(name).unwrap();
            let s = random_band_state(&sp, 3.0, 10, Ensemble::Gaussian, &mut rng(5)).unwrap();
            let x = sample_point(&sp, &mut rng(6));
            let back = s.evolve(sp.time_period());
            assert!((back.eval(&x) - s.eval(&x)).norm() < 1e-10, "{name}");
            assert!((s.evolve(0.0).eval(&x) - s.eval(&x)).norm() == 0.0);
            assert!((s.evolve(0.7).l2_norm() - 1.0).abs() < 1e-10);
            let e1 = s.evolve(0.25 * sp.time_period()).eval(&x);
            let e2 = s.evolve_frac(&frac(1, 4)).eval(&x);
            assert!((e1 - e2).norm() < 1e-10);
        }
    }

    #[test]
    fn single_atom_modulus_is_time_invariant() {
        let s2 = catalog_get("S2").unwrap();
        let c = base_point(&s2);
        let st = BandState::new(
            &s2,
            Band::Free,
            vec![c],
            vec![Atom {
                weight: DominantWeight::new(vec![3]),
                center: 0,
                coef: Complex64::new(0.4, 0.3),
            }],
        )
        .unwrap();
        let x = sample_point(&s2, &mut rng(2));
        for t in [0.1, 0.9, 2.3] {
            assert!((st.evolve(t).eval(&x).norm() - st.eval(&x).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let t2 = catalog_get("T2").unwrap();
        let s = random_band_state(&t2, 4.0, 40, Ensemble::Gaussian, &mut rng(4)).unwrap();
        let once = s.project_band(4.0);
        let twice = once.project_band(4.0);
        assert_eq!(format!("{:?}", once.atoms), format!("{:?}", twice.atoms));
        assert_eq!(once.atoms.len(), s.atoms.len());
        assert!(s.project_band(16.0).atoms.is_empty());
    }

    #[test]
    fn p2_is_unitarity() {
        for (name, n) in [
            ("T1", 4.0),
            ("T2", 4.0),
            ("S2", 4.0),
            ("SU2", 2.0),
            ("T1×S2", 2.0),
        ] {
            let sp = catalog_get(name).unwrap();
            let (res, t) = resolution_floor(&sp, n);
            let spatial = SpatialSpec {
                res,
                mc_points: 0,
                seed: 0,
            };
            for ens in [Ensemble::Gaussian, Ensemble::Coherent] {
                let s = random_band_state(&sp, n, 12, ens, &mut rng(8)).unwrap();
                let v = spacetime_lp_norm(&s, 2.0, &spatial, t, &[]).unwrap();
                let expect = sp.time_period().sqrt();
                assert!(
                    (v.value / expect - 1.0).abs() < 1e-4,
                    "{name} {ens}: {} vs {expect}",
                    v.value
                );
            }
        }
    }

    #[test]
    fn modulus_one_wave() {
        let t1 = catalog_get("T1").unwrap();
        let st = BandState::new(
            &t1,
            Band::Free,
            vec![vec![0.0]],
            vec![Atom {
                weight: DominantWeight::new(vec![3]),
                center: 0,
                coef: Complex64::new(1.0, 0.0),
            }],
        )
        .unwrap();
        let (res, t) = resolution_floor(&t1, 3.0);
        let spatial = SpatialSpec {
            res,
            mc_points: 0,
            seed: 0,
        };
        for p in [4.0, 6.0, 7.5] {
            let v = spacetime_lp_norm(&st, p, &spatial, t, &[]).unwrap();
            let expect = (t1.time_period() * 2.0 * PI).powf(1.0 / p);
            assert!((v.value / expect - 1.0).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn refuses_coarse_grids() {
        let t2 = catalog_get("T2").unwrap();
        let s = random_band_state(&t2, 4.0, 5, Ensemble::Gaussian, &mut rng(1)).unwrap();
        let spatial = SpatialSpec {
            res: 16,
            mc_points: 0,
            seed: 0,
        };
        match spacetime_lp_norm(&s, 4.0, &spatial, 100_000, &[]) {
            Err(Error::Resolution { required, .. }) => {
                assert!(required.contains("res=32"), "{required}")
            }
            other => panic!("{other:?}"),
        }
        let spatial = SpatialSpec {
            res: 64,
            mc_points: 0,
            seed: 0,
        };
        assert!(matches!(
            spacetime_lp_norm(&s, 4.0, &spatial, 100, &[]),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn bilinear_single_pair() {
        let t1 = catalog_get("T1").unwrap();
        let mk = |k: i64| {
            BandState::new(
                &t1,
                Band::Free,
                vec![vec![0.0]],
                vec![Atom {
                    weight: DominantWeight::new(vec![k]),
                    center: 0,
                    coef: Complex64::new(1.0, 0.0),
                }],
            )
            .unwrap()
        };
        let spatial = SpatialSpec {
            res: 16,
            mc_points: 0,
            seed: 0,
        };
        let v = bilinear_l2_norm(&mk(1), &mk(-1), &spatial, &[]).unwrap();
        assert!((v.value - (t1.time_period() * 2.0 * PI).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bilinear_with_constant() {
        let s2 = catalog_get("S2").unwrap();
        let f1 = random_band_state(&s2, 2.0, 6, Ensemble::Gaussian, &mut rng(3)).unwrap();
        let c = 0.7;
        let f2 = BandState::new(
            &s2,
            Band::Free,
            vec![base_point(&s2)],
            vec![Atom {
                weight: DominantWeight::new(vec![0]),
                center: 0,
                coef: Complex64::new(c, 0.0),
            }],
        )
        .unwrap();
        let spatial = SpatialSpec {
            res: 32,
            mc_points: 0,
            seed: 0,
        };
        let v = bilinear_l2_norm(&f1, &f2, &spatial, &[]).unwrap();
        assert!((v.value - s2.time_period().sqrt() * c).abs() < 1e-10);
    }

    /// Dense time sampling of `u₁u₂` at every node, summing directly.
    fn dense_bilinear(s1: &BandState, s2: &BandState, rule: &Rule) -> f64 {
        let (f1, f2) = (s1.field(), s2.field());
        let m_t = 2 * (f1.m_span() + f2.m_span()) + 3;
        let per: Vec<f64> = f1.map_nodes(rule, 16, |i, a, _| {
            let mut b = vec![Complex64::zero(); f2.m_span() + 1];
            f2.buckets_at(rule.point(i), &mut b);
            let mut acc = 0.0;
            for j in 0..m_t {
                let s = j as f64 / m_t as f64;
                let u = |buckets: &[Complex64], m0: i64| -> Complex64 {
                    buckets
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            v * Complex64::from_polar(1.0, -2.0 * PI * s * (m0 + k as i64) as f64)
                        })
                        .sum()
                };
                acc += (u(a, f1.m_min()) * u(&b, f2.m_min())).norm_sqr();
            }
            acc / m_t as f64
        });
        let v: f64 = per.iter().zip(&rule.weights).map(|(g, w)| g * w).sum();
        (s1.space.time_period() * v).sqrt()
    }

    #[test]
    fn bilinear_matches_dense_time_sampling() {
        for (name, n1, n2) in [("T1", 8.0, 4.0), ("T2", 8.0, 4.0), ("S2", 8.0, 2.0)] {
            let sp = catalog_get(name).unwrap();
            let s1 = random_band_state(&sp, n1, 12, Ensemble::Gaussian, &mut rng(21)).unwrap();
            let s2 = random_band_state(&sp, n2, 12, Ensemble::Gaussian, &mut rng(22)).unwrap();
            let spatial = SpatialSpec {
                res: 64,
                mc_points: 0,
                seed: 0,
            };
            let v = bilinear_l2_norm(&s1, &s2, &spatial, &[]).unwrap();
            let rule = product_rule(&sp, 64).unwrap();
            let dense = dense_bilinear(&s1, &s2, &rule);
            assert!(
                (v.value / dense - 1.0).abs() < 1e-2,
                "{name}: {} vs {dense}",
                v.value
            );
        }
    }

    #[test]
    fn constant_shell_ratio() {
        let t2 = catalog_get("T2").unwrap();
        let cfg = EigenConfig {
            p: 6.0,
            shells: vec![int(0), int(25)],
            trials: 2,
            seed: 1,
            mc_points: 1000,
            res: Some(80),
        };
        let tab = eigenfunction_lp_scan(&t2, &cfg).unwrap();
        let vol = t2.volume();
        for r in tab.rows.iter().filter(|r| r.aux.as_deref() == Some("0")) {
            assert!((r.ratio - vol.powf(1.0 / 6.0 - 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_shell_is_skipped() {
        let t2 = catalog_get("T2").unwrap();
        let cfg = EigenConfig {
            p: 6.0,
            shells: vec![int(1), int(3), int(4)],
            trials: 1,
            seed: 1,
            mc_points: 100,
            res: Some(40),
        };
        let tab = eigenfunction_lp_scan(&t2, &cfg).unwrap();
        assert!(tab.summary.warnings.iter().any(|w| w.contains("n=3")));
        assert_eq!(tab.rows.len(), 2);
    }

    #[test]
    fn sub_admissible_flag() {
        let t1 = catalog_get("T1").unwrap();
        let cfg = StriConfig {
            p: 4.0,
            n_list: vec![2.0, 4.0],
            trials: 1,
            seed: 0,
            ensemble: Ensemble::Gaussian,
            n_atoms: None,
            res: None,
            t_samples: None,
            mc_points: 0,
        };
        let tab = strichartz_scan(&t1, &cfg).unwrap();
        assert!(tab.summary.warnings[0].contains("sub-admissible"));
        assert!(tab.csv_body().starts_with("N,trial,norm"));
        let cfg = StriConfig { p: 12.0, ..cfg };
        assert!(strichartz_scan(&t1, &cfg)
            .unwrap()
            .summary
            .warnings
            .is_empty());
    }

    #[test]
    fn shell_state_is_an_eigenfunction() {
        let t2 = catalog_get("T2").unwrap();
        let s = random_shell_state(&t2, int(25), &mut rng(0)).unwrap();
        assert_eq!(s.atoms.len(), 12);
        let x = sample_point(&t2, &mut rng(1));
        let t = 0.37;
        let ratio = s.evolve(t).eval(&x) / s.eval(&x);
        assert!((ratio - Complex64::from_polar(1.0, -t * 25.0)).norm() < 1e-10);
    }
}

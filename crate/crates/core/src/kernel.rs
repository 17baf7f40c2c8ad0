//! The mollified Schrödinger kernel
//!
//! ```text
//! 𝒦_N(t, x) = Σ_λ φ(|λ|_ρ / N) e^{-it|λ|²_ρ} d_λ φ_λ(x)
//! ```
//!
//! as an explicit exponential sum, its location on the Farey dissection of
//! the time circle, and scans of `sup_x |𝒦_N|` against the major-arc bound
//! `N^d / (√q (1 + N‖t/𝒯 - a/q‖^{1/2}))^r`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::farey::{arc_containing, farey_arcs, refine_cells};
use crate::rational::{dist_to_int, frac, int, to_f64, Rational};
use crate::space::{DominantWeight, Factor, SpaceDescriptor};
use crate::spherical::{gegenbauer_table, phi_zonal, ZonalPoint};

/// The fixed smooth dyadic cutoff.
///
/// With `g(s) = e^{-1/s}` for `s > 0`, `χ(y) = g(2-|y|)/(g(2-|y|) + g(|y|-1))`
/// (so `χ = 1` on `[-1, 1]`, `0` outside `(-2, 2)`), the pieces are
/// `φ(y) = χ(y) - χ(2y)` and `φ₀(y) = χ(2y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpSpec {
    pub support: (f64, f64),
    pub plateau: (f64, f64),
}

impl Default for BumpSpec {
    fn default() -> Self {
        Self {
            support: (0.5, 2.0),
            plateau: (1.0, 1.0),
        }
    }
}

fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl BumpSpec {
    pub fn chi(&self, y: f64) -> f64 {
        let y = y.abs();
        if y <= 1.0 {
            1.0
        } else if y >= 2.0 {
            0.0
        } else {
            let a = g(2.0 - y);
            a / (a + g(y - 1.0))
        }
    }

    pub fn phi(&self, y: f64) -> f64 {
        self.chi(y) - self.chi(2.0 * y)
    }

    pub fn phi0(&self, y: f64) -> f64 {
        self.chi(2.0 * y)
    }
}

/// One term `coef · e^{-2πi s m} φ_λ(x)` of the kernel, `s = t/𝒯`.
#[derive(Clone, Debug)]
pub struct KernelTerm {
    pub weight: DominantWeight,
    /// `period · |λ|²_ρ`.
    pub m: i64,
    /// `φ(|λ|_ρ/N) · d_λ`.
    pub coef: f64,
}

pub fn kernel_terms(space: &SpaceDescriptor, n: f64, bump: &BumpSpec) -> Vec<KernelTerm> {
    space
        .weights_below(bump.support.1 * n)
        .into_iter()
        .filter_map(|w| {
            let s = to_f64(&space.spec_norm_sq_unchecked(&w));
            let c = bump.phi(s.sqrt() / n);
            if c == 0.0 {
                return None;
            }
            let d = space.dim_weight(&w).expect("dominant") as f64;
            Some(KernelTerm {
                m: space.spectral_index(&w),
                coef: c * d,
                weight: w,
            })
        })
        .collect()
}

/// `e^{-2πi s m}` with `s·m` reduced exactly.
pub fn phase(s: &Rational, m: i64) -> Complex64 {
    let num = (*s.numer() as i128 * m as i128).rem_euclid(*s.denom() as i128);
    Complex64::from_polar(1.0, -2.0 * PI * num as f64 / *s.denom() as f64)
}

#[derive(Clone, Debug)]
pub struct KernelSample {
    pub t: f64,
    pub x: ZonalPoint,
    pub value: Complex64,
    pub modulus: f64,
}

/// `𝒦_N(t, x)` at real time `t`.
pub fn kernel_eval(
    space: &SpaceDescriptor,
    n: f64,
    bump: &BumpSpec,
    t: f64,
    x: &ZonalPoint,
) -> Result<Complex64> {
    x.validate(space)?;
    let s = t / space.time_period();
    let s = s - s.floor();
    let mut acc = Complex64::zero();
    for term in kernel_terms(space, n, bump) {
        let arg = (s * term.m as f64).fract();
        acc +=
            Complex64::from_polar(term.coef, -2.0 * PI * arg) * phi_zonal(space, &term.weight, x)?;
    }
    Ok(acc)
}

/// `𝒦_N` at the rational time fraction `s = t/𝒯`.
pub fn kernel_eval_frac(
    space: &SpaceDescriptor,
    n: f64,
    bump: &BumpSpec,
    s: &Rational,
    x: &ZonalPoint,
) -> Result<KernelSample> {
    x.validate(space)?;
    let mut acc = Complex64::zero();
    for term in kernel_terms(space, n, bump) {
        acc += phase(s, term.m) * term.coef * phi_zonal(space, &term.weight, x)?;
    }
    Ok(KernelSample {
        t: to_f64(s) * space.time_period(),
        x: x.clone(),
        value: acc,
        modulus: acc.norm(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorArcTag {
    pub a: i64,
    pub q: i64,
    pub big_q: i64,
    pub l: i64,
    /// `‖s - a/q‖`, exact.
    pub dist: Rational,
}

/// Farey arc of order `N` containing `s`, with the dyadic cell level.
pub fn major_arc_locate(s: Rational, n: i64) -> Result<MajorArcTag> {
    if n < 2 {
        return Err(Error::domain("major arc location needs N ≥ 2"));
    }
    let s = s - s.floor();
    let arc = arc_containing(s, n);
    let cell = refine_cells(&arc, n)
        .into_iter()
        .find(|c| c.contains(s))
        .expect("cells tile the arc");
    Ok(MajorArcTag {
        a: arc.center.a,
        q: arc.center.q,
        big_q: cell.big_q,
        l: cell.l,
        dist: dist_to_int(&(s - arc.center.value())),
    })
}

pub fn major_arc_locate_f64(t_frac: f64, n: i64) -> Result<MajorArcTag> {
    major_arc_locate(
        crate::rational::approximate(t_frac.rem_euclid(1.0), 1 << 40),
        n,
    )
}

/// `N^d / (√q (1 + N‖s - a/q‖^{1/2}))^r`.
pub fn dispersive_rhs(space: &SpaceDescriptor, n: f64, tag: &MajorArcTag) -> Result<f64> {
    if tag.q as f64 >= n {
        return Err(Error::domain(format!("q = {} is not below N = {n}", tag.q)));
    }
    let denom = (tag.q as f64).sqrt() * (1.0 + n * to_f64(&tag.dist).sqrt());
    Ok(n.powi(space.dim as i32) / denom.powi(space.rank as i32))
}

/// `Σ_{|m| ≤ N} 1/max(1/N, ‖m·s + h‖)²`.
pub fn weyl_denominator_sum(n: i64, s: &Rational, h: &Rational) -> f64 {
    let floor = frac(1, n);
    (-n..=n)
        .map(|m| {
            let d = dist_to_int(&(s * int(m) + h)).max(floor);
            1.0 / to_f64(&(d * d))
        })
        .sum()
}

/// `N³ / (√q (1 + N‖s - a/q‖^{1/2}))²`.
pub fn weyl_denominator_bound(n: i64, tag: &MajorArcTag) -> f64 {
    let nf = n as f64;
    let den = (tag.q as f64).sqrt() * (1.0 + nf * to_f64(&tag.dist).sqrt());
    nf.powi(3) / (den * den)
}

// ---------------------------------------------------------------------------
// zonal profiles

/// Grid on the zonal profile: `K` angles per torus coordinate on `[0, 2π)`,
/// `K` polar angles on `[0, π]` per sphere factor.
struct Profile {
    axes: Vec<Axis>,
    plan_cache: Vec<Option<std::sync::Arc<dyn rustfft::Fft<f64>>>>,
}

enum Axis {
    Torus {
        size: usize,
    },
    Sphere {
        table: Vec<f64>,
        degrees: usize,
        size: usize,
    },
}

impl Axis {
    fn in_len(&self) -> usize {
        match self {
            Axis::Torus { size } => *size,
            Axis::Sphere { degrees, .. } => *degrees,
        }
    }

    fn out_len(&self) -> usize {
        match self {
            Axis::Torus { size } => *size,
            Axis::Sphere { size, .. } => *size,
        }
    }
}

impl Profile {
    fn new(space: &SpaceDescriptor, terms: &[KernelTerm], samples: usize) -> Self {
        let mut axes = Vec::new();
        for slot in &space.factors {
            match &slot.factor {
                Factor::Torus { gram } => {
                    for i in 0..gram.len() {
                        let kmax = terms
                            .iter()
                            .map(|t| t.weight.coords[slot.offset + i].abs())
                            .max()
                            .unwrap_or(0);
                        axes.push(Axis::Torus {
                            size: samples.max(2 * kmax as usize + 1),
                        });
                    }
                }
                Factor::Sphere { d } => {
                    let degrees = terms
                        .iter()
                        .map(|t| t.weight.coords[slot.offset])
                        .max()
                        .unwrap_or(0) as usize
                        + 1;
                    let size = samples.max(2);
                    let mut table = vec![0.0; degrees * size];
                    let mut col = vec![0.0; degrees];
                    for gi in 0..size {
                        let th = PI * gi as f64 / (size - 1) as f64;
                        gegenbauer_table(*d, th.cos(), &mut col);
                        for n in 0..degrees {
                            table[n * size + gi] = col[n];
                        }
                    }
                    axes.push(Axis::Sphere {
                        table,
                        degrees,
                        size,
                    });
                }
            }
        }
        let mut planner = FftPlanner::new();
        let plan_cache = axes
            .iter()
            .map(|a| match a {
                Axis::Torus { size } => Some(planner.plan_fft(*size, FftDirection::Inverse)),
                _ => None,
            })
            .collect();
        Self { axes, plan_cache }
    }

    fn in_index(&self, w: &DominantWeight) -> usize {
        let mut idx = 0;
        for (axis, &c) in self.axes.iter().zip(&w.coords) {
            let i = match axis {
                Axis::Torus { size } => c.rem_euclid(*size as i64) as usize,
                Axis::Sphere { .. } => c as usize,
            };
            idx = idx * axis.in_len() + i;
        }
        idx
    }

    fn in_size(&self) -> usize {
        self.axes.iter().map(|a| a.in_len()).product()
    }

    /// Transforms coefficient array (row-major over axes) to profile values.
    fn transform(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        let mut shape: Vec<usize> = self.axes.iter().map(|a| a.in_len()).collect();
        for (ax, axis) in self.axes.iter().enumerate() {
            let outer: usize = shape[..ax].iter().product();
            let inner: usize = shape[ax + 1..].iter().product();
            let n_in = shape[ax];
            let n_out = axis.out_len();
            match axis {
                Axis::Torus { .. } => {
                    let fft = self.plan_cache[ax].as_ref().unwrap();
                    let mut line = vec![Complex64::zero(); n_in];
                    let mut scratch = vec![Complex64::zero(); fft.get_inplace_scratch_len()];
                    for o in 0..outer {
                        for i in 0..inner {
                            let mut nonzero = false;
                            for k in 0..n_in {
                                line[k] = data[(o * n_in + k) * inner + i];
                                nonzero |= line[k] != Complex64::zero();
                            }
                            if !nonzero {
                                continue;
                            }
                            fft.process_with_scratch(&mut line, &mut scratch);
                            for k in 0..n_in {
                                data[(o * n_in + k) * inner + i] = line[k];
                            }
                        }
                    }
                }
                Axis::Sphere { table, .. } => {
                    let mut out = vec![Complex64::zero(); outer * n_out * inner];
                    for o in 0..outer {
                        for n in 0..n_in {
                            let row = &table[n * n_out..(n + 1) * n_out];
                            for i in 0..inner {
                                let v = data[(o * n_in + n) * inner + i];
                                if v == Complex64::zero() {
                                    continue;
                                }
                                for (gi, &tv) in row.iter().enumerate() {
                                    out[(o * n_out + gi) * inner + i] += v * tv;
                                }
                            }
                        }
                    }
                    data = out;
                }
            }
            shape[ax] = n_out;
        }
        data
    }
}

/// `sup` of `|𝒦_N(s, ·)|` over the zonal profile grid for each `s`.
pub fn kernel_profile_sup(
    space: &SpaceDescriptor,
    terms: &[KernelTerm],
    samples: usize,
    times: &[Rational],
) -> Vec<f64> {
    let profile = Profile::new(space, terms, samples);
    // group terms by spectral index
    let mut groups: BTreeMap<i64, Vec<(usize, f64)>> = BTreeMap::new();
    for t in terms {
        groups
            .entry(t.m)
            .or_default()
            .push((profile.in_index(&t.weight), t.coef));
    }
    let groups: Vec<(i64, Vec<(usize, f64)>)> = groups.into_iter().collect();
    let size = profile.in_size();
    times
        .par_iter()
        .map(|s| {
            let mut data = vec![Complex64::zero(); size];
            for (m, members) in &groups {
                let ph = phase(s, *m);
                for &(idx, c) in members {
                    data[idx] += ph * c;
                }
            }
            profile
                .transform(data)
                .iter()
                .map(|v| v.norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct KernelRow {
    pub s: Rational,
    pub t: f64,
    pub tag: MajorArcTag,
    pub sup_mod: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct KernelScan {
    pub space: String,
    pub n: i64,
    pub t_samples: usize,
    pub x_samples: usize,
    pub rows: Vec<KernelRow>,
    pub c_of_n: f64,
    pub argmax_t: f64,
}

/// Time fractions sampled by the scan: the uniform grid `j/M`, every Farey
/// center with `q < N`, every cell boundary, and equispaced points in any
/// cell that would otherwise hold fewer than 16 samples.
pub fn scan_times(n: i64, t_samples: usize) -> Vec<Rational> {
    let m = t_samples as i64;
    let mut set: Vec<Rational> = (0..m).map(|j| frac(j, m)).collect();
    for arc in farey_arcs(n) {
        if arc.center.q >= n {
            continue;
        }
        set.push(arc.center.value());
        for cell in refine_cells(&arc, n) {
            let mut inside = 0;
            for (a, b) in &cell.intervals {
                set.push(*a);
                // grid points j/M in [a, b)
                let lo = (a * int(m)).ceil().to_integer();
                let hi = (b * int(m)).ceil().to_integer();
                inside += (hi - lo).max(0);
            }
            if inside >= MIN_CELL_SAMPLES {
                continue;
            }
            let total = cell.measure();
            for (a, b) in &cell.intervals {
                let k = ((b - a) / total * int(MIN_CELL_SAMPLES))
                    .ceil()
                    .to_integer()
                    .max(1);
                set.extend((0..k).map(|j| a + (b - a) * frac(j, k)));
            }
        }
    }
    set.sort();
    set.dedup();
    set
}

const MIN_CELL_SAMPLES: i64 = 16;

pub fn kernel_bound_scan(
    space: &SpaceDescriptor,
    n: i64,
    bump: &BumpSpec,
    t_samples: usize,
    x_samples: usize,
) -> Result<KernelScan> {
    if n < 2 {
        return Err(Error::domain("kernel scan needs N ≥ 2"));
    }
    let period = space.period().to_integer() as usize;
    let t_floor = 8 * (n * n) as usize * period;
    let x_floor = 8 * n as usize;
    if t_samples < t_floor || x_samples < x_floor {
        return Err(Error::resolution(
            format!("kernel scan at N={n} with t_samples={t_samples}, x_samples={x_samples}"),
            format!("t_samples={t_floor} x_samples={x_floor}"),
        ));
    }
    let terms = kernel_terms(space, n as f64, bump);
    let times = scan_times(n, t_samples);
    // |𝒦(-t, x)| = |𝒦(t, ±x)|, so only s ≤ 1/2 is computed
    let half = frac(1, 2);
    let mut distinct: Vec<Rational> = times
        .iter()
        .map(|s| if *s > half { int(1) - s } else { *s })
        .collect();
    distinct.sort();
    distinct.dedup();
    let sups = kernel_profile_sup(space, &terms, x_samples, &distinct);
    let lookup: BTreeMap<Rational, f64> = distinct.into_iter().zip(sups).collect();
    let tp = space.time_period();
    let mut rows = Vec::new();
    for s in times {
        let tag = major_arc_locate(s, n)?;
        if tag.q >= n {
            continue;
        }
        let key = if s > half { int(1) - s } else { s };
        let sup_mod = lookup[&key];
        let rhs = dispersive_rhs(space, n as f64, &tag)?;
        rows.push(KernelRow {
            t: to_f64(&s) * tp,
            s,
            tag,
            sup_mod,
            rhs,
            ratio: sup_mod / rhs,
        });
    }
    let (c_of_n, argmax_t) = rows.iter().fold((0.0, 0.0), |best, r| {
        if r.ratio > best.0 {
            (r.ratio, r.t)
        } else {
            best
        }
    });
    Ok(KernelScan {
        space: space.name.clone(),
        n,
        t_samples,
        x_samples,
        rows,
        c_of_n,
        argmax_t,
    })
}

/// `(1/𝒯)∫₀^𝒯 ∫_M |𝒦_N|²` by space-time quadrature, and the same quantity
/// from the weight sum `vol · Σ φ(|λ|_ρ/N)² d_λ`.
#[derive(Clone, Copy, Debug)]
pub struct ParsevalCheck {
    pub quadrature: f64,
    pub exact: f64,
    pub rel_error: f64,
}

pub fn kernel_parseval(space: &SpaceDescriptor, n: f64, bump: &BumpSpec) -> Result<ParsevalCheck> {
    use crate::field::{Field, Term};
    use crate::quadrature::{base_point, product_rule};
    let terms = kernel_terms(space, n, bump);
    let vol = space.volume();
    let exact: f64 = terms
        .iter()
        .map(|t| {
            let d = space.dim_weight(&t.weight).unwrap() as f64;
            (t.coef / d).powi(2) * d * vol
        })
        .sum();
    let max_coord = terms
        .iter()
        .flat_map(|t| t.weight.coords.iter().map(|c| c.unsigned_abs() as usize))
        .max()
        .unwrap_or(0);
    let rule = product_rule(space, 2 * max_coord + 2)
        .ok_or_else(|| Error::Precision(format!("no exact quadrature on {}", space.name)))?;
    let field = Field::new(
        space,
        vec![base_point(space)],
        terms
            .iter()
            .map(|t| Term {
                weight: t.weight.clone(),
                m: t.m,
                coef: Complex64::new(t.coef, 0.0),
                center: 0,
            })
            .collect(),
    );
    let span = field.m_span();
    let m_time = (2 * span + 2).next_power_of_two();
    let quad = field.time_power_integral(&rule, m_time, 2.0).value;
    Ok(ParsevalCheck {
        quadrature: quad,
        exact,
        rel_error: (quad - exact).abs() / exact,
    })
}

//! Spherical functions on catalog spaces.
//!
//! On `S^d` the spherical function of degree `n` is the Gegenbauer
//! polynomial normalized to `1` at the pole; on a torus it is the
//! character `e^{iξ·x}`. Products multiply factorwise.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Ellipsoid;
use crate::quadrature::{ambient_layout, product_rule, Rule};
use crate::rational::to_f64;
use crate::space::{DominantWeight, Factor, SpaceDescriptor};

/// Radial coordinates of a point relative to the base point: one polar
/// angle per sphere factor, one angle per torus coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonalPoint {
    pub angles: Vec<f64>,
}

impl ZonalPoint {
    pub fn new(angles: Vec<f64>) -> Self {
        Self { angles }
    }

    pub fn identity(space: &SpaceDescriptor) -> Self {
        Self {
            angles: vec![0.0; space.rank],
        }
    }

    pub fn validate(&self, space: &SpaceDescriptor) -> Result<()> {
        if self.angles.len() != space.rank {
            return Err(Error::domain(format!(
                "zonal point has {} angles, space {} has rank {}",
                self.angles.len(),
                space.name,
                space.rank
            )));
        }
        for (i, &a) in self.angles.iter().enumerate() {
            if !a.is_finite() || (!space.coordinate_is_signed(i) && !(0.0..=PI).contains(&a)) {
                return Err(Error::domain(format!("polar angle {a} outside [0, π]")));
            }
        }
        Ok(())
    }
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> f64 {
    gegenbauer(2, n, x)
}

/// Normalized Gegenbauer polynomial of `S^d`, `R_n(1) = 1`.
pub fn gegenbauer(d: usize, n: usize, x: f64) -> f64 {
    let mut out = vec![0.0; n + 1];
    gegenbauer_table(d, x, &mut out);
    out[n]
}

/// Fills `out[k] = R_k(x)` for `k < out.len()`.
pub fn gegenbauer_table(d: usize, x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    let alpha = (d as f64 - 1.0) / 2.0;
    for n in 2..out.len() {
        let nf = n as f64;
        out[n] = (2.0 * (nf + alpha - 1.0) * x * out[n - 1] - (nf - 1.0) * out[n - 2])
            / (nf + 2.0 * alpha - 1.0);
    }
}

/// `φ_λ` at a zonal point.
pub fn phi_zonal(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    x: &ZonalPoint,
) -> Result<Complex64> {
    space.check_weight(lambda)?;
    x.validate(space)?;
    let mut v = Complex64::new(1.0, 0.0);
    for slot in &space.factors {
        let o = slot.offset;
        match &slot.factor {
            Factor::Torus { gram } => {
                let phase: f64 = (0..gram.len())
                    .map(|i| lambda.coords[o + i] as f64 * x.angles[o + i])
                    .sum();
                v *= Complex64::from_polar(1.0, phase);
            }
            Factor::Sphere { d } => {
                v *= gegenbauer(*d, lambda.coords[o] as usize, x.angles[o].cos());
            }
        }
    }
    Ok(v)
}

/// `φ_λ` evaluated at ambient point `x` for the translate centered at `c`.
pub fn atom_profile(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    x: &[f64],
    c: &[f64],
) -> Complex64 {
    let (offs, _) = ambient_layout(space);
    let mut v = Complex64::new(1.0, 0.0);
    for (slot, &ao) in space.factors.iter().zip(&offs) {
        let o = slot.offset;
        match &slot.factor {
            Factor::Torus { gram } => {
                let phase: f64 = (0..gram.len())
                    .map(|i| lambda.coords[o + i] as f64 * (x[ao + i] - c[ao + i]))
                    .sum();
                v *= Complex64::from_polar(1.0, phase);
            }
            Factor::Sphere { d } => {
                let dot: f64 = (0..=*d).map(|i| x[ao + i] * c[ao + i]).sum();
                v *= gegenbauer(*d, lambda.coords[o] as usize, dot.clamp(-1.0, 1.0));
            }
        }
    }
    v
}

#[derive(Clone, Copy, Debug)]
pub struct LaplaceValue {
    pub value: Complex64,
    pub quad_points: usize,
    /// Set when `quad_points < 4(n+1)`.
    pub under_resolved: bool,
}

/// `(1/2π) ∫₀^{2π} (cos 2θ + i sin 2θ cos 2t)^n dt` by the trapezoid rule,
/// which reproduces `P_n(cos 2θ)`.
pub fn phi_laplace_integral(n: usize, theta: f64, quad_points: usize) -> LaplaceValue {
    let m = quad_points.max(1);
    let (c, s) = ((2.0 * theta).cos(), (2.0 * theta).sin());
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let t = 2.0 * PI * j as f64 / m as f64;
        acc += Complex64::new(c, s * (2.0 * t).cos()).powu(n as u32);
    }
    LaplaceValue {
        value: acc / m as f64,
        quad_points: m,
        under_resolved: quad_points < 4 * (n + 1),
    }
}

/// Predicted Fourier support of `φ_λ·φ_μ`: all dominant `λ+ξ` with
/// `|ξ+ρ₀| ≤ |μ+ρ₀|`, ordered.
pub fn product_support(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    mu: &DominantWeight,
) -> Result<Vec<DominantWeight>> {
    space.check_weight(lambda)?;
    space.check_weight(mu)?;
    let bound = to_f64(&space.rho0_norm_sq(&mu.coords));
    let g = space.gram_f64();
    let center: Vec<f64> = space.rho0.iter().map(|r| -to_f64(r)).collect();
    let lower: Vec<Option<i64>> = (0..space.rank)
        .map(|i| {
            if space.coordinate_is_signed(i) {
                None
            } else {
                Some(-lambda.coords[i])
            }
        })
        .collect();
    let e = Ellipsoid::new(&g, center, bound).with_lower_bounds(lower);
    let exact_bound = space.rho0_norm_sq(&mu.coords);
    let mut out = BTreeSet::new();
    e.for_each(|xi| {
        if space.rho0_norm_sq(xi) <= exact_bound {
            let nu: Vec<i64> = lambda.coords.iter().zip(xi).map(|(a, b)| a + b).collect();
            out.insert(DominantWeight::new(nu));
        }
    });
    Ok(out.into_iter().collect())
}

/// Sampled function on the nodes of a quadrature rule.
pub struct Sampled<'a> {
    pub rule: &'a Rule,
    pub values: Vec<Complex64>,
}

impl<'a> Sampled<'a> {
    pub fn new(rule: &'a Rule, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..rule.len()).map(|i| f(rule.point(i))).collect();
        Self { rule, values }
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.rule.weights)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `P_λ f = d_λ f ∗ φ_λ`, returned on the same nodes.
pub fn projector_apply(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    f: &Sampled<'_>,
) -> Result<Vec<Complex64>> {
    let d = space.dim_weight(lambda)? as f64;
    let vol = space.volume();
    let rule = f.rule;
    let out = (0..rule.len())
        .map(|i| {
            let x = rule.point(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..rule.len() {
                acc +=
                    f.values[j] * rule.weights[j] * atom_profile(space, lambda, x, rule.point(j));
            }
            acc * d / vol
        })
        .collect();
    Ok(out)
}

/// `‖P_λ f‖_{L²}` by quadrature of the projected values.
pub fn projection_norm(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    f: &Sampled<'_>,
) -> Result<f64> {
    let pf = projector_apply(space, lambda, f)?;
    Ok(Sampled {
        rule: f.rule,
        values: pf,
    }
    .l2_norm())
}

/// One detected eigenspace component of a product.
#[derive(Clone, Debug)]
pub struct SupportRow {
    pub nu: DominantWeight,
    pub projection_norm: f64,
    pub in_predicted: bool,
}

/// Projects `φ_λ(·; c₁)·φ_μ(·; c₂)` onto every `ν` with coordinates up to
/// `nu_max` and compares with [`product_support`].
pub fn support_check(
    space: &SpaceDescriptor,
    lambda: &DominantWeight,
    mu: &DominantWeight,
    c1: &[f64],
    c2: &[f64],
    nu_max: i64,
) -> Result<Vec<SupportRow>> {
    let predicted: BTreeSet<DominantWeight> =
        product_support(space, lambda, mu)?.into_iter().collect();
    let deg = lambda
        .coords
        .iter()
        .chain(&mu.coords)
        .map(|c| c.abs())
        .sum::<i64>() as usize;
    let res = 2 * (deg + nu_max as usize) + 2;
    let rule = product_rule(space, res)
        .ok_or_else(|| Error::Precision(format!("no exact quadrature on {}", space.name)))?;
    let f = Sampled::new(&rule, |x| {
        atom_profile(space, lambda, x, c1) * atom_profile(space, mu, x, c2)
    });
    let mut rows = Vec::new();
    for nu in candidate_weights(space, nu_max) {
        let norm = projection_norm(space, &nu, &f)?;
        rows.push(SupportRow {
            in_predicted: predicted.contains(&nu),
            nu,
            projection_norm: norm,
        });
    }
    Ok(rows)
}

fn candidate_weights(space: &SpaceDescriptor, cap: i64) -> Vec<DominantWeight> {
    let lo: Vec<i64> = (0..space.rank)
        .map(|i| {
            if space.coordinate_is_signed(i) {
                -cap
            } else {
                0
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut cur = lo.clone();
    loop {
        out.push(DominantWeight::new(cur.clone()));
        let mut i = 0;
        loop {
            if i == space.rank {
                return out;
            }
            if cur[i] < cap {
                cur[i] += 1;
                break;
            }
            cur[i] = lo[i];
            i += 1;
        }
    }
}

/// Radial Laplacian of `θ ↦ R_n(cos θ)` on `S^d` by a fourth-order stencil
/// on `res` intervals of `[0, π]`, returning `(θ, Δf, f)` at interior nodes.
pub fn sphere_radial_laplacian(d: usize, n: usize, res: usize) -> Vec<(f64, f64, f64)> {
    let h = PI / res as f64;
    let f = |t: f64| gegenbauer(d, n, t.cos());
    let mut out = Vec::new();
    for k in 2..res - 1 {
        let t = k as f64 * h;
        let (fm2, fm1, f0, fp1, fp2) = (f(t - 2.0 * h), f(t - h), f(t), f(t + h), f(t + 2.0 * h));
        let d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h);
        let d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h);
        let lap = d2 + (d as f64 - 1.0) * t.cos() / t.sin() * d1;
        out.push((t, lap, f0));
    }
    out
}

//! Spatial integration rules on catalog spaces.
//!
//! Points are stored in an ambient layout: a torus factor of rank `r`
//! contributes its `r` angles, a sphere factor `S^d` contributes a unit
//! vector in `ℝ^{d+1}`. Weights sum to the Riemannian volume.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::space::{Factor, SpaceDescriptor};

/// Number of ambient coordinates a factor occupies.
pub fn ambient_len(f: &Factor) -> usize {
    match f {
        Factor::Torus { gram } => gram.len(),
        Factor::Sphere { d } => d + 1,
    }
}

/// Ambient offsets of each factor, plus the total length.
pub fn ambient_layout(space: &SpaceDescriptor) -> (Vec<usize>, usize) {
    let mut offs = Vec::with_capacity(space.factors.len());
    let mut acc = 0;
    for s in &space.factors {
        offs.push(acc);
        acc += ambient_len(&s.factor);
    }
    (offs, acc)
}

/// The identity coset: zero angles, north pole `e_{d}` on spheres.
pub fn base_point(space: &SpaceDescriptor) -> Vec<f64> {
    let (offs, len) = ambient_layout(space);
    let mut p = vec![0.0; len];
    for (s, &o) in space.factors.iter().zip(&offs) {
        if let Factor::Sphere { d } = s.factor {
            p[o + d] = 1.0;
        }
    }
    p
}

#[derive(Clone, Debug)]
pub struct Rule {
    pub stride: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// False for Monte Carlo rules.
    pub exact: bool,
    pub label: String,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.stride..(i + 1) * self.stride]
    }

    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        (0..self.len())
            .map(|i| self.weights[i] * f(self.point(i)))
            .sum()
    }

    fn tensor(&self, other: &Rule) -> Rule {
        let stride = self.stride + other.stride;
        let mut points = Vec::with_capacity(self.len() * other.len() * stride);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for i in 0..self.len() {
            for j in 0..other.len() {
                points.extend_from_slice(self.point(i));
                points.extend_from_slice(other.point(j));
                weights.push(self.weights[i] * other.weights[j]);
            }
        }
        Rule {
            stride,
            points,
            weights,
            exact: self.exact && other.exact,
            label: format!("{}⊗{}", self.label, other.label),
        }
    }
}

pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    rule.as_node_weight_pairs().iter().cloned().unzip()
}

/// Uniform grid of `k^r` points on a rank-`r` torus.
pub fn torus_grid(gram_vol: f64, r: usize, k: usize) -> Rule {
    let total = k.pow(r as u32);
    let mut points = Vec::with_capacity(total * r);
    for idx in 0..total {
        let mut rem = idx;
        let mut coords = vec![0.0; r];
        for c in coords.iter_mut().rev() {
            *c = 2.0 * PI * (rem % k) as f64 / k as f64;
            rem /= k;
        }
        points.extend(coords);
    }
    Rule {
        stride: r,
        points,
        weights: vec![gram_vol / total as f64; total],
        exact: true,
        label: format!("torus{r}[{k}]"),
    }
}

/// Gauss–Legendre in `cos θ` times uniform azimuth; exact for polynomials
/// of degree `< min(2·n_gl, n_az)`.
pub fn s2_rule(n_gl: usize, n_az: usize) -> Rule {
    let (nodes, wts) = gauss_legendre(n_gl);
    let mut points = Vec::with_capacity(n_gl * n_az * 3);
    let mut weights = Vec::with_capacity(n_gl * n_az);
    for (z, w) in nodes.iter().zip(&wts) {
        let s = (1.0 - z * z).max(0.0).sqrt();
        for j in 0..n_az {
            let phi = 2.0 * PI * j as f64 / n_az as f64;
            points.extend([s * phi.cos(), s * phi.sin(), *z]);
            weights.push(w * 2.0 * PI / n_az as f64);
        }
    }
    Rule {
        stride: 3,
        points,
        weights,
        exact: true,
        label: format!("S2[gl{n_gl}×az{n_az}]"),
    }
}

/// Hopf coordinates `(√(1-u)e^{iα}, √u e^{iβ})` with Gauss–Legendre in
/// `u ∈ [0,1]`; exact for polynomials of degree `< min(4·n_gl, n_az)`.
pub fn s3_rule(n_gl: usize, n_az: usize) -> Rule {
    let (nodes, wts) = gauss_legendre(n_gl);
    let mut points = Vec::with_capacity(n_gl * n_az * n_az * 4);
    let mut weights = Vec::with_capacity(n_gl * n_az * n_az);
    let daz = 2.0 * PI / n_az as f64;
    for (x, w) in nodes.iter().zip(&wts) {
        let u = 0.5 * (x + 1.0);
        let (a, b) = ((1.0 - u).sqrt(), u.sqrt());
        // ∫ = ½ ∫du dα dβ, and du = ½ dx
        let wu = 0.25 * w * daz * daz;
        for i in 0..n_az {
            let al = i as f64 * daz;
            for j in 0..n_az {
                let be = j as f64 * daz;
                points.extend([a * al.cos(), a * al.sin(), b * be.cos(), b * be.sin()]);
                weights.push(wu);
            }
        }
    }
    Rule {
        stride: 4,
        points,
        weights,
        exact: true,
        label: format!("S3[gl{n_gl}×az{n_az}²]"),
    }
}

/// A uniformly random point on a factor, appended to `out`.
pub fn sample_factor(f: &Factor, rng: &mut impl Rng, out: &mut Vec<f64>) {
    match f {
        Factor::Torus { gram } => {
            for _ in 0..gram.len() {
                out.push(rng.random::<f64>() * 2.0 * PI);
            }
        }
        Factor::Sphere { d } => {
            let start = out.len();
            let mut norm = 0.0;
            for _ in 0..=*d {
                let g: f64 = StandardNormal.sample(rng);
                norm += g * g;
                out.push(g);
            }
            let norm = norm.sqrt();
            for v in &mut out[start..] {
                *v /= norm;
            }
        }
    }
}

pub fn sample_point(space: &SpaceDescriptor, rng: &mut impl Rng) -> Vec<f64> {
    let mut p = Vec::new();
    for s in &space.factors {
        sample_factor(&s.factor, rng, &mut p);
    }
    p
}

pub fn monte_carlo(space: &SpaceDescriptor, n: usize, rng: &mut impl Rng) -> Rule {
    let (_, stride) = ambient_layout(space);
    let mut points = Vec::with_capacity(n * stride);
    for _ in 0..n {
        points.extend(sample_point(space, rng));
    }
    Rule {
        stride,
        points,
        weights: vec![space.volume() / n as f64; n],
        exact: false,
        label: format!("mc[{n}]"),
    }
}

/// Exact product rule resolving polynomials of degree `< res` on every
/// factor, or `None` when some factor has no exact rule here (`S^d`, `d ≥ 4`).
pub fn product_rule(space: &SpaceDescriptor, res: usize) -> Option<Rule> {
    let mut acc: Option<Rule> = None;
    for s in &space.factors {
        let r = match &s.factor {
            Factor::Torus { gram } => torus_grid(s.factor.volume(), gram.len(), res),
            Factor::Sphere { d: 2 } => s2_rule(res.div_ceil(2), res),
            Factor::Sphere { d: 3 } => s3_rule(res.div_ceil(4), res),
            Factor::Sphere { .. } => return None,
        };
        acc = Some(match acc {
            None => r,
            Some(a) => a.tensor(&r),
        });
    }
    acc
}

/// Product quadrature up to total dimension 4, Monte Carlo beyond.
pub fn spatial_rule(
    space: &SpaceDescriptor,
    res: usize,
    mc_points: usize,
    rng: &mut impl Rng,
) -> Rule {
    if space.dim <= 4 {
        if let Some(r) = product_rule(space, res) {
            return r;
        }
    }
    monte_carlo(space, mc_points, rng)
}

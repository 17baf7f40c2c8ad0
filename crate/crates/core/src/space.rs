//! Catalog of compact globally symmetric spaces: rational tori, round
//! spheres, SU(2), and finite products of these.
//!
//! Every space carries exact rational spectral data. Writing a spectral
//! parameter as `λ = Σ n_j w_j` in the fundamental-weight basis,
//!
//! ```text
//! |λ|²_ρ = λᵀ G λ + bᵀ λ,        d_λ = scale · Π_k ℓ_k(λ)
//! ```
//!
//! where `G_ij = (w_i, w_j)`, `b_j = 2(w_j, ρ)` and the `ℓ_k` are linear
//! forms. Torus coordinates range over all of `ℤ`; sphere coordinates are
//! non-negative.
//!
//! Normalizations are the round/flat ones: `S^d` has `|n|²_ρ = n(n+d-1)`,
//! `SU2` is the unit 3-sphere (`n(n+2)`, `d_n = (n+1)²`), and a rational
//! torus with Gram matrix `G` has eigenvalue `ξᵀGξ` on `e^{iξ·x}`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Ellipsoid;
use crate::rational::{
    format_rational, frac, int, lcm_denominators, parse_rational, to_f64, Rational,
};

/// Spectral parameter in the fundamental-weight basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DominantWeight {
    pub coords: Vec<i64>,
}

impl DominantWeight {
    pub fn new(coords: Vec<i64>) -> Self {
        Self { coords }
    }

    pub fn zero(rank: usize) -> Self {
        Self {
            coords: vec![0; rank],
        }
    }

    pub fn rank(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .split([',', ';', ' '])
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("bad weight coordinate `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coords })
    }
}

impl fmt::Display for DominantWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Affine form `coeffs·λ + constant`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearForm {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl LinearForm {
    pub fn eval(&self, coords: &[Rational]) -> Rational {
        self.coeffs
            .iter()
            .zip(coords)
            .fold(self.constant, |acc, (c, x)| acc + c * x)
    }

    fn padded(&self, before: usize, after: usize) -> Self {
        let mut coeffs = vec![Rational::zero(); before];
        coeffs.extend(self.coeffs.iter().cloned());
        coeffs.extend(std::iter::repeat_n(Rational::zero(), after));
        Self {
            coeffs,
            constant: self.constant,
        }
    }
}

/// One irreducible (or flat) factor of a product space.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    /// Flat torus `ℝ^r / 2πℤ^r` whose spectrum on `e^{iξ·x}` is `ξᵀGξ`.
    Torus { gram: Vec<Vec<Rational>> },
    /// Round unit sphere `S^d`; `SU2` is recorded as `d = 3`.
    Sphere { d: usize },
}

impl Factor {
    pub fn rank(&self) -> usize {
        match self {
            Factor::Torus { gram } => gram.len(),
            Factor::Sphere { .. } => 1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Factor::Torus { gram } => gram.len(),
            Factor::Sphere { d } => *d,
        }
    }

    /// Riemannian volume in the catalog normalization.
    pub fn volume(&self) -> f64 {
        match self {
            Factor::Torus { gram } => {
                let g: Vec<Vec<f64>> = gram
                    .iter()
                    .map(|row| row.iter().map(to_f64).collect())
                    .collect();
                (2.0 * PI).powi(gram.len() as i32) / determinant(&g).sqrt()
            }
            Factor::Sphere { d } => sphere_volume(*d),
        }
    }
}

/// `2π^{(d+1)/2} / Γ((d+1)/2)`, computed by the two-step recurrence.
pub fn sphere_volume(d: usize) -> f64 {
    // |S^0| = 2, |S^1| = 2π, |S^d| = 2π/(d-1) |S^{d-2}|
    let mut vols = [2.0, 2.0 * PI];
    if d < 2 {
        return vols[d];
    }
    for k in 2..=d {
        let v = 2.0 * PI / (k as f64 - 1.0) * vols[k % 2];
        vols[k % 2] = v;
    }
    vols[d % 2]
}

fn determinant(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

fn solve(m: &[Vec<f64>], rhs: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .zip(rhs)
        .map(|(row, &b)| {
            let mut r = row.clone();
            r.push(b);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(pivot, col);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

/// Factor with the offset of its first coordinate in the product.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSlot {
    pub factor: Factor,
    pub offset: usize,
    pub token: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceDescriptor {
    pub name: String,
    pub rank: usize,
    pub dim: usize,
    pub gram: Vec<Vec<Rational>>,
    pub spec_linear: Vec<Rational>,
    /// `ρ₀ = Σ w_i` over the compact-type coordinates (zero on torus ones).
    pub rho0: Vec<Rational>,
    /// `2Gρ₀`, so that `|ξ+ρ₀|² = ξᵀGξ + shift·ξ + ρ₀ᵀGρ₀`.
    pub rho0_gram_shift: Vec<Rational>,
    pub dim_factors: Vec<LinearForm>,
    pub dim_scale: Rational,
    /// `𝒯/2π`.
    pub period: Rational,
    pub factors: Vec<FactorSlot>,
}

fn identity(r: usize) -> Vec<Vec<Rational>> {
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| {
                    if i == j {
                        Rational::one()
                    } else {
                        Rational::zero()
                    }
                })
                .collect()
        })
        .collect()
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// Smallest positive integer `p` with `p·|λ|²_ρ ∈ ℤ` and `p·2(w_j, λ+2ρ) ∈ ℤ`
/// for all integer `λ`: the lcm of the denominators of `2G_ii`, `G_ii+b_i`,
/// `2G_ij` and `2b_i`.
fn integral_period(gram: &[Vec<Rational>], linear: &[Rational]) -> Rational {
    let two = int(2);
    let mut data = Vec::new();
    for (i, row) in gram.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            data.push(two * g);
            if i == j {
                data.push(g + linear[i]);
            }
        }
    }
    data.extend(linear.iter().map(|b| two * b));
    int(lcm_denominators(data.iter()))
}

impl SpaceDescriptor {
    fn from_factor(token: &str, factor: Factor) -> Self {
        match &factor {
            Factor::Torus { gram } => {
                let r = gram.len();
                let linear = vec![Rational::zero(); r];
                let period = integral_period(gram, &linear);
                Self {
                    name: token.to_string(),
                    rank: r,
                    dim: r,
                    gram: gram.clone(),
                    spec_linear: linear.clone(),
                    rho0: linear.clone(),
                    rho0_gram_shift: linear,
                    dim_factors: Vec::new(),
                    dim_scale: Rational::one(),
                    period,
                    factors: vec![FactorSlot {
                        factor: factor.clone(),
                        offset: 0,
                        token: token.to_string(),
                    }],
                }
            }
            Factor::Sphere { d } => {
                let d = *d;
                let gram = identity(1);
                let linear = vec![int(d as i64 - 1)];
                // d_n = (2n+d-1)/(d-1) · Π_{k=1}^{d-2} (n+k)/k
                let mut dim_factors = vec![LinearForm {
                    coeffs: vec![int(2)],
                    constant: int(d as i64 - 1),
                }];
                for k in 1..=(d as i64 - 2) {
                    dim_factors.push(LinearForm {
                        coeffs: vec![int(1)],
                        constant: int(k),
                    });
                }
                let dim_scale = frac(1, factorial(d - 1));
                let period = integral_period(&gram, &linear);
                Self {
                    name: token.to_string(),
                    rank: 1,
                    dim: d,
                    gram,
                    spec_linear: linear,
                    rho0: vec![int(1)],
                    rho0_gram_shift: vec![int(2)],
                    dim_factors,
                    dim_scale,
                    period,
                    factors: vec![FactorSlot {
                        factor: factor.clone(),
                        offset: 0,
                        token: token.to_string(),
                    }],
                }
            }
        }
    }

    /// Flat torus with an arbitrary positive-definite rational Gram matrix.
    pub fn rational_torus(name: &str, gram: Vec<Vec<Rational>>) -> Result<Self> {
        let r = gram.len();
        if r == 0 || gram.iter().any(|row| row.len() != r) {
            return Err(Error::domain(
                "torus gram must be a non-empty square matrix",
            ));
        }
        for i in 0..r {
            for j in 0..r {
                if gram[i][j] != gram[j][i] {
                    return Err(Error::domain("torus gram must be symmetric"));
                }
            }
        }
        let f: Vec<Vec<f64>> = gram
            .iter()
            .map(|row| row.iter().map(to_f64).collect())
            .collect();
        if !Ellipsoid::new(&f, vec![0.0; r], 1.0).is_positive_definite() {
            return Err(Error::domain("torus gram must be positive definite"));
        }
        Ok(Self::from_factor(name, Factor::Torus { gram }))
    }

    pub fn time_period(&self) -> f64 {
        2.0 * PI * to_f64(&self.period)
    }

    pub fn volume(&self) -> f64 {
        self.factors.iter().map(|s| s.factor.volume()).product()
    }

    /// Torus coordinates may be negative; all others must be `≥ 0`.
    pub fn coordinate_is_signed(&self, i: usize) -> bool {
        self.factors.iter().any(|s| {
            matches!(s.factor, Factor::Torus { .. })
                && i >= s.offset
                && i < s.offset + s.factor.rank()
        })
    }

    pub fn lower_bounds(&self) -> Vec<Option<i64>> {
        (0..self.rank)
            .map(|i| {
                if self.coordinate_is_signed(i) {
                    None
                } else {
                    Some(0)
                }
            })
            .collect()
    }

    pub fn check_weight(&self, w: &DominantWeight) -> Result<()> {
        if w.rank() != self.rank {
            return Err(Error::domain(format!(
                "weight {w} has {} coordinates, space {} has rank {}",
                w.rank(),
                self.name,
                self.rank
            )));
        }
        for (i, &c) in w.coords.iter().enumerate() {
            if c < 0 && !self.coordinate_is_signed(i) {
                return Err(Error::domain(format!(
                    "weight {w} is not dominant (coordinate {i} is {c})"
                )));
            }
        }
        Ok(())
    }

    fn quadratic_value(&self, coords: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for i in 0..self.rank {
            for j in 0..self.rank {
                acc += coords[i] * self.gram[i][j] * coords[j];
            }
            acc += self.spec_linear[i] * coords[i];
        }
        acc
    }

    /// `|λ|²_ρ`, exact.
    pub fn spec_norm_sq(&self, w: &DominantWeight) -> Result<Rational> {
        self.check_weight(w)?;
        Ok(self.spec_norm_sq_unchecked(w))
    }

    pub(crate) fn spec_norm_sq_unchecked(&self, w: &DominantWeight) -> Rational {
        let coords: Vec<Rational> = w.coords.iter().map(|&c| int(c)).collect();
        self.quadratic_value(&coords)
    }

    /// Integer `period·|λ|²_ρ`: the frequency of `λ` on the time circle `ℝ/ℤ`.
    pub fn spectral_index(&self, w: &DominantWeight) -> i64 {
        let v = self.spec_norm_sq_unchecked(w) * self.period;
        debug_assert!(v.is_integer());
        v.to_integer()
    }

    /// Dimension polynomial evaluated at arbitrary rational coordinates.
    pub fn dim_poly_at(&self, coords: &[Rational]) -> Rational {
        self.dim_factors
            .iter()
            .fold(self.dim_scale, |acc, f| acc * f.eval(coords))
    }

    /// `d_λ`, exact.
    pub fn dim_weight(&self, w: &DominantWeight) -> Result<u64> {
        self.check_weight(w)?;
        let coords: Vec<Rational> = w.coords.iter().map(|&c| int(c)).collect();
        let v = self.dim_poly_at(&coords);
        if !v.is_integer() || !v.is_positive() {
            return Err(Error::domain(format!(
                "dimension polynomial gives {v} at {w}"
            )));
        }
        Ok(v.to_integer() as u64)
    }

    pub fn period(&self) -> Rational {
        self.period
    }

    /// `|ξ+ρ₀|²` for an arbitrary lattice vector `ξ`.
    pub fn rho0_norm_sq(&self, xi: &[i64]) -> Rational {
        let mut acc = Rational::zero();
        for i in 0..self.rank {
            for j in 0..self.rank {
                acc += int(xi[i]) * self.gram[i][j] * int(xi[j]);
                acc += self.rho0[i] * self.gram[i][j] * self.rho0[j];
            }
            acc += self.rho0_gram_shift[i] * int(xi[i]);
        }
        acc
    }

    pub(crate) fn gram_f64(&self) -> Vec<Vec<f64>> {
        self.gram
            .iter()
            .map(|row| row.iter().map(to_f64).collect())
            .collect()
    }

    /// Dominant weights with `|λ|²_ρ ≤ bound` (float pre-filter; callers
    /// apply exact tests), in deterministic order.
    pub(crate) fn weights_with_norm_sq_below(&self, bound: f64) -> Vec<DominantWeight> {
        let g = self.gram_f64();
        let b: Vec<f64> = self.spec_linear.iter().map(to_f64).collect();
        // λᵀGλ + bᵀλ = (λ-c)ᵀG(λ-c) - cᵀGc with c = -G⁻¹b/2
        let half_b: Vec<f64> = b.iter().map(|x| -x / 2.0).collect();
        let c = solve(&g, &half_b);
        let mut cgc = 0.0;
        for i in 0..self.rank {
            for j in 0..self.rank {
                cgc += c[i] * g[i][j] * c[j];
            }
        }
        let e = Ellipsoid::new(&g, c, bound + cgc).with_lower_bounds(self.lower_bounds());
        let mut out = Vec::new();
        e.for_each(|x| out.push(DominantWeight::new(x.to_vec())));
        out.sort();
        out
    }

    /// Dominant weights with `|λ|²_ρ = n` exactly, in order.
    pub fn weights_on_shell(&self, n: &Rational) -> Vec<DominantWeight> {
        let g = self.gram_f64();
        let b: Vec<f64> = self.spec_linear.iter().map(to_f64).collect();
        let half_b: Vec<f64> = b.iter().map(|x| -x / 2.0).collect();
        let c = solve(&g, &half_b);
        let mut cgc = 0.0;
        for i in 0..self.rank {
            for j in 0..self.rank {
                cgc += c[i] * g[i][j] * c[j];
            }
        }
        let target = to_f64(n);
        let e = Ellipsoid::new(&g, c, target + cgc).with_lower_bounds(self.lower_bounds());
        let mut out = Vec::new();
        e.for_each(|x| {
            let mut v = 0.0;
            for i in 0..self.rank {
                let row: f64 = (0..self.rank).map(|j| g[i][j] * x[j] as f64).sum();
                v += x[i] as f64 * (row + b[i]);
            }
            if (v - target).abs() <= 1e-6 * target.max(1.0) {
                let w = DominantWeight::new(x.to_vec());
                if self.spec_norm_sq_unchecked(&w) == *n {
                    out.push(w);
                }
            }
        });
        out.sort();
        out
    }

    /// Dominant weights with `N ≤ |λ|_ρ < 2N`.
    pub fn weights_in_band(&self, n: f64) -> Vec<DominantWeight> {
        self.weights_with_norm_sq_below(4.0 * n * n)
            .into_iter()
            .filter(|w| {
                let s = self.spec_norm_sq_unchecked(w);
                band_contains(&s, n)
            })
            .collect()
    }

    /// Dominant weights with `|λ|_ρ < radius`.
    pub fn weights_below(&self, radius: f64) -> Vec<DominantWeight> {
        self.weights_with_norm_sq_below(radius * radius)
            .into_iter()
            .filter(|w| below(&self.spec_norm_sq_unchecked(w), radius))
            .collect()
    }

    pub fn is_pure_torus(&self) -> bool {
        self.factors
            .iter()
            .all(|s| matches!(s.factor, Factor::Torus { .. }))
    }

    /// Human-readable summary used by `space info`.
    pub fn summary(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        m.insert("name", self.name.clone());
        m.insert("rank", self.rank.to_string());
        m.insert("dim", self.dim.to_string());
        m.insert("period", format_rational(&self.period));
        m.insert("volume", format!("{}", self.volume()));
        m
    }
}

/// `s < R²` with exact comparison when `R` is an integer.
fn below(s: &Rational, radius: f64) -> bool {
    match exact_square(radius) {
        Some(r2) => *s < r2,
        None => to_f64(s) < radius * radius,
    }
}

/// `N² ≤ s < 4N²`.
pub(crate) fn band_contains(s: &Rational, n: f64) -> bool {
    match exact_square(n) {
        Some(n2) => *s >= n2 && *s < n2 * int(4),
        None => {
            let v = to_f64(s);
            v >= n * n && v < 4.0 * n * n
        }
    }
}

fn exact_square(x: f64) -> Option<Rational> {
    if x.fract() == 0.0 && x.abs() < 3.0e9 {
        let k = x as i64;
        Some(int(k * k))
    } else {
        None
    }
}

/// Block-diagonal product of two spaces.
pub fn product_space(a: &SpaceDescriptor, b: &SpaceDescriptor) -> SpaceDescriptor {
    let rank = a.rank + b.rank;
    let mut gram = vec![vec![Rational::zero(); rank]; rank];
    for i in 0..a.rank {
        for j in 0..a.rank {
            gram[i][j] = a.gram[i][j];
        }
    }
    for i in 0..b.rank {
        for j in 0..b.rank {
            gram[a.rank + i][a.rank + j] = b.gram[i][j];
        }
    }
    let cat =
        |x: &[Rational], y: &[Rational]| -> Vec<Rational> { x.iter().chain(y).cloned().collect() };
    let mut dim_factors: Vec<LinearForm> =
        a.dim_factors.iter().map(|f| f.padded(0, b.rank)).collect();
    dim_factors.extend(b.dim_factors.iter().map(|f| f.padded(a.rank, 0)));
    let period = int(num_integer::lcm(
        a.period.to_integer(),
        b.period.to_integer(),
    ));
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().map(|s| FactorSlot {
        factor: s.factor.clone(),
        offset: s.offset + a.rank,
        token: s.token.clone(),
    }));
    SpaceDescriptor {
        name: format!("{}×{}", a.name, b.name),
        rank,
        dim: a.dim + b.dim,
        gram,
        spec_linear: cat(&a.spec_linear, &b.spec_linear),
        rho0: cat(&a.rho0, &b.rho0),
        rho0_gram_shift: cat(&a.rho0_gram_shift, &b.rho0_gram_shift),
        dim_factors,
        dim_scale: a.dim_scale * b.dim_scale,
        period,
        factors,
    }
}

fn parse_token(token: &str) -> Result<SpaceDescriptor> {
    let err = || Error::Catalog(token.to_string());
    if token == "SU2" {
        return Ok(SpaceDescriptor::from_factor("SU2", Factor::Sphere { d: 3 }));
    }
    if let Some(rest) = token.strip_prefix('T') {
        let r: usize = rest.parse().map_err(|_| err())?;
        if r == 0 {
            return Err(err());
        }
        return Ok(SpaceDescriptor::from_factor(
            token,
            Factor::Torus { gram: identity(r) },
        ));
    }
    if let Some(rest) = token.strip_prefix('S') {
        let d: usize = rest.parse().map_err(|_| err())?;
        if d < 2 {
            return Err(err());
        }
        return Ok(SpaceDescriptor::from_factor(token, Factor::Sphere { d }));
    }
    Err(err())
}

/// Looks up `T{r}`, `S{d}` (d ≥ 2), `SU2`, or a product joined by `×`
/// (ASCII `x` and `*` are accepted too).
pub fn catalog_get(name: &str) -> Result<SpaceDescriptor> {
    let tokens: Vec<&str> = name.split(['×', 'x', '*']).map(str::trim).collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err(Error::Catalog(name.to_string()));
    }
    let mut iter = tokens.into_iter();
    let mut space = parse_token(iter.next().unwrap())?;
    for t in iter {
        space = product_space(&space, &parse_token(t)?);
    }
    Ok(space)
}

pub const CATALOG_EXAMPLES: &[&str] = &[
    "T1", "T2", "T3", "T5", "S2", "S3", "SU2", "T1×S2", "S2×S2", "S3×S3",
];

// ---------------------------------------------------------------------------
// descriptor files

#[derive(Serialize, Deserialize)]
struct LinearFormFile {
    coeffs: Vec<String>,
    constant: String,
}

#[derive(Serialize, Deserialize)]
struct DescriptorFile {
    name: String,
    rank: usize,
    dim: usize,
    gram: Vec<Vec<String>>,
    spec_linear: Vec<String>,
    rho0_gram_shift: Vec<String>,
    dim_factors: Vec<LinearFormFile>,
    dim_scale: String,
    period: String,
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn rationals(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse_rational(s)).collect()
}

impl SpaceDescriptor {
    pub fn to_toml(&self) -> String {
        let file = DescriptorFile {
            name: self.name.clone(),
            rank: self.rank,
            dim: self.dim,
            gram: self.gram.iter().map(|r| strings(r)).collect(),
            spec_linear: strings(&self.spec_linear),
            rho0_gram_shift: strings(&self.rho0_gram_shift),
            dim_factors: self
                .dim_factors
                .iter()
                .map(|f| LinearFormFile {
                    coeffs: strings(&f.coeffs),
                    constant: format_rational(&f.constant),
                })
                .collect(),
            dim_scale: format_rational(&self.dim_scale),
            period: format_rational(&self.period),
        };
        toml::to_string(&file).expect("descriptor serializes")
    }

    /// Reads a descriptor document. Catalog names are rebuilt from the
    /// catalog and cross-checked; other documents must describe a rational
    /// torus (rank = dim, no linear term, no dimension factors).
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: DescriptorFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let gram: Vec<Vec<Rational>> = file
            .gram
            .iter()
            .map(|r| rationals(r))
            .collect::<Result<_>>()?;
        let spec_linear = rationals(&file.spec_linear)?;
        let period = parse_rational(&file.period)?;
        if gram.len() != file.rank || spec_linear.len() != file.rank {
            return Err(Error::Parse(
                "gram/spec_linear size does not match rank".into(),
            ));
        }
        let space = match catalog_get(&file.name) {
            Ok(s) if s.gram == gram && s.spec_linear == spec_linear => s,
            _ => {
                if file.rank != file.dim
                    || !file.dim_factors.is_empty()
                    || spec_linear.iter().any(|b| !b.is_zero())
                {
                    return Err(Error::Parse(format!(
                        "descriptor `{}` is neither a catalog space nor a rational torus",
                        file.name
                    )));
                }
                Self::rational_torus(&file.name, gram)?
            }
        };
        if space.dim != file.dim {
            return Err(Error::Parse(
                "dim does not match the factor structure".into(),
            ));
        }
        if space.period != period {
            return Err(Error::Parse(format!(
                "stored period {} differs from the computed period {}",
                format_rational(&period),
                format_rational(&space.period)
            )));
        }
        Ok(space)
    }
}

/// Accepts a catalog name or a path to a descriptor file.
pub fn resolve_space(spec: &str) -> Result<SpaceDescriptor> {
    let path = std::path::Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return SpaceDescriptor::from_toml(&text);
    }
    catalog_get(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(c: &[i64]) -> DominantWeight {
        DominantWeight::new(c.to_vec())
    }

    #[test]
    fn flat_torus_t2() {
        let t2 = catalog_get("T2").unwrap();
        assert_eq!((t2.rank, t2.dim), (2, 2));
        assert_eq!(t2.gram, identity(2));
        assert_eq!(t2.dim_weight(&w(&[5, -7])).unwrap(), 1);
        assert_eq!(t2.period(), int(1));
        assert_eq!(t2.spec_norm_sq(&w(&[3, 4])).unwrap(), int(25));
    }

    #[test]
    fn sphere_s2_data() {
        let s2 = catalog_get("S2").unwrap();
        assert_eq!((s2.rank, s2.dim), (1, 2));
        assert_eq!(s2.dim_weight(&w(&[0])).unwrap(), 1);
        assert_eq!(s2.dim_weight(&w(&[2])).unwrap(), 5);
        assert_eq!(s2.spec_norm_sq(&w(&[1])).unwrap(), int(2));
        for n in 0..20 {
            assert_eq!(s2.dim_weight(&w(&[n])).unwrap(), 2 * n as u64 + 1);
            assert_eq!(s2.spec_norm_sq(&w(&[n])).unwrap(), int(n * (n + 1)));
        }
        assert_eq!(s2.period(), int(1));
    }

    #[test]
    fn su2_is_the_group_case() {
        let su2 = catalog_get("SU2").unwrap();
        assert_eq!((su2.rank, su2.dim), (1, 3));
        assert_eq!(su2.dim_factors.len(), 2);
        assert_eq!(su2.dim_weight(&w(&[3])).unwrap(), 16);
        for n in 0..30 {
            assert_eq!(
                su2.dim_weight(&w(&[n])).unwrap(),
                ((n + 1) * (n + 1)) as u64
            );
        }
    }

    #[test]
    fn degree_two_harmonics_on_s2_by_monomial_count() {
        // homogeneous degree-2 polynomials in 3 variables minus r²·(degree 0)
        let monomials = |k: i64| (k + 1) * (k + 2) / 2;
        let harmonic = monomials(2) - monomials(0);
        let s2 = catalog_get("S2").unwrap();
        assert_eq!(s2.dim_weight(&w(&[2])).unwrap() as i64, harmonic);
        // same count for S^d, d = 2..6, up to degree 8
        for d in 2..=6usize {
            let sd = catalog_get(&format!("S{d}")).unwrap();
            let binom = |n: i64, k: i64| -> i64 {
                if k < 0 || n < k {
                    return 0;
                }
                (1..=k).fold(1i64, |acc, i| acc * (n - k + i) / i)
            };
            for k in 0..=8i64 {
                let hk = binom(k + d as i64, d as i64) - binom(k - 2 + d as i64, d as i64);
                assert_eq!(
                    sd.dim_weight(&w(&[k])).unwrap() as i64,
                    hk,
                    "S{d} degree {k}"
                );
            }
        }
    }

    #[test]
    fn products_add_and_multiply() {
        let p = catalog_get("T1×S2").unwrap();
        assert_eq!((p.rank, p.dim), (2, 3));
        assert_eq!(p.spec_norm_sq(&w(&[2, 1])).unwrap(), int(6));
        let ss = catalog_get("S3×S3").unwrap();
        assert_eq!((ss.rank, ss.dim), (2, 6));
        for m in 0..=10 {
            for n in 0..=10 {
                let d = ss.dim_weight(&w(&[m, n])).unwrap();
                assert_eq!(d, ((m + 1) * (m + 1) * (n + 1) * (n + 1)) as u64);
            }
        }
        assert_eq!(catalog_get("S3xS3").unwrap(), ss);
    }

    #[test]
    fn rational_metric_torus_period() {
        let g = vec![vec![int(1), int(0)], vec![int(0), frac(1, 3)]];
        let t = SpaceDescriptor::rational_torus("T2", g).unwrap();
        assert_eq!(t.period(), int(3));
        let p = product_space(&t, &catalog_get("S2").unwrap());
        assert_eq!(p.period(), int(3));
    }

    #[test]
    fn s2_period_is_exact_over_many_weights() {
        // e^{-i(t+2π)|λ|²} = e^{-it|λ|²} ⇔ |λ|² ∈ ℤ; also the linear phases
        let s2 = catalog_get("S2").unwrap();
        for n in 0..=50 {
            let v = s2.spec_norm_sq(&w(&[n])).unwrap() * s2.period();
            assert!(v.is_integer());
            let phase = (int(2) * (int(n) + int(2) * frac(1, 2))) * s2.period();
            assert!(phase.is_integer());
        }
    }

    #[test]
    fn unknown_names_are_reported() {
        match catalog_get("T2×Q7") {
            Err(Error::Catalog(t)) => assert_eq!(t, "Q7"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(catalog_get("S1").is_err());
        assert!(catalog_get("T0").is_err());
        assert!(catalog_get("").is_err());
    }

    #[test]
    fn non_dominant_weights_are_rejected() {
        let s2 = catalog_get("S2").unwrap();
        assert!(matches!(s2.dim_weight(&w(&[-1])), Err(Error::Domain(_))));
        assert!(matches!(
            s2.spec_norm_sq(&w(&[1, 2])),
            Err(Error::Domain(_))
        ));
        let p = catalog_get("T1×S2").unwrap();
        assert!(p.spec_norm_sq(&w(&[-3, 1])).is_ok());
        assert!(p.spec_norm_sq(&w(&[3, -1])).is_err());
    }

    #[test]
    fn band_examples() {
        let t1 = catalog_get("T1").unwrap();
        let got: Vec<i64> = t1
            .weights_in_band(2.0)
            .iter()
            .map(|w| w.coords[0])
            .collect();
        assert_eq!(got, vec![-3, -2, 2, 3]);
        let s2 = catalog_get("S2").unwrap();
        let got: Vec<i64> = s2
            .weights_in_band(2.0)
            .iter()
            .map(|w| w.coords[0])
            .collect();
        assert_eq!(got, vec![2, 3]);
        let t2 = catalog_get("T2").unwrap();
        let brute = (-4i64..=4)
            .flat_map(|a| (-4i64..=4).map(move |b| a * a + b * b))
            .filter(|&s| (4..16).contains(&s))
            .count();
        assert_eq!(t2.weights_in_band(2.0).len(), brute);
        assert_eq!(brute, 36);
    }

    #[test]
    fn descriptor_document_round_trip() {
        for name in ["T2", "S2", "SU2", "T1×S2", "S3×S3"] {
            let s = catalog_get(name).unwrap();
            let back = SpaceDescriptor::from_toml(&s.to_toml()).unwrap();
            assert_eq!(back, s);
        }
        let g = vec![vec![int(1), frac(1, 2)], vec![frac(1, 2), frac(1, 3)]];
        let t = SpaceDescriptor::rational_torus("custom", g).unwrap();
        let text = t.to_toml();
        assert!(text.contains("\"1/3\""));
        assert_eq!(SpaceDescriptor::from_toml(&text).unwrap(), t);
    }

    #[test]
    fn volumes() {
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((catalog_get("T2").unwrap().volume() - 4.0 * PI * PI).abs() < 1e-12);
    }
}

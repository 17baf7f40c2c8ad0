//! Representation numbers `r_Q(n) = #{x ∈ ℤ^r : Q(x) = n}` of positive
//! definite integral forms, the theta-sum diagnostic on major arcs, and the
//! joint pair count used by the bilinear estimates.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Roots;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{major_arc_locate, BumpSpec, MajorArcTag};
use crate::lattice::Ellipsoid;
use crate::rational::{int, to_f64, Rational};
use crate::space::{DominantWeight, SpaceDescriptor};

/// `Q(x) = xᵀ M x` with `M` integer symmetric; a form with half-integral
/// cross terms is stored doubled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadForm {
    pub dim: usize,
    pub matrix: Vec<Vec<i64>>,
}

impl QuadForm {
    pub fn new(matrix: Vec<Vec<i64>>) -> Result<Self> {
        let dim = matrix.len();
        if dim == 0 || matrix.iter().any(|r| r.len() != dim) {
            return Err(Error::domain("form matrix must be square and non-empty"));
        }
        for i in 0..dim {
            for j in 0..dim {
                if matrix[i][j] != matrix[j][i] {
                    return Err(Error::domain("form matrix must be symmetric"));
                }
            }
        }
        let q = Self { dim, matrix };
        if !q.leading_minors_positive() {
            return Err(Error::domain("form is not positive definite"));
        }
        Ok(q)
    }

    pub fn identity(r: usize) -> Self {
        let m = (0..r)
            .map(|i| (0..r).map(|j| i64::from(i == j)).collect())
            .collect();
        Self { dim: r, matrix: m }
    }

    /// Integral form `k·G` of a torus space, `k` the least multiple of the
    /// period that clears the denominators of `G`.
    pub fn from_space(space: &SpaceDescriptor) -> Result<Self> {
        if !space.is_pure_torus() {
            return Err(Error::domain(format!("{} is not a torus", space.name)));
        }
        let p = space.period().to_integer();
        let mut k = p;
        while space
            .gram
            .iter()
            .flatten()
            .any(|g| !(g * int(k)).is_integer())
        {
            k += p;
        }
        Self::new(
            space
                .gram
                .iter()
                .map(|r| r.iter().map(|g| (g * int(k)).to_integer()).collect())
                .collect(),
        )
    }

    pub fn parse_toml(text: &str) -> Result<Self> {
        let q: QuadForm = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if q.matrix.len() != q.dim {
            return Err(Error::Parse(format!(
                "dim = {} but {} matrix rows",
                q.dim,
                q.matrix.len()
            )));
        }
        Self::new(q.matrix)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("form serializes")
    }

    /// Exact Bareiss elimination; every leading minor must be positive.
    fn leading_minors_positive(&self) -> bool {
        let n = self.dim;
        let mut a: Vec<Vec<i128>> = self
            .matrix
            .iter()
            .map(|r| r.iter().map(|&v| v as i128).collect())
            .collect();
        let mut prev: i128 = 1;
        for k in 0..n {
            if a[k][k] <= 0 {
                return false;
            }
            for i in (k + 1)..n {
                for j in (k + 1)..n {
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                }
            }
            prev = a[k][k];
        }
        true
    }

    pub fn eval(&self, x: &[i64]) -> i64 {
        let mut acc = 0;
        for i in 0..self.dim {
            let mut row = 0;
            for j in 0..self.dim {
                row += self.matrix[i][j] * x[j];
            }
            acc += x[i] * row;
        }
        acc
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.dim).all(|i| (0..self.dim).all(|j| i == j || self.matrix[i][j] == 0))
    }

    /// Schur complement of the last coordinate, `M' - m mᵀ / a`.
    fn leading_schur(&self) -> Vec<Vec<f64>> {
        let r = self.dim;
        let a = self.matrix[r - 1][r - 1] as f64;
        (0..r - 1)
            .map(|i| {
                (0..r - 1)
                    .map(|j| {
                        self.matrix[i][j] as f64
                            - self.matrix[i][r - 1] as f64 * self.matrix[j][r - 1] as f64 / a
                    })
                    .collect()
            })
            .collect()
    }

    /// Folds `visit(acc, c, b)` over every `x'` of the first `r-1`
    /// coordinates whose line `x_r ↦ a x_r² + b x_r + c` can reach values
    /// `≤ bound`, in parallel over the outermost of them.
    fn fold_lines<A: Send>(
        &self,
        bound: i64,
        init: impl Fn() -> A + Sync,
        visit: impl Fn(&mut A, i64, i64) + Sync,
        merge: impl Fn(A, A) -> A + Sync + Send,
    ) -> A {
        let r = self.dim;
        if r == 1 {
            let mut acc = init();
            visit(&mut acc, 0, 0);
            return acc;
        }
        let e = Ellipsoid::new(&self.leading_schur(), vec![0.0; r - 1], bound as f64);
        let k = r - 1;
        let head: Vec<i64> = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[i][j])
            .collect();
        let last: Vec<i64> = self.matrix[k][..k].iter().map(|v| 2 * v).collect();
        e.top_range()
            .into_par_iter()
            .map(|v| {
                let mut acc = init();
                // x'_0 varies fastest, so the terms without it are cached
                let mut tail = vec![i64::MIN; k];
                let (mut c_tail, mut lin0, mut b_tail) = (0i64, 0i64, 0i64);
                e.for_each_with_top(v, |xp| {
                    if xp[1..] != tail[1..] {
                        tail.copy_from_slice(xp);
                        c_tail = 0;
                        lin0 = 0;
                        b_tail = 0;
                        for i in 1..k {
                            let row: i64 = (1..k).map(|j| head[i * k + j] * xp[j]).sum();
                            c_tail += xp[i] * row;
                            lin0 += 2 * head[i] * xp[i];
                            b_tail += last[i] * xp[i];
                        }
                    }
                    let x0 = xp[0];
                    let c = c_tail + x0 * (head[0] * x0 + lin0);
                    visit(&mut acc, c, b_tail + last[0] * x0);
                });
                acc
            })
            .reduce(&init, &merge)
    }
}

/// `r_Q(n)` from the quadratic in the last coordinate.
pub fn rep_count(q: &QuadForm, n: i64) -> Result<u64> {
    if n < 0 {
        return Err(Error::domain("n must be non-negative"));
    }
    let a = q.matrix[q.dim - 1][q.dim - 1];
    let count = q.fold_lines(
        n,
        || 0u64,
        |count, c, b| {
            // a x² + b x + (c - n) = 0
            let disc = b as i128 * b as i128 - 4 * a as i128 * (c - n) as i128;
            if disc < 0 {
                return;
            }
            let s = isqrt(disc);
            if s * s != disc {
                return;
            }
            let two_a = 2 * a as i128;
            for num in [-(b as i128) + s, -(b as i128) - s] {
                if num % two_a == 0 {
                    *count += 1;
                }
                if s == 0 {
                    break;
                }
            }
        },
        |x, y| x + y,
    );
    Ok(count)
}

/// `r_Q(0), …, r_Q(X)`: convolution of one-dimensional theta series for
/// diagonal forms, a histogram over the ball otherwise.
pub fn rep_counts_upto(q: &QuadForm, x_max: i64) -> Vec<u64> {
    let len = x_max as usize + 1;
    if q.is_diagonal() {
        let mut acc = vec![0u64; len];
        acc[0] = 1;
        for i in 0..q.dim {
            let a = q.matrix[i][i];
            let mut next = vec![0u64; len];
            for (v, &c) in acc.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let mut k = 0i64;
                loop {
                    let idx = v as i64 + a * k * k;
                    if idx > x_max {
                        break;
                    }
                    next[idx as usize] += if k == 0 { c } else { 2 * c };
                    k += 1;
                }
            }
            acc = next;
        }
        return acc;
    }
    let a = q.matrix[q.dim - 1][q.dim - 1];
    q.fold_lines(
        x_max,
        || vec![0u64; len],
        |hist, c, b| {
            if let Some((lo, hi)) = line_range(a, b, c, x_max) {
                for x in lo..=hi {
                    hist[(a * x * x + b * x + c) as usize] += 1;
                }
            }
        },
        |mut x, y| {
            x.iter_mut().zip(y).for_each(|(u, v)| *u += v);
            x
        },
    )
}

/// Integers `x` with `a x² + b x + c ≤ X`, as a closed range. The float
/// roots are only a starting guess; both ends are settled exactly.
fn line_range(a: i64, b: i64, c: i64, x_max: i64) -> Option<(i64, i64)> {
    let disc = (b as f64) * (b as f64) - 4.0 * (a as f64) * ((c - x_max) as f64);
    if disc < -1.0 {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    let val = |x: i64| a * x * x + b * x + c;
    let mut lo = ((-(b as f64) - root) / (2.0 * a as f64)).ceil() as i64;
    let mut hi = ((-(b as f64) + root) / (2.0 * a as f64)).floor() as i64;
    while val(lo - 1) <= x_max {
        lo -= 1;
    }
    while lo <= hi && val(lo) > x_max {
        lo += 1;
    }
    while val(hi + 1) <= x_max {
        hi += 1;
    }
    while hi >= lo && val(hi) > x_max {
        hi -= 1;
    }
    (hi >= lo).then_some((lo, hi))
}

/// `#{x : Q(x) ≤ X}` counting the last coordinate analytically.
pub fn ball_count(q: &QuadForm, x_max: i64) -> u64 {
    let a = q.matrix[q.dim - 1][q.dim - 1];
    q.fold_lines(
        x_max,
        || 0u64,
        |total, c, b| {
            if let Some((lo, hi)) = line_range(a, b, c, x_max) {
                *total += (hi - lo + 1) as u64;
            }
        },
        |x, y| x + y,
    )
}

fn isqrt(v: i128) -> i128 {
    if v < 1 << 52 {
        let mut s = (v as f64).sqrt() as i128;
        while s * s > v {
            s -= 1;
        }
        while (s + 1) * (s + 1) <= v {
            s += 1;
        }
        s
    } else {
        v.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub checkpoints: Vec<(i64, u64)>,
    /// `r/2 - 1`.
    pub theory_exponent: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedFit(format!("{} usable points", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::UndefinedFit("all abscissae equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok((slope, intercept, (rss / n).sqrt()))
}

/// Slope of `log max_{m ≤ n} r_Q(m)` against `log n` at `n = 16, 32, …, n_max`.
pub fn rep_exponent_fit(q: &QuadForm, n_max: i64) -> Result<ExponentFit> {
    if n_max < 64 {
        return Err(Error::domain("n_max must be at least 64"));
    }
    let counts = rep_counts_upto(q, n_max);
    let mut running = 0u64;
    let mut checkpoints = Vec::new();
    let mut next = 16i64;
    for (m, &c) in counts.iter().enumerate().skip(1) {
        running = running.max(c);
        if m as i64 == next {
            checkpoints.push((next, running));
            next *= 2;
        }
    }
    if checkpoints.iter().all(|c| c.1 == 0) {
        return Err(Error::UndefinedFit(
            "all representation counts vanish".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = checkpoints
        .iter()
        .map(|&(n, c)| (n as f64, c as f64))
        .collect();
    let (slope, intercept, residual) = loglog_fit(&pts)?;
    Ok(ExponentFit {
        slope,
        intercept,
        residual,
        checkpoints,
        theory_exponent: q.dim as f64 / 2.0 - 1.0,
    })
}

#[derive(Clone, Debug)]
pub struct ThetaCheck {
    pub value: Complex64,
    pub bound: f64,
    pub ratio: f64,
    pub tag: MajorArcTag,
    pub big_n: i64,
}

/// `s_n(t) = Σ_m φ(m/n) r_Q(m) e^{it(m-n)}` at `t = 2π·s`, against
/// `(N/(√q(1 + N‖s - a/q‖^{1/2})))^r` with `N = ⌊√n⌋`.
pub fn theta_major_arc_check(q: &QuadForm, n: i64, s: Rational) -> Result<ThetaCheck> {
    if n < 4 {
        return Err(Error::domain("theta check needs n ≥ 4"));
    }
    let counts = rep_counts_upto(q, 2 * n);
    theta_from_counts(q.dim, &counts, n, s)
}

pub(crate) fn theta_from_counts(
    dim: usize,
    counts: &[u64],
    n: i64,
    s: Rational,
) -> Result<ThetaCheck> {
    let bump = BumpSpec::default();
    let big_n = n.sqrt();
    let tag = major_arc_locate(s, big_n)?;
    let mut value = Complex64::new(0.0, 0.0);
    for (m, &c) in counts.iter().enumerate().take(2 * n as usize + 1) {
        let w = bump.phi(m as f64 / n as f64);
        if w == 0.0 || c == 0 {
            continue;
        }
        value += crate::kernel::phase(&s, n - m as i64) * (w * c as f64);
    }
    let den = (tag.q as f64).sqrt() * (1.0 + big_n as f64 * to_f64(&tag.dist).sqrt());
    let bound = (big_n as f64 / den).powi(dim as i32);
    Ok(ThetaCheck {
        ratio: value.norm() / bound,
        value,
        bound,
        tag,
        big_n,
    })
}

/// Frequency-zero coefficient of `s_n` from `nodes` equispaced samples,
/// which equals `r_Q(n)` once `nodes > n`.
pub fn theta_fourier_coefficient(q: &QuadForm, n: i64, nodes: usize) -> f64 {
    let bump = BumpSpec::default();
    let counts = rep_counts_upto(q, 2 * n);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let t = 2.0 * PI * j as f64 / nodes as f64;
        for (m, &c) in counts.iter().enumerate() {
            let w = bump.phi(m as f64 / n as f64);
            if w != 0.0 && c != 0 {
                acc += Complex64::from_polar(w * c as f64, t * (m as f64 - n as f64));
            }
        }
    }
    acc.re / nodes as f64
}

/// Half-open cube `Π [c_i - s/2, c_i + s/2)`.
#[derive(Clone, Debug)]
pub struct Cube {
    pub center: Vec<i64>,
    pub side: f64,
}

impl Cube {
    fn range(&self, i: usize) -> (i64, i64) {
        let lo = (self.center[i] as f64 - self.side / 2.0).ceil() as i64;
        let hi = (self.center[i] as f64 + self.side / 2.0).ceil() as i64 - 1;
        (lo, hi)
    }

    pub fn points(&self, space: &SpaceDescriptor) -> Vec<DominantWeight> {
        let r = self.center.len();
        let ranges: Vec<(i64, i64)> = (0..r)
            .map(|i| {
                let (lo, hi) = self.range(i);
                if space.coordinate_is_signed(i) {
                    (lo, hi)
                } else {
                    (lo.max(0), hi)
                }
            })
            .collect();
        let mut out = Vec::new();
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return out;
        }
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(DominantWeight::new(cur.clone()));
            let mut i = 0;
            loop {
                if i == r {
                    return out;
                }
                if cur[i] < ranges[i].1 {
                    cur[i] += 1;
                    break;
                }
                cur[i] = ranges[i].0;
                i += 1;
            }
        }
    }
}

/// `#{(λ₁, λ₂) : λ₁ ∈ Λ⁺ ∩ C, N₂ ≤ |λ₂|_ρ < 2N₂, |λ₁|²_ρ + |λ₂|²_ρ = n}`
/// for every attained `n`.
pub fn joint_pair_histogram(
    space: &SpaceDescriptor,
    cube: &Cube,
    n2: f64,
) -> Result<BTreeMap<Rational, u64>> {
    if cube.center.len() != space.rank {
        return Err(Error::domain("cube center has the wrong rank"));
    }
    let a: Vec<Rational> = cube
        .points(space)
        .iter()
        .map(|w| space.spec_norm_sq_unchecked(w))
        .collect();
    let b: Vec<Rational> = space
        .weights_in_band(n2)
        .iter()
        .map(|w| space.spec_norm_sq_unchecked(w))
        .collect();
    let mut hist_b: BTreeMap<Rational, u64> = BTreeMap::new();
    for v in b {
        *hist_b.entry(v).or_default() += 1;
    }
    let mut out: BTreeMap<Rational, u64> = BTreeMap::new();
    for va in a {
        for (vb, cb) in &hist_b {
            *out.entry(va + vb).or_default() += cb;
        }
    }
    Ok(out)
}

pub fn joint_pair_count(space: &SpaceDescriptor, cube: &Cube, n2: f64, n: Rational) -> Result<u64> {
    Ok(joint_pair_histogram(space, cube, n2)?
        .get(&n)
        .copied()
        .unwrap_or(0))
}

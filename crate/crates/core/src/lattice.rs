//! Integer points inside an ellipsoid `(x-c)ᵀG(x-c) ≤ R`, by Fincke–Pohst
//! enumeration over the Cholesky-type decomposition of `G`.
//!
//! The bound is padded by a small slack, so callers that need an exact
//! boundary must re-check candidates in exact arithmetic.

pub struct Ellipsoid {
    rank: usize,
    // q[i][i] on the diagonal, q[i][j] (j > i) the Gram–Schmidt coefficients
    q: Vec<Vec<f64>>,
    center: Vec<f64>,
    radius_sq: f64,
    lower: Vec<Option<i64>>,
}

impl Ellipsoid {
    /// `gram` must be symmetric positive definite (row-major `r×r`).
    pub fn new(gram: &[Vec<f64>], center: Vec<f64>, radius_sq: f64) -> Self {
        let r = gram.len();
        let mut q = vec![vec![0.0; r]; r];
        for i in 0..r {
            let mut d = gram[i][i];
            for k in 0..i {
                d -= q[k][k] * q[k][i] * q[k][i];
            }
            q[i][i] = d;
            for j in (i + 1)..r {
                let mut s = gram[i][j];
                for k in 0..i {
                    s -= q[k][k] * q[k][i] * q[k][j];
                }
                q[i][j] = s / d;
            }
        }
        let slack = 1e-9 * radius_sq.abs().max(1.0);
        Self {
            rank: r,
            q,
            center,
            radius_sq: radius_sq + slack,
            lower: vec![None; r],
        }
    }

    /// Restricts coordinate `i` to values `≥ bound`.
    pub fn with_lower_bounds(mut self, lower: Vec<Option<i64>>) -> Self {
        assert_eq!(lower.len(), self.rank);
        self.lower = lower;
        self
    }

    pub fn is_positive_definite(&self) -> bool {
        (0..self.rank).all(|i| self.q[i][i] > 0.0)
    }

    /// Visits every candidate point. Points are visited in lexicographic
    /// order of the reversed coordinate tuple, so the order is deterministic.
    pub fn for_each(&self, mut visit: impl FnMut(&[i64])) {
        if self.rank == 0 {
            visit(&[]);
            return;
        }
        let mut x = vec![0i64; self.rank];
        self.recurse(self.rank - 1, self.radius_sq, &mut x, &mut visit);
    }

    /// Candidate values of the last coordinate.
    pub fn top_range(&self) -> std::ops::RangeInclusive<i64> {
        let top = self.rank - 1;
        let half = (self.radius_sq.max(0.0) / self.q[top][top]).sqrt();
        let mut lo = (self.center[top] - half).ceil() as i64;
        if let Some(b) = self.lower[top] {
            lo = lo.max(b);
        }
        lo..=(self.center[top] + half).floor() as i64
    }

    /// `for_each` restricted to points whose last coordinate is `v`.
    pub fn for_each_with_top(&self, v: i64, mut visit: impl FnMut(&[i64])) {
        let top = self.rank - 1;
        let dv = v as f64 - self.center[top];
        let rest = self.radius_sq - self.q[top][top] * dv * dv;
        if rest < 0.0 {
            return;
        }
        let mut x = vec![0i64; self.rank];
        x[top] = v;
        if top == 0 {
            visit(&x);
        } else {
            self.recurse(top - 1, rest, &mut x, &mut visit);
        }
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        self.for_each(|x| out.push(x.to_vec()));
        out
    }

    fn recurse(&self, level: usize, budget: f64, x: &mut [i64], visit: &mut impl FnMut(&[i64])) {
        let mut shift = self.center[level];
        for j in (level + 1)..self.rank {
            shift -= self.q[level][j] * (x[j] as f64 - self.center[j]);
        }
        let qii = self.q[level][level];
        let half = (budget.max(0.0) / qii).sqrt();
        let mut lo = (shift - half).ceil() as i64;
        let hi = (shift + half).floor() as i64;
        if let Some(b) = self.lower[level] {
            lo = lo.max(b);
        }
        for v in lo..=hi {
            let dv = v as f64 - shift;
            let rest = budget - qii * dv * dv;
            if rest < 0.0 {
                continue;
            }
            x[level] = v;
            if level == 0 {
                visit(x);
            } else {
                self.recurse(level - 1, rest, x, visit);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(gram: &[Vec<f64>], center: &[f64], r2: f64, box_: i64) -> Vec<Vec<i64>> {
        let n = gram.len();
        let mut out = Vec::new();
        let total = (2 * box_ + 1).pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let mut x = vec![0i64; n];
            for xi in x.iter_mut() {
                *xi = rem % (2 * box_ + 1) - box_;
                rem /= 2 * box_ + 1;
            }
            let mut v = 0.0;
            for i in 0..n {
                for j in 0..n {
                    v += (x[i] as f64 - center[i]) * gram[i][j] * (x[j] as f64 - center[j]);
                }
            }
            if v <= r2 + 1e-9 {
                out.push(x);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn matches_box_scan_on_skew_form() {
        let gram = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 2.0, 0.5],
            vec![0.0, 0.5, 1.0],
        ];
        let center = vec![0.3, -0.2, 0.5];
        let e = Ellipsoid::new(&gram, center.clone(), 7.5);
        let mut got = e.points();
        got.sort();
        assert_eq!(got, brute(&gram, &center, 7.5, 8));
    }

    #[test]
    fn lower_bounds_cut_the_half_space() {
        let gram = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let e = Ellipsoid::new(&gram, vec![0.0, 0.0], 9.0).with_lower_bounds(vec![Some(0), None]);
        let pts = e.points();
        assert!(pts.iter().all(|p| p[0] >= 0));
        // 29 points have x²+y² ≤ 9; the 18 with x ≥ 0 survive
        assert_eq!(pts.len(), 18);
    }
}

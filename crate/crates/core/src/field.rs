//! Space-time fields `u(s, x) = Σ_k coef_k e^{-2πi s m_k} φ_{λ_k}(x; c_k)`
//! on `[0,1) × M`, evaluated node by node with one time FFT per node.

use std::sync::Arc;

use num_complex::Complex64;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::quadrature::{ambient_layout, Rule};
use crate::space::{DominantWeight, Factor, SpaceDescriptor};
use crate::spherical::gegenbauer_table;

#[derive(Clone, Debug)]
pub struct Term {
    pub weight: DominantWeight,
    pub m: i64,
    pub coef: Complex64,
    pub center: usize,
}

enum AxisKind {
    /// Torus coordinate: ambient index, half-width of the frequency range.
    Angle { amb: usize, kmax: usize },
    /// Sphere factor: ambient offset, dimension, top degree.
    Polar { amb: usize, d: usize, nmax: usize },
}

impl AxisKind {
    fn len(&self) -> usize {
        match self {
            AxisKind::Angle { kmax, .. } => 2 * kmax + 1,
            AxisKind::Polar { nmax, .. } => nmax + 1,
        }
    }
}

pub struct Field {
    centers: Vec<Vec<f64>>,
    terms: Vec<Term>,
    axes: Vec<AxisKind>,
    axis_offsets: Vec<usize>,
    table_len: usize,
    /// Per term: table slot per axis.
    slots: Vec<usize>,
    /// Per term: first axis whose slot differs from the previous term.
    first: Vec<usize>,
    m_min: i64,
    m_max: i64,
}

impl Field {
    pub fn new(space: &SpaceDescriptor, centers: Vec<Vec<f64>>, mut terms: Vec<Term>) -> Self {
        // lexicographic order lets consecutive terms share partial products
        terms.sort_by(|a, b| (a.center, &a.weight).cmp(&(b.center, &b.weight)));
        let (amb, _) = ambient_layout(space);
        let mut axes = Vec::new();
        for (slot, &ao) in space.factors.iter().zip(&amb) {
            match &slot.factor {
                Factor::Torus { gram } => {
                    for i in 0..gram.len() {
                        let kmax = terms
                            .iter()
                            .map(|t| t.weight.coords[slot.offset + i].unsigned_abs() as usize)
                            .max()
                            .unwrap_or(0);
                        axes.push(AxisKind::Angle { amb: ao + i, kmax });
                    }
                }
                Factor::Sphere { d } => {
                    let nmax = terms
                        .iter()
                        .map(|t| t.weight.coords[slot.offset] as usize)
                        .max()
                        .unwrap_or(0);
                    axes.push(AxisKind::Polar {
                        amb: ao,
                        d: *d,
                        nmax,
                    });
                }
            }
        }
        let mut axis_offsets = Vec::with_capacity(axes.len());
        let mut table_len = 0;
        for a in &axes {
            axis_offsets.push(table_len);
            table_len += a.len();
        }
        let rank = axes.len();
        let mut slots = Vec::with_capacity(terms.len() * rank);
        for t in &terms {
            for (ai, a) in axes.iter().enumerate() {
                let local = match a {
                    AxisKind::Angle { kmax, .. } => (t.weight.coords[ai] + *kmax as i64) as usize,
                    AxisKind::Polar { .. } => t.weight.coords[ai] as usize,
                };
                slots.push(t.center * table_len + axis_offsets[ai] + local);
            }
        }
        let first = (0..terms.len())
            .map(|k| {
                if k == 0 {
                    return 0;
                }
                let (a, b) = (
                    &slots[(k - 1) * rank..k * rank],
                    &slots[k * rank..(k + 1) * rank],
                );
                (0..rank).find(|&i| a[i] != b[i]).unwrap_or(rank)
            })
            .collect();
        let m_min = terms.iter().map(|t| t.m).min().unwrap_or(0);
        let m_max = terms.iter().map(|t| t.m).max().unwrap_or(0);
        Self {
            centers,
            terms,
            axes,
            axis_offsets,
            table_len,
            slots,
            first,
            m_min,
            m_max,
        }
    }

    pub fn m_min(&self) -> i64 {
        self.m_min
    }

    pub fn m_span(&self) -> usize {
        (self.m_max - self.m_min) as usize
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    fn fill_tables(&self, x: &[f64], tables: &mut [Complex64], scratch: &mut Vec<f64>) {
        for (ci, c) in self.centers.iter().enumerate() {
            let base = ci * self.table_len;
            for (a, &off) in self.axes.iter().zip(&self.axis_offsets) {
                let t = &mut tables[base + off..base + off + a.len()];
                match a {
                    AxisKind::Angle { amb, kmax } => {
                        let z = Complex64::from_polar(1.0, x[*amb] - c[*amb]);
                        let k = *kmax;
                        t[k] = Complex64::new(1.0, 0.0);
                        for j in 1..=k {
                            t[k + j] = t[k + j - 1] * z;
                            t[k - j] = t[k + j].conj();
                        }
                    }
                    AxisKind::Polar { amb, d, nmax } => {
                        let dot: f64 = (0..=*d).map(|i| x[amb + i] * c[amb + i]).sum();
                        scratch.resize(nmax + 1, 0.0);
                        gegenbauer_table(*d, dot.clamp(-1.0, 1.0), scratch);
                        for (tv, &s) in t.iter_mut().zip(scratch.iter()) {
                            *tv = Complex64::new(s, 0.0);
                        }
                    }
                }
            }
        }
    }

    /// `A_m(x) = Σ_{m_k = m} coef_k φ_{λ_k}(x; c_k)`, indexed by `m - m_min`.
    pub fn buckets_at(&self, x: &[f64], out: &mut [Complex64]) {
        let mut tables = vec![Complex64::zero(); self.centers.len() * self.table_len];
        let mut scratch = Vec::new();
        self.buckets_with(x, out, &mut tables, &mut scratch);
    }

    fn buckets_with(
        &self,
        x: &[f64],
        out: &mut [Complex64],
        tables: &mut [Complex64],
        scratch: &mut Vec<f64>,
    ) {
        self.fill_tables(x, tables, scratch);
        out.iter_mut().for_each(|v| *v = Complex64::zero());
        let rank = self.axes.len();
        let mut prefix = vec![Complex64::new(1.0, 0.0); rank + 1];
        for ((t, slots), &first) in self
            .terms
            .iter()
            .zip(self.slots.chunks_exact(rank.max(1)))
            .zip(&self.first)
        {
            for i in first..rank {
                prefix[i + 1] = prefix[i] * tables[slots[i]];
            }
            out[(t.m - self.m_min) as usize] += t.coef * prefix[rank];
        }
    }

    pub fn value_at(&self, s: f64, x: &[f64]) -> Complex64 {
        let mut b = vec![Complex64::zero(); self.m_span() + 1];
        self.buckets_at(x, &mut b);
        b.iter()
            .enumerate()
            .map(|(i, a)| {
                let m = self.m_min + i as i64;
                a * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (s * m as f64).fract())
            })
            .sum()
    }

    /// Runs `visit(node, buckets)` over all nodes in fixed-size chunks and
    /// returns the per-chunk results in node order.
    pub fn map_nodes<R: Send>(
        &self,
        rule: &Rule,
        chunk: usize,
        visit: impl Fn(usize, &[Complex64], &mut Vec<Complex64>) -> R + Sync,
    ) -> Vec<R> {
        let n = rule.len();
        let starts: Vec<usize> = (0..n).step_by(chunk.max(1)).collect();
        starts
            .par_iter()
            .map(|&st| {
                let mut tables = vec![Complex64::zero(); self.centers.len() * self.table_len];
                let mut scratch = Vec::new();
                let mut buckets = vec![Complex64::zero(); self.m_span() + 1];
                let mut work = Vec::new();
                let mut out = Vec::new();
                for i in st..(st + chunk).min(n) {
                    self.buckets_with(rule.point(i), &mut buckets, &mut tables, &mut scratch);
                    out.push(visit(i, &buckets, &mut work));
                }
                out
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    }

    /// `Σ_x w_x (1/M) Σ_j |u(j/M, x)|^p` with `M = m_time` trapezoid nodes in time.
    pub fn time_power_integral(&self, rule: &Rule, m_time: usize, p: f64) -> Integral {
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(m_time);
        let scratch_len = fft.get_inplace_scratch_len();
        let span = self.m_span() + 1;
        let even = p.fract() == 0.0 && (p as i64) % 2 == 0;
        let half = (p / 2.0) as i32;
        let per_node = self.map_nodes(rule, 64, |_, buckets, work| {
            work.resize(m_time + scratch_len, Complex64::zero());
            let (line, scratch) = work.split_at_mut(m_time);
            line.iter_mut().for_each(|v| *v = Complex64::zero());
            for (i, a) in buckets.iter().enumerate().take(span) {
                line[i % m_time] += a;
            }
            fft.process_with_scratch(line, scratch);
            let s: f64 = if even {
                line.iter().map(|v| v.norm_sqr().powi(half)).sum()
            } else {
                line.iter().map(|v| v.norm().powf(p)).sum()
            };
            s / m_time as f64
        });
        Integral::from_nodes(rule, &per_node)
    }
}

/// `Σ_x w_x g(x)`, with a standard error when the rule is Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub stderr: f64,
}

impl Integral {
    pub fn from_nodes(rule: &Rule, g: &[f64]) -> Self {
        let value: f64 = g.iter().zip(&rule.weights).map(|(v, w)| v * w).sum();
        if rule.exact || g.len() < 2 {
            return Self { value, stderr: 0.0 };
        }
        // uniform weights w = vol/n
        let n = g.len() as f64;
        let vol: f64 = rule.weights.iter().sum();
        let mean = g.iter().sum::<f64>() / n;
        let var = g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            value,
            stderr: vol * (var / n).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{base_point, product_rule};
    use crate::space::catalog_get;
    use crate::spherical::atom_profile;

    #[test]
    fn buckets_agree_with_direct_sum() {
        for name in ["T2", "S2", "T1×S2", "SU2"] {
            let s = catalog_get(name).unwrap();
            let rule = product_rule(&s, 6).unwrap();
            let centers = vec![base_point(&s), rule.point(7).to_vec()];
            let ws = s.weights_below(4.0);
            let terms: Vec<Term> = ws
                .iter()
                .enumerate()
                .map(|(i, w)| Term {
                    weight: w.clone(),
                    m: s.spectral_index(w),
                    coef: Complex64::new(0.3 + i as f64, -0.2 * i as f64),
                    center: i % 2,
                })
                .collect();
            let f = Field::new(&s, centers.clone(), terms.clone());
            let x = rule.point(11);
            let sv = 0.123;
            let direct: Complex64 = terms
                .iter()
                .map(|t| {
                    t.coef
                        * atom_profile(&s, &t.weight, x, &centers[t.center])
                        * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * sv * t.m as f64)
                })
                .sum();
            assert!((f.value_at(sv, x) - direct).norm() < 1e-10, "{name}");
        }
    }
}

//! Farey sequences, the mediant dissection of the circle `ℝ/ℤ`, the dyadic
//! `(Q, L)` refinement of each arc, and Fourier coefficients of unions of
//! refined cells.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rational::{frac, to_f64, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fraction {
    pub a: i64,
    pub q: i64,
}

impl Fraction {
    pub fn new(a: i64, q: i64) -> Self {
        debug_assert!(q > 0 && a.gcd(&q) == 1);
        Self { a, q }
    }

    pub fn value(&self) -> Rational {
        frac(self.a, self.q)
    }
}

/// Largest power of two `≤ x`, for `x ≥ 1`.
pub fn dyadic_floor(x: i64) -> i64 {
    assert!(x >= 1);
    1i64 << (63 - x.leading_zeros())
}

/// Farey sequence of order `n` by the next-term recurrence.
pub fn farey_sequence(n: i64) -> Vec<Fraction> {
    assert!(n >= 1);
    let (mut a, mut b, mut c, mut d) = (0i64, 1i64, 1i64, n);
    let mut out = vec![Fraction::new(0, 1)];
    while c <= n {
        let k = (n + b) / d;
        out.push(Fraction::new(c, d));
        let (nc, nd) = (k * c - a, k * d - b);
        a = c;
        b = d;
        c = nc;
        d = nd;
    }
    out
}

/// Arc `[left, right)` around a Farey fraction; for `0/1` the left end is
/// negative and the arc wraps through `0 ≡ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FareyArc {
    pub center: Fraction,
    pub left: Rational,
    pub right: Rational,
    /// Order of the dissection the arc belongs to.
    pub order: i64,
}

impl FareyArc {
    pub fn half_left(&self) -> Rational {
        self.center.value() - self.left
    }

    pub fn half_right(&self) -> Rational {
        self.right - self.center.value()
    }

    pub fn length(&self) -> Rational {
        self.right - self.left
    }

    pub fn intervals(&self) -> Vec<(Rational, Rational)> {
        wrap_interval(self.left, self.right)
    }
}

/// Maps `[lo, hi)` with `-1 < lo < hi ≤ 1` onto `[0, 1)`.
fn wrap_interval(lo: Rational, hi: Rational) -> Vec<(Rational, Rational)> {
    let one = Rational::one();
    let zero = Rational::zero();
    if lo >= zero {
        vec![(lo, hi)]
    } else if hi <= zero {
        vec![(lo + one, hi + one)]
    } else {
        vec![(lo + one, one), (zero, hi)]
    }
}

/// Mediant arcs of order `n`, one per fraction in `[0, 1)`, ordered by center.
pub fn farey_arcs(n: i64) -> Vec<FareyArc> {
    let seq = farey_sequence(n);
    let m = seq.len();
    let mut out = Vec::with_capacity(m - 1);
    for i in 0..m - 1 {
        let c = seq[i];
        let (la, lq) = if i == 0 {
            let p = seq[m - 2];
            (p.a - p.q, p.q)
        } else {
            (seq[i - 1].a, seq[i - 1].q)
        };
        let r = seq[i + 1];
        out.push(FareyArc {
            center: c,
            left: frac(la + c.a, lq + c.q),
            right: frac(c.a + r.a, c.q + r.q),
            order: n,
        });
    }
    out
}

/// Arc of order `n` containing `t ∈ [0, 1)`, by a Stern–Brocot descent to
/// the Farey neighbours of `t` and a comparison with their mediant.
pub fn arc_containing(t: Rational, n: i64) -> FareyArc {
    assert!(n >= 1);
    let t = t - t.floor();
    // neighbours lo ≤ t < hi with lo, hi consecutive in F_n
    let (mut lo, mut hi) = ((0i64, 1i64), (1i64, 1i64));
    loop {
        let med = (lo.0 + hi.0, lo.1 + hi.1);
        if med.1 > n {
            break;
        }
        if frac(med.0, med.1) <= t {
            lo = med;
        } else {
            hi = med;
        }
    }
    let mediant = frac(lo.0 + hi.0, lo.1 + hi.1);
    let center = if t < mediant { lo } else { hi };
    let center = if center == (1, 1) { (0, 1) } else { center };
    arc_around(Fraction::new(center.0, center.1), n)
}

/// Arc of order `n` around a fraction of `F_n`.
pub fn arc_around(c: Fraction, n: i64) -> FareyArc {
    let (left_n, right_n) = farey_neighbours(c, n);
    let left = if c.a == 0 {
        frac(left_n.a - left_n.q, left_n.q + 1)
    } else {
        frac(left_n.a + c.a, left_n.q + c.q)
    };
    FareyArc {
        center: c,
        left,
        right: frac(c.a + right_n.a, c.q + right_n.q),
        order: n,
    }
}

/// Predecessor and successor of `c` in `F_n` (cyclically for `0/1`).
fn farey_neighbours(c: Fraction, n: i64) -> (Fraction, Fraction) {
    if c.q == 1 {
        // 0/1: neighbours (n-1)/n (cyclic) and 1/n
        return (Fraction::new(n - 1, n), Fraction::new(1, n));
    }
    // successor r/s solves a·s - q·r = -1 with n - q < s ≤ n
    let (_, inv) = mod_inverse(c.a, c.q);
    // a·s ≡ -1 (mod q)
    let s0 = (-inv).rem_euclid(c.q);
    let s0 = if s0 == 0 { c.q } else { s0 };
    let s = s0 + ((n - s0) / c.q) * c.q;
    let r = (c.a * s + 1) / c.q;
    // predecessor u/v solves q·u - a·v = -1... i.e. a·v ≡ 1 (mod q)
    let v0 = inv.rem_euclid(c.q);
    let v0 = if v0 == 0 { c.q } else { v0 };
    let v = v0 + ((n - v0) / c.q) * c.q;
    let u = (c.a * v - 1) / c.q;
    (Fraction::new(u, v), Fraction::new(r, s))
}

fn mod_inverse(a: i64, m: i64) -> (i64, i64) {
    let g = a.extended_gcd(&m);
    (g.gcd, g.x.rem_euclid(m))
}

/// One `(Q, L)` cell of an arc; `intervals` lie in `[0, 1)`, half-open.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcCell {
    pub center: Fraction,
    pub big_q: i64,
    pub l: i64,
    pub intervals: Vec<(Rational, Rational)>,
}

impl ArcCell {
    pub fn measure(&self) -> Rational {
        self.intervals
            .iter()
            .fold(Rational::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn contains(&self, t: Rational) -> bool {
        self.intervals.iter().any(|(a, b)| *a <= t && t < *b)
    }
}

/// Splits an arc into the dyadic ladder `L = Q, 2Q, …, L_max` with
/// breakpoints `‖t - a/q‖ = 1/(N·L)`.
pub fn arc_refine(arc: &FareyArc, n: i64) -> Result<Vec<ArcCell>> {
    if arc.center.q >= n {
        return Err(Error::domain(format!(
            "arc refinement needs q < N (q = {}, N = {n})",
            arc.center.q
        )));
    }
    Ok(refine_cells(arc, n))
}

/// As [`arc_refine`] but also accepts `q = N`, so that refinements of all
/// arcs of order `N` tile the circle.
pub(crate) fn refine_cells(arc: &FareyArc, n: i64) -> Vec<ArcCell> {
    let big_q = dyadic_floor(arc.center.q);
    let l_max = dyadic_floor(n);
    let c = arc.center.value();
    let (hl, hr) = (arc.half_left(), arc.half_right());
    let b = |l: i64| frac(1, n * l);
    let zero = Rational::zero();
    let mut levels = Vec::new();
    let mut l = big_q;
    while l <= l_max {
        levels.push(l);
        l *= 2;
    }
    let band = |l: i64, h: Rational| -> (Rational, Rational) {
        let outer = if l == big_q { h } else { b(l) };
        let inner = if l == l_max { zero } else { b(2 * l) };
        (inner.min(h), outer.min(h))
    };
    let mut cells = Vec::with_capacity(levels.len());
    for &l in &levels {
        let (li, lo) = band(l, hl);
        let (ri, ro) = band(l, hr);
        let mut raw = Vec::new();
        if l == l_max {
            if lo + ro > zero {
                raw.push((c - lo, c + ro));
            }
        } else {
            if lo > li {
                raw.push((c - lo, c - li));
            }
            if ro > ri {
                raw.push((c + ri, c + ro));
            }
        }
        let mut intervals: Vec<(Rational, Rational)> = raw
            .into_iter()
            .flat_map(|(x, y)| wrap_interval(x, y))
            .collect();
        intervals.sort();
        cells.push(ArcCell {
            center: arc.center,
            big_q,
            l,
            intervals,
        });
    }
    cells
}

/// All cells at level `(Q, L)` over fractions with `Q ≤ q < 2Q`, `q < N`.
pub fn cells_at_level(n: i64, big_q: i64, l: i64) -> Vec<ArcCell> {
    let mut out = Vec::new();
    for arc in farey_arcs(n) {
        let q = arc.center.q;
        if q >= n || dyadic_floor(q) != big_q {
            continue;
        }
        out.extend(refine_cells(&arc, n).into_iter().filter(|c| c.l == l));
    }
    out
}

/// `c_k = ∫₀¹ 1_M(s) e^{-2πiks} ds` for `k = 0..=k_max`, in closed form per
/// interval.
pub fn indicator_coefficients(intervals: &[(Rational, Rational)], k_max: usize) -> Vec<Complex64> {
    const CHUNK: usize = 4096;
    let mut endpoints: Vec<(i64, i64, f64)> = Vec::with_capacity(2 * intervals.len());
    for (a, b) in intervals {
        endpoints.push((*a.numer(), *a.denom(), 1.0));
        endpoints.push((*b.numer(), *b.denom(), -1.0));
    }
    let mass: f64 = intervals.iter().map(|(a, b)| to_f64(&(b - a))).sum();
    let n_chunks = (k_max + 1).div_ceil(CHUNK);
    let mut out: Vec<Complex64> = (0..n_chunks)
        .into_par_iter()
        .flat_map_iter(|ci| {
            let k0 = ci * CHUNK;
            let k1 = ((ci + 1) * CHUNK).min(k_max + 1);
            let mut acc = vec![Complex64::new(0.0, 0.0); k1 - k0];
            for &(u, v, sign) in &endpoints {
                let step = Complex64::from_polar(1.0, -2.0 * PI * u as f64 / v as f64);
                let mut z = Complex64::new(0.0, 0.0);
                for (i, k) in (k0..k1).enumerate() {
                    if i % 256 == 0 {
                        // reseed from the exact residue k·u mod v
                        let r = ((k as i128 * u as i128).rem_euclid(v as i128)) as f64 / v as f64;
                        z = Complex64::from_polar(1.0, -2.0 * PI * r);
                    }
                    acc[i] += z * sign;
                    z *= step;
                }
            }
            acc.into_iter().enumerate().map(move |(i, s)| {
                let k = k0 + i;
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    s / Complex64::new(0.0, 2.0 * PI * k as f64)
                }
            })
        })
        .collect();
    if let Some(c0) = out.first_mut() {
        *c0 = Complex64::new(mass, 0.0);
    }
    out
}

#[derive(Clone, Debug)]
pub struct IndicatorSpectrum {
    pub sup_value: f64,
    pub argmax: usize,
    /// Total length of `ℳ_{Q,L}` in units of `t/2π` (the circle has length `period`).
    pub l1_mass: f64,
}

/// Sup over `|k| ≤ 64N²` of the Fourier coefficients of `1_{ℳ_{Q,L}}` on the
/// circle of length `period`.
pub fn indicator_fourier_sup(
    n: i64,
    big_q: i64,
    l: i64,
    period: Rational,
) -> Result<IndicatorSpectrum> {
    if !(1 <= big_q && big_q <= l && l <= n) {
        return Err(Error::domain(format!(
            "need 1 ≤ Q ≤ L ≤ N, got Q={big_q}, L={l}, N={n}"
        )));
    }
    let cells = cells_at_level(n, big_q, l);
    let intervals: Vec<(Rational, Rational)> = cells
        .iter()
        .flat_map(|c| c.intervals.iter().cloned())
        .collect();
    let measure: f64 = intervals.iter().map(|(a, b)| to_f64(&(b - a))).sum();
    let k_max = (64 * n * n) as usize;
    let coeffs = indicator_coefficients(&intervals, k_max);
    let (argmax, sup_value) =
        coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (k, c.norm()))
            .fold(
                (0, 0.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
    Ok(IndicatorSpectrum {
        sup_value,
        argmax,
        l1_mass: measure * to_f64(&period),
    })
}

/// The bound `Q²/(NL)`.
pub fn indicator_bound(n: i64, big_q: i64, l: i64) -> f64 {
    (big_q * big_q) as f64 / (n * l) as f64
}

pub fn totient(n: i64) -> i64 {
    (1..=n).filter(|k| k.gcd(&n) == 1).count() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn small_sequences() {
        let f1: Vec<_> = farey_sequence(1).iter().map(|f| (f.a, f.q)).collect();
        assert_eq!(f1, vec![(0, 1), (1, 1)]);
        let f3: Vec<_> = farey_sequence(3).iter().map(|f| (f.a, f.q)).collect();
        assert_eq!(f3, vec![(0, 1), (1, 3), (1, 2), (2, 3), (1, 1)]);
        assert_eq!(farey_sequence(5).len(), 11);
    }

    #[test]
    fn lengths_match_totient_sums() {
        for n in 1..=60 {
            let expect = 1 + (1..=n).map(totient).sum::<i64>();
            assert_eq!(farey_sequence(n).len() as i64, expect);
        }
    }

    #[test]
    fn sequence_matches_brute_enumeration() {
        for n in 1..=25 {
            let mut brute = Vec::new();
            for q in 1..=n {
                for a in 0..=q {
                    if a.gcd(&q) == 1 {
                        brute.push(frac(a, q));
                    }
                }
            }
            brute.sort();
            brute.dedup();
            let got: Vec<Rational> = farey_sequence(n).iter().map(|f| f.value()).collect();
            assert_eq!(got, brute);
        }
    }

    #[test]
    fn arc_examples() {
        let a1 = farey_arcs(1);
        assert_eq!(a1.len(), 1);
        assert_eq!(a1[0].length(), int(1));
        let a2 = farey_arcs(2);
        let half = a2.iter().find(|a| a.center == Fraction::new(1, 2)).unwrap();
        assert_eq!((half.left, half.right), (frac(1, 3), frac(2, 3)));
        let a3 = farey_arcs(3);
        let third = a3.iter().find(|a| a.center == Fraction::new(1, 3)).unwrap();
        assert_eq!((third.left, third.right), (frac(1, 4), frac(2, 5)));
    }

    #[test]
    fn neighbours_agree_with_the_sequence() {
        for n in 1..=40 {
            let arcs = farey_arcs(n);
            for arc in &arcs {
                assert_eq!(&arc_around(arc.center, n), arc);
            }
        }
    }

    #[test]
    fn locate_hits_exact_fractions() {
        assert_eq!(arc_containing(frac(3, 10), 10).center, Fraction::new(3, 10));
        assert_eq!(arc_containing(int(0), 7).center, Fraction::new(0, 1));
        assert_eq!(arc_containing(frac(1, 2), 7).center, Fraction::new(1, 2));
        assert_eq!(arc_containing(frac(99, 100), 7).center, Fraction::new(0, 1));
    }

    #[test]
    fn locate_matches_linear_scan() {
        for n in [2, 5, 11, 16] {
            let arcs = farey_arcs(n);
            for j in 0..997 {
                let t = frac(j, 997);
                let hit = arcs
                    .iter()
                    .find(|a| a.intervals().iter().any(|(x, y)| *x <= t && t < *y))
                    .unwrap();
                assert_eq!(arc_containing(t, n).center, hit.center, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn refinement_examples() {
        let arc = arc_around(Fraction::new(0, 1), 8);
        let cells = arc_refine(&arc, 8).unwrap();
        let ls: Vec<i64> = cells.iter().map(|c| c.l).collect();
        assert_eq!(ls, vec![1, 2, 4, 8]);
        let total = cells.iter().fold(Rational::zero(), |a, c| a + c.measure());
        assert_eq!(total, arc.length());

        let arc = arc_around(Fraction::new(1, 3), 16);
        let cells = arc_refine(&arc, 16).unwrap();
        let ls: Vec<i64> = cells.iter().map(|c| c.l).collect();
        assert_eq!(ls, vec![2, 4, 8, 16]);
        assert!(cells.iter().all(|c| c.big_q == 2));
        // the outer cell starts at distance 1/(16·4) = 1/64 ≍ 1/32
        let outer = &cells[0];
        let c = frac(1, 3);
        let inner_edge = outer
            .intervals
            .iter()
            .map(|(a, b)| if *b <= c { c - b } else { a - c })
            .min()
            .unwrap();
        assert_eq!(inner_edge, frac(1, 64));
        assert!(arc_refine(&arc_around(Fraction::new(1, 16), 16), 16).is_err());
    }

    #[test]
    fn cell_distance_window() {
        let n = 32;
        for arc in farey_arcs(n).iter().filter(|a| a.center.q < n) {
            let cells = arc_refine(arc, n).unwrap();
            let l_max = dyadic_floor(n);
            let c = arc.center.value();
            for cell in &cells {
                for (a, b) in &cell.intervals {
                    let mut pts = vec![*a];
                    pts.push((*a + *b) / int(2));
                    for t in pts {
                        let d = crate::rational::dist_to_int(&(t - c));
                        let target = frac(1, n * cell.l);
                        if cell.l == l_max {
                            assert!(d <= int(2) / int(n * n));
                        } else {
                            assert!(
                                d >= target / int(2) && d <= target * int(2),
                                "{arc:?} {cell:?}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let n = 12;
        let mut cells = Vec::new();
        for arc in farey_arcs(n) {
            cells.extend(refine_cells(&arc, n));
        }
        for j in 0..1000 {
            let t = frac(j, 1000);
            let hits = cells.iter().filter(|c| c.contains(t)).count();
            assert_eq!(hits, 1, "t={t}");
        }
    }

    #[test]
    fn indicator_mean_and_single_interval() {
        let spec = indicator_fourier_sup(16, 1, 16, int(1)).unwrap();
        // only 0/1 at level 16: the interval of half-width 1/256 around 0
        assert!((spec.l1_mass - 2.0 / 256.0).abs() < 1e-15);
        assert!((spec.sup_value - 2.0 / 256.0).abs() < 1e-12);
        let cells = cells_at_level(16, 2, 4);
        let iv: Vec<_> = cells.iter().flat_map(|c| c.intervals.clone()).collect();
        let co = indicator_coefficients(&iv, 50);
        let mass: f64 = iv.iter().map(|(a, b)| to_f64(&(b - a))).sum();
        assert!((co[0].re - mass).abs() < 1e-15);
        assert!(co.iter().all(|c| c.norm() <= mass + 1e-12));
        // direct evaluation of one coefficient
        let k = 37.0;
        let direct: Complex64 = iv
            .iter()
            .map(|(a, b)| {
                let (a, b) = (to_f64(a), to_f64(b));
                (Complex64::from_polar(1.0, -2.0 * PI * k * a)
                    - Complex64::from_polar(1.0, -2.0 * PI * k * b))
                    / Complex64::new(0.0, 2.0 * PI * k)
            })
            .sum();
        assert!((direct - co[37]).norm() < 1e-12);
    }

    #[test]
    fn period_scales_mass_only() {
        let a = indicator_fourier_sup(16, 2, 8, int(1)).unwrap();
        let b = indicator_fourier_sup(16, 2, 8, int(3)).unwrap();
        assert!((b.l1_mass - 3.0 * a.l1_mass).abs() < 1e-14);
        assert!(a.sup_value <= a.l1_mass + 1e-12);
    }
}

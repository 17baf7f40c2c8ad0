//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use symstri_core::farey::{farey_arcs, farey_sequence, indicator_bound, indicator_fourier_sup};
use symstri_core::kernel::{kernel_bound_scan, kernel_parseval, BumpSpec};
use symstri_core::quad_count::{
    ball_count, joint_pair_histogram, rep_count, rep_counts_upto, rep_exponent_fit, Cube, QuadForm,
};
use symstri_core::quadrature::sample_point;
use symstri_core::rational::{frac, int, Rational};
use symstri_core::space::{catalog_get, DominantWeight};
use symstri_core::spherical::{legendre, phi_laplace_integral, support_check};
use symstri_core::strichartz::{
    bilinear_scan, eigenfunction_lp_scan, stream_rng, strichartz_scan, BilinearConfig, EigenConfig,
    Ensemble, StriConfig,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn laplace_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for n in 0..=40 {
        for j in 0..256 {
            let th = std::f64::consts::PI * j as f64 / 256.0;
            let v = phi_laplace_integral(n, th, 4 * (n + 1)).value;
            worst = worst.max((v.re - legendre(n, (2.0 * th).cos())).hypot(v.im));
        }
    }
    check(worst < 1e-9, format!("max error {worst:.3e}"))
}

fn farey_exactness() -> Outcome {
    for n in 1..=200i64 {
        let seq = farey_sequence(n);
        for w in seq.windows(2) {
            if w[1].a * w[0].q - w[0].a * w[1].q != 1 {
                return Err(format!("determinant fails at order {n}"));
            }
        }
        let arcs = farey_arcs(n);
        // arcs tile one period: each starts where the previous ends
        for w in arcs.windows(2) {
            if w[0].right != w[1].left {
                return Err(format!("gap between arcs at order {n}"));
            }
        }
        let (first, last) = (arcs.first().unwrap(), arcs.last().unwrap());
        // one full period, wrapping around 0
        if last.right - first.left != int(1) || first.left > int(0) {
            return Err(format!("arcs do not cover [0,1) at order {n}"));
        }
        let total: Rational = arcs.iter().map(|a| a.right - a.left).sum();
        if total != int(1) {
            return Err(format!("total length {total} at order {n}"));
        }
        for a in &arcs {
            let c = a.center.value();
            let (lo, hi) = (frac(1, 2 * a.center.q * n), frac(1, a.center.q * n));
            for h in [c - a.left, a.right - c] {
                if h < lo || h > hi {
                    return Err(format!("half-length {h} around {c} at order {n}"));
                }
            }
        }
    }
    Ok("orders 1..=200 exact".into())
}

fn indicator_bound_check() -> Outcome {
    let scaled = |n: i64, q: i64, l: i64| -> Result<f64, String> {
        let s = indicator_fourier_sup(n, q, l, int(1)).map_err(|e| e.to_string())?;
        Ok(s.sup_value / indicator_bound(n, q, l))
    };
    let base = scaled(16, 1, 16)?;
    let mut worst = (0.0, (0, 0, 0));
    for n in [16i64, 32, 64] {
        let mut q = 1;
        while q <= n {
            let mut l = q;
            while l <= n {
                let v = scaled(n, q, l)?;
                if v > worst.0 {
                    worst = (v, (n, q, l));
                }
                l *= 2;
            }
            q *= 2;
        }
    }
    let r = worst.0 / base;
    check(
        r <= 4.0,
        format!("max scaled sup / base = {r:.3} at (N,Q,L) = {:?}", worst.1),
    )
}

fn dispersive_constant() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["T1", "T2", "S2", "SU2"] {
        let s = catalog_get(name).map_err(|e| e.to_string())?;
        let mut cs = Vec::new();
        for n in [8i64, 16, 32, 64] {
            let ts = (8 * n * n) as usize * s.period().to_integer() as usize;
            let scan = kernel_bound_scan(
                &s,
                n,
                &BumpSpec::default(),
                ts.next_power_of_two(),
                8 * n as usize,
            )
            .map_err(|e| e.to_string())?;
            cs.push(scan.c_of_n);
        }
        let worst = cs.iter().cloned().fold(0.0, f64::max) / cs[0];
        ok &= worst <= 4.0;
        lines.push(format!("{name} C(N)/C(8) max {worst:.3}"));
    }
    check(ok, lines.join("; "))
}

fn parseval() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["T2", "S2"] {
        let s = catalog_get(name).map_err(|e| e.to_string())?;
        let c = kernel_parseval(&s, 16.0, &BumpSpec::default()).map_err(|e| e.to_string())?;
        ok &= c.rel_error < 1e-6;
        lines.push(format!("{name} rel error {:.2e}", c.rel_error));
    }
    check(ok, lines.join("; "))
}

fn counting() -> Outcome {
    const X: i64 = 10_000;
    let mut lines = Vec::new();
    for r in [2usize, 4, 5] {
        let q = QuadForm::identity(r);
        let counts = rep_counts_upto(&q, X);
        let total: u64 = counts.iter().sum();
        let ball = ball_count(&q, X);
        if total != ball {
            return Err(format!("I{r}: shell sum {total} != ball count {ball}"));
        }
        // per-shell comparison against the direct enumeration of each shell
        let (top, step) = match r {
            2 => (X, 1),
            4 => (X, 97),
            _ => (2000, 97),
        };
        for n in (0..=top).step_by(step) {
            let direct = rep_count(&q, n).map_err(|e| e.to_string())?;
            if direct != counts[n as usize] {
                return Err(format!(
                    "I{r}: r({n}) mismatch {direct} vs {}",
                    counts[n as usize]
                ));
            }
        }
    }
    let mut ok = true;
    for (r, n_max, cap) in [(2usize, 65536i64, 0.3), (4, 4096, 1.2), (5, 4096, 1.6)] {
        let fit = rep_exponent_fit(&QuadForm::identity(r), n_max).map_err(|e| e.to_string())?;
        ok &= fit.slope <= cap;
        lines.push(format!(
            "I{r} slope {:.3} (cap {cap}, theory {})",
            fit.slope, fit.theory_exponent
        ));
    }
    check(ok, format!("shell sums exact; {}", lines.join("; ")))
}

fn pair_count() -> Outcome {
    let s = catalog_get("T2").map_err(|e| e.to_string())?;
    let mut maxima = Vec::new();
    for n2 in [4i64, 8, 16] {
        let mut best = 0u64;
        for i in 0..4 {
            for j in 0..4 {
                let cube = Cube {
                    center: vec![i * n2, j * n2],
                    side: n2 as f64,
                };
                let h = joint_pair_histogram(&s, &cube, n2 as f64).map_err(|e| e.to_string())?;
                best = best.max(h.values().copied().max().unwrap_or(0));
            }
        }
        maxima.push((n2, best));
    }
    let c = maxima[0].1 as f64 / 4f64.powf(2.2);
    let ok = maxima
        .iter()
        .all(|&(n2, m)| m as f64 <= c * (n2 as f64).powf(2.2) * (1.0 + 1e-12));
    let detail: Vec<String> = maxima
        .iter()
        .map(|(n2, m)| format!("N2={n2}: {m} vs bound {:.1}", c * (*n2 as f64).powf(2.2)))
        .collect();
    check(ok, detail.join("; "))
}

fn product_support() -> Outcome {
    let s = catalog_get("S2").map_err(|e| e.to_string())?;
    let mut rng = stream_rng(1, &[8]);
    let c1 = sample_point(&s, &mut rng);
    let c2 = sample_point(&s, &mut rng);
    let rows = support_check(
        &s,
        &DominantWeight::new(vec![3]),
        &DominantWeight::new(vec![2]),
        &c1,
        &c2,
        10,
    )
    .map_err(|e| e.to_string())?;
    let mut worst_outside = 0.0f64;
    let mut detected = BTreeSet::new();
    for r in &rows {
        let l = r.nu.coords[0];
        if !(1..=5).contains(&l) {
            worst_outside = worst_outside.max(r.projection_norm);
        }
        if r.projection_norm >= 1e-8 {
            if !r.in_predicted {
                return Err(format!("ℓ={l} detected outside the predicted support"));
            }
            detected.insert(l);
        }
    }
    check(
        worst_outside < 1e-8,
        format!("detected {detected:?}, max norm outside 1..=5 {worst_outside:.2e}"),
    )
}

fn linear_strichartz() -> Outcome {
    let s = catalog_get("T2").map_err(|e| e.to_string())?;
    let cfg = StriConfig {
        p: 8.0,
        n_list: vec![4.0, 8.0, 16.0, 32.0],
        trials: 5,
        seed: 2024,
        ensemble: Ensemble::Coherent,
        n_atoms: None,
        res: None,
        t_samples: None,
        mc_points: 0,
    };
    let t = strichartz_scan(&s, &cfg).map_err(|e| e.to_string())?;
    let sm = &t.summary;
    check(
        sm.slope.abs() <= 0.2 && sm.max_over_min <= 3.0,
        format!("slope {:.4}, max/min {:.3}", sm.slope, sm.max_over_min),
    )
}

fn bilinear() -> Outcome {
    let s = catalog_get("S3×S3").map_err(|e| e.to_string())?;
    let cfg = BilinearConfig {
        n1: 8.0,
        n2_list: vec![2.0, 4.0],
        trials: 3,
        seed: 2024,
        ensemble: Ensemble::Coherent,
        n_atoms: None,
        res: None,
        mc_points: 200_000,
    };
    let t = bilinear_scan(&s, &cfg).map_err(|e| e.to_string())?;
    let rel_se = t
        .rows
        .iter()
        .filter_map(|r| r.stderr.map(|se| se / r.norm))
        .fold(0.0, f64::max);
    let slope = t.summary.norm_slope;
    check(
        (1.4..=2.6).contains(&slope),
        format!("norm slope {slope:.3} (theory 2), max relative MC stderr {rel_se:.2e}"),
    )
}

fn eigenfunction() -> Outcome {
    let s = catalog_get("T5").map_err(|e| e.to_string())?;
    let p = 16.0;
    let cfg = EigenConfig {
        p,
        shells: vec![int(25), int(100), int(400)],
        trials: 3,
        seed: 2024,
        mc_points: 20_000,
        res: None,
    };
    let t = eigenfunction_lp_scan(&s, &cfg).map_err(|e| e.to_string())?;
    let d = s.dim as f64;
    let cap = (d - 2.0) / 2.0 - d / p + 0.2;
    let slope = t.summary.norm_slope;
    check(
        slope <= cap,
        format!("norm slope {slope:.3} (cap {cap:.4})"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_symstri");
    let args = [
        "stri",
        "scan",
        "--space",
        "T2",
        "--p",
        "6",
        "--N-list",
        "2,4",
        "--trials",
        "2",
        "--seed",
        "5",
        "--ensemble",
        "gaussian",
    ];
    let run = || -> Result<Vec<u8>, String> {
        let o = Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        let text = o.stdout;
        let cut = text.iter().position(|&b| b == b'\n').map_or(0, |i| i + 1);
        Ok(text[cut..].to_vec())
    };
    let (a, b) = (run()?, run()?);
    check(
        a == b && !a.is_empty(),
        format!("{} body bytes, identical: {}", a.len(), a == b),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        (
            "Laplace-formula oracle",
            laplace_oracle,
            Duration::from_secs(10),
        ),
        ("Farey exactness", farey_exactness, Duration::from_secs(30)),
        (
            "indicator Fourier bound",
            indicator_bound_check,
            Duration::from_secs(120),
        ),
        (
            "dispersive constant boundedness",
            dispersive_constant,
            Duration::from_secs(900),
        ),
        ("kernel Parseval", parseval, Duration::from_secs(60)),
        ("counting lemma", counting, Duration::from_secs(300)),
        ("pair-count bound", pair_count, Duration::from_secs(120)),
        ("product support", product_support, Duration::from_secs(60)),
        (
            "linear Strichartz scaling",
            linear_strichartz,
            Duration::from_secs(600),
        ),
        ("bilinear scaling", bilinear, Duration::from_secs(1200)),
        (
            "eigenfunction scaling",
            eigenfunction,
            Duration::from_secs(600),
        ),
        ("determinism audit", determinism, Duration::from_secs(60)),
    ];
    // optional criterion numbers on the command line restrict the run
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let over = took > *budget;
        let (tag, detail) = match &outcome {
            Ok(d) if !over => ("PASS", d.clone()),
            Ok(d) => (
                "FAIL",
                format!("{d}; over time budget {}s", budget.as_secs()),
            ),
            Err(d) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2} {tag} {name}: {detail} [{:.1}s]",
            i + 1,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

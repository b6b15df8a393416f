//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits 0 so that the workspace test run reports the verdicts without
//! aborting; set `LATSPEC_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL.

use std::time::{Duration, Instant};

use latspec::birman_schwinger::{
    bs_spectrum_box_extrapolated, bs_spectrum_gram, duality_check, threshold_gap, DualityOptions,
    EXTRAPOLATION_RADII,
};
use latspec::estimates::{clc_bound_check, thm32_lower_check};
use latspec::example52::rayleigh_lower_check;
use latspec::green::{green_value, GreenTable};
use latspec::hardy::{cell_forms, hardy_lower_bound, interpolate_dirichlet};
use latspec::lattice::{random_potential, BoxDomain, LatticePoint, Potential, WeightFamily};
use latspec::linalg::{default_zero_tol, eigenvalues_sym, inertia, Matrix, SymMatrix};
use latspec::operator::q0_form;
use latspec::sparse::{generate_sparse_set, sparse_spectrum_vs_values, thm68_experiment, Pattern, ValueLaw};
use latspec::{CountRoute, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WATSON: f64 = 0.25273100985585695;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn duality() -> Outcome {
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let opts = DualityOptions {
        r0: 16,
        step: 4,
        r_max: 64,
        margin_tol: 0.1,
        route: CountRoute::Reduced,
    };
    let (mut rows, mut agree, mut tight_checked, mut tight_agree) = (0, 0, 0, 0);
    for _ in 0..20 {
        let count = rng.gen_range(1..=5);
        let v: Potential<f64> = random_potential(&mut rng, 3, 3, count, 5.0).unwrap();
        let spec: Vec<f64> = bs_spectrum_gram(&v, &green).unwrap().eigenvalues;
        let mut alphas = Vec::new();
        while alphas.len() < 10 {
            let a = 10f64.powf(rng.gen_range(0.5f64.log10()..60f64.log10()));
            if threshold_gap(&spec, a) >= opts.margin_tol {
                alphas.push(a);
            }
        }
        let rep = duality_check(&v, &alphas, &green, &opts).unwrap();
        rows += rep.rows.len();
        agree += rep.rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
        // Informational: couplings at the 1e-6 exclusion, drawn without rejection.
        let loose: Vec<f64> = (0..2)
            .map(|_| 10f64.powf(rng.gen_range(0.5f64.log10()..60f64.log10())))
            .filter(|&a| threshold_gap(&spec, a) >= 1e-6)
            .collect();
        let tight = duality_check(&v, &loose, &green, &DualityOptions { margin_tol: 1e-6, ..opts.clone() }).unwrap();
        tight_checked += tight.rows.len();
        tight_agree += tight.rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
    }
    outcome(
        agree == rows && rows == 200,
        format!(
            "{agree}/{rows} exact agreements (relative threshold margin 0.1); \
             informational at margin 1e-6: {tight_agree}/{tight_checked}"
        ),
    )
}

fn thm32() -> Outcome {
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut pairs, mut violations) = (0, 0);
    for _ in 0..20 {
        let count = rng.gen_range(1..=10);
        let v: Potential<f64> = random_potential(&mut rng, 3, 3, count, 5.0).unwrap();
        let s: Vec<f64> = (0..20).map(|_| 10f64.powf(rng.gen_range(-3.0..0.5))).collect();
        let rep = thm32_lower_check(&v, &s, &green).unwrap();
        pairs += rep.rows.len();
        violations += rep.failures();
    }
    outcome(violations == 0 && pairs == 400, format!("{pairs} (V, s) pairs, {violations} violations"))
}

fn green_identities() -> Outcome {
    let table = GreenTable::<f64>::new(3, 128).unwrap();
    let origin = LatticePoint::origin(3);
    let r0 = table.laplacian_residual(&origin).unwrap();
    let h0 = table.entry(&origin).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while k < 5 {
        let x: Vec<i64> = (0..3).map(|_| rng.gen_range(-6..=6)).collect();
        if x.iter().all(|&c| c == 0) {
            continue;
        }
        worst = worst.max(table.laplacian_residual(&LatticePoint(x)).unwrap().abs());
        k += 1;
    }
    // Raw quadrature at two grids: the extrapolated value must beat both.
    let raw128: f64 = green_value(3, &origin, 128).unwrap();
    let raw256: f64 = green_value(3, &origin, 256).unwrap();
    let ok = (r0 - 1.0).abs() < 1e-3
        && worst < 1e-6
        && (h0.value - 0.2527).abs() <= 5e-4
        && (h0.value - WATSON).abs() < (raw256 - WATSON).abs();
    outcome(
        ok,
        format!(
            "(-Δh0)(0) = {r0:.9}; max |(-Δh0)(x)| over 5 x = {worst:.2e}; h0(0) = {:.9} ± {:.1e} \
             (Watson {WATSON:.9}; raw m=128 {raw128:.6}, m=256 {raw256:.6})",
            h0.value,
            h0.error.unwrap_or(0.0)
        ),
    )
}

fn cell_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut ok = true;
    let mut parts = Vec::new();
    for d in 1..=4usize {
        let f = cell_forms::<f64>(d).unwrap();
        let n = 1usize << d;
        let ones = vec![1.0; n];
        for m in [&f.q_cell, &f.d_cell] {
            let ev = eigenvalues_sym(m).unwrap();
            let tol = 1e-10 * ev[n - 1];
            ok &= m.quad_form(&ones).abs() < 1e-12 && ev[0].abs() < tol && ev[1] > tol;
        }
        let attain = [(&f.c_vector, f.c), (&f.c_prime_vector, f.c_prime)]
            .iter()
            .map(|(v, c)| (f.d_cell.quad_form(v) / f.q_cell.quad_form(v) - c).abs())
            .fold(0.0, f64::max);
        ok &= attain < 1e-10;
        let (lo, hi) = f.global_constants();
        let domain = BoxDomain::new(d, 3).unwrap();
        let mut violations = 0;
        for _ in 0..50 {
            let u: Vec<f64> = (0..domain.site_count())
                .map(|i| if domain.is_boundary(i) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect();
            let q = q0_form(&domain, &u).unwrap();
            let dd = interpolate_dirichlet(&domain, &u, &f).unwrap();
            if !(lo * q <= dd * (1.0 + 1e-12) && dd <= hi * q * (1.0 + 1e-12)) {
                violations += 1;
            }
        }
        ok &= violations == 0;
        parts.push(format!(
            "d={d}: cell (c, c') = ({:.6}, {:.6}), global ({lo:.6}, {hi:.6}), attainment {attain:.1e}, {violations} violations",
            f.c, f.c_prime
        ));
    }
    outcome(ok, parts.join("; "))
}

fn hardy_weight() -> Outcome {
    let est = hardy_lower_bound(&WeightFamily::<f64>::Coulomb { scale: 1.0 }, 3, &[4, 8, 12, 16]).unwrap();
    let b = &est.lower_bounds;
    let last = b[3] - b[2];
    let prev = b[2] - b[1];
    outcome(
        est.is_non_decreasing(0.0) && last < 0.25 * prev,
        format!(
            "bounds {:?}; final increment / previous = {:.3} (criterion < 0.25)",
            b.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>(),
            last / prev
        ),
    )
}

fn sparse_sandwich() -> Outcome {
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let set = generate_sparse_set(3, 6, 4.0, Pattern::Ray).unwrap();
    let cmp = sparse_spectrum_vs_values(&set, &ValueLaw::Power { q: 1.0 }.values(6), &green).unwrap();
    let rep = cmp.sandwich_report(0.0);
    outcome(
        cmp.delta < 0.05 && rep.passed(),
        format!("delta = {:.6e}; {} sandwich violations over 12 inequalities", cmp.delta, rep.failures()),
    )
}

fn gamma_trend() -> Outcome {
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for law in [ValueLaw::Power { q: 1.0 }, ValueLaw::Log] {
        let rows = thm68_experiment(3, &[6], &[4.0, 8.0], law, Pattern::Ray, &green).unwrap();
        ok &= rows[1].deviation < rows[0].deviation;
        parts.push(format!(
            "{}: deviation {:.4e} (γ=4) -> {:.4e} (γ=8)",
            law.name(),
            rows[0].deviation,
            rows[1].deviation
        ));
    }
    outcome(ok, parts.join("; "))
}

fn sharpness() -> Outcome {
    let rep = rayleigh_lower_check(2.0, 3, 3, 8.0).unwrap();
    let ok = rep.min_scaled() > 0.0 && rep.max_over_min() <= 3.0 && rep.max_truncation_change() < 1e-2;
    let scaled: Vec<String> = rep.rows.iter().map(|r| format!("{:.5e}", r.scaled)).collect();
    outcome(
        ok,
        format!(
            "n^(1/q) rho_n = [{}]; max/min = {:.3}; max truncation change {:.2e}; cross inner products {:?}",
            scaled.join(", "),
            rep.max_over_min(),
            rep.max_truncation_change(),
            rep.cross.iter().map(|c| format!("{:.2e}", c.2)).collect::<Vec<_>>()
        ),
    )
}

fn clc_trend() -> Outcome {
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let alphas: Vec<f64> = (0..24).map(|k| 40f64.powf(k as f64 / 23.0)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for _ in 0..3 {
        let domain = BoxDomain::new(3, 3).unwrap();
        let mut v = Potential::<f64>::new(3);
        while v.len() < 5 {
            let x = domain.point(rng.gen_range(0..domain.site_count()));
            if v.get(&x.0) == 0.0 {
                v.insert(x, rng.gen_range(1.0..5.0)).unwrap();
            }
        }
        let (_, trend) = clc_bound_check(&v, &alphas, &green).unwrap();
        ok &= trend.eventually_non_increasing() && trend.last_over_max < 0.5;
        parts.push(format!(
            "counts {:?}, last/max {:.3}",
            trend.counts.iter().step_by(4).collect::<Vec<_>>(),
            trend.last_over_max
        ));
    }
    outcome(ok, parts.join("; "))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix<f64> {
    SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn linalg_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut mismatches = 0;
    for k in 0..200 {
        let n = rng.gen_range(1..=30);
        let a = if k % 4 == 0 {
            // Rank-deficient: B^T B - C^T C with few columns.
            let r = rng.gen_range(0..=n / 2);
            let b = Matrix::from_fn(r, n, |_, _| rng.gen_range(-1.0..1.0));
            let c = Matrix::from_fn(r, n, |_, _| rng.gen_range(-1.0..1.0));
            let (bb, cc) = (b.transpose().matmul(&b), c.transpose().matmul(&c));
            SymMatrix::from_fn(n, |i, j| bb[(i, j)] - cc[(i, j)])
        } else {
            random_sym(&mut rng, n)
        };
        let tol = default_zero_tol(&a);
        let ine = inertia(&a, 0.0, tol).unwrap();
        let ev = eigenvalues_sym(&a).unwrap();
        let minus = ev.iter().filter(|&&l| l < -tol).count();
        let zero = ev.iter().filter(|&&l| l.abs() <= tol).count();
        if (ine.n_minus, ine.n_zero, ine.n_plus) != (minus, zero, n - minus - zero) {
            mismatches += 1;
        }
    }
    let green = GreenTable::<f64>::with_default_grid(3).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v: Potential<f64> = random_potential(&mut rng, 3, 3, 3, 5.0).unwrap();
        let g = bs_spectrum_gram(&v, &green).unwrap().eigenvalues;
        let b = bs_spectrum_box_extrapolated(&v, &EXTRAPOLATION_RADII).unwrap().eigenvalues;
        for (x, y) in g.iter().zip(&b) {
            worst = worst.max((x - y).abs() / x);
        }
        if g.len() != b.len() {
            worst = f64::INFINITY;
        }
    }
    outcome(
        mismatches == 0 && worst < 1e-3,
        format!("{mismatches}/200 inertia mismatches; Gram vs box worst relative gap {worst:.2e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("duality", duality, Duration::from_secs(600)),
        ("thm32-lower-bound", thm32, Duration::from_secs(60)),
        ("green-identities", green_identities, Duration::from_secs(120)),
        ("cell-form-equivalence", cell_equivalence, Duration::from_secs(60)),
        ("hardy-weight-trend", hardy_weight, Duration::from_secs(300)),
        ("sparse-sandwich", sparse_sandwich, Duration::from_secs(60)),
        ("sparse-gamma-trend", gamma_trend, Duration::from_secs(120)),
        ("sharpness-example", sharpness, Duration::from_secs(900)),
        ("clc-o-trend", clc_trend, Duration::from_secs(600)),
        ("linalg-consistency", linalg_consistency, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let out = run();
        let elapsed = t.elapsed();
        let pass = out.pass && elapsed <= *budget;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name} [{:.1}s / {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            out.detail
        );
    }
    println!("acceptance: {}/{} PASS", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("LATSPEC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

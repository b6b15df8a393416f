use std::fmt::Write as _;

use latspec::birman_schwinger::{
    bs_spectrum_box_extrapolated, bs_spectrum_gram, duality_check, DualityOptions, EXTRAPOLATION_RADII,
};
use latspec::estimates::{
    clc_bound_check, cor53_bound, cor53_functional, logpow_tail_bound, thm31_upper_check, thm32_lower_check,
    Cor53Functional,
};
use latspec::example52::{rayleigh_lower_check, DEFAULT_R_MULT};
use latspec::green::{decay_report, default_grid};
use latspec::hardy::{cell_constants_closed_form, cell_forms, hardy_lower_bound, MAX_CELL_DIM};
use latspec::lattice::random_potential;
use latspec::operator::{assemble_hamiltonian, count_negative};
use latspec::report::fmt_num;
use latspec::sparse::{
    generate_sparse_set, gram_diagnostics, sparse_spectrum_vs_values, thm68_csv, thm68_experiment, Pattern,
    SparseSet, ValueLaw,
};
use latspec::{BoundReport, BoxDomain, GreenTable, LatticePoint, Potential, Verdict, WeightFamily};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{geomspace, require_positive, Params};
use crate::{CliError, Outcome};

const DEFAULT_DIM: usize = 3;
const MAX_DENSE_SITES: usize = 4096;

fn dim(p: &Params) -> Result<usize, CliError> {
    match p.dim.unwrap_or(DEFAULT_DIM) {
        0 => Err(CliError::usage("field `dim`: must be at least 1")),
        d => Ok(d),
    }
}

fn green_table(p: &Params, d: usize) -> Result<GreenTable<f64>, CliError> {
    let m = p.m.unwrap_or_else(|| default_grid(d.max(3)));
    Ok(GreenTable::new(d, m)?)
}

fn verdict_of(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn report_outcome(report: &BoundReport, extra: &str) -> Outcome {
    let mut summary = report.summary();
    if !extra.is_empty() {
        summary.push('\n');
        summary.push_str(extra);
    }
    Outcome {
        csv: report.to_csv(),
        summary,
        verdict: Some(report.verdict()),
    }
}

/// Builtin family or explicit potential named by `spec`.
fn family(field: &str, spec: &str, p: &Params, d: usize) -> Result<WeightFamily<f64>, CliError> {
    let scale = p.scale.unwrap_or(1.0);
    let fam = match spec {
        "delta" => WeightFamily::Delta { scale },
        "coulomb" => WeightFamily::Coulomb { scale },
        "powerdecay" => WeightFamily::PowerDecay {
            scale,
            exponent: p.exponent.unwrap_or(2.0),
        },
        "logpow" => WeightFamily::LogPow { q: p.q.unwrap_or(2.0) },
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.unwrap_or(0));
            let v = random_potential(
                &mut rng,
                d,
                p.support_radius.unwrap_or(3),
                p.count.unwrap_or(10),
                require_positive("vmax", p.vmax.unwrap_or(5.0))?,
            )?;
            WeightFamily::Custom(v)
        }
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                return Err(CliError::usage(format!(
                    "field `{field}`: unknown '{other}' (delta | coulomb | powerdecay | logpow | random | file:<path>)"
                )));
            };
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("field `{field}`: {path}: {e}")))?;
            let v = Potential::<f64>::from_json_str(&text)
                .map_err(|e| CliError::usage(format!("field `{field}`: {path}: {e}")))?;
            if v.dim() != d {
                return Err(CliError::usage(format!(
                    "field `{field}`: {path} has dim {}, run uses dim {d}",
                    v.dim()
                )));
            }
            WeightFamily::Custom(v)
        }
    };
    if let WeightFamily::Delta { scale } | WeightFamily::Coulomb { scale } | WeightFamily::PowerDecay { scale, .. } =
        &fam
    {
        if !(*scale >= 0.0) {
            return Err(CliError::usage("field `scale`: must be nonnegative"));
        }
    }
    Ok(fam)
}

fn potential_family(p: &Params, d: usize, default: &str) -> Result<WeightFamily<f64>, CliError> {
    family("potential", p.potential.as_deref().unwrap_or(default), p, d)
}

/// Explicit potentials pass through; formula families are cut at `truncate`.
fn finite(fam: &WeightFamily<f64>, p: &Params, d: usize, default_truncate: i64) -> Result<Potential<f64>, CliError> {
    Ok(match fam {
        WeightFamily::Custom(v) => v.clone(),
        _ => fam.restrict(&BoxDomain::new(d, p.truncate.unwrap_or(default_truncate))?),
    })
}

pub fn green(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let table = green_table(p, d)?;
    let mut csv = String::new();
    let mut summary = String::new();
    if let Some(radii) = &p.radii {
        csv.push_str("r,value,error,rescaled\n");
        for row in decay_report(&table, radii)? {
            let err = row.error.map_or(String::new(), fmt_num);
            let _ = writeln!(csv, "{},{},{},{}", row.r, fmt_num(row.value), err, fmt_num(row.rescaled));
            let _ = writeln!(summary, "h0({} e1) = {:.9} (r^(d-2) h0 = {:.6})", row.r, row.value, row.rescaled);
        }
        return Ok(Outcome {
            csv,
            summary: summary.trim_end().to_string(),
            verdict: None,
        });
    }
    let x = p.x.clone().unwrap_or_else(|| vec![0; d]);
    if x.len() != d {
        return Err(CliError::usage(format!("field `x`: expected {d} coordinates, got {}", x.len())));
    }
    let pt = LatticePoint(x);
    let e = table.entry(&pt)?;
    let lap = table.laplacian_residual(&pt)?;
    let coords: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    let _ = writeln!(csv, "{},value,error,m,method,laplacian", coords.join(","));
    let xs: Vec<String> = pt.0.iter().map(|c| c.to_string()).collect();
    let err = e.error.map_or(String::new(), fmt_num);
    let method = format!("{:?}", e.method).to_lowercase();
    let _ = writeln!(csv, "{},{},{},{},{},{}", xs.join(","), fmt_num(e.value), err, e.m, method, fmt_num(lap));
    let _ = write!(summary, "h0({}) = {:.12}", xs.join(","), e.value);
    if let Some(er) = e.error {
        let _ = write!(summary, " ± {er:.3e}");
    }
    let _ = write!(summary, " (m = {}, {method}); (-Δh0)(x) = {lap:.12}", e.m);
    Ok(Outcome {
        csv,
        summary,
        verdict: None,
    })
}

pub fn spectrum(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let fam = potential_family(p, d, "delta")?;
    let radii = p.radii.clone().unwrap_or_else(|| vec![8]);
    let alphas = p.alpha.clone().unwrap_or_else(|| vec![1.0]);
    let eig = p.eigenvalues.unwrap_or(false);
    let mut csv = String::from(if eig {
        "alpha,radius,j,eigenvalue\n"
    } else {
        "alpha,radius,count\n"
    });
    let mut summary = String::new();
    for &r in &radii {
        let domain = BoxDomain::new(d, r)?;
        let v = match &fam {
            WeightFamily::Custom(v) => v.clone(),
            _ => fam.restrict(&BoxDomain::new(d, p.truncate.unwrap_or(r).min(r))?),
        };
        for &a in &alphas {
            if eig {
                if domain.site_count() > MAX_DENSE_SITES {
                    return Err(CliError::usage(format!(
                        "field `radii`: {} sites exceed the dense limit {MAX_DENSE_SITES}",
                        domain.site_count()
                    )));
                }
                let vals = assemble_hamiltonian(&domain, a, &v)?.eigenvalues()?;
                for (j, e) in vals.iter().enumerate() {
                    let _ = writeln!(csv, "{},{r},{},{}", fmt_num(a), j + 1, fmt_num(*e));
                }
                let neg = vals.iter().filter(|&&e| e < 0.0).count();
                let _ = writeln!(summary, "alpha = {a}, R = {r}: lowest {:.9}, {neg} negative", vals[0]);
            } else {
                let c = count_negative(&domain, a, &v)?;
                let _ = writeln!(csv, "{},{r},{c}", fmt_num(a));
                let _ = writeln!(summary, "alpha = {a}, R = {r}: N_- = {c}");
            }
        }
    }
    Ok(Outcome {
        csv,
        summary: summary.trim_end().to_string(),
        verdict: None,
    })
}

pub fn bs(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let fam = potential_family(p, d, "random")?;
    let v = finite(&fam, p, d, 2)?;
    let green = green_table(p, d)?;
    if let Some(alphas) = &p.alpha {
        let opts = DualityOptions {
            margin_tol: p.margin.unwrap_or(DualityOptions::default().margin_tol),
            ..DualityOptions::default()
        };
        let report = duality_check(&v, alphas, &green, &opts)?;
        return Ok(report_outcome(&report, ""));
    }
    let gram = bs_spectrum_gram(&v, &green)?;
    let radii = p.radii.clone().unwrap_or_else(|| EXTRAPOLATION_RADII.to_vec());
    let bx = bs_spectrum_box_extrapolated(&v, &radii)?;
    let tol = require_positive("tol", p.tol.unwrap_or(1e-4))?;
    let mut report = BoundReport::new("bs-agreement", &["j"]);
    let k = gram.len().max(bx.len());
    for j in 0..k {
        let g = gram.eigenvalues.get(j).copied().unwrap_or(0.0);
        let b = bx.eigenvalues.get(j).copied().unwrap_or(0.0);
        report.push_le(vec![(j + 1) as f64], (g - b).abs(), tol * g.abs().max(b.abs()), 0.0);
    }
    report.note(format!(
        "gram ({}): {} eigenvalues, largest {:.9}",
        gram.resolution,
        gram.len(),
        gram.eigenvalues.first().copied().unwrap_or(0.0)
    ));
    report.note(format!(
        "box ({}): {} eigenvalues, largest {:.9}",
        bx.resolution,
        bx.len(),
        bx.eigenvalues.first().copied().unwrap_or(0.0)
    ));
    Ok(report_outcome(&report, ""))
}

pub fn hardy(p: &Params) -> Result<Outcome, CliError> {
    let Some(spec) = &p.weight else {
        return cell_constants(p);
    };
    let d = dim(p)?;
    let w = family("weight", spec, p, d)?;
    let radii = p.radii.clone().unwrap_or_else(|| vec![4, 8, 12, 16]);
    let est = hardy_lower_bound(&w, d, &radii)?;
    let method = format!("{:?}", est.method).to_lowercase();
    let mut csv = String::from("weight,radius,lower_bound,increment,method\n");
    for (i, (&r, &b)) in est.radii.iter().zip(&est.lower_bounds).enumerate() {
        let inc = if i == 0 {
            String::new()
        } else {
            fmt_num(b - est.lower_bounds[i - 1])
        };
        let _ = writeln!(csv, "{},{r},{},{inc},{method}", est.weight, fmt_num(b));
    }
    let limit = p.tol.unwrap_or(0.25);
    let monotone = est.is_non_decreasing(1e-12);
    let ratio = est.last_increment_ratio();
    let mut summary = format!(
        "box Hardy bounds for {} ({method}): {:?}\nnon-decreasing: {monotone}",
        est.weight, est.lower_bounds
    );
    let verdict = match ratio {
        Some(r) => {
            let _ = write!(summary, "; final increment / previous = {r:.4} (limit {limit})");
            Some(verdict_of(monotone && r < limit))
        }
        None => Some(verdict_of(monotone)),
    };
    Ok(Outcome { csv, summary, verdict })
}

fn cell_constants(p: &Params) -> Result<Outcome, CliError> {
    let top = p.dim.unwrap_or(4);
    if top == 0 || top > MAX_CELL_DIM {
        return Err(CliError::usage(format!("field `dim`: cell forms need 1 <= d <= {MAX_CELL_DIM}")));
    }
    let tol = p.tol.unwrap_or(1e-10);
    let mut csv = String::from("dim,c,c_prime,global_c,global_c_prime,closed_c,closed_c_prime,verdict\n");
    let mut summary = String::new();
    let mut all = true;
    for d in 1..=top {
        let f = cell_forms::<f64>(d)?;
        let (gc, gcp) = f.global_constants();
        let (cc, ccp) = cell_constants_closed_form(d);
        let ok = (f.c - cc).abs() <= tol && (f.c_prime - ccp).abs() <= tol;
        all &= ok;
        let v = verdict_of(ok);
        let _ = writeln!(
            csv,
            "{d},{},{},{},{},{},{},{v}",
            fmt_num(f.c),
            fmt_num(f.c_prime),
            fmt_num(gc),
            fmt_num(gcp),
            fmt_num(cc),
            fmt_num(ccp)
        );
        let _ = writeln!(summary, "d = {d}: cell (c, c') = ({:.12}, {:.12}), global ({gc:.6}, {gcp:.6}) {v}", f.c, f.c_prime);
    }
    Ok(Outcome {
        csv,
        summary: summary.trim_end().to_string(),
        verdict: Some(verdict_of(all)),
    })
}

pub fn thm32(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let v = finite(&potential_family(p, d, "delta")?, p, d, 4)?;
    let s = p.s.clone().unwrap_or_else(|| geomspace(1e-3, 10.0, 20));
    let green = green_table(p, d)?;
    Ok(report_outcome(&thm32_lower_check(&v, &s, &green)?, ""))
}

pub fn clc(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let v = finite(&potential_family(p, d, "random")?, p, d, 3)?;
    let alphas = p.alpha.clone().unwrap_or_else(|| geomspace(0.5, 512.0, 12));
    let green = green_table(p, d)?;
    let (report, trend) = clc_bound_check(&v, &alphas, &green)?;
    let extra = format!(
        "N_- / alpha^(d/2) non-increasing from grid index {} (last / max = {:.4})",
        trend.non_increasing_from, trend.last_over_max
    );
    Ok(report_outcome(&report, &extra))
}

pub fn thm31(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let v = finite(&potential_family(p, d, "random")?, p, d, 3)?;
    let q = p.q.unwrap_or(1.0);
    let band = match p.band.as_deref() {
        None => (1e-3, 1e3),
        Some([lo, hi]) if *lo > 0.0 && hi > lo => (*lo, *hi),
        Some(_) => return Err(CliError::usage("field `band`: expected two values 0 < lo < hi")),
    };
    let green = green_table(p, d)?;
    Ok(report_outcome(&thm31_upper_check(&[v], q, band, &green)?, ""))
}

pub fn cor53(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let q = p.q.unwrap_or(2.0);
    let fam = potential_family(p, d, "logpow")?;
    let truncate = p.truncate.unwrap_or(16);
    let full = finite(&fam, p, d, truncate)?;
    let tail_bound = match &fam {
        WeightFamily::Custom(_) | WeightFamily::Delta { .. } => Some(0.0),
        WeightFamily::LogPow { q: fq } if d == 3 && *fq == q => logpow_tail_bound(q, truncate as f64).ok(),
        _ => None,
    };
    let functional = Cor53Functional {
        truncated: cor53_functional(&full, q)?,
        tail_bound,
    };
    let counted = match &fam {
        WeightFamily::Custom(v) => v.clone(),
        _ => fam.restrict(&BoxDomain::new(d, p.count_radius.unwrap_or(3))?),
    };
    let alphas = p.alpha.clone().unwrap_or_else(|| geomspace(1.0, 100.0, 8));
    let green = green_table(p, d)?;
    Ok(report_outcome(&cor53_bound(&counted, &functional, q, &alphas, &green)?, ""))
}

fn sparse_set(p: &Params) -> Result<SparseSet, CliError> {
    let d = dim(p)?;
    let n = p.n.as_ref().and_then(|v| v.first().copied()).unwrap_or(6);
    let gamma = p.gamma.as_ref().and_then(|v| v.first().copied()).unwrap_or(4.0);
    Ok(generate_sparse_set(d, n, gamma, pattern(p)?)?)
}

fn pattern(p: &Params) -> Result<Pattern, CliError> {
    p.pattern
        .as_deref()
        .unwrap_or("ray")
        .parse()
        .map_err(|e: latspec::Error| CliError::usage(format!("field `pattern`: {e}")))
}

fn law(p: &Params) -> Result<ValueLaw, CliError> {
    match p.law.as_deref().unwrap_or("power") {
        "power" => Ok(ValueLaw::Power {
            q: require_positive("law_q", p.law_q.unwrap_or(1.0))?,
        }),
        "log" => Ok(ValueLaw::Log),
        other => Err(CliError::usage(format!("field `law`: unknown '{other}' (power | log)"))),
    }
}

pub fn sparse_generate(p: &Params) -> Result<Outcome, CliError> {
    let set = sparse_set(p)?;
    let mut summary = format!("{} points; A_sum = {:.6e}, A_sup = {:.6e}", set.len(), set.a_sum, set.a_sup);
    for a in &set.adjustments {
        let _ = write!(summary, "\n  {a}");
    }
    Ok(Outcome {
        csv: set.to_csv(),
        summary,
        verdict: None,
    })
}

pub fn sparse_gram(p: &Params) -> Result<Outcome, CliError> {
    let set = sparse_set(p)?;
    let green = green_table(p, set.dim)?;
    let diag = gram_diagnostics(&set, &green)?;
    let cmp = sparse_spectrum_vs_values(&set, &law(p)?.values(set.len()), &green)?;
    let report = cmp.sandwich_report(p.tol.unwrap_or(1e-9));
    let extra = format!(
        "||G - I||_2 = {:.6e}, Schur bound {:.6e}, quadrature perturbation {:.3e}; max |lambda/(mu^2 p) - 1| = {:.6e}",
        diag.delta_spec,
        diag.delta_schur,
        diag.delta_error,
        cmp.deviation()
    );
    Ok(report_outcome(&report, &extra))
}

pub fn sparse_thm68(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let ns = p.n.clone().unwrap_or_else(|| vec![6]);
    let mut gammas = p.gamma.clone().unwrap_or_else(|| vec![2.0, 4.0, 8.0]);
    gammas.sort_by(f64::total_cmp);
    let law = law(p)?;
    let green = green_table(p, d)?;
    let rows = thm68_experiment(d, &ns, &gammas, law, pattern(p)?, &green)?;
    let mut ok = true;
    let mut summary = format!("law {}", law.name());
    for &n in &ns {
        let devs: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.deviation).collect();
        let falling = devs.windows(2).all(|w| w[1] <= w[0]);
        ok &= falling;
        let shown: Vec<String> = devs.iter().map(|x| format!("{x:.3e}")).collect();
        let _ = write!(
            summary,
            "\nn = {n}: deviations [{}] over gamma {gammas:?}, non-increasing: {falling}",
            shown.join(", ")
        );
    }
    Ok(Outcome {
        csv: thm68_csv(&rows),
        summary,
        verdict: Some(verdict_of(ok)),
    })
}

pub fn example52(p: &Params) -> Result<Outcome, CliError> {
    let d = dim(p)?;
    let q = p.q.unwrap_or(2.0);
    let n_max = p.n_max.unwrap_or(3);
    if n_max == 0 {
        return Err(CliError::usage("field `n_max`: must be at least 1"));
    }
    let r_mult = require_positive("r_mult", p.r_mult.unwrap_or(DEFAULT_R_MULT))?;
    let tol = p.tol.unwrap_or(1e-2);
    let rep = rayleigh_lower_check(q, n_max, d, r_mult)?;
    let positive = rep.min_scaled() > 0.0;
    let stable = rep.max_truncation_change() < tol;
    let summary = format!(
        "n^(1/q) rho_n: min {:.6e}, max / min {:.4}; largest truncation change {:.3e} (limit {tol})",
        rep.min_scaled(),
        rep.max_over_min(),
        rep.max_truncation_change()
    );
    Ok(Outcome {
        csv: rep.to_csv(),
        summary,
        verdict: Some(verdict_of(positive && stable)),
    })
}

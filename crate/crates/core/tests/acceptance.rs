//! Acceptance criteria, one PASS/FAIL line each. Expected values come from
//! closed forms or independent computations in this file.

use std::f64::consts::{E, PI};
use std::process::ExitCode;
use std::time::Instant;

use odecert::bound::{bound_report, compute_hmax, forward_error_oracle, oracle_config, spectral_frame, BoundMode};
use odecert::integrator::DerivSource;
use odecert::linalg::{LinalgError, DEFAULT_COMPLEX_TOL};
use odecert::residual::{profile, profile_on_mesh};
use odecert::{
    catalog, integrate_dp45, integrate_rk4_fixed, linspace, parse_expr, real_eigen, residual_at, trajectory_from_table,
    Curve, ExprCurve, HermiteSpline, IntegratorConfig, Matrix, TableRow, Trajectory, Vector,
};
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn example_spline() -> (odecert::LinearOdeProblem<f64>, HermiteSpline<f64>) {
    let p = catalog::<f64>("example1").unwrap();
    let v = |x: f64| Vector::from_vec(vec![x]);
    let rows = [1.0, E, E * E].iter().enumerate().map(|(k, &x)| TableRow { t: k as f64, x: v(x), xp: Some(v(x)) }).collect();
    let s = HermiteSpline::fit(&trajectory_from_table(rows, &p).unwrap());
    (p, s)
}

fn c1_example_regression() -> Outcome {
    let (p, s) = example_spline();
    let want = [1.0, 1.0, 2.0 * E - 5.0, 3.0 - E];
    let got = s.coefficients(0, 0);
    for (g, w) in got.iter().zip(&want) {
        ensure(rel(*g, *w) <= 1e-12, || format!("coefficients {got:?} vs {want:?}"))?;
    }
    for t in [0.0, 1.0, 2.0] {
        let d = residual_at(&s, &p, t).unwrap()[0];
        ensure(d.abs() <= 1e-12, || format!("δ({t}) = {d:e}"))?;
    }
    let closed = ((E - 3.0) * 0.5 - 4.0 * E + 11.0) * (0.5 - 1.0) * 0.5;
    let d = residual_at(&s, &p, 0.5).unwrap()[0];
    ensure((d - closed).abs() <= 1e-9, || format!("δ(0.5) = {d} vs {closed}"))?;
    Ok(format!("δ(0.5) = {d:.9}"))
}

fn c2_sharpness() -> Outcome {
    let p = catalog::<f64>("example1").unwrap();
    let frame = spectral_frame(&p).unwrap();
    let eps = 1e-3;
    let curve = ExprCurve::new(vec![parse_expr("1.001*exp(t) - 0.001").unwrap()], (0.0, 2.0));
    let mesh = linspace(0.0, 2.0, 5);
    let prof = profile_on_mesh(&curve, &mesh, &p, Some(&frame.eig), 32);
    let h = compute_hmax(&p, &frame, 1024);
    ensure(frame.lambda1() == 1.0 && frame.norm_p == 1.0 && h == 0.0 && frame.n == 1, || "frame is not (1, 1, 0, 1)".into())?;
    let grid = [0.5, 1.0, 2.0];
    let mut worst: f64 = 0.0;
    for mode in [BoundMode::Global, BoundMode::Stepwise] {
        let r = bound_report(mode, &frame, h, &prof, &mesh, &grid).unwrap();
        for (&t, &b) in grid.iter().zip(&r.envelope) {
            let exact = eps * (t.exp() - 1.0);
            let err = (t.exp() - curve.value(t).unwrap()[0]).abs();
            worst = worst.max(rel(b, exact)).max(rel(err, exact));
            ensure(rel(b, exact) <= 1e-12, || format!("{mode}: B({t}) = {b:e}, want {exact:e}"))?;
            ensure(rel(err, exact) <= 1e-12, || format!("|Δx({t})| = {err:e}, want {exact:e}"))?;
        }
    }
    Ok(format!("worst relative gap {worst:.1e}"))
}

fn hermite_of(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> HermiteSpline<f64> {
    let nodes = linspace(a, b, n + 1);
    let values = nodes.iter().map(|&t| Vector::from_vec(vec![f(t)])).collect();
    let derivs = nodes.iter().map(|&t| Vector::from_vec(vec![df(t)])).collect();
    HermiteSpline::fit(&Trajectory::new(nodes, values, derivs, DerivSource::Supplied).unwrap())
}

fn c3_hermite_order() -> Outcome {
    type F = fn(f64) -> f64;
    let cases: [(&str, F, F, f64, f64, f64); 2] = [
        ("sin", f64::sin, f64::cos, 0.0, PI, 1.0),
        ("exp(t/2)", |t| (t / 2.0).exp(), |t| 0.5 * (t / 2.0).exp(), 0.0, 2.0, E / 16.0),
    ];
    let mut ratios = Vec::new();
    for (name, f, df, a, b, m4) in cases {
        let mut prev: Option<f64> = None;
        let n0 = ((b - a) / 0.25).ceil() as usize;
        for k in 0..=4 {
            let n = n0 << k;
            let s = hermite_of(f, df, a, b, n);
            let h = (b - a) / n as f64;
            let err = linspace(a, b, 20 * n + 1).iter().map(|&t| (s.eval(t).unwrap()[0] - f(t)).abs()).fold(0.0, f64::max);
            let bound = h.powi(4) * m4 / 384.0;
            ensure(err <= bound, || format!("{name} h={h}: {err:e} > {bound:e}"))?;
            if let Some(p) = prev {
                let r = p / err;
                ensure((12.0..=20.0).contains(&r), || format!("{name} ratio {r} at h={h}"))?;
                ratios.push(r);
            }
            prev = Some(err);
        }
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok(format!("ratios in [{lo:.2}, {hi:.2}]"))
}

const SYSTEMS: [&str; 3] = ["invariant2x2", "variant-stable", "suspension"];

fn c4_soundness() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in SYSTEMS {
        let p = catalog::<f64>(name).unwrap();
        let ex = p.exact().unwrap();
        let frame = spectral_frame(&p).unwrap();
        let h = compute_hmax(&p, &frame, 1024);
        let grid = linspace(p.t0(), p.tm(), 512);
        for tol in [1e-5, 1e-7] {
            let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(tol)).unwrap();
            let s = HermiteSpline::fit(&tr);
            let prof = profile(&s, &p, Some(&frame.eig), 32);
            for mode in [BoundMode::Global, BoundMode::Stepwise] {
                let r = bound_report(mode, &frame, h, &prof, tr.nodes(), &grid).unwrap();
                for (&t, &b) in grid.iter().zip(&r.envelope) {
                    let err = (&ex.value(t) - &s.eval(t).unwrap()).inf_norm();
                    ensure(err <= b * (1.0 + 1e-9) + 1e-14, || format!("{name} tol={tol:e} {mode} t={t}: {err:e} > {b:e}"))?;
                    if b > 0.0 {
                        worst = worst.max(err / b);
                    }
                }
            }
        }
    }
    Ok(format!("max ‖Δx‖/B = {worst:.3e}"))
}

fn c5_stability() -> Outcome {
    let setup = |name: &str| {
        let p = catalog::<f64>(name).unwrap();
        let frame = spectral_frame(&p).unwrap();
        let h = compute_hmax(&p, &frame, 1024);
        let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-6)).unwrap();
        let prof = profile(&HermiteSpline::fit(&tr), &p, Some(&frame.eig), 32);
        (p, frame, h, tr, prof)
    };
    let (p, frame, h, tr, prof) = setup("variant-stable");
    let r = bound_report(BoundMode::Global, &frame, h, &prof, tr.nodes(), &linspace(p.t0(), p.tm(), 512)).unwrap();
    ensure(r.mu < 0.0, || format!("variant-stable μ = {}", r.mu))?;
    let cap = frame.norm_p * r.delta.max() / r.mu.abs();
    ensure(r.max_bound() <= cap, || format!("max B {:e} > cap {cap:e}", r.max_bound()))?;
    let mu_stable = r.mu;

    let (_, frame, h, tr, prof) = setup("suspension");
    let r = bound_report(BoundMode::Global, &frame, h, &prof, tr.nodes(), &[0.3, 0.5]).unwrap();
    ensure(r.mu > 0.0, || format!("suspension μ = {}", r.mu))?;
    let growth = r.envelope[1] / r.envelope[0];
    let need = (0.2 * r.mu).exp() / 2.0;
    ensure(growth >= need, || format!("growth {growth} < {need}"))?;
    Ok(format!("μ_stable = {mu_stable:.4}, μ_susp = {:.3}, growth {growth:.3e}", r.mu))
}

fn c6_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["invariant2x2", "variant-stable"] {
        let p = catalog::<f64>(name).unwrap();
        let ex = p.exact().unwrap();
        let tr = integrate_dp45(&p, &IntegratorConfig::with_tolerance(1e-6)).unwrap();
        let s = HermiteSpline::fit(&tr);
        let (grid, dx) = forward_error_oracle(&p, &s, &oracle_config()).unwrap();
        for (&t, d) in grid.iter().zip(&dx) {
            let gap = (d - &(&ex.value(t) - &s.eval(t).unwrap())).inf_norm();
            worst = worst.max(gap);
            ensure(gap <= 1e-6, || format!("{name} t={t}: gap {gap:e}"))?;
        }
    }
    Ok(format!("max gap {worst:.2e}"))
}

/// Gauss–Jordan inverse with partial pivoting.
fn gj_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().copied().chain((0..n).map(|j| f64::from(u8::from(i == j)))).collect())
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        let d = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let row_c = a[c].clone();
                a[r].iter_mut().zip(&row_c).for_each(|(v, w)| *v -= f * w);
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn c7_eigen() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(2..=8);
        let mut lambdas: Vec<f64> = Vec::with_capacity(n);
        let mut x = rng.gen_range(-5.0..-1.0);
        for _ in 0..n {
            lambdas.push(x);
            x += rng.gen_range(0.1..2.0);
        }
        let p: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j)) + rng.gen_range(-0.3..0.3)).collect()).collect();
        let pi = gj_inverse(&p);
        let a: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| p[i][k] * lambdas[k] * pi[k][j]).sum()).collect()).collect();
        let am = Matrix::from_fn(n, n, |i, j| a[i][j]);
        let eig = real_eigen(&am, DEFAULT_COMPLEX_TOL).map_err(|e| format!("case {case} (n={n}): {e}"))?;
        let r = eig.reconstruct().sub_mat(&am).max_abs() / am.max_abs();
        worst = worst.max(r);
        ensure(r <= 1e-10, || format!("case {case} (n={n}): reconstruction {r:e}"))?;
        let mut want = lambdas.clone();
        want.sort_by(|x, y| y.total_cmp(x));
        for (g, w) in eig.lambdas.iter().zip(&want) {
            ensure((g - w).abs() <= 1e-8 * (1.0 + w.abs()), || format!("case {case}: λ {g} vs {w}"))?;
        }
    }
    let rot = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
    ensure(
        matches!(real_eigen(&rot, DEFAULT_COMPLEX_TOL), Err(LinalgError::ComplexSpectrum { .. })),
        || "rotation did not raise ComplexSpectrum".into(),
    )?;
    Ok(format!("max relative reconstruction {worst:.2e}"))
}

fn c8_orders() -> Outcome {
    let p = catalog::<f64>("example1").unwrap();
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let tr = integrate_rk4_fixed(&p, h).unwrap();
            (tr.values().last().unwrap()[0] - 2f64.exp()).abs()
        })
        .collect();
    let mut orders = Vec::new();
    for w in errs.windows(2) {
        let o = (w[0] / w[1]).log2();
        ensure((3.5..=4.5).contains(&o), || format!("RK4 observed order {o}"))?;
        orders.push(o);
    }
    for name in SYSTEMS {
        let pr = catalog::<f64>(name).unwrap();
        let ex = pr.exact().unwrap();
        let mut last = f64::INFINITY;
        for k in 3..=9 {
            let tol = 10f64.powi(-k);
            let tr = integrate_dp45(&pr, &IntegratorConfig::with_tolerance(tol)).unwrap();
            let e = tr.nodes().iter().zip(tr.values()).map(|(&t, x)| (x - &ex.value(t)).inf_norm()).fold(0.0, f64::max);
            ensure(e < last, || format!("{name}: error {e:e} at rtol {tol:e} not below {last:e}"))?;
            last = e;
        }
    }
    Ok(format!("RK4 orders {:.3}, {:.3}", orders[0], orders[1]))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 exponential example regression", c1_example_regression),
        ("2 sharpness equality", c2_sharpness),
        ("3 Hermite fourth-order bound", c3_hermite_order),
        ("4 bound soundness on the three systems", c4_soundness),
        ("5 stability dichotomy", c5_stability),
        ("6 forward-error oracle equivalence", c6_oracle),
        ("7 eigendecomposition property", c7_eigen),
        ("8 integrator orders", c8_orders),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS  criterion {name}: {detail} ({ms:.0} ms)"),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why} ({ms:.0} ms)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

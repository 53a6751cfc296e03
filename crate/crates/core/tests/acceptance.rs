//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ifslab::applications::{
    baker_vs_bc, bc_bounds, bc_chaos_game, bc_entropy_lyapunov, bc_region_classify, bc_region_scan, cocycle_lyapunov,
    cocycle_lyapunov_uniform, furstenberg_gibbs, furstenberg_gibbs_norm, furstenberg_pressure, ks_baker_bc,
    BakerSpec, FurstenbergSpec, PlaceDepBC, RegionClass,
};
use ifslab::dim_est::{box_dimension_estimate, correlation_dimension_estimate, energy_continuity_probe, symbolic_energy};
use ifslab::ifs::{
    bernoulli_convolution_family, mobius_contraction_norm, vertical_translate_family, IFSFamily, Interval, MapSpec,
    ParamBox,
};
use ifslab::symbolic::Word;
use ifslab::thermo::{
    conformal_similarity_dimension, equilibrium_check, ergodic_stats, measure_modulus, solve_similarity_dimension,
    transfer_operator_solve, GibbsApproximation, Potential, PotentialKind,
};
use ifslab::transversality::check_mt;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn affine(maps: &[(f64, f64)], hi: f64) -> IFSFamily {
    IFSFamily::affine(maps, Interval::new(0.0, hi)).unwrap()
}

fn cantor() -> IFSFamily {
    affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], 1.0)
}

fn halves() -> IFSFamily {
    affine(&[(0.5, 0.0), (0.5, 0.5)], 1.0)
}

fn similarity_solver() -> (Outcome, Duration) {
    let start = Instant::now();
    let s3 = solve_similarity_dimension(&[1.0 / 3.0; 3]).unwrap();
    let s2 = solve_similarity_dimension(&[1.0 / 3.0; 2]).unwrap();
    let elapsed = start.elapsed();
    let target = 2f64.ln() / 3f64.ln();
    let ok = (s3 - 1.0).abs() < 1e-10 && (s2 - target).abs() < 1e-10 && elapsed < Duration::from_millis(1);
    (check(ok, format!("s(1/3 x3) = {s3:.12}, s(1/3 x2) = {s2:.12}")), Duration::from_millis(1))
}

fn exact_overlap() -> (Outcome, Duration) {
    let f = affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 1.0)], 1.5);
    let depths: Vec<usize> = (6..=12).collect();
    let b = box_dimension_estimate(&f, &[], &depths).unwrap().estimate;
    let overlaps = f.detect_exact_overlap(&[], 2).unwrap();
    let (u, v) = (Word::new(vec![1, 3]), Word::new(vec![2, 1]));
    let found = overlaps.iter().any(|(a, b)| (a == &u && b == &v) || (a == &v && b == &u));
    let ok = (b - 0.876).abs() <= 0.03 && found;
    (check(ok, format!("box dim = {b:.6}, overlap [1,3]~[2,1] found = {found}")), Duration::from_secs(10))
}

fn gibbs_machinery() -> (Outcome, Duration) {
    let f = cantor();
    let p = [0.3, 0.7];
    let pot = Potential::bernoulli(&p, &f).unwrap();
    let solved = transfer_operator_solve(&pot, &f, &[], Some(1)).unwrap();
    let g = solved.at_depth(12).unwrap();
    let product_err = g
        .weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let exact: f64 = Word::from_index(i, 2, 12).symbols().iter().map(|&a| p[a as usize - 1]).product();
            (w - exact).abs()
        })
        .fold(0.0, f64::max);
    let residual = solved.eigen.as_ref().unwrap().residual;

    let s = conformal_similarity_dimension(&f, &[]).unwrap().value;
    let geo = Potential::new(PotentialKind::Geometric { s }, &f, &[]).unwrap();
    let gg = transfer_operator_solve(&geo, &f, &[], None).unwrap().at_depth(12).unwrap();
    let uniform_err = gg.weights.iter().map(|w| (w - 2f64.powi(-12)).abs()).fold(0.0, f64::max);
    let eq = equilibrium_check(&geo, &f, &[], &gg).unwrap().residual;
    let stats = ergodic_stats(&gg, &f, &[]).unwrap();
    let ratio_err = (stats.ratio - s).abs();
    let ok = product_err < 1e-10 && residual < 1e-10 && uniform_err <= 1e-8 && eq < 1e-6 && ratio_err < 1e-6;
    (
        check(
            ok,
            format!(
                "product err {product_err:.1e}, residual {residual:.1e}, 2^-n err {uniform_err:.1e}, equilibrium {eq:.1e}, |h/chi - s| {ratio_err:.1e}"
            ),
        ),
        Duration::from_secs(30),
    )
}

fn place_dependent_bc() -> (Outcome, Duration) {
    let spec = PlaceDepBC::new(0.55, 0.1).unwrap();
    let xs = bc_chaos_game(&spec, 1_000_000, 2024).points;
    let e = bc_entropy_lyapunov(&spec, &xs).unwrap();
    let b = bc_bounds(0.55, 0.1).unwrap();
    let tol = 3.0 * e.h_std_error;
    let contained = e.h_mc >= b.a - b.b - tol && e.h_mc <= b.a + tol;
    let chi_exact = e.chi_mc == -0.55f64.ln();
    let flat = PlaceDepBC::new(0.55, 0.0).unwrap();
    let h0 = bc_entropy_lyapunov(&flat, &bc_chaos_game(&flat, 10_000, 1).points).unwrap().h_mc;
    let ok = contained && chi_exact && h0 == 2f64.ln() && (b.a - 0.688062).abs() < 1e-6 && (b.b - 0.003472).abs() < 1e-6;
    (
        check(
            ok,
            format!(
                "h_mc = {:.6} +- {:.1e} in [{:.6}, {:.6}], chi exact = {chi_exact}, h(rho=0) = log 2: {}",
                e.h_mc,
                tol,
                b.a - b.b,
                b.a,
                h0 == 2f64.ln()
            ),
        ),
        Duration::from_secs(60),
    )
}

fn region_map() -> (Outcome, Duration) {
    let lambdas: Vec<f64> = (0..50).map(|i| 0.4 + 0.27 * i as f64 / 49.0).collect();
    let rhos: Vec<f64> = (0..50).map(|i| 0.45 * i as f64 / 49.0).collect();
    let cells = bc_region_scan(&lambdas, &rhos).unwrap();
    let abs_near_top = cells
        .iter()
        .any(|c| c.class == RegionClass::AbsContAe && c.lambda > 0.64 && c.rho <= 0.05);
    let below_half_singular = cells.iter().filter(|c| c.lambda < 0.5 && c.rho > 0.0).all(|c| c.class == RegionClass::Singular);
    let large_rho_singular = cells.iter().any(|c| c.class == RegionClass::Singular && c.lambda > 0.5 && c.rho >= 0.3);
    let spot1 = bc_region_classify(0.66, 0.02).unwrap().class == RegionClass::AbsContAe;
    let c = bc_region_classify(0.55, 0.45).unwrap();
    let spot2 = c.class == if c.bounds.dim_upper < 1.0 { RegionClass::Singular } else { RegionClass::Undetermined };
    let spot3 = bc_region_classify(0.45, 0.1).unwrap().class == RegionClass::Singular;
    let ok = cells.len() == 2500 && abs_near_top && below_half_singular && large_rho_singular && spot1 && spot2 && spot3;
    (
        check(
            ok,
            format!(
                "2500 cells; abs_cont_ae near 0.668: {abs_near_top}, lambda<1/2 singular: {below_half_singular}, large-rho singular: {large_rho_singular}, spots: {spot1}/{spot2}/{spot3}"
            ),
        ),
        Duration::from_secs(1),
    )
}

fn transversality() -> (Outcome, Duration) {
    let t = vertical_translate_family(&cantor(), 0.05).unwrap();
    let r = check_mt(&t, &[9, 9], 4, 40).unwrap();
    let constant = IFSFamily::new(
        vec![MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.25)],
        Interval::new(0.0, 1.0),
        ParamBox::new(vec![Interval::new(0.0, 1.0)]),
        0.5,
        0.5,
    )
    .unwrap();
    let c = check_mt(&constant, &[9], 4, 40).unwrap();
    let ok = r.eta_passed.is_some_and(|e| e >= 0.05) && c.violation_count > 0;
    (
        check(
            ok,
            format!("translates eta_passed = {:?}, constant family violations = {}", r.eta_passed, c.violation_count),
        ),
        Duration::from_secs(60),
    )
}

fn correlation_dimension() -> (Outcome, Duration) {
    let u = GibbsApproximation::bernoulli(&[0.5, 0.5], 1).unwrap();
    let c1 = correlation_dimension_estimate(&u, &halves(), &[], 12).unwrap().value;
    let b = GibbsApproximation::bernoulli(&[0.3, 0.7], 1).unwrap();
    let c2 = correlation_dimension_estimate(&b, &cantor(), &[], 12).unwrap().value;
    let exact = (0.3f64 * 0.3 + 0.7 * 0.7).ln() / (1.0f64 / 3.0).ln();
    let series: Vec<Vec<f64>> = [0.3, 0.6, 0.9, 1.2]
        .iter()
        .map(|&a| symbolic_energy(&u, &halves(), &[], a, 12).unwrap().terms)
        .collect();
    let monotone = series.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(x, y)| y >= x));
    let below = symbolic_energy(&u, &halves(), &[], 0.5, 12).unwrap().growth_rate.unwrap_or(f64::NAN);
    let above = symbolic_energy(&u, &halves(), &[], 1.5, 12).unwrap().growth_rate.unwrap_or(f64::NAN);
    let ok = (c1 - 1.0).abs() <= 0.02 && (c2 - exact).abs() <= 0.02 && monotone && below < 0.0 && above > 0.0;
    (
        check(
            ok,
            format!(
                "uniform halves {c1:.6}, Bernoulli(0.3,0.7) {c2:.6} vs {exact:.6}, monotone {monotone}, growth signs {below:.3}/{above:.3}"
            ),
        ),
        Duration::from_secs(30),
    )
}

fn furstenberg() -> (Outcome, Duration) {
    let a1 = [2.0, 1.0, 1.0, 2.0];
    let a2 = [1.0, 1.0, 1.0, 2.0];
    let mut identity = 0.0f64;
    for q in [0.0, 1.0] {
        let spec = FurstenbergSpec::new(vec![a1, a2], q).unwrap();
        for n in 1..=10 {
            let g = furstenberg_gibbs_norm(&spec, n).unwrap();
            identity = identity.max(cocycle_lyapunov(&spec, &g, n).unwrap().identity_residual);
        }
        identity = identity.max(cocycle_lyapunov_uniform(&spec, 10).unwrap().identity_residual);
    }
    let spec0 = FurstenbergSpec::new(vec![a1, a2], 0.0).unwrap();
    let uniform = furstenberg_gibbs_norm(&spec0, 8).unwrap().weights.iter().all(|&w| w == 1.0 / 256.0);
    let p0 = furstenberg_pressure(&spec0, 8).unwrap().value;
    let norm = mobius_contraction_norm(&a1);
    let in_u = FurstenbergSpec::new(vec![a1], 1.0).unwrap().in_u() && (norm - 1.0 / 3.0).abs() < 1e-15;
    let spec1 = FurstenbergSpec::new(vec![a1, a2], 1.0).unwrap();
    let paths = furstenberg_gibbs(&spec1, 8).unwrap().max_log_ratio;
    let ok = identity <= 1e-10 && uniform && p0 == 2f64.ln() && in_u && paths <= 0.05;
    (
        check(
            ok,
            format!(
                "identity residual {identity:.1e}, uniform at q=0 {uniform}, P(0) = {p0}, in U {in_u}, two-path max |log ratio| {paths:.4}"
            ),
        ),
        Duration::from_secs(60),
    )
}

fn baker() -> (Outcome, Duration) {
    let ks1 = baker_vs_bc(&BakerSpec::new(0.55, 0.1).unwrap(), 200_000, 99).unwrap();
    let ks2 = baker_vs_bc(&BakerSpec::new(0.6, 0.05).unwrap(), 200_000, 99).unwrap();
    let control =
        ks_baker_bc(&BakerSpec::new(0.55, 0.1).unwrap(), &PlaceDepBC::new(0.65, 0.1).unwrap(), 200_000, 99).unwrap();
    let ok = ks1 < 0.03 && ks2 < 0.03 && control > 0.1;
    (
        check(
            ok,
            format!("KS(0.55,0.1) = {ks1:.4}, KS(0.6,0.05) = {ks2:.4}, control baker 0.55 vs BC 0.65 = {control:.4} (needs > 0.1)"),
        ),
        Duration::from_secs(120),
    )
}

fn measure_continuity() -> (Outcome, Duration) {
    let f = bernoulli_convolution_family(0.5, 0.6684755).unwrap();
    let gibbs = |lam: f64| {
        let pot = Potential::place_dependent_bc(0.1, &f, &[lam]).unwrap();
        transfer_operator_solve(&pot, &f, &[lam], None).unwrap().at_depth(10).unwrap()
    };
    let m = measure_modulus(&gibbs(0.55), &gibbs(0.56), 10, 1.0).unwrap();
    let ga = GibbsApproximation::bernoulli(&[0.5, 0.5], 12).unwrap();
    let gb = GibbsApproximation::bernoulli(&[0.51, 0.49], 12).unwrap();
    let s = energy_continuity_probe(&ga, &gb, &halves(), &[], 0.8, 0.05).unwrap();
    let ok = m.c_hat.is_finite() && s.ratio_low >= 1.0 && s.ratio_high <= 1.0;
    (
        check(
            ok,
            format!(
                "c_hat = {:.4}, sandwich E_0.75(B) <= E_0.8(A) <= E_0.85(B): ratios {:.4} / {:.4}",
                m.c_hat, s.ratio_low, s.ratio_high
            ),
        ),
        Duration::from_secs(30),
    )
}

const CLI_RUNS: &[&[&str]] = &[
    &["sim-dim", "--ratios", "0.3333333,0.3333333"],
    &["pressure-curve", "--family", "cantor", "--depth", "8"],
    &["gibbs", "--potential", "first-symbol:0.3,0.7", "--depth", "6"],
    &["dim-scan", "--family", "bc", "--lambda", "0.55:0.6:3", "--depth", "8", "--levels", "6"],
    &["bc-region", "--lambda", "0.5:0.67:50", "--rho", "0:0.45:50"],
    &["bc-sample", "--lambda", "0.55", "--rho", "0:0.2:3", "--n", "20000", "--seed", "7"],
    &["transversality", "--family", "translates", "--grid", "5", "--depth", "3"],
    &["furstenberg", "--matrices", "2,1,1,2;1,1,1,2", "--q", "1", "--depth", "8"],
    &["baker", "--lambda", "0.55", "--rho", "0.1", "--n", "100000", "--seed", "7"],
];

fn cli_output(args: &[&str], out: &Path, extra: &[&str]) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ifslab"))
        .args(args)
        .args(extra)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn well_formed(bytes: &[u8]) -> bool {
    let text = String::from_utf8_lossy(bytes);
    if text.starts_with('{') {
        serde_json::from_str::<serde_json::Value>(&text)
            .map(|v| v.get("version").is_some() && v.get("config-echo").is_some())
            .unwrap_or(false)
    } else {
        text.lines().next().is_some_and(|h| !h.is_empty() && h.chars().any(|c| c.is_alphabetic()))
    }
}

fn determinism() -> (Outcome, Duration) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "lambda=0.55:0.6:2\nrho=0.1\nn=20000\nseed=3\n").unwrap();
    let cfg_str = cfg.to_str().unwrap().to_string();
    let mut runs: Vec<(Vec<&str>, Vec<&str>)> = CLI_RUNS.iter().map(|a| (a.to_vec(), Vec::new())).collect();
    runs.push((vec!["bc-sample"], vec!["--config", cfg_str.as_str()]));
    runs.push((vec!["gibbs", "--format", "csv"], vec!["--potential", "place-dependent:0.1", "--lambda", "0.6", "--depth", "5"]));
    let mut failures = Vec::new();
    for (k, (args, extra)) in runs.iter().enumerate() {
        let a = cli_output(args, &dir.path().join(format!("a{k}")), extra);
        let b = cli_output(args, &dir.path().join(format!("b{k}")), extra);
        match (a, b) {
            (Ok(a), Ok(b)) if a == b && well_formed(&a) => {}
            (Ok(_), Ok(_)) => failures.push(format!("{} differs or is malformed", args[0])),
            (Err(e), _) | (_, Err(e)) => failures.push(e),
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("{} invocations byte-identical across two runs", runs.len())
    } else {
        failures.join("; ")
    };
    (check(ok, detail), Duration::from_secs(600))
}

type Criterion = (&'static str, fn() -> (Outcome, Duration));

const CRITERIA: &[Criterion] = &[
    ("similarity-dimension solver", similarity_solver),
    ("exact-overlap attractor", exact_overlap),
    ("Gibbs machinery", gibbs_machinery),
    ("place-dependent Bernoulli convolution", place_dependent_bc),
    ("region map", region_map),
    ("transversality", transversality),
    ("correlation dimension", correlation_dimension),
    ("Furstenberg-like measures", furstenberg),
    ("baker map vs Bernoulli convolution", baker),
    ("measure-continuity conditions", measure_continuity),
    ("CLI determinism", determinism),
];

fn main() {
    // the harness has no filtering; honour `--list` so tooling can enumerate it
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in CRITERIA.iter().enumerate() {
            println!("criterion_{:02}: test ({name})", i + 1);
        }
        return;
    }
    let mut failed = 0;
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let (outcome, budget) = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.3} s, limit {} s{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs_f64(),
            if in_time { "" } else { ", over time" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

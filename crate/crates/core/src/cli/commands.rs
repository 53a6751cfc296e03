use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::{parse_list, parse_matrices, Config};
use super::family::{lambda_point, resolve_family};
use super::format::{fmt_num, Cell, Format, Table};
use crate::applications::{
    baker_orbit, bc_bounds, bc_chaos_game, bc_entropy_lyapunov, bc_region_scan, cell_seed, cocycle_lyapunov,
    cocycle_lyapunov_uniform, furstenberg_dimension, furstenberg_gibbs, furstenberg_gibbs_norm, furstenberg_pressure,
    ks_baker_bc, stationarity_check, BakerSpec, FurstenbergSpec, PlaceDepBC,
};
use crate::dim_est::dimension_report;
use crate::error::{Error, Result};
use crate::ifs::{mobius_family, IFSFamily, Interval};
use crate::thermo::{
    conformal_similarity_dimension, pressure, solve_similarity_dimension, transfer_operator_solve, GibbsApproximation,
    Potential, PotentialKind,
};
use crate::transversality::check_mt;

pub struct Report {
    pub result: Value,
    pub table: Option<Table>,
    pub default_format: Format,
    pub summary: String,
}

impl Report {
    fn json(result: Value, summary: String) -> Self {
        Report {
            result,
            table: None,
            default_format: Format::Json,
            summary,
        }
    }

    fn csv(table: Table, summary: String) -> Self {
        Report {
            result: table.to_json(),
            table: Some(table),
            default_format: Format::Csv,
            summary,
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn sim_dim(cfg: &mut Config) -> Result<Report> {
    if let Some(ratios) = cfg.f64_list("ratios")? {
        let s = solve_similarity_dimension(&ratios)?;
        return Ok(Report::json(json!({ "s": s, "ratios": ratios }), format!("s = {}", fmt_num(s))));
    }
    let fam = resolve_family(cfg, "cantor")?;
    let lambda = lambda_point(cfg, &fam)?;
    let est = conformal_similarity_dimension(&fam, &lambda)?;
    Ok(Report::json(
        json!({ "s": est.value, "depth": est.depth, "sensitivity": est.sensitivity }),
        format!("s = {} (depth {})", fmt_num(est.value), est.depth),
    ))
}

pub fn pressure_curve(cfg: &mut Config) -> Result<Report> {
    let fam = resolve_family(cfg, "cantor")?;
    let lambda = lambda_point(cfg, &fam)?;
    let ts = cfg.grid_or("t", "0:1:11")?.values();
    let depth = cfg.usize_or("depth", 10)?;
    let rows = ts
        .par_iter()
        .map(|&t| pressure(&fam, &lambda, t, depth))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["t", "depth", "pressure", "richardson", "best"]);
    for (t, p) in ts.iter().zip(&rows) {
        table.push(vec![(*t).into(), p.depth.into(), p.value.into(), p.richardson.into(), p.best().into()]);
    }
    Ok(Report::csv(table, format!("pressure-curve: {} points at depth {depth}", ts.len())))
}

/// Family with `m` equal non-overlapping pieces of `[0, 1]`.
fn equal_pieces(m: usize) -> Result<IFSFamily> {
    let r = 1.0 / m as f64;
    let maps: Vec<(f64, f64)> = (0..m).map(|i| (r, i as f64 * r)).collect();
    IFSFamily::affine(&maps, Interval::new(0.0, 1.0))
}

fn potential_from(cfg: &mut Config) -> Result<(Potential, IFSFamily, Vec<f64>)> {
    let spec = cfg.str_or("potential", "first-symbol:0.5,0.5");
    let (kind, arg) = spec.split_once(':').unwrap_or((spec.as_str(), ""));
    match kind {
        "first-symbol" => {
            let probs: Vec<f64> = parse_list(arg)?;
            let fam = if cfg.contains("family") || cfg.has_prefix("family.") {
                resolve_family(cfg, "halves")?
            } else {
                equal_pieces(probs.len().max(2))?
            };
            let lambda = lambda_point(cfg, &fam)?;
            if probs.len() != fam.m() {
                return Err(Error::invalid("first-symbol needs one probability per map"));
            }
            Ok((Potential::bernoulli(&probs, &fam)?, fam, lambda))
        }
        "geometric" => {
            let fam = resolve_family(cfg, "cantor")?;
            let lambda = lambda_point(cfg, &fam)?;
            let s = if arg.is_empty() {
                conformal_similarity_dimension(&fam, &lambda)?.value
            } else {
                arg.parse().map_err(|_| Error::invalid(format!("bad exponent {arg:?}")))?
            };
            Ok((Potential::new(PotentialKind::Geometric { s }, &fam, &lambda)?, fam, lambda))
        }
        "place-dependent" => {
            let rho: f64 = arg.parse().map_err(|_| Error::invalid(format!("bad tilt {arg:?}")))?;
            let fam = resolve_family(cfg, "bc")?;
            let lambda = lambda_point(cfg, &fam)?;
            Ok((Potential::place_dependent_bc(rho, &fam, &lambda)?, fam, lambda))
        }
        "matrix-norm" => {
            let q: f64 = arg.parse().map_err(|_| Error::invalid(format!("bad exponent {arg:?}")))?;
            let matrices = parse_matrices(&cfg.str_or("matrices", "2,1,1,2;1,1,1,2"))?;
            let fam = mobius_family(&matrices, &[])?;
            let pot = Potential::new(PotentialKind::MatrixNorm { q, matrices }, &fam, &[])?;
            Ok((pot, fam, Vec::new()))
        }
        other => Err(Error::invalid(format!(
            "unknown potential {other:?} (first-symbol, geometric, place-dependent, matrix-norm)"
        ))),
    }
}

pub fn gibbs(cfg: &mut Config) -> Result<Report> {
    let (pot, fam, lambda) = potential_from(cfg)?;
    let depth = cfg.usize_or("depth", 6)?;
    let truncation = match cfg.get("truncation") {
        Some(t) => Some(t.parse().map_err(|_| Error::invalid(format!("bad truncation {t:?}")))?),
        None => None,
    };
    let solved = transfer_operator_solve(&pot, &fam, &lambda, truncation)?;
    let g = solved.at_depth(depth)?;
    let eigen = solved.eigen.as_ref().ok_or_else(|| Error::invalid("operator returned no eigendata"))?;
    let mut result = g.to_json();
    result["log_eigenvalue"] = json!(eigen.log_eigenvalue);
    result["eigenvalue"] = json!(eigen.eigenvalue);
    result["residual"] = json!(eigen.residual);
    result["truncation"] = json!(eigen.k);
    result["truncation_error"] = json!(eigen.truncation_error);
    result["iterations"] = json!(eigen.iterations);
    let mut table = Table::new(&["word", "mass"]);
    for (i, &w) in g.weights.iter().enumerate() {
        table.push(vec![Cell::Text(crate::symbolic::Word::from_index(i, g.m, depth).to_string()), w.into()]);
    }
    let summary = format!(
        "eigenvalue = {} (truncation {}, residual {})",
        fmt_num(eigen.eigenvalue),
        eigen.k,
        fmt_num(eigen.residual)
    );
    Ok(Report {
        result,
        table: Some(table),
        default_format: Format::Json,
        summary,
    })
}

/// Parameter cells: `lambda` for one axis, `lambda.1`, `lambda.2`, … otherwise.
fn parameter_cells(cfg: &mut Config, fam: &IFSFamily) -> Result<Vec<Vec<f64>>> {
    let d = fam.d();
    let axes: Vec<Vec<f64>> = if d == 1 && !cfg.contains("lambda.1") {
        let c = fam.params().center()[0].to_string();
        vec![cfg.grid_or("lambda", &c)?.values()]
    } else {
        let center = fam.params().center();
        (0..d)
            .map(|k| Ok(cfg.grid_or(&format!("lambda.{}", k + 1), &center[k].to_string())?.values()))
            .collect::<Result<_>>()?
    };
    let mut cells = vec![Vec::new()];
    for axis in &axes {
        cells = cells
            .into_iter()
            .flat_map(|c| axis.iter().map(move |&v| [c.clone(), vec![v]].concat()))
            .collect();
    }
    Ok(cells)
}

fn lambda_columns(d: usize) -> Vec<String> {
    if d == 1 {
        vec!["lambda".into()]
    } else {
        (1..=d).map(|k| format!("lambda_{k}")).collect()
    }
}

pub fn dim_scan(cfg: &mut Config) -> Result<Report> {
    let fam = resolve_family(cfg, "bc")?;
    let cells = parameter_cells(cfg, &fam)?;
    let depth = cfg.usize_or("depth", 10)?;
    let levels = cfg.usize_or("levels", 10)?;
    let box_depths: Option<Vec<usize>> = cfg.get("box-depths").map(|v| parse_list(&v)).transpose()?;
    let m = fam.m();
    let measure = cfg.str_or("measure", "bernoulli");
    let (kind, arg) = measure.split_once(':').unwrap_or((measure.as_str(), ""));
    let kind = kind.to_string();
    let probs: Vec<f64> = match (kind.as_str(), arg) {
        ("bernoulli", "") => vec![1.0 / m as f64; m],
        ("bernoulli", a) => parse_list(a)?,
        ("place-dependent", a) => vec![a.parse().map_err(|_| Error::invalid(format!("bad tilt {a:?}")))?],
        ("geometric", _) => Vec::new(),
        (k, _) => return Err(Error::invalid(format!("unknown measure {k:?} (bernoulli, place-dependent, geometric)"))),
    };
    let reports = cells
        .par_iter()
        .map(|lambda| {
            let g = match kind.as_str() {
                "bernoulli" => {
                    let mut g = GibbsApproximation::bernoulli(&probs, depth)?;
                    g.lambda = lambda.clone();
                    g
                }
                "place-dependent" => {
                    let pot = Potential::place_dependent_bc(probs[0], &fam, lambda)?;
                    transfer_operator_solve(&pot, &fam, lambda, None)?.at_depth(depth)?
                }
                _ => {
                    let s = conformal_similarity_dimension(&fam, lambda)?.value;
                    let pot = Potential::new(PotentialKind::Geometric { s }, &fam, lambda)?;
                    transfer_operator_solve(&pot, &fam, lambda, None)?.at_depth(depth)?
                }
            };
            dimension_report(&g, &fam, lambda, levels, box_depths.as_deref())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut header = lambda_columns(fam.d());
    header.extend(["h", "chi", "ratio_dim", "cor_dim", "box_dim", "extrapolation_residual"].map(String::from));
    let mut table = Table { header, rows: Vec::new() };
    for (lambda, r) in cells.iter().zip(&reports) {
        let mut row: Vec<Cell> = lambda.iter().map(|&v| v.into()).collect();
        row.extend([
            r.h.into(),
            r.chi.into(),
            r.ratio_dim.into(),
            r.cor_dim.into(),
            r.box_dim.into(),
            r.extrapolation_residual.into(),
        ]);
        table.push(row);
    }
    Ok(Report::csv(table, format!("dim-scan: {} cells at depth {depth}", cells.len())))
}

pub fn bc_region(cfg: &mut Config) -> Result<Report> {
    let lambdas = cfg.grid_or("lambda", "0.5:0.67:50")?.values();
    let rhos = cfg.grid_or("rho", "0:0.45:50")?.values();
    let cells = bc_region_scan(&lambdas, &rhos)?;
    let mut table = Table::new(&["lambda", "rho", "A", "B", "dim_lower", "dim_upper", "class"]);
    let mut counts = [0usize; 3];
    for c in &cells {
        counts[c.class as usize] += 1;
        table.push(vec![
            c.lambda.into(),
            c.rho.into(),
            c.bounds.a.into(),
            c.bounds.b.into(),
            c.bounds.dim_lower.into(),
            c.bounds.dim_upper.into(),
            c.class.as_str().into(),
        ]);
    }
    let summary = format!(
        "bc-region: {} cells ({} abs_cont_ae, {} singular, {} undetermined)",
        cells.len(),
        counts[0],
        counts[1],
        counts[2]
    );
    Ok(Report::csv(table, summary))
}

fn cross(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
}

pub fn bc_sample(cfg: &mut Config) -> Result<Report> {
    let lambdas = cfg.grid_or("lambda", "0.55")?.values();
    let rhos = cfg.grid_or("rho", "0.1")?.values();
    let n = cfg.usize_or("n", 100_000)?;
    let seed = cfg.u64_or("seed", 0)?;
    let dump = cfg.bool_or("dump", false)?;
    let cells = cross(&lambdas, &rhos);
    if dump {
        if cells.len() != 1 {
            return Err(Error::invalid("dump needs a single (lambda, rho) cell"));
        }
        let spec = PlaceDepBC::new(cells[0].0, cells[0].1)?;
        let xs = bc_chaos_game(&spec, n, cell_seed(seed, 0)).points;
        let mut table = Table::new(&["x"]);
        xs.iter().for_each(|&x| table.push(vec![x.into()]));
        return Ok(Report::csv(table, format!("bc-sample: {n} samples")));
    }
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(l, r))| {
            let spec = PlaceDepBC::new(l, r)?;
            let s = cell_seed(seed, idx as u64);
            let xs = bc_chaos_game(&spec, n, s).points;
            let erg = bc_entropy_lyapunov(&spec, &xs).ok();
            let stat = stationarity_check(&spec, &xs, 4).ok();
            let b = bc_bounds(l, r)?;
            Ok(vec![
                l.into(),
                r.into(),
                s.into(),
                n.into(),
                erg.map(|e| e.h_mc).into(),
                erg.map(|e| e.h_std_error).into(),
                erg.map(|e| e.chi_mc).into(),
                b.a.into(),
                b.b.into(),
                stat.into(),
            ])
        })
        .collect::<Result<Vec<Vec<Cell>>>>()?;
    let mut table = Table::new(&["lambda", "rho", "seed", "n", "h_mc", "h_std_error", "chi_mc", "A", "B", "stationarity"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Report::csv(table, format!("bc-sample: {} cells x {n} samples", cells.len())))
}

pub fn transversality(cfg: &mut Config) -> Result<Report> {
    let fam = resolve_family(cfg, "translates")?;
    let grid: Vec<usize> = parse_list(&cfg.str_or("grid", "9"))?;
    let grid = match grid.as_slice() {
        [g] => vec![*g; fam.d()],
        _ => grid,
    };
    let depth = cfg.usize_or("depth", 4)?;
    let n_grad = cfg.usize_or("gradient-depth", 40)?;
    let report = check_mt(&fam, &grid, depth, n_grad)?;
    let mut table = Table::new(&["lambda", "i", "j", "distance", "gradient_gap", "eta"]);
    for v in &report.violations {
        let lam: Vec<String> = v.lambda.iter().map(|&x| fmt_num(x)).collect();
        table.push(vec![
            Cell::Text(lam.join(";")),
            Cell::Text(v.i.to_string()),
            Cell::Text(v.j.to_string()),
            v.distance.into(),
            v.gradient_gap.into(),
            v.eta.into(),
        ]);
    }
    let summary = match report.eta_passed {
        Some(e) => format!("transversality: eta_passed = {} ({} pairs)", fmt_num(e), report.pairs_tested),
        None => format!("transversality: no eta passed ({} violations)", report.violation_count),
    };
    Ok(Report {
        result: to_value(&report),
        table: Some(table),
        default_format: Format::Json,
        summary,
    })
}

pub fn furstenberg(cfg: &mut Config) -> Result<Report> {
    let matrices = parse_matrices(&cfg.str_or("matrices", "2,1,1,2;1,1,1,2"))?;
    let q = cfg.f64_or("q", 1.0)?;
    let depth = cfg.usize_or("depth", 8)?;
    let spec = FurstenbergSpec::new(matrices, q)?;
    let p = furstenberg_pressure(&spec, depth)?;
    let in_u = spec.in_u();
    let mut result = json!({ "m": spec.m(), "q": q, "in_u": in_u, "pressure": to_value(&p) });
    if spec.m() == 1 {
        result["lyapunov"] = to_value(&cocycle_lyapunov_uniform(&spec, depth)?);
    } else {
        let g = furstenberg_gibbs_norm(&spec, depth)?;
        result["lyapunov"] = to_value(&cocycle_lyapunov(&spec, &g, depth)?);
        if in_u {
            result["gibbs"] = to_value(&furstenberg_gibbs(&spec, depth)?);
            result["dimension"] = to_value(&furstenberg_dimension(&spec, &g, depth)?);
        }
    }
    let summary = match result.get("dimension").and_then(|d| d["dimension"].as_f64()) {
        Some(d) => format!("furstenberg: P = {}, dim = {}", fmt_num(p.value), fmt_num(d)),
        None => format!("furstenberg: P = {} (not in U)", fmt_num(p.value)),
    };
    Ok(Report::json(result, summary))
}

pub fn baker(cfg: &mut Config) -> Result<Report> {
    let lambdas = cfg.grid_or("lambda", "0.55")?.values();
    let rhos = cfg.grid_or("rho", "0.1")?.values();
    let n = cfg.usize_or("n", 200_000)?;
    let seed = cfg.u64_or("seed", 0)?;
    let bc_lambda = cfg.f64_list("bc-lambda")?.and_then(|v| v.first().copied());
    let bc_rho = cfg.f64_list("bc-rho")?.and_then(|v| v.first().copied());
    let dump = cfg.bool_or("dump", false)?;
    let cells = cross(&lambdas, &rhos);
    if dump {
        if cells.len() != 1 {
            return Err(Error::invalid("dump needs a single (lambda, rho) cell"));
        }
        let o = baker_orbit(&BakerSpec::new(cells[0].0, cells[0].1)?, n, cell_seed(seed, 0));
        let mut table = Table::new(&["x", "y"]);
        o.xs.iter().zip(&o.ys).for_each(|(&x, &y)| table.push(vec![x.into(), y.into()]));
        return Ok(Report::csv(table, format!("baker: {n} orbit points")));
    }
    let rows = cells
        .par_iter()
        .enumerate()
        .map(|(idx, &(l, r))| {
            let s = cell_seed(seed, idx as u64);
            let (bl, br) = (bc_lambda.unwrap_or(l), bc_rho.unwrap_or(r));
            let ks = ks_baker_bc(&BakerSpec::new(l, r)?, &PlaceDepBC::new(bl, br)?, n, s)?;
            Ok(vec![l.into(), r.into(), bl.into(), br.into(), s.into(), n.into(), ks.into()])
        })
        .collect::<Result<Vec<Vec<Cell>>>>()?;
    let worst = rows
        .iter()
        .filter_map(|r| match r[6] {
            Cell::Num(k) => Some(k),
            _ => None,
        })
        .fold(0.0, f64::max);
    let mut table = Table::new(&["lambda", "rho", "bc_lambda", "bc_rho", "seed", "n", "ks"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Report::csv(table, format!("baker: {} cells, max KS = {}", cells.len(), fmt_num(worst))))
}

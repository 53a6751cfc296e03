use std::path::Path;

use super::config::{parse_list, parse_matrices, Config};
use crate::error::{Error, Result};
use crate::ifs::{
    bernoulli_convolution_family, linear_fractional_family, mobius_family, vertical_translate_family, IFSFamily,
    Interval, MapSpec, ParamBox,
};

pub const PRESETS: &[&str] = &["cantor", "halves", "triple", "bc", "translates", "constant-overlap"];

fn cantor() -> Result<IFSFamily> {
    IFSFamily::affine(&[(1.0 / 3.0, 0.0), (1.0 / 3.0, 2.0 / 3.0)], Interval::new(0.0, 1.0))
}

fn domain(cfg: &mut Config, default: &str) -> Result<Interval> {
    let v: Vec<f64> = parse_list(&cfg.str_or("family.domain", default))?;
    match v.as_slice() {
        [lo, hi] if lo < hi => Ok(Interval::new(*lo, *hi)),
        _ => Err(Error::invalid("family.domain must be lo,hi with lo < hi")),
    }
}

fn preset(name: &str, cfg: &mut Config) -> Result<Option<IFSFamily>> {
    let fam = match name {
        "cantor" => cantor()?,
        "halves" => IFSFamily::affine(&[(0.5, 0.0), (0.5, 0.5)], Interval::new(0.0, 1.0))?,
        "triple" => IFSFamily::affine(
            &[(1.0 / 3.0, 0.0), (1.0 / 3.0, 1.0 / 3.0), (1.0 / 3.0, 1.0)],
            Interval::new(0.0, 1.5),
        )?,
        "bc" => bernoulli_convolution_family(cfg.f64_or("family.lo", 0.5)?, cfg.f64_or("family.hi", 0.6684755)?)?,
        "translates" => vertical_translate_family(&cantor()?, cfg.f64_or("family.eps", 0.05)?)?,
        "constant-overlap" => IFSFamily::new(
            vec![MapSpec::affine(0.5, 0.0), MapSpec::affine(0.5, 0.25)],
            Interval::new(0.0, 1.0),
            ParamBox::new(vec![Interval::new(0.0, 1.0)]),
            0.5,
            0.5,
        )?,
        _ => return Ok(None),
    };
    Ok(Some(fam))
}

fn affine_pairs(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(';')
        .map(|p| match parse_list::<f64>(p)?.as_slice() {
            [r, d] => Ok((*r, *d)),
            _ => Err(Error::invalid(format!("affine map needs slope,offset: {p:?}"))),
        })
        .collect()
}

/// Maps from `family.mapN.*` keys.
fn from_keys(cfg: &mut Config) -> Result<IFSFamily> {
    if let Some(p) = cfg.get("family.preset") {
        return preset(&p, cfg)?.ok_or_else(|| Error::invalid(format!("unknown family preset {p:?}")));
    }
    let mut affine = Vec::new();
    let mut mobius = Vec::new();
    let mut fractional = Vec::new();
    let mut i = 1;
    while let Some(kind) = cfg.get(&format!("family.map{i}.kind")) {
        let key = |f: &str| format!("family.map{i}.{f}");
        match kind.as_str() {
            "affine" => affine.push((cfg.f64_or(&key("slope"), f64::NAN)?, cfg.f64_or(&key("offset"), 0.0)?)),
            "mobius" => {
                let m = cfg.get(&key("matrix")).ok_or_else(|| Error::invalid(format!("{} missing", key("matrix"))))?;
                mobius.extend(parse_matrices(&m)?);
            }
            "linear-fractional" => {
                let c = cfg.get(&key("coeffs")).ok_or_else(|| Error::invalid(format!("{} missing", key("coeffs"))))?;
                fractional.extend(parse_matrices(&c)?);
            }
            other => return Err(Error::invalid(format!("unknown map kind {other:?}"))),
        }
        i += 1;
    }
    match (affine.len(), mobius.len(), fractional.len()) {
        (0, 0, 0) => Err(Error::invalid("no family given (family.preset or family.map1.kind)")),
        (_, 0, 0) => IFSFamily::affine(&affine, domain(cfg, "0,1")?),
        (0, _, 0) => mobius_family(&mobius, &[]),
        (0, 0, _) => linear_fractional_family(&fractional, domain(cfg, "0,1")?),
        _ => Err(Error::invalid("maps of different kinds cannot be mixed")),
    }
}

/// Family from a preset, `affine:r,d;…`, `mobius:a,b,c,d;…`, `family.*` keys, or a config file.
pub fn resolve_family(cfg: &mut Config, default: &str) -> Result<IFSFamily> {
    let spec = match cfg.get("family") {
        Some(s) => s,
        None if cfg.has_prefix("family.preset") || cfg.has_prefix("family.map") => return from_keys(cfg),
        None => cfg.str_or("family", default),
    };
    if let Some(f) = preset(&spec, cfg)? {
        return Ok(f);
    }
    if let Some(rest) = spec.strip_prefix("affine:") {
        return IFSFamily::affine(&affine_pairs(rest)?, domain(cfg, "0,1")?);
    }
    if let Some(rest) = spec.strip_prefix("mobius:") {
        return mobius_family(&parse_matrices(rest)?, &[]);
    }
    let path = Path::new(&spec);
    if !path.exists() {
        return Err(Error::invalid(format!(
            "family {spec:?} is not a preset ({}), an inline spec or a file",
            PRESETS.join(", ")
        )));
    }
    from_keys(&mut Config::from_file(path)?)
}

/// `lambda` as a point of the parameter box; defaults to its center.
pub fn lambda_point(cfg: &mut Config, fam: &IFSFamily) -> Result<Vec<f64>> {
    let lambda = match cfg.f64_list("lambda")? {
        Some(v) => v,
        None => {
            let c = fam.params().center();
            cfg.set("lambda", &c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
            cfg.get("lambda");
            c
        }
    };
    if lambda.len() != fam.d() {
        return Err(Error::invalid(format!("lambda needs {} coordinates, got {}", fam.d(), lambda.len())));
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_inline() {
        let mut c = Config::default();
        assert_eq!(resolve_family(&mut c, "cantor").unwrap().m(), 2);
        let mut c = Config::parse("family=affine:0.5,0;0.25,0.75").unwrap();
        assert_eq!(resolve_family(&mut c, "cantor").unwrap().maps()[1], MapSpec::affine(0.25, 0.75));
        let mut c = Config::parse("family=bc\nlambda=0.6").unwrap();
        let f = resolve_family(&mut c, "cantor").unwrap();
        assert_eq!(lambda_point(&mut c, &f).unwrap(), vec![0.6]);
        let mut c = Config::parse("family=nonsense").unwrap();
        assert!(resolve_family(&mut c, "cantor").is_err());
    }

    #[test]
    fn keyed_maps() {
        let text = "family.map1.kind=affine\nfamily.map1.slope=0.3333333333\nfamily.map2.kind=affine\nfamily.map2.slope=0.3333333333\nfamily.map2.offset=0.6666666667\n";
        let mut c = Config::parse(text).unwrap();
        let f = resolve_family(&mut c, "halves").unwrap();
        assert_eq!(f.m(), 2);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("fam.cfg");
        std::fs::write(&p, "family.map1.kind=mobius\nfamily.map1.matrix=2,1,1,2\nfamily.map2.kind=mobius\nfamily.map2.matrix=1,1,1,2\n").unwrap();
        let mut c = Config::default();
        c.set("family", p.to_str().unwrap());
        assert_eq!(resolve_family(&mut c, "cantor").unwrap().m(), 2);
    }
}

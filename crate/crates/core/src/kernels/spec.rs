//! JSON kernel descriptions.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Atom, LevyKernel, LogBand};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomSpec {
    pub loc: Vec<f64>,
    pub mass: f64,
}

/// `{dimension, s, family, params, atoms}`. Families: `stable`,
/// `tempered_stable`, `lattice`, `banded`, `random`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    pub dimension: usize,
    pub s: f64,
    pub family: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
}

fn num(p: &Value, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Parameter(format!("parameter '{key}' must be a number"))),
    }
}

impl KernelSpec {
    pub fn new(dimension: usize, s: f64, family: &str, params: Value) -> Self {
        KernelSpec {
            dimension,
            s,
            family: family.to_string(),
            params,
            atoms: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<LevyKernel> {
        let d = self.dimension;
        let s = self.s;
        let p = &self.params;
        let base = match self.family.as_str() {
            "stable" => {
                if p.get("c").is_none() && d == 1 {
                    super::stable_normalized(s)?
                } else {
                    super::stable(d, s, num(p, "c", 1.0)?)?
                }
            }
            "tempered_stable" => super::tempered(d, s, num(p, "c", 1.0)?, num(p, "scale", 1.0)?)?,
            "lattice" => super::lattice(
                d,
                s,
                num(p, "c", 1.0)?,
                num(p, "k_min", -40.0)? as i32,
                num(p, "k_max", 40.0)? as i32,
            )?,
            "banded" => {
                let annuli: Vec<(f64, f64)> = match p.get("annuli") {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => Vec::new(),
                };
                let band: Option<LogBand> = match p.get("band") {
                    Some(v) if !v.is_null() => Some(serde_json::from_value(v.clone())?),
                    _ => None,
                };
                if annuli.is_empty() && band.is_none() {
                    return Err(Error::Parameter("banded kernel needs annuli or a band".into()));
                }
                super::banded(d, s, num(p, "c", 1.0)?, annuli, band)?
            }
            "random" => super::random(
                d,
                s,
                num(p, "c", 1.0)?,
                num(p, "lo", 0.5)?,
                num(p, "hi", 2.0)?,
                num(p, "seed", 0.0)? as u64,
                num(p, "atom_weight", 0.0)?,
            )?,
            other => return Err(Error::Parameter(format!("unknown kernel family '{other}'"))),
        };
        if self.atoms.is_empty() {
            return Ok(base);
        }
        let mut atoms = base.atoms().to_vec();
        for a in &self.atoms {
            if a.loc.len() != d {
                return Err(Error::Parameter(format!(
                    "atom location {:?} does not have dimension {d}",
                    a.loc
                )));
            }
            let mut loc = [0.0; 2];
            loc[..d].copy_from_slice(&a.loc);
            atoms.push(Atom { loc, mass: a.mass });
        }
        let mut k = LevyKernel::new(d, s, base.density().cloned(), atoms, base.label())?;
        k.tail_cutoff = base.tail_cutoff;
        Ok(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds_each_family() {
        let texts = [
            r#"{"dimension":1,"s":0.5,"family":"stable"}"#,
            r#"{"dimension":2,"s":0.3,"family":"tempered_stable","params":{"c":2.0}}"#,
            r#"{"dimension":1,"s":0.5,"family":"lattice","params":{"k_min":-5,"k_max":5}}"#,
            r#"{"dimension":1,"s":0.5,"family":"banded","params":{"band":{"ratio":2.0,"lo":0.0,"hi":0.5}}}"#,
            r#"{"dimension":2,"s":0.7,"family":"random","params":{"seed":3},"atoms":[{"loc":[1.0,0.0],"mass":0.5},{"loc":[-1.0,0.0],"mass":0.5}]}"#,
        ];
        for t in texts {
            let k = KernelSpec::from_json(t).unwrap().build().unwrap();
            assert!(k.s() > 0.0);
        }
    }

    #[test]
    fn rejects_unknown_family_and_lopsided_atoms() {
        let bad = KernelSpec::from_json(r#"{"dimension":1,"s":0.5,"family":"cauchy"}"#).unwrap();
        assert!(bad.build().is_err());
        let lop = KernelSpec::from_json(
            r#"{"dimension":1,"s":0.5,"family":"stable","atoms":[{"loc":[1.0],"mass":1.0}]}"#,
        )
        .unwrap();
        assert!(matches!(lop.build(), Err(Error::Asymmetric(_))));
    }
}

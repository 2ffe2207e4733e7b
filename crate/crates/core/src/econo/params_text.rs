use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::garch::{GarchFit, GarchParams, GarchVariant};
use super::har::HarParams;
use crate::error::{Error, Result};

/// Ordered `key = value` text map used to export fitted parameters.
///
/// Values are written with Rust's shortest round-trip float formatting, so
/// reading a map back reproduces every number bit for bit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamMap {
    entries: BTreeMap<String, String>,
}

impl ParamMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let raw = self
            .get(key)
            .ok_or_else(|| Error::Data(format!("missing key '{key}'")))?;
        raw.parse()
            .map_err(|_| Error::Data(format!("key '{key}': '{raw}' is not a number")))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Data(format!("line {}: expected 'key = value'", i + 1))
            })?;
            map.insert(k.trim(), v.trim());
        }
        Ok(map)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// A fitted classical model as stored in a parameter file.
#[derive(Clone, Debug, PartialEq)]
pub enum FittedModel {
    Garch {
        variant: GarchVariant,
        params: GarchParams,
        log_likelihood: f64,
        sigma2_0: f64,
        n: usize,
    },
    Har(HarParams),
}

impl From<&GarchFit> for FittedModel {
    fn from(fit: &GarchFit) -> Self {
        FittedModel::Garch {
            variant: GarchVariant::Garch11,
            params: fit.params.clone(),
            log_likelihood: fit.log_likelihood,
            sigma2_0: fit.sigma2_0,
            n: fit.n,
        }
    }
}

impl FittedModel {
    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        match self {
            FittedModel::Garch {
                variant,
                params,
                log_likelihood,
                sigma2_0,
                n,
            } => {
                m.insert("model", "garch");
                m.insert("variant", variant.name());
                m.insert("omega", params.omega);
                m.insert("alpha", params.alpha);
                m.insert("beta", params.beta);
                m.insert("delta", params.delta);
                m.insert("gamma", params.gamma);
                m.insert("phi", params.phi);
                m.insert("rho", params.rho);
                m.insert("theta", params.theta);
                m.insert("mu", params.mu);
                m.insert("log_likelihood", log_likelihood);
                m.insert("sigma2_0", sigma2_0);
                m.insert("n", n);
            }
            FittedModel::Har(p) => {
                m.insert("model", "har");
                m.insert("c", p.c);
                m.insert("beta_d", p.beta_d);
                m.insert("beta_w", p.beta_w);
                m.insert("beta_m", p.beta_m);
            }
        }
        m
    }

    pub fn from_map(m: &ParamMap) -> Result<Self> {
        match m.get("model") {
            Some("garch") => {
                let variant: GarchVariant = m
                    .get("variant")
                    .ok_or_else(|| Error::Data("missing key 'variant'".into()))?
                    .parse()?;
                let params = GarchParams {
                    omega: m.number("omega")?,
                    alpha: m.number("alpha")?,
                    beta: m.number("beta")?,
                    delta: m.number("delta")?,
                    gamma: m.number("gamma")?,
                    phi: m.number("phi")?,
                    rho: m.number("rho")?,
                    theta: m.number("theta")?,
                    mu: m.number("mu")?,
                };
                params.validate(variant)?;
                let n = m.number("n")?;
                Ok(FittedModel::Garch {
                    variant,
                    params,
                    log_likelihood: m.number("log_likelihood")?,
                    sigma2_0: m.number("sigma2_0")?,
                    n: n as usize,
                })
            }
            Some("har") => Ok(FittedModel::Har(HarParams {
                c: m.number("c")?,
                beta_d: m.number("beta_d")?,
                beta_w: m.number("beta_w")?,
                beta_m: m.number("beta_m")?,
            })),
            Some(other) => Err(Error::Data(format!("unknown model '{other}' in parameter file"))),
            None => Err(Error::Data("parameter file has no 'model' key".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn garch_export_round_trips() {
        let fm = FittedModel::Garch {
            variant: GarchVariant::Garch11,
            params: GarchParams::garch11(0.1 / 3.0, 0.123456789012345, 0.8).unwrap(),
            log_likelihood: -1234.5678901234567,
            sigma2_0: 1.0 / 7.0,
            n: 500,
        };
        let text = fm.to_map().to_text();
        assert!(text.contains("variant = garch11"));
        assert!(text.contains("log_likelihood = "));
        let back = FittedModel::from_map(&ParamMap::parse(&text).unwrap()).unwrap();
        assert_eq!(back, fm);
    }

    #[test]
    fn har_export_round_trips() {
        let fm = FittedModel::Har(HarParams { c: 1e-17, beta_d: 0.4, beta_w: -0.3, beta_m: 0.2 / 3.0 });
        let back = FittedModel::from_map(&ParamMap::parse(&fm.to_map().to_text()).unwrap()).unwrap();
        assert_eq!(back, fm);
    }

    #[test]
    fn malformed_lines_rejected() {
        assert!(ParamMap::parse("model garch").is_err());
        let m = ParamMap::parse("model = garch\nvariant = garch11").unwrap();
        assert!(FittedModel::from_map(&m).is_err());
    }
}

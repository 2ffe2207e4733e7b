use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::layout::Layout;
use super::sigma::{sigma_layout, SigmaLstmParams};
use super::vanilla::{vanilla_layout, VanillaLstmParams};

/// Trained weights of either network.
#[derive(Clone, Debug, PartialEq)]
pub enum NetworkParams {
    Sigma(SigmaLstmParams),
    Vanilla(VanillaLstmParams),
}

impl NetworkParams {
    fn kind(&self) -> &'static str {
        match self {
            NetworkParams::Sigma(_) => "sigma-lstm",
            NetworkParams::Vanilla(_) => "lstm",
        }
    }

    fn parts(&self) -> (usize, u64, Vec<f64>, Layout) {
        match self {
            NetworkParams::Sigma(p) => (p.hidden, p.seed, p.to_flat(), sigma_layout(p.hidden)),
            NetworkParams::Vanilla(p) => (p.hidden, p.seed, p.to_flat(), vanilla_layout(p.hidden)),
        }
    }

    /// Line-oriented text: a header followed by one line per weight block,
    /// `name rows x cols = v1 v2 ...`. Values use shortest round-trip
    /// formatting, so reading back is bit-exact.
    pub fn to_text(&self) -> String {
        let (hidden, seed, flat, layout) = self.parts();
        let mut out = String::new();
        let _ = writeln!(out, "network = {}", self.kind());
        let _ = writeln!(out, "hidden = {hidden}");
        let _ = writeln!(out, "seed = {seed}");
        for i in 0..layout.len() {
            let shape: Vec<String> = layout.shape(i).iter().map(usize::to_string).collect();
            let values: Vec<String> = flat[layout.range(i)].iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(out, "{} {} = {}", layout.name(i), shape.join("x"), values.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, detail: String| Error::Config(format!("line {line}: {detail}"));
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut header = |key: &str| -> Result<String> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Config(format!("missing '{key}' header")))?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok(v.trim().to_string()),
                _ => Err(bad(n, format!("expected '{key} = ...'"))),
            }
        };
        let kind = header("network")?;
        let hidden: usize = header("hidden")?
            .parse()
            .map_err(|e| Error::Config(format!("hidden: {e}")))?;
        let seed: u64 = header("seed")?
            .parse()
            .map_err(|e| Error::Config(format!("seed: {e}")))?;
        let layout = match kind.as_str() {
            "sigma-lstm" => sigma_layout(hidden),
            "lstm" => vanilla_layout(hidden),
            other => return Err(Error::Config(format!("unknown network '{other}'"))),
        };

        let mut flat = Vec::with_capacity(layout.total());
        for i in 0..layout.len() {
            let (n, line) = lines
                .next()
                .ok_or_else(|| Error::Config(format!("missing block '{}'", layout.name(i))))?;
            let (head, values) = line
                .split_once('=')
                .ok_or_else(|| bad(n, "expected 'name shape = values'".into()))?;
            let mut head = head.split_whitespace();
            let name = head.next().unwrap_or("");
            if name != layout.name(i) {
                return Err(bad(n, format!("expected block '{}', found '{name}'", layout.name(i))));
            }
            let shape: Vec<usize> = head
                .next()
                .unwrap_or("")
                .split('x')
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(n, format!("bad shape: {e}")))?;
            if shape != layout.shape(i) {
                return Err(bad(n, format!("{name} has shape {shape:?}, expected {:?}", layout.shape(i))));
            }
            let before = flat.len();
            for v in values.split_whitespace() {
                flat.push(v.parse::<f64>().map_err(|e| bad(n, format!("'{v}': {e}")))?);
            }
            if flat.len() - before != layout.range(i).len() {
                return Err(bad(
                    n,
                    format!("{name} has {} values, expected {}", flat.len() - before, layout.range(i).len()),
                ));
            }
        }
        if let Some((n, _)) = lines.next() {
            return Err(bad(n, "unexpected trailing content".into()));
        }
        Ok(match kind.as_str() {
            "sigma-lstm" => NetworkParams::Sigma(SigmaLstmParams::from_flat(hidden, seed, &flat)?),
            _ => NetworkParams::Vanilla(VanillaLstmParams::from_flat(hidden, seed, &flat)?),
        })
    }
}

pub fn write_params_text(params: &NetworkParams, path: &Path) -> Result<()> {
    std::fs::write(path, params.to_text()).map_err(|e| Error::io(path, e))
}

pub fn read_params_text(path: &Path) -> Result<NetworkParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    NetworkParams::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::init_params;

    #[test]
    fn sigma_round_trip_is_bit_exact() {
        let mut p = init_params(3, 11).unwrap();
        p.w_h[0] = 1.0 / 3.0;
        p.b_c[2] = -2.5e-300;
        let net = NetworkParams::Sigma(p);
        let back = NetworkParams::from_text(&net.to_text()).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn vanilla_round_trip_through_file() {
        let net = NetworkParams::Vanilla(VanillaLstmParams::init(2, 5).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.txt");
        write_params_text(&net, &path).unwrap();
        assert_eq!(read_params_text(&path).unwrap(), net);
    }

    #[test]
    fn wrong_value_count_rejected() {
        let net = NetworkParams::Sigma(init_params(2, 1).unwrap());
        let text = net.to_text().replacen("w_h 2 = ", "w_h 2 = 0e0 ", 1);
        let err = NetworkParams::from_text(&text).unwrap_err().to_string();
        assert!(err.contains("w_h"), "{err}");
    }

    #[test]
    fn unknown_network_rejected() {
        assert!(NetworkParams::from_text("network = gru\nhidden = 2\nseed = 0\n").is_err());
    }
}

//! Plain-text network format.
//!
//! ```text
//! hmec-mlp 1
//! classes <M+1>
//! layers <L>
//! dense <inputs> <outputs>
//! <outputs lines of `inputs` weights, row-major>
//! <one line of `outputs` biases>
//! ...
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so save/load is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{Dense, Mlp};
use crate::{Error, Result};

const MAGIC: &str = "hmec-mlp";
pub const FORMAT_VERSION: u32 = 1;

impl Mlp {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "classes {}", self.n_classes);
        let _ = writeln!(s, "layers {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(s, "dense {} {}", l.inputs, l.outputs);
            for row in l.weights.chunks(l.inputs.max(1)) {
                push_row(&mut s, row);
            }
            push_row(&mut s, &l.bias);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("unexpected end of input, expected {what}")));

        let header = next("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::Format(format!("not a network file: {header:?}")));
        }
        let version: u32 = parse(parts.next(), "version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported network format version {version}")));
        }
        let n_classes: usize = keyed(next("classes")?, "classes")?;
        let n_layers: usize = keyed(next("layers")?, "layers")?;
        let mut layers = Vec::with_capacity(n_layers);
        for k in 0..n_layers {
            let head = next("dense")?;
            let mut p = head.split_whitespace();
            if p.next() != Some("dense") {
                return Err(Error::Format(format!("layer {k}: expected `dense`, got {head:?}")));
            }
            let inputs: usize = parse(p.next(), "inputs")?;
            let outputs: usize = parse(p.next(), "outputs")?;
            let mut weights = Vec::with_capacity(inputs * outputs);
            for _ in 0..outputs {
                let row = numbers(next("weight row")?)?;
                if row.len() != inputs {
                    return Err(Error::Format(format!("layer {k}: weight row has {} values, expected {inputs}", row.len())));
                }
                weights.extend(row);
            }
            let bias = numbers(next("bias row")?)?;
            if bias.len() != outputs {
                return Err(Error::Format(format!("layer {k}: bias has {} values, expected {outputs}", bias.len())));
            }
            layers.push(Dense { inputs, outputs, weights, bias });
        }
        Mlp::from_layers(layers, n_classes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn push_row(s: &mut String, row: &[f64]) {
    for (k, v) in row.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s.push('\n');
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str) -> Result<T> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Format(format!("bad or missing {what}")))
}

fn keyed<T: std::str::FromStr>(line: &str, key: &str) -> Result<T> {
    let mut p = line.split_whitespace();
    if p.next() != Some(key) {
        return Err(Error::Format(format!("expected `{key}`, got {line:?}")));
    }
    parse(p.next(), key)
}

fn numbers(line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Format(format!("bad number {t:?}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = Mlp::new(4, &[7, 3], 11);
        let back = Mlp::from_text(&net.to_text()).unwrap();
        assert_eq!(back, net);
        let x = [0.1, -0.2, 0.3, 1.0, 2.0, -1.0, 0.0, 0.5, 0.25, 3.0];
        assert_eq!(back.forward(&x), net.forward(&x));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        net.save(&path).unwrap();
        assert_eq!(Mlp::load(&path).unwrap(), net);
    }

    #[test]
    fn rejects_malformed_files() {
        let text = Mlp::new(2, &[3], 1).to_text();
        assert!(Mlp::from_text("garbage").is_err());
        assert!(Mlp::from_text(&text.replace("hmec-mlp 1", "hmec-mlp 9")).is_err());
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(Mlp::from_text(&truncated).is_err());
        assert!(Mlp::from_text(&text.replace("classes 3", "classes 4")).is_err());
    }
}

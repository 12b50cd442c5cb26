//! Plain-text weight dump.
//!
//! ```text
//! densenet v1
//! layers <n>
//! layer <in> <out> <activation>
//! <out lines of in weights each, row-major>
//! bias <out values>
//! ```
//!
//! Values use Rust's shortest round-trip float formatting, so a save/load
//! cycle reproduces every weight bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::dense::{Activation, DenseNet, LayerSpec};
use crate::error::{Error, Result};

const MAGIC: &str = "densenet v1";

pub fn write_net(out: &mut String, net: &DenseNet) {
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "layers {}", net.layers().len());
    for layer in net.layers() {
        let s = layer.spec();
        let _ = writeln!(out, "layer {} {} {}", s.in_dim, s.out_dim, s.activation);
        for row in layer.weights().chunks(s.in_dim) {
            out.push_str(&join(row));
            out.push('\n');
        }
        let _ = writeln!(out, "bias {}", join(layer.bias()));
    }
}

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

/// Line cursor shared with the siamese checkpoint reader.
pub(crate) struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    pub(crate) line_no: usize,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            iter: text.lines().enumerate(),
            line_no: 0,
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<&'a str> {
        match self.iter.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l)
            }
            None => Err(self.error("unexpected end of file")),
        }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line_no.max(1), message)
    }

    pub(crate) fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            _ if line == key => Ok(""),
            _ => Err(self.error(format!("expected `{key}`"))),
        }
    }

    pub(crate) fn floats(&self, text: &str, expected: usize) -> Result<Vec<f64>> {
        let values: Vec<f64> = text
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| self.error(format!("bad number: {e}")))?;
        if values.len() != expected {
            return Err(self.error(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }
}

pub(crate) fn read_net(lines: &mut Lines<'_>) -> Result<DenseNet> {
    let magic = lines.next_line()?;
    if magic != MAGIC {
        return Err(lines.error(format!("expected `{MAGIC}` header")));
    }
    let n: usize = lines
        .keyed("layers")?
        .trim()
        .parse()
        .map_err(|_| lines.error("bad layer count"))?;
    let mut parts = Vec::with_capacity(n);
    for _ in 0..n {
        let header = lines.keyed("layer")?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(lines.error("layer header needs in, out and activation"));
        }
        let in_dim: usize = fields[0].parse().map_err(|_| lines.error("bad in_dim"))?;
        let out_dim: usize = fields[1].parse().map_err(|_| lines.error("bad out_dim"))?;
        let activation: Activation = fields[2].parse().map_err(|e: Error| lines.error(e.to_string()))?;
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..out_dim {
            let row = lines.next_line()?;
            weights.extend(lines.floats(row, in_dim)?);
        }
        let bias_text = lines.keyed("bias")?;
        let bias = lines.floats(bias_text, out_dim)?;
        parts.push((LayerSpec::new(in_dim, out_dim, activation), weights, bias));
    }
    DenseNet::from_parts(parts).map_err(|e| lines.error(e.to_string()))
}

pub fn net_to_string(net: &DenseNet) -> String {
    let mut s = String::new();
    write_net(&mut s, net);
    s
}

pub fn net_from_str(text: &str) -> Result<DenseNet> {
    let path = Path::new("<memory>");
    let mut lines = Lines::new(path, text);
    read_net(&mut lines)
}

pub fn save_net(path: &Path, net: &DenseNet) -> Result<()> {
    std::fs::write(path, net_to_string(net)).map_err(|e| Error::io(path, e))
}

pub fn load_net(path: &Path) -> Result<DenseNet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Lines::new(path, &text);
    read_net(&mut lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::chain;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), width in 1usize..6, scale in -1e6f64..1e6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut net = DenseNet::new(
                &chain(&[3, width, 2], Activation::Rectifier, Activation::Sigmoid),
                &mut rng,
            ).unwrap();
            let p: Vec<f64> = net.flat_params().iter().map(|v| v * scale).collect();
            net.set_flat_params(&p).unwrap();
            let back = net_from_str(&net_to_string(&net)).unwrap();
            let a: Vec<u64> = net.flat_params().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(net.specs(), back.specs());
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let net = DenseNet::zeros(&chain(&[2, 2], Activation::Identity, Activation::Identity))
            .unwrap();
        let text = net_to_string(&net);
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        match net_from_str(&cut) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

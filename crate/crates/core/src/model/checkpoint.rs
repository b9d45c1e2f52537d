//! Plain-text checkpoint format.
//!
//! ```text
//! fairscale-checkpoint v1
//! meta <key> <value>          (zero or more)
//! tensor <name> <dim> [<dim>...]
//! <values, row-major, whitespace separated; one innermost row per line>
//! ...
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! write/read cycle reproduces every `f64` bit for bit.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2};

use super::{Architecture, Layer, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &str = "fairscale-checkpoint v1";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TensorFile {
    pub meta: Vec<(String, String)>,
    pub tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl TensorFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn tensor(&self, name: &str) -> Option<(&[usize], &[f64])> {
        self.tensors
            .iter()
            .find(|(n, _, _)| n == name)
            .map(|(_, s, d)| (s.as_slice(), d.as_slice()))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        for (k, v) in &self.meta {
            writeln!(w, "meta {k} {v}")?;
        }
        for (name, shape, data) in &self.tensors {
            let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
            writeln!(w, "tensor {name} {}", dims.join(" "))?;
            let row = shape.last().copied().unwrap_or(1).max(1);
            for chunk in data.chunks(row) {
                let cells: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
                writeln!(w, "{}", cells.join(" "))?;
            }
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some(MAGIC) {
            return Err(bad("missing header line".into()));
        }
        let mut out = TensorFile::default();
        let mut pending: Option<(String, Vec<usize>, Vec<f64>, usize)> = None;
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some((_, _, data, want)) = pending.as_mut() {
                if data.len() < *want {
                    for tok in line.split_whitespace() {
                        data.push(tok.parse().map_err(|_| bad(format!("bad value `{tok}`")))?);
                    }
                    if data.len() > *want {
                        return Err(bad("tensor has too many values".into()));
                    }
                    continue;
                }
                let (n, s, d, _) = pending.take().expect("checked above");
                out.tensors.push((n, s, d));
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("meta") => {
                    let key = parts.next().ok_or_else(|| bad("meta without key".into()))?;
                    let value: Vec<&str> = parts.collect();
                    out.meta.push((key.to_string(), value.join(" ")));
                }
                Some("tensor") => {
                    let name = parts
                        .next()
                        .ok_or_else(|| bad("tensor without name".into()))?;
                    let shape = parts
                        .map(|p| {
                            p.parse::<usize>()
                                .map_err(|_| bad(format!("bad dim `{p}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let want = shape.iter().product();
                    pending = Some((name.to_string(), shape, Vec::with_capacity(want), want));
                }
                Some("end") => return Ok(out),
                Some(other) => return Err(bad(format!("unexpected line starting `{other}`"))),
                None => {}
            }
        }
        Err(bad("missing `end` line".into()))
    }
}

impl ModelParams {
    pub fn to_tensor_file(&self) -> TensorFile {
        let mut meta = vec![];
        match self.architecture {
            Architecture::Linear => meta.push(("architecture".into(), "linear".into())),
            Architecture::OneHidden { width } => {
                meta.push(("architecture".into(), "one_hidden".into()));
                meta.push(("width".into(), width.to_string()));
            }
        }
        meta.push(("input_dim".into(), self.input_dim.to_string()));
        meta.push(("num_classes".into(), self.num_classes.to_string()));
        let mut tensors = vec![];
        for (i, l) in self.layers.iter().enumerate() {
            let (r, c) = l.weights.dim();
            tensors.push((
                format!("layer{i}.weights"),
                vec![r, c],
                l.slices()[0].to_vec(),
            ));
            tensors.push((format!("layer{i}.bias"), vec![c], l.slices()[1].to_vec()));
        }
        TensorFile { meta, tensors }
    }

    pub fn from_tensor_file(file: &TensorFile) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        let num = |key: &str| -> Result<usize> {
            file.meta(key)
                .ok_or_else(|| bad(&format!("missing meta `{key}`")))?
                .parse()
                .map_err(|_| bad(&format!("bad meta `{key}`")))
        };
        let architecture = match file.meta("architecture") {
            Some("linear") => Architecture::Linear,
            Some("one_hidden") => Architecture::OneHidden {
                width: num("width")?,
            },
            _ => return Err(bad("unknown architecture")),
        };
        let input_dim = num("input_dim")?;
        let num_classes = num("num_classes")?;
        let n_layers = match architecture {
            Architecture::Linear => 1,
            Architecture::OneHidden { .. } => 2,
        };
        let mut layers = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let (ws, wd) = file
                .tensor(&format!("layer{i}.weights"))
                .ok_or_else(|| bad("missing weights tensor"))?;
            let (_, bd) = file
                .tensor(&format!("layer{i}.bias"))
                .ok_or_else(|| bad("missing bias tensor"))?;
            let [r, c] = ws else {
                return Err(bad("weights must be 2-d"));
            };
            let weights = Array2::from_shape_vec((*r, *c), wd.to_vec())
                .map_err(|_| bad("weights shape mismatch"))?;
            layers.push(Layer {
                weights,
                bias: Array1::from(bd.to_vec()),
            });
        }
        Self::from_layers(architecture, input_dim, num_classes, layers)
    }

    pub fn write_checkpoint<W: Write>(&self, w: W) -> Result<()> {
        self.to_tensor_file().write(w)
    }

    pub fn read_checkpoint<R: BufRead>(r: R) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::read(r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_reload_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for arch in [Architecture::Linear, Architecture::OneHidden { width: 7 }] {
            let p = ModelParams::init(arch, 5, 3, &mut rng).unwrap();
            let mut buf = Vec::new();
            p.write_checkpoint(&mut buf).unwrap();
            let q = ModelParams::read_checkpoint(buf.as_slice()).unwrap();
            let bits = |m: &ModelParams| -> Vec<u64> {
                m.layers()
                    .iter()
                    .flat_map(|l| l.slices())
                    .flat_map(|s| s.iter().map(|v| v.to_bits()))
                    .collect()
            };
            assert_eq!(bits(&p), bits(&q));
            assert_eq!(p, q);
        }
    }

    #[test]
    fn truncated_checkpoint_is_rejected() {
        let p = ModelParams::zeros(Architecture::Linear, 2, 2).unwrap();
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = text.replace("end\n", "");
        assert!(ModelParams::read_checkpoint(cut.as_bytes()).is_err());
        assert!(ModelParams::read_checkpoint("garbage\n".as_bytes()).is_err());
    }
}

//! Versioned flat binary checkpoint.
//!
//! Layout (little endian): 8-byte magic, `u32` version, `u32` input dim,
//! `u32` generator layer count, `u32` classifier layer count, then for each
//! layer (generator first) `u32` rows, `u32` cols, `rows·cols` row-major
//! `f64` weights and `cols` `f64` biases.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Architecture, Dense, ModelParams, N_CLASSES};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SPSSOTNN";
pub const CHECKPOINT_VERSION: u32 = 1;

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.n_params() * 8 + 8 * (self.generator.len() + self.classifier.len()));
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for v in [
            CHECKPOINT_VERSION,
            self.arch.input_dim as u32,
            self.generator.len() as u32,
            self.classifier.len() as u32,
        ] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for layer in self.layers() {
            let (r, c) = layer.weights.dim();
            out.extend_from_slice(&(r as u32).to_le_bytes());
            out.extend_from_slice(&(c as u32).to_le_bytes());
            for v in layer.weights.iter().chain(layer.bias.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let input_dim = r.u32()? as usize;
        let n_gen = r.u32()? as usize;
        let n_cls = r.u32()? as usize;
        if n_cls == 0 {
            return Err(Error::Checkpoint("classifier has no layers".into()));
        }
        let mut layers = Vec::with_capacity(n_gen + n_cls);
        for _ in 0..n_gen + n_cls {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let w: Vec<f64> = (0..rows * cols).map(|_| r.f64()).collect::<Result<_>>()?;
            let b: Vec<f64> = (0..cols).map(|_| r.f64()).collect::<Result<_>>()?;
            layers.push(Dense {
                weights: Array2::from_shape_vec((rows, cols), w)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?,
                bias: Array1::from(b),
            });
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        let classifier = layers.split_off(n_gen);
        let arch = Architecture {
            input_dim,
            generator: layers.iter().map(|l| l.weights.ncols()).collect(),
            classifier_hidden: classifier[..n_cls - 1].iter().map(|l| l.weights.ncols()).collect(),
        };
        if classifier[n_cls - 1].weights.ncols() != N_CLASSES {
            return Err(Error::Checkpoint("output layer must have 2 units".into()));
        }
        ModelParams::new(arch, layers, classifier)
            .map_err(|e| Error::Checkpoint(format!("inconsistent layer shapes: {e}")))
    }

    /// Human-readable dump for diffing; values use round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "checkpoint v{CHECKPOINT_VERSION} input_dim={} generator={:?} classifier_hidden={:?}\n",
            self.arch.input_dim, self.arch.generator, self.arch.classifier_hidden
        );
        let names = (0..self.generator.len())
            .map(|i| format!("G{i}"))
            .chain((0..self.classifier.len()).map(|i| format!("F{i}")));
        for (name, layer) in names.zip(self.layers()) {
            let (r, c) = layer.weights.dim();
            let _ = writeln!(s, "[{name}] weights {r}x{c}");
            for row in layer.weights.outer_iter() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(s, "{}", line.join("\t"));
            }
            let line: Vec<String> = layer.bias.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "[{name}] bias\n{}", line.join("\t"));
        }
        s
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn write_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    std::fs::write(path, params.to_bytes())?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<ModelParams> {
    ModelParams::from_bytes(&std::fs::read(path)?)
}

//! Binary model container.
//!
//! Layout: 8-byte magic, `u32` version, then tagged sections (4-byte tag,
//! `u64` payload length, payload) in the fixed order `HEAD`, `ENCD`, `CONF`,
//! `ESTM`, `SCIN`, `SCTG`, `SUM `, the last carrying the FNV-1a hash of
//! every preceding byte. All integers and floats are little-endian.

use alloc::vec::Vec;

use super::{CombinedModel, ModelError};
use crate::math::{fnv1a, FNV_OFFSET};
use crate::nn::{Layer, LayerSpec, Network, ScalerKind, ScalerState};
use crate::rng::stream;

pub const MAGIC: &[u8; 8] = b"JACOBNET";
pub const FORMAT_VERSION: u32 = 1;

const LAYER_DENSE: u8 = 1;
const LAYER_PRELU: u8 = 2;
const LAYER_BATCHNORM: u8 = 3;
const LAYER_DROPOUT: u8 = 4;
const LAYER_SIGMOID: u8 = 5;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        self.u64(vs.len() as u64);
        for &v in vs {
            self.f64(v);
        }
    }
}

fn section(out: &mut Vec<u8>, tag: &[u8; 4], body: impl FnOnce(&mut Writer)) {
    let mut w = Writer(Vec::new());
    body(&mut w);
    out.extend_from_slice(tag);
    out.extend_from_slice(&(w.0.len() as u64).to_le_bytes());
    out.extend_from_slice(&w.0);
}

fn write_network(w: &mut Writer, net: &Network) {
    w.u64(net.input_dim() as u64);
    let specs = net.specs();
    w.u64(specs.len() as u64);
    for spec in specs {
        match spec {
            LayerSpec::Dense { out_dim, bias } => {
                w.u8(LAYER_DENSE);
                w.u64(out_dim as u64);
                w.u8(bias as u8);
            }
            LayerSpec::PRelu => w.u8(LAYER_PRELU),
            LayerSpec::BatchNorm { momentum, eps } => {
                w.u8(LAYER_BATCHNORM);
                w.f64(momentum);
                w.f64(eps);
            }
            LayerSpec::Dropout { rate } => {
                w.u8(LAYER_DROPOUT);
                w.f64(rate);
            }
            LayerSpec::Sigmoid => w.u8(LAYER_SIGMOID),
        }
    }
    w.f64s(&net.state_flat());
}

fn write_scaler(w: &mut Writer, s: &Option<ScalerState>) {
    let Some(s) = s else {
        w.u8(0);
        return;
    };
    w.u8(1);
    match s.kind {
        ScalerKind::Standardize => {
            w.u8(0);
            w.f64(0.0);
            w.f64(0.0);
        }
        ScalerKind::MinMax { lo, hi } => {
            w.u8(1);
            w.f64(lo);
            w.f64(hi);
        }
    }
    w.f64s(&s.center);
    w.f64s(&s.spread);
    for &d in &s.degenerate {
        w.u8(d as u8);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    section: &'static str,
}

impl<'a> Reader<'a> {
    fn err(&self) -> ModelError {
        ModelError::CorruptContainer { section: self.section }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| self.err())?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ModelError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn usize(&mut self) -> Result<usize, ModelError> {
        usize::try_from(self.u64()?).map_err(|_| self.err())
    }
    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64s(&mut self) -> Result<Vec<f64>, ModelError> {
        let n = self.usize()?;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(self.err());
        }
        (0..n).map(|_| self.f64()).collect()
    }
    /// Enters the next section, checking its tag; returns the payload end offset.
    fn open(&mut self, tag: &[u8; 4], name: &'static str) -> Result<usize, ModelError> {
        self.section = name;
        if self.take(4)? != tag {
            return Err(self.err());
        }
        let len = self.usize()?;
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| self.err())?;
        Ok(end)
    }
    fn close(&self, end: usize) -> Result<(), ModelError> {
        if self.pos != end {
            return Err(self.err());
        }
        Ok(())
    }
}

fn read_network(r: &mut Reader) -> Result<Network, ModelError> {
    let input_dim = r.usize()?;
    let n = r.usize()?;
    if n > r.buf.len() {
        return Err(r.err());
    }
    let mut specs = Vec::with_capacity(n);
    for _ in 0..n {
        specs.push(match r.u8()? {
            LAYER_DENSE => {
                let out_dim = r.usize()?;
                let bias = match r.u8()? {
                    0 => false,
                    1 => true,
                    _ => return Err(r.err()),
                };
                LayerSpec::Dense { out_dim, bias }
            }
            LAYER_PRELU => LayerSpec::PRelu,
            LAYER_BATCHNORM => LayerSpec::BatchNorm {
                momentum: r.f64()?,
                eps: r.f64()?,
            },
            LAYER_DROPOUT => LayerSpec::Dropout { rate: r.f64()? },
            LAYER_SIGMOID => LayerSpec::Sigmoid,
            _ => return Err(r.err()),
        });
    }
    let state = r.f64s()?;
    // Reject shapes whose parameter count disagrees before allocating them.
    let mut width = input_dim;
    let mut expected = 0usize;
    for s in &specs {
        expected = expected.saturating_add(match *s {
            LayerSpec::Dense { out_dim, bias } => {
                let c = width
                    .saturating_mul(out_dim)
                    .saturating_add(if bias { out_dim } else { 0 });
                width = out_dim;
                c
            }
            LayerSpec::PRelu => width,
            LayerSpec::BatchNorm { .. } => width.saturating_mul(4),
            _ => 0,
        });
    }
    if expected != state.len() {
        return Err(r.err());
    }
    let mut net = Network::new(input_dim, &specs, &mut stream(0, 0)).map_err(|_| r.err())?;
    net.set_state_flat(&state).map_err(|_| r.err())?;
    Ok(net)
}

fn read_scaler(r: &mut Reader) -> Result<Option<ScalerState>, ModelError> {
    match r.u8()? {
        0 => return Ok(None),
        1 => {}
        _ => return Err(r.err()),
    }
    let code = r.u8()?;
    let lo = r.f64()?;
    let hi = r.f64()?;
    let kind = match code {
        0 => ScalerKind::Standardize,
        1 => ScalerKind::MinMax { lo, hi },
        _ => return Err(r.err()),
    };
    let center = r.f64s()?;
    let spread = r.f64s()?;
    if spread.len() != center.len() {
        return Err(r.err());
    }
    let degenerate = (0..center.len())
        .map(|_| match r.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(r.err()),
        })
        .collect::<Result<_, _>>()?;
    Ok(Some(ScalerState {
        kind,
        center,
        spread,
        degenerate,
    }))
}

impl CombinedModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        section(&mut out, b"HEAD", |w| {
            w.u64(self.input_dim as u64);
            w.f64(self.threshold);
        });
        section(&mut out, b"ENCD", |w| write_network(w, &self.encoder));
        section(&mut out, b"CONF", |w| write_network(w, &self.conf_head));
        section(&mut out, b"ESTM", |w| write_network(w, &self.est_head));
        section(&mut out, b"SCIN", |w| write_scaler(w, &self.input_scaler));
        section(&mut out, b"SCTG", |w| write_scaler(w, &self.target_scaler));
        let sum = fnv1a(FNV_OFFSET, &out);
        section(&mut out, b"SUM ", |w| w.u64(sum));
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, ModelError> {
        let mut r = Reader {
            buf,
            pos: 0,
            section: "magic",
        };
        if r.take(MAGIC.len())? != MAGIC {
            return Err(r.err());
        }
        r.section = "version";
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ModelError::UnsupportedVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let end = r.open(b"HEAD", "header")?;
        let input_dim = r.usize()?;
        let threshold = r.f64()?;
        r.close(end)?;
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(r.err());
        }
        let mut nets = Vec::with_capacity(3);
        for (tag, name) in [
            (b"ENCD", "encoder"),
            (b"CONF", "confidence head"),
            (b"ESTM", "estimation head"),
        ] {
            let end = r.open(tag, name)?;
            nets.push(read_network(&mut r)?);
            r.close(end)?;
        }
        let end = r.open(b"SCIN", "input scaler")?;
        let input_scaler = read_scaler(&mut r)?;
        r.close(end)?;
        let end = r.open(b"SCTG", "target scaler")?;
        let target_scaler = read_scaler(&mut r)?;
        r.close(end)?;
        let body = r.pos;
        let end = r.open(b"SUM ", "checksum")?;
        let sum = r.u64()?;
        r.close(end)?;
        if sum != fnv1a(FNV_OFFSET, &buf[..body]) || r.pos != buf.len() {
            return Err(r.err());
        }
        let est_head = nets.pop().expect("three networks");
        let conf_head = nets.pop().expect("three networks");
        let encoder = nets.pop().expect("three networks");
        r.section = "header";
        let rep = encoder.output_dim();
        if encoder.input_dim() != input_dim || conf_head.input_dim() != rep || est_head.input_dim() != rep {
            return Err(r.err());
        }
        if input_scaler.as_ref().is_some_and(|s| s.width() != input_dim) {
            return Err(ModelError::CorruptContainer {
                section: "input scaler",
            });
        }
        if !matches!(conf_head.layers().last(), Some(Layer::Sigmoid(_))) || conf_head.output_dim() != 1 {
            return Err(ModelError::CorruptContainer {
                section: "confidence head",
            });
        }
        if est_head.output_dim() != super::JACOBIAN_WIDTH {
            return Err(ModelError::CorruptContainer {
                section: "estimation head",
            });
        }
        Ok(CombinedModel {
            input_dim,
            encoder,
            conf_head,
            est_head,
            input_scaler,
            target_scaler,
            threshold,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_combined, HiddenPlan};
    use crate::nn::Tensor;
    use alloc::vec;

    fn model() -> CombinedModel {
        let plan = HiddenPlan {
            encoder: vec![8, 6],
            conf_head: vec![5, 4],
            est_head: vec![5, 4],
            dropout: 0.2,
            encoder_regularized: 1,
            head_regularized: 1,
        };
        build_combined(24, &plan, 9).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let back = CombinedModel::from_bytes(&m.to_bytes()).unwrap();
        assert_eq!(back, m);
        let x = Tensor::matrix(5, 24, (0..120).map(|i| (i as f64 * 0.1).sin()).collect()).unwrap();
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn every_truncation_is_rejected() {
        let bytes = model().to_bytes();
        for cut in (0..bytes.len()).step_by(7) {
            assert!(matches!(
                CombinedModel::from_bytes(&bytes[..cut]),
                Err(ModelError::CorruptContainer { .. })
            ));
        }
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let mut bytes = model().to_bytes();
        bytes[8] = 2;
        assert_eq!(
            CombinedModel::from_bytes(&bytes),
            Err(ModelError::UnsupportedVersion { found: 2, expected: 1 })
        );
    }

    #[test]
    fn flipped_bit_fails_checksum() {
        let mut bytes = model().to_bytes();
        let n = bytes.len();
        bytes[n - 40] ^= 1;
        assert!(CombinedModel::from_bytes(&bytes).is_err());
    }
}

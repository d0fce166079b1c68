//! Binary checkpoints: magic "NOHS", little-endian u32 version, u32
//! architecture tag, architecture-specific dimension metadata, then
//! every parameter array as little-endian f64 in declaration order. The
//! spectral architectures carry no resolution in their metadata, so a
//! checkpoint trained at one grid size loads and evaluates at any
//! supported size.

use std::fs;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Result, SolverError};

use super::spectral::{Activation, Spectral1d, SpectralOperatorConfig};
use super::spectral2d::Spectral2d;
use super::two_layer::TwoLayerParams;
use super::{NeuralOperator, ParamSet};

const MAGIC: &[u8; 4] = b"NOHS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchTag {
    TwoLayer = 1,
    Spectral1d = 2,
    Spectral2d = 3,
}

/// A checkpointable operator of any supported architecture.
#[derive(Clone)]
pub enum AnyNet {
    TwoLayer(TwoLayerParams),
    Spectral1d(Spectral1d),
    Spectral2d(Spectral2d),
}

impl AnyNet {
    pub fn arch(&self) -> ArchTag {
        match self {
            AnyNet::TwoLayer(_) => ArchTag::TwoLayer,
            AnyNet::Spectral1d(_) => ArchTag::Spectral1d,
            AnyNet::Spectral2d(_) => ArchTag::Spectral2d,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            AnyNet::TwoLayer(n) => n.param_count(),
            AnyNet::Spectral1d(n) => n.param_count(),
            AnyNet::Spectral2d(n) => n.param_count(),
        }
    }
}

impl NeuralOperator for AnyNet {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        match self {
            AnyNet::TwoLayer(n) => n.forward(input),
            AnyNet::Spectral1d(n) => n.forward(input),
            AnyNet::Spectral2d(n) => n.forward(input),
        }
    }

    fn supports_dim(&self, dim: usize) -> bool {
        match self {
            AnyNet::TwoLayer(n) => n.supports_dim(dim),
            AnyNet::Spectral1d(n) => n.supports_dim(dim),
            AnyNet::Spectral2d(n) => n.supports_dim(dim),
        }
    }
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn activation_tag(a: Activation) -> u64 {
    match a {
        Activation::Gelu => 0,
        Activation::Linear => 1,
    }
}

fn activation_from(tag: u64) -> Result<Activation> {
    match tag {
        0 => Ok(Activation::Gelu),
        1 => Ok(Activation::Linear),
        other => Err(SolverError::Checkpoint(format!("unknown activation tag {other}"))),
    }
}

fn push_spectral_config(buf: &mut Vec<u8>, c: &SpectralOperatorConfig) {
    push_u64(buf, c.hidden as u64);
    push_u64(buf, c.layers as u64);
    push_u64(buf, c.modes as u64);
    push_u64(buf, c.kernel_size as u64);
    push_u64(buf, activation_tag(c.activation));
}

fn push_params<P: ParamSet>(buf: &mut Vec<u8>, params: &P) {
    for slice in params.param_slices() {
        for &v in slice {
            push_f64(buf, v);
        }
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if self.pos + len > self.data.len() {
            return Err(SolverError::Checkpoint("truncated checkpoint".into()));
        }
        let out = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill_params<P: ParamSet>(&mut self, params: &mut P) -> Result<()> {
        for slice in params.param_slices_mut() {
            for v in slice.iter_mut() {
                *v = self.f64()?;
            }
        }
        Ok(())
    }

    fn finished(&self) -> bool {
        self.pos == self.data.len()
    }

    fn spectral_config(&mut self) -> Result<SpectralOperatorConfig> {
        let hidden = self.usize()?;
        let layers = self.usize()?;
        let modes = self.usize()?;
        let kernel_size = self.usize()?;
        let activation = activation_from(self.u64()?)?;
        if hidden == 0 || layers == 0 || modes == 0 || kernel_size % 2 == 0 {
            return Err(SolverError::Checkpoint(
                "invalid spectral dimensions in checkpoint".into(),
            ));
        }
        Ok(SpectralOperatorConfig {
            hidden,
            layers,
            modes,
            kernel_size,
            activation,
        })
    }
}

pub fn encode_checkpoint(net: &AnyNet) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    push_u32(&mut buf, VERSION);
    push_u32(&mut buf, net.arch() as u32);
    match net {
        AnyNet::TwoLayer(p) => {
            push_u64(&mut buf, p.n() as u64);
            push_u64(&mut buf, u64::from(p.constraint.is_some()));
            push_f64(&mut buf, p.constraint.unwrap_or(0.0));
            push_params(&mut buf, p);
        }
        AnyNet::Spectral1d(p) => {
            push_spectral_config(&mut buf, &p.config);
            push_params(&mut buf, p);
        }
        AnyNet::Spectral2d(p) => {
            push_spectral_config(&mut buf, &p.config);
            push_params(&mut buf, p);
        }
    }
    buf
}

pub fn decode_checkpoint(data: &[u8]) -> Result<AnyNet> {
    let mut cur = Cursor { data, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(SolverError::Checkpoint("bad magic bytes".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(SolverError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let net = match cur.u32()? {
        1 => {
            let n = cur.usize()?;
            let constrained = cur.u64()? != 0;
            let bound = cur.f64()?;
            let mut p = TwoLayerParams::new(
                n,
                [0.0; 2],
                [DenseMatrix::zeros(n, n), DenseMatrix::zeros(n, n)],
                constrained.then_some(bound),
            );
            cur.fill_params(&mut p)?;
            AnyNet::TwoLayer(p)
        }
        2 => {
            let config = cur.spectral_config()?;
            let mut p = Spectral1d::zeroed(config);
            cur.fill_params(&mut p)?;
            AnyNet::Spectral1d(p)
        }
        3 => {
            let config = cur.spectral_config()?;
            let mut p = Spectral2d::zeroed(config);
            cur.fill_params(&mut p)?;
            AnyNet::Spectral2d(p)
        }
        other => {
            return Err(SolverError::Checkpoint(format!(
                "unknown architecture tag {other}"
            )));
        }
    };
    if !cur.finished() {
        return Err(SolverError::Checkpoint(
            "trailing bytes after parameter arrays".into(),
        ));
    }
    Ok(net)
}

/// Write atomically: serialize to a sibling temp file, then rename over
/// the destination.
pub fn save_checkpoint(net: &AnyNet, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(net);
    let tmp = path.with_extension("tmp-checkpoint");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<AnyNet> {
    let data = fs::read(path)?;
    decode_checkpoint(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn slices_equal<P: ParamSet>(a: &P, b: &P) -> bool {
        let (sa, sb) = (a.param_slices(), b.param_slices());
        sa.len() == sb.len()
            && sa
                .iter()
                .zip(sb.iter())
                .all(|(x, y)| x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits()))
    }

    #[test]
    fn two_layer_round_trip_is_bit_exact() {
        let dir = std::env::temp_dir().join("nohs-ckpt-test-a");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("two_layer.ckpt");
        let orig = TwoLayerParams::init(12, Some(3.5), 77);
        save_checkpoint(&AnyNet::TwoLayer(orig.clone()), &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        let AnyNet::TwoLayer(back) = loaded else {
            panic!("wrong architecture came back");
        };
        assert!(slices_equal(&orig, &back));
        assert_eq!(back.constraint, Some(3.5));
        assert_eq!(back.n(), 12);
    }

    #[test]
    fn spectral_round_trips_preserve_forward_outputs() {
        let dir = std::env::temp_dir().join("nohs-ckpt-test-b");
        std::fs::create_dir_all(&dir).unwrap();
        let c1 = SpectralOperatorConfig {
            hidden: 3,
            layers: 2,
            modes: 4,
            kernel_size: 3,
            activation: Activation::Gelu,
        };
        let net1 = Spectral1d::init(c1, 5);
        let p1 = dir.join("s1.ckpt");
        save_checkpoint(&AnyNet::Spectral1d(net1.clone()), &p1).unwrap();
        let AnyNet::Spectral1d(back1) = load_checkpoint(&p1).unwrap() else {
            panic!("wrong arch");
        };
        assert!(slices_equal(&net1, &back1));

        let c2 = SpectralOperatorConfig {
            hidden: 2,
            layers: 1,
            modes: 2,
            kernel_size: 1,
            activation: Activation::Gelu,
        };
        let net2 = Spectral2d::init(c2, 6);
        let p2 = dir.join("s2.ckpt");
        save_checkpoint(&AnyNet::Spectral2d(net2.clone()), &p2).unwrap();
        let AnyNet::Spectral2d(back2) = load_checkpoint(&p2).unwrap() else {
            panic!("wrong arch");
        };
        assert!(slices_equal(&net2, &back2));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(net1.forward(&x), back1.forward(&x));
    }

    #[test]
    fn cross_resolution_load_evaluates_at_finer_grids() {
        // The spectral metadata is resolution-free: parameters saved
        // while working at n=64 evaluate at n=128 after reload.
        let dir = std::env::temp_dir().join("nohs-ckpt-test-c");
        std::fs::create_dir_all(&dir).unwrap();
        let config = SpectralOperatorConfig {
            hidden: 4,
            layers: 2,
            modes: 8,
            kernel_size: 1,
            activation: Activation::Gelu,
        };
        let net = Spectral1d::init(config, 15);
        let path = dir.join("coarse.ckpt");
        save_checkpoint(&AnyNet::Spectral1d(net), &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert!(loaded.supports_dim(64));
        assert!(loaded.supports_dim(128));
        let tau = std::f64::consts::TAU;
        let coarse: Vec<f64> = (0..64).map(|i| (tau * i as f64 / 64.0).sin()).collect();
        let fine: Vec<f64> = (0..128).map(|i| (tau * i as f64 / 128.0).sin()).collect();
        let oc = loaded.forward(&coarse);
        let of = loaded.forward(&fine);
        assert_eq!(oc.len(), 64);
        assert_eq!(of.len(), 128);
        for i in 0..64 {
            assert!((oc[i] - of[2 * i]).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_corrupt_and_truncated_files() {
        let net = AnyNet::TwoLayer(TwoLayerParams::init(4, None, 1));
        let good = encode_checkpoint(&net);
        // Magic.
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_checkpoint(&bad),
            Err(SolverError::Checkpoint(_))
        ));
        // Version.
        let mut bad = good.clone();
        bad[4] = 9;
        assert!(decode_checkpoint(&bad).is_err());
        // Architecture tag.
        let mut bad = good.clone();
        bad[8] = 200;
        assert!(decode_checkpoint(&bad).is_err());
        // Truncation and trailing garbage.
        assert!(decode_checkpoint(&good[..good.len() - 3]).is_err());
        let mut long = good.clone();
        long.extend_from_slice(&[0u8; 8]);
        assert!(decode_checkpoint(&long).is_err());
        // Intact bytes still decode.
        assert!(decode_checkpoint(&good).is_ok());
    }
}

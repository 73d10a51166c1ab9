//! Versioned binary parameter format.
//!
//! ```text
//! magic        4 bytes  "MCCK"
//! version      u32 LE   1
//! stack count  u32 LE
//! per stack:   u32 LE layer count
//!   per layer: u32 LE input dim, u32 LE output dim, u8 activation (0 identity, 1 relu)
//! payload:     every parameter as f64 LE, stack by stack, layer by layer,
//!              weights (row-major) then bias
//! ```
//!
//! A model checkpoint holds six stacks: online `f, g_i, g_c` then target
//! `f, g_i, g_c`. Broadcasting a network is the same encoding with three.

use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::mlp::{Activation, Layer, MlpParams};
use super::network::{MccModel, Network};

pub const MAGIC: &[u8; 4] = b"MCCK";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_stacks<T: Scalar>(stacks: &[&MlpParams<T>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(stacks.len() as u32).to_le_bytes());
    for s in stacks {
        out.extend_from_slice(&(s.layers().len() as u32).to_le_bytes());
        for l in s.layers() {
            out.extend_from_slice(&(l.input_dim() as u32).to_le_bytes());
            out.extend_from_slice(&(l.output_dim() as u32).to_le_bytes());
            out.push(match l.activation() {
                Activation::Identity => 0,
                Activation::Relu => 1,
            });
        }
    }
    for s in stacks {
        for p in s.params() {
            out.extend_from_slice(&p.as_f64().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_stacks<T: Scalar>(bytes: &[u8]) -> Result<Vec<MlpParams<T>>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let n_stacks = r.u32()? as usize;
    let mut shapes = Vec::with_capacity(n_stacks);
    for _ in 0..n_stacks {
        let n_layers = r.u32()? as usize;
        let mut layers = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let i = r.u32()? as usize;
            let o = r.u32()? as usize;
            let act = match r.take(1)?[0] {
                0 => Activation::Identity,
                1 => Activation::Relu,
                a => return Err(Error::Checkpoint(format!("unknown activation tag {a}"))),
            };
            layers.push((i, o, act));
        }
        shapes.push(layers);
    }
    let mut stacks = Vec::with_capacity(n_stacks);
    for layers in shapes {
        let mut built = Vec::with_capacity(layers.len());
        for (i, o, act) in layers {
            let w = (0..i * o).map(|_| r.f64().map(T::of)).collect::<Result<Vec<_>>>()?;
            let b = (0..o).map(|_| r.f64().map(T::of)).collect::<Result<Vec<_>>>()?;
            built.push(Layer::new(i, o, w, b, act)?);
        }
        stacks.push(MlpParams::new(built)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(stacks)
}

pub fn encode_network<T: Scalar>(net: &Network<T>) -> Vec<u8> {
    encode_stacks(&net.stacks())
}

fn network_from<T: Scalar>(it: &mut impl Iterator<Item = MlpParams<T>>) -> Result<Network<T>> {
    let mut next = || it.next().ok_or_else(|| Error::Checkpoint("missing stack".into()));
    Network::new(next()?, next()?, next()?)
}

pub fn decode_network<T: Scalar>(bytes: &[u8]) -> Result<Network<T>> {
    let stacks = decode_stacks(bytes)?;
    if stacks.len() != 3 {
        return Err(Error::Checkpoint(format!("expected 3 stacks, found {}", stacks.len())));
    }
    network_from(&mut stacks.into_iter())
}

pub fn encode_model<T: Scalar>(model: &MccModel<T>) -> Vec<u8> {
    let [a, b, c] = model.online.stacks();
    let [d, e, f] = model.target.stacks();
    encode_stacks(&[a, b, c, d, e, f])
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<MccModel<T>> {
    let stacks = decode_stacks(bytes)?;
    if stacks.len() != 6 {
        return Err(Error::Checkpoint(format!("expected 6 stacks, found {}", stacks.len())));
    }
    let mut it = stacks.into_iter();
    Ok(MccModel {
        online: network_from(&mut it)?,
        target: network_from(&mut it)?,
    })
}

pub fn save_model<T: Scalar>(path: impl AsRef<Path>, model: &MccModel<T>) -> Result<()> {
    std::fs::write(path, encode_model(model))?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<MccModel<T>> {
    decode_model(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::network::Architecture;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn header_layout_is_stable() {
        let l = Layer::new(1, 2, vec![1.0, -2.0], vec![0.5, 0.0], Activation::Relu).unwrap();
        let s = MlpParams::new(vec![l]).unwrap();
        let bytes = encode_stacks::<f64>(&[&s]);
        let mut want = b"MCCK".to_vec();
        want.extend([1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 1]);
        for x in [1.0f64, -2.0, 0.5, 0.0] {
            want.extend(x.to_le_bytes());
        }
        assert_eq!(bytes, want);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let m = MccModel::<f64>::random(&Architecture::desk(2, 4, 3), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let bytes = encode_model(&m);
        assert!(decode_model::<f64>(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_model::<f64>(&bad).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode_model::<f64>(&extra).is_err());
        assert!(decode_network::<f64>(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn model_roundtrip(seed in any::<u64>(), d2 in 2usize..6) {
            let arch = Architecture { input_dim: 3, hidden: 5, encoder_depth: 2, d1: 4, d2 };
            let m = MccModel::<f64>::random(&arch, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let back = decode_model::<f64>(&encode_model(&m)).unwrap();
            for (a, b) in m.online.stacks().iter().chain(m.target.stacks().iter())
                .zip(back.online.stacks().iter().chain(back.target.stacks().iter())) {
                prop_assert!(a.same_shape(b));
                prop_assert_eq!(a.flat(), b.flat());
            }
        }
    }
}

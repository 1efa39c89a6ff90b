//! Flat binary parameter checkpoints.
//!
//! Layout, all integers `u32` little endian, all reals `f64` little endian:
//!
//! ```text
//! magic        4 bytes  "ABNN"
//! version      u32      1
//! activation   u32      0 relu, 1 sigmoid, 2 tanh
//! input_dim    u32
//! layer_count  u32
//! per layer, in parameter order (body first, then predictive, selective,
//! auxiliary, uncertainty heads):
//!   group      u32      0 body, 1 predictive, 2 selective, 3 auxiliary, 4 uncertainty
//!   rows       u32      output width
//!   cols       u32      input width
//!   weights    rows*cols f64, row-major
//!   bias       rows f64
//! ```

use std::io::{Read, Write};

use super::net::{Activation, HeadKind, HeadSpec, HeadedNet, MlpSpec, ParamGroup};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"ABNN";
pub const CHECKPOINT_VERSION: u32 = 1;

fn group_code(g: ParamGroup) -> u32 {
    match g {
        ParamGroup::Body => 0,
        ParamGroup::Head(HeadKind::Predictive) => 1,
        ParamGroup::Head(HeadKind::Selective) => 2,
        ParamGroup::Head(HeadKind::Auxiliary) => 3,
        ParamGroup::Head(HeadKind::Uncertainty) => 4,
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

pub fn write_checkpoint(net: &HeadedNet, w: &mut impl Write) -> Result<()> {
    let views = net.layer_views();
    let mut buf = Vec::with_capacity(20 + net.num_params() * 8 + views.len() * 12);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        net.spec().activation.code(),
        net.spec().input_dim as u32,
        views.len() as u32,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for (group, rows, cols, weights, bias) in views {
        for v in [group_code(group), rows as u32, cols as u32] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for p in weights.iter().chain(bias) {
            buf.extend_from_slice(&p.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<HeadedNet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let activation = Activation::from_code(read_u32(r)?)
        .ok_or_else(|| Error::Checkpoint("unknown activation".into()))?;
    let input_dim = read_u32(r)? as usize;
    let count = read_u32(r)?;

    let mut groups: [Vec<usize>; 5] = Default::default();
    let mut params = Vec::new();
    let mut last_group = 0;
    let mut expected_in = input_dim;
    for _ in 0..count {
        let group = read_u32(r)? as usize;
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        if group > 4 || group < last_group {
            return Err(Error::Checkpoint(format!("layer group {group} out of order")));
        }
        if group != last_group {
            // heads start from the body output
            expected_in = groups[0].last().copied().unwrap_or(input_dim);
        }
        if cols != expected_in {
            return Err(Error::Checkpoint(format!("layer expects {cols} inputs, chain gives {expected_in}")));
        }
        last_group = group;
        expected_in = rows;
        groups[group].push(rows);
        for _ in 0..rows * (cols + 1) {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(io_err)?;
            params.push(f64::from_le_bytes(b));
        }
    }
    let head = |widths: &Vec<usize>| -> Option<HeadSpec> {
        widths.split_last().map(|(&outputs, hidden)| HeadSpec {
            hidden: hidden.to_vec(),
            outputs,
        })
    };
    let spec = MlpSpec {
        input_dim,
        hidden_widths: groups[0].clone(),
        activation,
        predictive: head(&groups[1]).ok_or_else(|| Error::Checkpoint("missing predictive head".into()))?,
        selective: head(&groups[2]),
        auxiliary: head(&groups[3]),
        uncertainty: head(&groups[4]),
    };
    HeadedNet::from_parts(spec, params)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip(
            hidden in prop::collection::vec(1usize..6, 0..3),
            classes in 2usize..5,
            selective in any::<bool>(),
            unc in prop::option::of(prop::collection::vec(1usize..5, 0..3)),
            seed in any::<u64>(),
        ) {
            let spec = MlpSpec {
                activation: Activation::Tanh,
                selective: selective.then(|| HeadSpec::linear(1)),
                auxiliary: selective.then(|| HeadSpec::linear(classes)),
                uncertainty: unc.map(|hidden| HeadSpec { hidden, outputs: 1 }),
                ..MlpSpec::classifier(3, &hidden, classes)
            };
            let net = HeadedNet::new(spec, seed).unwrap();
            let mut bytes = Vec::new();
            write_checkpoint(&net, &mut bytes).unwrap();
            prop_assert_eq!(&bytes[..4], b"ABNN");
            let back = read_checkpoint(&mut bytes.as_slice()).unwrap();
            prop_assert_eq!(back, net);
        }
    }

    #[test]
    fn header_layout() {
        let net = HeadedNet::new(MlpSpec::classifier(2, &[3], 2), 0).unwrap();
        let mut bytes = Vec::new();
        write_checkpoint(&net, &mut bytes).unwrap();
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2u32.to_le_bytes()); // input_dim
        assert_eq!(&bytes[16..20], &2u32.to_le_bytes()); // two layers
        // 20 header + 2 * 12 layer headers + (3*3 + 2*4) params
        assert_eq!(bytes.len(), 20 + 24 + 17 * 8);
    }

    #[test]
    fn bad_magic_rejected() {
        let bytes = b"XXXX\x01\x00\x00\x00";
        assert!(matches!(read_checkpoint(&mut bytes.as_slice()), Err(Error::Checkpoint(_))));
    }
}

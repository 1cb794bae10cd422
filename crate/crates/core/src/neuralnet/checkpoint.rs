use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkSpec};
use crate::error::{Error, Result};

const FORMAT: &str = "glyphline-checkpoint";
const VERSION: u32 = 1;

/// One parameter block: shape plus little-endian `f32` values, base64-encoded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBlob {
    pub shape: Vec<usize>,
    pub data: String,
}

/// Versioned, self-describing network snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub spec: NetworkSpec,
    pub parameters: Vec<ParamBlob>,
}

impl Checkpoint {
    pub fn from_network(net: &Network<f32>) -> Self {
        let parameters = net
            .param_shapes()
            .into_iter()
            .zip(net.params())
            .map(|(shape, values)| {
                let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
                ParamBlob {
                    shape,
                    data: STANDARD.encode(bytes),
                }
            })
            .collect();
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            spec: net.spec().clone(),
            parameters,
        }
    }

    pub fn to_network(&self) -> Result<Network<f32>> {
        if self.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let mut net = Network::zeroed(self.spec.clone())?;
        let expected = net.param_shapes();
        if expected.len() != self.parameters.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter blocks, found {}",
                expected.len(),
                self.parameters.len()
            )));
        }
        let mut params = Vec::with_capacity(expected.len());
        for (i, (blob, shape)) in self.parameters.iter().zip(&expected).enumerate() {
            if &blob.shape != shape {
                return Err(Error::Checkpoint(format!(
                    "block {i}: shape {:?} does not match {shape:?}",
                    blob.shape
                )));
            }
            let bytes = STANDARD
                .decode(&blob.data)
                .map_err(|e| Error::Checkpoint(format!("block {i}: {e}")))?;
            if bytes.len() != 4 * shape.iter().product::<usize>() {
                return Err(Error::Checkpoint(format!("block {i}: truncated data")));
            }
            params.push(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            );
        }
        net.set_params(params)?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Network::<f32>::new(NetworkSpec::symbol_net(32, 2), 5).unwrap();
        let ckpt = Checkpoint::from_network(&net);
        let json = serde_json::to_string(&ckpt).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_network().unwrap(), net);
    }

    #[test]
    fn rejects_tampered_checkpoints() {
        let net = Network::<f32>::new(NetworkSpec::symbol_net(32, 3), 5).unwrap();
        let mut ckpt = Checkpoint::from_network(&net);
        ckpt.version = 9;
        assert!(ckpt.to_network().is_err());
        let mut ckpt = Checkpoint::from_network(&net);
        ckpt.parameters[1].data = STANDARD.encode([0u8; 3]);
        assert!(ckpt.to_network().is_err());
    }
}

use crate::error::Result;
use crate::model::checkpoint::{decode_stacks, encode_stacks};
use crate::model::MlpParams;
use crate::scalar::Scalar;

/// Moves serialized parameters between server and clients.
pub trait Transport: Sync {
    fn transmit(&self, payload: &[u8]) -> Result<Vec<u8>>;

    /// Sends parameter stacks across and decodes them on the far side.
    fn send_stacks<T: Scalar>(&self, stacks: &[&MlpParams<T>]) -> Result<Vec<MlpParams<T>>>
    where
        Self: Sized,
    {
        decode_stacks(&self.transmit(&encode_stacks(stacks))?)
    }
}

/// In-process transport: a byte copy.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loopback;

impl Transport for Loopback {
    fn transmit(&self, payload: &[u8]) -> Result<Vec<u8>> {
        Ok(payload.to_vec())
    }
}

//! Line-delimited JSON protocols for the two external oracles.
//!
//! * masked-LM: `{"version":1,"words":[..],"mask_index":i,"k":k}` answered by
//!   `{"version":1,"candidates":[{"token":..,"score":..}, ..]}`, scores descending;
//! * predictor: `{"version":1,"id":..,"width":..,"height":..,"words":[..],"boxes":[[..]]}`
//!   answered by `{"version":1,"labels":[..]}`, one label per word.
//!
//! Either reply may instead carry `{"version":1,"error":"..."}`.

mod protocol;
mod transport;

use std::io;
use std::time::Duration;

use thiserror::Error;

pub use protocol::{
    Candidate, MaskRequest, MaskResponse, PredictRequest, PredictResponse, PROTOCOL_VERSION,
};
pub use transport::{connect, Endpoint, LineChannel, LineOracle};

use crate::document::Document;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("cannot reach oracle at {endpoint}: {source}")]
    Unreachable {
        endpoint: String,
        #[source]
        source: io::Error,
    },
    #[error("oracle timed out after {after:?} on {request}")]
    Timeout { request: String, after: Duration },
    #[error("protocol violation on {request}: {message}")]
    Protocol { request: String, message: String },
    #[error("oracle reported an error on {request}: {message}")]
    Remote { request: String, message: String },
    #[error("oracle i/o failure on {request}: {source}")]
    Io {
        request: String,
        #[source]
        source: io::Error,
    },
}

/// Fills a masked position with ranked candidate tokens.
pub trait MaskedLm {
    fn fill_mask(
        &mut self,
        words: &[String],
        mask_index: usize,
        k: usize,
    ) -> Result<Vec<Candidate>, OracleError>;
}

/// Labels every word of a document.
pub trait Predictor {
    fn predict(&mut self, doc: &Document) -> Result<Vec<String>, OracleError>;
}

impl<F> MaskedLm for F
where
    F: FnMut(&[String], usize, usize) -> Result<Vec<Candidate>, OracleError>,
{
    fn fill_mask(
        &mut self,
        words: &[String],
        mask_index: usize,
        k: usize,
    ) -> Result<Vec<Candidate>, OracleError> {
        self(words, mask_index, k)
    }
}

impl<F> Predictor for F
where
    F: FnMut(&Document) -> Result<Vec<String>, OracleError>,
{
    fn predict(&mut self, doc: &Document) -> Result<Vec<String>, OracleError> {
        self(doc)
    }
}

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum training length left after carving out validation and test.
pub const MIN_TRAIN: usize = 100;

/// Sizes of the trailing validation and test segments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default = "default_segment")]
    pub n_val: usize,
    #[serde(default = "default_segment")]
    pub n_test: usize,
}

fn default_segment() -> usize {
    200
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            n_val: 200,
            n_test: 200,
        }
    }
}

/// Contiguous chronological segments `train | val | test`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splits {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Split `len` points so validation and test are the final `n_val + n_test`.
pub fn split(len: usize, spec: &SplitSpec) -> Result<Splits> {
    let needed = spec.n_val + spec.n_test + MIN_TRAIN;
    if len < needed {
        return Err(Error::Data(format!(
            "series of {len} points is too short to split: need at least {needed}"
        )));
    }
    let test_start = len - spec.n_test;
    let val_start = test_start - spec.n_val;
    Ok(Splits {
        train: 0..val_start,
        val: val_start..test_start,
        test: test_start..len,
    })
}

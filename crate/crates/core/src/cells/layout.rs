use std::ops::Range;

use crate::simgen::SplitMix64;

/// Named blocks packed back to back in a flat parameter vector.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    names: Vec<&'static str>,
    shapes: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl Layout {
    pub(crate) fn new(blocks: &[(&'static str, &[usize])]) -> Self {
        let mut offsets = vec![0];
        for (_, shape) in blocks {
            let last = *offsets.last().expect("non-empty");
            offsets.push(last + shape.iter().product::<usize>());
        }
        Self {
            names: blocks.iter().map(|(n, _)| *n).collect(),
            shapes: blocks.iter().map(|(_, s)| s.to_vec()).collect(),
            offsets,
        }
    }

    pub(crate) fn expect_len(self, n: usize) -> Self {
        debug_assert_eq!(self.total(), n);
        self
    }

    pub(crate) fn total(&self) -> usize {
        *self.offsets.last().expect("non-empty")
    }

    pub(crate) fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub(crate) fn shape(&self, i: usize) -> &[usize] {
        &self.shapes[i]
    }

    pub(crate) fn name(&self, i: usize) -> &'static str {
        self.names[i]
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }
}

pub(crate) fn gate_init(rng: &mut SplitMix64, n: usize, bound: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(-bound, bound)).collect()
}

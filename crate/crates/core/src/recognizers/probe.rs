use std::hint::black_box;

use serde::{Deserialize, Serialize};

use crate::chess::{Square, NUM_CLASSES};
use crate::simulation::Observation;

/// Distinct squares consulted per model during one recognition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvocationCounts {
    pub occupancy: u32,
    pub color: u32,
    #[serde(rename = "type")]
    pub type_: u32,
}

impl InvocationCounts {
    pub fn total(&self) -> u32 {
        self.occupancy + self.color + self.type_
    }
}

/// Memoizing view over an [`Observation`].
///
/// The first consultation of a square by a given model counts as one model
/// invocation and, when `work` is non-zero, burns a fixed amount of CPU to
/// stand in for the cost of running a classifier on that square's crop.
pub struct ModelProbe<'a> {
    obs: &'a Observation,
    work: u32,
    occupancy: u64,
    color: u64,
    types: u64,
    sink: u64,
}

impl<'a> ModelProbe<'a> {
    pub fn new(obs: &'a Observation, work: u32) -> ModelProbe<'a> {
        ModelProbe {
            obs,
            work,
            occupancy: 0,
            color: 0,
            types: 0,
            sink: 0,
        }
    }

    fn infer(&mut self, sq: Square) {
        let mut acc = self.sink ^ sq.index() as u64;
        for i in 0..self.work {
            acc = acc
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(u64::from(i) | 1);
            acc = black_box(acc);
        }
        self.sink = acc;
    }

    fn touch(mask: &mut u64, sq: Square) -> bool {
        let fresh = *mask & sq.bit() == 0;
        *mask |= sq.bit();
        fresh
    }

    pub fn occupancy(&mut self, sq: Square) -> f64 {
        if Self::touch(&mut self.occupancy, sq) {
            self.infer(sq);
        }
        self.obs.occupancy(sq)
    }

    pub fn empty(&mut self, sq: Square) -> f64 {
        1.0 - self.occupancy(sq)
    }

    pub fn white(&mut self, sq: Square) -> f64 {
        if Self::touch(&mut self.color, sq) {
            self.infer(sq);
        }
        self.obs.white(sq)
    }

    pub fn types(&mut self, sq: Square) -> &'a [f64; NUM_CLASSES] {
        if Self::touch(&mut self.types, sq) {
            self.infer(sq);
        }
        self.obs.types(sq)
    }

    pub fn counts(&self) -> InvocationCounts {
        InvocationCounts {
            occupancy: self.occupancy.count_ones(),
            color: self.color.count_ones(),
            type_: self.types.count_ones(),
        }
    }
}

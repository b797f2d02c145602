//! Priority-queue engine: `L` in a min-heap, `T` in a flat array.
//!
//! Each full insert gathers a set `X` of entries that fall below the new
//! threshold (the new item if light, then the smallest members of `L` for as
//! long as `W >= (|T| + |X| - 1) * min(L)`, where `W` is the adjusted weight
//! of `T` and `X`). The new threshold is `W / (|T| + |X| - 1)`. One uniform
//! either lands in a segment of `X` (scanned in order) or, past them, picks a
//! member of `T` uniformly; the leftover of that uniform gives the index.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Engine, OrdF64, SimpleView};
use crate::error::{Error, Result};
use crate::item::{SampleEntry, WeightedItem};
use crate::rng::RandomSource;
use crate::step::LightScan;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Large {
    weight: OrdF64,
    arrival: u64,
    key: String,
}

#[derive(Clone, Debug)]
struct Small {
    key: String,
    weight: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct AmortizedReservoir {
    large: BinaryHeap<Reverse<Large>>,
    large_weight: f64,
    small: Vec<Small>,
    tau: f64,
}

impl AmortizedReservoir {
    pub fn new(capacity: usize) -> Self {
        Self {
            large: BinaryHeap::with_capacity(capacity + 1),
            large_weight: 0.0,
            small: Vec::with_capacity(capacity + 1),
            tau: 0.0,
        }
    }

    fn min_large(&self) -> f64 {
        self.large.peek().map_or(f64::INFINITY, |Reverse(l)| l.weight.0)
    }
}

impl Engine for AmortizedReservoir {
    fn len(&self) -> usize {
        self.large.len() + self.small.len()
    }

    fn threshold(&self) -> f64 {
        self.tau
    }

    fn large_count(&self) -> usize {
        self.large.len()
    }

    fn large_weight(&self) -> f64 {
        self.large_weight
    }

    fn fill(&mut self, item: WeightedItem) {
        self.large_weight += item.weight;
        self.large.push(Reverse(Large {
            weight: OrdF64(item.weight),
            arrival: item.arrival,
            key: item.key,
        }));
    }

    fn simple_view(&self) -> Option<SimpleView> {
        Some(SimpleView {
            small_count: self.small.len(),
            threshold: self.tau,
            min_large: self.min_large(),
        })
    }

    fn raise_threshold(&mut self, tau: f64) {
        self.tau = tau;
    }

    fn insert_full(
        &mut self,
        item: WeightedItem,
        r: Option<f64>,
        rng: &mut RandomSource,
    ) -> Result<String> {
        let mut x: Vec<Small> = Vec::new();
        let mut scan = LightScan::at_threshold(self.small.len(), self.tau);
        if item.weight > self.tau {
            self.large_weight += item.weight;
            self.large.push(Reverse(Large {
                weight: OrdF64(item.weight),
                arrival: item.arrival,
                key: item.key,
            }));
        } else {
            let light = scan.offer(item.weight);
            debug_assert!(light);
            x.push(Small {
                key: item.key,
                weight: item.weight,
            });
        }
        // Move condition: W >= (|T| + |X| - 1) * min(L), evaluated as
        // W + min(L) >= (|T| + |X|) * min(L).
        while let Some(Reverse(min)) = self.large.peek() {
            if !scan.offer(min.weight.0) {
                break;
            }
            let Reverse(min) = self.large.pop().expect("peeked");
            self.large_weight -= min.weight.0;
            x.push(Small {
                key: min.key,
                weight: min.weight.0,
            });
        }
        if self.large.is_empty() {
            // Avoid drift in the running sum.
            self.large_weight = 0.0;
        }
        let t = scan.tau();

        let r = r.unwrap_or_else(|| rng.uniform());
        let target = r * t;
        let mut acc = 0.0;
        let mut drop_x = None;
        for (i, s) in x.iter().enumerate() {
            if s.weight < t {
                acc += t - s.weight;
                if target <= acc {
                    drop_x = Some(i);
                    break;
                }
            }
        }
        let seg_small = t - self.tau;
        let dropped = if let Some(i) = drop_x {
            x.remove(i).key
        } else if !self.small.is_empty() && seg_small > 0.0 {
            let i = (((target - acc) / seg_small) as usize).min(self.small.len() - 1);
            self.small.swap_remove(i).key
        } else {
            let i = x
                .iter()
                .rposition(|s| s.weight < t)
                .ok_or_else(|| Error::Internal("no entry below the threshold".into()))?;
            x.remove(i).key
        };
        self.small.append(&mut x);
        self.tau = t;
        Ok(dropped)
    }

    fn entries(&self) -> Vec<SampleEntry> {
        self.large
            .iter()
            .map(|Reverse(l)| SampleEntry {
                key: l.key.clone(),
                adjusted_weight: l.weight.0,
                original_weight: l.weight.0,
            })
            .chain(self.small.iter().map(|s| SampleEntry {
                key: s.key.clone(),
                adjusted_weight: self.tau,
                original_weight: s.weight,
            }))
            .collect()
    }
}

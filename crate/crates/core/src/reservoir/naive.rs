//! Oracle engine: every insert re-sorts all k+1 entries and recomputes the
//! threshold and the drop segments one entry at a time.

use super::{Engine, SimpleView};
use crate::error::Result;
use crate::item::{SampleEntry, WeightedItem};
use crate::rng::RandomSource;
use crate::step::{canonical_cmp, drop_position, DropCandidate, LightScan};

#[derive(Clone, Debug)]
struct Held {
    candidate: DropCandidate,
    /// Adjusted weight is the common threshold (the pool `T`).
    at_threshold: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct NaiveReservoir {
    held: Vec<Held>,
    tau: f64,
}

impl NaiveReservoir {
    pub fn new(capacity: usize) -> Self {
        Self {
            held: Vec::with_capacity(capacity + 1),
            tau: 0.0,
        }
    }
}

fn candidate(item: WeightedItem) -> DropCandidate {
    DropCandidate {
        entry: SampleEntry {
            key: item.key,
            adjusted_weight: item.weight,
            original_weight: item.weight,
        },
        arrival: item.arrival,
    }
}

impl Engine for NaiveReservoir {
    fn len(&self) -> usize {
        self.held.len()
    }

    fn threshold(&self) -> f64 {
        self.tau
    }

    fn large_count(&self) -> usize {
        self.held.iter().filter(|h| !h.at_threshold).count()
    }

    fn large_weight(&self) -> f64 {
        self.held
            .iter()
            .filter(|h| !h.at_threshold)
            .map(|h| h.candidate.entry.adjusted_weight)
            .sum()
    }

    fn fill(&mut self, item: WeightedItem) {
        self.held.push(Held {
            candidate: candidate(item),
            at_threshold: false,
        });
    }

    fn simple_view(&self) -> Option<SimpleView> {
        None
    }

    fn raise_threshold(&mut self, _tau: f64) {
        unreachable!("naive engine has no simple case")
    }

    fn insert_full(
        &mut self,
        item: WeightedItem,
        r: Option<f64>,
        rng: &mut RandomSource,
    ) -> Result<String> {
        let tau0 = self.tau;
        let (small, large): (Vec<Held>, Vec<Held>) =
            std::mem::take(&mut self.held).into_iter().partition(|h| h.at_threshold);
        let mut small: Vec<DropCandidate> = small.into_iter().map(|h| h.candidate).collect();
        small.sort_by_key(|c| c.arrival);

        // Everything not at the threshold, ascending; a new item at or below
        // the old threshold goes first.
        let new = candidate(item);
        let new_arrival = new.arrival;
        let mut others: Vec<DropCandidate> = large.into_iter().map(|h| h.candidate).collect();
        others.sort_by(canonical_cmp);
        let at = if new.entry.original_weight <= tau0 {
            0
        } else {
            others.partition_point(|c| canonical_cmp(c, &new).is_lt())
        };
        others.insert(at, new);

        let mut scan = LightScan::at_threshold(small.len(), tau0);
        let light_others = others
            .iter()
            .take_while(|c| scan.offer(c.entry.original_weight))
            .count();
        let tau = scan.tau();
        let heavy = others.split_off(light_others);

        // Drop order: the new item if light, then T by arrival, then the
        // other light entries ascending.
        let mut order = Vec::with_capacity(light_others + small.len());
        if let Some(i) = others.iter().position(|c| c.arrival == new_arrival) {
            order.push(others.remove(i));
        }
        order.extend(small);
        order.extend(others);
        let r = r.unwrap_or_else(|| rng.uniform());
        let d = drop_position(order.iter().map(|c| c.entry.adjusted_weight), tau, r)?;
        let dropped = order.remove(d);

        self.held = order
            .into_iter()
            .map(|mut c| {
                c.entry.adjusted_weight = tau;
                Held {
                    candidate: c,
                    at_threshold: true,
                }
            })
            .chain(heavy.into_iter().map(|c| Held {
                candidate: c,
                at_threshold: false,
            }))
            .collect();
        self.tau = tau;
        Ok(dropped.entry.key)
    }

    fn entries(&self) -> Vec<SampleEntry> {
        self.held.iter().map(|h| h.candidate.entry.clone()).collect()
    }
}

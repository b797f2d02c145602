//! Logarithmic-time engine: `L` in a treap ordered by (weight, arrival) with
//! subtree counts and weight sums, `T` in a treap ordered by arrival.

use super::ost::Treap;
use super::{Engine, OrdF64, SimpleView};
use crate::error::Result;
use crate::item::{SampleEntry, WeightedItem};
use crate::rng::RandomSource;
use crate::step::LightScan;

#[derive(Clone, Debug)]
pub(crate) struct TreeReservoir {
    large: Treap<(OrdF64, u64), String>,
    /// Keyed by arrival; node weight is the original weight.
    small: Treap<u64, String>,
    tau: f64,
    min_large: f64,
}

/// Where the dropped entry sits.
enum Victim {
    New,
    Small(usize),
    Large(usize),
}

impl TreeReservoir {
    pub fn new(_capacity: usize) -> Self {
        Self {
            large: Treap::new(0x4c41_5247),
            small: Treap::new(0x534d_414c),
            tau: 0.0,
            min_large: f64::INFINITY,
        }
    }

    fn refresh_min(&mut self) {
        self.min_large = self.large.first().map_or(f64::INFINITY, |(_, w)| w);
    }
}

impl Engine for TreeReservoir {
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
        self.large.total_weight()
    }

    fn fill(&mut self, item: WeightedItem) {
        self.large
            .insert((OrdF64(item.weight), item.arrival), item.weight, item.key);
        self.refresh_min();
    }

    fn simple_view(&self) -> Option<SimpleView> {
        Some(SimpleView {
            small_count: self.small.len(),
            threshold: self.tau,
            min_large: self.min_large,
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
        let w = item.weight;
        let tau0 = self.tau;
        let n_small = self.small.len();
        let new_key = (OrdF64(w), item.arrival);

        // Light entries: all of T, then candidates in ascending order for as
        // long as they stay at or below the threshold they induce. A new item
        // at or below the old threshold precedes everything in L; otherwise
        // it takes its place in L. Every item accepted from L leaves L below,
        // so the in-order scan is paid for by those moves.
        let mut scan = LightScan::at_threshold(n_small, tau0);
        let mut pending = if w <= tau0 {
            let light = scan.offer(w);
            debug_assert!(light);
            Some(item.key)
        } else {
            self.large.insert(new_key, w, item.key);
            None
        };
        let mut prefix = self.large.count_while(|_, wi| scan.offer(wi));
        debug_assert!(scan.count >= 2);
        let tau = scan.tau();

        // The new item's segment comes first, so pull it out of L if it
        // turned out light.
        if pending.is_none() {
            let (rank, present) = self.large.rank_of(&new_key);
            debug_assert!(present);
            if rank < prefix {
                pending = Some(self.large.remove_at(rank).2);
                prefix -= 1;
            }
        }

        // Segment lengths scaled by tau: tau - w for each light entry, in
        // the order new item, T by arrival, light part of L.
        let r = r.unwrap_or_else(|| rng.uniform());
        let target = r * tau;
        let mut acc = 0.0;
        let mut victim = None;
        if pending.is_some() && w < tau {
            acc += tau - w;
            if acc >= target {
                victim = Some(Victim::New);
            }
        }
        let seg_small = tau - tau0;
        if victim.is_none() && n_small > 0 && seg_small > 0.0 {
            let block = n_small as f64 * seg_small;
            if acc + block >= target {
                let d = ((target - acc) / seg_small).ceil() as usize;
                victim = Some(Victim::Small(d.clamp(1, n_small) - 1));
            } else {
                acc += block;
            }
        }
        if victim.is_none() {
            let mut seen = 0;
            self.large.count_while(|_, wi| {
                if seen == prefix {
                    return false;
                }
                seen += 1;
                if wi < tau {
                    acc += tau - wi;
                    if acc >= target {
                        victim = Some(Victim::Large(seen - 1));
                        return false;
                    }
                }
                true
            });
        }
        let victim = victim.unwrap_or_else(|| {
            // Rounding left r past the last boundary: take the last nonempty
            // segment.
            let mut seen = 0;
            let below = self.large.count_while(|_, wi| {
                seen += 1;
                seen <= prefix && wi < tau
            });
            if below > 0 {
                Victim::Large(below - 1)
            } else if n_small > 0 && seg_small > 0.0 {
                Victim::Small(n_small - 1)
            } else {
                Victim::New
            }
        });

        let dropped = match victim {
            Victim::New => pending.take().expect("new item is light"),
            Victim::Small(i) => self.small.remove_at(i).2,
            Victim::Large(i) => {
                prefix -= 1;
                self.large.remove_at(i).2
            }
        };
        for ((_, arrival), wi, key) in self.large.split_off_prefix(prefix) {
            self.small.insert(arrival, wi, key);
        }
        if let Some(key) = pending {
            self.small.insert(item.arrival, w, key);
        }
        self.tau = tau;
        self.refresh_min();
        Ok(dropped)
    }

    fn entries(&self) -> Vec<SampleEntry> {
        let mut out = Vec::with_capacity(self.len());
        self.large.for_each(|_, w, key| {
            out.push(SampleEntry {
                key: key.clone(),
                adjusted_weight: w,
                original_weight: w,
            })
        });
        self.small.for_each(|_, w, key| {
            out.push(SampleEntry {
                key: key.clone(),
                adjusted_weight: self.tau,
                original_weight: w,
            })
        });
        out
    }
}

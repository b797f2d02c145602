//! Arena-backed treap augmented with subtree counts and subtree weight sums.
//!
//! Supports rank queries, prefix searches driven by (count, weight) of the
//! items before a node, and splitting off a prefix, all in expected
//! logarithmic time. Priorities come from a deterministic hash of an
//! allocation counter so the structure never touches the caller's randomness.

use crate::rng::mix;

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node<K, V> {
    key: K,
    weight: f64,
    value: V,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
    sum: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Treap<K, V> {
    nodes: Vec<Node<K, V>>,
    free: Vec<u32>,
    root: u32,
    allocs: u64,
    salt: u64,
}

impl<K: Ord + Clone, V: Default> Treap<K, V> {
    pub fn new(salt: u64) -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            allocs: 0,
            salt,
        }
    }

    pub fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    pub fn total_weight(&self) -> f64 {
        self.sum(self.root)
    }

    fn size(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].size
        }
    }

    fn sum(&self, t: u32) -> f64 {
        if t == NIL {
            0.0
        } else {
            self.nodes[t as usize].sum
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = {
            let n = &self.nodes[t as usize];
            (n.left, n.right)
        };
        let size = self.size(l) + 1 + self.size(r);
        let sum = self.sum(l) + self.nodes[t as usize].weight + self.sum(r);
        let n = &mut self.nodes[t as usize];
        n.size = size;
        n.sum = sum;
    }

    fn alloc(&mut self, key: K, weight: f64, value: V) -> u32 {
        self.allocs += 1;
        let node = Node {
            key,
            weight,
            value,
            prio: mix(self.allocs, self.salt),
            left: NIL,
            right: NIL,
            size: 1,
            sum: weight,
        };
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn release(&mut self, t: u32) -> (K, f64, V) {
        self.free.push(t);
        let n = &mut self.nodes[t as usize];
        (n.key.clone(), n.weight, std::mem::take(&mut n.value))
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    /// Splits into (keys < key, keys >= key).
    fn split_key(&mut self, t: u32, key: &K) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.nodes[t as usize].key < *key {
            let r = self.nodes[t as usize].right;
            let (a, b) = self.split_key(r, key);
            self.nodes[t as usize].right = a;
            self.pull(t);
            (t, b)
        } else {
            let l = self.nodes[t as usize].left;
            let (a, b) = self.split_key(l, key);
            self.nodes[t as usize].left = b;
            self.pull(t);
            (a, t)
        }
    }

    /// Splits into (first `rank` items, rest).
    fn split_rank(&mut self, t: u32, rank: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        let l = self.nodes[t as usize].left;
        let ls = self.size(l);
        if rank <= ls {
            let (a, b) = self.split_rank(l, rank);
            self.nodes[t as usize].left = b;
            self.pull(t);
            (a, t)
        } else {
            let r = self.nodes[t as usize].right;
            let (a, b) = self.split_rank(r, rank - ls - 1);
            self.nodes[t as usize].right = a;
            self.pull(t);
            (t, b)
        }
    }

    /// Inserts a key that is not already present.
    pub fn insert(&mut self, key: K, weight: f64, value: V) {
        let (l, r) = self.split_key(self.root, &key);
        let node = self.alloc(key, weight, value);
        let left = self.merge(l, node);
        self.root = self.merge(left, r);
    }

    pub fn remove_at(&mut self, rank: usize) -> (K, f64, V) {
        assert!(rank < self.len(), "rank {rank} out of bounds");
        let (l, rest) = self.split_rank(self.root, rank as u32);
        let (m, r) = self.split_rank(rest, 1);
        self.root = self.merge(l, r);
        self.release(m)
    }

    /// Number of keys strictly smaller than `key`, and whether `key` is present.
    pub fn rank_of(&self, key: &K) -> (usize, bool) {
        let mut t = self.root;
        let mut before = 0usize;
        while t != NIL {
            let n = &self.nodes[t as usize];
            match key.cmp(&n.key) {
                std::cmp::Ordering::Less => t = n.left,
                std::cmp::Ordering::Equal => {
                    return (before + self.size(n.left) as usize, true);
                }
                std::cmp::Ordering::Greater => {
                    before += self.size(n.left) as usize + 1;
                    t = n.right;
                }
            }
        }
        (before, false)
    }

    pub fn first(&self) -> Option<(&K, f64)> {
        let mut t = self.root;
        if t == NIL {
            return None;
        }
        while self.nodes[t as usize].left != NIL {
            t = self.nodes[t as usize].left;
        }
        let n = &self.nodes[t as usize];
        Some((&n.key, n.weight))
    }

    /// Visits items in key order while `pred` holds and returns how many it
    /// accepted. Costs O(log n) plus the number of items visited.
    pub fn count_while<F>(&self, mut pred: F) -> usize
    where
        F: FnMut(&K, f64) -> bool,
    {
        let mut stack = Vec::new();
        let mut t = self.root;
        let mut count = 0;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let top = stack.pop().expect("stack nonempty");
            let n = &self.nodes[top as usize];
            if !pred(&n.key, n.weight) {
                break;
            }
            count += 1;
            t = n.right;
        }
        count
    }

    /// Removes and returns the first `count` items in key order.
    pub fn split_off_prefix(&mut self, count: usize) -> Vec<(K, f64, V)> {
        let (l, r) = self.split_rank(self.root, count as u32);
        self.root = r;
        let mut out = Vec::with_capacity(count);
        let mut stack = Vec::new();
        let mut t = l;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let top = stack.pop().expect("stack nonempty");
            t = self.nodes[top as usize].right;
            out.push(self.release(top));
        }
        out
    }

    /// In-order visit of every item.
    pub fn for_each<F: FnMut(&K, f64, &V)>(&self, mut f: F) {
        let mut stack = Vec::new();
        let mut t = self.root;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let top = stack.pop().expect("stack nonempty");
            let n = &self.nodes[top as usize];
            f(&n.key, n.weight, &n.value);
            t = n.right;
        }
    }

    #[cfg(test)]
    fn depth(&self, t: u32) -> usize {
        if t == NIL {
            0
        } else {
            let n = &self.nodes[t as usize];
            1 + self.depth(n.left).max(self.depth(n.right))
        }
    }
}

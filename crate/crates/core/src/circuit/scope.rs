use alloc::vec;
use alloc::vec::Vec;

/// Set of variable indices, stored as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scope {
    words: Vec<u64>,
}

impl Scope {
    pub fn empty(num_vars: usize) -> Self {
        Self {
            words: vec![0; num_vars.div_ceil(64).max(1)],
        }
    }

    pub fn singleton(num_vars: usize, var: usize) -> Self {
        let mut s = Self::empty(num_vars);
        s.insert(var);
        s
    }

    pub fn full(num_vars: usize) -> Self {
        let mut s = Self::empty(num_vars);
        for v in 0..num_vars {
            s.insert(v);
        }
        s
    }

    pub fn insert(&mut self, var: usize) {
        self.words[var / 64] |= 1 << (var % 64);
    }

    pub fn contains(&self, var: usize) -> bool {
        self.words
            .get(var / 64)
            .is_some_and(|w| w & (1 << (var % 64)) != 0)
    }

    pub fn union_with(&mut self, other: &Scope) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            (0..64)
                .filter(move |b| w & (1 << b) != 0)
                .map(move |b| i * 64 + b)
        })
    }
}

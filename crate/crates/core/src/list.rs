//! Items, ranked lists and sets of incorrectly-ordered item pairs.
//!
//! Items are labeled canonically: item 1 is the most attractive item, item 2
//! the second most attractive, and so on. Under that labeling the optimal list
//! is the identity `(1, ..., K)` and an item pair `(i, j)` with `i < j` is
//! incorrectly ordered in a list exactly when `i` is ranked below `j`.
//!
//! In Rust code, items and positions are 0-based. Files and `Display` output
//! use 1-based labels.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An item identity, stored as a 0-based index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Item(u32);

impl Item {
    #[inline]
    pub const fn new(index: usize) -> Self {
        Item(index as u32)
    }

    /// Builds an item from its 1-based label.
    pub fn from_label(label: usize, k: usize) -> Result<Self> {
        if label == 0 || label > k {
            return Err(Error::ItemOutOfRange { label, k });
        }
        Ok(Item::new(label - 1))
    }

    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub const fn label(self) -> usize {
        self.0 as usize + 1
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// A permutation of the items `[K]`, with constant-time lookups in both
/// directions.
///
/// Every constructor and mutator keeps the list a permutation, so a
/// `RankedList` value is always valid.
#[derive(Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct RankedList {
    items: Vec<Item>,
    positions: Vec<usize>,
}

impl Clone for RankedList {
    fn clone(&self) -> Self {
        RankedList {
            items: self.items.clone(),
            positions: self.positions.clone(),
        }
    }

    fn clone_from(&mut self, source: &Self) {
        self.items.clone_from(&source.items);
        self.positions.clone_from(&source.positions);
    }
}

impl RankedList {
    /// The list `(1, ..., K)`.
    pub fn identity(k: usize) -> Self {
        RankedList {
            items: (0..k).map(Item::new).collect(),
            positions: (0..k).collect(),
        }
    }

    pub fn from_items(items: Vec<Item>) -> Result<Self> {
        let k = items.len();
        let mut positions = vec![usize::MAX; k];
        for (pos, item) in items.iter().enumerate() {
            let idx = item.index();
            if idx >= k {
                return Err(Error::ItemOutOfRange { label: item.label(), k });
            }
            if positions[idx] != usize::MAX {
                return Err(Error::NotPermutation(format!("item {item} appears twice")));
            }
            positions[idx] = pos;
        }
        Ok(RankedList { items, positions })
    }

    /// Builds a list from 0-based item indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        Self::from_items(indices.iter().map(|&i| Item::new(i)).collect())
    }

    /// Builds a list from 1-based item labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.len();
        let items = labels
            .iter()
            .map(|&l| Item::from_label(l, k))
            .collect::<Result<Vec<_>>>()?;
        Self::from_items(items)
    }

    /// Draws a uniformly random permutation of `[K]`.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Self {
        let mut list = Self::identity(k);
        list.shuffle(rng);
        list
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    #[inline]
    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// The item at 0-based `position`. Panics when out of range.
    #[inline]
    pub fn item_at(&self, position: usize) -> Item {
        self.items[position]
    }

    /// The 0-based position of `item` (the inverse of [`item_at`](Self::item_at)).
    pub fn position_of(&self, item: Item) -> Result<usize> {
        self.positions
            .get(item.index())
            .copied()
            .ok_or(Error::ItemOutOfRange { label: item.label(), k: self.len() })
    }

    #[inline]
    pub(crate) fn position_unchecked(&self, item: Item) -> usize {
        self.positions[item.index()]
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.items.iter().enumerate().all(|(p, i)| i.index() == p)
    }

    /// Returns a copy with the items at positions `k` and `k + 1` exchanged.
    pub fn swap_adjacent(&self, k: usize) -> Result<Self> {
        let mut out = self.clone();
        out.swap_adjacent_in_place(k)?;
        Ok(out)
    }

    pub fn swap_adjacent_in_place(&mut self, k: usize) -> Result<()> {
        if k + 1 >= self.len() {
            return Err(Error::PositionOutOfRange { position: k, len: self.len() });
        }
        self.exchange(k);
        Ok(())
    }

    /// Exchanges positions `k` and `k + 1`. Panics when out of range.
    #[inline]
    pub(crate) fn exchange(&mut self, k: usize) {
        self.items.swap(k, k + 1);
        self.positions[self.items[k].index()] = k;
        self.positions[self.items[k + 1].index()] = k + 1;
    }

    pub fn shuffle<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.items.shuffle(rng);
        for (pos, item) in self.items.iter().enumerate() {
            self.positions[item.index()] = pos;
        }
    }

    /// Number of incorrectly-ordered pairs, `|V(R)|`.
    pub fn inversions(&self) -> usize {
        let p = &self.positions;
        let mut count = 0;
        for i in 0..p.len() {
            let pi = p[i];
            count += p[i + 1..].iter().filter(|&&pj| pj < pi).count();
        }
        count
    }

    /// The set `V(R)` of pairs `(i, j)`, `i < j`, where `i` is ranked below `j`.
    pub fn incorrect_pairs(&self) -> PairSet {
        let mut set = PairSet::new();
        let k = self.len();
        for i in 0..k {
            for j in i + 1..k {
                if self.positions[i] > self.positions[j] {
                    set.pairs.insert((Item::new(i), Item::new(j)));
                }
            }
        }
        set
    }
}

impl TryFrom<Vec<usize>> for RankedList {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        RankedList::from_labels(&labels)
    }
}

impl From<RankedList> for Vec<usize> {
    fn from(list: RankedList) -> Self {
        list.labels()
    }
}

impl fmt::Display for RankedList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (n, item) in self.items.iter().enumerate() {
            if n > 0 {
                f.write_str(",")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str(")")
    }
}

/// A set of item pairs `(i, j)` with `i < j`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: BTreeSet<(Item, Item)>,
}

impl PairSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `(i, j)`. Returns whether the pair was new.
    pub fn insert(&mut self, i: Item, j: Item) -> Result<bool> {
        if i >= j {
            return Err(Error::Domain(format!("pair ({i}, {j}) is not ordered i < j")));
        }
        Ok(self.pairs.insert((i, j)))
    }

    pub fn contains(&self, i: Item, j: Item) -> bool {
        self.pairs.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Item, Item)> + '_ {
        self.pairs.iter().copied()
    }

    /// Pairs as 1-based label tuples.
    pub fn labels(&self) -> Vec<(usize, usize)> {
        self.iter().map(|(i, j)| (i.label(), j.label())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn list(labels: &[usize]) -> RankedList {
        RankedList::from_labels(labels).unwrap()
    }

    fn item(label: usize) -> Item {
        Item::new(label - 1)
    }

    /// All permutations of `0..k`, by recursion.
    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(k - 1) {
            for at in 0..=p.len() {
                let mut q = p.clone();
                q.insert(at, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn position_lookup_examples() {
        assert_eq!(list(&[3, 1, 2]).position_of(item(1)).unwrap(), 1);
        assert_eq!(list(&[2, 1]).position_of(item(2)).unwrap(), 0);
        let id = RankedList::identity(7);
        for p in 0..7 {
            assert_eq!(id.position_of(Item::new(p)).unwrap(), p);
        }
    }

    #[test]
    fn position_lookup_rejects_foreign_item() {
        let l = list(&[1, 2, 3]);
        assert!(matches!(l.position_of(item(4)), Err(Error::ItemOutOfRange { label: 4, k: 3 })));
    }

    #[test]
    fn construction_rejects_non_permutations() {
        assert!(RankedList::from_labels(&[1, 1, 2]).is_err());
        assert!(RankedList::from_labels(&[0, 1, 2]).is_err());
        assert!(RankedList::from_labels(&[1, 2, 4]).is_err());
        assert!(serde_json::from_str::<RankedList>("[2, 2]").is_err());
        let l: RankedList = serde_json::from_str("[2, 3, 1]").unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), "[2,3,1]");
    }

    #[test]
    fn incorrect_pair_examples() {
        assert!(list(&[1, 2, 3]).incorrect_pairs().is_empty());
        assert_eq!(list(&[3, 2, 1]).incorrect_pairs().labels(), vec![(1, 2), (1, 3), (2, 3)]);
        assert_eq!(list(&[3, 1, 2]).incorrect_pairs().labels(), vec![(1, 3), (2, 3)]);
    }

    #[test]
    fn swap_examples() {
        assert_eq!(list(&[1, 2, 3]).swap_adjacent(0).unwrap(), list(&[2, 1, 3]));
        assert_eq!(list(&[1, 2, 3]).swap_adjacent(1).unwrap(), list(&[1, 3, 2]));
        assert!(list(&[1, 2, 3]).swap_adjacent(2).is_err());
    }

    #[test]
    fn pair_set_requires_order() {
        let mut s = PairSet::new();
        assert!(s.insert(item(1), item(2)).unwrap());
        assert!(!s.insert(item(1), item(2)).unwrap());
        assert!(s.insert(item(2), item(1)).is_err());
        assert!(s.insert(item(2), item(2)).is_err());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn exhaustive_small_permutations() {
        for k in 1..=6 {
            let max = k * (k - 1) / 2;
            for p in permutations(k) {
                let l = RankedList::from_indices(&p).unwrap();
                for pos in 0..k {
                    assert_eq!(l.position_of(l.item_at(pos)).unwrap(), pos);
                }
                for i in 0..k {
                    assert_eq!(l.item_at(l.position_of(Item::new(i)).unwrap()), Item::new(i));
                }
                let v = l.incorrect_pairs();
                assert_eq!(v.len(), l.inversions());
                assert!(v.len() <= max);
                assert_eq!(v.is_empty(), l.is_identity());
                let reversed = p.iter().enumerate().all(|(pos, &i)| i == k - 1 - pos);
                assert_eq!(v.len() == max, reversed);
                // brute-force definition of V(R)
                for i in 0..k {
                    for j in i + 1..k {
                        let pi = p.iter().position(|&x| x == i).unwrap();
                        let pj = p.iter().position(|&x| x == j).unwrap();
                        assert_eq!(v.contains(Item::new(i), Item::new(j)), pi > pj);
                    }
                }
            }
        }
    }

    fn arb_list() -> impl Strategy<Value = RankedList> {
        (2usize..12)
            .prop_flat_map(|k| Just((0..k).collect::<Vec<_>>()).prop_shuffle())
            .prop_map(|p| RankedList::from_indices(&p).unwrap())
    }

    proptest! {
        #[test]
        fn swap_changes_inversions_by_one(l in arb_list(), k in 0usize..11) {
            let k = k % (l.len() - 1);
            let s = l.swap_adjacent(k).unwrap();
            let d = s.inversions() as i64 - l.inversions() as i64;
            prop_assert_eq!(d.abs(), 1);
            prop_assert_eq!(s.swap_adjacent(k).unwrap(), l);
        }

        #[test]
        fn shuffle_keeps_lookups_consistent(l in arb_list(), seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut s = l.clone();
            s.shuffle(&mut rng);
            for pos in 0..s.len() {
                prop_assert_eq!(s.position_of(s.item_at(pos)).unwrap(), pos);
            }
        }
    }
}

//! Binary min-heap ordered by a caller-supplied comparator.
//!
//! The comparator is passed per call rather than stored so it can borrow
//! state (cell stores) that lives next to the heap.

use std::cmp::Ordering;

#[derive(Debug, Clone, Default)]
pub struct MinHeap<T> {
    data: Vec<T>,
}

impl<T> MinHeap<T> {
    pub fn new() -> Self {
        MinHeap { data: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn peek(&self) -> Option<&T> {
        self.data.first()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.data.iter()
    }

    pub fn push<F>(&mut self, item: T, cmp: &mut F)
    where
        F: FnMut(&T, &T) -> Ordering,
    {
        self.data.push(item);
        let mut i = self.data.len() - 1;
        while i > 0 {
            let parent = (i - 1) / 2;
            if cmp(&self.data[i], &self.data[parent]) == Ordering::Less {
                self.data.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    pub fn pop<F>(&mut self, cmp: &mut F) -> Option<T>
    where
        F: FnMut(&T, &T) -> Ordering,
    {
        if self.data.is_empty() {
            return None;
        }
        let top = self.data.swap_remove(0);
        let n = self.data.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut least = i;
            if l < n && cmp(&self.data[l], &self.data[least]) == Ordering::Less {
                least = l;
            }
            if r < n && cmp(&self.data[r], &self.data[least]) == Ordering::Less {
                least = r;
            }
            if least == i {
                break;
            }
            self.data.swap(i, least);
            i = least;
        }
        Some(top)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn pops_in_sorted_order(items in proptest::collection::vec(-1000i64..1000, 0..200)) {
            let mut h = MinHeap::new();
            let mut cmp = |a: &i64, b: &i64| a.cmp(b);
            for &x in &items {
                h.push(x, &mut cmp);
            }
            let mut out = Vec::new();
            while let Some(x) = h.pop(&mut cmp) {
                out.push(x);
            }
            let mut sorted = items.clone();
            sorted.sort();
            prop_assert_eq!(out, sorted);
        }
    }

    #[test]
    fn comparisons_are_logarithmic() {
        let calls = std::cell::Cell::new(0u64);
        let mut cmp = |a: &u32, b: &u32| {
            calls.set(calls.get() + 1);
            a.cmp(b)
        };
        let mut h = MinHeap::new();
        for x in (0..1024u32).rev() {
            h.push(x, &mut cmp);
        }
        let before = calls.get();
        h.pop(&mut cmp);
        assert!(calls.get() - before <= 2 * 10);
    }
}

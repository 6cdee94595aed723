//! Switch between rayon and plain iterators.
//!
//! With the `parallel` feature this re-exports rayon's prelude. Without it,
//! `into_par_iter` / `par_iter` resolve to the standard iterators and the
//! handful of rayon-only adapters we use get sequential stand-ins, so the
//! call sites compile unchanged either way.

#[cfg(feature = "parallel")]
pub use rayon::prelude::*;

#[cfg(not(feature = "parallel"))]
mod sequential {
    pub trait IntoParallelIterator {
        type Iter: Iterator<Item = Self::Item>;
        type Item;
        fn into_par_iter(self) -> Self::Iter;
    }

    impl<I: IntoIterator> IntoParallelIterator for I {
        type Iter = I::IntoIter;
        type Item = I::Item;
        fn into_par_iter(self) -> Self::Iter {
            self.into_iter()
        }
    }

    pub trait IntoParallelRefIterator<'a> {
        type Iter: Iterator<Item = Self::Item>;
        type Item: 'a;
        fn par_iter(&'a self) -> Self::Iter;
    }

    impl<'a, T: 'a> IntoParallelRefIterator<'a> for [T] {
        type Iter = std::slice::Iter<'a, T>;
        type Item = &'a T;
        fn par_iter(&'a self) -> Self::Iter {
            self.iter()
        }
    }

    impl<'a, T: 'a> IntoParallelRefIterator<'a> for Vec<T> {
        type Iter = std::slice::Iter<'a, T>;
        type Item = &'a T;
        fn par_iter(&'a self) -> Self::Iter {
            self.iter()
        }
    }

    /// Rayon's order-respecting searches, spelled for `Iterator`.
    pub trait ParallelIterator: Iterator + Sized {
        fn find_first<P>(mut self, predicate: P) -> Option<Self::Item>
        where
            P: FnMut(&Self::Item) -> bool,
        {
            self.find(predicate)
        }

        fn find_map_first<B, F>(mut self, f: F) -> Option<B>
        where
            F: FnMut(Self::Item) -> Option<B>,
        {
            self.find_map(f)
        }
    }

    impl<I: Iterator> ParallelIterator for I {}
}

#[cfg(not(feature = "parallel"))]
pub use sequential::*;

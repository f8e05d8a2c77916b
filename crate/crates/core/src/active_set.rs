use std::fmt;

/// A set of (0-based) states on which a stationary deterministic policy
/// takes the active action.
///
/// Stored as a bit vector so that families over a few hundred augmented
/// states stay cheap to hash and compare.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActiveSet {
    words: Vec<u64>,
}

impl ActiveSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_states<I: IntoIterator<Item = usize>>(states: I) -> Self {
        let mut s = Self::empty();
        for i in states {
            s.insert(i);
        }
        s
    }

    /// Builds the set whose members are the positions of the set bits of
    /// `mask` mapped through `ground`.
    pub fn from_mask(ground: &[usize], mask: u64) -> Self {
        Self::from_states(
            ground
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &i)| i),
        )
    }

    /// Inverse of [`ActiveSet::from_mask`]; states outside `ground` are ignored.
    pub fn mask_over(&self, ground: &[usize]) -> u64 {
        ground
            .iter()
            .enumerate()
            .filter(|(_, &i)| self.contains(i))
            .fold(0, |m, (k, _)| m | 1 << k)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let w = i / 64;
        if self.words.len() <= w {
            self.words.resize(w + 1, 0);
        }
        let was = self.contains(i);
        self.words[w] |= 1 << (i % 64);
        !was
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let was = self.contains(i);
        if was {
            self.words[i / 64] &= !(1 << (i % 64));
            self.trim();
        }
        was
    }

    pub fn with(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.insert(i);
        s
    }

    pub fn without(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.remove(i);
        s
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| k * 64 + b)
        })
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .enumerate()
            .all(|(k, &w)| w & !other.words.get(k).copied().unwrap_or(0) == 0)
    }

    pub fn union(&self, other: &Self) -> Self {
        let n = self.words.len().max(other.words.len());
        let mut s = Self {
            words: (0..n)
                .map(|k| self.word(k) | other.word(k))
                .collect(),
        };
        s.trim();
        s
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let n = self.words.len().min(other.words.len());
        let mut s = Self {
            words: (0..n).map(|k| self.word(k) & other.word(k)).collect(),
        };
        s.trim();
        s
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut s = Self {
            words: (0..self.words.len())
                .map(|k| self.word(k) & !other.word(k))
                .collect(),
        };
        s.trim();
        s
    }

    fn word(&self, k: usize) -> u64 {
        self.words.get(k).copied().unwrap_or(0)
    }

    /// Members as 1-based labels, the convention used in all user-facing output.
    pub fn labels(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Debug for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Formats with 1-based labels, e.g. `{1,2}`.
impl fmt::Display for ActiveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for ActiveSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::from_states(iter)
    }
}

//! Permutations of `{1..n}` and their loop (orbit) structure.
//!
//! Externally everything is 1-based: `"2,1,3"` is the transposition swapping
//! 1 and 2. Internally images are stored 0-based.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, WitnessError};
use crate::linalg::{ComplexMatrix, ONE};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// From 1-based images: `images[i-1] = pi(i)`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        let n = images.len();
        if n == 0 {
            return Err(WitnessError::InvalidPermutation("empty".into()));
        }
        let mut seen = vec![false; n];
        let mut zero_based = Vec::with_capacity(n);
        for &img in images {
            if img == 0 || img > n {
                return Err(WitnessError::InvalidPermutation(format!(
                    "image {img} outside 1..={n}"
                )));
            }
            if std::mem::replace(&mut seen[img - 1], true) {
                return Err(WitnessError::InvalidPermutation(format!(
                    "image {img} repeated"
                )));
            }
            zero_based.push(img - 1);
        }
        Ok(Self { images: zero_based })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    /// `i -> i+1 mod n` (1-based: `2,3,...,n,1`).
    pub fn shift(n: usize) -> Self {
        Self {
            images: (0..n).map(|i| (i + 1) % n).collect(),
        }
    }

    /// Every permutation of `{1..n}` in lexicographic order of the image list.
    pub fn all(n: usize) -> Vec<Self> {
        let mut cur: Vec<usize> = (0..n).collect();
        let mut out = vec![Self {
            images: cur.clone(),
        }];
        loop {
            let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
                return out;
            };
            let j = (i..n)
                .rev()
                .find(|&j| cur[j] > cur[i - 1])
                .expect("pivot exists");
            cur.swap(i - 1, j);
            cur[i..].reverse();
            out.push(Self {
                images: cur.clone(),
            });
        }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// 0-based image.
    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i + 1).collect()
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.n(), other.n());
        Self {
            images: other.images.iter().map(|&i| self.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.n()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Self { images: inv }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn is_involution(&self) -> bool {
        self.compose(self).is_identity()
    }

    pub fn loops(&self) -> LoopDecomposition {
        loop_decomposition(self)
    }

    /// `l(pi)`: the largest loop size.
    pub fn length(&self) -> usize {
        self.loops().length
    }

    pub fn is_cyclic(&self) -> bool {
        self.loops().cyclic
    }

    /// Permutation matrix `P` with `P|i> = |pi(i)>`.
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.n();
        let mut p = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            p[(self.images[i], i)] = ONE;
        }
        p
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation[{self}]")
    }
}

impl FromStr for Permutation {
    type Err = WitnessError;

    fn from_str(s: &str) -> Result<Self> {
        let images = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| WitnessError::InvalidPermutation(format!("cannot parse {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(&images)
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Self::from_one_based(&images).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoopDecomposition {
    /// Orbits as sorted 1-based index sets, ordered by smallest element.
    pub loops: Vec<Vec<usize>>,
    pub length: usize,
    pub cyclic: bool,
}

pub fn loop_decomposition(p: &Permutation) -> LoopDecomposition {
    let n = p.n();
    let mut visited = vec![false; n];
    let mut loops = Vec::new();
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            orbit.push(i + 1);
            i = p.apply(i);
        }
        orbit.sort_unstable();
        loops.push(orbit);
    }
    let length = loops.iter().map(Vec::len).max().unwrap_or(0);
    LoopDecomposition {
        cyclic: length == n,
        length,
        loops,
    }
}

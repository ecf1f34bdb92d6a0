//! Alphabets and words.
//!
//! A word is a plain `[usize]` slice, first letter most significant in the
//! base-κ code. Positions are 0-based.

use crate::error::{Error, Result};

pub type Word = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    kappa: usize,
}

impl Alphabet {
    pub fn new(kappa: usize) -> Result<Self> {
        if kappa < 2 {
            return Err(Error::Alphabet(kappa));
        }
        Ok(Alphabet { kappa })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn check(&self, w: &[usize]) -> Result<()> {
        match w.iter().find(|&&a| a >= self.kappa) {
            Some(&letter) => Err(Error::Letter { letter, kappa: self.kappa }),
            None => Ok(()),
        }
    }

    pub fn count(&self, len: usize) -> usize {
        self.kappa.pow(len as u32)
    }

    pub fn words(&self, len: usize) -> Words {
        Words::new(self.kappa, len)
    }
}

pub fn encode(kappa: usize, w: &[usize]) -> usize {
    w.iter().fold(0, |acc, &a| acc * kappa + a)
}

pub fn decode(kappa: usize, len: usize, mut code: usize) -> Word {
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = code % kappa;
        code /= kappa;
    }
    w
}

/// All words of a given length in lexicographic order.
#[derive(Debug, Clone)]
pub struct Words {
    kappa: usize,
    next: Option<Word>,
}

impl Words {
    pub fn new(kappa: usize, len: usize) -> Self {
        Words { kappa, next: Some(vec![0; len]) }
    }
}

impl Iterator for Words {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut i = succ.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            succ[i] += 1;
            if succ[i] < self.kappa {
                self.next = Some(succ);
                break;
            }
            succ[i] = 0;
        }
        Some(cur)
    }
}

/// Cyclic subword of length `len` starting at `start`.
pub fn cyclic_window(x: &[usize], start: usize, len: usize) -> Word {
    let n = x.len();
    (0..len).map(|k| x[(start + k) % n]).collect()
}

pub fn rotate(x: &[usize], k: usize) -> Word {
    cyclic_window(x, k % x.len().max(1), x.len())
}

pub fn remove_at(x: &[usize], pos: usize) -> Word {
    let mut w = x.to_vec();
    w.remove(pos);
    w
}

pub fn replace_at(x: &[usize], pos: usize, letter: usize) -> Word {
    let mut w = x.to_vec();
    w[pos] = letter;
    w
}

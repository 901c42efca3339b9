use std::fmt;
use std::str::FromStr;

use super::SpinOpsError;

/// Single-site level. Index order is `|1⟩ = 0`, `|0⟩ = 1`, `|1̄⟩ = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Up,
    Zero,
    Down,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Up, Level::Zero, Level::Down];

    pub fn index(self) -> usize {
        match self {
            Level::Up => 0,
            Level::Zero => 1,
            Level::Down => 2,
        }
    }

    pub fn from_index(index: usize) -> Option<Level> {
        Level::ALL.get(index).copied()
    }

    /// Eigenvalue of `Sz`.
    pub fn sz(self) -> f64 {
        match self {
            Level::Up => 1.0,
            Level::Zero => 0.0,
            Level::Down => -1.0,
        }
    }

    /// ASCII symbol used in state labels: `1`, `0` or `m` (for `1̄`).
    pub fn symbol(self) -> char {
        match self {
            Level::Up => '1',
            Level::Zero => '0',
            Level::Down => 'm',
        }
    }

    pub fn from_symbol(c: char) -> Option<Level> {
        match c {
            '1' => Some(Level::Up),
            '0' => Some(Level::Zero),
            'm' | 'M' | 'd' | '-' => Some(Level::Down),
            _ => None,
        }
    }
}

/// `3^n`, or `None` on overflow.
pub fn power_of_three(n: usize) -> Option<usize> {
    3usize.checked_pow(u32::try_from(n).ok()?)
}

/// Computational basis state of an `n`-site chain. Site 1 is the most
/// significant base-3 digit of the basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductState {
    levels: Vec<Level>,
}

impl ProductState {
    pub fn new(levels: Vec<Level>) -> Self {
        Self { levels }
    }

    /// All sites in `|0⟩`.
    pub fn vacuum(n: usize) -> Self {
        Self::new(vec![Level::Zero; n])
    }

    /// Vacuum with `level` placed on `site` (1-based).
    pub fn single_excitation(n: usize, site: usize, level: Level) -> Result<Self, SpinOpsError> {
        if site == 0 || site > n {
            return Err(SpinOpsError::SiteOutOfRange { site, n });
        }
        let mut state = Self::vacuum(n);
        state.levels[site - 1] = level;
        Ok(state)
    }

    pub fn n_sites(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Level on `site` (1-based).
    pub fn level(&self, site: usize) -> Level {
        self.levels[site - 1]
    }

    pub fn index(&self) -> usize {
        self.levels.iter().fold(0, |acc, l| acc * 3 + l.index())
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let mut levels = vec![Level::Zero; n];
        let mut rest = index;
        for slot in levels.iter_mut().rev() {
            *slot = Level::from_index(rest % 3).expect("digit below 3");
            rest /= 3;
        }
        Self { levels }
    }

    /// The state with site order reversed.
    pub fn mirrored(&self) -> Self {
        Self::new(self.levels.iter().rev().copied().collect())
    }
}

impl fmt::Display for ProductState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for level in &self.levels {
            write!(f, "{}", level.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for ProductState {
    type Err = SpinOpsError;

    /// Parses labels such as `100`, `0m1` or `01̄0` (combining macron).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let raw = s
            .trim()
            .trim_start_matches('|')
            .trim_end_matches('⟩')
            .trim_end_matches('>');
        let mut levels = Vec::with_capacity(raw.len());
        let mut chars = raw.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '1' && chars.peek() == Some(&'\u{0304}') {
                chars.next();
                levels.push(Level::Down);
                continue;
            }
            match Level::from_symbol(c) {
                Some(level) => levels.push(level),
                None => return Err(SpinOpsError::InvalidState(s.to_string())),
            }
        }
        if levels.is_empty() {
            return Err(SpinOpsError::InvalidState(s.to_string()));
        }
        Ok(Self { levels })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_endian_index() {
        let s: ProductState = "100".parse().unwrap();
        assert_eq!(s.index(), 3 + 1);
        let s: ProductState = "001".parse().unwrap();
        assert_eq!(s.index(), 9 + 3);
        assert_eq!(ProductState::vacuum(3).index(), 13);
    }

    #[test]
    fn index_round_trip() {
        for n in 1..5 {
            for idx in 0..power_of_three(n).unwrap() {
                let s = ProductState::from_index(idx, n);
                assert_eq!(s.index(), idx);
                assert_eq!(s.to_string().parse::<ProductState>().unwrap(), s);
            }
        }
    }

    #[test]
    fn parses_macron_and_rejects_garbage() {
        let s: ProductState = "|01\u{0304}⟩".parse().unwrap();
        assert_eq!(s.levels(), &[Level::Zero, Level::Down]);
        assert!("01x".parse::<ProductState>().is_err());
        assert!("".parse::<ProductState>().is_err());
    }

    #[test]
    fn single_excitation_bounds() {
        assert!(ProductState::single_excitation(3, 0, Level::Up).is_err());
        assert!(ProductState::single_excitation(3, 4, Level::Up).is_err());
        let s = ProductState::single_excitation(3, 3, Level::Down).unwrap();
        assert_eq!(s.to_string(), "00m");
        assert_eq!(s.mirrored().to_string(), "m00");
    }
}

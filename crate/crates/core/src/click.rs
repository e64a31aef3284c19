use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn is_positive(self) -> bool {
        matches!(self, Polarity::Positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Click {
    pub x: u32,
    pub y: u32,
    pub polarity: Polarity,
    pub ordinal: u32,
}

/// Clicks in placement order. Ordinals are assigned on push and are always
/// `0..len`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ClickSet {
    clicks: Vec<Click>,
}

impl ClickSet {
    pub fn new() -> Self {
        ClickSet::default()
    }

    pub fn push(&mut self, x: u32, y: u32, polarity: Polarity) -> Click {
        let click = Click {
            x,
            y,
            polarity,
            ordinal: self.clicks.len() as u32,
        };
        self.clicks.push(click);
        click
    }

    /// Removes the most recent click.
    pub fn undo(&mut self) -> Option<Click> {
        self.clicks.pop()
    }

    pub fn clear(&mut self) {
        self.clicks.clear();
    }

    pub fn len(&self) -> usize {
        self.clicks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicks.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Click> {
        self.clicks.iter()
    }

    pub fn as_slice(&self) -> &[Click] {
        &self.clicks
    }

    pub fn last(&self) -> Option<&Click> {
        self.clicks.last()
    }

    pub fn has_positive(&self) -> bool {
        self.clicks.iter().any(|c| c.polarity.is_positive())
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        for c in &self.clicks {
            if c.x as usize >= width || c.y as usize >= height {
                return Err(Error::ClickOutOfBounds {
                    x: c.x,
                    y: c.y,
                    width,
                    height,
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<(u32, u32, Polarity)> for ClickSet {
    fn from_iter<I: IntoIterator<Item = (u32, u32, Polarity)>>(iter: I) -> Self {
        let mut set = ClickSet::new();
        for (x, y, p) in iter {
            set.push(x, y, p);
        }
        set
    }
}

impl<'a> IntoIterator for &'a ClickSet {
    type Item = &'a Click;
    type IntoIter = std::slice::Iter<'a, Click>;

    fn into_iter(self) -> Self::IntoIter {
        self.clicks.iter()
    }
}

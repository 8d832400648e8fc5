//! `start:stop:count` parameter grids.

use std::str::FromStr;

/// `count` uniformly spaced points from `start` to `stop`, both included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                if k + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / last
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:stop:count, got '{s}'"));
        }
        let start: f64 = parts[0]
            .trim()
            .parse()
            .map_err(|_| format!("bad start '{}'", parts[0]))?;
        let stop: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|_| format!("bad stop '{}'", parts[1]))?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| format!("bad count '{}'", parts[2]))?;
        if count == 0 {
            return Err("count must be at least 1".into());
        }
        if !start.is_finite() || !stop.is_finite() || (count > 1 && !(stop > start)) {
            return Err(format!("need finite start < stop, got '{s}'"));
        }
        Ok(Grid { start, stop, count })
    }
}

/// Uniform time grid `t_k = k·dt`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    len: usize,
}

impl TimeGrid {
    /// Grid covering `[0, horizon]` with step `dt`. The horizon is rounded to
    /// the nearest whole number of steps.
    pub fn new(horizon: f64, dt: f64) -> crate::Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(crate::Error::domain(format!(
                "dt must be positive, got {dt}"
            )));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(crate::Error::domain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let steps = (horizon / dt).round() as usize;
        Ok(TimeGrid {
            dt,
            len: steps.max(1) + 1,
        })
    }

    pub fn from_len(dt: f64, len: usize) -> Self {
        assert!(len >= 1 && dt > 0.0);
        TimeGrid { dt, len }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn span(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |k| self.at(k))
    }

    /// Index of the last grid point not after `t`.
    pub fn floor_index(&self, t: f64) -> usize {
        ((t / self.dt).floor().max(0.0) as usize).min(self.len - 1)
    }
}

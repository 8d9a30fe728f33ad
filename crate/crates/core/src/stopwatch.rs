//! Wall-clock source for timing training runs.

/// Monotonic seconds since some fixed origin.
pub trait Stopwatch {
    fn seconds(&self) -> f64;
}

/// A stopwatch that never advances; used when no clock is available.
#[derive(Debug, Clone, Copy, Default)]
pub struct Frozen;

impl Stopwatch for Frozen {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct Wall(std::time::Instant);

#[cfg(feature = "std")]
impl Wall {
    pub fn start() -> Self {
        Self(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Stopwatch for Wall {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(feature = "std")]
pub fn default_stopwatch() -> Wall {
    Wall::start()
}

#[cfg(not(feature = "std"))]
pub fn default_stopwatch() -> Frozen {
    Frozen
}

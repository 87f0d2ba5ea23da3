//! Simulation time. The engine runs on integer microseconds to keep event
//! ordering exact; reports convert to milliseconds at the edges.

pub type Micros = u64;

pub const fn from_ms(ms: u64) -> Micros {
    ms * 1_000
}

pub const fn from_secs(s: u64) -> Micros {
    s * 1_000_000
}

pub fn to_ms(us: Micros) -> f64 {
    us as f64 / 1e3
}

pub fn to_secs(us: Micros) -> f64 {
    us as f64 / 1e6
}

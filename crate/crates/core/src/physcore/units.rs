use crate::physcore::Constants;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    Si,
    Scaled,
}

/// Conversion between SI and a scaled system where one unit of length, time
/// and mass equal `length`, `time` and `mass` SI units respectively.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub mode: UnitMode,
    pub length: f64,
    pub time: f64,
    pub mass: f64,
}

impl UnitSystem {
    pub fn si() -> Self {
        UnitSystem {
            mode: UnitMode::Si,
            length: 1.0,
            time: 1.0,
            mass: 1.0,
        }
    }

    /// Units in which ħ = G = m = 1 for a particle of mass `m`.
    ///
    /// Length unit ħ²/(Gm³), time unit ħ³/(G²m⁵).
    pub fn gravitational(k: &Constants, m: f64) -> Self {
        UnitSystem {
            mode: UnitMode::Scaled,
            length: k.hbar * k.hbar / (k.g * m.powi(3)),
            time: k.hbar.powi(3) / (k.g * k.g * m.powi(5)),
            mass: m,
        }
    }

    pub fn length_to_scaled(&self, x: f64) -> f64 {
        x / self.length
    }
    pub fn length_to_si(&self, x: f64) -> f64 {
        x * self.length
    }
    pub fn time_to_scaled(&self, t: f64) -> f64 {
        t / self.time
    }
    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time
    }
    pub fn mass_to_scaled(&self, m: f64) -> f64 {
        m / self.mass
    }
    pub fn mass_to_si(&self, m: f64) -> f64 {
        m * self.mass
    }
    /// Energy unit m·L²/T².
    pub fn energy(&self) -> f64 {
        self.mass * self.length * self.length / (self.time * self.time)
    }
}

//! `start:stop[:step]` grid arguments with inclusive endpoints.

use std::str::FromStr;

/// Inclusive numeric range; step defaults per subcommand when omitted.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: Option<f64>,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() < 2 || parts.len() > 3 {
            return Err(format!("expected start:stop[:step], got {s:?}"));
        }
        let num = |p: &str| -> Result<f64, String> {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {p:?} in grid: {e}"))
        };
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        let step = if parts.len() == 3 {
            Some(num(parts[2])?)
        } else {
            None
        };
        if stop < start {
            return Err(format!("grid stop {stop} below start {start}"));
        }
        if let Some(st) = step {
            if st.is_nan() || st <= 0.0 {
                return Err(format!("grid step must be positive, got {st}"));
            }
        }
        Ok(GridSpec { start, stop, step })
    }
}

impl GridSpec {
    pub fn floats(&self, default_step: f64) -> Result<Vec<f64>, dqi_core::DqiError> {
        dqi_core::experiments::float_grid(self.start, self.stop, self.step.unwrap_or(default_step))
    }

    pub fn ints(&self) -> Result<Vec<usize>, dqi_core::DqiError> {
        let bad = |what: &str, v: f64| {
            dqi_core::DqiError::ParamDomain(format!("{what} {v} is not a non-negative integer"))
        };
        let to_int = |v: f64, what: &str| -> Result<usize, dqi_core::DqiError> {
            if v < 0.0 || v.fract() != 0.0 {
                Err(bad(what, v))
            } else {
                Ok(v as usize)
            }
        };
        let step = self.step.unwrap_or(1.0);
        dqi_core::experiments::int_grid(
            to_int(self.start, "grid start")?,
            to_int(self.stop, "grid stop")?,
            to_int(step, "grid step")?,
        )
    }
}
